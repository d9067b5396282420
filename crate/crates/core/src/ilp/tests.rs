use super::*;
use crate::instance::{generate, GeneratorParams};
use crate::solver::random_assignment;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single() -> ScenarioInstance {
    let p = GeneratorParams {
        n_ecs: 1,
        n_requests: 1,
        routers_per_ec: 2,
        n_models: 1,
        models_per_request: [1, 1],
        aros_per_model: [1, 1],
        ..GeneratorParams::desk(1)
    };
    generate(2, &p).unwrap()
}

fn desk(seed: u64, n: usize) -> ScenarioInstance {
    generate(seed, &GeneratorParams::desk(n)).unwrap()
}

#[test]
fn census_of_the_smallest_model() {
    let model = IlpModel::build(&single(), 0.5).unwrap();
    let c = model.census();
    assert_eq!(c.variables, 15, "{:?}", c.variables_by_kind);
    assert_eq!(c.primaries, 6);
    let kinds: Vec<(&str, usize)> = c.variables_by_kind.iter().map(|(k, n)| (k.as_str(), *n)).collect();
    for (k, n) in [
        ("x", 1),
        ("y", 1),
        ("p", 1),
        ("h", 1),
        ("e", 2),
        ("z", 1),
        ("q", 1),
        ("alpha", 1),
        ("beta", 1),
        ("lambda", 1),
        ("phi", 2),
        ("psi", 1),
        ("xi", 1),
    ] {
        assert!(kinds.contains(&(k, n)), "{k}: {kinds:?}");
    }
}

#[test]
fn every_family_is_present() {
    let model = IlpModel::build(&desk(4, 3), 0.5).unwrap();
    for (fam, n) in model.census().rows_by_family {
        assert!(n > 0, "no rows for {fam}");
    }
}

#[test]
fn every_variable_is_used() {
    let model = IlpModel::build(&desk(4, 3), 0.5).unwrap();
    let mut used = vec![false; model.n_vars()];
    for row in &model.rows {
        for &(v, _) in &row.terms {
            used[v] = true;
        }
    }
    for (v, c) in model.objective.iter().enumerate() {
        used[v] |= *c != 0.0;
    }
    let unused: Vec<&str> = model.vars.iter().zip(&used).filter(|(_, &u)| !u).map(|(v, _)| v.name.as_str()).collect();
    assert!(unused.is_empty(), "{unused:?}");
}

#[test]
fn big_u_row_transcription() {
    let mut inst = desk(4, 1);
    inst.requests[0].models.truncate(1);
    inst.requests[0].models[0].aros.truncate(1);
    let l = inst
        .aros
        .iter()
        .find(|a| a.model == inst.requests[0].models[0].model && a.id != inst.requests[0].models[0].aros[0])
        .unwrap()
        .id;
    inst.requests[0].models[0].aros.push(l);
    inst.requests[0].models[0].aros.sort();
    inst.recompute_normalizers(133.2);
    inst.validate().unwrap();
    let model = IlpModel::build(&inst, 0.5).unwrap();
    let row = model.rows.iter().find(|r| r.family == ConstraintFamily::HitBigU).unwrap();
    // sum(beta) + 0.5 <= 2 + 1e6 (1 - q)
    assert_eq!(row.cmp, Cmp::Le);
    assert_eq!(row.rhs, 2.0 + 1e6 - 0.5);
    let betas =
        row.terms.iter().filter(|(v, c)| matches!(model.vars[*v].key, VarKey::Beta { .. }) && *c == 1.0).count();
    assert_eq!(betas, 2);
    assert!(row.terms.iter().any(|(v, c)| matches!(model.vars[*v].key, VarKey::Q { .. }) && *c == 1e6));
}

#[test]
fn round_trip_and_inconsistent_points() {
    let inst = desk(7, 3);
    let model = IlpModel::build(&inst, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_assignment(&inst, &model.layout, &mut rng, 200).unwrap();
    let point = model.encode(&a);
    assert_eq!(model.decode(&point).unwrap(), a);
    assert_eq!(model.encode(&model.decode(&point).unwrap()), point);

    let lam = model.vars.iter().position(|v| matches!(v.key, VarKey::Lambda { .. })).unwrap();
    let mut bad = point.clone();
    bad[lam] = !bad[lam];
    assert!(matches!(model.decode(&bad), Err(IlpError::Inconsistent { .. })));
    assert!(matches!(model.decode(&point[1..]), Err(IlpError::Length { .. })));

    let mut zero = vec![false; model.n_vars()];
    model.complete(&mut zero);
    let empty = model.decode(&zero).unwrap();
    assert!(empty.model_cached.iter().flatten().all(|&p| !p));
    assert!(empty.aro_cached.iter().flatten().all(|&h| !h));
}

#[test]
fn lp_export_reparses() {
    let model = IlpModel::build(&desk(11, 2), 0.7).unwrap();
    let text = export_lp(&model);
    assert!(text.starts_with("\\"));
    assert!(text.contains("\nMinimize\n") && text.contains("\nSubject To\n") && text.contains("\nBinary\n"));
    assert!(text.ends_with("End\n"));
    let parsed = parse_lp(&text).unwrap();
    assert_eq!(parsed.rows.len(), model.rows.len());
    assert_eq!(parsed.binaries.len(), model.n_vars());
    assert_eq!(parsed.constant, model.constant);
    for (row, p) in model.rows.iter().zip(&parsed.rows) {
        assert_eq!(p.name, row.name);
        assert_eq!(p.cmp, Some(row.cmp));
        assert_eq!(p.rhs, row.rhs);
        let terms: Vec<(String, f64)> = row.terms.iter().map(|&(v, c)| (model.vars[v].name.clone(), c)).collect();
        assert_eq!(p.terms, terms);
    }
    let obj: Vec<(String, f64)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(v, &c)| (model.vars[v].name.clone(), c))
        .collect();
    assert_eq!(parsed.objective, obj);
    for name in model.vars.iter().map(|v| &v.name).chain(model.rows.iter().map(|r| &r.name)) {
        assert!(name.len() <= 255 && !name.contains(char::is_whitespace), "{name}");
    }
    assert!(text.lines().all(|l| l.len() <= 255));
}

#[test]
fn variable_map_names_are_unique() {
    let model = IlpModel::build(&desk(2, 3), 0.5).unwrap();
    let map = model.variable_map();
    let names: std::collections::BTreeSet<&str> = map.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names.len(), map.len());
    assert!(map.iter().any(|e| e.name.starts_with("p_s")));
    serde_json::to_string(&map).unwrap();
    let rows: std::collections::BTreeSet<&str> = model.rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(rows.len(), model.rows.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn objective_matches_evaluator(seed in 0u64..10_000, draw in 0u64..10_000, mu in 0.0f64..=1.0) {
        let inst = generate(seed, &GeneratorParams { n_ecs: 3, n_requests: 5, ..Default::default() }).unwrap();
        let model = IlpModel::build(&inst, mu).unwrap();
        let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
        let mut rng = ChaCha8Rng::seed_from_u64(draw);
        let a = random_assignment(&inst, &model.layout, &mut rng, 200).unwrap();
        let point = model.encode(&a);
        prop_assert!(model.violated_rows(&point, 1e-9).is_empty());
        let lin = model.objective_at(&point);
        let direct = ev.objective_unchecked(&a).unwrap();
        prop_assert!((lin - direct).abs() <= 1e-9 * direct.abs().max(1e-12), "{} vs {}", lin, direct);
    }

    #[test]
    fn rows_agree_with_audit(seed in 0u64..10_000, draw in 0u64..10_000, n in 1usize..4) {
        let inst = desk(seed, n);
        let model = IlpModel::build(&inst, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(draw);
        let mut point: Vec<bool> = (0..model.n_vars()).map(|_| rng.random_bool(0.5)).collect();
        if rng.random_bool(0.5) {
            model.complete(&mut point);
        }
        let mut full = point.clone();
        model.complete(&mut full);
        let a = decode_raw(&model, &point, model.decode(&full).unwrap());
        let audit = a.audit(&inst, &model.layout);
        prop_assert_eq!(model.violated_rows(&point, 1e-9).is_empty(), audit.is_empty());
    }
}

/// Overwrite the auxiliaries of `a` with the raw entries of `point`.
fn decode_raw(model: &IlpModel, point: &[bool], mut a: Assignment) -> Assignment {
    for (v, &val) in model.vars.iter().zip(point) {
        match v.key {
            VarKey::Z { r, j } => a.aux.hit[r][j] = val,
            VarKey::Q { r, j } => a.aux.miss[r][j] = val,
            VarKey::Alpha { r, m, j } => a.aux.alpha[r][m][j] = val,
            VarKey::Beta { r, t, j } => a.aux.beta[r][t][j] = val,
            VarKey::Lambda { r, t, j } => a.aux.lambda[r][t][j] = val,
            VarKey::Phi { r, w, j, g } => a.aux.phi[r][w][j][g] = val,
            VarKey::Psi { r, j } => a.aux.psi[r][j] = val,
            VarKey::Xi { r, i, j } => a.aux.xi[r][i][j] = val,
            _ => {}
        }
    }
    a
}
