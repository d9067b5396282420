use super::exact::Search;
use super::*;
use crate::baselines::{place, BaselineConfig, Scheme};
use crate::ilp::IlpModel;
use crate::instance::{generate, GeneratorParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk(seed: u64, n: usize) -> ScenarioInstance {
    generate(seed, &GeneratorParams::desk(n)).unwrap()
}

fn forced() -> ScenarioInstance {
    let p = GeneratorParams {
        n_ecs: 1,
        n_requests: 1,
        routers_per_ec: 2,
        n_models: 1,
        models_per_request: [1, 1],
        aros_per_model: [1, 1],
        data_rates_mbps: vec![5],
        ssim: vec![0.98],
        ..GeneratorParams::desk(1)
    };
    generate(3, &p).unwrap()
}

fn exact(inst: &ScenarioInstance, mu: f64) -> SolveReport {
    solve_exact(&IlpModel::build(inst, mu).unwrap(), &Budget::default())
}

fn audited(inst: &ScenarioInstance, r: &SolveReport) {
    let a = r.assignment.as_ref().unwrap();
    let layout = crate::evaluator::Layout::new(inst);
    assert!(a.audit(inst, &layout).is_empty(), "{:?}", a.audit(inst, &layout));
}

#[test]
fn forced_point() {
    let inst = forced();
    let layout = crate::evaluator::Layout::new(&inst);
    assert_eq!(primary_count(&layout), 5);
    let e = solve_enumerate(&inst, 0.5).unwrap();
    assert_eq!(e.status, SolveStatus::Optimal);
    let mut a = crate::evaluator::Assignment::empty(&layout);
    a.set_compute(0, 0);
    a.set_matching(0, 0);
    a.set_rate(0, 0);
    a.aro_cached[0][0] = true;
    a.model_cached[layout.used_models[0]][0] = true;
    a.derive_auxiliaries(&layout);
    let ev = Evaluator::<f64>::new(&inst).with_mu(0.5);
    assert_eq!(e.objective, Some(ev.objective_unchecked(&a).unwrap()));
    assert_eq!(e.assignment.as_ref(), Some(&a));
    assert_eq!(e.nodes, 1, "p off leaves no cached target");
    let x = exact(&inst, 0.5);
    assert_eq!(x.status, SolveStatus::Optimal);
    assert!((x.objective.unwrap() - e.objective.unwrap()).abs() <= TOLERANCE);
    assert_eq!(x.bound, x.objective);
}

#[test]
fn exact_matches_enumeration_on_desk_instances() {
    for seed in 0..6 {
        for n in [2, 3] {
            let inst = desk(seed, n);
            let e = solve_enumerate(&inst, inst.constants.mu).unwrap();
            let x = exact(&inst, inst.constants.mu);
            assert_eq!(e.status, x.status, "seed {seed} n {n}");
            let (eo, xo) = (e.objective.unwrap(), x.objective.unwrap());
            assert!((eo - xo).abs() <= TOLERANCE, "seed {seed} n {n}: {eo} vs {xo}");
            audited(&inst, &e);
            audited(&inst, &x);
        }
    }
}

#[test]
fn power_only_weight_picks_lowest_rates() {
    for seed in 0..3 {
        let inst = desk(seed, 2);
        let e = solve_enumerate(&inst, 0.0).unwrap();
        let x = exact(&inst, 0.0);
        for r in [e, x] {
            let a = r.assignment.unwrap();
            assert!((0..2).all(|q| a.rate_index(q) == Some(0)));
        }
    }
}

#[test]
fn tiny_caches_are_infeasible() {
    let mut inst = desk(1, 2);
    for ec in &mut inst.edge_clouds {
        ec.cache_bits = 1.0;
    }
    let e = solve_enumerate(&inst, 0.5).unwrap();
    assert_eq!(e.status, SolveStatus::Infeasible);
    assert!(e.objective.is_none() && e.assignment.is_none());
    let x = exact(&inst, 0.5);
    assert_eq!(x.status, SolveStatus::Infeasible);
    assert!(x.bound.is_none());
    let h = solve_heuristic(&inst, 0.5, &HeuristicParams::default());
    assert_eq!(h.status, SolveStatus::Infeasible);
}

#[test]
fn enumeration_guard() {
    let inst = generate(1, &GeneratorParams { n_ecs: 3, n_requests: 4, ..GeneratorParams::desk(4) }).unwrap();
    assert!(matches!(solve_enumerate(&inst, 0.5), Err(SolveError::TooLarge { limit: 30, .. })));
}

#[test]
fn budget_exhaustion_keeps_a_valid_bound() {
    let inst = desk(4, 3);
    let model = IlpModel::build(&inst, 0.5).unwrap();
    let full = solve_exact(&model, &Budget::default());
    let cut = solve_exact(&model, &Budget { max_nodes: Some(40), ..Budget::default() });
    assert_eq!(cut.status, SolveStatus::BudgetExhausted);
    let bound = cut.bound.unwrap();
    assert!(bound <= full.objective.unwrap() + TOLERANCE);
    if let Some(o) = cut.objective {
        assert!(bound <= o + TOLERANCE && o >= full.objective.unwrap() - TOLERANCE);
    }
    let timed = solve_exact(&model, &Budget { time_limit_s: Some(0.0), ..Budget::default() });
    assert_eq!(timed.status, SolveStatus::BudgetExhausted);
}

#[test]
fn parallel_and_warm_searches_agree() {
    for seed in [2, 9] {
        let inst = desk(seed, 3);
        let model = IlpModel::build(&inst, 0.8).unwrap();
        let one = solve_exact(&model, &Budget::default());
        let many = solve_exact(&model, &Budget { threads: 4, ..Budget::default() });
        assert_eq!(many.status, SolveStatus::Optimal);
        assert!((one.objective.unwrap() - many.objective.unwrap()).abs() <= TOLERANCE);
        let start = place(&inst, 0.8, &BaselineConfig::new(Scheme::Cfs)).unwrap();
        let warm = solve_exact_warm(&model, &Budget::default(), &start);
        assert!((one.objective.unwrap() - warm.objective.unwrap()).abs() <= TOLERANCE);
        assert!(warm.nodes <= one.nodes);
    }
}

#[test]
fn heuristic_is_seeded_by_baselines_and_deterministic() {
    let inst = generate(5, &GeneratorParams { n_ecs: 4, n_requests: 10, ..Default::default() }).unwrap();
    let mu = 0.5;
    let params = HeuristicParams { restarts: 3, ..Default::default() };
    let h = solve_heuristic(&inst, mu, &params);
    assert_eq!(h.status, SolveStatus::Feasible);
    audited(&inst, &h);
    let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
    for scheme in Scheme::ALL {
        if let Ok(a) = place(&inst, mu, &BaselineConfig { seed: params.seed, ..BaselineConfig::new(scheme) }) {
            assert!(h.objective.unwrap() <= ev.objective_unchecked(&a).unwrap());
        }
    }
    let again = solve_heuristic(&inst, mu, &params);
    assert_eq!(h.assignment, again.assignment);
    assert_eq!(h.objective, again.objective);
    assert_eq!(h.objective, h.metrics.map(|m| m.objective));
}

#[test]
fn heuristic_gap_on_desk_instances() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let inst = desk(seed, 2 + seed as usize % 2);
        let e = solve_enumerate(&inst, 0.5).unwrap().objective.unwrap();
        let h = solve_heuristic(&inst, 0.5, &HeuristicParams::default()).objective.unwrap();
        assert!(h >= e - TOLERANCE);
        worst = worst.max((h - e) / e.abs());
    }
    assert!(worst <= 0.05, "worst gap {worst}");
}

#[test]
fn report_serializes() {
    let inst = desk(0, 2);
    let r = exact(&inst, 0.5).with_metrics(&inst, 0.5);
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"status\":\"optimal\""));
    let back: SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    let cut = solve_exact(&IlpModel::build(&inst, 0.5).unwrap(), &Budget { max_nodes: Some(1), ..Budget::default() });
    assert!(serde_json::to_string(&cut).unwrap().contains("budget-exhausted"));
}

/// Best feasible completion of `state` from step `depth` on.
fn best_completion(search: &Search, model: &IlpModel, state: &[i8], depth: usize) -> f64 {
    if depth == search.steps.len() {
        let mut point: Vec<bool> = state.iter().map(|&v| v == 1).collect();
        model.complete(&mut point);
        return if model.violated_rows(&point, 0.0).is_empty() { model.objective_at(&point) } else { f64::INFINITY };
    }
    (0..search.steps[depth].choices())
        .map(|c| {
            let mut s = state.to_vec();
            search.apply(&mut s, depth, c);
            best_completion(search, model, &s, depth + 1)
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn remainder_bound_is_admissible(seed in 0u64..500, draw in 0u64..1000, mu in 0.0f64..=1.0) {
        let inst = desk(seed, 2);
        let model = IlpModel::build(&inst, mu).unwrap();
        let search = Search::new(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(draw);
        let a = random_assignment(&inst, &model.layout, &mut rng, 100).unwrap();
        let point = model.encode(&a);
        let depth = rng.random_range(search.steps.len() / 2..=search.steps.len());
        let mut state = search.root();
        for d in 0..depth {
            let choice = match &search.steps[d] {
                super::exact::Step::Group(m) => m.iter().position(|&v| point[v]).unwrap(),
                super::exact::Step::Bit(v) => usize::from(point[*v]),
            };
            search.apply(&mut state, d, choice);
        }
        let truth = best_completion(&search, &model, &state, depth);
        let mut scratch = Vec::new();
        match search.assess(&mut state.clone(), &mut scratch) {
            Some(bound) => prop_assert!(bound <= truth + 1e-12, "{} > {}", bound, truth),
            None => prop_assert!(truth.is_infinite()),
        }
    }
}
