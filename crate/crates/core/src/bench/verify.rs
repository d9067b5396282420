use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::{place, BaselineConfig, Scheme};
use crate::evaluator::Evaluator;
use crate::ilp::IlpModel;
use crate::instance::{generate, GeneratorParams, ScenarioInstance};
use crate::solver::{
    random_assignment, solve_enumerate, solve_exact, solve_heuristic_with, Budget, HeuristicParams, TOLERANCE,
};

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: &[String], summary: String) -> Self {
        let detail = match failures.first() {
            None => summary,
            Some(f) => format!("{} failure(s), first: {f}", failures.len()),
        };
        Self { name: name.into(), passed: failures.is_empty(), detail }
    }
}

/// Small instance that both exact solvers handle: 2 or 3 requests.
pub fn oracle_instance(seed: u64) -> ScenarioInstance {
    generate(seed, &GeneratorParams::desk(2 + seed as usize % 2)).expect("desk parameters are valid")
}

fn oracle_equivalence(n_seeds: u64) -> Check {
    let mut failures = Vec::new();
    for seed in 0..n_seeds {
        let inst = oracle_instance(seed);
        let mu = inst.constants.mu;
        let e = match solve_enumerate(&inst, mu) {
            Ok(e) => e,
            Err(err) => {
                failures.push(format!("seed {seed}: {err}"));
                continue;
            }
        };
        let model = match IlpModel::build(&inst, mu) {
            Ok(m) => m,
            Err(err) => {
                failures.push(format!("seed {seed}: {err}"));
                continue;
            }
        };
        let x = solve_exact(&model, &Budget::default());
        let same = match (e.objective, x.objective) {
            (Some(a), Some(b)) => (a - b).abs() <= TOLERANCE,
            (None, None) => true,
            _ => false,
        };
        if e.status != x.status || !same {
            failures.push(format!(
                "seed {seed}: enumerate {:?} {:?}, exact {:?} {:?}",
                e.status, e.objective, x.status, x.objective
            ));
        }
        let layout = &model.layout;
        for a in [&e.assignment, &x.assignment].into_iter().flatten() {
            let v = a.audit(&inst, layout);
            if !v.is_empty() {
                failures.push(format!("seed {seed}: audit {v:?}"));
            }
        }
    }
    Check::new("oracle-equivalence", &failures, format!("{n_seeds} instances agree"))
}

fn linearization(n_instances: u64, per_instance: usize) -> Check {
    let mut failures = Vec::new();
    let mut checked = 0;
    for seed in 0..n_instances {
        let inst = oracle_instance(seed);
        let mu = 0.1 + 0.8 * (seed % 5) as f64 / 4.0;
        let model = match IlpModel::build(&inst, mu) {
            Ok(m) => m,
            Err(err) => {
                failures.push(format!("seed {seed}: {err}"));
                continue;
            }
        };
        let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..per_instance {
            let Some(a) = random_assignment(&inst, &model.layout, &mut rng, 100) else {
                continue;
            };
            checked += 1;
            let point = model.encode(&a);
            if let Some(row) = model.violated_rows(&point, 1e-9).first() {
                failures.push(format!("seed {seed}: encoded point violates {:?}", row.family));
            }
            let want = ev.objective_unchecked(&a).expect("one-hot");
            let got = model.objective_at(&point);
            if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                failures.push(format!("seed {seed}: model {got} vs evaluator {want}"));
            }
            for r in 0..inst.n_requests() {
                let j = a.matching_ec(r).expect("placed");
                let g = a.rate_index(r).expect("rate");
                if ev.matching_delay_ms(r, j, &a) != ev.matching_delay_linear_ms(r, &a) {
                    failures.push(format!("seed {seed} request {r}: matching delay forms differ"));
                }
                if ev.wireless_delay_ms(r, g, &a) != ev.wireless_delay_linear_ms(r, &a) {
                    failures.push(format!("seed {seed} request {r}: wireless delay forms differ"));
                }
            }
        }
    }
    Check::new("linearization", &failures, format!("{checked} assignments over {n_instances} instances"))
}

/// Heuristic never loses to a baseline, and every emitted assignment is clean.
fn dominance(n_seeds: u64) -> Check {
    let mut failures = Vec::new();
    let mut compared = 0;
    for seed in 0..n_seeds {
        let p = GeneratorParams { n_ecs: 4, n_requests: 10, ..GeneratorParams::default() };
        let inst = match generate(seed, &p) {
            Ok(i) => i,
            Err(err) => {
                failures.push(format!("seed {seed}: {err}"));
                continue;
            }
        };
        let mu = inst.constants.mu;
        let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
        let layout = ev.layout();
        let mut outs = Vec::new();
        for scheme in Scheme::ALL {
            if let Ok(a) = place(&inst, mu, &BaselineConfig { seed, ..BaselineConfig::new(scheme) }) {
                outs.push((scheme.name(), a));
            }
        }
        let starts: Vec<_> = outs.iter().map(|(_, a)| a.clone()).collect();
        let params = HeuristicParams { seed, restarts: 2, ..HeuristicParams::default() };
        let h = solve_heuristic_with(&inst, mu, &params, &starts);
        let Some(best) = h.objective else {
            failures.push(format!("seed {seed}: heuristic found nothing"));
            continue;
        };
        outs.extend(h.assignment.map(|a| ("heuristic", a)));
        for (name, a) in &outs {
            let v = a.audit(&inst, layout);
            if !v.is_empty() {
                failures.push(format!("seed {seed} {name}: audit {v:?}"));
            }
            let o = ev.objective_unchecked(a).expect("one-hot");
            if best > o + TOLERANCE {
                failures.push(format!("seed {seed}: heuristic {best} worse than {name} {o}"));
            }
            compared += 1;
        }
    }
    Check::new("dominance-and-audit", &failures, format!("{compared} assignments over {n_seeds} instances"))
}

/// Run every suite with `n_seeds` seeds each.
pub fn verify(n_seeds: u64) -> Vec<Check> {
    vec![oracle_equivalence(n_seeds), linearization(n_seeds.max(1), 100), dominance(n_seeds.min(10))]
}
