use metaedge::baselines::{place, BaselineConfig, Scheme};
use metaedge::evaluator::Layout;
use metaedge::ilp::{export_lp, parse_lp, IlpModel};
use metaedge::instance::{generate, load_instance, save_instance, GeneratorParams};
use metaedge::solver::{solve_enumerate, solve_exact, solve_heuristic, Budget, HeuristicParams, SolveStatus};
use metaedge::{Evaluator, Evaluator32};
use proptest::prelude::*;

#[test]
fn document_round_trip_preserves_every_result() {
    let inst = generate(11, &GeneratorParams::desk(3)).unwrap();
    let back = load_instance(&save_instance(&inst)).unwrap();
    assert_eq!(back, inst);
    let a = solve_enumerate(&inst, 0.4).unwrap();
    let b = solve_enumerate(&back, 0.4).unwrap();
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.assignment, b.assignment);
}

#[test]
fn single_precision_tracks_double() {
    let inst = generate(2, &GeneratorParams { n_ecs: 3, n_requests: 8, ..Default::default() }).unwrap();
    let a = place(&inst, 0.5, &BaselineConfig::new(Scheme::Util)).unwrap();
    let m64 = Evaluator::new(&inst).with_mu(0.5).evaluate(&a).unwrap();
    let m32 = Evaluator32::new(&inst).with_mu(0.5).evaluate(&a).unwrap();
    for (x, y) in [(m64.latency_ms, m32.latency_ms), (m64.power_w, m32.power_w), (m64.quality, m32.quality)] {
        assert!((x - y as f64).abs() <= 1e-4 * x.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn exported_lp_parses_back_to_the_model() {
    let inst = generate(4, &GeneratorParams::desk(2)).unwrap();
    let model = IlpModel::build(&inst, 0.6).unwrap();
    let parsed = parse_lp(&export_lp(&model)).unwrap();
    assert_eq!(parsed.rows.len(), model.rows.len());
    let r = solve_exact(&model, &Budget::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    let point = model.encode(r.assignment.as_ref().unwrap());
    assert!(model.violated_rows(&point, 1e-9).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heuristic_output_is_feasible_and_beats_baselines(seed in 0u64..1000, mu in 0.0f64..=1.0) {
        let inst = generate(seed, &GeneratorParams { n_ecs: 3, n_requests: 6, ..Default::default() }).unwrap();
        let h = solve_heuristic(&inst, mu, &HeuristicParams { restarts: 1, seed, ..Default::default() });
        let a = h.assignment.unwrap();
        let layout = Layout::new(&inst);
        prop_assert!(a.audit(&inst, &layout).is_empty());
        let ev = Evaluator::new(&inst).with_mu(mu);
        let total: f64 = (0..inst.n_requests()).map(|r| ev.request_objective(r, &a).unwrap()).sum();
        prop_assert!((total - h.objective.unwrap()).abs() <= 1e-9);
        for scheme in Scheme::ALL {
            if let Ok(b) = place(&inst, mu, &BaselineConfig { seed, ..BaselineConfig::new(scheme) }) {
                prop_assert!(h.objective.unwrap() <= ev.objective_unchecked(&b).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn exact_is_a_lower_bound_for_every_scheme(seed in 0u64..1000, mu in 0.0f64..=1.0) {
        let inst = generate(seed, &GeneratorParams::desk(2)).unwrap();
        let x = solve_exact(&IlpModel::build(&inst, mu).unwrap(), &Budget::default());
        let ev = Evaluator::new(&inst).with_mu(mu);
        for scheme in Scheme::ALL {
            if let Ok(b) = place(&inst, mu, &BaselineConfig { seed, ..BaselineConfig::new(scheme) }) {
                prop_assert!(x.objective.unwrap() <= ev.objective_unchecked(&b).unwrap() + 1e-9);
            }
        }
        let h = solve_heuristic(&inst, mu, &HeuristicParams::default());
        prop_assert!(x.objective.unwrap() <= h.objective.unwrap() + 1e-9);
    }
}
