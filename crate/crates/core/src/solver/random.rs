use rand::seq::SliceRandom;
use rand::Rng;

use crate::evaluator::{Assignment, Layout};
use crate::instance::ScenarioInstance;

/// Draw one random assignment that satisfies every primary constraint.
///
/// Placement respects VM slots, every request caches a random non-empty set
/// of unclaimed targets, and each needed model gets one or more random
/// copies. Returns `None` when `tries` draws all violate a capacity.
pub fn random_assignment<R: Rng + ?Sized>(
    inst: &ScenarioInstance,
    layout: &Layout,
    rng: &mut R,
    tries: usize,
) -> Option<Assignment> {
    let m = layout.n_ecs;
    'draw: for _ in 0..tries {
        let mut a = Assignment::empty(layout);
        let mut free: Vec<u32> = inst.edge_clouds.iter().map(|e| e.vm_slots).collect();
        let mut order: Vec<usize> = (0..layout.n_requests()).collect();
        order.shuffle(rng);
        for &r in &order {
            for compute in [true, false] {
                let open: Vec<usize> = (0..m).filter(|&j| free[j] > 0).collect();
                let Some(&j) = open.get(rng.random_range(0..open.len().max(1))) else {
                    continue 'draw;
                };
                free[j] -= 1;
                if compute {
                    a.set_compute(r, j);
                } else {
                    a.set_matching(r, j);
                }
            }
            a.set_rate(r, rng.random_range(0..layout.n_rates));
        }

        let mut claimed = vec![false; inst.aros.len()];
        for &r in &order {
            let rl = &layout.requests[r];
            let open: Vec<usize> = (0..rl.targets.len()).filter(|&t| !claimed[rl.targets[t].aro]).collect();
            if open.is_empty() {
                continue 'draw;
            }
            let first = open[rng.random_range(0..open.len())];
            for &t in &open {
                if t == first || rng.random_bool(0.5) {
                    a.aro_cached[r][t] = true;
                    claimed[rl.targets[t].aro] = true;
                }
            }
        }

        for &s in &layout.used_models {
            let needed = layout
                .requests
                .iter()
                .enumerate()
                .any(|(r, rl)| rl.targets.iter().enumerate().any(|(t, tg)| tg.model == s && a.aro_cached[r][t]));
            for j in 0..m {
                a.model_cached[s][j] = rng.random_bool(0.4);
            }
            if needed && !a.model_cached[s].iter().any(|&v| v) {
                a.model_cached[s][rng.random_range(0..m)] = true;
            }
        }

        if a.primaries_feasible(inst, layout) {
            a.derive_auxiliaries(layout);
            return Some(a);
        }
    }
    None
}
