use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_assignment, Method, SolveReport, SolveStatus, TOLERANCE};
use crate::baselines::{place, BaselineConfig, Scheme};
use crate::evaluator::{Assignment, Evaluator, Layout};
use crate::instance::ScenarioInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicParams {
    /// Descents after the first one, alternating between a perturbed copy
    /// of the incumbent and a random feasible start.
    pub restarts: usize,
    /// Cap on improvement passes per descent.
    pub max_passes: usize,
    /// Fraction of requests re-placed by a perturbation.
    pub kick: f64,
    pub seed: u64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self { restarts: 8, max_passes: 100, kick: 0.2, seed: 0 }
    }
}

/// Incremental objective: one share per request.
struct Descent<'e, 'a> {
    ev: &'e Evaluator<'a, f64>,
    inst: &'a ScenarioInstance,
    a: Assignment,
    share: Vec<f64>,
    /// Requests whose share depends on each model's copies.
    touches: Vec<Vec<usize>>,
    moves: u64,
}

impl<'e, 'a> Descent<'e, 'a> {
    fn new(ev: &'e Evaluator<'a, f64>, a: Assignment) -> Self {
        let layout = ev.layout();
        let mut touches = vec![Vec::new(); layout.n_models];
        for (r, rl) in layout.requests.iter().enumerate() {
            for &s in rl.models.iter().chain(&rl.wireless) {
                if touches[s].last() != Some(&r) {
                    touches[s].push(r);
                }
            }
        }
        let share = (0..layout.n_requests()).map(|r| ev.request_objective(r, &a).expect("one-hot")).collect();
        Self { ev, inst: ev.instance(), a, share, touches, moves: 0 }
    }

    fn layout(&self) -> &'e Layout {
        self.ev.layout()
    }

    /// Try a change of the primaries; keep it when feasible and strictly
    /// better. `undo` restores the previous primaries.
    fn attempt(&mut self, affected: &[usize], apply: impl Fn(&mut Assignment), undo: impl Fn(&mut Assignment)) -> bool {
        self.moves += 1;
        apply(&mut self.a);
        let layout = self.layout();
        if !self.a.primaries_feasible(self.inst, layout) {
            undo(&mut self.a);
            return false;
        }
        let mut delta = 0.0;
        let mut fresh = Vec::with_capacity(affected.len());
        for &r in affected {
            self.a.refresh_request(layout, r);
            let v = self.ev.request_objective(r, &self.a).expect("one-hot");
            delta += v - self.share[r];
            fresh.push(v);
        }
        if delta < -TOLERANCE {
            for (&r, v) in affected.iter().zip(fresh) {
                self.share[r] = v;
            }
            true
        } else {
            undo(&mut self.a);
            for &r in affected {
                self.a.refresh_request(layout, r);
            }
            false
        }
    }

    /// One sweep over the neighbourhood; true if anything improved.
    fn pass(&mut self) -> bool {
        let layout = self.layout();
        let m = layout.n_ecs;
        let mut improved = false;
        for r in 0..layout.n_requests() {
            let one = [r];
            for j in 0..m {
                let i = self.a.compute_ec(r).expect("placed");
                if j != i {
                    improved |= self.attempt(&one, |a| a.set_compute(r, j), |a| a.set_compute(r, i));
                }
                let k = self.a.matching_ec(r).expect("placed");
                if j != k {
                    improved |= self.attempt(&one, |a| a.set_matching(r, j), |a| a.set_matching(r, k));
                }
            }
            // exchange the two functions of the request; keeps VM counts
            let (i, k) = (self.a.compute_ec(r).expect("placed"), self.a.matching_ec(r).expect("placed"));
            if i != k {
                let swap = |a: &mut Assignment| {
                    let (i, k) = (a.compute_ec(r).expect("placed"), a.matching_ec(r).expect("placed"));
                    a.set_compute(r, k);
                    a.set_matching(r, i);
                };
                improved |= self.attempt(&one, swap, swap);
            }
            for g in 0..layout.n_rates {
                let old = self.a.rate_index(r).expect("rate");
                if g != old {
                    improved |= self.attempt(&one, |a| a.set_rate(r, g), |a| a.set_rate(r, old));
                }
            }
            for (t, tg) in layout.requests[r].targets.iter().enumerate() {
                let flip = |a: &mut Assignment| a.aro_cached[r][t] = !a.aro_cached[r][t];
                improved |= self.attempt(&one, flip, flip);
                // cache the target together with its model at the matching EC
                let j = self.a.matching_ec(r).expect("placed");
                let s = tg.model;
                if !self.a.aro_cached[r][t] && !self.a.model_cached[s][j] {
                    let touched = self.touches[s].clone();
                    improved |= self.attempt(
                        &touched,
                        |a| {
                            a.aro_cached[r][t] = true;
                            a.model_cached[s][j] = true;
                        },
                        |a| {
                            a.aro_cached[r][t] = false;
                            a.model_cached[s][j] = false;
                        },
                    );
                }
            }
        }
        for &s in &layout.used_models {
            let touched = self.touches[s].clone();
            // drop every copy of the model together with the targets it carries
            if self.a.model_cached[s].iter().any(|&p| p) {
                let before = (self.a.model_cached[s].clone(), self.a.aro_cached.clone());
                let drop = |a: &mut Assignment| {
                    a.model_cached[s].fill(false);
                    for (r, rl) in layout.requests.iter().enumerate() {
                        for (t, tg) in rl.targets.iter().enumerate() {
                            if tg.model == s {
                                a.aro_cached[r][t] = false;
                            }
                        }
                    }
                };
                let restore = |a: &mut Assignment| {
                    a.model_cached[s].clone_from(&before.0);
                    a.aro_cached.clone_from(&before.1);
                };
                improved |= self.attempt(&touched, drop, restore);
            }
            for j in 0..m {
                let flip = |a: &mut Assignment| a.model_cached[s][j] = !a.model_cached[s][j];
                improved |= self.attempt(&touched, flip, flip);
                if self.a.model_cached[s][j] {
                    for k in (0..m).filter(|&k| k != j) {
                        if self.a.model_cached[s][k] {
                            continue;
                        }
                        let swap = |a: &mut Assignment| {
                            a.model_cached[s][j] = !a.model_cached[s][j];
                            a.model_cached[s][k] = !a.model_cached[s][k];
                        };
                        if self.attempt(&touched, swap, swap) {
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
        improved
    }

    fn descend(&mut self, max_passes: usize) {
        for _ in 0..max_passes {
            if !self.pass() {
                break;
            }
        }
    }
}

/// Re-place a random subset of requests and redraw their rates.
fn perturb(
    inst: &ScenarioInstance,
    layout: &Layout,
    a: &Assignment,
    kick: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Assignment> {
    let nr = layout.n_requests();
    let m = layout.n_ecs;
    let count = ((nr as f64 * kick).ceil() as usize).clamp(1, nr);
    let mut b = a.clone();
    let mut used = vec![0u32; m];
    for r in 0..nr {
        used[b.compute_ec(r)?] += 1;
        used[b.matching_ec(r)?] += 1;
    }
    for r in sample(rng, nr, count) {
        used[b.compute_ec(r)?] -= 1;
        used[b.matching_ec(r)?] -= 1;
        for compute in [true, false] {
            let open: Vec<usize> = (0..m).filter(|&j| used[j] < inst.edge_clouds[j].vm_slots).collect();
            let j = *open.get(rng.random_range(0..open.len().max(1)))?;
            used[j] += 1;
            if compute {
                b.set_compute(r, j);
            } else {
                b.set_matching(r, j);
            }
        }
        b.set_rate(r, rng.random_range(0..layout.n_rates));
    }
    for &s in &layout.used_models {
        for j in 0..m {
            if rng.random_bool(kick / m as f64) {
                b.model_cached[s][j] = !b.model_cached[s][j];
            }
        }
    }
    b.primaries_feasible(inst, layout).then(|| b.with_auxiliaries(layout))
}

/// Best baseline followed by first-improvement local search and seeded
/// perturbation rounds. Never worse than the best successful baseline.
pub fn solve_heuristic(inst: &ScenarioInstance, mu: f64, params: &HeuristicParams) -> SolveReport {
    solve_heuristic_with(inst, mu, params, &[])
}

/// [`solve_heuristic`] that also considers `starts` (feasible assignments
/// such as baseline outputs) as starting points.
pub fn solve_heuristic_with(
    inst: &ScenarioInstance,
    mu: f64,
    params: &HeuristicParams,
    starts: &[Assignment],
) -> SolveReport {
    let started = Instant::now();
    let ev = Evaluator::<f64>::new(inst).with_mu(mu);
    let layout = ev.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let objective = |a: &Assignment| ev.objective_unchecked(a).expect("one-hot");

    let mut best: Option<(f64, Assignment)> = None;
    let consider = |a: Assignment, best: &mut Option<(f64, Assignment)>| {
        let v = objective(&a);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            *best = Some((v, a));
        }
    };
    for scheme in Scheme::ALL {
        let cfg = BaselineConfig { seed: params.seed, ..BaselineConfig::new(scheme) };
        if let Ok(a) = place(inst, mu, &cfg) {
            consider(a, &mut best);
        }
    }
    for a in starts {
        if a.primaries_feasible(inst, layout) {
            consider(a.clone().with_auxiliaries(layout), &mut best);
        }
    }
    if best.is_none() {
        if let Some(a) = random_assignment(inst, layout, &mut rng, 200) {
            consider(a, &mut best);
        }
    }
    let Some((_, start)) = best.clone() else {
        return SolveReport::new(Method::Heuristic, SolveStatus::Infeasible, started);
    };

    let mut moves = 0;
    let mut d = Descent::new(&ev, start);
    d.descend(params.max_passes);
    moves += d.moves;
    consider(d.a.with_auxiliaries(layout), &mut best);
    for round in 0..params.restarts {
        let incumbent = &best.as_ref().expect("seeded").1;
        let start = if round % 2 == 0 {
            perturb(inst, layout, incumbent, params.kick, &mut rng)
        } else {
            random_assignment(inst, layout, &mut rng, 50)
        };
        let Some(kicked) = start else {
            continue;
        };
        let mut d = Descent::new(&ev, kicked);
        d.descend(params.max_passes);
        moves += d.moves;
        consider(d.a.with_auxiliaries(layout), &mut best);
    }

    let (value, a) = best.expect("seeded");
    let mut report = SolveReport::new(Method::Heuristic, SolveStatus::Feasible, started);
    report.nodes = moves;
    report.objective = Some(value);
    report.assignment = Some(a);
    report.with_metrics(inst, mu)
}
