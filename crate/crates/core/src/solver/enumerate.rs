use std::time::Instant;

use super::{Method, SolveError, SolveReport, SolveStatus};
use crate::evaluator::{Assignment, Evaluator, Layout};
use crate::instance::ScenarioInstance;

/// Largest primary-variable census [`solve_enumerate`] accepts.
pub const ENUMERATION_LIMIT: usize = 30;

/// Number of primary binaries (x, y, p, h, e) of an instance.
pub fn primary_count(layout: &Layout) -> usize {
    let m = layout.n_ecs;
    let per_request: usize = layout.requests.iter().map(|rl| 2 * m + layout.n_rates + rl.targets.len()).sum();
    per_request + layout.used_models.len() * m
}

struct Scan<'a> {
    inst: &'a ScenarioInstance,
    ev: Evaluator<'a, f64>,
    a: Assignment,
    vm: Vec<u32>,
    claimed: Vec<bool>,
    best: Option<(f64, Assignment)>,
    leaves: u64,
}

impl Scan<'_> {
    fn layout(&self) -> &Layout {
        self.ev.layout()
    }

    fn request(&mut self, r: usize) {
        let layout = self.layout();
        if r == layout.n_requests() {
            return self.leaf();
        }
        let (m, ng, nt) = (layout.n_ecs, layout.n_rates, layout.requests[r].targets.len());
        for i in 0..m {
            if !self.take_vm(i) {
                continue;
            }
            self.a.set_compute(r, i);
            for j in 0..m {
                if !self.take_vm(j) {
                    continue;
                }
                self.a.set_matching(r, j);
                for g in 0..ng {
                    self.a.set_rate(r, g);
                    for mask in 1u32..(1 << nt) {
                        if self.cache_targets(r, mask) {
                            self.request(r + 1);
                        }
                        self.release_targets(r);
                    }
                }
                self.vm[j] -= 1;
            }
            self.vm[i] -= 1;
        }
        self.a.compute[r].fill(false);
        self.a.matching[r].fill(false);
        self.a.rate[r].fill(false);
    }

    fn take_vm(&mut self, j: usize) -> bool {
        if self.vm[j] < self.inst.edge_clouds[j].vm_slots {
            self.vm[j] += 1;
            true
        } else {
            false
        }
    }

    /// Set `h` for the targets in `mask`; false if one is claimed already or
    /// has no cached model.
    fn cache_targets(&mut self, r: usize, mask: u32) -> bool {
        let layout = self.ev.layout();
        for (t, tg) in layout.requests[r].targets.iter().enumerate() {
            let on = mask & (1 << t) != 0;
            self.a.aro_cached[r][t] = false;
            if !on {
                continue;
            }
            if self.claimed[tg.aro] || !self.a.model_cached[tg.model].iter().any(|&p| p) {
                return false;
            }
            self.claimed[tg.aro] = true;
            self.a.aro_cached[r][t] = true;
        }
        true
    }

    fn release_targets(&mut self, r: usize) {
        let layout = self.ev.layout();
        for (t, tg) in layout.requests[r].targets.iter().enumerate() {
            if self.a.aro_cached[r][t] {
                self.claimed[tg.aro] = false;
                self.a.aro_cached[r][t] = false;
            }
        }
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        if !self.a.primaries_feasible(self.inst, self.ev.layout()) {
            return;
        }
        self.a.derive_auxiliaries(self.ev.layout());
        let Ok(obj) = self.ev.objective_unchecked(&self.a) else {
            return;
        };
        if self.best.as_ref().is_none_or(|(b, _)| obj < *b) {
            self.best = Some((obj, self.a.clone()));
        }
    }
}

/// Exact minimum by scanning every setting of the primaries.
///
/// One-hot groups are scanned by their selected index, which skips only
/// points that break an assignment equality.
pub fn solve_enumerate(inst: &ScenarioInstance, mu: f64) -> Result<SolveReport, SolveError> {
    let started = Instant::now();
    let ev = Evaluator::<f64>::new(inst).with_mu(mu);
    let layout = ev.layout().clone();
    let primaries = primary_count(&layout);
    if primaries > ENUMERATION_LIMIT {
        return Err(SolveError::TooLarge { primaries, limit: ENUMERATION_LIMIT });
    }
    let m = layout.n_ecs;
    let cells: Vec<(usize, usize)> = layout.used_models.iter().flat_map(|&s| (0..m).map(move |j| (s, j))).collect();
    let mut scan = Scan {
        inst,
        a: Assignment::empty(&layout),
        vm: vec![0; m],
        claimed: vec![false; inst.aros.len()],
        best: None,
        leaves: 0,
        ev,
    };
    for mask in 0u64..(1 << cells.len()) {
        for (bit, &(s, j)) in cells.iter().enumerate() {
            scan.a.model_cached[s][j] = mask & (1 << bit) != 0;
        }
        scan.request(0);
    }
    let status = if scan.best.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible };
    let mut report = SolveReport::new(Method::Enumerate, status, started);
    report.nodes = scan.leaves;
    if let Some((obj, a)) = scan.best {
        report.objective = Some(obj);
        report.bound = Some(obj);
        report.assignment = Some(a);
    }
    Ok(report.with_metrics(inst, mu))
}
