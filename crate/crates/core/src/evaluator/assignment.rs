use serde::{Deserialize, Serialize};

use super::layout::Layout;
use crate::constraint::{AuxKind, ConstraintFamily, ProductRow, Violation};
use crate::instance::ScenarioInstance;

type Grid = Vec<Vec<bool>>;

/// Derived binaries. They are fixed by the primaries through
/// [`Assignment::derive_auxiliaries`] but stored explicitly so that a point
/// of the integer program can be represented, and audited, verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Auxiliaries {
    /// `z[r][j]`: every required ARO is cached at `j`.
    pub hit: Grid,
    /// `q[r][j] = 1 - z[r][j]`.
    pub miss: Grid,
    /// `alpha[r][m][j] = p[s_m][j] y[r][j]`, `m` a model slot of `r`.
    pub alpha: Vec<Grid>,
    /// `beta[r][t][j] = p[s_t][j] h[r][t]`, `t` a target of `r`.
    pub beta: Vec<Grid>,
    /// `lambda[r][t][j] = alpha[r][m_t][j] beta[r][t][j]`.
    pub lambda: Vec<Grid>,
    /// `phi[r][w][j][g] = e[r][g] p[s_w][j]`, `w` indexing the wireless models of `r`.
    pub phi: Vec<Vec<Grid>>,
    /// `psi[r][j] = q[r][j] y[r][j]`: a miss at the matching node.
    pub psi: Grid,
    /// `xi[r][i][j] = x[r][i] y[r][j]`.
    pub xi: Vec<Grid>,
}

/// A complete decision: function placement, proactive caching and rate choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// `x[r][j]`: compute-intensive function of `r` runs at `j`.
    pub compute: Grid,
    /// `y[r][j]`: matching function of `r` runs at `j`.
    pub matching: Grid,
    /// `p[s][j]`: model `s` is cached at `j`.
    pub model_cached: Grid,
    /// `h[r][t]`: target `t` of request `r` is cached.
    pub aro_cached: Grid,
    /// `e[r][g]`: request `r` uses rate index `g`.
    pub rate: Grid,
    pub aux: Auxiliaries,
}

/// Compact, human-readable view of an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub requests: Vec<RequestPlacement>,
    /// `(model, ECs holding it)` for every cached model.
    pub models: Vec<(usize, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestPlacement {
    pub compute_ec: Option<usize>,
    pub matching_ec: Option<usize>,
    pub rate_bps: Option<u64>,
    pub cached_aros: Vec<usize>,
    pub hit: bool,
}

fn grid(rows: usize, cols: usize) -> Grid {
    vec![vec![false; cols]; rows]
}

fn one_hot(row: &[bool]) -> Option<usize> {
    let mut it = row.iter().enumerate().filter(|(_, &b)| b);
    match (it.next(), it.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

fn b(v: bool) -> f64 {
    if v {
        1.0
    } else {
        0.0
    }
}

impl Assignment {
    /// All-zero assignment with the right shape.
    pub fn empty(layout: &Layout) -> Self {
        let (nr, m) = (layout.n_requests(), layout.n_ecs);
        let mut a = Self {
            compute: grid(nr, m),
            matching: grid(nr, m),
            model_cached: grid(layout.n_models, m),
            aro_cached: layout.requests.iter().map(|q| vec![false; q.targets.len()]).collect(),
            rate: grid(nr, layout.n_rates),
            aux: Auxiliaries::default(),
        };
        a.derive_auxiliaries(layout);
        a
    }

    pub fn set_compute(&mut self, r: usize, j: usize) {
        self.compute[r].iter_mut().enumerate().for_each(|(i, v)| *v = i == j);
    }

    pub fn set_matching(&mut self, r: usize, j: usize) {
        self.matching[r].iter_mut().enumerate().for_each(|(i, v)| *v = i == j);
    }

    pub fn set_rate(&mut self, r: usize, g: usize) {
        self.rate[r].iter_mut().enumerate().for_each(|(i, v)| *v = i == g);
    }

    pub fn compute_ec(&self, r: usize) -> Option<usize> {
        one_hot(&self.compute[r])
    }

    pub fn matching_ec(&self, r: usize) -> Option<usize> {
        one_hot(&self.matching[r])
    }

    pub fn rate_index(&self, r: usize) -> Option<usize> {
        one_hot(&self.rate[r])
    }

    /// Number of `r`'s cached targets whose model is cached at `j`.
    pub fn cached_count(&self, layout: &Layout, r: usize, j: usize) -> usize {
        layout.requests[r]
            .targets
            .iter()
            .zip(&self.aro_cached[r])
            .filter(|(t, &h)| h && self.model_cached[t.model][j])
            .count()
    }

    /// Recompute every auxiliary from the primaries.
    pub fn derive_auxiliaries(&mut self, layout: &Layout) {
        let nr = layout.n_requests();
        self.aux = Auxiliaries {
            hit: vec![Vec::new(); nr],
            miss: vec![Vec::new(); nr],
            alpha: vec![Vec::new(); nr],
            beta: vec![Vec::new(); nr],
            lambda: vec![Vec::new(); nr],
            phi: vec![Vec::new(); nr],
            psi: vec![Vec::new(); nr],
            xi: vec![Vec::new(); nr],
        };
        for r in 0..nr {
            self.refresh_request(layout, r);
        }
    }

    /// Recompute the auxiliaries of request `r` only. The auxiliary grids
    /// must already have one entry per request.
    pub fn refresh_request(&mut self, layout: &Layout, r: usize) {
        let m = layout.n_ecs;
        let rl = &layout.requests[r];
        let p = &self.model_cached;
        let y = &self.matching[r];
        let h = &self.aro_cached[r];
        let hit: Vec<bool> = (0..m).map(|j| self.cached_count(layout, r, j) >= rl.threshold).collect();
        let alpha: Grid = rl.models.iter().map(|&s| (0..m).map(|j| p[s][j] && y[j]).collect()).collect();
        let beta: Grid =
            rl.targets.iter().enumerate().map(|(t, tg)| (0..m).map(|j| p[tg.model][j] && h[t]).collect()).collect();
        let lambda: Grid = rl
            .targets
            .iter()
            .enumerate()
            .map(|(t, tg)| (0..m).map(|j| alpha[tg.slot][j] && beta[t][j]).collect())
            .collect();
        let aux = &mut self.aux;
        aux.phi[r] = rl
            .wireless
            .iter()
            .map(|&s| (0..m).map(|j| self.rate[r].iter().map(|&e| e && p[s][j]).collect()).collect())
            .collect();
        aux.psi[r] = (0..m).map(|j| !hit[j] && y[j]).collect();
        aux.xi[r] = (0..m).map(|i| (0..m).map(|j| self.compute[r][i] && y[j]).collect()).collect();
        aux.miss[r] = hit.iter().map(|z| !z).collect();
        aux.hit[r] = hit;
        aux.alpha[r] = alpha;
        aux.beta[r] = beta;
        aux.lambda[r] = lambda;
    }

    pub fn with_auxiliaries(mut self, layout: &Layout) -> Self {
        self.derive_auxiliaries(layout);
        self
    }

    fn shape_ok(&self, inst: &ScenarioInstance, layout: &Layout) -> bool {
        let (nr, m, g) = (layout.n_requests(), layout.n_ecs, layout.n_rates);
        let dims = |x: &Grid, rows: usize, cols: usize| x.len() == rows && x.iter().all(|row| row.len() == cols);
        let a = &self.aux;
        inst.n_requests() == nr
            && dims(&self.compute, nr, m)
            && dims(&self.matching, nr, m)
            && dims(&self.model_cached, layout.n_models, m)
            && dims(&self.rate, nr, g)
            && self.aro_cached.len() == nr
            && dims(&a.hit, nr, m)
            && dims(&a.miss, nr, m)
            && dims(&a.psi, nr, m)
            && [a.alpha.len(), a.beta.len(), a.lambda.len(), a.xi.len(), a.phi.len()].iter().all(|&n| n == nr)
            && layout.requests.iter().enumerate().all(|(r, rl)| {
                self.aro_cached[r].len() == rl.targets.len()
                    && dims(&a.alpha[r], rl.models.len(), m)
                    && dims(&a.beta[r], rl.targets.len(), m)
                    && dims(&a.lambda[r], rl.targets.len(), m)
                    && dims(&a.xi[r], m, m)
                    && a.phi[r].len() == rl.wireless.len()
                    && a.phi[r].iter().all(|w| dims(w, m, g))
            })
    }

    /// Check every constraint of the program literally, auxiliaries included.
    /// Returns an empty list iff the assignment is feasible.
    pub fn audit(&self, inst: &ScenarioInstance, layout: &Layout) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.shape_ok(inst, layout) {
            out.push(Violation { family: ConstraintFamily::Shape, indices: vec![], slack: -1.0 });
            return out;
        }
        let mut push = |family, indices: Vec<usize>, slack: f64| {
            if slack < 0.0 {
                out.push(Violation { family, indices, slack });
            }
        };
        let m = layout.n_ecs;
        let c = &inst.constants;
        let a = &self.aux;
        let p = &self.model_cached;

        for (s, row) in p.iter().enumerate() {
            if !layout.is_used[s] {
                for (j, &v) in row.iter().enumerate() {
                    push(ConstraintFamily::Shape, vec![s, j], -b(v));
                }
            }
        }

        let mut aro_use = vec![0.0; inst.aros.len()];
        let mut vm = vec![0.0; m];
        let mut load = vec![0.0; m];
        for (r, rl) in layout.requests.iter().enumerate() {
            let exactly_one = |row: &[bool]| -(row.iter().map(|&v| b(v)).sum::<f64>() - 1.0).abs();
            push(ConstraintFamily::ComputeOnce, vec![r], exactly_one(&self.compute[r]));
            push(ConstraintFamily::MatchingOnce, vec![r], exactly_one(&self.matching[r]));
            push(ConstraintFamily::RateUnique, vec![r], exactly_one(&self.rate[r]));
            for j in 0..m {
                vm[j] += b(self.compute[r][j]) + b(self.matching[r][j]);
            }
            let h = &self.aro_cached[r];
            push(ConstraintFamily::MinOneAro, vec![r], h.iter().map(|&v| b(v)).sum::<f64>() - 1.0);
            for (t, tg) in rl.targets.iter().enumerate() {
                aro_use[tg.aro] += b(h[t]);
                let placed: f64 = (0..m).map(|j| b(p[tg.model][j])).sum();
                push(ConstraintFamily::AroNeedsModel, vec![r, t], placed - b(h[t]));
                let linked: f64 = (0..m).map(|j| b(a.beta[r][t][j])).sum();
                push(ConstraintFamily::AroModelLink, vec![r, t], linked - b(h[t]));
                for j in 0..m {
                    load[j] += b(a.beta[r][t][j]) * tg.size_bits;
                }
            }
            let thr = rl.threshold as f64;
            for j in 0..m {
                let count: f64 = (0..rl.targets.len()).map(|t| b(a.beta[r][t][j])).sum();
                let (z, q) = (b(a.hit[r][j]), b(a.miss[r][j]));
                push(ConstraintFamily::HitBigU, vec![r, j], thr + c.big_u - c.epsilon - (count + c.big_u * q));
                push(ConstraintFamily::HitMirror, vec![r, j], count - thr * z);
                push(ConstraintFamily::HitMissComplement, vec![r, j], -(z + q - 1.0).abs());
            }

            let mut product = |kind: AuxKind, idx: Vec<usize>, w: bool, x: bool, y: bool| {
                let (w, x, y) = (b(w), b(x), b(y));
                push(ConstraintFamily::Product(kind, ProductRow::LeFirst), idx.clone(), x - w);
                push(ConstraintFamily::Product(kind, ProductRow::LeSecond), idx.clone(), y - w);
                push(ConstraintFamily::Product(kind, ProductRow::GeSum), idx, w - (x + y - 1.0));
            };
            for j in 0..m {
                for (mi, &s) in rl.models.iter().enumerate() {
                    product(AuxKind::Alpha, vec![r, mi, j], a.alpha[r][mi][j], p[s][j], self.matching[r][j]);
                }
                for (t, tg) in rl.targets.iter().enumerate() {
                    product(AuxKind::Beta, vec![r, t, j], a.beta[r][t][j], p[tg.model][j], h[t]);
                    product(AuxKind::Lambda, vec![r, t, j], a.lambda[r][t][j], a.alpha[r][tg.slot][j], a.beta[r][t][j]);
                }
                for (w, &s) in rl.wireless.iter().enumerate() {
                    for g in 0..layout.n_rates {
                        product(AuxKind::Phi, vec![r, w, j, g], a.phi[r][w][j][g], self.rate[r][g], p[s][j]);
                    }
                }
                product(AuxKind::Psi, vec![r, j], a.psi[r][j], a.miss[r][j], self.matching[r][j]);
                for i in 0..m {
                    product(AuxKind::Xi, vec![r, i, j], a.xi[r][i][j], self.compute[r][i], self.matching[r][j]);
                }
            }
        }
        for (l, &n) in aro_use.iter().enumerate() {
            push(ConstraintFamily::AroOnce, vec![l], 1.0 - n);
        }
        for (j, ec) in inst.edge_clouds.iter().enumerate() {
            push(ConstraintFamily::VmCapacity, vec![j], ec.vm_slots as f64 - vm[j]);
            push(ConstraintFamily::CacheCapacity, vec![j], ec.cache_bits - load[j]);
        }
        out
    }

    /// Feasibility of the primaries alone, assuming auxiliaries are derived.
    /// Agrees with an empty [`audit`](Self::audit) after
    /// [`derive_auxiliaries`](Self::derive_auxiliaries); much cheaper.
    pub fn primaries_feasible(&self, inst: &ScenarioInstance, layout: &Layout) -> bool {
        let m = layout.n_ecs;
        let p = &self.model_cached;
        if p.iter().enumerate().any(|(s, row)| !layout.is_used[s] && row.iter().any(|&v| v)) {
            return false;
        }
        let mut vm = vec![0u32; m];
        let mut aro_use = vec![false; inst.aros.len()];
        let mut load = vec![0.0; m];
        for (r, rl) in layout.requests.iter().enumerate() {
            let (Some(i), Some(j)) = (self.compute_ec(r), self.matching_ec(r)) else {
                return false;
            };
            if self.rate_index(r).is_none() {
                return false;
            }
            vm[i] += 1;
            vm[j] += 1;
            let mut any = false;
            for (t, tg) in rl.targets.iter().enumerate() {
                if !self.aro_cached[r][t] {
                    continue;
                }
                any = true;
                if std::mem::replace(&mut aro_use[tg.aro], true) {
                    return false;
                }
                let mut placed = false;
                for k in 0..m {
                    if p[tg.model][k] {
                        placed = true;
                        load[k] += tg.size_bits;
                    }
                }
                if !placed {
                    return false;
                }
            }
            if !any {
                return false;
            }
        }
        inst.edge_clouds.iter().enumerate().all(|(j, ec)| vm[j] <= ec.vm_slots && load[j] <= ec.cache_bits)
    }

    pub fn summary(&self, inst: &ScenarioInstance, layout: &Layout) -> PlacementSummary {
        let requests = layout
            .requests
            .iter()
            .enumerate()
            .map(|(r, rl)| {
                let matching_ec = self.matching_ec(r);
                RequestPlacement {
                    compute_ec: self.compute_ec(r),
                    matching_ec,
                    rate_bps: self.rate_index(r).map(|g| inst.constants.data_rates_bps[g]),
                    cached_aros: rl
                        .targets
                        .iter()
                        .zip(&self.aro_cached[r])
                        .filter(|(_, &h)| h)
                        .map(|(t, _)| t.aro)
                        .collect(),
                    hit: matching_ec.is_some_and(|j| self.cached_count(layout, r, j) >= rl.threshold),
                }
            })
            .collect();
        let models = self
            .model_cached
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().any(|&v| v))
            .map(|(s, row)| (s, row.iter().enumerate().filter(|(_, &v)| v).map(|(j, _)| j).collect()))
            .collect();
        PlacementSummary { requests, models }
    }
}
