//! Comparison schemes: random selection (RandS), closest first (CFS) and
//! utilization-capped closest first (UTIL).
//!
//! All three share the caching rule (each request caches its targets at its
//! matching EC, first come first served, nothing is evicted) and the rate
//! rule (per request, the rate with the smallest objective share).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{Assignment, Evaluator, Layout};
use crate::instance::{Node, ScenarioInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    RandS,
    Cfs,
    Util,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::RandS, Scheme::Cfs, Scheme::Util];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RandS => "rands",
            Scheme::Cfs => "cfs",
            Scheme::Util => "util",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rands" => Ok(Scheme::RandS),
            "cfs" => Ok(Scheme::Cfs),
            "util" => Ok(Scheme::Util),
            _ => Err(format!("unknown scheme `{s}` (expected rands, cfs or util)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateRule {
    /// Per request, the rate minimizing its own objective share.
    BestResponse,
    Fixed {
        rate_bps: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub scheme: Scheme,
    /// UTIL keeps every EC at or below this fraction of its VM slots.
    pub util_cap: f64,
    pub seed: u64,
    pub rate_rule: RateRule,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { scheme: Scheme::Cfs, util_cap: 0.8, seed: 0, rate_rule: RateRule::BestResponse }
    }
}

impl BaselineConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("{scheme}: no eligible EC for request(s) {requests:?}")]
    Placement { scheme: Scheme, requests: Vec<usize> },
    #[error("{scheme}: no target fits in any cache for request(s) {requests:?}")]
    Caching { scheme: Scheme, requests: Vec<usize> },
    #[error("util_cap must lie in (0, 1], got {0}")]
    UtilCap(f64),
    #[error("rate {0} bps is not offered by the instance")]
    UnknownRate(u64),
}

impl BaselineError {
    /// Requests the scheme could not serve.
    pub fn failed_requests(&self) -> &[usize] {
        match self {
            Self::Placement { requests, .. } | Self::Caching { requests, .. } => requests,
            _ => &[],
        }
    }
}

pub fn place_rands(inst: &ScenarioInstance, seed: u64) -> Result<Assignment, BaselineError> {
    place(inst, inst.constants.mu, &BaselineConfig { seed, ..BaselineConfig::new(Scheme::RandS) })
}

pub fn place_cfs(inst: &ScenarioInstance) -> Result<Assignment, BaselineError> {
    place(inst, inst.constants.mu, &BaselineConfig::new(Scheme::Cfs))
}

pub fn place_util(inst: &ScenarioInstance) -> Result<Assignment, BaselineError> {
    place(inst, inst.constants.mu, &BaselineConfig::new(Scheme::Util))
}

/// ECs ordered by wired latency from `from`, ties by index.
fn by_distance(inst: &ScenarioInstance, from: Node) -> Vec<usize> {
    let mut ecs: Vec<usize> = (0..inst.n_ecs()).collect();
    ecs.sort_by(|&a, &b| {
        let (da, db) = (inst.topology.latency(from, Node::Ec(a)), inst.topology.latency(from, Node::Ec(b)));
        da.total_cmp(&db).then(a.cmp(&b))
    });
    ecs
}

/// Highest occupancy UTIL allows at an EC with `slots` VMs.
pub fn util_limit(slots: u32, cap: f64) -> u32 {
    (cap * slots as f64 + 1e-9).floor() as u32
}

/// Run one scheme. The rate rule uses the weight `mu`.
pub fn place(inst: &ScenarioInstance, mu: f64, cfg: &BaselineConfig) -> Result<Assignment, BaselineError> {
    if !(cfg.util_cap > 0.0 && cfg.util_cap <= 1.0) {
        return Err(BaselineError::UtilCap(cfg.util_cap));
    }
    let fixed = match cfg.rate_rule {
        RateRule::Fixed { rate_bps } => Some(
            inst.constants
                .data_rates_bps
                .iter()
                .position(|&g| g == rate_bps)
                .ok_or(BaselineError::UnknownRate(rate_bps))?,
        ),
        RateRule::BestResponse => None,
    };
    let ev = Evaluator::<f64>::new(inst).with_mu(mu);
    let layout = ev.layout();
    let m = inst.n_ecs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut a = Assignment::empty(layout);
    let mut used = vec![0u32; m];
    let mut failed = Vec::new();

    for (r, req) in inst.requests.iter().enumerate() {
        let near = by_distance(inst, Node::Router(req.origin_router));
        let mut pick = |used: &mut Vec<u32>| -> Option<usize> {
            let slots = |j: usize| inst.edge_clouds[j].vm_slots;
            let j = match cfg.scheme {
                Scheme::RandS => {
                    let open: Vec<usize> = (0..m).filter(|&j| used[j] < slots(j)).collect();
                    (!open.is_empty()).then(|| open[rng.random_range(0..open.len())])
                }
                Scheme::Cfs => near.iter().take(2).copied().find(|&j| used[j] < slots(j)),
                Scheme::Util => near.iter().copied().find(|&j| used[j] < util_limit(slots(j), cfg.util_cap)),
            }?;
            used[j] += 1;
            Some(j)
        };
        match (pick(&mut used), pick(&mut used)) {
            (Some(i), Some(j)) => {
                a.set_compute(r, i);
                a.set_matching(r, j);
            }
            (Some(i), None) => {
                used[i] -= 1;
                failed.push(r);
            }
            _ => failed.push(r),
        }
    }
    if !failed.is_empty() {
        return Err(BaselineError::Placement { scheme: cfg.scheme, requests: failed });
    }

    let mut cache = CacheBook::new(inst, layout);
    for r in 0..inst.n_requests() {
        let j = a.matching_ec(r).expect("placed");
        let mut any = false;
        for t in 0..layout.requests[r].targets.len() {
            any |= cache.try_cache(&mut a, r, t, j);
        }
        if !any && !cache.fallback(&mut a, r, j) {
            failed.push(r);
        }
    }
    if !failed.is_empty() {
        return Err(BaselineError::Caching { scheme: cfg.scheme, requests: failed });
    }

    for r in 0..inst.n_requests() {
        let g = fixed.unwrap_or_else(|| {
            (0..layout.n_rates)
                .map(|g| (g, ev.rate_contribution(r, g, &a)))
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
                .map(|(g, _)| g)
                .expect("at least one rate")
        });
        a.set_rate(r, g);
    }
    a.derive_auxiliaries(layout);
    if !a.primaries_feasible(inst, layout) {
        let requests = (0..inst.n_requests()).collect();
        return Err(BaselineError::Caching { scheme: cfg.scheme, requests });
    }
    Ok(a)
}

/// Cache loads while targets are admitted one by one.
struct CacheBook<'a> {
    inst: &'a ScenarioInstance,
    layout: &'a Layout,
    load: Vec<f64>,
    /// Bits of admitted targets per model; each copy of the model holds them all.
    model_bits: Vec<f64>,
    claimed: Vec<bool>,
}

impl<'a> CacheBook<'a> {
    fn new(inst: &'a ScenarioInstance, layout: &'a Layout) -> Self {
        Self {
            inst,
            layout,
            load: vec![0.0; inst.n_ecs()],
            model_bits: vec![0.0; inst.n_models],
            claimed: vec![false; inst.aros.len()],
        }
    }

    /// Admit target `t` of `r` with a model copy at `j`.
    fn try_cache(&mut self, a: &mut Assignment, r: usize, t: usize, j: usize) -> bool {
        let tg = self.layout.requests[r].targets[t];
        if self.claimed[tg.aro] {
            return false;
        }
        let s = tg.model;
        let mut extra = vec![0.0; self.load.len()];
        for (k, e) in extra.iter_mut().enumerate() {
            if a.model_cached[s][k] {
                *e = tg.size_bits;
            }
        }
        if !a.model_cached[s][j] {
            extra[j] = self.model_bits[s] + tg.size_bits;
        }
        let fits = self
            .load
            .iter()
            .zip(&extra)
            .zip(&self.inst.edge_clouds)
            .all(|((l, e), ec)| *e == 0.0 || l + e <= ec.cache_bits);
        if !fits {
            return false;
        }
        for (l, e) in self.load.iter_mut().zip(&extra) {
            *l += e;
        }
        self.model_bits[s] += tg.size_bits;
        self.claimed[tg.aro] = true;
        a.model_cached[s][j] = true;
        a.aro_cached[r][t] = true;
        true
    }

    /// Cache one target of `r` anywhere: first where its model already
    /// sits, then with a new copy at the EC nearest to `j`.
    fn fallback(&mut self, a: &mut Assignment, r: usize, j: usize) -> bool {
        let near = by_distance(self.inst, Node::Ec(j));
        let targets = self.layout.requests[r].targets.len();
        for t in 0..targets {
            let s = self.layout.requests[r].targets[t].model;
            if let Some(k) = near.iter().copied().find(|&k| a.model_cached[s][k]) {
                if self.try_cache(a, r, t, k) {
                    return true;
                }
            }
        }
        for &k in &near {
            for t in 0..targets {
                if self.try_cache(a, r, t, k) {
                    return true;
                }
            }
        }
        false
    }
}
