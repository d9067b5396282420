//! Problem input: topology, edge clouds, requests, radio and service constants.
//!
//! A [`ScenarioInstance`] is immutable once built. All sizes are in bits,
//! latencies in milliseconds, frequencies in hertz and powers in watts; the
//! field names carry the unit.

mod generate;
mod io;
mod topology;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, RadioParams};

pub use generate::{fore_size, generate, generate_instance, GeneratorParams};
pub use io::{load_instance, save_instance};
pub use topology::{AccessRouter, Node, Topology};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("region_anchor has no entry for router {router}")]
    MissingRegionAnchor { router: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {found} (expected {expected})")]
    Version { found: u64, expected: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCloud {
    pub id: usize,
    pub cpu_hz: f64,
    pub cores: u32,
    /// Cache capacity available for AROs.
    pub cache_bits: f64,
    pub vm_slots: u32,
    /// Per-VM virtual CPU frequency.
    pub vm_cpu_hz: f64,
}

/// Augmented-reality object embedded in one background model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aro {
    pub id: usize,
    pub model: usize,
    pub size_bits: f64,
    /// Per-ARO rate (bps) -> SSIM override of the service-wide table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim_table: Option<BTreeMap<u64, f64>>,
}

/// One background model a request may render, with its target AROs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestModel {
    pub model: usize,
    pub back_bits: f64,
    /// Compressed result frame streamed back to region peers.
    pub res_bits: f64,
    pub aros: Vec<usize>,
}

/// Frozen radio link between a user and one access router.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioLink {
    pub router: usize,
    pub distance_m: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub origin_router: usize,
    /// Destination router -> probability of moving there during the slot.
    pub mobility: BTreeMap<usize, f64>,
    pub models: Vec<RequestModel>,
    pub fore_bits: f64,
    pub pointer_bits: f64,
    /// One link per access router, indexed by router id.
    pub links: Vec<RadioLink>,
}

impl Request {
    pub fn mobility_mass(&self) -> f64 {
        self.mobility.values().sum()
    }

    /// Number of AROs that must be present for a cache hit: the smallest
    /// per-model target set.
    pub fn target_count(&self) -> usize {
        self.models.iter().map(|m| m.aros.len()).min().unwrap_or(0)
    }

    /// Flattened `(model slot, ARO)` targets in model order.
    pub fn targets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.models.iter().enumerate().flat_map(|(m, rm)| rm.aros.iter().map(move |&l| (m, l)))
    }

    pub fn n_targets(&self) -> usize {
        self.models.iter().map(|m| m.aros.len()).sum()
    }

    pub fn serving_link(&self) -> &RadioLink {
        &self.links[self.origin_router]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConstants {
    pub omega_fore_cycles_per_bit: f64,
    pub omega_back_cycles_per_bit: f64,
    pub miss_penalty_ms: f64,
    /// CPU energy coefficient applied to the frequency expressed in MHz:
    /// energy per cycle is `k0 (f / 1 MHz)^2` joules.
    pub k0_per_mhz2: f64,
    pub mu: f64,
    pub l_max_ms: f64,
    pub p_max_w: f64,
    pub q_max: f64,
    pub epsilon: f64,
    pub big_u: f64,
    pub data_rates_bps: Vec<u64>,
    /// Service-wide rate (bps) -> SSIM table.
    pub ssim_table: BTreeMap<u64, f64>,
}

impl ServiceConstants {
    /// Energy in joules of one second of busy CPU at `hz`.
    pub fn cpu_watts(&self, hz: f64) -> f64 {
        let mhz = hz / 1e6;
        self.k0_per_mhz2 * mhz * mhz * hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub schema_version: u32,
    pub seed: u64,
    pub channel_seed: u64,
    /// Number of channel draws rejected by the gain floor during generation.
    pub gain_resamples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorParams>,
    pub topology: Topology,
    pub edge_clouds: Vec<EdgeCloud>,
    pub n_models: usize,
    pub aros: Vec<Aro>,
    pub requests: Vec<Request>,
    pub radio: RadioParams,
    pub constants: ServiceConstants,
}

impl ScenarioInstance {
    pub fn n_ecs(&self) -> usize {
        self.edge_clouds.len()
    }

    pub fn n_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn n_rates(&self) -> usize {
        self.constants.data_rates_bps.len()
    }

    pub fn region_of(&self, r: usize) -> usize {
        self.topology.region(self.requests[r].origin_router)
    }

    /// Requests sharing `r`'s metaverse region, `r` included.
    pub fn region_peers(&self, r: usize) -> Vec<usize> {
        let g = self.region_of(r);
        (0..self.n_requests()).filter(|&t| self.region_of(t) == g).collect()
    }

    /// Models whose result frames reach `r` through its region peers.
    pub fn wireless_models(&self, r: usize) -> Vec<usize> {
        let set: BTreeSet<usize> =
            self.region_peers(r).into_iter().flat_map(|t| self.requests[t].models.iter().map(|m| m.model)).collect();
        set.into_iter().collect()
    }

    /// Models requested by at least one request.
    pub fn used_models(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.requests.iter().flat_map(|q| q.models.iter().map(|m| m.model)).collect();
        set.into_iter().collect()
    }

    /// SSIM of `aro` at `rate_bps`, or `None` when the rate is not tabulated.
    pub fn ssim(&self, aro: usize, rate_bps: u64) -> Option<f64> {
        self.aros[aro].ssim_table.as_ref().unwrap_or(&self.constants.ssim_table).get(&rate_bps).copied()
    }

    pub fn best_ssim(&self, aro: usize) -> f64 {
        self.constants.data_rates_bps.iter().filter_map(|&g| self.ssim(aro, g)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interference at `r`'s serving router from every other access point.
    pub fn interference_w(&self, r: usize) -> f64 {
        let req = &self.requests[r];
        channel::interference_w(
            req.links.iter().filter(|l| l.router != req.origin_router).map(|l| (l.gain, l.distance_m)),
            &self.radio,
        )
        .unwrap_or(f64::INFINITY)
    }

    /// Transmit power request `r` needs at `rate_bps` on its serving link.
    pub fn transmit_power_w(&self, r: usize, rate_bps: f64) -> f64 {
        let link = self.requests[r].serving_link();
        channel::transmit_power(rate_bps, &self.radio, link.gain, link.distance_m, self.interference_w(r))
            .unwrap_or(f64::INFINITY)
    }

    /// Recompute `l_max_ms`, `p_max_w` and `q_max` from the instance contents.
    ///
    /// `L_max` is the frame budget times the request count, `P_max` puts every
    /// user at the top rate and every VM busy for the whole budget, `Q_max`
    /// takes every target at its best SSIM.
    pub fn recompute_normalizers(&mut self, frame_budget_ms: f64) {
        let top = self.constants.data_rates_bps.iter().copied().max().unwrap_or(0) as f64;
        let transmit: f64 = (0..self.n_requests()).map(|r| self.transmit_power_w(r, top)).sum();
        let cpu: f64 = self
            .edge_clouds
            .iter()
            .map(|ec| ec.vm_slots as f64 * self.constants.cpu_watts(ec.vm_cpu_hz) * frame_budget_ms / 1e3)
            .sum();
        let q_max = self.requests.iter().flat_map(|q| q.targets().map(|(_, l)| l)).map(|l| self.best_ssim(l)).sum();
        self.constants.l_max_ms = frame_budget_ms * self.n_requests() as f64;
        self.constants.p_max_w = transmit + cpu;
        self.constants.q_max = q_max;
    }

    /// Full invariant audit of the instance.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |s: String| Err(InstanceError::Invariant(s));
        if self.schema_version != SCHEMA_VERSION {
            return Err(InstanceError::Version { found: self.schema_version as u64, expected: SCHEMA_VERSION });
        }
        self.topology.validate()?;
        if self.edge_clouds.len() != self.topology.n_ecs() {
            return bad(format!("{} edge clouds but topology has {}", self.edge_clouds.len(), self.topology.n_ecs()));
        }
        for (j, ec) in self.edge_clouds.iter().enumerate() {
            if ec.id != j {
                return bad(format!("edge cloud at position {j} has id {}", ec.id));
            }
            if !(ec.cache_bits > 0.0) || ec.vm_slots == 0 || !(ec.vm_cpu_hz > 0.0) || !(ec.cpu_hz > 0.0) {
                return bad(format!("edge cloud {j}: cache, VM slots and frequencies must be positive"));
            }
        }
        for (l, aro) in self.aros.iter().enumerate() {
            if aro.id != l || aro.model >= self.n_models || !(aro.size_bits > 0.0) {
                return bad(format!("ARO {l} is malformed"));
            }
            if let Some(t) = &aro.ssim_table {
                check_ssim_table(t, &format!("ARO {l}"))?;
            }
        }
        if self.requests.is_empty() {
            return bad("no requests".into());
        }
        let n_routers = self.topology.n_routers();
        for (r, q) in self.requests.iter().enumerate() {
            if q.id != r {
                return bad(format!("request at position {r} has id {}", q.id));
            }
            if q.origin_router >= n_routers {
                return bad(format!("request {r}: origin router {} out of range", q.origin_router));
            }
            let adj = self.topology.neighbours(q.origin_router);
            for (&k, &u) in &q.mobility {
                if !adj.contains(&k) {
                    return bad(format!("request {r}: destination {k} is not adjacent to router {}", q.origin_router));
                }
                if !(0.0..=1.0).contains(&u) {
                    return bad(format!("request {r}: mobility probability {u} outside [0,1]"));
                }
            }
            let mass = q.mobility_mass();
            if mass > 1.0 + 1e-9 {
                return bad(format!("request {r}: mobility probabilities sum to {mass} > 1"));
            }
            if q.models.is_empty() || q.models.len() > 4 {
                return bad(format!("request {r}: needs 1..=4 models, has {}", q.models.len()));
            }
            let mut seen = BTreeSet::new();
            for m in &q.models {
                if m.model >= self.n_models || !seen.insert(m.model) {
                    return bad(format!("request {r}: model {} invalid or repeated", m.model));
                }
                if m.aros.is_empty() {
                    return bad(format!("request {r}: model {} has no target AROs", m.model));
                }
                if m.aros.iter().any(|&l| l >= self.aros.len() || self.aros[l].model != m.model) {
                    return bad(format!("request {r}: model {} lists an ARO of another model", m.model));
                }
                let distinct: BTreeSet<_> = m.aros.iter().collect();
                if distinct.len() != m.aros.len() {
                    return bad(format!("request {r}: model {} repeats an ARO", m.model));
                }
                if !(m.back_bits >= 0.0) || !(m.res_bits >= 0.0) {
                    return bad(format!("request {r}: negative model size"));
                }
            }
            if !(q.fore_bits >= 0.0) || !(q.pointer_bits >= 0.0) {
                return bad(format!("request {r}: negative foreground/pointer size"));
            }
            if q.links.len() != n_routers
                || q.links.iter().enumerate().any(|(k, l)| l.router != k || !(l.distance_m > 0.0) || !(l.gain > 0.0))
            {
                return bad(format!("request {r}: needs one positive link per router"));
            }
        }
        if !self.radio.is_valid() {
            return bad("radio parameters must be positive with path-loss exponent >= 2".into());
        }
        let c = &self.constants;
        if c.data_rates_bps.is_empty() || c.data_rates_bps.iter().any(|&g| g == 0) {
            return bad("data rates must be non-empty and positive".into());
        }
        check_ssim_table(&c.ssim_table, "service")?;
        for &g in &c.data_rates_bps {
            for q in &self.requests {
                for (_, l) in q.targets() {
                    if self.ssim(l, g).is_none() {
                        return bad(format!("no SSIM for ARO {l} at rate {g} bps"));
                    }
                }
            }
        }
        if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
            return bad(format!("epsilon {} outside (0,1)", c.epsilon));
        }
        let max_targets = self.requests.iter().map(Request::n_targets).max().unwrap_or(0);
        if !(c.big_u > max_targets as f64 + 1.0) {
            return bad(format!("big_u {} does not exceed the largest target count {max_targets}", c.big_u));
        }
        if !(0.0..=1.0).contains(&c.mu) {
            return bad(format!("mu {} outside [0,1]", c.mu));
        }
        if !(c.l_max_ms > 0.0 && c.p_max_w > 0.0 && c.q_max > 0.0) {
            return bad("normalizers must be positive".into());
        }
        if c.omega_fore_cycles_per_bit < 0.0
            || c.omega_back_cycles_per_bit < 0.0
            || c.miss_penalty_ms < 0.0
            || c.k0_per_mhz2 < 0.0
        {
            return bad("cycle loads, miss penalty and k0 must be non-negative".into());
        }
        Ok(())
    }
}

fn check_ssim_table(t: &BTreeMap<u64, f64>, owner: &str) -> Result<(), InstanceError> {
    let pts: Vec<(f64, f64)> = t.iter().map(|(&g, &c)| (g as f64, c)).collect();
    if pts.is_empty() {
        return Err(InstanceError::Invariant(format!("{owner} SSIM table is empty")));
    }
    if pts.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(InstanceError::Invariant(format!("{owner} SSIM table is not strictly increasing")));
    }
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    if slopes.windows(2).any(|s| s[1] > s[0] + 1e-12) {
        return Err(InstanceError::Invariant(format!("{owner} SSIM table is not concave in rate")));
    }
    Ok(())
}
