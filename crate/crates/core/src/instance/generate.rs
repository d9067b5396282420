use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::topology::build_tree;
use super::{
    Aro, EdgeCloud, InstanceError, RadioLink, Request, RequestModel, ScenarioInstance, ServiceConstants, SCHEMA_VERSION,
};
use crate::channel::{ChannelSample, RadioParams};

/// Every knob of the random scenario generator. Serialized into the instance
/// document so a run can be reproduced from the file alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n_ecs: usize,
    pub n_requests: usize,
    pub mobility_mass: f64,

    pub routers_per_ec: usize,
    pub region_fanout: usize,
    pub per_hop_ms: f64,
    pub cell_radius_m: f64,

    pub cpu_hz_range: [f64; 2],
    pub cores_range: [u32; 2],
    pub cache_mb_range: [f64; 2],
    pub vm_slots: u32,
    /// Overrides the equal split `cpu_hz * cores / vm_slots`.
    pub vm_cpu_hz: Option<f64>,

    pub n_models: usize,
    pub models_per_request: [usize; 2],
    pub aros_per_model: [usize; 2],
    pub aro_pool_per_model: usize,
    /// Draw targets so that no ARO is wanted by two requests. Each ARO can
    /// be cached for one request only, so shared targets can make an
    /// instance infeasible.
    pub exclusive_aros: bool,
    pub back_size_mbit_range: [f64; 2],
    pub res_ratio: f64,
    pub aro_size_mbit_range: [f64; 2],

    pub frame_width: u64,
    pub frame_height: u64,
    pub bits_per_pixel: u64,
    pub pointer_bits: f64,

    pub radio: RadioParams,
    pub gain_floor: f64,

    pub omega_fore: f64,
    pub omega_back: f64,
    pub miss_penalty_ms: f64,
    pub k0_per_mhz2: f64,
    pub mu: f64,
    pub frame_budget_ms: f64,
    pub epsilon: f64,
    pub big_u: f64,
    pub data_rates_mbps: Vec<u64>,
    /// SSIM per entry of `data_rates_mbps`.
    pub ssim: Vec<f64>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n_ecs: 6,
            n_requests: 30,
            mobility_mass: 1.0,
            routers_per_ec: 2,
            region_fanout: 2,
            per_hop_ms: 3.0,
            cell_radius_m: 250.0,
            cpu_hz_range: [4e9, 8e9],
            cores_range: [4, 8],
            cache_mb_range: [100.0, 400.0],
            vm_slots: 14,
            vm_cpu_hz: None,
            n_models: 4,
            models_per_request: [1, 2],
            aros_per_model: [1, 2],
            aro_pool_per_model: 64,
            exclusive_aros: true,
            back_size_mbit_range: [1.0, 6.0],
            res_ratio: 5e-4,
            aro_size_mbit_range: [0.1, 0.5],
            frame_width: 1280,
            frame_height: 720,
            bits_per_pixel: 8,
            pointer_bits: 0.0,
            radio: RadioParams::default(),
            gain_floor: 1e-6,
            omega_fore: 4.0,
            omega_back: 10.0,
            miss_penalty_ms: 20.0,
            k0_per_mhz2: 1e-15,
            mu: 0.5,
            frame_budget_ms: 133.2,
            epsilon: 0.5,
            big_u: 1e6,
            data_rates_mbps: (2..=8).collect(),
            ssim: vec![0.955, 0.968, 0.976, 0.982, 0.986, 0.989, 0.991],
        }
    }
}

impl GeneratorParams {
    /// Small instances that exhaustive enumeration can still cover: up to
    /// three requests stay within 30 primary binaries.
    pub fn desk(n_requests: usize) -> Self {
        Self {
            n_ecs: 2,
            n_requests,
            routers_per_ec: 1,
            region_fanout: 1,
            vm_slots: 3,
            n_models: 2,
            models_per_request: [1, 2],
            aros_per_model: if n_requests <= 2 { [1, 2] } else { [1, 1] },
            aro_pool_per_model: 6,
            data_rates_mbps: vec![2, 8],
            ssim: vec![0.955, 0.991],
            ..Self::default()
        }
    }

    /// Apply a JSON object of field overrides. Unknown keys are rejected.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self, InstanceError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut base = serde_json::to_value(self).expect("params serialize");
        let obj = base.as_object_mut().expect("params are an object");
        for (k, v) in overrides {
            if !obj.contains_key(k) {
                return Err(InstanceError::Parameter { name: k.clone(), reason: "unknown parameter".into() });
            }
            obj.insert(k.clone(), v.clone());
        }
        serde_json::from_value(base)
            .map_err(|e| InstanceError::Parameter { name: "overrides".into(), reason: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let fail =
            |name: &str, reason: &str| Err(InstanceError::Parameter { name: name.into(), reason: reason.into() });
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        if self.n_ecs == 0 {
            return fail("n_ecs", "must be at least 1");
        }
        if self.n_requests == 0 {
            return fail("n_requests", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mobility_mass) {
            return fail("mobility_mass", "must lie in [0,1]");
        }
        if self.routers_per_ec == 0 || self.region_fanout == 0 {
            return fail("routers_per_ec", "routers_per_ec and region_fanout must be positive");
        }
        if !(self.per_hop_ms >= 0.0) || !(self.cell_radius_m > 1.0) {
            return fail("per_hop_ms", "hop latency must be >= 0 and cell radius > 1 m");
        }
        if !range_ok(self.cpu_hz_range) || !range_ok(self.cache_mb_range) {
            return fail("cpu_hz_range", "CPU and cache ranges must be positive and ordered");
        }
        if self.cores_range[0] == 0 || self.cores_range[0] > self.cores_range[1] {
            return fail("cores_range", "must be positive and ordered");
        }
        if self.vm_slots == 0 {
            return fail("vm_slots", "must be at least 1");
        }
        if self.vm_cpu_hz.is_some_and(|f| !(f > 0.0)) {
            return fail("vm_cpu_hz", "must be positive");
        }
        let [m_lo, m_hi] = self.models_per_request;
        if self.n_models == 0 || m_lo == 0 || m_lo > m_hi || m_hi > self.n_models.min(4) {
            return fail("models_per_request", "need 1 <= lo <= hi <= min(n_models, 4)");
        }
        let [a_lo, a_hi] = self.aros_per_model;
        if a_lo == 0 || a_lo > a_hi || a_hi > self.aro_pool_per_model {
            return fail("aros_per_model", "need 1 <= lo <= hi <= aro_pool_per_model");
        }
        if !range_ok(self.back_size_mbit_range) || !range_ok(self.aro_size_mbit_range) {
            return fail("back_size_mbit_range", "size ranges must be positive and ordered");
        }
        if !(self.res_ratio >= 0.0) || !(self.pointer_bits >= 0.0) {
            return fail("res_ratio", "must be non-negative");
        }
        if self.frame_width == 0 || self.frame_height == 0 || self.bits_per_pixel == 0 {
            return fail("frame_width", "frame dimensions must be positive");
        }
        if !self.radio.is_valid() {
            return fail("radio", "must be positive with path-loss exponent >= 2");
        }
        if !(self.gain_floor > 0.0 && self.gain_floor < 0.5) {
            return fail("gain_floor", "must lie in (0, 0.5)");
        }
        if self.data_rates_mbps.is_empty() || self.data_rates_mbps.len() != self.ssim.len() {
            return fail("ssim", "needs one SSIM value per data rate");
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return fail("mu", "must lie in [0,1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail("epsilon", "must lie in (0,1)");
        }
        if !(self.frame_budget_ms > 0.0) {
            return fail("frame_budget_ms", "must be positive");
        }
        Ok(())
    }
}

/// Bits of a compressed foreground frame: `w h bpp (5/9) 1e-3`, rounded up.
pub fn fore_size(width: u64, height: u64, bits_per_pixel: u64) -> u64 {
    (width * height * bits_per_pixel * 5).div_ceil(9000)
}

/// Generate with the default parameters overridden by the arguments.
pub fn generate_instance(
    seed: u64,
    n_active_ecs: usize,
    n_requests: usize,
    mobility_mass: f64,
    overrides: &Map<String, Value>,
) -> Result<ScenarioInstance, InstanceError> {
    let params = GeneratorParams { n_ecs: n_active_ecs, n_requests, mobility_mass, ..Default::default() }
        .with_overrides(overrides)?;
    generate(seed, &params)
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn generate(seed: u64, p: &GeneratorParams) -> Result<ScenarioInstance, InstanceError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel_seed = rng.random::<u64>();
    let mut chan_rng = ChaCha8Rng::seed_from_u64(channel_seed);

    let topology = build_tree(p.n_ecs, p.routers_per_ec, p.region_fanout, p.per_hop_ms, p.cell_radius_m)?;

    let edge_clouds = (0..p.n_ecs)
        .map(|j| {
            let cpu_hz = uniform(&mut rng, p.cpu_hz_range);
            let cores = rng.random_range(p.cores_range[0]..=p.cores_range[1]);
            let cache_bits = uniform(&mut rng, p.cache_mb_range) * 8e6;
            let vm_cpu_hz = p.vm_cpu_hz.unwrap_or(cpu_hz * cores as f64 / p.vm_slots as f64);
            EdgeCloud { id: j, cpu_hz, cores, cache_bits, vm_slots: p.vm_slots, vm_cpu_hz }
        })
        .collect();

    let aros: Vec<Aro> = (0..p.n_models * p.aro_pool_per_model)
        .map(|l| Aro {
            id: l,
            model: l / p.aro_pool_per_model,
            size_bits: uniform(&mut rng, p.aro_size_mbit_range) * 1e6,
            ssim_table: None,
        })
        .collect();

    let fore_bits = fore_size(p.frame_width, p.frame_height, p.bits_per_pixel) as f64;
    let n_routers = topology.n_routers();
    let mut gain_resamples = 0u64;
    let mut requests = Vec::with_capacity(p.n_requests);
    let mut pool: Vec<Vec<usize>> =
        (0..p.n_models).map(|s| (s * p.aro_pool_per_model..(s + 1) * p.aro_pool_per_model).collect()).collect();
    for r in 0..p.n_requests {
        let origin = rng.random_range(0..n_routers);
        let home = &topology.routers[origin];
        // area-uniform position inside the origin cell, at least 1 m from the AP
        let rho = (p.cell_radius_m * rng.random::<f64>().sqrt()).max(1.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let (ux, uy) = (home.x_m + rho * theta.cos(), home.y_m + rho * theta.sin());

        let links = topology
            .routers
            .iter()
            .map(|ar| {
                let distance_m = (ar.x_m - ux).hypot(ar.y_m - uy).max(1.0);
                let gain = loop {
                    let g = ChannelSample::draw(&mut chan_rng).gain();
                    if g >= p.gain_floor {
                        break g;
                    }
                    gain_resamples += 1;
                };
                RadioLink { router: ar.id, distance_m, gain }
            })
            .collect();

        let mut mobility = BTreeMap::new();
        if p.mobility_mass > 0.0 {
            let adj = topology.neighbours(origin);
            let w: Vec<f64> = adj.iter().map(|_| 1.0 - rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            for (&k, wk) in adj.iter().zip(&w) {
                mobility.insert(k, p.mobility_mass * wk / total);
            }
        }

        let n_models = rng.random_range(p.models_per_request[0]..=p.models_per_request[1]);
        let n_aros = rng.random_range(p.aros_per_model[0]..=p.aros_per_model[1]);
        let mut chosen: Vec<usize> = sample(&mut rng, p.n_models, n_models).into_vec();
        chosen.sort_unstable();
        let mut models = Vec::with_capacity(chosen.len());
        for s in chosen {
            let back_bits = uniform(&mut rng, p.back_size_mbit_range) * 1e6;
            if pool[s].len() < n_aros {
                return Err(InstanceError::Parameter {
                    name: "aro_pool_per_model".into(),
                    reason: format!("model {s} ran out of unclaimed AROs at request {r}"),
                });
            }
            let mut idx = sample(&mut rng, pool[s].len(), n_aros).into_vec();
            let mut picked: Vec<usize> = idx.iter().map(|&i| pool[s][i]).collect();
            if p.exclusive_aros {
                idx.sort_unstable_by(|a, b| b.cmp(a));
                for i in idx {
                    pool[s].swap_remove(i);
                }
            }
            picked.sort_unstable();
            models.push(RequestModel { model: s, back_bits, res_bits: back_bits * p.res_ratio, aros: picked });
        }

        requests.push(Request {
            id: r,
            origin_router: origin,
            mobility,
            models,
            fore_bits,
            pointer_bits: p.pointer_bits,
            links,
        });
    }

    let data_rates_bps: Vec<u64> = p.data_rates_mbps.iter().map(|g| g * 1_000_000).collect();
    let ssim_table = data_rates_bps.iter().copied().zip(p.ssim.iter().copied()).collect();
    let constants = ServiceConstants {
        omega_fore_cycles_per_bit: p.omega_fore,
        omega_back_cycles_per_bit: p.omega_back,
        miss_penalty_ms: p.miss_penalty_ms,
        k0_per_mhz2: p.k0_per_mhz2,
        mu: p.mu,
        l_max_ms: 0.0,
        p_max_w: 0.0,
        q_max: 0.0,
        epsilon: p.epsilon,
        big_u: p.big_u,
        data_rates_bps,
        ssim_table,
    };

    let mut inst = ScenarioInstance {
        schema_version: SCHEMA_VERSION,
        seed,
        channel_seed,
        gain_resamples,
        generator: Some(p.clone()),
        topology,
        edge_clouds,
        n_models: p.n_models,
        aros,
        requests,
        radio: p.radio,
        constants,
    };
    inst.recompute_normalizers(p.frame_budget_ms);
    inst.validate()?;
    Ok(inst)
}
