//! Ground-truth metrics. Delay, power and quality are computed straight from
//! the product form of their definitions; the linearized forms used by the
//! integer program are exposed next to them so the two can be compared.

mod assignment;
mod layout;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::Violation;
use crate::instance::{Node, ScenarioInstance};
use crate::scalar::Scalar;

pub use assignment::{Assignment, Auxiliaries, PlacementSummary, RequestPlacement};
pub use layout::{Layout, RequestLayout, Target};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("infeasible assignment: {} violated constraint(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Infeasible(Vec<Violation>),
    #[error("request {request} does not select exactly one {what}")]
    NotOneHot { what: &'static str, request: usize },
    #[error("{metric} = {value} exceeds its normalizer {max}")]
    NormalizerExceeded { metric: &'static str, value: f64, max: f64 },
}

/// Every metric of one assignment. Latencies in ms, powers in W.
///
/// Flat so that it serializes to a single CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricBreakdown<T = f64> {
    pub wireless_ms: T,
    /// Router to compute-function EC.
    pub upstream_ms: T,
    pub compute_ms: T,
    pub matching_ms: T,
    /// Compute-function EC to matching-function EC.
    pub transfer_ms: T,
    /// Region server to the origin router.
    pub access_ms: T,
    pub miss_ms: T,
    pub sync_ms: T,
    pub mobility_ms: T,
    pub latency_ms: T,
    pub transmit_w: T,
    pub cpu_w: T,
    pub power_w: T,
    pub quality: T,
    pub objective: T,
}

impl<T: Scalar> MetricBreakdown<T> {
    fn add(&mut self, o: &Self) {
        self.wireless_ms = self.wireless_ms + o.wireless_ms;
        self.upstream_ms = self.upstream_ms + o.upstream_ms;
        self.compute_ms = self.compute_ms + o.compute_ms;
        self.matching_ms = self.matching_ms + o.matching_ms;
        self.transfer_ms = self.transfer_ms + o.transfer_ms;
        self.access_ms = self.access_ms + o.access_ms;
        self.miss_ms = self.miss_ms + o.miss_ms;
        self.sync_ms = self.sync_ms + o.sync_ms;
        self.mobility_ms = self.mobility_ms + o.mobility_ms;
        self.transmit_w = self.transmit_w + o.transmit_w;
        self.cpu_w = self.cpu_w + o.cpu_w;
        self.quality = self.quality + o.quality;
    }

    /// Sum of the latency sub-terms.
    pub fn latency_sum(&self) -> T {
        self.wireless_ms
            + self.upstream_ms
            + self.compute_ms
            + self.matching_ms
            + self.transfer_ms
            + self.access_ms
            + self.miss_ms
            + self.sync_ms
            + self.mobility_ms
    }

    pub fn cast<U: Scalar>(&self) -> MetricBreakdown<U> {
        let c = |v: T| U::of(v.as_f64());
        MetricBreakdown {
            wireless_ms: c(self.wireless_ms),
            upstream_ms: c(self.upstream_ms),
            compute_ms: c(self.compute_ms),
            matching_ms: c(self.matching_ms),
            transfer_ms: c(self.transfer_ms),
            access_ms: c(self.access_ms),
            miss_ms: c(self.miss_ms),
            sync_ms: c(self.sync_ms),
            mobility_ms: c(self.mobility_ms),
            latency_ms: c(self.latency_ms),
            transmit_w: c(self.transmit_w),
            cpu_w: c(self.cpu_w),
            power_w: c(self.power_w),
            quality: c(self.quality),
            objective: c(self.objective),
        }
    }
}

/// Normalized weighted objective.
pub fn weighted_objective<T: Scalar>(mu: T, l: T, q: T, p: T, l_max: T, q_max: T, p_max: T) -> T {
    let half = T::of(0.5);
    mu * half * (l / l_max - q / q_max) + (T::one() - mu) * p / p_max
}

#[derive(Debug, Clone)]
pub(crate) struct Prepared<T> {
    pub(crate) origin: usize,
    pub(crate) region: usize,
    /// `(router node, region node, probability)` per mobility destination.
    pub(crate) moves: Vec<(usize, usize, T)>,
    /// `1 + sum_k u_k`.
    pub(crate) mob_factor: T,
    pub(crate) fore: T,
    pub(crate) pointer: T,
    pub(crate) back: Vec<T>,
    /// Result-frame bits per wireless model.
    pub(crate) res: Vec<T>,
    pub(crate) sizes: Vec<T>,
    pub(crate) transmit: Vec<T>,
    pub(crate) ssim: Vec<T>,
    /// Region-sync latency of a model copy at each EC.
    pub(crate) sync: Vec<T>,
}

/// Prepared evaluation context for one instance.
#[derive(Debug, Clone)]
pub struct Evaluator<'a, T: Scalar = f64> {
    pub(crate) inst: &'a ScenarioInstance,
    pub(crate) layout: Layout,
    pub(crate) mu: T,
    pub(crate) req: Vec<Prepared<T>>,
    pub(crate) lat: Vec<Vec<T>>,
    pub(crate) vm_hz: Vec<T>,
    pub(crate) cpu_w: Vec<T>,
    pub(crate) rates: Vec<T>,
    pub(crate) l_max: T,
    pub(crate) p_max: T,
    pub(crate) q_max: T,
    pub(crate) miss_ms: T,
    pub(crate) omega_fore: T,
    pub(crate) omega_back: T,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(inst: &'a ScenarioInstance) -> Self {
        let layout = Layout::new(inst);
        let c = &inst.constants;
        let topo = &inst.topology;
        let lat: Vec<Vec<T>> =
            topo.wired_latency_ms.iter().map(|row| row.iter().map(|&v| T::of(v)).collect()).collect();
        let node = |n| topo.node_index(n);
        let req = inst
            .requests
            .iter()
            .enumerate()
            .map(|(r, q)| {
                let rl = &layout.requests[r];
                let region = node(Node::Region(topo.region(q.origin_router)));
                let moves: Vec<(usize, usize, T)> = q
                    .mobility
                    .iter()
                    .map(|(&k, &u)| (node(Node::Router(k)), node(Node::Region(topo.region(k))), T::of(u)))
                    .collect();
                let mob_factor = T::one() + moves.iter().fold(T::zero(), |acc, m| acc + m.2);
                let peers = inst.region_peers(r);
                let res = rl
                    .wireless
                    .iter()
                    .map(|&w| {
                        T::of(
                            peers
                                .iter()
                                .flat_map(|&t| inst.requests[t].models.iter())
                                .filter(|m| m.model == w)
                                .map(|m| m.res_bits)
                                .sum(),
                        )
                    })
                    .collect();
                let sync = (0..inst.n_ecs())
                    .map(|j| {
                        let ej = node(Node::Ec(j));
                        moves.iter().fold(lat[ej][region], |acc, &(_, g, u)| acc + u * lat[ej][g])
                    })
                    .collect();
                Prepared {
                    origin: node(Node::Router(q.origin_router)),
                    region,
                    mob_factor,
                    moves,
                    fore: T::of(q.fore_bits),
                    pointer: T::of(q.pointer_bits),
                    back: q.models.iter().map(|m| T::of(m.back_bits)).collect(),
                    res,
                    sizes: rl.targets.iter().map(|t| T::of(t.size_bits)).collect(),
                    transmit: c.data_rates_bps.iter().map(|&g| T::of(inst.transmit_power_w(r, g as f64))).collect(),
                    ssim: c
                        .data_rates_bps
                        .iter()
                        .map(|&g| T::of(rl.targets.iter().map(|t| inst.ssim(t.aro, g).unwrap_or(0.0)).sum()))
                        .collect(),
                    sync,
                }
            })
            .collect();
        Self {
            inst,
            layout,
            mu: T::of(c.mu),
            req,
            lat,
            vm_hz: inst.edge_clouds.iter().map(|e| T::of(e.vm_cpu_hz)).collect(),
            cpu_w: inst.edge_clouds.iter().map(|e| T::of(c.cpu_watts(e.vm_cpu_hz))).collect(),
            rates: c.data_rates_bps.iter().map(|&g| T::of(g as f64)).collect(),
            l_max: T::of(c.l_max_ms),
            p_max: T::of(c.p_max_w),
            q_max: T::of(c.q_max),
            miss_ms: T::of(c.miss_penalty_ms),
            omega_fore: T::of(c.omega_fore_cycles_per_bit),
            omega_back: T::of(c.omega_back_cycles_per_bit),
        }
    }

    /// Override the delay/power weight of the instance.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = T::of(mu);
        self
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn instance(&self) -> &'a ScenarioInstance {
        self.inst
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn ms(&self) -> T {
        T::of(1e3)
    }

    /// Processing delay of the compute-intensive function of `r` at `ec`.
    pub fn compute_delay_ms(&self, r: usize, ec: usize) -> T {
        self.omega_fore * self.req[r].fore / self.vm_hz[ec] * self.ms()
    }

    /// Processing delay of the matching function of `r` at `ec`, from the
    /// products `p * h` and `p`.
    pub fn matching_delay_ms(&self, r: usize, ec: usize, a: &Assignment) -> T {
        let pre = &self.req[r];
        let rl = &self.layout.requests[r];
        let p = &a.model_cached;
        let mut aros = T::zero();
        for (t, tg) in rl.targets.iter().enumerate() {
            if p[tg.model][ec] && a.aro_cached[r][t] {
                aros = aros + pre.sizes[t];
            }
        }
        let mut back = T::zero();
        for (m, &s) in rl.models.iter().enumerate() {
            if p[s][ec] {
                back = back + pre.back[m];
            }
        }
        self.omega_back * (pre.pointer + aros + back) / self.vm_hz[ec] * self.ms()
    }

    /// `W y` summed over ECs, written with the `alpha` and `lambda` auxiliaries.
    pub fn matching_delay_linear_ms(&self, r: usize, a: &Assignment) -> T {
        let pre = &self.req[r];
        let rl = &self.layout.requests[r];
        let mut total = T::zero();
        for j in 0..self.layout.n_ecs {
            let y = bit::<T>(a.matching[r][j]);
            let mut aros = T::zero();
            for t in 0..rl.targets.len() {
                aros = aros + bit::<T>(a.aux.lambda[r][t][j]) * pre.sizes[t];
            }
            let mut back = T::zero();
            for m in 0..rl.models.len() {
                back = back + bit::<T>(a.aux.alpha[r][m][j]) * pre.back[m];
            }
            total = total + self.omega_back * (pre.pointer * y + aros + back) / self.vm_hz[j] * self.ms();
        }
        total
    }

    /// Wireless delay of `r` at rate index `g`, including the expected
    /// re-transmission after a mobility event.
    pub fn wireless_delay_ms(&self, r: usize, g: usize, a: &Assignment) -> T {
        let pre = &self.req[r];
        let mut bits = pre.fore;
        for (w, &s) in self.layout.requests[r].wireless.iter().enumerate() {
            for j in 0..self.layout.n_ecs {
                if a.model_cached[s][j] {
                    bits = bits + pre.res[w];
                }
            }
        }
        pre.mob_factor * (bits / self.rates[g]) * self.ms()
    }

    /// Wireless delay written as a sum over rates with `e` and `phi`.
    pub fn wireless_delay_linear_ms(&self, r: usize, a: &Assignment) -> T {
        let pre = &self.req[r];
        let rl = &self.layout.requests[r];
        let mut total = T::zero();
        for g in 0..self.layout.n_rates {
            let mut bits = pre.fore * bit::<T>(a.rate[r][g]);
            for w in 0..rl.wireless.len() {
                for j in 0..self.layout.n_ecs {
                    bits = bits + bit::<T>(a.aux.phi[r][w][j][g]) * pre.res[w];
                }
            }
            total = total + pre.mob_factor * (bits / self.rates[g]) * self.ms();
        }
        total
    }

    /// Contribution of request `r` to the delay, power and quality sums.
    pub fn request_metrics(&self, r: usize, a: &Assignment) -> Result<MetricBreakdown<T>, EvalError> {
        let i = a.compute_ec(r).ok_or(EvalError::NotOneHot { what: "compute EC", request: r })?;
        let j = a.matching_ec(r).ok_or(EvalError::NotOneHot { what: "matching EC", request: r })?;
        let g = a.rate_index(r).ok_or(EvalError::NotOneHot { what: "data rate", request: r })?;
        let pre = &self.req[r];
        let node = |n| self.inst.topology.node_index(n);
        let (ei, ej) = (node(Node::Ec(i)), node(Node::Ec(j)));
        let compute_ms = self.compute_delay_ms(r, i);
        let matching_ms = self.matching_delay_ms(r, j, a);
        let mut sync_ms = T::zero();
        for &s in &self.layout.requests[r].models {
            for k in 0..self.layout.n_ecs {
                if a.model_cached[s][k] {
                    sync_ms = sync_ms + pre.sync[k];
                }
            }
        }
        let mobility_ms =
            pre.moves.iter().fold(T::zero(), |acc, &(k, gk, u)| acc + u * (self.lat[gk][k] + self.lat[k][ei]));
        let to_s = T::of(1e-3);
        Ok(MetricBreakdown {
            wireless_ms: self.wireless_delay_ms(r, g, a),
            upstream_ms: self.lat[pre.origin][ei],
            compute_ms,
            matching_ms,
            transfer_ms: self.lat[ei][ej],
            access_ms: self.lat[pre.region][pre.origin],
            miss_ms: if a.aux.miss[r][j] { self.miss_ms } else { T::zero() },
            sync_ms,
            mobility_ms,
            transmit_w: pre.transmit[g],
            cpu_w: self.cpu_w[i] * compute_ms * to_s + self.cpu_w[j] * matching_ms * to_s,
            quality: pre.ssim[g],
            ..Default::default()
        })
    }

    /// Metrics without the feasibility audit or normalizer checks. The
    /// auxiliaries are trusted only for the hit/miss indicator.
    pub fn metrics_unchecked(&self, a: &Assignment) -> Result<MetricBreakdown<T>, EvalError> {
        let mut total = MetricBreakdown::default();
        for r in 0..self.layout.n_requests() {
            total.add(&self.request_metrics(r, a)?);
        }
        total.latency_ms = total.latency_sum();
        total.power_w = total.transmit_w + total.cpu_w;
        total.objective = self.objective_of(total.latency_ms, total.quality, total.power_w);
        Ok(total)
    }

    pub fn objective_of(&self, latency_ms: T, quality: T, power_w: T) -> T {
        weighted_objective(self.mu, latency_ms, quality, power_w, self.l_max, self.q_max, self.p_max)
    }

    /// Audited metrics: fails with the violation list on an infeasible assignment.
    pub fn evaluate(&self, a: &Assignment) -> Result<MetricBreakdown<T>, EvalError> {
        let v = a.audit(self.inst, &self.layout);
        if !v.is_empty() {
            return Err(EvalError::Infeasible(v));
        }
        self.metrics_unchecked(a)
    }

    /// Audited objective that also requires every metric within its normalizer.
    pub fn objective(&self, a: &Assignment) -> Result<T, EvalError> {
        let m = self.evaluate(a)?;
        for (metric, value, max) in [
            ("latency", m.latency_ms, self.l_max),
            ("power", m.power_w, self.p_max),
            ("quality", m.quality, self.q_max),
        ] {
            if value > max {
                return Err(EvalError::NormalizerExceeded { metric, value: value.as_f64(), max: max.as_f64() });
            }
        }
        Ok(m.objective)
    }

    /// Objective without audit or range checks; what the solvers minimize.
    pub fn objective_unchecked(&self, a: &Assignment) -> Result<T, EvalError> {
        Ok(self.metrics_unchecked(a)?.objective)
    }

    /// Share of request `r` in the objective. The objective is the sum of
    /// these shares up to rounding.
    pub fn request_objective(&self, r: usize, a: &Assignment) -> Result<T, EvalError> {
        let m = self.request_metrics(r, a)?;
        Ok(self.objective_of(m.latency_sum(), m.quality, m.transmit_w + m.cpu_w))
    }

    /// Part of the objective that depends on the rate of `r` alone, for a
    /// fixed placement and cache.
    pub fn rate_contribution(&self, r: usize, g: usize, a: &Assignment) -> T {
        let pre = &self.req[r];
        let half = T::of(0.5);
        self.mu * half * (self.wireless_delay_ms(r, g, a) / self.l_max - pre.ssim[g] / self.q_max)
            + (T::one() - self.mu) * pre.transmit[g] / self.p_max
    }
}

#[inline]
fn bit<T: Scalar>(v: bool) -> T {
    if v {
        T::one()
    } else {
        T::zero()
    }
}
