//! The linearized 0-1 program: variable index space, constraint rows,
//! objective coefficients, point codec and LP-format export.

mod lp;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraint::{AuxKind, ConstraintFamily, ProductRow};
use crate::evaluator::{Assignment, Evaluator, Layout};
use crate::instance::{save_instance, Node, ScenarioInstance};

pub use lp::{export_lp, parse_lp, LpError, ParsedLp, ParsedRow};

/// Largest variable count a model may have.
pub const MAX_VARIABLES: usize = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IlpError {
    #[error("model would need {needed} variables (limit {limit})")]
    TooLarge { needed: usize, limit: usize },
    #[error("point has {found} entries, model has {expected} variables")]
    Length { found: usize, expected: usize },
    #[error("inconsistent point: `{name}` is {found} but its definition gives {expected}")]
    Inconsistent { name: String, found: bool, expected: bool },
}

/// Index tuple of a variable. Slots (`m`, `t`, `w`) index into the
/// request's model, target and wireless-model lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKey {
    X { r: usize, j: usize },
    Y { r: usize, j: usize },
    P { s: usize, j: usize },
    H { r: usize, t: usize },
    E { r: usize, g: usize },
    Z { r: usize, j: usize },
    Q { r: usize, j: usize },
    Alpha { r: usize, m: usize, j: usize },
    Beta { r: usize, t: usize, j: usize },
    Lambda { r: usize, t: usize, j: usize },
    Phi { r: usize, w: usize, j: usize, g: usize },
    Psi { r: usize, j: usize },
    Xi { r: usize, i: usize, j: usize },
}

impl VarKey {
    pub fn is_primary(&self) -> bool {
        matches!(self, Self::X { .. } | Self::Y { .. } | Self::P { .. } | Self::H { .. } | Self::E { .. })
    }

    /// Stable LP name derived from the indices, with model and ARO ids
    /// in place of slots.
    pub fn name(&self, layout: &Layout) -> String {
        let rl = |r: usize| &layout.requests[r];
        match *self {
            Self::X { r, j } => format!("x_r{r}_j{j}"),
            Self::Y { r, j } => format!("y_r{r}_j{j}"),
            Self::P { s, j } => format!("p_s{s}_j{j}"),
            Self::H { r, t } => {
                let tg = rl(r).targets[t];
                format!("h_r{r}_s{}_l{}", tg.model, tg.aro)
            }
            Self::E { r, g } => format!("e_r{r}_g{g}"),
            Self::Z { r, j } => format!("z_r{r}_j{j}"),
            Self::Q { r, j } => format!("q_r{r}_j{j}"),
            Self::Alpha { r, m, j } => format!("alpha_r{r}_s{}_j{j}", rl(r).models[m]),
            Self::Beta { r, t, j } => {
                let tg = rl(r).targets[t];
                format!("beta_r{r}_s{}_l{}_j{j}", tg.model, tg.aro)
            }
            Self::Lambda { r, t, j } => {
                let tg = rl(r).targets[t];
                format!("lambda_r{r}_s{}_l{}_j{j}", tg.model, tg.aro)
            }
            Self::Phi { r, w, j, g } => format!("phi_r{r}_s{}_j{j}_g{g}", rl(r).wireless[w]),
            Self::Psi { r, j } => format!("psi_r{r}_j{j}"),
            Self::Xi { r, i, j } => format!("xi_r{r}_i{i}_j{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub key: VarKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Le => "<=",
            Self::Ge => ">=",
            Self::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Self::Le => lhs <= rhs + tol,
            Self::Ge => lhs >= rhs - tol,
            Self::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub family: ConstraintFamily,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, point: &[bool]) -> f64 {
        self.terms.iter().filter(|(v, _)| point[*v]).map(|(_, c)| c).sum()
    }
}

/// How an auxiliary variable follows from earlier variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AuxRule {
    /// `v = a AND b`
    Product(usize, usize),
    /// `v = [number of true terms >= threshold]`
    Threshold { terms: Vec<usize>, threshold: usize },
    /// `v = NOT a`
    Complement(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxDef {
    pub var: usize,
    pub rule: AuxRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// SHA-256 of the instance document.
    pub instance_sha256: String,
    pub mu: f64,
    pub l_max_ms: f64,
    pub p_max_w: f64,
    pub q_max: f64,
}

/// The complete linearized program of one instance.
#[derive(Debug, Clone)]
pub struct IlpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<f64>,
    pub constant: f64,
    /// Auxiliary definitions in dependency order.
    pub aux: Vec<AuxDef>,
    pub meta: ModelMeta,
    pub layout: Layout,
    index: HashMap<VarKey, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarMapEntry {
    pub index: usize,
    pub name: String,
    pub primary: bool,
    pub key: VarKey,
}

/// Variable and row counts per kind and family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub variables: usize,
    pub primaries: usize,
    pub rows: usize,
    pub variables_by_kind: Vec<(String, usize)>,
    pub rows_by_family: Vec<(String, usize)>,
}

fn kind_name(k: &VarKey) -> &'static str {
    match k {
        VarKey::X { .. } => "x",
        VarKey::Y { .. } => "y",
        VarKey::P { .. } => "p",
        VarKey::H { .. } => "h",
        VarKey::E { .. } => "e",
        VarKey::Z { .. } => "z",
        VarKey::Q { .. } => "q",
        VarKey::Alpha { .. } => "alpha",
        VarKey::Beta { .. } => "beta",
        VarKey::Lambda { .. } => "lambda",
        VarKey::Phi { .. } => "phi",
        VarKey::Psi { .. } => "psi",
        VarKey::Xi { .. } => "xi",
    }
}

struct Builder<'l> {
    layout: &'l Layout,
    vars: Vec<Variable>,
    index: HashMap<VarKey, usize>,
    rows: Vec<Row>,
}

impl Builder<'_> {
    fn var(&mut self, key: VarKey) -> usize {
        let id = self.vars.len();
        self.vars.push(Variable { name: key.name(self.layout), key });
        self.index.insert(key, id);
        id
    }

    fn row(&mut self, family: ConstraintFamily, idx: &[usize], terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        let suffix: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        let name = if suffix.is_empty() { family.to_string() } else { format!("{family}_{}", suffix.join("_")) };
        self.rows.push(Row { name, family, terms, cmp, rhs });
    }

    fn product(&mut self, kind: AuxKind, idx: &[usize], w: usize, a: usize, b: usize) {
        self.row(ConstraintFamily::Product(kind, ProductRow::LeFirst), idx, vec![(w, 1.0), (a, -1.0)], Cmp::Le, 0.0);
        self.row(ConstraintFamily::Product(kind, ProductRow::LeSecond), idx, vec![(w, 1.0), (b, -1.0)], Cmp::Le, 0.0);
        self.row(
            ConstraintFamily::Product(kind, ProductRow::GeSum),
            idx,
            vec![(w, 1.0), (a, -1.0), (b, -1.0)],
            Cmp::Ge,
            -1.0,
        );
    }
}

fn census_size(layout: &Layout) -> usize {
    let (m, g) = (layout.n_ecs, layout.n_rates);
    let per_request: usize = layout
        .requests
        .iter()
        .map(|rl| {
            let (nm, nt, nw) = (rl.models.len(), rl.targets.len(), rl.wireless.len());
            2 * m + nt + g + 2 * m + nm * m + 2 * nt * m + nw * m * g + m + m * m
        })
        .sum();
    per_request + layout.used_models.len() * m
}

impl IlpModel {
    /// Build the program for `inst` with delay/power weight `mu`.
    pub fn build(inst: &ScenarioInstance, mu: f64) -> Result<Self, IlpError> {
        let ev = Evaluator::<f64>::new(inst).with_mu(mu);
        let layout = ev.layout().clone();
        let needed = census_size(&layout);
        if needed > MAX_VARIABLES {
            return Err(IlpError::TooLarge { needed, limit: MAX_VARIABLES });
        }
        let (m, ng) = (layout.n_ecs, layout.n_rates);
        let nr = layout.n_requests();
        let mut b =
            Builder { layout: &layout, vars: Vec::with_capacity(needed), index: HashMap::new(), rows: Vec::new() };

        // primaries
        let x: Vec<Vec<usize>> = (0..nr).map(|r| (0..m).map(|j| b.var(VarKey::X { r, j })).collect()).collect();
        let y: Vec<Vec<usize>> = (0..nr).map(|r| (0..m).map(|j| b.var(VarKey::Y { r, j })).collect()).collect();
        let mut p: Vec<Option<Vec<usize>>> = vec![None; layout.n_models];
        for &s in &layout.used_models {
            p[s] = Some((0..m).map(|j| b.var(VarKey::P { s, j })).collect());
        }
        let pv = |s: usize, j: usize| p[s].as_ref().expect("model in use")[j];
        let h: Vec<Vec<usize>> = layout
            .requests
            .iter()
            .enumerate()
            .map(|(r, rl)| (0..rl.targets.len()).map(|t| b.var(VarKey::H { r, t })).collect())
            .collect();
        let e: Vec<Vec<usize>> = (0..nr).map(|r| (0..ng).map(|g| b.var(VarKey::E { r, g })).collect()).collect();

        // auxiliaries, in dependency order
        let mut aux = Vec::new();
        let mut beta = Vec::with_capacity(nr);
        let mut alpha = Vec::with_capacity(nr);
        let mut lambda = Vec::with_capacity(nr);
        let mut phi = Vec::with_capacity(nr);
        let mut xi = Vec::with_capacity(nr);
        let mut z = Vec::with_capacity(nr);
        let mut q = Vec::with_capacity(nr);
        let mut psi = Vec::with_capacity(nr);
        for (r, rl) in layout.requests.iter().enumerate() {
            let br: Vec<Vec<usize>> = rl
                .targets
                .iter()
                .enumerate()
                .map(|(t, tg)| {
                    (0..m)
                        .map(|j| {
                            let v = b.var(VarKey::Beta { r, t, j });
                            aux.push(AuxDef { var: v, rule: AuxRule::Product(pv(tg.model, j), h[r][t]) });
                            v
                        })
                        .collect()
                })
                .collect();
            let ar: Vec<Vec<usize>> = rl
                .models
                .iter()
                .enumerate()
                .map(|(mi, &s)| {
                    (0..m)
                        .map(|j| {
                            let v = b.var(VarKey::Alpha { r, m: mi, j });
                            aux.push(AuxDef { var: v, rule: AuxRule::Product(pv(s, j), y[r][j]) });
                            v
                        })
                        .collect()
                })
                .collect();
            let lr: Vec<Vec<usize>> = rl
                .targets
                .iter()
                .enumerate()
                .map(|(t, tg)| {
                    (0..m)
                        .map(|j| {
                            let v = b.var(VarKey::Lambda { r, t, j });
                            aux.push(AuxDef { var: v, rule: AuxRule::Product(ar[tg.slot][j], br[t][j]) });
                            v
                        })
                        .collect()
                })
                .collect();
            let fr: Vec<Vec<Vec<usize>>> = rl
                .wireless
                .iter()
                .enumerate()
                .map(|(w, &s)| {
                    (0..m)
                        .map(|j| {
                            (0..ng)
                                .map(|g| {
                                    let v = b.var(VarKey::Phi { r, w, j, g });
                                    aux.push(AuxDef { var: v, rule: AuxRule::Product(e[r][g], pv(s, j)) });
                                    v
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let xr: Vec<Vec<usize>> = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            let v = b.var(VarKey::Xi { r, i, j });
                            aux.push(AuxDef { var: v, rule: AuxRule::Product(x[r][i], y[r][j]) });
                            v
                        })
                        .collect()
                })
                .collect();
            let zr: Vec<usize> = (0..m)
                .map(|j| {
                    let v = b.var(VarKey::Z { r, j });
                    let terms = (0..rl.targets.len()).map(|t| br[t][j]).collect();
                    aux.push(AuxDef { var: v, rule: AuxRule::Threshold { terms, threshold: rl.threshold } });
                    v
                })
                .collect();
            let qr: Vec<usize> = (0..m)
                .map(|j| {
                    let v = b.var(VarKey::Q { r, j });
                    aux.push(AuxDef { var: v, rule: AuxRule::Complement(zr[j]) });
                    v
                })
                .collect();
            let sr: Vec<usize> = (0..m)
                .map(|j| {
                    let v = b.var(VarKey::Psi { r, j });
                    aux.push(AuxDef { var: v, rule: AuxRule::Product(qr[j], y[r][j]) });
                    v
                })
                .collect();
            beta.push(br);
            alpha.push(ar);
            lambda.push(lr);
            phi.push(fr);
            xi.push(xr);
            z.push(zr);
            q.push(qr);
            psi.push(sr);
        }

        // constraint rows
        use ConstraintFamily as F;
        let c = &inst.constants;
        let mut by_aro: Vec<Vec<usize>> = vec![Vec::new(); inst.aros.len()];
        for (r, rl) in layout.requests.iter().enumerate() {
            for (t, tg) in rl.targets.iter().enumerate() {
                by_aro[tg.aro].push(h[r][t]);
            }
        }
        for (l, hs) in by_aro.iter().enumerate() {
            if !hs.is_empty() {
                b.row(F::AroOnce, &[l], hs.iter().map(|&v| (v, 1.0)).collect(), Cmp::Le, 1.0);
            }
        }
        for (r, rl) in layout.requests.iter().enumerate() {
            b.row(F::ComputeOnce, &[r], x[r].iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
            b.row(F::MatchingOnce, &[r], y[r].iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
            b.row(F::RateUnique, &[r], e[r].iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
            b.row(F::MinOneAro, &[r], h[r].iter().map(|&v| (v, 1.0)).collect(), Cmp::Ge, 1.0);
            for (t, tg) in rl.targets.iter().enumerate() {
                let mut terms: Vec<(usize, f64)> = (0..m).map(|j| (pv(tg.model, j), 1.0)).collect();
                terms.push((h[r][t], -1.0));
                b.row(F::AroNeedsModel, &[r, t], terms, Cmp::Ge, 0.0);
                let mut terms: Vec<(usize, f64)> = (0..m).map(|j| (beta[r][t][j], 1.0)).collect();
                terms.push((h[r][t], -1.0));
                b.row(F::AroModelLink, &[r, t], terms, Cmp::Ge, 0.0);
            }
            let thr = rl.threshold as f64;
            for j in 0..m {
                let count: Vec<(usize, f64)> = (0..rl.targets.len()).map(|t| (beta[r][t][j], 1.0)).collect();
                let mut big = count.clone();
                big.push((q[r][j], c.big_u));
                b.row(F::HitBigU, &[r, j], big, Cmp::Le, thr + c.big_u - c.epsilon);
                let mut mirror = count;
                mirror.push((z[r][j], -thr));
                b.row(F::HitMirror, &[r, j], mirror, Cmp::Ge, 0.0);
                b.row(F::HitMissComplement, &[r, j], vec![(z[r][j], 1.0), (q[r][j], 1.0)], Cmp::Eq, 1.0);
            }
        }
        for (j, ec) in inst.edge_clouds.iter().enumerate() {
            let terms = (0..nr).flat_map(|r| [(x[r][j], 1.0), (y[r][j], 1.0)]).collect();
            b.row(F::VmCapacity, &[j], terms, Cmp::Le, ec.vm_slots as f64);
            let terms = layout
                .requests
                .iter()
                .enumerate()
                .flat_map(|(r, rl)| rl.targets.iter().enumerate().map(move |(t, tg)| (r, t, tg.size_bits)))
                .map(|(r, t, size)| (beta[r][t][j], size))
                .collect();
            b.row(F::CacheCapacity, &[j], terms, Cmp::Le, ec.cache_bits);
        }
        for (r, rl) in layout.requests.iter().enumerate() {
            for j in 0..m {
                for (mi, &s) in rl.models.iter().enumerate() {
                    b.product(AuxKind::Alpha, &[r, mi, j], alpha[r][mi][j], pv(s, j), y[r][j]);
                }
                for (t, tg) in rl.targets.iter().enumerate() {
                    b.product(AuxKind::Beta, &[r, t, j], beta[r][t][j], pv(tg.model, j), h[r][t]);
                    b.product(AuxKind::Lambda, &[r, t, j], lambda[r][t][j], alpha[r][tg.slot][j], beta[r][t][j]);
                }
                for (w, &s) in rl.wireless.iter().enumerate() {
                    for g in 0..ng {
                        b.product(AuxKind::Phi, &[r, w, j, g], phi[r][w][j][g], e[r][g], pv(s, j));
                    }
                }
                b.product(AuxKind::Psi, &[r, j], psi[r][j], q[r][j], y[r][j]);
                for i in 0..m {
                    b.product(AuxKind::Xi, &[r, i, j], xi[r][i][j], x[r][i], y[r][j]);
                }
            }
        }

        // objective
        let mut obj = vec![0.0; b.vars.len()];
        let mut constant = 0.0;
        let wl = mu / 2.0 / ev.l_max;
        let wq = -mu / 2.0 / ev.q_max;
        let wp = (1.0 - mu) / ev.p_max;
        let ms = 1e3;
        let node = |n| inst.topology.node_index(n);
        for (r, rl) in layout.requests.iter().enumerate() {
            let pre = &ev.req[r];
            for g in 0..ng {
                let rate = ev.rates[g];
                obj[e[r][g]] +=
                    wl * (pre.mob_factor * (pre.fore / rate) * ms) + wp * pre.transmit[g] + wq * pre.ssim[g];
                for (w, _) in rl.wireless.iter().enumerate() {
                    for j in 0..m {
                        obj[phi[r][w][j][g]] += wl * (pre.mob_factor * (pre.res[w] / rate) * ms);
                    }
                }
            }
            for i in 0..m {
                let ei = node(Node::Ec(i));
                let v = ev.compute_delay_ms(r, i);
                let tail: f64 = pre.moves.iter().map(|&(k, _, u)| u * ev.lat[k][ei]).sum();
                obj[x[r][i]] += wl * (ev.lat[pre.origin][ei] + v + tail) + wp * ev.cpu_w[i] * v / ms;
            }
            for j in 0..m {
                let per_bit = ev.omega_back / ev.vm_hz[j] * ms;
                let cpu = wp * ev.cpu_w[j] / ms;
                obj[y[r][j]] += (wl + cpu) * per_bit * pre.pointer;
                for (t, _) in rl.targets.iter().enumerate() {
                    obj[lambda[r][t][j]] += (wl + cpu) * per_bit * pre.sizes[t];
                }
                for mi in 0..rl.models.len() {
                    obj[alpha[r][mi][j]] += (wl + cpu) * per_bit * pre.back[mi];
                }
                for i in 0..m {
                    obj[xi[r][i][j]] += wl * ev.lat[node(Node::Ec(i))][node(Node::Ec(j))];
                }
                obj[psi[r][j]] += wl * ev.miss_ms;
                for &s in &rl.models {
                    obj[pv(s, j)] += wl * pre.sync[j];
                }
            }
            let moves: f64 = pre.moves.iter().map(|&(k, gk, u)| u * ev.lat[gk][k]).sum();
            constant += wl * (ev.lat[pre.region][pre.origin] + moves);
        }

        let meta = ModelMeta {
            instance_sha256: hex_digest(save_instance(inst).as_bytes()),
            mu,
            l_max_ms: c.l_max_ms,
            p_max_w: c.p_max_w,
            q_max: c.q_max,
        };
        let Builder { vars, index, rows, .. } = b;
        Ok(Self { vars, rows, objective: obj, constant, aux, meta, layout, index })
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, key: &VarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn census(&self) -> Census {
        let mut kinds: Vec<(String, usize)> = Vec::new();
        for v in &self.vars {
            let k = kind_name(&v.key);
            match kinds.iter_mut().find(|(n, _)| n == k) {
                Some(e) => e.1 += 1,
                None => kinds.push((k.to_string(), 1)),
            }
        }
        let mut fams: Vec<(String, usize)> = Vec::new();
        for f in ConstraintFamily::model_families() {
            let n = self.rows.iter().filter(|r| r.family == f).count();
            fams.push((f.to_string(), n));
        }
        Census {
            variables: self.vars.len(),
            primaries: self.vars.iter().filter(|v| v.key.is_primary()).count(),
            rows: self.rows.len(),
            variables_by_kind: kinds,
            rows_by_family: fams,
        }
    }

    /// Objective value at a 0/1 point.
    pub fn objective_at(&self, point: &[bool]) -> f64 {
        self.constant + self.objective.iter().zip(point).filter(|(_, &v)| v).map(|(c, _)| c).sum::<f64>()
    }

    /// Rows violated at `point` beyond `tol`.
    pub fn violated_rows(&self, point: &[bool], tol: f64) -> Vec<&Row> {
        self.rows.iter().filter(|r| !r.cmp.holds(r.activity(point), r.rhs, tol)).collect()
    }

    /// Fill every auxiliary entry of `point` from its definition.
    pub fn complete(&self, point: &mut [bool]) {
        for d in &self.aux {
            point[d.var] = self.rule_value(&d.rule, point);
        }
    }

    fn rule_value(&self, rule: &AuxRule, point: &[bool]) -> bool {
        match rule {
            AuxRule::Product(a, b) => point[*a] && point[*b],
            AuxRule::Threshold { terms, threshold } => terms.iter().filter(|&&v| point[v]).count() >= *threshold,
            AuxRule::Complement(a) => !point[*a],
        }
    }

    pub fn encode(&self, a: &Assignment) -> Vec<bool> {
        self.vars
            .iter()
            .map(|v| match v.key {
                VarKey::X { r, j } => a.compute[r][j],
                VarKey::Y { r, j } => a.matching[r][j],
                VarKey::P { s, j } => a.model_cached[s][j],
                VarKey::H { r, t } => a.aro_cached[r][t],
                VarKey::E { r, g } => a.rate[r][g],
                VarKey::Z { r, j } => a.aux.hit[r][j],
                VarKey::Q { r, j } => a.aux.miss[r][j],
                VarKey::Alpha { r, m, j } => a.aux.alpha[r][m][j],
                VarKey::Beta { r, t, j } => a.aux.beta[r][t][j],
                VarKey::Lambda { r, t, j } => a.aux.lambda[r][t][j],
                VarKey::Phi { r, w, j, g } => a.aux.phi[r][w][j][g],
                VarKey::Psi { r, j } => a.aux.psi[r][j],
                VarKey::Xi { r, i, j } => a.aux.xi[r][i][j],
            })
            .collect()
    }

    /// Assignment of a point. Auxiliaries are recomputed from the primaries
    /// and must match the point.
    pub fn decode(&self, point: &[bool]) -> Result<Assignment, IlpError> {
        if point.len() != self.vars.len() {
            return Err(IlpError::Length { found: point.len(), expected: self.vars.len() });
        }
        let mut a = Assignment::empty(&self.layout);
        for (v, &val) in self.vars.iter().zip(point) {
            match v.key {
                VarKey::X { r, j } => a.compute[r][j] = val,
                VarKey::Y { r, j } => a.matching[r][j] = val,
                VarKey::P { s, j } => a.model_cached[s][j] = val,
                VarKey::H { r, t } => a.aro_cached[r][t] = val,
                VarKey::E { r, g } => a.rate[r][g] = val,
                _ => {}
            }
        }
        a.derive_auxiliaries(&self.layout);
        let expected = self.encode(&a);
        if let Some(i) = (0..point.len()).find(|&i| point[i] != expected[i]) {
            return Err(IlpError::Inconsistent {
                name: self.vars[i].name.clone(),
                found: point[i],
                expected: expected[i],
            });
        }
        Ok(a)
    }

    /// Companion document mapping names to index tuples.
    pub fn variable_map(&self) -> Vec<VarMapEntry> {
        self.vars
            .iter()
            .enumerate()
            .map(|(index, v)| VarMapEntry { index, name: v.name.clone(), primary: v.key.is_primary(), key: v.key })
            .collect()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests;
