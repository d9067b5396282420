use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Method, SolveReport, SolveStatus, TOLERANCE};
use crate::evaluator::Assignment;
use crate::ilp::{AuxRule, Cmp, IlpModel, VarKey};

/// Search limits of [`solve_exact`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub time_limit_s: Option<f64>,
    /// Worker threads. One searches sequentially, which keeps node counts
    /// reproducible.
    pub threads: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_nodes: None, time_limit_s: None, threads: 1 }
    }
}

const UNKNOWN: i8 = -1;

#[derive(Debug, Clone)]
pub(crate) enum Step {
    /// Exactly one member is set.
    Group(Vec<usize>),
    Bit(usize),
}

impl Step {
    pub(crate) fn choices(&self) -> usize {
        match self {
            Step::Group(v) => v.len(),
            Step::Bit(_) => 2,
        }
    }
}

/// Node evaluation for the depth-first search. A node is a vector over all
/// model variables holding 0, 1 or [`UNKNOWN`]; primaries are set by
/// branching and auxiliaries follow from their definitions.
pub(crate) struct Search<'m> {
    model: &'m IlpModel,
    pub(crate) steps: Vec<Step>,
    primary: Vec<bool>,
    rule: Vec<Option<usize>>,
    in_group: Vec<bool>,
    costed: Vec<usize>,
}

impl<'m> Search<'m> {
    pub(crate) fn new(model: &'m IlpModel) -> Self {
        let n = model.n_vars();
        let layout = &model.layout;
        let idx = |k: VarKey| model.var_index(&k).expect("variable exists");
        let mut order: Vec<usize> = (0..layout.n_requests()).collect();
        let bytes = |r: usize| layout.requests[r].targets.iter().map(|t| t.size_bits).sum::<f64>();
        order.sort_by(|&a, &b| bytes(b).total_cmp(&bytes(a)).then(a.cmp(&b)));

        let mut steps = Vec::new();
        let mut model_done = vec![false; layout.n_models];
        for &r in &order {
            let rl = &layout.requests[r];
            steps.push(Step::Group((0..layout.n_rates).map(|g| idx(VarKey::E { r, g })).collect()));
            for &s in &rl.models {
                if !std::mem::replace(&mut model_done[s], true) {
                    steps.extend((0..layout.n_ecs).map(|j| Step::Bit(idx(VarKey::P { s, j }))));
                }
            }
            steps.extend((0..rl.targets.len()).map(|t| Step::Bit(idx(VarKey::H { r, t }))));
            steps.push(Step::Group((0..layout.n_ecs).map(|j| idx(VarKey::Y { r, j })).collect()));
            steps.push(Step::Group((0..layout.n_ecs).map(|j| idx(VarKey::X { r, j })).collect()));
        }

        let mut rule = vec![None; n];
        for (k, d) in model.aux.iter().enumerate() {
            rule[d.var] = Some(k);
        }
        let mut in_group = vec![false; n];
        for s in &steps {
            if let Step::Group(v) = s {
                v.iter().for_each(|&i| in_group[i] = true);
            }
        }
        Self {
            model,
            steps,
            primary: model.vars.iter().map(|v| v.key.is_primary()).collect(),
            rule,
            in_group,
            costed: (0..n).filter(|&v| model.objective[v] != 0.0).collect(),
        }
    }

    pub(crate) fn root(&self) -> Vec<i8> {
        vec![UNKNOWN; self.model.n_vars()]
    }

    pub(crate) fn apply(&self, state: &mut [i8], step: usize, choice: usize) {
        match &self.steps[step] {
            Step::Group(members) => {
                for (k, &v) in members.iter().enumerate() {
                    state[v] = i8::from(k == choice);
                }
            }
            Step::Bit(v) => state[*v] = choice as i8,
        }
    }

    fn propagate(&self, state: &mut [i8]) {
        for d in &self.model.aux {
            state[d.var] = match &d.rule {
                AuxRule::Product(a, b) => match (state[*a], state[*b]) {
                    (0, _) | (_, 0) => 0,
                    (1, 1) => 1,
                    _ => UNKNOWN,
                },
                AuxRule::Threshold { terms, threshold } => {
                    let ones = terms.iter().filter(|&&v| state[v] == 1).count();
                    let open = terms.iter().filter(|&&v| state[v] == UNKNOWN).count();
                    if ones >= *threshold {
                        1
                    } else if ones + open < *threshold {
                        0
                    } else {
                        UNKNOWN
                    }
                }
                AuxRule::Complement(a) => match state[*a] {
                    UNKNOWN => UNKNOWN,
                    v => 1 - v,
                },
            };
        }
    }

    fn rows_possible(&self, state: &[i8]) -> bool {
        self.model.rows.iter().all(|row| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for &(v, c) in &row.terms {
                match state[v] {
                    1 => {
                        lo += c;
                        hi += c;
                    }
                    0 => {}
                    _ if c < 0.0 => lo += c,
                    _ => hi += c,
                }
            }
            match row.cmp {
                Cmp::Le => lo <= row.rhs,
                Cmp::Ge => hi >= row.rhs,
                Cmp::Eq => lo <= row.rhs && hi >= row.rhs,
            }
        })
    }

    /// The undecided primary whose value an unknown variable copies, if any.
    fn pending(&self, state: &[i8], v: usize) -> Option<usize> {
        if self.primary[v] {
            return Some(v);
        }
        match &self.model.aux[self.rule[v]?].rule {
            AuxRule::Product(a, b) => match (state[*a], state[*b]) {
                (1, UNKNOWN) => self.pending(state, *b),
                (UNKNOWN, 1) => self.pending(state, *a),
                _ => None,
            },
            _ => None,
        }
    }

    /// Lower bound on every feasible completion, or `None` when no
    /// completion can satisfy the rows. Fills the auxiliaries of `state`.
    ///
    /// Known terms count at their value. An unknown term that equals one
    /// member of an undecided one-hot group is charged to that member and
    /// the group contributes its cheapest member; any other unknown term
    /// contributes `min(0, c)`.
    pub(crate) fn assess(&self, state: &mut [i8], scratch: &mut Vec<f64>) -> Option<f64> {
        self.propagate(state);
        if !self.rows_possible(state) {
            return None;
        }
        let obj = &self.model.objective;
        scratch.clear();
        scratch.resize(state.len(), 0.0);
        let (mut known, mut free) = (0.0, 0.0);
        for &v in &self.costed {
            let c = obj[v];
            match state[v] {
                1 => known += c,
                0 => {}
                _ => match self.pending(state, v) {
                    Some(p) if self.in_group[p] => scratch[p] += c,
                    _ => free += c.min(0.0),
                },
            }
        }
        let mut groups = 0.0;
        for step in &self.steps {
            if let Step::Group(members) = step {
                if state[members[0]] == UNKNOWN {
                    groups += members.iter().map(|&k| scratch[k]).fold(f64::INFINITY, f64::min);
                }
            }
        }
        Some(self.model.constant + known + free + groups)
    }
}

struct Node {
    state: Vec<i8>,
    depth: usize,
    bound: f64,
}

struct Shared<'s> {
    search: &'s Search<'s>,
    incumbent: AtomicU64,
    best: Mutex<Option<(f64, Vec<bool>)>>,
    nodes: AtomicU64,
    stop: AtomicBool,
    max_nodes: u64,
    deadline: Option<Instant>,
}

impl Shared<'_> {
    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(Ordering::Acquire))
    }

    fn offer(&self, value: f64, point: Vec<bool>) {
        let mut best = self.best.lock().expect("incumbent lock");
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            *best = Some((value, point));
            self.incumbent.store(value.to_bits(), Ordering::Release);
        }
    }

    fn out_of_budget(&self) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return true;
        }
        let n = self.nodes.load(Ordering::Relaxed);
        let over = n >= self.max_nodes || self.deadline.is_some_and(|d| Instant::now() >= d);
        if over {
            self.stop.store(true, Ordering::Relaxed);
        }
        over
    }

    fn children(&self, node: &Node, scratch: &mut Vec<f64>) -> Vec<Node> {
        let s = self.search;
        let mut out = Vec::new();
        for choice in 0..s.steps[node.depth].choices() {
            let mut state = node.state.clone();
            s.apply(&mut state, node.depth, choice);
            self.nodes.fetch_add(1, Ordering::Relaxed);
            if let Some(bound) = s.assess(&mut state, scratch) {
                out.push(Node { state, depth: node.depth + 1, bound });
            }
        }
        out
    }

    /// Depth-first search below `stack`. Returns the smallest bound left
    /// unexplored when the budget runs out.
    fn run(&self, mut stack: Vec<Node>) -> f64 {
        let mut scratch = Vec::new();
        let leaf = self.search.steps.len();
        while let Some(node) = stack.pop() {
            if node.bound >= self.incumbent() - TOLERANCE {
                continue;
            }
            if node.depth == leaf {
                let point: Vec<bool> = node.state.iter().map(|&v| v == 1).collect();
                self.offer(self.search.model.objective_at(&point), point);
                continue;
            }
            if self.out_of_budget() {
                stack.push(node);
                break;
            }
            let mut kids = self.children(&node, &mut scratch);
            kids.sort_by(|a, b| b.bound.total_cmp(&a.bound));
            stack.extend(kids);
        }
        stack.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min)
    }
}

/// Depth-first branch-and-bound over the primaries of `model`.
pub fn solve_exact(model: &IlpModel, budget: &Budget) -> SolveReport {
    run_exact(model, budget, None)
}

/// [`solve_exact`] with a feasible starting incumbent.
pub fn solve_exact_warm(model: &IlpModel, budget: &Budget, warm: &Assignment) -> SolveReport {
    run_exact(model, budget, Some(warm))
}

fn run_exact(model: &IlpModel, budget: &Budget, warm: Option<&Assignment>) -> SolveReport {
    let started = Instant::now();
    let search = Search::new(model);
    let shared = Shared {
        search: &search,
        incumbent: AtomicU64::new(f64::INFINITY.to_bits()),
        best: Mutex::new(None),
        nodes: AtomicU64::new(1),
        stop: AtomicBool::new(false),
        max_nodes: budget.max_nodes.unwrap_or(u64::MAX),
        deadline: budget.time_limit_s.map(|s| started + Duration::from_secs_f64(s.max(0.0))),
    };
    if let Some(a) = warm {
        let point = model.encode(a);
        if model.violated_rows(&point, 0.0).is_empty() {
            shared.offer(model.objective_at(&point), point);
        }
    }

    let mut scratch = Vec::new();
    let mut state = search.root();
    let left = match search.assess(&mut state, &mut scratch) {
        None => f64::INFINITY,
        Some(bound) => {
            let root = Node { state, depth: 0, bound };
            if budget.threads <= 1 {
                shared.run(vec![root])
            } else {
                parallel(&shared, root, budget.threads)
            }
        }
    };

    let exhausted = shared.stop.load(Ordering::Relaxed) && left.is_finite();
    let best = shared.best.into_inner().expect("incumbent lock");
    let status = match (&best, exhausted) {
        (_, true) => SolveStatus::BudgetExhausted,
        (Some(_), false) => SolveStatus::Optimal,
        (None, false) => SolveStatus::Infeasible,
    };
    let mut report = SolveReport::new(Method::Exact, status, started);
    report.nodes = shared.nodes.load(Ordering::Relaxed);
    if let Some((value, point)) = best {
        report.objective = Some(value);
        report.bound = Some(if exhausted { left.min(value) } else { value });
        report.assignment = Some(model.decode(&point).expect("search points are consistent"));
    } else if exhausted {
        report.bound = Some(left);
    }
    report
}

/// Split the tree into a frontier of subtrees and search them on a pool.
fn parallel(shared: &Shared<'_>, root: Node, threads: usize) -> f64 {
    let mut scratch = Vec::new();
    let leaf = shared.search.steps.len();
    let mut frontier = vec![root];
    while frontier.len() < threads * 8 && frontier.iter().any(|n| n.depth < leaf) {
        let mut next = Vec::new();
        for node in frontier {
            if node.depth == leaf {
                next.push(node);
            } else {
                next.extend(shared.children(&node, &mut scratch));
            }
        }
        if next.is_empty() {
            return f64::INFINITY;
        }
        frontier = next;
    }
    frontier.sort_by(|a, b| a.bound.total_cmp(&b.bound));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| frontier.into_par_iter().map(|n| shared.run(vec![n])).reduce(|| f64::INFINITY, f64::min))
}
