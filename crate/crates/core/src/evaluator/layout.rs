use crate::instance::ScenarioInstance;

/// One target ARO of a request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Position of the owning model in the request's model list.
    pub slot: usize,
    pub model: usize,
    pub aro: usize,
    pub size_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestLayout {
    /// Models in request order.
    pub models: Vec<usize>,
    pub targets: Vec<Target>,
    /// Models whose result frames reach this user through its region peers.
    pub wireless: Vec<usize>,
    /// ARO count that makes a cache hit.
    pub threshold: usize,
}

/// Index space of an instance: what the assignment, evaluator and ILP agree on.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n_ecs: usize,
    pub n_models: usize,
    pub n_rates: usize,
    pub used_models: Vec<usize>,
    pub is_used: Vec<bool>,
    pub requests: Vec<RequestLayout>,
}

impl Layout {
    pub fn new(inst: &ScenarioInstance) -> Self {
        let used_models = inst.used_models();
        let mut is_used = vec![false; inst.n_models];
        for &s in &used_models {
            is_used[s] = true;
        }
        let requests = inst
            .requests
            .iter()
            .enumerate()
            .map(|(r, q)| RequestLayout {
                models: q.models.iter().map(|m| m.model).collect(),
                targets: q
                    .targets()
                    .map(|(slot, aro)| Target {
                        slot,
                        model: q.models[slot].model,
                        aro,
                        size_bits: inst.aros[aro].size_bits,
                    })
                    .collect(),
                wireless: inst.wireless_models(r),
                threshold: q.target_count(),
            })
            .collect();
        Self { n_ecs: inst.n_ecs(), n_models: inst.n_models, n_rates: inst.n_rates(), used_models, is_used, requests }
    }

    pub fn n_requests(&self) -> usize {
        self.requests.len()
    }
}
