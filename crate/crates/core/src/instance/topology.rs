use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::InstanceError;

/// A node of the wired network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Ec(usize),
    Router(usize),
    Region(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessRouter {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    /// Edge cloud this router hangs off.
    pub home_ec: usize,
}

/// Wired network: edge clouds, access routers and metaverse-region servers.
///
/// `wired_latency_ms` is a square matrix over all nodes laid out as
/// `[ECs..., routers..., regions...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub ec_ids: Vec<usize>,
    pub routers: Vec<AccessRouter>,
    pub n_regions: usize,
    /// Allowed mobility destinations per router.
    pub adjacency: BTreeMap<usize, Vec<usize>>,
    /// Router -> metaverse region serving users attached to it.
    pub region_anchor: BTreeMap<usize, usize>,
    pub wired_latency_ms: Vec<Vec<f64>>,
    pub cell_radius_m: f64,
}

impl Topology {
    pub fn n_ecs(&self) -> usize {
        self.ec_ids.len()
    }

    pub fn n_routers(&self) -> usize {
        self.routers.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_ecs() + self.n_routers() + self.n_regions
    }

    pub fn node_index(&self, node: Node) -> usize {
        match node {
            Node::Ec(j) => j,
            Node::Router(k) => self.n_ecs() + k,
            Node::Region(g) => self.n_ecs() + self.n_routers() + g,
        }
    }

    #[inline]
    pub fn latency(&self, a: Node, b: Node) -> f64 {
        self.wired_latency_ms[self.node_index(a)][self.node_index(b)]
    }

    /// Region of a router. Panics on an unvalidated topology.
    #[inline]
    pub fn region(&self, router: usize) -> usize {
        self.region_anchor[&router]
    }

    pub fn neighbours(&self, router: usize) -> &[usize] {
        self.adjacency.get(&router).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let m = self.n_ecs();
        if m == 0 {
            return Err(InstanceError::Topology("no edge clouds".into()));
        }
        if self.ec_ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(InstanceError::Topology("ec_ids must be 0..M in order".into()));
        }
        for (k, r) in self.routers.iter().enumerate() {
            if r.id != k {
                return Err(InstanceError::Topology(format!("router at position {k} has id {}", r.id)));
            }
            if r.home_ec >= m {
                return Err(InstanceError::Topology(format!("router {k} home_ec {} out of range", r.home_ec)));
            }
            match self.adjacency.get(&k) {
                Some(adj) if !adj.is_empty() => {
                    if let Some(&bad) = adj.iter().find(|&&d| d >= self.n_routers() || d == k) {
                        return Err(InstanceError::Topology(format!(
                            "router {k} lists invalid mobility destination {bad}"
                        )));
                    }
                }
                _ => {
                    return Err(InstanceError::Topology(format!("router {k} has no adjacent destination")));
                }
            }
            match self.region_anchor.get(&k) {
                None => return Err(InstanceError::MissingRegionAnchor { router: k }),
                Some(&g) if g >= self.n_regions => {
                    return Err(InstanceError::Topology(format!("router {k} anchored to unknown region {g}")))
                }
                _ => {}
            }
        }
        let n = self.n_nodes();
        if self.wired_latency_ms.len() != n || self.wired_latency_ms.iter().any(|row| row.len() != n) {
            return Err(InstanceError::Topology(format!("wired_latency_ms must be {n}x{n}")));
        }
        for (i, row) in self.wired_latency_ms.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(InstanceError::Topology(format!("wired latency C[{i}][{i}] must be 0")));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(InstanceError::Topology(format!("wired latency row {i} has invalid entry {v}")));
            }
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(InstanceError::Topology("cell_radius_m must be positive".into()));
        }
        Ok(())
    }
}

/// Hop distance in the binary heap tree over edge clouds (`parent(j) = (j-1)/2`).
fn tree_hops(mut a: usize, mut b: usize) -> usize {
    let mut hops = 0;
    while a != b {
        if a > b {
            a = (a - 1) / 2;
        } else {
            b = (b - 1) / 2;
        }
        hops += 1;
    }
    hops
}

/// Tree topology: ECs form a binary tree, each EC owns `routers_per_ec`
/// access routers laid out on a line, and each group of `region_fanout`
/// consecutive ECs shares one region server one hop away from each member.
pub(crate) fn build_tree(
    n_ecs: usize,
    routers_per_ec: usize,
    region_fanout: usize,
    per_hop_ms: f64,
    cell_radius_m: f64,
) -> Result<Topology, InstanceError> {
    let n_routers = n_ecs * routers_per_ec;
    if n_routers < 2 {
        return Err(InstanceError::Topology(format!(
            "{n_routers} access router(s): every router needs an adjacent destination"
        )));
    }
    let n_regions = n_ecs.div_ceil(region_fanout);
    let home = |k: usize| k / routers_per_ec;
    let members = |g: usize| (g * region_fanout)..((g + 1) * region_fanout).min(n_ecs);

    let routers = (0..n_routers)
        .map(|k| AccessRouter { id: k, x_m: 2.0 * cell_radius_m * k as f64, y_m: 0.0, home_ec: home(k) })
        .collect();
    let adjacency = (0..n_routers)
        .map(|k| {
            let mut adj = Vec::new();
            if k > 0 {
                adj.push(k - 1);
            }
            if k + 1 < n_routers {
                adj.push(k + 1);
            }
            (k, adj)
        })
        .collect();
    let region_anchor = (0..n_routers).map(|k| (k, home(k) / region_fanout)).collect();

    let nodes: Vec<Node> = (0..n_ecs)
        .map(Node::Ec)
        .chain((0..n_routers).map(Node::Router))
        .chain((0..n_regions).map(Node::Region))
        .collect();
    // Hops from a node to an EC, going through the tree only.
    let to_ec = |node: Node, j: usize| -> usize {
        match node {
            Node::Ec(i) => tree_hops(i, j),
            Node::Router(k) => 1 + tree_hops(home(k), j),
            Node::Region(g) => 1 + members(g).map(|e| tree_hops(e, j)).min().unwrap_or(0),
        }
    };
    let hops = |a: Node, b: Node| -> usize {
        if a == b {
            return 0;
        }
        match b {
            Node::Ec(j) => to_ec(a, j),
            Node::Router(k) => 1 + to_ec(a, home(k)),
            Node::Region(g) => 1 + members(g).map(|e| to_ec(a, e)).min().unwrap_or(0),
        }
    };
    let wired_latency_ms =
        nodes.iter().map(|&a| nodes.iter().map(|&b| hops(a, b) as f64 * per_hop_ms).collect()).collect();

    Ok(Topology {
        ec_ids: (0..n_ecs).collect(),
        routers,
        n_regions,
        adjacency,
        region_anchor,
        wired_latency_ms,
        cell_radius_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_hops_basic() {
        assert_eq!(tree_hops(0, 0), 0);
        assert_eq!(tree_hops(1, 2), 2);
        assert_eq!(tree_hops(3, 4), 2);
        assert_eq!(tree_hops(3, 2), 3);
    }

    #[test]
    fn built_tree_is_valid_and_symmetric() {
        let t = build_tree(6, 2, 2, 3.0, 250.0).unwrap();
        t.validate().unwrap();
        let n = t.n_nodes();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(t.wired_latency_ms[i][j], t.wired_latency_ms[j][i]);
            }
        }
        assert_eq!(t.latency(Node::Router(0), Node::Ec(0)), 3.0);
        assert_eq!(t.latency(Node::Region(0), Node::Ec(1)), 3.0);
        assert_eq!(t.latency(Node::Region(0), Node::Router(0)), 6.0);
    }

    #[test]
    fn single_router_is_a_topology_error() {
        assert!(matches!(build_tree(1, 1, 1, 3.0, 250.0), Err(InstanceError::Topology(_))));
    }

    #[test]
    fn missing_anchor_names_router() {
        let mut t = build_tree(2, 1, 1, 3.0, 250.0).unwrap();
        t.region_anchor.remove(&1);
        assert!(matches!(t.validate(), Err(InstanceError::MissingRegionAnchor { router: 1 })));
    }
}
