//! Seeded generator of instances small enough for exhaustive search.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::exact::assignment_bound;
use crate::heuristics::{simple_placement, Algorithm};
use crate::ids::{LinkId, NodeId, ServerId, VnfTypeId};
use crate::rng;
use crate::scalar::Scalar;
use crate::state::PlacementState;
use crate::topology::{CatalogConfig, Link, NetworkModel, Node, Server};
use crate::workload::{default_vnf_catalog, ChainMode, ChainSpec, Partition, Scenario, ScenarioParams, CT, VM};

pub const TINY_CATALOG: CatalogConfig = CatalogConfig { k_edge: 2, include_cloud_path: true, k_sync: 1 };

/// A scenario plus the placement problem to solve on it.
#[derive(Clone, Debug)]
pub struct TinyInstance<S> {
    pub scenario: Scenario<S>,
    /// Empty state carrying the scope, snapshot and replication mode.
    pub template: PlacementState,
    /// Earlier placement the snapshot was taken from, if any.
    pub prior: Option<PlacementState>,
    pub partition: Partition,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TinyConfig {
    /// Capacities that never bind.
    pub ample: bool,
    /// Take a snapshot from a first-fit placement of a demand subset.
    pub with_snapshot: bool,
    /// Upper bound on complete assignments.
    pub max_assignments: f64,
}

impl Default for TinyConfig {
    fn default() -> Self {
        TinyConfig { ample: true, with_snapshot: false, max_assignments: 1e5 }
    }
}

/// Line of 2 or 3 edge nodes (with an optional chord) plus a cloud node
/// attached to both ends.
pub fn tiny_network<S: Scalar>(rng: &mut rng::Rng, ample: bool) -> NetworkModel<S> {
    let n_edge = rng.gen_range(2..=3);
    let cloud = NodeId(n_edge);
    let mut nodes: Vec<Node> = (0..n_edge).map(|i| Node { id: NodeId(i), location: None, is_cloud: false }).collect();
    nodes.push(Node { id: cloud, location: None, is_cloud: true });

    let mut servers = Vec::new();
    for n in 0..n_edge {
        let count = if n == 0 && rng.gen_bool(0.3) { 2 } else { 1 };
        for _ in 0..count {
            let capacity = if ample { 1000.0 } else { rng.gen_range(20..=60) as f64 };
            servers.push(Server {
                id: ServerId(servers.len()),
                node: NodeId(n),
                capacity_max: S::lit(capacity),
                is_cloud: false,
                idle_energy_cost: S::lit(0.0184453),
                utilization_cost_slope: S::lit(0.0095632),
                fixed_maintenance_cost: S::zero(),
            });
        }
    }
    servers.push(Server {
        id: ServerId(servers.len()),
        node: cloud,
        capacity_max: S::lit(1e9),
        is_cloud: true,
        idle_energy_cost: S::zero(),
        utilization_cost_slope: S::zero(),
        fixed_maintenance_cost: S::zero(),
    });

    let mut pairs = Vec::new();
    for i in 0..n_edge - 1 {
        pairs.push((i, i + 1, rng.gen_range(1..=5) as f64 / 10.0));
    }
    if n_edge == 3 && rng.gen_bool(0.5) {
        pairs.push((0, 2, rng.gen_range(3..=9) as f64 / 10.0));
    }
    pairs.push((0, cloud.0, 1.0));
    pairs.push((n_edge - 1, cloud.0, 1.0));
    let mut links = Vec::new();
    for (a, b, delay) in pairs {
        let capacity = if ample { 500.0 } else { rng.gen_range(15..=40) as f64 };
        for (src, dst) in [(a, b), (b, a)] {
            links.push(Link {
                id: LinkId(links.len()),
                src: NodeId(src),
                dst: NodeId(dst),
                capacity_max: S::lit(capacity),
                prop_delay: S::lit(delay),
            });
        }
    }
    NetworkModel::new(nodes, servers, links)
        .and_then(|m| m.with_catalog(TINY_CATALOG))
        .expect("tiny networks are well formed")
}

/// Deterministic tiny instance for `seed`. Draws are repeated on
/// substreams until the assignment bound fits the configured limit.
pub fn tiny_instance<S: Scalar>(seed: u64, config: TinyConfig) -> TinyInstance<S> {
    for attempt in 0.. {
        if let Some(inst) = try_instance(seed, attempt, config) {
            return inst;
        }
    }
    unreachable!()
}

fn try_instance<S: Scalar>(seed: u64, attempt: u64, config: TinyConfig) -> Option<TinyInstance<S>> {
    let mut rng = rng::substream(seed, attempt);
    let network = Arc::new(tiny_network::<S>(&mut rng, config.ample));
    let edge: Vec<NodeId> = network.edge_nodes().collect();
    let mut pairs: Vec<(NodeId, NodeId)> =
        edge.iter().flat_map(|&a| edge.iter().filter(move |&&b| b != a).map(move |&b| (a, b))).collect();
    pairs.shuffle(&mut rng);
    let n_sfc = rng.gen_range(1..=2);
    let chains: Vec<ChainSpec<S>> = pairs
        .into_iter()
        .take(n_sfc)
        .map(|(src, dst)| {
            let len = rng.gen_range(1..=2);
            let vnf_chain: Vec<VnfTypeId> = (0..len).map(|_| if rng.gen_bool(0.5) { VM } else { CT }).collect();
            let n_dem = rng.gen_range(1..=2);
            let bandwidths: Vec<S> = (0..n_dem).map(|_| S::lit(rng.gen_range(1..=20) as f64)).collect();
            let initial = (0..n_dem).map(|k| k == 0 || rng.gen_bool(0.3)).collect();
            ChainSpec { src, dst, vnf_chain, bandwidths, initial }
        })
        .collect();
    let params = ScenarioParams::new(1, ChainMode::VmCt, seed);
    let scenario = Scenario::from_chains(network, default_vnf_catalog(), params, chains).ok()?;
    let partition = Partition {
        initial: scenario
            .sfcs
            .iter()
            .map(|s| s.demands.iter().copied().filter(|d| scenario.demand(*d).in_initial_set).collect())
            .collect(),
        rest: scenario
            .sfcs
            .iter()
            .map(|s| s.demands.iter().copied().filter(|d| !scenario.demand(*d).in_initial_set).collect())
            .collect(),
        drawn: 0,
    };
    let mut template = PlacementState::new(scenario.all_demands());
    let mut prior = None;
    if config.with_snapshot {
        let first = PlacementState { single_instance: true, ..PlacementState::new(scenario.initial_demands()) };
        let placed = simple_placement(&scenario, &first, Algorithm::Ff, seed).ok()?;
        template.initial_snapshot = Some(placed.instances(&scenario));
        prior = Some(placed);
    }
    if assignment_bound(&scenario, &template) > config.max_assignments {
        return None;
    }
    Some(TinyInstance { scenario, template, prior, partition })
}
