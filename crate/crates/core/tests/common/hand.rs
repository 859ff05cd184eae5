//! Hand-built two-node network for arithmetic checks: edge nodes 0 and 1
//! joined by a zero-delay 500-unit link, a cloud node 2 attached to both,
//! one 1000-unit server per edge node and one cloud server.

use std::sync::Arc;

use sfcplace::topology::{CatalogConfig, Link, NetworkModel, Node, Server};
use sfcplace::workload::{default_vnf_catalog, ChainMode, ChainSpec, Scenario, ScenarioParams};
use sfcplace::{LinkId, NodeId, PathId, ServerId, VnfTypeId};

pub const X0: ServerId = ServerId(0);
pub const X1: ServerId = ServerId(1);
pub const CLOUD: ServerId = ServerId(2);

pub fn network() -> Arc<NetworkModel<f64>> {
    let nodes = vec![
        Node { id: NodeId(0), location: None, is_cloud: false },
        Node { id: NodeId(1), location: None, is_cloud: false },
        Node { id: NodeId(2), location: None, is_cloud: true },
    ];
    let server = |i: usize, cloud: bool| Server {
        id: ServerId(i),
        node: NodeId(i),
        capacity_max: if cloud { 1e9 } else { 1000.0 },
        is_cloud: cloud,
        idle_energy_cost: if cloud { 0.0 } else { 0.0184453 },
        utilization_cost_slope: if cloud { 0.0 } else { 0.0095632 },
        fixed_maintenance_cost: 0.0,
    };
    let servers = vec![server(0, false), server(1, false), server(2, true)];
    let mut links = Vec::new();
    for (a, b) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
        links.push(Link { id: LinkId(links.len()), src: NodeId(a), dst: NodeId(b), capacity_max: 500.0, prop_delay: 0.0 });
    }
    let config = CatalogConfig { k_edge: 1, include_cloud_path: true, k_sync: 1 };
    Arc::new(NetworkModel::new(nodes, servers, links).unwrap().with_catalog(config).unwrap())
}

/// One chain from node 0 to node 1 per entry of `chains`.
pub fn scenario(chains: &[(&[VnfTypeId], &[f64])]) -> Scenario<f64> {
    let specs = chains
        .iter()
        .map(|(vnfs, bws)| ChainSpec {
            src: NodeId(0),
            dst: NodeId(1),
            vnf_chain: vnfs.to_vec(),
            bandwidths: bws.to_vec(),
            initial: vec![true; bws.len()],
        })
        .collect();
    let params = ScenarioParams::new(chains[0].0.len(), ChainMode::VmCt, 0);
    Scenario::from_chains(network(), default_vnf_catalog(), params, specs).unwrap()
}

/// The direct edge path 0 → 1.
pub fn edge_path(scn: &Scenario<f64>) -> PathId {
    *scn.sfcs[0].admissible_paths.iter().find(|p| !scn.network.paths()[p.0].traverses_cloud).unwrap()
}

/// The path 0 → cloud → 1.
pub fn cloud_path(scn: &Scenario<f64>) -> PathId {
    *scn.sfcs[0].admissible_paths.iter().find(|p| scn.network.paths()[p.0].traverses_cloud).unwrap()
}

pub fn link(scn: &Scenario<f64>, a: usize, b: usize) -> LinkId {
    scn.network.links().iter().find(|l| l.src == NodeId(a) && l.dst == NodeId(b)).unwrap().id
}
