//! Placement solutions, their resource usage and constraint validation.
//!
//! A [`PlacementState`] stores the decision variables sparsely: one path per
//! routed demand, one server per (demand, chain position) and one sync path
//! per replicated VNF and ordered node pair. Aggregates such as per-instance
//! traffic, server loads and link loads live in [`Usage`], which can be
//! rebuilt from a state or updated incrementally by the heuristics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DemandId, LinkId, NodeId, PathId, ServerId, SfcId};
use crate::scalar::{self, Scalar};
use crate::workload::Scenario;

/// Identifies one synchronization flow: VNF `vnf` of `sfc` replicated at
/// nodes `from` and `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SyncKey {
    pub sfc: SfcId,
    pub vnf: usize,
    pub from: NodeId,
    pub to: NodeId,
}

/// An instantiated VNF: chain position `vnf` of `sfc` on `server`.
pub type InstanceKey = (SfcId, usize, ServerId);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlacementState {
    pub demand_route: BTreeMap<DemandId, PathId>,
    pub vnf_assignment: BTreeMap<(DemandId, usize), ServerId>,
    pub sync_route: BTreeMap<SyncKey, PathId>,
    /// VNF instances of the initial placement, when this is a second phase.
    pub initial_snapshot: Option<BTreeSet<InstanceKey>>,
    /// Demands this placement must serve.
    pub scope: BTreeSet<DemandId>,
    /// At most one instance per VNF regardless of the active paths.
    pub single_instance: bool,
}

impl PlacementState {
    pub fn new(scope: impl IntoIterator<Item = DemandId>) -> Self {
        PlacementState { scope: scope.into_iter().collect(), ..Default::default() }
    }

    /// Servers of `demand` in chain order; stops at the first gap.
    pub fn servers_of(&self, demand: DemandId) -> Vec<ServerId> {
        self.vnf_assignment
            .range((demand, 0)..=(demand, usize::MAX))
            .enumerate()
            .take_while(|(i, ((_, v), _))| i == v)
            .map(|(_, (_, x))| *x)
            .collect()
    }

    pub fn place_demand(&mut self, demand: DemandId, path: PathId, servers: &[ServerId]) {
        self.demand_route.insert(demand, path);
        for (v, &x) in servers.iter().enumerate() {
            self.vnf_assignment.insert((demand, v), x);
        }
    }

    /// Removes the route and every assignment of `demand`.
    pub fn unplace_demand(&mut self, demand: DemandId) -> Option<(PathId, Vec<ServerId>)> {
        let servers = self.servers_of(demand);
        let keys: Vec<_> = self.vnf_assignment.range((demand, 0)..=(demand, usize::MAX)).map(|(k, _)| *k).collect();
        for k in keys {
            self.vnf_assignment.remove(&k);
        }
        self.demand_route.remove(&demand).map(|p| (p, servers))
    }

    /// The instantiated VNFs: (sfc, position, server) with at least one
    /// demand assigned.
    pub fn instances<S: Scalar>(&self, scn: &Scenario<S>) -> BTreeSet<InstanceKey> {
        self.vnf_assignment
            .iter()
            .map(|(&(d, v), &x)| (scn.demand(d).sfc, v, x))
            .collect()
    }

    /// Paths carrying at least one demand of `sfc`.
    pub fn active_paths<S: Scalar>(&self, scn: &Scenario<S>, sfc: SfcId) -> BTreeSet<PathId> {
        scn.sfc(sfc).demands.iter().filter_map(|d| self.demand_route.get(d).copied()).collect()
    }

    pub fn sync_routes_of(&self, sfc: SfcId) -> impl Iterator<Item = (&SyncKey, &PathId)> {
        let lo = SyncKey { sfc, vnf: 0, from: NodeId(0), to: NodeId(0) };
        let hi = SyncKey { sfc, vnf: usize::MAX, from: NodeId(usize::MAX), to: NodeId(usize::MAX) };
        self.sync_route.range(lo..=hi)
    }
}

// ---------------------------------------------------------------------------
// Aggregates

/// Demands served by one VNF instance and their summed bandwidth.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S> {
    pub demands: BTreeSet<DemandId>,
    pub traffic: S,
}

/// Resource usage implied by a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Usage<S> {
    /// Absolute traffic per link, demand plus synchronization.
    pub link_load: Vec<S>,
    /// γ_x per server.
    pub server_load: Vec<S>,
    /// Instances per chain and position, keyed by server.
    pub instances: Vec<Vec<BTreeMap<ServerId, Instance<S>>>>,
    /// Demand count per active path of each chain.
    pub path_use: Vec<BTreeMap<PathId, usize>>,
    /// VNF instances hosted per server.
    pub hosted: Vec<BTreeSet<(SfcId, usize)>>,
    /// Demands of each chain in scope, the |Λ_s| of the sync traffic.
    pub scope_count: Vec<usize>,
}

impl<S: Scalar> Usage<S> {
    pub fn empty(scn: &Scenario<S>, scope: &BTreeSet<DemandId>) -> Self {
        let net = &scn.network;
        let mut scope_count = vec![0; scn.sfcs.len()];
        for d in scope {
            scope_count[scn.demand(*d).sfc.0] += 1;
        }
        Usage {
            link_load: vec![S::zero(); net.links().len()],
            server_load: vec![S::zero(); net.servers().len()],
            instances: scn.sfcs.iter().map(|s| vec![BTreeMap::new(); s.len()]).collect(),
            path_use: vec![BTreeMap::new(); scn.sfcs.len()],
            hosted: vec![BTreeSet::new(); net.servers().len()],
            scope_count,
        }
    }

    /// Rebuilds every aggregate from scratch. Assignments to positions past
    /// the end of a chain are ignored.
    pub fn from_state(scn: &Scenario<S>, state: &PlacementState) -> Self {
        let mut u = Self::empty(scn, &state.scope);
        for (&d, &p) in &state.demand_route {
            let sfc = scn.demand(d).sfc;
            *u.path_use[sfc.0].entry(p).or_insert(0) += 1;
            let bw = scn.demand(d).bandwidth;
            for l in &scn.network.path(p).links {
                u.link_load[l.0] = u.link_load[l.0] + bw;
            }
        }
        let mut touched = BTreeSet::new();
        for (&(d, v), &x) in &state.vnf_assignment {
            let sfc = scn.demand(d).sfc;
            if v >= scn.sfc(sfc).len() || x.0 >= u.hosted.len() {
                continue;
            }
            u.instances[sfc.0][v]
                .entry(x)
                .or_insert_with(|| Instance { demands: BTreeSet::new(), traffic: S::zero() })
                .demands
                .insert(d);
            u.hosted[x.0].insert((sfc, v));
            touched.insert((sfc, v, x));
        }
        for &(sfc, v, x) in &touched {
            u.refresh_traffic(scn, sfc, v, x);
        }
        for x in 0..u.server_load.len() {
            u.refresh_server(scn, ServerId(x));
        }
        for (k, &p) in &state.sync_route {
            u.add_sync(scn, k, p);
        }
        u
    }

    fn refresh_traffic(&mut self, scn: &Scenario<S>, sfc: SfcId, v: usize, x: ServerId) {
        if let Some(inst) = self.instances[sfc.0][v].get_mut(&x) {
            inst.traffic = inst.demands.iter().map(|d| scn.demand(*d).bandwidth).fold(S::zero(), |a, b| a + b);
        }
    }

    fn refresh_server(&mut self, scn: &Scenario<S>, x: ServerId) {
        let mut load = S::zero();
        for &(sfc, v) in &self.hosted[x.0] {
            let ty = scn.vnf_type(sfc, v);
            let inst = &self.instances[sfc.0][v][&x];
            load = load + (ty.load_ratio * inst.traffic + ty.overhead);
        }
        self.server_load[x.0] = load;
    }

    /// Server load after adding `extra` units of traffic to (sfc, v) at `x`,
    /// instantiating it there if needed.
    pub fn server_load_with(&self, scn: &Scenario<S>, x: ServerId, sfc: SfcId, v: usize, extra: S) -> S {
        let ty = scn.vnf_type(sfc, v);
        let base = self.server_load[x.0] + ty.load_ratio * extra;
        if self.instances[sfc.0][v].contains_key(&x) {
            base
        } else {
            base + ty.overhead
        }
    }

    pub fn add_demand(&mut self, scn: &Scenario<S>, d: DemandId, path: PathId, servers: &[ServerId]) {
        let dem = scn.demand(d);
        let sfc = dem.sfc;
        *self.path_use[sfc.0].entry(path).or_insert(0) += 1;
        for l in &scn.network.path(path).links {
            self.link_load[l.0] = self.link_load[l.0] + dem.bandwidth;
        }
        for (v, &x) in servers.iter().enumerate() {
            self.instances[sfc.0][v]
                .entry(x)
                .or_insert_with(|| Instance { demands: BTreeSet::new(), traffic: S::zero() })
                .demands
                .insert(d);
            self.hosted[x.0].insert((sfc, v));
            self.refresh_traffic(scn, sfc, v, x);
        }
        for &x in servers {
            self.refresh_server(scn, x);
        }
    }

    pub fn remove_demand(&mut self, scn: &Scenario<S>, d: DemandId, path: PathId, servers: &[ServerId]) {
        let dem = scn.demand(d);
        let sfc = dem.sfc;
        if let Some(c) = self.path_use[sfc.0].get_mut(&path) {
            *c -= 1;
            if *c == 0 {
                self.path_use[sfc.0].remove(&path);
            }
        }
        for l in &scn.network.path(path).links {
            self.link_load[l.0] = self.link_load[l.0] - dem.bandwidth;
        }
        for (v, &x) in servers.iter().enumerate() {
            let map = &mut self.instances[sfc.0][v];
            if let Some(inst) = map.get_mut(&x) {
                inst.demands.remove(&d);
                if inst.demands.is_empty() {
                    map.remove(&x);
                    self.hosted[x.0].remove(&(sfc, v));
                } else {
                    self.refresh_traffic(scn, sfc, v, x);
                }
            }
        }
        for &x in servers {
            self.refresh_server(scn, x);
        }
    }

    /// Synchronization bandwidth of one flow of (sfc, v).
    pub fn sync_amount(&self, scn: &Scenario<S>, sfc: SfcId, v: usize) -> S {
        scn.vnf_type(sfc, v).sync_ratio * S::lit(self.scope_count[sfc.0] as f64)
    }

    pub fn add_sync(&mut self, scn: &Scenario<S>, key: &SyncKey, path: PathId) {
        let amt = self.sync_amount(scn, key.sfc, key.vnf);
        for l in &scn.network.path(path).links {
            self.link_load[l.0] = self.link_load[l.0] + amt;
        }
    }

    pub fn remove_sync(&mut self, scn: &Scenario<S>, key: &SyncKey, path: PathId) {
        let amt = self.sync_amount(scn, key.sfc, key.vnf);
        for l in &scn.network.path(path).links {
            self.link_load[l.0] = self.link_load[l.0] - amt;
        }
    }

    pub fn server_util(&self, scn: &Scenario<S>, x: ServerId) -> S {
        self.server_load[x.0] / scn.network.server(x).capacity_max
    }

    pub fn link_util(&self, scn: &Scenario<S>, l: LinkId) -> S {
        let link = scn.network.link(l);
        if link.is_capacitated() {
            self.link_load[l.0] / link.capacity_max
        } else {
            S::zero()
        }
    }

    /// Number of instances of (sfc, v).
    pub fn instance_count(&self, sfc: SfcId, v: usize) -> usize {
        self.instances[sfc.0][v].len()
    }

    /// Nodes hosting an instance of (sfc, v), ascending.
    pub fn instance_nodes(&self, scn: &Scenario<S>, sfc: SfcId, v: usize) -> BTreeSet<NodeId> {
        self.instances[sfc.0][v].keys().map(|x| scn.network.server(*x).node).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilizationReport<S> {
    pub link_util: Vec<S>,
    pub server_util: Vec<S>,
    pub server_load: Vec<S>,
}

/// u_ℓ for every link; zero on uncapacitated links.
pub fn link_utilization<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<S> {
    let u = Usage::from_state(scn, state);
    (0..u.link_load.len()).map(|l| u.link_util(scn, LinkId(l))).collect()
}

/// γ_x and u_x for every server.
pub fn server_load<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> (Vec<S>, Vec<S>) {
    let u = Usage::from_state(scn, state);
    let util = (0..u.server_load.len()).map(|x| u.server_util(scn, ServerId(x))).collect();
    (u.server_load, util)
}

pub fn utilization_report<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> UtilizationReport<S> {
    let u = Usage::from_state(scn, state);
    UtilizationReport {
        link_util: (0..u.link_load.len()).map(|l| u.link_util(scn, LinkId(l))).collect(),
        server_util: (0..u.server_load.len()).map(|x| u.server_util(scn, ServerId(x))).collect(),
        server_load: u.server_load,
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    MissingRoute { demand: DemandId },
    UnknownPath { demand: DemandId, path: PathId },
    PathNotAdmissible { demand: DemandId, path: PathId },
    OutOfScope { demand: DemandId },
    MissingVnf { demand: DemandId, vnf: usize },
    UnknownVnf { demand: DemandId, vnf: usize },
    UnknownServer { demand: DemandId, vnf: usize, server: ServerId },
    OffPathAssignment { demand: DemandId, vnf: usize, server: ServerId },
    OrderViolation { demand: DemandId, vnf: usize },
    ReplicationViolation { sfc: SfcId, vnf: usize, instances: usize, limit: usize },
    LinkOverload { link: LinkId, utilization: f64 },
    ServerOverload { server: ServerId, utilization: f64 },
    MissingSyncRoute { key: SyncKey },
    UnexpectedSyncRoute { key: SyncKey },
    BadSyncPath { key: SyncKey, path: PathId },
}

fn route_is_known<S: Scalar>(scn: &Scenario<S>, p: PathId) -> bool {
    p.0 < scn.network.paths().len()
}

/// Every scoped demand on exactly one admissible path of its chain, and no
/// routes for demands outside the scope.
pub fn validate_routing<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let mut out = Vec::new();
    for &d in &state.scope {
        match state.demand_route.get(&d) {
            None => out.push(Violation::MissingRoute { demand: d }),
            Some(&p) if !route_is_known(scn, p) => out.push(Violation::UnknownPath { demand: d, path: p }),
            Some(&p) => {
                if !scn.sfc(scn.demand(d).sfc).admissible_paths.contains(&p) {
                    out.push(Violation::PathNotAdmissible { demand: d, path: p });
                }
            }
        }
    }
    let stray: BTreeSet<DemandId> = state
        .demand_route
        .keys()
        .chain(state.vnf_assignment.keys().map(|(d, _)| d))
        .filter(|d| !state.scope.contains(d))
        .copied()
        .collect();
    out.extend(stray.into_iter().map(|demand| Violation::OutOfScope { demand }));
    out
}

/// Every position of every routed demand on one server of its path, and no
/// assignments past the end of the chain.
pub fn validate_vnf_placement<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let mut out = Vec::new();
    let nservers = scn.network.servers().len();
    for (&(d, v), &x) in &state.vnf_assignment {
        if v >= scn.sfc(scn.demand(d).sfc).len() {
            out.push(Violation::UnknownVnf { demand: d, vnf: v });
        } else if x.0 >= nservers {
            out.push(Violation::UnknownServer { demand: d, vnf: v, server: x });
        }
    }
    for (&d, &p) in &state.demand_route {
        if !route_is_known(scn, p) {
            continue;
        }
        let path = scn.network.path(p);
        for v in 0..scn.sfc(scn.demand(d).sfc).len() {
            match state.vnf_assignment.get(&(d, v)) {
                None => out.push(Violation::MissingVnf { demand: d, vnf: v }),
                Some(&x) if x.0 < nservers && path.server_index(x).is_none() => {
                    out.push(Violation::OffPathAssignment { demand: d, vnf: v, server: x })
                }
                Some(_) => {}
            }
        }
    }
    out
}

/// Consecutive VNFs of a demand at non-decreasing node positions along its
/// path. Demands with missing or off-path assignments are skipped.
pub fn validate_sequence_order<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let mut out = Vec::new();
    for (&d, &p) in &state.demand_route {
        if !route_is_known(scn, p) {
            continue;
        }
        let path = scn.network.path(p);
        let len = scn.sfc(scn.demand(d).sfc).len();
        let pos: Option<Vec<usize>> =
            (0..len).map(|v| state.vnf_assignment.get(&(d, v)).and_then(|x| path.node_pos_of(*x))).collect();
        let Some(pos) = pos else { continue };
        for v in 1..len {
            if pos[v - 1] > pos[v] {
                out.push(Violation::OrderViolation { demand: d, vnf: v });
            }
        }
    }
    out
}

/// Instance count of every VNF within its replication limit.
pub fn validate_replication_limit<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let u = Usage::from_state(scn, state);
    let mut out = Vec::new();
    for sfc in &scn.sfcs {
        let active = u.path_use[sfc.id.0].len();
        for v in 0..sfc.len() {
            let limit = replication_limit(scn, state.single_instance, sfc.id, v, active);
            let n = u.instance_count(sfc.id, v);
            if n > limit {
                out.push(Violation::ReplicationViolation { sfc: sfc.id, vnf: v, instances: n, limit });
            }
        }
    }
    out
}

/// Maximum instance count of (sfc, v) given the number of active paths.
pub fn replication_limit<S: Scalar>(
    scn: &Scenario<S>,
    single_instance: bool,
    sfc: SfcId,
    v: usize,
    active_paths: usize,
) -> usize {
    if single_instance || !scn.vnf_type(sfc, v).replicable {
        1
    } else {
        active_paths
    }
}

/// u_ℓ ≤ 1 on capacitated links and u_x ≤ 1 on all servers, boundary
/// inclusive.
pub fn validate_capacities<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    capacity_violations(scn, &Usage::from_state(scn, state))
}

pub fn capacity_violations<S: Scalar>(scn: &Scenario<S>, u: &Usage<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    for l in 0..u.link_load.len() {
        let util = u.link_util(scn, LinkId(l));
        if util > S::one() {
            out.push(Violation::LinkOverload { link: LinkId(l), utilization: util.as_f64() });
        }
    }
    for x in 0..u.server_load.len() {
        let util = u.server_util(scn, ServerId(x));
        if util > S::one() {
            out.push(Violation::ServerOverload { server: ServerId(x), utilization: util.as_f64() });
        }
    }
    out
}

/// Sync flows required by the instance layout: both directions between
/// every two distinct nodes hosting instances of the same VNF.
pub fn required_sync_keys<S: Scalar>(scn: &Scenario<S>, u: &Usage<S>, sfc: SfcId) -> Vec<SyncKey> {
    let mut keys = Vec::new();
    for v in 0..scn.sfc(sfc).len() {
        let nodes = u.instance_nodes(scn, sfc, v);
        for &from in &nodes {
            for &to in &nodes {
                if from != to {
                    keys.push(SyncKey { sfc, vnf: v, from, to });
                }
            }
        }
    }
    keys
}

/// Exactly one sync path, connecting the right nodes, per required flow and
/// none otherwise.
pub fn validate_sync<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let u = Usage::from_state(scn, state);
    let mut required = BTreeSet::new();
    for sfc in &scn.sfcs {
        required.extend(required_sync_keys(scn, &u, sfc.id));
    }
    let mut out = Vec::new();
    for key in &required {
        match state.sync_route.get(key) {
            None => out.push(Violation::MissingSyncRoute { key: *key }),
            Some(&p) => {
                let ok = route_is_known(scn, p) && {
                    let path = scn.network.path(p);
                    path.src() == key.from && path.dst() == key.to
                };
                if !ok {
                    out.push(Violation::BadSyncPath { key: *key, path: p });
                }
            }
        }
    }
    for key in state.sync_route.keys() {
        if !required.contains(key) {
            out.push(Violation::UnexpectedSyncRoute { key: *key });
        }
    }
    out
}

/// All validators in a fixed order.
pub fn validate_all<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Vec<Violation> {
    let mut out = validate_routing(scn, state);
    let structural = out.iter().any(|v| matches!(v, Violation::UnknownPath { .. }))
        || state.vnf_assignment.iter().any(|(&(d, _), x)| {
            d.0 >= scn.demands.len() || x.0 >= scn.network.servers().len()
        });
    let placement = validate_vnf_placement(scn, state);
    let broken = structural || placement.iter().any(|v| matches!(v, Violation::UnknownVnf { .. } | Violation::UnknownServer { .. }));
    out.extend(placement);
    out.extend(validate_sequence_order(scn, state));
    if broken {
        // aggregates are undefined on dangling ids
        return out;
    }
    out.extend(validate_replication_limit(scn, state));
    out.extend(validate_capacities(scn, state));
    out.extend(validate_sync(scn, state));
    out
}

// ---------------------------------------------------------------------------
// Sync routing, counters

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("no synchronization path from {from} to {to}")]
    NoSyncPath { from: NodeId, to: NodeId },
    #[error("the state has no initial snapshot")]
    MissingSnapshot,
    #[error("malformed placement document: {0}")]
    Parse(String),
}

/// Replaces the sync routes of `sfc` by a fresh selection: per required
/// flow, in key order, the candidate path whose busiest capacitated link
/// ends up least utilized, ties broken by delay and then path id.
pub fn reassign_sync<S: Scalar>(
    scn: &Scenario<S>,
    state: &mut PlacementState,
    usage: &mut Usage<S>,
    sfc: SfcId,
) -> Result<(), StateError> {
    let old: Vec<(SyncKey, PathId)> = state.sync_routes_of(sfc).map(|(k, p)| (*k, *p)).collect();
    for (k, p) in &old {
        usage.remove_sync(scn, k, *p);
        state.sync_route.remove(k);
    }
    for key in required_sync_keys(scn, usage, sfc) {
        let cands = scn
            .network
            .sync_paths_between(key.from, key.to)
            .map_err(|_| StateError::NoSyncPath { from: key.from, to: key.to })?;
        let amt = usage.sync_amount(scn, sfc, key.vnf);
        let mut best: Option<(S, S, PathId)> = None;
        for &p in cands {
            let path = scn.network.path(p);
            let worst = path
                .links
                .iter()
                .map(|l| {
                    let link = scn.network.link(*l);
                    if link.is_capacitated() {
                        (usage.link_load[l.0] + amt) / link.capacity_max
                    } else {
                        S::zero()
                    }
                })
                .fold(S::zero(), S::max);
            let cand = (worst, path.total_prop_delay, p);
            let better = match &best {
                None => true,
                Some(b) => scalar::cmp(cand.0, b.0)
                    .then(scalar::cmp(cand.1, b.1))
                    .then(cand.2.cmp(&b.2))
                    .is_lt(),
            };
            if better {
                best = Some(cand);
            }
        }
        let (_, _, p) = best.ok_or(StateError::NoSyncPath { from: key.from, to: key.to })?;
        usage.add_sync(scn, &key, p);
        state.sync_route.insert(key, p);
    }
    Ok(())
}

/// Returns `state` with sync routes selected for every chain.
pub fn assign_sync_routes<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Result<PlacementState, StateError> {
    let mut out = state.clone();
    out.sync_route.clear();
    let mut usage = Usage::from_state(scn, &out);
    for sfc in &scn.sfcs {
        reassign_sync(scn, &mut out, &mut usage, sfc.id)?;
    }
    Ok(out)
}

/// Instances of the snapshot that no longer exist.
pub fn count_migrations<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Result<usize, StateError> {
    let snap = state.initial_snapshot.as_ref().ok_or(StateError::MissingSnapshot)?;
    let now = state.instances(scn);
    Ok(snap.iter().filter(|k| !now.contains(k)).count())
}

/// Σ over instantiated VNFs of (instances − 1).
pub fn count_replications<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> usize {
    let mut per: BTreeMap<(SfcId, usize), usize> = BTreeMap::new();
    for (s, v, _) in state.instances(scn) {
        *per.entry((s, v)).or_insert(0) += 1;
    }
    per.values().map(|n| n - 1).sum()
}

// ---------------------------------------------------------------------------
// Placement document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementDoc {
    single_instance: bool,
    scope: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snapshot: Option<Vec<[usize; 3]>>,
    /// [demand, path]
    #[serde(default)]
    routes: Vec<[usize; 2]>,
    /// [demand, position, server]
    #[serde(default)]
    assignments: Vec<[usize; 3]>,
    /// [sfc, position, from node, to node, path]
    #[serde(default)]
    sync: Vec<[usize; 5]>,
}

pub fn write_placement(state: &PlacementState) -> String {
    let doc = PlacementDoc {
        single_instance: state.single_instance,
        scope: state.scope.iter().map(|d| d.0).collect(),
        snapshot: state.initial_snapshot.as_ref().map(|s| s.iter().map(|(a, v, x)| [a.0, *v, x.0]).collect()),
        routes: state.demand_route.iter().map(|(d, p)| [d.0, p.0]).collect(),
        assignments: state.vnf_assignment.iter().map(|((d, v), x)| [d.0, *v, x.0]).collect(),
        sync: state.sync_route.iter().map(|(k, p)| [k.sfc.0, k.vnf, k.from.0, k.to.0, p.0]).collect(),
    };
    toml::to_string(&doc).expect("placement documents always serialize")
}

pub fn parse_placement(text: &str) -> Result<PlacementState, StateError> {
    let doc: PlacementDoc = toml::from_str(text).map_err(|e| StateError::Parse(e.to_string()))?;
    Ok(PlacementState {
        single_instance: doc.single_instance,
        scope: doc.scope.into_iter().map(DemandId).collect(),
        initial_snapshot: doc
            .snapshot
            .map(|s| s.into_iter().map(|[a, v, x]| (SfcId(a), v, ServerId(x))).collect()),
        demand_route: doc.routes.into_iter().map(|[d, p]| (DemandId(d), PathId(p))).collect(),
        vnf_assignment: doc.assignments.into_iter().map(|[d, v, x]| ((DemandId(d), v), ServerId(x))).collect(),
        sync_route: doc
            .sync
            .into_iter()
            .map(|[s, v, n, m, p]| (SyncKey { sfc: SfcId(s), vnf: v, from: NodeId(n), to: NodeId(m) }, PathId(p)))
            .collect(),
    })
}
