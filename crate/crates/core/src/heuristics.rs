//! First-Fit, Random-Fit and Greedy placement with incumbent-improving
//! local search.
//!
//! All algorithms share an [`Occupancy`]: a placement state together with
//! incrementally maintained aggregates. Capacity checks during placement
//! keep a relative slack of [`CAPACITY_SLACK`] so that states accepted here
//! always pass the exact validators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::cost::{self, CostBreakdown};
use crate::ids::{DemandId, PathId, ServerId, SfcId};
use crate::rng::{self, Rng};
use crate::scalar::Scalar;
use crate::state::{self, PlacementState, StateError, SyncKey, Usage};
use crate::workload::{Partition, Scenario};

/// Relative headroom kept below every capacity during placement.
pub const CAPACITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Ff,
    Rf,
    Grd,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ff => "ff",
            Algorithm::Rf => "rf",
            Algorithm::Grd => "grd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ff" => Ok(Algorithm::Ff),
            "rf" => Ok(Algorithm::Rf),
            "grd" => Ok(Algorithm::Grd),
            other => Err(format!("unknown algorithm {other:?} (expected ff, rf or grd)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeuristicConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Outer repetitions of the local search; `None` means one per chain.
    pub sweeps: Option<usize>,
}

impl HeuristicConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        HeuristicConfig { algorithm, seed, sweeps: None }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error(
        "no feasible path and server sequence for demand {demand} of chain {sfc} \
         (largest residual: server {server_headroom:.4}, link {link_headroom:.4})"
    )]
    Infeasible { demand: DemandId, sfc: SfcId, server_headroom: f64, link_headroom: f64 },
    #[error("synchronization traffic of chain {sfc} overloads link capacity")]
    SyncOverload { sfc: SfcId },
    #[error(transparent)]
    Sync(#[from] StateError),
    #[error(transparent)]
    Cost(#[from] cost::CostError),
}

/// A placement state with its aggregates kept in step.
#[derive(Clone, Debug)]
pub struct Occupancy<'a, S> {
    scn: &'a Scenario<S>,
    pub state: PlacementState,
    pub usage: Usage<S>,
    /// Summed bandwidth used in place of a demand's own while a chain is
    /// placed as one bundle.
    bundle: Option<S>,
}

fn within<S: Scalar>(load: S, cap: S) -> bool {
    load <= cap * (S::one() - S::lit(CAPACITY_SLACK))
}

impl<'a, S: Scalar> Occupancy<'a, S> {
    pub fn new(scn: &'a Scenario<S>, state: PlacementState) -> Self {
        let usage = Usage::from_state(scn, &state);
        Occupancy { scn, state, usage, bundle: None }
    }

    pub fn scenario(&self) -> &'a Scenario<S> {
        self.scn
    }

    /// Error for a demand that could not be placed, with the largest
    /// residual capacity among edge servers and capacitated links.
    pub fn infeasible(&self, d: DemandId) -> PlacementError {
        let net = &self.scn.network;
        let server_headroom = net
            .servers()
            .iter()
            .filter(|x| !x.is_cloud)
            .map(|x| (x.capacity_max - self.usage.server_load[x.id.0]).as_f64())
            .fold(0.0, f64::max);
        let link_headroom = net
            .links()
            .iter()
            .filter(|l| l.is_capacitated())
            .map(|l| (l.capacity_max - self.usage.link_load[l.id.0]).as_f64())
            .fold(0.0, f64::max);
        PlacementError::Infeasible { demand: d, sfc: self.scn.demand(d).sfc, server_headroom, link_headroom }
    }

    fn bw(&self, d: DemandId) -> S {
        self.bundle.unwrap_or(self.scn.demand(d).bandwidth)
    }

    fn links_fit(&self, d: DemandId, p: PathId) -> bool {
        let bw = self.bw(d);
        self.scn.network.path(p).links.iter().all(|l| {
            let link = self.scn.network.link(*l);
            !link.is_capacitated() || within(self.usage.link_load[l.0] + bw, link.capacity_max)
        })
    }

    /// Admissible paths of the demand's chain with room for its bandwidth,
    /// in catalog order.
    pub fn admissible_paths(&self, d: DemandId) -> Vec<PathId> {
        let sfc = self.scn.demand(d).sfc;
        self.scn.sfc(sfc).admissible_paths.iter().copied().filter(|&p| self.links_fit(d, p)).collect()
    }

    fn limit_after(&self, sfc: SfcId, v: usize, p: PathId) -> usize {
        let uses = &self.usage.path_use[sfc.0];
        let active = uses.len() + usize::from(!uses.contains_key(&p));
        state::replication_limit(self.scn, self.state.single_instance, sfc, v, active)
    }

    /// Whether `x` can take position `v` of `d` routed on `p`, given the
    /// extra load already committed by earlier positions of the same demand.
    fn can_host(&self, d: DemandId, p: PathId, v: usize, x: ServerId, pending: &BTreeMap<ServerId, S>) -> bool {
        let sfc = self.scn.demand(d).sfc;
        let exists = self.usage.instances[sfc.0][v].contains_key(&x);
        if !exists && self.usage.instance_count(sfc, v) + 1 > self.limit_after(sfc, v, p) {
            return false;
        }
        let extra = pending.get(&x).copied().unwrap_or_else(S::zero);
        let load = self.usage.server_load_with(self.scn, x, sfc, v, self.bw(d)) + extra;
        within(load, self.scn.network.server(x).capacity_max)
    }

    fn add_pending(&self, d: DemandId, v: usize, x: ServerId, pending: &mut BTreeMap<ServerId, S>) {
        let sfc = self.scn.demand(d).sfc;
        let ty = self.scn.vnf_type(sfc, v);
        let mut add = ty.load_ratio * self.bw(d);
        if !self.usage.instances[sfc.0][v].contains_key(&x) {
            add = add + ty.overhead;
        }
        let e = pending.entry(x).or_insert_with(S::zero);
        *e = *e + add;
    }

    /// Earliest-fit probe: can positions `v..` be placed at node positions
    /// from `min_node` on?
    fn rest_fits(&self, d: DemandId, p: PathId, v: usize, min_node: usize, pending: &BTreeMap<ServerId, S>) -> bool {
        let len = self.scn.sfc(self.scn.demand(d).sfc).len();
        let path = self.scn.network.path(p);
        let mut pending = pending.clone();
        let mut min_node = min_node;
        for w in v..len {
            let pick = (0..path.servers.len())
                .find(|&i| path.server_node_pos[i] >= min_node && self.can_host(d, p, w, path.servers[i], &pending));
            match pick {
                Some(i) => {
                    self.add_pending(d, w, path.servers[i], &mut pending);
                    min_node = path.server_node_pos[i];
                }
                None => return false,
            }
        }
        true
    }

    /// Servers of `p` (in path order) that can take position `v` while the
    /// rest of the chain still fits behind them.
    pub fn candidates(
        &self,
        d: DemandId,
        p: PathId,
        v: usize,
        min_node: usize,
        pending: &BTreeMap<ServerId, S>,
    ) -> Vec<usize> {
        let path = self.scn.network.path(p);
        (0..path.servers.len())
            .filter(|&i| {
                let x = path.servers[i];
                if path.server_node_pos[i] < min_node || !self.can_host(d, p, v, x, pending) {
                    return false;
                }
                let mut next = pending.clone();
                self.add_pending(d, v, x, &mut next);
                self.rest_fits(d, p, v + 1, path.server_node_pos[i], &next)
            })
            .collect()
    }

    /// Whether the whole chain of `d` fits on `p`.
    pub fn chain_fits(&self, d: DemandId, p: PathId) -> bool {
        self.links_fit(d, p) && self.rest_fits(d, p, 0, 0, &BTreeMap::new())
    }

    /// Places the chain of `d` on `p`, picking each position's server from
    /// the candidate list with `pick` (which receives candidate indices into
    /// the path's server list). Nothing is committed on failure.
    pub fn place_with(
        &self,
        d: DemandId,
        p: PathId,
        mut pick: impl FnMut(usize, &[usize]) -> Option<usize>,
    ) -> Option<Vec<ServerId>> {
        let len = self.scn.sfc(self.scn.demand(d).sfc).len();
        let path = self.scn.network.path(p);
        let mut pending = BTreeMap::new();
        let mut min_node = 0;
        let mut servers = Vec::with_capacity(len);
        for v in 0..len {
            let cands = self.candidates(d, p, v, min_node, &pending);
            if cands.is_empty() {
                return None;
            }
            let i = pick(v, &cands)?;
            let x = path.servers[i];
            self.add_pending(d, v, x, &mut pending);
            min_node = path.server_node_pos[i];
            servers.push(x);
        }
        Some(servers)
    }

    pub fn commit(&mut self, d: DemandId, p: PathId, servers: &[ServerId]) {
        self.state.place_demand(d, p, servers);
        self.usage.add_demand(self.scn, d, p, servers);
    }

    pub fn remove(&mut self, d: DemandId) -> Option<(PathId, Vec<ServerId>)> {
        let (p, servers) = self.state.unplace_demand(d)?;
        self.usage.remove_demand(self.scn, d, p, &servers);
        Some((p, servers))
    }

    /// Reselects the sync routes of `sfc` and checks their links.
    pub fn resync(&mut self, sfc: SfcId) -> Result<(), PlacementError> {
        state::reassign_sync(self.scn, &mut self.state, &mut self.usage, sfc)?;
        let net = &self.scn.network;
        for (_, p) in self.state.sync_routes_of(sfc) {
            for l in &net.path(*p).links {
                let link = net.link(*l);
                if link.is_capacitated() && self.usage.link_load[l.0] > link.capacity_max {
                    return Err(PlacementError::SyncOverload { sfc });
                }
            }
        }
        Ok(())
    }

    /// Fallback for a demand that fits nowhere beside its chain's current
    /// placement: lifts the chain's placed demands and places them together
    /// with `d` on one path and one server sequence sized for their summed
    /// bandwidth, first fit or at random with `rng`. The previous placement
    /// is restored on failure.
    pub fn place_bundle(&mut self, d: DemandId, mut rng: Option<&mut Rng>) -> bool {
        let sfc = self.scn.demand(d).sfc;
        let members: Vec<DemandId> =
            self.scn.sfc(sfc).demands.iter().copied().filter(|m| self.state.demand_route.contains_key(m)).collect();
        if members.is_empty() {
            return false;
        }
        let saved_sync = self.sync_of(sfc);
        self.restore_sync(sfc, &[]);
        let saved: Vec<(DemandId, PathId, Vec<ServerId>)> = members
            .iter()
            .filter_map(|&m| self.remove(m).map(|(p, xs)| (m, p, xs)))
            .collect();
        let total = members.iter().chain([&d]).fold(S::zero(), |a, m| a + self.scn.demand(*m).bandwidth);
        self.bundle = Some(total);
        let paths: Vec<PathId> =
            self.admissible_paths(d).into_iter().filter(|&p| self.rest_fits(d, p, 0, 0, &BTreeMap::new())).collect();
        let p = match rng.as_deref_mut() {
            Some(r) => paths.choose(r).copied(),
            None => paths.first().copied(),
        };
        let servers = p.and_then(|p| {
            self.place_with(d, p, |_, c| match rng.as_deref_mut() {
                Some(r) => c.choose(r).copied(),
                None => c.first().copied(),
            })
        });
        self.bundle = None;
        match (p, servers) {
            (Some(p), Some(xs)) => {
                for &m in members.iter().chain([&d]) {
                    self.commit(m, p, &xs);
                }
                true
            }
            _ => {
                for (m, p, xs) in saved {
                    self.commit(m, p, &xs);
                }
                self.restore_sync(sfc, &saved_sync);
                false
            }
        }
    }

    fn sync_of(&self, sfc: SfcId) -> Vec<(SyncKey, PathId)> {
        self.state.sync_routes_of(sfc).map(|(k, p)| (*k, *p)).collect()
    }

    fn restore_sync(&mut self, sfc: SfcId, saved: &[(SyncKey, PathId)]) {
        for (k, p) in self.sync_of(sfc) {
            self.usage.remove_sync(self.scn, &k, p);
            self.state.sync_route.remove(&k);
        }
        for (k, p) in saved {
            self.usage.add_sync(self.scn, k, *p);
            self.state.sync_route.insert(*k, *p);
        }
    }

    fn replication_ok(&self, sfc: SfcId) -> bool {
        let active = self.usage.path_use[sfc.0].len();
        (0..self.scn.sfc(sfc).len()).all(|v| {
            self.usage.instance_count(sfc, v)
                <= state::replication_limit(self.scn, self.state.single_instance, sfc, v, active)
        })
    }

    pub fn evaluate(&self) -> Result<CostBreakdown<S>, cost::CostError> {
        cost::evaluate(self.scn, &self.state, &self.usage)
    }
}

/// Scoped demands per chain, in chain then id order.
fn scoped_by_chain<S: Scalar>(scn: &Scenario<S>, scope: &BTreeSet<DemandId>) -> Vec<Vec<DemandId>> {
    scn.sfcs.iter().map(|s| s.demands.iter().copied().filter(|d| scope.contains(d)).collect()).collect()
}

fn place_simple<S: Scalar>(occ: &mut Occupancy<'_, S>, d: DemandId, alg: Algorithm, rng: &mut Rng) -> bool {
    let paths: Vec<PathId> = occ.admissible_paths(d).into_iter().filter(|&p| occ.chain_fits(d, p)).collect();
    let p = match alg {
        Algorithm::Rf => paths.choose(rng).copied(),
        _ => paths.first().copied(),
    };
    let Some(p) = p else { return false };
    let servers = occ.place_with(d, p, |_, cands| match alg {
        Algorithm::Rf => cands.choose(rng).copied(),
        _ => cands.first().copied(),
    });
    match servers {
        Some(servers) => {
            occ.commit(d, p, &servers);
            true
        }
        None => false,
    }
}

/// First-Fit or Random-Fit over every scoped demand of `template`, chain by
/// chain. `template` supplies the scope, snapshot and replication mode.
pub fn simple_placement<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    alg: Algorithm,
    seed: u64,
) -> Result<PlacementState, PlacementError> {
    let mut rng = rng::substream(seed, 0);
    let mut occ = Occupancy::new(scn, template.clone());
    for (s, demands) in scoped_by_chain(scn, &template.scope).into_iter().enumerate() {
        let sfc = SfcId(s);
        for d in demands {
            let placed = place_simple(&mut occ, d, alg, &mut rng)
                || occ.place_bundle(d, (alg == Algorithm::Rf).then_some(&mut rng));
            if !placed {
                return Err(occ.infeasible(d));
            }
            occ.resync(sfc)?;
        }
    }
    Ok(occ.state)
}

/// Paths and servers used by an earlier placement, for the reuse cascades.
#[derive(Clone, Debug, Default)]
pub struct PriorPlacement {
    route: BTreeMap<DemandId, PathId>,
    assignment: BTreeMap<(DemandId, usize), ServerId>,
    paths: BTreeMap<SfcId, BTreeSet<PathId>>,
    instances: BTreeMap<(SfcId, usize), BTreeSet<ServerId>>,
}

impl PriorPlacement {
    pub fn from_state<S: Scalar>(scn: &Scenario<S>, prior: &PlacementState) -> Self {
        let mut out = PriorPlacement {
            route: prior.demand_route.clone(),
            assignment: prior.vnf_assignment.clone(),
            ..Default::default()
        };
        for (&d, &p) in &prior.demand_route {
            out.paths.entry(scn.demand(d).sfc).or_default().insert(p);
        }
        for (s, v, x) in prior.instances(scn) {
            out.instances.entry((s, v)).or_default().insert(x);
        }
        out
    }
}

/// Path cascade: the demand's earlier path, an earlier path of its chain, a
/// path its chain uses now, then the shortest delay path. `candidates` must
/// be in ascending delay order.
pub fn choose_path_greedy<S: Scalar>(
    occ: &Occupancy<'_, S>,
    prior: Option<&PriorPlacement>,
    d: DemandId,
    candidates: &[PathId],
) -> Option<PathId> {
    let sfc = occ.scenario().demand(d).sfc;
    if let Some(pr) = prior {
        if let Some(p) = pr.route.get(&d).filter(|p| candidates.contains(p)) {
            return Some(*p);
        }
        if let Some(used) = pr.paths.get(&sfc) {
            if let Some(p) = candidates.iter().find(|p| used.contains(p)) {
                return Some(*p);
            }
        }
    }
    let now = &occ.usage.path_use[sfc.0];
    if let Some(p) = candidates.iter().find(|p| now.contains_key(p)) {
        return Some(*p);
    }
    candidates.iter().copied().min_by(|a, b| {
        let net = &occ.scenario().network;
        crate::scalar::cmp(net.path(*a).total_prop_delay, net.path(*b).total_prop_delay).then(a.cmp(b))
    })
}

/// Server cascade over `candidates` (indices into the path's server list,
/// already filtered for order, capacity and replication): the demand's
/// earlier server, an earlier instance of the VNF placed before the cloud,
/// a current instance placed before the cloud, then the first candidate.
pub fn choose_server_greedy<S: Scalar>(
    occ: &Occupancy<'_, S>,
    prior: Option<&PriorPlacement>,
    d: DemandId,
    p: PathId,
    v: usize,
    candidates: &[usize],
) -> Option<usize> {
    let scn = occ.scenario();
    let path = scn.network.path(p);
    let sfc = scn.demand(d).sfc;
    let find = |x: ServerId| candidates.iter().copied().find(|&i| path.servers[i] == x);
    if let Some(pr) = prior {
        if let Some(i) = pr.assignment.get(&(d, v)).and_then(|x| find(*x)) {
            return Some(i);
        }
    }
    let cloud = candidates.iter().copied().find(|&i| scn.network.server(path.servers[i]).is_cloud);
    let before_cloud = |i: usize| cloud.map_or(true, |c| i < c);
    if let Some(pr) = prior {
        if let Some(set) = pr.instances.get(&(sfc, v)) {
            if let Some(i) = candidates.iter().copied().find(|&i| set.contains(&path.servers[i])) {
                if before_cloud(i) {
                    return Some(i);
                }
            }
        }
    }
    let now = &occ.usage.instances[sfc.0][v];
    if let Some(i) = candidates.iter().copied().find(|&i| now.contains_key(&path.servers[i])) {
        if before_cloud(i) {
            return Some(i);
        }
    }
    candidates.first().copied()
}

fn allocate_greedy<S: Scalar>(occ: &mut Occupancy<'_, S>, prior: Option<&PriorPlacement>, d: DemandId) -> bool {
    let mut remaining = occ.admissible_paths(d);
    while let Some(p) = choose_path_greedy(occ, prior, d, &remaining) {
        let servers = occ.place_with(d, p, |v, cands| choose_server_greedy(occ, prior, d, p, v, cands));
        if let Some(servers) = servers {
            occ.commit(d, p, &servers);
            return true;
        }
        remaining.retain(|q| *q != p);
    }
    false
}

/// Greedy placement: initial-set demands of every chain first, then the
/// remaining demands chain by chain, followed by the local search. `prior`
/// is the earlier placement whose paths and servers are preferred.
pub fn greedy_place<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    partition: &Partition,
    prior: Option<&PlacementState>,
    config: &HeuristicConfig,
) -> Result<PlacementState, PlacementError> {
    let prior = prior.map(|p| PriorPlacement::from_state(scn, p));
    let mut occ = Occupancy::new(scn, template.clone());
    let scope = &template.scope;
    for init in &partition.initial {
        for &d in init.iter().filter(|d| scope.contains(d)) {
            if !allocate_greedy(&mut occ, prior.as_ref(), d) && !occ.place_bundle(d, None) {
                return Err(occ.infeasible(d));
            }
        }
    }
    for (s, rest) in partition.rest.iter().enumerate() {
        for &d in rest.iter().filter(|d| scope.contains(d)) {
            if !allocate_greedy(&mut occ, prior.as_ref(), d) && !occ.place_bundle(d, None) {
                return Err(occ.infeasible(d));
            }
        }
        occ.resync(SfcId(s))?;
    }
    let sweeps = config.sweeps.unwrap_or(scn.sfcs.len());
    find_new_incumbent(&mut occ, config.seed, sweeps)?;
    Ok(occ.state)
}

/// Local search: `sweeps` passes over all chains; each scoped demand is
/// removed and re-placed by Random-Fit, and the move is kept only if the
/// objective drops by more than the scalar's improvement tolerance. Sync
/// routes of the chain are reselected with every move so that each
/// accepted intermediate state is feasible. Returns the final objective.
pub fn find_new_incumbent<S: Scalar>(
    occ: &mut Occupancy<'_, S>,
    seed: u64,
    sweeps: usize,
) -> Result<CostBreakdown<S>, PlacementError> {
    let scn = occ.scenario();
    let mut rng = rng::substream(seed, 1);
    let mut best = occ.evaluate()?;
    let chains = scoped_by_chain(scn, &occ.state.scope);
    for _ in 0..sweeps {
        for (s, demands) in chains.iter().enumerate() {
            let sfc = SfcId(s);
            for &d in demands {
                let saved_sync = occ.sync_of(sfc);
                let Some((old_p, old_x)) = occ.remove(d) else { continue };
                let placed = place_simple(occ, d, Algorithm::Rf, &mut rng)
                    && occ.replication_ok(sfc)
                    && occ.resync(sfc).is_ok();
                let accepted = placed
                    && match occ.evaluate() {
                        Ok(c) if c.total < best.total - S::improvement_tolerance(best.total) => {
                            best = c;
                            true
                        }
                        _ => false,
                    };
                if !accepted {
                    if occ.state.demand_route.contains_key(&d) {
                        occ.remove(d);
                    }
                    occ.commit(d, old_p, &old_x);
                    occ.restore_sync(sfc, &saved_sync);
                }
            }
        }
    }
    Ok(best)
}

