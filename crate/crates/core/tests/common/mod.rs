#![allow(dead_code)]

pub mod enumerate;
pub mod hand;
pub mod literal;
pub mod lpcheck;

use rand::seq::SliceRandom;
use rand::Rng as _;

use sfcplace::rng::{substream, Rng};
use sfcplace::state::{PlacementState, SyncKey};
use sfcplace::tiny::{tiny_instance, TinyConfig, TinyInstance};
use sfcplace::workload::Scenario;
use sfcplace::{DemandId, PathId, ServerId};

/// Seeds and configurations of the instances shared by the exact, LP and
/// heuristic checks. Alternates snapshot and capacity regimes.
pub fn oracle_configs() -> Vec<(u64, TinyConfig)> {
    (1..=24)
        .map(|seed| {
            let config = TinyConfig { ample: seed % 4 < 2, with_snapshot: seed % 2 == 0, ..TinyConfig::default() };
            (seed, config)
        })
        .collect()
}

pub fn oracle_instances() -> Vec<(u64, TinyConfig, TinyInstance<f64>)> {
    oracle_configs().into_iter().map(|(s, c)| (s, c, tiny_instance(s, c))).collect()
}

/// Clears every decision of `template`, keeping scope, snapshot and mode.
pub fn empty_like(template: &PlacementState) -> PlacementState {
    let mut st = template.clone();
    st.demand_route.clear();
    st.vnf_assignment.clear();
    st.sync_route.clear();
    st
}

/// Sync flows needed by the instance layout of `st`, each with a random
/// sync path between its nodes.
pub fn random_sync(scn: &Scenario<f64>, st: &mut PlacementState, rng: &mut Rng) {
    st.sync_route.clear();
    let inst = literal::instances(scn, st);
    for &(s, v, x) in &inst {
        for &(s2, v2, y) in &inst {
            let (n, m) = (scn.network.servers()[x.0].node, scn.network.servers()[y.0].node);
            if s == s2 && v == v2 && n != m {
                if let Ok(paths) = scn.network.sync_paths_between(n, m) {
                    if let Some(p) = paths.choose(rng) {
                        st.sync_route.insert(SyncKey { sfc: s, vnf: v, from: n, to: m }, *p);
                    }
                }
            }
        }
    }
}

/// Uniformly random complete assignment with consistent sync routes. It
/// may still break order, replication or capacity constraints.
pub fn random_state(scn: &Scenario<f64>, template: &PlacementState, rng: &mut Rng) -> PlacementState {
    let mut st = empty_like(template);
    for &d in &template.scope {
        let opts = enumerate::choices(scn, d);
        let (p, xs) = opts.choose(rng).expect("every chain has a path").clone();
        place(&mut st, d, p, &xs);
    }
    random_sync(scn, &mut st, rng);
    st
}

pub fn place(st: &mut PlacementState, d: DemandId, p: PathId, xs: &[ServerId]) {
    st.demand_route.insert(d, p);
    for (v, x) in xs.iter().enumerate() {
        st.vnf_assignment.insert((d, v), *x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    DropRoute,
    ForeignPath,
    DropAssignment,
    OffPathServer,
    UnknownServer,
    SwapOrder,
    ExtraSyncRoute,
    DropSyncRoute,
    OutOfScope,
    ExtraPosition,
    ExtraReplica,
}

pub const MUTATIONS: [Mutation; 11] = [
    Mutation::DropRoute,
    Mutation::ForeignPath,
    Mutation::DropAssignment,
    Mutation::OffPathServer,
    Mutation::UnknownServer,
    Mutation::SwapOrder,
    Mutation::ExtraSyncRoute,
    Mutation::DropSyncRoute,
    Mutation::OutOfScope,
    Mutation::ExtraPosition,
    Mutation::ExtraReplica,
];

/// Applies `m` to a random target; `None` when the state offers none.
pub fn mutate(scn: &Scenario<f64>, st: &PlacementState, m: Mutation, rng: &mut Rng) -> Option<PlacementState> {
    let mut out = st.clone();
    let routed: Vec<DemandId> = st.demand_route.keys().copied().collect();
    let d = *routed.choose(rng)?;
    let s = &scn.sfcs[scn.demands[d.0].sfc.0];
    let p = st.demand_route[&d];
    let path = &scn.network.paths()[p.0];
    match m {
        Mutation::DropRoute => {
            out.demand_route.remove(&d);
        }
        Mutation::ForeignPath => {
            let foreign: Vec<PathId> =
                scn.network.paths().iter().map(|q| q.id).filter(|q| !s.admissible_paths.contains(q)).collect();
            out.demand_route.insert(d, *foreign.choose(rng)?);
        }
        Mutation::DropAssignment => {
            let v = rng.gen_range(0..s.vnf_chain.len());
            out.vnf_assignment.remove(&(d, v));
        }
        Mutation::OffPathServer => {
            let off: Vec<ServerId> =
                scn.network.servers().iter().map(|x| x.id).filter(|x| !path.servers.contains(x)).collect();
            let v = rng.gen_range(0..s.vnf_chain.len());
            out.vnf_assignment.insert((d, v), *off.choose(rng)?);
        }
        Mutation::UnknownServer => {
            let v = rng.gen_range(0..s.vnf_chain.len());
            out.vnf_assignment.insert((d, v), ServerId(scn.network.servers().len() + 3));
        }
        Mutation::SwapOrder => {
            // put the first VNF strictly after the last one along the path
            if s.vnf_chain.len() < 2 {
                return None;
            }
            let pos = |x: ServerId| path.node_pos_of(x).expect("on path");
            let last = st.vnf_assignment[&(d, s.vnf_chain.len() - 1)];
            let later: Vec<ServerId> =
                path.servers.iter().copied().filter(|x| pos(*x) > pos(last)).collect();
            out.vnf_assignment.insert((d, 0), *later.choose(rng)?);
        }
        Mutation::ExtraSyncRoute => {
            let n = path.nodes[0];
            let m = *path.nodes.last()?;
            let q = *scn.network.sync_paths_between(n, m).ok()?.first()?;
            let key = SyncKey { sfc: s.id, vnf: rng.gen_range(0..s.vnf_chain.len()), from: n, to: m };
            if out.sync_route.insert(key, q).is_some() {
                return None;
            }
        }
        Mutation::DropSyncRoute => {
            let keys: Vec<SyncKey> = st.sync_route.keys().copied().collect();
            out.sync_route.remove(keys.choose(rng)?);
        }
        Mutation::OutOfScope => {
            let outside: Vec<DemandId> =
                scn.demands.iter().map(|x| x.id).filter(|x| !st.scope.contains(x)).collect();
            let e = *outside.choose(rng)?;
            let es = &scn.sfcs[scn.demands[e.0].sfc.0];
            let q = es.admissible_paths[0];
            let xs = vec![scn.network.paths()[q.0].servers[0]; es.vnf_chain.len()];
            place(&mut out, e, q, &xs);
        }
        Mutation::ExtraPosition => {
            out.vnf_assignment.insert((d, s.vnf_chain.len()), path.servers[0]);
        }
        Mutation::ExtraReplica => {
            // a chain's demands share one path and one server sequence, then
            // one of them moves a single VNF elsewhere on that path
            let same: Vec<DemandId> = routed.iter().copied().filter(|e| scn.demands[e.0].sfc == s.id).collect();
            if same.len() < 2 {
                return None;
            }
            let xs = st.servers_of(d);
            for &e in &same {
                out.unplace_demand(e);
                place(&mut out, e, p, &xs);
            }
            let e = *same.iter().find(|e| **e != d)?;
            let pos = |x: ServerId| path.node_pos_of(x).expect("on path");
            let v = rng.gen_range(0..s.vnf_chain.len());
            let lo = if v == 0 { 0 } else { pos(xs[v - 1]) };
            let hi = xs.get(v + 1).map_or(usize::MAX, |x| pos(*x));
            let others: Vec<ServerId> =
                path.servers.iter().copied().filter(|x| *x != xs[v] && (lo..=hi).contains(&pos(*x))).collect();
            out.vnf_assignment.insert((e, v), *others.choose(rng)?);
            random_sync(scn, &mut out, rng);
        }
    }
    Some(out)
}

/// Random generator for test `seed` and `stream`.
pub fn rng(seed: u64, stream: u64) -> Rng {
    substream(seed, stream)
}
