//! Constraint checks and cost written straight from the model equations,
//! in f64, over the raw scenario data. Shares nothing with the library
//! beyond the input types.

use std::collections::{BTreeMap, BTreeSet};

use sfcplace::state::PlacementState;
use sfcplace::workload::Scenario;
use sfcplace::{DemandId, NodeId, PathId, Scalar, ServerId, SfcId};

/// Constraint families, one per group of model equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// Routes and assignments only for demands in scope.
    Scope,
    /// One admissible path per demand.
    OnePath,
    /// One server per VNF and demand.
    OneServer,
    /// Servers on the demand's path.
    OnPath,
    /// Chain order along the path.
    Order,
    /// Instance count within the replication limit.
    Replication,
    LinkCapacity,
    ServerCapacity,
    /// Sync paths exactly for the replica node pairs.
    Sync,
}

/// f_x^{v,s} as a set of (sfc, position, server).
pub fn instances(scn: &Scenario<f64>, st: &PlacementState) -> BTreeSet<(SfcId, usize, ServerId)> {
    st.vnf_assignment
        .iter()
        .filter(|((d, _), _)| st.scope.contains(d))
        .map(|(&(d, v), &x)| (scn.demands[d.0].sfc, v, x))
        .collect()
}

/// Σ λ·f_{x,λ}^{v,s} per instance.
pub fn instance_traffic(scn: &Scenario<f64>, st: &PlacementState) -> BTreeMap<(SfcId, usize, ServerId), f64> {
    let mut out = BTreeMap::new();
    for (&(d, v), &x) in &st.vnf_assignment {
        if !st.scope.contains(&d) {
            continue;
        }
        let dem = &scn.demands[d.0];
        *out.entry((dem.sfc, v, x)).or_insert(0.0) += dem.bandwidth;
    }
    out
}

/// γ_x per server.
pub fn server_loads(scn: &Scenario<f64>, st: &PlacementState) -> Vec<f64> {
    let mut gamma = vec![0.0; scn.network.servers().len()];
    for ((s, v, x), traffic) in instance_traffic(scn, st) {
        let ty = &scn.vnf_catalog[scn.sfcs[s.0].vnf_chain[v].0];
        gamma[x.0] += ty.load_ratio * traffic + ty.overhead;
    }
    gamma
}

fn cloud_node(scn: &Scenario<f64>, n: NodeId) -> bool {
    scn.network.nodes()[n.0].is_cloud
}

/// Absolute load per link: demand traffic plus Γsyn·|Λ_s| per selected sync path.
pub fn link_loads(scn: &Scenario<f64>, st: &PlacementState) -> Vec<f64> {
    let mut load = vec![0.0; scn.network.links().len()];
    for (&d, &p) in &st.demand_route {
        if let Some(path) = scn.network.paths().get(p.0) {
            for l in &path.links {
                load[l.0] += scn.demands[d.0].bandwidth;
            }
        }
    }
    let mut lambda = vec![0usize; scn.sfcs.len()];
    for d in &st.scope {
        lambda[scn.demands[d.0].sfc.0] += 1;
    }
    for (k, &p) in &st.sync_route {
        let ty = &scn.vnf_catalog[scn.sfcs[k.sfc.0].vnf_chain[k.vnf].0];
        if let Some(path) = scn.network.paths().get(p.0) {
            for l in &path.links {
                load[l.0] += ty.sync_ratio * lambda[k.sfc.0] as f64;
            }
        }
    }
    load
}

fn link_capacitated(scn: &Scenario<f64>, l: usize) -> bool {
    let link = &scn.network.links()[l];
    !cloud_node(scn, link.src) && !cloud_node(scn, link.dst)
}

/// Families violated by `st`. Aggregate families are skipped while ids
/// dangle.
pub fn violations(scn: &Scenario<f64>, st: &PlacementState) -> BTreeSet<Family> {
    let net = &scn.network;
    let mut out = BTreeSet::new();
    let dangling = st.demand_route.values().any(|p| p.0 >= net.paths().len())
        || st.vnf_assignment.iter().any(|(&(d, v), x)| {
            d.0 >= scn.demands.len() || x.0 >= net.servers().len() || v >= scn.sfcs[scn.demands[d.0].sfc.0].vnf_chain.len()
        });

    let stray = st.demand_route.keys().chain(st.vnf_assignment.keys().map(|(d, _)| d)).any(|d| !st.scope.contains(d));
    if stray {
        out.insert(Family::Scope);
    }
    for &d in &st.scope {
        let s = &scn.sfcs[scn.demands[d.0].sfc.0];
        match st.demand_route.get(&d) {
            Some(p) if s.admissible_paths.contains(p) => {}
            _ => {
                out.insert(Family::OnePath);
            }
        }
    }
    for (&d, &p) in &st.demand_route {
        if d.0 >= scn.demands.len() {
            continue;
        }
        let s = &scn.sfcs[scn.demands[d.0].sfc.0];
        for v in 0..s.vnf_chain.len() {
            if !st.vnf_assignment.contains_key(&(d, v)) {
                out.insert(Family::OneServer);
            }
        }
        let Some(path) = net.paths().get(p.0) else { continue };
        // position of each node along the path
        let node_pos: BTreeMap<NodeId, usize> = path.nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut pos = Vec::new();
        for v in 0..s.vnf_chain.len() {
            let Some(x) = st.vnf_assignment.get(&(d, v)) else { continue };
            let Some(srv) = net.servers().get(x.0) else { continue };
            match node_pos.get(&srv.node) {
                Some(&i) => pos.push((v, i)),
                None => {
                    out.insert(Family::OnPath);
                }
            }
        }
        // Σ_{m ≤ n} f^{v-1} − Σ_{x ∈ X_n} f^v ≥ 0 for every node position n
        let at: BTreeMap<usize, usize> = pos.iter().copied().collect();
        for v in 1..s.vnf_chain.len() {
            let (Some(&prev), Some(&cur)) = (at.get(&(v - 1)), at.get(&v)) else { continue };
            for n in 0..path.nodes.len() {
                let lhs = (prev <= n) as i64 - (cur == n) as i64;
                if lhs < 0 {
                    out.insert(Family::Order);
                }
            }
        }
    }
    for (&(d, v), _) in &st.vnf_assignment {
        if d.0 < scn.demands.len() && !st.demand_route.contains_key(&d) {
            let s = &scn.sfcs[scn.demands[d.0].sfc.0];
            if v < s.vnf_chain.len() {
                out.insert(Family::OnPath);
            }
        }
        if d.0 < scn.demands.len() && v >= scn.sfcs[scn.demands[d.0].sfc.0].vnf_chain.len() {
            out.insert(Family::OneServer);
        }
    }
    if dangling {
        if st.vnf_assignment.keys().any(|(d, _)| d.0 >= scn.demands.len())
            || st.vnf_assignment.values().any(|x| x.0 >= net.servers().len())
        {
            out.insert(Family::OneServer);
        }
        return out;
    }

    // Σ_x f_x^{v,s} ≤ R·Σ_p z_p^s + 1 − R
    let inst = instances(scn, st);
    for s in &scn.sfcs {
        let active: BTreeSet<PathId> = st
            .demand_route
            .iter()
            .filter(|(d, _)| scn.demands[d.0].sfc == s.id)
            .map(|(_, p)| *p)
            .collect();
        for (v, t) in s.vnf_chain.iter().enumerate() {
            let r = if st.single_instance || !scn.vnf_catalog[t.0].replicable { 0 } else { 1 };
            let count = inst.iter().filter(|(a, b, _)| *a == s.id && *b == v).count() as i64;
            if count > r * active.len() as i64 + 1 - r {
                out.insert(Family::Replication);
            }
        }
    }

    let loads = link_loads(scn, st);
    for (l, load) in loads.iter().enumerate() {
        if link_capacitated(scn, l) && load / net.links()[l].capacity_max > 1.0 {
            out.insert(Family::LinkCapacity);
        }
    }
    for (x, gamma) in server_loads(scn, st).iter().enumerate() {
        if gamma / net.servers()[x].capacity_max > 1.0 {
            out.insert(Family::ServerCapacity);
        }
    }

    // g = f·f for servers at distinct nodes, one h per node pair with g
    let mut needed = BTreeSet::new();
    for &(s, v, x) in &inst {
        for &(s2, v2, y) in &inst {
            let (n, m) = (net.servers()[x.0].node, net.servers()[y.0].node);
            if s == s2 && v == v2 && n != m {
                needed.insert((s, v, n, m));
            }
        }
    }
    for key in &needed {
        let found = st
            .sync_route
            .iter()
            .filter(|(k, _)| (k.sfc, k.vnf, k.from, k.to) == *key)
            .map(|(_, p)| *p)
            .collect::<Vec<_>>();
        let ok = found.len() == 1
            && net.paths().get(found[0].0).is_some_and(|p| p.nodes.first() == Some(&key.2) && p.nodes.last() == Some(&key.3));
        if !ok {
            out.insert(Family::Sync);
        }
    }
    if st.sync_route.keys().any(|k| !needed.contains(&(k.sfc, k.vnf, k.from, k.to))) {
        out.insert(Family::Sync);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiteralCost {
    pub edge_opex: f64,
    pub cloud_charges: f64,
    pub penalties: f64,
    pub total: f64,
    pub n_mgr: usize,
    pub n_rep: usize,
}

/// D_s^max = Σ Dpm + D_net.
pub fn d_max(scn: &Scenario<f64>, s: SfcId) -> f64 {
    scn.sfcs[s.0].vnf_chain.iter().map(|t| scn.vnf_catalog[t.0].delay_proc_max).sum::<f64>() + scn.params.d_net
}

/// ρ_s = ρ·Σ K_t.
pub fn rho(scn: &Scenario<f64>, s: SfcId) -> f64 {
    scn.params.penalty_fraction * scn.sfcs[s.0].vnf_chain.iter().map(|t| scn.vnf_catalog[t.0].cloud_price).sum::<f64>()
}

/// End-to-end delay of every scoped demand.
pub fn delays(scn: &Scenario<f64>, st: &PlacementState) -> BTreeMap<DemandId, f64> {
    let net = &scn.network;
    let inst = instances(scn, st);
    let traffic = instance_traffic(scn, st);
    let gamma = server_loads(scn, st);
    let util: Vec<f64> = gamma.iter().zip(net.servers()).map(|(g, x)| g / x.capacity_max).collect();
    let dwt = |s: SfcId| -> f64 {
        let lost = st.initial_snapshot.as_ref().map_or(0, |snap| {
            snap.iter().filter(|(a, v, x)| *a == s && !inst.contains(&(*a, *v, *x))).count()
        });
        scn.params.d_dwt * lost as f64
    };
    let mut out = BTreeMap::new();
    for &d in &st.scope {
        let s = scn.demands[d.0].sfc;
        let p = &net.paths()[st.demand_route[&d].0];
        let prop: f64 = p.links.iter().map(|l| net.links()[l.0].prop_delay).sum();
        let mut proc = 0.0;
        for (v, t) in scn.sfcs[s.0].vnf_chain.iter().enumerate() {
            let ty = &scn.vnf_catalog[t.0];
            let x = st.vnf_assignment[&(d, v)];
            let q = ty.delay_queue * ty.load_ratio * traffic[&(s, v, x)] / ty.proc_capacity_max;
            proc += q + ty.delay_proc_min + ty.delay_proc_slope * util[x.0];
        }
        out.insert(d, prop + proc + dwt(s));
    }
    out
}

/// Objective of a feasible state: edge OPEX, cloud charges and penalties.
pub fn cost(scn: &Scenario<f64>, st: &PlacementState) -> LiteralCost {
    let net = &scn.network;
    let inst = instances(scn, st);
    let gamma = server_loads(scn, st);
    let mut edge_opex = 0.0;
    let mut cloud_charges = 0.0;
    for x in net.servers() {
        let used = inst.iter().any(|(_, _, y)| *y == x.id);
        if cloud_node(scn, x.node) {
            for (s, v, _) in inst.iter().filter(|(_, _, y)| *y == x.id) {
                cloud_charges += scn.vnf_catalog[scn.sfcs[s.0].vnf_chain[*v].0].cloud_price;
            }
        } else {
            let u = gamma[x.id.0] / x.capacity_max;
            edge_opex += if used { x.idle_energy_cost } else { 0.0 }
                + x.utilization_cost_slope * u
                + x.fixed_maintenance_cost;
        }
    }
    let mut penalties = 0.0;
    for (d, delay) in delays(scn, st) {
        let s = scn.demands[d.0].sfc;
        penalties += ((delay / d_max(scn, s) - 1.0) * rho(scn, s)).max(0.0);
    }
    let n_mgr = st.initial_snapshot.as_ref().map_or(0, |snap| snap.iter().filter(|k| !inst.contains(k)).count());
    let mut per: BTreeMap<(SfcId, usize), usize> = BTreeMap::new();
    for (s, v, _) in &inst {
        *per.entry((*s, *v)).or_default() += 1;
    }
    let n_rep = per.values().map(|n| n - 1).sum();
    LiteralCost { edge_opex, cloud_charges, penalties, total: edge_opex + cloud_charges + penalties, n_mgr, n_rep }
}

/// Relative closeness for cost comparisons.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Widens a library scalar for comparison with the oracle.
pub fn wide<S: Scalar>(x: S) -> f64 {
    x.as_f64()
}
