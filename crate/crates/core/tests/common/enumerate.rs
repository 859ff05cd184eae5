//! Exhaustive search: every path and every server of that path for every
//! VNF of every scoped demand, every sync path choice, feasibility by the
//! literal oracle. No pruning, no ordering tricks.

use std::collections::BTreeSet;

use sfcplace::cost;
use sfcplace::state::{PlacementState, SyncKey};
use sfcplace::workload::Scenario;
use sfcplace::{DemandId, PathId, ServerId};

use super::literal;

/// Per demand, every (path, servers) choice: Σ_p |X_p|^|V_s|.
pub fn choices(scn: &Scenario<f64>, d: DemandId) -> Vec<(PathId, Vec<ServerId>)> {
    let s = &scn.sfcs[scn.demands[d.0].sfc.0];
    let mut out = Vec::new();
    for &p in &s.admissible_paths {
        let xs = &scn.network.paths()[p.0].servers;
        let mut idx = vec![0usize; s.vnf_chain.len()];
        loop {
            out.push((p, idx.iter().map(|&i| xs[i]).collect()));
            // odometer
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < xs.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

/// Number of complete assignments.
pub fn assignment_count(scn: &Scenario<f64>, template: &PlacementState) -> u64 {
    template.scope.iter().map(|&d| choices(scn, d).len() as u64).product()
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub total: f64,
    pub state: PlacementState,
    pub feasible_states: u64,
}

fn sync_options(scn: &Scenario<f64>, st: &PlacementState) -> Vec<(SyncKey, Vec<PathId>)> {
    let inst = literal::instances(scn, st);
    let mut keys = BTreeSet::new();
    for &(s, v, x) in &inst {
        for &(s2, v2, y) in &inst {
            let (n, m) = (scn.network.servers()[x.0].node, scn.network.servers()[y.0].node);
            if s == s2 && v == v2 && n != m {
                keys.insert(SyncKey { sfc: s, vnf: v, from: n, to: m });
            }
        }
    }
    keys.into_iter()
        .map(|k| {
            let paths = scn
                .network
                .paths()
                .iter()
                .filter(|p| p.nodes.first() == Some(&k.from) && p.nodes.last() == Some(&k.to))
                .filter(|p| scn.network.sync_paths_between(k.from, k.to).is_ok_and(|c| c.contains(&p.id)))
                .map(|p| p.id)
                .collect();
            (k, paths)
        })
        .collect()
}

/// Cheapest feasible completion of `template`, priced by the library cost
/// module so totals compare bit for bit. `None` when nothing is feasible.
pub fn optimum(scn: &Scenario<f64>, template: &PlacementState) -> Option<Optimum> {
    let scope: Vec<DemandId> = template.scope.iter().copied().collect();
    let per: Vec<Vec<(PathId, Vec<ServerId>)>> = scope.iter().map(|&d| choices(scn, d)).collect();
    let mut pick = vec![0usize; scope.len()];
    let mut best: Option<Optimum> = None;
    let mut feasible = 0;
    loop {
        let mut st = template.clone();
        st.demand_route.clear();
        st.vnf_assignment.clear();
        st.sync_route.clear();
        for (i, &d) in scope.iter().enumerate() {
            let (p, xs) = &per[i][pick[i]];
            st.demand_route.insert(d, *p);
            for (v, x) in xs.iter().enumerate() {
                st.vnf_assignment.insert((d, v), *x);
            }
        }
        let opts = sync_options(scn, &st);
        let mut sel = vec![0usize; opts.len()];
        if opts.iter().all(|(_, ps)| !ps.is_empty()) {
            loop {
                let mut cand = st.clone();
                for (i, (k, ps)) in opts.iter().enumerate() {
                    cand.sync_route.insert(*k, ps[sel[i]]);
                }
                if literal::violations(scn, &cand).is_empty() {
                    feasible += 1;
                    let c = cost::total_cost(scn, &cand).expect("state feasible for the literal oracle");
                    if best.as_ref().map_or(true, |b| c.total < b.total) {
                        best = Some(Optimum { total: c.total, state: cand, feasible_states: 0 });
                    }
                }
                let mut k = 0;
                while k < sel.len() {
                    sel[k] += 1;
                    if sel[k] < opts[k].1.len() {
                        break;
                    }
                    sel[k] = 0;
                    k += 1;
                }
                if k == sel.len() {
                    break;
                }
            }
        }
        let mut k = 0;
        while k < pick.len() {
            pick[k] += 1;
            if pick[k] < per[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == pick.len() {
            break;
        }
    }
    best.map(|b| Optimum { feasible_states: feasible, ..b })
}
