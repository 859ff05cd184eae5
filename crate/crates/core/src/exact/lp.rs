//! Export of the complete placement model in CPLEX LP format and import of
//! solver output.
//!
//! Every variable carries a typed [`Role`] from which its name is derived,
//! so export, import and [`solution_from_state`] share one registry. The
//! naming scheme is listed in `docs/lp-naming.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::cost;
use crate::ids::{DemandId, LinkId, NodeId, PathId, ServerId, SfcId};
use crate::scalar::Scalar;
use crate::state::{PlacementState, SyncKey, Usage};
use crate::workload::Scenario;

/// Binary values further than this from 0 or 1 are rejected on import.
pub const BINARY_TOLERANCE: f64 = 1e-4;

const LINE_WIDTH: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Active { sfc: SfcId, path: PathId },
    Route { sfc: SfcId, demand: DemandId, path: PathId },
    Instance { sfc: SfcId, vnf: usize, server: ServerId },
    Assign { sfc: SfcId, vnf: usize, server: ServerId, demand: DemandId },
    Used { server: ServerId },
    Pair { sfc: SfcId, vnf: usize, x: ServerId, y: ServerId },
    Sync { sfc: SfcId, vnf: usize, path: PathId },
    Penalty { sfc: SfcId, demand: DemandId, path: PathId },
    Product { sfc: SfcId, demand: DemandId, path: PathId },
    Delay { sfc: SfcId, demand: DemandId, path: PathId },
    AssignDelay { sfc: SfcId, vnf: usize, server: ServerId, demand: DemandId },
    ProcDelay { sfc: SfcId, vnf: usize, server: ServerId },
    Downtime { sfc: SfcId },
    ServerUtil { server: ServerId },
    LinkUtil { link: LinkId },
    Opex { server: ServerId },
    Charge { server: ServerId },
}

impl Role {
    pub fn name(&self) -> String {
        match *self {
            Role::Active { sfc, path } => format!("z_s{}_p{}", sfc.0, path.0),
            Role::Route { sfc, demand, path } => format!("zl_s{}_l{}_p{}", sfc.0, demand.0, path.0),
            Role::Instance { sfc, vnf, server } => format!("f_x{}_v{}_s{}", server.0, vnf, sfc.0),
            Role::Assign { sfc, vnf, server, demand } => {
                format!("fl_x{}_v{}_s{}_l{}", server.0, vnf, sfc.0, demand.0)
            }
            Role::Used { server } => format!("fx_x{}", server.0),
            Role::Pair { sfc, vnf, x, y } => format!("g_x{}_y{}_v{}_s{}", x.0, y.0, vnf, sfc.0),
            Role::Sync { sfc, vnf, path } => format!("h_p{}_v{}_s{}", path.0, vnf, sfc.0),
            Role::Penalty { sfc, demand, path } => format!("q_s{}_l{}_p{}", sfc.0, demand.0, path.0),
            Role::Product { sfc, demand, path } => format!("y_s{}_l{}_p{}", sfc.0, demand.0, path.0),
            Role::Delay { sfc, demand, path } => format!("d_s{}_l{}_p{}", sfc.0, demand.0, path.0),
            Role::AssignDelay { sfc, vnf, server, demand } => {
                format!("dl_x{}_v{}_s{}_l{}", server.0, vnf, sfc.0, demand.0)
            }
            Role::ProcDelay { sfc, vnf, server } => format!("dpro_x{}_v{}_s{}", server.0, vnf, sfc.0),
            Role::Downtime { sfc } => format!("ddwt_s{}", sfc.0),
            Role::ServerUtil { server } => format!("ux_x{}", server.0),
            Role::LinkUtil { link } => format!("ul_e{}", link.0),
            Role::Opex { server } => format!("ke_x{}", server.0),
            Role::Charge { server } => format!("kc_x{}", server.0),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            Role::Active { .. }
                | Role::Route { .. }
                | Role::Instance { .. }
                | Role::Assign { .. }
                | Role::Used { .. }
                | Role::Pair { .. }
                | Role::Sync { .. }
        )
    }

    /// Upper bound other than +inf.
    pub fn upper(&self) -> Option<f64> {
        match self {
            Role::ServerUtil { .. } | Role::LinkUtil { .. } => Some(1.0),
            _ if self.is_binary() => Some(1.0),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    pub vars: Vec<Role>,
    index: BTreeMap<Role, usize>,
    by_name: BTreeMap<String, usize>,
    pub objective: Vec<usize>,
    pub rows: Vec<Row>,
}

impl LpModel {
    fn var(&mut self, role: Role) -> usize {
        if let Some(&i) = self.index.get(&role) {
            return i;
        }
        let i = self.vars.len();
        self.vars.push(role);
        self.index.insert(role, i);
        self.by_name.insert(role.name(), i);
        i
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { name, terms, sense, rhs });
    }

    pub fn get(&self, role: &Role) -> Option<usize> {
        self.index.get(role).copied()
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn objective_value(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.objective
            .iter()
            .map(|&i| values.get(&self.vars[i].name()).copied().unwrap_or(0.0))
            .sum()
    }

    /// The model as an LP document.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ sfcplace placement model\nMinimize\n");
        let obj: Vec<(usize, f64)> = self.objective.iter().map(|&i| (i, 1.0)).collect();
        self.write_expr(&mut out, "obj", &obj, None);
        out.push_str("Subject To\n");
        for r in &self.rows {
            self.write_expr(&mut out, &r.name, &r.terms, Some((r.sense, r.rhs)));
        }
        out.push_str("Bounds\n");
        for role in &self.vars {
            if !role.is_binary() {
                if let Some(ub) = role.upper() {
                    let _ = writeln!(out, " 0 <= {} <= {}", role.name(), num(ub));
                }
            }
        }
        out.push_str("Binary\n");
        for role in self.vars.iter().filter(|r| r.is_binary()) {
            let _ = writeln!(out, " {}", role.name());
        }
        out.push_str("End\n");
        out
    }

    fn write_expr(&self, out: &mut String, name: &str, terms: &[(usize, f64)], rel: Option<(Sense, f64)>) {
        let mut line = format!(" {name}:");
        let mut first = true;
        for &(i, c) in terms {
            let c = round9(c);
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            let mag = c.abs();
            let coef = if mag == 1.0 { String::new() } else { format!("{} ", num(mag)) };
            let tok = if first && c > 0.0 {
                format!(" {coef}{}", self.vars[i].name())
            } else {
                format!(" {sign} {coef}{}", self.vars[i].name())
            };
            first = false;
            if line.len() + tok.len() > LINE_WIDTH {
                out.push_str(&line);
                out.push('\n');
                line = String::from(" ");
            }
            line.push_str(&tok);
        }
        if first {
            line.push_str(" 0");
        }
        if let Some((sense, rhs)) = rel {
            let tok = format!(" {} {}", sense.symbol(), num(rhs));
            if line.len() + tok.len() > LINE_WIDTH {
                out.push_str(&line);
                out.push('\n');
                line = String::from(" ");
            }
            line.push_str(&tok);
        }
        out.push_str(&line);
        out.push('\n');
    }
}

/// Nine significant digits.
fn round9(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted floats parse")
}

fn num(v: f64) -> String {
    let r = round9(v);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Scoped demands per chain and the servers on each chain's admissible paths.
struct Sets {
    lam: Vec<Vec<DemandId>>,
    xs: Vec<Vec<ServerId>>,
}

fn sets<S: Scalar>(scn: &Scenario<S>, template: &PlacementState) -> Sets {
    let mut lam = vec![Vec::new(); scn.sfcs.len()];
    for d in &template.scope {
        lam[scn.demand(*d).sfc.0].push(*d);
    }
    let xs = scn
        .sfcs
        .iter()
        .map(|s| {
            let set: BTreeSet<ServerId> = s
                .admissible_paths
                .iter()
                .flat_map(|p| scn.network.path(*p).servers.iter().copied())
                .collect();
            set.into_iter().collect()
        })
        .collect();
    Sets { lam, xs }
}

/// Ordered node pairs hosting candidate servers of `sfc` and their sync paths.
fn sync_pairs<S: Scalar>(scn: &Scenario<S>, xs: &[ServerId]) -> Vec<(NodeId, NodeId, Vec<PathId>)> {
    let nodes: BTreeSet<NodeId> = xs.iter().map(|x| scn.network.server(*x).node).collect();
    let mut out = Vec::new();
    for &n in &nodes {
        for &m in &nodes {
            if n != m {
                let paths = scn.network.sync_paths_between(n, m).map(|p| p.to_vec()).unwrap_or_default();
                out.push((n, m, paths));
            }
        }
    }
    out
}

/// Builds the model for the scoped demands of `template`, which also
/// supplies the snapshot and replication mode.
pub fn build_model<S: Scalar>(scn: &Scenario<S>, template: &PlacementState) -> LpModel {
    let net = &scn.network;
    let f = |v: S| v.as_f64();
    let Sets { lam, xs } = sets(scn, template);
    let replicas = !template.single_instance;
    let mut m = LpModel::default();
    let chains: Vec<SfcId> = scn.sfcs.iter().filter(|s| !lam[s.id.0].is_empty()).map(|s| s.id).collect();

    // Server-level terms gathered while visiting chains.
    let mut inst_of: Vec<Vec<usize>> = vec![Vec::new(); net.servers().len()];
    let mut load_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.servers().len()];
    let mut charge_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.servers().len()];
    let mut link_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.links().len()];
    let ux: Vec<usize> = net.servers().iter().map(|x| m.var(Role::ServerUtil { server: x.id })).collect();

    for &s in &chains {
        let sfc = scn.sfc(s);
        let lam_s = &lam[s.0];
        let xs_s = &xs[s.0];
        let len = sfc.len();
        let si = s.0;

        for &p in &sfc.admissible_paths {
            m.var(Role::Active { sfc: s, path: p });
        }
        for &d in lam_s {
            for &p in &sfc.admissible_paths {
                let zl = m.var(Role::Route { sfc: s, demand: d, path: p });
                let bw = f(scn.demand(d).bandwidth);
                for l in &net.path(p).links {
                    let link = net.link(*l);
                    if link.is_capacitated() {
                        link_terms[l.0].push((zl, -bw / f(link.capacity_max)));
                    }
                }
            }
        }

        // one path per demand, path activation
        for &d in lam_s {
            let terms = sfc.admissible_paths.iter().map(|&p| (m.var(Role::Route { sfc: s, demand: d, path: p }), 1.0)).collect();
            m.row(format!("route_s{si}_l{}", d.0), terms, Sense::Eq, 1.0);
        }
        for &p in &sfc.admissible_paths {
            let z = m.var(Role::Active { sfc: s, path: p });
            let mut hi = vec![(z, 1.0)];
            for &d in lam_s {
                let zl = m.var(Role::Route { sfc: s, demand: d, path: p });
                m.row(format!("actlo_s{si}_l{}_p{}", d.0, p.0), vec![(zl, 1.0), (z, -1.0)], Sense::Le, 0.0);
                hi.push((zl, -1.0));
            }
            m.row(format!("acthi_s{si}_p{}", p.0), hi, Sense::Le, 0.0);
        }

        // placement
        for v in 0..len {
            let ty = scn.vnf_type(s, v);
            for &d in lam_s {
                let terms = xs_s
                    .iter()
                    .map(|&x| (m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d }), 1.0))
                    .collect();
                m.row(format!("assign_s{si}_v{v}_l{}", d.0), terms, Sense::Eq, 1.0);
            }
            for &x in xs_s {
                let fi = m.var(Role::Instance { sfc: s, vnf: v, server: x });
                inst_of[x.0].push(fi);
                let cap = f(net.server(x).capacity_max);
                load_terms[x.0].push((fi, -f(ty.overhead) / cap));
                if net.server(x).is_cloud {
                    charge_terms[x.0].push((fi, -f(ty.cloud_price)));
                }
                let mut hi = vec![(fi, 1.0)];
                for &d in lam_s {
                    let fl = m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d });
                    m.row(format!("instlo_x{}_v{v}_s{si}_l{}", x.0, d.0), vec![(fl, 1.0), (fi, -1.0)], Sense::Le, 0.0);
                    hi.push((fl, -1.0));
                    load_terms[x.0].push((fl, -f(ty.load_ratio * scn.demand(d).bandwidth) / cap));
                }
                m.row(format!("insthi_x{}_v{v}_s{si}", x.0), hi, Sense::Le, 0.0);
            }
            let r = if ty.replicable { 1.0 } else { 0.0 };
            let mut terms: Vec<(usize, f64)> =
                xs_s.iter().map(|&x| (m.var(Role::Instance { sfc: s, vnf: v, server: x }), 1.0)).collect();
            let inst_terms = terms.clone();
            for &p in &sfc.admissible_paths {
                terms.push((m.var(Role::Active { sfc: s, path: p }), -r));
            }
            m.row(format!("repl_s{si}_v{v}"), terms, Sense::Le, 1.0 - r);
            if template.single_instance {
                m.row(format!("single_s{si}_v{v}"), inst_terms, Sense::Le, 1.0);
            }
        }

        // VNFs on the chosen path, in chain order
        for &d in lam_s {
            for &p in &sfc.admissible_paths {
                let zl = m.var(Role::Route { sfc: s, demand: d, path: p });
                let path = net.path(p);
                for v in 0..len {
                    let mut terms = vec![(zl, 1.0)];
                    for &x in &path.servers {
                        terms.push((m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d }), -1.0));
                    }
                    m.row(format!("onpath_s{si}_l{}_p{}_v{v}", d.0, p.0), terms, Sense::Le, 0.0);
                }
                let positions: BTreeSet<usize> = path.server_node_pos.iter().copied().collect();
                for v in 1..len {
                    for &pos in &positions {
                        let mut terms = Vec::new();
                        for (i, &y) in path.servers.iter().enumerate() {
                            if path.server_node_pos[i] <= pos {
                                terms.push((m.var(Role::Assign { sfc: s, vnf: v - 1, server: y, demand: d }), 1.0));
                            }
                        }
                        for (i, &x) in path.servers.iter().enumerate() {
                            if path.server_node_pos[i] == pos {
                                terms.push((m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d }), -1.0));
                            }
                        }
                        terms.push((zl, -1.0));
                        m.row(
                            format!("order_s{si}_l{}_p{}_v{v}_n{}", d.0, p.0, path.nodes[pos].0),
                            terms,
                            Sense::Ge,
                            -1.0,
                        );
                    }
                }
            }
        }

        // replica synchronization
        if replicas {
            let pairs = sync_pairs(scn, xs_s);
            let scoped = lam_s.len() as f64;
            for v in 0..len {
                let amount = f(scn.vnf_type(s, v).sync_ratio) * scoped;
                for (n, mm, paths) in &pairs {
                    let hs: Vec<usize> = paths.iter().map(|&p| m.var(Role::Sync { sfc: s, vnf: v, path: p })).collect();
                    for (&p, &h) in paths.iter().zip(&hs) {
                        for l in &net.path(p).links {
                            let link = net.link(*l);
                            if link.is_capacitated() {
                                link_terms[l.0].push((h, -amount / f(link.capacity_max)));
                            }
                        }
                    }
                    let at_n: Vec<ServerId> = xs_s.iter().copied().filter(|x| net.server(*x).node == *n).collect();
                    let at_m: Vec<ServerId> = xs_s.iter().copied().filter(|x| net.server(*x).node == *mm).collect();
                    let mut gs = Vec::new();
                    for &x in &at_n {
                        for &y in &at_m {
                            let g = m.var(Role::Pair { sfc: s, vnf: v, x, y });
                            gs.push(g);
                            let fx = m.var(Role::Instance { sfc: s, vnf: v, server: x });
                            let fy = m.var(Role::Instance { sfc: s, vnf: v, server: y });
                            let tag = format!("x{}_y{}_v{v}_s{si}", x.0, y.0);
                            m.row(format!("gx_{tag}"), vec![(g, 1.0), (fx, -1.0)], Sense::Le, 0.0);
                            m.row(format!("gy_{tag}"), vec![(g, 1.0), (fy, -1.0)], Sense::Le, 0.0);
                            m.row(format!("gxy_{tag}"), vec![(g, 1.0), (fx, -1.0), (fy, -1.0)], Sense::Ge, -1.0);
                            let mut sel = vec![(g, 1.0)];
                            sel.extend(hs.iter().map(|&h| (h, -1.0)));
                            m.row(format!("syncsel_{tag}"), sel, Sense::Le, 0.0);
                        }
                    }
                    let tag = format!("n{}_m{}_v{v}_s{si}", n.0, mm.0);
                    if !hs.is_empty() {
                        m.row(format!("syncone_{tag}"), hs.iter().map(|&h| (h, 1.0)).collect(), Sense::Le, 1.0);
                        let mut need: Vec<(usize, f64)> = hs.iter().map(|&h| (h, 1.0)).collect();
                        need.extend(gs.iter().map(|&g| (g, -1.0)));
                        m.row(format!("syncneed_{tag}"), need, Sense::Le, 0.0);
                    }
                }
            }
        }

        // delays
        for v in 0..len {
            let ty = scn.vnf_type(s, v);
            for &x in xs_s {
                let dpro = m.var(Role::ProcDelay { sfc: s, vnf: v, server: x });
                let mut terms = vec![(dpro, 1.0)];
                for &d in lam_s {
                    let fl = m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d });
                    let c = ty.delay_queue * (ty.load_ratio * scn.demand(d).bandwidth) / ty.proc_capacity_max;
                    terms.push((fl, -f(c)));
                }
                terms.push((m.var(Role::Instance { sfc: s, vnf: v, server: x }), -f(ty.delay_proc_min)));
                terms.push((ux[x.0], -f(ty.delay_proc_slope)));
                m.row(format!("dpro_x{}_v{v}_s{si}", x.0), terms, Sense::Eq, 0.0);
            }
        }
        let ddwt = template.initial_snapshot.as_ref().map(|snap| {
            let dw = m.var(Role::Downtime { sfc: s });
            let dwt = f(scn.params.d_dwt);
            let mut terms = vec![(dw, 1.0)];
            let mut count = 0usize;
            for &(a, v, x) in snap {
                if a != s {
                    continue;
                }
                count += 1;
                if let Some(fi) = m.get(&Role::Instance { sfc: s, vnf: v, server: x }) {
                    terms.push((fi, dwt));
                }
            }
            m.row(format!("dwt_s{si}"), terms, Sense::Eq, dwt * count as f64);
            dw
        });
        for &d in lam_s {
            for v in 0..len {
                let dpm = f(scn.vnf_type(s, v).delay_proc_max);
                for &x in xs_s {
                    let dl = m.var(Role::AssignDelay { sfc: s, vnf: v, server: x, demand: d });
                    let dpro = m.var(Role::ProcDelay { sfc: s, vnf: v, server: x });
                    let fl = m.var(Role::Assign { sfc: s, vnf: v, server: x, demand: d });
                    let tag = format!("x{}_v{v}_s{si}_l{}", x.0, d.0);
                    m.row(format!("dlo_{tag}"), vec![(dl, 1.0), (dpro, -1.0), (fl, -dpm)], Sense::Ge, -dpm);
                    m.row(format!("dhi_{tag}"), vec![(dl, 1.0), (fl, -dpm)], Sense::Le, 0.0);
                }
            }
        }
        let d_hat = f(sfc.d_hat_max);
        let rho = f(sfc.penalty_rate);
        let d_max = f(sfc.d_max);
        for &d in lam_s {
            for &p in &sfc.admissible_paths {
                let path = net.path(p);
                let dv = m.var(Role::Delay { sfc: s, demand: d, path: p });
                let mut terms = vec![(dv, 1.0)];
                for &x in &path.servers {
                    for v in 0..len {
                        terms.push((m.var(Role::AssignDelay { sfc: s, vnf: v, server: x, demand: d }), -1.0));
                    }
                }
                if let Some(dw) = ddwt {
                    terms.push((dw, -1.0));
                }
                let tag = format!("s{si}_l{}_p{}", d.0, p.0);
                m.row(format!("delay_{tag}"), terms, Sense::Eq, f(path.total_prop_delay));
                let y = m.var(Role::Product { sfc: s, demand: d, path: p });
                let zl = m.var(Role::Route { sfc: s, demand: d, path: p });
                m.row(format!("ylo_{tag}"), vec![(y, 1.0), (dv, -1.0)], Sense::Le, 0.0);
                m.row(format!("yz_{tag}"), vec![(y, 1.0), (zl, -d_hat)], Sense::Le, 0.0);
                m.row(format!("yhi_{tag}"), vec![(y, 1.0), (dv, -1.0), (zl, -d_hat)], Sense::Ge, -d_hat);
                let q = m.var(Role::Penalty { sfc: s, demand: d, path: p });
                m.row(format!("pen_{tag}"), vec![(q, 1.0), (y, -rho / d_max), (zl, rho)], Sense::Ge, 0.0);
                m.objective.push(q);
            }
        }
    }

    // server usage, link and server utilization, server costs
    let max_len = scn.sfcs.iter().map(|s| s.len()).max().unwrap_or(0).max(1);
    let scale = 1.0 / (scn.sfcs.len().max(1) * max_len) as f64;
    for srv in net.servers() {
        let x = srv.id;
        let fx = m.var(Role::Used { server: x });
        if !inst_of[x.0].is_empty() {
            let mut lo = vec![(fx, 1.0)];
            lo.extend(inst_of[x.0].iter().map(|&i| (i, -scale)));
            m.row(format!("usedlo_x{}", x.0), lo, Sense::Ge, 0.0);
        }
        let mut hi = vec![(fx, 1.0)];
        hi.extend(inst_of[x.0].iter().map(|&i| (i, -1.0)));
        m.row(format!("usedhi_x{}", x.0), hi, Sense::Le, 0.0);
    }
    for l in net.links() {
        if !l.is_capacitated() {
            continue;
        }
        let ul = m.var(Role::LinkUtil { link: l.id });
        let mut terms = vec![(ul, 1.0)];
        terms.extend(link_terms[l.id.0].iter().copied());
        m.row(format!("link_e{}", l.id.0), terms, Sense::Eq, 0.0);
    }
    for srv in net.servers() {
        let mut terms = vec![(ux[srv.id.0], 1.0)];
        terms.extend(load_terms[srv.id.0].iter().copied());
        m.row(format!("load_x{}", srv.id.0), terms, Sense::Eq, 0.0);
    }
    for srv in net.servers() {
        let x = srv.id;
        if srv.is_cloud {
            let kc = m.var(Role::Charge { server: x });
            let mut terms = vec![(kc, 1.0)];
            terms.extend(charge_terms[x.0].iter().copied());
            m.row(format!("cloud_x{}", x.0), terms, Sense::Eq, 0.0);
            m.objective.push(kc);
        } else {
            let ke = m.var(Role::Opex { server: x });
            let fx = m.var(Role::Used { server: x });
            m.row(
                format!("opex_x{}", x.0),
                vec![(ke, 1.0), (fx, -f(srv.idle_energy_cost)), (ux[x.0], -f(srv.utilization_cost_slope))],
                Sense::Eq,
                f(srv.fixed_maintenance_cost),
            );
            m.objective.push(ke);
        }
    }
    m
}

/// LP document of the placement problem described by `template`.
/// Identical inputs give byte-identical output.
pub fn export_milp<S: Scalar>(scn: &Scenario<S>, template: &PlacementState) -> String {
    build_model(scn, template).to_lp()
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("line {line}: expected `name value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("binary variable {name} has fractional value {value}")]
    Fractional { name: String, value: f64 },
    #[error("conflicting values: {0}")]
    Conflict(String),
}

/// `name value` pairs, one per line. Blank lines and lines starting with
/// `#` or `\` are skipped.
pub fn parse_solution(text: &str) -> Result<BTreeMap<String, f64>, LpError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let bad = || LpError::Malformed { line: i + 1, text: raw.to_string() };
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else { return Err(bad()) };
        let value: f64 = value.parse().map_err(|_| bad())?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

pub fn write_solution(values: &BTreeMap<String, f64>) -> String {
    let mut out = String::new();
    for (k, v) in values {
        let _ = writeln!(out, "{k} {v}");
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportedSolution {
    pub state: PlacementState,
    /// Objective recomputed from the variable values.
    pub objective: f64,
}

/// Rebuilds a placement from solver output. Variables absent from the
/// document are taken as zero.
pub fn import_solution<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    text: &str,
) -> Result<ImportedSolution, LpError> {
    let model = build_model(scn, template);
    let values = parse_solution(text)?;
    let mut state = template.clone();
    state.demand_route.clear();
    state.vnf_assignment.clear();
    state.sync_route.clear();
    for (name, &value) in &values {
        let i = model.lookup(name).ok_or_else(|| LpError::UnknownVariable(name.clone()))?;
        let role = model.vars[i];
        if !role.is_binary() {
            continue;
        }
        let near = value.round();
        if (value - near).abs() > BINARY_TOLERANCE || !(near == 0.0 || near == 1.0) {
            return Err(LpError::Fractional { name: name.clone(), value });
        }
        if value < 0.5 {
            continue;
        }
        match role {
            Role::Route { demand, path, .. } => {
                if state.demand_route.insert(demand, path).is_some() {
                    return Err(LpError::Conflict(format!("demand {demand} uses several paths")));
                }
            }
            Role::Assign { vnf, server, demand, .. } => {
                if state.vnf_assignment.insert((demand, vnf), server).is_some() {
                    return Err(LpError::Conflict(format!("VNF {vnf} of demand {demand} on several servers")));
                }
            }
            Role::Sync { sfc, vnf, path } => {
                let p = scn.network.path(path);
                let key = SyncKey { sfc, vnf, from: p.src(), to: p.dst() };
                if state.sync_route.insert(key, path).is_some() {
                    return Err(LpError::Conflict(format!("several sync paths for {key:?}")));
                }
            }
            _ => {}
        }
    }
    Ok(ImportedSolution { objective: model.objective_value(&values), state })
}

/// Values of every model variable implied by `state`, with the delay
/// variables at their exact values.
pub fn solution_from_state<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    state: &PlacementState,
) -> BTreeMap<String, f64> {
    let model = build_model(scn, template);
    let net = &scn.network;
    let u = Usage::from_state(scn, state);
    let b = |c: bool| if c { S::one() } else { S::zero() };
    let has = |s: SfcId, v: usize, x: ServerId| u.instances[s.0].get(v).is_some_and(|m| m.contains_key(&x));
    let dpro = |s: SfcId, v: usize, x: ServerId| {
        let ty = scn.vnf_type(s, v);
        let traffic = u.instances[s.0][v].get(&x).map_or(S::zero(), |i| i.traffic);
        ty.delay_queue * (ty.load_ratio * traffic) / ty.proc_capacity_max
            + ty.delay_proc_min * b(has(s, v, x))
            + ty.delay_proc_slope * u.server_util(scn, x)
    };
    let downtime = |s: SfcId| {
        let migrated = state
            .initial_snapshot
            .as_ref()
            .map_or(0, |snap| snap.iter().filter(|(a, v, x)| *a == s && !has(s, *v, *x)).count());
        scn.params.d_dwt * S::lit(migrated as f64)
    };
    let delay = |s: SfcId, d: DemandId, p: PathId| {
        let path = net.path(p);
        let mut proc = S::zero();
        for v in 0..scn.sfc(s).len() {
            if let Some(&x) = state.vnf_assignment.get(&(d, v)) {
                if path.servers.contains(&x) {
                    proc = proc + dpro(s, v, x);
                }
            }
        }
        let dwt = if state.initial_snapshot.is_some() { downtime(s) } else { S::zero() };
        path.total_prop_delay + proc + dwt
    };
    let routed = |d: DemandId, p: PathId| state.demand_route.get(&d) == Some(&p);
    let mut out = BTreeMap::new();
    for role in &model.vars {
        let value: S = match *role {
            Role::Active { sfc, path } => b(u.path_use[sfc.0].contains_key(&path)),
            Role::Route { demand, path, .. } => b(routed(demand, path)),
            Role::Instance { sfc, vnf, server } => b(has(sfc, vnf, server)),
            Role::Assign { vnf, server, demand, .. } => b(state.vnf_assignment.get(&(demand, vnf)) == Some(&server)),
            Role::Used { server } => b(!u.hosted[server.0].is_empty()),
            Role::Pair { sfc, vnf, x, y } => b(has(sfc, vnf, x) && has(sfc, vnf, y)),
            Role::Sync { sfc, vnf, path } => {
                let p = net.path(path);
                b(state.sync_route.get(&SyncKey { sfc, vnf, from: p.src(), to: p.dst() }) == Some(&path))
            }
            Role::Penalty { sfc, demand, path } => {
                if routed(demand, path) {
                    cost::penalty_value(scn.sfc(sfc), delay(sfc, demand, path))
                } else {
                    S::zero()
                }
            }
            Role::Product { sfc, demand, path } => {
                if routed(demand, path) {
                    delay(sfc, demand, path)
                } else {
                    S::zero()
                }
            }
            Role::Delay { sfc, demand, path } => delay(sfc, demand, path),
            Role::AssignDelay { sfc, vnf, server, demand } => {
                if state.vnf_assignment.get(&(demand, vnf)) == Some(&server) {
                    dpro(sfc, vnf, server)
                } else {
                    S::zero()
                }
            }
            Role::ProcDelay { sfc, vnf, server } => dpro(sfc, vnf, server),
            Role::Downtime { sfc } => downtime(sfc),
            Role::ServerUtil { server } => u.server_util(scn, server),
            Role::LinkUtil { link } => u.link_util(scn, link),
            Role::Opex { server } => {
                let srv = net.server(server);
                cost::opex_value(
                    !u.hosted[server.0].is_empty(),
                    u.server_util(scn, server),
                    srv.idle_energy_cost,
                    srv.utilization_cost_slope,
                    srv.fixed_maintenance_cost,
                )
            }
            Role::Charge { server } => {
                let mut total = S::zero();
                for &(s, v) in &u.hosted[server.0] {
                    total = total + scn.vnf_type(s, v).cloud_price;
                }
                total
            }
        };
        out.insert(role.name(), value.as_f64());
    }
    out
}
