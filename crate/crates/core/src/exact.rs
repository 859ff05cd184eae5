//! Exact optimization for tiny instances by depth-first branch and bound.
//!
//! Demands are branched in descending bandwidth order, each over its
//! admissible paths (ascending delay) and then over server sequences along
//! the path that respect the chain order. Partial states are pruned when a
//! capacity is exceeded beyond [`PRUNE_SLACK`], when the replication limit
//! can no longer be met, or when the partial edge OPEX plus cloud charges
//! already reach the incumbent. Both terms only grow as assignments are
//! added and penalties are non-negative, so the bound never cuts off a
//! strictly better leaf. Leaves get sync routes, are checked by every
//! validator and are priced by the cost module.

use thiserror::Error;

use crate::cost::{self, CostBreakdown};
use crate::ids::{DemandId, PathId, ServerId, SfcId};
use crate::scalar::{self, Scalar};
use crate::state::{self, PlacementState, Usage};
use crate::workload::Scenario;

pub mod lp;

/// Relative capacity overshoot tolerated before a partial state is pruned.
/// Leaves are validated exactly, so this only has to absorb rounding.
pub const PRUNE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactLimits {
    /// Refuse instances with more complete assignments than this.
    pub max_assignments: f64,
    /// Stop after this many search nodes.
    pub max_nodes: u64,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_assignments: 1e8, max_nodes: 50_000_000 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("instance has no feasible placement")]
    Infeasible,
    #[error("instance too large for exact search: {bound:.3e} complete assignments exceed the limit {limit:.3e}")]
    TooLarge { bound: f64, limit: f64 },
    #[error("search budget of {0} nodes exhausted before any feasible placement was found")]
    BudgetExhausted(u64),
}

#[derive(Clone, Debug)]
pub struct ExactResult<S> {
    pub best_state: PlacementState,
    pub best_cost: CostBreakdown<S>,
    pub nodes_explored: u64,
    pub proven_optimal: bool,
}

/// Number of complete assignments of the scoped demands: per demand, the
/// sum over admissible paths of |X_p|^|V_s|, multiplied over demands.
pub fn assignment_bound<S: Scalar>(scn: &Scenario<S>, template: &PlacementState) -> f64 {
    template
        .scope
        .iter()
        .map(|&d| {
            let sfc = scn.sfc(scn.demand(d).sfc);
            sfc.admissible_paths
                .iter()
                .map(|p| (scn.network.path(*p).servers.len() as f64).powi(sfc.len() as i32))
                .sum::<f64>()
        })
        .product()
}

struct Search<'a, S> {
    scn: &'a Scenario<S>,
    order: Vec<DemandId>,
    /// Scoped demands of each chain not yet branched on, per depth.
    remaining_after: Vec<Vec<usize>>,
    state: PlacementState,
    usage: Usage<S>,
    best: Option<(PlacementState, CostBreakdown<S>)>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
}

fn over<S: Scalar>(load: S, cap: S) -> bool {
    load > cap * (S::one() + S::lit(PRUNE_SLACK))
}

impl<S: Scalar> Search<'_, S> {
    fn lower_bound(&self) -> S {
        let mut edge = S::zero();
        let mut cloud = S::zero();
        for srv in self.scn.network.servers() {
            if srv.is_cloud {
                continue;
            }
            edge = edge
                + cost::opex_value(
                    !self.usage.hosted[srv.id.0].is_empty(),
                    self.usage.server_util(self.scn, srv.id),
                    srv.idle_energy_cost,
                    srv.utilization_cost_slope,
                    srv.fixed_maintenance_cost,
                );
        }
        for sfc in &self.scn.sfcs {
            for (v, insts) in self.usage.instances[sfc.id.0].iter().enumerate() {
                for x in insts.keys() {
                    if self.scn.network.server(*x).is_cloud {
                        cloud = cloud + self.scn.vnf_type(sfc.id, v).cloud_price;
                    }
                }
            }
        }
        edge + cloud
    }

    fn pruned(&self) -> bool {
        match &self.best {
            Some((_, c)) => self.lower_bound() >= c.total,
            None => false,
        }
    }

    /// Replication limit still reachable for `sfc` at `depth`.
    fn replication_open(&self, sfc: SfcId, depth: usize) -> bool {
        let active = self.usage.path_use[sfc.0].len();
        let open = self.remaining_after[depth][sfc.0];
        let max_active = (active + open).min(self.scn.sfc(sfc).admissible_paths.len());
        (0..self.scn.sfc(sfc).len()).all(|v| {
            self.usage.instance_count(sfc, v)
                <= state::replication_limit(self.scn, self.state.single_instance, sfc, v, max_active)
        })
    }

    fn links_ok(&self, p: PathId) -> bool {
        self.scn.network.path(p).links.iter().all(|l| {
            let link = self.scn.network.link(*l);
            !link.is_capacitated() || !over(self.usage.link_load[l.0], link.capacity_max)
        })
    }

    fn servers_ok(&self, servers: &[ServerId]) -> bool {
        servers.iter().all(|x| !over(self.usage.server_load[x.0], self.scn.network.server(*x).capacity_max))
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.exhausted = true;
        }
        !self.exhausted
    }

    fn leaf(&mut self) {
        let Ok(synced) = state::assign_sync_routes(self.scn, &self.state) else { return };
        if !state::validate_all(self.scn, &synced).is_empty() {
            return;
        }
        let usage = Usage::from_state(self.scn, &synced);
        let Ok(c) = cost::evaluate(self.scn, &synced, &usage) else { return };
        if self.best.as_ref().map_or(true, |(_, b)| c.total < b.total) {
            self.best = Some((synced, c));
        }
    }

    fn branch_demand(&mut self, depth: usize) {
        if self.exhausted {
            return;
        }
        if depth == self.order.len() {
            self.leaf();
            return;
        }
        let d = self.order[depth];
        let sfc = self.scn.demand(d).sfc;
        let len = self.scn.sfc(sfc).len();
        for &p in &self.scn.sfc(sfc).admissible_paths {
            let mut servers = Vec::with_capacity(len);
            self.branch_server(depth, d, p, 0, &mut servers);
            if self.exhausted {
                return;
            }
        }
    }

    fn branch_server(&mut self, depth: usize, d: DemandId, p: PathId, min_node: usize, servers: &mut Vec<ServerId>) {
        let sfc = self.scn.demand(d).sfc;
        let len = self.scn.sfc(sfc).len();
        if servers.len() == len {
            if !self.tick() {
                return;
            }
            self.state.place_demand(d, p, servers);
            self.usage.add_demand(self.scn, d, p, servers);
            let ok = self.links_ok(p)
                && self.servers_ok(servers)
                && self.replication_open(sfc, depth + 1)
                && !self.pruned();
            if ok {
                self.branch_demand(depth + 1);
            }
            self.usage.remove_demand(self.scn, d, p, servers);
            self.state.unplace_demand(d);
            return;
        }
        let path = self.scn.network.path(p);
        for i in 0..path.servers.len() {
            if path.server_node_pos[i] < min_node {
                continue;
            }
            servers.push(path.servers[i]);
            self.branch_server(depth, d, p, path.server_node_pos[i], servers);
            servers.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

/// Minimum-cost placement of the scoped demands of `template`, which also
/// supplies the snapshot and replication mode.
pub fn solve_exact<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    limits: ExactLimits,
) -> Result<ExactResult<S>, ExactError> {
    let bound = assignment_bound(scn, template);
    if bound > limits.max_assignments {
        return Err(ExactError::TooLarge { bound, limit: limits.max_assignments });
    }
    let mut order: Vec<DemandId> = template.scope.iter().copied().collect();
    order.sort_by(|a, b| scalar::cmp(scn.demand(*b).bandwidth, scn.demand(*a).bandwidth).then(a.cmp(b)));
    let mut remaining_after = Vec::with_capacity(order.len() + 1);
    for depth in 0..=order.len() {
        let mut left = vec![0; scn.sfcs.len()];
        for d in &order[depth..] {
            left[scn.demand(*d).sfc.0] += 1;
        }
        remaining_after.push(left);
    }
    let mut empty = template.clone();
    empty.demand_route.clear();
    empty.vnf_assignment.clear();
    empty.sync_route.clear();
    let usage = Usage::from_state(scn, &empty);
    let mut search = Search {
        scn,
        order,
        remaining_after,
        state: empty,
        usage,
        best: None,
        nodes: 0,
        max_nodes: limits.max_nodes,
        exhausted: false,
    };
    search.branch_demand(0);
    let proven_optimal = !search.exhausted;
    match search.best {
        Some((best_state, best_cost)) => {
            Ok(ExactResult { best_state, best_cost, nodes_explored: search.nodes, proven_optimal })
        }
        None if search.exhausted => Err(ExactError::BudgetExhausted(limits.max_nodes)),
        None => Err(ExactError::Infeasible),
    }
}

