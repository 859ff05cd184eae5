//! Delay model and the monetary objective.
//!
//! Summation order is fixed so that totals are reproducible bit for bit:
//! edge OPEX over edge servers in id order, cloud charges over instances in
//! (chain, position, server) order, penalties over scoped demands in id
//! order, and `total = (edge_opex + cloud_charges) + penalties`.

use serde::Serialize;
use thiserror::Error;

use crate::ids::{DemandId, ServerId, SfcId};
use crate::scalar::Scalar;
use crate::state::{validate_all, PlacementState, Usage, Violation};
use crate::workload::{Scenario, Sfc, VnfType};

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("VNF {vnf} of chain {sfc} is not instantiated on server {server}")]
    NotInstantiated { sfc: SfcId, vnf: usize, server: ServerId },
    #[error("demand {0} is not routed or not fully placed")]
    Unplaced(DemandId),
    #[error("state violates {} constraint(s), first: {:?}", .0.len(), .0.first())]
    Invalid(Vec<Violation>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DelayBreakdown<S> {
    pub prop: S,
    pub proc: S,
    pub downtime: S,
    pub total: S,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CostBreakdown<S> {
    pub edge_opex: S,
    pub cloud_charges: S,
    pub penalties: S,
    pub total: S,
    pub n_mgr: usize,
    pub n_rep: usize,
}

/// Delay of one VNF instance: queueing share plus the load dependent term.
pub fn processing_delay_value<S: Scalar>(ty: &VnfType<S>, traffic: S, server_util: S) -> S {
    ty.delay_queue * (ty.load_ratio * traffic) / ty.proc_capacity_max
        + ty.delay_proc_min
        + ty.delay_proc_slope * server_util
}

/// Positive part of the relative delay excess, scaled by the chain's rate.
pub fn penalty_value<S: Scalar>(sfc: &Sfc<S>, delay: S) -> S {
    ((delay / sfc.d_max - S::one()) * sfc.penalty_rate).max(S::zero())
}

/// f_x·E_i + α_u·u_x + K_x.
pub fn opex_value<S: Scalar>(used: bool, util: S, idle: S, slope: S, fixed: S) -> S {
    let f = if used { S::one() } else { S::zero() };
    f * idle + slope * util + fixed
}

pub fn processing_delay<S: Scalar>(
    scn: &Scenario<S>,
    state: &PlacementState,
    server: ServerId,
    sfc: SfcId,
    vnf: usize,
) -> Result<S, CostError> {
    let u = Usage::from_state(scn, state);
    instance_delay(scn, &u, server, sfc, vnf)
}

fn instance_delay<S: Scalar>(scn: &Scenario<S>, u: &Usage<S>, x: ServerId, sfc: SfcId, v: usize) -> Result<S, CostError> {
    let inst = u.instances[sfc.0][v].get(&x).ok_or(CostError::NotInstantiated { sfc, vnf: v, server: x })?;
    Ok(processing_delay_value(scn.vnf_type(sfc, v), inst.traffic, u.server_util(scn, x)))
}

/// Instances of `sfc` in the snapshot that no longer exist.
fn migrated_in<S: Scalar>(u: &Usage<S>, state: &PlacementState, sfc: SfcId) -> usize {
    match &state.initial_snapshot {
        None => 0,
        Some(snap) => snap
            .range((sfc, 0, ServerId(0))..=(sfc, usize::MAX, ServerId(usize::MAX)))
            .filter(|(_, v, x)| *v >= u.instances[sfc.0].len() || !u.instances[sfc.0][*v].contains_key(x))
            .count(),
    }
}

/// Migration downtime of `sfc`; zero without a snapshot.
pub fn downtime<S: Scalar>(scn: &Scenario<S>, state: &PlacementState, sfc: SfcId) -> S {
    let u = Usage::from_state(scn, state);
    scn.params.d_dwt * S::lit(migrated_in(&u, state, sfc) as f64)
}

pub fn demand_delay<S: Scalar>(
    scn: &Scenario<S>,
    state: &PlacementState,
    demand: DemandId,
) -> Result<DelayBreakdown<S>, CostError> {
    let u = Usage::from_state(scn, state);
    let sfc = scn.demand(demand).sfc;
    let dwt = scn.params.d_dwt * S::lit(migrated_in(&u, state, sfc) as f64);
    delay_with(scn, state, &u, demand, dwt)
}

fn delay_with<S: Scalar>(
    scn: &Scenario<S>,
    state: &PlacementState,
    u: &Usage<S>,
    demand: DemandId,
    downtime: S,
) -> Result<DelayBreakdown<S>, CostError> {
    let p = *state.demand_route.get(&demand).ok_or(CostError::Unplaced(demand))?;
    let sfc = scn.demand(demand).sfc;
    let servers = state.servers_of(demand);
    if servers.len() < scn.sfc(sfc).len() {
        return Err(CostError::Unplaced(demand));
    }
    let prop = scn.network.path(p).total_prop_delay;
    let mut proc = S::zero();
    for (v, &x) in servers.iter().enumerate().take(scn.sfc(sfc).len()) {
        proc = proc + instance_delay(scn, u, x, sfc, v)?;
    }
    Ok(DelayBreakdown { prop, proc, downtime, total: prop + proc + downtime })
}

pub fn penalty<S: Scalar>(scn: &Scenario<S>, state: &PlacementState, demand: DemandId) -> Result<S, CostError> {
    let d = demand_delay(scn, state, demand)?;
    Ok(penalty_value(scn.sfc(scn.demand(demand).sfc), d.total))
}

/// k_x^E per server (zero for cloud servers) and their sum.
pub fn edge_opex<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> (Vec<S>, S) {
    edge_opex_with(scn, &Usage::from_state(scn, state))
}

fn edge_opex_with<S: Scalar>(scn: &Scenario<S>, u: &Usage<S>) -> (Vec<S>, S) {
    let mut per = Vec::with_capacity(u.server_load.len());
    let mut total = S::zero();
    for srv in scn.network.servers() {
        let k = if srv.is_cloud {
            S::zero()
        } else {
            opex_value(
                !u.hosted[srv.id.0].is_empty(),
                u.server_util(scn, srv.id),
                srv.idle_energy_cost,
                srv.utilization_cost_slope,
                srv.fixed_maintenance_cost,
            )
        };
        total = total + k;
        per.push(k);
    }
    (per, total)
}

pub fn cloud_charges<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> S {
    cloud_charges_with(scn, &Usage::from_state(scn, state))
}

fn cloud_charges_with<S: Scalar>(scn: &Scenario<S>, u: &Usage<S>) -> S {
    let mut total = S::zero();
    for sfc in &scn.sfcs {
        for (v, insts) in u.instances[sfc.id.0].iter().enumerate() {
            for x in insts.keys() {
                if scn.network.server(*x).is_cloud {
                    total = total + scn.vnf_type(sfc.id, v).cloud_price;
                }
            }
        }
    }
    total
}

/// Costs and counters of a state that passes every validator.
pub fn total_cost<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Result<CostBreakdown<S>, CostError> {
    let violations = validate_all(scn, state);
    if !violations.is_empty() {
        return Err(CostError::Invalid(violations));
    }
    let u = Usage::from_state(scn, state);
    evaluate(scn, state, &u)
}

/// Costs from precomputed aggregates, without validation. Only scoped
/// demands are charged penalties.
pub fn evaluate<S: Scalar>(scn: &Scenario<S>, state: &PlacementState, u: &Usage<S>) -> Result<CostBreakdown<S>, CostError> {
    let (_, edge_opex) = edge_opex_with(scn, u);
    let cloud_charges = cloud_charges_with(scn, u);
    let downtimes = chain_downtimes(scn, state, u);
    let mut penalties = S::zero();
    for &d in &state.scope {
        let sfc = scn.demand(d).sfc;
        let delay = delay_with(scn, state, u, d, downtimes[sfc.0])?;
        penalties = penalties + penalty_value(scn.sfc(sfc), delay.total);
    }
    let n_mgr = match &state.initial_snapshot {
        None => 0,
        Some(_) => scn.sfcs.iter().map(|s| migrated_in(u, state, s.id)).sum(),
    };
    let n_rep = u.instances.iter().flatten().map(|m| m.len().saturating_sub(1)).sum();
    Ok(CostBreakdown { edge_opex, cloud_charges, penalties, total: edge_opex + cloud_charges + penalties, n_mgr, n_rep })
}

fn chain_downtimes<S: Scalar>(scn: &Scenario<S>, state: &PlacementState, u: &Usage<S>) -> Vec<S> {
    scn.sfcs
        .iter()
        .map(|s| scn.params.d_dwt * S::lit(migrated_in(u, state, s.id) as f64))
        .collect()
}

/// End-to-end delays of every scoped demand, in id order.
pub fn demand_delays<S: Scalar>(
    scn: &Scenario<S>,
    state: &PlacementState,
    u: &Usage<S>,
) -> Result<Vec<(DemandId, DelayBreakdown<S>)>, CostError> {
    let downtimes = chain_downtimes(scn, state, u);
    state
        .scope
        .iter()
        .map(|&d| delay_with(scn, state, u, d, downtimes[scn.demand(d).sfc.0]).map(|b| (d, b)))
        .collect()
}
