//! VNF types, service function chains, traffic demands and scenarios.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DemandId, NodeId, PathId, SfcId, VnfTypeId};
use crate::rng;
use crate::scalar::Scalar;
use crate::topology::{CatalogConfig, NetworkModel, TopologyError};

/// Propagation budget folded into every chain's delay bound, ms.
pub const DEFAULT_D_NET: f64 = 5.0;
/// Service interruption per migrated VNF, ms.
pub const DEFAULT_D_DWT: f64 = 27.5;
/// Penalty rate as a fraction of the chain's selling price.
pub const DEFAULT_PENALTY_FRACTION: f64 = 0.1;
/// Probability that a demand belongs to the initial (low traffic) set.
pub const DEFAULT_INITIAL_SELECTION_PROB: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("chain length must be at least 1")]
    ZeroChainLength,
    #[error("initial selection probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("chain {0} has no VNFs")]
    EmptyChain(usize),
    #[error("chain {0} has no demands")]
    NoDemands(usize),
    #[error("chain {sfc} refers to unknown VNF type {vnf_type}")]
    UnknownVnfType { sfc: usize, vnf_type: usize },
    #[error("chain {sfc} endpoint {node} is not an edge node")]
    BadEndpoint { sfc: usize, node: usize },
    #[error("demand of chain {sfc} has non-positive bandwidth {bandwidth}")]
    NonPositiveBandwidth { sfc: usize, bandwidth: f64 },
    #[error("VNF type {0} has delay_proc_min above delay_proc_max or negative overhead")]
    InvalidVnfType(String),
    #[error("unknown chain mode {0:?} (expected vm-only, ct-only or vm-ct)")]
    UnknownMode(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("malformed scenario document: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExecMode {
    #[serde(rename = "VM")]
    Vm,
    #[serde(rename = "CT")]
    Ct,
}

/// Per-type VNF parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct VnfType<S> {
    pub name: String,
    pub exec_mode: ExecMode,
    /// Fixed processing reservation of a VM instance, units. Zero for containers.
    pub overhead: S,
    /// Processing units per unit of served bandwidth.
    pub load_ratio: S,
    /// Synchronization traffic per demand between replicas.
    pub sync_ratio: S,
    /// Load at which the queueing delay reaches `delay_queue`, units.
    pub proc_capacity_max: S,
    pub delay_queue: S,
    pub delay_proc_slope: S,
    pub delay_proc_min: S,
    pub delay_proc_max: S,
    /// Cloud charge and selling price, $/h.
    pub cloud_price: S,
    pub replicable: bool,
}

impl<S: Scalar> VnfType<S> {
    fn validate(&self) -> Result<(), WorkloadError> {
        let ok = self.delay_proc_min <= self.delay_proc_max
            && self.overhead >= S::zero()
            && (self.exec_mode == ExecMode::Vm || self.overhead == S::zero());
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::InvalidVnfType(self.name.clone()))
        }
    }
}

/// The VM and container rows of the reference parameter table, in that
/// order (`VnfTypeId(0)` is VM, `VnfTypeId(1)` is CT).
pub fn default_vnf_catalog<S: Scalar>() -> Vec<VnfType<S>> {
    let vm = VnfType {
        name: "vm".to_string(),
        exec_mode: ExecMode::Vm,
        overhead: S::lit(7.0),
        load_ratio: S::lit(1.2),
        sync_ratio: S::lit(0.1),
        proc_capacity_max: S::lit(72.0),
        delay_queue: S::lit(3.0),
        delay_proc_slope: S::lit(5.0),
        delay_proc_min: S::lit(2.0),
        delay_proc_max: S::lit(10.0),
        cloud_price: S::lit(0.0069),
        replicable: true,
    };
    let ct = VnfType {
        name: "ct".to_string(),
        exec_mode: ExecMode::Ct,
        overhead: S::zero(),
        cloud_price: S::lit(0.1199988),
        ..vm.clone()
    };
    vec![vm, ct]
}

pub const VM: VnfTypeId = VnfTypeId(0);
pub const CT: VnfTypeId = VnfTypeId(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChainMode {
    VmOnly,
    CtOnly,
    VmCt,
}

impl ChainMode {
    pub const ALL: [ChainMode; 3] = [ChainMode::VmOnly, ChainMode::CtOnly, ChainMode::VmCt];

    pub fn as_str(self) -> &'static str {
        match self {
            ChainMode::VmOnly => "vm-only",
            ChainMode::CtOnly => "ct-only",
            ChainMode::VmCt => "vm-ct",
        }
    }
}

impl fmt::Display for ChainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChainMode {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vm-only" => Ok(ChainMode::VmOnly),
            "ct-only" => Ok(ChainMode::CtOnly),
            "vm-ct" => Ok(ChainMode::VmCt),
            other => Err(WorkloadError::UnknownMode(other.to_string())),
        }
    }
}

impl Serialize for ChainMode {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ChainMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficDemand<S> {
    pub id: DemandId,
    pub sfc: SfcId,
    pub bandwidth: S,
    /// Member of the initial (low traffic) subset.
    pub in_initial_set: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sfc<S> {
    pub id: SfcId,
    pub src: NodeId,
    pub dst: NodeId,
    pub vnf_chain: Vec<VnfTypeId>,
    pub demands: Vec<DemandId>,
    pub admissible_paths: Vec<PathId>,
    /// Maximum allowed end-to-end delay, ms.
    pub d_max: S,
    /// Worst case delay including a downtime for every VNF, ms.
    pub d_hat_max: S,
    /// Penalty paid per unit of relative delay excess, $/h.
    pub penalty_rate: S,
}

impl<S> Sfc<S> {
    pub fn len(&self) -> usize {
        self.vnf_chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vnf_chain.is_empty()
    }
}

/// Knobs shared by generated and hand-written scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioParams<S> {
    pub chain_length: usize,
    pub mode: ChainMode,
    pub seed: u64,
    pub initial_selection_prob: S,
    pub d_net: S,
    pub d_dwt: S,
    pub penalty_fraction: S,
    /// One chain per ordered pair (both directions); otherwise src < dst only.
    pub both_directions: bool,
}

impl<S: Scalar> ScenarioParams<S> {
    pub fn new(chain_length: usize, mode: ChainMode, seed: u64) -> Self {
        ScenarioParams {
            chain_length,
            mode,
            seed,
            initial_selection_prob: S::lit(DEFAULT_INITIAL_SELECTION_PROB),
            d_net: S::lit(DEFAULT_D_NET),
            d_dwt: S::lit(DEFAULT_D_DWT),
            penalty_fraction: S::lit(DEFAULT_PENALTY_FRACTION),
            both_directions: true,
        }
    }
}

/// Explicit description of one chain, used for hand-built scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec<S> {
    pub src: NodeId,
    pub dst: NodeId,
    pub vnf_chain: Vec<VnfTypeId>,
    pub bandwidths: Vec<S>,
    pub initial: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct Scenario<S> {
    pub network: Arc<NetworkModel<S>>,
    pub vnf_catalog: Vec<VnfType<S>>,
    pub sfcs: Vec<Sfc<S>>,
    pub demands: Vec<TrafficDemand<S>>,
    pub params: ScenarioParams<S>,
}

impl<S: Scalar> Scenario<S> {
    /// Assembles a scenario from explicit chains, computing the derived
    /// delay bounds, penalty rates and admissible path sets.
    pub fn from_chains(
        network: Arc<NetworkModel<S>>,
        vnf_catalog: Vec<VnfType<S>>,
        params: ScenarioParams<S>,
        chains: Vec<ChainSpec<S>>,
    ) -> Result<Self, WorkloadError> {
        let p = params.initial_selection_prob;
        if !(p >= S::zero() && p <= S::one()) {
            return Err(WorkloadError::InvalidProbability(p.as_f64()));
        }
        for t in &vnf_catalog {
            t.validate()?;
        }
        let mut sfcs = Vec::with_capacity(chains.len());
        let mut demands = Vec::new();
        for (i, c) in chains.into_iter().enumerate() {
            if c.vnf_chain.is_empty() {
                return Err(WorkloadError::EmptyChain(i));
            }
            if c.bandwidths.is_empty() {
                return Err(WorkloadError::NoDemands(i));
            }
            for node in [c.src, c.dst] {
                if node.0 >= network.nodes().len() || network.node(node).is_cloud {
                    return Err(WorkloadError::BadEndpoint { sfc: i, node: node.0 });
                }
            }
            let mut proc_max = S::zero();
            let mut price = S::zero();
            for t in &c.vnf_chain {
                let ty = vnf_catalog
                    .get(t.0)
                    .ok_or(WorkloadError::UnknownVnfType { sfc: i, vnf_type: t.0 })?;
                proc_max = proc_max + ty.delay_proc_max;
                price = price + ty.cloud_price;
            }
            let d_max = proc_max + params.d_net;
            let d_hat_max = d_max + S::lit(c.vnf_chain.len() as f64) * params.d_dwt;
            let penalty_rate = params.penalty_fraction * price;
            let admissible_paths = network.sfc_paths(c.src, c.dst)?.to_vec();

            let sfc = SfcId(i);
            let mut ids = Vec::with_capacity(c.bandwidths.len());
            for (k, bw) in c.bandwidths.iter().enumerate() {
                if !(*bw > S::zero()) {
                    return Err(WorkloadError::NonPositiveBandwidth { sfc: i, bandwidth: bw.as_f64() });
                }
                let id = DemandId(demands.len());
                ids.push(id);
                demands.push(TrafficDemand {
                    id,
                    sfc,
                    bandwidth: *bw,
                    in_initial_set: c.initial.get(k).copied().unwrap_or(true),
                });
            }
            sfcs.push(Sfc {
                id: sfc,
                src: c.src,
                dst: c.dst,
                vnf_chain: c.vnf_chain,
                demands: ids,
                admissible_paths,
                d_max,
                d_hat_max,
                penalty_rate,
            });
        }
        Ok(Scenario { network, vnf_catalog, sfcs, demands, params })
    }

    pub fn sfc(&self, id: SfcId) -> &Sfc<S> {
        &self.sfcs[id.0]
    }

    pub fn demand(&self, id: DemandId) -> &TrafficDemand<S> {
        &self.demands[id.0]
    }

    /// Type of the VNF at chain position `v` of `sfc`.
    pub fn vnf_type(&self, sfc: SfcId, v: usize) -> &VnfType<S> {
        &self.vnf_catalog[self.sfcs[sfc.0].vnf_chain[v].0]
    }

    /// Demands of the initial subset, across all chains.
    pub fn initial_demands(&self) -> impl Iterator<Item = DemandId> + '_ {
        self.demands.iter().filter(|d| d.in_initial_set).map(|d| d.id)
    }

    pub fn all_demands(&self) -> impl Iterator<Item = DemandId> + '_ {
        self.demands.iter().map(|d| d.id)
    }

    /// Explicit chain descriptions reproducing this scenario.
    pub fn chain_specs(&self) -> Vec<ChainSpec<S>> {
        self.sfcs
            .iter()
            .map(|s| ChainSpec {
                src: s.src,
                dst: s.dst,
                vnf_chain: s.vnf_chain.clone(),
                bandwidths: s.demands.iter().map(|d| self.demands[d.0].bandwidth).collect(),
                initial: s.demands.iter().map(|d| self.demands[d.0].in_initial_set).collect(),
            })
            .collect()
    }
}

/// Random workload: one chain per ordered pair of edge nodes with 1 to 3
/// demands of integer bandwidth in [1, 20].
///
/// Each chain draws from two private substreams of `params.seed`: one for
/// its VM/CT assignment and one for its demands. All demands start in the
/// initial set; see [`select_initial_demands`].
pub fn generate_scenario<S: Scalar>(
    network: Arc<NetworkModel<S>>,
    params: ScenarioParams<S>,
) -> Result<Scenario<S>, WorkloadError> {
    if params.chain_length == 0 {
        return Err(WorkloadError::ZeroChainLength);
    }
    let edge: Vec<NodeId> = network.edge_nodes().collect();
    let mut chains = Vec::new();
    for &src in &edge {
        for &dst in &edge {
            if src == dst || (!params.both_directions && src > dst) {
                continue;
            }
            let k = chains.len() as u64;
            let mut mode_rng = rng::substream(params.seed, 2 * k);
            let mut demand_rng = rng::substream(params.seed, 2 * k + 1);
            let vnf_chain = (0..params.chain_length)
                .map(|_| match params.mode {
                    ChainMode::VmOnly => VM,
                    ChainMode::CtOnly => CT,
                    ChainMode::VmCt => {
                        if mode_rng.gen_bool(0.5) {
                            VM
                        } else {
                            CT
                        }
                    }
                })
                .collect();
            let n = demand_rng.gen_range(1..=3);
            let bandwidths: Vec<S> = (0..n).map(|_| S::lit(demand_rng.gen_range(1..=20) as f64)).collect();
            chains.push(ChainSpec { src, dst, vnf_chain, initial: vec![true; bandwidths.len()], bandwidths });
        }
    }
    Scenario::from_chains(network, default_vnf_catalog(), params, chains)
}

/// Per-chain split into the initial subset and the remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub initial: Vec<Vec<DemandId>>,
    pub rest: Vec<Vec<DemandId>>,
    /// Demands drawn into the initial set before the non-empty fallback.
    pub drawn: usize,
}

/// Draws each demand into the initial subset with the scenario's selection
/// probability; a chain that draws nothing keeps one uniformly chosen
/// demand. Updates the demands' `in_initial_set` flags.
pub fn select_initial_demands<S: Scalar>(scenario: &mut Scenario<S>, seed: u64) -> Partition {
    let prob = scenario.params.initial_selection_prob.as_f64().clamp(0.0, 1.0);
    let mut initial = Vec::with_capacity(scenario.sfcs.len());
    let mut rest = Vec::with_capacity(scenario.sfcs.len());
    let mut drawn = 0;
    for sfc in &scenario.sfcs {
        let mut rng = rng::substream(seed, sfc.id.0 as u64);
        let mut chosen: Vec<bool> = sfc.demands.iter().map(|_| rng.gen_bool(prob)).collect();
        drawn += chosen.iter().filter(|c| **c).count();
        if !chosen.iter().any(|c| *c) {
            let k = rng.gen_range(0..chosen.len());
            chosen[k] = true;
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (&d, &c) in sfc.demands.iter().zip(&chosen) {
            scenario.demands[d.0].in_initial_set = c;
            if c {
                a.push(d)
            } else {
                b.push(d)
            }
        }
        initial.push(a);
        rest.push(b);
    }
    Partition { initial, rest, drawn }
}

// ---------------------------------------------------------------------------
// Scenario document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    seed: u64,
    partition_seed: Option<u64>,
    mode: ChainMode,
    chain_length: usize,
    #[serde(default = "default_r")]
    initial_selection_prob: f64,
    #[serde(default = "default_d_net")]
    d_net: f64,
    #[serde(default = "default_d_dwt")]
    d_dwt: f64,
    #[serde(default = "default_rho")]
    penalty_fraction: f64,
    #[serde(default = "default_true")]
    both_directions: bool,
    #[serde(default)]
    catalog: Option<CatalogConfig>,
    #[serde(default)]
    vnf_types: Vec<VnfTypeRec>,
    #[serde(default)]
    sfcs: Vec<SfcRec>,
}

fn default_r() -> f64 {
    DEFAULT_INITIAL_SELECTION_PROB
}
fn default_d_net() -> f64 {
    DEFAULT_D_NET
}
fn default_d_dwt() -> f64 {
    DEFAULT_D_DWT
}
fn default_rho() -> f64 {
    DEFAULT_PENALTY_FRACTION
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VnfTypeRec {
    name: String,
    exec: ExecMode,
    overhead: f64,
    load_ratio: f64,
    sync_ratio: f64,
    proc_capacity_max: f64,
    delay_queue: f64,
    delay_proc_slope: f64,
    delay_proc_min: f64,
    delay_proc_max: f64,
    cloud_price: f64,
    replicable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SfcRec {
    src: usize,
    dst: usize,
    chain: Vec<usize>,
    demands: Vec<f64>,
    #[serde(default)]
    initial: Vec<bool>,
}

/// Catalog settings a scenario document asks for (defaults when absent).
pub fn scenario_catalog_config(text: &str) -> Result<CatalogConfig, WorkloadError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))?;
    Ok(doc.catalog.unwrap_or_default())
}

/// Loads a scenario document against `network`. Documents without explicit
/// chains are generated from their seed, then partitioned with
/// `partition_seed` when present.
pub fn parse_scenario<S: Scalar>(text: &str, network: Arc<NetworkModel<S>>) -> Result<Scenario<S>, WorkloadError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))?;
    let params = ScenarioParams {
        chain_length: doc.chain_length,
        mode: doc.mode,
        seed: doc.seed,
        initial_selection_prob: S::lit(doc.initial_selection_prob),
        d_net: S::lit(doc.d_net),
        d_dwt: S::lit(doc.d_dwt),
        penalty_fraction: S::lit(doc.penalty_fraction),
        both_directions: doc.both_directions,
    };
    if doc.sfcs.is_empty() {
        let mut scenario = generate_scenario(network, params)?;
        if let Some(ps) = doc.partition_seed {
            select_initial_demands(&mut scenario, ps);
        }
        return Ok(scenario);
    }
    let catalog = if doc.vnf_types.is_empty() {
        default_vnf_catalog()
    } else {
        doc.vnf_types
            .into_iter()
            .map(|t| VnfType {
                name: t.name,
                exec_mode: t.exec,
                overhead: S::lit(t.overhead),
                load_ratio: S::lit(t.load_ratio),
                sync_ratio: S::lit(t.sync_ratio),
                proc_capacity_max: S::lit(t.proc_capacity_max),
                delay_queue: S::lit(t.delay_queue),
                delay_proc_slope: S::lit(t.delay_proc_slope),
                delay_proc_min: S::lit(t.delay_proc_min),
                delay_proc_max: S::lit(t.delay_proc_max),
                cloud_price: S::lit(t.cloud_price),
                replicable: t.replicable,
            })
            .collect()
    };
    let chains = doc
        .sfcs
        .into_iter()
        .map(|s| ChainSpec {
            src: NodeId(s.src),
            dst: NodeId(s.dst),
            vnf_chain: s.chain.into_iter().map(VnfTypeId).collect(),
            initial: if s.initial.is_empty() { vec![true; s.demands.len()] } else { s.initial },
            bandwidths: s.demands.into_iter().map(S::lit).collect(),
        })
        .collect();
    Scenario::from_chains(network, catalog, params, chains)
}

/// Serializes a scenario with every chain and demand spelled out, so that
/// [`parse_scenario`] reproduces it exactly.
pub fn write_scenario<S: Scalar>(scenario: &Scenario<S>) -> String {
    let p = &scenario.params;
    let doc = ScenarioDoc {
        seed: p.seed,
        partition_seed: None,
        mode: p.mode,
        chain_length: p.chain_length,
        initial_selection_prob: p.initial_selection_prob.as_f64(),
        d_net: p.d_net.as_f64(),
        d_dwt: p.d_dwt.as_f64(),
        penalty_fraction: p.penalty_fraction.as_f64(),
        both_directions: p.both_directions,
        catalog: scenario.network.catalog().config,
        vnf_types: scenario
            .vnf_catalog
            .iter()
            .map(|t| VnfTypeRec {
                name: t.name.clone(),
                exec: t.exec_mode,
                overhead: t.overhead.as_f64(),
                load_ratio: t.load_ratio.as_f64(),
                sync_ratio: t.sync_ratio.as_f64(),
                proc_capacity_max: t.proc_capacity_max.as_f64(),
                delay_queue: t.delay_queue.as_f64(),
                delay_proc_slope: t.delay_proc_slope.as_f64(),
                delay_proc_min: t.delay_proc_min.as_f64(),
                delay_proc_max: t.delay_proc_max.as_f64(),
                cloud_price: t.cloud_price.as_f64(),
                replicable: t.replicable,
            })
            .collect(),
        sfcs: scenario
            .chain_specs()
            .into_iter()
            .map(|c| SfcRec {
                src: c.src.0,
                dst: c.dst.0,
                chain: c.vnf_chain.iter().map(|t| t.0).collect(),
                demands: c.bandwidths.iter().map(|b| b.as_f64()).collect(),
                initial: c.initial,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario documents always serialize")
}
