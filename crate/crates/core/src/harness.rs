//! Experiment driver: the two-phase protocol, plan sweeps and reporting.
//!
//! A master seed is split into a scenario seed, a partition seed and an
//! algorithm seed, so every algorithm and every chain mode of a cell sees
//! the same demands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cost::{self, CostBreakdown};
use crate::exact::{self, ExactLimits};
use crate::heuristics::{self, Algorithm, HeuristicConfig};
use crate::rng::child_seed;
use crate::scalar::Scalar;
use crate::state::{PlacementState, Usage};
use crate::topology::NetworkModel;
use crate::workload::{self, ChainMode, Partition, Scenario, ScenarioParams};

/// Environment variable holding the worker count of [`run_plan`].
pub const WORKERS_ENV: &str = "SFCPLACE_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanAlgorithm {
    Heuristic(Algorithm),
    Exact,
}

impl PlanAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanAlgorithm::Heuristic(a) => a.as_str(),
            PlanAlgorithm::Exact => "exact",
        }
    }
}

impl FromStr for PlanAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(PlanAlgorithm::Exact),
            other => other
                .parse()
                .map(PlanAlgorithm::Heuristic)
                .map_err(|_| format!("unknown algorithm {other:?} (expected ff, rf, grd or exact)")),
        }
    }
}

/// Scenario parameters that override the defaults when set.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub initial_selection_prob: Option<f64>,
    pub penalty_fraction: Option<f64>,
    pub d_net: Option<f64>,
    pub d_dwt: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan<S> {
    pub topology_name: String,
    pub network: Arc<NetworkModel<S>>,
    pub chain_lengths: Vec<usize>,
    pub modes: Vec<ChainMode>,
    pub algorithms: Vec<PlanAlgorithm>,
    pub seeds: Vec<u64>,
    pub overrides: Overrides,
    /// Local search repetitions; `None` means one per chain.
    pub sweeps: Option<usize>,
    pub exact_limits: ExactLimits,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("plan has no {0}")]
    Empty(&'static str),
    #[error("chain length must be at least 1")]
    ZeroLength,
}

impl<S: Scalar> ExperimentPlan<S> {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.chain_lengths.is_empty() {
            return Err(PlanError::Empty("chain lengths"));
        }
        if self.modes.is_empty() {
            return Err(PlanError::Empty("modes"));
        }
        if self.algorithms.is_empty() {
            return Err(PlanError::Empty("algorithms"));
        }
        if self.seeds.is_empty() {
            return Err(PlanError::Empty("seeds"));
        }
        if self.chain_lengths.contains(&0) {
            return Err(PlanError::ZeroLength);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Infeasible,
    Refused,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub chain_length: usize,
    pub mode: ChainMode,
    pub algorithm: String,
    pub seed: u64,
    pub phase: u8,
    pub status: RowStatus,
    pub total: f64,
    pub edge_opex: f64,
    pub cloud_charges: f64,
    pub penalties: f64,
    pub n_mgr: usize,
    pub n_rep: usize,
    pub avg_link_util: f64,
    pub avg_server_util: f64,
    pub avg_service_delay: f64,
    pub runtime: f64,
    pub diagnostics: String,
}

/// Metrics of one placed phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMetrics<S> {
    pub cost: CostBreakdown<S>,
    pub avg_link_util: S,
    pub avg_server_util: S,
    pub avg_service_delay: S,
}

/// Averages over edge links and edge servers, and the mean end-to-end
/// delay of the scoped demands.
pub fn phase_metrics<S: Scalar>(scn: &Scenario<S>, state: &PlacementState) -> Result<PhaseMetrics<S>, cost::CostError> {
    let cost = cost::total_cost(scn, state)?;
    let u = Usage::from_state(scn, state);
    let net = &scn.network;
    let mean = |xs: Vec<S>| {
        if xs.is_empty() {
            S::zero()
        } else {
            let n = S::lit(xs.len() as f64);
            xs.into_iter().fold(S::zero(), |a, b| a + b) / n
        }
    };
    let links = net
        .links()
        .iter()
        .filter(|l| !net.node(l.src).is_cloud && !net.node(l.dst).is_cloud)
        .map(|l| u.link_util(scn, l.id))
        .collect();
    let servers = net.servers().iter().filter(|x| !x.is_cloud).map(|x| u.server_util(scn, x.id)).collect();
    let delays = cost::demand_delays(scn, state, &u)?.into_iter().map(|(_, d)| d.total).collect();
    Ok(PhaseMetrics { cost, avg_link_util: mean(links), avg_server_util: mean(servers), avg_service_delay: mean(delays) })
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome<S> {
    pub result: Result<(PlacementState, PhaseMetrics<S>), (RowStatus, String)>,
    pub runtime: f64,
}

#[derive(Clone, Debug)]
pub struct TwoPhase<S> {
    pub phase1: PhaseOutcome<S>,
    pub phase2: PhaseOutcome<S>,
}

/// Template of the first phase: the initial subset, one instance per VNF.
pub fn phase1_template<S: Scalar>(scn: &Scenario<S>) -> PlacementState {
    PlacementState { single_instance: true, ..PlacementState::new(scn.initial_demands()) }
}

/// Template of the second phase: every demand, with `prior`'s instances as
/// the snapshot.
pub fn phase2_template<S: Scalar>(scn: &Scenario<S>, prior: &PlacementState) -> PlacementState {
    PlacementState { initial_snapshot: Some(prior.instances(scn)), ..PlacementState::new(scn.all_demands()) }
}

fn place<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    partition: &Partition,
    prior: Option<&PlacementState>,
    alg: PlanAlgorithm,
    seed: u64,
    sweeps: Option<usize>,
    limits: ExactLimits,
) -> Result<PlacementState, (RowStatus, String)> {
    let infeasible = |e: &dyn std::fmt::Display| (RowStatus::Infeasible, e.to_string());
    match alg {
        PlanAlgorithm::Heuristic(Algorithm::Grd) => {
            let config = HeuristicConfig { algorithm: Algorithm::Grd, seed, sweeps };
            heuristics::greedy_place(scn, template, partition, prior, &config).map_err(|e| infeasible(&e))
        }
        PlanAlgorithm::Heuristic(a) => heuristics::simple_placement(scn, template, a, seed).map_err(|e| infeasible(&e)),
        PlanAlgorithm::Exact => match exact::solve_exact(scn, template, limits) {
            Ok(r) => Ok(r.best_state),
            Err(e @ exact::ExactError::TooLarge { .. }) => Err((RowStatus::Refused, e.to_string())),
            Err(e) => Err(infeasible(&e)),
        },
    }
}

fn timed_phase<S: Scalar>(
    scn: &Scenario<S>,
    template: &PlacementState,
    run: impl FnOnce() -> Result<PlacementState, (RowStatus, String)>,
) -> PhaseOutcome<S> {
    let start = Instant::now();
    let result = run().and_then(|state| {
        debug_assert_eq!(state.scope, template.scope);
        match phase_metrics(scn, &state) {
            Ok(m) => Ok((state, m)),
            Err(e) => Err((RowStatus::Infeasible, e.to_string())),
        }
    });
    PhaseOutcome { result, runtime: start.elapsed().as_secs_f64() }
}

/// Phase 1 places the initial subset without a snapshot; its instances
/// become the snapshot of phase 2, which places every demand. Phase 2 is
/// skipped when phase 1 fails.
pub fn run_two_phase<S: Scalar>(
    scn: &Scenario<S>,
    partition: &Partition,
    alg: PlanAlgorithm,
    seed: u64,
    sweeps: Option<usize>,
    limits: ExactLimits,
) -> TwoPhase<S> {
    let t1 = phase1_template(scn);
    let phase1 = timed_phase(scn, &t1, || place(scn, &t1, partition, None, alg, child_seed(seed, 1), sweeps, limits));
    let phase2 = match &phase1.result {
        Ok((prior, _)) => {
            let t2 = phase2_template(scn, prior);
            timed_phase(scn, &t2, || place(scn, &t2, partition, Some(prior), alg, child_seed(seed, 2), sweeps, limits))
        }
        Err(_) => PhaseOutcome { result: Err((RowStatus::Skipped, "phase 1 failed".into())), runtime: 0.0 },
    };
    TwoPhase { phase1, phase2 }
}

/// Scenario and partition of one (length, mode, seed) cell.
pub fn cell_scenario<S: Scalar>(
    network: Arc<NetworkModel<S>>,
    chain_length: usize,
    mode: ChainMode,
    seed: u64,
    overrides: &Overrides,
) -> Result<(Scenario<S>, Partition), workload::WorkloadError> {
    let mut params = ScenarioParams::new(chain_length, mode, child_seed(seed, 0));
    if let Some(r) = overrides.initial_selection_prob {
        params.initial_selection_prob = S::lit(r);
    }
    if let Some(v) = overrides.penalty_fraction {
        params.penalty_fraction = S::lit(v);
    }
    if let Some(v) = overrides.d_net {
        params.d_net = S::lit(v);
    }
    if let Some(v) = overrides.d_dwt {
        params.d_dwt = S::lit(v);
    }
    let mut scn = workload::generate_scenario(network, params)?;
    let partition = workload::select_initial_demands(&mut scn, child_seed(seed, 1));
    Ok((scn, partition))
}

fn row<S: Scalar>(
    key: (usize, ChainMode, PlanAlgorithm, u64),
    phase: u8,
    outcome: &PhaseOutcome<S>,
) -> ResultRow {
    let (chain_length, mode, alg, seed) = key;
    let mut r = ResultRow {
        chain_length,
        mode,
        algorithm: alg.as_str().to_string(),
        seed,
        phase,
        status: RowStatus::Ok,
        total: 0.0,
        edge_opex: 0.0,
        cloud_charges: 0.0,
        penalties: 0.0,
        n_mgr: 0,
        n_rep: 0,
        avg_link_util: 0.0,
        avg_server_util: 0.0,
        avg_service_delay: 0.0,
        runtime: outcome.runtime,
        diagnostics: String::new(),
    };
    match &outcome.result {
        Ok((_, m)) => {
            r.edge_opex = m.cost.edge_opex.as_f64();
            r.cloud_charges = m.cost.cloud_charges.as_f64();
            r.penalties = m.cost.penalties.as_f64();
            // widened parts summed again so the identity holds for f32 too
            r.total = r.edge_opex + r.cloud_charges + r.penalties;
            r.n_mgr = m.cost.n_mgr;
            r.n_rep = m.cost.n_rep;
            r.avg_link_util = m.avg_link_util.as_f64();
            r.avg_server_util = m.avg_server_util.as_f64();
            r.avg_service_delay = m.avg_service_delay.as_f64();
        }
        Err((status, msg)) => {
            r.status = *status;
            r.diagnostics = msg.clone();
        }
    }
    r
}

/// Runs one cell of a plan: both phases of one algorithm on one workload.
pub fn run_cell<S: Scalar>(
    plan: &ExperimentPlan<S>,
    chain_length: usize,
    mode: ChainMode,
    alg: PlanAlgorithm,
    seed: u64,
) -> Vec<ResultRow> {
    let key = (chain_length, mode, alg, seed);
    match cell_scenario(plan.network.clone(), chain_length, mode, seed, &plan.overrides) {
        Ok((scn, partition)) => {
            let tp = run_two_phase(&scn, &partition, alg, child_seed(seed, 2), plan.sweeps, plan.exact_limits);
            vec![row(key, 1, &tp.phase1), row(key, 2, &tp.phase2)]
        }
        Err(e) => {
            let failed = PhaseOutcome::<S> { result: Err((RowStatus::Infeasible, e.to_string())), runtime: 0.0 };
            vec![row(key, 1, &failed), row(key, 2, &failed)]
        }
    }
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every (length, mode, algorithm, seed) cell. Rows come back sorted
/// by cell key and phase regardless of worker count; failed cells are
/// recorded and the run continues.
pub fn run_plan<S: Scalar>(plan: &ExperimentPlan<S>, workers: usize) -> Result<Vec<ResultRow>, PlanError> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &len in &plan.chain_lengths {
        for &mode in &plan.modes {
            for &alg in &plan.algorithms {
                for &seed in &plan.seeds {
                    cells.push((len, mode, alg, seed));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    let mut rows: Vec<ResultRow> = pool.install(|| {
        cells.par_iter().flat_map_iter(|&(len, mode, alg, seed)| run_cell(plan, len, mode, alg, seed)).collect()
    });
    rows.sort_by(|a, b| {
        (a.chain_length, a.mode, &a.algorithm, a.seed, a.phase).cmp(&(b.chain_length, b.mode, &b.algorithm, b.seed, b.phase))
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Reporting

/// The nine reported metrics: series file name and row accessor.
pub const SERIES: [(&str, fn(&ResultRow) -> f64); 9] = [
    ("total_costs", |r| r.total),
    ("edge_opex", |r| r.edge_opex),
    ("cloud_charges", |r| r.cloud_charges),
    ("penalties", |r| r.penalties),
    ("migrations", |r| r.n_mgr as f64),
    ("replications", |r| r.n_rep as f64),
    ("link_utilization", |r| r.avg_link_util),
    ("server_utilization", |r| r.avg_server_util),
    ("service_delay", |r| r.avg_service_delay),
];

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Key of a summary cell: length, mode, algorithm, phase.
pub type CellKey = (usize, ChainMode, String, u8);

/// Successful rows grouped by cell, in key order.
pub fn group_ok(rows: &[ResultRow]) -> BTreeMap<CellKey, Vec<&ResultRow>> {
    let mut out: BTreeMap<CellKey, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == RowStatus::Ok) {
        out.entry((r.chain_length, r.mode, r.algorithm.clone(), r.phase)).or_default().push(r);
    }
    out
}

/// Seed mean of `metric` per cell.
pub fn cell_means(rows: &[ResultRow], metric: fn(&ResultRow) -> f64) -> BTreeMap<CellKey, f64> {
    group_ok(rows).into_iter().map(|(k, rs)| (k, mean_stddev(&rs.iter().map(|r| metric(r)).collect::<Vec<_>>()).0)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// (file stem, CSV text) per metric.
    pub series: Vec<(String, String)>,
    pub summary: String,
}

pub fn report(rows: &[ResultRow]) -> Report {
    let groups = group_ok(rows);
    let mut series = Vec::new();
    for (name, metric) in SERIES {
        let mut csv = String::from("chain_length,mode,algorithm,phase,n,mean,stddev\n");
        for ((len, mode, alg, phase), rs) in &groups {
            let xs: Vec<f64> = rs.iter().map(|r| metric(r)).collect();
            let (m, s) = mean_stddev(&xs);
            let _ = writeln!(csv, "{len},{mode},{alg},{phase},{},{m},{s}", xs.len());
        }
        series.push((name.to_string(), csv));
    }
    let mut summary = String::from("# Results\n\n");
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| r.status != RowStatus::Ok).collect();
    let _ = writeln!(summary, "{} rows, {} not ok.\n", rows.len(), failed.len());
    summary.push_str("Seed mean ± sample standard deviation of the total cost ($/h) after each phase.\n\n");
    summary.push_str("| length | mode | algorithm | phase | n | total | n_mgr | n_rep |\n");
    summary.push_str("|---|---|---|---|---|---|---|---|\n");
    for ((len, mode, alg, phase), rs) in &groups {
        let (tm, ts) = mean_stddev(&rs.iter().map(|r| r.total).collect::<Vec<_>>());
        let (mm, _) = mean_stddev(&rs.iter().map(|r| r.n_mgr as f64).collect::<Vec<_>>());
        let (rm, _) = mean_stddev(&rs.iter().map(|r| r.n_rep as f64).collect::<Vec<_>>());
        let _ = writeln!(summary, "| {len} | {mode} | {alg} | {phase} | {} | {tm:.6} ± {ts:.6} | {mm:.2} | {rm:.2} |", rs.len());
    }
    if !failed.is_empty() {
        summary.push_str("\n## Rows not ok\n\n");
        for r in failed {
            let _ = writeln!(
                summary,
                "- length {} {} {} seed {} phase {}: {:?} {}",
                r.chain_length, r.mode, r.algorithm, r.seed, r.phase, r.status, r.diagnostics
            );
        }
    }
    Report { series, summary }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("row {0} has total different from the sum of its parts")]
    Inconsistent(usize),
}

/// CSV columns: every field of [`ResultRow`] except the wall-clock runtime,
/// so identical plans give identical files.
#[derive(Serialize)]
struct CsvRow<'a> {
    chain_length: usize,
    mode: ChainMode,
    algorithm: &'a str,
    seed: u64,
    phase: u8,
    status: RowStatus,
    total: f64,
    edge_opex: f64,
    cloud_charges: f64,
    penalties: f64,
    n_mgr: usize,
    n_rep: usize,
    avg_link_util: f64,
    avg_server_util: f64,
    avg_service_delay: f64,
    diagnostics: &'a str,
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String, OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, r) in rows.iter().enumerate() {
        if r.total != r.edge_opex + r.cloud_charges + r.penalties {
            return Err(OutputError::Inconsistent(i));
        }
        w.serialize(CsvRow {
            chain_length: r.chain_length,
            mode: r.mode,
            algorithm: &r.algorithm,
            seed: r.seed,
            phase: r.phase,
            status: r.status,
            total: r.total,
            edge_opex: r.edge_opex,
            cloud_charges: r.cloud_charges,
            penalties: r.penalties,
            n_mgr: r.n_mgr,
            n_rep: r.n_rep,
            avg_link_util: r.avg_link_util,
            avg_server_util: r.avg_server_util,
            avg_service_delay: r.avg_service_delay,
            diagnostics: &r.diagnostics,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes results.csv, results.json, series/*.csv and summary.md.
pub fn write_outputs(dir: &Path, topology: &str, rows: &[ResultRow]) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir.join("series"))?;
    std::fs::write(dir.join("results.csv"), results_csv(rows)?)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        topology: &'a str,
        rows: &'a [ResultRow],
    }
    std::fs::write(dir.join("results.json"), serde_json::to_string_pretty(&Doc { topology, rows })?)?;
    let rep = report(rows);
    for (name, csv) in &rep.series {
        std::fs::write(dir.join("series").join(format!("{name}.csv")), csv)?;
    }
    std::fs::write(dir.join("summary.md"), rep.summary)?;
    Ok(())
}
