//! Cost-driven placement of hybrid VM/container service function chains on
//! an edge network backed by a rented cloud.

pub mod cost;
pub mod exact;
pub mod harness;
pub mod heuristics;
pub mod ids;
pub mod rng;
pub mod scalar;
pub mod state;
pub mod tiny;
pub mod topology;
pub mod workload;

pub use ids::*;
pub use scalar::Scalar;

pub type NetworkModel = topology::NetworkModel<f64>;
pub type NetworkModelF32 = topology::NetworkModel<f32>;
pub type Scenario = workload::Scenario<f64>;
pub type ScenarioF32 = workload::Scenario<f32>;
pub type CostBreakdown = cost::CostBreakdown<f64>;
pub type CostBreakdownF32 = cost::CostBreakdown<f32>;
pub type ExperimentPlan = harness::ExperimentPlan<f64>;
pub type ExperimentPlanF32 = harness::ExperimentPlan<f32>;
pub type ExactResult = exact::ExactResult<f64>;
pub type ExactResultF32 = exact::ExactResult<f32>;
