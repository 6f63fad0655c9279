//! Discrete-event simulation of a deployment plan under injected faults.
//!
//! Message timing is static: a message arrives after the sum of the link
//! latencies on its route. Bandwidth contention is not modelled. Crashes are
//! permanent and link drops are decided per message by hashing its identity,
//! so adding a drop fault can only remove deliveries.

mod engine;
mod eval;
mod fault;
mod world;

use thiserror::Error;

pub use engine::{run, FlowStats, LinkState, NodeState, SimReport};
pub use eval::{evaluate_tests, nearest_rank, redundancy_scenarios, run_suite, CaseResult, ScenarioPair, SuiteRun, TestResults, Verdict};
pub use fault::{FaultKind, FaultSpec};
pub use world::{build_sim, DeliveryMode, SimFlow, SimRoute, SimWorld};

use crate::codegen::CodegenError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("plan and model disagree: {0}")]
    Consistency(String),
    #[error("test '{id}' names unknown flow {src} -> {dst}")]
    UnknownFlow { id: String, src: String, dst: String },
    #[error("invalid fault: {0}")]
    Fault(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}
