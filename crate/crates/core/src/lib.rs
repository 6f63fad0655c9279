//! Synthesis pipeline for vehicle software deployments.
//!
//! The stages mirror the workflow: an instance model ([`model`]) is checked
//! against invariants ([`constraint`]), mapped onto hardware ([`allocator`]),
//! rendered into deployment artifacts ([`codegen`]) and exercised under fault
//! injection ([`sim`]). Model drafting is delegated to a provider ([`llm`]).

pub mod canonical;
pub mod model;
pub mod num;

pub mod allocator;
pub mod constraint;
pub mod codegen;
pub mod llm;
pub mod sim;

pub use num::Scalar;

pub type AllocationProblem = allocator::AllocationProblem<f64>;
pub type ObjectiveVector = allocator::ObjectiveVector<f64>;
pub type ParetoSet = allocator::ParetoSet<f64>;
pub type Violation = allocator::Violation<f64>;
pub type SolveOutcome = allocator::SolveOutcome<f64>;
