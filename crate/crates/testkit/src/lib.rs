//! Independent oracles and random input generators shared by the test suites.
//!
//! Nothing here is used by the pipeline itself. Each oracle deliberately takes
//! a different route from the production code it checks.

pub mod alloc_oracle;
pub mod gen;
pub mod reference_eval;
pub mod sim_oracle;
