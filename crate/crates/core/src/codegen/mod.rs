//! Deployment descriptors, adapter stubs and test suites from an enhanced
//! instance model.
//!
//! Everything here is a pure function of its inputs; [`render`] writes the
//! result with a digest manifest so reruns can be compared byte for byte.

mod adapters;
mod lint;
mod plan;
mod render;
mod suite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapters::{emit_adapters, render_adapter, AdapterSpec, Direction, PortBinding};
pub use lint::lint;
pub use plan::{plan_deployment, quorum, DeploymentPlan, NodePlan, ServiceEntry, ServiceKind, TopicEntry, VotedTopic};
pub use render::{render, render_files, DeployFile, DeployService, Manifest, MANIFEST_FILE};
pub use suite::{emit_tests, Assertions, Criterion, FlowRef, TestCase, TestKind};

/// Voting window shared with the simulator.
pub const VOTING_WINDOW_MS: f64 = 50.0;

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("the model carries no allocation")]
    MissingAllocation,
    #[error("invalid runtime environment: {0}")]
    RuntimeEnv(String),
    #[error("criterion '{id}' names unknown flow {src} -> {dst}")]
    UnknownFlow { id: String, src: String, dst: String },
    #[error("invalid criterion '{id}': {message}")]
    Criterion { id: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Middleware {
    #[default]
    Pubsub,
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Virtualization {
    #[default]
    Container,
    Process,
}

impl Middleware {
    pub fn name(self) -> &'static str {
        match self {
            Middleware::Pubsub => "pubsub",
            Middleware::Queue => "queue",
        }
    }
}

impl Virtualization {
    pub fn name(self) -> &'static str {
        match self {
            Virtualization::Container => "container",
            Virtualization::Process => "process",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeEnvSpec {
    #[serde(default)]
    pub middleware: Middleware,
    /// Documentation only.
    #[serde(default = "default_transport")]
    pub transport: String,
    #[serde(default)]
    pub virtualization: Virtualization,
    #[serde(default = "default_base_port")]
    pub base_port: u16,
    #[serde(default = "default_subnet")]
    pub subnet_prefix: String,
}

fn default_transport() -> String {
    "sim".into()
}

fn default_base_port() -> u16 {
    5000
}

fn default_subnet() -> String {
    "10.0.0.".into()
}

impl Default for RuntimeEnvSpec {
    fn default() -> Self {
        Self {
            middleware: Middleware::default(),
            transport: default_transport(),
            virtualization: Virtualization::default(),
            base_port: default_base_port(),
            subnet_prefix: default_subnet(),
        }
    }
}

impl RuntimeEnvSpec {
    pub fn check(&self) -> Result<(), CodegenError> {
        if !(1024..=60000).contains(&self.base_port) {
            return Err(CodegenError::RuntimeEnv(format!(
                "base_port {} outside [1024, 60000]",
                self.base_port
            )));
        }
        if self.subnet_prefix.is_empty() || self.subnet_prefix.contains(char::is_whitespace) {
            return Err(CodegenError::RuntimeEnv(format!(
                "bad subnet prefix '{}'",
                self.subnet_prefix
            )));
        }
        Ok(())
    }
}

/// `TOPIC_IN_<PORT>`-style key fragment.
pub(crate) fn env_key(port: &str) -> String {
    port.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect()
}
