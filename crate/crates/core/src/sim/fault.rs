use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Permanent stop of every process on a node.
    NodeCrash,
    /// Independent per-message loss on a link.
    LinkDrop,
}

/// A scheduled perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub at_ms: f64,
    pub kind: FaultKind,
    /// Node id for crashes, link id for drops.
    pub target: String,
    /// Drop probability; link drops only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl FaultSpec {
    pub fn node_crash(target: impl Into<String>, at_ms: f64) -> Self {
        Self {
            at_ms,
            kind: FaultKind::NodeCrash,
            target: target.into(),
            p: None,
        }
    }

    pub fn link_drop(target: impl Into<String>, at_ms: f64, p: f64) -> Self {
        Self {
            at_ms,
            kind: FaultKind::LinkDrop,
            target: target.into(),
            p: Some(p),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.at_ms >= 0.0 && self.at_ms.is_finite()) {
            return Err(format!("fault time {} must be finite and non-negative", self.at_ms));
        }
        match (self.kind, self.p) {
            (FaultKind::LinkDrop, Some(p)) if (0.0..=1.0).contains(&p) => Ok(()),
            (FaultKind::LinkDrop, _) => Err("link_drop needs p in [0, 1]".into()),
            (FaultKind::NodeCrash, None) => Ok(()),
            (FaultKind::NodeCrash, Some(_)) => Err("node_crash takes no p".into()),
        }
    }
}
