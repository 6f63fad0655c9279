use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Automotive safety integrity level, ordered `QM < A < B < C < D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum AsilLevel {
    #[default]
    QM,
    A,
    B,
    C,
    D,
}

impl AsilLevel {
    pub const ALL: [AsilLevel; 5] = [
        AsilLevel::QM,
        AsilLevel::A,
        AsilLevel::B,
        AsilLevel::C,
        AsilLevel::D,
    ];

    /// Position in the total order, `QM` = 0 through `D` = 4.
    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            AsilLevel::QM => "QM",
            AsilLevel::A => "A",
            AsilLevel::B => "B",
            AsilLevel::C => "C",
            AsilLevel::D => "D",
        }
    }
}

impl fmt::Display for AsilLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AsilLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AsilLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown ASIL level '{s}'"))
    }
}

/// True iff `have` is at least as strict as `need`.
pub fn asil_at_least(have: AsilLevel, need: AsilLevel) -> bool {
    have >= need
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyMechanism {
    #[default]
    None,
    HotStandby,
    Voting,
}

impl SafetyMechanism {
    pub const ALL: [SafetyMechanism; 3] = [
        SafetyMechanism::None,
        SafetyMechanism::HotStandby,
        SafetyMechanism::Voting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SafetyMechanism::None => "none",
            SafetyMechanism::HotStandby => "hot_standby",
            SafetyMechanism::Voting => "voting",
        }
    }
}

impl fmt::Display for SafetyMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SafetyMechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SafetyMechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown safety mechanism '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub name: String,
    pub datatype: String,
}

impl Port {
    pub fn new(name: impl Into<String>, datatype: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            datatype: datatype.into(),
        }
    }
}

fn one() -> u32 {
    1
}

/// A software function from the catalogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub id: String,
    /// Abstract CPU units.
    pub cpu_req: u64,
    /// MiB.
    pub mem_req: u64,
    /// Watts.
    pub power_req: f64,
    #[serde(default)]
    pub asil: AsilLevel,
    #[serde(default = "one")]
    pub redundancy: u32,
    #[serde(default)]
    pub safety_mechanism: SafetyMechanism,
    #[serde(default)]
    pub out_ports: Vec<Port>,
    #[serde(default)]
    pub in_ports: Vec<Port>,
}

impl FunctionSpec {
    pub fn out_port(&self, name: &str) -> Option<&Port> {
        self.out_ports.iter().find(|p| p.name == name)
    }

    pub fn in_port(&self, name: &str) -> Option<&Port> {
        self.in_ports.iter().find(|p| p.name == name)
    }
}

/// An ECU or compute node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareNode {
    pub id: String,
    pub cpu_cap: u64,
    pub mem_cap: u64,
    /// Watts drawn whenever the node hosts at least one instance.
    #[serde(default)]
    pub base_power: f64,
    #[serde(default)]
    pub cost: f64,
    #[serde(default)]
    pub asil_cap: AsilLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub id: String,
    pub endpoint_a: String,
    pub endpoint_b: String,
    pub bandwidth_bps: f64,
    pub latency_ms: f64,
}

impl Link {
    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.endpoint_a == a && self.endpoint_b == b) || (self.endpoint_a == b && self.endpoint_b == a)
    }
}

/// Directed data flow between a producer port and a consumer port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEdge {
    pub id: String,
    pub src_fn: String,
    pub dst_fn: String,
    pub src_port: String,
    pub dst_port: String,
    pub rate_hz: f64,
    pub msg_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_budget_ms: Option<f64>,
}

impl FlowEdge {
    /// Nominal emission period in milliseconds.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

/// One replica of a function, rendered `<fn_id>#<k>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId {
    pub function: String,
    pub replica: u32,
}

impl InstanceId {
    pub fn new(function: impl Into<String>, replica: u32) -> Self {
        Self {
            function: function.into(),
            replica,
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.function, self.replica)
    }
}

impl FromStr for InstanceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (function, replica) = s
            .rsplit_once('#')
            .ok_or_else(|| format!("instance id '{s}' lacks '#<replica>'"))?;
        if function.is_empty() {
            return Err(format!("instance id '{s}' has an empty function id"));
        }
        let canonical = replica == "0" || (!replica.starts_with('0') && !replica.is_empty());
        if !canonical || !replica.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("instance id '{s}' has a malformed replica index"));
        }
        let replica = replica
            .parse()
            .map_err(|_| format!("instance id '{s}' replica index out of range"))?;
        Ok(InstanceId::new(function, replica))
    }
}

impl Serialize for InstanceId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InstanceId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A single `(instance, node)` pair of an enhanced model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub instance: InstanceId,
    pub node: String,
}

/// Typed graph of functions, hardware, links and flows, optionally carrying
/// the software-to-hardware mapping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceModel {
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub hardware: Vec<HardwareNode>,
    #[serde(default)]
    pub links: Vec<Link>,
    #[serde(default)]
    pub edges: Vec<FlowEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<Placement>>,
}

impl InstanceModel {
    pub fn function(&self, id: &str) -> Option<&FunctionSpec> {
        self.functions.iter().find(|f| f.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&HardwareNode> {
        self.hardware.iter().find(|n| n.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    /// Node hosting `instance` in an enhanced model.
    pub fn node_of(&self, instance: &InstanceId) -> Option<&str> {
        self.allocation
            .as_ref()?
            .iter()
            .find(|p| &p.instance == instance)
            .map(|p| p.node.as_str())
    }

    pub fn is_enhanced(&self) -> bool {
        self.allocation.is_some()
    }
}
