//! Constrained multi-objective assignment of function instances to hardware.
//!
//! [`build_problem`] flattens an instance model into index-based tables;
//! [`check_feasible`] and [`objectives`] score one assignment; [`solve_exact`]
//! enumerates small problems and [`solve_nsga2`] searches larger ones.

mod check;
mod exact;
mod nsga2;
mod problem;
mod select;

use std::cmp::Ordering;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::AllocationMatrix;
use crate::Scalar;

pub use check::{check_feasible, objectives};
pub use exact::{solve_exact, DEFAULT_ENUMERATION_CAP};
pub use nsga2::{solve_nsga2, Nsga2Params};
pub(crate) use problem::{latency_units, units_to_ms};
pub use problem::{build_problem, AllocationProblem, Flow, ProblemInstance, ProblemLink, ProblemNode, Route};
pub use select::select_solution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("pin references unknown {what} '{id}'")]
    UnknownPinTarget { what: &'static str, id: String },
    #[error("allocation is not total: {0}")]
    Totality(String),
    #[error("search space of {size:.0} assignments exceeds the cap of {cap}")]
    Size { size: f64, cap: u64 },
    #[error("invalid solver parameters: {0}")]
    Params(String),
    #[error("the Pareto front is empty")]
    EmptyFront,
    #[error("selection weights must be finite, non-negative and not all zero")]
    Weights,
}

/// Objective values of one assignment; all minimized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveVector<T> {
    pub power_w: T,
    pub cost: T,
    pub traffic_bps: T,
}

impl<T: Scalar> ObjectiveVector<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.power_w, self.cost, self.traffic_bps]
    }

    /// Component-wise `<=` with at least one strict `<`.
    pub fn dominates(&self, other: &Self) -> bool {
        let (a, b) = (self.as_array(), other.as_array());
        a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
    }

    /// Lexicographic order over `(power, cost, traffic)`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (x, y) in self.as_array().iter().zip(other.as_array().iter()) {
            match x.partial_cmp(y) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        Ordering::Equal
    }
}

impl<T: Scalar> Serialize for ObjectiveVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ObjectiveVector", 3)?;
        s.serialize_field("power_w", &self.power_w.as_f64())?;
        s.serialize_field("cost", &self.cost.as_f64())?;
        s.serialize_field("traffic_bps", &self.traffic_bps.as_f64())?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CpuCapacity,
    MemCapacity,
    Asil,
    AntiAffinity,
    Pinning,
    LinkBandwidth,
    LatencyBudget,
    /// A flow between two nodes that share no path.
    Unroutable,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::CpuCapacity => "cpu_capacity",
            ViolationKind::MemCapacity => "mem_capacity",
            ViolationKind::Asil => "asil",
            ViolationKind::AntiAffinity => "anti_affinity",
            ViolationKind::Pinning => "pinning",
            ViolationKind::LinkBandwidth => "link_bandwidth",
            ViolationKind::LatencyBudget => "latency_budget",
            ViolationKind::Unroutable => "unroutable",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One broken rule of an assignment.
///
/// `magnitude` is in units of the violated resource (CPU units, MiB, ASIL
/// ranks, surplus replicas, bits/s, milliseconds); `normalized` divides by
/// the limit so different kinds can be summed.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T> {
    pub kind: ViolationKind,
    pub subjects: Vec<String>,
    pub magnitude: T,
    pub normalized: T,
}

impl<T: Scalar> Serialize for Violation<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Violation", 3)?;
        s.serialize_field("kind", &self.kind)?;
        s.serialize_field("subjects", &self.subjects)?;
        s.serialize_field("magnitude", &self.magnitude.as_f64())?;
        s.end()
    }
}

impl<T: Scalar> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] by {}",
            self.kind,
            self.subjects.join(", "),
            crate::canonical::format_decimal(self.magnitude.as_f64())
        )
    }
}

pub(crate) fn total_violation<T: Scalar>(vs: &[Violation<T>]) -> T {
    vs.iter().fold(T::zero(), |acc, v| acc + v.normalized)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ParetoPoint<T: Scalar> {
    pub assignment: AllocationMatrix,
    pub objectives: ObjectiveVector<T>,
}

/// Mutually non-dominated feasible assignments, sorted by objective vector.
///
/// Assignments that tie on every objective are represented once, by the
/// lexicographically smallest node-index genome.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent, bound = "")]
pub struct ParetoSet<T: Scalar> {
    pub points: Vec<ParetoPoint<T>>,
}

impl<T: Scalar> ParetoSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objective_points(&self) -> Vec<ObjectiveVector<T>> {
        self.points.iter().map(|p| p.objectives).collect()
    }

    pub fn to_json(&self) -> String {
        crate::canonical::to_canonical_json(self)
    }
}

/// Witness that no feasible assignment exists (or none was found).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Infeasible<T: Scalar> {
    /// Least-violating assignment seen; absent when there is no hardware.
    pub best: Option<AllocationMatrix>,
    pub violations: Vec<Violation<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome<T: Scalar> {
    Front(ParetoSet<T>),
    Empty(Infeasible<T>),
}

impl<T: Scalar> SolveOutcome<T> {
    pub fn front(&self) -> Option<&ParetoSet<T>> {
        match self {
            SolveOutcome::Front(f) => Some(f),
            SolveOutcome::Empty(_) => None,
        }
    }
}

/// Sorts points and drops dominated ones and objective duplicates.
pub(crate) fn finish_front<T: Scalar>(
    problem: &AllocationProblem<T>,
    mut candidates: Vec<(Vec<usize>, ObjectiveVector<T>)>,
) -> ParetoSet<T> {
    candidates.sort_by(|a, b| a.1.lex_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    candidates.dedup_by(|later, earlier| later.1 == earlier.1);
    let kept: Vec<(Vec<usize>, ObjectiveVector<T>)> = candidates
        .iter()
        .filter(|(_, o)| !candidates.iter().any(|(_, other)| other.dominates(o)))
        .cloned()
        .collect();
    ParetoSet {
        points: kept
            .into_iter()
            .map(|(g, objectives)| ParetoPoint {
                assignment: problem.matrix(&g),
                objectives,
            })
            .collect(),
    }
}

