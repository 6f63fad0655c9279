use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{build_sim, run, FaultSpec, SimError, SimReport, SimWorld};
use crate::codegen::{plan_deployment, DeploymentPlan, ServiceKind, TestCase, TestKind};
use crate::model::{InstanceModel, Placement, SafetyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub kind: TestKind,
    pub verdict: Verdict,
    pub sent: u64,
    pub delivered: u64,
    pub delivery_ratio: f64,
    pub p95_latency_ms: Option<f64>,
    /// One line per failed assertion.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TestResults {
    pub cases: Vec<CaseResult>,
    pub functional_failures: Vec<String>,
    pub nonfunctional_failures: Vec<String>,
}

impl TestResults {
    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn case(&self, id: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.id == id)
    }

    fn push(&mut self, r: CaseResult) {
        if r.verdict == Verdict::Fail {
            match r.kind {
                TestKind::Functional => self.functional_failures.push(r.id.clone()),
                TestKind::Nonfunctional => self.nonfunctional_failures.push(r.id.clone()),
            }
        }
        self.cases.push(r);
    }
}

/// Nearest-rank percentile of unsorted samples; `None` when empty.
pub fn nearest_rank(samples: &[f64], pct: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Scores `suite` against one report. Flows are matched by their function
/// pair; parallel edges between the same pair are pooled.
pub fn evaluate_tests(report: &SimReport, suite: &[TestCase]) -> Result<TestResults, SimError> {
    let mut results = TestResults::default();
    for case in suite {
        let matching: Vec<_> = report
            .flows
            .values()
            .filter(|f| f.src_fn == case.flow.src && f.dst_fn == case.flow.dst)
            .collect();
        if matching.is_empty() {
            return Err(SimError::UnknownFlow {
                id: case.id.clone(),
                src: case.flow.src.clone(),
                dst: case.flow.dst.clone(),
            });
        }
        let sent: u64 = matching.iter().map(|f| f.sent).sum();
        let delivered: u64 = matching.iter().map(|f| f.delivered).sum();
        let samples: Vec<f64> = matching.iter().flat_map(|f| f.latency_samples.iter().copied()).collect();
        let ratio = if sent == 0 { 1.0 } else { delivered as f64 / sent as f64 };
        let p95 = nearest_rank(&samples, 95.0);

        let mut failures = Vec::new();
        if let Some(min) = case.assertions.min_delivery_ratio {
            if ratio < min {
                failures.push(format!("delivery ratio {ratio} below {min}"));
            }
        }
        if let Some(max) = case.assertions.max_p95_latency_ms {
            match p95 {
                Some(p) if p <= max => {}
                Some(p) => failures.push(format!("p95 latency {p} ms above {max} ms")),
                None => failures.push("no latency samples".to_string()),
            }
        }
        results.push(CaseResult {
            id: case.id.clone(),
            kind: case.kind,
            verdict: if failures.is_empty() { Verdict::Pass } else { Verdict::Fail },
            sent,
            delivered,
            delivery_ratio: ratio,
            p95_latency_ms: p95,
            failures,
        });
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRun {
    /// Keyed by test case id.
    pub reports: BTreeMap<String, SimReport>,
    pub results: TestResults,
}

/// Runs every case in its own world copy with its own faults and duration.
pub fn run_suite(world: &SimWorld, suite: &[TestCase], seed: u64) -> Result<SuiteRun, SimError> {
    for case in suite {
        world.check_faults(&case.faults)?;
    }
    let runs: Vec<(SimReport, TestResults)> = suite
        .par_iter()
        .map(|case| {
            let report = run(world, &case.faults, case.duration_ms, seed);
            let results = evaluate_tests(&report, std::slice::from_ref(case))?;
            Ok((report, results))
        })
        .collect::<Result<_, SimError>>()?;
    let mut out = SuiteRun {
        reports: BTreeMap::new(),
        results: TestResults::default(),
    };
    for (case, (report, results)) in suite.iter().zip(runs) {
        out.reports.insert(case.id.clone(), report);
        for r in results.cases {
            out.results.push(r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPair {
    /// Function whose replica loses its node.
    pub function: String,
    pub crash: FaultSpec,
    pub redundant: TestResults,
    pub degraded: TestResults,
}

/// Crashes the node of one replica of the first redundant function at
/// `horizon_ms / 2`, once for the deployment as planned and once with that
/// function cut down to the crashed replica alone. The replica whose node
/// hosts the fewest instances is chosen, lowest index first. Every case runs
/// for `horizon_ms` with the crash added to its own faults.
pub fn redundancy_scenarios(
    plan: &DeploymentPlan,
    model: &InstanceModel,
    suite: &[TestCase],
    horizon_ms: u64,
    seed: u64,
) -> Result<ScenarioPair, SimError> {
    let mut fns: Vec<_> = model.functions.iter().filter(|f| f.redundancy >= 2).collect();
    fns.sort_by(|a, b| a.id.cmp(&b.id));
    let target = fns
        .first()
        .ok_or_else(|| SimError::Precondition("no function with redundancy >= 2".into()))?;
    let mut replicas: Vec<(u32, &str)> = plan
        .services()
        .filter(|s| s.kind == ServiceKind::Function && s.instance.function == target.id)
        .map(|s| (s.instance.replica, s.node.as_str()))
        .collect();
    replicas.sort_unstable();
    let mut distinct: Vec<&str> = replicas.iter().map(|r| r.1).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if replicas.len() != target.redundancy as usize || distinct.len() != replicas.len() {
        return Err(SimError::Precondition(format!(
            "replicas of {} are not on pairwise distinct nodes",
            target.id
        )));
    }
    let load = |node: &str| {
        plan.services()
            .filter(|s| s.kind == ServiceKind::Function && s.node == node)
            .count()
    };
    let (kept, crashed) = replicas
        .iter()
        .min_by_key(|(k, node)| (load(node), *k))
        .map(|(k, node)| (*k, node.to_string()))
        .expect("at least two replicas");
    let crash = FaultSpec::node_crash(crashed, horizon_ms as f64 / 2.0);
    let cases: Vec<TestCase> = suite
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.kind = TestKind::Nonfunctional;
            c.faults.push(crash.clone());
            c.duration_ms = horizon_ms;
            c
        })
        .collect();

    let world = build_sim(plan, model)?;
    let redundant = run_suite(&world, &cases, seed)?.results;

    let mut degraded_model = model.clone();
    for f in &mut degraded_model.functions {
        if f.id == target.id {
            f.redundancy = 1;
            f.safety_mechanism = SafetyMechanism::None;
        }
    }
    if let Some(alloc) = degraded_model.allocation.as_mut() {
        alloc.retain(|p: &Placement| p.instance.function != target.id || p.instance.replica == kept);
        for p in alloc.iter_mut().filter(|p| p.instance.function == target.id) {
            p.instance.replica = 0;
        }
    }
    let degraded_plan = plan_deployment(&degraded_model, &plan.rtenv)?;
    let degraded_world = build_sim(&degraded_plan, &degraded_model)?;
    let degraded = run_suite(&degraded_world, &cases, seed)?.results;

    Ok(ScenarioPair {
        function: target.id.clone(),
        crash,
        redundant,
        degraded,
    })
}
