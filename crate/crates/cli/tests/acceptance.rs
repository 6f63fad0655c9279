//! End-to-end acceptance checks. Runs as a plain binary so that each
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use forge_cli::{run, EXIT_FAILED, EXIT_OK};
use forge_core::allocator::{
    build_problem, check_feasible, solve_exact, solve_nsga2, Nsga2Params, SolveOutcome, ViolationKind,
    DEFAULT_ENUMERATION_CAP,
};
use forge_core::canonical::digest;
use forge_core::codegen::{emit_tests, plan_deployment, Criterion, FlowRef, RuntimeEnvSpec, TestKind};
use forge_core::constraint::{evaluate, ConstraintSet};
use forge_core::model::{load_instance_model, merge_allocation, save_instance_model, InstanceModel};
use forge_core::sim::{build_sim, redundancy_scenarios, run_suite, SimWorld};
use forge_testkit::alloc_oracle::oracle_front;
use forge_testkit::gen::{random_alloc_model, random_constraint, random_model};
use forge_testkit::reference_eval::reference_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

fn read_model(path: &Path) -> InstanceModel {
    load_instance_model(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn forge(args: &[&str]) -> i32 {
    let mut argv = vec!["forge"];
    argv.extend_from_slice(args);
    run(argv)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

/// Relative path to digest for every file under `dir`.
fn tree_digests(dir: &Path) -> BTreeMap<String, String> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, digest(&std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn c1_differential() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut agree = 0;
    let mut verdicts = 0;
    for i in 0..1000 {
        let model = random_model(&mut rng);
        let cs = ConstraintSet {
            constraints: vec![random_constraint(&mut rng, &format!("C{i}"))],
        };
        let prod: Vec<_> = evaluate(&cs, &model)
            .entries
            .into_iter()
            .map(|e| (e.constraint, e.context, e.element, e.verdict))
            .collect();
        verdicts += prod.len();
        if prod == reference_report(&cs, &model) {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(agree == 1000, format!("{agree}/1000 pairs agree"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("1000/1000 pairs agree ({verdicts} verdicts) in {elapsed:.2?}"))
}

fn c2_exact_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut points = 0;
    for i in 0..50 {
        let model = random_alloc_model(&mut rng, 5, 4);
        let problem = build_problem::<f64>(&model, &[]).unwrap();
        let expected = oracle_front(&model);
        let got: Vec<[f64; 3]> = match solve_exact(&problem, DEFAULT_ENUMERATION_CAP).unwrap() {
            SolveOutcome::Front(f) => f.objective_points().iter().map(|o| o.as_array()).collect(),
            SolveOutcome::Empty(_) => Vec::new(),
        };
        ensure(got == expected, format!("problem {i}: exact {got:?} vs oracle {expected:?}"))?;
        points += got.len();
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("50/50 fronts match ({points} points) in {elapsed:.2?}"))
}

fn c3_nsga2_quality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut good = 0;
    let mut instances = 0;
    let mut slowest = Duration::ZERO;
    let mut skipped = 0;
    while instances < 20 {
        let model = random_alloc_model(&mut rng, 5, 4);
        let problem = build_problem::<f64>(&model, &[]).unwrap();
        let exact = match solve_exact(&problem, DEFAULT_ENUMERATION_CAP).unwrap() {
            SolveOutcome::Front(f) => f,
            // Recovery is undefined without feasible points.
            SolveOutcome::Empty(_) => {
                skipped += 1;
                continue;
            }
        };
        let params = Nsga2Params {
            population: 64,
            generations: 200,
            seed: instances,
            ..Nsga2Params::default()
        };
        let start = Instant::now();
        let outcome = solve_nsga2(&problem, &params).unwrap();
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        within(elapsed, Duration::from_secs(5)).map_err(|e| format!("instance {instances}: {e}"))?;
        let front = outcome.front().ok_or(format!("instance {instances}: NSGA-II found no feasible point"))?;
        for p in &front.points {
            let violations = check_feasible(&problem, &p.assignment).map_err(|e| e.to_string())?;
            ensure(violations.is_empty(), format!("instance {instances}: infeasible point"))?;
            for q in &front.points {
                ensure(!q.objectives.dominates(&p.objectives), format!("instance {instances}: dominated point"))?;
            }
        }
        let target = exact.objective_points();
        let found = front.objective_points();
        let hit = target.iter().filter(|t| found.contains(t)).count();
        if hit as f64 >= 0.9 * target.len() as f64 {
            good += 1;
        }
        instances += 1;
    }
    ensure(good >= 18, format!("only {good}/20 instances recover >= 90% of the exact front"))?;
    Ok(format!(
        "{good}/20 instances recover >= 90%, all points feasible and non-dominated, slowest {slowest:.2?} ({skipped} infeasible draws skipped)"
    ))
}

fn c4_fixtures() -> Check {
    let mini = read_model(&fixture("alloc_mini.json"));
    let p = build_problem::<f64>(&mini, &[]).unwrap();
    let front = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap();
    let points = front.front().ok_or("alloc-mini has no front")?.objective_points();
    let arrays: Vec<[f64; 3]> = points.iter().map(|o| o.as_array()).collect();
    ensure(arrays == [[7.0, 10.0, 0.0]], format!("alloc-mini front {arrays:?}"))?;

    let demo = read_model(&fixture("demo_brake.json"));
    let p = build_problem::<f64>(&demo, &[]).unwrap();
    let SolveOutcome::Empty(inf) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() else {
        return Err("demo-brake unexpectedly feasible".into());
    };
    let named = inf.violations.iter().any(|v| {
        matches!(v.kind, ViolationKind::Asil | ViolationKind::AntiAffinity)
            && v.subjects.iter().any(|s| s.starts_with("brake_ctrl"))
    });
    ensure(named, format!("demo-brake violations {:?}", inf.violations))?;
    let kinds: Vec<String> = inf.violations.iter().map(|v| v.to_string()).collect();
    Ok(format!("alloc-mini front [(7 W, 10, 0 bps)]; demo-brake EmptyFront: {}", kinds.join("; ")))
}

fn c5_codegen_determinism(tmp: &Path) -> Check {
    let enhanced = tmp.join("c5_model.json");
    let model = read_model(&fixture("redundancy_voting.json"));
    std::fs::write(&enhanced, save_instance_model(&model)).unwrap();
    let mut manifests = Vec::new();
    for run_no in 0..2 {
        let out = tmp.join(format!("c5_{run_no}"));
        let code = forge(&["--out", out.to_str().unwrap(), "codegen", enhanced.to_str().unwrap()]);
        ensure(code == EXIT_OK, format!("codegen exit {code}"))?;
        manifests.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    let parsed: BTreeMap<String, String> = serde_json::from_slice(&manifests[0]).unwrap();
    ensure(manifests[0] == manifests[1], "manifests differ")?;
    Ok(format!("two runs, {} digests, 0 differ", parsed.len()))
}

fn ratio(results: &forge_core::sim::TestResults, id: &str) -> f64 {
    results.case(id).unwrap().delivery_ratio
}

fn c6_redundancy() -> Check {
    let mut lines = Vec::new();
    for (file, label) in [("redundancy_hot_standby.json", "hot_standby r=2"), ("redundancy_voting.json", "voting r=3")] {
        let model = read_model(&fixture(file));
        let plan = plan_deployment(&model, &RuntimeEnvSpec::default()).unwrap();
        let criteria = vec![
            criterion("in", "sensor", "ctrl", None),
            criterion("out", "ctrl", "actuator", None),
        ];
        let suite = emit_tests(&criteria, &plan).unwrap();
        let pair = redundancy_scenarios(&plan, &model, &suite, 10_000, 0).unwrap();
        for id in ["in", "out"] {
            let (r, d) = (ratio(&pair.redundant, id), ratio(&pair.degraded, id));
            ensure(r == 1.0, format!("{label} {id}: redundant ratio {r}"))?;
            ensure((d - 0.5).abs() <= 0.01, format!("{label} {id}: degraded ratio {d}"))?;
        }
        lines.push(format!(
            "{label}: crash {} -> {} / degraded {}",
            pair.crash.target,
            ratio(&pair.redundant, "out"),
            ratio(&pair.degraded, "out")
        ));
    }
    Ok(lines.join("; "))
}

fn criterion(id: &str, src: &str, dst: &str, max_p95: Option<f64>) -> Criterion {
    Criterion {
        id: id.into(),
        kind: None,
        flow: FlowRef {
            src: src.into(),
            dst: dst.into(),
        },
        min_delivery_ratio: Some(1.0),
        max_p95_latency_ms: max_p95,
        faults: Vec::new(),
        duration_ms: Some(2_000),
    }
}

/// Runs one functional case per flow and checks exact ratios and latencies.
fn zero_fault_complete(model: &InstanceModel) -> Result<usize, String> {
    let plan = plan_deployment(model, &RuntimeEnvSpec::default()).unwrap();
    let criteria: Vec<Criterion> = plan
        .topics
        .iter()
        .enumerate()
        .map(|(i, t)| criterion(&format!("f{i}"), &t.src_fn, &t.dst_fn, None))
        .collect();
    let suite = emit_tests(&criteria, &plan).unwrap();
    let world: SimWorld = build_sim(&plan, model).unwrap();
    let run = run_suite(&world, &suite, 9).unwrap();
    let problem = build_problem::<f64>(model, &[]).unwrap();
    for case in &suite {
        ensure(case.kind == TestKind::Functional, "criterion not functional")?;
        let res = run.results.case(&case.id).unwrap();
        ensure(res.delivery_ratio == 1.0, format!("{}: ratio {}", case.id, res.delivery_ratio))?;
        for flow in world.flows.iter().filter(|f| f.src_fn == case.flow.src && f.dst_fn == case.flow.dst) {
            let statics: Vec<f64> = flow
                .producers
                .iter()
                .flat_map(|&p| flow.consumers.iter().map(move |&c| (p, c)))
                .filter_map(|(p, c)| problem.routes[p][c].as_ref().map(|r| r.latency_ms))
                .collect();
            let samples = &run.reports[&case.id].flows[&flow.edge].latency_samples;
            let min_static = statics.iter().copied().fold(f64::INFINITY, f64::min);
            ensure(
                samples.iter().all(|s| *s == min_static),
                format!("{}: latency differs from static path latency {min_static}", case.id),
            )?;
        }
    }
    Ok(suite.len())
}

fn c7_zero_fault(tmp: &Path) -> Check {
    let mut cases = 0;
    // The demo deployment as produced by the pipeline.
    let out = tmp.join("c7");
    let code = forge(&["--config", fixture("demo/forge.toml").to_str().unwrap(), "--out", out.to_str().unwrap(), "pipeline"]);
    ensure(code == EXIT_OK, format!("demo pipeline exit {code}"))?;
    cases += zero_fault_complete(&read_model(&out.join("enhanced_model.json")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut models = 0;
    while models < 30 {
        let model = random_alloc_model(&mut rng, 4, 4);
        let problem = build_problem::<f64>(&model, &[]).unwrap();
        let Ok(SolveOutcome::Front(front)) = solve_exact(&problem, DEFAULT_ENUMERATION_CAP) else {
            continue;
        };
        let pick = rng.gen_range(0..front.len());
        let enhanced = merge_allocation(&model, &front.points[pick].assignment).unwrap();
        cases += zero_fault_complete(&enhanced)?;
        models += 1;
    }
    Ok(format!("{cases} functional cases over the demo and 30 random deployments: ratio 1.0, latency = static path"))
}

fn c8_pipeline(tmp: &Path) -> Check {
    let config = fixture("demo/forge.toml");
    let mut trees = Vec::new();
    for run_no in 0..2 {
        let out = tmp.join(format!("c8_{run_no}"));
        let code = forge(&["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "pipeline"]);
        ensure(code == EXIT_OK, format!("pipeline run {run_no} exit {code}"))?;
        for artifact in ["model.json", "front.json", "deploy", "report.json", "manifest.json"] {
            ensure(out.join(artifact).exists(), format!("missing {artifact}"))?;
        }
        trees.push(tree_digests(&out));
    }
    ensure(trees[0] == trees[1], "rerun digests differ")?;

    let out = tmp.join("c8_fault");
    let fault = fixture("demo/forge_fault.toml");
    let code = forge(&["--config", fault.to_str().unwrap(), "--out", out.to_str().unwrap(), "gen-model"]);
    ensure(code == EXIT_OK, format!("scripted-fault gen-model exit {code}"))?;
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    let rounds = trace["rounds"].as_array().unwrap();
    ensure(rounds.len() == 2, format!("{} rounds", rounds.len()))?;
    ensure(trace["status"] == "accepted", "scripted fault not accepted")?;
    Ok(format!(
        "exit 0 twice, {} files with identical digests; scripted fault: 2 rounds, accepted",
        trees[0].len()
    ))
}

fn c9_feedback(tmp: &Path) -> Check {
    let mut model = read_model(&fixture("demo_brake.json"));
    model.functions.iter_mut().find(|f| f.id == "speed_sense").unwrap().cpu_req = 0;
    let path = tmp.join("c9_model.json");
    std::fs::write(&path, save_instance_model(&model)).unwrap();
    let out = tmp.join("c9");
    let code = forge(&["--out", out.to_str().unwrap(), "validate", path.to_str().unwrap()]);
    ensure(code == EXIT_FAILED, format!("validate exit {code}"))?;
    let diags: Vec<HashMap<String, serde_json::Value>> =
        serde_json::from_str(&std::fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
    let hit = diags.iter().find(|d| d["constraint_id"] == "MinCpu" && d["context_element_id"] == "speed_sense");
    let d = hit.ok_or(format!("no MinCpu diagnostic for speed_sense in {diags:?}"))?;
    let suggestion = d["suggestion"].as_str().unwrap_or_default();
    ensure(!suggestion.trim().is_empty(), "empty suggestion")?;
    Ok(format!("exit 3, MinCpu @ speed_sense: \"{suggestion}\""))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let checks: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("C1 constraint differential", Box::new(c1_differential)),
        ("C2 exact front vs oracle", Box::new(c2_exact_oracle)),
        ("C3 NSGA-II quality", Box::new(c3_nsga2_quality)),
        ("C4 fixture fronts", Box::new(c4_fixtures)),
        ("C5 codegen determinism", Box::new(|| c5_codegen_determinism(tmp.path()))),
        ("C6 redundancy discrimination", Box::new(c6_redundancy)),
        ("C7 zero-fault completeness", Box::new(|| c7_zero_fault(tmp.path()))),
        ("C8 end-to-end pipeline", Box::new(|| c8_pipeline(tmp.path()))),
        ("C9 feedback fidelity", Box::new(|| c9_feedback(tmp.path()))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("[acceptance] {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("[acceptance] {name}: FAIL ({why})");
            }
        }
    }
    println!("[acceptance] {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
