use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use forge_core::allocator::{
    build_problem, select_solution, solve_exact, solve_nsga2, AllocError, SolveOutcome,
};
use forge_core::canonical::to_canonical_json;
use forge_core::codegen::{
    emit_adapters, emit_tests, lint, plan_deployment, render, render_files, Criterion, DeployFile, TestCase,
};
use forge_core::constraint::{explain, parse_constraints, print_constraints, ConstraintSet};
use forge_core::llm::{full_report, generate_artifacts, HardwareSpec, LlmError};
use forge_core::model::{load_instance_model, merge_allocation, save_instance_model, FunctionSpec, InstanceModel};
use forge_core::sim::{build_sim, redundancy_scenarios, run_suite, ScenarioPair, SimError, SuiteRun};
use serde::Serialize;

use crate::{CliError, PipelineConfig, EXIT_FAILED, EXIT_OK};

pub const MODEL_FILE: &str = "model.json";
pub const CONSTRAINTS_FILE: &str = "constraints.ocl";
pub const TRACE_FILE: &str = "trace.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const FRONT_FILE: &str = "front.json";
pub const ALLOCATION_FILE: &str = "allocation.csv";
pub const ENHANCED_FILE: &str = "enhanced_model.json";
pub const VIOLATIONS_FILE: &str = "violations.json";
pub const REPORT_FILE: &str = "report.json";
pub const PIPELINE_FILE: &str = "pipeline.json";

type Outcome = Result<i32, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<InstanceModel, CliError> {
    load_instance_model(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_constraints(path: &Path) -> Result<ConstraintSet, CliError> {
    parse_constraints(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn cmd_gen_model(cfg: &PipelineConfig) -> Outcome {
    let catalogue: Vec<FunctionSpec> = parse_json(cfg.input("catalogue", &cfg.catalogue)?)?;
    let hardware: HardwareSpec = parse_json(cfg.input("hardware", &cfg.hardware)?)?;
    let requirements = read(cfg.input("requirements", &cfg.requirements)?)?;
    let extra = match &cfg.constraints {
        Some(_) => Some(load_constraints(cfg.input("constraints", &cfg.constraints)?)?),
        None => None,
    };
    let provider = cfg.provider.build().map_err(|e| CliError::Usage(e.to_string()))?;

    match generate_artifacts(&requirements, &catalogue, &hardware, provider.as_ref(), cfg.max_rounds) {
        Ok((model, mut cs, trace)) => {
            if let Some(extra) = extra {
                cs.constraints.extend(extra.constraints);
            }
            write(&cfg.out, MODEL_FILE, &save_instance_model(&model))?;
            write(&cfg.out, CONSTRAINTS_FILE, &print_constraints(&cs))?;
            write(&cfg.out, TRACE_FILE, &to_canonical_json(&trace))?;
            println!("model accepted after {} round(s)", trace.rounds.len());
            Ok(EXIT_OK)
        }
        Err(LlmError::Rejected(trace)) => {
            write(&cfg.out, TRACE_FILE, &to_canonical_json(&trace))?;
            println!("model rejected after {} round(s)", trace.rounds.len());
            if let Some(last) = trace.rounds.last() {
                println!("last round: {}", last.summary);
            }
            Ok(EXIT_FAILED)
        }
        Err(LlmError::Provider(e)) => Err(CliError::Io(e.to_string())),
        Err(LlmError::Input(m)) => Err(CliError::Usage(m)),
    }
}

pub fn cmd_validate(cfg: &PipelineConfig, model: &Path, constraints: Option<&Path>) -> Outcome {
    let model = load_model(model)?;
    let cs = match constraints {
        Some(p) => load_constraints(p)?,
        None => ConstraintSet::default(),
    };
    let report = full_report(&cs, &model);
    let diagnostics = explain(&report, &model);
    write(&cfg.out, DIAGNOSTICS_FILE, &to_canonical_json(&diagnostics))?;
    let failures = report.failures().count();
    println!("{} check(s), {} failing", report.entries.len(), failures);
    for d in &diagnostics {
        println!("{} [{}] {}: {} {}", d.constraint_id, d.context, d.context_element_id, d.message, d.suggestion);
    }
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILED })
}

pub fn cmd_allocate(cfg: &PipelineConfig, model_path: &Path) -> Outcome {
    let model = load_model(model_path)?;
    let problem = build_problem::<f64>(&model, &[]).map_err(|e| CliError::Usage(e.to_string()))?;
    let solver_err = |e: AllocError| CliError::Usage(e.to_string());
    let outcome = if cfg.force_nsga2 {
        solve_nsga2(&problem, &cfg.nsga2).map_err(solver_err)?
    } else {
        match solve_exact(&problem, cfg.enumeration_cap) {
            Ok(o) => o,
            Err(AllocError::Size { size, cap }) => {
                println!("search space {size} exceeds {cap}, using NSGA-II");
                solve_nsga2(&problem, &cfg.nsga2).map_err(solver_err)?
            }
            Err(e) => return Err(solver_err(e)),
        }
    };
    match outcome {
        SolveOutcome::Front(front) => {
            let chosen = select_solution(&front, cfg.weights).map_err(solver_err)?;
            let enhanced = merge_allocation(&model, &chosen.assignment).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&cfg.out, FRONT_FILE, &front.to_json())?;
            write(&cfg.out, ALLOCATION_FILE, &chosen.assignment.to_csv())?;
            write(&cfg.out, ENHANCED_FILE, &save_instance_model(&enhanced))?;
            print_front(&front);
            let o = chosen.objectives;
            println!("selected: power {} W, cost {}, traffic {} bps", o.power_w, o.cost, o.traffic_bps);
            Ok(EXIT_OK)
        }
        SolveOutcome::Empty(infeasible) => {
            write(&cfg.out, VIOLATIONS_FILE, &to_canonical_json(&infeasible))?;
            println!("no feasible allocation; least-violating assignment breaks:");
            for v in &infeasible.violations {
                println!("  {v}");
            }
            Ok(EXIT_FAILED)
        }
    }
}

fn print_front(front: &forge_core::ParetoSet) {
    println!("Pareto front with {} point(s)", front.len());
    for p in &front.points {
        let o = p.objectives;
        println!("  power {} W, cost {}, traffic {} bps", o.power_w, o.cost, o.traffic_bps);
    }
}

pub fn cmd_codegen(cfg: &PipelineConfig, model_path: &Path) -> Outcome {
    let model = load_model(model_path)?;
    let plan = plan_deployment(&model, &cfg.runtime).map_err(|e| CliError::Usage(e.to_string()))?;
    let issues = lint(&plan, &model);
    if !issues.is_empty() {
        for i in &issues {
            println!("lint: {i}");
        }
        return Ok(EXIT_FAILED);
    }
    let criteria: Vec<Criterion> = match &cfg.criteria {
        Some(_) => parse_json(cfg.input("criteria", &cfg.criteria)?)?,
        None => Vec::new(),
    };
    let tests = emit_tests(&criteria, &plan).map_err(|e| CliError::Usage(e.to_string()))?;
    let adapters = emit_adapters(&plan, &model);
    let manifest = render(&plan, &adapters, &tests, &cfg.out).map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "wrote {} file(s): {} node(s), {} adapter(s), {} test case(s)",
        manifest.len(),
        plan.nodes.len(),
        adapters.len(),
        tests.len()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    seed: u64,
    passed: bool,
    results: &'a forge_core::sim::TestResults,
    runs: &'a BTreeMap<String, forge_core::sim::SimReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    redundancy: Option<ScenarioPair>,
}

/// Deploy files on disk must be exactly what the model and runtime settings
/// produce.
fn check_deploy_files(cfg: &PipelineConfig, plan: &forge_core::codegen::DeploymentPlan) -> Result<(), CliError> {
    let expected: BTreeMap<String, String> = render_files(plan, &[], &[])
        .into_iter()
        .filter(|(k, _)| k.starts_with("deploy/"))
        .collect();
    let dir = cfg.out.join("deploy");
    let mut found = BTreeMap::new();
    let entries = fs::read_dir(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Io(e.to_string()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".yaml") {
            found.insert(format!("deploy/{name}"), read(&entry.path())?);
        }
    }
    if found.keys().ne(expected.keys()) {
        return Err(CliError::Usage("deploy files do not match the enhanced model".into()));
    }
    for (k, text) in &found {
        let on_disk: DeployFile =
            serde_yaml::from_str(text).map_err(|e| CliError::Parse(format!("{k}: {e}")))?;
        let wanted: DeployFile = serde_yaml::from_str(&expected[k]).expect("rendered yaml parses");
        if on_disk != wanted {
            return Err(CliError::Usage(format!("{k} does not match the enhanced model")));
        }
    }
    Ok(())
}

pub fn cmd_simulate(cfg: &PipelineConfig, model_path: Option<&Path>) -> Outcome {
    let default_model = cfg.out.join(ENHANCED_FILE);
    let model = load_model(model_path.unwrap_or(&default_model))?;
    let suite: Vec<TestCase> = parse_json(&cfg.out.join("tests/suite.json"))?;
    for case in &suite {
        case.check().map_err(|m| CliError::Parse(format!("test case {}: {m}", case.id)))?;
    }
    let plan = plan_deployment(&model, &cfg.runtime).map_err(|e| CliError::Usage(e.to_string()))?;
    check_deploy_files(cfg, &plan)?;
    let sim_err = |e: SimError| CliError::Usage(e.to_string());
    let world = build_sim(&plan, &model).map_err(sim_err)?;
    let SuiteRun { reports, results } = run_suite(&world, &suite, cfg.seed).map_err(sim_err)?;

    let redundant = model.functions.iter().any(|f| f.redundancy > 1);
    let redundancy = if redundant && !suite.is_empty() {
        let horizon = suite.iter().map(|c| c.duration_ms).max().unwrap_or(10_000);
        let functional: Vec<TestCase> = suite.iter().filter(|c| c.faults.is_empty()).cloned().collect();
        match redundancy_scenarios(&plan, &model, &functional, horizon, cfg.seed) {
            Ok(pair) => Some(pair),
            Err(SimError::Precondition(m)) => {
                println!("redundancy scenarios skipped: {m}");
                None
            }
            Err(e) => return Err(sim_err(e)),
        }
    } else {
        None
    };

    for c in &results.cases {
        let p95 = c.p95_latency_ms.map(|p| format!("{p} ms")).unwrap_or_else(|| "-".into());
        println!(
            "{:?} {} [{:?}] ratio {} ({}/{}), p95 {}",
            c.verdict, c.id, c.kind, c.delivery_ratio, c.delivered, c.sent, p95
        );
        for f in &c.failures {
            println!("    {f}");
        }
    }
    if let Some(pair) = &redundancy {
        let ratios = |r: &forge_core::sim::TestResults| {
            r.cases.iter().map(|c| format!("{}={}", c.id, c.delivery_ratio)).collect::<Vec<_>>().join(" ")
        };
        println!("crash of {} at {} ms on {}:", pair.crash.target, pair.crash.at_ms, pair.function);
        println!("  redundant: {}", ratios(&pair.redundant));
        println!("  degraded:  {}", ratios(&pair.degraded));
    }
    let passed = results.all_pass();
    let report = SimulationReport {
        seed: cfg.seed,
        passed,
        results: &results,
        runs: &reports,
        redundancy,
    };
    write(&cfg.out, REPORT_FILE, &to_canonical_json(&report))?;
    println!(
        "functional failures: {}, non-functional failures: {}",
        results.functional_failures.len(),
        results.nonfunctional_failures.len()
    );
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct StageRecord {
    stage: &'static str,
    exit: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct PipelineRecord {
    stages: Vec<StageRecord>,
    exit: i32,
}

pub fn cmd_pipeline(cfg: &PipelineConfig) -> Outcome {
    // Fail fast on configuration problems before any stage runs.
    cfg.input("catalogue", &cfg.catalogue)?;
    cfg.input("hardware", &cfg.hardware)?;
    cfg.input("requirements", &cfg.requirements)?;
    if cfg.criteria.is_some() {
        cfg.input("criteria", &cfg.criteria)?;
    }
    if cfg.constraints.is_some() {
        cfg.input("constraints", &cfg.constraints)?;
    }

    let out = &cfg.out;
    let model = out.join(MODEL_FILE);
    let constraints = out.join(CONSTRAINTS_FILE);
    let enhanced = out.join(ENHANCED_FILE);
    type Stage<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let stages: Vec<Stage> = vec![
        ("gen-model", Box::new(|| cmd_gen_model(cfg))),
        ("validate", Box::new(|| cmd_validate(cfg, &model, Some(&constraints)))),
        ("allocate", Box::new(|| cmd_allocate(cfg, &model))),
        ("codegen", Box::new(|| cmd_codegen(cfg, &enhanced))),
        ("simulate", Box::new(|| cmd_simulate(cfg, Some(&enhanced)))),
    ];
    let mut record = PipelineRecord {
        stages: Vec::new(),
        exit: EXIT_OK,
    };
    for (name, stage) in stages {
        println!("== {name}");
        let (exit, error) = match stage() {
            Ok(code) => (code, None),
            Err(e) => {
                eprintln!("forge: {e}");
                (crate::EXIT_USAGE, Some(e.to_string()))
            }
        };
        record.stages.push(StageRecord { stage: name, exit, error });
        if exit != EXIT_OK {
            record.exit = exit;
            break;
        }
    }
    write(out, PIPELINE_FILE, &to_canonical_json(&record))?;
    Ok(record.exit)
}
