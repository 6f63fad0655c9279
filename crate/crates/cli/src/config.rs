use std::path::{Path, PathBuf};

use forge_core::allocator::{Nsga2Params, DEFAULT_ENUMERATION_CAP};
use forge_core::codegen::RuntimeEnvSpec;
use forge_core::llm::{MockFault, ProviderConfig, ProviderKind};
use serde::Deserialize;

use crate::{CliError, GlobalArgs};


pub const DEFAULT_MAX_ROUNDS: usize = 3;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    inputs: Inputs,
    #[serde(default)]
    llm: LlmSection,
    #[serde(default)]
    solver: SolverSection,
    runtime: Option<RuntimeEnvSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Inputs {
    catalogue: Option<PathBuf>,
    hardware: Option<PathBuf>,
    requirements: Option<PathBuf>,
    constraints: Option<PathBuf>,
    criteria: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LlmSection {
    provider: Option<ProviderKind>,
    endpoint: Option<String>,
    api_key: Option<String>,
    model: Option<String>,
    timeout_secs: Option<u64>,
    max_tokens: Option<u32>,
    mock_fault: Option<MockFault>,
    max_rounds: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    population: Option<usize>,
    generations: Option<usize>,
    crossover_p: Option<f64>,
    mutation_p: Option<f64>,
    nsga2: Option<bool>,
    enumeration_cap: Option<u64>,
    weights: Option<[f64; 3]>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub catalogue: Option<PathBuf>,
    pub hardware: Option<PathBuf>,
    pub requirements: Option<PathBuf>,
    pub constraints: Option<PathBuf>,
    pub criteria: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub provider: ProviderConfig,
    pub max_rounds: usize,
    pub nsga2: Nsga2Params,
    pub force_nsga2: bool,
    pub enumeration_cap: u64,
    pub weights: [f64; 3],
    pub runtime: RuntimeEnvSpec,
}

impl PipelineConfig {
    /// Reads `--config` if given, then applies flags and environment.
    pub fn resolve(args: &GlobalArgs, env: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| base.join(p));

        let mut provider = ProviderConfig::default();
        let llm = file.llm;
        provider.kind = args.provider.or(llm.provider).unwrap_or_default();
        provider.endpoint = llm.endpoint;
        provider.api_key = llm.api_key;
        if let Some(m) = llm.model {
            provider.model = m;
        }
        if let Some(t) = llm.timeout_secs {
            provider.timeout_secs = t;
        }
        if let Some(t) = llm.max_tokens {
            provider.max_tokens = t;
        }
        provider.mock_fault = llm.mock_fault;
        provider.apply_env(env);

        let seed = args.seed.or(file.seed).unwrap_or(0);
        let solver = file.solver;
        let defaults = Nsga2Params::default();
        let nsga2 = Nsga2Params {
            population: args.pop.or(solver.population).unwrap_or(defaults.population),
            generations: args.gens.or(solver.generations).unwrap_or(defaults.generations),
            crossover_p: solver.crossover_p.unwrap_or(defaults.crossover_p),
            mutation_p: solver.mutation_p.or(defaults.mutation_p),
            seed,
        };
        let weights = match &args.weights {
            Some(w) => parse_weights(w)?,
            None => solver.weights.unwrap_or([1.0, 1.0, 1.0]),
        };
        let runtime = file.runtime.unwrap_or_default();
        runtime.check().map_err(|e| CliError::Usage(e.to_string()))?;

        Ok(Self {
            catalogue: rel(file.inputs.catalogue),
            hardware: rel(file.inputs.hardware),
            requirements: rel(file.inputs.requirements),
            constraints: rel(file.inputs.constraints),
            criteria: rel(file.inputs.criteria),
            out: args.out.clone().or(rel(file.out)).unwrap_or_else(|| PathBuf::from("out")),
            seed,
            provider,
            max_rounds: args.max_rounds.or(llm.max_rounds).unwrap_or(DEFAULT_MAX_ROUNDS),
            nsga2,
            force_nsga2: args.nsga2 || solver.nsga2.unwrap_or(false),
            enumeration_cap: solver.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
            weights,
            runtime,
        })
    }

    /// The named input, which must be configured and exist.
    pub fn input<'a>(&self, name: &str, path: &'a Option<PathBuf>) -> Result<&'a Path, CliError> {
        let p = path
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("no {name} path configured")))?;
        if !p.exists() {
            return Err(CliError::Usage(format!("{name} path {} does not exist", p.display())));
        }
        Ok(p)
    }
}

pub fn parse_weights(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("weights '{s}' are not three numbers")))?;
    <[f64; 3]>::try_from(parts).map_err(|_| CliError::Usage(format!("weights '{s}' are not three numbers")))
}
