use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{render_adapter, AdapterSpec, CodegenError, DeploymentPlan, TestCase};
use crate::canonical::{digest, to_canonical_json};

pub const MANIFEST_FILE: &str = "manifest.json";
const GENERATED_DIRS: [&str; 3] = ["deploy", "adapters", "tests"];

/// Relative path to hex digest.
pub type Manifest = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeployService {
    pub name: String,
    pub command: String,
    pub env: BTreeMap<String, String>,
    pub restart: String,
}

/// Contents of `deploy/<node>.yaml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeployFile {
    pub address: String,
    pub services: Vec<DeployService>,
}

/// Every generated file keyed by relative path, without the manifest.
pub fn render_files(plan: &DeploymentPlan, adapters: &[AdapterSpec], tests: &[TestCase]) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for n in &plan.nodes {
        let doc = DeployFile {
            address: n.address.clone(),
            services: n
                .services
                .iter()
                .map(|s| DeployService {
                    name: s.name.clone(),
                    command: s.command.clone(),
                    env: s.env.clone(),
                    restart: s.restart.clone(),
                })
                .collect(),
        };
        let yaml = serde_yaml::to_string(&doc).expect("plain data serializes");
        files.insert(format!("deploy/{}.yaml", n.node), yaml);
    }
    for a in adapters {
        files.insert(format!("adapters/{}.txt", a.instance), render_adapter(a));
    }
    files.insert("tests/suite.json".to_string(), to_canonical_json(tests));
    files
}

/// Writes the generated tree under `out_dir`, replacing earlier output.
pub fn render(
    plan: &DeploymentPlan,
    adapters: &[AdapterSpec],
    tests: &[TestCase],
    out_dir: &Path,
) -> Result<Manifest, CodegenError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CodegenError::Io { path, source }
    };
    for dir in GENERATED_DIRS {
        let d = out_dir.join(dir);
        if d.exists() {
            fs::remove_dir_all(&d).map_err(io(&d))?;
        }
        fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let files = render_files(plan, adapters, tests);
    let mut manifest = Manifest::new();
    for (rel, content) in &files {
        let path = out_dir.join(rel);
        fs::write(&path, content).map_err(io(&path))?;
        manifest.insert(rel.clone(), digest(content.as_bytes()));
    }
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, to_canonical_json(&manifest)).map_err(io(&path))?;
    Ok(manifest)
}
