use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::AnalysisConfig;
use crate::error::{Error, Result};
use crate::generators::GeneratorJob;
use crate::runner::ExperimentPlan;

fn instances_dir() -> PathBuf {
    PathBuf::from("instances")
}

fn analysis_dir() -> PathBuf {
    PathBuf::from("analysis")
}

fn csv_only() -> Vec<String> {
    vec!["csv".into()]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "instances_dir")]
    pub dir: PathBuf,
    pub jobs: Vec<GeneratorJob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencesSection {
    /// Persistent registry to read references from; when absent references
    /// are derived from the store itself.
    pub registry: Option<PathBuf>,
    /// Use the exact dynamic program for small instances when deriving.
    #[serde(default = "yes")]
    pub exact: bool,
}

impl Default for ReferencesSection {
    fn default() -> Self {
        ReferencesSection {
            registry: None,
            exact: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSection {
    #[serde(default = "analysis_dir")]
    pub dir: PathBuf,
    #[serde(default = "csv_only")]
    pub formats: Vec<String>,
}

impl Default for ExportSection {
    fn default() -> Self {
        ExportSection {
            dir: analysis_dir(),
            formats: csv_only(),
        }
    }
}

/// The whole experiment pipeline in one TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub generate: Option<GenerateSection>,
    pub plan: Option<ExperimentPlan>,
    #[serde(default)]
    pub analyze: AnalysisConfig,
    #[serde(default)]
    pub references: ReferencesSection,
    #[serde(default)]
    pub export: ExportSection,
}

/// A parsed config plus the hash of its exact bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub hash: String,
}

impl PipelineConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!(
                "{}: {}",
                origin.display(),
                e.to_string().trim_end()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.generate {
            let mut ids = std::collections::HashSet::new();
            for job in &g.jobs {
                job.validate()?;
                for id in job.ids() {
                    if !ids.insert(id.clone()) {
                        return Err(Error::InvalidConfig(format!(
                            "generate: duplicate instance id `{id}`"
                        )));
                    }
                }
            }
        }
        if let Some(p) = &self.plan {
            p.validate()?;
        }
        self.analyze.validate()?;
        if let Some(f) = self.export.formats.iter().find(|f| f.as_str() != "csv") {
            return Err(Error::InvalidConfig(format!(
                "export: unsupported format `{f}`"
            )));
        }
        Ok(())
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::InvalidConfig(format!("{}: not UTF-8", path.display())))?;
    let config = PipelineConfig::parse(&text, path)?;
    let digest = Sha256::digest(&bytes);
    let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    Ok(LoadedConfig { config, hash })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[generate]
seed = 3
[[generate.jobs]]
generator = "rue"
n = 20
count = 2
[[generate.jobs]]
generator = "netgen"
n = 20
clusters = 2

[plan]
id = "demo"
runs = 2
cutoff_ms = 50
time_mode = "evals"
[[plan.solvers]]
id = "ils"
config = { family = "ils", crossover = "ipt" }
[[plan.solvers]]
id = "ga"
config = { family = "ga", crossover = "eax", population = 6 }

[analyze]
alphas = [0.1, 0.0]
time_points = 10

[export]
dir = "out"
"#;

    #[test]
    fn full_document_parses() {
        let cfg = PipelineConfig::parse(FULL, Path::new("x.toml")).unwrap();
        assert_eq!(cfg.generate.as_ref().unwrap().jobs.len(), 2);
        let plan = cfg.plan.unwrap();
        assert_eq!(plan.solvers[1].config.population, 6);
        assert_eq!(plan.runs, 2);
        assert_eq!(cfg.analyze.alphas, vec![0.1, 0.0]);
        assert!(cfg.references.exact);
    }

    #[test]
    fn strictness() {
        let unknown = FULL.replace("time_points = 10", "time_points = 10\ncolour = 1");
        let err = PipelineConfig::parse(&unknown, Path::new("x.toml"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("colour") && err.contains("line"), "{err}");
        let gen = FULL.replace("\"netgen\"", "\"voronoi\"");
        assert!(PipelineConfig::parse(&gen, Path::new("x.toml")).is_err());
        let empty_alpha = FULL.replace("alphas = [0.1, 0.0]", "alphas = []");
        assert!(PipelineConfig::parse(&empty_alpha, Path::new("x.toml")).is_err());
        let dup = FULL.replace("id = \"ga\"", "id = \"ils\"");
        assert!(PipelineConfig::parse(&dup, Path::new("x.toml")).is_err());
    }
}
