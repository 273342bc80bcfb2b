//! TOML configuration: provider, simulator, pipeline limits and paths.
//!
//! ```toml
//! [provider]
//! model_name = "gpt-4-turbo"
//! api_key_env = "RTLFORGE_API_KEY"
//!
//! [simulator]
//! kind = "verilator"
//! timeout_secs = 20
//!
//! [pipeline]
//! max_iter = 10
//!
//! [paths]
//! suite = "suite"
//! out = "out"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::llm::ProviderConfig;
use crate::pipeline::PipelineConfig;
use crate::sim::{SimError, Simulator, SimulatorChoice, DEFAULT_TIMEOUT_SECS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    #[default]
    Auto,
    Icarus,
    Verilator,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorConfig {
    pub kind: SimulatorKind,
    /// Templates for `kind = "custom"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compile_cmd: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_cmd: Option<String>,
    pub timeout_secs: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            kind: SimulatorKind::Auto,
            compile_cmd: None,
            run_cmd: None,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }
}

impl SimulatorConfig {
    pub fn choice(&self) -> Result<SimulatorChoice, ConfigError> {
        Ok(match self.kind {
            SimulatorKind::Auto => SimulatorChoice::Auto,
            SimulatorKind::Icarus => SimulatorChoice::Icarus,
            SimulatorKind::Verilator => SimulatorChoice::Verilator,
            SimulatorKind::Custom => match (&self.compile_cmd, &self.run_cmd) {
                (Some(c), Some(r)) => SimulatorChoice::Custom {
                    compile_cmd: c.clone(),
                    run_cmd: r.clone(),
                },
                _ => return Err(ConfigError::Invalid("custom simulator needs compile_cmd and run_cmd".into())),
            },
        })
    }

    pub fn build(&self) -> Result<Simulator, ConfigError> {
        let sim = Simulator::with_choice(&self.choice()?).map_err(|e: SimError| ConfigError::Invalid(e.to_string()))?;
        Ok(sim.with_timeout(Duration::from_secs_f64(self.timeout_secs)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSection {
    pub max_iter: usize,
    pub top_k: usize,
    pub context_budget: usize,
    pub jobs: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            max_iter: p.max_iter,
            top_k: p.top_k,
            context_budget: p.context_budget,
            jobs: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub suite: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub provider: ProviderConfig,
    pub simulator: SimulatorConfig,
    pub pipeline: PipelineSection,
    pub paths: Paths,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        // relative paths are taken from the config file's directory
        if let Some(base) = origin.parent() {
            for p in [&mut cfg.paths.suite, &mut cfg.paths.kb, &mut cfg.paths.out].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.provider.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.pipeline.max_iter == 0 {
            return Err(ConfigError::Invalid("pipeline.max_iter must be at least 1".into()));
        }
        if self.pipeline.jobs == 0 {
            return Err(ConfigError::Invalid("pipeline.jobs must be at least 1".into()));
        }
        self.simulator.choice()?;
        if self.simulator.timeout_secs.is_nan() || self.simulator.timeout_secs <= 0.0 {
            return Err(ConfigError::Invalid("simulator.timeout_secs must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            temperature: self.provider.temperature,
            max_iter: self.pipeline.max_iter,
            top_k: self.pipeline.top_k,
            context_budget: self.pipeline.context_budget,
            zero_wall_time: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_benchmark_setup() {
        let c = Config::default();
        assert_eq!(c.provider.temperature, 0.1);
        assert_eq!(c.pipeline.max_iter, 10);
        assert_eq!(c.simulator.choice().unwrap(), SimulatorChoice::Auto);
        c.validate().unwrap();
    }

    #[test]
    fn parses_sections_and_resolves_paths() {
        let text = r#"
[provider]
model_name = "qwen2.5-coder-32b-instruct"
endpoint_url = "http://localhost:8000/v1/chat/completions"
api_key_env = "LOCAL_KEY"

[simulator]
kind = "custom"
compile_cmd = "iverilog -o {exe} {sources}"
run_cmd = "vvp {exe}"
timeout_secs = 5

[pipeline]
max_iter = 4
jobs = 2

[paths]
suite = "suite"
out = "/tmp/out"
"#;
        let c = Config::parse(text, Path::new("/etc/rtlforge/bench.toml")).unwrap();
        assert_eq!(c.provider.model_name, "qwen2.5-coder-32b-instruct");
        assert_eq!(c.provider.api_key_env, "LOCAL_KEY");
        assert_eq!(c.provider.temperature, 0.1);
        assert!(matches!(c.simulator.choice().unwrap(), SimulatorChoice::Custom { .. }));
        assert_eq!(c.simulator.timeout_secs, 5.0);
        assert_eq!((c.pipeline.max_iter, c.pipeline.jobs, c.pipeline.top_k), (4, 2, 3));
        assert_eq!(c.paths.suite.as_deref(), Some(Path::new("/etc/rtlforge/suite")));
        assert_eq!(c.paths.out.as_deref(), Some(Path::new("/tmp/out")));
        assert_eq!(c.pipeline_config().max_iter, 4);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["[pipeline]\nmax_iter = 0\n", "[pipeline]\njobs = 0\n", "[simulator]\ntimeout_secs = 0\n", "[provider]\ntemperature = 3.0\n", "[simulator]\nkind = \"custom\"\n"] {
            assert!(matches!(Config::parse(text, Path::new("c.toml")), Err(ConfigError::Invalid(_))), "{text}");
        }
        assert!(matches!(Config::parse("[provider\n", Path::new("c.toml")), Err(ConfigError::Parse { .. })));
    }
}
