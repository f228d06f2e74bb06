//! TOML pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ensemble_client::EndpointSpec;
use ensemble_core::inference::EmConfig;
use ensemble_core::scoring::{Strategy, Template, TemplateSet};
use ensemble_core::{Error, Result, ScoreLevels};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Line-delimited query/response records.
    pub dataset: Option<PathBuf>,
    /// Line-delimited per-query correctness labels.
    pub labels: Option<PathBuf>,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Completion cache directory; defaults to `<out>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub levels: LevelsConfig,
    /// Template paths keyed by window size ("1" through "4").
    #[serde(default)]
    pub templates: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub judges: Vec<EndpointSpec>,
    pub simulate: Option<SimulateSection>,
}

fn default_strategy() -> String {
    "flipped-triple".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    pub values: Vec<f64>,
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSection {
    pub max_iters: usize,
    pub tol: f64,
    pub smoothing: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmConfig::default();
        Self {
            max_iters: d.max_iters,
            tol: d.tol,
            smoothing: d.smoothing,
        }
    }
}

/// Synthetic data generator settings. Either `diagonal` (one entry per judge,
/// off-diagonal mass spread uniformly) or explicit `alpha` + `pis`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub num_queries: usize,
    pub num_responses: usize,
    #[serde(default)]
    pub fractional: bool,
    pub diagonal: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub pis: Option<Vec<Vec<Vec<f64>>>>,
}

impl PipelineConfig {
    /// Parse and validate; referenced paths must exist. Relative paths are
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(p) = &mut self.dataset {
            resolve(p);
        }
        if let Some(p) = &mut self.labels {
            resolve(p);
        }
        resolve(&mut self.out);
        if let Some(p) = &mut self.cache_dir {
            resolve(p);
        }
        for p in self.templates.values_mut() {
            resolve(p);
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, path) in [("dataset", &self.dataset), ("labels", &self.labels)] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "{name} file {} does not exist",
                        path.display()
                    )));
                }
            }
        }
        for (window, path) in &self.templates {
            window.parse::<usize>().map_err(|_| {
                Error::Config(format!("template key {window:?} is not a window size"))
            })?;
            if !path.exists() {
                return Err(Error::Config(format!(
                    "template file {} does not exist",
                    path.display()
                )));
            }
        }
        self.strategy.parse::<Strategy>()?;
        self.score_levels()?;
        self.em_config().validate()?;
        Ok(())
    }

    pub fn score_levels(&self) -> Result<ScoreLevels> {
        ScoreLevels::new(self.levels.values.clone(), self.levels.labels.clone())
    }

    pub fn parsed_strategy(&self) -> Result<Strategy> {
        self.strategy.parse()
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_iters: self.em.max_iters,
            tol: self.em.tol,
            smoothing: self.em.smoothing,
            track_likelihood: true,
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out.join("cache"))
    }

    /// Load and validate every configured template file.
    pub fn template_set(&self) -> Result<TemplateSet> {
        let mut set = TemplateSet::new();
        for (window, path) in &self.templates {
            let window: usize = window.parse().unwrap();
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let template = Template::parse(&text)?;
            if template.window_size() != window {
                return Err(Error::Config(format!(
                    "template {} declares {} response slots but is keyed as window size {window}",
                    path.display(),
                    template.window_size()
                )));
            }
            set.insert(template);
        }
        Ok(set)
    }
}
