//! Experiment file parsing, overrides and pre-run validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statebench::encoders::{Granularity, Grounding, OracleFlag, RepresentationSpec, Structure};
use statebench::env::EnvSpec;
use statebench::eval::RunConfig;
use statebench::llm::{Backend, ModelConfig};

pub const ENV_ENDPOINT: &str = "STATEBENCH_ENDPOINT";
pub const ENV_API_KEY: &str = "STATEBENCH_API_KEY";
pub const ENV_MODEL: &str = "STATEBENCH_MODEL";

/// `[model]` table. There is deliberately no key for credentials.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub backend: Option<Backend>,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub backoff_initial_ms: Option<u64>,
    pub backoff_max_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
}

/// One `[[grid]]` table; its cells are the cross product of the lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub environments: Vec<String>,
    pub granularity: Vec<Granularity>,
    pub structure: Vec<Structure>,
    #[serde(default = "default_grounding")]
    pub grounding: Vec<Grounding>,
    /// Each entry is one flag set; `[[]]` means no flags.
    #[serde(default = "default_flags")]
    pub oracle_flags: Vec<Vec<OracleFlag>>,
}

fn default_grounding() -> Vec<Grounding> {
    vec![Grounding::TextOnly]
}

fn default_flags() -> Vec<Vec<OracleFlag>> {
    vec![Vec::new()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub run_seed: u64,
    #[serde(default = "one")]
    pub runs: u32,
    /// Episodes per run; the environment default when absent.
    pub episodes: Option<u32>,
    #[serde(default = "one_usize")]
    pub parallelism: usize,
    /// Condition label every other cell is compared with; defaults to the
    /// first cell.
    pub baseline: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    pub grid: Vec<GridSection>,
}

fn default_out() -> PathBuf {
    PathBuf::from("statebench-out")
}

fn one() -> u32 {
    1
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mock: Option<String>,
    pub episodes: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

/// A diagnostic naming the offending key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub out_dir: PathBuf,
    pub baseline: String,
    pub cells: Vec<RunConfig>,
    pub model: ModelConfig,
}

pub fn load(path: &Path) -> Result<ExperimentFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(path.display().to_string(), e))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentFile, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let key = e.span().map_or_else(|| "(file)".to_string(), |s| key_at(text, s.start));
        err(key, e.message())
    })
}

/// Best-effort key name at a byte offset: the `key =` on that line, or the
/// enclosing table header.
fn key_at(text: &str, offset: usize) -> String {
    let line_start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    match line.split_once('=') {
        Some((k, _)) if !k.trim().is_empty() => k.trim().to_string(),
        _ => line.trim().to_string(),
    }
}

fn model_config(section: &ModelSection, overrides: &Overrides) -> ModelConfig {
    let mut m = ModelConfig::default();
    if let Some(b) = section.backend {
        m.backend = b;
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = section.$field.clone() {
                m.$field = v;
            }
        )*};
    }
    take!(
        endpoint_url,
        model_name,
        temperature,
        top_p,
        max_output_tokens,
        timeout_secs,
        max_retries,
        backoff_initial_ms,
        backoff_max_ms,
        max_in_flight
    );
    if let Ok(url) = std::env::var(ENV_ENDPOINT) {
        m.endpoint_url = url;
    }
    if let Ok(name) = std::env::var(ENV_MODEL) {
        m.model_name = name;
    }
    m.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
    if let Some(policy) = &overrides.mock {
        m.backend = Backend::Mock;
        m.model_name = policy.clone();
    }
    m
}

/// Applies overrides and checks every cell. Nothing here talks to a model.
pub fn plan(file: &ExperimentFile, overrides: &Overrides) -> Result<Plan, ConfigError> {
    let model = model_config(&file.model, overrides);
    model.validate().map_err(|e| err("model", e))?;
    if file.grid.is_empty() {
        return Err(err("grid", "at least one [[grid]] table is required"));
    }
    let episodes = overrides.episodes.or(file.episodes);
    if episodes == Some(0) {
        return Err(err("episodes", "must be at least 1"));
    }
    let run_seed = overrides.seed.unwrap_or(file.run_seed);
    let parallelism = overrides.parallelism.unwrap_or(file.parallelism);
    if parallelism == 0 {
        return Err(err("parallelism", "must be at least 1"));
    }
    if file.runs == 0 {
        return Err(err("runs", "must be at least 1"));
    }

    let mut cells = Vec::new();
    for (g, grid) in file.grid.iter().enumerate() {
        for (key, empty) in [
            ("environments", grid.environments.is_empty()),
            ("granularity", grid.granularity.is_empty()),
            ("structure", grid.structure.is_empty()),
            ("grounding", grid.grounding.is_empty()),
            ("oracle_flags", grid.oracle_flags.is_empty()),
        ] {
            if empty {
                return Err(err(format!("grid[{g}].{key}"), "must not be empty"));
            }
        }
        for env in &grid.environments {
            let spec = EnvSpec::named(env).map_err(|e| err(format!("grid[{g}].environments"), e))?;
            for &granularity in &grid.granularity {
                for &structure in &grid.structure {
                    for &grounding in &grid.grounding {
                        for flags in &grid.oracle_flags {
                            let mut rep = RepresentationSpec::new(granularity, structure, grounding);
                            for &f in flags {
                                rep = rep.with_flag(f);
                            }
                            let config = RunConfig {
                                environment: env.clone(),
                                representation: rep,
                                model: model.clone(),
                                episodes: episodes.unwrap_or(spec.default_episodes),
                                run_seed,
                                runs: file.runs,
                                parallelism,
                            };
                            config.validate().map_err(|e| {
                                let key = if structure.valid_for(spec.family) {
                                    format!("grid[{g}].oracle_flags")
                                } else {
                                    format!("grid[{g}].structure")
                                };
                                err(key, format!("{env} {}: {e}", config.representation.label()))
                            })?;
                            if !cells.iter().any(|c: &RunConfig| {
                                c.environment == config.environment && c.representation == config.representation
                            }) {
                                cells.push(config);
                            }
                        }
                    }
                }
            }
        }
    }
    let baseline = match &file.baseline {
        Some(b) => {
            if !cells.iter().any(|c| &c.representation.label() == b) {
                return Err(err("baseline", format!("`{b}` is not a condition of the grid")));
            }
            b.clone()
        }
        None => cells[0].representation.label(),
    };
    Ok(Plan {
        out_dir: overrides.out.clone().unwrap_or_else(|| file.out_dir.clone()),
        baseline,
        cells,
        model,
    })
}

/// File-system friendly form of a condition label.
pub fn slug(environment: &str, condition: &str) -> String {
    let cond: String = condition
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    format!("{environment}__{cond}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
out_dir = "out"
[model]
backend = "mock"
model_name = "optimal"

[[grid]]
environments = ["hanoi"]
granularity = ["LongForm", "Summary"]
structure = ["DictList"]
oracle_flags = [[], ["OracleSummary"]]
"#;

    #[test]
    fn oracle_summary_on_long_form_names_the_key() {
        let file = parse(BASIC).unwrap();
        let e = plan(&file, &Overrides::default()).unwrap_err();
        assert_eq!(e.key, "grid[0].oracle_flags");
    }

    #[test]
    fn matrix_on_messenger_is_rejected() {
        let text = r#"
[[grid]]
environments = ["messenger"]
granularity = ["LongForm"]
structure = ["Matrix"]
"#;
        let e = plan(&parse(text).unwrap(), &Overrides::default()).unwrap_err();
        assert_eq!(e.key, "grid[0].structure");
        assert!(e.message.contains("Matrix"));
    }

    #[test]
    fn credentials_are_not_accepted_in_the_file() {
        let e = parse("[model]\napi_key = \"sk-123\"\n[[grid]]\nenvironments=[]\ngranularity=[]\nstructure=[]\n")
            .unwrap_err();
        assert_eq!(e.key, "api_key");
    }

    #[test]
    fn overrides_win() {
        let text = r#"
episodes = 5
[[grid]]
environments = ["hanoi"]
granularity = ["LongForm"]
structure = ["Matrix", "TaggedList"]
"#;
        let over = Overrides {
            episodes: Some(2),
            seed: Some(7),
            mock: Some("first".into()),
            ..Overrides::default()
        };
        let p = plan(&parse(text).unwrap(), &over).unwrap();
        assert_eq!(p.cells.len(), 2);
        assert!(p.cells.iter().all(|c| c.episodes == 2 && c.run_seed == 7));
        assert_eq!(p.model.model_name, "first");
        assert_eq!(p.baseline, "LongForm/Matrix/TextOnly");
    }

    #[test]
    fn slug_is_path_safe() {
        assert_eq!(
            slug("hanoi", "Summary/DictList/TextOnly+OracleSummary"),
            "hanoi__Summary-DictList-TextOnly-OracleSummary"
        );
    }
}
