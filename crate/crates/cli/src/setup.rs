//! Loading configs, applying `--set` overrides, reading manifests and seed
//! lists.

use crate::error::{CliError, CliResult};
use evtol_offload::sim::experiment::{ExperimentConfig, PlannerKind};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => CliError::NotFound(path.to_path_buf()),
        _ => CliError::Read { path: path.to_path_buf(), source },
    })
}

/// `key=value` overrides keyed by dotted path. Repeating a key with another
/// value is a conflict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides(BTreeMap<String, String>);

impl Overrides {
    pub fn parse<'a>(items: impl IntoIterator<Item = &'a str>) -> CliResult<Self> {
        let mut out = Self::default();
        for item in items {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Argument(format!("override '{item}' is not key=value")))?;
            out.insert(key.trim(), value.trim())?;
        }
        Ok(out)
    }

    fn insert(&mut self, key: &str, value: &str) -> CliResult<()> {
        match self.0.get(key) {
            Some(old) if old != value => {
                Err(CliError::Conflict { key: key.to_string(), first: old.clone(), second: value.to_string() })
            }
            _ => {
                self.0.insert(key.to_string(), value.to_string());
                Ok(())
            }
        }
    }

    pub fn merge(mut self, other: &Overrides) -> CliResult<Self> {
        for (k, v) in &other.0 {
            self.insert(k, v)?;
        }
        Ok(self)
    }

    fn apply(&self, root: &mut toml::Table) -> CliResult<()> {
        for (key, raw) in &self.0 {
            let value = parse_value(raw);
            let mut parts: Vec<&str> = key.split('.').collect();
            let leaf = parts
                .pop()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| CliError::Argument(format!("empty override key '{key}'")))?;
            let mut table = &mut *root;
            for part in parts {
                let slot = table.entry(part).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                table = slot
                    .as_table_mut()
                    .ok_or_else(|| CliError::Config(format!("override '{key}': '{part}' is not a table")))?;
            }
            table.insert(leaf.to_string(), value);
        }
        Ok(())
    }
}

/// TOML literal when it parses as one, a bare string otherwise.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// The experiment config from an optional TOML file plus overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut table = match path {
        Some(p) => toml::from_str::<toml::Table>(&read_text(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => toml::Table::new(),
    };
    overrides.apply(&mut table)?;
    let cfg: ExperimentConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Seeds as `a..b` (inclusive), a comma list, or a mix: `0..4,9`.
pub fn parse_seeds(list: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Argument(format!("bad seed list '{list}'"));
    let mut seeds = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if b < a {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Argument("seed list is empty".into()));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Argument(format!("seed list '{list}' repeats a seed")));
    }
    Ok(seeds)
}

pub fn parse_planner(name: &str) -> CliResult<PlannerKind> {
    name.parse().map_err(|_| CliError::Argument(format!("unknown planner '{name}' (mcts, tsp, eps-greedy, uct, ucb)")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    name: Option<String>,
    config: Option<PathBuf>,
    planner: String,
    seeds: String,
    out: Option<PathBuf>,
    #[serde(default)]
    set: Vec<String>,
}

/// One planner over one scenario and seed batch.
#[derive(Debug, Clone)]
pub struct RunManifest {
    /// Scenario label used in tables.
    pub name: String,
    pub config_path: Option<PathBuf>,
    pub planner: PlannerKind,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
}

impl RunManifest {
    /// Reads a manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let file: ManifestFile = toml::from_str(&read_text(path)?)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let config_path = file.config.map(|c| dir.join(c));
        if let Some(c) = &config_path {
            if !c.exists() {
                return Err(CliError::NotFound(c.clone()));
            }
        }
        Ok(Self {
            name: file.name.unwrap_or_else(|| label(config_path.as_deref())),
            planner: parse_planner(&file.planner)?,
            seeds: parse_seeds(&file.seeds)?,
            out: file.out.map(|o| dir.join(o)),
            overrides: Overrides::parse(file.set.iter().map(String::as_str))?,
            config_path,
        })
    }

    pub fn config(&self) -> CliResult<ExperimentConfig> {
        load_config(self.config_path.as_deref(), &self.overrides)
    }
}

/// Scenario label: the config file stem, or `default`.
pub fn label(config: Option<&Path>) -> String {
    config.and_then(|p| p.file_stem()).map_or_else(|| "default".to_string(), |s| s.to_string_lossy().into_owned())
}
