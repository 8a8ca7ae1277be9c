//! Assembles a validated run configuration from a scenario source, flag
//! overrides and a rule-base file.

use std::fs;
use std::path::{Path, PathBuf};

use v2x_fuzzy_core::fuzzy::FisDefinition;
use v2x_fuzzy_core::world::Mode;

use crate::fis_file::parse_fis;
use crate::issues::{ConfigErrors, ConfigIssue};
use crate::scenario_file::{parse_scenario, scenario_to_toml, LoadedScenario};

pub const DEFAULT_OUT: &str = "results";

/// Raw, unvalidated command-line choices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Preset name or path to a scenario file.
    pub scenario: Option<String>,
    pub mode: Option<Mode>,
    pub acceptance: Option<String>,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub fis: Option<PathBuf>,
    /// `key=value` pairs in scenario-file syntax.
    pub set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset name or scenario path the run started from.
    pub source: String,
    pub out: PathBuf,
    pub trace: bool,
    /// `None` means the built-in rule base.
    pub fis_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub scenario: LoadedScenario,
    pub fis: FisDefinition,
}

fn issue(key: &str, location: &str, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { key: key.into(), location: location.into(), message: message.into() }
}

/// Loads the rule base named by `--fis`, or the built-in one.
pub fn load_fis(path: Option<&Path>) -> Result<FisDefinition, ConfigErrors> {
    let Some(path) = path else {
        return Ok(FisDefinition::f802_11p());
    };
    let shown = path.display().to_string();
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigErrors::single("fis", "--fis", format!("cannot read {shown}: {e}")))?;
    parse_fis(&text, &shown)
}

/// Finds the output term an acceptance label names, ignoring case.
pub fn acceptance_label(fis: &FisDefinition, wanted: &str) -> Option<String> {
    fis.output.terms.iter().find(|t| t.label.eq_ignore_ascii_case(wanted)).map(|t| t.label.clone())
}

fn load_source(source: &str) -> Result<LoadedScenario, ConfigErrors> {
    if let Some(l) = LoadedScenario::from_preset(source) {
        return Ok(l);
    }
    let text = fs::read_to_string(source).map_err(|e| {
        ConfigErrors::single(
            "scenario",
            "--scenario",
            format!("`{source}` is neither a preset (scenario1, scenario2) nor a readable file: {e}"),
        )
    })?;
    parse_scenario(&text, source)
}

/// Applies `key=value` overrides by rewriting the effective document.
fn apply_sets(loaded: &mut LoadedScenario, sets: &[String]) -> Result<(), ConfigErrors> {
    if sets.is_empty() {
        return Ok(());
    }
    let mut doc: toml::Table = scenario_to_toml(&loaded.scenario).parse().expect("writer emits valid TOML");
    let mut keys = Vec::new();
    for s in sets {
        let Some((key, value)) = s.split_once('=') else {
            return Err(ConfigErrors::single("set", "--set", format!("`{s}` is not key=value")));
        };
        let key = key.trim();
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let mut table = &mut doc;
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().unwrap_or_default();
        for p in parts {
            match table.get_mut(p).and_then(toml::Value::as_table_mut) {
                Some(t) => table = t,
                None => return Err(ConfigErrors::single(key, "--set", format!("unknown key `{key}`"))),
            }
        }
        if !table.contains_key(leaf) {
            return Err(ConfigErrors::single(key, "--set", format!("unknown key `{key}`")));
        }
        table.insert(leaf.to_string(), parsed);
        keys.push(key.to_string());
    }
    let text = toml::to_string(&doc).expect("table serializes");
    let reparsed = parse_scenario(&text, "--set").map_err(|e| {
        ConfigErrors(e.0.into_iter().map(|i| issue(&i.key, &format!("--set {}", i.key), i.message)).collect())
    })?;
    loaded.scenario = reparsed.scenario;
    for k in keys {
        loaded.set_origin(&k, &format!("--set {k}"));
    }
    Ok(())
}

/// Builds and validates everything a run needs. Every issue names a key
/// and where its value came from.
pub fn parse_config(o: &Overrides, out: PathBuf, trace: bool) -> Result<Resolved, ConfigErrors> {
    let source = o.scenario.clone().unwrap_or_else(|| "scenario1".to_string());
    let mut loaded = load_source(&source)?;
    apply_sets(&mut loaded, &o.set)?;
    let s = &mut loaded.scenario;
    if let Some(m) = o.mode {
        s.mode = m;
        loaded.origins.insert("mode".into(), "--mode".into());
    }
    if let Some(seed) = o.seed {
        s.seed = seed;
        loaded.origins.insert("seed".into(), "--seed".into());
    }
    if let Some(d) = o.duration {
        s.duration = d;
        loaded.origins.insert("duration".into(), "--duration".into());
    }
    if let Some(a) = &o.acceptance {
        s.acceptance = a.clone();
        loaded.origins.insert("acceptance".into(), "--acceptance".into());
    }

    let mut issues = loaded.validate().err().map(|e| e.0).unwrap_or_default();
    let fis = match load_fis(o.fis.as_deref()) {
        Ok(f) => Some(f),
        Err(e) => {
            issues.extend(e.0);
            None
        }
    };
    if let Some(fis) = &fis {
        match acceptance_label(fis, &loaded.scenario.acceptance) {
            Some(label) => loaded.scenario.acceptance = label,
            None => {
                let labels: Vec<&str> = fis.output.terms.iter().map(|t| t.label.as_str()).collect();
                issues.push(issue(
                    "acceptance",
                    &loaded.location_of("acceptance"),
                    format!("`{}` is not one of {}", loaded.scenario.acceptance, labels.join(", ")),
                ));
            }
        }
    }
    match fis {
        Some(fis) if issues.is_empty() => {
            Ok(Resolved { config: RunConfig { source, out, trace, fis_path: o.fis.clone() }, scenario: loaded, fis })
        }
        _ => Err(ConfigErrors(issues)),
    }
}
