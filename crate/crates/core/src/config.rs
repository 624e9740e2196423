//! Run configuration: TOML schema, defaults, validation, and overrides.
//!
//! Every key is optional; omitted keys take the defaults shown by
//! `simulate --emit-config`. Errors name the offending key path and, when
//! the key appears in the file, its line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::MmsOperator;
use crate::error::{ConfigError, SpecError};
use crate::grid::{build_grid, Grid, InitialConditionSpec};
use crate::kinetics::ModelParams;
use crate::timestepper::StepControl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    #[default]
    Single,
    Figure1Pair,
    EpsContinuation,
    Positivity1d,
    Mms,
}

impl RunMode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "single" => RunMode::Single,
            "figure1-pair" => RunMode::Figure1Pair,
            "eps-continuation" => RunMode::EpsContinuation,
            "positivity-1d" => RunMode::Positivity1d,
            "mms" => RunMode::Mms,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub dim: usize,
    pub extent: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dim: 2,
            extent: vec![10.0, 10.0],
            nodes: vec![65, 65],
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, crate::error::GridError> {
        build_grid(self.dim, &self.extent, &self.nodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: RunMode,
    pub t_end: f64,
    /// Snapshot/diagnostics times; when absent, `0, t_end/4, t_end/2, t_end`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: RunMode::Single,
            t_end: 10.0,
            sample_times: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure1Section {
    /// Taxis coefficients of the two branches.
    pub k_values: [f64; 2],
}

impl Default for Figure1Section {
    fn default() -> Self {
        Figure1Section { k_values: [15.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSection {
    pub eps_list: Vec<f64>,
    /// Number of uniform time intervals used for the trajectory distance.
    pub intervals: usize,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        ContinuationSection {
            eps_list: vec![0.5, 0.25, 0.125, 0.0625, 0.0],
            intervals: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositivitySection {
    pub nodes: usize,
    pub s_floor: f64,
}

impl Default for PositivitySection {
    fn default() -> Self {
        PositivitySection {
            nodes: 257,
            s_floor: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsSection {
    pub operators: Vec<MmsOperator>,
    pub dim: usize,
    pub nodes: Vec<usize>,
}

impl Default for MmsSection {
    fn default() -> Self {
        MmsSection {
            operators: MmsOperator::ALL.to_vec(),
            dim: 2,
            nodes: vec![33, 65, 129],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub hats_per_axis: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            hats_per_axis: crate::diagnostics::DEFAULT_HATS_PER_AXIS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub initial: InitialConditionSpec,
    pub params: ModelParams,
    pub control: StepControl,
    pub run: RunSection,
    pub figure1: Figure1Section,
    pub continuation: ContinuationSection,
    pub positivity: PositivitySection,
    pub mms: MmsSection,
    pub diagnostics: DiagnosticsSection,
}

impl RunConfig {
    /// Effective sample times (explicit list or the quartile default).
    pub fn sample_times(&self) -> Vec<f64> {
        match &self.run.sample_times {
            Some(t) => t.clone(),
            None => default_sample_times(self.run.t_end),
        }
    }

    /// Check every invariant; the error carries the offending key path.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let bad = |key: &str, msg: String| Err((key.to_string(), msg));
        let grid = match self.grid.build() {
            Ok(g) => g,
            Err(e) => return bad("grid", e.to_string()),
        };
        if let Err(e) = self.initial.validate(grid.dim()) {
            let key = match &e {
                SpecError::Amplitude { index, .. } => format!("initial.bumps[{index}].amplitude"),
                SpecError::CenterDim { index, .. } => format!("initial.bumps[{index}].center"),
                SpecError::Sigma(_) => "initial.sigma".into(),
                SpecError::Floor(_) => "initial.s_floor".into(),
                _ => "initial".into(),
            };
            return bad(&key, e.to_string());
        }
        if let Err(e) = self.params.validate() {
            let key = match &e {
                SpecError::Param { name, .. } => format!("params.{name}"),
                SpecError::Eps(_) => "params.eps_reg".into(),
                _ => "params".into(),
            };
            return bad(&key, e.to_string());
        }
        if let Err(e) = self.control.validate() {
            let key = match e {
                SpecError::Safety(_) => "control.safety",
                _ => "control.dt_max",
            };
            return bad(key, e.to_string());
        }
        let t_end = self.run.t_end;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return bad("run.t_end", format!("must be finite and >= 0, got {t_end}"));
        }
        if let Some(times) = &self.run.sample_times {
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return bad("run.sample_times", "must be strictly increasing".into());
            }
            if let Some(t) = times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
                return bad("run.sample_times", format!("{t} lies outside [0, {t_end}]"));
            }
        }
        if let Some(k) = self.figure1.k_values.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return bad("figure1.k_values", format!("must be nonnegative, got {k}"));
        }
        let eps = &self.continuation.eps_list;
        if eps.is_empty() || eps.windows(2).any(|w| w[0] <= w[1]) {
            return bad("continuation.eps_list", "must be nonempty and strictly decreasing".into());
        }
        if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return bad("continuation.eps_list", format!("{e} lies outside [0, 1]"));
        }
        if self.continuation.intervals == 0 {
            return bad("continuation.intervals", "must be positive".into());
        }
        if self.positivity.nodes < 3 {
            return bad("positivity.nodes", format!("need at least 3 nodes, got {}", self.positivity.nodes));
        }
        if !(0.0..1.0).contains(&self.positivity.s_floor) {
            return bad("positivity.s_floor", format!("must lie in [0, 1), got {}", self.positivity.s_floor));
        }
        if let Err(e) = self.mms_grids() {
            return bad("mms.nodes", e.to_string());
        }
        if self.mms.nodes.len() < 3 {
            return bad("mms.nodes", "need at least 3 grids".into());
        }
        if self.diagnostics.hats_per_axis < 2 {
            return bad("diagnostics.hats_per_axis", "need at least 2".into());
        }
        Ok(())
    }

    /// Square (or interval) grids of the MMS study over the main grid's extents.
    pub fn mms_grids(&self) -> Result<Vec<Grid>, crate::error::GridError> {
        let dim = self.mms.dim;
        let extents: Vec<f64> = (0..dim).map(|a| self.grid.extent.get(a).copied().unwrap_or(10.0)).collect();
        self.mms
            .nodes
            .iter()
            .map(|&n| build_grid(dim, &extents, &vec![n; dim]))
            .collect()
    }

    /// Serialize the effective configuration back to TOML.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

pub fn default_sample_times(t_end: f64) -> Vec<f64> {
    let mut times: Vec<f64> = vec![0.0, 0.25 * t_end, 0.5 * t_end, t_end];
    times.dedup();
    times
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_overrides(text, &[])
}

/// Parse `text`, apply `key=value` overrides (dotted key paths, TOML values;
/// bare words are taken as strings), then deserialize and validate.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        message: e.message().to_string(),
        line: e.span().map(|s| line_of_offset(text, s.start)),
    })?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(table).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Invalid {
            line: find_key_line(text, &key),
            message: e.inner().message().to_string(),
            key,
        }
    })?;
    config.validate().map_err(|(key, message)| ConfigError::Invalid {
        line: find_key_line(text, &key),
        key,
        message,
    })?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_with_overrides(&text, overrides)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("nonempty key");
    let mut node = table;
    for part in parts {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(ConfigError::Invalid {
                    key: key.to_string(),
                    message: format!("`{part}` is not a table"),
                    line: None,
                })
            }
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort line lookup for a key path such as `initial.bumps[1].amplitude`.
fn find_key_line(text: &str, path: &str) -> Option<usize> {
    let mut header = String::new();
    let mut array_counts: std::collections::HashMap<String, usize> = Default::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            let name = name.trim().to_string();
            let idx = array_counts.entry(name.clone()).or_insert(0);
            header = format!("{name}[{idx}]");
            *idx += 1;
            if path == header || path == name {
                return Some(n + 1);
            }
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            header = name.trim().to_string();
            if path == header {
                return Some(n + 1);
            }
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            let full = if header.is_empty() {
                k.to_string()
            } else {
                format!("{header}.{k}")
            };
            if full == path || path.starts_with(&format!("{full}[")) {
                return Some(n + 1);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c = parse_config("").unwrap();
        let p = c.params;
        assert_eq!((p.lambda_s, p.lambda_i, p.mu_i, p.mu_s), (0.5, 0.5, 0.05, 0.01));
        assert_eq!(p.k, 15.0);
        let amps: Vec<f64> = c.initial.bumps.iter().map(|b| b.amplitude).collect();
        assert_eq!(amps, vec![0.1, 0.2, 0.3]);
        assert_eq!(c.initial.sigma, 0.25);
        assert_eq!(c.grid.nodes, vec![65, 65]);
        assert_eq!(c.run.t_end, 10.0);
        assert_eq!(c.control.safety, 0.5);
        assert_eq!(c.sample_times(), vec![0.0, 2.5, 5.0, 10.0]);
    }

    #[test]
    fn k_zero_config() {
        let c = parse_config("[params]\nk = 0.0\n").unwrap();
        assert_eq!(c.params.k, 0.0);
        assert_eq!(c.params.lambda_s, 0.5);
    }

    #[test]
    fn negative_rate_names_key_and_line() {
        let err = parse_config("[grid]\ndim = 2\n\n[params]\nlambda_s = -1.0\n").unwrap_err();
        match err {
            ConfigError::Invalid { key, line, .. } => {
                assert_eq!(key, "params.lambda_s");
                assert_eq!(line, Some(5));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[params]\nkappa = 3.0\n").unwrap_err();
        match err {
            ConfigError::Invalid { key, line, message } => {
                assert!(key.starts_with("params"), "{key}");
                assert!(message.contains("kappa"), "{message}");
                assert_eq!(line, Some(2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn type_mismatch_rejected() {
        let err = parse_config("[run]\nt_end = \"soon\"\n").unwrap_err();
        match err {
            ConfigError::Invalid { key, line, .. } => {
                assert_eq!(key, "run.t_end");
                assert_eq!(line, Some(2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("[grid]\ndim = = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn bump_errors_point_into_array() {
        let text = "[[initial.bumps]]\namplitude = 0.1\ncenter = [1.0, 1.0]\n\n[[initial.bumps]]\namplitude = -0.2\ncenter = [2.0, 2.0]\n";
        match parse_config(text).unwrap_err() {
            ConfigError::Invalid { key, line, .. } => {
                assert_eq!(key, "initial.bumps[1].amplitude");
                assert_eq!(line, Some(6));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let c = parse_config_with_overrides(
            "[params]\nk = 3.0\n",
            &["params.k=0".into(), "run.mode=mms".into(), "grid.nodes=[33, 33]".into()],
        )
        .unwrap();
        assert_eq!(c.params.k, 0.0);
        assert_eq!(c.run.mode, RunMode::Mms);
        assert_eq!(c.grid.nodes, vec![33, 33]);
        assert!(matches!(
            parse_config_with_overrides("", &["nonsense".into()]),
            Err(ConfigError::Override(_))
        ));
    }

    #[test]
    fn emitted_defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(parse_config(&c.emit()).unwrap(), c);
    }

    #[test]
    fn sample_times_validated() {
        assert!(parse_config("[run]\nt_end = 1.0\nsample_times = [0.0, 2.0]\n").is_err());
        assert!(parse_config("[run]\nsample_times = [1.0, 0.5]\n").is_err());
        let c = parse_config("[run]\nt_end = 0.0\n").unwrap();
        assert_eq!(c.sample_times(), vec![0.0]);
    }

    proptest! {
        #[test]
        fn round_trip(k in 0.0..40.0f64, lam in 0.0..2.0f64, eps in 0.0..=1.0f64,
                      n in 3usize..200, t_end in 0.0..50.0f64, clamp: bool,
                      safety in 0.01..=1.0f64, sigma in 0.01..3.0f64) {
            let mut c = RunConfig::default();
            c.params.k = k;
            c.params.lambda_i = lam;
            c.params.eps_reg = eps;
            c.grid.nodes = vec![n, n + 1];
            c.run.t_end = t_end;
            c.control.clamp = clamp;
            c.control.safety = safety;
            c.initial.sigma = sigma;
            c.run.sample_times = Some(vec![0.0, t_end]);
            if t_end == 0.0 { c.run.sample_times = Some(vec![0.0]); }
            let back = parse_config(&c.emit()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
