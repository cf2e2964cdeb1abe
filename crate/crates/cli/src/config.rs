//! Run configuration: a strict TOML schema plus environment overrides.
//!
//! Every key may be overridden by `SINGLAB_<SECTION>_<KEY>`, e.g.
//! `SINGLAB_MESH_H=0.025` or `SINGLAB_DOMAIN_R2=0.5`. Top-level keys use
//! `SINGLAB_<KEY>` (`SINGLAB_PROBES="[[1,0],[0,1]]"`). Override values are
//! TOML literals.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use singlab_core::analysis::default_fit_radii;
use singlab_core::AnnulusDomain;

pub const ENV_PREFIX: &str = "SINGLAB_";

const SECTIONS: [&str; 5] = ["domain", "mesh", "solver", "analysis", "output"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("environment override {var}: {message}")]
    Env { var: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub r1: f64,
    pub r2: f64,
    pub lambda0: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            r1: 1.0,
            r2: 1.0,
            lambda0: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Nominal size of the coarsest level.
    pub h: f64,
    pub grading_exponent: f64,
    /// Levels beyond the coarsest one; the finest has size `h/2^refinements`.
    pub refinements: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            h: 0.05,
            grading_exponent: 3.0,
            refinements: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: singlab_core::solver::DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Arc radii of the corner fits; six radii from `0.05m` to `0.5m` when
    /// empty, `m = min{r₁, r₂}`.
    pub fit_radii: Vec<f64>,
    /// Highest angular mode `K` of the fits.
    pub mode_cap: usize,
    /// Level `k` traced by `levelset`.
    pub level: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            fit_radii: Vec::new(),
            mode_cap: 8,
            level: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("singlab-out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    /// Neumann amplitudes `(a, b)`.
    pub probes: Vec<[f64; 2]>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig::default(),
            mesh: MeshConfig::default(),
            solver: SolverConfig::default(),
            analysis: AnalysisConfig::default(),
            probes: vec![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]],
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text, applies overrides from `env` and validates.
    pub fn from_toml_with_env<I>(text: &str, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (var, raw) in vars {
            apply_override(&mut table, &var, &raw)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key, message: &str| {
            Err(ConfigError::Invalid {
                key,
                message: message.to_string(),
            })
        };
        if let Err(e) = self.domain() {
            return invalid("domain", &e.to_string());
        }
        if !(self.mesh.h.is_finite() && self.mesh.h > 0.0) {
            return invalid("mesh.h", "must be positive");
        }
        if !(self.mesh.grading_exponent.is_finite() && self.mesh.grading_exponent >= 1.0) {
            return invalid("mesh.grading_exponent", "must be at least 1");
        }
        if self.mesh.refinements > 4 {
            return invalid("mesh.refinements", "at most 4");
        }
        if !(self.solver.rel_tol > 0.0 && self.solver.rel_tol < 1.0) {
            return invalid("solver.rel_tol", "must lie in (0, 1)");
        }
        if self.analysis.mode_cap < 3 || self.analysis.mode_cap > singlab_core::analysis::MAX_MODES {
            return invalid("analysis.mode_cap", "must lie in 3..=16");
        }
        if self.analysis.fit_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return invalid("analysis.fit_radii", "radii must be positive");
        }
        if !self.analysis.level.is_finite() {
            return invalid("analysis.level", "must be finite");
        }
        if self.probes.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("probes", "amplitudes must be finite");
        }
        Ok(())
    }

    pub fn domain(&self) -> singlab_core::Result<AnnulusDomain> {
        AnnulusDomain::new(self.domain.r1, self.domain.r2, self.domain.lambda0)
    }

    pub fn fit_radii(&self) -> Vec<f64> {
        if self.analysis.fit_radii.is_empty() {
            default_fit_radii(self.domain.r1.min(self.domain.r2))
        } else {
            self.analysis.fit_radii.clone()
        }
    }
}

fn apply_override(table: &mut toml::Table, var: &str, raw: &str) -> Result<(), ConfigError> {
    let env_err = |message: String| ConfigError::Env {
        var: var.to_string(),
        message,
    };
    let name = var[ENV_PREFIX.len()..].to_ascii_lowercase();
    let (section, key) = match name.split_once('_') {
        Some((s, k)) if SECTIONS.contains(&s) => (Some(s.to_string()), k.to_string()),
        _ => (None, name.clone()),
    };
    let value: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    match section {
        Some(s) => {
            let entry = table
                .entry(s)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let t = entry
                .as_table_mut()
                .ok_or_else(|| env_err("section is not a table".to_string()))?;
            t.insert(key, value);
        }
        None => {
            table.insert(key, value);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, env: &[(&str, &str)]) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml_with_env(text, env.iter().map(|(a, b)| (a.to_string(), b.to_string())))
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse("[mesh]\nhh = 0.1\n", &[]).unwrap_err().to_string();
        assert!(e.contains("hh"), "{e}");
    }

    #[test]
    fn env_overrides_file() {
        let c = parse(
            "[mesh]\nh = 0.1\n",
            &[("SINGLAB_MESH_H", "0.2"), ("SINGLAB_MESH_GRADING_EXPONENT", "2"), ("SINGLAB_PROBES", "[[1.0, 2.0]]")],
        )
        .unwrap();
        assert_eq!(c.mesh.h, 0.2);
        assert_eq!(c.mesh.grading_exponent, 2.0);
        assert_eq!(c.probes, vec![[1.0, 2.0]]);
    }

    #[test]
    fn unknown_env_key_is_rejected() {
        assert!(parse("", &[("SINGLAB_MESH_SIZE", "0.2")]).is_err());
    }

    #[test]
    fn invalid_domain_is_rejected() {
        assert!(matches!(
            parse("[domain]\nlambda0 = 0.5\n", &[]),
            Err(ConfigError::Invalid { key: "domain", .. })
        ));
    }
}
