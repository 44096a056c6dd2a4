//! Run configuration: TOML in, validated parameters out.
//!
//! Every knob has a documented default, so the empty file is a valid config.
//! Unknown keys are hard errors (typos must not silently revert a knob to its
//! default), and `--override KEY=VALUE` patches use the same dotted paths as
//! the file itself, applied before deserialization so they face the same
//! validation.

use crate::bundle::{BundleError, CocycleSpec, ModelBundle};
use crate::flow::FlowParams;
use crate::geometry::{TorusGeometry, DEFAULT_STENCIL_ORDER};
use crate::linalg::MAX_RANK;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form KEY=VALUE")]
    BadOverride(String),
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub tau_re: f64,
    pub tau_im: f64,
    pub n_grid: usize,
    pub stencil_order: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            tau_re: 0.0,
            tau_im: 1.0,
            n_grid: 64,
            stencil_order: DEFAULT_STENCIL_ORDER,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BundleSection {
    /// Block degrees, non-increasing; one entry per line-bundle summand.
    pub degrees: Vec<i32>,
    /// "none" for the split direct sum, "theta" for the theta-section cocycle.
    pub cocycle: String,
    pub amplitude: f64,
}

impl Default for BundleSection {
    fn default() -> Self {
        BundleSection {
            degrees: vec![1, 0],
            cocycle: "none".into(),
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub dt: f64,
    pub t_end: f64,
    /// Convergence threshold on Y = ‖ΛF − Ψ‖²_{L²(h)}.
    pub epsilon: f64,
    pub sample_every: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        let p = FlowParams::default();
        FlowSection {
            dt: p.dt,
            t_end: p.t_end,
            epsilon: p.epsilon,
            sample_every: p.sample_every,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// Seed for the band-limited random perturbation of the start metric.
    pub seed: u64,
    /// Sup-norm of the perturbation exponent; 0 starts at the background.
    pub magnitude: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            seed: 0,
            magnitude: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Non-empty list turns `sweep` into one run per amplitude.
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out_dir: String,
    pub geometry: GeometrySection,
    pub bundle: BundleSection,
    pub flow: FlowSection,
    pub initial: InitialSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: "out".into(),
            geometry: Default::default(),
            bundle: Default::default(),
            flow: Default::default(),
            initial: Default::default(),
            sweep: Default::default(),
        }
    }
}

fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    // Interpret the value as TOML when possible (numbers, booleans, arrays),
    // falling back to a bare string so `cocycle=theta` needs no quoting.
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| {
                ConfigError::Invalid(format!("override path `{key}` crosses a non-table value"))
            })?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parse from TOML text, apply `KEY=VALUE` overrides, validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(ConfigError::Parse)?;
        for spec in overrides {
            apply_override(&mut table, spec)?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let g = &self.geometry;
        if !g.tau_re.is_finite() || !g.tau_im.is_finite() || g.tau_im <= 0.0 {
            return bad(format!(
                "geometry.tau_im must be positive and finite, got tau = {} + {}i",
                g.tau_re, g.tau_im
            ));
        }
        if g.n_grid < 16 || !g.n_grid.is_multiple_of(2) {
            return bad(format!(
                "geometry.n_grid must be an even number >= 16, got {}",
                g.n_grid
            ));
        }
        if !matches!(g.stencil_order, 4 | 6 | 8) {
            return bad(format!(
                "geometry.stencil_order must be 4, 6 or 8, got {}",
                g.stencil_order
            ));
        }
        let b = &self.bundle;
        if b.degrees.is_empty() || b.degrees.len() > MAX_RANK {
            return bad(format!(
                "bundle.degrees must list between 1 and {MAX_RANK} summands, got {}",
                b.degrees.len()
            ));
        }
        if b.degrees.windows(2).any(|w| w[0] < w[1]) {
            return bad(format!(
                "bundle.degrees must be block-sorted non-increasing, got {:?}",
                b.degrees
            ));
        }
        match b.cocycle.as_str() {
            "none" | "theta" => {}
            other => {
                return bad(format!(
                    "bundle.cocycle must be \"none\" or \"theta\", got \"{other}\""
                ))
            }
        }
        if !b.amplitude.is_finite() {
            return bad(format!("bundle.amplitude must be finite, got {}", b.amplitude));
        }
        let f = &self.flow;
        if !(f.dt.is_finite() && f.dt > 0.0) {
            return bad(format!("flow.dt must be positive, got {}", f.dt));
        }
        if !(f.t_end.is_finite() && f.t_end > 0.0) {
            return bad(format!("flow.t_end must be positive, got {}", f.t_end));
        }
        if !(f.epsilon.is_finite() && f.epsilon > 0.0) {
            return bad(format!("flow.epsilon must be positive, got {}", f.epsilon));
        }
        if f.sample_every == 0 {
            return bad("flow.sample_every must be at least 1".into());
        }
        let i = &self.initial;
        if !(i.magnitude.is_finite() && i.magnitude >= 0.0) {
            return bad(format!(
                "initial.magnitude must be non-negative, got {}",
                i.magnitude
            ));
        }
        if self.sweep.amplitudes.iter().any(|a| !a.is_finite()) {
            return bad("sweep.amplitudes must all be finite".into());
        }
        if self.out_dir.is_empty() {
            return bad("out_dir must be non-empty".into());
        }
        Ok(())
    }

    pub fn tau(&self) -> C {
        C::new(self.geometry.tau_re, self.geometry.tau_im)
    }

    pub fn cocycle_spec(&self) -> CocycleSpec {
        match self.bundle.cocycle.as_str() {
            "theta" => CocycleSpec::Theta {
                amplitude: self.bundle.amplitude,
            },
            _ => CocycleSpec::None,
        }
    }

    pub fn build_bundle(&self) -> Result<ModelBundle, BundleError> {
        let geo = TorusGeometry::with_stencil_order(
            self.tau(),
            self.geometry.n_grid,
            self.geometry.stencil_order,
        )?;
        ModelBundle::new(geo, &self.bundle.degrees, self.cocycle_spec())
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            dt: self.flow.dt,
            t_end: self.flow.t_end,
            epsilon: self.flow.epsilon,
            sample_every: self.flow.sample_every,
        }
    }

    pub fn is_sweep(&self) -> bool {
        !self.sweep.amplitudes.is_empty()
    }

    /// The single-run config for one sweep member.
    pub fn sweep_member(&self, amplitude: f64) -> RunConfig {
        let mut cfg = self.clone();
        cfg.bundle.amplitude = amplitude;
        cfg.sweep.amplitudes.clear();
        cfg
    }
}
