//! TOML experiment configuration.
//!
//! All times and rates are in units of the mechanical frequency `ω_m`; `horizon`
//! and `dt` are dimensionless `τ = ω_m t`. Unknown keys are rejected and every
//! error carries the line it was found on.
//!
//! ```toml
//! [system]
//! preset = "bakemeier_chaos"
//! g0 = 0.1
//!
//! [engine]
//! kind = "qsd"
//! truncation = [24, 24]
//!
//! [run]
//! ensemble_size = 50
//! horizon = 500.0
//! seed = 7
//! sweep = [0.07, 0.085, 0.1]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::DEFAULT_DT;
use crate::engines::{Basis, EngineConfig, Scheme, DEFAULT_TRUNCATION_ALARM};
use crate::error::{Error, Result};
use crate::fock_ops::HilbertConfig;
use crate::model::{build_params, ParamSpec, SystemParams, PRESET_NAME};
use crate::moving_basis::{DEFAULT_FRAME_TRUNCATION, DEFAULT_RECENTER_TRIGGER};
use crate::stats::DetectorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub engine: EngineSection,
    pub run: RunSection,
    #[serde(default)]
    pub initial: InitialSection,
    /// Overrides the thresholds calibrated from the classical attractors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruct: Option<ReconstructSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Classical,
    Langevin,
    Qsd,
    Jump,
    Master,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Classical => "classical",
            EngineKind::Langevin => "langevin",
            EngineKind::Qsd => "qsd",
            EngineKind::Jump => "jump",
            EngineKind::Master => "master",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QsdScheme {
    Ito,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Fixed,
    Moving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EngineKind>,
    #[serde(default = "default_scheme")]
    pub scheme: QsdScheme,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Levels per mode `[N_a, N_b]`.
    #[serde(default = "default_truncation")]
    pub truncation: [usize; 2],
    #[serde(default = "default_basis")]
    pub basis: BasisKind,
    #[serde(default = "default_trigger")]
    pub recenter_trigger: f64,
    #[serde(default = "yes")]
    pub comoving: bool,
    #[serde(default = "default_alarm")]
    pub truncation_alarm: f64,
    #[serde(default = "one")]
    pub renormalize_every: usize,
    /// `false` switches off every noise source (QSD drift only, deterministic Langevin).
    #[serde(default = "yes")]
    pub noise: bool,
    #[serde(default = "yes")]
    pub mechanical_noise: bool,
    #[serde(default = "yes")]
    pub optical_noise: bool,
}

fn default_scheme() -> QsdScheme {
    QsdScheme::Ito
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_truncation() -> [usize; 2] {
    [DEFAULT_FRAME_TRUNCATION, DEFAULT_FRAME_TRUNCATION]
}
fn default_basis() -> BasisKind {
    BasisKind::Moving
}
fn default_trigger() -> f64 {
    DEFAULT_RECENTER_TRIGGER
}
fn default_alarm() -> f64 {
    DEFAULT_TRUNCATION_ALARM
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            kind: None,
            scheme: default_scheme(),
            dt: default_dt(),
            truncation: default_truncation(),
            basis: default_basis(),
            recenter_trigger: default_trigger(),
            comoving: true,
            truncation_alarm: default_alarm(),
            renormalize_every: 1,
            noise: true,
            mechanical_noise: true,
            optical_noise: true,
        }
    }
}

impl EngineSection {
    pub fn hilbert(&self) -> Result<HilbertConfig> {
        HilbertConfig::new(self.truncation[0], self.truncation[1])
    }

    pub fn engine_config(&self, kind: EngineKind) -> EngineConfig {
        let scheme = match (kind, self.scheme) {
            (EngineKind::Jump, _) => Scheme::Jump,
            (_, QsdScheme::Ito) => Scheme::Ito,
            (_, QsdScheme::Stratonovich) => Scheme::StratonovichHeun,
        };
        EngineConfig {
            scheme,
            dt: self.dt,
            renormalize_every: self.renormalize_every,
            truncation_alarm: self.truncation_alarm,
            noise: self.noise,
        }
    }

    pub fn basis(&self) -> Basis {
        match self.basis {
            BasisKind::Fixed => Basis::Fixed,
            BasisKind::Moving => Basis::Moving {
                trigger: self.recenter_trigger,
                comoving: self.comoving,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "one")]
    pub ensemble_size: usize,
    /// End time in τ.
    pub horizon: f64,
    pub seed: u64,
    /// Keep every k-th step in written records.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Write one CSV per trajectory.
    #[serde(default)]
    pub write_records: bool,
    /// Stop a trajectory once its first escape is confirmed.
    #[serde(default = "yes")]
    pub early_stop: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// g0 values; `alpha_l` is re-solved at fixed `p_tilde` for each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
}

fn default_sample_every() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// The chaotic attractor point reached from the origin.
    ChaoticLaunch,
    Origin,
    /// The launch point of the coexisting periodic attractor.
    Periodic,
    /// Explicit `(q, p, α)`.
    Point,
    /// Fock product state `|fock[0]⟩ ⊗ |fock[1]⟩` in a fixed basis.
    Fock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "default_initial")]
    pub kind: InitialKind,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
    #[serde(default)]
    pub fock: [usize; 2],
}

fn default_initial() -> InitialKind {
    InitialKind::ChaoticLaunch
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: default_initial(),
            q: 0.0,
            p: 0.0,
            alpha_re: 0.0,
            alpha_im: 0.0,
            fock: [0, 0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    /// Times at which ensemble states are collected and compared with the master equation.
    pub times: Vec<f64>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

fn default_resamples() -> usize {
    200
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn find_key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with(key) && t[key.len()..].trim_start().starts_with('=')
        })
        .map_or(0, |i| i + 1)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| line_of(text, s.start));
            Error::Config {
                line,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    fn validate(&self, text: &str) -> Result<()> {
        let bad = |key: &str, message: String| Error::Config {
            line: find_key_line(text, key),
            message,
        };
        if let Some(p) = &self.system.preset {
            if p != PRESET_NAME {
                return Err(bad("preset", format!("unknown preset '{p}' (known: {PRESET_NAME})")));
            }
        }
        let base = self.param_spec().map_err(|e| bad("preset", e.to_string()))?;
        match &self.run.sweep {
            Some(list) => {
                if list.is_empty() {
                    return Err(bad("sweep", "sweep list is empty".into()));
                }
                for &g in list {
                    if !(g > 0.0 && g.is_finite()) {
                        return Err(bad("sweep", format!("sweep value {g} must be positive")));
                    }
                }
                if base.p_tilde.is_none() {
                    return Err(bad("sweep", "a g0 sweep needs p_tilde fixed (directly or via the preset)".into()));
                }
            }
            None => {
                build_params(&base).map_err(|e| bad("g0", e.to_string()))?;
            }
        }
        let e = &self.engine;
        if !(e.dt > 0.0 && e.dt.is_finite()) {
            return Err(bad("dt", format!("dt must be positive, got {}", e.dt)));
        }
        e.hilbert().map_err(|err| bad("truncation", err.to_string()))?;
        if !(e.recenter_trigger > 0.0) {
            return Err(bad("recenter_trigger", "recenter_trigger must be positive".into()));
        }
        if !(e.truncation_alarm > 0.0) {
            return Err(bad("truncation_alarm", "truncation_alarm must be positive".into()));
        }
        if e.renormalize_every == 0 {
            return Err(bad("renormalize_every", "renormalize_every must be at least 1".into()));
        }
        let r = &self.run;
        if r.ensemble_size == 0 {
            return Err(bad("ensemble_size", "ensemble_size must be at least 1".into()));
        }
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            return Err(bad("horizon", format!("horizon must be positive, got {}", r.horizon)));
        }
        if r.sample_every == 0 {
            return Err(bad("sample_every", "sample_every must be at least 1".into()));
        }
        if let Some(d) = &self.detector {
            d.validate().map_err(|err| bad("low_threshold", err.to_string()))?;
        }
        if let Some(rc) = &self.reconstruct {
            if rc.times.is_empty() || rc.times.iter().any(|&t| !(t >= 0.0 && t <= r.horizon)) {
                return Err(bad("times", "reconstruct times must be non-empty and within [0, horizon]".into()));
            }
        }
        Ok(())
    }

    /// Parameter spec before any sweep value is applied.
    pub fn param_spec(&self) -> Result<ParamSpec> {
        let s = &self.system;
        let mut spec = if s.preset.is_some() {
            ParamSpec::preset()
        } else {
            let need = |name: &str, v: Option<f64>| {
                v.ok_or_else(|| Error::InconsistentParams(format!("missing required key '{name}' (or set preset)")))
            };
            ParamSpec {
                delta0: need("delta0", s.delta0)?,
                kappa: need("kappa", s.kappa)?,
                gamma_m: need("gamma_m", s.gamma_m)?,
                g0: None,
                alpha_l: None,
                p_tilde: None,
            }
        };
        if let Some(v) = s.delta0 {
            spec.delta0 = v;
        }
        if let Some(v) = s.kappa {
            spec.kappa = v;
        }
        if let Some(v) = s.gamma_m {
            spec.gamma_m = v;
        }
        spec.g0 = s.g0;
        if s.alpha_l.is_some() {
            spec.alpha_l = s.alpha_l;
            // an explicit drive amplitude replaces the preset power unless both are given
            if s.p_tilde.is_none() && s.g0.is_some() {
                spec.p_tilde = None;
            }
        }
        if s.p_tilde.is_some() {
            spec.p_tilde = s.p_tilde;
        }
        Ok(spec)
    }

    /// One parameter set per sweep point, or the single configured set.
    pub fn resolved_params(&self) -> Result<Vec<SystemParams>> {
        let spec = self.param_spec()?;
        match &self.run.sweep {
            Some(list) => list
                .iter()
                .map(|&g| {
                    build_params(&ParamSpec {
                        g0: Some(g),
                        alpha_l: None,
                        ..spec
                    })
                })
                .collect(),
            None => Ok(vec![build_params(&spec)?]),
        }
    }

    /// The engine kind, with a subcommand overriding or checking the file.
    pub fn engine_kind(&self, requested: Option<EngineKind>) -> Result<EngineKind> {
        match (requested, self.engine.kind) {
            (Some(r), Some(f)) if r != f => Err(Error::Config {
                line: 0,
                message: format!("config asks for engine '{}' but the command runs '{}'", f.as_str(), r.as_str()),
            }),
            (Some(r), _) => Ok(r),
            (None, Some(f)) => Ok(f),
            (None, None) => Err(Error::Config {
                line: 0,
                message: "missing required key 'engine.kind'".into(),
            }),
        }
    }

    /// The config with every default and every resolved parameter written out.
    pub fn resolved_toml(&self) -> Result<String> {
        let mut text = toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        text.push_str("\n# resolved parameter sets\n");
        for p in self.resolved_params()? {
            text.push_str(&format!(
                "# g0 = {:?}, alpha_l = {:?}, p_tilde = {:?}, delta0 = {:?}, kappa = {:?}, gamma_m = {:?}\n",
                p.g0, p.alpha_l, p.p_tilde, p.delta0, p.kappa, p.gamma_m
            ));
        }
        Ok(text)
    }
}
