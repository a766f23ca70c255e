//! Transition detection, censored lifetime estimation and scaling-law fits.
//!
//! Lifetimes are measured in drive periods, `T = τ / 2π`.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{integrate_deterministic, ClassicalState, ATTRACTOR_DISCARD};
use crate::error::{Error, Result};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ChaoticToRegular,
    RegularToChaotic,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ChaoticToRegular => "chaotic_to_regular",
            Direction::RegularToChaotic => "regular_to_chaotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub direction: Direction,
    /// First entry of the rolling RMS into the destination band, in τ.
    pub tau_transition: f64,
    /// Span of the RMS window centred on the crossing.
    pub confidence_window: (f64, f64),
}

impl TransitionEvent {
    pub fn periods(&self) -> f64 {
        self.tau_transition / TAU
    }
}

/// Which side of the thresholds the chaotic set lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChaoticBand {
    /// Chaotic RMS below `low_threshold`, regular above `high_threshold`.
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Rolling-window length in drive periods.
    pub window: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
    /// Periods the RMS must stay in the new band before an event is confirmed.
    pub dwell: f64,
    pub chaotic_band: ChaoticBand,
}

pub const DEFAULT_WINDOW_PERIODS: f64 = 5.0;
pub const DEFAULT_DWELL_PERIODS: f64 = 10.0;
/// Margin between the two bands as a fraction of the RMS gap.
pub const CALIBRATION_MARGIN: f64 = 0.15;

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.dwell >= 0.0) {
            return Err(Error::InvalidArgument("detector window must be positive and dwell non-negative".into()));
        }
        if !(self.low_threshold < self.high_threshold) {
            return Err(Error::InvalidArgument(format!(
                "low_threshold {} must lie below high_threshold {}",
                self.low_threshold, self.high_threshold
            )));
        }
        Ok(())
    }

    /// Bands from the two attractor RMS values.
    pub fn from_attractors(rms_chaotic: f64, rms_periodic: f64) -> Result<Self> {
        let gap = (rms_periodic - rms_chaotic).abs();
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument(
                "chaotic and periodic attractors have the same RMS; cannot set thresholds".into(),
            ));
        }
        let mid = 0.5 * (rms_chaotic + rms_periodic);
        let margin = CALIBRATION_MARGIN * gap;
        Ok(Self {
            window: DEFAULT_WINDOW_PERIODS,
            low_threshold: mid - margin,
            high_threshold: mid + margin,
            dwell: DEFAULT_DWELL_PERIODS,
            chaotic_band: if rms_chaotic < rms_periodic {
                ChaoticBand::Low
            } else {
                ChaoticBand::High
            },
        })
    }
}

/// Attractor RMS values and launch points used for calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub rms_chaotic: f64,
    pub rms_periodic: f64,
    pub detector: DetectorConfig,
}

/// Launch point of the coexisting periodic attractor at the preset.
pub fn periodic_launch_point() -> ClassicalState {
    ClassicalState::new(3.0, 0.0, crate::fock_ops::C64::new(0.0, 0.0))
}

/// Raw RMS of `q` on the deterministic attractors reached from `chaotic` and
/// `periodic`, after discarding the transient.
pub fn calibrate_thresholds(
    params: &SystemParams,
    chaotic: &ClassicalState,
    periodic: &ClassicalState,
    dt: f64,
) -> Result<Calibration> {
    let span = 200.0 * TAU;
    let rms_of = |init: &ClassicalState| -> Result<f64> {
        let settled = crate::classical::evolve(init, params, ATTRACTOR_DISCARD, dt)?;
        let rec = integrate_deterministic(&settled, params, span, dt, 10)?;
        Ok(crate::classical::rms(&rec.qs()))
    };
    let rms_chaotic = rms_of(chaotic)?;
    let rms_periodic = rms_of(periodic)?;
    Ok(Calibration {
        rms_chaotic,
        rms_periodic,
        detector: DetectorConfig::from_attractors(rms_chaotic, rms_periodic)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Chaotic,
    Regular,
}

/// Streaming detector; feed samples in time order. Runs start in the chaotic
/// regime by construction.
#[derive(Debug, Clone)]
pub struct OnlineDetector {
    cfg: DetectorConfig,
    window_tau: f64,
    dwell_tau: f64,
    buf: VecDeque<(f64, f64)>,
    sum_sq: f64,
    first_tau: Option<f64>,
    regime: Regime,
    candidate: Option<(f64, f64)>,
    events: Vec<TransitionEvent>,
    last_tau: f64,
}

impl OnlineDetector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            window_tau: cfg.window * TAU,
            dwell_tau: cfg.dwell * TAU,
            buf: VecDeque::new(),
            sum_sq: 0.0,
            first_tau: None,
            regime: Regime::Chaotic,
            candidate: None,
            events: Vec::new(),
            last_tau: f64::NEG_INFINITY,
        })
    }

    fn in_band(&self, rms: f64, regime: Regime) -> bool {
        let low_side = match (self.cfg.chaotic_band, regime) {
            (ChaoticBand::Low, Regime::Chaotic) | (ChaoticBand::High, Regime::Regular) => true,
            _ => false,
        };
        if low_side {
            rms < self.cfg.low_threshold
        } else {
            rms > self.cfg.high_threshold
        }
    }

    /// Consumes one sample; returns an event once it is confirmed.
    pub fn push(&mut self, tau: f64, q: f64) -> Option<TransitionEvent> {
        debug_assert!(tau > self.last_tau);
        self.last_tau = tau;
        let first = *self.first_tau.get_or_insert(tau);
        self.buf.push_back((tau, q * q));
        self.sum_sq += q * q;
        while let Some(&(t0, q2)) = self.buf.front() {
            if t0 <= tau - self.window_tau {
                self.buf.pop_front();
                self.sum_sq -= q2;
            } else {
                break;
            }
        }
        if tau - first < self.window_tau {
            return None;
        }
        let rms = (self.sum_sq.max(0.0) / self.buf.len() as f64).sqrt();
        let center = tau - 0.5 * self.window_tau;
        let target = match self.regime {
            Regime::Chaotic => Regime::Regular,
            Regime::Regular => Regime::Chaotic,
        };
        if let Some((enter, _)) = self.candidate {
            if self.in_band(rms, self.regime) {
                // fell back across the far threshold: hysteresis reset
                self.candidate = None;
            } else if center - enter >= self.dwell_tau {
                let direction = match target {
                    Regime::Regular => Direction::ChaoticToRegular,
                    Regime::Chaotic => Direction::RegularToChaotic,
                };
                let ev = TransitionEvent {
                    direction,
                    tau_transition: enter,
                    confidence_window: (enter - 0.5 * self.window_tau, enter + 0.5 * self.window_tau),
                };
                self.regime = target;
                self.candidate = None;
                self.events.push(ev);
                return Some(ev);
            }
        } else if self.in_band(rms, target) {
            self.candidate = Some((center, rms));
        }
        None
    }

    pub fn events(&self) -> &[TransitionEvent] {
        &self.events
    }

    pub fn first_escape(&self) -> Option<TransitionEvent> {
        self.events.iter().copied().find(|e| e.direction == Direction::ChaoticToRegular)
    }
}

fn check_span(series: &[(f64, f64, f64)], cfg: &DetectorConfig) -> Result<()> {
    let span = match (series.first(), series.last()) {
        (Some(a), Some(b)) => b.0 - a.0,
        _ => 0.0,
    };
    let needed = 2.0 * cfg.window * TAU;
    if span < needed {
        return Err(Error::SeriesTooShort { needed, got: span });
    }
    Ok(())
}

/// All confirmed transitions, in either direction, in time order.
pub fn detect_all(series: &[(f64, f64, f64)], cfg: &DetectorConfig) -> Result<Vec<TransitionEvent>> {
    check_span(series, cfg)?;
    let mut det = OnlineDetector::new(*cfg)?;
    for &(tau, q, _) in series {
        det.push(tau, q);
    }
    Ok(det.events)
}

/// The first chaotic→regular transition of a `(τ, q, p)` series.
pub fn detect_transition(series: &[(f64, f64, f64)], cfg: &DetectorConfig) -> Result<Option<TransitionEvent>> {
    Ok(detect_all(series, cfg)?.into_iter().find(|e| e.direction == Direction::ChaoticToRegular))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Every run transitioned: plain average.
    Direct,
    /// Exponential-tail maximum likelihood: total observed time / events.
    ExponentialMle,
    /// Too few events: restricted mean, a lower bound on ⟨T⟩.
    LowerBound,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Direct => "direct",
            Estimator::ExponentialMle => "exponential_mle",
            Estimator::LowerBound => "lower_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_observed: usize,
    pub n_censored: usize,
    pub horizon: f64,
    pub estimator: Estimator,
}

impl LifetimeEstimate {
    pub fn is_lower_bound(&self) -> bool {
        self.estimator == Estimator::LowerBound
    }
}

/// Smallest observed fraction for which the exponential-tail correction is used.
pub const MLE_MIN_OBSERVED_FRACTION: f64 = 0.5;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_SEED: u64 = 0x5eed_11fe;

fn estimate(lifetimes: &[Option<f64>], horizon: f64, estimator: Estimator) -> f64 {
    let clipped: f64 = lifetimes.iter().map(|t| t.map_or(horizon, |t| t.min(horizon))).sum();
    let events = lifetimes.iter().filter(|t| t.is_some()).count();
    match estimator {
        Estimator::ExponentialMle if events > 0 => clipped / events as f64,
        _ => clipped / lifetimes.len() as f64,
    }
}

/// `(restricted mean, events)` with censored runs counted at `horizon`.
pub fn restricted_mean(lifetimes: &[Option<f64>], horizon: f64) -> f64 {
    estimate(lifetimes, horizon, Estimator::LowerBound)
}

/// Mean lifetime over an ensemble of lifetimes (`None` = censored at `horizon`),
/// all in the same time unit.
pub fn mean_lifetime_from(lifetimes: &[Option<f64>], horizon: f64) -> Result<LifetimeEstimate> {
    if lifetimes.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    // events past the horizon count as censored
    let lifetimes: Vec<Option<f64>> = lifetimes.iter().map(|t| t.filter(|&t| t <= horizon)).collect();
    let n = lifetimes.len();
    let n_observed = lifetimes.iter().filter(|t| t.is_some()).count();
    let n_censored = n - n_observed;
    let estimator = if n_censored == 0 {
        Estimator::Direct
    } else if n_observed as f64 >= MLE_MIN_OBSERVED_FRACTION * n as f64 {
        Estimator::ExponentialMle
    } else {
        Estimator::LowerBound
    };
    let mean = estimate(&lifetimes, horizon, estimator);
    let mut rng = crate::rng::stream(BOOTSTRAP_SEED, n as u64);
    let mut acc = 0.0;
    let mut acc2 = 0.0;
    let mut pick = vec![None; n];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in pick.iter_mut() {
            *slot = lifetimes[rng.gen_range(0..n)];
        }
        let m = estimate(&pick, horizon, estimator);
        acc += m;
        acc2 += m * m;
    }
    let b = BOOTSTRAP_RESAMPLES as f64;
    let var = (acc2 / b - (acc / b).powi(2)).max(0.0) * b / (b - 1.0);
    // identical samples leave only round-off in the variance
    let stderr = if var.sqrt() <= 1e-12 * mean.abs() { 0.0 } else { var.sqrt() };
    Ok(LifetimeEstimate {
        mean,
        stderr,
        n_observed,
        n_censored,
        horizon,
        estimator,
    })
}

/// Mean lifetime in drive periods from detected escapes; `horizon_tau` in τ.
pub fn mean_lifetime(events: &[Option<TransitionEvent>], horizon_tau: f64) -> Result<LifetimeEstimate> {
    let lifetimes: Vec<Option<f64>> = events.iter().map(|e| e.map(|e| e.periods())).collect();
    mean_lifetime_from(&lifetimes, horizon_tau / TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `ln ln⟨T⟩ = c − s ln g0`
    Superpersistent,
    /// `ln⟨T⟩ = c − δ ln g0`
    Powerlaw,
}

impl ScalingModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalingModel::Superpersistent => "superpersistent",
            ScalingModel::Powerlaw => "powerlaw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ScalingModel,
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals of `ln⟨T⟩`, comparable across models.
    pub residual_sum: f64,
    /// Per-point residuals in the model's own fit variable.
    pub residuals: Vec<f64>,
    /// Per-point residuals of `ln⟨T⟩`.
    pub log_lifetime_residuals: Vec<f64>,
}

impl FitResult {
    pub fn predict(&self, g0: f64) -> f64 {
        let y = self.intercept + self.slope * g0.ln();
        match self.model {
            ScalingModel::Superpersistent => y.exp().exp(),
            ScalingModel::Powerlaw => y.exp(),
        }
    }
}

pub fn fit_scaling(points: &[(f64, f64)], model: ScalingModel) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(g, t) in points {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!("g0 must be positive, got {g}")));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("lifetime must be positive, got {t}")));
        }
        let y = match model {
            ScalingModel::Superpersistent => {
                if t <= 1.0 {
                    return Err(Error::LifetimeTooShort(t));
                }
                t.ln().ln()
            }
            ScalingModel::Powerlaw => t.ln(),
        };
        xs.push(g.ln());
        ys.push(y);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 || xs.iter().all(|x| (x - xs[0]).abs() < 1e-15) {
        return Err(Error::DegenerateAbscissa);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let log_lifetime_residuals: Vec<f64> = xs
        .iter()
        .zip(points)
        .map(|(x, &(_, t))| {
            let y = intercept + slope * x;
            let pred_ln_t = match model {
                ScalingModel::Superpersistent => y.exp(),
                ScalingModel::Powerlaw => y,
            };
            t.ln() - pred_ln_t
        })
        .collect();
    Ok(FitResult {
        model,
        slope,
        intercept,
        residual_sum: log_lifetime_residuals.iter().map(|r| r * r).sum(),
        residuals,
        log_lifetime_residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeRow {
    pub g0: f64,
    pub estimate: LifetimeEstimate,
    /// Trajectories that failed numerically; excluded from the estimate.
    pub n_invalid: usize,
}

pub const LIFETIME_COLUMNS: [&str; 9] = [
    "g0",
    "mean",
    "stderr",
    "n_observed",
    "n_censored",
    "n_invalid",
    "horizon",
    "estimator",
    "lower_bound",
];

pub fn lifetime_table_header() -> String {
    LIFETIME_COLUMNS.join(",")
}

pub fn lifetime_table_row(row: &LifetimeRow) -> String {
    let e = &row.estimate;
    format!(
        "{:?},{:?},{:?},{},{},{},{:?},{},{}",
        row.g0,
        e.mean,
        e.stderr,
        e.n_observed,
        e.n_censored,
        row.n_invalid,
        e.horizon,
        e.estimator.as_str(),
        e.is_lower_bound()
    )
}

pub fn write_lifetime_table<W: Write>(rows: &[LifetimeRow], mut w: W) -> Result<()> {
    writeln!(w, "{}", lifetime_table_header())?;
    for r in rows {
        writeln!(w, "{}", lifetime_table_row(r))?;
    }
    Ok(())
}

/// Parses a lifetime table back into `(g0, mean, lower_bound)` rows.
pub fn read_lifetime_table(text: &str) -> Result<Vec<(f64, f64, bool)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let head = lines.next().ok_or_else(|| Error::Format("empty lifetime table".into()))?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Format(format!("lifetime table lacks column '{name}'")))
    };
    let (ig, im) = (find("g0")?, find("mean")?);
    let ib = cols.iter().position(|c| *c == "lower_bound");
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            f.get(i)
                .ok_or_else(|| Error::Format(format!("row {}: missing field", k + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", k + 1)))
        };
        let lb = ib.and_then(|i| f.get(i)).map_or(false, |v| *v == "true");
        out.push((num(ig)?, num(im)?, lb));
    }
    Ok(out)
}

/// Key-value fit report covering both models.
pub fn fit_report(fits: &[FitResult], points: &[(f64, f64)]) -> String {
    let mut s = String::new();
    s.push_str(&format!("points = {}\n", points.len()));
    for (g, t) in points {
        s.push_str(&format!("point.{g:?} = {t:?}\n"));
    }
    for f in fits {
        let m = f.model.as_str();
        s.push_str(&format!("{m}.slope = {:?}\n", f.slope));
        s.push_str(&format!("{m}.intercept = {:?}\n", f.intercept));
        s.push_str(&format!("{m}.residual_sum = {:?}\n", f.residual_sum));
        let r: Vec<String> = f.residuals.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&format!("{m}.residuals = {}\n", r.join(" ")));
    }
    if let (Some(sp), Some(pl)) = (
        fits.iter().find(|f| f.model == ScalingModel::Superpersistent),
        fits.iter().find(|f| f.model == ScalingModel::Powerlaw),
    ) {
        let better = if sp.residual_sum < pl.residual_sum { sp.model } else { pl.model };
        s.push_str(&format!("preferred = {}\n", better.as_str()));
    }
    s
}
