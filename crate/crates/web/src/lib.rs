//! wasm-bindgen surface for the browser demo in `www/`.

use optomech::classical::{chaotic_launch_point, integrate_deterministic, max_lyapunov, ClassicalState, LyapunovSettings, DEFAULT_DT};
use optomech::engines::{Basis, EngineConfig, Scheme, Trajectory};
use optomech::fock_ops::{HilbertConfig, C64};
use optomech::model::{mode_means, PhasePoint, SystemParams};
use optomech::moving_basis::FrameState;
use optomech::stats::{calibrate_thresholds, periodic_launch_point, OnlineDetector};
use wasm_bindgen::prelude::*;

fn js(e: optomech::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn start(q: f64, p: f64) -> ClassicalState {
    ClassicalState::new(q, p, C64::new(0.0, 0.0))
}

/// Mean-field orbit from `(q, p, α = 0)`, flattened as `[q0, p0, q1, p1, ...]`.
#[wasm_bindgen]
pub fn classical_orbit(g0: f64, q: f64, p: f64, periods: f64, stride: usize) -> Result<Vec<f64>, JsError> {
    let params = SystemParams::preset(g0).map_err(js)?;
    let horizon = periods * std::f64::consts::TAU;
    let rec = integrate_deterministic(&start(q, p), &params, horizon, DEFAULT_DT, stride.max(1)).map_err(js)?;
    Ok(rec.samples.iter().flat_map(|s| [s.q, s.p]).collect())
}

/// Largest Lyapunov exponent from `(q, p, α = 0)` as `[exponent, stderr]`.
#[wasm_bindgen]
pub fn lyapunov(g0: f64, q: f64, p: f64) -> Result<Vec<f64>, JsError> {
    let params = SystemParams::preset(g0).map_err(js)?;
    let est = max_lyapunov(&params, &start(q, p), &LyapunovSettings::default()).map_err(js)?;
    Ok(vec![est.exponent, est.stderr])
}

/// A moving-basis QSD trajectory launched on the chaotic attractor, advanced
/// in slices so the page stays responsive.
#[wasm_bindgen]
pub struct QuantumRun {
    traj: Trajectory,
    detector: OnlineDetector,
    escape: Option<f64>,
}

#[wasm_bindgen]
impl QuantumRun {
    #[wasm_bindgen(constructor)]
    pub fn new(g0: f64, seed: u64, truncation: usize) -> Result<QuantumRun, JsError> {
        let params = SystemParams::preset(g0).map_err(js)?;
        let cal = calibrate_thresholds(&params, &ClassicalState::origin(), &periodic_launch_point(), DEFAULT_DT).map_err(js)?;
        let launch = chaotic_launch_point(&params, DEFAULT_DT).map_err(js)?;
        let (ma, mb) = mode_means(&PhasePoint { q: launch.q, p: launch.p, alpha: launch.alpha, tau: 0.0 }, &params);
        let cfg = HilbertConfig::new(truncation, truncation).map_err(js)?;
        let mut engine = EngineConfig::new(Scheme::Ito, DEFAULT_DT);
        // a small demo frame trades fidelity for speed; report rather than abort
        engine.truncation_alarm = 1.0;
        let traj = Trajectory::new(FrameState::coherent(cfg, ma, mb), params, engine, Basis::moving(), seed, 0).map_err(js)?;
        Ok(QuantumRun {
            traj,
            detector: OnlineDetector::new(cal.detector).map_err(js)?,
            escape: None,
        })
    }

    /// Steps through `dtau` more time; returns the new `(q, p)` samples flattened.
    pub fn advance(&mut self, dtau: f64, stride: usize) -> Result<Vec<f64>, JsError> {
        let end = self.traj.tau() + dtau;
        let stride = stride.max(1) as u64;
        let mut out = Vec::new();
        while self.traj.tau() < end - 0.5 * DEFAULT_DT {
            self.traj.step().map_err(js)?;
            if self.traj.steps() % stride == 0 {
                let s = self.traj.sample();
                if let Some(ev) = self.detector.push(s.tau, s.q) {
                    if self.escape.is_none() && ev.direction == optomech::stats::Direction::ChaoticToRegular {
                        self.escape = Some(ev.tau_transition);
                    }
                }
                out.push(s.q);
                out.push(s.p);
            }
        }
        Ok(out)
    }

    pub fn tau(&self) -> f64 {
        self.traj.tau()
    }

    /// First chaotic→regular transition time, or NaN while still chaotic.
    pub fn escape_tau(&self) -> f64 {
        self.escape.unwrap_or(f64::NAN)
    }

    /// Largest top-level population of the frame, a truncation-quality gauge.
    pub fn top_population(&self) -> f64 {
        let s = self.traj.sample();
        s.top_a.max(s.top_b)
    }
}
