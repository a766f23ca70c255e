//! Mean-field dynamics in rescaled coordinates: deterministic flow, the
//! stochastic Langevin version and the largest Lyapunov exponent.
//!
//! ```text
//! dq/dτ = p
//! dp/dτ = (√2/8) P̃ |α|² − q − Γ_m p            (+ g0 ξ)
//! dα/dτ = i(Δ0 α + √2 α q − 1) − κ α / 2      (+ √(κ/2)/α_L · α_in)
//! ```

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_ops::C64;
use crate::model::SystemParams;
use crate::record::{RecordHeader, Sample, TrajectoryRecord};
use crate::rng::{self, StreamRng};

/// Default integration step: a thousandth of a mechanical period.
pub const DEFAULT_DT: f64 = TAU * 1e-3;

/// Transient discarded before a lifetime run starts.
pub const ATTRACTOR_DISCARD: f64 = 100.0 * TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
    pub alpha: C64,
    pub tau: f64,
}

impl ClassicalState {
    pub fn new(q: f64, p: f64, alpha: C64) -> Self {
        Self { q, p, alpha, tau: 0.0 }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, C64::new(0.0, 0.0))
    }

    fn to_vec(self) -> [f64; 4] {
        [self.q, self.p, self.alpha.re, self.alpha.im]
    }

    fn from_vec(v: [f64; 4], tau: f64) -> Self {
        Self {
            q: v[0],
            p: v[1],
            alpha: C64::new(v[2], v[3]),
            tau,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }

    pub fn sample(&self) -> Sample {
        Sample::classical(self.tau, self.q, self.p, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dq: f64,
    pub dp: f64,
    pub dalpha: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    pub seed: u64,
    pub mechanical_noise_on: bool,
    pub optical_noise_on: bool,
}

impl NoiseSettings {
    pub fn on(seed: u64) -> Self {
        Self {
            seed,
            mechanical_noise_on: true,
            optical_noise_on: true,
        }
    }

    pub fn off() -> Self {
        Self {
            seed: 0,
            mechanical_noise_on: false,
            optical_noise_on: false,
        }
    }
}

pub fn deterministic_rhs(s: &ClassicalState, params: &SystemParams) -> Derivative {
    let d = rhs(&s.to_vec(), params);
    Derivative {
        dq: d[0],
        dp: d[1],
        dalpha: C64::new(d[2], d[3]),
    }
}

#[inline]
fn rhs(x: &[f64; 4], p: &SystemParams) -> [f64; 4] {
    let [q, mom, ar, ai] = *x;
    let a2 = ar * ar + ai * ai;
    let shift = p.delta0 + SQRT_2 * q;
    [
        mom,
        SQRT_2 / 8.0 * p.p_tilde * a2 - q - p.gamma_m * mom,
        -shift * ai - 0.5 * p.kappa * ar,
        shift * ar - 1.0 - 0.5 * p.kappa * ai,
    ]
}

#[inline]
fn jacobian_times(x: &[f64; 4], v: &[f64; 4], p: &SystemParams) -> [f64; 4] {
    let [q, _, ar, ai] = *x;
    let [dq, dmom, dar, dai] = *v;
    let shift = p.delta0 + SQRT_2 * q;
    [
        dmom,
        SQRT_2 / 4.0 * p.p_tilde * (ar * dar + ai * dai) - dq - p.gamma_m * dmom,
        -SQRT_2 * dq * ai - shift * dai - 0.5 * p.kappa * dar,
        SQRT_2 * dq * ar + shift * dar - 0.5 * p.kappa * dai,
    ]
}

#[inline]
fn axpy4(x: &[f64; 4], h: f64, k: &[f64; 4]) -> [f64; 4] {
    [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2], x[3] + h * k[3]]
}

#[inline]
fn rk4(x: &[f64; 4], dt: f64, p: &SystemParams) -> [f64; 4] {
    let k1 = rhs(x, p);
    let k2 = rhs(&axpy4(x, dt / 2.0, &k1), p);
    let k3 = rhs(&axpy4(x, dt / 2.0, &k2), p);
    let k4 = rhs(&axpy4(x, dt, &k3), p);
    let mut out = *x;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// One RK4 step of the deterministic flow.
pub fn deterministic_step(s: &ClassicalState, params: &SystemParams, dt: f64) -> ClassicalState {
    ClassicalState::from_vec(rk4(&s.to_vec(), dt, params), s.tau + dt)
}

/// One Langevin step: RK4 drift plus the supplied Brownian increments
/// (`dw_p` real with variance `dt`, `dw_alpha` complex with `E|dw|² = dt`).
pub fn langevin_step_with_increments(
    s: &ClassicalState,
    params: &SystemParams,
    dt: f64,
    dw_p: f64,
    dw_alpha: C64,
) -> ClassicalState {
    let mut x = rk4(&s.to_vec(), dt, params);
    x[1] += params.g0 * dw_p;
    let optical = (params.kappa / 2.0).sqrt() / params.alpha_l;
    x[2] += optical * dw_alpha.re;
    x[3] += optical * dw_alpha.im;
    ClassicalState::from_vec(x, s.tau + dt)
}

fn check_finite(s: &ClassicalState) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalAbort {
            tau: s.tau,
            reason: "non-finite classical state".into(),
        })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")))
    }
}

fn steps_for(horizon: f64, dt: f64) -> usize {
    ((horizon / dt) - 1e-9).ceil().max(0.0) as usize
}

/// Fixed-step RK4 from `init` to `init.tau + horizon`, sampling every `stride` steps.
pub fn integrate_deterministic(
    init: &ClassicalState,
    params: &SystemParams,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    check_dt(dt)?;
    let stride = stride.max(1);
    let mut rec = TrajectoryRecord::new(
        RecordHeader::new("classical", *params, dt)
            .with("init", format_state(init))
            .with("stride", stride),
    );
    let mut s = *init;
    rec.push(s.sample());
    let steps = steps_for(horizon, dt);
    for k in 1..=steps {
        s = deterministic_step(&s, params, dt);
        check_finite(&s)?;
        if k % stride == 0 {
            rec.push(s.sample());
        }
    }
    Ok(rec)
}

/// Final state after `horizon` of deterministic evolution.
pub fn evolve(init: &ClassicalState, params: &SystemParams, horizon: f64, dt: f64) -> Result<ClassicalState> {
    check_dt(dt)?;
    let mut s = *init;
    for _ in 0..steps_for(horizon, dt) {
        s = deterministic_step(&s, params, dt);
    }
    check_finite(&s)?;
    Ok(s)
}

/// Point on the chaotic attractor reached from the origin after the standard discard,
/// with its clock reset to zero.
pub fn chaotic_launch_point(params: &SystemParams, dt: f64) -> Result<ClassicalState> {
    let mut s = evolve(&ClassicalState::origin(), params, ATTRACTOR_DISCARD, dt)?;
    s.tau = 0.0;
    Ok(s)
}

/// Euler–Maruyama Langevin integration sampled every `stride` steps. The
/// noise stream is `(noise.seed, index)`.
pub fn langevin_trajectory(
    init: &ClassicalState,
    params: &SystemParams,
    noise: &NoiseSettings,
    index: u64,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    check_dt(dt)?;
    let stride = stride.max(1);
    let mut header = RecordHeader::new("langevin", *params, dt)
        .with("init", format_state(init))
        .with("stride", stride)
        .with("mechanical_noise", noise.mechanical_noise_on)
        .with("optical_noise", noise.optical_noise_on);
    header.seed = Some(noise.seed);
    header.trajectory = index;
    let mut rec = TrajectoryRecord::new(header);
    let mut stepper = LangevinStepper::new(*init, *params, *noise, index, dt);
    rec.push(stepper.state().sample());
    for k in 1..=steps_for(horizon, dt) {
        let s = stepper.step()?;
        if k % stride == 0 {
            rec.push(s.sample());
        }
    }
    Ok(rec)
}

/// Streaming Langevin integrator owning its noise stream.
#[derive(Debug, Clone)]
pub struct LangevinStepper {
    state: ClassicalState,
    params: SystemParams,
    noise: NoiseSettings,
    dt: f64,
    rng: StreamRng,
}

impl LangevinStepper {
    pub fn new(init: ClassicalState, params: SystemParams, noise: NoiseSettings, index: u64, dt: f64) -> Self {
        Self {
            state: init,
            params,
            noise,
            dt,
            rng: rng::stream(noise.seed, index),
        }
    }

    pub fn state(&self) -> &ClassicalState {
        &self.state
    }

    pub fn step(&mut self) -> Result<ClassicalState> {
        let dt = self.dt;
        let dw_p = if self.noise.mechanical_noise_on {
            dt.sqrt() * rng::normal(&mut self.rng)
        } else {
            0.0
        };
        let dw_a = if self.noise.optical_noise_on {
            rng::complex_increment(&mut self.rng, dt)
        } else {
            C64::new(0.0, 0.0)
        };
        self.state = langevin_step_with_increments(&self.state, &self.params, dt, dw_p, dw_a);
        check_finite(&self.state)?;
        Ok(self.state)
    }

    pub fn rng_mut(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Mean-field equations for the unscaled amplitudes `(⟨a⟩, ⟨b⟩)` generated by
/// the Hamiltonian of [`crate::model::build_hamiltonian`] with Lindblad damping.
pub fn mean_field_rhs_unscaled(a: C64, b: C64, params: &SystemParams) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    let da = i * (params.delta0 * a + params.g0 * (b + b.conj()) * a - params.alpha_l) - 0.5 * params.kappa * a;
    let db = -i * (b - params.g0 * a.norm_sqr()) - 0.5 * params.gamma_m * b;
    (da, db)
}

/// RK4 of [`mean_field_rhs_unscaled`].
pub fn mean_field_step_unscaled(a: C64, b: C64, params: &SystemParams, dt: f64) -> (C64, C64) {
    let f = |a: C64, b: C64| mean_field_rhs_unscaled(a, b, params);
    let (ka1, kb1) = f(a, b);
    let (ka2, kb2) = f(a + ka1 * (dt / 2.0), b + kb1 * (dt / 2.0));
    let (ka3, kb3) = f(a + ka2 * (dt / 2.0), b + kb2 * (dt / 2.0));
    let (ka4, kb4) = f(a + ka3 * dt, b + kb3 * dt);
    (
        a + (ka1 + ka2 * 2.0 + ka3 * 2.0 + ka4) * (dt / 6.0),
        b + (kb1 + kb2 * 2.0 + kb3 * 2.0 + kb4) * (dt / 6.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSettings {
    /// Time between tangent-vector renormalizations.
    pub renorm_interval: f64,
    /// Measurement time after the transient.
    pub horizon: f64,
    /// Transient discarded before measuring.
    pub transient: f64,
    pub dt: f64,
    pub blocks: usize,
    /// Remove the tangent component along the flow at each renormalization,
    /// which yields the largest exponent transverse to the trajectory.
    pub project_flow: bool,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        Self {
            renorm_interval: TAU / 10.0,
            horizon: 2000.0 * TAU,
            transient: ATTRACTOR_DISCARD,
            dt: DEFAULT_DT,
            blocks: 20,
            project_flow: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    pub stderr: f64,
    pub blocks: usize,
    pub final_state: ClassicalState,
}

/// Benettin estimate of the largest Lyapunov exponent (units of ω_m) with a
/// block-averaged standard error.
pub fn max_lyapunov(params: &SystemParams, init: &ClassicalState, settings: &LyapunovSettings) -> Result<LyapunovEstimate> {
    check_dt(settings.dt)?;
    if settings.blocks < 2 || settings.renorm_interval <= 0.0 || settings.horizon <= 0.0 {
        return Err(Error::InvalidArgument("need blocks ≥ 2 and positive intervals".into()));
    }
    let dt = settings.dt;
    let mut x = evolve(init, params, settings.transient, dt)?.to_vec();
    let steps_per = steps_for(settings.renorm_interval, dt).max(1);
    let interval = steps_per as f64 * dt;
    let n_renorm = (settings.horizon / interval).round().max(settings.blocks as f64) as usize;
    let per_block = n_renorm / settings.blocks;
    let mut v = [1.0, 0.0, 0.0, 0.0];
    if settings.project_flow {
        project_out_flow(&x, &mut v, params);
    }
    normalize4(&mut v);

    let mut block_rates = Vec::with_capacity(settings.blocks);
    let mut tau = 0.0;
    for _ in 0..settings.blocks {
        let mut log_sum = 0.0;
        for _ in 0..per_block {
            for _ in 0..steps_per {
                (x, v) = tangent_rk4(&x, &v, dt, params);
            }
            tau += interval;
            if !x.iter().chain(v.iter()).all(|z| z.is_finite()) || x.iter().any(|z| z.abs() > 1e6) {
                return Err(Error::NumericalAbort {
                    tau,
                    reason: "trajectory diverged during Lyapunov estimate".into(),
                });
            }
            if settings.project_flow {
                project_out_flow(&x, &mut v, params);
            }
            let n = normalize4(&mut v);
            if n == 0.0 {
                return Err(Error::NumericalAbort {
                    tau,
                    reason: "tangent vector collapsed".into(),
                });
            }
            log_sum += n.ln();
        }
        block_rates.push(log_sum / (per_block as f64 * interval));
    }
    let m = block_rates.len() as f64;
    let mean = block_rates.iter().sum::<f64>() / m;
    let var = block_rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(LyapunovEstimate {
        exponent: mean,
        stderr: (var / m).sqrt(),
        blocks: block_rates.len(),
        final_state: ClassicalState::from_vec(x, tau),
    })
}

fn tangent_rk4(x: &[f64; 4], v: &[f64; 4], dt: f64, p: &SystemParams) -> ([f64; 4], [f64; 4]) {
    let kx1 = rhs(x, p);
    let kv1 = jacobian_times(x, v, p);
    let x2 = axpy4(x, dt / 2.0, &kx1);
    let v2 = axpy4(v, dt / 2.0, &kv1);
    let kx2 = rhs(&x2, p);
    let kv2 = jacobian_times(&x2, &v2, p);
    let x3 = axpy4(x, dt / 2.0, &kx2);
    let v3 = axpy4(v, dt / 2.0, &kv2);
    let kx3 = rhs(&x3, p);
    let kv3 = jacobian_times(&x3, &v3, p);
    let x4 = axpy4(x, dt, &kx3);
    let v4 = axpy4(v, dt, &kv3);
    let kx4 = rhs(&x4, p);
    let kv4 = jacobian_times(&x4, &v4, p);
    let mut xo = *x;
    let mut vo = *v;
    for i in 0..4 {
        xo[i] += dt / 6.0 * (kx1[i] + 2.0 * kx2[i] + 2.0 * kx3[i] + kx4[i]);
        vo[i] += dt / 6.0 * (kv1[i] + 2.0 * kv2[i] + 2.0 * kv3[i] + kv4[i]);
    }
    (xo, vo)
}

fn project_out_flow(x: &[f64; 4], v: &mut [f64; 4], p: &SystemParams) {
    let f = rhs(x, p);
    let ff: f64 = f.iter().map(|z| z * z).sum();
    if ff < 1e-20 {
        return;
    }
    let vf: f64 = f.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    for i in 0..4 {
        v[i] -= vf / ff * f[i];
    }
}

fn normalize4(v: &mut [f64; 4]) -> f64 {
    let n = v.iter().map(|z| z * z).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn format_state(s: &ClassicalState) -> String {
    format!("{:?} {:?} {:?} {:?} {:?}", s.q, s.p, s.alpha.re, s.alpha.im, s.tau)
}

/// Root-mean-square of `q` over samples.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64).sqrt()
}
