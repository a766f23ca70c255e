//! Stochastic pure-state unravellings: quantum state diffusion in Itô and
//! Stratonovich form, and quantum jumps.
//!
//! All engines act on a [`QuantumSystem`], which supplies `Hψ`, `Lⱼψ` and
//! `Lⱼ†Lⱼψ`. [`DenseSystem`] wraps explicit matrices; the production path uses
//! the ladder-kernel [`FrameSystem`] in a displaced frame.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_ops::{boson_operators, inner, normalize, tensor_embed, HilbertConfig, Operator, StateVector, C64};
use crate::classical::mean_field_rhs_unscaled;
use crate::model::{observables, SystemParams};
use crate::moving_basis::{shift_in_place, FrameState, FrameSystem, DEFAULT_RECENTER_TRIGGER};
use crate::record::{RecordHeader, Sample, TrajectoryRecord};
use crate::rng::{complex_increment, StreamRng};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub trait QuantumSystem {
    fn config(&self) -> HilbertConfig;
    /// `out = Hψ`
    fn hamiltonian(&self, psi: &[C64], out: &mut [C64]);
    fn channel_count(&self) -> usize;
    /// `out = Lⱼψ`
    fn channel(&self, j: usize, psi: &[C64], out: &mut [C64]);
    /// `out = Lⱼ†Lⱼψ`
    fn channel_number(&self, j: usize, psi: &[C64], out: &mut [C64]);
    /// c-number removed from `H`; it only rotates the global phase.
    fn energy_offset(&self) -> f64 {
        0.0
    }
    /// Time offset within the current step, for systems whose generator moves.
    fn set_stage(&self, _s: f64) {}
}

/// Explicit-matrix system with `L₁ = √κ a`, `L₂ = √Γ_m b`.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    cfg: HilbertConfig,
    h: Operator,
    channels: Vec<Operator>,
    numbers: Vec<Operator>,
}

impl DenseSystem {
    pub fn new(params: &SystemParams, cfg: HilbertConfig, h: Operator) -> Result<Self> {
        if h.dim() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: h.dim(),
            });
        }
        let a = tensor_embed(&cfg, &boson_operators(cfg.n_a)?.a, &Operator::identity(cfg.dim_b()))?;
        let b = tensor_embed(&cfg, &Operator::identity(cfg.dim_a()), &boson_operators(cfg.n_b)?.a)?;
        Self::with_channels(cfg, h, vec![&a * params.kappa.sqrt(), &b * params.gamma_m.sqrt()])
    }

    pub fn with_channels(cfg: HilbertConfig, h: Operator, channels: Vec<Operator>) -> Result<Self> {
        let numbers = channels
            .iter()
            .map(|l| l.adjoint().matmul(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            h,
            channels,
            numbers,
        })
    }

    pub fn hamiltonian_operator(&self) -> &Operator {
        &self.h
    }

    pub fn channel_operators(&self) -> &[Operator] {
        &self.channels
    }
}

impl QuantumSystem for DenseSystem {
    fn config(&self) -> HilbertConfig {
        self.cfg
    }
    fn hamiltonian(&self, psi: &[C64], out: &mut [C64]) {
        self.h.apply_into(psi, out);
    }
    fn channel_count(&self) -> usize {
        self.channels.len()
    }
    fn channel(&self, j: usize, psi: &[C64], out: &mut [C64]) {
        self.channels[j].apply_into(psi, out);
    }
    fn channel_number(&self, j: usize, psi: &[C64], out: &mut [C64]) {
        self.numbers[j].apply_into(psi, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Itô QSD: RK4 on the drift, Euler–Maruyama noise.
    Ito,
    /// Stratonovich QSD with a Heun predictor–corrector.
    StratonovichHeun,
    /// Quantum jumps with an RK4 no-jump evolution.
    Jump,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ito => "qsd_ito",
            Scheme::StratonovichHeun => "qsd_stratonovich",
            Scheme::Jump => "jump",
        }
    }
}

/// Top-level population that aborts a trajectory. The chaotic wavepacket at
/// g0 = 0.1 keeps about 1e-5 in level 24 of the co-moving frame, so a tighter
/// default would force a much larger frame for no change in the means.
pub const DEFAULT_TRUNCATION_ALARM: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Renormalize after every `k` steps.
    pub renormalize_every: usize,
    /// Largest tolerated population in the top Fock level of either mode.
    pub truncation_alarm: f64,
    /// Draw noise; `false` gives the deterministic drift only.
    pub noise: bool,
}

impl EngineConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            dt,
            renormalize_every: 1,
            truncation_alarm: DEFAULT_TRUNCATION_ALARM,
            noise: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.renormalize_every == 0 {
            return Err(Error::InvalidArgument("renormalize_every must be at least 1".into()));
        }
        if !(self.truncation_alarm > 0.0) {
            return Err(Error::InvalidArgument("truncation_alarm must be positive".into()));
        }
        Ok(())
    }
}

/// Complex Wiener increments, one per Lindblad channel.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdNoiseIncrement(pub Vec<C64>);

impl QsdNoiseIncrement {
    pub fn zero(channels: usize) -> Self {
        Self(vec![ZERO; channels])
    }

    pub fn draw<R: Rng>(rng: &mut R, channels: usize, dt: f64) -> Self {
        Self((0..channels).map(|_| complex_increment(rng, dt)).collect())
    }
}

/// Scratch space reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
    h: Vec<C64>,
    l: Vec<Vec<C64>>,
    ldl: Vec<C64>,
    g0: Vec<Vec<C64>>,
}

impl Workspace {
    pub fn new(dim: usize, channels: usize) -> Self {
        let v = || vec![ZERO; dim];
        Self {
            k: [v(), v(), v(), v()],
            stage: v(),
            h: v(),
            l: (0..channels).map(|_| v()).collect(),
            ldl: v(),
            g0: (0..channels).map(|_| v()).collect(),
        }
    }

    pub fn for_system<S: QuantumSystem + ?Sized>(sys: &S) -> Self {
        Self::new(sys.config().dim(), sys.channel_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Drift {
    Ito,
    Stratonovich,
    NoJump,
}

/// Writes the drift of `kind` at `psi` into `out` and leaves `Lⱼψ` in `ws.l`.
/// Expectations use the normalized state.
fn drift<S: QuantumSystem + ?Sized>(kind: Drift, sys: &S, psi: &[C64], out: &mut [C64], ws: &mut Workspace) {
    let n2 = inner(psi, psi).re;
    sys.hamiltonian(psi, &mut ws.h);
    for (o, h) in out.iter_mut().zip(&ws.h) {
        *o = -I * h;
    }
    for j in 0..sys.channel_count() {
        sys.channel_number(j, psi, &mut ws.ldl);
        let ldl_mean = inner(psi, &ws.ldl).re / n2;
        match kind {
            Drift::NoJump => {
                for ((o, x), m) in out.iter_mut().zip(psi).zip(&ws.ldl) {
                    *o += 0.5 * (x * ldl_mean - m);
                }
            }
            Drift::Ito | Drift::Stratonovich => {
                let l = &mut ws.l[j];
                sys.channel(j, psi, l);
                let ell = inner(psi, l) / n2;
                if kind == Drift::Ito {
                    // ⟨L⟩* Lψ − ½ L†Lψ − ½|⟨L⟩|² ψ
                    let c_psi = -0.5 * ell.norm_sqr();
                    let lc = ell.conj();
                    for (((o, x), lx), m) in out.iter_mut().zip(psi).zip(l.iter()).zip(&ws.ldl) {
                        *o += lc * lx - 0.5 * m + x * c_psi;
                    }
                } else {
                    // ⟨L†⟩(L − ⟨L⟩)ψ − ½(L†L − ⟨L†L⟩)ψ
                    let lc = ell.conj();
                    let c_psi = -lc * ell + 0.5 * ldl_mean;
                    for (((o, x), lx), m) in out.iter_mut().zip(psi).zip(l.iter()).zip(&ws.ldl) {
                        *o += lc * lx - 0.5 * m + x * c_psi;
                    }
                }
            }
        }
    }
}

fn rk4<S: QuantumSystem + ?Sized>(kind: Drift, sys: &S, psi: &mut [C64], dt: f64, ws: &mut Workspace) {
    let mut k = std::mem::take(&mut ws.k);
    let mut stage = std::mem::take(&mut ws.stage);
    sys.set_stage(0.0);
    drift(kind, sys, psi, &mut k[0], ws);
    for (s, (x, d)) in stage.iter_mut().zip(psi.iter().zip(&k[0])) {
        *s = x + d * (0.5 * dt);
    }
    let (k0, rest) = k.split_at_mut(1);
    sys.set_stage(0.5 * dt);
    drift(kind, sys, &stage, &mut rest[0], ws);
    for (s, (x, d)) in stage.iter_mut().zip(psi.iter().zip(&rest[0])) {
        *s = x + d * (0.5 * dt);
    }
    drift(kind, sys, &stage, &mut rest[1], ws);
    for (s, (x, d)) in stage.iter_mut().zip(psi.iter().zip(&rest[1])) {
        *s = x + d * dt;
    }
    sys.set_stage(dt);
    drift(kind, sys, &stage, &mut rest[2], ws);
    sys.set_stage(0.0);
    let w = dt / 6.0;
    for (idx, x) in psi.iter_mut().enumerate() {
        *x += (k0[0][idx] + 2.0 * rest[0][idx] + 2.0 * rest[1][idx] + rest[2][idx]) * w;
    }
    ws.k = k;
    ws.stage = stage;
}

/// Outcome of one engine step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Norm before renormalization.
    pub norm: f64,
    /// Channel that fired, for jump steps.
    pub jump: Option<usize>,
}

/// One Itô or Stratonovich QSD step on a raw amplitude slice.
pub fn qsd_step_raw<S: QuantumSystem + ?Sized>(
    sys: &S,
    psi: &mut [C64],
    noise: &QsdNoiseIncrement,
    scheme: Scheme,
    dt: f64,
    renormalize: bool,
    ws: &mut Workspace,
) -> StepInfo {
    debug_assert_eq!(noise.0.len(), sys.channel_count());
    match scheme {
        Scheme::Ito | Scheme::Jump => {
            // noise first, then the drift carries it along; in a co-moving frame
            // this keeps the increment in the coordinates of the end-of-step frame
            if noise.0.iter().any(|d| *d != ZERO) {
                sys.set_stage(0.0);
                let n2 = inner(psi, psi).re;
                let mut incr = std::mem::take(&mut ws.k[0]);
                incr.iter_mut().for_each(|z| *z = ZERO);
                for (j, dxi) in noise.0.iter().enumerate() {
                    if *dxi == ZERO {
                        continue;
                    }
                    sys.channel(j, psi, &mut ws.l[j]);
                    let ell = inner(psi, &ws.l[j]) / n2;
                    for ((g, l), x) in incr.iter_mut().zip(&ws.l[j]).zip(psi.iter()) {
                        *g += (l - x * ell) * dxi;
                    }
                }
                for (x, g) in psi.iter_mut().zip(&incr) {
                    *x += g;
                }
                ws.k[0] = incr;
            }
            rk4(Drift::Ito, sys, psi, dt, ws);
        }
        Scheme::StratonovichHeun => {
            let mut f0 = std::mem::take(&mut ws.k[0]);
            let mut pred = std::mem::take(&mut ws.k[1]);
            let mut f1 = std::mem::take(&mut ws.k[2]);
            sys.set_stage(0.0);
            drift(Drift::Stratonovich, sys, psi, &mut f0, ws);
            let n2 = inner(psi, psi).re;
            for j in 0..noise.0.len() {
                let ell = inner(psi, &ws.l[j]) / n2;
                for ((g, l), x) in ws.g0[j].iter_mut().zip(&ws.l[j]).zip(psi.iter()) {
                    *g = l - x * ell;
                }
            }
            for (idx, p) in pred.iter_mut().enumerate() {
                let mut v = psi[idx] + f0[idx] * dt;
                for (j, dxi) in noise.0.iter().enumerate() {
                    v += ws.g0[j][idx] * dxi;
                }
                *p = v;
            }
            sys.set_stage(dt);
            drift(Drift::Stratonovich, sys, &pred, &mut f1, ws);
            sys.set_stage(0.0);
            let m2 = inner(&pred, &pred).re;
            for (j, dxi) in noise.0.iter().enumerate() {
                let ell = inner(&pred, &ws.l[j]) / m2;
                for (idx, x) in psi.iter_mut().enumerate() {
                    let g1 = ws.l[j][idx] - pred[idx] * ell;
                    *x += 0.5 * (ws.g0[j][idx] + g1) * dxi;
                }
            }
            for (idx, x) in psi.iter_mut().enumerate() {
                *x += 0.5 * (f0[idx] + f1[idx]) * dt;
            }
            ws.k[0] = f0;
            ws.k[1] = pred;
            ws.k[2] = f1;
        }
    }
    let norm = crate::fock_ops::norm(psi);
    if renormalize {
        normalize(psi);
    }
    StepInfo { norm, jump: None }
}

/// One jump-unravelling step; `uniforms[j]` decides whether channel `j` fires.
pub fn jump_step_raw<S: QuantumSystem + ?Sized>(
    sys: &S,
    psi: &mut [C64],
    uniforms: &[f64],
    dt: f64,
    renormalize: bool,
    ws: &mut Workspace,
) -> StepInfo {
    let n2 = inner(psi, psi).re;
    let mut fired = None;
    for j in 0..sys.channel_count() {
        sys.channel_number(j, psi, &mut ws.ldl);
        let p = inner(psi, &ws.ldl).re / n2 * dt;
        if uniforms[j] < p {
            fired = Some(j);
            break;
        }
    }
    if let Some(j) = fired {
        sys.channel(j, psi, &mut ws.h);
        psi.copy_from_slice(&ws.h);
        let norm = normalize(psi);
        return StepInfo { norm, jump: Some(j) };
    }
    rk4(Drift::NoJump, sys, psi, dt, ws);
    let norm = crate::fock_ops::norm(psi);
    if renormalize {
        normalize(psi);
    }
    StepInfo { norm, jump: None }
}

fn check_state(v: &[C64], tau: f64) -> Result<()> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalAbort {
            tau,
            reason: "non-finite amplitude".into(),
        });
    }
    Ok(())
}

/// Dense-matrix QSD step on a [`StateVector`].
pub fn qsd_step(
    psi: &StateVector,
    params: &SystemParams,
    h: &Operator,
    noise: &QsdNoiseIncrement,
    cfg: &EngineConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    let sys = DenseSystem::new(params, psi.config, h.clone())?;
    if noise.0.len() != sys.channel_count() {
        return Err(Error::DimensionMismatch {
            expected: sys.channel_count(),
            got: noise.0.len(),
        });
    }
    let mut ws = Workspace::for_system(&sys);
    let mut out = psi.clone();
    let scheme = if cfg.scheme == Scheme::Jump { Scheme::Ito } else { cfg.scheme };
    qsd_step_raw(&sys, &mut out.amplitudes, noise, scheme, cfg.dt, true, &mut ws);
    check_state(&out.amplitudes, f64::NAN)?;
    Ok(out)
}

/// Noise-free QSD step.
pub fn qsd_deterministic_step(psi: &StateVector, params: &SystemParams, h: &Operator, cfg: &EngineConfig) -> Result<StateVector> {
    qsd_step(psi, params, h, &QsdNoiseIncrement::zero(2), cfg)
}

/// Dense-matrix jump step with explicit uniforms.
pub fn jump_step(
    psi: &StateVector,
    params: &SystemParams,
    h: &Operator,
    uniforms: &[f64],
    cfg: &EngineConfig,
) -> Result<(StateVector, Option<usize>)> {
    cfg.validate()?;
    let sys = DenseSystem::new(params, psi.config, h.clone())?;
    if uniforms.len() != sys.channel_count() {
        return Err(Error::DimensionMismatch {
            expected: sys.channel_count(),
            got: uniforms.len(),
        });
    }
    let mut ws = Workspace::for_system(&sys);
    let mut out = psi.clone();
    let info = jump_step_raw(&sys, &mut out.amplitudes, uniforms, cfg.dt, true, &mut ws);
    check_state(&out.amplitudes, f64::NAN)?;
    Ok((out, info.jump))
}

/// How the frame follows the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Basis {
    /// Centers stay where they are.
    Fixed,
    /// Recenter a mode once its in-frame mean exceeds `trigger`. With
    /// `comoving`, the centers also follow the mean-field velocity of the
    /// current means during each step.
    Moving { trigger: f64, comoving: bool },
}

impl Basis {
    pub fn moving() -> Self {
        Basis::Moving {
            trigger: DEFAULT_RECENTER_TRIGGER,
            comoving: true,
        }
    }
}

/// A single stochastic trajectory that can be stepped, sampled and checkpointed.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) frame: FrameState,
    pub(crate) system: FrameSystem,
    pub(crate) engine: EngineConfig,
    pub(crate) basis: Basis,
    pub(crate) rng: StreamRng,
    pub(crate) seed: u64,
    pub(crate) index: u64,
    pub(crate) steps: u64,
    pub(crate) last_norm: f64,
    pub(crate) recenterings: u64,
    pub(crate) jumps: u64,
    pub(crate) ws: Workspace,
}

impl Trajectory {
    pub fn new(
        init: FrameState,
        params: SystemParams,
        engine: EngineConfig,
        basis: Basis,
        seed: u64,
        index: u64,
    ) -> Result<Self> {
        engine.validate()?;
        if let Basis::Moving { trigger, .. } = basis {
            if !(trigger > 0.0) {
                return Err(Error::InvalidArgument("recenter trigger must be positive".into()));
            }
        }
        let system = FrameSystem::for_frame(params, &init);
        let ws = Workspace::for_system(&system);
        let mut frame = init;
        normalize(&mut frame.coeffs);
        Ok(Self {
            frame,
            system,
            engine,
            basis,
            rng: crate::rng::stream(seed, index),
            seed,
            index,
            steps: 0,
            last_norm: 1.0,
            recenterings: 0,
            jumps: 0,
            ws,
        })
    }

    pub fn tau(&self) -> f64 {
        self.steps as f64 * self.engine.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn frame(&self) -> &FrameState {
        &self.frame
    }

    pub fn params(&self) -> &SystemParams {
        self.system.params()
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    pub fn recenterings(&self) -> u64 {
        self.recenterings
    }

    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.engine.dt;
        let renorm = (self.steps + 1) % self.engine.renormalize_every as u64 == 0;
        let channels = 2;
        let (va, vb) = match self.basis {
            Basis::Moving { comoving: true, .. } => {
                let (ma, mb) = self.frame.means();
                mean_field_rhs_unscaled(ma, mb, self.system.params())
            }
            _ => (ZERO, ZERO),
        };
        self.system.set_velocity(va, vb);
        // phase rate −E0(c(s)) + Im(c v*); E0 is cubic in s, so Simpson is exact
        let e0 = |s: f64| {
            self.system.set_stage(s);
            self.system.energy_offset()
        };
        let phase_rate = -(e0(0.0) + 4.0 * e0(0.5 * dt) + e0(dt)) / 6.0
            + (self.frame.center_a * va.conj()).im
            + (self.frame.center_b * vb.conj()).im;
        self.system.set_stage(0.0);
        let info = match self.engine.scheme {
            Scheme::Jump => {
                let u: [f64; 2] = if self.engine.noise {
                    [self.rng.gen(), self.rng.gen()]
                } else {
                    [1.0, 1.0]
                };
                jump_step_raw(&self.system, &mut self.frame.coeffs, &u, dt, renorm, &mut self.ws)
            }
            scheme => {
                let noise = if self.engine.noise {
                    QsdNoiseIncrement::draw(&mut self.rng, channels, dt)
                } else {
                    QsdNoiseIncrement::zero(channels)
                };
                qsd_step_raw(&self.system, &mut self.frame.coeffs, &noise, scheme, dt, renorm, &mut self.ws)
            }
        };
        self.steps += 1;
        // a fired jump replaces the continuous evolution, so the frame stays put
        if info.jump.is_none() {
            self.frame.phase += phase_rate * dt;
            self.frame.center_a += va * dt;
            self.frame.center_b += vb * dt;
            self.system.set_centers(self.frame.center_a, self.frame.center_b);
        }
        self.last_norm = info.norm;
        if info.jump.is_some() {
            self.jumps += 1;
        }
        let tau = self.tau();
        if !info.norm.is_finite() || info.norm == 0.0 {
            return Err(Error::NumericalAbort {
                tau,
                reason: format!("state norm became {}", info.norm),
            });
        }
        check_state(&self.frame.coeffs, tau)?;
        if let Basis::Moving { trigger, .. } = self.basis {
            let (ma, mb) = self.frame.frame_means();
            let da = if ma.norm() > trigger { ma } else { ZERO };
            let db = if mb.norm() > trigger { mb } else { ZERO };
            if da != ZERO || db != ZERO {
                let cfg = self.frame.config;
                for (mode, d, n) in [('a', da, cfg.n_a), ('b', db, cfg.n_b)] {
                    let limit = crate::moving_basis::MAX_SHIFT_FRACTION * n as f64;
                    if d.norm_sqr() > limit {
                        return Err(Error::TruncationAlarm {
                            tau,
                            mode,
                            population: d.norm_sqr(),
                            threshold: limit,
                        });
                    }
                }
                shift_in_place(&mut self.frame, da, db);
                self.system.set_centers(self.frame.center_a, self.frame.center_b);
                self.recenterings += 1;
            }
        }
        let (ta, tb) = self.frame.top_populations();
        let n2 = self.last_norm.powi(2).max(f64::MIN_POSITIVE);
        let (ta, tb) = if renorm { (ta, tb) } else { (ta / n2, tb / n2) };
        for (mode, pop) in [('a', ta), ('b', tb)] {
            if pop > self.engine.truncation_alarm {
                return Err(Error::TruncationAlarm {
                    tau,
                    mode,
                    population: pop,
                    threshold: self.engine.truncation_alarm,
                });
            }
        }
        Ok(())
    }

    pub fn sample(&self) -> Sample {
        let (ma, mb) = self.frame.means();
        let pt = observables(ma, mb, self.system.params(), self.tau());
        let (ta, tb) = self.frame.top_populations();
        let n2 = self.frame.norm().powi(2);
        Sample {
            tau: self.tau(),
            q: pt.q,
            p: pt.p,
            alpha_abs2: pt.alpha.norm_sqr(),
            norm: self.last_norm,
            center_a: self.frame.center_a,
            center_b: self.frame.center_b,
            top_a: ta / n2,
            top_b: tb / n2,
        }
    }

    pub fn header(&self) -> RecordHeader {
        let mut h = RecordHeader::new(self.engine.scheme.as_str(), *self.system.params(), self.engine.dt);
        h.seed = Some(self.seed);
        h.trajectory = self.index;
        h.truncation = Some((self.frame.config.n_a, self.frame.config.n_b));
        let basis = match self.basis {
            Basis::Fixed => "fixed".to_string(),
            Basis::Moving { trigger, comoving } => format!("moving(trigger={trigger}, comoving={comoving})"),
        };
        h.with("basis", basis)
            .with("renormalize_every", self.engine.renormalize_every)
            .with("noise", self.engine.noise)
    }
}

/// Whether a trajectory observer wants the run to continue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Steps to `horizon`, calling `observe` on every `stride`-th sample (and the
/// initial one). Returns the number of steps taken.
pub fn drive<F: FnMut(&Sample) -> Control>(
    traj: &mut Trajectory,
    horizon: f64,
    stride: usize,
    mut observe: F,
) -> Result<u64> {
    let stride = stride.max(1) as u64;
    let total = (horizon / traj.engine.dt).round() as u64;
    if traj.steps == 0 && observe(&traj.sample()) == Control::Stop {
        return Ok(0);
    }
    let start = traj.steps;
    while traj.steps < total {
        traj.step()?;
        if traj.steps % stride == 0 && observe(&traj.sample()) == Control::Stop {
            break;
        }
    }
    Ok(traj.steps - start)
}

/// Runs one trajectory to `horizon` and returns every `stride`-th sample.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory(
    init: FrameState,
    params: SystemParams,
    engine: EngineConfig,
    basis: Basis,
    seed: u64,
    index: u64,
    horizon: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    let mut traj = Trajectory::new(init, params, engine, basis, seed, index)?;
    let mut rec = TrajectoryRecord::new(traj.header());
    drive(&mut traj, horizon, stride, |s| {
        rec.push(*s);
        Control::Continue
    })?;
    Ok(rec)
}
