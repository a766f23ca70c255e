//! Displaced-Fock representation of a two-mode pure state.
//!
//! The physical state is `e^{iφ} D_a(c_a) D_b(c_b) Σ coeffs |i⟩|j⟩`. Operators
//! are shifted (`a → a + c_a`, `b → b + c_b`) instead of the state, and the
//! centers follow the state's phase-space mean through [`recenter`].

use std::cell::{Cell, RefCell};

use crate::error::{Error, Result};
use crate::fock_ops::{
    apply_product, boson_operators, displacement_entries, inner, normalize, tensor_embed, GaussianSign, HilbertConfig,
    Operator, StateVector, TwoModeLadder, C64,
};
use crate::model::{build_hamiltonian, SystemParams};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Recenter once an in-frame mean moves further than this.
pub const DEFAULT_RECENTER_TRIGGER: f64 = 0.1;

/// Production frame truncation.
pub const DEFAULT_FRAME_TRUNCATION: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub coeffs: Vec<C64>,
    pub center_a: C64,
    pub center_b: C64,
    /// Accumulated global phase φ.
    pub phase: f64,
    pub config: HilbertConfig,
}

impl FrameState {
    pub fn new(coeffs: Vec<C64>, center_a: C64, center_b: C64, config: HilbertConfig) -> Result<Self> {
        if coeffs.len() != config.dim() {
            return Err(Error::DimensionMismatch {
                expected: config.dim(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            center_a,
            center_b,
            phase: 0.0,
            config,
        })
    }

    /// Exact product coherent state `|c_a⟩|c_b⟩`: vacuum coefficients at the centers.
    pub fn coherent(config: HilbertConfig, center_a: C64, center_b: C64) -> Self {
        let mut coeffs = vec![ZERO; config.dim()];
        coeffs[0] = C64::new(1.0, 0.0);
        Self {
            coeffs,
            center_a,
            center_b,
            phase: 0.0,
            config,
        }
    }

    /// Undisplaced frame holding a fixed-basis state.
    pub fn fixed(psi: &StateVector) -> Self {
        Self {
            coeffs: psi.amplitudes.clone(),
            center_a: ZERO,
            center_b: ZERO,
            phase: 0.0,
            config: psi.config,
        }
    }

    pub fn norm(&self) -> f64 {
        crate::fock_ops::norm(&self.coeffs)
    }

    /// In-frame means `(⟨a⟩_frame, ⟨b⟩_frame)`.
    pub fn frame_means(&self) -> (C64, C64) {
        let (ea, eb) = TwoModeLadder::new(self.config).means(&self.coeffs);
        let n2 = inner(&self.coeffs, &self.coeffs).re;
        (ea / n2, eb / n2)
    }

    /// Physical means `(⟨a⟩, ⟨b⟩)`.
    pub fn means(&self) -> (C64, C64) {
        let (ea, eb) = self.frame_means();
        (ea + self.center_a, eb + self.center_b)
    }

    /// Physical `(⟨a†a⟩, ⟨b†b⟩)`, using `D†aD = a + c`.
    pub fn numbers(&self) -> (f64, f64) {
        let ladder = TwoModeLadder::new(self.config);
        let n2 = inner(&self.coeffs, &self.coeffs).re;
        let (na, nb) = ladder.numbers(&self.coeffs);
        let (ea, eb) = self.frame_means();
        let phys = |n: f64, e: C64, c: C64| n / n2 + 2.0 * (c.conj() * e).re + c.norm_sqr();
        (phys(na, ea, self.center_a), phys(nb, eb, self.center_b))
    }

    pub fn top_populations(&self) -> (f64, f64) {
        crate::fock_ops::top_populations(&self.config, &self.coeffs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecenterReport {
    pub shift_a: C64,
    pub shift_b: C64,
    /// Unitarity defect of the applied displacement on its trusted block.
    pub unitarity_defect: f64,
}

/// Moves each center by the corresponding shift, transforming the coefficients
/// with `D(−shift)` and accumulating the composition phase.
pub fn shift_by(fs: &FrameState, shift_a: C64, shift_b: C64) -> FrameState {
    let mut out = fs.clone();
    shift_in_place(&mut out, shift_a, shift_b);
    out
}

pub(crate) fn shift_in_place(fs: &mut FrameState, shift_a: C64, shift_b: C64) {
    let cfg = fs.config;
    let da = (shift_a != ZERO).then(|| displacement_entries(-shift_a, cfg.n_a, GaussianSign::Negative));
    let db = (shift_b != ZERO).then(|| displacement_entries(-shift_b, cfg.n_b, GaussianSign::Negative));
    if da.is_none() && db.is_none() {
        return;
    }
    apply_product(&cfg, da.as_ref(), db.as_ref(), &mut fs.coeffs);
    normalize(&mut fs.coeffs);
    // D(c) D(δ) = e^{i Im(c δ*)} D(c + δ)
    fs.phase += (fs.center_a * shift_a.conj()).im + (fs.center_b * shift_b.conj()).im;
    fs.center_a += shift_a;
    fs.center_b += shift_b;
}

/// Recenters both modes on the in-frame means.
pub fn recenter(fs: &FrameState) -> Result<FrameState> {
    let (da, db) = fs.frame_means();
    check_shift(fs.config, da, db)?;
    Ok(shift_by(fs, da, db))
}

/// Largest shift `|δ|² ≤ max_fraction · N` accepted by [`recenter`].
pub const MAX_SHIFT_FRACTION: f64 = 0.25;

fn check_shift(cfg: HilbertConfig, da: C64, db: C64) -> Result<()> {
    for (mode, d, n) in [('a', da, cfg.n_a), ('b', db, cfg.n_b)] {
        let limit = MAX_SHIFT_FRACTION * n as f64;
        if d.norm_sqr() > limit {
            return Err(Error::TruncationAlarm {
                tau: f64::NAN,
                mode,
                population: d.norm_sqr(),
                threshold: limit,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOperator {
    A,
    B,
    Hamiltonian,
    /// `√κ a` (index 0) or `√Γ_m b` (index 1).
    Lindblad(usize),
}

/// Dense operator in the frame of `fs`, obtained by `a → a + c_a`, `b → b + c_b`.
pub fn displaced_operator(which: FrameOperator, fs: &FrameState, params: &SystemParams) -> Result<Operator> {
    let cfg = fs.config;
    let shifted = |n: usize, c: C64| -> Result<Operator> {
        let ops = boson_operators(n)?;
        Ok(&ops.a + &Operator::identity(n + 1).scale(c))
    };
    let id_a = Operator::identity(cfg.dim_a());
    let id_b = Operator::identity(cfg.dim_b());
    match which {
        FrameOperator::A => tensor_embed(&cfg, &shifted(cfg.n_a, fs.center_a)?, &id_b),
        FrameOperator::B => tensor_embed(&cfg, &id_a, &shifted(cfg.n_b, fs.center_b)?),
        FrameOperator::Hamiltonian => build_hamiltonian(params, &cfg, Some((fs.center_a, fs.center_b))),
        FrameOperator::Lindblad(0) => {
            Ok(tensor_embed(&cfg, &shifted(cfg.n_a, fs.center_a)?, &id_b)?.scale(C64::new(params.kappa.sqrt(), 0.0)))
        }
        FrameOperator::Lindblad(1) => {
            Ok(tensor_embed(&cfg, &id_a, &shifted(cfg.n_b, fs.center_b)?)?.scale(C64::new(params.gamma_m.sqrt(), 0.0)))
        }
        FrameOperator::Lindblad(j) => Err(Error::InvalidArgument(format!("no Lindblad channel {j}"))),
    }
}

/// Expresses the frame state in an undisplaced truncation `fixed`.
pub fn to_fixed_basis(fs: &FrameState, fixed: HilbertConfig, alarm_threshold: f64) -> Result<StateVector> {
    if fixed.n_a < fs.config.n_a || fixed.n_b < fs.config.n_b {
        return Err(Error::InvalidTruncation("fixed truncation smaller than the frame".into()));
    }
    let mut amps = vec![ZERO; fixed.dim()];
    for i in 0..fs.config.dim_a() {
        for j in 0..fs.config.dim_b() {
            amps[fixed.index(i, j)] = fs.coeffs[fs.config.index(i, j)];
        }
    }
    let da = displacement_entries(fs.center_a, fixed.n_a, GaussianSign::Negative);
    let db = displacement_entries(fs.center_b, fixed.n_b, GaussianSign::Negative);
    apply_product(&fixed, Some(&da), Some(&db), &mut amps);
    let phase = C64::from_polar(1.0, fs.phase);
    amps.iter_mut().for_each(|z| *z *= phase);
    let psi = StateVector::new(amps, fixed)?;
    let (ta, tb) = psi.top_populations();
    let loss = (1.0 - psi.norm() / fs.norm()).abs();
    for (mode, pop) in [('a', ta), ('b', tb), ('n', loss)] {
        if pop > alarm_threshold {
            return Err(Error::TruncationAlarm {
                tau: f64::NAN,
                mode,
                population: pop,
                threshold: alarm_threshold,
            });
        }
    }
    Ok(psi)
}

/// Inverse of [`to_fixed_basis`]: displaces a fixed-basis state to `centers`
/// (its own means when `None`) and projects onto the frame truncation.
pub fn from_fixed_basis(psi: &StateVector, frame: HilbertConfig, centers: Option<(C64, C64)>) -> Result<FrameState> {
    let fixed = psi.config;
    if fixed.n_a < frame.n_a || fixed.n_b < frame.n_b {
        return Err(Error::InvalidTruncation("frame truncation larger than the fixed basis".into()));
    }
    let (ca, cb) = match centers {
        Some(c) => c,
        None => {
            let (ea, eb) = TwoModeLadder::new(fixed).means(&psi.amplitudes);
            let n2 = psi.norm().powi(2);
            (ea / n2, eb / n2)
        }
    };
    let mut amps = psi.amplitudes.clone();
    let da = displacement_entries(-ca, fixed.n_a, GaussianSign::Negative);
    let db = displacement_entries(-cb, fixed.n_b, GaussianSign::Negative);
    apply_product(&fixed, Some(&da), Some(&db), &mut amps);
    let mut coeffs = vec![ZERO; frame.dim()];
    for i in 0..frame.dim_a() {
        for j in 0..frame.dim_b() {
            coeffs[frame.index(i, j)] = amps[fixed.index(i, j)];
        }
    }
    Ok(FrameState {
        coeffs,
        center_a: ca,
        center_b: cb,
        phase: 0.0,
        config: frame,
    })
}

/// Two-mode open system in a displaced frame, applied through ladder kernels.
///
/// The c-number part of the shifted Hamiltonian is split off as
/// [`FrameSystem::energy_offset`] and enters only the global phase. The frame
/// may also translate at a constant velocity `v` during a step, with centers
/// `c + v·s` at stage offset `s`; the generator then carries the extra
/// Hermitian term `−i(v a† − v* a)` so the physical state is unchanged.
#[derive(Debug, Clone)]
pub struct FrameSystem {
    params: SystemParams,
    ladder: TwoModeLadder,
    center_a: C64,
    center_b: C64,
    vel_a: C64,
    vel_b: C64,
    stage: Cell<f64>,
    scratch: RefCell<Vec<C64>>,
}

impl FrameSystem {
    pub fn new(params: SystemParams, config: HilbertConfig, center_a: C64, center_b: C64) -> Self {
        Self {
            params,
            ladder: TwoModeLadder::new(config),
            center_a,
            center_b,
            vel_a: ZERO,
            vel_b: ZERO,
            stage: Cell::new(0.0),
            scratch: RefCell::new(vec![ZERO; config.dim()]),
        }
    }

    pub fn for_frame(params: SystemParams, fs: &FrameState) -> Self {
        Self::new(params, fs.config, fs.center_a, fs.center_b)
    }

    pub fn set_centers(&mut self, center_a: C64, center_b: C64) {
        self.center_a = center_a;
        self.center_b = center_b;
    }

    pub fn set_velocity(&mut self, vel_a: C64, vel_b: C64) {
        self.vel_a = vel_a;
        self.vel_b = vel_b;
    }

    pub fn velocity(&self) -> (C64, C64) {
        (self.vel_a, self.vel_b)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Centers at the current stage offset.
    pub fn centers(&self) -> (C64, C64) {
        let s = self.stage.get();
        (self.center_a + self.vel_a * s, self.center_b + self.vel_b * s)
    }

    /// Identity coefficient of the shifted Hamiltonian at the current stage.
    pub fn energy_offset(&self) -> f64 {
        let p = &self.params;
        let (ca, cb) = self.centers();
        let na0 = ca.norm_sqr();
        let x0 = 2.0 * cb.re;
        -p.delta0 * na0 - p.g0 * na0 * x0 + cb.norm_sqr() + 2.0 * p.alpha_l * ca.re
    }

    /// `out += c · (a†a + c_a a† + c_a* a) ψ`
    fn add_shifted_number_a(&self, c: C64, ca: C64, psi: &[C64], out: &mut [C64]) {
        self.ladder.add_n_a(c, psi, out);
        self.ladder.add_a_dag(c * ca, psi, out);
        self.ladder.add_a(c * ca.conj(), psi, out);
    }

    fn add_shifted_number_b(&self, c: C64, cb: C64, psi: &[C64], out: &mut [C64]) {
        self.ladder.add_n_b(c, psi, out);
        self.ladder.add_b_dag(c * cb, psi, out);
        self.ladder.add_b(c * cb.conj(), psi, out);
    }
}

impl crate::engines::QuantumSystem for FrameSystem {
    fn config(&self) -> HilbertConfig {
        self.ladder.config()
    }

    fn set_stage(&self, s: f64) {
        self.stage.set(s);
    }

    fn hamiltonian(&self, psi: &[C64], out: &mut [C64]) {
        let p = &self.params;
        let one = C64::new(1.0, 0.0);
        let (ca, cb) = self.centers();
        let na0 = ca.norm_sqr();
        let x0 = 2.0 * cb.re;
        let mut u = self.scratch.borrow_mut();
        u.iter_mut().for_each(|z| *z = ZERO);
        self.add_shifted_number_a(one, ca, psi, &mut u);

        let lin = C64::new(-p.delta0 - p.g0 * x0, 0.0);
        for (o, x) in out.iter_mut().zip(u.iter()) {
            *o = lin * x;
        }
        let mg = C64::new(-p.g0, 0.0);
        self.ladder.add_b(mg, &u, out);
        self.ladder.add_b_dag(mg, &u, out);
        // linear terms in b, b† from the shifted coupling, mode energy and frame motion
        let lin_b = cb - p.g0 * na0 - I * self.vel_b;
        self.ladder.add_n_b(one, psi, out);
        self.ladder.add_b_dag(lin_b, psi, out);
        self.ladder.add_b(lin_b.conj(), psi, out);
        let lin_a = C64::new(p.alpha_l, 0.0) - I * self.vel_a;
        self.ladder.add_a_dag(lin_a, psi, out);
        self.ladder.add_a(lin_a.conj(), psi, out);
    }

    fn channel_count(&self) -> usize {
        2
    }

    fn channel(&self, j: usize, psi: &[C64], out: &mut [C64]) {
        let (ca, cb) = self.centers();
        let (rate, center) = match j {
            0 => (self.params.kappa, ca),
            _ => (self.params.gamma_m, cb),
        };
        let s = rate.sqrt();
        for (o, x) in out.iter_mut().zip(psi) {
            *o = x * center * s;
        }
        let c = C64::new(s, 0.0);
        if j == 0 {
            self.ladder.add_a(c, psi, out);
        } else {
            self.ladder.add_b(c, psi, out);
        }
    }

    fn channel_number(&self, j: usize, psi: &[C64], out: &mut [C64]) {
        let (ca, cb) = self.centers();
        let (rate, center) = match j {
            0 => (self.params.kappa, ca),
            _ => (self.params.gamma_m, cb),
        };
        let k = rate * center.norm_sqr();
        for (o, x) in out.iter_mut().zip(psi) {
            *o = x * k;
        }
        let c = C64::new(rate, 0.0);
        if j == 0 {
            self.add_shifted_number_a(c, ca, psi, out);
        } else {
            self.add_shifted_number_b(c, cb, psi, out);
        }
    }

    fn energy_offset(&self) -> f64 {
        FrameSystem::energy_offset(self)
    }
}
