//! Dense Lindblad master equation for small truncations.
//!
//! `dρ/dτ = −i[H, ρ] + κ D[a]ρ + Γ_m D[b]ρ` with
//! `D[L]ρ = LρL† − ½(L†Lρ + ρL†L)`. This is the reference every unravelling is
//! checked against; it is only affordable while `dim²` stays small.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock_ops::{boson_operators, tensor_embed, HilbertConfig, Operator, StateVector, C64};
use crate::model::SystemParams;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Largest Hilbert-space dimension accepted by the integrator.
pub const MAX_MASTER_DIM: usize = 144;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: Operator,
}

impl DensityMatrix {
    pub fn new(entries: Operator) -> Self {
        Self { entries }
    }

    pub fn pure(psi: &StateVector) -> Self {
        let v = &psi.amplitudes;
        let n2 = crate::fock_ops::inner(v, v).re;
        Self {
            entries: Operator::from_fn(v.len(), |r, c| v[r] * v[c].conj() / n2),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut acc = ZERO;
        for r in 0..d {
            for c in 0..d {
                acc += self.entries[(r, c)] * self.entries[(c, r)];
            }
        }
        acc.re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.entries.hermiticity_defect()
    }

    /// `Tr(ρ O)`
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        let d = self.dim();
        let mut acc = ZERO;
        for r in 0..d {
            for c in 0..d {
                acc += self.entries[(r, c)] * op[(c, r)];
            }
        }
        Ok(acc)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `½ Tr|ρ − σ|`
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = &self.entries - &other.entries;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
    }
}

fn to_dmatrix(op: &Operator) -> DMatrix<C64> {
    let d = op.dim();
    DMatrix::from_fn(d, d, |r, c| op[(r, c)])
}

fn hermitian_eigenvalues(op: &Operator) -> Vec<f64> {
    let m = to_dmatrix(op);
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Row-sparse view of an operator, used for the `O(nnz · dim)` products.
#[derive(Debug, Clone)]
struct SparseOp {
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    fn from_dense(op: &Operator) -> Self {
        let d = op.dim();
        Self {
            rows: (0..d)
                .map(|r| (0..d).filter_map(|c| (op[(r, c)] != ZERO).then(|| (c, op[(r, c)]))).collect())
                .collect(),
        }
    }

    /// `out += s · S X`
    fn left(&self, s: C64, x: &[C64], d: usize, out: &mut [C64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let o = &mut out[r * d..(r + 1) * d];
            for &(k, v) in row {
                let f = s * v;
                for (oo, xx) in o.iter_mut().zip(&x[k * d..(k + 1) * d]) {
                    *oo += f * xx;
                }
            }
        }
    }

    /// `out += s · X S`
    fn right(&self, s: C64, x: &[C64], d: usize, out: &mut [C64]) {
        for i in 0..d {
            let xr = &x[i * d..(i + 1) * d];
            let o = &mut out[i * d..(i + 1) * d];
            for (k, row) in self.rows.iter().enumerate() {
                let xv = s * xr[k];
                if xv == ZERO {
                    continue;
                }
                for &(j, v) in row {
                    o[j] += xv * v;
                }
            }
        }
    }

    /// `out += X S†`
    fn right_adjoint(&self, x: &[C64], d: usize, out: &mut [C64]) {
        for i in 0..d {
            let xr = &x[i * d..(i + 1) * d];
            let o = &mut out[i * d..(i + 1) * d];
            for (j, row) in self.rows.iter().enumerate() {
                o[j] += row.iter().fold(ZERO, |acc, &(k, v)| acc + xr[k] * v.conj());
            }
        }
    }
}

/// Precomputed generator for repeated right-hand-side evaluations.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    dim: usize,
    h: SparseOp,
    channels: Vec<SparseOp>,
    numbers: Vec<SparseOp>,
    scratch: std::cell::RefCell<Vec<C64>>,
}

impl Lindbladian {
    /// Channels `√κ a` and `√Γ_m b` on `cfg`.
    pub fn new(params: &SystemParams, cfg: &HilbertConfig, h: &Operator) -> Result<Self> {
        if h.dim() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: h.dim(),
            });
        }
        let a = tensor_embed(cfg, &boson_operators(cfg.n_a)?.a, &Operator::identity(cfg.dim_b()))?;
        let b = tensor_embed(cfg, &Operator::identity(cfg.dim_a()), &boson_operators(cfg.n_b)?.a)?;
        Self::with_channels(h, &[&a * params.kappa.sqrt(), &b * params.gamma_m.sqrt()])
    }

    pub fn with_channels(h: &Operator, channels: &[Operator]) -> Result<Self> {
        let dim = h.dim();
        let mut numbers = Vec::new();
        for l in channels {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.dim() });
            }
            numbers.push(SparseOp::from_dense(&l.adjoint().matmul(l)?));
        }
        Ok(Self {
            dim,
            h: SparseOp::from_dense(h),
            channels: channels.iter().map(SparseOp::from_dense).collect(),
            numbers,
            scratch: std::cell::RefCell::new(vec![ZERO; dim * dim]),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = L(ρ)` on row-major entries.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        self.h.left(-I, rho, d, out);
        self.h.right(I, rho, d, out);
        let mut tmp = self.scratch.borrow_mut();
        for (l, n) in self.channels.iter().zip(&self.numbers) {
            tmp.iter_mut().for_each(|z| *z = ZERO);
            l.left(C64::new(1.0, 0.0), rho, d, &mut tmp);
            l.right_adjoint(&tmp, d, out);
            n.left(C64::new(-0.5, 0.0), rho, d, out);
            n.right(C64::new(-0.5, 0.0), rho, d, out);
        }
    }
}

/// `dρ/dτ` for the two-mode model.
pub fn lindblad_rhs(rho: &DensityMatrix, params: &SystemParams, h: &Operator) -> Result<Operator> {
    let dim = rho.dim();
    let cfg = config_for_dim(dim, h)?;
    let gen = Lindbladian::new(params, &cfg, h)?;
    let mut out = vec![ZERO; dim * dim];
    gen.apply(rho.entries.entries(), &mut out);
    Ok(Operator::from_fn(dim, |r, c| out[r * dim + c]))
}

/// Recovers the square two-mode layout from a dimension; rectangular
/// truncations go through [`Lindbladian::new`] directly.
fn config_for_dim(dim: usize, h: &Operator) -> Result<HilbertConfig> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.dim() });
    }
    let side = (dim as f64).sqrt().round() as usize;
    if side * side != dim || side < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} is not an (N+1)² two-mode space; build a Lindbladian with an explicit HilbertConfig"
        )));
    }
    HilbertConfig::new(side - 1, side - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterMoments {
    pub tau: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub mean_a: C64,
    pub mean_b: C64,
    pub trace: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
}

pub const MOMENT_COLUMNS: [&str; 10] = [
    "tau",
    "n_a",
    "n_b",
    "mean_a_re",
    "mean_a_im",
    "mean_b_re",
    "mean_b_im",
    "trace",
    "purity",
    "min_eigenvalue",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Record moments every this many steps.
    pub sample_every: usize,
    pub keep_states: bool,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            sample_every: 1,
            keep_states: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MasterRun {
    pub moments: Vec<MasterMoments>,
    pub states: Vec<(f64, DensityMatrix)>,
}

impl MasterRun {
    /// Moments at the sample closest to `tau`.
    pub fn at(&self, tau: f64) -> Option<&MasterMoments> {
        self.moments
            .iter()
            .min_by(|a, b| (a.tau - tau).abs().total_cmp(&(b.tau - tau).abs()))
    }

    pub fn state_at(&self, tau: f64) -> Option<&DensityMatrix> {
        self.states
            .iter()
            .min_by(|a, b| (a.0 - tau).abs().total_cmp(&(b.0 - tau).abs()))
            .map(|(_, r)| r)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", MOMENT_COLUMNS.join(","))?;
        for m in &self.moments {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                m.tau, m.n_a, m.n_b, m.mean_a.re, m.mean_a.im, m.mean_b.re, m.mean_b.im, m.trace, m.purity, m.min_eigenvalue
            )?;
        }
        Ok(())
    }
}

struct MomentOps {
    n_a: Operator,
    n_b: Operator,
    a: Operator,
    b: Operator,
}

impl MomentOps {
    fn new(cfg: &HilbertConfig) -> Result<Self> {
        let oa = boson_operators(cfg.n_a)?;
        let ob = boson_operators(cfg.n_b)?;
        let ia = Operator::identity(cfg.dim_a());
        let ib = Operator::identity(cfg.dim_b());
        Ok(Self {
            n_a: tensor_embed(cfg, &oa.n, &ib)?,
            n_b: tensor_embed(cfg, &ia, &ob.n)?,
            a: tensor_embed(cfg, &oa.a, &ib)?,
            b: tensor_embed(cfg, &ia, &ob.a)?,
        })
    }

    fn measure(&self, rho: &DensityMatrix, tau: f64) -> Result<MasterMoments> {
        Ok(MasterMoments {
            tau,
            n_a: rho.expectation(&self.n_a)?.re,
            n_b: rho.expectation(&self.n_b)?.re,
            mean_a: rho.expectation(&self.a)?,
            mean_b: rho.expectation(&self.b)?,
            trace: rho.trace().re,
            purity: rho.purity(),
            min_eigenvalue: rho.min_eigenvalue(),
        })
    }
}

fn check_invariants(rho: &DensityMatrix, m: &MasterMoments) -> Result<()> {
    let herm = rho.hermiticity_defect();
    let fail = |reason: String| Error::InvariantViolation { tau: m.tau, reason };
    if !rho.entries.is_finite() {
        return Err(fail("non-finite density matrix".into()));
    }
    if herm > HERMITICITY_TOL {
        return Err(fail(format!("hermiticity defect {herm:.3e} > {HERMITICITY_TOL:e}")));
    }
    if (m.trace - 1.0).abs() > TRACE_TOL {
        return Err(fail(format!("trace {} deviates from 1", m.trace)));
    }
    if m.min_eigenvalue < -POSITIVITY_TOL {
        return Err(fail(format!("eigenvalue {:.3e} below -{POSITIVITY_TOL:e}", m.min_eigenvalue)));
    }
    Ok(())
}

/// RK4 integration of the master equation on `cfg`, checking Hermiticity,
/// trace and positivity at every sample.
pub fn integrate_master(
    rho0: &DensityMatrix,
    params: &SystemParams,
    cfg: &HilbertConfig,
    h: &Operator,
    horizon: f64,
    dt: f64,
    opts: MasterOptions,
) -> Result<MasterRun> {
    let dim = cfg.dim();
    if dim > MAX_MASTER_DIM {
        return Err(Error::InvalidTruncation(format!(
            "master equation limited to dimension {MAX_MASTER_DIM}, got {dim}"
        )));
    }
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho0.dim() });
    }
    if !(dt > 0.0 && dt.is_finite()) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and horizon ≥ 0, got dt = {dt}, horizon = {horizon}")));
    }
    let gen = Lindbladian::new(params, cfg, h)?;
    let ops = MomentOps::new(cfg)?;
    let every = opts.sample_every.max(1);
    let steps = (horizon / dt).round() as usize;
    let n = dim * dim;
    let mut rho = rho0.entries.entries().to_vec();
    let mut k = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut stage = vec![ZERO; n];
    let mut run = MasterRun::default();

    let record = |rho: &[C64], step: usize, run: &mut MasterRun| -> Result<()> {
        let tau = step as f64 * dt;
        let dm = DensityMatrix::new(Operator::from_fn(dim, |r, c| rho[r * dim + c]));
        let m = ops.measure(&dm, tau)?;
        check_invariants(&dm, &m)?;
        run.moments.push(m);
        if opts.keep_states {
            run.states.push((tau, dm));
        }
        Ok(())
    };
    record(&rho, 0, &mut run)?;
    for step in 1..=steps {
        gen.apply(&rho, &mut k[0]);
        for ((s, r), d) in stage.iter_mut().zip(&rho).zip(&k[0]) {
            *s = r + d * (0.5 * dt);
        }
        gen.apply(&stage, &mut k[1]);
        for ((s, r), d) in stage.iter_mut().zip(&rho).zip(&k[1]) {
            *s = r + d * (0.5 * dt);
        }
        gen.apply(&stage, &mut k[2]);
        for ((s, r), d) in stage.iter_mut().zip(&rho).zip(&k[2]) {
            *s = r + d * dt;
        }
        gen.apply(&stage, &mut k[3]);
        let w = dt / 6.0;
        for (idx, r) in rho.iter_mut().enumerate() {
            *r += (k[0][idx] + 2.0 * k[1][idx] + 2.0 * k[2][idx] + k[3][idx]) * w;
        }
        if step % every == 0 || step == steps {
            record(&rho, step, &mut run)?;
        }
    }
    Ok(run)
}

/// Stationary state from the linear system `L(ρ) = 0` with the trace row
/// replacing the first equation.
pub fn steady_state(params: &SystemParams, cfg: &HilbertConfig, h: &Operator) -> Result<DensityMatrix> {
    let dim = cfg.dim();
    if dim > MAX_MASTER_DIM {
        return Err(Error::InvalidTruncation(format!("steady state limited to dimension {MAX_MASTER_DIM}")));
    }
    let gen = Lindbladian::new(params, cfg, h)?;
    let n = dim * dim;
    let mut sup = DMatrix::<C64>::zeros(n, n);
    let mut unit = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for k in 0..n {
        unit[k] = C64::new(1.0, 0.0);
        gen.apply(&unit, &mut col);
        unit[k] = ZERO;
        for (r, v) in col.iter().enumerate() {
            sup[(r, k)] = *v;
        }
    }
    let mut rhs = nalgebra::DVector::<C64>::zeros(n);
    for c in 0..n {
        sup[(0, c)] = ZERO;
    }
    for i in 0..dim {
        sup[(0, i * dim + i)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let x = sup
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvariantViolation {
            tau: f64::INFINITY,
            reason: "singular Liouvillian: steady state not unique".into(),
        })?;
    let op = Operator::from_fn(dim, |r, c| x[r * dim + c]);
    // symmetrize away solver round-off
    let op = (&op + &op.adjoint()).scale(C64::new(0.5, 0.0));
    Ok(DensityMatrix::new(op))
}

/// `‖L(ρ)‖_max`
pub fn residual(params: &SystemParams, cfg: &HilbertConfig, h: &Operator, rho: &DensityMatrix) -> Result<f64> {
    let gen = Lindbladian::new(params, cfg, h)?;
    let mut out = vec![ZERO; cfg.dim() * cfg.dim()];
    gen.apply(rho.entries.entries(), &mut out);
    Ok(out.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `ρ̂ = (1/M) Σ |ψ_k⟩⟨ψ_k|`
pub fn reconstruct_density(states: &[StateVector]) -> Result<DensityMatrix> {
    let first = states.first().ok_or(Error::EmptyEnsemble)?;
    let dim = first.dim();
    let mut acc = vec![ZERO; dim * dim];
    for psi in states {
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.dim() });
        }
        let v = &psi.amplitudes;
        let n2 = crate::fock_ops::inner(v, v).re;
        for r in 0..dim {
            let vr = v[r] / n2;
            for c in 0..dim {
                acc[r * dim + c] += vr * v[c].conj();
            }
        }
    }
    let m = states.len() as f64;
    Ok(DensityMatrix::new(Operator::from_fn(dim, |r, c| acc[r * dim + c] / m)))
}

/// Monte Carlo scale of the trace distance of a reconstructed ensemble: the
/// mean distance between bootstrap reconstructions and the full-sample one.
pub fn bootstrap_trace_distance(states: &[StateVector], resamples: usize, seed: u64) -> Result<f64> {
    let full = reconstruct_density(states)?;
    let mut rng = crate::rng::stream(seed, u64::MAX);
    let m = states.len();
    let mut total = 0.0;
    let mut pick = Vec::with_capacity(m);
    for _ in 0..resamples.max(1) {
        pick.clear();
        for _ in 0..m {
            pick.push(states[rng.gen_range(0..m)].clone());
        }
        total += reconstruct_density(&pick)?.trace_distance(&full)?;
    }
    Ok(total / resamples.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    fn cfg(n: usize) -> HilbertConfig {
        HilbertConfig::new(n, n).unwrap()
    }

    fn random_rho(dim: usize, seed: u64) -> DensityMatrix {
        let mut rng = crate::rng::stream(seed, 0);
        let g = Operator::from_fn(dim, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let p = g.matmul(&g.adjoint()).unwrap();
        let t = p.trace();
        DensityMatrix::new(p.scale(C64::new(1.0, 0.0) / t))
    }

    #[test]
    fn vacuum_is_dark_without_drive() {
        let c = cfg(3);
        let mut params = SystemParams::preset(0.1).unwrap();
        params.alpha_l = 0.0;
        let h = build_hamiltonian(&params, &c, None).unwrap();
        let rho = DensityMatrix::pure(&StateVector::vacuum(c));
        let d = lindblad_rhs(&rho, &params, &h).unwrap();
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn photon_decays_at_kappa() {
        let c = cfg(3);
        let params = SystemParams::preset(0.1).unwrap();
        let h = Operator::zeros(c.dim());
        let rho = DensityMatrix::pure(&StateVector::fock(c, 1, 0).unwrap());
        let d = DensityMatrix::new(lindblad_rhs(&rho, &params, &h).unwrap());
        let n_a = MomentOps::new(&c).unwrap().n_a;
        assert!((d.expectation(&n_a).unwrap().re + params.kappa).abs() < 1e-14);
    }

    #[test]
    fn rhs_is_traceless_hermitian_and_linear() {
        let c = cfg(3);
        let params = SystemParams::preset(0.2).unwrap().with_rates(1.0, 0.3);
        let h = build_hamiltonian(&params, &c, None).unwrap();
        let r1 = random_rho(c.dim(), 1);
        let r2 = random_rho(c.dim(), 2);
        let d1 = lindblad_rhs(&r1, &params, &h).unwrap();
        let d2 = lindblad_rhs(&r2, &params, &h).unwrap();
        assert!(d1.trace().norm() < 1e-12);
        assert!(d1.hermiticity_defect() < 1e-12);
        let (al, be) = (C64::new(0.3, 0.0), C64::new(0.7, 0.0));
        let mix = DensityMatrix::new(&r1.entries.scale(al) + &r2.entries.scale(be));
        let dm = lindblad_rhs(&mix, &params, &h).unwrap();
        assert!(dm.max_abs_diff(&(&d1.scale(al) + &d2.scale(be))) < 1e-12);
    }

    #[test]
    fn unitary_limit_conserves_purity() {
        let c = cfg(3);
        let params = SystemParams::preset(0.2).unwrap().with_rates(0.0, 0.0);
        let h = build_hamiltonian(&params, &c, None).unwrap();
        let rho = DensityMatrix::pure(&StateVector::coherent(c, C64::new(0.3, 0.0), C64::new(0.1, 0.2)));
        let run = integrate_master(&rho, &params, &c, &h, 2.0, 1e-3, MasterOptions { sample_every: 100, keep_states: false })
            .unwrap();
        for m in &run.moments {
            assert!((m.purity - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn decaying_photon_is_exponential() {
        let c = cfg(2);
        let params = SystemParams::preset(0.2).unwrap();
        let h = Operator::zeros(c.dim());
        let rho = DensityMatrix::pure(&StateVector::fock(c, 1, 0).unwrap());
        let run = integrate_master(&rho, &params, &c, &h, 3.0, 1e-3, MasterOptions { sample_every: 50, keep_states: false })
            .unwrap();
        for m in &run.moments {
            assert!((m.n_a - (-params.kappa * m.tau).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn steady_state_is_a_fixed_point_reached_by_integration() {
        let c = cfg(3);
        let params = crate::model::build_params(&crate::model::ParamSpec {
            g0: Some(0.1),
            alpha_l: Some(0.1),
            p_tilde: None,
            ..crate::model::ParamSpec::preset()
        })
        .unwrap()
        .with_rates(1.0, 0.5);
        let h = build_hamiltonian(&params, &c, None).unwrap();
        let ss = steady_state(&params, &c, &h).unwrap();
        assert!(residual(&params, &c, &h, &ss).unwrap() < 1e-8);
        assert!((ss.trace().re - 1.0).abs() < 1e-12 && ss.min_eigenvalue() > -1e-10);
        let run = integrate_master(
            &DensityMatrix::pure(&StateVector::vacuum(c)),
            &params,
            &c,
            &h,
            60.0,
            1e-2,
            MasterOptions { sample_every: 6000, keep_states: true },
        )
        .unwrap();
        let last = &run.states.last().unwrap().1;
        assert!(last.trace_distance(&ss).unwrap() < 1e-6);
    }

    #[test]
    fn reconstruction_edge_cases() {
        let c = cfg(2);
        assert!(matches!(reconstruct_density(&[]), Err(Error::EmptyEnsemble)));
        let one = reconstruct_density(&[StateVector::fock(c, 1, 0).unwrap()]).unwrap();
        assert!((one.purity() - 1.0).abs() < 1e-14);
        let two = reconstruct_density(&[StateVector::fock(c, 1, 0).unwrap(), StateVector::fock(c, 0, 2).unwrap()]).unwrap();
        let ev = two.eigenvalues();
        assert!((ev[ev.len() - 1] - 0.5).abs() < 1e-12 && (ev[ev.len() - 2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invariant_violation_aborts() {
        let c = cfg(2);
        let params = SystemParams::preset(0.2).unwrap();
        let h = build_hamiltonian(&params, &c, None).unwrap();
        let mut bad = DensityMatrix::pure(&StateVector::vacuum(c));
        bad.entries[(0, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(
            integrate_master(&bad, &params, &c, &h, 0.1, 1e-2, MasterOptions::default()),
            Err(Error::InvariantViolation { .. })
        ));
    }
}
