//! Truncated bosonic operator algebra on one or two modes.
//!
//! Two-mode vectors are stored with the photon (`a`) index as the slow index:
//! the amplitude of `|i⟩_a|j⟩_b` sits at `i * (n_b + 1) + j`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_MAX_DIM: usize = 200_000;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Highest retained Fock index of each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HilbertConfig {
    pub n_a: usize,
    pub n_b: usize,
}

impl HilbertConfig {
    pub fn new(n_a: usize, n_b: usize) -> Result<Self> {
        Self::with_max_dim(n_a, n_b, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(n_a: usize, n_b: usize, max_dim: usize) -> Result<Self> {
        if n_a < 1 || n_b < 1 {
            return Err(Error::InvalidTruncation(format!(
                "n_a = {n_a}, n_b = {n_b}; both must be at least 1"
            )));
        }
        let dim = (n_a + 1)
            .checked_mul(n_b + 1)
            .ok_or_else(|| Error::InvalidTruncation("dimension overflow".into()))?;
        if dim > max_dim {
            return Err(Error::InvalidTruncation(format!(
                "dimension {dim} exceeds the maximum {max_dim}"
            )));
        }
        Ok(Self { n_a, n_b })
    }

    #[inline]
    pub fn dim_a(&self) -> usize {
        self.n_a + 1
    }

    #[inline]
    pub fn dim_b(&self) -> usize {
        self.n_b + 1
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    #[inline]
    pub fn index(&self, i_a: usize, i_b: usize) -> usize {
        i_a * self.dim_b() + i_b
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op[(i, i)] = ONE;
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            dim,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.entries[r * self.dim..(r + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        check_dim(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            let out_row = &mut out.entries[i * n..(i + 1) * n];
            for k in 0..n {
                let lhs = self.entries[i * n + k];
                if lhs == ZERO {
                    continue;
                }
                let rhs_row = &rhs.entries[k * n..(k + 1) * n];
                for (o, r) in out_row.iter_mut().zip(rhs_row) {
                    *o += lhs * r;
                }
            }
        }
        Ok(out)
    }

    /// `out = self * v`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            *o = self
                .row(r)
                .iter()
                .zip(v)
                .fold(ZERO, |acc, (m, x)| acc + m * x);
        }
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Kronecker product with `self` as the slow index.
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let (n, m) = (self.dim, rhs.dim);
        let mut out = Operator::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let x = self[(i, j)];
                if x == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = x * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        Ok(&self.matmul(rhs)? - &rhs.matmul(self)?)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl std::ops::Index<(usize, usize)> for Operator {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.entries[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Operator {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.entries[r * self.dim + c]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, s: C64) -> Operator {
        self.scale(s)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scale(C64::new(s, 0.0))
    }
}

/// Pure state on the two-mode product space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
    pub config: HilbertConfig,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, config: HilbertConfig) -> Result<Self> {
        check_dim(config.dim(), amplitudes.len())?;
        Ok(Self { amplitudes, config })
    }

    pub fn fock(config: HilbertConfig, i_a: usize, i_b: usize) -> Result<Self> {
        if i_a > config.n_a || i_b > config.n_b {
            return Err(Error::InvalidArgument(format!(
                "Fock state |{i_a},{i_b}⟩ outside truncation ({}, {})",
                config.n_a, config.n_b
            )));
        }
        let mut amplitudes = vec![ZERO; config.dim()];
        amplitudes[config.index(i_a, i_b)] = ONE;
        Ok(Self { amplitudes, config })
    }

    pub fn vacuum(config: HilbertConfig) -> Self {
        Self::fock(config, 0, 0).expect("vacuum always fits")
    }

    /// Product of truncated coherent states, renormalized on the truncated space.
    pub fn coherent(config: HilbertConfig, alpha_a: C64, alpha_b: C64) -> Self {
        let ca = coherent_amplitudes(alpha_a, config.n_a);
        let cb = coherent_amplitudes(alpha_b, config.n_b);
        let amplitudes = ca
            .iter()
            .flat_map(|x| cb.iter().map(move |y| x * y))
            .collect();
        let mut psi = Self { amplitudes, config };
        psi.normalize();
        psi
    }

    /// Product state built from single-mode amplitude vectors.
    pub fn product(config: HilbertConfig, mode_a: &[C64], mode_b: &[C64]) -> Result<Self> {
        check_dim(config.dim_a(), mode_a.len())?;
        check_dim(config.dim_b(), mode_b.len())?;
        let amplitudes = mode_a
            .iter()
            .flat_map(|x| mode_b.iter().map(move |y| x * y))
            .collect();
        let mut psi = Self { amplitudes, config };
        psi.normalize();
        Ok(psi)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Rescales to unit norm and returns the norm found before rescaling.
    pub fn normalize(&mut self) -> f64 {
        normalize(&mut self.amplitudes)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// Populations of the highest retained Fock level of each mode.
    pub fn top_populations(&self) -> (f64, f64) {
        top_populations(&self.config, &self.amplitudes)
    }
}

/// Amplitudes `e^{-|β|²/2} β^n / √n!` for `n = 0..=n_max`.
pub fn coherent_amplitudes(beta: C64, n_max: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut term = C64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    out.push(term);
    for n in 1..=n_max {
        term = term * beta / (n as f64).sqrt();
        out.push(term);
    }
    out
}

#[inline]
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

#[inline]
pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(x: &mut [C64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        let inv = 1.0 / n;
        x.iter_mut().for_each(|z| *z *= inv);
    }
    n
}

pub fn top_populations(cfg: &HilbertConfig, psi: &[C64]) -> (f64, f64) {
    let db = cfg.dim_b();
    let top_a: f64 = psi[cfg.n_a * db..].iter().map(|z| z.norm_sqr()).sum();
    let top_b: f64 = (0..cfg.dim_a())
        .map(|i| psi[i * db + cfg.n_b].norm_sqr())
        .sum();
    (top_a, top_b)
}

/// Single-mode ladder and number operators.
#[derive(Debug, Clone)]
pub struct BosonOperators {
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
}

pub fn boson_operators(n_max: usize) -> Result<BosonOperators> {
    if n_max < 1 {
        return Err(Error::InvalidTruncation(format!(
            "single-mode truncation must be at least 1, got {n_max}"
        )));
    }
    let dim = n_max + 1;
    let a = Operator::from_fn(dim, |m, n| {
        if m + 1 == n {
            C64::new((n as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let a_dag = a.adjoint();
    let n = a_dag.matmul(&a)?;
    Ok(BosonOperators { a, a_dag, n })
}

/// `op_a ⊗ op_b` on the two-mode space of `cfg`.
pub fn tensor_embed(cfg: &HilbertConfig, op_a: &Operator, op_b: &Operator) -> Result<Operator> {
    check_dim(cfg.dim_a(), op_a.dim())?;
    check_dim(cfg.dim_b(), op_b.dim())?;
    Ok(op_a.kron(op_b))
}

/// Sign of the Gaussian prefactor `e^{±|α|²/2}` in the displacement matrix element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianSign {
    Negative,
    Positive,
}

impl GaussianSign {
    fn factor(self) -> f64 {
        match self {
            GaussianSign::Negative => -1.0,
            GaussianSign::Positive => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GaussianSign::Negative => "exp(-|alpha|^2/2)",
            GaussianSign::Positive => "exp(+|alpha|^2/2)",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Displacement {
    pub matrix: Operator,
    /// `‖D†D − I‖_max` restricted to the trusted low-lying block.
    pub unitarity_defect: f64,
    /// Highest Fock index of the trusted block.
    pub trusted_block: usize,
    pub gaussian_sign: GaussianSign,
}

/// Highest Fock index whose displaced image is trusted in a truncation `n_max`.
pub fn trusted_block(n_max: usize) -> usize {
    (n_max / 4).max(1)
}

/// Truncated displacement matrix `⟨m|D(α)|n⟩` with the Gaussian prefactor that
/// makes it unitary as the truncation grows.
pub fn displacement_matrix(alpha: C64, n_max: usize) -> Displacement {
    displacement_matrix_with_sign(alpha, n_max, GaussianSign::Negative)
}

pub fn displacement_matrix_with_sign(alpha: C64, n_max: usize, sign: GaussianSign) -> Displacement {
    let matrix = displacement_entries(alpha, n_max, sign);
    let block = trusted_block(n_max);
    let unitarity_defect = unitarity_defect(&matrix, block);
    Displacement {
        matrix,
        unitarity_defect,
        trusted_block: block,
        gaussian_sign: sign,
    }
}

/// `max |(U†U − I)_{ij}|` over `i, j ≤ block`.
pub fn unitarity_defect(u: &Operator, block: usize) -> f64 {
    let n = u.dim();
    let block = block.min(n - 1);
    let mut worst: f64 = 0.0;
    for i in 0..=block {
        for j in 0..=block {
            let mut s = ZERO;
            for m in 0..n {
                s += u[(m, i)].conj() * u[(m, j)];
            }
            if i == j {
                s -= ONE;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

pub(crate) fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `L_m^{(k)}(x)` for `m = 0..=m_max` by the upward three-term recurrence.
pub fn laguerre_column(k: usize, x: f64, m_max: usize) -> Vec<f64> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(1.0);
    if m_max == 0 {
        return out;
    }
    out.push(1.0 + kf - x);
    for m in 1..m_max {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 + kf - x) * out[m] - (mf + kf) * out[m - 1]) / (mf + 1.0);
        out.push(next);
    }
    out
}

pub(crate) fn displacement_entries(alpha: C64, n_max: usize, sign: GaussianSign) -> Operator {
    let dim = n_max + 1;
    let r = alpha.norm();
    if r == 0.0 {
        return Operator::identity(dim);
    }
    let x = r * r;
    let ln_r = r.ln();
    let unit = alpha / r;
    let lnf = ln_factorials(n_max);
    let gauss = sign.factor() * x / 2.0;
    let mut d = Operator::zeros(dim);
    // k = |n - m|; upper triangle carries (-α*)^k, lower triangle α^k.
    let up_phase = -unit.conj();
    let mut up_pow = ONE;
    let mut lo_pow = ONE;
    for k in 0..dim {
        let lag = laguerre_column(k, x, n_max - k);
        for (lo, &l) in lag.iter().enumerate() {
            let hi = lo + k;
            let mag = (gauss + 0.5 * (lnf[lo] - lnf[hi]) + k as f64 * ln_r).exp() * l;
            d[(lo, hi)] = up_pow * mag;
            if k > 0 {
                d[(hi, lo)] = lo_pow * mag;
            }
        }
        up_pow *= up_phase;
        lo_pow *= unit;
    }
    d
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(op: &Operator, psi: &StateVector) -> Result<C64> {
    check_dim(op.dim(), psi.dim())?;
    let v = &psi.amplitudes;
    let mut acc = ZERO;
    for (r, x) in v.iter().enumerate() {
        let row = op.row(r);
        let s = row.iter().zip(v).fold(ZERO, |s, (m, y)| s + m * y);
        acc += x.conj() * s;
    }
    Ok(acc)
}

/// Ladder actions on flattened two-mode vectors, accumulating into `out`.
#[derive(Debug, Clone)]
pub struct TwoModeLadder {
    cfg: HilbertConfig,
    sqrt: Vec<f64>,
}

impl TwoModeLadder {
    pub fn new(cfg: HilbertConfig) -> Self {
        let top = cfg.n_a.max(cfg.n_b) + 1;
        Self {
            cfg,
            sqrt: (0..=top).map(|n| (n as f64).sqrt()).collect(),
        }
    }

    pub fn config(&self) -> HilbertConfig {
        self.cfg
    }

    /// `out += c · a ψ`
    pub fn add_a(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for n in 1..=self.cfg.n_a {
            let s = c * self.sqrt[n];
            let (src, dst) = (n * db, (n - 1) * db);
            for j in 0..db {
                out[dst + j] += s * psi[src + j];
            }
        }
    }

    /// `out += c · a† ψ`
    pub fn add_a_dag(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for n in 0..self.cfg.n_a {
            let s = c * self.sqrt[n + 1];
            let (src, dst) = (n * db, (n + 1) * db);
            for j in 0..db {
                out[dst + j] += s * psi[src + j];
            }
        }
    }

    /// `out += c · a†a ψ`
    pub fn add_n_a(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for n in 1..=self.cfg.n_a {
            let s = c * (n as f64);
            for j in 0..db {
                out[n * db + j] += s * psi[n * db + j];
            }
        }
    }

    /// `out += c · b ψ`
    pub fn add_b(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for i in 0..self.cfg.dim_a() {
            let row = i * db;
            for m in 1..db {
                out[row + m - 1] += c * self.sqrt[m] * psi[row + m];
            }
        }
    }

    /// `out += c · b† ψ`
    pub fn add_b_dag(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for i in 0..self.cfg.dim_a() {
            let row = i * db;
            for m in 0..db - 1 {
                out[row + m + 1] += c * self.sqrt[m + 1] * psi[row + m];
            }
        }
    }

    /// `out += c · b†b ψ`
    pub fn add_n_b(&self, c: C64, psi: &[C64], out: &mut [C64]) {
        let db = self.cfg.dim_b();
        for i in 0..self.cfg.dim_a() {
            let row = i * db;
            for m in 1..db {
                out[row + m] += c * (m as f64) * psi[row + m];
            }
        }
    }

    /// `⟨a⟩` and `⟨b⟩` for a normalized `ψ`.
    pub fn means(&self, psi: &[C64]) -> (C64, C64) {
        let db = self.cfg.dim_b();
        let mut ea = ZERO;
        for n in 1..=self.cfg.n_a {
            let s = self.sqrt[n];
            for j in 0..db {
                ea += psi[(n - 1) * db + j].conj() * psi[n * db + j] * s;
            }
        }
        let mut eb = ZERO;
        for i in 0..self.cfg.dim_a() {
            let row = i * db;
            for m in 1..db {
                eb += psi[row + m - 1].conj() * psi[row + m] * self.sqrt[m];
            }
        }
        (ea, eb)
    }

    /// `⟨a†a⟩` and `⟨b†b⟩` for a normalized `ψ`.
    pub fn numbers(&self, psi: &[C64]) -> (f64, f64) {
        let db = self.cfg.dim_b();
        let mut na = 0.0;
        let mut nb = 0.0;
        for i in 0..self.cfg.dim_a() {
            for m in 0..db {
                let p = psi[i * db + m].norm_sqr();
                na += i as f64 * p;
                nb += m as f64 * p;
            }
        }
        (na, nb)
    }
}

/// Applies `u_a ⊗ u_b` in place through the reshaped amplitude matrix.
pub fn apply_product(cfg: &HilbertConfig, u_a: Option<&Operator>, u_b: Option<&Operator>, psi: &mut [C64]) {
    let (da, db) = (cfg.dim_a(), cfg.dim_b());
    let mut tmp = vec![ZERO; psi.len()];
    if let Some(u) = u_a {
        debug_assert_eq!(u.dim(), da);
        tmp.iter_mut().for_each(|z| *z = ZERO);
        for i in 0..da {
            let out_row = &mut tmp[i * db..(i + 1) * db];
            for k in 0..da {
                let m = u[(i, k)];
                if m == ZERO {
                    continue;
                }
                let src = &psi[k * db..(k + 1) * db];
                for (o, s) in out_row.iter_mut().zip(src) {
                    *o += m * s;
                }
            }
        }
        psi.copy_from_slice(&tmp);
    }
    if let Some(u) = u_b {
        debug_assert_eq!(u.dim(), db);
        for i in 0..da {
            let src = &psi[i * db..(i + 1) * db];
            let out_row = &mut tmp[i * db..(i + 1) * db];
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = u.row(j).iter().zip(src).fold(ZERO, |acc, (m, s)| acc + m * s);
            }
        }
        psi.copy_from_slice(&tmp);
    }
}
