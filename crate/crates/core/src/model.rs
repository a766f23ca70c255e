//! Physical parameters, the Hamiltonian and the rescaled phase-space coordinates.
//!
//! All rates are in units of the mechanical frequency and `ħ = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_ops::{boson_operators, tensor_embed, HilbertConfig, Operator, C64};

/// Relative tolerance on `P̃ = 8 α_L² g0²` when all three are supplied.
pub const POWER_RELATION_TOL: f64 = 1e-4;

pub const PRESET_NAME: &str = "bakemeier_chaos";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub delta0: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub g0: f64,
    pub alpha_l: f64,
    pub p_tilde: f64,
}

/// Partially specified parameter set; the missing member of `(g0, alpha_l, p_tilde)`
/// is solved from the power relation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub delta0: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub g0: Option<f64>,
    pub alpha_l: Option<f64>,
    pub p_tilde: Option<f64>,
}

impl ParamSpec {
    /// Preset rates with `P̃ = 1.5` and no coupling chosen yet.
    pub fn preset() -> Self {
        Self {
            delta0: -0.7,
            kappa: 1.0,
            gamma_m: 1e-3,
            g0: None,
            alpha_l: None,
            p_tilde: Some(1.5),
        }
    }
}

pub fn build_params(spec: &ParamSpec) -> Result<SystemParams> {
    for (name, v) in [("kappa", spec.kappa), ("gamma_m", spec.gamma_m)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InconsistentParams(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    if !spec.delta0.is_finite() {
        return Err(Error::InconsistentParams("delta0 must be finite".into()));
    }
    if let Some(g0) = spec.g0 {
        if !(g0 > 0.0 && g0.is_finite()) {
            return Err(Error::NonPositiveCoupling(g0));
        }
    }
    let positive = |name: &str, v: f64| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InconsistentParams(format!("{name} must be positive, got {v}")))
        }
    };
    let (g0, alpha_l, p_tilde) = match (spec.g0, spec.alpha_l, spec.p_tilde) {
        (Some(g0), None, Some(p)) => {
            let p = positive("p_tilde", p)?;
            (g0, (p / (8.0 * g0 * g0)).sqrt(), p)
        }
        (None, Some(al), Some(p)) => {
            let p = positive("p_tilde", p)?;
            let al = positive("alpha_l", al)?;
            (((p / 8.0).sqrt()) / al, al, p)
        }
        (Some(g0), Some(al), None) => {
            let al = positive("alpha_l", al)?;
            (g0, al, 8.0 * al * al * g0 * g0)
        }
        (Some(g0), Some(al), Some(p)) => {
            let implied = 8.0 * al * al * g0 * g0;
            let violation = (implied - p).abs() / p.abs().max(f64::MIN_POSITIVE);
            if violation > POWER_RELATION_TOL {
                return Err(Error::InconsistentParams(format!(
                    "p_tilde = {p} but 8·alpha_l²·g0² = {implied} (relative violation {violation:.2e})"
                )));
            }
            (g0, al, p)
        }
        _ => {
            return Err(Error::InconsistentParams(
                "need two of (g0, alpha_l, p_tilde)".into(),
            ))
        }
    };
    if !(g0 > 0.0) {
        return Err(Error::NonPositiveCoupling(g0));
    }
    Ok(SystemParams {
        delta0: spec.delta0,
        kappa: spec.kappa,
        gamma_m: spec.gamma_m,
        g0,
        alpha_l,
        p_tilde,
    })
}

impl SystemParams {
    /// Preset rates at the given coupling, `α_L` solved from `P̃ = 1.5`.
    pub fn preset(g0: f64) -> Result<Self> {
        build_params(&ParamSpec {
            g0: Some(g0),
            ..ParamSpec::preset()
        })
    }

    /// Same rates and power, different `(g0, α_L)` split.
    pub fn with_g0(&self, g0: f64) -> Result<Self> {
        build_params(&ParamSpec {
            delta0: self.delta0,
            kappa: self.kappa,
            gamma_m: self.gamma_m,
            g0: Some(g0),
            alpha_l: None,
            p_tilde: Some(self.p_tilde),
        })
    }

    pub fn with_rates(&self, kappa: f64, gamma_m: f64) -> Self {
        Self { kappa, gamma_m, ..*self }
    }
}

/// Rescaled observables: `q + i p = √2 g0 ⟨b⟩`, `α = ⟨a⟩ / α_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
    pub alpha: C64,
    pub tau: f64,
}

pub fn observables(mean_a: C64, mean_b: C64, params: &SystemParams, tau: f64) -> PhasePoint {
    let s = std::f64::consts::SQRT_2 * params.g0;
    PhasePoint {
        q: s * mean_b.re,
        p: s * mean_b.im,
        alpha: mean_a / params.alpha_l,
        tau,
    }
}

/// Inverse of [`observables`]: the mode means `(⟨a⟩, ⟨b⟩)` for a phase point.
pub fn mode_means(point: &PhasePoint, params: &SystemParams) -> (C64, C64) {
    let s = std::f64::consts::SQRT_2 * params.g0;
    (point.alpha * params.alpha_l, C64::new(point.q / s, point.p / s))
}

/// Dense two-mode Hamiltonian
/// `H = [−Δ0 − g0(b† + b)] a†a + b†b + α_L(a† + a)`,
/// optionally with `a → a + c_a`, `b → b + c_b`.
pub fn build_hamiltonian(params: &SystemParams, cfg: &HilbertConfig, frame: Option<(C64, C64)>) -> Result<Operator> {
    let cfg = HilbertConfig::new(cfg.n_a, cfg.n_b)?;
    let (ca, cb) = frame.unwrap_or_default();
    let ops_a = boson_operators(cfg.n_a)?;
    let ops_b = boson_operators(cfg.n_b)?;
    let id_a = Operator::identity(cfg.dim_a());
    let id_b = Operator::identity(cfg.dim_b());
    let a = &ops_a.a + &id_a.scale(ca);
    let b = &ops_b.a + &id_b.scale(cb);
    let n_a = a.adjoint().matmul(&a)?;
    let n_b = b.adjoint().matmul(&b)?;
    let x_b = &b + &b.adjoint();
    let x_a = &a + &a.adjoint();

    let detuning = tensor_embed(&cfg, &n_a, &id_b)?.scale(C64::new(-params.delta0, 0.0));
    let coupling = tensor_embed(&cfg, &n_a, &x_b)?.scale(C64::new(-params.g0, 0.0));
    let mechanics = tensor_embed(&cfg, &id_a, &n_b)?;
    let drive = tensor_embed(&cfg, &x_a, &id_b)?.scale(C64::new(params.alpha_l, 0.0));
    Ok(&(&(&detuning + &coupling) + &mechanics) + &drive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_l_back_solved() {
        let p = SystemParams::preset(0.1).unwrap();
        let expected = (1.5f64 / (8.0 * 0.01)).sqrt();
        assert!((p.alpha_l - expected).abs() < 1e-12);
        assert!((p.alpha_l - 4.3301).abs() < 1e-4);
        assert_eq!((p.kappa, p.gamma_m, p.delta0, p.p_tilde), (1.0, 1e-3, -0.7, 1.5));
    }

    #[test]
    fn consistent_triple_accepted_and_inconsistent_rejected() {
        let ok = ParamSpec {
            g0: Some(0.1),
            alpha_l: Some(4.3301),
            ..ParamSpec::preset()
        };
        assert!(build_params(&ok).is_ok());
        let bad = ParamSpec {
            alpha_l: Some(1.0),
            ..ok
        };
        assert!(matches!(build_params(&bad), Err(Error::InconsistentParams(_))));
    }

    #[test]
    fn non_positive_coupling_rejected() {
        let spec = ParamSpec {
            g0: Some(0.0),
            ..ParamSpec::preset()
        };
        assert!(matches!(build_params(&spec), Err(Error::NonPositiveCoupling(_))));
        let spec = ParamSpec {
            g0: Some(-0.1),
            ..ParamSpec::preset()
        };
        assert!(build_params(&spec).is_err());
    }

    #[test]
    fn g0_solved_from_alpha_l() {
        let spec = ParamSpec {
            alpha_l: Some(2.0),
            ..ParamSpec::preset()
        };
        let p = build_params(&spec).unwrap();
        assert!((8.0 * p.alpha_l.powi(2) * p.g0.powi(2) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let params = SystemParams::preset(0.1).unwrap();
        let cfg = HilbertConfig::new(3, 3).unwrap();
        let h = build_hamiltonian(&params, &cfg, None).unwrap();
        let idx = |i, j| cfg.index(i, j);
        assert_eq!(h[(idx(0, 0), idx(0, 0))], C64::new(0.0, 0.0));
        assert!((h[(idx(1, 0), idx(1, 0))].re + params.delta0).abs() < 1e-14);
        // radiation-pressure coupling enters with the sign chosen in `build_hamiltonian`
        assert!((h[(idx(1, 1), idx(1, 0))].re + params.g0).abs() < 1e-14);
        assert!((h[(idx(1, 0), idx(0, 0))].re - params.alpha_l).abs() < 1e-14);
        assert!(h.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn observables_formula() {
        let params = SystemParams::preset(0.1).unwrap();
        let z = C64::new(0.0, 0.0);
        let pt = observables(z, z, &params, 0.0);
        assert_eq!((pt.q, pt.p), (0.0, 0.0));
        let pt = observables(z, C64::new(1.0, 0.0), &params, 0.0);
        assert!((pt.q - 0.141_421_356_237).abs() < 1e-11 && pt.p == 0.0);
        let pt = observables(z, C64::new(0.0, 1.0), &params, 0.0);
        assert!(pt.q == 0.0 && (pt.p - 2f64.sqrt() * 0.1).abs() < 1e-15);
        let (a, b) = mode_means(&observables(C64::new(1.0, 2.0), C64::new(-3.0, 0.5), &params, 0.0), &params);
        assert!((a - C64::new(1.0, 2.0)).norm() < 1e-12 && (b - C64::new(-3.0, 0.5)).norm() < 1e-12);
    }
}
