//! Fast oracle checks behind `--self-test`. Each finishes in well under a second.

use crate::engines::{Basis, EngineConfig, Scheme, Trajectory};
use crate::error::Result;
use crate::fock_ops::{boson_operators, displacement_matrix, HilbertConfig, Operator, StateVector, C64};
use crate::master::{integrate_master, lindblad_rhs, DensityMatrix, MasterOptions};
use crate::model::{build_hamiltonian, SystemParams};
use crate::moving_basis::FrameState;
use crate::stats::{fit_scaling, ScalingModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check {
        name,
        passed: value.is_finite() && value <= tol,
        detail: format!("{value:.3e} (tolerance {tol:.0e})"),
    }
}

fn commutator_diagonal() -> Result<f64> {
    let n = 8;
    let ops = boson_operators(n)?;
    let c = ops.a.commutator(&ops.a_dag)?;
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let want = if k == n { -(n as f64) } else { 1.0 };
        worst = worst.max((c[(k, k)] - C64::new(want, 0.0)).norm());
    }
    Ok(worst)
}

fn displacement_composition() -> f64 {
    let (x, y) = (C64::new(0.6, -0.3), C64::new(-0.2, 0.5));
    let n = 60;
    let dx = displacement_matrix(x, n).matrix;
    let dy = displacement_matrix(y, n).matrix;
    let dxy = displacement_matrix(x + y, n).matrix;
    let phase = C64::from_polar(1.0, (x * y.conj()).im);
    let prod = dx.matmul(&dy).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            worst = worst.max((prod[(i, j)] - phase * dxy[(i, j)]).norm());
        }
    }
    worst.max(displacement_matrix(x, n).unitarity_defect)
}

fn lindblad_trace() -> Result<f64> {
    let cfg = HilbertConfig::new(3, 3)?;
    let params = SystemParams::preset(0.2)?.with_rates(1.0, 0.3);
    let h = build_hamiltonian(&params, &cfg, None)?;
    let mut rng = crate::rng::stream(3, 0);
    let g = Operator::from_fn(cfg.dim(), |_, _| C64::new(rand::Rng::gen::<f64>(&mut rng) - 0.5, rand::Rng::gen::<f64>(&mut rng) - 0.5));
    let p = g.matmul(&g.adjoint())?;
    let rho = DensityMatrix::new(p.scale(C64::new(1.0, 0.0) / p.trace()));
    Ok(lindblad_rhs(&rho, &params, &h)?.trace().norm())
}

fn photon_decay() -> Result<f64> {
    let cfg = HilbertConfig::new(2, 1)?;
    let mut params = SystemParams::preset(0.1)?;
    params.gamma_m = 0.0;
    let h = Operator::zeros(cfg.dim());
    let rho = DensityMatrix::pure(&StateVector::fock(cfg, 1, 0)?);
    let run = integrate_master(&rho, &params, &cfg, &h, 2.0, 1e-3, MasterOptions::default())?;
    let m = run.at(2.0).unwrap();
    Ok((m.n_a - (-2.0 * params.kappa).exp()).abs())
}

/// Noiseless moving-frame drift against the fixed basis on a tiny system.
fn frame_equivalence() -> Result<f64> {
    let params = SystemParams::preset(0.3)?.with_rates(1.0, 0.2);
    let mut params = params;
    params.alpha_l = 0.3;
    let cfg = HilbertConfig::new(10, 10)?;
    let mut eng = EngineConfig::new(Scheme::Ito, 1e-3);
    eng.noise = false;
    eng.truncation_alarm = 1.0;
    let psi = StateVector::fock(cfg, 1, 0)?;
    let mut fixed = Trajectory::new(FrameState::fixed(&psi), params, eng, Basis::Fixed, 0, 0)?;
    let mut moving = Trajectory::new(FrameState::fixed(&psi), params, eng, Basis::moving(), 0, 0)?;
    for _ in 0..1000 {
        fixed.step()?;
        moving.step()?;
    }
    let (fa, fb) = fixed.frame().means();
    let (ma, mb) = moving.frame().means();
    Ok((fa - ma).norm().max((fb - mb).norm()))
}

fn fit_exactness() -> Result<f64> {
    let pts: Vec<(f64, f64)> = (0..5).map(|k| 0.02 + 0.02 * k as f64).map(|g| (g, (0.5 / g).exp())).collect();
    Ok((fit_scaling(&pts, ScalingModel::Superpersistent)?.slope + 1.0).abs())
}

pub fn run_all() -> Vec<Check> {
    let wrap = |name: &'static str, r: Result<f64>, tol: f64| match r {
        Ok(v) => check(name, v, tol),
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    };
    vec![
        wrap("commutator_diagonal", commutator_diagonal(), 1e-14),
        check("displacement_composition", displacement_composition(), 1e-10),
        wrap("lindblad_trace", lindblad_trace(), 1e-12),
        wrap("photon_decay", photon_decay(), 1e-6),
        wrap("moving_frame_equivalence", frame_equivalence(), 1e-6),
        wrap("fit_exactness", fit_exactness(), 1e-6),
    ]
}
