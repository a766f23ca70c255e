use std::f64::consts::TAU;

use optomech::classical::{
    chaotic_launch_point, deterministic_step, evolve, integrate_deterministic, langevin_step_with_increments,
    langevin_trajectory, mean_field_step_unscaled, rms, ClassicalState, NoiseSettings, DEFAULT_DT,
};
use optomech::engines::{Basis, EngineConfig, Scheme, Trajectory};
use optomech::fock_ops::{HilbertConfig, StateVector, C64};
use optomech::model::{mode_means, observables, PhasePoint, SystemParams};
use optomech::moving_basis::FrameState;
use optomech::rng::{complex_increment, normal, stream};
use optomech::stats::{calibrate_thresholds, detect_all, periodic_launch_point, Direction};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn noise_correlators_over_a_million_draws() {
    let dt = 1e-3;
    let n = 1_000_000;
    let mut rng = stream(42, 0);
    let (mut s, mut s2, mut sabs) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0);
    for _ in 0..n {
        let d = complex_increment(&mut rng, dt);
        s += d;
        s2 += d * d;
        sabs += d.norm_sqr();
    }
    let nf = n as f64;
    // standard errors: Re, Im of dξ have sd √(dt/2); dξ² parts sd dt/√2; |dξ|² sd dt
    let se_mean = (dt / 2.0 / nf).sqrt();
    let se_sq = dt / (2f64.sqrt() * nf.sqrt());
    let se_abs = dt / nf.sqrt();
    assert!((s.re / nf).abs() < 5.0 * se_mean && (s.im / nf).abs() < 5.0 * se_mean);
    assert!((s2.re / nf).abs() < 5.0 * se_sq && (s2.im / nf).abs() < 5.0 * se_sq);
    assert!((sabs / nf - dt).abs() < 5.0 * se_abs, "{} vs {dt}", sabs / nf);
}

#[test]
fn jump_survival_of_a_single_photon_is_exponential() {
    // no drive, no mechanical damping: n_a is conserved by H, so the photon
    // survives until the first κ-jump
    let p = SystemParams {
        delta0: -0.7,
        kappa: 1.0,
        gamma_m: 0.0,
        g0: 0.1,
        alpha_l: 0.0,
        p_tilde: 0.0,
    };
    let cfg = HilbertConfig::new(1, 2).unwrap();
    let psi = StateVector::fock(cfg, 1, 0).unwrap();
    let dt = 1e-3;
    let m = 2000;
    let checks = [0.5, 1.0, 2.0];
    let mut alive = [0usize; 3];
    for k in 0..m {
        let mut eng = EngineConfig::new(Scheme::Jump, dt);
        // N_a = 1 keeps the photon in the top level by construction
        eng.truncation_alarm = f64::INFINITY;
        let mut tr = Trajectory::new(FrameState::fixed(&psi), p, eng, Basis::Fixed, 8, k).unwrap();
        for (i, &t) in checks.iter().enumerate() {
            while tr.tau() < t - 0.5 * dt && tr.jumps() == 0 {
                tr.step().unwrap();
            }
            if tr.jumps() == 0 {
                alive[i] += 1;
            }
        }
    }
    for (i, &t) in checks.iter().enumerate() {
        let want = (-p.kappa * t).exp();
        let got = alive[i] as f64 / m as f64;
        let se = (want * (1.0 - want) / m as f64).sqrt();
        assert!((got - want).abs() < 4.0 * se, "τ={t}: survival {got} vs {want}");
    }
}

#[test]
fn renormalization_restores_unit_norm() {
    let p = SystemParams::preset(0.1).unwrap();
    let cfg = HilbertConfig::new(10, 10).unwrap();
    let launch = chaotic_launch_point(&p, DEFAULT_DT).unwrap();
    let (ma, mb) = mode_means(&PhasePoint { q: launch.q, p: launch.p, alpha: launch.alpha, tau: 0.0 }, &p);
    let mut eng = EngineConfig::new(Scheme::Ito, DEFAULT_DT);
    eng.renormalize_every = 4;
    eng.truncation_alarm = 1.0;
    let mut tr = Trajectory::new(FrameState::coherent(cfg, ma, mb), p, eng, Basis::moving(), 3, 0).unwrap();
    for _ in 0..400 {
        tr.step().unwrap();
        let dev = (tr.frame().norm() - 1.0).abs();
        if tr.steps() % 4 == 0 {
            assert!(dev < 1e-12, "after renormalization |‖ψ‖−1| = {dev:e}");
        } else {
            assert!(dev < 4.0 * 20.0 * DEFAULT_DT, "between renormalizations |‖ψ‖−1| = {dev:e}");
        }
    }
}

#[test]
fn ito_and_stratonovich_ensembles_converge_at_first_order() {
    let mut p = SystemParams::preset(0.3).unwrap();
    p.alpha_l = 0.5;
    p.p_tilde = 8.0 * p.alpha_l.powi(2) * p.g0.powi(2);
    let cfg = HilbertConfig::new(6, 4).unwrap();
    let psi = StateVector::coherent(cfg, C64::new(0.5, 0.3), C64::new(0.2, 0.0));
    let m = 2000;
    let discrepancy = |dt: f64| {
        let d: Vec<f64> = (0..m)
            .map(|k| {
                let n_a = |s: Scheme| {
                    let mut eng = EngineConfig::new(s, dt);
                    eng.truncation_alarm = 1.0;
                    let mut t = Trajectory::new(FrameState::fixed(&psi), p, eng, Basis::Fixed, 5, k).unwrap();
                    while t.tau() < 2.0 - dt / 2.0 {
                        t.step().unwrap();
                    }
                    t.frame().numbers().0
                };
                n_a(Scheme::Ito) - n_a(Scheme::StratonovichHeun)
            })
            .collect();
        let (mean, sd) = mean_sd(&d);
        (mean, sd / (m as f64).sqrt())
    };
    let (d1, se1) = discrepancy(0.08);
    let (d2, se2) = discrepancy(0.04);
    assert!(d1.abs() > 3.0 * se1, "coarse discrepancy {d1:e} ± {se1:e} is not resolved");
    assert!(d2.abs() <= 0.5 * d1.abs() + 3.0 * se2, "{d1:e} → {d2:e} ± {se2:e}");
}

#[test]
fn quantum_means_follow_the_classical_path_initially() {
    let p = SystemParams::preset(0.1).unwrap();
    let launch = chaotic_launch_point(&p, DEFAULT_DT).unwrap();
    let (ma, mb) = mode_means(&PhasePoint { q: launch.q, p: launch.p, alpha: launch.alpha, tau: 0.0 }, &p);
    let cfg = HilbertConfig::new(24, 24).unwrap();
    let steps = (15.0 / DEFAULT_DT).round() as usize;
    let classical: Vec<(f64, f64)> = {
        let mut c = launch;
        (0..steps + 1000)
            .map(|_| {
                c = deterministic_step(&c, &p, DEFAULT_DT);
                (c.q, c.p)
            })
            .collect()
    };
    let dist = |x: (f64, f64), y: (f64, f64)| ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt();
    // baseline: the classical path against itself at phase lags spread over one period
    let lags = 10;
    let base = (0..lags)
        .map(|l| {
            let lag = 1 + l * 1000 / lags;
            (0..steps).map(|k| dist(classical[k], classical[k + lag])).sum::<f64>() / steps as f64
        })
        .sum::<f64>()
        / lags as f64;
    let run = |noise: bool, index: u64| {
        let mut eng = EngineConfig::new(Scheme::Ito, DEFAULT_DT);
        eng.truncation_alarm = 1.0;
        eng.noise = noise;
        let mut tr = Trajectory::new(FrameState::coherent(cfg, ma, mb), p, eng, Basis::moving(), 21, index).unwrap();
        (0..steps)
            .map(|k| {
                tr.step().unwrap();
                let s = tr.sample();
                dist((s.q, s.p), classical[k])
            })
            .sum::<f64>()
            / steps as f64
    };
    let drift_only = run(false, 0);
    assert!(drift_only < 0.05, "noiseless quantum–classical distance {drift_only:.3}");
    let noisy: Vec<f64> = (0..6).map(|k| run(true, k)).collect();
    let (mean, _) = mean_sd(&noisy);
    assert!(mean < 0.5 * base, "quantum–classical distance {mean:.3} vs decorrelated baseline {base:.3}");
}

#[test]
fn langevin_without_noise_is_the_deterministic_flow() {
    let p = SystemParams::preset(0.05).unwrap();
    let init = ClassicalState::origin();
    let horizon = 50.0;
    let det = integrate_deterministic(&init, &p, horizon, DEFAULT_DT, 10).unwrap();
    let lan = langevin_trajectory(&init, &p, &NoiseSettings::off(), 0, horizon, DEFAULT_DT, 10).unwrap();
    assert_eq!(det.len(), lan.len());
    for (x, y) in det.samples.iter().zip(&lan.samples) {
        let tol = 1e-8 * x.tau.max(1.0);
        assert!((x.q - y.q).abs() <= tol && (x.p - y.p).abs() <= tol);
    }
}

#[test]
fn unscaled_mean_field_maps_onto_the_rescaled_flow() {
    // the rescaled flow damps p at Γ_m while the Lindblad mean field damps b at
    // Γ_m/2; the change of variables is exact only without mechanical damping
    let p = SystemParams::preset(0.1).unwrap().with_rates(1.0, 0.0);
    let init = ClassicalState::new(0.4, -0.2, C64::new(0.3, 0.1));
    let (mut a, mut b) = mode_means(&PhasePoint { q: init.q, p: init.p, alpha: init.alpha, tau: 0.0 }, &p);
    let mut s = init;
    for _ in 0..(20.0 / DEFAULT_DT) as usize {
        s = deterministic_step(&s, &p, DEFAULT_DT);
        (a, b) = mean_field_step_unscaled(a, b, &p, DEFAULT_DT);
    }
    let o = observables(a, b, &p, s.tau);
    assert!((o.q - s.q).abs() < 1e-6 && (o.p - s.p).abs() < 1e-6 && (o.alpha - s.alpha).norm() < 1e-6);
}

#[test]
fn halving_dt_on_the_periodic_attractor() {
    let p = SystemParams::preset(0.1).unwrap();
    let on_orbit = evolve(&periodic_launch_point(), &p, 100.0 * TAU, DEFAULT_DT).unwrap();
    // a whole number of coarse steps so both runs end at the same time
    let horizon = (100.0 / DEFAULT_DT).round() * DEFAULT_DT;
    let coarse = evolve(&on_orbit, &p, horizon, DEFAULT_DT).unwrap();
    let fine = evolve(&on_orbit, &p, horizon, DEFAULT_DT / 2.0).unwrap();
    let d = (coarse.q - fine.q).abs().max((coarse.p - fine.p).abs()).max((coarse.alpha - fine.alpha).norm());
    assert!(d < 1e-6, "final-state difference {d:e}");
}

#[test]
fn langevin_statistics_are_stable_under_dt_halving() {
    // matched Brownian paths: each coarse increment is the sum of two fine ones
    let p = SystemParams::preset(0.01).unwrap();
    let launch = chaotic_launch_point(&p, DEFAULT_DT).unwrap();
    let horizon = 200.0;
    let fine_dt = DEFAULT_DT / 2.0;
    let (mut coarse_rms, mut fine_rms) = (Vec::new(), Vec::new());
    for k in 0..12 {
        let mut rng = stream(77, k);
        let (mut c, mut f) = (launch, launch);
        let (mut qc, mut qf) = (Vec::new(), Vec::new());
        for _ in 0..(horizon / DEFAULT_DT) as usize {
            let mut sum_p = 0.0;
            let mut sum_a = C64::new(0.0, 0.0);
            for _ in 0..2 {
                let dw_p = fine_dt.sqrt() * normal(&mut rng);
                let dw_a = complex_increment(&mut rng, fine_dt);
                f = langevin_step_with_increments(&f, &p, fine_dt, dw_p, dw_a);
                qf.push(f.q);
                sum_p += dw_p;
                sum_a += dw_a;
            }
            c = langevin_step_with_increments(&c, &p, DEFAULT_DT, sum_p, sum_a);
            qc.push(c.q);
        }
        coarse_rms.push(rms(&qc));
        fine_rms.push(rms(&qf));
    }
    let (mc, sc) = mean_sd(&coarse_rms);
    let (mf, sf) = mean_sd(&fine_rms);
    let se = ((sc * sc + sf * sf) / 12.0).sqrt().max(1e-3);
    assert!((mc - mf).abs() < 4.0 * se, "RMS_q {mc:.4} vs {mf:.4} (se {se:.1e})");
}

fn count_directions(g0: f64, runs: u64, periods: f64) -> (usize, usize) {
    let p = SystemParams::preset(g0).unwrap();
    let cal = calibrate_thresholds(&p, &ClassicalState::origin(), &periodic_launch_point(), DEFAULT_DT).unwrap();
    let launch = chaotic_launch_point(&p, DEFAULT_DT).unwrap();
    let (mut fwd, mut back) = (0, 0);
    for k in 0..runs {
        let rec = langevin_trajectory(&launch, &p, &NoiseSettings::on(11), k, periods * TAU, DEFAULT_DT, 20).unwrap();
        for e in detect_all(&rec.phase_series(), &cal.detector).unwrap() {
            match e.direction {
                Direction::ChaoticToRegular => fwd += 1,
                Direction::RegularToChaotic => back += 1,
            }
        }
    }
    (fwd, back)
}

#[test]
fn reverse_transitions_are_rare_and_vanish_at_weak_coupling() {
    let (fwd, back) = count_directions(0.08, 20, 2000.0);
    assert!(back >= 1, "no regular→chaotic transition at g0 = 0.08");
    assert!(back < fwd, "{back} reverse vs {fwd} forward");
    let (fwd, back) = count_directions(0.045, 10, 2000.0);
    assert_eq!(back, 0, "reverse transitions at g0 = 0.045 ({fwd} forward)");
}
