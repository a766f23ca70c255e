//! Acceptance criteria 1–9, one PASS/FAIL line each.
//!
//! `ACCEPTANCE_ONLY=1,4` runs a subset; `ACCEPTANCE_SKIP_SLOW=1` skips the
//! slow QSD lifetime criteria (3 and 6). Worker count follows `OPTOMECH_WORKERS`.

use std::f64::consts::TAU;
use std::time::Instant;

use optomech::classical::{chaotic_launch_point, evolve, max_lyapunov, ClassicalState, LyapunovSettings, DEFAULT_DT};
use optomech::config::{EngineKind, ExperimentConfig};
use optomech::engines::{drive, Basis, Control, EngineConfig, Scheme, Trajectory};
use optomech::fock_ops::{boson_operators, displacement_matrix, tensor_embed, HilbertConfig, Operator, StateVector, C64};
use optomech::master::{integrate_master, lindblad_rhs, DensityMatrix, MasterOptions};
use optomech::model::{build_hamiltonian, mode_means, PhasePoint, SystemParams};
use optomech::moving_basis::FrameState;
use optomech::runner::{self, EnsembleSpec, Member};
use optomech::stats::{
    calibrate_thresholds, fit_scaling, mean_lifetime_from, periodic_launch_point, Estimator, OnlineDetector, ScalingModel,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    runner::default_workers()
}

// ---------------------------------------------------------------- oracles

/// Weakly driven validation system: N_a = N_b = 5, α_L = 0.1, g0 = 0.1, preset rates.
fn validation_system() -> (SystemParams, HilbertConfig) {
    let mut p = SystemParams::preset(0.1).unwrap();
    p.alpha_l = 0.1;
    p.p_tilde = 8.0 * p.alpha_l.powi(2) * p.g0.powi(2);
    (p, HilbertConfig::new(5, 5).unwrap())
}

/// `|1⟩ ⊗ (|0⟩ + |1⟩)/√2`, so that ⟨b⟩ and ⟨b†b⟩ are not trivially zero.
fn validation_state(cfg: HilbertConfig) -> StateVector {
    let mut a = vec![C64::new(0.0, 0.0); cfg.dim_a()];
    a[1] = C64::new(1.0, 0.0);
    let mut b = vec![C64::new(0.0, 0.0); cfg.dim_b()];
    b[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
    b[1] = C64::new(1.0 / 2f64.sqrt(), 0.0);
    StateVector::product(cfg, &a, &b).unwrap()
}

fn bootstrap_se(xs: &[f64], seed: u64) -> f64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = xs.len();
    let (mut s, mut s2) = (0.0, 0.0);
    let b = 1000;
    for _ in 0..b {
        let m = (0..n).map(|_| xs[rng.gen_range(0..n)]).sum::<f64>() / n as f64;
        s += m;
        s2 += m * m;
    }
    let b = b as f64;
    ((s2 / b - (s / b).powi(2)).max(0.0) * b / (b - 1.0)).sqrt()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let (params, cfg) = validation_system();
    let psi0 = validation_state(cfg);
    let dt = 1e-3;
    let times = [1.0, 5.0, 10.0];
    let h = build_hamiltonian(&params, &cfg, None).unwrap();
    let master = integrate_master(&DensityMatrix::pure(&psi0), &params, &cfg, &h, 10.0, dt, MasterOptions { sample_every: 1000, keep_states: false }).unwrap();
    let m = 500u64;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for scheme in [Scheme::Ito, Scheme::Jump] {
        let samples: Vec<Vec<[f64; 3]>> = runner::par_map(m, workers(), |k| {
            let mut eng = EngineConfig::new(scheme, dt);
            eng.truncation_alarm = 1.0;
            let mut tr = Trajectory::new(FrameState::fixed(&psi0), params, eng, Basis::Fixed, 0xC1, k).unwrap();
            times
                .iter()
                .map(|&t| {
                    while tr.tau() < t - 0.5 * dt {
                        tr.step().unwrap();
                    }
                    let (na, nb) = tr.frame().numbers();
                    let (_, mb) = tr.frame().means();
                    [na, nb, mb.re]
                })
                .collect()
        });
        for (ti, &t) in times.iter().enumerate() {
            let exact = master.at(t).unwrap();
            let want = [exact.n_a, exact.n_b, exact.mean_b.re];
            for (qi, name) in ["n_a", "n_b", "re_b"].iter().enumerate() {
                let xs: Vec<f64> = samples.iter().map(|s| s[ti][qi]).collect();
                let se = bootstrap_se(&xs, 17 + ti as u64 * 3 + qi as u64);
                let z = (mean(&xs) - want[qi]).abs() / se.max(1e-15);
                worst = worst.max(z);
                if z >= 5.0 {
                    lines.push(format!("{}@{t}:{name} z={z:.2}", scheme.as_str()));
                }
            }
        }
    }
    outcome(
        worst < 5.0,
        format!("max |ensemble − master| = {worst:.2} bootstrap SE over 18 comparisons{}", if lines.is_empty() { String::new() } else { format!(" ({})", lines.join(", ")) }),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Outcome {
    let params = SystemParams::preset(0.1).unwrap();
    let s = LyapunovSettings::default();
    let c = max_lyapunov(&params, &ClassicalState::origin(), &s).unwrap();
    let p = max_lyapunov(&params, &periodic_launch_point(), &s).unwrap();
    let pass = c.exponent > 3.0 * c.stderr && p.exponent < 0.0;
    outcome(
        pass,
        format!(
            "chaotic λ = {:.4} ± {:.4} ({:.0}σ); periodic λ = {:.4} ± {:.1e}",
            c.exponent,
            c.stderr,
            c.exponent / c.stderr,
            p.exponent,
            p.stderr
        ),
    )
}

// ---------------------------------------------------------------- criteria 3 and 6

fn qsd_lifetime_config(g0: f64, n: usize, horizon: f64) -> ExperimentConfig {
    config(&format!(
        "[system]\npreset = \"bakemeier_chaos\"\ng0 = {g0}\n[engine]\nkind = \"qsd\"\n[run]\nensemble_size = {n}\nhorizon = {horizon:?}\nseed = 2024\n"
    ))
}

fn qsd_members(g0: f64, n: usize, horizon: f64) -> Vec<Member> {
    let cfg = qsd_lifetime_config(g0, n, horizon);
    let params = cfg.resolved_params().unwrap()[0];
    let detector = runner::detector_for(&cfg, &params).unwrap();
    let spec = EnsembleSpec {
        kind: EngineKind::Qsd,
        params,
        config: cfg,
        detector,
        record_dir: None,
    };
    runner::run_ensemble(&spec, workers())
}

fn criterion_3() -> Outcome {
    let horizon = 500.0;
    let strong = qsd_members(0.1, 50, horizon);
    let valid: Vec<&Member> = strong.iter().filter(|m| m.failure.is_none()).collect();
    let n_invalid = strong.len() - valid.len();
    let mut times: Vec<f64> = valid
        .iter()
        .map(|m| m.first_escape().map_or(f64::INFINITY, |e| e.tau_transition))
        .collect();
    let frac = times.iter().filter(|t| t.is_finite()).count() as f64 / strong.len() as f64;
    let med = median(&mut times);
    let anchor = 55.0;
    let med_ok = med.is_finite() && med >= anchor / 3.0 && med <= anchor * 3.0;
    let weak = qsd_members(0.05, 50, horizon);
    let weak_frac = weak.iter().filter(|m| m.failure.is_none() && m.first_escape().is_some()).count() as f64 / weak.len() as f64;
    let weak_invalid = weak.iter().filter(|m| m.failure.is_some()).count();
    outcome(
        frac >= 0.8 && med_ok && weak_frac <= 0.2,
        format!(
            "g0=0.1: {:.0}% transitioned by τ=500 (need ≥80%), median τ = {med:.1} (need [{:.1}, {:.0}]), {n_invalid} invalid; g0=0.05: {:.0}% (need ≤20%), {weak_invalid} invalid",
            100.0 * frac,
            anchor / 3.0,
            anchor * 3.0,
            100.0 * weak_frac
        ),
    )
}

fn criterion_6() -> Outcome {
    let grid = [0.07, 0.085, 0.1, 0.12];
    let horizon = 3000.0;
    let mut points = Vec::new();
    let mut parts = Vec::new();
    for &g in &grid {
        let members = qsd_members(g, 30, horizon);
        let row = runner::lifetime_row(g, &members, horizon).unwrap();
        parts.push(format!(
            "g0={g}: {:.1}±{:.1} ({}, {}/{} obs, {} inv)",
            row.estimate.mean,
            row.estimate.stderr,
            row.estimate.estimator.as_str(),
            row.estimate.n_observed,
            members.len(),
            row.n_invalid
        ));
        points.push((g, row.estimate.mean));
    }
    let decreasing = points.windows(2).all(|w| w[1].1 < w[0].1);
    let fit = fit_scaling(&points, ScalingModel::Superpersistent);
    let (slope_ok, slope) = match &fit {
        Ok(f) => ((0.4..=1.0).contains(&f.slope.abs()), format!("{:.3}", f.slope)),
        Err(e) => (false, e.to_string()),
    };
    outcome(
        decreasing && slope_ok,
        format!("{}; strictly decreasing: {decreasing}; superpersistent slope {slope} (need |s| in [0.4, 1.0])", parts.join("; ")),
    )
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4() -> Outcome {
    let params = SystemParams::preset(0.1).unwrap();
    let cal = calibrate_thresholds(&params, &ClassicalState::origin(), &periodic_launch_point(), DEFAULT_DT).unwrap();
    let launch = chaotic_launch_point(&params, DEFAULT_DT).unwrap();
    let cfg = HilbertConfig::new(24, 24).unwrap();
    let results: Vec<Result<(bool, f64, f64), String>> = runner::par_map(10, workers(), |k| {
        let start = evolve(&launch, &params, k as f64 * TAU, DEFAULT_DT).map_err(|e| e.to_string())?;
        let (ma, mb) = mode_means(&PhasePoint { q: start.q, p: start.p, alpha: start.alpha, tau: 0.0 }, &params);
        let mut eng = EngineConfig::new(Scheme::Ito, DEFAULT_DT);
        eng.noise = false;
        let mut tr = Trajectory::new(FrameState::coherent(cfg, ma, mb), params, eng, Basis::moving(), 0, k).map_err(|e| e.to_string())?;
        let mut det = OnlineDetector::new(cal.detector).unwrap();
        let (mut sq, mut n) = (0.0, 0usize);
        drive(&mut tr, 500.0, 10, |s| {
            det.push(s.tau, s.q);
            sq += s.q * s.q;
            n += 1;
            Control::Continue
        })
        .map_err(|e| e.to_string())?;
        Ok((det.events().is_empty(), (sq / n as f64).sqrt(), tr.frame().top_populations().1))
    });
    let mut no_events = true;
    let mut worst_rel: f64 = 0.0;
    let mut errors = Vec::new();
    for r in &results {
        match r {
            Ok((quiet, rms, _)) => {
                no_events &= quiet;
                worst_rel = worst_rel.max((rms - cal.rms_chaotic).abs() / cal.rms_chaotic);
            }
            Err(e) => errors.push(e.clone()),
        }
    }
    outcome(
        errors.is_empty() && no_events && worst_rel <= 0.2,
        format!(
            "10 noiseless runs over τ=500: no transition: {no_events}; worst |RMS_q − RMS_classical|/RMS_classical = {worst_rel:.3} (classical {:.4}){}",
            cal.rms_chaotic,
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(" | ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5() -> Outcome {
    let grid = [0.030, 0.035, 0.040, 0.050, 0.065, 0.080];
    let dir = tempfile::tempdir().unwrap();
    let sweep: Vec<String> = grid.iter().map(|g| format!("{g:?}")).collect();
    let cfg = config(&format!(
        "[system]\npreset = \"bakemeier_chaos\"\n[engine]\nkind = \"langevin\"\n[run]\nensemble_size = 1000\nhorizon = {:?}\nseed = 55\nsample_every = 20\nsweep = [{}]\n",
        30000.0 * TAU,
        sweep.join(", ")
    ));
    let report = match runner::run_sweep(&cfg, EngineKind::Langevin, workers(), dir.path()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let sp = report.fits.iter().find(|f| f.model == ScalingModel::Superpersistent);
    let pl = report.fits.iter().find(|f| f.model == ScalingModel::Powerlaw);
    let means: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{}:{:.0}{}", r.g0, r.estimate.mean, if r.estimate.estimator == Estimator::LowerBound { "(lb)" } else { "" }))
        .collect();
    match (sp, pl) {
        (Some(sp), Some(pl)) => outcome(
            (-1.2..=-0.75).contains(&sp.slope) && sp.residual_sum < pl.residual_sum,
            format!(
                "<T> periods {}; superpersistent slope {:.3} (need [−1.2, −0.75]), residual {:.3e} vs powerlaw {:.3e}",
                means.join(" "),
                sp.slope,
                sp.residual_sum,
                pl.residual_sum
            ),
        ),
        _ => outcome(false, format!("fits missing; means {}", means.join(" "))),
    }
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // (a) identical noise on the validation system; the fixed reference is
    // large (N = 40) so that only the frame's own truncation is being tested
    let (params, _) = validation_system();
    let fixed_cfg = HilbertConfig::new(40, 40).unwrap();
    let frame_cfg = HilbertConfig::new(12, 12).unwrap();
    let mut runner_prop = TestRunner::new(PropConfig {
        cases: 6,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let worst = std::cell::Cell::new(0.0f64);
    let res = runner_prop.run(&(any::<u64>(), 0.0..1.0f64), |(seed, mix)| {
        let c = C64::new(mix.sqrt(), 0.0);
        let s = C64::new((1.0 - mix).sqrt(), 0.0);
        let state = |cfg: HilbertConfig| {
            let mut a = vec![C64::new(0.0, 0.0); cfg.dim_a()];
            a[0] = c;
            a[1] = s;
            let mut b = vec![C64::new(0.0, 0.0); cfg.dim_b()];
            b[0] = s;
            b[1] = c;
            StateVector::product(cfg, &a, &b).unwrap()
        };
        let mut eng = EngineConfig::new(Scheme::Ito, 1e-3);
        eng.truncation_alarm = 1.0;
        let mut fixed = Trajectory::new(FrameState::fixed(&state(fixed_cfg)), params, eng, Basis::Fixed, seed, 0).unwrap();
        let mut moving = Trajectory::new(FrameState::fixed(&state(frame_cfg)), params, eng, Basis::moving(), seed, 0).unwrap();
        let mut local: f64 = 0.0;
        while fixed.tau() < 10.0 - 5e-4 {
            fixed.step().unwrap();
            moving.step().unwrap();
            let (f, m) = (fixed.sample(), moving.sample());
            local = local.max((f.q - m.q).abs()).max((f.p - m.p).abs());
        }
        worst.set(worst.get().max(local));
        prop_assert!(local < 1e-4, "max |Δ(q,p)| {local:.3e}");
        Ok(())
    });
    pass &= res.is_ok();
    let worst = worst.get();
    notes.push(format!("fixed vs moving max |Δ(q,p)| = {worst:.2e} over τ=10, moving N=12 against fixed N=40 (need < 1e-4)"));

    // (b) top-level population on the preset chaotic run at equal truncation
    let preset = SystemParams::preset(0.1).unwrap();
    let launch = chaotic_launch_point(&preset, DEFAULT_DT).unwrap();
    let (ma, mb) = mode_means(&PhasePoint { q: launch.q, p: launch.p, alpha: launch.alpha, tau: 0.0 }, &preset);
    let n24 = HilbertConfig::new(24, 24).unwrap();
    let mut eng = EngineConfig::new(Scheme::Ito, DEFAULT_DT);
    eng.truncation_alarm = 1.0;
    let steps = 300;
    let mut moving = Trajectory::new(FrameState::coherent(n24, ma, mb), preset, eng, Basis::moving(), 9, 0).unwrap();
    let mut fixed24 = Trajectory::new(FrameState::fixed(&StateVector::coherent(n24, ma, mb)), preset, eng, Basis::Fixed, 9, 0).unwrap();
    let (mut top_m, mut top_f): (f64, f64) = (0.0, 0.0);
    for _ in 0..steps {
        moving.step().unwrap();
        let s = moving.sample();
        top_m = top_m.max(s.top_a.max(s.top_b));
        if fixed24.step().is_ok() {
            let s = fixed24.sample();
            top_f = top_f.max(s.top_a.max(s.top_b));
        }
    }
    let ratio_ok = top_f >= 10.0 * top_m;
    pass &= ratio_ok;
    notes.push(format!("top-level population at N=24: moving {top_m:.2e}, fixed {top_f:.2e}"));

    // (c) wall clock against a fixed basis large enough to hold the attractor
    let excursion = optomech::classical::integrate_deterministic(&launch, &preset, 100.0 * TAU, DEFAULT_DT, 10).unwrap();
    let (mut amax, mut bmax): (f64, f64) = (0.0, 0.0);
    for s in &excursion.samples {
        let (a, b) = mode_means(&PhasePoint { q: s.q, p: s.p, alpha: C64::from_polar(s.alpha_abs2.sqrt(), 0.0), tau: 0.0 }, &preset);
        amax = amax.max(a.norm());
        bmax = bmax.max(b.norm());
    }
    // Poisson tail of a coherent state below the moving frame's top population
    let size = |r: f64| (r * r + 8.0 * r + 24.0).ceil() as usize;
    let big = HilbertConfig::with_max_dim(size(amax), size(bmax), usize::MAX).unwrap();
    let mut fixed_big = Trajectory::new(FrameState::fixed(&StateVector::coherent(big, ma, mb)), preset, eng, Basis::Fixed, 9, 0).unwrap();
    let mut moving2 = Trajectory::new(FrameState::coherent(n24, ma, mb), preset, eng, Basis::moving(), 9, 0).unwrap();
    let bench = 40;
    let t0 = Instant::now();
    for _ in 0..bench {
        fixed_big.step().unwrap();
    }
    let t_fixed = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    for _ in 0..bench {
        moving2.step().unwrap();
    }
    let t_moving = t0.elapsed().as_secs_f64();
    let top_big = {
        let s = fixed_big.sample();
        s.top_a.max(s.top_b)
    };
    let faster = t_moving < t_fixed && top_big <= top_m.max(1e-12) * 10.0;
    pass &= faster;
    notes.push(format!(
        "{bench} steps: moving N=24 {:.1} ms vs fixed ({}, {}) {:.1} ms (fixed top pop {top_big:.1e})",
        1e3 * t_moving,
        big.n_a,
        big.n_b,
        1e3 * t_fixed
    ));
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let mut prop = TestRunner::new(PropConfig {
        cases: 64,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let worst = std::cell::Cell::new(0.0f64);
    let res = prop.run(&(0.1..2.0f64, 0.01..0.03f64, 4usize..10), |(c, g_lo, n)| {
        let pts: Vec<(f64, f64)> = (0..n).map(|k| g_lo + k as f64 * 0.01).map(|g| (g, (c / g).exp())).collect();
        let f = fit_scaling(&pts, ScalingModel::Superpersistent).unwrap();
        worst.set(worst.get().max((f.slope + 1.0).abs()));
        prop_assert!((f.slope + 1.0).abs() < 1e-6);
        prop_assert!(f.residual_sum < 1e-18);
        Ok(())
    });
    let exact = fit_scaling(
        &(0..5).map(|k| 0.02 + 0.02 * k as f64).map(|g| (g, (0.5 / g).exp())).collect::<Vec<_>>(),
        ScalingModel::Superpersistent,
    )
    .unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2000);
    let lifetimes: Vec<Option<f64>> = (0..2000)
        .map(|_| {
            let t = -50.0 * (1.0 - rng.gen::<f64>()).ln();
            (t <= 100.0).then_some(t)
        })
        .collect();
    let worst = worst.get();
    let est = mean_lifetime_from(&lifetimes, 100.0).unwrap();
    let rel = (est.mean - 50.0).abs() / 50.0;
    outcome(
        res.is_ok() && (exact.slope + 1.0).abs() < 1e-6 && rel < 0.1,
        format!(
            "slope −1 recovered to {:.1e} (random cases worst {worst:.1e}); exponential mean {:.2} vs 50 ({:.1}%, {})",
            (exact.slope + 1.0).abs(),
            est.mean,
            100.0 * rel,
            est.estimator.as_str()
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let mut prop = TestRunner::new(PropConfig {
        cases: 32,
        failure_persistence: None,
        ..PropConfig::default()
    });
    if let Err(e) = prop.run(&(1usize..30), |n| {
        let ops = boson_operators(n).unwrap();
        let c = ops.a.commutator(&ops.a_dag).unwrap();
        for i in 0..=n {
            for j in 0..=n {
                let want = if i != j {
                    0.0
                } else if i == n {
                    -(n as f64)
                } else {
                    1.0
                };
                prop_assert!((c[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        Ok(())
    }) {
        failures.push(format!("commutator: {e}"));
    }
    if let Err(e) = prop.run(&(-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), |(xr, xi, yr, yi)| {
        let (x, y) = (C64::new(xr, xi), C64::new(yr, yi));
        let n = 40;
        let d = displacement_matrix(x, n);
        prop_assert!(d.unitarity_defect < 1e-6, "unitarity {}", d.unitarity_defect);
        let dxy = displacement_matrix(x + y, n).matrix;
        let prod = d.matrix.matmul(&displacement_matrix(y, n).matrix).unwrap();
        let phase = C64::from_polar(1.0, (x * y.conj()).im);
        for i in 0..8 {
            for j in 0..8 {
                prop_assert!((prod[(i, j)] - phase * dxy[(i, j)]).norm() < 1e-6);
            }
        }
        let inv = d.matrix.matmul(&displacement_matrix(-x, n).matrix).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((inv[(i, j)] - C64::new(id, 0.0)).norm() < 1e-6);
            }
        }
        Ok(())
    }) {
        failures.push(format!("displacement: {e}"));
    }
    if let Err(e) = prop.run(&(0.01..0.5f64, 1usize..6, 1usize..6, -2.0..2.0f64, -2.0..2.0f64), |(g0, na, nb, cr, ci)| {
        let p = SystemParams::preset(g0).unwrap();
        let cfg = HilbertConfig::new(na, nb).unwrap();
        for frame in [None, Some((C64::new(cr, ci), C64::new(ci, -cr)))] {
            let h = build_hamiltonian(&p, &cfg, frame).unwrap();
            prop_assert!(h.hermiticity_defect() < 1e-12);
        }
        Ok(())
    }) {
        failures.push(format!("hermiticity: {e}"));
    }
    if let Err(e) = prop.run(&(any::<u64>(), 0.05..0.4f64, 0.0..1.0f64), |(seed, g0, gm)| {
        let cfg = HilbertConfig::new(3, 2).unwrap();
        let p = SystemParams::preset(g0).unwrap().with_rates(1.0, gm);
        let h = build_hamiltonian(&p, &cfg, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Operator::from_fn(cfg.dim(), |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let m = g.matmul(&g.adjoint()).unwrap();
        let rho = DensityMatrix::new(m.scale(C64::new(1.0, 0.0) / m.trace()));
        let gen = optomech::master::Lindbladian::new(&p, &cfg, &h).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); cfg.dim() * cfg.dim()];
        gen.apply(rho.entries.entries(), &mut out);
        let d = Operator::from_fn(cfg.dim(), |r, c| out[r * cfg.dim() + c]);
        prop_assert!(d.trace().norm() < 1e-12, "trace {}", d.trace().norm());
        prop_assert!(d.hermiticity_defect() < 1e-12);
        Ok(())
    }) {
        failures.push(format!("lindblad trace: {e}"));
    }
    // square truncations through the public rhs
    let cfg = HilbertConfig::new(3, 3).unwrap();
    let p = SystemParams::preset(0.2).unwrap();
    let h = build_hamiltonian(&p, &cfg, None).unwrap();
    let n_a = tensor_embed(&cfg, &boson_operators(3).unwrap().n, &Operator::identity(4)).unwrap();
    let rho = DensityMatrix::new(n_a.scale(C64::new(1.0 / n_a.trace().re, 0.0)));
    let tr = lindblad_rhs(&rho, &p, &h).unwrap().trace().norm();
    if tr >= 1e-12 {
        failures.push(format!("lindblad_rhs trace {tr:.2e}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "commutator diagonal, displacement unitarity/composition/inverse, H Hermiticity (fixed and displaced), Lindblad trace preservation: all within tolerance".into()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let skip_slow = std::env::var("ACCEPTANCE_SKIP_SLOW").map_or(false, |v| v == "1");
    let criteria: [(u32, &str, bool, fn() -> Outcome); 9] = [
        (1, "oracle equivalence", false, criterion_1),
        (2, "classical chaos", false, criterion_2),
        (3, "QSD transient chaos", true, criterion_3),
        (4, "noiseless localization", false, criterion_4),
        (5, "Langevin scaling law", false, criterion_5),
        (6, "QSD scaling trend", true, criterion_6),
        (7, "moving-basis equivalence", false, criterion_7),
        (8, "fit exactness", false, criterion_8),
        (9, "operator algebra", false, criterion_9),
    ];
    let mut failed = 0;
    for (id, name, slow, run) in criteria {
        if only.as_ref().map_or(false, |o| !o.contains(&id)) {
            continue;
        }
        if slow && skip_slow {
            println!("SKIP criterion {id} ({name}): slow suite disabled");
            continue;
        }
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        println!("{} criterion {id} ({name}): {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
