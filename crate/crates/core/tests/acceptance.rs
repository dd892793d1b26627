//! End-to-end verification suite. Every test prints one PASS line with the
//! measured quantities; tolerances are fixed in the assertions.

use std::time::{Duration, Instant};

use dll_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ensemble(
    n: u64,
    tau: f64,
    mu: f64,
    t_end: f64,
    seed: u64,
    replicas: usize,
    collect: Vec<Metric>,
) -> EnsembleSpec {
    let base = SimParams::new(n, tau, mu, t_end, 0.01, seed).unwrap();
    let dde = DdeParams::new(tau, mu, t_end, 64).unwrap();
    EnsembleSpec::new(base, replicas, dde, collect).unwrap()
}

fn check_runtime(elapsed: Duration, budget_s: f64, what: &str) {
    assert!(
        elapsed.as_secs_f64() < budget_s,
        "{what} took {elapsed:?}, budget {budget_s} s"
    );
}

/// Criterion 1: the pathwise decomposition closes to 1e-9 at every grid
/// point, for 50 seeds at N = 1000, within 5 seconds.
#[test]
fn criterion_01_pathwise_dynkin_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let p = SimParams::new(1000, 1.0, 0.5, 5.0, 0.01, 1000 + seed).unwrap();
        let rep = decompose(&simulate_recorded(&p).unwrap()).unwrap();
        let m = rep
            .residual_check
            .iter()
            .map(|r| r.abs())
            .fold(0.0, f64::max);
        worst = worst.max(m);
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-9, "worst residual {worst:e}");
    check_runtime(elapsed, 5.0, "decomposition of 50 paths");
    println!("criterion 01 PASS: max |residual| = {worst:.3e} over 50 paths in {elapsed:?}");
}

/// Criterion 2: exhaustive 2^10 enumeration agrees with 1e5 Monte Carlo
/// replicas of the jump chain within 4 standard errors, within 2 seconds.
#[test]
fn criterion_02_oracle_equivalence() {
    let start = Instant::now();
    let p = SimParams::new(5, 1.0, 0.5, 1.0, 0.5, 0).unwrap();
    let exact = enumerate_expectation(&p, 10, |s| s.current()).unwrap();

    let reps = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_811);
    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    for _ in 0..reps {
        let mut s = ChainState::init(&p);
        for _ in 0..10 {
            let dir = if rng.random::<f64>() < 0.5 {
                Step::Up
            } else {
                Step::Down
            };
            s.step(dir);
        }
        let v = s.current();
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / reps as f64;
    let var = (sumsq - sum * sum / reps as f64) / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    let elapsed = start.elapsed();
    assert!(
        (mean - exact).abs() <= 4.0 * se,
        "MC mean {mean} vs exact {exact}, se {se}"
    );
    check_runtime(elapsed, 2.0, "oracle cross-check");
    println!("criterion 02 PASS: exact {exact:.6}, MC {mean:.6} (se {se:.6}), {elapsed:?}");
}

/// Criterion 3: the delay gap y(s - tau) - z(s) is exactly zero before tau,
/// on every path and every integration segment. Zero tolerance.
#[test]
fn criterion_03_delay_gap_vanishes_before_tau() {
    for seed in 0..50u64 {
        let p = SimParams::new(1000, 1.0, 0.5, 5.0, 0.01, 3000 + seed).unwrap();
        let rep = decompose(&simulate_recorded(&p).unwrap()).unwrap();
        assert_eq!(rep.delay_gap_before_tau, 0.0, "seed {seed}");
        // Cumulated replacement drift is still exactly zero at t = tau.
        let at_tau = rep.times.iter().position(|&t| t == 1.0).unwrap();
        assert_eq!(rep.drift_replacement[at_tau], 0.0, "seed {seed}");
    }
    println!("criterion 03 PASS: delay gap identically zero on [0, tau) for 50 paths");
}

/// Criterion 4: the martingale part shrinks by >= 2.5x from N = 500 to
/// N = 8000 and the quadratic variation scales like 1/N, within 60 seconds.
#[test]
fn criterion_04_martingale_vanishing() {
    let start = Instant::now();
    let spec = ensemble(
        500,
        1.0,
        0.5,
        5.0,
        77,
        200,
        vec![Metric::SupMartingale, Metric::QvT],
    );
    let sweep = scaling_study(&spec, &[500, 2000, 8000]).unwrap();
    let sup_small = sweep.per_n.first().unwrap().stats[0].mean;
    let sup_large = sweep.per_n.last().unwrap().stats[0].mean;
    let factor = sup_small / sup_large;
    let alpha = sweep.fits[1].alpha.expect("qv_T means are positive");
    let elapsed = start.elapsed();
    assert!(factor >= 2.5, "sup |M| factor {factor}");
    assert!(
        (-1.3..=-0.7).contains(&alpha),
        "qv_T exponent {alpha} outside [-1.3, -0.7]"
    );
    check_runtime(elapsed, 60.0, "martingale sweep");
    println!(
        "criterion 04 PASS: sup|M| {sup_small:.4} -> {sup_large:.4} (factor {factor:.2}), qv_T alpha {alpha:.3}, {elapsed:?}"
    );
}

/// Criterion 5: the integrated replacement error decreases in N and is
/// below 0.02 at N = 16000, within 90 seconds.
#[test]
fn criterion_05_replacement_error() {
    let start = Instant::now();
    let spec = ensemble(1000, 1.0, 0.5, 5.0, 55, 50, vec![Metric::SupReplacement]);
    let sweep = scaling_study(&spec, &[1000, 4000, 16000]).unwrap();
    let means: Vec<f64> = sweep.per_n.iter().map(|st| st.stats[0].mean).collect();
    let elapsed = start.elapsed();
    assert!(
        means.windows(2).all(|w| w[1] < w[0]),
        "means not monotone decreasing: {means:?}"
    );
    assert!(
        means[2] <= 0.02,
        "mean sup |I_N| at N=16000 is {}",
        means[2]
    );
    check_runtime(elapsed, 90.0, "replacement sweep");
    println!(
        "criterion 05 PASS: mean sup|I_N| = {:.5} / {:.5} / {:.5} over N = 1e3/4e3/1.6e4, {elapsed:?}",
        means[0], means[1], means[2]
    );
}

/// Criterion 6: the sup deviation of the initial segment fits a power law
/// with exponent in [-0.8, -0.3].
#[test]
fn criterion_06_initial_condition_convergence() {
    let spec = ensemble(500, 1.0, 0.5, 1.0, 66, 50, vec![Metric::SupInitialDev]);
    let sweep = scaling_study(&spec, &[500, 2000, 8000, 32000]).unwrap();
    let alpha = sweep.fits[0].alpha.expect("positive means");
    assert!(
        (-0.8..=-0.3).contains(&alpha),
        "initial-segment exponent {alpha} outside [-0.8, -0.3]"
    );
    println!("criterion 06 PASS: sup_initial_dev alpha = {alpha:.3}");
}

/// Criterion 7: every jump of the scaled path is bounded by the jump
/// envelope over N, exactly; the mean largest jump scales like 1/N.
#[test]
fn criterion_07_jump_sizes() {
    for (n, seed0) in [(500u64, 100u64), (2000, 200), (8000, 300)] {
        for k in 0..20u64 {
            let p = SimParams::new(n, 1.0, 0.5, 3.0, 0.01, seed0 + k).unwrap();
            let traj = simulate_recorded(&p).unwrap();
            let h = compute_h(&traj).unwrap();
            let mj = max_jump(&traj).unwrap();
            assert!(
                mj <= h / n as f64,
                "N={n} seed={}: max jump {mj} exceeds H/N = {}",
                seed0 + k,
                h / n as f64
            );
        }
    }
    let spec = ensemble(500, 1.0, 0.5, 3.0, 44, 100, vec![Metric::MaxJump]);
    let sweep = scaling_study(&spec, &[500, 1000, 2000, 4000]).unwrap();
    let alpha = sweep.fits[0].alpha.expect("positive means");
    assert!(
        (-1.3..=-0.7).contains(&alpha),
        "max-jump exponent {alpha} outside [-1.3, -0.7]"
    );
    println!("criterion 07 PASS: pathwise bound exact on 60 paths, max_jump alpha = {alpha:.3}");
}

/// Criterion 8: empirical p-th moments of the path sups respect the
/// all-up-jump envelope bounds, for p in {1, 2, 4} and N in {100, 1000}.
#[test]
fn criterion_08_moment_bounds() {
    let (tau, mu, t_end) = (1.0, 0.5, 3.0);
    for n in [100u64, 1000] {
        let spec = ensemble(
            n,
            tau,
            mu,
            t_end,
            33,
            500,
            vec![
                Metric::MomentSupY(1),
                Metric::MomentSupY(2),
                Metric::MomentSupY(4),
                Metric::MomentSupZ(1),
                Metric::MomentSupZ(2),
                Metric::MomentSupZ(4),
            ],
        );
        let stats = run_ensemble(&spec).unwrap();
        for p in [1u32, 2, 4] {
            let growth = (1.0 + 1.0 / n as f64).powi(p as i32 - 1);
            let bound_y = mu.powi(p as i32) * (p as f64 * growth * t_end).exp();
            let bound_z = (2.0 * mu).powi(p as i32) * (p as f64 * growth * t_end).exp();
            let got_y = stats.stat(Metric::MomentSupY(p)).unwrap().mean;
            let got_z = stats.stat(Metric::MomentSupZ(p)).unwrap().mean;
            assert!(
                got_y <= bound_y,
                "N={n} p={p}: sup-y moment {got_y} > bound {bound_y}"
            );
            assert!(
                got_z <= bound_z,
                "N={n} p={p}: sup-z moment {got_z} > bound {bound_z}"
            );
        }
    }
    println!("criterion 08 PASS: all 12 moment bounds hold with zero violations");
}

/// Criterion 9: the clamp overflow term is identically zero at desk scale
/// and exact on a synthetic overflowing path.
#[test]
fn criterion_09_clamp_term() {
    for (n, mu, seed) in [(100u64, 0.5, 1u64), (1000, 0.5, 2), (100, 2.0, 3)] {
        let p = SimParams::new(n, 1.0, mu, 3.0, 0.01, seed).unwrap();
        let traj = simulate_recorded(&p).unwrap();
        let (sup, integral) = clamp_term(&traj);
        assert_eq!(sup, 0.0, "N={n} mu={mu}");
        assert_eq!(integral, 0.0, "N={n} mu={mu}");
        assert!(!decompose(&traj).unwrap().clamp_fired);
    }

    // Synthetic path sitting one unit above the clamp threshold.
    let n = 4u64;
    let dt = 0.25;
    let times = macro_grid(1.0, 1.0, dt);
    let y: Vec<f64> = times
        .iter()
        .map(|&t| if t < 0.0 { 0.5 } else { 1.5 })
        .collect();
    let z: Vec<Option<f64>> = times
        .iter()
        .map(|&t| (t >= 0.0).then_some(n as f64 + 1.0))
        .collect();
    let traj = Trajectory {
        params: SimParams::new(n, 1.0, 0.5, 1.0, dt, 0).unwrap(),
        times,
        y,
        z,
        jump_count: 0,
        jumps: None,
    };
    let (sup, integral) = clamp_term(&traj);
    assert_eq!(sup, 1.0);
    assert_eq!(integral, 1.5); // z overflow 1 times y = 1.5 over unit time
    println!("criterion 09 PASS: overflow zero at desk scale, synthetic case exact");
}

/// Criterion 10: the solver converges at fourth order against the closed
/// form with no delay, within 1 second.
#[test]
fn criterion_10_dde_solver_order() {
    let start = Instant::now();
    let mut errs = Vec::new();
    for &h in &[0.1, 0.05, 0.025] {
        let sol = solve_dde(&DdeParams::no_delay(0.5, 10.0, h).unwrap()).unwrap();
        let err = sol
            .grid
            .iter()
            .zip(&sol.u)
            .map(|(&t, &v)| (v - logistic_exact(0.5, t)).abs())
            .fold(0.0f64, f64::max);
        errs.push(err);
    }
    let elapsed = start.elapsed();
    let r01 = errs[0] / errs[1];
    let r12 = errs[1] / errs[2];
    assert!((12.0..=20.0).contains(&r01), "halving ratio {r01}");
    assert!((12.0..=20.0).contains(&r12), "halving ratio {r12}");
    check_runtime(elapsed, 1.0, "order sweep");
    println!(
        "criterion 10 PASS: errors {:.3e}/{:.3e}/{:.3e}, ratios {r01:.1} and {r12:.1}, {elapsed:?}",
        errs[0], errs[1], errs[2]
    );
}

/// Criterion 11: the sup distance to the reference solution is below 0.05
/// at N = 2e4 and shrinks to at most 0.6x its N = 2.5e3 value, within
/// 120 seconds.
#[test]
fn criterion_11_main_convergence() {
    let start = Instant::now();
    let mean_at = |n: u64| {
        let mut spec = ensemble(n, 1.0, 0.5, 10.0, 11, 20, vec![Metric::SupError]);
        spec.base.seed = derive_seed(11, n);
        run_ensemble(&spec).unwrap().stats[0].mean
    };
    let coarse = mean_at(2_500);
    let fine = mean_at(20_000);
    let elapsed = start.elapsed();
    assert!(fine <= 0.05, "mean sup_error {fine} at N = 2e4");
    assert!(
        fine <= 0.6 * coarse,
        "no decrease: {coarse} -> {fine} (ratio {})",
        fine / coarse
    );
    check_runtime(elapsed, 120.0, "convergence ensembles");
    println!(
        "criterion 11 PASS: mean sup_error {coarse:.4} (N=2.5e3) -> {fine:.4} (N=2e4), ratio {:.2}, {elapsed:?}",
        fine / coarse
    );
}

/// Criterion 12: delay 2.5 settles to the constant profile, delay 3.2
/// sustains an oscillation with period near 4*tau, and a single large-N
/// chain run stays within 0.1 of the reference in the oscillating regime.
#[test]
fn criterion_12_hopf_phenomenology() {
    let sub = solve_dde(&DdeParams::new(2.5, 2.0, 200.0, 64).unwrap()).unwrap();
    let m_sub = oscillation_metrics(&sub.grid, &sub.u, (197.5, 200.0)).unwrap();
    assert!(
        m_sub.amplitude <= 0.01,
        "subcritical tail amplitude {}",
        m_sub.amplitude
    );

    let sup = solve_dde(&DdeParams::new(3.2, 2.0, 200.0, 64).unwrap()).unwrap();
    let m_sup = oscillation_metrics(&sup.grid, &sup.u, (150.0, 200.0)).unwrap();
    assert!(
        m_sup.amplitude >= 0.1,
        "supercritical amplitude {}",
        m_sup.amplitude
    );
    let period = m_sup.period.expect("sustained oscillation has crossings");
    assert!(
        (10.0..=14.0).contains(&period),
        "supercritical period {period} outside [10, 14]"
    );

    let p = SimParams::new(50_000, 3.2, 2.0, 40.0, 0.01, 2026).unwrap();
    let traj = simulate(&p).unwrap();
    let sol = solve_dde(&DdeParams::new(3.2, 2.0, 40.0, 64).unwrap()).unwrap();
    let err = sup_error_within(&traj, &sol, 0.0, 40.0).unwrap();
    assert!(err <= 0.1, "chain vs reference sup error {err}");
    println!(
        "criterion 12 PASS: tail amplitude {:.1e} (tau=2.5), amplitude {:.2} period {period:.1} (tau=3.2), chain error {err:.3}",
        m_sub.amplitude, m_sup.amplitude
    );
}
