//! Pathwise analysis of a simulated trajectory.
//!
//! Between jumps both `y` and `z` are constant, so every time integral below
//! is a finite sum over jump intervals and the decomposition identity holds
//! at machine precision. Writing `y_d(s) = y(s - tau)`, `d = y_d - z` and
//! `z_excess = max(0, z - N)`, the scaled path satisfies exactly
//!
//! ```text
//! y(t) - y(0) = 1/2 int_0^t y (1 - y_d) ds      (drift_main)
//!             + 1/2 int_tau^t y d ds            (drift_replacement)
//!             + 1/2 int_0^t y z_excess ds       (drift_clamp)
//!             + m(t),
//! ```
//!
//! where `m(t) = y(t) - y(0) - 1/2 int_0^t y (1 - min(z, N)) ds` is the
//! compensated (martingale) part and its predictable quadratic variation is
//! `qv(t) = 1/(2N) int_0^t [y^2 + (y min(z, N))^2] ds` (clamped down-jump
//! size). For `s < tau` the delayed value and `z` are the same coordinate of
//! the window, so `d` vanishes there identically — not approximately.

use crate::chain::Trajectory;
use crate::dde::DdeSolution;
use crate::error::{Error, Result};

/// Terms of the pathwise decomposition, cumulated at the grid times `>= 0`.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    /// Grid times in `[0, T]`.
    pub times: Vec<f64>,
    /// `y` at those times (cadlag).
    pub y: Vec<f64>,
    pub drift_main: Vec<f64>,
    pub drift_replacement: Vec<f64>,
    pub drift_clamp: Vec<f64>,
    pub martingale: Vec<f64>,
    pub qv: Vec<f64>,
    /// `y(t) - y(0)` minus all four terms; zero up to rounding.
    pub residual_check: Vec<f64>,
    /// Largest `|d|` seen on `[tau, T]`.
    pub sup_abs_delay_gap: f64,
    /// Largest `|d|` seen on `[0, tau)`; exactly zero by construction.
    pub delay_gap_before_tau: f64,
    /// Largest `y` over the integrated segments.
    pub sup_y: f64,
    /// Whether the down-jump clamp could have fired anywhere (`z > N`).
    pub clamp_fired: bool,
    pub n: u64,
    pub tau: f64,
    pub t_end: f64,
    pub mu: f64,
}

/// Amplitude / period summary of an oscillating sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationMetrics {
    /// Half the peak-to-trough range over the window.
    pub amplitude: f64,
    /// Mean gap between upward crossings of the window mean; absent when
    /// fewer than 3 crossings were seen.
    pub period: Option<f64>,
    /// Time average over the window.
    pub mean_level: f64,
}

/// Step-function view of the jump record: index 0 is the initial state,
/// index i > 0 the state right after jump i.
struct PathSteps<'a> {
    times: &'a [f64],
    y_after: &'a [f64],
    z_after: &'a [f64],
    mu: f64,
}

impl<'a> PathSteps<'a> {
    fn y(&self, idx: usize) -> f64 {
        if idx == 0 {
            self.mu
        } else {
            self.y_after[idx - 1]
        }
    }

    fn z(&self, idx: usize) -> f64 {
        if idx == 0 {
            self.mu
        } else {
            self.z_after[idx - 1]
        }
    }
}

/// Compute the full decomposition from a trajectory with jump records.
pub fn decompose(traj: &Trajectory) -> Result<DecompositionReport> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let p = &traj.params;
    let nf = p.n as f64;
    let tau = p.tau;
    let t_end = p.t_end;
    let steps = PathSteps {
        times: &rec.times,
        y_after: &rec.y_after,
        z_after: &rec.z_after,
        mu: p.mu,
    };

    let grid: Vec<f64> = traj.times.iter().copied().filter(|&t| t >= 0.0).collect();

    // Breakpoints of the integrands: jump times (y, z change), jump times
    // shifted by tau (the delayed value changes), the branch switch at tau,
    // and the grid times where cumulants are emitted. Shifted times reuse
    // the exact expression `t + tau` so index advancement below agrees with
    // the sort order bit for bit.
    let mut bps: Vec<f64> = Vec::with_capacity(2 * rec.times.len() + grid.len() + 3);
    bps.push(0.0);
    bps.push(t_end);
    if tau <= t_end {
        bps.push(tau);
    }
    bps.extend_from_slice(&grid);
    for &t in rec.times.iter() {
        if t < t_end {
            bps.push(t);
        }
        let shifted = t + tau;
        if shifted < t_end {
            bps.push(shifted);
        }
    }
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));

    let mut iy = 0usize; // jumps applied at the current position
    let mut idel = 0usize; // jumps applied at the delayed position
    let (mut dm, mut dr, mut dc, mut gen, mut qv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut out = DecompositionReport {
        times: Vec::with_capacity(grid.len()),
        y: Vec::with_capacity(grid.len()),
        drift_main: Vec::with_capacity(grid.len()),
        drift_replacement: Vec::with_capacity(grid.len()),
        drift_clamp: Vec::with_capacity(grid.len()),
        martingale: Vec::with_capacity(grid.len()),
        qv: Vec::with_capacity(grid.len()),
        residual_check: Vec::with_capacity(grid.len()),
        sup_abs_delay_gap: 0.0,
        delay_gap_before_tau: 0.0,
        sup_y: 0.0,
        clamp_fired: false,
        n: p.n,
        tau,
        t_end,
        mu: p.mu,
    };
    let mut gp = 0usize;

    for i in 0..bps.len() {
        let a = bps[i];
        while iy < steps.times.len() && steps.times[iy] <= a {
            iy += 1;
        }
        while idel < steps.times.len() && steps.times[idel] + tau <= a {
            idel += 1;
        }
        while gp < grid.len() && grid[gp] == a {
            let yt = steps.y(iy);
            let mart = yt - p.mu - gen;
            out.times.push(a);
            out.y.push(yt);
            out.drift_main.push(dm);
            out.drift_replacement.push(dr);
            out.drift_clamp.push(dc);
            out.martingale.push(mart);
            out.qv.push(qv);
            out.residual_check.push(yt - p.mu - dm - dr - dc - mart);
            gp += 1;
        }
        if i + 1 == bps.len() {
            break;
        }
        let len = bps[i + 1] - a;
        if len <= 0.0 {
            continue;
        }
        let y = steps.y(iy);
        let z = steps.z(iy);
        // Before tau the delayed value IS the oldest coordinate, read from
        // the same float, so the gap is exactly zero there.
        let y_del = if a < tau { z } else { steps.y(idel) };
        let gap = y_del - z;
        let z_cap = z.min(nf);
        let z_excess = (z - nf).max(0.0);
        if z_excess > 0.0 {
            out.clamp_fired = true;
        }
        if a < tau {
            out.delay_gap_before_tau = out.delay_gap_before_tau.max(gap.abs());
        } else {
            out.sup_abs_delay_gap = out.sup_abs_delay_gap.max(gap.abs());
        }
        out.sup_y = out.sup_y.max(y);

        dm += 0.5 * y * (1.0 - y_del) * len;
        dr += 0.5 * y * gap * len;
        dc += 0.5 * y * z_excess * len;
        gen += 0.5 * y * (1.0 - z_cap) * len;
        qv += (y * y + (y * z_cap) * (y * z_cap)) * len / (2.0 * nf);
    }
    debug_assert_eq!(gp, grid.len());

    Ok(out)
}

/// Integrated replacement error `i(t) = 1/2 int_tau^t y d ds`: the sup of
/// `|i|` over the grid restricted to `[tau, T]`, plus the full curve.
pub fn replacement_error(report: &DecompositionReport) -> Result<(f64, Vec<(f64, f64)>)> {
    if report.t_end <= report.tau {
        return Err(Error::Domain(format!(
            "replacement error needs T > tau (T = {}, tau = {})",
            report.t_end, report.tau
        )));
    }
    let curve: Vec<(f64, f64)> = report
        .times
        .iter()
        .zip(&report.drift_replacement)
        .filter(|(t, _)| **t >= report.tau)
        .map(|(&t, &v)| (t, v))
        .collect();
    let sup = curve.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max);
    Ok((sup, curve))
}

/// Tail bound `exp(-N c(s, tau))` with `c(s, tau) = tau (s/tau - 1 - ln(s/tau))`
/// for the probability that fewer than `floor(tau N)` jumps happened by
/// microscopic time `N s`. Vacuous (and rejected) for `s <= tau`.
pub fn poisson_undershoot_bound(s: f64, tau: f64, n: u64) -> Result<f64> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    if !s.is_finite() || s <= tau {
        return Err(Error::Domain(format!(
            "bound needs s > tau, got s = {s}, tau = {tau}"
        )));
    }
    let r = s / tau;
    let c = tau * (r - 1.0 - r.ln());
    Ok((-(n as f64) * c).exp())
}

/// Clamp overflow `z_excess(s) = max(0, z(s) - N)`: its sup over the grid and
/// the integral `int_0^T y z_excess ds` (exact over jump segments when the
/// record is present, grid-resolution left rule otherwise).
pub fn clamp_term(traj: &Trajectory) -> (f64, f64) {
    let nf = traj.params.n as f64;
    let sup = traj
        .z
        .iter()
        .flatten()
        .map(|&z| (z - nf).max(0.0))
        .fold(0.0f64, f64::max);

    let integral = if let Some(rec) = &traj.jumps {
        let steps = PathSteps {
            times: &rec.times,
            y_after: &rec.y_after,
            z_after: &rec.z_after,
            mu: traj.params.mu,
        };
        let t_end = traj.params.t_end;
        let mut acc = 0.0;
        let mut prev = 0.0;
        let mut idx = 0usize;
        for (i, &t) in rec.times.iter().enumerate() {
            if t >= t_end {
                break;
            }
            acc += steps.y(idx) * (steps.z(idx) - nf).max(0.0) * (t - prev);
            prev = t;
            idx = i + 1;
        }
        acc + steps.y(idx) * (steps.z(idx) - nf).max(0.0) * (t_end - prev)
    } else {
        let mut acc = 0.0;
        for k in 0..traj.times.len().saturating_sub(1) {
            if traj.times[k] < 0.0 {
                continue;
            }
            if let Some(z) = traj.z[k] {
                acc += traj.y[k] * (z - nf).max(0.0) * (traj.times[k + 1] - traj.times[k]);
            }
        }
        acc
    };
    (sup, integral)
}

/// Jump envelope `H = sup_s (y + y z)` over the recorded path (initial state
/// included), at jump resolution.
pub fn compute_h(traj: &Trajectory) -> Result<f64> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let mu = traj.params.mu;
    let mut h = mu + mu * mu;
    for (&y, &z) in rec.y_after.iter().zip(&rec.z_after) {
        h = h.max(y + y * z);
    }
    Ok(h)
}

/// Largest single jump of the scaled path, `max |Delta y|` over the record.
pub fn max_jump(traj: &Trajectory) -> Result<f64> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let mut prev = traj.params.mu;
    let mut m = 0.0f64;
    for &y in &rec.y_after {
        m = m.max((y - prev).abs());
        prev = y;
    }
    Ok(m)
}

/// Sup of `|y - mu|` over the past branch `[-tau, 0)`, at jump resolution.
/// On that branch `y` reads the oldest window coordinate, i.e. the recorded
/// `z` stream before macroscopic time `tau`.
pub fn sup_initial_dev(traj: &Trajectory) -> Result<f64> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let mu = traj.params.mu;
    let tau = traj.params.tau;
    let mut dev = 0.0f64;
    for (&t, &z) in rec.times.iter().zip(&rec.z_after) {
        if t >= tau {
            break;
        }
        dev = dev.max((z - mu).abs());
    }
    Ok(dev)
}

/// Sup of the path over `[0, T]` at jump resolution (initial value included).
pub fn path_sup_y(traj: &Trajectory) -> Result<f64> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let t_end = traj.params.t_end;
    let mut m = traj.params.mu;
    for (&t, &y) in rec.times.iter().zip(&rec.y_after) {
        if t > t_end {
            break;
        }
        m = m.max(y);
    }
    Ok(m)
}

/// Sup of the oldest-coordinate path over `[0, T]` at jump resolution.
pub fn path_sup_z(traj: &Trajectory) -> Result<f64> {
    let rec = traj.jumps.as_ref().ok_or(Error::MissingJumpRecord)?;
    let t_end = traj.params.t_end;
    let mut m = traj.params.mu;
    for (&t, &z) in rec.times.iter().zip(&rec.z_after) {
        if t > t_end {
            break;
        }
        m = m.max(z);
    }
    Ok(m)
}

/// Max over the trajectory grid of `|y(t_k) - u(t_k)|` against a reference
/// solution covering the same domain.
pub fn sup_error(traj: &Trajectory, sol: &DdeSolution) -> Result<f64> {
    sup_error_within(traj, sol, -traj.params.tau, traj.params.t_end)
}

/// Same as [`sup_error`] restricted to grid times in `[lo, hi]`.
pub fn sup_error_within(traj: &Trajectory, sol: &DdeSolution, lo: f64, hi: f64) -> Result<f64> {
    if sol.params.tau != traj.params.tau {
        return Err(Error::Domain(format!(
            "delay mismatch: trajectory tau = {}, solution tau = {}",
            traj.params.tau, sol.params.tau
        )));
    }
    if sol.t_end() < traj.params.t_end {
        return Err(Error::Domain(format!(
            "solution horizon {} does not cover the trajectory horizon {}",
            sol.t_end(),
            traj.params.t_end
        )));
    }
    let mut sup = 0.0f64;
    for (&t, &y) in traj.times.iter().zip(&traj.y) {
        if t < lo || t > hi {
            continue;
        }
        sup = sup.max((y - sol.eval(t)?).abs());
    }
    Ok(sup)
}

/// Amplitude, mean level and mean upward-crossing period of `values` sampled
/// at `times`, over the window `[a, b]`. Needs at least 10 samples in the
/// window; the period needs at least 3 upward crossings of the window mean.
pub fn oscillation_metrics(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<OscillationMetrics> {
    let (a, b) = window;
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::Domain(format!("empty window [{a}, {b}]")));
    }
    if times.len() != values.len() {
        return Err(Error::Domain("times and values differ in length".into()));
    }
    let lo = times.partition_point(|&t| t < a);
    let hi = times.partition_point(|&t| t <= b);
    let k = hi.saturating_sub(lo);
    if k < 10 {
        return Err(Error::Domain(format!(
            "window holds {k} samples, need at least 10"
        )));
    }
    let (ts, vs) = (&times[lo..hi], &values[lo..hi]);

    let max = vs.iter().cloned().fold(f64::MIN, f64::max);
    let min = vs.iter().cloned().fold(f64::MAX, f64::min);
    let amplitude = (max - min) / 2.0;

    let span = ts[k - 1] - ts[0];
    if span <= 0.0 {
        return Err(Error::Domain(
            "window samples do not span positive time".into(),
        ));
    }
    let mut integral = 0.0;
    for i in 1..k {
        integral += 0.5 * (vs[i] + vs[i - 1]) * (ts[i] - ts[i - 1]);
    }
    let mean_level = integral / span;

    let mut crossings = Vec::new();
    for i in 1..k {
        if vs[i - 1] < mean_level && vs[i] >= mean_level {
            let f = (mean_level - vs[i - 1]) / (vs[i] - vs[i - 1]);
            crossings.push(ts[i - 1] + f * (ts[i] - ts[i - 1]));
        }
    }
    let period = if crossings.len() >= 3 {
        let gaps = crossings.len() - 1;
        Some((crossings[gaps] - crossings[0]) / gaps as f64)
    } else {
        None
    };

    Ok(OscillationMetrics {
        amplitude,
        period,
        mean_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{simulate_recorded, JumpRecord, SimParams, Trajectory};
    use crate::dde::{solve_dde, DdeParams};

    fn synthetic_no_jump(n: u64, tau: f64, mu: f64, t_end: f64, dt: f64) -> Trajectory {
        let times = crate::chain::macro_grid(tau, t_end, dt);
        let y = vec![mu; times.len()];
        let z = times.iter().map(|&t| (t >= 0.0).then_some(mu)).collect();
        Trajectory {
            params: SimParams::new(n, tau, mu, t_end, dt, 0).unwrap(),
            times,
            y,
            z,
            jump_count: 0,
            jumps: Some(JumpRecord {
                times: vec![],
                directions: vec![],
                y_after: vec![],
                z_after: vec![],
            }),
        }
    }

    #[test]
    fn no_jump_path_has_closed_form_terms() {
        let (mu, t_end) = (0.5, 2.0);
        let traj = synthetic_no_jump(100, 1.0, mu, t_end, 0.25);
        let rep = decompose(&traj).unwrap();
        for (k, &t) in rep.times.iter().enumerate() {
            let expected = 0.5 * t * mu * (1.0 - mu);
            assert!((rep.drift_main[k] - expected).abs() < 1e-15);
            assert!((rep.martingale[k] + expected).abs() < 1e-15);
            assert_eq!(rep.drift_replacement[k], 0.0);
            assert_eq!(rep.drift_clamp[k], 0.0);
            assert_eq!(rep.residual_check[k], 0.0);
        }
    }

    #[test]
    fn residual_vanishes_on_simulated_paths() {
        let p = SimParams::new(100, 1.0, 0.5, 3.0, 0.01, 11).unwrap();
        let traj = simulate_recorded(&p).unwrap();
        let rep = decompose(&traj).unwrap();
        assert!(traj.jump_count > 0);
        let worst = rep
            .residual_check
            .iter()
            .map(|r| r.abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-9, "worst residual {worst}");
        // qv is nondecreasing.
        assert!(rep.qv.windows(2).all(|w| w[1] >= w[0]));
        // The gap is exactly zero before tau, on every segment.
        assert_eq!(rep.delay_gap_before_tau, 0.0);
        // Cumulated replacement drift is still exactly zero at t = tau.
        let at_tau = rep.times.iter().position(|&t| t == 1.0).unwrap();
        assert_eq!(rep.drift_replacement[at_tau], 0.0);
    }

    #[test]
    fn decompose_requires_jump_records() {
        let p = SimParams::new(50, 1.0, 0.5, 1.0, 0.25, 3).unwrap();
        let traj = crate::chain::simulate(&p).unwrap();
        assert!(matches!(decompose(&traj), Err(Error::MissingJumpRecord)));
    }

    #[test]
    fn replacement_error_curve_and_coarse_bound() {
        let p = SimParams::new(200, 1.0, 0.5, 4.0, 0.05, 5).unwrap();
        let rep = decompose(&simulate_recorded(&p).unwrap()).unwrap();
        let (sup, curve) = replacement_error(&rep).unwrap();
        assert_eq!(curve.first().map(|c| c.1), Some(0.0));
        let coarse = 0.5 * p.t_end * rep.sup_y * rep.sup_abs_delay_gap;
        assert!(sup <= coarse + 1e-15, "sup {sup} vs coarse bound {coarse}");
        // T <= tau is rejected.
        let p = SimParams::new(50, 2.0, 0.5, 1.5, 0.25, 5).unwrap();
        let rep = decompose(&simulate_recorded(&p).unwrap()).unwrap();
        assert!(replacement_error(&rep).is_err());
    }

    #[test]
    fn undershoot_bound_matches_hand_values() {
        // s -> tau+ gives exponent ~ 0, bound ~ 1.
        let b = poisson_undershoot_bound(1.0 + 1e-9, 1.0, 1000).unwrap();
        assert!((b - 1.0).abs() < 1e-9);
        // tau = 1, s = e: c = e - 2.
        let b = poisson_undershoot_bound(std::f64::consts::E, 1.0, 1).unwrap();
        let c = std::f64::consts::E - 2.0;
        assert!((b - (-c).exp()).abs() < 1e-15);
        // tau = 1, s = 2, N = 100: c = 1 - ln 2.
        let b = poisson_undershoot_bound(2.0, 1.0, 100).unwrap();
        let c = 1.0 - std::f64::consts::LN_2;
        assert!((b.ln() + 100.0 * c).abs() < 1e-9);
        assert!(poisson_undershoot_bound(1.0, 1.0, 10).is_err());
        assert!(poisson_undershoot_bound(0.5, 1.0, 10).is_err());
    }

    #[test]
    fn clamp_term_is_zero_at_desk_scale() {
        let p = SimParams::new(100, 1.0, 2.0, 5.0, 0.1, 17).unwrap();
        let traj = simulate_recorded(&p).unwrap();
        let (sup, integral) = clamp_term(&traj);
        assert_eq!(sup, 0.0);
        assert_eq!(integral, 0.0);
        assert!(!decompose(&traj).unwrap().clamp_fired);
    }

    #[test]
    fn clamp_term_on_a_synthetic_overflowing_path() {
        let n = 4u64;
        let dt = 0.25;
        let times = crate::chain::macro_grid(1.0, 1.0, dt);
        let y: Vec<f64> = times
            .iter()
            .map(|&t| if t < 0.0 { 0.5 } else { 2.0 + t })
            .collect();
        let z = times
            .iter()
            .map(|&t| (t >= 0.0).then_some(n as f64 + 1.0))
            .collect();
        let traj = Trajectory {
            params: SimParams::new(n, 1.0, 0.5, 1.0, dt, 0).unwrap(),
            times: times.clone(),
            y: y.clone(),
            z,
            jump_count: 0,
            jumps: None,
        };
        let (sup, integral) = clamp_term(&traj);
        assert_eq!(sup, 1.0);
        // z_excess = 1, so the integral is the left-rule integral of y.
        let expected: f64 = times
            .iter()
            .zip(&y)
            .filter(|(t, _)| **t >= 0.0 && **t < 1.0)
            .map(|(_, &v)| v * dt)
            .sum();
        assert!((integral - expected).abs() < 1e-15);
    }

    #[test]
    fn jump_envelope_and_jump_sizes() {
        let traj = synthetic_no_jump(10, 1.0, 0.5, 1.0, 0.25);
        assert_eq!(compute_h(&traj).unwrap(), 0.75);
        assert_eq!(max_jump(&traj).unwrap(), 0.0);

        let traj = synthetic_no_jump(10, 1.0, 0.0, 1.0, 0.25);
        assert_eq!(compute_h(&traj).unwrap(), 0.0);

        for seed in 0..20u64 {
            let p = SimParams::new(150, 1.0, 0.5, 3.0, 0.1, seed).unwrap();
            let traj = simulate_recorded(&p).unwrap();
            let h = compute_h(&traj).unwrap();
            let mj = max_jump(&traj).unwrap();
            assert!(
                mj <= h / 150.0,
                "seed {seed}: max jump {mj} > H/N {}",
                h / 150.0
            );
        }
    }

    #[test]
    fn initial_deviation_shrinks_with_n() {
        let dev_at = |n: u64| {
            let mut acc = 0.0;
            for seed in 0..20u64 {
                let p = SimParams::new(n, 1.0, 0.5, 1.0, 0.5, 900 + seed).unwrap();
                acc += sup_initial_dev(&simulate_recorded(&p).unwrap()).unwrap();
            }
            acc / 20.0
        };
        let (d_small, d_large) = (dev_at(200), dev_at(3200));
        assert!(d_large < d_small, "mean dev {d_small} -> {d_large}");
    }

    #[test]
    fn sup_error_is_zero_against_matching_samples() {
        let p = DdeParams::new(1.0, 0.5, 2.0, 16).unwrap();
        let sol = solve_dde(&p).unwrap();
        let times = crate::chain::macro_grid(1.0, 2.0, 0.25);
        let y: Vec<f64> = times.iter().map(|&t| sol.eval(t).unwrap()).collect();
        let z = times.iter().map(|&t| (t >= 0.0).then_some(0.5)).collect();
        let traj = Trajectory {
            params: SimParams::new(100, 1.0, 0.5, 2.0, 0.25, 0).unwrap(),
            times,
            y,
            z,
            jump_count: 0,
            jumps: None,
        };
        assert_eq!(sup_error(&traj, &sol).unwrap(), 0.0);

        // Constant-one trajectory against the fixed point.
        let sol1 = solve_dde(&DdeParams::new(1.0, 1.0, 2.0, 16).unwrap()).unwrap();
        let times = crate::chain::macro_grid(1.0, 2.0, 0.25);
        let traj1 = Trajectory {
            params: SimParams::new(100, 1.0, 1.0, 2.0, 0.25, 0).unwrap(),
            y: vec![1.0; times.len()],
            z: times.iter().map(|&t| (t >= 0.0).then_some(1.0)).collect(),
            times,
            jump_count: 0,
            jumps: None,
        };
        assert!(sup_error(&traj1, &sol1).unwrap() <= 1e-12);

        // Mismatched delay is a domain error.
        assert!(sup_error(&traj1, &sol).is_ok());
        let sol_other = solve_dde(&DdeParams::new(0.5, 1.0, 2.0, 16).unwrap()).unwrap();
        assert!(sup_error(&traj1, &sol_other).is_err());
    }

    #[test]
    fn oscillation_metrics_on_synthetic_signals() {
        // Constant signal: zero amplitude, no period.
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let vals = vec![2.5; times.len()];
        let m = oscillation_metrics(&times, &vals, (0.0, 9.9)).unwrap();
        assert_eq!(m.amplitude, 0.0);
        assert_eq!(m.period, None);
        assert!((m.mean_level - 2.5).abs() < 1e-12);

        // Sine with period 2, sampled 100 times per period.
        let period = 2.0;
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * 0.02).collect();
        let vals: Vec<f64> = times
            .iter()
            .map(|&t| (2.0 * std::f64::consts::PI * t / period).sin())
            .collect();
        let m = oscillation_metrics(&times, &vals, (0.0, 10.0)).unwrap();
        assert!(
            (m.amplitude - 1.0).abs() <= 0.02,
            "amplitude {}",
            m.amplitude
        );
        let p = m.period.expect("enough crossings");
        assert!((p - period).abs() <= 0.02 * period, "period {p}");

        // Too few samples in the window.
        assert!(oscillation_metrics(&times, &vals, (0.0, 0.1)).is_err());
    }

    #[test]
    fn statistical_martingale_bound_over_replicas() {
        let replicas = 60u64;
        let (mut mart_sum, mut qv_sum) = (0.0, 0.0);
        for i in 0..replicas {
            let p = SimParams::new(400, 1.0, 0.5, 3.0, 0.5, 7000 + i).unwrap();
            let rep = decompose(&simulate_recorded(&p).unwrap()).unwrap();
            mart_sum += rep.martingale.last().unwrap();
            qv_sum += rep.qv.last().unwrap();
        }
        let mean_mart = mart_sum / replicas as f64;
        let mean_qv = qv_sum / replicas as f64;
        assert!(
            mean_mart.abs() <= 3.0 * (mean_qv / replicas as f64).sqrt(),
            "mean martingale {mean_mart}, mean qv {mean_qv}"
        );
    }
}
