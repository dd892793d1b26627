//! Fixed-step solver for the delayed logistic flow
//!
//! ```text
//! u'(t) = u(t) (1 - u(t - tau)) / 2,   u(t) = mu on [-tau, 0],
//! ```
//!
//! by the method of steps: on each interval `[k*tau, (k+1)*tau]` the delayed
//! argument is a known function (the constant history, then the already
//! computed solution), so classic RK4 applies. The step is `h = tau / m`,
//! which puts every multiple of `tau` — where the solution loses one order
//! of smoothness — on a grid node, preserving the RK4 order without any
//! discontinuity tracking. Dense output is cubic Hermite on `(u, u')`,
//! locally O(h^4) like the integrator itself.
//!
//! With `tau = 0` the equation degenerates to the plain logistic ODE; the
//! solver then uses the stage value itself as the delayed argument and the
//! step must be supplied directly.

use crate::error::{Error, Result};

/// Parameters of a solve. For `tau > 0` the step is `tau / steps_per_delay`;
/// for `tau = 0` set `h_no_delay` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeParams {
    pub tau: f64,
    pub mu: f64,
    pub t_end: f64,
    pub steps_per_delay: u32,
    /// Step used when `tau == 0` (the delay no longer defines one).
    pub h_no_delay: Option<f64>,
}

impl DdeParams {
    pub fn new(tau: f64, mu: f64, t_end: f64, steps_per_delay: u32) -> Result<Self> {
        let p = DdeParams {
            tau,
            mu,
            t_end,
            steps_per_delay,
            h_no_delay: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Plain logistic ODE (`tau = 0`) with an explicit step.
    pub fn no_delay(mu: f64, t_end: f64, h: f64) -> Result<Self> {
        let p = DdeParams {
            tau: 0.0,
            mu,
            t_end,
            steps_per_delay: 1,
            h_no_delay: Some(h),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::param(
                "tau",
                format!("delay must be >= 0, got {}", self.tau),
            ));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::param(
                "mu",
                format!("history value must be >= 0, got {}", self.mu),
            ));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::param(
                "t_end",
                format!("horizon must be > 0, got {}", self.t_end),
            ));
        }
        if self.tau > 0.0 {
            if self.steps_per_delay < 4 {
                return Err(Error::param(
                    "steps_per_delay",
                    "need at least 4 steps per delay",
                ));
            }
        } else {
            match self.h_no_delay {
                Some(h) if h > 0.0 && h.is_finite() => {}
                _ => {
                    return Err(Error::param(
                        "h_no_delay",
                        "tau = 0 requires an explicit positive step",
                    ))
                }
            }
        }
        Ok(())
    }

    /// Integration step.
    pub fn step(&self) -> f64 {
        if self.tau > 0.0 {
            self.tau / self.steps_per_delay as f64
        } else {
            self.h_no_delay.expect("validated")
        }
    }
}

/// Dense solution on `[-tau, T]`: node values, node derivatives and the
/// constant history `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeSolution {
    pub params: DdeParams,
    /// Nodes `0 = s_0 < s_1 < ... = T`; uniform step except possibly the
    /// final cell when `T` is off the lattice.
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    /// Node derivatives, consistent with the dense evaluation of the
    /// delayed argument; the value at 0 is the right derivative.
    pub du: Vec<f64>,
}

fn hermite(t: f64, a: f64, b: f64, ua: f64, ub: f64, da: f64, db: f64) -> f64 {
    let w = b - a;
    let s = (t - a) / w;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * ua
        + (s3 - 2.0 * s2 + s) * w * da
        + (-2.0 * s3 + 3.0 * s2) * ub
        + (s3 - s2) * w * db
}

fn eval_prefix(grid: &[f64], u: &[f64], du: &[f64], len: usize, mu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return mu;
    }
    // partition_point gives the first node > t; the cell is the one before.
    let hi = grid[..len].partition_point(|&s| s <= t);
    if hi == 0 {
        return mu;
    }
    let k = hi - 1;
    if grid[k] == t || hi == len {
        // Reading strictly past the front of an incomplete prefix would mean
        // the delayed argument caught up with the integrator.
        debug_assert!(
            len == grid.len() || t == grid[k],
            "delayed evaluation at t = {t} reached the integration front {}",
            grid[k]
        );
        return u[k];
    }
    hermite(t, grid[k], grid[k + 1], u[k], u[k + 1], du[k], du[k + 1])
}

impl DdeSolution {
    /// Dense evaluation on `[-tau, T]`: the constant history for `t <= 0`,
    /// cubic Hermite inside each cell, exact at grid nodes.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < -self.params.tau || t > *self.grid.last().expect("nonempty grid") {
            return Err(Error::Domain(format!(
                "t = {t} outside [{}, {}]",
                -self.params.tau,
                self.grid.last().unwrap()
            )));
        }
        Ok(eval_prefix(
            &self.grid,
            &self.u,
            &self.du,
            self.grid.len(),
            self.params.mu,
            t,
        ))
    }

    pub fn t_end(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }
}

/// Closed-form logistic solution `mu e^{t/2} / (1 + mu (e^{t/2} - 1))`,
/// the `tau = 0` flow started from `mu`.
pub fn logistic_exact(mu: f64, t: f64) -> f64 {
    let e = (0.5 * t).exp();
    mu * e / (1.0 + mu * (e - 1.0))
}

/// Integrate the flow up to `params.t_end`.
pub fn solve_dde(params: &DdeParams) -> Result<DdeSolution> {
    params.validate()?;
    let h = params.step();
    let t_end = params.t_end;
    let mu = params.mu;
    let delayed = params.tau > 0.0;

    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * h;
        if t >= t_end - 1e-9 * h {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(t_end);

    let n = grid.len();
    let mut u = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    u.push(mu);

    for k in 0..n {
        let t = grid[k];
        let uk = u[k];
        if !uk.is_finite() {
            return Err(Error::Divergence {
                t,
                detail: format!("nonfinite value {uk}"),
            });
        }
        if mu > 0.0 && uk <= 0.0 {
            return Err(Error::Divergence {
                t,
                detail: format!("positivity lost (u = {uk}); reduce the step"),
            });
        }
        if delayed {
            // The delayed argument lies at least one full delay (>= 4 cells)
            // behind the integration front, so the prefix passed here is
            // always complete for the cells being read.
            let d_node = eval_prefix(&grid, &u, &du, u.len(), mu, t - params.tau);
            du.push(0.5 * uk * (1.0 - d_node));
            if k + 1 == n {
                break;
            }
            let w = grid[k + 1] - t;
            let d_mid = eval_prefix(&grid, &u, &du, u.len(), mu, t + 0.5 * w - params.tau);
            let d_next = eval_prefix(&grid, &u, &du, u.len(), mu, t + w - params.tau);
            let f = |x: f64, d: f64| 0.5 * x * (1.0 - d);
            let k1 = f(uk, d_node);
            let k2 = f(uk + 0.5 * w * k1, d_mid);
            let k3 = f(uk + 0.5 * w * k2, d_mid);
            let k4 = f(uk + w * k3, d_next);
            u.push(uk + w / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        } else {
            let f = |x: f64| 0.5 * x * (1.0 - x);
            du.push(f(uk));
            if k + 1 == n {
                break;
            }
            let w = grid[k + 1] - t;
            let k1 = f(uk);
            let k2 = f(uk + 0.5 * w * k1);
            let k3 = f(uk + 0.5 * w * k2);
            let k4 = f(uk + w * k3);
            u.push(uk + w / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
    }

    Ok(DdeSolution {
        params: params.clone(),
        grid,
        u,
        du,
    })
}
