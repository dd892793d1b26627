//! Long-memory birth/death chain on the nonnegative half-line.
//!
//! The state is a window `x = (x_{-W+1}, ..., x_0)` of `W = floor(tau*N) + 1`
//! nonnegative reals, where `x_0` is the current population and `x_{-j}` the
//! population `j` jumps back. Each jump shifts the window left by one and
//! replaces the current value:
//!
//! - up:   `x_0 -> x_0 * (1 + 1/N)`
//! - down: `x_0 -> max(0, x_0 * (1 - x_oldest / N^2))`
//!
//! where `x_oldest` is the pre-shift oldest coordinate. Both directions fire
//! with probability 1/2; in continuous time the jumps are paced by i.i.d.
//! unit-rate exponential holding times. The scaled trajectory records
//!
//! - `y(t) = X_oldest(N(t+tau)) / N` for `t in [-tau, 0)`,
//! - `y(t) = X_0(N t) / N` and `z(t) = X_oldest(N t) / N` for `t >= 0`,
//!
//! both cadlag-sampled on a macroscopic grid. With the parameters scaled this
//! way, `y` tracks the delayed logistic flow `u' = u (1 - u(.-tau)) / 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Default cap on the expected number of jumps (and on the window length).
pub const DEFAULT_MAX_JUMPS: u64 = 1_000_000_000;

/// Jump-chain capacity for exhaustive path enumeration (`2^n` paths).
pub const MAX_ENUMERATION_JUMPS: u32 = 24;

/// Simulation parameters.
///
/// `n` is the scaling parameter; `tau`, `mu`, `t_end` and `grid_dt` live on
/// the macroscopic time axis. The same `(params, seed)` pair always produces
/// the same trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Scaling parameter N (window length, population scale, clock speed).
    pub n: u64,
    /// Macroscopic delay; the memory window holds `floor(tau*n) + 1` values.
    pub tau: f64,
    /// Initial macroscopic density; every window entry starts at `mu * n`.
    pub mu: f64,
    /// Macroscopic horizon T.
    pub t_end: f64,
    /// Recording step on the macroscopic grid.
    pub grid_dt: f64,
    /// Seed for the per-trajectory random stream (ChaCha8).
    pub seed: u64,
}

impl SimParams {
    pub fn new(n: u64, tau: f64, mu: f64, t_end: f64, grid_dt: f64, seed: u64) -> Result<Self> {
        let p = SimParams {
            n,
            tau,
            mu,
            t_end,
            grid_dt,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::param("n", "scaling parameter must be >= 1"));
        }
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::param(
                "tau",
                format!("delay must be > 0, got {}", self.tau),
            ));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::param(
                "mu",
                format!("initial density must be >= 0, got {}", self.mu),
            ));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::param(
                "t_end",
                format!("horizon must be > 0, got {}", self.t_end),
            ));
        }
        if !self.grid_dt.is_finite() || self.grid_dt <= 0.0 || self.grid_dt > self.t_end {
            return Err(Error::param(
                "grid_dt",
                format!(
                    "recording step must satisfy 0 < dt <= T, got {}",
                    self.grid_dt
                ),
            ));
        }
        Ok(())
    }

    /// Window length `W = floor(tau * n) + 1`.
    pub fn window_len(&self) -> usize {
        (self.tau * self.n as f64).floor() as usize + 1
    }

    /// Non-fatal notes about the parameter choice.
    ///
    /// The deterministic limit is only guaranteed for densities in (0, 1);
    /// larger starting densities are accepted and simply flagged.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.mu > 0.0 && self.mu < 1.0) {
            w.push(format!(
                "mu = {} lies outside (0, 1); the deterministic limit is only guaranteed there, simulating anyway",
                self.mu
            ));
        }
        w
    }
}

/// Jump direction of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Up,
    Down,
}

/// The memory window, stored as a ring buffer.
///
/// `head` is the physical slot of the oldest coordinate. A transition
/// overwrites that slot with the new current value and advances the head,
/// so both shifts are O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    entries: Vec<f64>,
    head: usize,
    n: u64,
}

impl ChainState {
    /// Flat initial window: every coordinate equals `mu * n`.
    pub fn init(params: &SimParams) -> ChainState {
        let w = params.window_len();
        ChainState {
            entries: vec![params.mu * params.n as f64; w],
            head: 0,
            n: params.n,
        }
    }

    /// Build a state from logical coordinates `(x_{-W+1}, ..., x_0)`.
    pub fn from_entries(n: u64, entries: Vec<f64>) -> Result<ChainState> {
        if entries.is_empty() {
            return Err(Error::param(
                "entries",
                "window must hold at least one value",
            ));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(
                "entries",
                format!("coordinates must be finite and >= 0, got {bad}"),
            ));
        }
        if n < 1 {
            return Err(Error::param("n", "scaling parameter must be >= 1"));
        }
        Ok(ChainState {
            entries,
            head: 0,
            n,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn window_len(&self) -> usize {
        self.entries.len()
    }

    /// Current population `x_0`.
    pub fn current(&self) -> f64 {
        let w = self.entries.len();
        self.entries[(self.head + w - 1) % w]
    }

    /// Oldest coordinate `x_{-W+1}` (the delayed value driving down-jumps).
    pub fn oldest(&self) -> f64 {
        self.entries[self.head]
    }

    /// Logical window `(x_{-W+1}, ..., x_0)` as a plain vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let w = self.entries.len();
        (0..w).map(|i| self.entries[(self.head + i) % w]).collect()
    }

    fn next_value(&self, step: Step) -> f64 {
        let nf = self.n as f64;
        let x0 = self.current();
        match step {
            Step::Up => x0 * (1.0 + 1.0 / nf),
            Step::Down => (x0 * (1.0 - self.oldest() / (nf * nf))).max(0.0),
        }
    }

    /// Apply one transition in place. Returns the value that fell out of the
    /// window so the move can be undone (used by the path enumerator).
    fn apply(&mut self, step: Step) -> f64 {
        let new = self.next_value(step);
        let evicted = self.entries[self.head];
        self.entries[self.head] = new;
        self.head = (self.head + 1) % self.entries.len();
        evicted
    }

    fn unapply(&mut self, evicted: f64) {
        let w = self.entries.len();
        self.head = (self.head + w - 1) % w;
        self.entries[self.head] = evicted;
    }

    /// Apply one transition in place.
    pub fn step(&mut self, step: Step) {
        self.apply(step);
    }

    /// Generator applied to the scaled-current observable `x_0 / N`:
    /// `(f(up) - f(x))/2 + (f(down) - f(x))/2` with the down-jump clamp.
    pub fn generator_drift(&self) -> f64 {
        let nf = self.n as f64;
        let x0 = self.current();
        let up = x0 * (1.0 + 1.0 / nf);
        let down = (x0 * (1.0 - self.oldest() / (nf * nf))).max(0.0);
        0.5 * (up - x0) / nf + 0.5 * (down - x0) / nf
    }
}

/// Out-of-place up-shift.
pub fn theta_plus(state: &ChainState) -> ChainState {
    let mut s = state.clone();
    s.step(Step::Up);
    s
}

/// Out-of-place down-shift (with the clamp at zero).
pub fn theta_minus(state: &ChainState) -> ChainState {
    let mut s = state.clone();
    s.step(Step::Down);
    s
}

/// One jump of the scaled path, recorded at jump resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Macroscopic jump instants `J_k / N`, increasing.
    pub times: Vec<f64>,
    /// Direction of each jump.
    pub directions: Vec<Step>,
    /// Post-jump scaled current value `x_0 / N`.
    pub y_after: Vec<f64>,
    /// Post-jump scaled oldest value `x_{-W+1} / N`.
    pub z_after: Vec<f64>,
}

impl JumpRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Scaled sample path on the macroscopic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: SimParams,
    /// Grid over `[-tau, T]`: multiples of `grid_dt` plus the endpoints.
    pub times: Vec<f64>,
    /// `y(t)` at each grid time (cadlag value).
    pub y: Vec<f64>,
    /// `z(t)` at each grid time; `None` for `t < 0`.
    pub z: Vec<Option<f64>>,
    /// Jumps performed up to microscopic time `N * T`.
    pub jump_count: u64,
    /// Jump-resolution record, kept when diagnostics are requested.
    pub jumps: Option<JumpRecord>,
}

/// Knobs for `simulate_opts`; `SimOptions::default()` matches `simulate`.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub record_jumps: bool,
    /// Cap on the expected jump count and on the window length, checked
    /// before any allocation.
    pub max_jumps: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            record_jumps: false,
            max_jumps: DEFAULT_MAX_JUMPS,
        }
    }
}

/// Macroscopic recording grid: every multiple of `dt` in `[-tau, t_end]`,
/// with `-tau`, `0` and `t_end` always present.
pub fn macro_grid(tau: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let snap = dt * 1e-9;
    let k_min = (-tau / dt - 1e-9).ceil() as i64;
    let k_max = (t_end / dt + 1e-9).floor() as i64;
    let mut grid: Vec<f64> = (k_min..=k_max).map(|k| k as f64 * dt).collect();
    if let Some(first) = grid.first_mut() {
        if (*first + tau).abs() <= snap {
            *first = -tau;
        }
    }
    if let Some(last) = grid.last_mut() {
        if (*last - t_end).abs() <= snap {
            *last = t_end;
        }
    }
    if grid.first().is_none_or(|f| *f > -tau + snap) {
        grid.insert(0, -tau);
    }
    if grid.last().is_none_or(|l| *l < t_end - snap) {
        grid.push(t_end);
    }
    grid.dedup();
    grid
}

enum RecordKind {
    /// `t < 0`: read the oldest coordinate at microscopic time `N (t + tau)`.
    Past,
    /// `t >= 0`: read current and oldest at microscopic time `N t`.
    Present,
}

/// Simulate one trajectory; the random stream is seeded from `params.seed`.
pub fn simulate(params: &SimParams) -> Result<Trajectory> {
    simulate_opts(params, &SimOptions::default())
}

/// Simulate with the jump-resolution record retained (needed by the
/// semimartingale diagnostics).
pub fn simulate_recorded(params: &SimParams) -> Result<Trajectory> {
    simulate_opts(
        params,
        &SimOptions {
            record_jumps: true,
            ..SimOptions::default()
        },
    )
}

pub fn simulate_opts(params: &SimParams, opts: &SimOptions) -> Result<Trajectory> {
    params.validate()?;
    let nf = params.n as f64;
    // The past branch of y needs the oldest coordinate on [0, N*tau], so the
    // microscopic horizon covers max(tau, T).
    let horizon = params.t_end.max(params.tau);
    let expected_jumps = nf * horizon;
    if expected_jumps > opts.max_jumps as f64 {
        return Err(Error::Resource(format!(
            "expected jump count {expected_jumps:.3e} exceeds the limit of {}",
            opts.max_jumps
        )));
    }
    if params.window_len() as u64 > opts.max_jumps {
        return Err(Error::Resource(format!(
            "window length {} exceeds the limit of {}",
            params.window_len(),
            opts.max_jumps
        )));
    }

    let times = macro_grid(params.tau, params.t_end, params.grid_dt);
    // Recording events in microscopic time. A stable sort keeps simultaneous
    // events in grid order, and cadlag sampling means an event at the exact
    // instant of a jump reads the post-jump state.
    let mut events: Vec<(f64, usize, RecordKind)> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if t < 0.0 {
                (nf * (t + params.tau), k, RecordKind::Past)
            } else {
                (nf * t, k, RecordKind::Present)
            }
        })
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite event times"));

    let end_micro = nf * horizon;
    let end_micro_t = nf * params.t_end;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = ChainState::init(params);

    let mut y = vec![0.0; times.len()];
    let mut z: Vec<Option<f64>> = vec![None; times.len()];
    let mut record = opts.record_jumps.then(|| JumpRecord {
        times: Vec::with_capacity((expected_jumps * 1.1) as usize + 16),
        directions: Vec::new(),
        y_after: Vec::new(),
        z_after: Vec::new(),
    });

    let mut clock = 0.0_f64;
    let mut jump_count = 0u64;
    let mut next_event = 0usize;
    loop {
        let hold: f64 = Exp1.sample(&mut rng);
        let next_jump = clock + hold;
        while next_event < events.len() && events[next_event].0 < next_jump {
            let (_, k, ref kind) = events[next_event];
            match kind {
                RecordKind::Past => y[k] = state.oldest() / nf,
                RecordKind::Present => {
                    y[k] = state.current() / nf;
                    z[k] = Some(state.oldest() / nf);
                }
            }
            next_event += 1;
        }
        if next_jump > end_micro {
            break;
        }
        clock = next_jump;
        // One uniform draw picks the direction, threshold 1/2.
        let dir = if rng.random::<f64>() < 0.5 {
            Step::Up
        } else {
            Step::Down
        };
        state.step(dir);
        if clock <= end_micro_t {
            jump_count += 1;
        }
        if let Some(rec) = record.as_mut() {
            rec.times.push(clock / nf);
            rec.directions.push(dir);
            rec.y_after.push(state.current() / nf);
            rec.z_after.push(state.oldest() / nf);
        }
    }
    // Events at or beyond the last jump see the final state.
    for &(_, k, ref kind) in &events[next_event..] {
        match kind {
            RecordKind::Past => y[k] = state.oldest() / nf,
            RecordKind::Present => {
                y[k] = state.current() / nf;
                z[k] = Some(state.oldest() / nf);
            }
        }
    }

    Ok(Trajectory {
        params: params.clone(),
        times,
        y,
        z,
        jump_count,
        jumps: record,
    })
}

/// Exact expectation of `observable` after `n_jumps` steps of the discrete
/// jump chain, by enumerating all `2^n` up/down words.
pub fn enumerate_expectation<F>(params: &SimParams, n_jumps: u32, observable: F) -> Result<f64>
where
    F: Fn(&ChainState) -> f64,
{
    params.validate()?;
    if n_jumps > MAX_ENUMERATION_JUMPS {
        return Err(Error::Capacity(format!(
            "enumeration over 2^{n_jumps} paths exceeds the 2^{MAX_ENUMERATION_JUMPS} limit"
        )));
    }
    let mut state = ChainState::init(params);
    let mut acc = 0.0;
    fn walk<F: Fn(&ChainState) -> f64>(state: &mut ChainState, left: u32, obs: &F, acc: &mut f64) {
        if left == 0 {
            *acc += obs(state);
            return;
        }
        for dir in [Step::Up, Step::Down] {
            let evicted = state.apply(dir);
            walk(state, left - 1, obs, acc);
            state.unapply(evicted);
        }
    }
    walk(&mut state, n_jumps, &observable, &mut acc);
    Ok(acc / (1u64 << n_jumps) as f64)
}
