//! Seeded replica ensembles and convergence-rate fits.
//!
//! Replica `i` of an ensemble runs on seed `derive_seed(master, i)`, a
//! splitmix64 step, so streams are independent and any replica can be
//! reproduced in isolation. Replicas execute in parallel but are reduced in
//! index order into preallocated slots, so aggregates are bit-identical at
//! any worker count. Parameter sweeps additionally mix the scaling parameter
//! into the master seed, so enlarging the sweep never perturbs existing
//! points.

use rayon::prelude::*;

use crate::chain::{simulate, simulate_recorded, SimParams, Trajectory};
use crate::dde::{solve_dde, DdeParams, DdeSolution};
use crate::diagnostics::{
    decompose, max_jump, path_sup_y, path_sup_z, replacement_error, sup_error, sup_initial_dev,
    DecompositionReport,
};
use crate::error::{Error, Result};

/// splitmix64 increment (the 64-bit golden ratio).
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replica seed: the `index`-th output of the splitmix64 stream started at
/// `master`. Stateless, collision-free in the index for any fixed master.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64_finalize(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for replica `index` at sweep point `n`: the scaling parameter is
/// mixed into the master first.
pub fn derive_seed_for_n(master: u64, n: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, n), index)
}

/// Per-replica scalar extracted from a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Sup over the grid of `|y - u|` against the reference solution.
    SupError,
    /// Sup over `[tau, T]` of the integrated replacement error.
    SupReplacement,
    /// Martingale part at the horizon (signed).
    MartingaleT,
    /// Sup over the grid of the absolute martingale part.
    SupMartingale,
    /// Predictable quadratic variation at the horizon.
    QvT,
    /// Sup over `[-tau, 0)` of `|y - mu|`.
    SupInitialDev,
    /// Largest single jump of the scaled path.
    MaxJump,
    /// `p`-th power of the path sup over `[0, T]`.
    MomentSupY(u32),
    /// `p`-th power of the oldest-coordinate sup over `[0, T]`.
    MomentSupZ(u32),
}

impl Metric {
    fn needs_records(self) -> bool {
        !matches!(self, Metric::SupError)
    }

    fn needs_decompose(self) -> bool {
        matches!(
            self,
            Metric::SupReplacement | Metric::MartingaleT | Metric::SupMartingale | Metric::QvT
        )
    }

    fn needs_reference(self) -> bool {
        matches!(self, Metric::SupError)
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "sup_error" => Some(Metric::SupError),
            "sup_I_N" => Some(Metric::SupReplacement),
            "martingale_T" => Some(Metric::MartingaleT),
            "sup_martingale" => Some(Metric::SupMartingale),
            "qv_T" => Some(Metric::QvT),
            "sup_initial_dev" => Some(Metric::SupInitialDev),
            "max_jump" => Some(Metric::MaxJump),
            _ => {
                let (kind, p) = s.rsplit_once('_')?;
                let p: u32 = p.parse().ok()?;
                match kind {
                    "moment_y" => Some(Metric::MomentSupY(p)),
                    "moment_z" => Some(Metric::MomentSupZ(p)),
                    _ => None,
                }
            }
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::SupError => write!(f, "sup_error"),
            Metric::SupReplacement => write!(f, "sup_I_N"),
            Metric::MartingaleT => write!(f, "martingale_T"),
            Metric::SupMartingale => write!(f, "sup_martingale"),
            Metric::QvT => write!(f, "qv_T"),
            Metric::SupInitialDev => write!(f, "sup_initial_dev"),
            Metric::MaxJump => write!(f, "max_jump"),
            Metric::MomentSupY(p) => write!(f, "moment_y_{p}"),
            Metric::MomentSupZ(p) => write!(f, "moment_z_{p}"),
        }
    }
}

/// What to run and what to collect.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    /// Parameters of every replica; `seed` is the master seed.
    pub base: SimParams,
    pub replicas: usize,
    /// Reference solve, matching `(tau, mu)` with a horizon covering `T`.
    pub dde_ref: DdeParams,
    pub collect: Vec<Metric>,
    /// Keep the per-replica metric values in the stats.
    pub retain_values: bool,
    /// Aggregate the grid curves into a mean/min/max band.
    pub retain_curves: bool,
}

impl EnsembleSpec {
    pub fn new(
        base: SimParams,
        replicas: usize,
        dde_ref: DdeParams,
        collect: Vec<Metric>,
    ) -> Result<Self> {
        let spec = EnsembleSpec {
            base,
            replicas,
            dde_ref,
            collect,
            retain_values: false,
            retain_curves: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.dde_ref.validate()?;
        if self.replicas < 1 {
            return Err(Error::param("replicas", "need at least one replica"));
        }
        if self.dde_ref.tau != self.base.tau || self.dde_ref.mu != self.base.mu {
            return Err(Error::param(
                "dde_ref",
                format!(
                    "reference (tau = {}, mu = {}) must match the chain (tau = {}, mu = {})",
                    self.dde_ref.tau, self.dde_ref.mu, self.base.tau, self.base.mu
                ),
            ));
        }
        if self.dde_ref.t_end < self.base.t_end {
            return Err(Error::param(
                "dde_ref",
                format!(
                    "reference horizon {} shorter than the chain horizon {}",
                    self.dde_ref.t_end, self.base.t_end
                ),
            ));
        }
        if self.collect.is_empty() {
            return Err(Error::param("collect", "no metrics requested"));
        }
        Ok(())
    }
}

/// Summary of one metric over the replicas.
#[derive(Debug, Clone)]
pub struct MetricStats {
    pub metric: Metric,
    pub mean: f64,
    /// Unbiased sample variance (zero for a single replica).
    pub variance: f64,
    /// `sqrt(variance / replicas)`.
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub values: Option<Vec<f64>>,
}

/// Pointwise band of the replica grid curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBand {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Replica-aggregated results, with enough provenance to rerun.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub master_seed: u64,
    pub replicas: usize,
    pub params: SimParams,
    pub stats: Vec<MetricStats>,
    pub band: Option<CurveBand>,
}

impl EnsembleStats {
    pub fn stat(&self, metric: Metric) -> Option<&MetricStats> {
        self.stats.iter().find(|s| s.metric == metric)
    }
}

struct ReplicaOut {
    metrics: Vec<f64>,
    curve: Option<Vec<f64>>,
}

fn replica_metrics(
    spec: &EnsembleSpec,
    reference: Option<&DdeSolution>,
    traj: &Trajectory,
    report: Option<&DecompositionReport>,
) -> Result<Vec<f64>> {
    spec.collect
        .iter()
        .map(|metric| -> Result<f64> {
            Ok(match metric {
                Metric::SupError => sup_error(traj, reference.expect("reference solved"))?,
                Metric::SupReplacement => replacement_error(report.expect("decomposed"))?.0,
                Metric::MartingaleT => *report.expect("decomposed").martingale.last().unwrap(),
                Metric::SupMartingale => report
                    .expect("decomposed")
                    .martingale
                    .iter()
                    .map(|m| m.abs())
                    .fold(0.0, f64::max),
                Metric::QvT => *report.expect("decomposed").qv.last().unwrap(),
                Metric::SupInitialDev => sup_initial_dev(traj)?,
                Metric::MaxJump => max_jump(traj)?,
                Metric::MomentSupY(p) => path_sup_y(traj)?.powi(*p as i32),
                Metric::MomentSupZ(p) => path_sup_z(traj)?.powi(*p as i32),
            })
        })
        .collect()
}

/// Run the ensemble. Replicas are independent and may run on any number of
/// workers; the reduction is sequential in replica order.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    spec.validate()?;
    let needs_records = spec.collect.iter().any(|m| m.needs_records());
    let needs_decompose = spec.collect.iter().any(|m| m.needs_decompose());
    let reference = if spec.collect.iter().any(|m| m.needs_reference()) {
        Some(solve_dde(&spec.dde_ref)?)
    } else {
        None
    };
    let master = spec.base.seed;

    let outs: Vec<Result<ReplicaOut>> = (0..spec.replicas)
        .into_par_iter()
        .map(|i| {
            let mut params = spec.base.clone();
            params.seed = derive_seed(master, i as u64);
            let traj = if needs_records {
                simulate_recorded(&params)?
            } else {
                simulate(&params)?
            };
            let report = if needs_decompose {
                Some(decompose(&traj)?)
            } else {
                None
            };
            let metrics = replica_metrics(spec, reference.as_ref(), &traj, report.as_ref())?;
            Ok(ReplicaOut {
                metrics,
                curve: spec.retain_curves.then(|| traj.y.clone()),
            })
        })
        .collect();

    let mut per_metric: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.replicas); spec.collect.len()];
    let mut band: Option<CurveBand> = None;
    for (i, out) in outs.into_iter().enumerate() {
        let out = out.map_err(|e| Error::ReplicaFailed {
            index: i,
            seed: derive_seed(master, i as u64),
            source: Box::new(e),
        })?;
        for (vals, v) in per_metric.iter_mut().zip(&out.metrics) {
            vals.push(*v);
        }
        if let Some(curve) = out.curve {
            match band.as_mut() {
                None => {
                    let times =
                        crate::chain::macro_grid(spec.base.tau, spec.base.t_end, spec.base.grid_dt);
                    band = Some(CurveBand {
                        times,
                        mean: curve.clone(),
                        min: curve.clone(),
                        max: curve,
                    });
                }
                Some(b) => {
                    for (k, v) in curve.into_iter().enumerate() {
                        b.mean[k] += v;
                        b.min[k] = b.min[k].min(v);
                        b.max[k] = b.max[k].max(v);
                    }
                }
            }
        }
    }
    if let Some(b) = band.as_mut() {
        let r = spec.replicas as f64;
        for v in b.mean.iter_mut() {
            *v /= r;
        }
    }

    let stats = spec
        .collect
        .iter()
        .zip(per_metric)
        .map(|(&metric, values)| {
            let r = values.len() as f64;
            let mean = values.iter().sum::<f64>() / r;
            let variance = if values.len() > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            MetricStats {
                metric,
                mean,
                variance,
                std_error: (variance / r).sqrt(),
                min: values.iter().cloned().fold(f64::INFINITY, f64::min),
                max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                values: spec.retain_values.then_some(values),
            }
        })
        .collect();

    Ok(EnsembleStats {
        master_seed: master,
        replicas: spec.replicas,
        params: spec.base.clone(),
        stats,
        band,
    })
}

/// Least-squares fit of `y = alpha x + intercept`; returns
/// `(alpha, intercept, rms residual)`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (alpha * x + intercept);
            e * e
        })
        .sum();
    Some((alpha, intercept, (rss / n).sqrt()))
}

/// Fitted power law for one metric: `mean ~ exp(intercept) * N^alpha`.
#[derive(Debug, Clone)]
pub struct MetricFit {
    pub metric: Metric,
    pub alpha: Option<f64>,
    pub intercept: Option<f64>,
    pub residual: Option<f64>,
}

/// Result of a sweep over the scaling parameter.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub n_values: Vec<u64>,
    pub per_n: Vec<EnsembleStats>,
    pub fits: Vec<MetricFit>,
}

/// Run the same ensemble across `n_list` and fit `log(mean)` against
/// `log(N)` for every collected metric. A metric whose mean is not strictly
/// positive everywhere gets an undefined exponent.
pub fn scaling_study(spec: &EnsembleSpec, n_list: &[u64]) -> Result<SweepResult> {
    spec.validate()?;
    if n_list.len() < 3 {
        return Err(Error::param(
            "n_list",
            "need at least 3 values of N for a fit",
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "n_list",
            "values of N must be strictly increasing",
        ));
    }
    let master = spec.base.seed;
    let per_n: Vec<EnsembleStats> = n_list
        .iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.base.n = n;
            s.base.seed = derive_seed(master, n);
            run_ensemble(&s)
        })
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let fits = spec
        .collect
        .iter()
        .enumerate()
        .map(|(j, &metric)| {
            let means: Vec<f64> = per_n.iter().map(|st| st.stats[j].mean).collect();
            if means.iter().any(|m| !m.is_finite() || *m <= 0.0) {
                return MetricFit {
                    metric,
                    alpha: None,
                    intercept: None,
                    residual: None,
                };
            }
            let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
            match fit_log_log(&xs, &ys) {
                Some((a, b, r)) => MetricFit {
                    metric,
                    alpha: Some(a),
                    intercept: Some(b),
                    residual: Some(r),
                },
                None => MetricFit {
                    metric,
                    alpha: None,
                    intercept: None,
                    residual: None,
                },
            }
        })
        .collect();

    Ok(SweepResult {
        n_values: n_list.to_vec(),
        per_n,
        fits,
    })
}
