use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dll_core::{
    decompose, run_ensemble, scaling_study, simulate, simulate_recorded, solve_dde, DdeParams,
    EnsembleSpec, Metric, SimParams, Trajectory,
};

use crate::manifest::{self, Manifest};
use crate::svg::{self, Series};
use crate::{CompareFlags, SimFlags, SweepFlags};

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn sim_params(flags: &SimFlags) -> anyhow::Result<SimParams> {
    let params = SimParams::new(
        flags.n,
        flags.tau,
        flags.mu,
        flags.t_end,
        flags.dt,
        flags.seed,
    )?;
    for w in params.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(params)
}

fn base_manifest(command: &str, started_ms: u128) -> Manifest {
    let mut m = Manifest::new();
    m.insert("command".into(), command.into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("started_unix_ms".into(), started_ms.to_string());
    m
}

fn sim_keys(m: &mut Manifest, flags: &SimFlags) {
    m.insert("N".into(), flags.n.to_string());
    m.insert("tau".into(), fmt(flags.tau));
    m.insert("mu".into(), fmt(flags.mu));
    m.insert("T".into(), fmt(flags.t_end));
    m.insert("dt".into(), fmt(flags.dt));
    m.insert("seed".into(), flags.seed.to_string());
    m.insert("out".into(), flags.out.display().to_string());
}

fn finish_manifest(mut m: Manifest, outputs: &[PathBuf], at: &Path) -> anyhow::Result<()> {
    let joined: Vec<String> = outputs.iter().map(|p| p.display().to_string()).collect();
    m.insert("outputs".into(), joined.join(";"));
    m.insert("finished_unix_ms".into(), manifest::now_ms().to_string());
    manifest::write(at, &m)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest");
    PathBuf::from(s)
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> anyhow::Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "t,y,z")?;
    for (k, &t) in traj.times.iter().enumerate() {
        match traj.z[k] {
            Some(z) => writeln!(w, "{},{},{}", fmt(t), fmt(traj.y[k]), fmt(z))?,
            None => writeln!(w, "{},{},", fmt(t), fmt(traj.y[k]))?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn simulate_cmd(flags: &SimFlags) -> anyhow::Result<()> {
    let started = manifest::now_ms();
    let params = sim_params(flags)?;
    let traj = simulate(&params)?;
    write_trajectory_csv(&flags.out, &traj)?;
    let mut m = base_manifest("simulate", started);
    sim_keys(&mut m, flags);
    finish_manifest(
        m,
        std::slice::from_ref(&flags.out),
        &manifest_path(&flags.out),
    )
}

pub fn decompose_cmd(flags: &SimFlags) -> anyhow::Result<()> {
    let started = manifest::now_ms();
    let params = sim_params(flags)?;
    let report = decompose(&simulate_recorded(&params)?)?;
    let mut w = BufWriter::new(
        File::create(&flags.out).with_context(|| format!("creating {}", flags.out.display()))?,
    );
    writeln!(
        w,
        "t,drift_main,drift_replacement,drift_clamp,martingale,qv,residual_check"
    )?;
    for k in 0..report.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt(report.times[k]),
            fmt(report.drift_main[k]),
            fmt(report.drift_replacement[k]),
            fmt(report.drift_clamp[k]),
            fmt(report.martingale[k]),
            fmt(report.qv[k]),
            fmt(report.residual_check[k]),
        )?;
    }
    w.flush()?;
    let mut m = base_manifest("decompose", started);
    sim_keys(&mut m, flags);
    finish_manifest(
        m,
        std::slice::from_ref(&flags.out),
        &manifest_path(&flags.out),
    )
}

pub fn compare_cmd(flags: &CompareFlags) -> anyhow::Result<()> {
    let started = manifest::now_ms();
    let params = sim_params(&flags.sim)?;
    let dde_ref = DdeParams::new(
        flags.sim.tau,
        flags.sim.mu,
        flags.sim.t_end,
        flags.steps_per_delay,
    )?;
    let mut spec = EnsembleSpec::new(
        params,
        flags.replicas,
        dde_ref.clone(),
        vec![Metric::SupError],
    )?;
    spec.retain_values = true;
    spec.retain_curves = true;
    let stats = run_ensemble(&spec)?;

    let prefix = flags.sim.out.display().to_string();
    let replicas_path = PathBuf::from(format!("{prefix}_replicas.csv"));
    let summary_path = PathBuf::from(format!("{prefix}_summary.csv"));
    let mut outputs = vec![replicas_path.clone(), summary_path.clone()];

    let sup_stats = stats.stat(Metric::SupError).expect("collected");
    {
        let mut w = BufWriter::new(File::create(&replicas_path)?);
        writeln!(w, "replica,seed,sup_error")?;
        for (i, v) in sup_stats
            .values
            .as_ref()
            .expect("retained")
            .iter()
            .enumerate()
        {
            writeln!(
                w,
                "{},{},{}",
                i,
                dll_core::derive_seed(spec.base.seed, i as u64),
                fmt(*v)
            )?;
        }
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(File::create(&summary_path)?);
        writeln!(w, "metric,mean,variance,std_error,min,max")?;
        for s in &stats.stats {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.metric,
                fmt(s.mean),
                fmt(s.variance),
                fmt(s.std_error),
                fmt(s.min),
                fmt(s.max)
            )?;
        }
        w.flush()?;
    }

    if flags.svg {
        let band = stats.band.as_ref().expect("curves retained");
        let sol = solve_dde(&dde_ref)?;
        let reference: Vec<(f64, f64)> = band
            .times
            .iter()
            .map(|&t| Ok((t, sol.eval(t)?)))
            .collect::<dll_core::Result<_>>()?;
        let mean: Vec<(f64, f64)> = band
            .times
            .iter()
            .copied()
            .zip(band.mean.iter().copied())
            .collect();
        let lo: Vec<(f64, f64)> = band
            .times
            .iter()
            .copied()
            .zip(band.min.iter().copied())
            .collect();
        let hi: Vec<(f64, f64)> = band
            .times
            .iter()
            .copied()
            .zip(band.max.iter().copied())
            .collect();
        let title = format!(
            "chain vs delayed logistic (N={}, tau={}, mu={}, R={})",
            flags.sim.n, flags.sim.tau, flags.sim.mu, flags.replicas
        );
        let body = svg::line_chart(
            &title,
            "t",
            "density",
            Some((&lo, &hi)),
            &[
                Series {
                    name: "ensemble mean",
                    color: "#1f77b4",
                    points: &mean,
                },
                Series {
                    name: "delayed logistic",
                    color: "#d62728",
                    points: &reference,
                },
            ],
        );
        let svg_path = PathBuf::from(format!("{prefix}.svg"));
        std::fs::write(&svg_path, body)?;
        outputs.push(svg_path);
    }

    let mut m = base_manifest("compare", started);
    sim_keys(&mut m, &flags.sim);
    m.insert("replicas".into(), flags.replicas.to_string());
    m.insert("steps_per_delay".into(), flags.steps_per_delay.to_string());
    m.insert("svg".into(), flags.svg.to_string());
    let manifest_at = PathBuf::from(format!("{prefix}.manifest"));
    finish_manifest(m, &outputs, &manifest_at)
}

pub fn sweep_cmd(flags: &SweepFlags) -> anyhow::Result<()> {
    let started = manifest::now_ms();
    let metric = Metric::parse(&flags.metric)
        .with_context(|| format!("unknown metric `{}`", flags.metric))?;
    let first_n = *flags.n_list.first().context("empty N list")?;
    let base = SimParams::new(
        first_n,
        flags.tau,
        flags.mu,
        flags.t_end,
        flags.dt,
        flags.seed,
    )?;
    for w in base.warnings() {
        eprintln!("warning: {w}");
    }
    let dde_ref = DdeParams::new(flags.tau, flags.mu, flags.t_end, flags.steps_per_delay)?;
    let spec = EnsembleSpec::new(base, flags.replicas, dde_ref, vec![metric])?;
    let sweep = scaling_study(&spec, &flags.n_list)?;

    let prefix = flags.out.display().to_string();
    let sweep_path = PathBuf::from(format!("{prefix}_sweep.csv"));
    let fit_path = PathBuf::from(format!("{prefix}_fit.csv"));
    {
        let mut w = BufWriter::new(File::create(&sweep_path)?);
        writeln!(w, "N,metric,mean,variance,std_error,min,max")?;
        for (n, st) in sweep.n_values.iter().zip(&sweep.per_n) {
            let s = &st.stats[0];
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                n,
                s.metric,
                fmt(s.mean),
                fmt(s.variance),
                fmt(s.std_error),
                fmt(s.min),
                fmt(s.max)
            )?;
        }
        w.flush()?;
    }
    {
        let fit = &sweep.fits[0];
        let mut w = BufWriter::new(File::create(&fit_path)?);
        writeln!(w, "metric,alpha,intercept,residual")?;
        let cell = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            fit.metric,
            cell(fit.alpha),
            cell(fit.intercept),
            cell(fit.residual)
        )?;
        w.flush()?;
    }

    let mut m = base_manifest("sweep", started);
    m.insert(
        "N_list".into(),
        flags
            .n_list
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.insert("metric".into(), flags.metric.clone());
    m.insert("tau".into(), fmt(flags.tau));
    m.insert("mu".into(), fmt(flags.mu));
    m.insert("T".into(), fmt(flags.t_end));
    m.insert("dt".into(), fmt(flags.dt));
    m.insert("seed".into(), flags.seed.to_string());
    m.insert("replicas".into(), flags.replicas.to_string());
    m.insert("steps_per_delay".into(), flags.steps_per_delay.to_string());
    m.insert("out".into(), prefix.clone());
    let manifest_at = PathBuf::from(format!("{prefix}.manifest"));
    finish_manifest(m, &[sweep_path, fit_path], &manifest_at)
}

pub fn replay(path: &Path) -> anyhow::Result<()> {
    let m = manifest::read(path)?;
    let command = manifest::get(&m, "command")?;
    let sim_flags = |m: &Manifest| -> anyhow::Result<SimFlags> {
        Ok(SimFlags {
            n: manifest::get_parsed(m, "N")?,
            tau: manifest::get_parsed(m, "tau")?,
            mu: manifest::get_parsed(m, "mu")?,
            t_end: manifest::get_parsed(m, "T")?,
            dt: manifest::get_parsed(m, "dt")?,
            seed: manifest::get_parsed(m, "seed")?,
            out: PathBuf::from(manifest::get(m, "out")?),
        })
    };
    match command {
        "simulate" => simulate_cmd(&sim_flags(&m)?),
        "decompose" => decompose_cmd(&sim_flags(&m)?),
        "compare" => compare_cmd(&CompareFlags {
            sim: sim_flags(&m)?,
            replicas: manifest::get_parsed(&m, "replicas")?,
            steps_per_delay: manifest::get_parsed(&m, "steps_per_delay")?,
            svg: manifest::get_parsed(&m, "svg")?,
        }),
        "sweep" => sweep_cmd(&SweepFlags {
            n_list: manifest::get(&m, "N_list")?
                .split(',')
                .map(|s| s.parse::<u64>().context("bad N_list entry"))
                .collect::<anyhow::Result<_>>()?,
            metric: manifest::get(&m, "metric")?.to_string(),
            tau: manifest::get_parsed(&m, "tau")?,
            mu: manifest::get_parsed(&m, "mu")?,
            t_end: manifest::get_parsed(&m, "T")?,
            dt: manifest::get_parsed(&m, "dt")?,
            seed: manifest::get_parsed(&m, "seed")?,
            replicas: manifest::get_parsed(&m, "replicas")?,
            steps_per_delay: manifest::get_parsed(&m, "steps_per_delay")?,
            out: PathBuf::from(manifest::get(&m, "out")?),
        }),
        other => bail!("manifest names an unknown command `{other}`"),
    }
}
