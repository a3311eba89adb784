use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Mode};
use super::snapshot::write_snapshot;
use super::{replica_seed, HarnessError};
use crate::bounds::{emit_curves, p_affected_exact, tau_star, write_curves_csv};
use crate::dynamics::{parse_waiting_time, Simulation};
use crate::fpp::{simulate_growth, stats_by_target, write_passage_csv, PassageRecord, Site};
use crate::grid::{Spin, SpinGrid};
use crate::regions::{monochromatic_region, renormalize};
use crate::SimRng;

pub const METRICS_HEADER: &str =
    "replica,seed,step,flips,null_events,lyapunov,unstable_count,mono_radius_origin,mono_size_origin,steady";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricsRow {
    pub replica: u32,
    pub seed: u64,
    pub step: u64,
    pub flips: u64,
    pub null_events: u64,
    pub lyapunov: i64,
    pub unstable_count: usize,
    pub mono_radius_origin: u32,
    pub mono_size_origin: u64,
    pub steady: bool,
}

impl MetricsRow {
    fn capture(sim: &Simulation, replica: u32, seed: u64) -> Self {
        let c = sim.counters();
        let mono = monochromatic_region(sim.grid(), sim.grid().origin());
        Self {
            replica,
            seed,
            step: c.events,
            flips: c.flips,
            null_events: c.null_events,
            lyapunov: sim.lyapunov(),
            unstable_count: sim.unstable_count(),
            mono_radius_origin: mono.radius,
            mono_size_origin: mono.size,
            steady: sim.is_steady(),
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.replica,
            self.seed,
            self.step,
            self.flips,
            self.null_events,
            self.lyapunov,
            self.unstable_count,
            self.mono_radius_origin,
            self.mono_size_origin,
            self.steady
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub mode: Mode,
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn write<F>(&self, name: &str, body: F) -> Result<PathBuf, HarnessError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}

fn model(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Model(e.to_string())
}

fn for_replicas<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u32) -> Result<T, HarnessError> + Sync + Send,
{
    if cfg.parallel {
        (0..cfg.replicas).into_par_iter().map(f).collect()
    } else {
        (0..cfg.replicas).map(f).collect()
    }
}

/// Runs the configured mode and writes its artifacts under `output_dir`.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let out = Output::new(&cfg.output_dir)?;
    let files = match cfg.mode {
        Mode::Simulate => simulate(cfg, &out)?,
        Mode::Sweep => sweep(cfg, &out)?,
        Mode::Bounds => bounds(cfg, &out)?,
        Mode::Fpp => fpp(cfg, &out)?,
        Mode::Percolation => percolation(cfg, &out)?,
    };
    Ok(RunSummary {
        mode: cfg.mode,
        files,
    })
}

fn start(cfg: &ExperimentConfig, w: u32, seed: u64) -> Result<Simulation, HarnessError> {
    let mut rng = SimRng::seed_from_u64(seed);
    let grid = SpinGrid::new_random_with(cfg.h, w, cfg.p_init, &mut rng).map_err(model)?;
    Simulation::new(grid, cfg.intolerance(w), cfg.make_scheduler(), rng).map_err(model)
}

fn snapshot_name(replica: u32, step: u64) -> String {
    format!("replica_{replica:03}/step_{step:012}.snap")
}

fn simulate(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, HarnessError> {
    let per_replica = for_replicas(cfg, |i| {
        let seed = replica_seed(cfg.seed, i as u64);
        let mut sim = start(cfg, cfg.w, seed)?;
        let tau = *sim.intolerance();
        let mut rows = vec![MetricsRow::capture(&sim, i, seed)];
        let mut files = Vec::new();
        if cfg.snapshot_every > 0 {
            files.push(out.write(&snapshot_name(i, 0), |f| {
                write_snapshot(sim.grid(), &tau, 0, f)
            })?);
        }
        while !sim.is_steady() && sim.counters().events < cfg.max_events {
            sim.step();
            let step = sim.counters().events;
            if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
                rows.push(MetricsRow::capture(&sim, i, seed));
                files.push(out.write(&snapshot_name(i, step), |f| {
                    write_snapshot(sim.grid(), &tau, step, f)
                })?);
            }
        }
        let step = sim.counters().events;
        if rows.last().is_none_or(|r| r.step != step) {
            rows.push(MetricsRow::capture(&sim, i, seed));
        }
        files.push(out.write(&format!("replica_{i:03}/final.snap"), |f| {
            write_snapshot(sim.grid(), &tau, step, f)
        })?);
        Ok((rows, files))
    })?;
    let mut files = vec![out.write("metrics.csv", |f| {
        writeln!(f, "{METRICS_HEADER}")?;
        for (rows, _) in &per_replica {
            for r in rows {
                writeln!(f, "{}", r.csv_line())?;
            }
        }
        Ok(())
    })?];
    for (_, written) in per_replica {
        files.extend(written);
    }
    Ok(files)
}

fn sweep(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, HarnessError> {
    let mut rows = Vec::new();
    for w in cfg.sweep_horizons() {
        let per = for_replicas(cfg, |i| {
            let seed = replica_seed(cfg.seed, i as u64);
            let mut sim = start(cfg, w, seed)?;
            let report = sim.run_to_steady_state(cfg.max_events);
            let mono = monochromatic_region(sim.grid(), sim.grid().origin());
            Ok((w, i, seed, report, mono))
        })?;
        rows.extend(per);
    }
    let table = out.write("sweep.csv", |f| {
        writeln!(
            f,
            "w,replica,seed,steps,flips,null_events,mono_radius_origin,mono_size_origin,steady"
        )?;
        for (w, i, seed, r, m) in &rows {
            writeln!(
                f,
                "{w},{i},{seed},{},{},{},{},{},{}",
                r.steps_taken, r.flips_executed, r.null_events, m.radius, m.size, r.reached_steady
            )?;
        }
        Ok(())
    })?;
    let summary = out.write("sweep_summary.csv", |f| {
        writeln!(f, "w,replicas,mean_mono_size_origin,steady_fraction")?;
        for w in cfg.sweep_horizons() {
            let sel: Vec<_> = rows.iter().filter(|r| r.0 == w).collect();
            let n = sel.len() as f64;
            let mean = sel.iter().map(|r| r.4.size as f64).sum::<f64>() / n;
            let steady = sel.iter().filter(|r| r.3.reached_steady).count() as f64 / n;
            writeln!(f, "{w},{},{mean},{steady}", sel.len())?;
        }
        Ok(())
    })?;
    Ok(vec![table, summary])
}

fn bounds(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, HarnessError> {
    let tau = cfg.intolerance(cfg.w);
    let n = tau.neighborhood_size() as f64;
    let rows = emit_curves(&cfg.tau_grid(), cfg.epsilon, n).map_err(model)?;
    let curves = out.write("curves.csv", |f| write_curves_csv(&rows, f))?;
    let star = tau_star(cfg.epsilon).ok();
    let affected = p_affected_exact(&tau).ok();
    let summary = out.write("bounds_summary.txt", |f| {
        writeln!(f, "N={}", tau.neighborhood_size())?;
        writeln!(f, "tau={tau}")?;
        match star {
            Some(s) => writeln!(f, "tau_star={s}")?,
            None => writeln!(f, "tau_star=undefined")?,
        }
        if let Some(b) = affected {
            writeln!(f, "log2_p_affected={}", b.log2_exact)?;
            writeln!(f, "log2_p_affected_reference={}", b.reference_log2)?;
        }
        Ok(())
    })?;
    Ok(vec![curves, summary])
}

fn fpp(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, HarnessError> {
    let dist = parse_waiting_time(&cfg.distribution).map_err(model)?;
    let targets: Vec<Site> = cfg
        .fpp_distances
        .iter()
        .map(|&d| ((d * cfg.w) as i64, 0))
        .collect();
    let per = for_replicas(cfg, |i| {
        let seed = replica_seed(cfg.seed, i as u64);
        Ok(simulate_growth(cfg.w, &targets, dist.as_ref(), seed))
    })?;
    let records: Vec<PassageRecord> = per.into_iter().flatten().collect();
    let mut files = vec![out.write("passage.csv", |f| write_passage_csv(&records, f))?];
    if cfg.replicas >= 2 {
        let stats = stats_by_target(&records).map_err(model)?;
        files.push(out.write("passage_stats.csv", |f| {
            writeln!(f, "target_x,target_y,samples,mean,std,cov")?;
            for (t, s) in &stats {
                writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    t.0, t.1, s.samples, s.mean, s.std, s.cov
                )?;
            }
            Ok(())
        })?);
    }
    Ok(files)
}

fn percolation(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, HarnessError> {
    let side = cfg.effective_block_side() as usize;
    let per = for_replicas(cfg, |i| {
        let seed = replica_seed(cfg.seed, i as u64);
        let grid = SpinGrid::new_random(cfg.h, cfg.w, cfg.p_init, seed).map_err(model)?;
        let mut lines = Vec::new();
        for theta in [Spin::Plus, Spin::Minus] {
            let mut map = renormalize(&grid, side).map_err(model)?;
            map.classify(&grid, theta, cfg.epsilon);
            let clusters = map.bad_clusters();
            let max_radius = clusters.iter().map(|c| c.radius).max();
            lines.push(format!(
                "{i},{seed},{},{},{},{}",
                theta.as_char(),
                map.bad_count(),
                clusters.len(),
                max_radius.map_or(String::from("none"), |r| r.to_string())
            ));
        }
        Ok(lines)
    })?;
    let file = out.write("percolation.csv", |f| {
        writeln!(f, "replica,seed,theta,bad_blocks,clusters,max_radius")?;
        for line in per.iter().flatten() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    })?;
    Ok(vec![file])
}
