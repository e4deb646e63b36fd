//! Declarative experiment sweeps: config parsing and validation, a
//! deterministic worker pool, CSV/JSON persistence and SVG plots.

mod config;
mod results;
mod run;
pub mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{
    small_net_training, DeepTask, Experiment, ExperimentConfig, Violation, SCHEMA_VERSION, SMALL_NET_WIDTH,
};
pub use results::{ResultRow, ResultsFile, ResultsTable};
pub use run::{execute, execute_all, expand, readout_name, Checkpoint, Coord, Coords, DynamicsArtifact, RunRecord, RunSpec, Sample};

use crate::error::{Error, Result};
use svg::{Canvas, Series};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "REPGEO_WORKERS";

/// What a finished sweep produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub table: ResultsTable,
    pub records: Vec<RunRecord>,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn failures(&self) -> Vec<&RunRecord> {
        self.records.iter().filter(|r| r.error.is_some()).collect()
    }
}

/// Runs a validated config in memory.
pub fn run_in_memory(cfg: &ExperimentConfig, workers: usize, seed_offset: u64) -> Result<(ResultsTable, Vec<RunRecord>)> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Config(list.join("; ")));
    }
    let specs = expand(cfg, seed_offset);
    let records = execute_all(cfg, &specs, workers);
    let table = ResultsTable::aggregate(cfg.experiment.tag(), &records);
    Ok((table, records))
}

/// Runs a sweep and writes results, checkpoints, dynamics and plots under `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, workers: usize, seed_offset: u64) -> Result<RunOutcome> {
    let (table, records) = run_in_memory(cfg, workers, seed_offset)?;
    let written = write_outputs(cfg, &table, &records, out)?;
    Ok(RunOutcome { table, records, written })
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Single writer for every artifact of a sweep.
pub fn write_outputs(cfg: &ExperimentConfig, table: &ResultsTable, records: &[RunRecord], out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    fs::create_dir_all(out)?;
    write(out.join("results.csv"), &table.to_csv(), &mut written)?;
    let file = ResultsFile { config: cfg.clone(), table: table.clone(), runs: records.to_vec() };
    write(out.join("results.json"), &serde_json::to_string_pretty(&file)?, &mut written)?;
    if cfg.checkpoints {
        let dir = out.join("checkpoints");
        fs::create_dir_all(&dir)?;
        for r in records {
            if let Some(ckpt) = &r.checkpoint {
                write(dir.join(format!("{}.json", r.id)), ckpt, &mut written)?;
            }
        }
    }
    let dynamics: Vec<&DynamicsArtifact> = records.iter().filter_map(|r| r.dynamics.as_ref()).collect();
    if !dynamics.is_empty() {
        let dir = out.join("dynamics");
        fs::create_dir_all(&dir)?;
        for d in &dynamics {
            write(dir.join(format!("{}.json", d.id)), &serde_json::to_string(d)?, &mut written)?;
            if let Some(t) = &d.trajectory {
                write(dir.join(format!("{}_trajectory.csv", d.id)), &t.to_csv(), &mut written)?;
            }
            for f in &d.fields {
                let sign = if f.w_o > 0.0 { "pos" } else { "neg" };
                write(dir.join(format!("{}_field_{sign}.csv", d.id)), &f.to_csv(), &mut written)?;
            }
        }
    }
    let owned: Vec<DynamicsArtifact> = dynamics.into_iter().cloned().collect();
    let (plots, _) = plot(table, &cfg.experiment, &owned, None, &out.join("plots"))?;
    written.extend(plots);
    Ok(written)
}

/// Line panels of each metric against the experiment's sweep coordinate,
/// one series per activation and remaining coordinate combination.
/// Returns the canvas and warnings for skipped series.
pub fn metric_canvas(table: &ResultsTable, x_key: &str, metrics: Option<&[String]>) -> Result<(Canvas, Vec<String>)> {
    let names = match metrics {
        Some(m) => m.to_vec(),
        None => table.metric_names(),
    };
    let mut canvas = Canvas::new(3);
    let mut warnings = Vec::new();
    for name in &names {
        let rows = table.metric(name)?;
        let mut series: BTreeMap<(usize, String), Series> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for r in rows {
            let rest: Vec<String> = r.coords.iter().filter(|(k, _)| k.as_str() != x_key).map(|(k, v)| format!("{k}={v}")).collect();
            let label = if rest.is_empty() { r.activation.clone() } else { format!("{} {}", r.activation, rest.join(" ")) };
            if !order.contains(&label) {
                order.push(label.clone());
            }
            let rank = order.iter().position(|l| l == &label).unwrap_or(0);
            let x = r.coords.get(x_key).and_then(Coord::as_f64).unwrap_or(rank as f64);
            let s = series.entry((rank, label.clone())).or_insert_with(|| Series { label, points: Vec::new() });
            if r.mean.is_finite() {
                s.points.push((x, r.mean, r.std));
            }
        }
        let mut kept = Vec::new();
        for ((_, label), mut s) in series {
            if s.points.is_empty() {
                warnings.push(format!("metric {name}: series {label} is empty; skipped"));
                continue;
            }
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
            kept.push(s);
        }
        canvas.line_panel(name, x_key, &kept);
    }
    Ok((canvas, warnings))
}

/// Vector-field panels with the trajectories of neurons in each readout group.
pub fn dynamics_canvas(d: &DynamicsArtifact) -> Canvas {
    let mut canvas = Canvas::new(2);
    for f in &d.fields {
        let vectors: Vec<(f64, f64, f64, f64)> = f
            .ys
            .iter()
            .enumerate()
            .flat_map(|(iy, &y)| f.xs.iter().enumerate().map(move |(ix, &x)| (ix, iy, x, y)))
            .map(|(ix, iy, x, y)| {
                let [dx, dy] = f.at(ix, iy);
                (x, y, dx, dy)
            })
            .collect();
        let trajectories: Vec<Vec<(f64, f64)>> = d
            .trajectory
            .iter()
            .flat_map(|t| t.neurons.iter())
            .filter(|n| n.group == f.w_o.signum() && f.plane == crate::dynamics::Plane::InterIntra)
            .map(|n| n.points.iter().map(|p| (p.inter, p.intra)).collect())
            .collect();
        let xlabel = match f.plane {
            crate::dynamics::Plane::InterIntra => "inter-class axis (vertical: intra-class)",
            crate::dynamics::Plane::IntraPair => "first intra-class axis (vertical: second)",
        };
        canvas.field_panel(&format!("{} w_o = {}", d.activation, f.w_o), xlabel, &vectors, &trajectories);
    }
    if let Some(a) = &d.alignment {
        for (g, pattern) in a.groups.iter().enumerate().take(4) {
            let series: Vec<Series> = a.series[g]
                .iter()
                .enumerate()
                .map(|(c, s)| Series {
                    label: format!("cluster {}", c + 1),
                    points: a.steps.iter().zip(s).map(|(&step, &v)| (step as f64, v, 0.0)).collect(),
                })
                .collect();
            canvas.line_panel(&format!("{} group {:?}", d.activation, pattern), "step", &series);
        }
    }
    canvas
}

/// Writes `plots/<experiment>.svg` plus one dynamics plot per artifact.
/// Returns the files written and any warnings.
pub fn plot(
    table: &ResultsTable,
    experiment: &Experiment,
    dynamics: &[DynamicsArtifact],
    metrics: Option<&[String]>,
    dir: &Path,
) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let mut written = Vec::new();
    let mut warnings = Vec::new();
    fs::create_dir_all(dir)?;
    if table.is_empty() {
        warnings.push("results table is empty; no metric plot written".into());
    } else {
        let (canvas, w) = metric_canvas(table, experiment.x_key(), metrics)?;
        warnings.extend(w);
        write(dir.join(format!("{}.svg", experiment.tag())), &canvas.render(), &mut written)?;
    }
    for d in dynamics {
        let canvas = dynamics_canvas(d);
        if !canvas.is_empty() {
            write(dir.join(format!("dynamics_{}.svg", d.id)), &canvas.render(), &mut written)?;
        }
    }
    Ok((written, warnings))
}

/// Re-plots a finished sweep from its output directory.
pub fn plot_from_dir(out: &Path, metrics: Option<&[String]>) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let file: ResultsFile = serde_json::from_str(&fs::read_to_string(out.join("results.json"))?)?;
    let mut dynamics = Vec::new();
    let dir = out.join("dynamics");
    if dir.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            dynamics.push(serde_json::from_str(&fs::read_to_string(p)?)?);
        }
    }
    plot(&file.table, &file.config.experiment, &dynamics, metrics, &out.join("plots"))
}

/// Parses and checks a config file without running it. Parse failures are
/// reported as a single violation carrying the line and column.
pub fn validate_file(path: &Path) -> Vec<Violation> {
    match ExperimentConfig::load(path) {
        Ok(cfg) => cfg.violations(),
        Err(e) => vec![Violation { field: "config".into(), message: e.to_string() }],
    }
}

/// Worker count from an explicit value, then `REPGEO_WORKERS`, then 1.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1)
        .max(1)
}

#[cfg(test)]
mod tests;
