//! Experiment commands behind the `pfml` binary.
//!
//! Every command takes a validated [`ExperimentConfig`] and writes into
//! `cfg.out`. CSV outputs start with the config as `# ` comment lines and
//! carry no timings, so equal configs give identical bytes; timings live in
//! `manifest.json`.
//!
//! Random streams, all derived from `cfg.seed`:
//!
//! | use                                  | stream                       |
//! |--------------------------------------|------------------------------|
//! | simulated data                       | `(seed, 0)`                  |
//! | identification, repeat r             | `(seed, 1).derive(r)`        |
//! | θ_0 of repeat r                      | `(seed, 2).derive(r)`        |
//! | SGD baseline, repeat r               | `(seed, 3).derive(r)`        |
//! | frozen grid system s                 | `(seed, 4).derive(s)`        |
//! | independent filter at grid point i   | `(seed, 5).derive(i)`        |

mod cli;
mod config;

pub use cli::{main_with_args, Cli, Command, CommonArgs};
pub use config::{ExperimentConfig, GridSpec, SgdSettings};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::run_frozen_bootstrap;
use crate::identify::{extract_estimate, identify, sgd_identify, EstimateSummary, IdentifyConfig, IterationTrace, SgdConfig};
use crate::io::{fmt_f64, write_json, CsvOut};
use crate::model::{simulate, StateSpaceModel};
use crate::models::{Example2, Lgss};
use crate::param::ParamVector;
use crate::rng::RngStream;
use crate::surface::{write_grid_csv, GridBlock, LocalLikelihoodSurface};

pub const DATA_STREAM: u64 = 0;
pub const IDENTIFY_STREAM: u64 = 1;
pub const THETA0_STREAM: u64 = 2;
pub const SGD_STREAM: u64 = 3;
pub const GRID_STREAM: u64 = 4;
pub const SCATTER_STREAM: u64 = 5;

/// Files written by a command, plus lines worth printing.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl Report {
    fn merge(&mut self, other: Report) {
        self.files.extend(other.files);
        self.lines.extend(other.lines);
    }
}

/// Model and data of an experiment, with the parameter used to simulate.
pub struct Setup {
    pub model: Box<dyn StateSpaceModel>,
    pub data: Dataset,
    pub truth: ParamVector,
}

fn stream(seed: u64, id: u64) -> RngStream {
    RngStream::new(seed, id)
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

/// Reads `cfg.dataset` or simulates from the data stream.
pub fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let mut model = cfg.build_model()?;
    let truth = cfg.theta_true(model.as_ref())?;
    let data = match &cfg.dataset {
        Some(path) => {
            let data = Dataset::read(path)?;
            if cfg.model == "example2" {
                if let Some((u, 1)) = data.inputs() {
                    model = Box::new(Example2::with_input(u.to_vec()));
                }
            }
            if data.obs_dim() != model.obs_dim() {
                return Err(Error::Config(format!(
                    "dataset has {}-dimensional observations, model {} expects {}",
                    data.obs_dim(),
                    cfg.model,
                    model.obs_dim()
                )));
            }
            data
        }
        None => simulate(model.as_ref(), &truth, cfg.horizon, stream(cfg.seed, DATA_STREAM))?,
    };
    Ok(Setup { model, data, truth })
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Report> {
    let model = cfg.build_model()?;
    let truth = cfg.theta_true(model.as_ref())?;
    let data = simulate(model.as_ref(), &truth, cfg.horizon, stream(cfg.seed, DATA_STREAM))?;
    let path = out_path(cfg, "dataset.csv");
    data.write(&path, Some(&cfg.preamble()))?;
    Ok(Report {
        files: vec![path.clone(), Dataset::sidecar_path(&path)],
        lines: vec![format!("simulated {} steps of {} with seed {}", cfg.horizon, cfg.model, cfg.seed)],
    })
}

/// θ_0 of repeat `r`, uniform on `(lower, upper]` per component.
pub fn sample_theta0(cfg: &ExperimentConfig, model: &dyn StateSpaceModel, r: usize) -> Result<ParamVector> {
    let (lo, hi) = cfg.theta0_box(model)?;
    let mut rng = stream(cfg.seed, THETA0_STREAM).derive(r as u64).generator();
    let values = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| {
            let u: f64 = rng.random();
            h - (h - l) * u
        })
        .collect();
    model.param_vector(values)
}

fn identify_config(cfg: &ExperimentConfig, r: usize) -> IdentifyConfig {
    IdentifyConfig {
        iterations: cfg.iterations,
        particles: cfg.particles,
        optimizer: cfg.optimizer.clone(),
        master: stream(cfg.seed, IDENTIFY_STREAM).derive(r as u64),
        record_grid: None,
        normalization: cfg.normalization,
    }
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Outcome of one identification repeat.
#[derive(Debug, Serialize)]
pub struct RepeatRun {
    pub repeat: usize,
    pub theta0: Vec<f64>,
    pub stream: RngStream,
    pub theta0_stream: RngStream,
    #[serde(skip)]
    pub trace: Option<IterationTrace>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl RepeatRun {
    fn completed(&self) -> bool {
        self.trace.as_ref().is_some_and(|t| t.aborted.is_none())
    }
}

/// Runs `cfg.repeats` identifications in parallel; results are in repeat
/// order and do not depend on scheduling.
pub fn run_repeats(cfg: &ExperimentConfig, setup: &Setup) -> Result<Vec<RepeatRun>> {
    let workers = pool(cfg)?;
    workers.install(|| {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| {
                let start = Instant::now();
                let theta0 = sample_theta0(cfg, setup.model.as_ref(), r)?;
                let icfg = identify_config(cfg, r);
                let (trace, error) = match identify(setup.model.as_ref(), &setup.data, &theta0, &icfg) {
                    Ok(t) => (Some(t), None),
                    Err(e @ (Error::InvalidParameter(_) | Error::WeightDegeneracy { .. })) => (None, Some(e.to_string())),
                    Err(e) => return Err(e),
                };
                Ok(RepeatRun {
                    repeat: r,
                    theta0: theta0.values().to_vec(),
                    stream: icfg.master,
                    theta0_stream: stream(cfg.seed, THETA0_STREAM).derive(r as u64),
                    trace,
                    error,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                })
            })
            .collect()
    })
}

/// Pooled result written to `summary.json`.
#[derive(Debug, Serialize)]
pub struct IdentifySummary<'a> {
    pub config: &'a ExperimentConfig,
    pub theta_true: Vec<f64>,
    pub estimate: Option<EstimateSummary>,
    pub estimate_error: Option<String>,
    pub completed_repeats: usize,
    pub final_thetas: Vec<Option<Vec<f64>>>,
    pub aborted: Vec<Option<String>>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    data_stream: RngStream,
    repeats: &'a [RepeatRun],
    repeat_wall_ms: Vec<f64>,
    iteration_wall_ms: Vec<Vec<f64>>,
    total_wall_ms: f64,
    workers: Option<usize>,
}

fn config_for_output(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig { out: PathBuf::new(), workers: None, ..cfg.clone() }
}

fn write_traces_csv(path: &Path, preamble: &str, names: &[String], runs: &[RepeatRun]) -> Result<()> {
    let mut header = vec!["repeat".to_string(), "k".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["value", "online_loglik", "evals", "converged"].map(String::from));
    let mut out = CsvOut::create(path, Some(preamble), &header)?;
    for run in runs {
        let Some(trace) = &run.trace else { continue };
        for (k, theta) in trace.thetas.iter().enumerate() {
            let mut row = vec![run.repeat.to_string(), k.to_string()];
            row.extend(theta.iter().map(|&v| fmt_f64(v)));
            match k.checked_sub(1).map(|i| &trace.records[i]) {
                Some(rec) => {
                    row.push(rec.value.map(fmt_f64).unwrap_or_default());
                    row.push(fmt_f64(rec.online_loglik));
                    row.push(rec.surface_evals.to_string());
                    row.push(rec.converged.map(|c| u8::from(c).to_string()).unwrap_or_default());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            out.row(&row)?;
        }
    }
    out.finish()
}

/// Identification with repeats. `traces_name` and `hist_name` let the
/// replication commands use figure file names.
fn identify_outputs(
    cfg: &ExperimentConfig,
    setup: &Setup,
    command: &str,
    traces_name: &str,
    hist_name: &str,
) -> Result<(Report, Vec<RepeatRun>)> {
    let start = Instant::now();
    let runs = run_repeats(cfg, setup)?;
    let preamble = cfg.preamble();
    let names = setup.model.param_names();
    let mut report = Report::default();

    let trace_dir = out_path(cfg, "traces");
    std::fs::create_dir_all(&trace_dir)?;
    for run in &runs {
        if let Some(trace) = &run.trace {
            let p = trace_dir.join(format!("repeat_{:03}.csv", run.repeat));
            trace.write_csv(&p, Some(&preamble))?;
            let j = trace_dir.join(format!("repeat_{:03}.json", run.repeat));
            write_json(&j, trace)?;
            report.files.extend([p, j]);
        }
    }
    let traces_path = out_path(cfg, traces_name);
    write_traces_csv(&traces_path, &preamble, &names, &runs)?;
    report.files.push(traces_path);

    let finished: Vec<IterationTrace> = runs.iter().filter_map(|r| r.trace.clone()).collect();
    let completed = runs.iter().filter(|r| r.completed()).count();
    let (estimate, estimate_error) = match extract_estimate(&finished, cfg.burn_in, cfg.bins) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(est) = &estimate {
        let p = out_path(cfg, hist_name);
        est.write_histogram_csv(&p, Some(&preamble))?;
        report.files.push(p);
        report.lines.push(format!(
            "estimate ({}) = {:?} from {} pooled iterates",
            names.join(", "),
            est.theta_hat,
            est.samples_used
        ));
    } else if let Some(err) = &estimate_error {
        report.lines.push(format!("no estimate: {err}"));
    }

    let shown = config_for_output(cfg);
    let summary = IdentifySummary {
        config: &shown,
        theta_true: setup.truth.values().to_vec(),
        estimate,
        estimate_error,
        completed_repeats: completed,
        final_thetas: runs.iter().map(|r| r.trace.as_ref().map(|t| t.final_theta().values().to_vec())).collect(),
        aborted: runs
            .iter()
            .map(|r| r.error.clone().or_else(|| r.trace.as_ref().and_then(|t| t.aborted.clone())))
            .collect(),
    };
    let summary_path = out_path(cfg, "summary.json");
    write_json(&summary_path, &summary)?;
    report.files.push(summary_path);

    let manifest = Manifest {
        command,
        seed: cfg.seed,
        data_stream: stream(cfg.seed, DATA_STREAM),
        repeats: &runs,
        repeat_wall_ms: runs.iter().map(|r| r.wall_ms).collect(),
        iteration_wall_ms: runs
            .iter()
            .map(|r| r.trace.as_ref().map(|t| t.records.iter().map(|x| x.wall_ms).collect()).unwrap_or_default())
            .collect(),
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
        workers: cfg.workers,
    };
    let manifest_path = out_path(cfg, "manifest.json");
    write_json(&manifest_path, &manifest)?;
    report.files.push(manifest_path);
    report.lines.push(format!("{completed} of {} repeats completed", cfg.repeats));

    if completed == 0 {
        let reason = runs.iter().find_map(|r| r.error.clone()).unwrap_or_else(|| "every repeat aborted".into());
        return Err(Error::NoCompletedRun(reason));
    }
    Ok((report, runs))
}

pub fn cmd_identify(cfg: &ExperimentConfig) -> Result<Report> {
    let setup = setup(cfg)?;
    identify_outputs(cfg, &setup, "identify", "traces.csv", "estimate_hist.csv").map(|(r, _)| r)
}

/// The points of `spec`, varying one component of `theta_ref`.
pub fn grid_points(
    cfg: &ExperimentConfig,
    model: &dyn StateSpaceModel,
    spec: &GridSpec,
    theta_ref: &ParamVector,
) -> Result<Vec<ParamVector>> {
    let i = cfg.grid_component(model, spec)?;
    let step = (spec.upper - spec.lower) / (spec.points - 1) as f64;
    (0..spec.points)
        .map(|j| {
            let mut v = theta_ref.values().to_vec();
            v[i] = if j + 1 == spec.points { spec.upper } else { spec.lower + step * j as f64 };
            model.param_vector(v).map_err(|e| Error::Config(format!("grid point: {e}")))
        })
        .collect()
}

fn grid_theta_ref(setup: &Setup, spec: &GridSpec) -> Result<ParamVector> {
    match &spec.theta_ref {
        Some(v) => setup.model.param_vector(v.clone()).map_err(|e| Error::Config(format!("grid theta_ref: {e}"))),
        None => Ok(setup.truth.clone()),
    }
}

/// One frozen system per `spec.systems`, each evaluated over the grid.
fn grid_outputs(cfg: &ExperimentConfig, setup: &Setup, spec: &GridSpec, name: &str) -> Result<Report> {
    let theta_ref = grid_theta_ref(setup, spec)?;
    let points = grid_points(cfg, setup.model.as_ref(), spec, &theta_ref)?;
    let exact = if cfg.model == "lgss" {
        let lgss = Lgss::default_scalar();
        Some(points.iter().map(|p| lgss.kalman_loglik(p, &setup.data)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let workers = pool(cfg)?;
    let blocks: Vec<GridBlock> = workers.install(|| {
        (0..spec.systems)
            .into_par_iter()
            .map(|s| {
                let st = stream(cfg.seed, GRID_STREAM).derive(s as u64);
                let system = run_frozen_bootstrap(setup.model.as_ref(), &theta_ref, cfg.particles, &setup.data, st)
                    .map_err(|e| match e {
                        Error::WeightDegeneracy { .. } => {
                            Error::NoCompletedRun(format!("{e} at θ_ref = {:?}", theta_ref.values()))
                        }
                        other => other,
                    })?;
                let surface = LocalLikelihoodSurface::build_with(&system, setup.model.as_ref(), cfg.normalization)?;
                let values = points.iter().map(|p| surface.eval(p)).collect::<Result<Vec<_>>>()?;
                Ok(GridBlock {
                    repeat: s,
                    theta_ref: theta_ref.clone(),
                    online_loglik: system.online_loglik(),
                    points: points.clone(),
                    values,
                    exact: exact.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let path = out_path(cfg, name);
    write_grid_csv(&path, Some(&cfg.preamble()), &setup.model.param_names(), &blocks)?;
    Ok(Report {
        files: vec![path],
        lines: vec![format!("{} surfaces over {} points", blocks.len(), points.len())],
    })
}

/// Independent (not frozen) filter estimates at each grid point:
/// `replicates` runs per point.
fn scatter_outputs(
    cfg: &ExperimentConfig,
    setup: &Setup,
    spec: &GridSpec,
    replicates: usize,
    name: &str,
) -> Result<Report> {
    let theta_ref = grid_theta_ref(setup, spec)?;
    let points = grid_points(cfg, setup.model.as_ref(), spec, &theta_ref)?;
    let workers = pool(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..replicates).map(move |r| (i, r))).collect();
    let values: Vec<f64> = workers.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| {
                let st = stream(cfg.seed, SCATTER_STREAM).derive((i * replicates + r) as u64);
                match run_frozen_bootstrap(setup.model.as_ref(), &points[i], cfg.particles, &setup.data, st) {
                    Ok(s) => Ok(s.online_loglik()),
                    Err(Error::WeightDegeneracy { .. }) => Ok(f64::NEG_INFINITY),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut header = vec!["replicate".to_string()];
    header.extend(setup.model.param_names());
    header.push("loglik".into());
    let path = out_path(cfg, name);
    let mut out = CsvOut::create(&path, Some(&cfg.preamble()), &header)?;
    for (&(i, r), v) in jobs.iter().zip(&values) {
        let mut row = vec![r.to_string()];
        row.extend(points[i].iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(*v));
        out.row(&row)?;
    }
    out.finish()?;
    Ok(Report { files: vec![path], lines: vec![] })
}

pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = cfg.grid.clone().ok_or_else(|| Error::Config("grid command needs a [grid] section".into()))?;
    let setup = setup(cfg)?;
    grid_outputs(cfg, &setup, &spec, "grid_surfaces.csv")
}

/// Euclidean distance in the natural parameterization.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub repeat: usize,
    pub budget_passes: usize,
    pub proposed_passes: usize,
    pub sgd_passes: usize,
    pub sgd_steps: usize,
    pub proposed_distance: f64,
    pub sgd_distance: f64,
    pub sgd_diverged: bool,
}

#[derive(Debug, Serialize)]
pub struct CompareSummary<'a> {
    pub config: &'a ExperimentConfig,
    pub theta_true: Vec<f64>,
    pub rows: Vec<CompareRow>,
    pub median_proposed_distance: f64,
    pub median_sgd_distance: f64,
    pub sgd_divergences: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn write_distance_csv(path: &Path, preamble: &str, names: &[String], traces: &[(usize, &IterationTrace)], truth: &[f64]) -> Result<()> {
    let mut header = vec!["repeat".to_string(), "k".to_string(), "passes".to_string()];
    header.extend(names.iter().cloned());
    header.push("distance".into());
    let mut out = CsvOut::create(path, Some(preamble), &header)?;
    for &(r, trace) in traces {
        let mut passes = 0;
        for (k, theta) in trace.thetas.iter().enumerate() {
            if k > 0 {
                passes += trace.records[k - 1].surface_evals + 1;
            }
            let mut row = vec![r.to_string(), k.to_string(), passes.to_string()];
            row.extend(theta.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(distance(theta.values(), truth)));
            out.row(&row)?;
        }
    }
    out.finish()
}

/// Frozen-surface identification against the SGD baseline, with the SGD
/// run given the same number of passes over a particle system.
pub fn cmd_compare_sgd(cfg: &ExperimentConfig) -> Result<Report> {
    let setup = setup(cfg)?;
    let d = setup.truth.dim();
    let workers = pool(cfg)?;
    let pairs: Vec<(IterationTrace, IterationTrace)> = workers.install(|| {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| {
                let theta0 = sample_theta0(cfg, setup.model.as_ref(), r)?;
                let proposed = identify(setup.model.as_ref(), &setup.data, &theta0, &identify_config(cfg, r))?;
                // one filter run plus 2d probes per SGD step
                let steps = (proposed.cost_in_passes() / (2 * d + 1)).max(1);
                let scfg = SgdConfig {
                    normalization: cfg.normalization,
                    ..SgdConfig::new(
                        steps,
                        cfg.particles,
                        cfg.sgd.gamma0,
                        cfg.sgd.alpha,
                        stream(cfg.seed, SGD_STREAM).derive(r as u64),
                    )
                };
                let sgd = sgd_identify(setup.model.as_ref(), &setup.data, &theta0, &scfg)?;
                Ok((proposed, sgd))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let truth = setup.truth.values();
    let rows: Vec<CompareRow> = pairs
        .iter()
        .enumerate()
        .map(|(r, (p, s))| CompareRow {
            repeat: r,
            budget_passes: p.cost_in_passes(),
            proposed_passes: p.cost_in_passes(),
            sgd_passes: s.cost_in_passes(),
            sgd_steps: s.records.len(),
            proposed_distance: distance(p.final_theta().values(), truth),
            // a run that left the bounded region is scored where it stopped
            sgd_distance: distance(s.final_theta().values(), truth),
            sgd_diverged: s.diverged,
        })
        .collect();
    let preamble = cfg.preamble();
    let names = setup.model.param_names();
    let proposed_path = out_path(cfg, "compare_proposed.csv");
    let sgd_path = out_path(cfg, "compare_sgd.csv");
    let indexed = |pick: fn(&(IterationTrace, IterationTrace)) -> &IterationTrace| {
        pairs.iter().enumerate().map(|(r, pair)| (r, pick(pair))).collect::<Vec<_>>()
    };
    write_distance_csv(&proposed_path, &preamble, &names, &indexed(|p| &p.0), truth)?;
    write_distance_csv(&sgd_path, &preamble, &names, &indexed(|p| &p.1), truth)?;

    let shown = config_for_output(cfg);
    let summary = CompareSummary {
        config: &shown,
        theta_true: truth.to_vec(),
        median_proposed_distance: median(&rows.iter().map(|r| r.proposed_distance).collect::<Vec<_>>()),
        median_sgd_distance: median(&rows.iter().map(|r| r.sgd_distance).collect::<Vec<_>>()),
        sgd_divergences: rows.iter().filter(|r| r.sgd_diverged).count(),
        rows,
    };
    let summary_path = out_path(cfg, "compare_summary.json");
    write_json(&summary_path, &summary)?;
    Ok(Report {
        lines: vec![format!(
            "median final distance to truth: proposed {:.4}, sgd {:.4} ({} sgd runs diverged)",
            summary.median_proposed_distance, summary.median_sgd_distance, summary.sgd_divergences
        )],
        files: vec![proposed_path, sgd_path, summary_path],
    })
}

fn write_dataset(cfg: &ExperimentConfig, setup: &Setup) -> Result<Report> {
    let path = out_path(cfg, "dataset.csv");
    setup.data.write(&path, Some(&cfg.preamble()))?;
    Ok(Report { files: vec![path], lines: vec![] })
}

/// Example 1: data, local surfaces with independent estimates around them,
/// identification traces and the pooled estimate.
pub fn cmd_replicate_ex1(cfg: &ExperimentConfig) -> Result<Report> {
    let setup = setup(cfg)?;
    let mut report = write_dataset(cfg, &setup)?;
    if let Some(spec) = &cfg.grid {
        report.merge(grid_outputs(cfg, &setup, spec, "fig1_surfaces.csv")?);
        report.merge(scatter_outputs(cfg, &setup, spec, 1, "fig1_points.csv")?);
    }
    let (r, _) = identify_outputs(cfg, &setup, "replicate-ex1", "fig2a_traces.csv", "fig2a_hist.csv")?;
    report.merge(r);
    Ok(report)
}

/// Example 2: data, independent estimates over an a-grid, identification
/// traces and the histogram the estimate is read from.
pub fn cmd_replicate_ex2(cfg: &ExperimentConfig) -> Result<Report> {
    let setup = setup(cfg)?;
    let mut report = write_dataset(cfg, &setup)?;
    if let Some(spec) = &cfg.grid {
        report.merge(scatter_outputs(cfg, &setup, spec, spec.systems, "fig4_scatter.csv")?);
    }
    let (r, _) = identify_outputs(cfg, &setup, "replicate-ex2", "fig5_traces.csv", "fig6_hist.csv")?;
    report.merge(r);
    Ok(report)
}
