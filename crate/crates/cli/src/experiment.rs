//! Multi-scale pair-count experiments.
//!
//! Trials run on a fixed-size pool in chunks. Each chunk is collected in
//! trial order and appended to `results.csv` before the next starts, so the
//! file only ever holds a prefix of the final output. A `# complete` line
//! closes a finished run.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use favpts::excursions::{successful_diagnostic, wilson_interval, AnnulusSchedule, StoppingRule};
use favpts::exponents::{rho2, rho2_hat};
use favpts::gff::{build_covariance, sample, CovarianceFactor};
use favpts::lattice::LatticePoint;
use favpts::point_sets::{
    exponent_fit, favorite_points, high_points, late_points, tuple_count_with, CountMethod, CountOptions, ExponentFit,
    SetKind,
};
use favpts::rng::scale_trial_seed;
use favpts::walk::{simulate_disk_walk, simulate_torus_walk, TorusMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{config, CliError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_HEADER: &str = "n,alpha,beta,j,kind,trial,count,set_size,seed";
pub const COMPLETE_MARKER: &str = "# complete";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const CHUNK: u64 = 256;
const WILSON_Z: f64 = 1.96;

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub j: u32,
    pub kind: SetKind,
    pub trial: u64,
    pub count: u64,
    pub set_size: usize,
    pub seed: u64,
}

struct TrialOutcome {
    row: TrialRow,
    successful: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub successes: u64,
    pub trials: u64,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub stopping: StoppingRule,
    pub radii: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub n: u32,
    pub trials: u64,
    pub mean_count: f64,
    pub sd_count: f64,
    pub max_count: u64,
    pub mean_set_size: f64,
    pub empty_sets: u64,
    pub diagnostic: Option<DiagnosticSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExponents {
    pub rho2: f64,
    pub rho2_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub artifact_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Ordered tuples, with or without repeated points.
    pub counting: String,
    pub previous_run_incomplete: bool,
    pub scales: Vec<ScaleSummary>,
    /// Fit of log mean count against log n.
    pub fit: Option<ExponentFit>,
    pub fit_note: Option<String>,
    /// Closed-form exponents for favorite-point pairs.
    pub reference: Option<ReferenceExponents>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultsState {
    Missing,
    Incomplete { rows: usize },
    Complete { rows: usize },
}

/// Inspects an existing results file without modifying it.
pub fn results_state(path: &Path) -> Result<ResultsState> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ResultsState::Missing),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut rows = 0;
    let mut complete = false;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line == COMPLETE_MARKER {
            complete = true;
        } else if !line.is_empty() && line != RESULTS_HEADER {
            rows += 1;
            complete = false;
        }
    }
    Ok(if complete {
        ResultsState::Complete { rows }
    } else {
        ResultsState::Incomplete { rows }
    })
}

enum ScaleContext {
    Disk,
    Torus,
    Field(CovarianceFactor),
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    schedule: Option<AnnulusSchedule>,
    options: CountOptions,
}

impl Runner<'_> {
    fn trial(&self, ctx: &ScaleContext, scale_index: usize, n: u32, trial: u64) -> Result<TrialOutcome> {
        let cfg = self.cfg;
        let seed = scale_trial_seed(cfg.seed, scale_index as u64, trial);
        let mut successful = None;
        let set = match ctx {
            ScaleContext::Disk => {
                let rec = simulate_disk_walk(n, seed, self.schedule.is_some())?;
                if let (Some(schedule), Some(rule)) = (&self.schedule, cfg.schedule.as_ref().map(|s| s.stopping)) {
                    let report = successful_diagnostic(&rec, LatticePoint::ORIGIN, schedule, rule)?;
                    successful = Some(report.successful);
                }
                favorite_points(&rec, cfg.alpha, cfg.kind == SetKind::TruncatedFavorite)?
            }
            ScaleContext::Torus => late_points(&simulate_torus_walk(n, seed, TorusMode::UntilCovered)?, cfg.alpha)?,
            ScaleContext::Field(factor) => high_points(&sample(factor, seed), cfg.alpha)?,
        };
        let report = tuple_count_with(&set, cfg.beta, cfg.j, self.options)?;
        Ok(TrialOutcome {
            row: TrialRow {
                n,
                alpha: cfg.alpha,
                beta: cfg.beta,
                j: cfg.j,
                kind: cfg.kind,
                trial,
                count: report.count,
                set_size: report.set_size,
                seed,
            },
            successful,
        })
    }

    fn summarize(&self, n: u32, outcomes: &[TrialOutcome]) -> Result<ScaleSummary> {
        let m = outcomes.len() as f64;
        let counts: Vec<f64> = outcomes.iter().map(|o| o.row.count as f64).collect();
        let mean = counts.iter().sum::<f64>() / m;
        let sd = if outcomes.len() > 1 {
            (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        let diagnostic = match (&self.schedule, &self.cfg.schedule) {
            (Some(schedule), Some(sc)) => {
                let successes = outcomes.iter().filter(|o| o.successful == Some(true)).count() as u64;
                let trials = outcomes.len() as u64;
                let (wilson_low, wilson_high) = wilson_interval(successes, trials, WILSON_Z)?;
                Some(DiagnosticSummary {
                    successes,
                    trials,
                    frequency: successes as f64 / trials as f64,
                    wilson_low,
                    wilson_high,
                    stopping: sc.stopping,
                    radii: schedule.radii.clone(),
                    note: format!("{:?} radii, |N_k - n~_k| <= k for 3 <= k <= m", sc.kind),
                })
            }
            _ => None,
        };
        Ok(ScaleSummary {
            n,
            trials: outcomes.len() as u64,
            mean_count: mean,
            sd_count: sd,
            max_count: outcomes.iter().map(|o| o.row.count).max().unwrap_or(0),
            mean_set_size: outcomes.iter().map(|o| o.row.set_size as f64).sum::<f64>() / m,
            empty_sets: outcomes.iter().filter(|o| o.row.set_size == 0).count() as u64,
            diagnostic,
        })
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn results_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join(RESULTS_FILE)
}

/// Runs every scale, writes `results.csv` and `manifest.json` under
/// `cfg.out`, and returns the manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let started_unix = unix_now();
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let path = results_path(cfg);
    let previous_run_incomplete = matches!(results_state(&path)?, ResultsState::Incomplete { .. });
    if previous_run_incomplete {
        eprintln!("warning: {} holds an incomplete earlier run; starting over", path.display());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| config(format!("worker pool: {e}")))?;
    let runner = Runner {
        cfg,
        schedule: cfg.schedule.as_ref().map(|s| s.build(cfg.alpha)).transpose()?,
        options: CountOptions {
            repetition: !cfg.distinct,
            method: CountMethod::Auto,
        },
    };

    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut sink = csv::Writer::from_writer(file);
    let mut summaries = Vec::with_capacity(cfg.scales.len());
    for (scale_index, &n) in cfg.scales.iter().enumerate() {
        let ctx = match cfg.kind {
            SetKind::Favorite | SetKind::TruncatedFavorite => ScaleContext::Disk,
            SetKind::Late => ScaleContext::Torus,
            SetKind::High => ScaleContext::Field(build_covariance(n)?),
        };
        let mut outcomes = Vec::with_capacity(cfg.trials as usize);
        let mut start = 0;
        while start < cfg.trials {
            let end = (start + CHUNK).min(cfg.trials);
            let chunk: Vec<TrialOutcome> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|t| runner.trial(&ctx, scale_index, n, t))
                    .collect::<Result<_>>()
            })?;
            for o in &chunk {
                sink.serialize(&o.row).map_err(|e| config(format!("writing {}: {e}", path.display())))?;
            }
            sink.flush().map_err(|e| CliError::io(&path, e))?;
            outcomes.extend(chunk);
            start = end;
        }
        summaries.push(runner.summarize(n, &outcomes)?);
    }
    let mut file = sink
        .into_inner()
        .map_err(|e| config(format!("writing {}: {e}", path.display())))?;
    writeln!(file, "{COMPLETE_MARKER}").map_err(|e| CliError::io(&path, e))?;
    file.sync_all().map_err(|e| CliError::io(&path, e))?;

    let series: Vec<(f64, f64)> = summaries.iter().map(|s| (s.n as f64, s.mean_count)).collect();
    let (fit, fit_note) = match exponent_fit(&series) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let reference = match (cfg.kind, cfg.j) {
        (SetKind::Favorite | SetKind::TruncatedFavorite, 2) => Some(ReferenceExponents {
            rho2: rho2(cfg.alpha, cfg.beta)?,
            rho2_hat: rho2_hat(cfg.alpha, cfg.beta)?,
        }),
        _ => None,
    };
    let manifest = RunManifest {
        config: cfg.clone(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        started_unix,
        finished_unix: unix_now(),
        counting: if cfg.distinct {
            "ordered tuples of distinct points".into()
        } else {
            "ordered tuples with repetition (diagonal included)".into()
        },
        previous_run_incomplete,
        scales: summaries,
        fit,
        fit_note,
        reference,
    };
    write_json(&cfg.out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reads the rows of a results file, ignoring the completeness marker.
pub fn read_results(path: &Path) -> Result<Vec<TrialRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| config(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| config(format!("{}: {e}", path.display()))))
        .collect()
}
