//! Experiment configuration: a TOML file with `[experiment]` and optional
//! `[schedule]` sections, then command-line overrides on top.

use std::path::{Path, PathBuf};

use favpts::excursions::{build_schedule, AnnulusSchedule, ScheduleKind, ScheduleParams, StoppingRule};
use favpts::gff::MAX_SIDE;
use favpts::point_sets::SetKind;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};

pub const DEFAULT_SCALES: [u32; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<Overrides>,
    schedule: Option<ScheduleConfig>,
}

/// Values that may come from the file or from flags. Flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub scales: Option<Vec<u32>>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub j: Option<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub kind: Option<String>,
    /// Count only tuples of distinct points.
    pub distinct: Option<bool>,
}

impl Overrides {
    fn layer(self, top: Overrides) -> Overrides {
        Overrides {
            scales: top.scales.or(self.scales),
            alpha: top.alpha.or(self.alpha),
            beta: top.beta.or(self.beta),
            j: top.j.or(self.j),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            workers: top.workers.or(self.workers),
            out: top.out.or(self.out),
            kind: top.kind.or(self.kind),
            distinct: top.distinct.or(self.distinct),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusKind {
    Factorial,
    Geometric,
}

/// Annulus schedule for the per-trial excursion diagnostic around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: RadiusKind,
    #[serde(default = "default_base")]
    pub base: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub levels: u32,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub stopping: StoppingRule,
}

fn default_base() -> f64 {
    2.0
}
fn default_ratio() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    1.0
}

impl ScheduleConfig {
    pub fn build(&self, alpha: f64) -> Result<AnnulusSchedule> {
        let kind = match self.kind {
            RadiusKind::Factorial => ScheduleKind::Factorial,
            RadiusKind::Geometric => ScheduleKind::Geometric {
                base: self.base,
                ratio: self.ratio,
            },
        };
        let params = ScheduleParams {
            alpha,
            gamma: self.gamma,
            n: self.levels,
        };
        let schedule = build_schedule(kind, params, self.levels).map_err(|e| config(format!("schedule: {e}")))?;
        if schedule.top() < 3 {
            return Err(config("schedule: the diagnostic needs radii up to index 3 or more"));
        }
        Ok(schedule)
    }
}

/// Fully resolved settings. Embedded verbatim in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub scales: Vec<u32>,
    pub alpha: f64,
    pub beta: f64,
    pub j: u32,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub kind: SetKind,
    pub distinct: bool,
    pub schedule: Option<ScheduleConfig>,
}

impl ExperimentConfig {
    /// Reads `path` if given, applies `flags`, fills defaults and validates.
    pub fn resolve(command: &str, path: Option<&Path>, flags: Overrides) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| config(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        let o = file.experiment.unwrap_or_default().layer(flags);
        let kind = match o.kind {
            Some(k) => k.parse::<SetKind>().map_err(|e| config(e.to_string()))?,
            None => SetKind::Favorite,
        };
        let cfg = ExperimentConfig {
            command: command.to_string(),
            scales: o.scales.unwrap_or_else(|| DEFAULT_SCALES.to_vec()),
            alpha: o.alpha.unwrap_or(0.1),
            beta: o.beta.unwrap_or(0.5),
            j: o.j.unwrap_or(2),
            trials: o.trials.unwrap_or(200),
            seed: o.seed.unwrap_or(1),
            workers: o.workers.unwrap_or_else(default_workers),
            out: o.out.unwrap_or_else(|| PathBuf::from("favpts-out")),
            kind,
            distinct: o.distinct.unwrap_or(false),
            schedule: file.schedule,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(config("trials must be at least 1"));
        }
        if self.workers < 1 {
            return Err(config("workers must be at least 1"));
        }
        if self.scales.is_empty() {
            return Err(config("scales must not be empty"));
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config(format!("scales must be strictly increasing, got {:?}", self.scales)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if self.j < 2 {
            return Err(config(format!("j must be at least 2, got {}", self.j)));
        }
        let smallest = self.scales[0];
        let largest = *self.scales.last().expect("non-empty");
        match self.kind {
            SetKind::High if largest > MAX_SIDE => {
                return Err(config(format!("high points use a box side of at most {MAX_SIDE}, got {largest}")));
            }
            SetKind::High | SetKind::Late if smallest < 2 => {
                return Err(config(format!("{} points need n >= 2", self.kind.name())));
            }
            _ if smallest < 1 => return Err(config("scales must be positive")),
            _ => {}
        }
        if let Some(s) = &self.schedule {
            if !matches!(self.kind, SetKind::Favorite | SetKind::TruncatedFavorite) {
                return Err(config("an excursion schedule needs a disk walk (favorite or truncated kind)"));
            }
            s.build(self.alpha)?;
        }
        Ok(())
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "[experiment]\nscales = [16, 32, 64]\nalpha = 0.2\ntrials = 5\n\n[schedule]\nkind = \"geometric\"\nlevels = 5\n",
        )
        .unwrap();
        let flags = Overrides {
            trials: Some(7),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve("simulate", Some(&p), flags).unwrap();
        assert_eq!(c.trials, 7);
        assert_eq!(c.alpha, 0.2);
        assert_eq!(c.scales, vec![16, 32, 64]);
        assert_eq!(c.schedule.unwrap().stopping, StoppingRule::OuterCircle);
    }

    #[test]
    fn violated_preconditions_are_named() {
        let bad = |o: Overrides| ExperimentConfig::resolve("simulate", None, o).unwrap_err().to_string();
        assert!(bad(Overrides { trials: Some(0), ..Default::default() }).contains("trials"));
        assert!(bad(Overrides { scales: Some(vec![64, 32]), ..Default::default() }).contains("increasing"));
        assert!(bad(Overrides { alpha: Some(1.5), ..Default::default() }).contains("alpha"));
        assert!(bad(Overrides { kind: Some("high".into()), ..Default::default() }).contains("128"));
        assert!(bad(Overrides { kind: Some("hot".into()), ..Default::default() }).contains("kind"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[experiment]\nalpah = 0.2\n").unwrap();
        assert!(matches!(
            ExperimentConfig::resolve("simulate", Some(&p), Overrides::default()),
            Err(CliError::Config(_))
        ));
    }
}
