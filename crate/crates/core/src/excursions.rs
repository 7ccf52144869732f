//! Excursion counts across annuli and the successful-point diagnostic.
//!
//! An inward excursion across the annulus `(r_inner, r_outer)` around `z`
//! starts when the walk leaves the closed disk `D(z, r_outer)` and ends when
//! it next enters `D(z, r_inner)`. Outward excursions are the mirror image.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticePoint;
use crate::walk::WalkRecord;

/// Largest factorial level accepted.
pub const MAX_FACTORIAL_LEVEL: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `r_0 = 0`, `r_k = (k!)^3`.
    Factorial,
    /// `r_k = base * ratio^k` for `k = 0, 1, ..`.
    Geometric { base: f64, ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub alpha: f64,
    pub gamma: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSchedule {
    pub kind: ScheduleKind,
    pub params: ScheduleParams,
    /// `r_0 < r_1 < .. < r_m`.
    pub radii: Vec<f64>,
    /// Exact radius when it fits in 64 bits; `None` marks an unrepresentable
    /// factorial radius, whose `radii` entry is then only approximate.
    pub exact_radii: Vec<Option<u64>>,
    /// `n_k = 6α(n-k)^2 log k`, zero at `k = 0`.
    pub reference_counts: Vec<f64>,
    /// `ñ_k = 6γ^2 α k^2 log k`, zero at `k = 0`.
    pub tilde_counts: Vec<f64>,
}

impl AnnulusSchedule {
    /// Index of the outermost radius.
    pub fn top(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn all_representable(&self) -> bool {
        self.exact_radii.iter().all(Option::is_some)
    }
}

pub fn reference_count(params: &ScheduleParams, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let d = params.n as f64 - k as f64;
    6.0 * params.alpha * d * d * (k as f64).ln()
}

pub fn tilde_count(params: &ScheduleParams, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    6.0 * params.gamma * params.gamma * params.alpha * k * k * k.ln()
}

fn factorial_cubed(k: u32) -> (f64, Option<u64>) {
    let mut exact: Option<u64> = Some(1);
    let mut approx = 1.0f64;
    for i in 1..=k as u64 {
        approx *= i as f64;
        exact = exact.and_then(|e| e.checked_mul(i));
    }
    let cube = exact.and_then(|f| f.checked_mul(f)).and_then(|f2| f2.checked_mul(exact?));
    (approx * approx * approx, cube)
}

/// Builds a schedule with `levels` radii above `r_0` for the factorial kind,
/// or `levels` radii in total for the geometric kind.
pub fn build_schedule(kind: ScheduleKind, params: ScheduleParams, levels: u32) -> Result<AnnulusSchedule> {
    if levels < 2 {
        return Err(invalid(format!("a schedule needs at least 2 levels, got {levels}")));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) || params.gamma < 0.0 {
        return Err(invalid(format!(
            "schedule needs alpha in (0, 1) and gamma >= 0 (alpha={}, gamma={})",
            params.alpha, params.gamma
        )));
    }
    let (radii, exact_radii): (Vec<f64>, Vec<Option<u64>>) = match kind {
        ScheduleKind::Factorial => {
            if levels > MAX_FACTORIAL_LEVEL {
                return Err(Error::SizeLimit {
                    size: levels as usize,
                    limit: MAX_FACTORIAL_LEVEL as usize,
                });
            }
            std::iter::once((0.0, Some(0)))
                .chain((1..=levels).map(factorial_cubed))
                .unzip()
        }
        ScheduleKind::Geometric { base, ratio } => {
            if !(base > 0.0) || !(ratio > 1.0) || !base.is_finite() || !ratio.is_finite() {
                return Err(invalid(format!(
                    "geometric radii need base > 0 and ratio > 1 (base={base}, ratio={ratio})"
                )));
            }
            (0..levels)
                .map(|k| {
                    let r = base * ratio.powi(k as i32);
                    let exact = (r.fract() == 0.0 && r < u64::MAX as f64).then_some(r as u64);
                    (r, exact)
                })
                .unzip()
        }
    };
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("schedule radii must be strictly increasing"));
    }
    let reference_counts = (0..radii.len()).map(|k| reference_count(&params, k)).collect();
    let tilde_counts = (0..radii.len()).map(|k| tilde_count(&params, k)).collect();
    Ok(AnnulusSchedule {
        kind,
        params,
        radii,
        exact_radii,
        reference_counts,
        tilde_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// From outside `D(z, r_outer)` into `D(z, r_inner)`.
    #[default]
    Inward,
    /// From inside `D(z, r_inner)` out of `D(z, r_outer)`.
    Outward,
}

/// Streaming excursion counter over a path.
#[derive(Debug, Clone)]
pub struct ExcursionCounter {
    center: LatticePoint,
    inner2: f64,
    outer2: f64,
    direction: Direction,
    armed: bool,
    count: u64,
}

impl ExcursionCounter {
    pub fn new(center: LatticePoint, r_outer: f64, r_inner: f64, direction: Direction) -> Result<Self> {
        if !(r_inner >= 0.0 && r_inner < r_outer) {
            return Err(invalid(format!(
                "annulus needs 0 <= r_inner < r_outer (inner={r_inner}, outer={r_outer})"
            )));
        }
        Ok(Self {
            center,
            inner2: r_inner * r_inner,
            outer2: r_outer * r_outer,
            direction,
            armed: false,
            count: 0,
        })
    }

    pub fn push(&mut self, p: LatticePoint) {
        let d2 = p.dist2(self.center) as f64;
        let outside = d2 > self.outer2;
        let inside = d2 <= self.inner2;
        let (arm, fire) = match self.direction {
            Direction::Inward => (outside, inside),
            Direction::Outward => (inside, outside),
        };
        if self.armed && fire {
            self.count += 1;
            self.armed = false;
        } else if arm {
            self.armed = true;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

pub fn count_excursions(
    path: &[LatticePoint],
    center: LatticePoint,
    r_outer: f64,
    r_inner: f64,
    direction: Direction,
) -> Result<u64> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let mut counter = ExcursionCounter::new(center, r_outer, r_inner, direction)?;
    for &p in path {
        counter.push(p);
    }
    Ok(counter.count())
}

/// Where the diagnostic stops reading the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingRule {
    /// At the first exit from the outermost disk `D(z, r_m)`.
    #[default]
    OuterCircle,
    /// At the end of the recorded walk.
    WalkExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelOutcome {
    pub k: usize,
    pub r_outer: f64,
    pub r_inner: f64,
    /// Inward excursions from `∂D(z, r_k)` to `∂D(z, r_{k-1})`.
    pub count: u64,
    pub reference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub center: LatticePoint,
    pub radii: Vec<f64>,
    pub schedule: ScheduleKind,
    pub stopping: StoppingRule,
    pub gamma: f64,
    /// Levels `k = 3..=m` with `|N_k - ñ_k| <= k`.
    pub levels: Vec<LevelOutcome>,
    pub successful: bool,
    pub note: String,
}

impl SuccessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failed_levels(&self) -> Vec<usize> {
        self.levels.iter().filter(|l| !l.pass).map(|l| l.k).collect()
    }
}

/// Checks `|N_k - ñ_k| <= k` for `3 <= k <= m`.
pub fn successful_diagnostic(
    record: &WalkRecord,
    center: LatticePoint,
    schedule: &AnnulusSchedule,
    stopping: StoppingRule,
) -> Result<SuccessReport> {
    let path = record.path()?;
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let m = schedule.top();
    if m < 3 {
        return Err(invalid(format!("diagnostic needs levels up to k >= 3, schedule stops at {m}")));
    }
    let path = match stopping {
        StoppingRule::WalkExit => path,
        StoppingRule::OuterCircle => {
            let outer2 = schedule.radii[m] * schedule.radii[m];
            let stop = path
                .iter()
                .position(|p| p.dist2(center) as f64 > outer2)
                .map_or(path.len(), |i| i + 1);
            &path[..stop]
        }
    };
    let mut counters: Vec<ExcursionCounter> = (3..=m)
        .map(|k| ExcursionCounter::new(center, schedule.radii[k], schedule.radii[k - 1], Direction::Inward))
        .collect::<Result<_>>()?;
    for &p in path {
        for c in &mut counters {
            c.push(p);
        }
    }
    let levels: Vec<LevelOutcome> = (3..=m)
        .zip(&counters)
        .map(|(k, c)| {
            let reference = schedule.tilde_counts[k];
            LevelOutcome {
                k,
                r_outer: schedule.radii[k],
                r_inner: schedule.radii[k - 1],
                count: c.count(),
                reference,
                pass: (c.count() as f64 - reference).abs() <= k as f64,
            }
        })
        .collect();
    let note = match schedule.kind {
        ScheduleKind::Factorial => "factorial radii r_k = (k!)^3".to_string(),
        ScheduleKind::Geometric { base, ratio } => {
            format!("geometric surrogate radii r_k = {base} * {ratio}^k in place of (k!)^3")
        }
    };
    Ok(SuccessReport {
        center,
        radii: schedule.radii.clone(),
        schedule: schedule.kind,
        stopping,
        gamma: schedule.params.gamma,
        successful: levels.iter().all(|l| l.pass),
        levels,
        note,
    })
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!("wilson interval needs 0 <= {successes} <= {trials}, trials > 0")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ScheduleParams {
        ScheduleParams {
            alpha: 0.5,
            gamma: 1.0,
            n: 10,
        }
    }

    fn line(points: &[(i32, i32)]) -> Vec<LatticePoint> {
        points.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn factorial_radii() {
        let s = build_schedule(ScheduleKind::Factorial, params(), 4).unwrap();
        assert_eq!(s.radii, vec![0.0, 1.0, 8.0, 216.0, 13824.0]);
        assert!(s.all_representable());
        let big = build_schedule(ScheduleKind::Factorial, params(), 12).unwrap();
        assert_eq!(big.exact_radii[9], Some(362_880u64.pow(3)));
        assert_eq!(big.exact_radii[10], None);
        assert!(build_schedule(ScheduleKind::Factorial, params(), 21).is_err());
    }

    #[test]
    fn geometric_radii() {
        let kind = ScheduleKind::Geometric { base: 4.0, ratio: 4.0 };
        let s = build_schedule(kind, params(), 5).unwrap();
        assert_eq!(s.radii, vec![4.0, 16.0, 64.0, 256.0, 1024.0]);
        let bad = ScheduleKind::Geometric { base: 4.0, ratio: 1.0 };
        assert!(build_schedule(bad, params(), 5).is_err());
        assert!(build_schedule(kind, params(), 1).is_err());
    }

    #[test]
    fn reference_counts() {
        let s = build_schedule(ScheduleKind::Factorial, params(), 4).unwrap();
        assert!((s.reference_counts[2] - 192.0 * 2f64.ln()).abs() < 1e-12);
        assert!((s.reference_counts[2] - 133.08).abs() < 0.01);
        assert_eq!(s.reference_counts[0], 0.0);
        assert_eq!(s.tilde_counts[1], 0.0);
        assert!((s.tilde_counts[3] - 27.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn straight_outward_path() {
        let path: Vec<LatticePoint> = (0..30).map(|x| LatticePoint::new(x, 0)).collect();
        let z = LatticePoint::ORIGIN;
        for (outer, inner) in [(4.0, 2.0), (16.0, 4.0), (20.0, 0.0)] {
            assert_eq!(count_excursions(&path, z, outer, inner, Direction::Inward).unwrap(), 0);
            assert_eq!(count_excursions(&path, z, outer, inner, Direction::Outward).unwrap(), 1);
        }
    }

    #[test]
    fn oscillating_path() {
        let mut path = Vec::new();
        for _ in 0..3 {
            path.extend(line(&[(0, 0), (5, 0), (11, 0), (5, 0), (1, 0)]));
        }
        let z = LatticePoint::ORIGIN;
        assert_eq!(count_excursions(&path, z, 10.0, 2.0, Direction::Inward).unwrap(), 3);
        assert_eq!(count_excursions(&path, z, 10.0, 2.0, Direction::Outward).unwrap(), 3);
    }

    #[test]
    fn start_outside_counts() {
        let path = line(&[(12, 0), (1, 0)]);
        assert_eq!(count_excursions(&path, LatticePoint::ORIGIN, 10.0, 2.0, Direction::Inward).unwrap(), 1);
    }

    #[test]
    fn boundaries_are_closed() {
        // distance exactly r_outer is still inside D(z, r_outer)
        let path = line(&[(10, 0), (2, 0), (11, 0), (2, 0)]);
        assert_eq!(count_excursions(&path, LatticePoint::ORIGIN, 10.0, 2.0, Direction::Inward).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let z = LatticePoint::ORIGIN;
        assert_eq!(count_excursions(&[], z, 2.0, 1.0, Direction::Inward), Err(Error::EmptyPath));
        assert!(count_excursions(&line(&[(0, 0)]), z, 2.0, 2.0, Direction::Inward).is_err());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100, 1.96).unwrap();
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson_interval(0, 10, 1.96).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
        assert!(wilson_interval(3, 2, 1.96).is_err());
    }
}
