//! Special point sets (favorite, late, high) and clustered tuple counts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gff::GFFSample;
use crate::lattice::{torus_dist2, LatticePoint};
use crate::potential::favorite_threshold;
use crate::walk::{TorusRecord, WalkRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    Favorite,
    TruncatedFavorite,
    Late,
    High,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Favorite => "favorite",
            SetKind::TruncatedFavorite => "truncated-favorite",
            SetKind::Late => "late",
            SetKind::High => "high",
        }
    }
}

impl std::str::FromStr for SetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "favorite" => Ok(SetKind::Favorite),
            "truncated" | "truncated-favorite" => Ok(SetKind::TruncatedFavorite),
            "late" => Ok(SetKind::Late),
            "high" => Ok(SetKind::High),
            other => Err(invalid(format!("unknown set kind {other:?}"))),
        }
    }
}

/// Distance used when counting clustered tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    /// Minimal wrapped Euclidean distance on the `side x side` torus.
    Torus { side: u32 },
}

impl Metric {
    pub fn dist2(self, a: LatticePoint, b: LatticePoint) -> i64 {
        match self {
            Metric::Euclidean => a.dist2(b),
            Metric::Torus { side } => torus_dist2(a, b, side),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub kind: SetKind,
    pub n: u32,
    pub alpha: f64,
    /// Sorted, distinct.
    pub members: Vec<LatticePoint>,
    /// Lower threshold on the defining quantity (visits, steps, or `phi^2/2`).
    pub threshold: f64,
    /// Upper threshold of the truncated favorite set.
    pub upper_threshold: Option<f64>,
    pub metric: Metric,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        self.members.iter().all(|&p| other.contains(p))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn log_square(n: u32) -> f64 {
    let l = (n as f64).ln();
    l * l
}

/// `Ψ_n(α)`: sites with `K(tau_n, x) >= ceil((4α/π)(log n)^2)`. The truncated
/// variant also requires `K(tau_n, x) <= (4/π)(log n)^2`.
pub fn favorite_points(record: &WalkRecord, alpha: f64, truncated: bool) -> Result<PointSet> {
    check_alpha(alpha)?;
    if record.radius < 3 {
        return Err(invalid(format!("favorite points need n >= 3, got {}", record.radius)));
    }
    let lower = favorite_threshold(record.radius, alpha);
    let upper = truncated.then(|| 4.0 / std::f64::consts::PI * log_square(record.radius));
    let members = record
        .local_time
        .entries()
        .into_iter()
        .filter(|&(_, k)| k >= lower && upper.is_none_or(|u| k as f64 <= u))
        .map(|(p, _)| p)
        .collect();
    Ok(PointSet {
        kind: if truncated {
            SetKind::TruncatedFavorite
        } else {
            SetKind::Favorite
        },
        n: record.radius,
        alpha,
        members,
        threshold: lower as f64,
        upper_threshold: upper,
        metric: Metric::Euclidean,
    })
}

/// `L_n(α)`: torus sites with `T_x >= (4α/π)(n log n)^2`. Sites never hit
/// count as `T_x = ∞`.
pub fn late_points(record: &TorusRecord, alpha: f64) -> Result<PointSet> {
    check_alpha(alpha)?;
    let n = record.side;
    let threshold = 4.0 * alpha / std::f64::consts::PI * (n as f64) * (n as f64) * log_square(n);
    let mut members: Vec<LatticePoint> = record
        .hitting_time
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_none_or(|t| t as f64 >= threshold))
        .map(|(i, _)| record.site(i))
        .collect();
    members.sort_unstable();
    Ok(PointSet {
        kind: SetKind::Late,
        n,
        alpha,
        members,
        threshold,
        upper_threshold: None,
        metric: Metric::Torus { side: n },
    })
}

/// `V_n(α)`: sites with `phi(x)^2 / 2 >= (4α/π)(log n)^2`.
pub fn high_points(sample: &GFFSample, alpha: f64) -> Result<PointSet> {
    check_alpha(alpha)?;
    let n = sample.side;
    let threshold = 4.0 * alpha / std::f64::consts::PI * log_square(n);
    let mut members: Vec<LatticePoint> = sample
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| *v * *v / 2.0 >= threshold)
        .map(|(i, _)| sample.site(i))
        .collect();
    members.sort_unstable();
    Ok(PointSet {
        kind: SetKind::High,
        n,
        alpha,
        members,
        threshold,
        upper_threshold: None,
        metric: Metric::Euclidean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CountMethod {
    /// Row prefix sums for large planar pair counts, grid buckets otherwise.
    #[default]
    Auto,
    GridBucket,
    RowPrefix,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountOptions {
    /// Ordered tuples may repeat a member (the default). When false all
    /// entries of a tuple are distinct.
    pub repetition: bool,
    pub method: CountMethod,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            repetition: true,
            method: CountMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCountReport {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub j: u32,
    pub kind: SetKind,
    /// Ordered `j`-tuples with all pairwise distances at most `n^beta`.
    pub count: u64,
    pub set_size: usize,
    pub repetition: bool,
}

/// Set sizes above which [`CountMethod::Auto`] switches to row prefix sums.
const ROW_PREFIX_MIN_SIZE: usize = 2_000;
/// Bounding-box area limit for the row prefix table.
const ROW_PREFIX_MAX_AREA: usize = 1 << 26;

struct Cutoff {
    radius2: f64,
}

impl Cutoff {
    fn new(n: u32, beta: f64) -> Self {
        let c = (n as f64).powf(beta);
        Self { radius2: c * c }
    }

    fn within(&self, d2: i64) -> bool {
        (d2 as f64) <= self.radius2
    }

    fn radius(&self) -> f64 {
        self.radius2.sqrt()
    }
}

pub fn tuple_count(set: &PointSet, beta: f64, j: u32) -> Result<PairCountReport> {
    tuple_count_with(set, beta, j, CountOptions::default())
}

pub fn tuple_count_with(set: &PointSet, beta: f64, j: u32, options: CountOptions) -> Result<PairCountReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if j < 2 {
        return Err(invalid(format!("tuple order j must be at least 2, got {j}")));
    }
    let cutoff = Cutoff::new(set.n, beta);
    let planar_pairs = j == 2 && set.metric == Metric::Euclidean;
    let method = match options.method {
        CountMethod::Auto if planar_pairs && set.len() >= ROW_PREFIX_MIN_SIZE => CountMethod::RowPrefix,
        CountMethod::Auto => CountMethod::GridBucket,
        m => m,
    };
    let count = match method {
        CountMethod::BruteForce => brute_force_count(&set.members, set.metric, &cutoff, j, options.repetition),
        CountMethod::RowPrefix => {
            if !planar_pairs {
                return Err(invalid("row prefix counting handles planar pairs only"));
            }
            let with_diagonal = row_prefix_pairs(&set.members, &cutoff)?;
            if options.repetition {
                with_diagonal
            } else {
                with_diagonal - set.len() as u64
            }
        }
        _ => GridIndex::new(&set.members, set.metric, &cutoff).count(j, options.repetition),
    };
    Ok(PairCountReport {
        n: set.n,
        alpha: set.alpha,
        beta,
        j,
        kind: set.kind,
        count,
        set_size: set.len(),
        repetition: options.repetition,
    })
}

/// Exhaustive enumeration of ordered tuples; the oracle for the indexed
/// counters.
pub fn brute_force_tuple_count(set: &PointSet, beta: f64, j: u32, repetition: bool) -> u64 {
    brute_force_count(&set.members, set.metric, &Cutoff::new(set.n, beta), j, repetition)
}

fn brute_force_count(points: &[LatticePoint], metric: Metric, cutoff: &Cutoff, j: u32, repetition: bool) -> u64 {
    fn extend(
        points: &[LatticePoint],
        metric: Metric,
        cutoff: &Cutoff,
        chosen: &mut Vec<usize>,
        remaining: u32,
        repetition: bool,
    ) -> u64 {
        if remaining == 0 {
            return 1;
        }
        let mut total = 0;
        for i in 0..points.len() {
            if !repetition && chosen.contains(&i) {
                continue;
            }
            if chosen.iter().all(|&c| cutoff.within(metric.dist2(points[c], points[i]))) {
                chosen.push(i);
                total += extend(points, metric, cutoff, chosen, remaining - 1, repetition);
                chosen.pop();
            }
        }
        total
    }
    extend(points, metric, cutoff, &mut Vec::new(), j, repetition)
}

struct GridIndex<'a> {
    points: &'a [LatticePoint],
    metric: Metric,
    cutoff: &'a Cutoff,
    cell: i64,
    /// cells per axis on the torus
    wrap: Option<i64>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [LatticePoint], metric: Metric, cutoff: &'a Cutoff) -> Self {
        let reach = cutoff.radius().ceil().max(1.0) as i64;
        let (cell, wrap) = match metric {
            Metric::Euclidean => (reach, None),
            Metric::Torus { side } => {
                // every cell is at least `reach` wide; the last one absorbs
                // the remainder
                let cells = (side as i64 / reach).max(1);
                (side as i64 / cells, Some(cells))
            }
        };
        let mut index = Self {
            points,
            metric,
            cutoff,
            cell,
            wrap,
            buckets: HashMap::new(),
        };
        for (i, &p) in points.iter().enumerate() {
            let key = index.key(p);
            index.buckets.entry(key).or_default().push(i);
        }
        index
    }

    fn key(&self, p: LatticePoint) -> (i64, i64) {
        let (x, y) = match self.metric {
            Metric::Euclidean => (p.x as i64, p.y as i64),
            Metric::Torus { side } => ((p.x as i64).rem_euclid(side as i64), (p.y as i64).rem_euclid(side as i64)),
        };
        match self.wrap {
            None => (x.div_euclid(self.cell), y.div_euclid(self.cell)),
            Some(m) => ((x / self.cell).min(m - 1), (y / self.cell).min(m - 1)),
        }
    }

    /// Indices of all members within the cutoff of member `i`, itself included.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let (cx, cy) = self.key(self.points[i]);
        let mut keys = Vec::with_capacity(9);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let k = match self.wrap {
                    None => (cx + dx, cy + dy),
                    Some(m) => ((cx + dx).rem_euclid(m), (cy + dy).rem_euclid(m)),
                };
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        let mut out = Vec::new();
        for k in keys {
            if let Some(bucket) = self.buckets.get(&k) {
                out.extend(
                    bucket
                        .iter()
                        .copied()
                        .filter(|&m| self.cutoff.within(self.metric.dist2(self.points[i], self.points[m]))),
                );
            }
        }
        out.sort_unstable();
        out
    }

    fn count(&self, j: u32, repetition: bool) -> u64 {
        let neighborhoods: Vec<Vec<usize>> = (0..self.points.len()).map(|i| self.neighbors(i)).collect();
        let mut total = 0u64;
        for (i, nb) in neighborhoods.iter().enumerate() {
            let candidates: Vec<usize> = if repetition {
                nb.clone()
            } else {
                nb.iter().copied().filter(|&m| m != i).collect()
            };
            total += self.extend(&neighborhoods, &candidates, j - 1, repetition);
        }
        total
    }

    /// Ordered completions of a tuple whose compatible members are `candidates`.
    fn extend(&self, neighborhoods: &[Vec<usize>], candidates: &[usize], remaining: u32, repetition: bool) -> u64 {
        if remaining == 1 {
            return candidates.len() as u64;
        }
        let mut total = 0;
        for &c in candidates {
            let next: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&m| (repetition || m != c) && neighborhoods[c].binary_search(&m).is_ok())
                .collect();
            total += self.extend(neighborhoods, &next, remaining - 1, repetition);
        }
        total
    }
}

/// Ordered planar pairs (diagonal included) from row prefix sums over the
/// bounding box of the set.
fn row_prefix_pairs(points: &[LatticePoint], cutoff: &Cutoff) -> Result<u64> {
    if points.is_empty() {
        return Ok(0);
    }
    let min_x = points.iter().map(|p| p.x).min().unwrap_or(0) as i64;
    let max_x = points.iter().map(|p| p.x).max().unwrap_or(0) as i64;
    let min_y = points.iter().map(|p| p.y).min().unwrap_or(0) as i64;
    let max_y = points.iter().map(|p| p.y).max().unwrap_or(0) as i64;
    let width = (max_x - min_x + 1) as usize;
    let height = (max_y - min_y + 1) as usize;
    // prefix[r][c] = members in row r with column < c
    let stride = width + 1;
    let area = stride * height;
    if area > ROW_PREFIX_MAX_AREA {
        return Err(Error::SizeLimit {
            size: area,
            limit: ROW_PREFIX_MAX_AREA,
        });
    }
    let mut prefix = vec![0u32; area];
    for p in points {
        let r = (p.y as i64 - min_y) as usize;
        let c = (p.x as i64 - min_x) as usize;
        prefix[r * stride + c + 1] += 1;
    }
    for r in 0..height {
        for c in 1..stride {
            prefix[r * stride + c] += prefix[r * stride + c - 1];
        }
    }
    // half-widths of the cutoff disk per row offset
    let reach = cutoff.radius().floor() as i64;
    let widths: Vec<i64> = (0..=reach)
        .map(|dy| {
            let mut w = (cutoff.radius2 - (dy * dy) as f64).max(0.0).sqrt().floor() as i64;
            while cutoff.within(dy * dy + (w + 1) * (w + 1)) {
                w += 1;
            }
            while w > 0 && !cutoff.within(dy * dy + w * w) {
                w -= 1;
            }
            w
        })
        .collect();
    let mut total = 0u64;
    for p in points {
        let px = p.x as i64 - min_x;
        let py = p.y as i64 - min_y;
        for dy in -reach..=reach {
            let r = py + dy;
            if r < 0 || r >= height as i64 {
                continue;
            }
            let w = widths[dy.unsigned_abs() as usize];
            let lo = (px - w).max(0) as usize;
            let hi = (px + w + 1).min(width as i64);
            if hi as usize <= lo {
                continue;
            }
            let row = r as usize * stride;
            total += (prefix[row + hi as usize] - prefix[row + lo]) as u64;
        }
    }
    Ok(total)
}

/// Least-squares fit of `log count` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// `(log n, log count)` for the scales used.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Scales dropped because their count was zero.
    pub excluded_scales: Vec<f64>,
}

/// Fits `log count = intercept + slope log n`. Scales with a zero count are
/// dropped and listed in the result; at least three must remain.
pub fn exponent_fit(series: &[(f64, f64)]) -> Result<ExponentFit> {
    let mut points = Vec::new();
    let mut excluded_scales = Vec::new();
    for &(n, count) in series {
        if !(n > 0.0) || count < 0.0 || !count.is_finite() {
            return Err(invalid(format!("invalid series entry (n={n}, count={count})")));
        }
        if count == 0.0 {
            excluded_scales.push(n);
        } else {
            points.push((n.ln(), count.ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable scales, at least 3 needed",
            points.len()
        )));
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all scales coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr.max(0.0) / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        points,
        slope,
        intercept,
        stderr,
        excluded_scales,
    })
}
