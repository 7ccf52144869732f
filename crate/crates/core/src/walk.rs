//! Simple random walk on the square lattice: walks stopped on leaving a disk
//! and walks on the discrete torus.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticePoint;
use crate::rng::{step_offset, StepStream};

/// Hard cap on walk length. Reaching it is reported as [`Error::StepCapExceeded`].
pub const STEP_CAP: u64 = 1_000_000_000;

/// Largest radius stored in a dense array; larger walks use a hash map.
pub const DENSE_RADIUS_LIMIT: u32 = 4096;

/// Visit counts `K(t, x)` keyed by site.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalTime {
    /// Column-major counts over the square `[-half, half]^2`, so that a linear
    /// scan visits sites in lexicographic `(x, y)` order.
    Dense {
        half: i32,
        side: usize,
        counts: Vec<u32>,
    },
    Sparse(HashMap<LatticePoint, u32>),
}

impl LocalTime {
    fn dense(half: i32) -> Self {
        let side = (2 * half + 1) as usize;
        LocalTime::Dense {
            half,
            side,
            counts: vec![0; side * side],
        }
    }

    pub fn get(&self, p: LatticePoint) -> u32 {
        match self {
            LocalTime::Dense { half, side, counts } => {
                if p.x.abs() > *half || p.y.abs() > *half {
                    return 0;
                }
                counts[(p.x + half) as usize * side + (p.y + half) as usize]
            }
            LocalTime::Sparse(map) => map.get(&p).copied().unwrap_or(0),
        }
    }

    /// Visited sites with their counts, sorted lexicographically.
    pub fn entries(&self) -> Vec<(LatticePoint, u32)> {
        match self {
            LocalTime::Dense { half, side, counts } => counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| {
                    let x = (i / side) as i32 - half;
                    let y = (i % side) as i32 - half;
                    (LatticePoint::new(x, y), c)
                })
                .collect(),
            LocalTime::Sparse(map) => {
                let mut v: Vec<_> = map.iter().map(|(&p, &c)| (p, c)).collect();
                v.sort_unstable_by_key(|e| e.0);
                v
            }
        }
    }

    pub fn total(&self) -> u64 {
        match self {
            LocalTime::Dense { counts, .. } => counts.iter().map(|&c| c as u64).sum(),
            LocalTime::Sparse(map) => map.values().map(|&c| c as u64).sum(),
        }
    }

    pub fn visited_sites(&self) -> usize {
        match self {
            LocalTime::Dense { counts, .. } => counts.iter().filter(|&&c| c > 0).count(),
            LocalTime::Sparse(map) => map.len(),
        }
    }

    fn from_entries(entries: &[(LatticePoint, u32)], radius: u32) -> Self {
        if radius <= DENSE_RADIUS_LIMIT {
            let mut lt = LocalTime::dense(radius as i32 + 1);
            if let LocalTime::Dense { half, side, counts } = &mut lt {
                for &(p, c) in entries {
                    counts[(p.x + *half) as usize * *side + (p.y + *half) as usize] = c;
                }
            }
            lt
        } else {
            LocalTime::Sparse(entries.iter().copied().collect())
        }
    }
}

/// Outcome of a walk from the origin stopped at `tau_n`, the first time it
/// reaches the outer boundary of `D(0, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkRecord {
    pub radius: u32,
    pub seed: u64,
    pub exit_time: u64,
    pub exit_point: LatticePoint,
    /// `K(tau_n, x)`: visits at steps `0..=tau_n`.
    pub local_time: LocalTime,
    pub path: Option<Vec<LatticePoint>>,
}

impl WalkRecord {
    pub fn path(&self) -> Result<&[LatticePoint]> {
        self.path.as_deref().ok_or(Error::PathNotRetained)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&WalkRecordJson::from(self)).expect("record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: WalkRecordJson =
            serde_json::from_str(s).map_err(|e| invalid(format!("walk record json: {e}")))?;
        Ok(raw.into())
    }
}

/// JSON form: `local_time` is a lexicographically sorted list of
/// `[x, y, count]` triples and `path` a list of `[x, y]` pairs.
#[derive(Serialize, Deserialize)]
struct WalkRecordJson {
    radius: u32,
    seed: u64,
    exit_time: u64,
    exit_point: LatticePoint,
    local_time: Vec<[i64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<Vec<[i32; 2]>>,
}

impl From<&WalkRecord> for WalkRecordJson {
    fn from(r: &WalkRecord) -> Self {
        WalkRecordJson {
            radius: r.radius,
            seed: r.seed,
            exit_time: r.exit_time,
            exit_point: r.exit_point,
            local_time: r
                .local_time
                .entries()
                .into_iter()
                .map(|(p, c)| [p.x as i64, p.y as i64, c as i64])
                .collect(),
            path: r
                .path
                .as_ref()
                .map(|p| p.iter().map(|q| [q.x, q.y]).collect()),
        }
    }
}

impl From<WalkRecordJson> for WalkRecord {
    fn from(r: WalkRecordJson) -> Self {
        let entries: Vec<_> = r
            .local_time
            .iter()
            .map(|t| (LatticePoint::new(t[0] as i32, t[1] as i32), t[2] as u32))
            .collect();
        WalkRecord {
            radius: r.radius,
            seed: r.seed,
            exit_time: r.exit_time,
            exit_point: r.exit_point,
            local_time: LocalTime::from_entries(&entries, r.radius),
            path: r
                .path
                .map(|p| p.into_iter().map(|[x, y]| LatticePoint::new(x, y)).collect()),
        }
    }
}

pub fn simulate_disk_walk(n: u32, seed: u64, keep_path: bool) -> Result<WalkRecord> {
    simulate_disk_walk_capped(n, seed, keep_path, STEP_CAP)
}

/// [`simulate_disk_walk`] with an explicit step cap.
pub fn simulate_disk_walk_capped(
    n: u32,
    seed: u64,
    keep_path: bool,
    cap: u64,
) -> Result<WalkRecord> {
    if n == 0 {
        return Err(invalid("disk radius must be at least 1"));
    }
    let r2 = (n as i64) * (n as i64);
    let mut steps = StepStream::new(seed);
    let mut path = keep_path.then(|| vec![LatticePoint::ORIGIN]);
    let (mut x, mut y) = (0i32, 0i32);
    let mut t: u64 = 0;

    let mut local_time = if n <= DENSE_RADIUS_LIMIT {
        LocalTime::dense(n as i32 + 1)
    } else {
        LocalTime::Sparse(HashMap::new())
    };

    match &mut local_time {
        LocalTime::Dense { half, side, counts } => {
            let side_i = *side as isize;
            let mut idx = (*half as isize) * side_i + *half as isize;
            counts[idx as usize] += 1;
            loop {
                if t == cap {
                    return Err(Error::StepCapExceeded(cap));
                }
                let d = steps.next_dir();
                let (dx, dy) = step_offset(d);
                x += dx;
                y += dy;
                idx += dx as isize * side_i + dy as isize;
                t += 1;
                counts[idx as usize] += 1;
                if let Some(p) = path.as_mut() {
                    p.push(LatticePoint::new(x, y));
                }
                if (x as i64) * (x as i64) + (y as i64) * (y as i64) > r2 {
                    break;
                }
            }
        }
        LocalTime::Sparse(map) => {
            map.insert(LatticePoint::ORIGIN, 1);
            loop {
                if t == cap {
                    return Err(Error::StepCapExceeded(cap));
                }
                let (dx, dy) = step_offset(steps.next_dir());
                x += dx;
                y += dy;
                t += 1;
                let p = LatticePoint::new(x, y);
                *map.entry(p).or_insert(0) += 1;
                if let Some(path) = path.as_mut() {
                    path.push(p);
                }
                if p.norm2() > r2 {
                    break;
                }
            }
        }
    }

    Ok(WalkRecord {
        radius: n,
        seed,
        exit_time: t,
        exit_point: LatticePoint::new(x, y),
        local_time,
        path,
    })
}

/// A site attaining the maximal local time; ties go to the lexicographically
/// smallest site.
pub fn max_local_time(record: &WalkRecord) -> (LatticePoint, u32) {
    // entries() is sorted, so the first strict maximum is the smallest site
    record
        .local_time
        .entries()
        .into_iter()
        .fold((LatticePoint::ORIGIN, 0), |best, (p, c)| {
            if c > best.1 {
                (p, c)
            } else {
                best
            }
        })
}

/// Visits to each of `targets` during steps `0..tau_n` of a walk from the
/// origin. Does not allocate a local time field.
pub fn target_visits(n: u32, seed: u64, targets: &[LatticePoint]) -> Result<Vec<u32>> {
    if n == 0 {
        return Err(invalid("disk radius must be at least 1"));
    }
    let r2 = (n as i64) * (n as i64);
    let mut steps = StepStream::new(seed);
    let mut visits = vec![0u32; targets.len()];
    let (mut x, mut y) = (0i32, 0i32);
    let mut t = 0u64;
    loop {
        for (v, q) in visits.iter_mut().zip(targets) {
            if q.x == x && q.y == y {
                *v += 1;
            }
        }
        if t == STEP_CAP {
            return Err(Error::StepCapExceeded(STEP_CAP));
        }
        let (dx, dy) = step_offset(steps.next_dir());
        x += dx;
        y += dy;
        t += 1;
        if (x as i64) * (x as i64) + (y as i64) * (y as i64) > r2 {
            return Ok(visits);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorusMode {
    UntilCovered,
    FixedHorizon(u64),
}

/// First hitting times of a walk on the `side x side` torus started at the
/// site `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusRecord {
    pub side: u32,
    pub seed: u64,
    /// Row-major (`y * side + x`); `None` for sites never hit.
    pub hitting_time: Vec<Option<u64>>,
    pub total_steps: u64,
    pub covered: bool,
}

impl TorusRecord {
    pub fn site(&self, index: usize) -> LatticePoint {
        let s = self.side as usize;
        LatticePoint::new((index % s) as i32, (index / s) as i32)
    }

    pub fn hitting_time_at(&self, p: LatticePoint) -> Option<u64> {
        let s = self.side as i32;
        self.hitting_time[(p.y.rem_euclid(s) * s + p.x.rem_euclid(s)) as usize]
    }

    pub fn max_hitting_time(&self) -> Option<u64> {
        self.hitting_time.iter().flatten().copied().max()
    }
}

pub fn simulate_torus_walk(side: u32, seed: u64, mode: TorusMode) -> Result<TorusRecord> {
    if side < 2 {
        return Err(invalid("torus side must be at least 2"));
    }
    let s = side as i32;
    let sites = (side as usize) * (side as usize);
    let mut hit = vec![None; sites];
    hit[0] = Some(0);
    let mut remaining = sites - 1;
    let horizon = match mode {
        TorusMode::UntilCovered => STEP_CAP,
        TorusMode::FixedHorizon(h) => h,
    };
    let mut steps = StepStream::new(seed);
    let (mut x, mut y) = (0i32, 0i32);
    let mut t = 0u64;
    while t < horizon && !(mode == TorusMode::UntilCovered && remaining == 0) {
        let (dx, dy) = step_offset(steps.next_dir());
        x += dx;
        y += dy;
        if x == s {
            x = 0;
        } else if x < 0 {
            x = s - 1;
        }
        if y == s {
            y = 0;
        } else if y < 0 {
            y = s - 1;
        }
        t += 1;
        let slot = &mut hit[(y * s + x) as usize];
        if slot.is_none() {
            *slot = Some(t);
            remaining -= 1;
        }
    }
    if mode == TorusMode::UntilCovered && remaining > 0 {
        return Err(Error::StepCapExceeded(STEP_CAP));
    }
    Ok(TorusRecord {
        side,
        seed,
        hitting_time: hit,
        total_steps: t,
        covered: remaining == 0,
    })
}
