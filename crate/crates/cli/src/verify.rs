//! Invariant batteries behind the `verify-*` commands.

use std::f64::consts::FRAC_2_PI;
use std::path::Path;
use std::str::FromStr;

use favpts::exponents::{
    rho2, rho2_branch, rho2_first_branch, rho2_hat, rho2_hat_branch, rho2_hat_second_branch, rho2_hat_variational,
    rho2_second_branch, rho2_variational,
};
use favpts::gff::{build_covariance, sample, CONVENTION};
use favpts::lattice::LatticePoint;
use favpts::occupation::{
    occupation_brute_force, occupation_log_probability, occupation_probability, OccupationQuery, State,
};
use favpts::potential::{
    avoidance_probability, evaluate_asymptotic, favorite_threshold, green_function, hitting_probability,
    pair_favorite_bounds, two_point_exit_split, Asymptotic, Convention, DiskPotential,
};
use favpts::rng::{stream_rng, trial_seed};
use favpts::walk::simulate_disk_walk;
use favpts::{BigRational, ExactChain};
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{config, CliError, Result};
use crate::experiment::write_json;

pub const VERDICT_FILE: &str = "verdict.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Combinatorics,
    Potential,
    Exponents,
    Gff,
    Walk,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Combinatorics, Suite::Potential, Suite::Exponents, Suite::Gff, Suite::Walk];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Combinatorics => "combinatorics",
            Suite::Potential => "potential",
            Suite::Exponents => "exponents",
            Suite::Gff => "gff",
            Suite::Walk => "walk",
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs a suite and, if `out` is given, writes `verdict.json` there.
pub fn verify(suite: Suite, seed: u64, out: Option<&Path>) -> Result<Verdict> {
    let checks = match suite {
        Suite::Combinatorics => combinatorics(seed)?,
        Suite::Potential => potential(seed)?,
        Suite::Exponents => exponents()?,
        Suite::Gff => gff(seed)?,
        Suite::Walk => walk(seed)?,
    };
    let verdict = Verdict {
        suite,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write_json(&dir.join(VERDICT_FILE), &verdict)?;
    }
    Ok(verdict)
}

fn random_rational_chain(rng: &mut impl Rng) -> ExactChain {
    let mut d: [[BigRational; 3]; 3] = Default::default();
    for row in d.iter_mut() {
        let w: [i64; 3] = loop {
            let w = [0; 3].map(|_| rng.random_range(0..10i64));
            if w.iter().sum::<i64>() > 0 {
                break w;
            }
        };
        let total: i64 = w.iter().sum();
        for (slot, wi) in row.iter_mut().zip(w) {
            *slot = BigRational::new(wi.into(), total.into());
        }
    }
    ExactChain::new(d).expect("rows sum to one")
}

fn combinatorics(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(trial_seed(seed, 0));
    let chains: Vec<ExactChain> = (0..5).map(|_| random_rational_chain(&mut rng)).collect();
    let (mut cases, mut mismatches, mut asymmetric) = (0, 0, 0);
    for chain in &chains {
        let relabeled = chain.swap_one_two();
        for total in 2..=12u32 {
            for n1 in 1..total {
                for end in [State::One, State::Two] {
                    let q = OccupationQuery::new(n1, total - n1, end)?;
                    let closed = occupation_probability(chain, &q);
                    cases += 1;
                    if closed != occupation_brute_force(chain, &q, State::One)? {
                        mismatches += 1;
                    }
                    let other = if end == State::One { State::Two } else { State::One };
                    let q_swapped = OccupationQuery::new(total - n1, n1, other)?;
                    if closed != occupation_brute_force(&relabeled, &q_swapped, State::Two)? {
                        asymmetric += 1;
                    }
                }
            }
        }
    }
    let mut worst = 0.0f64;
    let mut compared = 0;
    for chain in &chains {
        let float_chain = chain.map(|v| v.to_f64().unwrap_or(f64::NAN));
        for _ in 0..40 {
            let n1 = rng.random_range(1..60u32);
            let n2 = rng.random_range(1..=60 - n1);
            let end = if rng.random_bool(0.5) { State::One } else { State::Two };
            let q = OccupationQuery::new(n1, n2, end)?;
            let exact = occupation_probability(chain, &q).to_f64().unwrap_or(f64::NAN);
            if exact > 0.0 {
                let approx = occupation_log_probability(&float_chain, &q).exp();
                worst = worst.max(((approx - exact) / exact).abs());
                compared += 1;
            }
        }
    }
    Ok(vec![
        check(
            "oracle equality",
            mismatches == 0,
            format!("{cases} exact cases over n1+n2 <= 12 on 5 chains, {mismatches} mismatches"),
        ),
        check(
            "relabel symmetry",
            asymmetric == 0,
            format!("{cases} cases, {asymmetric} mismatches"),
        ),
        check(
            "log domain",
            worst <= 1e-10,
            format!("{compared} cases with n1+n2 <= 60, max rel err {worst:.2e}"),
        ),
    ])
}

fn disk_point(rng: &mut impl Rng, n: u32) -> LatticePoint {
    let r = n as i32;
    loop {
        let p = LatticePoint::new(rng.random_range(-r..=r), rng.random_range(-r..=r));
        if p.in_disk(n) {
            return p;
        }
    }
}

fn potential(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(trial_seed(seed, 1));
    let mut checks = Vec::new();

    let n = 40;
    let pot = DiskPotential::<f64>::new(n)?;
    let mut asym = 0.0f64;
    for _ in 0..50 {
        let (x, y) = (disk_point(&mut rng, n), disk_point(&mut rng, n));
        asym = asym.max((pot.green(x, y)? - pot.green(y, x)?).abs());
    }
    checks.push(check("green symmetry", asym <= 1e-10, format!("50 pairs at n={n}, max |diff| {asym:.2e}")));

    let mut harmonic = 0.0f64;
    for _ in 0..5 {
        let y = disk_point(&mut rng, n);
        let col = pot.operator().green_column(y)?;
        for &p in pot.operator().domain().sites() {
            if p != y {
                harmonic = harmonic.max((col.at(p) - col.neighbor_mean(p)).abs());
            }
        }
    }
    checks.push(check("harmonicity", harmonic <= 1e-10, format!("max residual {harmonic:.2e}")));

    let n = 60;
    let pot = DiskPotential::<f64>::new(n)?;
    let (mut residual, mut split) = (0.0f64, 0.0f64);
    let mut pairs = 0;
    while pairs < 30 {
        let (x1, x2) = (disk_point(&mut rng, n), disk_point(&mut rng, n));
        if x1 == x2 {
            continue;
        }
        pairs += 1;
        let w = pot.w_matrix(x1, x2)?;
        let (p1, p2) = two_point_exit_split(&w)?;
        let [r1, r2] = w.decomposition_residuals(p1, p2);
        residual = residual.max(r1).max(r2);
        split = split
            .max((p1 - avoidance_probability::<f64>(n, x1, x2)?).abs())
            .max((p2 - avoidance_probability::<f64>(n, x2, x1)?).abs());
    }
    checks.push(check(
        "two-point reconstruction",
        residual <= 1e-10 && split <= 1e-10,
        format!("{pairs} pairs, residual {residual:.2e}, split mismatch {split:.2e}"),
    ));

    let scales = [25u32, 50, 100, 200];
    let o = LatticePoint::ORIGIN;
    let mut escape_rel = Vec::new();
    let mut green_rel = Vec::new();
    let mut scaled = 0.0f64;
    for &n in &scales {
        let ln = (n as f64).ln();
        let e = 1.0 - hitting_probability::<f64>(n, o, &[o], Convention::Return)?;
        let ea = evaluate_asymptotic(Asymptotic::Escape { n: n as f64 })?;
        let g: f64 = green_function(n, o, o)?;
        let ga = evaluate_asymptotic(Asymptotic::Green { n: n as f64, x_norm: 0.0 })?;
        escape_rel.push((e - ea).abs() / e);
        green_rel.push((g - ga).abs() / g);
        scaled = scaled.max((e - ea).abs() * ln);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    checks.push(check(
        "asymptotic convergence",
        decreasing(&escape_rel) && decreasing(&green_rel) && scaled <= 1.0,
        format!("escape rel err {escape_rel:.4?}, green rel err {green_rel:.4?}, max |diff| log n {scaled:.3}"),
    ));

    let trials = 20_000u64;
    let panel: [((i32, i32), (i32, i32), f64); 5] = [
        ((5, 0), (5, 8), 0.07),
        ((10, 10), (12, 10), 0.07),
        ((30, 0), (30, 5), 0.07),
        ((0, 20), (3, 24), 0.12),
        ((-15, 5), (-15, 6), 0.12),
    ];
    let mut outside = Vec::new();
    for (c, &(x, xp, alpha)) in panel.iter().enumerate() {
        let (x, xp) = (LatticePoint::from(x), LatticePoint::from(xp));
        let b = pair_favorite_bounds::<f64>(n, x, xp, alpha)?;
        let k = favorite_threshold(n, alpha);
        let mut hits = 0u64;
        for t in 0..trials {
            let v = favpts::walk::target_visits(n, trial_seed(trial_seed(seed, 100 + c as u64), t), &[x, xp])?;
            hits += u64::from(v[0] >= k && v[1] >= k);
        }
        let p = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        if !(p >= b.lower - 3.0 * sigma && p <= b.upper + 3.0 * sigma) {
            outside.push(format!("{x}-{xp}: {p:.3e} not in [{:.3e}, {:.3e}]", b.lower, b.upper));
        }
    }
    checks.push(check(
        "bound sandwich",
        outside.is_empty(),
        format!("5 configurations at n={n}, {trials} walks each; outside: {outside:?}"),
    ));
    Ok(checks)
}

fn exponents() -> Result<Vec<Check>> {
    let grid: Vec<f64> = (1..=50).map(|i| i as f64 / 51.0).collect();
    let (mut diff, mut hat_diff, mut order) = (0.0f64, 0.0f64, 0);
    let (mut alpha_mono, mut beta_mono) = (0, 0);
    for (ia, &a) in grid.iter().enumerate() {
        for (ib, &b) in grid.iter().enumerate() {
            let (r, rh) = (rho2(a, b)?, rho2_hat(a, b)?);
            diff = diff.max((rho2_variational(a, b)?.value - r).abs());
            hat_diff = hat_diff.max((rho2_hat_variational(a, b)?.value - rh).abs());
            order += usize::from(rh < r - 1e-12);
            if let Some(&a2) = grid.get(ia + 1) {
                alpha_mono += usize::from(rho2(a2, b)? >= r || rho2_hat(a2, b)? >= rh);
            }
            if let Some(&b2) = grid.get(ib + 1) {
                // the hat exponent is flat in beta on its second branch
                let hat_ok = if b2 <= rho2_hat_branch(a) { rho2_hat(a, b2)? > rh } else { rho2_hat(a, b2)? >= rh - 1e-12 };
                beta_mono += usize::from(rho2(a, b2)? <= r || !hat_ok);
            }
        }
    }
    let mut jump = 0.0f64;
    for &a in &grid {
        let b = rho2_branch(a);
        if b > 0.0 && b < 1.0 {
            jump = jump.max((rho2_first_branch(a, b) - rho2_second_branch(a, b)).abs());
        }
        let bh = rho2_hat_branch(a);
        if bh > 0.0 && bh < 1.0 {
            jump = jump.max((rho2_first_branch(a, bh) - rho2_hat_second_branch(a)).abs());
        }
    }
    let points = grid.len() * grid.len();
    Ok(vec![
        check(
            "variational agreement",
            diff <= 1e-6 && hat_diff <= 1e-6,
            format!("{points} grid points, max |diff| rho2 {diff:.2e}, rho2_hat {hat_diff:.2e}"),
        ),
        check("hat dominates", order == 0, format!("{order} violations")),
        check("branch continuity", jump <= 1e-9, format!("max jump {jump:.2e}")),
        check(
            "monotonicity",
            alpha_mono == 0 && beta_mono == 0,
            format!("{alpha_mono} violations in alpha, {beta_mono} in beta"),
        ),
    ])
}

fn gff(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let small = build_covariance(16)?;
    let residual = small.factorization_residual();
    checks.push(check("factorization", residual <= 1e-10, format!("n=16 residual {residual:.2e}")));

    let n = 32;
    let factor = build_covariance(n)?;
    let (a, b) = (LatticePoint::new(16, 16), LatticePoint::new(17, 16));
    let (ia, ib) = (factor.index_of(a).expect("inside"), factor.index_of(b).expect("inside"));
    let (g_aa, g_bb, g_ab) = (factor.covariance(a, a)?, factor.covariance(b, b)?, factor.covariance(a, b)?);
    let samples = 10_000u64;
    let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
    let mut standardized = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let phi = sample(&factor, trial_seed(trial_seed(seed, 2), s));
        sa += phi.values[ia];
        sb += phi.values[ib];
        sab += phi.values[ia] * phi.values[ib];
        standardized.push(phi.values[ia] / g_aa.sqrt());
    }
    let m = samples as f64;
    let cov = sab / m - (sa / m) * (sb / m);
    let se = ((g_aa * g_bb + g_ab * g_ab) / m).sqrt();
    checks.push(check(
        "covariance",
        (cov - g_ab).abs() <= 4.0 * se,
        format!("n={n}, {samples} samples: {cov:.4} vs {g_ab:.4} ({:.2} se); {CONVENTION}", (cov - g_ab).abs() / se),
    ));

    standardized.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let ks = standardized
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.628 / m.sqrt();
    checks.push(check(
        "gaussianity",
        ks <= critical,
        format!("KS statistic {ks:.4}, critical value {critical:.4} at level 0.01"),
    ));

    let centers: Vec<f64> = [16u32, 32, 64]
        .iter()
        .map(|&side| {
            let c = LatticePoint::new((side / 2) as i32, (side / 2) as i32);
            build_covariance(side).and_then(|f| f.covariance(c, c))
        })
        .collect::<favpts::Result<_>>()?;
    let step = FRAC_2_PI * 2f64.ln();
    let growth_ok = centers.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 0.25 * step);
    checks.push(check(
        "log growth at center",
        growth_ok,
        format!("G(center) {centers:.4?}, expected steps of {step:.4}"),
    ));
    Ok(checks)
}

fn walk(seed: u64) -> Result<Vec<Check>> {
    let n = 64u32;
    let (mut conservation, mut geometry, mut prefix, mut rerun) = (0, 0, 0, 0);
    let seeds = 1000u64;
    for s in 0..seeds {
        let sd = trial_seed(trial_seed(seed, 3), s);
        let rec = simulate_disk_walk(n, sd, true)?;
        conservation += usize::from(rec.local_time.total() != rec.exit_time + 1);
        let path = rec.path()?;
        let e2 = rec.exit_point.norm2();
        let ring = e2 > (n as i64).pow(2) && e2 <= (n as i64 + 1).pow(2);
        geometry += usize::from(!ring || !path[..path.len() - 1].iter().all(|p| p.in_disk(n)));
        if s % 10 == 0 {
            let wide = simulate_disk_walk(2 * n, sd, true)?;
            prefix += usize::from(!wide.path()?.starts_with(path));
            rerun += usize::from(simulate_disk_walk(n, sd, true)?.to_json() != rec.to_json());
        }
    }
    Ok(vec![
        check("conservation", conservation == 0, format!("{seeds} walks at n={n}, {conservation} failures")),
        check("geometry", geometry == 0, format!("{geometry} failures")),
        check("prefix coupling", prefix == 0, format!("{} pairs (n, 2n), {prefix} failures", seeds / 10)),
        check("determinism", rerun == 0, format!("{} reruns, {rerun} differ", seeds / 10)),
    ])
}
