//! Exact potential theory of simple random walk killed on leaving `D(0, n)`.
//!
//! Every quantity here comes from a linear solve rather than simulation:
//! Green's functions, hitting and avoidance probabilities, the two-point
//! visit matrix `W`, the reduced three-state chain among `(x, x', exit)`,
//! and the two-sided bounds on the probability that both `x` and `x'` are
//! favorite points.
//!
//! Hitting times follow the return convention by default: `T_A` is the first
//! time `m >= 1` the walk is in `A`. [`Convention::FirstEntry`] uses `m >= 0`.

mod asymptotic;
mod domain;
mod solver;

pub use asymptotic::{evaluate_asymptotic, Asymptotic};
pub use domain::LatticeDomain;
pub use solver::{BandCholesky, Field, KilledWalkOperator, SolveMethod, DIRECT_RADIUS_LIMIT};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticePoint;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// `inf { m >= 1 }`
    #[default]
    Return,
    /// `inf { m >= 0 }`
    FirstEntry,
}

fn check_inside(n: u32, p: LatticePoint) -> Result<()> {
    if p.in_disk(n) {
        Ok(())
    } else {
        Err(Error::OutsideDomain { point: p, radius: n })
    }
}

/// The killed walk on `D(0, n)` with a factorization (or iterative solver)
/// reused across queries.
#[derive(Debug, Clone)]
pub struct DiskPotential<T> {
    radius: u32,
    op: KilledWalkOperator<T>,
}

impl<T: Real> DiskPotential<T> {
    pub fn new(n: u32) -> Result<Self> {
        Self::with_method(n, SolveMethod::Auto)
    }

    pub fn with_method(n: u32, method: SolveMethod) -> Result<Self> {
        if n == 0 {
            return Err(invalid("disk radius must be at least 1"));
        }
        let op = KilledWalkOperator::new(LatticeDomain::disk(LatticePoint::ORIGIN, n), &[], method)?;
        Ok(Self { radius: n, op })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn operator(&self) -> &KilledWalkOperator<T> {
        &self.op
    }

    /// `G(x, y)`: expected visits to `y` before `tau_n` for the walk from `x`.
    pub fn green(&self, x: LatticePoint, y: LatticePoint) -> Result<T> {
        check_inside(self.radius, x)?;
        check_inside(self.radius, y)?;
        Ok(self.op.green_column(y)?.at(x))
    }

    /// `W_{i,l} = G(x_i, x_l)` with the stopping set `∂D(0, n)`.
    pub fn w_matrix(&self, x1: LatticePoint, x2: LatticePoint) -> Result<WMatrix<T>> {
        check_inside(self.radius, x1)?;
        check_inside(self.radius, x2)?;
        if x1 == x2 {
            return Err(Error::CoincidentPoints(x1));
        }
        let c1 = self.op.green_column(x1)?;
        let c2 = self.op.green_column(x2)?;
        Ok(WMatrix {
            w: [[c1.at(x1), c2.at(x1)], [c1.at(x2), c2.at(x2)]],
            x1,
            x2,
            stop_radius: self.radius,
        })
    }
}

pub fn green_function<T: Real>(n: u32, x: LatticePoint, y: LatticePoint) -> Result<T> {
    check_inside(n, x)?;
    check_inside(n, y)?;
    DiskPotential::new(n)?.green(x, y)
}

/// `P^start(T_targets < tau_n)`.
///
/// With [`Convention::FirstEntry`] a start inside the target set gives 1;
/// with [`Convention::Return`] the walk must come back after its first step.
pub fn hitting_probability<T: Real>(
    n: u32,
    start: LatticePoint,
    targets: &[LatticePoint],
    convention: Convention,
) -> Result<T> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    check_inside(n, start)?;
    for &t in targets {
        check_inside(n, t)?;
    }
    if convention == Convention::FirstEntry && targets.contains(&start) {
        return Ok(T::one());
    }
    let op = KilledWalkOperator::new(LatticeDomain::disk(LatticePoint::ORIGIN, n), targets, SolveMethod::Auto)?;
    let h = op.harmonic(|_| T::one(), T::zero())?;
    Ok(match convention {
        Convention::FirstEntry => h.at(start),
        Convention::Return => h.neighbor_mean(start),
    })
}

/// `P^{x1}(tau_n < T_{x1,x2})` from a direct solve of the avoidance problem
/// with both points absorbing.
pub fn avoidance_probability<T: Real>(n: u32, x1: LatticePoint, x2: LatticePoint) -> Result<T> {
    if x1 == x2 {
        return Err(Error::CoincidentPoints(x1));
    }
    Ok(T::one() - hitting_probability::<T>(n, x1, &[x1, x2], Convention::Return)?)
}

/// Expected mutual visits between two marked points before a stopping set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WMatrix<T> {
    /// `w[i][l]`: expected visits to `x_l` from `x_i` before stopping.
    pub w: [[T; 2]; 2],
    pub x1: LatticePoint,
    pub x2: LatticePoint,
    /// The stopping set is the exit of `D(0, stop_radius)`.
    pub stop_radius: u32,
}

impl<T: Real> WMatrix<T> {
    pub fn det(&self) -> T {
        self.w[0][0] * self.w[1][1] - self.w[0][1] * self.w[1][0]
    }

    /// Checks `W12 < W22`, `W21 < W11` and a positive determinant.
    pub fn check(&self) -> Result<()> {
        let [[w11, w12], [w21, w22]] = self.w;
        if !(w12 < w22 && w21 < w11 && self.det() > T::zero()) {
            return Err(invalid(format!("W matrix violates its ordering invariants: {:?}", self.w)));
        }
        Ok(())
    }

    /// Residuals of `1 = W_{i,1} p1 + W_{i,2} p2`, `i = 1, 2`.
    pub fn decomposition_residuals(&self, p1: T, p2: T) -> [T; 2] {
        let r = |i: usize| (self.w[i][0] * p1 + self.w[i][1] * p2 - T::one()).abs();
        [r(0), r(1)]
    }
}

pub fn w_matrix<T: Real>(n: u32, x1: LatticePoint, x2: LatticePoint) -> Result<WMatrix<T>> {
    check_inside(n, x1)?;
    check_inside(n, x2)?;
    if x1 == x2 {
        return Err(Error::CoincidentPoints(x1));
    }
    DiskPotential::new(n)?.w_matrix(x1, x2)
}

/// Exit-before-return probabilities `(P^{x1}(stop < T_{x1,x2}), P^{x2}(stop < T_{x1,x2}))`
/// recovered from `W` by solving its 2x2 decomposition system.
pub fn two_point_exit_split<T: Real>(w: &WMatrix<T>) -> Result<(T, T)> {
    let det = w.det();
    if det.abs() <= T::epsilon() || !det.is_finite() {
        return Err(Error::Singular(0));
    }
    let [[w11, w12], [w21, w22]] = w.w;
    Ok(((w22 - w12) / det, (w11 - w21) / det))
}

/// `s = log d(x, x') / log n`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogDistanceRatio(pub f64);

impl LogDistanceRatio {
    pub fn new(x: LatticePoint, x_prime: LatticePoint, n: u32) -> Self {
        LogDistanceRatio(x.dist(x_prime).ln() / (n as f64).ln())
    }
}

/// Transition probabilities `b[i][l]` of the chain of successive visits to
/// `(U1, U2, U3) = (x, x', ∂D(0, n))`, for `i` in `{x, x'}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointChain<T> {
    pub b: [[T; 3]; 2],
    pub n: u32,
    pub x: LatticePoint,
    pub x_prime: LatticePoint,
}

impl<T: Real> TwoPointChain<T> {
    pub fn row_sums(&self) -> [T; 2] {
        self.b.map(|r| r[0] + r[1] + r[2])
    }

    pub fn log_distance_ratio(&self) -> LogDistanceRatio {
        LogDistanceRatio::new(self.x, self.x_prime, self.n)
    }

    /// The same chain with the roles of `x` and `x'` exchanged.
    pub fn swapped(&self) -> Self {
        let [r1, r2] = self.b;
        TwoPointChain {
            b: [[r2[1], r2[0], r2[2]], [r1[1], r1[0], r1[2]]],
            n: self.n,
            x: self.x_prime,
            x_prime: self.x,
        }
    }
}

/// Solves the three absorbing problems on `D(0, n) \ {x, x'}` and reads off
/// each row of `b` from one-step averages. Rows are not normalized, so their
/// sums are an independent check.
pub fn two_point_chain<T: Real>(n: u32, x: LatticePoint, x_prime: LatticePoint) -> Result<TwoPointChain<T>> {
    check_inside(n, x)?;
    check_inside(n, x_prime)?;
    if x == x_prime {
        return Err(Error::CoincidentPoints(x));
    }
    let op = KilledWalkOperator::new(
        LatticeDomain::disk(LatticePoint::ORIGIN, n),
        &[x, x_prime],
        SolveMethod::Auto,
    )?;
    let hit_x = op.harmonic(|p| if p == x { T::one() } else { T::zero() }, T::zero())?;
    let hit_xp = op.harmonic(|p| if p == x_prime { T::one() } else { T::zero() }, T::zero())?;
    let exit = op.harmonic(|_| T::zero(), T::one())?;
    let row = |u: LatticePoint| {
        [
            hit_x.neighbor_mean(u),
            hit_xp.neighbor_mean(u),
            exit.neighbor_mean(u),
        ]
    };
    Ok(TwoPointChain {
        b: [row(x), row(x_prime)],
        n,
        x,
        x_prime,
    })
}

/// Two-sided bounds on `P(x, x' ∈ Ψ_n(α))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBounds<T> {
    pub lower: T,
    /// Bound with the stopping radius doubled to `2n`.
    pub upper: T,
    /// The intermediate bound with stopping radius `n`; `upper_tight <= upper`.
    pub upper_tight: T,
    /// `ceil((4α/π)(log n)^2)`
    pub alpha_tilde: u32,
    /// `x` and `x'` were exchanged so that `b11 <= b22`.
    pub swapped: bool,
    /// After orientation, `P(T_x' < T_x ∧ tau_n) <= P(T_x < T_x' ∧ tau_n)`.
    pub first_visit_ordered: bool,
    /// `P(T_x < T_x' ∧ tau_n)` for the oriented pair.
    pub first_visit: T,
    pub chain: TwoPointChain<T>,
}

/// Visit threshold `ceil((4α/π)(log n)^2)` of the α-favorite set.
pub fn favorite_threshold(n: u32, alpha: f64) -> u32 {
    let l = (n as f64).ln();
    (4.0 * alpha / std::f64::consts::PI * l * l).ceil().max(0.0) as u32
}

/// Lower bound from the occupation identity of the reduced chain,
/// `P(T_x < T_x' ∧ tau_n) b12 (1/α̃²) P^x(T_{x,x'} < tau_n)^(2α̃-2)`, and
/// upper bound `max_{y ∈ {x,x'}} P^y(T_{x,x'} < tau_{2n})^(2α̃-1)`.
///
/// The lower bound needs `b11 <= b22`; the pair is reoriented to ensure it and
/// the report says whether that happened.
pub fn pair_favorite_bounds<T: Real>(
    n: u32,
    x: LatticePoint,
    x_prime: LatticePoint,
    alpha: f64,
) -> Result<PairBounds<T>> {
    check_inside(n, x)?;
    check_inside(n, x_prime)?;
    if x == x_prime {
        return Err(Error::CoincidentPoints(x));
    }
    let alpha_tilde = favorite_threshold(n, alpha);
    if alpha_tilde < 2 {
        return Err(invalid(format!(
            "visit threshold {alpha_tilde} < 2 (alpha = {alpha}, n = {n})"
        )));
    }

    let op = KilledWalkOperator::new(
        LatticeDomain::disk(LatticePoint::ORIGIN, n),
        &[x, x_prime],
        SolveMethod::Auto,
    )?;
    let hit_x = op.harmonic(|p| if p == x { T::one() } else { T::zero() }, T::zero())?;
    let hit_xp = op.harmonic(|p| if p == x_prime { T::one() } else { T::zero() }, T::zero())?;
    let exit = op.harmonic(|_| T::zero(), T::one())?;
    let row = |u: LatticePoint| {
        [
            hit_x.neighbor_mean(u),
            hit_xp.neighbor_mean(u),
            exit.neighbor_mean(u),
        ]
    };
    let mut chain = TwoPointChain {
        b: [row(x), row(x_prime)],
        n,
        x,
        x_prime,
    };
    let origin = LatticePoint::ORIGIN;
    let mut first = [hit_x.neighbor_mean(origin), hit_xp.neighbor_mean(origin)];

    let swapped = chain.b[0][0] > chain.b[1][1];
    if swapped {
        chain = chain.swapped();
        first.swap(0, 1);
    }
    let [b11, b12, _] = chain.b[0];
    let at = T::from_u32(alpha_tilde).expect("small integer");
    let lower = first[0] * b12 / (at * at) * (b11 + b12).powi(2 * alpha_tilde as i32 - 2);

    let tight = [chain.b[0][0] + chain.b[0][1], chain.b[1][0] + chain.b[1][1]];
    let upper_tight = tight[0].max(tight[1]).powi(2 * alpha_tilde as i32 - 1);

    let wide = KilledWalkOperator::new(
        LatticeDomain::disk(LatticePoint::ORIGIN, 2 * n),
        &[x, x_prime],
        SolveMethod::Auto,
    )?;
    let hit = wide.harmonic(|_| T::one(), T::zero())?;
    let ret = hit.neighbor_mean(x).max(hit.neighbor_mean(x_prime));
    let upper = ret.powi(2 * alpha_tilde as i32 - 1);

    Ok(PairBounds {
        lower,
        upper,
        upper_tight,
        alpha_tilde,
        swapped,
        first_visit_ordered: first[1] <= first[0],
        first_visit: first[0],
        chain,
    })
}

/// One row of the potential-theory CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRow {
    pub n: u32,
    pub x: Option<LatticePoint>,
    pub y: Option<LatticePoint>,
    pub quantity: String,
    pub exact: f64,
    pub asymptotic: f64,
}

impl PotentialRow {
    pub const CSV_HEADER: &'static str = "n,x,y,quantity,exact,asymptotic,rel_err";

    /// `|exact - asymptotic| / |exact|`.
    pub fn rel_err(&self) -> f64 {
        (self.exact - self.asymptotic).abs() / self.exact.abs()
    }

    /// Points are written as `x:y` so rows need no quoting.
    pub fn to_csv_line(&self) -> String {
        let pt = |p: Option<LatticePoint>| p.map(|p| format!("{}:{}", p.x, p.y)).unwrap_or_default();
        format!(
            "{},{},{},{},{:.17e},{:.17e},{:.17e}",
            self.n,
            pt(self.x),
            pt(self.y),
            self.quantity,
            self.exact,
            self.asymptotic,
            self.rel_err()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i32, y: i32) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    #[test]
    fn green_unit_disk_by_hand() {
        // G(0,0) = 1 + G(e,0), G(e,0) = G(0,0)/4  =>  G(0,0) = 4/3
        let g: f64 = green_function(1, LatticePoint::ORIGIN, LatticePoint::ORIGIN).unwrap();
        assert!((g - 4.0 / 3.0).abs() < 1e-14);
        let ge: f64 = green_function(1, p(1, 0), LatticePoint::ORIGIN).unwrap();
        assert!((ge - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn green_is_symmetric_and_harmonic() {
        let pot = DiskPotential::<f64>::new(20).unwrap();
        let pairs = [(p(0, 0), p(7, -3)), (p(-12, 5), p(4, 4)), (p(19, 0), p(-1, 18))];
        for (a, b) in pairs {
            let gab = pot.green(a, b).unwrap();
            let gba = pot.green(b, a).unwrap();
            assert!((gab - gba).abs() < 1e-10);
        }
        let x = p(3, 2);
        let col = pot.operator().green_column(x).unwrap();
        for &y in pot.operator().domain().sites() {
            if y != x {
                assert!((col.at(y) - col.neighbor_mean(y)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let e = green_function::<f64>(5, p(6, 0), LatticePoint::ORIGIN).unwrap_err();
        assert!(matches!(e, Error::OutsideDomain { .. }));
        assert_eq!(
            hitting_probability::<f64>(5, LatticePoint::ORIGIN, &[], Convention::Return).unwrap_err(),
            Error::EmptyTargets
        );
    }

    #[test]
    fn return_probability_matches_green() {
        let x = p(4, -7);
        let ret: f64 = hitting_probability(50, x, &[x], Convention::Return).unwrap();
        let g: f64 = green_function(50, x, x).unwrap();
        assert!((ret - (1.0 - 1.0 / g)).abs() < 1e-10);
        let first: f64 = hitting_probability(50, x, &[x], Convention::FirstEntry).unwrap();
        assert_eq!(first, 1.0);
    }

    #[test]
    fn hitting_a_far_point() {
        let y = p(10, 0);
        let h: f64 = hitting_probability(20, LatticePoint::ORIGIN, &[y], Convention::FirstEntry).unwrap();
        assert!(h > 0.0 && h < 1.0);
        let g0y: f64 = green_function(20, LatticePoint::ORIGIN, y).unwrap();
        let gyy: f64 = green_function(20, y, y).unwrap();
        // last-exit decomposition: G(0,y) = P^0(T_y < tau) G(y,y)
        assert!((h - g0y / gyy).abs() < 1e-10);
    }

    #[test]
    fn w_matrix_symmetric_placement() {
        let w = w_matrix::<f64>(30, p(6, 2), p(-6, -2)).unwrap();
        assert!((w.w[0][0] - w.w[1][1]).abs() < 1e-10);
        assert!((w.w[0][1] - w.w[1][0]).abs() < 1e-10);
        w.check().unwrap();
        let (p1, p2) = two_point_exit_split(&w).unwrap();
        assert!((p1 - p2).abs() < 1e-10);
        assert!((p1 - 1.0 / (w.w[0][0] + w.w[0][1])).abs() < 1e-10);
    }

    #[test]
    fn split_of_decoupled_points() {
        let w = WMatrix {
            w: [[2.5, 0.0], [0.0, 4.0]],
            x1: p(0, 0),
            x2: p(1, 0),
            stop_radius: 3,
        };
        let (p1, p2): (f64, f64) = two_point_exit_split(&w).unwrap();
        assert!((p1 - 0.4).abs() < 1e-15 && (p2 - 0.25).abs() < 1e-15);
        let singular = WMatrix { w: [[1.0, 1.0], [1.0, 1.0]], ..w };
        assert!(two_point_exit_split(&singular).is_err());
    }

    #[test]
    fn split_matches_direct_avoidance() {
        let (x1, x2) = (p(10, 0), p(-10, 0));
        let w = w_matrix::<f64>(60, x1, x2).unwrap();
        let (p1, p2) = two_point_exit_split(&w).unwrap();
        let direct: f64 = avoidance_probability(60, x1, x2).unwrap();
        assert!((p1 - direct).abs() < 1e-10, "{p1} vs {direct}");
        let direct2: f64 = avoidance_probability(60, x2, x1).unwrap();
        assert!((p2 - direct2).abs() < 1e-10);
        let [r1, r2] = w.decomposition_residuals(p1, p2);
        assert!(r1 < 1e-10 && r2 < 1e-10);
    }

    #[test]
    fn coincident_points_rejected() {
        assert_eq!(w_matrix::<f64>(10, p(1, 1), p(1, 1)).unwrap_err(), Error::CoincidentPoints(p(1, 1)));
        assert!(two_point_chain::<f64>(10, p(1, 1), p(1, 1)).is_err());
    }

    #[test]
    fn chain_rows_and_reversal_symmetry() {
        let c = two_point_chain::<f64>(25, p(3, 1), p(-5, 6)).unwrap();
        for s in c.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!((c.b[0][1] - c.b[1][0]).abs() < 1e-10);
    }

    #[test]
    fn chain_adjacent_points() {
        let c = two_point_chain::<f64>(8, p(0, 0), p(1, 0)).unwrap();
        assert!(c.b[0][1] >= 0.25);
        assert!(c.b[1][0] >= 0.25);
    }

    #[test]
    fn chain_symmetric_placement() {
        let c = two_point_chain::<f64>(30, p(0, 5), p(0, -5)).unwrap();
        assert!((c.b[0][0] - c.b[1][1]).abs() < 1e-10);
        assert!((c.b[0][2] - c.b[1][2]).abs() < 1e-10);
    }

    #[test]
    fn chain_escape_against_leading_order() {
        let c = two_point_chain::<f64>(60, p(5, 0), p(5, 8)).unwrap();
        let s = c.log_distance_ratio().0;
        let asym = std::f64::consts::PI / (2.0 * (2.0 - s) * 60f64.ln());
        let rel = (c.b[0][2] - asym).abs() / asym;
        assert!(rel <= 0.25, "b13 = {}, leading order {asym}", c.b[0][2]);
    }

    #[test]
    fn bounds_substitution_at_threshold_two() {
        let n = 60;
        // (4α/π)(log n)^2 = 1.5 gives α̃ = 2
        let l = (n as f64).ln();
        let alpha = 1.5 * std::f64::consts::PI / (4.0 * l * l);
        let (x, xp) = (p(6, 0), p(-6, 0));
        let b = pair_favorite_bounds::<f64>(n, x, xp, alpha).unwrap();
        assert_eq!(b.alpha_tilde, 2);
        let [b11, b12, _] = b.chain.b[0];
        let hit: f64 = hitting_probability(n, b.chain.x, &[x, xp], Convention::Return).unwrap();
        assert!((b11 + b12 - hit).abs() < 1e-10);
        let expected = b.first_visit * b12 * 0.25 * hit * hit;
        assert!((b.lower - expected).abs() < 1e-14);
        assert!(b.lower <= b.upper_tight && b.upper_tight <= b.upper && b.upper <= 1.0);
    }

    #[test]
    fn bounds_reject_small_threshold() {
        assert!(pair_favorite_bounds::<f64>(60, p(1, 0), p(0, 1), 0.01).is_err());
    }

    #[test]
    fn csv_row_format() {
        let row = PotentialRow {
            n: 10,
            x: Some(p(1, -2)),
            y: None,
            quantity: "green".into(),
            exact: 2.0,
            asymptotic: 1.5,
        };
        let line = row.to_csv_line();
        assert!(line.starts_with("10,1:-2,,green,"));
        assert_eq!(line.split(',').count(), 7);
        assert!((row.rel_err() - 0.25).abs() < 1e-15);
    }
}
