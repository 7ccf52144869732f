//! Closed-form pair exponents and their variational representations.
//!
//! `rho2(α, β)` is the almost-sure growth exponent of the number of ordered
//! α-favorite pairs within distance `n^β`; `rho2_hat(α, β)` is the exponent
//! of its expectation. Both arise from the rate function
//! `F_{h,β}(γ) = γ²(1-β) + (h/β)(1 - γ(1-β))²`: `rho2` minimizes `F_{2,β}`
//! under the constraint `αγ² <= 1`, while `rho2_hat` optimizes without it
//! and additionally over all `β' <= β`.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Grid resolution used to bracket the optimum before golden-section refinement.
pub const GRID_POINTS: usize = 10_000;

/// Absolute tolerance of the golden-section refinement in the argument.
pub const ARG_TOLERANCE: f64 = 1e-9;

fn in_unit_open<T: Real>(v: T, name: &str) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {v:?}")))
    }
}

/// Validated parameters of the exponent formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> ExponentParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        in_unit_open(alpha, "alpha")?;
        in_unit_open(beta, "beta")?;
        Ok(Self { alpha, beta })
    }
}

/// `F_{h,β}(γ)`.
pub fn rate_function<T: Real>(h: T, beta: T, gamma: T) -> Result<T> {
    in_unit_open(beta, "beta")?;
    if h < T::zero() || gamma < T::zero() {
        return Err(invalid(format!("h and gamma must be non-negative (h={h:?}, gamma={gamma:?})")));
    }
    Ok(rate(h, beta, gamma))
}

fn rate<T: Real>(h: T, beta: T, gamma: T) -> T {
    let one_minus = T::one() - beta;
    let tail = T::one() - gamma * one_minus;
    gamma * gamma * one_minus + h / beta * tail * tail
}

/// Branch point `2(1 - √α)` of `rho2`.
pub fn rho2_branch<T: Real>(alpha: T) -> T {
    T::lit(2.0) * (T::one() - alpha.sqrt())
}

/// Branch point `2 - √(2α)` of `rho2_hat`.
pub fn rho2_hat_branch<T: Real>(alpha: T) -> T {
    T::lit(2.0) - (T::lit(2.0) * alpha).sqrt()
}

/// `2 + 2β - 4α/(2-β)`, the shared first branch.
fn first_branch<T: Real>(alpha: T, beta: T) -> T {
    let two = T::lit(2.0);
    two + two * beta - T::lit(4.0) * alpha / (two - beta)
}

pub fn rho2<T: Real>(alpha: T, beta: T) -> Result<T> {
    let p = ExponentParams::new(alpha, beta)?;
    Ok(rho2_unchecked(p.alpha, p.beta))
}

fn rho2_unchecked<T: Real>(alpha: T, beta: T) -> T {
    if beta <= rho2_branch(alpha) {
        first_branch(alpha, beta)
    } else {
        let c = T::one() - alpha.sqrt();
        T::lit(8.0) * c - T::lit(4.0) * c * c / beta
    }
}

/// Second branch of `rho2` evaluated anywhere, for continuity checks.
pub fn rho2_second_branch<T: Real>(alpha: T, beta: T) -> T {
    let c = T::one() - alpha.sqrt();
    T::lit(8.0) * c - T::lit(4.0) * c * c / beta
}

pub fn rho2_first_branch<T: Real>(alpha: T, beta: T) -> T {
    first_branch(alpha, beta)
}

pub fn rho2_hat<T: Real>(alpha: T, beta: T) -> Result<T> {
    let p = ExponentParams::new(alpha, beta)?;
    Ok(rho2_hat_unchecked(p.alpha, p.beta))
}

fn rho2_hat_unchecked<T: Real>(alpha: T, beta: T) -> T {
    if beta <= rho2_hat_branch(alpha) {
        first_branch(alpha, beta)
    } else {
        rho2_hat_second_branch(alpha)
    }
}

/// `6 - 4√(2α)`.
pub fn rho2_hat_second_branch<T: Real>(alpha: T) -> T {
    T::lit(6.0) - T::lit(4.0) * (T::lit(2.0) * alpha).sqrt()
}

/// Result of a numeric optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum<T> {
    pub value: T,
    /// Minimizing `γ` for `rho2`, maximizing `β'` for `rho2_hat`.
    pub argument: T,
    /// The optimum sits on the upper end of the admissible interval.
    pub at_upper_bound: bool,
}

/// Minimizes `f` on `[a, b]`: a uniform grid picks the best cell, golden
/// section refines inside the neighboring cells, and the endpoints are
/// compared explicitly.
fn minimize<T: Real>(f: impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let steps = T::from_usize(GRID_POINTS).expect("grid size");
    let h = (b - a) / steps;
    let mut best_i = 0usize;
    let mut best_v = f(a);
    for i in 1..=GRID_POINTS {
        let v = f(a + h * T::from_usize(i).expect("grid index"));
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + h * T::from_usize(best_i.saturating_sub(1)).expect("grid index");
    let hi = (a + h * T::from_usize((best_i + 1).min(GRID_POINTS)).expect("grid index")).min(b);

    let tol = T::lit(ARG_TOLERANCE).max(T::epsilon().sqrt() * (T::one() + b.abs()));
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut lo, mut hi) = (lo, hi);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = (lo + hi) / T::lit(2.0);
    [(a, f(a)), (b, f(b)), (mid, f(mid))]
        .into_iter()
        .fold((mid, f(mid)), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// `2 + 2β - 2α inf_{0 <= γ <= 1/√α} F_{2,β}(γ)`, computed numerically.
pub fn rho2_variational<T: Real>(alpha: T, beta: T) -> Result<Optimum<T>> {
    let p = ExponentParams::new(alpha, beta)?;
    let two = T::lit(2.0);
    let cap = T::one() / p.alpha.sqrt();
    let (gamma, f_min) = minimize(|g| rate(two, p.beta, g), T::zero(), cap);
    Ok(Optimum {
        value: two + two * p.beta - two * p.alpha * f_min,
        argument: gamma,
        at_upper_bound: (cap - gamma).abs() <= T::lit(1e-6),
    })
}

/// `sup_{β' <= β} sup_{γ >= 0} {2 + 2β' - 2α F_{2,β'}(γ)}`.
///
/// The inner problem is solved in closed form (`γ = 2/(2-β')`, where
/// `F_{2,β'} = 2/(2-β')`), the outer one numerically.
pub fn rho2_hat_variational<T: Real>(alpha: T, beta: T) -> Result<Optimum<T>> {
    let p = ExponentParams::new(alpha, beta)?;
    let two = T::lit(2.0);
    let inner = |b: T| {
        let gamma = two / (two - b);
        two + two * b - two * p.alpha * rate(two, b, gamma)
    };
    // (0, β]: the left end is open, start just inside it
    let lo = T::lit(1e-12).max(T::epsilon());
    let (arg, neg) = minimize(|b| -inner(b), lo, p.beta);
    Ok(Optimum {
        value: -neg,
        argument: arg,
        at_upper_bound: (p.beta - arg).abs() <= T::lit(1e-6),
    })
}

/// The inner closed-form optimum `2 + 2β' - 4α/(2-β')`.
pub fn rho2_hat_inner<T: Real>(alpha: T, beta_prime: T) -> T {
    first_branch(alpha, beta_prime)
}
