use crate::error::{invalid, Result};

/// Leading-order formulas for the exact quantities, correction terms dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptotic {
    /// `P^x(tau_r < tau_R) ≈ log(R/|x|) / log(R/r)` for `0 < r < |x| <= R`.
    RingHit { x_norm: f64, r: f64, big_r: f64 },
    /// `G_n(x, 0) ≈ (2/π) log(n/|x|)`, or `(2/π) log n` at the origin.
    Green { n: f64, x_norm: f64 },
    /// `P(tau_n < T_0) ≈ π / (2 log n)`.
    Escape { n: f64 },
    /// `b13 ≈ π / (2 (2 - s) log n)` for two points at log-distance ratio `s`.
    TwoPointEscape { n: f64, s: f64 },
}

pub fn evaluate_asymptotic(kind: Asymptotic) -> Result<f64> {
    use std::f64::consts::{FRAC_2_PI, PI};
    match kind {
        Asymptotic::RingHit { x_norm, r, big_r } => {
            if !(0.0 < r && r < x_norm && x_norm <= big_r) {
                return Err(invalid(format!(
                    "ring geometry needs 0 < r < |x| <= R (r={r}, |x|={x_norm}, R={big_r})"
                )));
            }
            Ok((big_r / x_norm).ln() / (big_r / r).ln())
        }
        Asymptotic::Green { n, x_norm } => {
            if n < 2.0 || x_norm < 0.0 || x_norm > n {
                return Err(invalid(format!("green asymptotic needs n >= 2 and |x| <= n (n={n}, |x|={x_norm})")));
            }
            if x_norm == 0.0 {
                Ok(FRAC_2_PI * n.ln())
            } else {
                Ok(FRAC_2_PI * (n / x_norm).ln())
            }
        }
        Asymptotic::Escape { n } => {
            if n < 2.0 {
                return Err(invalid(format!("escape asymptotic needs n >= 2 (n={n})")));
            }
            Ok(PI / (2.0 * n.ln()))
        }
        Asymptotic::TwoPointEscape { n, s } => {
            if n < 2.0 || !(0.0..=1.0).contains(&s) {
                return Err(invalid(format!("two-point escape needs n >= 2 and s in [0, 1] (n={n}, s={s})")));
            }
            Ok(PI / (2.0 * (2.0 - s) * n.ln()))
        }
    }
}
