//! Joint occupation probabilities of a three-state Markov chain.
//!
//! For a chain on `{1, 2, 3}` started at state 1, the probability that the
//! first `n1 + n2` steps visit state 1 exactly `n1` times and state 2 exactly
//! `n2` times (the start is not counted) and end at a prescribed state has a
//! closed binomial form. This module evaluates it exactly over any
//! [`Scalar`], in the log domain for large counts, and by brute-force
//! enumeration as an independent check.

use num_traits::pow;

use crate::error::{invalid, Error, Result};
use crate::scalar::{LnFactorials, Scalar};

/// Enumeration limit for [`occupation_brute_force`].
pub const BRUTE_FORCE_LIMIT: u32 = 20;

/// Above this many steps [`occupation_probability_f64`] switches to the log domain.
pub const LOG_DOMAIN_THRESHOLD: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    One,
    Two,
    Three,
}

impl State {
    fn idx(self) -> usize {
        match self {
            State::One => 0,
            State::Two => 1,
            State::Three => 2,
        }
    }

    const ALL: [State; 3] = [State::One, State::Two, State::Three];
}

/// Row-stochastic 3x3 transition matrix `d[i][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeStateChain<S> {
    d: [[S; 3]; 3],
}

impl<S: Scalar> ThreeStateChain<S> {
    /// Validates entries in `[0, 1]` and unit row sums (exactly for exact
    /// scalars, to `1e-12` otherwise).
    pub fn new(d: [[S; 3]; 3]) -> Result<Self> {
        for (i, row) in d.iter().enumerate() {
            let mut sum = S::zero();
            for v in row {
                if *v < S::zero() || *v > S::one() {
                    return Err(invalid(format!("transition entry {v:?} in row {i} outside [0, 1]")));
                }
                sum = sum + v.clone();
            }
            let ok = if S::is_exact() {
                sum == S::one()
            } else {
                (sum.as_f64() - 1.0).abs() <= 1e-12
            };
            if !ok {
                return Err(invalid(format!("row {i} sums to {sum:?}, expected 1")));
            }
        }
        Ok(Self { d })
    }

    pub fn uniform() -> Self {
        let third = S::from_ratio(1, 3);
        let row = [third.clone(), third.clone(), third];
        Self {
            d: [row.clone(), row.clone(), row],
        }
    }

    pub fn get(&self, from: State, to: State) -> &S {
        &self.d[from.idx()][to.idx()]
    }

    pub fn matrix(&self) -> &[[S; 3]; 3] {
        &self.d
    }

    /// The chain with the labels of states 1 and 2 exchanged.
    pub fn swap_one_two(&self) -> Self {
        let p = [1usize, 0, 2];
        let d = std::array::from_fn(|i| std::array::from_fn(|l| self.d[p[i]][p[l]].clone()));
        Self { d }
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> ThreeStateChain<T> {
        ThreeStateChain {
            d: std::array::from_fn(|i| std::array::from_fn(|l| f(&self.d[i][l]))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupationQuery {
    pub n1: u32,
    pub n2: u32,
    pub end: State,
}

impl OccupationQuery {
    pub fn new(n1: u32, n2: u32, end: State) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(invalid(format!(
                "occupation counts must both be at least 1 (got n1={n1}, n2={n2})"
            )));
        }
        if end == State::Three {
            return Err(invalid("end state must be 1 or 2"));
        }
        Ok(Self { n1, n2, end })
    }

    pub fn steps(&self) -> u32 {
        self.n1 + self.n2
    }
}

/// Closed-form occupation probability for a chain started at state 1.
///
/// Ending at 2:
/// `sum_{0<=i<=n1 ^ (n2-1)} d11^(n1-i) d12^(i+1) C(n1,i) d21^i d22^(n2-i-1) C(n2-1,i)`.
///
/// Ending at 1:
/// `sum_{1<=i<=n1 ^ n2} d11^(n1-i) d12^i C(n1,i) d21^i d22^(n2-i) C(n2-1,i-1)`.
pub fn occupation_probability<S: Scalar>(chain: &ThreeStateChain<S>, q: &OccupationQuery) -> S {
    let (n1, n2) = (q.n1 as usize, q.n2 as usize);
    let [[d11, d12, _], [d21, d22, _], _] = &chain.d;
    let mut total = S::zero();
    match q.end {
        State::Two => {
            for i in 0..=n1.min(n2 - 1) {
                let term = pow(d11.clone(), n1 - i)
                    * pow(d12.clone(), i + 1)
                    * S::binomial(n1 as u64, i as u64)
                    * pow(d21.clone(), i)
                    * pow(d22.clone(), n2 - i - 1)
                    * S::binomial((n2 - 1) as u64, i as u64);
                total = total + term;
            }
        }
        State::One => {
            for i in 1..=n1.min(n2) {
                let term = pow(d11.clone(), n1 - i)
                    * pow(d12.clone(), i)
                    * S::binomial(n1 as u64, i as u64)
                    * pow(d21.clone(), i)
                    * pow(d22.clone(), n2 - i)
                    * S::binomial((n2 - 1) as u64, (i - 1) as u64);
                total = total + term;
            }
        }
        State::Three => unreachable!("rejected by OccupationQuery::new"),
    }
    total
}

fn ln_pow(ln_base: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        ln_base * k as f64
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Natural log of [`occupation_probability`], evaluated term by term in the
/// log domain with a log-factorial table. Returns `-inf` for probability zero.
pub fn occupation_log_probability(chain: &ThreeStateChain<f64>, q: &OccupationQuery) -> f64 {
    let (n1, n2) = (q.n1 as usize, q.n2 as usize);
    let table = LnFactorials::new(n1.max(n2));
    let ln = |from: State, to: State| chain.get(from, to).ln();
    let (l11, l12, l21, l22) = (
        ln(State::One, State::One),
        ln(State::One, State::Two),
        ln(State::Two, State::One),
        ln(State::Two, State::Two),
    );
    let terms: Vec<f64> = match q.end {
        State::Two => (0..=n1.min(n2 - 1))
            .map(|i| {
                ln_pow(l11, n1 - i)
                    + ln_pow(l12, i + 1)
                    + table.ln_binomial(n1, i)
                    + ln_pow(l21, i)
                    + ln_pow(l22, n2 - i - 1)
                    + table.ln_binomial(n2 - 1, i)
            })
            .collect(),
        _ => (1..=n1.min(n2))
            .map(|i| {
                ln_pow(l11, n1 - i)
                    + ln_pow(l12, i)
                    + table.ln_binomial(n1, i)
                    + ln_pow(l21, i)
                    + ln_pow(l22, n2 - i)
                    + table.ln_binomial(n2 - 1, i - 1)
            })
            .collect(),
    };
    log_sum_exp(&terms)
}

/// Float evaluation that switches to the log domain past
/// [`LOG_DOMAIN_THRESHOLD`] steps.
pub fn occupation_probability_f64(chain: &ThreeStateChain<f64>, q: &OccupationQuery) -> f64 {
    if q.steps() > LOG_DOMAIN_THRESHOLD {
        occupation_log_probability(chain, q).exp()
    } else {
        occupation_probability(chain, q)
    }
}

/// Sums the weight of every length-`n1 + n2` state sequence from `start`
/// that stays in `{1, 2}`, has exactly `n1` ones and `n2` twos, and ends in
/// `q.end`.
pub fn occupation_brute_force<S: Scalar>(
    chain: &ThreeStateChain<S>,
    q: &OccupationQuery,
    start: State,
) -> Result<S> {
    if q.steps() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            size: q.steps() as usize,
            limit: BRUTE_FORCE_LIMIT as usize,
        });
    }
    if start == State::Three {
        return Err(invalid("enumeration start must be state 1 or 2"));
    }

    fn go<S: Scalar>(
        chain: &ThreeStateChain<S>,
        at: State,
        ones_left: u32,
        twos_left: u32,
        end: State,
        weight: S,
        acc: &mut S,
    ) {
        if ones_left == 0 && twos_left == 0 {
            if at == end {
                *acc = acc.clone() + weight;
            }
            return;
        }
        if ones_left > 0 {
            let w = chain.get(at, State::One);
            if !w.is_zero() {
                go(chain, State::One, ones_left - 1, twos_left, end, weight.clone() * w.clone(), acc);
            }
        }
        if twos_left > 0 {
            let w = chain.get(at, State::Two);
            if !w.is_zero() {
                go(chain, State::Two, ones_left, twos_left - 1, end, weight * w.clone(), acc);
            }
        }
    }

    let mut acc = S::zero();
    go(chain, start, q.n1, q.n2, q.end, S::one(), &mut acc);
    Ok(acc)
}

/// Probability mass of all length-`len` paths from `start`, split by class.
#[derive(Debug, Clone)]
pub struct PathMass<S> {
    /// Paths confined to `{1, 2}` with at least one of each, keyed by
    /// `(ones, twos, end)`.
    pub mixed: Vec<(OccupationQuery, S)>,
    pub all_ones: S,
    pub all_twos: S,
    pub visits_three: S,
}

impl<S: Scalar> PathMass<S> {
    pub fn total(&self) -> S {
        self.mixed
            .iter()
            .fold(S::zero(), |a, (_, p)| a + p.clone())
            + self.all_ones.clone()
            + self.all_twos.clone()
            + self.visits_three.clone()
    }
}

/// Enumerates all `3^len` paths; intended for total-probability checks.
pub fn path_mass<S: Scalar>(chain: &ThreeStateChain<S>, start: State, len: u32) -> Result<PathMass<S>> {
    if len > 12 {
        return Err(Error::SizeLimit {
            size: len as usize,
            limit: 12,
        });
    }
    let mut mixed: Vec<(OccupationQuery, S)> = Vec::new();
    let mut all_ones = S::zero();
    let mut all_twos = S::zero();
    let mut visits_three = S::zero();

    let mut stack = vec![(start, 0u32, 0u32, false, 0u32, S::one())];
    while let Some((at, ones, twos, three, depth, w)) = stack.pop() {
        if depth == len {
            if three {
                visits_three = visits_three + w;
            } else if twos == 0 {
                all_ones = all_ones + w;
            } else if ones == 0 {
                all_twos = all_twos + w;
            } else {
                let q = OccupationQuery { n1: ones, n2: twos, end: at };
                match mixed.iter_mut().find(|(k, _)| *k == q) {
                    Some((_, p)) => *p = p.clone() + w,
                    None => mixed.push((q, w)),
                }
            }
            continue;
        }
        for next in State::ALL {
            let step = w.clone() * chain.get(at, next).clone();
            let (o, t) = match next {
                State::One => (ones + 1, twos),
                State::Two => (ones, twos + 1),
                State::Three => (ones, twos),
            };
            stack.push((next, o, t, three || next == State::Three, depth + 1, step));
        }
    }
    Ok(PathMass {
        mixed,
        all_ones,
        all_twos,
        visits_three,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    type Q = BigRational;

    fn r(n: i64, d: i64) -> Q {
        Q::from_ratio(n, d)
    }

    fn q(n1: u32, n2: u32, end: State) -> OccupationQuery {
        OccupationQuery::new(n1, n2, end).unwrap()
    }

    #[test]
    fn uniform_single_visits() {
        let c = ThreeStateChain::<Q>::uniform();
        assert_eq!(occupation_probability(&c, &q(1, 1, State::Two)), r(1, 9));
        assert_eq!(occupation_brute_force(&c, &q(1, 1, State::Two), State::One).unwrap(), r(1, 9));
        // paths 1->1->2->1 and 1->2->1->1
        assert_eq!(occupation_probability(&c, &q(2, 1, State::One)), r(2, 27));
        assert_eq!(occupation_brute_force(&c, &q(2, 1, State::One), State::One).unwrap(), r(2, 27));
    }

    #[test]
    fn one_one_ending_at_one_is_d12_d21() {
        let c = ThreeStateChain::new([
            [r(1, 5), r(1, 2), r(3, 10)],
            [r(1, 7), r(4, 7), r(2, 7)],
            [r(0, 1), r(0, 1), r(1, 1)],
        ])
        .unwrap();
        assert_eq!(occupation_probability(&c, &q(1, 1, State::One)), r(1, 2) * r(1, 7));
    }

    #[test]
    fn unreachable_state_two() {
        let c = ThreeStateChain::new([
            [r(1, 2), r(0, 1), r(1, 2)],
            [r(1, 3), r(1, 3), r(1, 3)],
            [r(1, 3), r(1, 3), r(1, 3)],
        ])
        .unwrap();
        for (n1, n2) in [(1, 1), (3, 2), (2, 5)] {
            for end in [State::One, State::Two] {
                assert!(occupation_brute_force(&c, &q(n1, n2, end), State::One).unwrap().is_zero());
                assert!(occupation_probability(&c, &q(n1, n2, end)).is_zero());
            }
        }
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(OccupationQuery::new(0, 3, State::One).is_err());
        assert!(OccupationQuery::new(2, 0, State::Two).is_err());
        assert!(OccupationQuery::new(2, 2, State::Three).is_err());
    }

    #[test]
    fn invalid_chains_rejected() {
        let bad_sum = [[r(1, 2), r(1, 2), r(1, 2)], [r(1, 1), r(0, 1), r(0, 1)], [r(1, 1), r(0, 1), r(0, 1)]];
        assert!(ThreeStateChain::new(bad_sum).is_err());
        let negative = [[r(3, 2), r(-1, 2), r(0, 1)], [r(1, 1), r(0, 1), r(0, 1)], [r(1, 1), r(0, 1), r(0, 1)]];
        assert!(ThreeStateChain::new(negative).is_err());
    }

    #[test]
    fn brute_force_size_limit() {
        let c = ThreeStateChain::<Q>::uniform();
        let err = occupation_brute_force(&c, &q(11, 10, State::One), State::One).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
    }

    #[test]
    fn total_probability_over_six_steps() {
        let c = ThreeStateChain::<Q>::uniform();
        let mass = path_mass(&c, State::One, 6).unwrap();
        assert_eq!(mass.total(), Q::one());
        // every mixed class matches the closed form
        for (query, p) in &mass.mixed {
            assert_eq!(occupation_probability(&c, query), *p);
        }
        let closed: Q = (1..6)
            .flat_map(|n1| [State::One, State::Two].map(|e| q(n1, 6 - n1, e)))
            .map(|query| occupation_probability(&c, &query))
            .fold(Q::zero(), |a, b| a + b);
        assert_eq!(closed + mass.all_ones + mass.all_twos + mass.visits_three, Q::one());
    }

    #[test]
    fn log_domain_matches_exact() {
        let c = ThreeStateChain::new([
            [r(2, 7), r(3, 7), r(2, 7)],
            [r(1, 4), r(1, 2), r(1, 4)],
            [r(1, 3), r(1, 3), r(1, 3)],
        ])
        .unwrap();
        let cf = c.map(|v| v.to_f64().unwrap());
        for (n1, n2) in [(1, 1), (5, 9), (30, 30), (17, 40)] {
            for end in [State::One, State::Two] {
                let query = q(n1, n2, end);
                let exact = occupation_probability(&c, &query).to_f64().unwrap();
                let logd = occupation_log_probability(&cf, &query).exp();
                assert!((logd - exact).abs() <= 1e-10 * exact, "{n1} {n2} {end:?}");
            }
        }
    }

    #[test]
    fn large_counts_stay_finite() {
        let c = ThreeStateChain::<f64>::new([[0.45, 0.45, 0.1], [0.45, 0.45, 0.1], [0.0, 0.0, 1.0]]).unwrap();
        let p = occupation_probability_f64(&c, &q(400, 350, State::Two));
        assert!(p > 0.0 && p.is_finite());
        let lp = occupation_log_probability(&c, &q(400, 350, State::Two));
        assert!((p.ln() - lp).abs() < 1e-9);
    }

    #[test]
    fn zero_transitions_in_log_domain() {
        let c = ThreeStateChain::<f64>::new([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        // strictly alternating chain: 1,1 ending at 1 is the path 2,1
        assert!((occupation_log_probability(&c, &q(1, 1, State::One))).abs() < 1e-15);
        assert_eq!(occupation_log_probability(&c, &q(2, 1, State::One)), f64::NEG_INFINITY);
    }
}
