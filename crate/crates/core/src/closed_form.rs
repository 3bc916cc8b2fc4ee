//! Analytical rate/delay baselines for uniform sources under two fixed
//! strategies: repeated halving (binary search for the argmax) and top-value
//! peeling (max search). Every closed form ships next to an independent
//! recursion; the pair act as permanent mutual cross-checks.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::{binary_entropy, binomial_coefficient, Pmf};

fn check_users_and_support(n: usize, l: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one user".into()));
    }
    if l < 1 {
        return Err(Error::InvalidParameter(
            "support size must be at least 1".into(),
        ));
    }
    Ok(())
}

fn check_power_of_two(l: usize) -> Result<()> {
    if !l.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "binary search halves the support, so its size must be a power of two, got {l}"
        )));
    }
    Ok(())
}

/// Shared level recursion behind the binary-search quantities. Each halving
/// round contributes `stage(m)` for the `m` users still active; afterwards
/// either everybody sat in the lower half (all continue) or `i >= 2` users
/// share the upper half. A lone survivor or a single value ends the search.
fn binary_search_level_table(n: usize, l: usize, stage: impl Fn(usize) -> f64) -> Result<f64> {
    check_users_and_support(n, l)?;
    check_power_of_two(l)?;
    let levels = l.trailing_zeros() as usize;
    let mut x = vec![vec![0.0f64; levels + 1]; n + 1];
    for s in 1..=levels {
        for m in 2..=n {
            let survivors: f64 = (2..=m)
                .map(|i| binomial_coefficient(m, i) * x[i][s - 1])
                .sum();
            x[m][s] = stage(m) + (x[m][s - 1] + survivors) / 2f64.powi(m as i32);
        }
    }
    Ok(x[n][levels])
}

/// Expected bits of binary search, in closed form: `2N(1 - 1/L)`, and zero
/// in the degenerate one-user or one-value cases.
pub fn binary_search_rate_closed(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    check_power_of_two(l)?;
    if n == 1 || l == 1 {
        return Ok(0.0);
    }
    Ok(2.0 * n as f64 * (1.0 - 1.0 / l as f64))
}

/// Expected bits of binary search via the halving recursion.
pub fn binary_search_rate_recursive(n: usize, l: usize) -> Result<f64> {
    binary_search_level_table(n, l, |m| m as f64)
}

/// Expected rounds of binary search via the halving recursion.
pub fn binary_search_delay_recursive(n: usize, l: usize) -> Result<f64> {
    binary_search_level_table(n, l, |_| 1.0)
}

/// Upper bound on the expected rounds of binary search:
/// `min(log2 N + 1, log2 L)`.
pub fn binary_search_delay_bound(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    check_power_of_two(l)?;
    Ok(((n as f64).log2() + 1.0).min((l as f64).log2()))
}

/// Expected bits of max search, in closed form:
/// `N * sum_{i=2}^{L} (i/L)^N h(1/i)`.
pub fn max_search_rate_closed(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    let (nf, lf) = (n as f64, l as f64);
    let sum: f64 = (2..=l)
        .map(|i| (i as f64 / lf).powi(n as i32) * binary_entropy(1.0 / i as f64))
        .sum();
    Ok(nf * sum)
}

/// Expected bits of max search via the peeling recursion
/// `R(N, L) = N h(1/L) + (1 - 1/L)^N R(N, L-1)` with `R(N, 1) = 0`.
pub fn max_search_rate_recursive(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    let nf = n as f64;
    let mut rate = 0.0;
    for ell in 2..=l {
        let p = 1.0 / ell as f64;
        rate = nf * binary_entropy(p) + (1.0 - p).powi(n as i32) * rate;
    }
    Ok(rate)
}

/// Expected rounds of max search, in closed form: `sum_{i=2}^{L} (i/L)^N`.
pub fn max_search_delay_closed(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    let lf = l as f64;
    Ok((2..=l).map(|i| (i as f64 / lf).powi(n as i32)).sum())
}

/// Expected rounds of max search via the peeling recursion
/// `t(N, L) = 1 + (1 - 1/L)^N t(N, L-1)` with `t(N, 1) = 0`.
pub fn max_search_delay_recursive(n: usize, l: usize) -> Result<f64> {
    check_users_and_support(n, l)?;
    let mut delay = 0.0;
    for ell in 2..=l {
        delay = 1.0 + (1.0 - 1.0 / ell as f64).powi(n as i32) * delay;
    }
    Ok(delay)
}

/// Probability that exactly one of `n` i.i.d. draws from `p` attains the
/// maximum: `sum_k n F(k-1)^{n-1} p(k)`.
pub fn prob_unique_argmax(p: &Pmf, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one user".into()));
    }
    let nf = n as f64;
    let mut total = 0.0;
    for v in p.support_lo()..=p.support_hi() {
        total += nf * p.cdf(v - 1).powi(n as i32 - 1) * p.prob(v);
    }
    Ok(total)
}

/// Optimal scalarized cost when a single user must reveal its value:
/// `(1 - lambda) H(p) + lambda`.
pub fn single_user_cost(p: &Pmf, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok((1.0 - lambda) * p.entropy_bits() + lambda)
}

/// Which analytical baseline produced a [`HeuristicEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicMethod {
    BinarySearchClosedForm,
    BinarySearchRecursion,
    MaxSearchClosedForm,
    MaxSearchRecursion,
}

impl fmt::Display for HeuristicMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            HeuristicMethod::BinarySearchClosedForm => "binary_search_closed_form",
            HeuristicMethod::BinarySearchRecursion => "binary_search_recursion",
            HeuristicMethod::MaxSearchClosedForm => "max_search_closed_form",
            HeuristicMethod::MaxSearchRecursion => "max_search_recursion",
        };
        f.write_str(name)
    }
}

/// Rate/delay pair of one analytical baseline. The closed-form binary-search
/// entry carries the delay upper bound, the recursion entry the exact
/// expectation; both max-search entries are exact.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeuristicEval {
    pub rate: f64,
    pub delay: f64,
    pub method: HeuristicMethod,
}

/// Evaluate one baseline at `n` users over a uniform support of size `l`.
pub fn evaluate_heuristic(method: HeuristicMethod, n: usize, l: usize) -> Result<HeuristicEval> {
    let (rate, delay) = match method {
        HeuristicMethod::BinarySearchClosedForm => (
            binary_search_rate_closed(n, l)?,
            binary_search_delay_bound(n, l)?,
        ),
        HeuristicMethod::BinarySearchRecursion => (
            binary_search_rate_recursive(n, l)?,
            binary_search_delay_recursive(n, l)?,
        ),
        HeuristicMethod::MaxSearchClosedForm => (
            max_search_rate_closed(n, l)?,
            max_search_delay_closed(n, l)?,
        ),
        HeuristicMethod::MaxSearchRecursion => (
            max_search_rate_recursive(n, l)?,
            max_search_delay_recursive(n, l)?,
        ),
    };
    Ok(HeuristicEval {
        rate,
        delay,
        method,
    })
}
