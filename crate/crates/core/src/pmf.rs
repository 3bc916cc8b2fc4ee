//! Probability mass functions on a contiguous 1-based integer support.

use crate::error::{Error, Result};
use crate::MASS_TOL;

/// Binary entropy in bits; `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// Shannon entropy in bits of a weight slice; zero entries contribute zero.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binomial coefficient C(n, k) as a float (exact for the sizes used here).
pub fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// A PMF over the contiguous support `{support_lo, …, support_lo + L − 1}`.
///
/// Entries may be zero but must be non-negative and sum to 1 within
/// [`MASS_TOL`]. Cumulative sums are precomputed so interval masses are O(1).
///
/// ```
/// use iqdp_core::Pmf;
/// let p = Pmf::uniform(4).unwrap();
/// assert_eq!(p.entropy_bits(), 2.0);
/// assert_eq!(p.mass(2, 3), 0.5);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    support_lo: usize,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl Pmf {
    pub fn new(support_lo: usize, probs: Vec<f64>) -> Result<Self> {
        if support_lo == 0 {
            return Err(Error::InvalidParameter(
                "support is 1-based; support_lo must be >= 1".into(),
            ));
        }
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1 within {MASS_TOL}"
            )));
        }
        let mut cum = Vec::with_capacity(probs.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(Self {
            support_lo,
            probs,
            cum,
        })
    }

    /// Uniform PMF on `{1, …, l}`.
    pub fn uniform(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("support size must be >= 1".into()));
        }
        Self::new(1, vec![1.0 / l as f64; l])
    }

    /// Truncated geometric PMF on `{1, …, l}` with mass rising toward the top:
    /// value `x + 1` carries weight `(1−p)^(l−1−x) · p`, normalized by
    /// `1 − (1−p)^l`.
    pub fn truncated_geometric(l: usize, p: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("support size must be >= 1".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric parameter must lie in (0, 1), got {p}"
            )));
        }
        let mut w = Vec::with_capacity(l);
        for x in 0..l {
            w.push((1.0 - p).powi((l - 1 - x) as i32) * p);
        }
        normalize(&mut w);
        Self::new(1, w)
    }

    /// Binomial-shaped PMF on `{1, …, l}`: value `x + 1` carries weight
    /// `C(l, x) p^x (1−p)^(l−x)` for `x = 0 … l−1`.
    ///
    /// Note the top term `x = l` of the usual binomial is not part of the
    /// support, so the weights sum to `1 − p^l` before scaling; they are
    /// renormalized here to form a proper PMF.
    pub fn binomial(l: usize, p: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("support size must be >= 1".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "binomial parameter must lie in (0, 1), got {p}"
            )));
        }
        let mut w = Vec::with_capacity(l);
        for x in 0..l {
            w.push(binomial_coefficient(l, x) * p.powi(x as i32) * (1.0 - p).powi((l - x) as i32));
        }
        normalize(&mut w);
        Self::new(1, w)
    }

    /// Number of support values.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Smallest support value.
    pub fn support_lo(&self) -> usize {
        self.support_lo
    }

    /// Largest support value.
    pub fn support_hi(&self) -> usize {
        self.support_lo + self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// P(X = v); `v` is an absolute support value.
    pub fn prob(&self, v: usize) -> f64 {
        assert!(
            v >= self.support_lo && v <= self.support_hi(),
            "value {v} outside support [{}, {}]",
            self.support_lo,
            self.support_hi()
        );
        self.probs[v - self.support_lo]
    }

    /// P(X <= v). Accepts `v = support_lo − 1` (returns 0) for convenience.
    pub fn cdf(&self, v: usize) -> f64 {
        assert!(
            v + 1 >= self.support_lo && v <= self.support_hi(),
            "value {v} outside cdf domain"
        );
        self.cum[v + 1 - self.support_lo]
    }

    /// P(lo <= X <= hi) over absolute support values.
    pub fn mass(&self, lo: usize, hi: usize) -> f64 {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        self.cdf(hi) - self.cdf(lo - 1)
    }

    /// Entropy in bits of the whole PMF.
    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Entropy in bits of the PMF conditioned on `lo <= X <= hi`.
    pub fn interval_entropy(&self, lo: usize, hi: usize) -> f64 {
        let m = self.mass(lo, hi);
        assert!(m > 0.0, "conditioning on a zero-mass interval [{lo}, {hi}]");
        let mut h = 0.0;
        for v in lo..=hi {
            let q = self.prob(v) / m;
            if q > 0.0 {
                h -= q * q.log2();
            }
        }
        h
    }

    /// Conditional PMF on `[lo, hi]`, keeping absolute support positions.
    pub fn restricted(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo < self.support_lo || hi > self.support_hi() || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval [{lo}, {hi}] not inside support [{}, {}]",
                self.support_lo,
                self.support_hi()
            )));
        }
        let m = self.mass(lo, hi);
        if m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "interval [{lo}, {hi}] has zero mass"
            )));
        }
        let probs = (lo..=hi).map(|v| self.prob(v) / m).collect();
        Self::new(lo, probs)
    }
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for x in w {
        *x /= total;
    }
}
