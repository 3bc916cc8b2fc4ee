//! Order-preserving scalar quantizers: tuples of positive bin sizes.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// A quantizer of a contiguous support of size `L`: an ordered tuple of
/// positive bin sizes `(n_1, …, n_K)` with `n_1 + … + n_K = L`. Bin 1 covers
/// the lowest values, bin K the highest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Quantizer {
    bins: Vec<usize>,
}

impl<'de> Deserialize<'de> for Quantizer {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let bins = Vec::<usize>::deserialize(deserializer)?;
        Quantizer::new(bins).map_err(serde::de::Error::custom)
    }
}

impl Quantizer {
    pub fn new(bins: Vec<usize>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidQuantizer("no bins".into()));
        }
        if bins.contains(&0) {
            return Err(Error::InvalidQuantizer("bin sizes must be positive".into()));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Number of bins K.
    pub fn k(&self) -> usize {
        self.bins.len()
    }

    /// Total support size covered, `n_1 + … + n_K`.
    pub fn total(&self) -> usize {
        self.bins.iter().sum()
    }

    /// Absolute value intervals `[lo_k, hi_k]` of each bin when the quantizer
    /// is laid over a support starting at `lo`.
    pub fn intervals(&self, lo: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bins.iter().scan(lo, |pos, &b| {
            let span = (*pos, *pos + b - 1);
            *pos += b;
            Some(span)
        })
    }
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.bins.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// PMF induced on bin indices `{1, …, K}`: bin `k` carries the total source
/// mass of the values it covers.
///
/// ```
/// use iqdp_core::{induced_pmf, Pmf, Quantizer};
/// let p = Pmf::uniform(4).unwrap();
/// let q = Quantizer::new(vec![2, 1, 1]).unwrap();
/// assert_eq!(induced_pmf(&q, &p).unwrap().probs(), &[0.5, 0.25, 0.25]);
/// ```
pub fn induced_pmf(q: &Quantizer, p: &Pmf) -> Result<Pmf> {
    if q.total() != p.len() {
        return Err(Error::InvalidQuantizer(format!(
            "quantizer covers {} values but the support has {}",
            q.total(),
            p.len()
        )));
    }
    let masses = q
        .intervals(p.support_lo())
        .map(|(lo, hi)| p.mass(lo, hi))
        .collect();
    Pmf::new(1, masses)
}
