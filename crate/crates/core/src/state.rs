//! Protocol state (active users, surviving support interval) and one-round
//! dynamics: who survives, what it costs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{binomial_coefficient, entropy_bits, Pmf};
use crate::quantizer::Quantizer;

/// What the center wants to learn about the users' values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Which user(s) hold the maximum.
    Argmax,
    /// The maximum value itself.
    Max,
    /// Both the maximum and who holds it.
    Both,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Argmax => "argmax",
            Target::Max => "max",
            Target::Both => "both",
        })
    }
}

/// The identifying coordinates of a [`State`]: active user count and the
/// absolute support interval still in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    pub n: usize,
    pub lo: usize,
    pub hi: usize,
}

/// A protocol state: `n_users` active users whose values are i.i.d. with the
/// source PMF conditioned on the interval `[lo, hi]`.
///
/// States reached from a common root share the root's PMF; conditioning is
/// tracked only through the interval bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    n_users: usize,
    lo: usize,
    hi: usize,
    pmf: Arc<Pmf>,
}

impl State {
    pub fn new(n_users: usize, lo: usize, hi: usize, pmf: Arc<Pmf>) -> Result<Self> {
        if n_users == 0 {
            return Err(Error::InvalidParameter("need at least one user".into()));
        }
        if lo < pmf.support_lo() || hi > pmf.support_hi() || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval [{lo}, {hi}] not inside support [{}, {}]",
                pmf.support_lo(),
                pmf.support_hi()
            )));
        }
        if pmf.mass(lo, hi) <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "interval [{lo}, {hi}] has zero mass"
            )));
        }
        Ok(Self {
            n_users,
            lo,
            hi,
            pmf,
        })
    }

    /// Fresh root state over the full support of `pmf`.
    pub fn root(n_users: usize, pmf: Pmf) -> Result<Self> {
        let lo = pmf.support_lo();
        let hi = pmf.support_hi();
        Self::new(n_users, lo, hi, Arc::new(pmf))
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Size of the surviving support interval.
    pub fn support_len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn pmf(&self) -> &Arc<Pmf> {
        &self.pmf
    }

    pub fn key(&self) -> StateKey {
        StateKey {
            n: self.n_users,
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// The conditional PMF the active users' values follow in this state.
    pub fn conditional(&self) -> Pmf {
        self.pmf
            .restricted(self.lo, self.hi)
            .expect("state invariant guarantees positive interval mass")
    }

    /// Conditional probability of each bin of `q` laid over this state's
    /// interval.
    pub fn bin_masses(&self, q: &Quantizer) -> Result<Vec<f64>> {
        if q.total() != self.support_len() {
            return Err(Error::InvalidQuantizer(format!(
                "quantizer covers {} values but the state interval has {}",
                q.total(),
                self.support_len()
            )));
        }
        let m = self.pmf.mass(self.lo, self.hi);
        Ok(q.intervals(self.lo)
            .map(|(a, b)| self.pmf.mass(a, b) / m)
            .collect())
    }

    /// Whether the target function is already determined and the protocol
    /// stops. Argmax is also determined once a single user remains; max and
    /// both require the support to shrink to one value.
    pub fn is_terminal(&self, target: Target) -> bool {
        match target {
            Target::Argmax => self.n_users == 1 || self.lo == self.hi,
            Target::Max | Target::Both => self.lo == self.hi,
        }
    }
}

/// One possible outcome of a round: with probability `prob`, the users in the
/// highest occupied bin survive into `next`.
#[derive(Debug, Clone)]
pub struct TransitionOutcome {
    pub prob: f64,
    pub next: State,
}

/// All next states of playing `q` in `s`, with their probabilities.
///
/// Exactly `i` of the `n` users land in bin `k` as the highest occupied bin
/// with probability `C(n,i) · p_Q(k)^i · (p_Q(1)+…+p_Q(k−1))^(n−i)`; the
/// survivors continue on bin `k`'s interval. Zero-probability outcomes are
/// omitted, so empty bins never produce states.
pub fn transitions(s: &State, q: &Quantizer) -> Result<Vec<TransitionOutcome>> {
    let masses = s.bin_masses(q)?;
    let n = s.n_users;
    let mut out = Vec::new();
    let mut below = 0.0f64;
    for ((lo_k, hi_k), &m) in q.intervals(s.lo).zip(&masses) {
        if m > 0.0 {
            for i in 1..=n {
                let prob =
                    binomial_coefficient(n, i) * m.powi(i as i32) * below.powi((n - i) as i32);
                if prob > 0.0 {
                    out.push(TransitionOutcome {
                        prob,
                        next: State {
                            n_users: i,
                            lo: lo_k,
                            hi: hi_k,
                            pmf: Arc::clone(&s.pmf),
                        },
                    });
                }
            }
        }
        below += m;
    }
    Ok(out)
}

/// One-round cost components `(rate bits, delay rounds)`: a terminal state
/// costs nothing; otherwise the round takes one unit of delay and `n · H(p_Q)`
/// bits of rate.
pub fn stage_cost(s: &State, q: &Quantizer, target: Target) -> Result<(f64, f64)> {
    if s.is_terminal(target) {
        return Ok((0.0, 0.0));
    }
    let masses = s.bin_masses(q)?;
    Ok((s.n_users as f64 * entropy_bits(&masses), 1.0))
}
