//! Seeded Monte Carlo execution of the interactive protocol. Each trial
//! draws one value per user, then replays the round loop under a policy,
//! accruing the entropy rate and round count and verifying the center's
//! answer against the brute-force extremum of the drawn values.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::{entropy_bits, Pmf};
use crate::quantizer::Quantizer;
use crate::solver::Policy;
use crate::spaces::binary_split_quantizer;
use crate::state::{State, Target};

/// Where the per-state quantizers come from during simulation.
#[derive(Debug, Clone)]
pub enum SimPolicy {
    /// Play a solver policy; every reachable non-terminal state must be covered.
    Dp(Policy),
    /// Split the surviving interval in half every round.
    BinarySearch,
    /// Isolate the top value of the surviving interval every round.
    MaxSearch,
    /// Look up the quantizer by surviving support size.
    FixedByLen(BTreeMap<usize, Quantizer>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub trials: usize,
    pub seed: u64,
    pub policy: SimPolicy,
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub mean_rate: f64,
    pub mean_delay: f64,
    pub std_err_rate: f64,
    pub std_err_delay: f64,
    /// Fraction of trials whose answer matched the brute-force extremum.
    /// The protocol is lossless, so anything below 1.0 is a defect.
    pub correctness: f64,
    pub trials: usize,
}

struct TrialStats {
    rate: f64,
    rounds: f64,
    correct: bool,
}

fn is_terminal(target: Target, n_active: usize, lo: usize, hi: usize) -> bool {
    match target {
        Target::Argmax => n_active == 1 || lo == hi,
        Target::Max | Target::Both => lo == hi,
    }
}

/// Inverse-CDF draw by linear scan; supports are small.
fn sample_value(p: &Pmf, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for v in p.support_lo()..=p.support_hi() {
        acc += p.prob(v);
        if u < acc {
            return v;
        }
    }
    p.support_hi()
}

fn action_for(policy: &SimPolicy, n_active: usize, lo: usize, hi: usize) -> Result<Quantizer> {
    let len = hi - lo + 1;
    match policy {
        SimPolicy::Dp(p) => p
            .actions
            .get(&crate::state::StateKey {
                n: n_active,
                lo,
                hi,
            })
            .cloned()
            .ok_or(Error::PolicyIncomplete {
                n: n_active,
                lo,
                hi,
            }),
        SimPolicy::BinarySearch => binary_split_quantizer(len),
        SimPolicy::MaxSearch => Quantizer::new(vec![len - 1, 1]),
        SimPolicy::FixedByLen(map) => map.get(&len).cloned().ok_or(Error::PolicyIncomplete {
            n: n_active,
            lo,
            hi,
        }),
    }
}

fn run_trial(
    root: &State,
    cond: &Pmf,
    target: Target,
    policy: &SimPolicy,
    seed: u64,
    trial: u64,
) -> Result<TrialStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);

    let n = root.n_users();
    let values: Vec<usize> = (0..n).map(|_| sample_value(cond, &mut rng)).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let (mut lo, mut hi) = (root.lo(), root.hi());
    let initial_len = hi - lo + 1;
    let mut rate = 0.0;
    let mut rounds = 0usize;

    while !is_terminal(target, active.len(), lo, hi) {
        let len = hi - lo + 1;
        let q = action_for(policy, active.len(), lo, hi)?;
        if q.k() < 2 || q.total() != len {
            return Err(Error::InvalidQuantizer(format!(
                "quantizer {q} cannot split a support of size {len}"
            )));
        }

        let denom = cond.mass(lo, hi);
        let masses: Vec<f64> = q
            .intervals(lo)
            .map(|(blo, bhi)| cond.mass(blo, bhi) / denom)
            .collect();
        rate += active.len() as f64 * entropy_bits(&masses);
        rounds += 1;

        let top_occupied = q
            .intervals(lo)
            .filter(|&(blo, bhi)| active.iter().any(|&j| (blo..=bhi).contains(&values[j])))
            .last()
            .expect("every active value lies in some bin");
        let (blo, bhi) = top_occupied;
        active.retain(|&j| (blo..=bhi).contains(&values[j]));
        debug_assert!(bhi - blo < len - 1, "the surviving interval must shrink");
        (lo, hi) = (blo, bhi);
        debug_assert!(
            rounds <= initial_len,
            "round count exceeded the support size"
        );
    }

    let brute_max = *values.iter().max().expect("at least one user");
    let answer_max_ok = lo == hi && lo == brute_max;
    let answer_set_ok = {
        let mut sorted = active.clone();
        sorted.sort_unstable();
        let brute_set: Vec<usize> = (0..n).filter(|&j| values[j] == brute_max).collect();
        sorted == brute_set
    };
    let correct = match target {
        Target::Max => answer_max_ok,
        Target::Argmax => answer_set_ok,
        Target::Both => answer_max_ok && answer_set_ok,
    };
    Ok(TrialStats {
        rate,
        rounds: rounds as f64,
        correct,
    })
}

fn mean_and_std_err(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Simulate `cfg.trials` runs of the protocol from `root`. Trials use
/// independent RNG streams keyed by (seed, trial index) and reduce in trial
/// order, so the report is identical regardless of thread count.
pub fn run(root: &State, target: Target, cfg: &SimConfig) -> Result<SimReport> {
    if cfg.trials < 1 {
        return Err(Error::InvalidParameter(
            "need at least one simulation trial".into(),
        ));
    }
    let cond = root.conditional();
    let stats: Vec<TrialStats> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(root, &cond, target, &cfg.policy, cfg.seed, t))
        .collect::<Result<_>>()?;

    let n = stats.len();
    let (mean_rate, std_err_rate) = mean_and_std_err(stats.iter().map(|s| s.rate), n);
    let (mean_delay, std_err_delay) = mean_and_std_err(stats.iter().map(|s| s.rounds), n);
    let correctness = stats.iter().filter(|s| s.correct).count() as f64 / n as f64;
    Ok(SimReport {
        mean_rate,
        mean_delay,
        std_err_rate,
        std_err_delay,
        correctness,
        trials: n,
    })
}

/// Normalized histogram of the maximum of `n` draws from `p`.
pub fn empirical_max_distribution(p: &Pmf, n: usize, trials: usize, seed: u64) -> Result<Pmf> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one user".into()));
    }
    if trials < 1 {
        return Err(Error::InvalidParameter(
            "need at least one simulation trial".into(),
        ));
    }
    let maxima: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            (0..n)
                .map(|_| sample_value(p, &mut rng))
                .max()
                .expect("at least one draw")
        })
        .collect();
    let mut counts = vec![0usize; p.len()];
    for m in maxima {
        counts[m - p.support_lo()] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Pmf::new(p.support_lo(), probs)
}
