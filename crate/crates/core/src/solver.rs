//! Memoized Bellman solver for the scalarized rate/delay objective, λ sweeps,
//! forced-action comparisons, and gap-to-optimality metrics.
//!
//! A solve walks the reachable states of one root. States are keyed by
//! (active users, surviving interval); the memo is a flat table over that
//! key space, fresh per λ because λ enters every stage cost. Candidate
//! actions per support size are enumerated once up front and shared across
//! the solves of a sweep.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::quantizer::Quantizer;
use crate::spaces::SearchSpace;
use crate::state::{stage_cost, transitions, State, StateKey, Target};

/// Candidates whose costs agree within this band count as tied and are
/// settled structurally. Wide enough to absorb float noise between
/// mathematically equal action chains, far below any genuine cost gap.
pub const ACTION_TIE_TOL: f64 = 1e-10;

/// Everything a solve needs besides the root state.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Trade-off weight: 0 = pure rate, 1 = pure delay.
    pub lambda: f64,
    pub target: Target,
    pub space: SearchSpace,
    /// Charge the center's per-round feedback broadcast to the rate, with
    /// all terminal successors condensed into a single "done" symbol.
    pub include_ceo_feedback: bool,
}

/// Expected (rate, delay) of a policy and their λ-scalarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostPoint {
    pub rate: f64,
    pub delay: f64,
    pub cost: f64,
}

/// A deterministic choice of quantizer for every covered non-terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub target: Target,
    pub actions: BTreeMap<StateKey, Quantizer>,
}

/// Result of one solve.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Optimal scalarized cost of the root.
    pub cost: f64,
    /// Expected total bits under the recorded policy.
    pub expected_rate: f64,
    /// Expected number of rounds under the recorded policy.
    pub expected_delay: f64,
    /// Chosen quantizer for every reachable non-terminal state.
    pub policy: Policy,
    /// Distinct states visited by the solve, terminal states included.
    pub states_evaluated: usize,
}

/// One solved point of a λ sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub rate: f64,
    pub delay: f64,
    pub cost: f64,
}

/// Per-λ cost gap of a restricted search space against partitions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapPoint {
    pub lambda: f64,
    pub full_cost: f64,
    pub subset_cost: f64,
    pub delta_abs: f64,
    pub delta_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub points: Vec<GapPoint>,
    /// Worst (largest) absolute gap over the λ grid.
    pub delta_max: f64,
    /// Best (smallest) absolute gap over the λ grid.
    pub delta_min: f64,
}

/// λ grid `lo, lo+step, …` up to `hi`; the last point is snapped onto `hi`
/// when the step divides the range.
pub fn lambda_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "lambda range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
        )));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda step must be positive, got {step}"
        )));
    }
    let steps = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - hi).abs() <= step * 1e-6 {
            *last = hi;
        }
    }
    Ok(grid)
}

/// The standard sweep grid: 201 points, 0 to 1 in steps of 0.005.
pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(0.0, 1.0, 0.005).expect("constant grid parameters are valid")
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Candidate actions per support size, enumerated once and shared by all
/// solves over the same root (λ does not enter enumeration).
struct ActionTable {
    by_len: Vec<Arc<Vec<Quantizer>>>,
    /// Index of the all-ones quantizer per support size, when the space has it.
    finest_by_len: Vec<Option<u32>>,
}

impl ActionTable {
    fn build(space: &SearchSpace, max_len: usize) -> Result<Self> {
        let mut by_len = Vec::with_capacity(max_len + 1);
        let mut finest_by_len = Vec::with_capacity(max_len + 1);
        by_len.push(Arc::new(Vec::new()));
        finest_by_len.push(None);
        for l in 1..=max_len {
            let cands = space.candidates(l)?;
            let finest = cands.iter().position(|q| q.k() == l).map(|i| i as u32);
            by_len.push(Arc::new(cands));
            finest_by_len.push(finest);
        }
        Ok(Self {
            by_len,
            finest_by_len,
        })
    }
}

/// Structural preference among cost-tied candidates: the finest quantizer
/// wins (a lone user then always resolves in one round), then the
/// lexicographically largest tuple, i.e. the biggest leading bin.
fn prefer(a: &Quantizer, b: &Quantizer) -> bool {
    a.k() > b.k() || (a.k() == b.k() && a.bins() > b.bins())
}

const NO_ACTION: u32 = u32::MAX;

struct Dp<'a> {
    pmf: &'a Pmf,
    base: usize,
    span: usize,
    lambda: f64,
    target: Target,
    feedback: bool,
    /// The conditional PMF is flat over the whole root window, so states
    /// with equal user count and support size are isomorphic and share one
    /// memo entry anchored at the window's low end.
    uniform: bool,
    actions: &'a ActionTable,
    /// Pascal's triangle rows 0..=root_n, so ρ(k, i) costs two multiplies.
    binom: Vec<Vec<f64>>,
    cost: Vec<f64>,
    chosen: Vec<u32>,
    evaluated: usize,
}

impl<'a> Dp<'a> {
    fn new(
        root: &'a State,
        lambda: f64,
        target: Target,
        feedback: bool,
        actions: &'a ActionTable,
    ) -> Self {
        let span = root.support_len();
        let n = root.n_users();
        let cells = n * span * span;
        let mut binom = Vec::with_capacity(n + 1);
        binom.push(vec![1.0]);
        for m in 1..=n {
            let prev: &Vec<f64> = &binom[m - 1];
            let mut row = vec![1.0; m + 1];
            for i in 1..m {
                row[i] = prev[i - 1] + prev[i];
            }
            binom.push(row);
        }
        let offset = root.lo() - root.pmf().support_lo();
        let window = &root.pmf().probs()[offset..offset + span];
        let uniform = window.windows(2).all(|w| w[0] == w[1]);
        Dp {
            pmf: root.pmf(),
            base: root.lo(),
            span,
            lambda,
            target,
            feedback,
            uniform,
            actions,
            binom,
            cost: vec![f64::NAN; cells],
            chosen: vec![NO_ACTION; cells],
            evaluated: 0,
        }
    }

    fn index(&self, n: usize, lo: usize, hi: usize) -> usize {
        (n - 1) * self.span * self.span + (lo - self.base) * self.span + (hi - self.base)
    }

    /// Representative interval whose memo entry this state shares.
    fn canon(&self, lo: usize, hi: usize) -> (usize, usize) {
        if self.uniform {
            (self.base, self.base + (hi - lo))
        } else {
            (lo, hi)
        }
    }

    fn is_terminal(&self, n: usize, len: usize) -> bool {
        match self.target {
            Target::Argmax => n == 1 || len == 1,
            Target::Max | Target::Both => len == 1,
        }
    }

    fn cost_of(&mut self, n: usize, lo: usize, hi: usize) -> Result<f64> {
        let (lo, hi) = self.canon(lo, hi);
        let id = self.index(n, lo, hi);
        let cached = self.cost[id];
        if !cached.is_nan() {
            return Ok(cached);
        }
        self.evaluated += 1;
        let len = hi - lo + 1;
        if self.is_terminal(n, len) {
            self.cost[id] = 0.0;
            return Ok(0.0);
        }

        // A lone non-terminal user must reveal its exact value eventually.
        // The total rate is then H of the conditional whatever the quantizer
        // sequence (entropy chain rule), feedback rounds broadcast nothing
        // extra when every successor is terminal, and the delay is minimized
        // by resolving in a single round. The all-ones quantizer is therefore
        // optimal for every λ, and it is what the tie rule would pick anyway.
        if n == 1 {
            if let Some(fi) = self.actions.finest_by_len[len] {
                let value = (1.0 - self.lambda) * self.pmf.interval_entropy(lo, hi) + self.lambda;
                self.cost[id] = value;
                self.chosen[id] = fi;
                return Ok(value);
            }
        }

        let cands = Arc::clone(&self.actions.by_len[len]);
        let state_mass = self.pmf.mass(lo, hi);
        let mut below_pows = vec![0.0f64; n + 1];
        let mut costs = vec![f64::INFINITY; cands.len()];

        for (ci, q) in cands.iter().enumerate() {
            if q.k() < 2 {
                continue;
            }
            let mut below = 0.0f64;
            let mut entropy = 0.0f64;
            let mut cont = 0.0f64;
            let mut fb_entropy = 0.0f64;
            let mut fb_terminal_mass = 0.0f64;
            let mut pos = lo;
            for &b in q.bins() {
                let bin_hi = pos + b - 1;
                let m = self.pmf.mass(pos, bin_hi) / state_mass;
                if m > 0.0 {
                    entropy -= m * m.log2();
                    below_pows[0] = 1.0;
                    for j in 1..=n {
                        below_pows[j] = below_pows[j - 1] * below;
                    }
                    let mut m_pow = 1.0f64;
                    for i in 1..=n {
                        m_pow *= m;
                        let prob = self.binom[n][i] * m_pow * below_pows[n - i];
                        if prob > 0.0 {
                            let terminal = self.is_terminal(i, b);
                            if !terminal {
                                cont += prob * self.cost_of(i, pos, bin_hi)?;
                            }
                            if self.feedback {
                                if terminal {
                                    fb_terminal_mass += prob;
                                } else {
                                    fb_entropy -= prob * prob.log2();
                                }
                            }
                        }
                    }
                }
                below += m;
                pos += b;
            }
            let mut stage_rate = n as f64 * entropy;
            if self.feedback {
                if fb_terminal_mass > 0.0 {
                    fb_entropy -= fb_terminal_mass * fb_terminal_mass.log2();
                }
                stage_rate += fb_entropy;
            }
            costs[ci] = (1.0 - self.lambda) * stage_rate + self.lambda + cont;
        }

        let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        if best.is_infinite() {
            return Err(Error::EmptyActionSet { support: len });
        }
        let mut winner: Option<usize> = None;
        for (ci, &c) in costs.iter().enumerate() {
            if c <= best + ACTION_TIE_TOL {
                let better = match winner {
                    None => true,
                    Some(w) => prefer(&cands[ci], &cands[w]),
                };
                if better {
                    winner = Some(ci);
                }
            }
        }
        let w = winner.expect("the argmin candidate lies inside its own band");
        self.cost[id] = costs[w];
        self.chosen[id] = w as u32;
        Ok(costs[w])
    }

    fn extract_policy(&self) -> Policy {
        let mut actions = BTreeMap::new();
        for n in 1..=(self.cost.len() / (self.span * self.span)) {
            for lo_off in 0..self.span {
                for hi_off in lo_off..self.span {
                    let lo = self.base + lo_off;
                    let hi = self.base + hi_off;
                    let (clo, chi) = self.canon(lo, hi);
                    let ci = self.chosen[self.index(n, clo, chi)];
                    if ci != NO_ACTION {
                        let len = hi - lo + 1;
                        let q = self.actions.by_len[len][ci as usize].clone();
                        actions.insert(StateKey { n, lo, hi }, q);
                    }
                }
            }
        }
        Policy {
            target: self.target,
            actions,
        }
    }
}

fn run_solve(
    root: &State,
    lambda: f64,
    target: Target,
    feedback: bool,
    table: &ActionTable,
) -> Result<Solution> {
    let mut dp = Dp::new(root, lambda, target, feedback, table);
    let cost = dp.cost_of(root.n_users(), root.lo(), root.hi())?;
    let policy = dp.extract_policy();
    let point = evaluate_policy(root, &policy, lambda, feedback)?;
    debug_assert!(
        (point.cost - cost).abs() <= 1e-9,
        "policy evaluation ({}) drifted from the Bellman value ({cost})",
        point.cost
    );
    Ok(Solution {
        cost,
        expected_rate: point.rate,
        expected_delay: point.delay,
        policy,
        states_evaluated: dp.evaluated,
    })
}

/// Minimize the scalarized cost of `root` over `cfg.space`.
pub fn solve(root: &State, cfg: &SolveConfig) -> Result<Solution> {
    check_lambda(cfg.lambda)?;
    let table = ActionTable::build(&cfg.space, root.support_len())?;
    run_solve(
        root,
        cfg.lambda,
        cfg.target,
        cfg.include_ceo_feedback,
        &table,
    )
}

/// [`solve`] with the center's feedback broadcast charged to the rate,
/// regardless of `cfg.include_ceo_feedback`.
pub fn solve_with_feedback(root: &State, cfg: &SolveConfig) -> Result<Solution> {
    check_lambda(cfg.lambda)?;
    let table = ActionTable::build(&cfg.space, root.support_len())?;
    run_solve(root, cfg.lambda, cfg.target, true, &table)
}

/// Expected rate/delay of following a fixed policy from `root`, and the
/// λ-scalarized cost of that pair.
pub fn evaluate_policy(
    root: &State,
    policy: &Policy,
    lambda: f64,
    include_ceo_feedback: bool,
) -> Result<CostPoint> {
    check_lambda(lambda)?;
    let mut memo = HashMap::new();
    let (rate, delay) = policy_components(root, policy, include_ceo_feedback, &mut memo)?;
    Ok(CostPoint {
        rate,
        delay,
        cost: (1.0 - lambda) * rate + lambda * delay,
    })
}

fn policy_components(
    state: &State,
    policy: &Policy,
    feedback: bool,
    memo: &mut HashMap<StateKey, (f64, f64)>,
) -> Result<(f64, f64)> {
    if state.is_terminal(policy.target) {
        return Ok((0.0, 0.0));
    }
    let key = state.key();
    if let Some(&cached) = memo.get(&key) {
        return Ok(cached);
    }
    let q = policy.actions.get(&key).ok_or(Error::PolicyIncomplete {
        n: key.n,
        lo: key.lo,
        hi: key.hi,
    })?;
    if q.k() < 2 {
        return Err(Error::InvalidQuantizer(format!(
            "single-bin quantizer at non-terminal state (n={}, lo={}, hi={})",
            key.n, key.lo, key.hi
        )));
    }
    let (mut rate, mut delay) = stage_cost(state, q, policy.target)?;
    let outcomes = transitions(state, q)?;
    if feedback {
        let mut fb = 0.0;
        let mut terminal_mass = 0.0;
        for o in &outcomes {
            if o.next.is_terminal(policy.target) {
                terminal_mass += o.prob;
            } else {
                fb -= o.prob * o.prob.log2();
            }
        }
        if terminal_mass > 0.0 {
            fb -= terminal_mass * terminal_mass.log2();
        }
        rate += fb;
    }
    for o in &outcomes {
        if !o.next.is_terminal(policy.target) {
            let (r, d) = policy_components(&o.next, policy, feedback, memo)?;
            rate += o.prob * r;
            delay += o.prob * d;
        }
    }
    memo.insert(key, (rate, delay));
    Ok((rate, delay))
}

/// Solve the same root for every λ in `lambdas` (in parallel, fresh memo per
/// λ) and summarize each solution.
pub fn sweep_lambda(
    root: &State,
    target: Target,
    space: &SearchSpace,
    include_ceo_feedback: bool,
    lambdas: &[f64],
) -> Result<Vec<SweepPoint>> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let table = ActionTable::build(space, root.support_len())?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let sol = run_solve(root, lambda, target, include_ceo_feedback, &table)?;
            Ok(SweepPoint {
                lambda,
                rate: sol.expected_rate,
                delay: sol.expected_delay,
                cost: sol.cost,
            })
        })
        .collect()
}

/// Per-λ optimality gap of `subset` against the full partition space:
/// `Δ(λ) = min-cost over subset − min-cost over partitions`.
pub fn gap_metrics(
    root: &State,
    target: Target,
    subset: &SearchSpace,
    lambdas: &[f64],
) -> Result<GapReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let len = root.support_len();
    let full_table = ActionTable::build(&SearchSpace::Partitions, len)?;
    let subset_table = ActionTable::build(subset, len)?;
    let points: Vec<GapPoint> = lambdas
        .par_iter()
        .map(|&lambda| {
            let full = run_solve(root, lambda, target, false, &full_table)?.cost;
            let sub = run_solve(root, lambda, target, false, &subset_table)?.cost;
            let delta_abs = sub - full;
            // A zero-cost optimum only happens when the gap is zero too.
            let delta_rel = if full > 1e-12 { delta_abs / full } else { 0.0 };
            Ok(GapPoint {
                lambda,
                full_cost: full,
                subset_cost: sub,
                delta_abs,
                delta_rel,
            })
        })
        .collect::<Result<_>>()?;
    let delta_max = points
        .iter()
        .map(|p| p.delta_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    let delta_min = points
        .iter()
        .map(|p| p.delta_abs)
        .fold(f64::INFINITY, f64::min);
    Ok(GapReport {
        points,
        delta_max,
        delta_min,
    })
}

/// Cost of playing `q1` (respectively `q2`) at the root and following the
/// partition-space optimal policy afterwards.
pub fn compare_quantizer_costs(
    root: &State,
    q1: &Quantizer,
    q2: &Quantizer,
    lambda: f64,
    target: Target,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    let table = ActionTable::build(&SearchSpace::Partitions, root.support_len())?;
    let mut dp = Dp::new(root, lambda, target, false, &table);
    let c1 = forced_action_cost(&mut dp, root, q1, lambda, target)?;
    let c2 = forced_action_cost(&mut dp, root, q2, lambda, target)?;
    Ok((c1, c2))
}

fn forced_action_cost(
    dp: &mut Dp,
    root: &State,
    q: &Quantizer,
    lambda: f64,
    target: Target,
) -> Result<f64> {
    if root.is_terminal(target) {
        return Ok(0.0);
    }
    if q.k() < 2 {
        return Err(Error::InvalidQuantizer(
            "a single-bin quantizer cannot make progress at a non-terminal root".into(),
        ));
    }
    let (rate, delay) = stage_cost(root, q, target)?;
    let mut cost = (1.0 - lambda) * rate + lambda * delay;
    for o in transitions(root, q)? {
        if !o.next.is_terminal(target) {
            cost += o.prob * dp.cost_of(o.next.n_users(), o.next.lo(), o.next.hi())?;
        }
    }
    Ok(cost)
}

/// Paired optimal costs `(λ, argmax cost, max cost)` over the partition
/// space; learning the max can only cost more than locating it.
pub fn argmax_max_gap(root: &State, lambdas: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let table = ActionTable::build(&SearchSpace::Partitions, root.support_len())?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let ca = run_solve(root, lambda, Target::Argmax, false, &table)?.cost;
            let cm = run_solve(root, lambda, Target::Max, false, &table)?.cost;
            Ok((lambda, ca, cm))
        })
        .collect()
}
