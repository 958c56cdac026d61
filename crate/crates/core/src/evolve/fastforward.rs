//! Discriminant powers `D(s)^t` as simulated by quantum fast-forwarding, the
//! classical trajectory probabilities they dominate, and the success
//! probability of the randomized fast-forwarding search.

use super::chebyshev::marked_mass;
use crate::chain::{MarkedSet, ReversibleChain, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::interpolate::{build_interpolated, InterpolatedChain};
use crate::linalg::{self, SymmetricOperator};

fn unmarked_sqrt_pi(chain: &ReversibleChain, marked: &MarkedSet) -> Vec<f64> {
    chain
        .sqrt_pi()
        .iter()
        .enumerate()
        .map(|(x, &v)| if marked.contains(x) { 0.0 } else { v })
        .collect()
}

/// `|| Pi_M D(s)^t sqrt(pi_U) ||^2`.
pub fn fastforward_success(chain: &ReversibleChain, marked: &MarkedSet, s: f64, t: usize) -> Result<f64> {
    Ok(fastforward_curve(chain, marked, s, t)?[t])
}

/// [`fastforward_success`] for every `t` in `0..=t_max`, by repeated products.
pub fn fastforward_curve(chain: &ReversibleChain, marked: &MarkedSet, s: f64, t_max: usize) -> Result<Vec<f64>> {
    let ic = build_interpolated(chain, marked, s)?;
    let d = ic.discriminant();
    let mut v = unmarked_sqrt_pi(chain, marked);
    let mut next = vec![0.0; v.len()];
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(marked_mass(&v, marked));
    for _ in 0..t_max {
        d.apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        out.push(marked_mass(&v, marked));
    }
    Ok(out)
}

/// Probability that `P(s)` started from `pi` is unmarked at step 0, marked at
/// step `t` and unmarked again at step `t + t_hat`:
/// `sum_{x, z in U} pi_x <x| P(s)^t Pi_M P(s)^t_hat |z>`.
pub fn trajectory_probability_exact(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    s: f64,
    t: usize,
    t_hat: usize,
) -> Result<f64> {
    Ok(trajectory_probability_table(chain, marked, s, t, t_hat)?[t][t_hat])
}

/// All values of [`trajectory_probability_exact`] for `t <= t_max`,
/// `t_hat <= t_hat_max`, indexed `[t][t_hat]`.
pub fn trajectory_probability_table(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    s: f64,
    t_max: usize,
    t_hat_max: usize,
) -> Result<Vec<Vec<f64>>> {
    if chain.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what: "exact trajectory probability",
            n: chain.n(),
            limit: DENSE_LIMIT,
        });
    }
    let ic = build_interpolated(chain, marked, s)?;
    let unmarked_sum = |v: &[f64]| linalg::sum_by(v.len(), |x| if marked.contains(x) { 0.0 } else { v[x] });
    let mut row: Vec<f64> = chain
        .pi()
        .iter()
        .enumerate()
        .map(|(x, &p)| if marked.contains(x) { 0.0 } else { p })
        .collect();
    let mut table = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            row = ic.left_apply(&row);
        }
        let mut w: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(x, &v)| if marked.contains(x) { v } else { 0.0 })
            .collect();
        let mut line = Vec::with_capacity(t_hat_max + 1);
        line.push(unmarked_sum(&w));
        for _ in 0..t_hat_max {
            w = ic.left_apply(&w);
            line.push(unmarked_sum(&w));
        }
        table.push(line);
    }
    Ok(table)
}

/// Which step counts the randomized search draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepRange {
    /// `t` uniform on `{1, ..., T}`.
    #[default]
    Algorithm,
    /// `t` uniform on `{1, ..., 24 T}`.
    Corollary,
}

impl StepRange {
    pub fn upper(self, t: usize) -> usize {
        match self {
            StepRange::Algorithm => t,
            StepRange::Corollary => 24 * t,
        }
    }
}

/// `R = {2^0, 2^1, ..., 2^ceil(log2(12 T))}`.
pub fn r_set(t: usize) -> Vec<f64> {
    let top = ((12 * t) as f64).log2().ceil() as i32;
    (0..=top).map(|k| 2f64.powi(k)).collect()
}

/// Interpolation parameters `S = {1 - 1/r : r in R}`.
pub fn s_set(t: usize) -> Vec<f64> {
    r_set(t).into_iter().map(|r| 1.0 - 1.0 / r).collect()
}

/// Mean of `|| Pi_M D(s)^t sqrt(pi_U) ||^2` over `s` in `S` and `t` in the range.
pub fn mean_fastforward_success(chain: &ReversibleChain, marked: &MarkedSet, t: usize, range: StepRange) -> Result<(f64, f64)> {
    if t < 1 {
        return Err(Error::OutOfRange {
            name: "T",
            value: t as f64,
            expected: "T >= 1",
        });
    }
    let upper = range.upper(t);
    let mut means = Vec::new();
    let mut best = 0.0_f64;
    for s in s_set(t) {
        let curve = fastforward_curve(chain, marked, s, upper)?;
        best = curve[1..].iter().copied().fold(best, f64::max);
        means.push(linalg::pairwise_sum(&curve[1..]) / upper as f64);
    }
    Ok((linalg::pairwise_sum(&means) / means.len() as f64, best))
}

/// Success probability of the randomized fast-forwarding search:
/// `p_M + mean_{s, t} || Pi_M D(s)^t sqrt(pi_U) ||^2`.
///
/// Measuring the initial state `sqrt(pi)` finds a marked vertex with
/// probability `p_M`. Otherwise the state collapses to the normalized
/// `sqrt(pi_U)`, which has weight `1 - p_M`, and fast-forwarding succeeds
/// with `|| Pi_M D(s)^t sqrt(pi_U) ||^2 / (1 - p_M)`; the two factors cancel.
pub fn algorithm2_success(chain: &ReversibleChain, marked: &MarkedSet, t: usize, range: StepRange) -> Result<f64> {
    let (mean, _) = mean_fastforward_success(chain, marked, t, range)?;
    Ok((marked.p_m() + mean).min(1.0))
}

/// Convenience wrapper tying an interpolated chain to [`trajectory_probability_exact`].
pub fn trajectory_probability_for(ic: &InterpolatedChain<'_>, t: usize, t_hat: usize) -> Result<f64> {
    trajectory_probability_exact(ic.base(), ic.marked(), ic.s(), t, t_hat)
}
