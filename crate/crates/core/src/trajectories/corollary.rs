//! Trajectory estimates for the randomized fast-forwarding search and the
//! exact check of its success functional.

use rand::Rng;
use rayon::prelude::*;

use super::simulate::{simulate_with, stay_law, stay_length, StartLaw};
use crate::chain::{MarkedSet, ReversibleChain, StochasticMatrix, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::evolve::{mean_fastforward_success, s_set, StepRange};
use crate::rng;
use crate::spectra::hitting_time_exact;

/// Monte Carlo estimate of the conditioned trajectory probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Corollary2Estimate {
    pub t: usize,
    pub estimate: f64,
    /// Half-width of the 95% normal interval around `estimate`.
    pub ci_half_width: f64,
    /// Empirical frequency of the conditioning event.
    pub pr_event: f64,
    pub pr_event_std_err: f64,
    /// Base paths on which the event occurred.
    pub events: u64,
    pub samples: u64,
    pub seed: u64,
}

fn marked_mask(n: usize, marked: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &x in marked {
        *mask
            .get_mut(x)
            .ok_or_else(|| Error::InvalidMarkedSet(format!("vertex {x} outside [0, {n})")))? = true;
    }
    if marked.is_empty() {
        return Err(Error::InvalidMarkedSet("marked set is empty".into()));
    }
    Ok(mask)
}

/// The conditioning event on a base path `Y_0, ..., Y_{3T}`: `Y_0` unmarked,
/// some `Y_i` marked for `1 <= i <= T`, and at most `T` of `Y_{T+1}, ..., Y_{3T}` marked.
pub fn event_holds(path: &[usize], mask: &[bool], t: usize) -> bool {
    path.len() > 3 * t
        && !mask[path[0]]
        && path[1..=t].iter().any(|&x| mask[x])
        && path[t + 1..=3 * t].iter().filter(|&&x| mask[x]).count() <= t
}

/// Fraction of marked steps in `1..=3T` times the fraction of unmarked steps
/// in `3T+1..=24T` along the interpolated path obtained by stretching each
/// marked visit of `path` to a geometric stay.
fn coupled_product<R: Rng>(path: &[usize], mask: &[bool], t: usize, s: f64, rng: &mut R) -> Result<f64> {
    let geo = stay_law(s)?;
    let (first_end, horizon) = (3 * t as u64, 24 * t as u64);
    let (mut marked_early, mut unmarked_late) = (0u64, 0u64);
    let mut pos = 0u64;
    for &x in path {
        if pos > horizon {
            break;
        }
        let len = if mask[x] { stay_length(&geo, rng) } else { 1 };
        let (lo, hi) = (pos, pos + len);
        if mask[x] {
            marked_early += overlap(lo, hi, 1, first_end + 1);
        } else {
            unmarked_late += overlap(lo, hi, first_end + 1, horizon + 1);
        }
        pos = hi;
    }
    Ok(marked_early as f64 / first_end as f64 * (unmarked_late as f64 / (21 * t) as f64))
}

/// Size of `[lo, hi) ∩ [a, b)`.
fn overlap(lo: u64, hi: u64, a: u64, b: u64) -> u64 {
    hi.min(b).saturating_sub(lo.max(a))
}

/// Estimates the mean over `s` in `S`, `t` in `1..=3T` and `t'` in
/// `3T+1..=24T` of `P(Y_0(s) in U, Y_t(s) in M, Y_t'(s) in U | E)` by
/// sampling base paths of `matrix` and coupling each to every `P(s)`.
///
/// `matrix` need not be reversible.
pub fn corollary2_estimate(
    matrix: &StochasticMatrix,
    marked: &[usize],
    start: &[f64],
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<Corollary2Estimate> {
    if samples == 0 || t == 0 {
        return Err(Error::OutOfRange {
            name: "samples and T",
            value: samples.min(t as u64) as f64,
            expected: ">= 1",
        });
    }
    let mask = marked_mask(matrix.n(), marked)?;
    if start.len() != matrix.n() {
        return Err(Error::InvalidDistribution(format!(
            "start law has {} entries, chain has {} vertices",
            start.len(),
            matrix.n()
        )));
    }
    let law = StartLaw::new(start)?;
    let ss = s_set(t);
    let parts: Vec<(u64, f64, f64)> = rng::blocks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(blk, _, len)| {
            let mut rng = rng::stream_rng(seed, blk);
            let (mut events, mut sum, mut sum_sq) = (0u64, 0.0, 0.0);
            for _ in 0..len {
                let path = simulate_with(matrix, &law, 24 * t, &mut rng);
                if !event_holds(&path, &mask, t) {
                    continue;
                }
                events += 1;
                let mut v = 0.0;
                for &s in &ss {
                    v += coupled_product(&path, &mask, t, s, &mut rng)?;
                }
                v /= ss.len() as f64;
                sum += v;
                sum_sq += v * v;
            }
            Ok((events, sum, sum_sq))
        })
        .collect::<Result<_>>()?;
    let (events, sum, sum_sq) = parts
        .into_iter()
        .fold((0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if events == 0 {
        return Err(Error::EventNeverObserved { samples });
    }
    let e = events as f64;
    let mean = sum / e;
    let var = if events > 1 { ((sum_sq - e * mean * mean) / (e - 1.0)).max(0.0) } else { 0.0 };
    let pr = e / samples as f64;
    Ok(Corollary2Estimate {
        t,
        estimate: mean,
        ci_half_width: 1.96 * (var / e).sqrt(),
        pr_event: pr,
        pr_event_std_err: (pr * (1.0 - pr) / samples as f64).sqrt(),
        events,
        samples,
        seed,
    })
}

/// Empirical frequency of the conditioning event and its standard error,
/// from base paths of length `3T` only.
pub fn event_probability(
    matrix: &StochasticMatrix,
    marked: &[usize],
    start: &[f64],
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 || t == 0 {
        return Err(Error::OutOfRange {
            name: "samples and T",
            value: samples.min(t as u64) as f64,
            expected: ">= 1",
        });
    }
    let mask = marked_mask(matrix.n(), marked)?;
    let law = StartLaw::new(start)?;
    let hits: u64 = rng::blocks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(blk, _, len)| {
            let mut rng = rng::stream_rng(seed, blk);
            (0..len)
                .filter(|_| event_holds(&simulate_with(matrix, &law, 3 * t, &mut rng), &mask, t))
                .count() as u64
        })
        .sum();
    let pr = hits as f64 / samples as f64;
    Ok((pr, (pr * (1.0 - pr) / samples as f64).sqrt()))
}

/// Conservative constant `c` in the `c / ln T` floor.
pub const FLOOR_CONSTANT: f64 = 0.01;

/// `c / ln T` with `c` = [`FLOOR_CONSTANT`].
pub fn success_floor(t: usize) -> f64 {
    FLOOR_CONSTANT / (t.max(2) as f64).ln()
}

/// Exact evaluation of the fast-forwarding success functional under the
/// corollary's hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct Corollary3Report {
    pub t: usize,
    pub ht: f64,
    pub p_m: f64,
    /// Mean over `s` in `S` and `t` in `1..=24T` of `||Pi_M D(s)^t sqrt(pi_U)||^2`.
    pub mean: f64,
    /// Largest single term of the mean.
    pub best: f64,
    pub floor: f64,
    pub above_floor: bool,
}

pub fn corollary3_check(chain: &ReversibleChain, marked: &MarkedSet, t: usize) -> Result<Corollary3Report> {
    if chain.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what: "exact corollary check",
            n: chain.n(),
            limit: DENSE_LIMIT,
        });
    }
    let p_m = marked.p_m();
    if p_m > 1.0 / 9.0 {
        return Err(Error::HypothesisViolated(format!("p_M = {p_m} exceeds 1/9")));
    }
    let ht = hitting_time_exact(chain, marked)?.value;
    if (t as f64) < 3.0 * ht {
        return Err(Error::HypothesisViolated(format!("T = {t} is below 3 HT = {}", 3.0 * ht)));
    }
    let (mean, best) = mean_fastforward_success(chain, marked, t, StepRange::Corollary)?;
    let floor = success_floor(t);
    Ok(Corollary3Report {
        t,
        ht,
        p_m,
        mean,
        best,
        floor,
        above_floor: mean >= floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;

    #[test]
    fn unreachable_marked_vertex_never_seen() {
        let m = StochasticMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(2, 1.0)]]).unwrap();
        let err = corollary2_estimate(&m, &[2], &[0.5, 0.5, 0.0], 3, 500, 1).unwrap_err();
        assert!(matches!(err, Error::EventNeverObserved { samples: 500 }));
    }

    #[test]
    fn event_definition() {
        let mask = [false, true];
        assert!(event_holds(&[0, 1, 0, 0, 0, 0, 0], &mask, 2));
        assert!(!event_holds(&[1, 1, 0, 0, 0, 0, 0], &mask, 2));
        assert!(!event_holds(&[0, 0, 0, 1, 1, 1, 0], &mask, 2));
        assert!(event_holds(&[0, 0, 1, 1, 1, 0, 0], &mask, 2));
        assert!(!event_holds(&[0, 0, 1, 1, 1, 1, 0], &mask, 2));
    }

    #[test]
    fn coupled_product_without_stretching() {
        // s = 0 leaves the path intact: T = 1, marks at steps 1 and 3 among
        // 1..=3, unmarked at 17 of the 21 late steps.
        let mask = [false, true];
        let mut path = vec![0, 1, 0, 1];
        path.extend((4..=24).map(|i| if i % 5 == 0 { 1 } else { 0 }));
        let mut rng = rng::stream_rng(0, 0);
        let v = coupled_product(&path, &mask, 1, 0.0, &mut rng).unwrap();
        assert!((v - (2.0 / 3.0) * (17.0 / 21.0)).abs() < 1e-15);
    }

    #[test]
    fn star_success_above_floor() {
        let (c, _) = graphs::segmented_star_chain(graphs::StarSpec { k: 3 }).unwrap();
        let spec = graphs::StarSpec { k: 3 };
        let mk = MarkedSet::new(&c, (7..=9).map(|d| spec.vertex(0, d))).unwrap();
        let ht = hitting_time_exact(&c, &mk).unwrap().value;
        let t = 3 * ht.ceil() as usize;
        let rep = corollary3_check(&c, &mk, t).unwrap();
        assert!(rep.mean > 0.0 && rep.mean <= 1.0);
        assert!(rep.best >= rep.mean);
        assert!(rep.above_floor, "{rep:?}");
        let low = corollary3_check(&c, &mk, (ht as usize).max(1));
        assert!(matches!(low, Err(Error::HypothesisViolated(_))));
    }
}
