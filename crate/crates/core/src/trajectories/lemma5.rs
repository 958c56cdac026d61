//! Concentration of a sum of `t` geometric variables within a factor two of
//! its mean.

use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

fn check(p: f64, t: u64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "0 < p <= 1",
        });
    }
    if t < 1 {
        return Err(Error::OutOfRange {
            name: "t",
            value: t as f64,
            expected: "t >= 1",
        });
    }
    Ok(())
}

/// `floor(t / (2p))` and `floor(2t / p)`.
pub fn window_bounds(p: f64, t: u64) -> (u64, u64) {
    ((t as f64 / (2.0 * p)).floor() as u64, (2.0 * t as f64 / p).floor() as u64)
}

/// `P(Bin(z, p) <= t - 1)`, which equals `P(Z > z)` for `Z` a sum of `t`
/// geometric variables on `{1, 2, ...}` with success probability `p < 1`.
fn binomial_lower_tail(z: u64, p: f64, t: u64) -> f64 {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let kmax = (t - 1).min(z);
    let mut log_term = z as f64 * lq;
    let mut logs = Vec::with_capacity(kmax as usize + 1);
    logs.push(log_term);
    for k in 0..kmax {
        log_term += ((z - k) as f64).ln() - ((k + 1) as f64).ln() + lp - lq;
        logs.push(log_term);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    (top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()).exp().min(1.0)
}

/// Exact `P(floor(t/(2p)) < Z <= floor(2t/p))` for `Z` a sum of `t`
/// independent geometric variables with success probability `p`.
pub fn geometric_sum_window(p: f64, t: u64) -> Result<f64> {
    check(p, t)?;
    if p == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = window_bounds(p, t);
    Ok((binomial_lower_tail(a, p, t) - binomial_lower_tail(b, p, t)).max(0.0))
}

/// Seeded sampling estimate of [`geometric_sum_window`] with its standard error.
pub fn geometric_sum_window_empirical(p: f64, t: u64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    check(p, t)?;
    if samples == 0 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: 0.0,
            expected: "samples >= 1",
        });
    }
    let geo = Geometric::new(p).map_err(|e| Error::Numerical(format!("geometric law: {e}")))?;
    let (a, b) = window_bounds(p, t);
    let hits: u64 = rng::blocks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(blk, _, len)| {
            let mut rng = rng::stream_rng(seed, blk);
            (0..len)
                .filter(|_| {
                    let z: u64 = (0..t).map(|_| 1 + geo.sample(&mut rng)).sum();
                    a < z && z <= b
                })
                .count() as u64
        })
        .sum();
    let est = hits as f64 / samples as f64;
    Ok((est, (est * (1.0 - est) / samples as f64).sqrt()))
}

/// The Chebyshev-inequality lower bound `1 - 4/t` on the same probability.
pub fn chebyshev_window_bound(t: u64) -> f64 {
    1.0 - 4.0 / t as f64
}

/// One point of the concentration grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma5Row {
    pub t: u64,
    pub p: f64,
    pub exact: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

/// The grid `p = 1/points, 2/points, ..., 1`.
pub fn p_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / points as f64).collect()
}

/// Exact and sampled window probabilities for every `(t, p)` pair; the grid
/// point with flat index `k` samples with seed `seed + k`.
pub fn lemma5_grid(ts: &[u64], ps: &[f64], samples: u64, seed: u64) -> Result<Vec<Lemma5Row>> {
    let mut rows = Vec::with_capacity(ts.len() * ps.len());
    for &t in ts {
        for &p in ps {
            let point_seed = seed.wrapping_add(rows.len() as u64);
            let (empirical, std_err) = if samples > 0 {
                geometric_sum_window_empirical(p, t, samples, point_seed)?
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(Lemma5Row {
                t,
                p,
                exact: geometric_sum_window(p, t)?,
                empirical,
                std_err,
                samples,
                seed: point_seed,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Binomial, DiscreteCDF};

    #[test]
    fn degenerate_at_p_one() {
        for t in 1..10 {
            assert_eq!(geometric_sum_window(1.0, t).unwrap(), 1.0);
            assert_eq!(geometric_sum_window_empirical(1.0, t, 2000, 1).unwrap().0, 1.0);
        }
    }

    #[test]
    fn single_geometric_closed_form() {
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let (a, b) = window_bounds(p, 1);
            let want = (1.0 - p).powi(a as i32) - (1.0 - p).powi(b as i32);
            assert!((geometric_sum_window(p, 1).unwrap() - want).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn matches_binomial_cdf() {
        for t in [2u64, 5, 7, 20] {
            for p in [0.013, 0.2, 0.5, 0.77] {
                let (a, b) = window_bounds(p, t);
                let cdf = |z: u64| Binomial::new(p, z).unwrap().cdf(t - 1);
                let want = cdf(a) - cdf(b);
                assert!((geometric_sum_window(p, t).unwrap() - want).abs() < 1e-12, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn seven_sixteenths_for_small_t() {
        for t in 1..=7 {
            for p in p_grid(100) {
                assert!(geometric_sum_window(p, t).unwrap() >= 7.0 / 16.0, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn chebyshev_route_for_larger_t() {
        for t in 8..=40 {
            for p in p_grid(50) {
                assert!(geometric_sum_window(p, t).unwrap() >= chebyshev_window_bound(t) - 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(geometric_sum_window(0.0, 1).is_err());
        assert!(geometric_sum_window(0.5, 0).is_err());
        assert!(geometric_sum_window(1.5, 2).is_err());
    }
}
