//! Sweeps of the success bound `q_t(1 - 1/r)` over the interpolation
//! parameter `r = 1/(1 - s)`.

use rayon::prelude::*;

use super::chebyshev::q_curve_with;
use crate::chain::{MarkedSet, ReversibleChain};
use crate::error::{Error, Result};
use crate::interpolate::{build_interpolated, s_from_r};

/// Per-`r` best bound `q(r) = max_{t <= t_max} q_t` and the first step count
/// `tau(r)` attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub r_grid: Vec<f64>,
    pub q: Vec<f64>,
    pub tau: Vec<usize>,
    pub t_max: usize,
    /// `(1 - p_M) / p_M`.
    pub r1: f64,
    /// The hitting time, a plausible upper bound on the best `r`.
    pub r2: f64,
}

impl SweepResult {
    /// Index of the largest `q(r)`; the smallest `r` wins ties.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for i in 1..self.q.len() {
            if self.q[i] > self.q[best] {
                best = i;
            }
        }
        best
    }
}

/// Default step cap `ceil(3 sqrt(HT))`.
pub fn default_t_max(ht: f64) -> usize {
    (3.0 * ht.sqrt()).ceil() as usize
}

/// Logarithmic grid with `per_decade` points per decade from `r = 1` up to
/// `r = 4 HT` inclusive of both ends.
pub fn default_r_grid(ht: f64, per_decade: usize) -> Vec<f64> {
    let top = (4.0 * ht).max(1.0);
    let steps = (per_decade as f64 * top.log10()).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| 10f64.powf(i as f64 / per_decade as f64))
        .collect();
    if *grid.last().unwrap() < top * (1.0 - 1e-12) {
        grid.push(top);
    }
    grid
}

/// `q(r)` and `tau(r)` over `r_grid`.
///
/// `tau(r)` is the smallest `t` with `q_t >= q(r) - 1e-12`. Each `r` is
/// an independent recursion and the grid is processed in parallel.
pub fn sweep_q(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    r_grid: &[f64],
    t_max: usize,
    ht: f64,
) -> Result<SweepResult> {
    if t_max < 1 {
        return Err(Error::OutOfRange {
            name: "t_max",
            value: t_max as f64,
            expected: "t_max >= 1",
        });
    }
    let per_r: Vec<(f64, usize)> = r_grid
        .par_iter()
        .map(|&r| {
            let s = s_from_r(r)?;
            let ic = build_interpolated(chain, marked, s)?;
            let curve = q_curve_with(&ic.discriminant(), chain.sqrt_pi(), marked, t_max);
            Ok(best_of_curve(&curve))
        })
        .collect::<Result<_>>()?;
    let p_m = marked.p_m();
    Ok(SweepResult {
        r_grid: r_grid.to_vec(),
        q: per_r.iter().map(|e| e.0).collect(),
        tau: per_r.iter().map(|e| e.1).collect(),
        t_max,
        r1: (1.0 - p_m) / p_m,
        r2: ht,
    })
}

fn best_of_curve(curve: &[f64]) -> (f64, usize) {
    let q = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau = curve.iter().position(|&v| v >= q - 1e-12).unwrap();
    (q, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::chebyshev::q_curve;
    use crate::graphs;
    use crate::linalg::dense_matvec;

    #[test]
    fn grid_endpoints() {
        let g = default_r_grid(1000.0, 64);
        assert_eq!(g[0], 1.0);
        assert!((g.last().unwrap() - 4000.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tie_break_picks_first_maximum() {
        assert_eq!(best_of_curve(&[0.1, 0.5, 0.3, 0.5]), (0.5, 1));
    }

    #[test]
    fn r_one_is_plain_walk() {
        let (c, m) = graphs::segmented_star_chain(graphs::StarSpec { k: 3 }).unwrap();
        let sw = sweep_q(&c, &m, &[1.0], 20, 50.0).unwrap();
        let direct = q_curve(&c, &m, 0.0, 20).unwrap();
        let (q, tau) = best_of_curve(&direct);
        assert_eq!(sw.q[0], q);
        assert_eq!(sw.tau[0], tau);
    }

    #[test]
    fn star_sweep_matches_dense_recomputation() {
        let (c, m) = graphs::segmented_star_chain(graphs::StarSpec { k: 3 }).unwrap();
        let grid = [1.0, 3.0, 9.0, 27.0];
        let sw = sweep_q(&c, &m, &grid, 30, 100.0).unwrap();
        for (i, &r) in grid.iter().enumerate() {
            let ic = build_interpolated(&c, &m, 1.0 - 1.0 / r).unwrap();
            let d = ic.discriminant().to_dense().unwrap();
            let mut prev = c.sqrt_pi().to_vec();
            let mut cur = dense_matvec(&d, &prev);
            let mass = |v: &[f64]| m.members().iter().map(|&x| v[x] * v[x]).sum::<f64>();
            let mut curve = vec![mass(&prev), mass(&cur)];
            for _ in 2..=30 {
                let dc = dense_matvec(&d, &cur);
                let next: Vec<f64> = dc.iter().zip(&prev).map(|(a, b)| 2.0 * a - b).collect();
                curve.push(mass(&next));
                prev = cur;
                cur = next;
            }
            let q = curve.iter().copied().fold(0.0, f64::max);
            assert!((sw.q[i] - q).abs() < 1e-10);
        }
        assert!((sw.r1 - (1.0 - m.p_m()) / m.p_m()).abs() < 1e-12);
    }
}
