//! Trajectory sampling for raw stochastic matrices and the coupling that
//! turns a path of `P` into a path of the interpolated walk `P(s)`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::chain::{MarkedSet, StochasticMatrix};
use crate::error::{Error, Result};
use crate::rng;
use crate::spectra::step;

/// A path of vertex indices together with how it was produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub vertices: Vec<usize>,
    pub seed: u64,
    /// Fingerprint of the generating matrix.
    pub chain_id: u64,
}

/// Draws start vertices from a probability vector by inversion.
#[derive(Clone, Debug)]
pub struct StartLaw {
    cumulative: Vec<f64>,
}

impl StartLaw {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("negative or non-finite start weight".into()));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::InvalidDistribution("start weights sum to zero".into()));
        }
        Ok(Self { cumulative })
    }

    /// Point mass at `x` on `n` vertices.
    pub fn vertex(n: usize, x: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        *w.get_mut(x)
            .ok_or_else(|| Error::InvalidDistribution(format!("start vertex {x} outside [0, {n})")))? = 1.0;
        Self::new(&w)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        k.min(self.cumulative.len() - 1)
    }
}

/// Path `Y_0, ..., Y_steps` of `matrix` from `Y_0 ~ start`.
pub fn simulate_with<R: Rng>(matrix: &StochasticMatrix, start: &StartLaw, steps: usize, rng: &mut R) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = start.sample(rng);
    path.push(x);
    for _ in 0..steps {
        x = step(matrix, x, rng);
        path.push(x);
    }
    path
}

/// Seeded trajectory of `steps` transitions.
pub fn simulate(matrix: &StochasticMatrix, start: &StartLaw, steps: usize, seed: u64) -> Result<TrajectoryRecord> {
    if start.len() != matrix.n() {
        return Err(Error::InvalidDistribution(format!(
            "start law has {} entries, chain has {} vertices",
            start.len(),
            matrix.n()
        )));
    }
    let mut rng = rng::stream_rng(seed, 0);
    Ok(TrajectoryRecord {
        vertices: simulate_with(matrix, start, steps, &mut rng),
        seed,
        chain_id: matrix.fingerprint(),
    })
}

/// Empirical law of `Y_steps` over `samples` independent trajectories.
pub fn empirical_marginal(
    matrix: &StochasticMatrix,
    start: &StartLaw,
    steps: usize,
    samples: u64,
    seed: u64,
) -> Vec<f64> {
    let n = matrix.n();
    let counts: Vec<Vec<u64>> = rng::blocks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, _, len)| {
            let mut rng = rng::stream_rng(seed, b);
            let mut c = vec![0u64; n];
            for _ in 0..len {
                let mut x = start.sample(&mut rng);
                for _ in 0..steps {
                    x = step(matrix, x, &mut rng);
                }
                c[x] += 1;
            }
            c
        })
        .collect();
    let mut total = vec![0u64; n];
    for c in counts {
        total.iter_mut().zip(c).for_each(|(t, v)| *t += v);
    }
    total.into_iter().map(|c| c as f64 / samples as f64).collect()
}

/// Total-variation distance `(1/2) sum |a - b|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Repeats the `j`-th marked entry of `path` `stays[j]` times in total
/// (`stays[j] >= 1`). Marked entries beyond `stays.len()` are kept once.
pub fn couple_with_stays(path: &[usize], marked: &MarkedSet, stays: &[u64]) -> Vec<usize> {
    couple_mask(path, marked.mask(), stays)
}

pub(crate) fn couple_mask(path: &[usize], mask: &[bool], stays: &[u64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(path.len());
    let mut j = 0;
    for &x in path {
        if mask[x] {
            let l = stays.get(j).copied().unwrap_or(1).max(1);
            j += 1;
            out.extend(std::iter::repeat_n(x, l as usize));
        } else {
            out.push(x);
        }
    }
    out
}

/// Geometric stay length on `{1, 2, ...}` with mean `1 / (1 - s)`.
pub(crate) fn stay_length<R: Rng>(geo: &Option<Geometric>, rng: &mut R) -> u64 {
    match geo {
        None => 1,
        Some(g) => 1 + g.sample(rng),
    }
}

pub(crate) fn stay_law(s: f64) -> Result<Option<Geometric>> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 <= s < 1",
        });
    }
    if s == 0.0 {
        return Ok(None);
    }
    Geometric::new(1.0 - s)
        .map(Some)
        .map_err(|e| Error::Numerical(format!("geometric law: {e}")))
}

/// Turns a path of `P` into a path of `P(s)`: every visit to a marked vertex
/// is stretched to a geometric number of steps with mean `1 / (1 - s)`.
pub fn couple_interpolated(base: &TrajectoryRecord, marked: &MarkedSet, s: f64, seed: u64) -> Result<TrajectoryRecord> {
    let geo = stay_law(s)?;
    let mut rng = rng::stream_rng(seed, 0);
    let visits = base.vertices.iter().filter(|&&x| marked.contains(x)).count();
    let stays: Vec<u64> = (0..visits).map(|_| stay_length(&geo, &mut rng)).collect();
    Ok(TrajectoryRecord {
        vertices: couple_with_stays(&base.vertices, marked, &stays),
        seed,
        chain_id: base.chain_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ReversibleChain;

    #[test]
    fn identity_is_constant() {
        let m = StochasticMatrix::from_rows(vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let r = simulate(&m, &StartLaw::vertex(2, 1).unwrap(), 20, 5).unwrap();
        assert!(r.vertices.iter().all(|&x| x == 1));
        assert_eq!(r.vertices.len(), 21);
    }

    #[test]
    fn two_cycle_alternates() {
        let m = StochasticMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        let r = simulate(&m, &StartLaw::vertex(2, 0).unwrap(), 9, 1).unwrap();
        for (i, &x) in r.vertices.iter().enumerate() {
            assert_eq!(x, i % 2);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = StochasticMatrix::torus(5).unwrap();
        let law = StartLaw::new(&vec![1.0; 25]).unwrap();
        assert_eq!(simulate(&m, &law, 100, 9).unwrap(), simulate(&m, &law, 100, 9).unwrap());
    }

    #[test]
    fn line_walk_coupling() {
        let rows = (0..5)
            .map(|x: usize| {
                let mut r = vec![];
                if x > 0 {
                    r.push((x - 1, 0.5));
                }
                if x < 4 {
                    r.push((x + 1, 0.5));
                }
                if x == 0 || x == 4 {
                    r.push((x, 0.5));
                }
                r
            })
            .collect();
        let m = StochasticMatrix::from_rows(rows).unwrap();
        let c = ReversibleChain::from_matrix(m).unwrap();
        let mk = MarkedSet::new(&c, [4]).unwrap();
        let y = [0, 1, 2, 3, 4, 3, 2, 3, 4, 3, 4, 3, 2, 1];
        let ys = couple_with_stays(&y, &mk, &[4, 3, 3]);
        assert_eq!(ys, vec![0, 1, 2, 3, 4, 4, 4, 4, 3, 2, 3, 4, 4, 4, 3, 4, 4, 4, 3, 2, 1]);
    }

    #[test]
    fn s_zero_coupling_is_identity() {
        let m = StochasticMatrix::torus(4).unwrap();
        let law = StartLaw::new(&vec![1.0; 16]).unwrap();
        let c = ReversibleChain::new(m.clone(), vec![1.0 / 16.0; 16]).unwrap();
        let mk = MarkedSet::new(&c, [0, 5]).unwrap();
        let base = simulate(&m, &law, 200, 2).unwrap();
        assert_eq!(couple_interpolated(&base, &mk, 0.0, 3).unwrap().vertices, base.vertices);
    }
}
