//! Vector kernels shared by the solvers.
//!
//! Every reduction here is split into fixed-size chunks whose partial sums are
//! combined by a pairwise tree in chunk order, so results do not depend on the
//! number of worker threads.

use faer::Mat;
use rayon::prelude::*;

/// Rows handled by one parallel task in matrix-free products.
pub const ROW_CHUNK: usize = 4096;

const SUM_CHUNK: usize = 4096;

/// A real symmetric linear operator applied without materializing its matrix.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`. Both slices have length [`SymmetricOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Deterministic parallel sum of `f(i)` over `0..n`.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * SUM_CHUNK;
            let hi = (lo + SUM_CHUNK).min(n);
            let local: Vec<f64> = (lo..hi).map(&f).collect();
            pairwise_sum(&local)
        })
        .collect();
    pairwise_sum(&partials)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Fills `out[i] = f(i)` in parallel over fixed row chunks.
pub fn par_fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    out.par_chunks_mut(ROW_CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * ROW_CHUNK;
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = f(base + i);
            }
        });
}

/// `y <- a*x + b*y`, elementwise.
pub fn axpby(a: f64, x: &[f64], b: f64, y: &mut [f64]) {
    y.par_chunks_mut(ROW_CHUNK)
        .zip(x.par_chunks(ROW_CHUNK))
        .for_each(|(yc, xc)| {
            for (yi, xi) in yc.iter_mut().zip(xc) {
                *yi = a * xi + b * *yi;
            }
        });
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Dense matrix-vector product `A x`.
pub fn dense_matvec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    (0..a.nrows())
        .map(|i| {
            let row: Vec<f64> = (0..a.ncols()).map(|j| a[(i, j)] * x[j]).collect();
            pairwise_sum(&row)
        })
        .collect()
}

/// Symmetric operator backed by a dense matrix.
pub struct DenseOperator<'a>(pub &'a Mat<f64>);

impl SymmetricOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let a = self.0;
        par_fill(y, |i| {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += a[(i, j)] * xj;
            }
            acc
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }

    #[test]
    fn sum_by_is_independent_of_thread_count() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sum_by(100_000, f));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sum_by(100_000, f));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn axpby_combines() {
        let x = vec![1.0, 2.0, 3.0];
        let mut y = vec![1.0, 1.0, 1.0];
        axpby(2.0, &x, -1.0, &mut y);
        assert_eq!(y, vec![1.0, 3.0, 5.0]);
    }
}
