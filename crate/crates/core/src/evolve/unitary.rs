//! Explicit quantum walk operator `W(s) = V^T Shift' V Ref'` on
//! `C^2 (x) C^n (x) C^n` for small chains.
//!
//! Basis state `|a, y, x>` (ancilla `a`, first register `y`, vertex register
//! `x`) has index `a n^2 + y n + x`; the reference state `0̄` of the first
//! register is `y = 0`. All amplitudes are real, so unitaries are stored as
//! real orthogonal matrices.

use faer::Mat;

use crate::chain::{MarkedSet, ReversibleChain};
use crate::error::{Error, Result};
use crate::evolve::chebyshev::chebyshev_apply;
use crate::interpolate::build_interpolated;
use crate::linalg::DenseOperator;

/// Largest chain for which the walk operator is formed (dimension `2 n^2`).
pub const UNITARY_LIMIT: usize = 32;

/// How the columns of `V(P, s)` outside the reference block are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Completion {
    /// Householder QR of the specified columns.
    #[default]
    Householder,
    /// Gram-Schmidt over the standard basis, taken in reverse order.
    ReverseGramSchmidt,
}

/// Dense walk operator together with its parameters.
#[derive(Clone, Debug)]
pub struct WalkUnitary {
    pub matrix: Mat<f64>,
    pub n: usize,
    pub s: f64,
    /// Index of the reference state `0̄` in the first register.
    pub reference: usize,
}

#[inline]
fn idx(n: usize, a: usize, y: usize, x: usize) -> usize {
    a * n * n + y * n + x
}

/// The specified columns `V |0, 0̄, x> = sqrt(1 - s m_x) sum_y sqrt(P_xy) |0, y, x>
/// + sqrt(s) m_x |1, 0̄, x>`, one per vertex. They are orthonormal because
/// their supports lie in distinct vertex registers.
fn specified_columns(chain: &ReversibleChain, marked: &MarkedSet, s: f64) -> Mat<f64> {
    let n = chain.n();
    let dim = 2 * n * n;
    let mut psi = Mat::<f64>::zeros(dim, n);
    for x in 0..n {
        let m = marked.contains(x);
        let c = if m { (1.0 - s).sqrt() } else { 1.0 };
        chain.matrix().for_each_in_row(x, |y, p| psi[(idx(n, 0, y, x), x)] = c * p.sqrt());
        if m {
            psi[(idx(n, 1, 0, x), x)] = s.sqrt();
        }
    }
    psi
}

/// Extends the orthonormal columns of `psi` to a square orthogonal matrix
/// whose first columns are exactly `psi`.
fn complete(psi: &Mat<f64>, how: Completion) -> Result<Mat<f64>> {
    match how {
        Completion::Householder => householder_complete(psi),
        Completion::ReverseGramSchmidt => gram_schmidt_complete(psi),
    }
}

fn householder_complete(psi: &Mat<f64>) -> Result<Mat<f64>> {
    let (dim, k) = (psi.nrows(), psi.ncols());
    let mut r = psi.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let norm: f64 = (j..dim).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::CompletionFailure(format!("column {j} is degenerate")));
        }
        let alpha = if r[(j, j)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (0..dim).map(|i| if i < j { 0.0 } else { r[(i, j)] }).collect();
        v[j] -= alpha;
        let vn: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vn > 0.0 {
            v.iter_mut().for_each(|a| *a /= vn);
            for c in j..k {
                let proj: f64 = (j..dim).map(|i| v[i] * r[(i, c)]).sum();
                for i in j..dim {
                    r[(i, c)] -= 2.0 * v[i] * proj;
                }
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{k-1}, formed by applying the reflectors to I from the right end.
    let mut q = Mat::<f64>::identity(dim, dim);
    for v in reflectors.iter().rev() {
        for c in 0..dim {
            let proj: f64 = (0..dim).map(|i| v[i] * q[(i, c)]).sum();
            if proj != 0.0 {
                for i in 0..dim {
                    q[(i, c)] -= 2.0 * v[i] * proj;
                }
            }
        }
    }
    // The leading columns of Q equal psi up to sign.
    for j in 0..k {
        let d: f64 = (0..dim).map(|i| q[(i, j)] * psi[(i, j)]).sum();
        if (d.abs() - 1.0).abs() > 1e-10 {
            return Err(Error::CompletionFailure(format!(
                "column {j} reproduced with overlap {d}"
            )));
        }
        if d < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

fn gram_schmidt_complete(psi: &Mat<f64>) -> Result<Mat<f64>> {
    let (dim, k) = (psi.nrows(), psi.ncols());
    let mut basis: Vec<Vec<f64>> = (0..k).map(|j| (0..dim).map(|i| psi[(i, j)]).collect()).collect();
    for e in (0..dim).rev() {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        // Two passes of modified Gram-Schmidt keep the result orthogonal to
        // working precision.
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = b.iter().zip(&v).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(c, a)| *c -= proj * a);
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    if basis.len() != dim {
        return Err(Error::CompletionFailure(format!(
            "found {} of {dim} basis vectors",
            basis.len()
        )));
    }
    Ok(Mat::from_fn(dim, dim, |i, j| basis[j][i]))
}

/// Builds `W(s)` with the chosen completion of `V(P, s)`.
pub fn build_walk_unitary(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    s: f64,
    completion: Completion,
) -> Result<WalkUnitary> {
    let n = chain.n();
    if n > UNITARY_LIMIT {
        return Err(Error::TooLarge {
            what: "explicit walk unitary",
            n,
            limit: UNITARY_LIMIT,
        });
    }
    build_interpolated(chain, marked, s)?;
    let dim = 2 * n * n;
    let psi = specified_columns(chain, marked, s);
    let q = complete(&psi, completion)?;
    // Place column x of psi at basis index |0, 0̄, x> = x and spread the
    // remaining columns over the other indices in increasing order.
    let mut v = Mat::<f64>::zeros(dim, dim);
    let mut free = n;
    for col in 0..dim {
        let target = if col < n {
            idx(n, 0, 0, col)
        } else {
            let t = free;
            free += 1;
            t
        };
        for i in 0..dim {
            v[(i, target)] = q[(i, col)];
        }
    }
    // Shift' swaps the two registers when the ancilla is 0.
    let shift = |i: usize| -> usize {
        let (a, rest) = (i / (n * n), i % (n * n));
        if a == 0 {
            let (y, x) = (rest / n, rest % n);
            idx(n, 0, x, y)
        } else {
            i
        }
    };
    // Ref' = +1 on |0, 0̄, x>, -1 elsewhere: scale columns of V.
    let mut v_ref = v.clone();
    for col in 0..dim {
        let sign = if col < n { 1.0 } else { -1.0 };
        if sign < 0.0 {
            for i in 0..dim {
                v_ref[(i, col)] = -v_ref[(i, col)];
            }
        }
    }
    let mut shifted = Mat::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let si = shift(i);
        for c in 0..dim {
            shifted[(si, c)] = v_ref[(i, c)];
        }
    }
    let matrix = v.transpose() * &shifted;
    Ok(WalkUnitary {
        matrix,
        n,
        s,
        reference: 0,
    })
}

impl WalkUnitary {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |W^T W - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.matrix.transpose() * &self.matrix;
        let mut worst = 0.0_f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - id).abs());
            }
        }
        worst
    }

    /// Reference block `<0, 0̄, x| M |0, 0̄, y>` of a matrix on the full space.
    pub fn reference_block(&self, m: &Mat<f64>) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |x, y| m[(idx(self.n, 0, 0, x), idx(self.n, 0, 0, y))])
    }

    /// `W^t` by repeated multiplication.
    pub fn power(&self, t: usize) -> Mat<f64> {
        let mut out = Mat::<f64>::identity(self.dim(), self.dim());
        for _ in 0..t {
            out = &self.matrix * &out;
        }
        out
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        crate::linalg::dense_matvec(&self.matrix, v)
    }
}

/// Exact success probability of `t` walk steps from `|0, 0̄, sqrt(pi)>` followed
/// by measuring the vertex register: `|| (I (x) Pi_M) W^t(s) |0̄>|sqrt(pi)> ||^2`.
pub fn algorithm1_success_exact(chain: &ReversibleChain, marked: &MarkedSet, s: f64, t: usize) -> Result<f64> {
    let w = build_walk_unitary(chain, marked, s, Completion::Householder)?;
    Ok(algorithm1_curve(&w, chain, marked, t)[t])
}

/// Success probabilities for `t` in `0..=t_max` with a prebuilt operator.
pub fn algorithm1_curve(w: &WalkUnitary, chain: &ReversibleChain, marked: &MarkedSet, t_max: usize) -> Vec<f64> {
    let n = w.n;
    let mut state = vec![0.0; w.dim()];
    for x in 0..n {
        state[idx(n, 0, 0, x)] = chain.sqrt_pi()[x];
    }
    let success = |v: &[f64]| -> f64 {
        v.iter()
            .enumerate()
            .filter(|(i, _)| marked.contains(i % n))
            .map(|(_, a)| a * a)
            .sum()
    };
    let mut out = vec![success(&state)];
    for _ in 0..t_max {
        state = w.apply(&state);
        out.push(success(&state));
    }
    out
}

/// Worst deviation of `Pi_0 W^t Pi_0` from `|0̄><0̄| (x) T_t(D(s))` over
/// `t <= t_max` for one completion.
pub fn lemma3_deviation(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    s: f64,
    t_max: usize,
    completion: Completion,
) -> Result<f64> {
    let w = build_walk_unitary(chain, marked, s, completion)?;
    let d = build_interpolated(chain, marked, s)?.discriminant().to_dense()?;
    let op = DenseOperator(&d);
    let n = chain.n();
    let mut worst = 0.0_f64;
    let mut wt = Mat::<f64>::identity(w.dim(), w.dim());
    for t in 0..=t_max {
        if t > 0 {
            wt = &w.matrix * &wt;
        }
        let block = w.reference_block(&wt);
        for y in 0..n {
            let mut e = vec![0.0; n];
            e[y] = 1.0;
            let col = chebyshev_apply(&op, t, &e);
            for x in 0..n {
                worst = worst.max((block[(x, y)] - col[x]).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::StochasticMatrix;
    use crate::evolve::chebyshev::q_t;
    use crate::graphs;

    fn two_state() -> (ReversibleChain, MarkedSet) {
        let m = StochasticMatrix::from_dense(&[vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
        let c = ReversibleChain::from_matrix(m).unwrap();
        let mk = MarkedSet::new(&c, [1]).unwrap();
        (c, mk)
    }

    #[test]
    fn block_equals_discriminant() {
        let (c, m) = two_state();
        for s in [0.0, 0.4] {
            for how in [Completion::Householder, Completion::ReverseGramSchmidt] {
                let w = build_walk_unitary(&c, &m, s, how).unwrap();
                assert!(w.unitarity_error() < 1e-10);
                let block = w.reference_block(&w.matrix);
                let d = build_interpolated(&c, &m, s).unwrap().discriminant().to_dense().unwrap();
                for x in 0..2 {
                    for y in 0..2 {
                        assert!((block[(x, y)] - d[(x, y)]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn chebyshev_identity_on_small_torus() {
        let c = graphs::torus_chain(2).unwrap();
        let m = MarkedSet::new(&c, [0]).unwrap();
        for how in [Completion::Householder, Completion::ReverseGramSchmidt] {
            assert!(lemma3_deviation(&c, &m, 0.3, 10, how).unwrap() < 1e-8);
        }
    }

    #[test]
    fn algorithm1_dominates_bound() {
        let (c, m) = graphs::segmented_star_chain(graphs::StarSpec { k: 2 }).unwrap();
        let w = build_walk_unitary(&c, &m, 0.5, Completion::Householder).unwrap();
        let curve = algorithm1_curve(&w, &c, &m, 12);
        assert!((curve[0] - m.p_m()).abs() < 1e-12);
        for (t, p) in curve.iter().enumerate() {
            assert!(*p >= q_t(&c, &m, 0.5, t).unwrap() - 1e-10);
        }
    }

    #[test]
    fn rejects_large_chains() {
        let c = graphs::torus_chain(6).unwrap();
        let m = MarkedSet::new(&c, [0]).unwrap();
        let err = build_walk_unitary(&c, &m, 0.0, Completion::Householder).unwrap_err();
        assert_eq!(err.kind(), "TooLarge");
    }
}
