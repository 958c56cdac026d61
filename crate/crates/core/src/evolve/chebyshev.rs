//! Chebyshev recursion `T_0 = I`, `T_1 = D`, `T_{t+1} = 2 D T_t - T_{t-1}`
//! applied to a vector, which is what `t` steps of the quantum walk do on
//! the reference block.

use crate::chain::{Discriminant, MarkedSet, ReversibleChain};
use crate::error::Result;
use crate::interpolate::build_interpolated;
use crate::linalg::{self, SymmetricOperator};

/// `T_t(D) v` using `t` products with `D` and two work vectors.
pub fn chebyshev_apply<A: SymmetricOperator>(op: &A, t: usize, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for_each_chebyshev(op, v, t, |k, w| {
        if k == t {
            out.copy_from_slice(w);
        }
    });
    out
}

/// Calls `f(t, T_t(D) v)` for `t = 0, 1, ..., t_max` in order.
pub fn for_each_chebyshev<A, F>(op: &A, v: &[f64], t_max: usize, mut f: F)
where
    A: SymmetricOperator,
    F: FnMut(usize, &[f64]),
{
    let n = op.dim();
    assert_eq!(v.len(), n);
    let mut prev = v.to_vec();
    f(0, &prev);
    if t_max == 0 {
        return;
    }
    let mut cur = op.apply_vec(v);
    f(1, &cur);
    let mut next = vec![0.0; n];
    for t in 2..=t_max {
        op.apply(&cur, &mut next);
        // next <- 2 D T_t v - T_{t-1} v
        linalg::axpby(-1.0, &prev, 2.0, &mut next);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        f(t, &cur);
    }
}

/// Probability mass of a vector's squared entries on the marked set.
pub(crate) fn marked_mass(v: &[f64], marked: &MarkedSet) -> f64 {
    let m = marked.members();
    linalg::sum_by(m.len(), |i| v[m[i]] * v[m[i]])
}

/// `q_t(s) = || Pi_M T_t(D(s)) sqrt(pi) ||^2`, a lower bound on the success
/// probability of `t` walk steps followed by measuring the vertex register.
pub fn q_t(chain: &ReversibleChain, marked: &MarkedSet, s: f64, t: usize) -> Result<f64> {
    Ok(q_curve(chain, marked, s, t)?[t])
}

/// `q_t(s)` for every `t` in `0..=t_max`.
pub fn q_curve(chain: &ReversibleChain, marked: &MarkedSet, s: f64, t_max: usize) -> Result<Vec<f64>> {
    let ic = build_interpolated(chain, marked, s)?;
    let d = ic.discriminant();
    Ok(q_curve_with(&d, chain.sqrt_pi(), marked, t_max))
}

pub(crate) fn q_curve_with(d: &Discriminant<'_>, start: &[f64], marked: &MarkedSet, t_max: usize) -> Vec<f64> {
    let mut q = Vec::with_capacity(t_max + 1);
    for_each_chebyshev(d, start, t_max, |_, w| q.push(marked_mass(w, marked)));
    q
}
