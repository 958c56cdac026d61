//! Interpolated walks `P(s) = (1 - s) P + s P'`, where `P'` makes every
//! marked vertex absorbing.

use crate::chain::{self, Discriminant, MarkedSet, ReversibleChain, StochasticMatrix};
use crate::error::{Error, Result};

/// Closed-form stationary law of `P(s)`:
/// `pi(s) = ((1 - s) pi_U + pi_M) / (1 - s (1 - p_M))`.
pub fn interpolated_pi(pi: &[f64], marked: &MarkedSet, s: f64) -> Vec<f64> {
    let z = 1.0 - s * (1.0 - marked.p_m());
    pi.iter()
        .enumerate()
        .map(|(x, &p)| if marked.contains(x) { p / z } else { (1.0 - s) * p / z })
        .collect()
}

/// Converts the sweep parameter `r = 1 / (1 - s)` to `s`.
pub fn s_from_r(r: f64) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            expected: "r >= 1",
        });
    }
    Ok(1.0 - 1.0 / r)
}

/// A reversible chain, a marked set and an interpolation parameter.
#[derive(Clone, Debug)]
pub struct InterpolatedChain<'a> {
    base: &'a ReversibleChain,
    marked: &'a MarkedSet,
    s: f64,
    pi_s: Vec<f64>,
}

/// Bundles `(base, marked, s)`; `s` must lie in `[0, 1)`.
pub fn build_interpolated<'a>(
    base: &'a ReversibleChain,
    marked: &'a MarkedSet,
    s: f64,
) -> Result<InterpolatedChain<'a>> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 <= s < 1",
        });
    }
    if marked.n() != base.n() {
        return Err(Error::InvalidMarkedSet(format!(
            "marked set is over {} vertices, chain has {}",
            marked.n(),
            base.n()
        )));
    }
    let pi_s = interpolated_pi(base.pi(), marked, s);
    Ok(InterpolatedChain {
        base,
        marked,
        s,
        pi_s,
    })
}

/// Discriminant `D(s)` of an interpolated chain.
pub fn interpolated_discriminant<'a>(ic: &InterpolatedChain<'a>) -> Discriminant<'a> {
    Discriminant::interpolated(ic.base, ic.marked, ic.s)
}

impl<'a> InterpolatedChain<'a> {
    pub fn base(&self) -> &'a ReversibleChain {
        self.base
    }

    pub fn marked(&self) -> &'a MarkedSet {
        self.marked
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi_s
    }

    pub fn discriminant(&self) -> Discriminant<'a> {
        interpolated_discriminant(self)
    }

    /// Row `x` of `P(s)`. Unmarked rows are the base rows unchanged.
    pub fn row(&self, x: usize) -> Vec<(usize, f64)> {
        let mut row = self.base.matrix().row(x);
        if self.marked.contains(x) {
            let mut has_loop = false;
            for e in &mut row {
                e.1 *= 1.0 - self.s;
                if e.0 == x {
                    e.1 += self.s;
                    has_loop = true;
                }
            }
            if !has_loop && self.s > 0.0 {
                let at = row.partition_point(|e| e.0 < x);
                row.insert(at, (x, self.s));
            }
        }
        row
    }

    /// Materializes `P(s)` as a sparse matrix.
    pub fn transition_matrix(&self) -> Result<StochasticMatrix> {
        StochasticMatrix::from_rows((0..self.base.n()).map(|x| self.row(x)).collect())
    }

    /// Row vector product `v P(s) = (w v) P + s (v on M)` with `w = 1 - s` on
    /// marked vertices and `1` elsewhere.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(x, &a)| if self.marked.contains(x) { (1.0 - self.s) * a } else { a })
            .collect();
        let mut out = self.base.left_apply(&w);
        for &x in self.marked.members() {
            out[x] += self.s * v[x];
        }
        out
    }

    /// Validates `P(s)` against `pi(s)`: stationarity and detailed balance.
    pub fn validate(&self) -> Result<()> {
        let m = self.transition_matrix()?;
        chain::check_detailed_balance(&m, &self.pi_s)?;
        let moved = m.left_apply(&self.pi_s);
        if let Some(x) = (0..m.n()).find(|&x| (moved[x] - self.pi_s[x]).abs() > 1e-10) {
            return Err(Error::NotStationary {
                vertex: x,
                deviation: (moved[x] - self.pi_s[x]).abs(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;
    use crate::linalg::SymmetricOperator;

    #[test]
    fn s_zero_is_identity() {
        let c = graphs::torus_chain(4).unwrap();
        let m = MarkedSet::new(&c, [0]).unwrap();
        let ic = build_interpolated(&c, &m, 0.0).unwrap();
        assert_eq!(ic.pi(), c.pi());
        for x in 0..16 {
            assert_eq!(ic.row(x), c.matrix().row(x));
        }
    }

    #[test]
    fn torus_half_interpolation() {
        let c = graphs::torus_chain(4).unwrap();
        let m = MarkedSet::new(&c, [0]).unwrap();
        let ic = build_interpolated(&c, &m, 0.5).unwrap();
        let row = ic.row(0);
        for &(y, p) in &row {
            let expect = if y == 0 { 0.5 * 0.2 + 0.5 } else { 0.1 };
            assert!((p - expect).abs() < 1e-15);
        }
        let z = 1.0 - 0.5 * (1.0 - 1.0 / 16.0);
        assert!((ic.pi()[0] - (1.0 / 16.0) / z).abs() < 1e-15);
        assert!((ic.pi()[5] - 0.5 / 16.0 / z).abs() < 1e-15);
        ic.validate().unwrap();
    }

    #[test]
    fn rejects_s_outside_unit_interval() {
        let c = graphs::torus_chain(3).unwrap();
        let m = MarkedSet::new(&c, [0]).unwrap();
        assert_eq!(build_interpolated(&c, &m, 1.0).unwrap_err().kind(), "OutOfRange");
        assert_eq!(build_interpolated(&c, &m, -0.1).unwrap_err().kind(), "OutOfRange");
    }

    #[test]
    fn two_state_discriminant_by_hand() {
        let a: f64 = 0.3;
        let b: f64 = 0.1;
        let s = 0.5;
        let p = StochasticMatrix::from_dense(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        let c = ReversibleChain::from_matrix(p).unwrap();
        let m = MarkedSet::new(&c, [1]).unwrap();
        let ic = build_interpolated(&c, &m, s).unwrap();
        let d = ic.discriminant().to_dense().unwrap();
        // P(s) = [[1-a, a], [(1-s) b, (1-s)(1-b) + s]], pi(s) prop. to (b (1-s), a).
        let pi0 = b * (1.0 - s) / (b * (1.0 - s) + a);
        let pi1 = 1.0 - pi0;
        let off = (pi0 / pi1).sqrt() * a;
        assert!((d[(0, 1)] - off).abs() < 1e-14);
        assert!((d[(1, 0)] - off).abs() < 1e-14);
        assert!((d[(0, 0)] - (1.0 - a)).abs() < 1e-14);
        assert!((d[(1, 1)] - ((1.0 - s) * (1.0 - b) + s)).abs() < 1e-14);
        let v = ic.discriminant().top_eigenvector();
        let dv = ic.discriminant().apply_vec(&v);
        assert!((dv[0] - v[0]).abs() < 1e-14 && (dv[1] - v[1]).abs() < 1e-14);
    }

    #[test]
    fn mass_on_marked_tends_to_one() {
        let c = graphs::torus_chain(5).unwrap();
        let m = MarkedSet::new(&c, [3, 7]).unwrap();
        let mut last = 0.0;
        for r in [1.0, 10.0, 1e3, 1e6] {
            let pi = interpolated_pi(c.pi(), &m, s_from_r(r).unwrap());
            let mass: f64 = m.members().iter().map(|&x| pi[x]).sum();
            assert!(mass >= last);
            last = mass;
        }
        assert!(last > 1.0 - 1e-4);
    }
}
