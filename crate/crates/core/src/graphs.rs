//! Builders for the chain families used in the experiments: the lazy torus
//! walk with its two-scale marked grid, the segmented star, and the bipartite
//! double cover of an arbitrary chain.

use crate::chain::{MarkedSet, ReversibleChain, StochasticMatrix};
use crate::error::{Error, Result};

/// Parameters of the two-scale marked grid on the `N x N` torus.
///
/// `M1` is the dense `k1 x k1` grid of spacing `d1` at the origin and `M2` the
/// sparse grid of spacing `d` over the whole torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusSpec {
    pub n: usize,
    pub d1: usize,
    pub k1: usize,
    pub d: usize,
}

impl TorusSpec {
    pub fn new(n: usize, d1: usize, k1: usize, d: usize) -> Result<Self> {
        let spec = Self { n, d1, k1, d };
        spec.validate()?;
        Ok(spec)
    }

    /// The family `d1 = 1, k1 = a 2^(a^2), d = a^2, N = a^2 2^(a^2)`.
    pub fn family(a: u32) -> Result<Self> {
        if !(2..=4).contains(&a) {
            return Err(Error::OutOfRange {
                name: "a",
                value: a as f64,
                expected: "2 <= a <= 4",
            });
        }
        let p = 1usize << (a * a);
        let a = a as usize;
        Self::new(a * a * p, 1, a * p, a * a)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { n, d1, k1, d } = *self;
        if n < 2 || d1 == 0 || k1 == 0 || d == 0 {
            return Err(Error::SpecViolation(format!(
                "need N >= 2 and positive d1, k1, d (got N={n}, d1={d1}, k1={k1}, d={d})"
            )));
        }
        if d % d1 != 0 || n % d != 0 {
            return Err(Error::SpecViolation(format!(
                "need d1 | d and d | N (got d1={d1}, d={d}, N={n})"
            )));
        }
        if k1 * d1 > n {
            return Err(Error::SpecViolation(format!("k1 d1 = {} exceeds N = {n}", k1 * d1)));
        }
        Ok(())
    }

    /// Side of the overlap grid `M1 ∩ M2`, `ceil(k1 d1 / d)`.
    pub fn overlap_side(&self) -> usize {
        (self.k1 * self.d1).div_ceil(self.d)
    }

    /// `|M| = k1^2 + (N/d)^2 - ceil(k1 d1 / d)^2`.
    pub fn marked_count(&self) -> usize {
        let k = self.overlap_side();
        self.k1 * self.k1 + (self.n / self.d).pow(2) - k * k
    }

    /// Marked vertices as lexicographic indices `x1 * N + x2`, sorted.
    pub fn marked_vertices(&self) -> Vec<usize> {
        let Self { n, d1, k1, d } = *self;
        let mut out = Vec::with_capacity(self.marked_count());
        for x1 in 0..n {
            let in_m1_row = x1 % d1 == 0 && x1 / d1 < k1;
            let in_m2_row = x1 % d == 0;
            if !in_m1_row && !in_m2_row {
                continue;
            }
            for x2 in 0..n {
                let m1 = in_m1_row && x2 % d1 == 0 && x2 / d1 < k1;
                let m2 = in_m2_row && x2 % d == 0;
                if m1 || m2 {
                    out.push(x1 * n + x2);
                }
            }
        }
        out
    }
}

/// Finite-size values of the asymptotic conditions on a [`TorusSpec`]. All
/// three ratios should be small; no pass/fail threshold is applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma2Report {
    pub marked: usize,
    pub overlap: usize,
    /// `k1 d1 / N`.
    pub c1: f64,
    /// `N / (k1 d)`.
    pub c2: f64,
    /// `d^2 ln d / N^2`.
    pub c3: f64,
}

pub fn lemma2_report(spec: &TorusSpec) -> Result<Lemma2Report> {
    spec.validate()?;
    let n = spec.n as f64;
    let d = spec.d as f64;
    Ok(Lemma2Report {
        marked: spec.marked_count(),
        overlap: spec.overlap_side().pow(2),
        c1: (spec.k1 * spec.d1) as f64 / n,
        c2: n / (spec.k1 * spec.d) as f64,
        c3: d * d * d.ln() / (n * n),
    })
}

/// The lazy torus walk on `N x N` vertices with uniform stationary law.
pub fn torus_chain(side: usize) -> Result<ReversibleChain> {
    let m = StochasticMatrix::torus(side)?;
    let n = m.n();
    ReversibleChain::new(m, vec![1.0 / n as f64; n])
}

/// The two-scale marked set `M1 ∪ M2` on `chain`, which must be the torus of side `spec.n`.
pub fn lemma2_marked_set(chain: &ReversibleChain, spec: &TorusSpec) -> Result<MarkedSet> {
    spec.validate()?;
    if chain.matrix().torus_side() != Some(spec.n) {
        return Err(Error::SpecViolation(format!(
            "marked grid needs the torus of side {}",
            spec.n
        )));
    }
    MarkedSet::new(chain, spec.marked_vertices())
}

/// Segmented star: `k` paths of `k^2` vertices joined at a centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StarSpec {
    pub k: usize,
}

impl StarSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::SpecViolation(format!("star needs k >= 2, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn vertex_count(&self) -> usize {
        self.k.pow(3) + 1
    }

    /// Index of the vertex on path `p` at distance `dist >= 1` from the centre.
    pub fn vertex(&self, p: usize, dist: usize) -> usize {
        debug_assert!(p < self.k && (1..=self.k * self.k).contains(&dist));
        1 + p * self.k * self.k + dist - 1
    }
}

/// Walk on the segmented star that stays put with probability 1/2 and
/// otherwise moves to a uniformly chosen neighbour. The centre has index 0;
/// vertex `j` of path `p` (distance `j + 1` from the centre) has index
/// `1 + p k^2 + j`. The marked set is the whole of path 0.
pub fn segmented_star_chain(spec: StarSpec) -> Result<(ReversibleChain, MarkedSet)> {
    let k = StarSpec::new(spec.k)?.k;
    let len = k * k;
    let n = spec.vertex_count();
    let mut rows = Vec::with_capacity(n);
    let mut centre = vec![(0, 0.5)];
    centre.extend((0..k).map(|p| (spec.vertex(p, 1), 0.5 / k as f64)));
    rows.push(centre);
    let mut weight = vec![0.0; n];
    weight[0] = k as f64;
    for p in 0..k {
        for dist in 1..=len {
            let x = spec.vertex(p, dist);
            let prev = if dist == 1 { 0 } else { x - 1 };
            if dist == len {
                rows.push(vec![(prev, 0.5), (x, 0.5)]);
                weight[x] = 1.0;
            } else {
                rows.push(vec![(prev, 0.25), (x, 0.5), (x + 1, 0.25)]);
                weight[x] = 2.0;
            }
        }
    }
    // Stationary mass is proportional to graph degree; total degree is 2k^3.
    let total = 2.0 * (k as f64).powi(3);
    let pi = weight.iter().map(|w| w / total).collect();
    let chain = ReversibleChain::new(StochasticMatrix::from_rows(rows)?, pi)?;
    let marked = MarkedSet::new(&chain, (1..=len).map(|d| spec.vertex(0, d)))?;
    Ok((chain, marked))
}

/// Two copies of a chain with every transition switching copies.
///
/// Vertex `x` of copy `c` has index `c n + x`. The cover is bipartite, hence
/// always periodic; it is returned as raw parts that trajectory code can use
/// directly, and [`DoubleCover::into_chain`] reports the periodicity.
#[derive(Clone, Debug)]
pub struct DoubleCover {
    pub matrix: StochasticMatrix,
    pub pi: Vec<f64>,
    /// The original marked vertices, embedded in copy 0.
    pub marked: Vec<usize>,
}

pub fn bipartite_double_cover(chain: &ReversibleChain, marked: &[usize]) -> Result<DoubleCover> {
    let n = chain.n();
    if let Some(&x) = marked.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidMarkedSet(format!("vertex {x} outside [0, {n})")));
    }
    let mut rows = Vec::with_capacity(2 * n);
    for copy in 0..2 {
        let other = (1 - copy) * n;
        for x in 0..n {
            rows.push(chain.matrix().row(x).into_iter().map(|(y, p)| (other + y, p)).collect());
        }
    }
    let pi = chain.pi().iter().chain(chain.pi()).map(|p| p / 2.0).collect();
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    Ok(DoubleCover {
        matrix: StochasticMatrix::from_rows(rows)?,
        pi,
        marked,
    })
}

impl DoubleCover {
    /// Validates the cover as an ergodic reversible chain. Because every edge
    /// switches copies this always fails with `ResultNotErgodic`.
    pub fn into_chain(self) -> Result<(ReversibleChain, MarkedSet)> {
        match ReversibleChain::new(self.matrix, self.pi) {
            Ok(chain) => {
                let marked = MarkedSet::new(&chain, self.marked)?;
                Ok((chain, marked))
            }
            Err(Error::NonErgodic(why)) => Err(Error::ResultNotErgodic(why)),
            Err(e) => Err(e),
        }
    }
}
