//! Finite Markov chains: row-stochastic matrices, reversible chains with their
//! stationary distribution, marked sets and discriminant operators.

use std::collections::VecDeque;
use std::fmt::Write as _;

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricOperator};

/// Largest chain for which dense matrices are formed.
pub const DENSE_LIMIT: usize = 5000;

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const BALANCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Compressed sparse rows with strictly increasing columns per row.
    Sparse {
        offsets: Vec<usize>,
        cols: Vec<u32>,
        probs: Vec<f64>,
    },
    /// Lazy walk on the `side x side` torus: stay or move to one of the four
    /// cyclic neighbours, each with probability 1/5. Vertex `(x1, x2)` has
    /// index `x1 * side + x2`.
    Torus { side: usize },
}

/// Row-stochastic transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    storage: Storage,
}

impl StochasticMatrix {
    /// Builds a matrix from per-row `(target, probability)` lists.
    ///
    /// Entries of a row are sorted by target, duplicate targets are summed and
    /// exact zeros are dropped. Each row must then sum to one within 1e-12.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMatrix {
                row: 0,
                reason: "matrix has no rows".into(),
            });
        }
        if n > u32::MAX as usize {
            return Err(Error::TooLarge {
                what: "sparse storage",
                n,
                limit: u32::MAX as usize,
            });
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for (x, mut row) in rows.into_iter().enumerate() {
            for &(y, p) in &row {
                if y >= n {
                    return Err(Error::InvalidMatrix {
                        row: x,
                        reason: format!("target {y} outside [0, {n})"),
                    });
                }
                if !p.is_finite() || p < 0.0 || p > 1.0 {
                    return Err(Error::InvalidMatrix {
                        row: x,
                        reason: format!("entry to {y} is {p}, not in [0, 1]"),
                    });
                }
            }
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (y, p) in row {
                if p == 0.0 {
                    continue;
                }
                if cols.len() > start && *cols.last().unwrap() as usize == y {
                    *probs.last_mut().unwrap() += p;
                } else {
                    cols.push(y as u32);
                    probs.push(p);
                }
            }
            let sum = linalg::pairwise_sum(&probs[start..]);
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix {
                    row: x,
                    reason: format!("row sums to {sum:.17}"),
                });
            }
            offsets.push(cols.len());
        }
        Ok(Self {
            n,
            storage: Storage::Sparse {
                offsets,
                cols,
                probs,
            },
        })
    }

    /// Builds a matrix from a dense row-major table.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let sparse = rows
            .iter()
            .map(|r| r.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect())
            .collect();
        Self::from_rows(sparse)
    }

    /// The lazy torus walk with matrix-free storage.
    pub fn torus(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::SpecViolation(format!("torus side {side} < 2")));
        }
        let n = side
            .checked_mul(side)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or(Error::TooLarge {
                what: "torus",
                n: side,
                limit: 65535,
            })?;
        Ok(Self {
            n,
            storage: Storage::Torus { side },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Side length when the matrix is the lazy torus walk.
    pub fn torus_side(&self) -> Option<usize> {
        match self.storage {
            Storage::Torus { side } => Some(side),
            Storage::Sparse { .. } => None,
        }
    }

    /// Number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse { cols, .. } => cols.len(),
            Storage::Torus { side } => {
                if *side == 2 {
                    3 * self.n
                } else {
                    5 * self.n
                }
            }
        }
    }

    /// Calls `f(target, probability)` for every nonzero of row `x`, in a fixed
    /// order that depends only on the matrix.
    #[inline]
    pub fn for_each_in_row<F: FnMut(usize, f64)>(&self, x: usize, mut f: F) {
        match &self.storage {
            Storage::Sparse {
                offsets,
                cols,
                probs,
            } => {
                for e in offsets[x]..offsets[x + 1] {
                    f(cols[e] as usize, probs[e]);
                }
            }
            Storage::Torus { side } => {
                let side = *side;
                let (i, j) = (x / side, x % side);
                let up = if i + 1 == side { 0 } else { i + 1 };
                let down = if i == 0 { side - 1 } else { i - 1 };
                let right = if j + 1 == side { 0 } else { j + 1 };
                let left = if j == 0 { side - 1 } else { j - 1 };
                if side == 2 {
                    f(x, 0.2);
                    f(up * side + j, 0.4);
                    f(i * side + right, 0.4);
                } else {
                    f(down * side + j, 0.2);
                    f(i * side + left, 0.2);
                    f(x, 0.2);
                    f(i * side + right, 0.2);
                    f(up * side + j, 0.2);
                }
            }
        }
    }

    /// Materialized row `x`, sorted by target.
    pub fn row(&self, x: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(5);
        self.for_each_in_row(x, |y, p| out.push((y, p)));
        out.sort_by_key(|e| e.0);
        out
    }

    /// Entry `P[x][y]`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match &self.storage {
            Storage::Sparse {
                offsets,
                cols,
                probs,
            } => {
                let slice = &cols[offsets[x]..offsets[x + 1]];
                match slice.binary_search(&(y as u32)) {
                    Ok(k) => probs[offsets[x] + k],
                    Err(_) => 0.0,
                }
            }
            Storage::Torus { .. } => {
                let mut v = 0.0;
                self.for_each_in_row(x, |t, p| {
                    if t == y {
                        v = p;
                    }
                });
                v
            }
        }
    }

    /// Column vector product `P v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        linalg::par_fill(&mut out, |x| {
            let mut acc = 0.0;
            self.for_each_in_row(x, |y, p| acc += p * v[y]);
            acc
        });
        out
    }

    /// Row vector product `v P`.
    ///
    /// Sparse storage scatters sequentially so the summation order is fixed;
    /// the torus walk is symmetric and reuses [`StochasticMatrix::apply`].
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        if self.torus_side().is_some() {
            return self.apply(v);
        }
        let mut out = vec![0.0; self.n];
        for (x, &vx) in v.iter().enumerate() {
            if vx != 0.0 {
                self.for_each_in_row(x, |y, p| out[y] += vx * p);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<Mat<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                what: "dense transition matrix",
                n: self.n,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for x in 0..self.n {
            self.for_each_in_row(x, |y, p| m[(x, y)] += p);
        }
        Ok(m)
    }

    /// 64-bit FNV-1a digest of the matrix contents, used as a chain identifier.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |w: u64| {
            for b in w.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        match &self.storage {
            Storage::Torus { side } => {
                eat(u64::MAX);
                eat(*side as u64);
            }
            Storage::Sparse { .. } => {
                eat(self.n as u64);
                for x in 0..self.n {
                    self.for_each_in_row(x, |y, p| {
                        eat(y as u64);
                        eat(p.to_bits());
                    });
                }
            }
        }
        h
    }

    /// Checks strong connectivity and aperiodicity of the transition graph.
    ///
    /// The torus walk is connected and has self-loops, so it is accepted
    /// without traversal. Sparse matrices get a forward and a backward
    /// breadth-first search from vertex 0, then the period is the gcd of
    /// `level(u) + 1 - level(v)` over all edges.
    pub fn check_ergodic(&self) -> Result<()> {
        if self.torus_side().is_some() {
            return Ok(());
        }
        let n = self.n;
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            let next = level[u] + 1;
            self.for_each_in_row(u, |v, _| {
                if level[v] == usize::MAX {
                    level[v] = next;
                    queue.push_back(v);
                }
            });
        }
        if let Some(v) = level.iter().position(|&l| l == usize::MAX) {
            return Err(Error::NonErgodic(format!("vertex {v} unreachable from 0")));
        }

        let mut rev_offsets = vec![0usize; n + 1];
        for x in 0..n {
            self.for_each_in_row(x, |y, _| rev_offsets[y + 1] += 1);
        }
        for i in 0..n {
            rev_offsets[i + 1] += rev_offsets[i];
        }
        let mut fill = rev_offsets.clone();
        let mut rev = vec![0u32; rev_offsets[n]];
        for x in 0..n {
            self.for_each_in_row(x, |y, _| {
                rev[fill[y]] = x as u32;
                fill[y] += 1;
            });
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &w in &rev[rev_offsets[u]..rev_offsets[u + 1]] {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::NonErgodic(format!("vertex 0 unreachable from {v}")));
        }

        let mut period = 0usize;
        for u in 0..n {
            self.for_each_in_row(u, |v, _| {
                let diff = (level[u] + 1).abs_diff(level[v]);
                period = gcd(period, diff);
            });
            if period == 1 {
                return Ok(());
            }
        }
        Err(Error::NonErgodic(format!("chain has period {period}")))
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_distribution(pi: &[f64], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "length {} for a chain on {n} vertices",
            pi.len()
        )));
    }
    if let Some(x) = pi.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {x} is {}",
            pi[x]
        )));
    }
    let sum = linalg::sum_by(n, |i| pi[i]);
    if (sum - 1.0).abs() > STATIONARY_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum:.17}")));
    }
    Ok(())
}

fn check_stationary(matrix: &StochasticMatrix, pi: &[f64]) -> Result<()> {
    let pi_p = matrix.left_apply(pi);
    let bad = (0..pi.len())
        .into_par_iter()
        .find_first(|&x| (pi_p[x] - pi[x]).abs() > STATIONARY_TOL);
    if let Some(vertex) = bad {
        return Err(Error::NotStationary {
            vertex,
            deviation: (pi_p[vertex] - pi[vertex]).abs(),
        });
    }
    Ok(())
}

/// Checks `pi_x P_xy = pi_y P_yx` on every stored edge within 1e-10.
pub fn check_detailed_balance(matrix: &StochasticMatrix, pi: &[f64]) -> Result<()> {
    for x in 0..matrix.n() {
        let mut bad = None;
        matrix.for_each_in_row(x, |y, p| {
            if bad.is_none() && y > x {
                let dev = (pi[x] * p - pi[y] * matrix.get(y, x)).abs();
                if dev > BALANCE_TOL {
                    bad = Some((y, dev));
                }
            }
        });
        if let Some((y, deviation)) = bad {
            return Err(Error::NotReversible { x, y, deviation });
        }
    }
    // Reverse edges that are missing from the forward pattern.
    for x in 0..matrix.n() {
        let mut bad = None;
        matrix.for_each_in_row(x, |y, p| {
            if bad.is_none() && y < x && matrix.get(y, x) == 0.0 && pi[x] * p > BALANCE_TOL {
                bad = Some((y, pi[x] * p));
            }
        });
        if let Some((y, deviation)) = bad {
            return Err(Error::NotReversible { x, y, deviation });
        }
    }
    Ok(())
}

/// Stationary distribution of an ergodic chain.
///
/// Chains with at most [`DENSE_LIMIT`] vertices are solved directly by an LU
/// factorization of `P^T - I` with one equation replaced by normalization.
/// The torus walk is doubly stochastic and yields the uniform vector. Other
/// large chains fall back to lazy power iteration.
pub fn stationary_distribution(matrix: &StochasticMatrix) -> Result<Vec<f64>> {
    matrix.check_ergodic()?;
    let n = matrix.n();
    if matrix.torus_side().is_some() {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let mut pi = if n <= DENSE_LIMIT {
        stationary_dense(matrix)?
    } else {
        stationary_power(matrix, 1e-13, 1_000_000)?
    };
    for p in &mut pi {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum = linalg::sum_by(n, |i| pi[i]);
    pi.iter_mut().for_each(|p| *p /= sum);
    check_stationary(matrix, &pi)?;
    Ok(pi)
}

fn stationary_dense(matrix: &StochasticMatrix) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let n = matrix.n();
    let p = matrix.to_dense()?;
    let mut a = Mat::<f64>::from_fn(n, n, |i, j| p[(j, i)] - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = Mat::<f64>::zeros(n, 1);
    rhs[(n - 1, 0)] = 1.0;
    let x = a.partial_piv_lu().solve(&rhs);
    let pi: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("stationary solve produced non-finite values".into()));
    }
    Ok(pi)
}

/// Power iteration for the stationary distribution on the lazy chain
/// `(I + P) / 2`, stopped once `max |pi P - pi| < tol`.
pub fn stationary_power(matrix: &StochasticMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = matrix.n();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let next = matrix.left_apply(&pi);
        let resid = next
            .iter()
            .zip(&pi)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if resid < tol {
            return Ok(pi);
        }
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach residual {tol:e} in {max_iter} iterations"
    )))
}

/// Time reversal `P* = diag(pi)^-1 P^T diag(pi)` of a chain with stationary
/// distribution `pi`. The chain need not be reversible.
pub fn time_reversal(matrix: &StochasticMatrix, pi: &[f64]) -> Result<StochasticMatrix> {
    check_distribution(pi, matrix.n())?;
    check_stationary(matrix, pi)?;
    if matrix.torus_side().is_some() {
        // Symmetric with uniform stationary law, hence self-reversed.
        return Ok(matrix.clone());
    }
    let n = matrix.n();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for y in 0..n {
        matrix.for_each_in_row(y, |x, p| rows[x].push((y, pi[y] * p / pi[x])));
    }
    // Division by pi leaves rounding in the row sums; renormalize within it.
    for row in &mut rows {
        let s: f64 = linalg::pairwise_sum(&row.iter().map(|e| e.1).collect::<Vec<_>>());
        row.iter_mut().for_each(|e| e.1 /= s);
    }
    StochasticMatrix::from_rows(rows)
}

/// A stochastic matrix together with its verified stationary distribution.
#[derive(Clone, Debug)]
pub struct ReversibleChain {
    matrix: StochasticMatrix,
    pi: Vec<f64>,
    sqrt_pi: Vec<f64>,
    /// `sqrt(P_xy P_yx)` per stored entry of sparse storage.
    disc: Option<Vec<f64>>,
}

impl ReversibleChain {
    /// Validates `pi` against `matrix`: distribution, stationarity to 1e-10,
    /// detailed balance to 1e-10 and ergodicity.
    pub fn new(matrix: StochasticMatrix, pi: Vec<f64>) -> Result<Self> {
        check_distribution(&pi, matrix.n())?;
        if let Some(x) = pi.iter().position(|&p| p == 0.0) {
            return Err(Error::NonErgodic(format!("stationary mass of vertex {x} is 0")));
        }
        check_stationary(&matrix, &pi)?;
        check_detailed_balance(&matrix, &pi)?;
        matrix.check_ergodic()?;
        Ok(Self::assemble(matrix, pi))
    }

    /// Computes the stationary distribution, then validates as in [`ReversibleChain::new`].
    pub fn from_matrix(matrix: StochasticMatrix) -> Result<Self> {
        let pi = stationary_distribution(&matrix)?;
        Self::new(matrix, pi)
    }

    fn assemble(matrix: StochasticMatrix, pi: Vec<f64>) -> Self {
        let sqrt_pi = pi.iter().map(|p| p.sqrt()).collect();
        let disc = match &matrix.storage {
            Storage::Torus { .. } => None,
            Storage::Sparse {
                offsets,
                cols,
                probs,
            } => {
                let mut d = vec![0.0; probs.len()];
                d.par_chunks_mut(linalg::ROW_CHUNK)
                    .enumerate()
                    .for_each(|(c, chunk)| {
                        let base = c * linalg::ROW_CHUNK;
                        // Entry index -> row via binary search on offsets.
                        let mut x = offsets.partition_point(|&o| o <= base) - 1;
                        for (k, v) in chunk.iter_mut().enumerate() {
                            let e = base + k;
                            while offsets[x + 1] <= e {
                                x += 1;
                            }
                            let y = cols[e] as usize;
                            *v = if x == y {
                                probs[e]
                            } else {
                                (probs[e] * matrix.get(y, x)).sqrt()
                            };
                        }
                    });
                Some(d)
            }
        };
        Self {
            matrix,
            pi,
            sqrt_pi,
            disc,
        }
    }

    pub fn matrix(&self) -> &StochasticMatrix {
        &self.matrix
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn sqrt_pi(&self) -> &[f64] {
        &self.sqrt_pi
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    /// Row vector product `v P`, computed as `pi * (P (v / pi))` so that it
    /// parallelizes as a gather.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = v.iter().zip(&self.pi).map(|(a, p)| a / p).collect();
        let mut out = self.matrix.apply(&scaled);
        out.iter_mut().zip(&self.pi).for_each(|(o, p)| *o *= p);
        out
    }

    pub fn time_reversal(&self) -> Result<StochasticMatrix> {
        time_reversal(&self.matrix, &self.pi)
    }

    /// Discriminant of the chain itself.
    pub fn discriminant(&self) -> Discriminant<'_> {
        Discriminant::new(self)
    }

    /// Calls `f(y, D_xy)` for every stored entry of row `x` of the discriminant.
    #[inline]
    pub(crate) fn for_each_disc_in_row<F: FnMut(usize, f64)>(&self, x: usize, mut f: F) {
        match (&self.matrix.storage, &self.disc) {
            (Storage::Sparse { offsets, cols, .. }, Some(d)) => {
                for e in offsets[x]..offsets[x + 1] {
                    f(cols[e] as usize, d[e]);
                }
            }
            _ => self.matrix.for_each_in_row(x, f),
        }
    }
}

/// Set of marked vertices with its stationary mass.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedSet {
    members: Vec<usize>,
    mask: Vec<bool>,
    p_m: f64,
}

impl MarkedSet {
    /// Marked set of `chain`. Members are sorted and deduplicated; the set
    /// must be nonempty and must leave at least one vertex unmarked.
    pub fn new(chain: &ReversibleChain, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::with_distribution(chain.pi(), members)
    }

    /// Marked set measured against an arbitrary probability vector.
    pub fn with_distribution(pi: &[f64], members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = pi.len();
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidMarkedSet("marked set is empty".into()));
        }
        if let Some(&x) = members.iter().find(|&&x| x >= n) {
            return Err(Error::InvalidMarkedSet(format!("vertex {x} outside [0, {n})")));
        }
        if members.len() == n {
            return Err(Error::InvalidMarkedSet(
                "every vertex is marked, so no unmarked start exists".into(),
            ));
        }
        let mut mask = vec![false; n];
        for &x in &members {
            mask[x] = true;
        }
        let p_m = linalg::sum_by(members.len(), |i| pi[members[i]]);
        Ok(Self { members, mask, p_m })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.mask[x]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Stationary mass of the marked set.
    pub fn p_m(&self) -> f64 {
        self.p_m
    }

    /// Unmarked vertices in increasing order.
    pub fn unmarked(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| !self.mask[x]).collect()
    }
}

/// Symmetric discriminant operator `D(s)` of a reversible chain, with `s = 0`
/// and no marked set giving the plain discriminant.
///
/// For a reversible chain `D_xy = sqrt(P_xy P_yx)`. Interpolation scales
/// off-diagonal entries touching a marked vertex by `sqrt(1 - s)` per marked
/// endpoint and adds `s` to marked diagonal entries, that is
/// `D(s) = C D C + s Pi_M` with `C = diag(sqrt(1 - s) on M, 1 on U)`.
#[derive(Clone)]
pub struct Discriminant<'a> {
    chain: &'a ReversibleChain,
    marked: Option<&'a MarkedSet>,
    s: f64,
    scale_marked: f64,
}

impl<'a> Discriminant<'a> {
    pub fn new(chain: &'a ReversibleChain) -> Self {
        Self {
            chain,
            marked: None,
            s: 0.0,
            scale_marked: 1.0,
        }
    }

    /// Discriminant of the interpolated chain `P(s)`; `s` must be in `[0, 1]`.
    /// At `s = 1` this is the discriminant of the absorbing walk.
    pub fn interpolated(chain: &'a ReversibleChain, marked: &'a MarkedSet, s: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&s));
        Self {
            chain,
            marked: Some(marked),
            s,
            scale_marked: (1.0 - s).sqrt(),
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn chain(&self) -> &'a ReversibleChain {
        self.chain
    }

    #[inline]
    fn scale(&self, x: usize) -> f64 {
        match self.marked {
            Some(m) if m.contains(x) => self.scale_marked,
            _ => 1.0,
        }
    }

    #[inline]
    fn shift(&self, x: usize) -> f64 {
        match self.marked {
            Some(m) if m.contains(x) => self.s,
            _ => 0.0,
        }
    }

    /// The `+1` eigenvector `sqrt(pi(s))`.
    pub fn top_eigenvector(&self) -> Vec<f64> {
        match self.marked {
            None => self.chain.sqrt_pi.clone(),
            Some(m) => crate::interpolate::interpolated_pi(self.chain.pi(), m, self.s)
                .into_iter()
                .map(f64::sqrt)
                .collect(),
        }
    }

    /// Entry `D(s)_xy`.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        let mut d = 0.0;
        self.chain.for_each_disc_in_row(x, |t, v| {
            if t == y {
                d += v;
            }
        });
        self.scale(x) * d * self.scale(y) + if x == y { self.shift(x) } else { 0.0 }
    }

    pub fn to_dense(&self) -> Result<Mat<f64>> {
        let n = self.chain.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                what: "dense discriminant",
                n,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = Mat::<f64>::zeros(n, n);
        for x in 0..n {
            let cx = self.scale(x);
            self.chain
                .for_each_disc_in_row(x, |y, d| m[(x, y)] += cx * d * self.scale(y));
            m[(x, x)] += self.shift(x);
        }
        Ok(m)
    }
}

impl SymmetricOperator for Discriminant<'_> {
    fn dim(&self) -> usize {
        self.chain.n()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim());
        match self.marked {
            None => linalg::par_fill(out, |x| {
                let mut acc = 0.0;
                self.chain.for_each_disc_in_row(x, |y, d| acc += d * v[y]);
                acc
            }),
            Some(m) => {
                let mask = m.mask();
                let c = self.scale_marked;
                let s = self.s;
                linalg::par_fill(out, |x| {
                    let mut acc = 0.0;
                    self.chain.for_each_disc_in_row(x, |y, d| {
                        acc += if mask[y] { c * d * v[y] } else { d * v[y] };
                    });
                    if mask[x] {
                        c * acc + s * v[x]
                    } else {
                        acc
                    }
                })
            }
        }
    }
}

/// Parsed contents of the chain text format.
#[derive(Clone, Debug)]
pub struct ChainText {
    pub matrix: StochasticMatrix,
    pub pi: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub marked: Option<Vec<usize>>,
}

/// Serializes a chain in the line-oriented text format:
///
/// ```text
/// n <count>
/// s <value>            (interpolated chains only)
/// <row> <col> <prob>   (one line per nonzero of the base matrix)
/// pi
/// <pi_0>
/// ...
/// marked               (optional)
/// <vertex>
/// ```
///
/// Floats are written with 17 significant digits so they round-trip exactly.
pub fn to_text(matrix: &StochasticMatrix, pi: Option<&[f64]>, marked: Option<&MarkedSet>, s: Option<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", matrix.n()).unwrap();
    if let Some(s) = s {
        writeln!(out, "s {s:.16e}").unwrap();
    }
    for x in 0..matrix.n() {
        for (y, p) in matrix.row(x) {
            writeln!(out, "{x} {y} {p:.16e}").unwrap();
        }
    }
    if let Some(pi) = pi {
        out.push_str("pi\n");
        for p in pi {
            writeln!(out, "{p:.16e}").unwrap();
        }
    }
    if let Some(m) = marked {
        out.push_str("marked\n");
        for x in m.members() {
            writeln!(out, "{x}").unwrap();
        }
    }
    out
}

/// Parses the text format written by [`to_text`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_text(text: &str) -> Result<ChainText> {
    #[derive(PartialEq)]
    enum Section {
        Rows,
        Pi,
        Marked,
    }
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut n: Option<usize> = None;
    let mut s = None;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut pi: Option<Vec<f64>> = None;
    let mut marked: Option<Vec<usize>> = None;
    let mut section = Section::Rows;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (fields[0], fields.len()) {
            ("n", 2) if n.is_none() => {
                let count: usize = fields[1]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad vertex count: {e}")))?;
                n = Some(count);
                rows = vec![Vec::new(); count];
                continue;
            }
            ("s", 2) => {
                s = Some(
                    fields[1]
                        .parse::<f64>()
                        .map_err(|e| perr(lineno, format!("bad s: {e}")))?,
                );
                continue;
            }
            ("pi", 1) => {
                section = Section::Pi;
                pi = Some(Vec::new());
                continue;
            }
            ("marked", 1) => {
                section = Section::Marked;
                marked = Some(Vec::new());
                continue;
            }
            _ => {}
        }
        let count = n.ok_or_else(|| perr(lineno, "missing `n <count>` header".into()))?;
        match section {
            Section::Rows => {
                if fields.len() != 3 {
                    return Err(perr(lineno, format!("expected `row col prob`, got `{line}`")));
                }
                let x: usize = fields[0].parse().map_err(|e| perr(lineno, format!("bad row: {e}")))?;
                let y: usize = fields[1].parse().map_err(|e| perr(lineno, format!("bad col: {e}")))?;
                let p: f64 = fields[2].parse().map_err(|e| perr(lineno, format!("bad prob: {e}")))?;
                if x >= count {
                    return Err(perr(lineno, format!("row {x} outside [0, {count})")));
                }
                rows[x].push((y, p));
            }
            Section::Pi => {
                let v: f64 = line.parse().map_err(|e| perr(lineno, format!("bad pi entry: {e}")))?;
                pi.as_mut().unwrap().push(v);
            }
            Section::Marked => {
                let v: usize = line
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad marked vertex: {e}")))?;
                marked.as_mut().unwrap().push(v);
            }
        }
    }
    if n.is_none() {
        return Err(perr(0, "missing `n <count>` header".into()));
    }
    let matrix = StochasticMatrix::from_rows(rows)?;
    Ok(ChainText {
        matrix,
        pi,
        s,
        marked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(a: f64, b: f64) -> ReversibleChain {
        let m = StochasticMatrix::from_dense(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        ReversibleChain::from_matrix(m).unwrap()
    }

    #[test]
    fn rows_are_sorted_and_merged() {
        let m = StochasticMatrix::from_rows(vec![vec![(1, 0.25), (0, 0.5), (1, 0.25)], vec![(0, 1.0)]]).unwrap();
        assert_eq!(m.row(0), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = StochasticMatrix::from_rows(vec![vec![(0, 0.5)]]).unwrap_err();
        assert_eq!(err.kind(), "InvalidMatrix");
        let err = StochasticMatrix::from_rows(vec![vec![(0, 1.5), (1, -0.5)], vec![(1, 1.0)]]).unwrap_err();
        assert_eq!(err.kind(), "InvalidMatrix");
        let err = StochasticMatrix::from_rows(vec![vec![(2, 1.0)], vec![(1, 1.0)]]).unwrap_err();
        assert_eq!(err.kind(), "InvalidMatrix");
    }

    #[test]
    fn uniform_two_state() {
        let c = two_state(0.5, 0.5);
        assert!((c.pi()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_state_discriminant_off_diagonal() {
        let c = two_state(0.3, 0.1);
        assert!((c.pi()[0] - 0.25).abs() < 1e-12);
        let d = c.discriminant().to_dense().unwrap();
        assert!((d[(0, 1)] - 0.03_f64.sqrt()).abs() < 1e-12);
        assert!((d[(1, 0)] - 0.03_f64.sqrt()).abs() < 1e-12);
        assert!((d[(0, 0)] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn periodic_chain_is_not_ergodic() {
        let m = StochasticMatrix::from_rows(vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        assert_eq!(stationary_distribution(&m).unwrap_err().kind(), "NonErgodic");
    }

    #[test]
    fn disconnected_chain_is_not_ergodic() {
        let m = StochasticMatrix::from_rows(vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        assert_eq!(m.check_ergodic().unwrap_err().kind(), "NonErgodic");
    }

    #[test]
    fn three_cycle_reversal_swaps_directions() {
        let rows = (0..3)
            .map(|x| vec![((x + 1) % 3, 0.7), ((x + 2) % 3, 0.2), (x, 0.1)])
            .collect();
        let m = StochasticMatrix::from_rows(rows).unwrap();
        let pi = vec![1.0 / 3.0; 3];
        assert_eq!(ReversibleChain::new(m.clone(), pi.clone()).unwrap_err().kind(), "NotReversible");
        let r = time_reversal(&m, &pi).unwrap();
        for x in 0..3 {
            assert!((r.get(x, (x + 1) % 3) - 0.2).abs() < 1e-12);
            assert!((r.get(x, (x + 2) % 3) - 0.7).abs() < 1e-12);
            assert!((r.get(x, x) - 0.1).abs() < 1e-12);
        }
        let rr = time_reversal(&r, &pi).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert!((rr.get(x, y) - m.get(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn torus_rows() {
        let t = StochasticMatrix::torus(2).unwrap();
        assert_eq!(t.row(0), vec![(0, 0.2), (1, 0.4), (2, 0.4)]);
        let t = StochasticMatrix::torus(3).unwrap();
        for x in 0..9 {
            let r = t.row(x);
            assert_eq!(r.len(), 5);
            assert!(r.iter().all(|e| e.1 == 0.2));
        }
    }

    #[test]
    fn non_stationary_pi_is_rejected() {
        let m = StochasticMatrix::from_dense(&[vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
        let err = ReversibleChain::new(m, vec![0.5, 0.5]).unwrap_err();
        assert_eq!(err.kind(), "NotStationary");
    }

    #[test]
    fn marked_set_validation() {
        let c = two_state(0.3, 0.1);
        assert_eq!(MarkedSet::new(&c, []).unwrap_err().kind(), "InvalidMarkedSet");
        assert_eq!(MarkedSet::new(&c, [5]).unwrap_err().kind(), "InvalidMarkedSet");
        assert_eq!(MarkedSet::new(&c, [0, 1]).unwrap_err().kind(), "InvalidMarkedSet");
        let m = MarkedSet::new(&c, [1, 1]).unwrap();
        assert_eq!(m.members(), &[1]);
        assert!((m.p_m() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let c = two_state(0.3, 0.1);
        let m = MarkedSet::new(&c, [1]).unwrap();
        let text = to_text(c.matrix(), Some(c.pi()), Some(&m), Some(0.5));
        let back = parse_text(&text).unwrap();
        assert_eq!(back.matrix, *c.matrix());
        assert_eq!(back.pi.as_deref(), Some(c.pi()));
        assert_eq!(back.marked, Some(vec![1]));
        assert_eq!(back.s, Some(0.5));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_text("n 2\n0 0 1.0\n1 x 1.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
