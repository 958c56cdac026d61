//! Hitting times: the classical hitting time by linear solve, spectral sum and
//! simulation, the interpolated hitting time `HT(s)`, the extended hitting
//! time `HT+`, and closed forms for the lazy torus walk.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::chain::{Discriminant, MarkedSet, ReversibleChain, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::graphs::TorusSpec;
use crate::interpolate::interpolated_pi;
use crate::linalg::{self, SymmetricOperator};
use crate::rng;

/// Largest unmarked set accepted by [`hitting_time_exact`].
pub const SOLVE_LIMIT: usize = 1_000_000;

const CG_TOL: f64 = 1e-10;

/// How a hitting-time value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactSolve,
    Neumann,
    MonteCarlo,
    Spectral,
    TorusClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactSolve => "exact-solve",
            Method::Neumann => "neumann",
            Method::MonteCarlo => "monte-carlo",
            Method::Spectral => "spectral",
            Method::TorusClosedForm => "torus-closed-form",
        }
    }
}

/// A hitting-time value with provenance.
///
/// `error_bound` is an absolute bound for deterministic methods and the 95%
/// half-width for Monte Carlo. `meta` carries iteration or sample counts and
/// method-specific diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTimeReport {
    pub value: f64,
    pub method: Method,
    pub error_bound: f64,
    pub seed: Option<u64>,
    pub meta: Vec<(&'static str, f64)>,
}

impl HittingTimeReport {
    pub fn meta(&self, key: &str) -> Option<f64> {
        self.meta.iter().find(|(k, _)| *k == key).map(|e| e.1)
    }
}

/// Converts the convention used here (start from `pi` conditioned on `U`)
/// to the unconditional one (start from `pi`, zero time if the start is marked).
pub fn unconditional_hitting_time(conditional: f64, marked: &MarkedSet) -> f64 {
    (1.0 - marked.p_m()) * conditional
}

/// Solver used by [`hitting_time_exact_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Dense Cholesky up to 5000 unmarked vertices, conjugate gradients above.
    #[default]
    Auto,
    Dense,
    ConjugateGradient,
    Neumann,
}

/// Unmarked vertices with their positions.
struct Unmarked {
    list: Vec<usize>,
    /// Position in `list`, or `u32::MAX` for marked vertices.
    index: Vec<u32>,
}

impl Unmarked {
    fn new(marked: &MarkedSet) -> Self {
        let list = marked.unmarked();
        let mut index = vec![u32::MAX; marked.n()];
        for (i, &x) in list.iter().enumerate() {
            index[x] = i as u32;
        }
        Self { list, index }
    }
}

/// `I - D_UU`, the discriminant restricted to unmarked vertices, subtracted
/// from the identity. Symmetric positive definite for an ergodic chain.
struct RestrictedOperator<'a> {
    chain: &'a ReversibleChain,
    u: &'a Unmarked,
}

impl SymmetricOperator for RestrictedOperator<'_> {
    fn dim(&self) -> usize {
        self.u.list.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        linalg::par_fill(out, |i| {
            let x = self.u.list[i];
            let mut acc = 0.0;
            self.chain.for_each_disc_in_row(x, |y, d| {
                let j = self.u.index[y];
                if j != u32::MAX {
                    acc += d * v[j as usize];
                }
            });
            v[i] - acc
        });
    }
}

fn check_compatible(chain: &ReversibleChain, marked: &MarkedSet) -> Result<()> {
    if marked.n() != chain.n() {
        return Err(Error::InvalidMarkedSet(format!(
            "marked set is over {} vertices, chain has {}",
            marked.n(),
            chain.n()
        )));
    }
    Ok(())
}

/// Classical hitting time `HT = sum_{x in U} (pi_x / p_U) h_x`, where `h`
/// solves `(I - P_UU) h = 1`.
pub fn hitting_time_exact(chain: &ReversibleChain, marked: &MarkedSet) -> Result<HittingTimeReport> {
    hitting_time_exact_with(chain, marked, SolveMethod::Auto)
}

/// [`hitting_time_exact`] with an explicit solver.
///
/// The symmetric form `(I - D_UU) g = sqrt(pi_U)`, `h = g / sqrt(pi_U)` is
/// solved so that Cholesky and conjugate gradients apply. The reported bound
/// is `max(h) rho / (1 - rho)` with `rho = || 1 - (I - P_UU) h ||_inf`, which
/// bounds the error of every `h_x` and hence of the weighted mean.
pub fn hitting_time_exact_with(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    method: SolveMethod,
) -> Result<HittingTimeReport> {
    check_compatible(chain, marked)?;
    let u = Unmarked::new(marked);
    let nu = u.list.len();
    if nu > SOLVE_LIMIT {
        return Err(Error::TooLarge {
            what: "hitting-time solve",
            n: nu,
            limit: SOLVE_LIMIT,
        });
    }
    let sqrt_pi = chain.sqrt_pi();
    let b: Vec<f64> = u.list.iter().map(|&x| sqrt_pi[x]).collect();
    let method = match method {
        SolveMethod::Auto if nu <= DENSE_LIMIT => SolveMethod::Dense,
        SolveMethod::Auto => SolveMethod::ConjugateGradient,
        m => m,
    };
    let op = RestrictedOperator { chain, u: &u };
    let (h, iterations, label) = match method {
        SolveMethod::Dense => {
            if nu > DENSE_LIMIT {
                return Err(Error::TooLarge {
                    what: "dense hitting-time solve",
                    n: nu,
                    limit: DENSE_LIMIT,
                });
            }
            let a = restricted_dense(chain, &u);
            let llt = a
                .llt(Side::Lower)
                .map_err(|e| Error::Numerical(format!("Cholesky of I - D_UU failed: {e:?}")))?;
            let rhs = Mat::<f64>::from_fn(nu, 1, |i, _| b[i]);
            let g = llt.solve(&rhs);
            let h: Vec<f64> = (0..nu).map(|i| g[(i, 0)] / b[i]).collect();
            (h, 1, Method::ExactSolve)
        }
        SolveMethod::ConjugateGradient => {
            let (g, it) = conjugate_gradient(&op, &b, CG_TOL, 20 * nu + 1000)?;
            let h: Vec<f64> = g.iter().zip(&b).map(|(g, b)| g / b).collect();
            (h, it, Method::ExactSolve)
        }
        SolveMethod::Neumann => {
            let (h, it) = neumann(chain, &u, CG_TOL, 100_000_000 / nu.max(1) + 10_000)?;
            (h, it, Method::Neumann)
        }
        SolveMethod::Auto => unreachable!(),
    };
    let rho = residual_inf(chain, &u, &h);
    let h_max = linalg::max_abs(&h);
    let error_bound = if rho < 1.0 {
        h_max * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let p_u = 1.0 - marked.p_m();
    let value = linalg::sum_by(nu, |i| chain.pi()[u.list[i]] * h[i]) / p_u;
    Ok(HittingTimeReport {
        value,
        method: label,
        error_bound,
        seed: None,
        meta: vec![
            ("iterations", iterations as f64),
            ("residual", rho),
            ("unmarked", nu as f64),
        ],
    })
}

fn restricted_dense(chain: &ReversibleChain, u: &Unmarked) -> Mat<f64> {
    let nu = u.list.len();
    let mut a = Mat::<f64>::identity(nu, nu);
    for (i, &x) in u.list.iter().enumerate() {
        chain.for_each_disc_in_row(x, |y, d| {
            let j = u.index[y];
            if j != u32::MAX {
                a[(i, j as usize)] -= d;
            }
        });
    }
    a
}

fn residual_inf(chain: &ReversibleChain, u: &Unmarked, h: &[f64]) -> f64 {
    let mut r = vec![0.0; h.len()];
    linalg::par_fill(&mut r, |i| {
        let mut acc = h[i];
        chain.matrix().for_each_in_row(u.list[i], |y, p| {
            let j = u.index[y];
            if j != u32::MAX {
                acc -= p * h[j as usize];
            }
        });
        (1.0 - acc).abs()
    });
    linalg::max_abs(&r)
}

/// Conjugate gradients for a symmetric positive definite operator, stopped
/// at relative residual `tol`.
pub fn conjugate_gradient<A: SymmetricOperator>(
    a: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = linalg::norm_sq(b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut rr = linalg::norm_sq(&r);
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let pap = linalg::dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDivergence {
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        let alpha = rr / pap;
        linalg::axpby(alpha, &p, 1.0, &mut x);
        linalg::axpby(-alpha, &ap, 1.0, &mut r);
        let rr_new = linalg::norm_sq(&r);
        if rr_new.sqrt() <= tol * b_norm {
            return Ok((x, it));
        }
        linalg::axpby(1.0, &r, rr_new / rr, &mut p);
        rr = rr_new;
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
    })
}

/// Fixed-point iteration `h <- 1 + P_UU h`, which converges because `P_UU`
/// is strictly substochastic on an ergodic chain.
fn neumann(chain: &ReversibleChain, u: &Unmarked, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let nu = u.list.len();
    let mut h = vec![1.0; nu];
    let mut next = vec![0.0; nu];
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        linalg::par_fill(&mut next, |i| {
            let mut acc = 1.0;
            chain.matrix().for_each_in_row(u.list[i], |y, p| {
                let j = u.index[y];
                if j != u32::MAX {
                    acc += p * h[j as usize];
                }
            });
            acc
        });
        change = next
            .iter()
            .zip(&h)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut h, &mut next);
        if change <= tol {
            return Ok((h, it));
        }
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: change,
    })
}

/// Symmetric eigendecomposition of a discriminant with the squared overlaps
/// of each eigenvector with a target vector.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Mat<f64>,
    /// `|<v_k | target>|^2`.
    pub overlaps: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn new(matrix: &Mat<f64>, target: &[f64]) -> Result<Self> {
        let eig = matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let n = matrix.nrows();
        let s = eig.S();
        let u = eig.U();
        let eigenvalues: Vec<f64> = (0..n).map(|k| s[k]).collect();
        let eigenvectors = u.to_owned();
        let overlaps = (0..n)
            .map(|k| {
                let terms: Vec<f64> = (0..n).map(|i| eigenvectors[(i, k)] * target[i]).collect();
                linalg::pairwise_sum(&terms).powi(2)
            })
            .collect();
        Ok(Self {
            eigenvalues,
            eigenvectors,
            overlaps,
        })
    }

    /// `max |sum_k lambda_k v_k v_k^T - matrix|`.
    pub fn reconstruction_error(&self, matrix: &Mat<f64>) -> f64 {
        let n = matrix.nrows();
        let v = &self.eigenvectors;
        let scaled = Mat::<f64>::from_fn(n, n, |i, k| v[(i, k)] * self.eigenvalues[k]);
        let rec = &scaled * v.transpose();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((rec[(i, j)] - matrix[(i, j)]).abs());
            }
        }
        worst
    }

    /// `sum_k overlap_k / (1 - lambda_k)` over all but the largest eigenvalue,
    /// which must be separated from the next by more than 1e-12.
    fn resolvent_sum_excluding_top(&self) -> Result<f64> {
        let n = self.eigenvalues.len();
        if n < 2 {
            return Ok(0.0);
        }
        let second = self.eigenvalues[n - 2];
        if second > 1.0 - 1e-12 {
            return Err(Error::DegenerateTopEigenvalue { second });
        }
        let terms: Vec<f64> = (0..n - 1)
            .map(|k| self.overlaps[k] / (1.0 - self.eigenvalues[k]))
            .collect();
        Ok(linalg::pairwise_sum(&terms))
    }
}

fn sqrt_pi_unmarked(chain: &ReversibleChain, marked: &MarkedSet) -> Vec<f64> {
    chain
        .sqrt_pi()
        .iter()
        .enumerate()
        .map(|(x, &v)| if marked.contains(x) { 0.0 } else { v })
        .collect()
}

fn require_dense(n: usize, what: &'static str) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what,
            n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Classical hitting time from the spectrum of the absorbing discriminant:
/// `HT = 1/(1 - p_M) sum_k |<v'_k | sqrt(pi_U)>|^2 / (1 - lambda'_k)` over the
/// eigenpairs of `D_UU`.
pub fn hitting_time_spectral(chain: &ReversibleChain, marked: &MarkedSet) -> Result<HittingTimeReport> {
    check_compatible(chain, marked)?;
    let u = Unmarked::new(marked);
    require_dense(u.list.len(), "spectral hitting time")?;
    let mut a = restricted_dense(chain, &u);
    // restricted_dense gives I - D_UU; flip it back to D_UU.
    let nu = u.list.len();
    for i in 0..nu {
        for j in 0..nu {
            a[(i, j)] = if i == j { 1.0 - a[(i, j)] } else { -a[(i, j)] };
        }
    }
    let target: Vec<f64> = u.list.iter().map(|&x| chain.sqrt_pi()[x]).collect();
    let dec = SpectralDecomposition::new(&a, &target)?;
    if let Some(&top) = dec.eigenvalues.last() {
        if top > 1.0 - 1e-12 {
            return Err(Error::DegenerateTopEigenvalue { second: top });
        }
    }
    let terms: Vec<f64> = (0..nu)
        .map(|k| dec.overlaps[k] / (1.0 - dec.eigenvalues[k]))
        .collect();
    let value = linalg::pairwise_sum(&terms) / (1.0 - marked.p_m());
    Ok(HittingTimeReport {
        value,
        method: Method::Spectral,
        error_bound: value * 1e-10,
        seed: None,
        meta: vec![("eigenpairs", nu as f64)],
    })
}

/// Interpolated hitting time
/// `HT(s) = 1/(1 - p_M) sum_{k < n} |<v_k(s) | sqrt(pi_U)>|^2 / (1 - lambda_k(s))`
/// by dense eigendecomposition of `D(s)`.
pub fn interpolated_hitting_time(chain: &ReversibleChain, marked: &MarkedSet, s: f64) -> Result<f64> {
    check_compatible(chain, marked)?;
    check_s(s)?;
    require_dense(chain.n(), "interpolated hitting time")?;
    let d = Discriminant::interpolated(chain, marked, s).to_dense()?;
    let dec = SpectralDecomposition::new(&d, &sqrt_pi_unmarked(chain, marked))?;
    Ok(dec.resolvent_sum_excluding_top()? / (1.0 - marked.p_m()))
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 <= s < 1",
        });
    }
    Ok(())
}

/// `HT(s)` without an eigendecomposition: with `v = sqrt(pi(s))` and `w` the
/// part of `sqrt(pi_U)` orthogonal to `v`, the spectral sum equals
/// `w^T (I - D(s) + v v^T)^{-1} w`, which is solved by Cholesky.
pub fn interpolated_hitting_time_resolvent(chain: &ReversibleChain, marked: &MarkedSet, s: f64) -> Result<f64> {
    check_compatible(chain, marked)?;
    check_s(s)?;
    let n = chain.n();
    require_dense(n, "interpolated hitting time")?;
    let d = Discriminant::interpolated(chain, marked, s).to_dense()?;
    let v: Vec<f64> = interpolated_pi(chain.pi(), marked, s).into_iter().map(f64::sqrt).collect();
    let target = sqrt_pi_unmarked(chain, marked);
    let along = linalg::dot(&v, &target);
    let w: Vec<f64> = target.iter().zip(&v).map(|(t, v)| t - along * v).collect();
    let a = Mat::<f64>::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - d[(i, j)] + v[i] * v[j]
    });
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Cholesky of I - D(s) + vv^T failed: {e:?}")))?;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| w[i]);
    let x = llt.solve(&rhs);
    let terms: Vec<f64> = (0..n).map(|i| w[i] * x[(i, 0)]).collect();
    Ok(linalg::pairwise_sum(&terms) / (1.0 - marked.p_m()))
}

/// Extended hitting time `HT+ = p_M^-2 HT(0)`.
///
/// The value is cross-checked against the defining limit of `HT(s)` as
/// `s -> 1`: `HT(s_j)` is evaluated at `s_j = 1 - 2^-j` for `j = 1..20` and
/// the last two points are combined by Richardson extrapolation, which
/// removes the leading `O(1 - s)` term. Disagreement beyond 0.1% is an error.
pub fn extended_hitting_time(chain: &ReversibleChain, marked: &MarkedSet) -> Result<HittingTimeReport> {
    let ht0 = interpolated_hitting_time(chain, marked, 0.0)?;
    let p_m = marked.p_m();
    let value = ht0 / (p_m * p_m);
    let mut last = [0.0; 2];
    for j in 1..=20 {
        let s = 1.0 - (0.5_f64).powi(j);
        last = [last[1], interpolated_hitting_time_resolvent(chain, marked, s)?];
    }
    let limit = 2.0 * last[1] - last[0];
    let relative = (value - limit).abs() / value.abs();
    if !(relative <= 1e-3) {
        return Err(Error::LimitDisagreement {
            primary: value,
            limit,
            relative,
        });
    }
    Ok(HittingTimeReport {
        value,
        method: Method::Spectral,
        error_bound: (value - limit).abs(),
        seed: None,
        meta: vec![
            ("ht0", ht0),
            ("limit_extrapolated", limit),
            ("limit_last", last[1]),
            ("relative_gap", relative),
        ],
    })
}

/// Monte Carlo estimate of the hitting time from `pi` conditioned on `U`.
///
/// Samples are processed in blocks of [`rng::SAMPLE_BLOCK`], block `b` using
/// stream `b` of the seed. Block 0 runs first with a loose cap and its mean
/// sets the per-trajectory cap `10^6` times that estimate for the rest.
/// `meta` records the empirical tails `Pr(Z > c HT)` for `c` in `{2, 3}`,
/// which Markov's inequality bounds by `1/c`.
pub fn hitting_time_monte_carlo(
    chain: &ReversibleChain,
    marked: &MarkedSet,
    samples: u64,
    seed: u64,
) -> Result<HittingTimeReport> {
    check_compatible(chain, marked)?;
    if samples == 0 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: 0.0,
            expected: "samples >= 1",
        });
    }
    let start = StartSampler::new(chain, marked);
    let run_block = |block: u64, len: u64, cap: u64| -> Result<Vec<u64>> {
        let mut rng = rng::stream_rng(seed, block);
        (0..len)
            .map(|_| {
                let mut x = start.sample(&mut rng);
                let mut steps = 0u64;
                while !marked.contains(x) {
                    if steps >= cap {
                        return Err(Error::StepCapExceeded { cap });
                    }
                    x = step(chain.matrix(), x, &mut rng);
                    steps += 1;
                }
                Ok(steps)
            })
            .collect()
    };
    let blocks: Vec<_> = rng::blocks(samples).collect();
    let first = run_block(blocks[0].0, blocks[0].2, 1_000_000_000_000)?;
    let pilot = first.iter().sum::<u64>() as f64 / first.len() as f64;
    let cap = (1e6 * pilot.max(1.0)).min(u64::MAX as f64 / 2.0) as u64;
    let rest: Vec<Vec<u64>> = blocks[1..]
        .par_iter()
        .map(|&(b, _, len)| run_block(b, len, cap))
        .collect::<Result<_>>()?;
    let all: Vec<f64> = first
        .iter()
        .chain(rest.iter().flatten())
        .map(|&z| z as f64)
        .collect();
    let n = all.len() as f64;
    let mean = linalg::pairwise_sum(&all) / n;
    let var = if all.len() > 1 {
        let dev: Vec<f64> = all.iter().map(|z| (z - mean).powi(2)).collect();
        linalg::pairwise_sum(&dev) / (n - 1.0)
    } else {
        0.0
    };
    let half_width = 1.96 * (var / n).sqrt();
    let tail = |c: f64| all.iter().filter(|&&z| z > c * mean).count() as f64 / n;
    let (t2, t3) = (tail(2.0), tail(3.0));
    Ok(HittingTimeReport {
        value: mean,
        method: Method::MonteCarlo,
        error_bound: half_width,
        seed: Some(seed),
        meta: vec![
            ("samples", n),
            ("std_dev", var.sqrt()),
            ("tail_2ht", t2),
            ("tail_3ht", t3),
            ("markov_bound_holds", if t2 <= 0.5 && t3 <= 1.0 / 3.0 { 1.0 } else { 0.0 }),
            ("step_cap", cap as f64),
        ],
    })
}

/// Draws vertices from `pi` conditioned on the unmarked set.
pub(crate) struct StartSampler<'a> {
    marked: &'a MarkedSet,
    /// Cumulative weights over the unmarked list; empty when `pi` is uniform
    /// and rejection sampling is used instead.
    cumulative: Vec<f64>,
    list: Vec<usize>,
}

impl<'a> StartSampler<'a> {
    pub(crate) fn new(chain: &ReversibleChain, marked: &'a MarkedSet) -> Self {
        if chain.matrix().torus_side().is_some() {
            return Self {
                marked,
                cumulative: Vec::new(),
                list: Vec::new(),
            };
        }
        let list = marked.unmarked();
        let mut acc = 0.0;
        let cumulative = list
            .iter()
            .map(|&x| {
                acc += chain.pi()[x];
                acc
            })
            .collect();
        Self {
            marked,
            cumulative,
            list,
        }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        if self.cumulative.is_empty() {
            let n = self.marked.n();
            loop {
                let x = rng.random_range(0..n);
                if !self.marked.contains(x) {
                    return x;
                }
            }
        }
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.list[k.min(self.list.len() - 1)]
    }
}

/// One transition from `x` by inversion of the row's cumulative law.
#[inline]
pub(crate) fn step<R: Rng>(matrix: &crate::chain::StochasticMatrix, x: usize, rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut chosen = usize::MAX;
    let mut last = x;
    matrix.for_each_in_row(x, |y, p| {
        if chosen == usize::MAX {
            acc += p;
            if u < acc {
                chosen = y;
            }
        }
        last = y;
    });
    if chosen == usize::MAX {
        last
    } else {
        chosen
    }
}

/// Lazy spectrum of the torus walk: eigenvalues
/// `lambda_jk = (1 + 2 cos(2 pi j / N) + 2 cos(2 pi k / N)) / 5` with
/// eigenvectors `w_j (x) w_k`, `w_j(x) = omega^(j x) / sqrt(N)`.
#[derive(Clone, Copy, Debug)]
pub struct TorusSpectrum {
    pub side: usize,
}

pub fn torus_spectrum(side: usize) -> Result<TorusSpectrum> {
    if side < 2 {
        return Err(Error::SpecViolation(format!("torus side {side} < 2")));
    }
    Ok(TorusSpectrum { side })
}

impl TorusSpectrum {
    pub fn eigenvalue(&self, j: usize, k: usize) -> f64 {
        let n = self.side as f64;
        let c = |i: usize| (2.0 * std::f64::consts::PI * i as f64 / n).cos();
        (1.0 + 2.0 * c(j) + 2.0 * c(k)) / 5.0
    }

    /// `1 - lambda_jk` in the cancellation-free form `(4/5)(sin^2 + sin^2)`.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        let n = self.side as f64;
        let s = |i: usize| (std::f64::consts::PI * i as f64 / n).sin().powi(2);
        0.8 * (s(j) + s(k))
    }

    /// Entry at vertex `(x1, x2)` of the eigenvector for `(j, k)`.
    pub fn eigenvector_entry(&self, j: usize, k: usize, x1: usize, x2: usize) -> Complex64 {
        let n = self.side;
        let phase = ((j * x1 + k * x2) % n) as f64 / n as f64;
        Complex64::from_polar(1.0 / n as f64, 2.0 * std::f64::consts::PI * phase)
    }

    /// All `(j, k, lambda_jk)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.side).flat_map(move |j| (0..self.side).map(move |k| (j, k, self.eigenvalue(j, k))))
    }
}

/// `sum_{i < count} omega^(freq step i)` for `omega = exp(2 pi i / N)`.
///
/// Angles are reduced with integer arithmetic and the sum is evaluated as
/// `exp(i theta (L-1)/2) sin(L theta / 2) / sin(theta / 2)`.
fn geometric_character(n: usize, freq: usize, step: usize, count: usize) -> Complex64 {
    let r = (freq * step) % n;
    if r == 0 {
        return Complex64::new(count as f64, 0.0);
    }
    let two_n = 2 * n as u64;
    let half_angle = |q: u64| std::f64::consts::PI * (q % two_n) as f64 / n as f64;
    let r64 = r as u64;
    let l = count as u64;
    let numer = half_angle(l * r64).sin();
    let denom = half_angle(r64).sin();
    Complex64::from_polar(numer / denom, half_angle(r64 * (l - 1)))
}

/// `sum_{x in M} omega^(j x1 + k x2)` for the two-scale marked grid, from
/// the product structure of `M1`, `M2` and `M1 ∩ M2`.
fn marked_character(tables: &CharacterTables, j: usize, k: usize) -> Complex64 {
    tables.m1[j] * tables.m1[k] + tables.m2[j] * tables.m2[k] - tables.overlap[j] * tables.overlap[k]
}

struct CharacterTables {
    m1: Vec<Complex64>,
    m2: Vec<Complex64>,
    overlap: Vec<Complex64>,
}

impl CharacterTables {
    fn new(spec: &TorusSpec) -> Self {
        let n = spec.n;
        let table = |step: usize, count: usize| (0..n).map(|f| geometric_character(n, f, step, count)).collect();
        Self {
            m1: table(spec.d1, spec.k1),
            m2: table(spec.d, n / spec.d),
            overlap: table(spec.d, spec.overlap_side()),
        }
    }
}

fn torus_prefactor(spec: &TorusSpec) -> Result<f64> {
    spec.validate()?;
    let n2 = (spec.n * spec.n) as f64;
    let m = spec.marked_count() as f64;
    let u = n2 - m;
    if u <= 0.0 {
        return Err(Error::InvalidMarkedSet("every vertex is marked".into()));
    }
    Ok(1.25 * n2 / (m * m * u))
}

/// Extended hitting time of the torus walk with the two-scale marked grid:
/// `HT+ = (5/4) N^2/(m^2 u) sum_{(j,k) != 0} |C(j,k)|^2 / (sin^2(pi j/N) + sin^2(pi k/N))`
/// where `C` is the marked-set character sum. `O(N^2)` work, no matrices.
pub fn torus_ht_plus_closed_form(spec: &TorusSpec) -> Result<HittingTimeReport> {
    let pre = torus_prefactor(spec)?;
    let n = spec.n;
    let tables = CharacterTables::new(spec);
    let sin2: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).sin().powi(2))
        .collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let terms: Vec<f64> = (0..n)
                .filter(|&k| j != 0 || k != 0)
                .map(|k| marked_character(&tables, j, k).norm_sqr() / (sin2[j] + sin2[k]))
                .collect();
            linalg::pairwise_sum(&terms)
        })
        .collect();
    let value = pre * linalg::pairwise_sum(&rows);
    Ok(HittingTimeReport {
        value,
        method: Method::TorusClosedForm,
        error_bound: value * (n as f64) * 1e-15,
        seed: None,
        meta: vec![("terms", (n * n - 1) as f64), ("marked", spec.marked_count() as f64)],
    })
}

/// Lower bound on `HT+`: the `(j, k) = (1, 0)` term of the closed form,
/// `(5/4) N^2/(m^2 u) |sum_{x in M} omega^(x1)|^2 / sin^2(pi / N)`.
pub fn torus_ht_plus_lower_bound(spec: &TorusSpec) -> Result<HittingTimeReport> {
    let pre = torus_prefactor(spec)?;
    let n = spec.n;
    let tables = CharacterTables::new(spec);
    let c = marked_character(&tables, 1, 0);
    let value = pre * c.norm_sqr() / (std::f64::consts::PI / n as f64).sin().powi(2);
    Ok(HittingTimeReport {
        value,
        method: Method::TorusClosedForm,
        error_bound: value * 1e-12,
        seed: None,
        meta: vec![("marked", spec.marked_count() as f64)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::StochasticMatrix;
    use crate::graphs;

    #[test]
    fn geometric_escape() {
        // Vertex 0 stays with probability 1/2 and otherwise moves to the marked vertex 1.
        let m = StochasticMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let c = ReversibleChain::from_matrix(m).unwrap();
        let mk = MarkedSet::new(&c, [1]).unwrap();
        for method in [SolveMethod::Dense, SolveMethod::ConjugateGradient, SolveMethod::Neumann] {
            let r = hitting_time_exact_with(&c, &mk, method).unwrap();
            assert!((r.value - 2.0).abs() < 1e-9, "{method:?} {}", r.value);
        }
    }

    #[test]
    fn exact_solvers_agree_on_torus() {
        let c = graphs::torus_chain(9).unwrap();
        let mk = MarkedSet::new(&c, [0]).unwrap();
        let a = hitting_time_exact_with(&c, &mk, SolveMethod::Dense).unwrap();
        let b = hitting_time_exact_with(&c, &mk, SolveMethod::ConjugateGradient).unwrap();
        let d = hitting_time_spectral(&c, &mk).unwrap();
        assert!((a.value - b.value).abs() < 1e-7 * a.value);
        assert!((a.value - d.value).abs() < 1e-7 * a.value);
        assert!(a.error_bound < 1e-6);
    }

    #[test]
    fn character_sums_match_brute_force() {
        let spec = TorusSpec::new(12, 1, 5, 3).unwrap();
        let tables = CharacterTables::new(&spec);
        let verts = spec.marked_vertices();
        for j in 0..12 {
            for k in 0..12 {
                let brute: Complex64 = verts
                    .iter()
                    .map(|&x| {
                        let (x1, x2) = (x / 12, x % 12);
                        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((j * x1 + k * x2) % 12) as f64 / 12.0)
                    })
                    .sum();
                let fast = marked_character(&tables, j, k);
                assert!((brute - fast).norm() < 1e-10, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn torus_gap_identity() {
        let sp = torus_spectrum(7).unwrap();
        for (j, k, lam) in sp.iter() {
            assert!((1.0 - lam - sp.gap(j, k)).abs() < 1e-14);
        }
        assert_eq!(sp.eigenvalue(0, 0), 1.0);
    }

    #[test]
    fn monte_carlo_one_step_absorption() {
        let m = StochasticMatrix::from_dense(&[vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let c = ReversibleChain::from_matrix(m).unwrap();
        let mk = MarkedSet::new(&c, [1]).unwrap();
        let r = hitting_time_monte_carlo(&c, &mk, 5000, 3).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.error_bound, 0.0);
        assert_eq!(r.seed, Some(3));
    }

    #[test]
    fn two_state_interpolated_closed_form() {
        // Marked state 1; the spectral sum has a single term.
        let (a, b) = (0.3_f64, 0.1_f64);
        let m = StochasticMatrix::from_dense(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        let c = ReversibleChain::from_matrix(m).unwrap();
        let mk = MarkedSet::new(&c, [1]).unwrap();
        for s in [0.0, 0.4, 0.9] {
            let pi = interpolated_pi(c.pi(), &mk, s);
            // Second eigenvalue: trace minus 1.
            let lam = (1.0 - a) + (1.0 - s) * (1.0 - b) + s - 1.0;
            // Eigenvector orthogonal to sqrt(pi(s)).
            let v = [pi[1].sqrt(), -pi[0].sqrt()];
            let overlap = (v[0] * c.sqrt_pi()[0]).powi(2);
            let expect = overlap / (1.0 - lam) / (1.0 - mk.p_m());
            let got = interpolated_hitting_time(&c, &mk, s).unwrap();
            let via_solve = interpolated_hitting_time_resolvent(&c, &mk, s).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect, "s={s}: {got} vs {expect}");
            assert!((via_solve - expect).abs() < 1e-12 * expect);
        }
    }
}
