//! C interface to `qwsearch`.
//!
//! Chains are passed around as opaque `QwChain` handles created by one of the
//! `qw_chain_*` constructors and released with [`qw_chain_free`]. Every
//! fallible function returns a [`QwStatus`]; on failure a description is
//! available from [`qw_last_error_message`] on the same thread. Outputs are
//! written through caller-provided pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qwsearch::chain::{parse_text, MarkedSet, ReversibleChain, StochasticMatrix};
use qwsearch::evolve::{fastforward_success, q_t};
use qwsearch::graphs::{self, StarSpec};
use qwsearch::spectra::{extended_hitting_time, hitting_time_exact, hitting_time_monte_carlo};
use qwsearch::trajectories::geometric_sum_window;
use qwsearch::Error;

/// Result codes. `QW_STATUS_OK` is zero; every other value names a failure class.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMatrix = 3,
    InvalidDistribution = 4,
    NonErgodic = 5,
    NotReversible = 6,
    InvalidMarkedSet = 7,
    OutOfRange = 8,
    TooLarge = 9,
    SolverFailure = 10,
    LimitDisagreement = 11,
    Parse = 12,
    NoMarkedSet = 13,
    Internal = 14,
    Panic = 15,
}

/// Opaque chain handle, optionally carrying a marked set.
pub struct QwChain {
    chain: ReversibleChain,
    marked: Option<MarkedSet>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> QwStatus {
    match err {
        Error::InvalidMatrix { .. } => QwStatus::InvalidMatrix,
        Error::InvalidDistribution(_) | Error::NotStationary { .. } => QwStatus::InvalidDistribution,
        Error::NonErgodic(_) | Error::ResultNotErgodic(_) => QwStatus::NonErgodic,
        Error::NotReversible { .. } => QwStatus::NotReversible,
        Error::InvalidMarkedSet(_) => QwStatus::InvalidMarkedSet,
        Error::OutOfRange { .. } | Error::SpecViolation(_) | Error::NonIntegralScale(_) => QwStatus::OutOfRange,
        Error::TooLarge { .. } => QwStatus::TooLarge,
        Error::SolverDivergence { .. } | Error::Numerical(_) | Error::DegenerateTopEigenvalue { .. } => {
            QwStatus::SolverFailure
        }
        Error::LimitDisagreement { .. } => QwStatus::LimitDisagreement,
        Error::Parse { .. } => QwStatus::Parse,
        _ => QwStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (QwStatus, String)>>(f: F) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QwStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QwStatus::Panic
        }
    }
}

fn lift<T>(r: qwsearch::Result<T>) -> Result<T, (QwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QwStatus, String) {
    (QwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn chain_ref<'a>(chain: *const QwChain) -> Result<&'a QwChain, (QwStatus, String)> {
    chain.as_ref().ok_or_else(|| null("chain"))
}

fn marked_of(c: &QwChain) -> Result<&MarkedSet, (QwStatus, String)> {
    c.marked
        .as_ref()
        .ok_or_else(|| (QwStatus::NoMarkedSet, "chain has no marked set".to_string()))
}

unsafe fn emit(out: *mut *mut QwChain, chain: ReversibleChain, marked: Option<MarkedSet>) -> Result<(), (QwStatus, String)> {
    let slot = out.as_mut().ok_or_else(|| null("output handle"))?;
    *slot = Box::into_raw(Box::new(QwChain { chain, marked }));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (QwStatus, String)> {
    *out.as_mut().ok_or_else(|| null(what))? = value;
    Ok(())
}

/// Walk on the `side x side` torus with vertex 0 marked.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_torus(side: usize, out: *mut *mut QwChain) -> QwStatus {
    guard(|| {
        let chain = lift(graphs::torus_chain(side))?;
        let marked = lift(MarkedSet::new(&chain, [0]))?;
        emit(out, chain, Some(marked))
    })
}

/// Segmented star with `k` paths of length `k^2`; one whole path is marked.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_star(k: usize, out: *mut *mut QwChain) -> QwStatus {
    guard(|| {
        let (chain, marked) = lift(StarSpec::new(k).and_then(graphs::segmented_star_chain))?;
        emit(out, chain, Some(marked))
    })
}

/// Chain from the text serialization (NUL-terminated UTF-8). The marked set
/// is taken from the text when present.
///
/// # Safety
/// `text` must point to a NUL-terminated string and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_from_text(text: *const c_char, out: *mut *mut QwChain) -> QwStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (QwStatus::InvalidArgument, format!("text is not UTF-8: {e}")))?;
        let parsed = lift(parse_text(s))?;
        let chain = lift(match parsed.pi {
            Some(pi) => ReversibleChain::new(parsed.matrix, pi),
            None => ReversibleChain::from_matrix(parsed.matrix),
        })?;
        let marked = parsed.marked.map(|m| lift(MarkedSet::new(&chain, m))).transpose()?;
        emit(out, chain, marked)
    })
}

/// Chain from compressed sparse rows: row `x` holds entries
/// `offsets[x]..offsets[x + 1]` of `cols` and `probs`. The stationary
/// distribution is computed.
///
/// # Safety
/// `offsets` must hold `n + 1` entries; `cols` and `probs` must hold
/// `offsets[n]` entries each; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_from_rows(
    n: usize,
    offsets: *const usize,
    cols: *const usize,
    probs: *const f64,
    out: *mut *mut QwChain,
) -> QwStatus {
    guard(|| {
        if offsets.is_null() || (n > 0 && (cols.is_null() || probs.is_null())) {
            return Err(null("row arrays"));
        }
        let offsets = std::slice::from_raw_parts(offsets, n + 1);
        let nnz = offsets[n];
        if offsets.windows(2).any(|w| w[0] > w[1]) || offsets[0] != 0 {
            return Err((QwStatus::InvalidArgument, "row offsets must start at 0 and be nondecreasing".into()));
        }
        let (cols, probs) = if nnz == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(cols, nnz), std::slice::from_raw_parts(probs, nnz))
        };
        let rows = (0..n)
            .map(|x| (offsets[x]..offsets[x + 1]).map(|k| (cols[k], probs[k])).collect())
            .collect();
        let matrix = lift(StochasticMatrix::from_rows(rows))?;
        emit(out, lift(ReversibleChain::from_matrix(matrix))?, None)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `chain` must be null or a handle from a `qw_chain_*` constructor that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_free(chain: *mut QwChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of vertices.
///
/// # Safety
/// `chain` must be a live handle and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_size(chain: *const QwChain, n: *mut usize) -> QwStatus {
    guard(|| write(n, chain_ref(chain)?.chain.n(), "n"))
}

/// Replaces the marked set.
///
/// # Safety
/// `chain` must be a live handle and `vertices` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_set_marked(chain: *mut QwChain, vertices: *const usize, len: usize) -> QwStatus {
    guard(|| {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        if vertices.is_null() && len > 0 {
            return Err(null("vertices"));
        }
        let v = if len == 0 { &[][..] } else { std::slice::from_raw_parts(vertices, len) };
        c.marked = Some(lift(MarkedSet::new(&c.chain, v.iter().copied()))?);
        Ok(())
    })
}

/// Copies the stationary distribution into `out`, which must hold `len >= n` values.
///
/// # Safety
/// `chain` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_chain_stationary(chain: *const QwChain, out: *mut f64, len: usize) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < c.chain.n() {
            return Err((QwStatus::InvalidArgument, format!("buffer holds {len} values, need {}", c.chain.n())));
        }
        std::slice::from_raw_parts_mut(out, c.chain.n()).copy_from_slice(c.chain.pi());
        Ok(())
    })
}

/// Hitting time of the marked set from the stationary law conditioned on
/// starting unmarked, by linear solve. `error_bound` may be null.
///
/// # Safety
/// `chain` must be a live handle; `value` writable; `error_bound` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_hitting_time(chain: *const QwChain, value: *mut f64, error_bound: *mut f64) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let r = lift(hitting_time_exact(&c.chain, marked_of(c)?))?;
        write(value, r.value, "value")?;
        if !error_bound.is_null() {
            *error_bound = r.error_bound;
        }
        Ok(())
    })
}

/// Monte Carlo hitting time over `samples` trajectories; `half_width` (95%)
/// may be null.
///
/// # Safety
/// `chain` must be a live handle; `value` writable; `half_width` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_hitting_time_monte_carlo(
    chain: *const QwChain,
    samples: u64,
    seed: u64,
    value: *mut f64,
    half_width: *mut f64,
) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let r = lift(hitting_time_monte_carlo(&c.chain, marked_of(c)?, samples, seed))?;
        write(value, r.value, "value")?;
        if !half_width.is_null() {
            *half_width = r.error_bound;
        }
        Ok(())
    })
}

/// Extended hitting time (dense; at most 5000 vertices).
///
/// # Safety
/// `chain` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_extended_hitting_time(chain: *const QwChain, value: *mut f64) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let r = lift(extended_hitting_time(&c.chain, marked_of(c)?))?;
        write(value, r.value, "value")
    })
}

/// Success bound `q_t(s) = || Pi_M T_t(D(s)) sqrt(pi) ||^2`.
///
/// # Safety
/// `chain` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_success_bound(chain: *const QwChain, s: f64, t: usize, value: *mut f64) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        write(value, lift(q_t(&c.chain, marked_of(c)?, s, t))?, "value")
    })
}

/// Fast-forwarding success `|| Pi_M D(s)^t sqrt(pi_U) ||^2`.
///
/// # Safety
/// `chain` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn qw_fastforward_success(chain: *const QwChain, s: f64, t: usize, value: *mut f64) -> QwStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        write(value, lift(fastforward_success(&c.chain, marked_of(c)?, s, t))?, "value")
    })
}

/// Probability that a sum of `t` geometric variables with success
/// probability `p` lands in `(floor(t/(2p)), floor(2t/p)]`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qw_geometric_sum_window(p: f64, t: u64, value: *mut f64) -> QwStatus {
    guard(|| write(value, lift(geometric_sum_window(p, t))?, "value"))
}

/// Description of the last failure on the calling thread, or an empty
/// string. The pointer stays valid until the next call into this library on
/// the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn qw_status_name(status: QwStatus) -> *const c_char {
    let s: &'static CStr = match status {
        QwStatus::Ok => c"ok",
        QwStatus::NullPointer => c"null-pointer",
        QwStatus::InvalidArgument => c"invalid-argument",
        QwStatus::InvalidMatrix => c"invalid-matrix",
        QwStatus::InvalidDistribution => c"invalid-distribution",
        QwStatus::NonErgodic => c"non-ergodic",
        QwStatus::NotReversible => c"not-reversible",
        QwStatus::InvalidMarkedSet => c"invalid-marked-set",
        QwStatus::OutOfRange => c"out-of-range",
        QwStatus::TooLarge => c"too-large",
        QwStatus::SolverFailure => c"solver-failure",
        QwStatus::LimitDisagreement => c"limit-disagreement",
        QwStatus::Parse => c"parse",
        QwStatus::NoMarkedSet => c"no-marked-set",
        QwStatus::Internal => c"internal",
        QwStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}
