//! Marked/unmarked box sequences, their r-rescalings and the deterministic
//! rescaling lemma behind the classical analysis of fast-forwarding search.
//!
//! Positions are 1-based throughout: box `i` of a sequence of length `n` has
//! index `i` in `1..=n`, and the window `[a, b]` denotes the boxes
//! `a+1, ..., b`.

use rand::Rng;
use rayon::prelude::*;

use super::simulate::TrajectoryRecord;
use crate::chain::MarkedSet;
use crate::error::{Error, Result};
use crate::evolve::r_set;
use crate::rng;

/// A finite sequence of marked (`true`) and unmarked (`false`) boxes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BoxSequence {
    boxes: Vec<bool>,
    /// `m[i - 1]` is the number of marked boxes before the `i`-th unmarked box.
    m: Vec<u64>,
}

impl BoxSequence {
    pub fn new(boxes: Vec<bool>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidMarkedSet("box sequence must have at least one box".into()));
        }
        let mut seq = Self::default();
        seq.refill(boxes);
        Ok(seq)
    }

    /// Replaces the content while keeping the allocations, for tight scans.
    pub(crate) fn refill(&mut self, boxes: Vec<bool>) {
        self.boxes = boxes;
        self.m.clear();
        let mut seen = 0;
        for &b in &self.boxes {
            if b {
                seen += 1;
            } else {
                self.m.push(seen);
            }
        }
    }

    pub(crate) fn boxes_mut_vec(&mut self) -> Vec<bool> {
        std::mem::take(&mut self.boxes)
    }

    pub fn boxes(&self) -> &[bool] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn marked_count(&self) -> usize {
        self.boxes.len() - self.m.len()
    }

    pub fn unmarked_count(&self) -> usize {
        self.m.len()
    }

    /// Length of the `r`-rescaling.
    pub fn rescaled_len(&self, r: u64) -> u64 {
        self.m.len() as u64 + r * self.marked_count() as u64
    }

    /// Position `sigma_r(i) = i + m(i) r` of the `i`-th unmarked box (1-based)
    /// inside the `r`-rescaling.
    pub fn sigma(&self, i: usize, r: u64) -> Option<u64> {
        let m = *self.m.get(i.checked_sub(1)?)?;
        Some(i as u64 + m * r)
    }

    /// The `r`-rescaling, materialized: every marked box becomes `r` marked boxes.
    pub fn rescale(&self, r: f64) -> Result<BoxSequence> {
        let r = integral_scale(r)?;
        let mut out = Vec::with_capacity(self.rescaled_len(r) as usize);
        for &b in &self.boxes {
            if b {
                out.extend(std::iter::repeat_n(true, r as usize));
            } else {
                out.push(false);
            }
        }
        BoxSequence::new(out)
    }

    /// `(marked, unmarked)` counts over the window `{a+1, ..., b}` of the
    /// `r`-rescaling, without materializing it.
    pub fn window_counts(&self, r: u64, a: u64, b: u64) -> Result<(u64, u64)> {
        let len = self.rescaled_len(r);
        if r < 1 || a > b || b > len {
            return Err(Error::WindowOutOfRange { a, b, len });
        }
        Ok(self.window_counts_unchecked(r, a, b))
    }

    fn window_counts_unchecked(&self, r: u64, a: u64, b: u64) -> (u64, u64) {
        let unmarked = (self.unmarked_up_to(r, b) - self.unmarked_up_to(r, a)) as u64;
        (b - a - unmarked, unmarked)
    }

    /// `#{i : sigma_r(i) <= limit}`, by bisection since `sigma_r` is
    /// strictly increasing in `i`.
    fn unmarked_up_to(&self, r: u64, limit: u64) -> usize {
        let (mut lo, mut hi) = (0usize, self.m.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if mid as u64 + 1 + self.m[mid] * r <= limit {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn integral_scale(r: f64) -> Result<u64> {
    if r.is_finite() && r >= 1.0 && r.fract() == 0.0 && r <= u32::MAX as f64 {
        Ok(r as u64)
    } else {
        Err(Error::NonIntegralScale(r))
    }
}

/// Pointwise membership map of a path.
pub fn to_boxes(path: &TrajectoryRecord, marked: &MarkedSet) -> Result<BoxSequence> {
    BoxSequence::new(path.vertices.iter().map(|&x| marked.contains(x)).collect())
}

/// Outcome of the rescaling lemma on one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma4Report {
    pub t: u64,
    /// Largest `r < 3T` with at most `3T/2` marked boxes in `[T, 3T]`.
    pub r0: u64,
    /// Scales `r` in `R` with `r >= 2 r0`.
    pub scales: Vec<u64>,
    /// `|M^(r)[0, 3T]|` for each entry of `scales`.
    pub marked_0_3t: Vec<u64>,
    /// `|U^(r)[6T, 12T]|` for each entry of `scales`.
    pub unmarked_6t_12t: Vec<u64>,
    /// Every scale puts at least `3T/2` marked boxes in `[0, 3T]`.
    pub cond1: bool,
    /// The scales together put at least `T/2` unmarked boxes in `[6T, 12T]`.
    pub cond2: bool,
    /// First scale breaking the first conclusion, if any.
    pub cond1_witness: Option<u64>,
}

impl Lemma4Report {
    pub fn holds(&self) -> bool {
        self.cond1 && self.cond2
    }

    pub fn unmarked_sum(&self) -> u64 {
        self.unmarked_6t_12t.iter().sum()
    }
}

/// Why a sequence falls outside the lemma's hypotheses.
fn hypotheses(seq: &BoxSequence, t: u64) -> std::result::Result<(), String> {
    if (seq.len() as u64) < 12 * t {
        return Err(format!("sequence length {} is below 12T = {}", seq.len(), 12 * t));
    }
    if !seq.boxes[..t as usize].iter().any(|&b| b) {
        return Err(format!("no marked box among the first T = {t} boxes"));
    }
    let (marked, _) = seq.window_counts_unchecked(1, t, 3 * t);
    if marked > t {
        return Err(format!("{marked} marked boxes in [T, 3T], more than T = {t}"));
    }
    Ok(())
}

/// Checks both conclusions of the rescaling lemma on `seq` with parameter `t`.
pub fn lemma4_check(seq: &BoxSequence, t: u64) -> Result<Lemma4Report> {
    if t < 1 {
        return Err(Error::OutOfRange {
            name: "T",
            value: t as f64,
            expected: "T >= 1",
        });
    }
    hypotheses(seq, t).map_err(Error::PreconditionUnmet)?;
    Ok(lemma4_unchecked(seq, t, &r_set(t as usize)))
}

fn lemma4_unchecked(seq: &BoxSequence, t: u64, r_set: &[f64]) -> Lemma4Report {
    // The count in [T, 3T] need not be monotone in r, so every candidate is
    // examined. r = 1 always qualifies under the second hypothesis.
    let r0 = (1..3 * t)
        .rev()
        .find(|&r| 2 * seq.window_counts_unchecked(r, t, 3 * t).0 <= 3 * t)
        .unwrap_or(1);
    let scales: Vec<u64> = r_set.iter().map(|&r| r as u64).filter(|&r| r >= 2 * r0).collect();
    let marked_0_3t: Vec<u64> = scales.iter().map(|&r| seq.window_counts_unchecked(r, 0, 3 * t).0).collect();
    let unmarked_6t_12t: Vec<u64> = scales
        .iter()
        .map(|&r| seq.window_counts_unchecked(r, 6 * t, 12 * t).1)
        .collect();
    let cond1_witness = scales
        .iter()
        .zip(&marked_0_3t)
        .find(|(_, &c)| 2 * c < 3 * t)
        .map(|(&r, _)| r);
    let cond2 = 2 * unmarked_6t_12t.iter().sum::<u64>() >= t;
    Lemma4Report {
        t,
        r0,
        scales,
        marked_0_3t,
        unmarked_6t_12t,
        cond1: cond1_witness.is_none(),
        cond2,
        cond1_witness,
    }
}

/// Summary of a search for counterexamples to the rescaling lemma.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma4Scan {
    pub t: u64,
    /// Sequences drawn or enumerated.
    pub examined: u64,
    /// Sequences satisfying both hypotheses, on which the lemma was checked.
    pub checked: u64,
    pub violations: u64,
    /// Index of the first violating sequence and its report.
    pub first_violation: Option<(u64, Lemma4Report)>,
    pub seed: Option<u64>,
}

fn merge(t: u64, seed: Option<u64>, parts: Vec<Lemma4Scan>) -> Lemma4Scan {
    let mut out = Lemma4Scan {
        t,
        examined: 0,
        checked: 0,
        violations: 0,
        first_violation: None,
        seed,
    };
    for p in parts {
        out.examined += p.examined;
        out.checked += p.checked;
        out.violations += p.violations;
        if out.first_violation.is_none() {
            out.first_violation = p.first_violation;
        }
    }
    out
}

/// Every sequence of length 12 T, for `T <= 2` (2^24 sequences at T = 2).
pub fn lemma4_exhaustive(t: u64) -> Result<Lemma4Scan> {
    if !(1..=2).contains(&t) {
        return Err(Error::OutOfRange {
            name: "T",
            value: t as f64,
            expected: "exhaustive search needs T in {1, 2}",
        });
    }
    let len = 12 * t as usize;
    let total = 1u64 << len;
    let chunk = 1u64 << 16;
    let rs = r_set(t as usize);
    let parts: Vec<Lemma4Scan> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut part = merge(t, None, vec![]);
            let mut seq = BoxSequence::default();
            let mut buf = Vec::with_capacity(len);
            for bits in c * chunk..((c + 1) * chunk).min(total) {
                part.examined += 1;
                buf.clear();
                buf.extend((0..len).map(|i| bits >> i & 1 == 1));
                seq.refill(buf);
                if hypotheses(&seq, t).is_ok() {
                    part.checked += 1;
                    let rep = lemma4_unchecked(&seq, t, &rs);
                    if !rep.holds() {
                        part.violations += 1;
                        part.first_violation.get_or_insert((bits, rep));
                    }
                }
                buf = seq.boxes_mut_vec();
            }
            part
        })
        .collect();
    Ok(merge(t, None, parts))
}

/// Draws a sequence of length in `[12T, 13T]` satisfying both hypotheses.
///
/// Four generators are mixed: independent boxes at a random density, long
/// alternating runs, a sparse background with exactly `T` marked boxes packed
/// into one end of `[T, 3T]`, and a sequence whose only early marked box sits
/// at position `T`. Hypotheses are enforced by planting one marked box among
/// the first `T` and thinning `[T, 3T]` down to at most `T` marked boxes.
pub fn random_hypothesis_sequence<R: Rng>(t: u64, rng: &mut R) -> Vec<bool> {
    let t_us = t as usize;
    let len = 12 * t_us + rng.random_range(0..=t_us);
    let mut b = vec![false; len];
    match rng.random_range(0..4u8) {
        0 => {
            let p: f64 = rng.random();
            b.iter_mut().for_each(|x| *x = rng.random::<f64>() < p);
        }
        1 => {
            let mean_run = 1.0 + rng.random::<f64>() * 2.0 * t as f64;
            let mut state = rng.random::<bool>();
            let mut i = 0;
            while i < len {
                let run = 1 + (rng.random::<f64>() * 2.0 * mean_run) as usize;
                b[i..(i + run).min(len)].iter_mut().for_each(|x| *x = state);
                i += run;
                state = !state;
            }
        }
        2 => {
            let p: f64 = rng.random::<f64>() * 0.2;
            b.iter_mut().for_each(|x| *x = rng.random::<f64>() < p);
            let (lo, hi) = if rng.random::<bool>() { (t_us, 2 * t_us) } else { (2 * t_us, 3 * t_us) };
            b[t_us..3 * t_us].iter_mut().for_each(|x| *x = false);
            b[lo..hi].iter_mut().for_each(|x| *x = true);
        }
        _ => {
            let p: f64 = rng.random::<f64>() * 0.5;
            b.iter_mut().for_each(|x| *x = rng.random::<f64>() < p);
            b[..t_us].iter_mut().for_each(|x| *x = false);
            b[t_us - 1] = true;
        }
    }
    if !b[..t_us].iter().any(|&x| x) {
        b[rng.random_range(0..t_us)] = true;
    }
    let mut marked: Vec<usize> = (t_us..3 * t_us).filter(|&i| b[i]).collect();
    while marked.len() > t_us {
        let k = rng.random_range(0..marked.len());
        b[marked.swap_remove(k)] = false;
    }
    b
}

/// Checks the lemma on `samples` random hypothesis-satisfying sequences.
pub fn lemma4_random_scan(t: u64, samples: u64, seed: u64) -> Result<Lemma4Scan> {
    if t < 1 {
        return Err(Error::OutOfRange {
            name: "T",
            value: t as f64,
            expected: "T >= 1",
        });
    }
    let rs = r_set(t as usize);
    let parts: Vec<Lemma4Scan> = rng::blocks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(blk, start, len)| {
            let mut rng = rng::stream_rng(seed, blk);
            let mut part = merge(t, None, vec![]);
            let mut seq = BoxSequence::default();
            for k in 0..len {
                part.examined += 1;
                seq.refill(random_hypothesis_sequence(t, &mut rng));
                debug_assert!(hypotheses(&seq, t).is_ok());
                part.checked += 1;
                let rep = lemma4_unchecked(&seq, t, &rs);
                if !rep.holds() {
                    part.violations += 1;
                    part.first_violation.get_or_insert((start + k, rep));
                }
            }
            part
        })
        .collect();
    Ok(merge(t, Some(seed), parts))
}
