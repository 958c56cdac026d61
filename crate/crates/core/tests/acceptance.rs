//! Acceptance suite: one PASS or FAIL line per criterion, then a summary.
//!
//! Run with `cargo test -p qwsearch --test acceptance --release`. The process
//! exits with a failure status if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use qwsearch::chain::{MarkedSet, ReversibleChain, StochasticMatrix};
use qwsearch::evolve::{
    default_r_grid, default_t_max, fastforward_curve, lemma3_deviation, q_t, sweep_q, trajectory_probability_table,
    Completion,
};
use qwsearch::graphs::{self, StarSpec, TorusSpec};
use qwsearch::interpolate::s_from_r;
use qwsearch::rng::stream_rng;
use qwsearch::spectra::{
    extended_hitting_time, hitting_time_exact, hitting_time_monte_carlo, torus_ht_plus_closed_form,
    torus_ht_plus_lower_bound,
};
use qwsearch::trajectories::{event_probability, lemma4_exhaustive, lemma4_random_scan, lemma5_grid, p_grid};
use qwsearch::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn star_example() -> Result<Outcome> {
    let (chain, marked) = graphs::segmented_star_chain(StarSpec::new(15)?)?;
    let ht = hitting_time_exact(&chain, &marked)?.value;
    let plus = extended_hitting_time(&chain, &marked)?.value;
    let sweep = sweep_q(&chain, &marked, &default_r_grid(ht, 64), default_t_max(ht), ht)?;
    let tau_cap = 2.31 * ht.sqrt();
    let good = (0..sweep.q.len()).filter(|&i| sweep.q[i] >= 0.59 && sweep.tau[i] as f64 <= tau_cap).count();
    let best = sweep.best();
    let best_r = sweep.r_grid[best];
    let pass = (ht - 80090.95).abs() <= 0.5
        && rel(plus, 1016848.98) <= 1e-3
        && good > 0
        && (112.5..=450.0).contains(&best_r);
    outcome(
        pass,
        format!(
            "HT={ht:.4} HT+={plus:.2} grid points with q>=0.59 and tau<={tau_cap:.1}: {good}; best r={best_r:.2} q={:.5} tau={}",
            sweep.q[best], sweep.tau[best]
        ),
    )
}

fn torus_reduced() -> Result<Outcome> {
    let spec = TorusSpec::family(2)?;
    let chain = graphs::torus_chain(spec.n)?;
    let marked = graphs::lemma2_marked_set(&chain, &spec)?;
    let dense = extended_hitting_time(&chain, &marked)?.value;
    let closed = torus_ht_plus_closed_form(&spec)?.value;
    let bound = torus_ht_plus_lower_bound(&spec)?.value;
    let r = rel(dense, closed);
    outcome(
        r <= 1e-6 && bound <= dense,
        format!("eigendecomposition HT+={dense:.6} closed form={closed:.6} relative={r:.2e} lower bound={bound:.6}"),
    )
}

struct FullScale {
    ht: f64,
    ht_err: f64,
    plus: f64,
}

fn torus_full(out: &mut Option<FullScale>) -> Result<Outcome> {
    let spec = TorusSpec::family(3)?;
    let chain = graphs::torus_chain(spec.n)?;
    let marked = graphs::lemma2_marked_set(&chain, &spec)?;
    let q = q_t(&chain, &marked, s_from_r(96.61)?, 21)?;
    let mc = hitting_time_monte_carlo(&chain, &marked, 1_000_000, 0)?;
    let plus = torus_ht_plus_closed_form(&spec)?.value;
    let covers = (mc.value - 162.98).abs() <= mc.error_bound;
    *out = Some(FullScale {
        ht: mc.value,
        ht_err: mc.error_bound,
        plus,
    });
    outcome(
        q > 0.98 && covers && rel(plus, 1.01e7) <= 0.01,
        format!(
            "q_21(r=96.61)={q:.5}; MC HT={:.3} +- {:.3} (10^6 samples); closed-form HT+={plus:.1}",
            mc.value, mc.error_bound
        ),
    )
}

fn gap_growth(full: Option<&FullScale>) -> Result<Outcome> {
    let spec = TorusSpec::family(2)?;
    let chain = graphs::torus_chain(spec.n)?;
    let marked = graphs::lemma2_marked_set(&chain, &spec)?;
    let ht2 = hitting_time_exact(&chain, &marked)?.value;
    let ratio2 = torus_ht_plus_closed_form(&spec)?.value / ht2;
    let Some(f) = full else {
        return outcome(false, format!("a=2 ratio {ratio2:.2}; a=3 values unavailable"));
    };
    let ratio3 = f.plus / f.ht;
    // Worst case for the comparison: the top of the Monte Carlo interval.
    let ratio3_low = f.plus / (f.ht + f.ht_err);
    outcome(
        ratio3_low > ratio2,
        format!("HT+/HT: a=2 {ratio2:.2} (HT={ht2:.4}), a=3 {ratio3:.1} (at least {ratio3_low:.1})"),
    )
}

/// Reversible chain from symmetric edge weights.
fn weighted_chain(n: usize, weight: impl Fn(usize, usize) -> f64) -> Result<ReversibleChain> {
    let mut rows = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    for x in 0..n {
        let w: Vec<(usize, f64)> = (0..n).map(|y| (y, weight(x.min(y), x.max(y)))).filter(|e| e.1 > 0.0).collect();
        let total: f64 = w.iter().map(|e| e.1).sum();
        rows.push(w.into_iter().map(|(y, v)| (y, v / total)).collect());
        mass.push(total);
    }
    let z: f64 = mass.iter().sum();
    ReversibleChain::new(StochasticMatrix::from_rows(rows)?, mass.into_iter().map(|m| m / z).collect())
}

fn lazy_path(n: usize) -> Result<ReversibleChain> {
    weighted_chain(n, |x, y| match y - x {
        0 => 2.0,
        1 => 1.0,
        _ => 0.0,
    })
}

/// Random symmetric weights on a connected support with self-loops.
fn random_chain(n: usize, seed: u64) -> Result<ReversibleChain> {
    let mut rng = stream_rng(seed, 0);
    let mut w = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x..n {
            let keep = y == x || y == x + 1 || rng.random::<f64>() < 0.4;
            if keep {
                w[x][y] = 0.1 + rng.random::<f64>();
            }
        }
    }
    weighted_chain(n, |x, y| w[x][y])
}

fn small_chains() -> Result<Vec<(String, ReversibleChain, Vec<usize>)>> {
    let mut out = Vec::new();
    for (p, q) in [(0.3, 0.6), (0.9, 0.2), (0.5, 0.5)] {
        let m = StochasticMatrix::from_rows(vec![vec![(0, 1.0 - p), (1, p)], vec![(0, q), (1, 1.0 - q)]])?;
        out.push((format!("two-state({p},{q})"), ReversibleChain::from_matrix(m)?, vec![1]));
    }
    out.push(("torus(2)".into(), graphs::torus_chain(2)?, vec![3]));
    for n in 3..=8 {
        out.push((format!("lazy-path({n})"), lazy_path(n)?, vec![n / 2]));
        out.push((format!("complete({n})"), weighted_chain(n, |_, _| 1.0)?, vec![0, n - 1]));
        for seed in 0..3u64 {
            let chain = random_chain(n, 100 * n as u64 + seed)?;
            let mut rng = stream_rng(seed, n as u64);
            let size = 1 + rng.random_range(0..n / 2);
            let mut marked: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = rng.random_range(i..n);
                marked.swap(i, j);
            }
            marked.truncate(size);
            out.push((format!("random({n},{seed})"), chain, marked));
        }
    }
    Ok(out)
}

fn lemma3() -> Result<Outcome> {
    let chains = small_chains()?;
    let mut worst = 0.0_f64;
    let mut where_ = String::new();
    let mut runs = 0;
    for (name, chain, m) in &chains {
        let marked = MarkedSet::new(chain, m.iter().copied())?;
        for s in [0.0, 0.3, 0.9] {
            for completion in [Completion::Householder, Completion::ReverseGramSchmidt] {
                let dev = lemma3_deviation(chain, &marked, s, 10, completion)?;
                runs += 1;
                if dev > worst {
                    worst = dev;
                    where_ = format!("{name} s={s} {completion:?}");
                }
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{} chains, {runs} runs, worst deviation {worst:.2e} ({where_})", chains.len()),
    )
}

fn lemma5() -> Result<Outcome> {
    let ts: Vec<u64> = (1..=7).collect();
    let rows = lemma5_grid(&ts, &p_grid(100), 100_000, 0)?;
    let worst_exact = rows.iter().map(|r| r.exact).fold(f64::INFINITY, f64::min);
    let mut exceed = Vec::new();
    for r in &rows {
        let sigma = (r.exact * (1.0 - r.exact) / r.samples as f64).sqrt();
        if (r.empirical - r.exact).abs() > 3.0 * sigma {
            exceed.push(format!("t={} p={:.2} z={:.2}", r.t, r.p, (r.empirical - r.exact) / sigma));
        }
    }
    // Under the null each point exceeds 3 sigma with probability about 0.0027.
    let expected = 0.0027 * rows.len() as f64;
    outcome(
        worst_exact >= 7.0 / 16.0 && exceed.is_empty(),
        format!(
            "{} points, min exact={worst_exact:.5} (7/16=0.4375); 3-sigma exceedances: {} (about {expected:.1} expected by chance){}{}",
            rows.len(),
            exceed.len(),
            if exceed.is_empty() { "" } else { ": " },
            exceed.join("; ")
        ),
    )
}

fn lemma4() -> Result<Outcome> {
    let ex = lemma4_exhaustive(2)?;
    let mut detail = format!(
        "T=2 exhaustive: {} sequences, {} satisfy the hypotheses, {} violations",
        ex.examined, ex.checked, ex.violations
    );
    let mut violations = ex.violations;
    for t in [8, 32, 128] {
        let scan = lemma4_random_scan(t, 1_000_000, 0)?;
        violations += scan.violations;
        detail.push_str(&format!("; T={t}: {} random, {} violations", scan.checked, scan.violations));
        if scan.checked != 1_000_000 {
            violations += 1;
        }
    }
    outcome(violations == 0, detail)
}

fn lemma6() -> Result<Outcome> {
    let star3 = graphs::segmented_star_chain(StarSpec::new(3)?)?;
    let star5 = graphs::segmented_star_chain(StarSpec::new(5)?)?;
    let torus8 = graphs::torus_chain(8)?;
    let single = MarkedSet::new(&torus8, [0])?;
    let spec = TorusSpec::new(12, 1, 4, 3)?;
    let torus12 = graphs::torus_chain(12)?;
    let grid = graphs::lemma2_marked_set(&torus12, &spec)?;
    let random = random_chain(150, 7)?;
    let few = MarkedSet::new(&random, [3, 40, 41, 99, 140])?;
    let cases: Vec<(&str, &ReversibleChain, &MarkedSet)> = vec![
        ("star(3)", &star3.0, &star3.1),
        ("star(5)", &star5.0, &star5.1),
        ("torus(8) single", &torus8, &single),
        ("torus(12) grid", &torus12, &grid),
        ("random(150)", &random, &few),
    ];
    let mut checks = 0u64;
    let mut violations = 0u64;
    let mut tightest = f64::INFINITY;
    for (_, chain, marked) in &cases {
        for s in [0.0, 0.5, 0.75, 0.9, 0.99] {
            let amp = fastforward_curve(chain, marked, s, 40)?;
            let table = trajectory_probability_table(chain, marked, s, 40, 40)?;
            for (t, row) in table.iter().enumerate() {
                let a = amp[t].sqrt();
                for &p in row {
                    checks += 1;
                    if p > a + 1e-12 {
                        violations += 1;
                    }
                    if p > 0.0 {
                        tightest = tightest.min(a / p);
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{} chains (n <= 150), {checks} (s, t, t') triples, {violations} violations, smallest amplitude/probability ratio {tightest:.4}",
            cases.len()
        ),
    )
}

fn corollary_hypothesis() -> Result<Outcome> {
    let torus = graphs::torus_chain(8)?;
    let spec = StarSpec::new(3)?;
    let (star, _) = graphs::segmented_star_chain(spec)?;
    let star_m: Vec<usize> = (7..=9).map(|d| spec.vertex(0, d)).collect();
    let cases = [("torus(8) M={0}", &torus, vec![0]), ("star(3) M=path0[7..9]", &star, star_m)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, chain, m) in cases {
        let marked = MarkedSet::new(chain, m.iter().copied())?;
        let ht = hitting_time_exact(chain, &marked)?.value;
        let t = 3 * ht.ceil() as usize;
        let p_m = marked.p_m();
        let (pr, se) = event_probability(chain.matrix(), &m, chain.pi(), t, 100_000, 0)?;
        let ok = p_m <= 1.0 / 9.0 && t as f64 >= 3.0 * ht && pr + 3.0 * se >= 2.0 / 9.0;
        pass &= ok;
        parts.push(format!("{name}: p_M={p_m:.4} HT={ht:.2} T={t} Pr(E)={pr:.4} +- {se:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn determinism() -> Result<Outcome> {
    let runs: &[&[&str]] = &[
        &["--quantity", "ht", "--torus", "9", "--method", "monte-carlo", "--samples", "50000", "--seed", "3"],
        &["--quantity", "cor2-estimate", "--torus", "6", "--samples", "3000", "--seed", "5"],
        &["--quantity", "lemma4-scan", "--lemma-t", "8,32", "--samples", "20000", "--seed", "1"],
        &["--quantity", "lemma5-grid", "--lemma-t", "2,5", "--p-points", "10", "--samples", "5000"],
        &["--quantity", "qsweep", "--star", "3", "--per-decade", "8"],
        &["--quantity", "ff-success", "--torus", "5", "--s", "0.5,0.9", "--t", "20"],
        &["--quantity", "traj-sim", "--torus", "4", "--steps", "60", "--s", "0.75", "--seed", "8"],
    ];
    let bin = env!("CARGO_BIN_EXE_qwsearch");
    let mut mismatched = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .map(|threads| {
                let out = Command::new(bin).args(*args).args(["--threads", threads]).output().expect("binary runs");
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            mismatched.push(args[1]);
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} CLI runs at 1 and 4 threads; mismatches: {}",
            runs.len(),
            if mismatched.is_empty() { "none".into() } else { mismatched.join(",") }
        ),
    )
}

fn main() -> ExitCode {
    let mut full = None;
    let mut failed = 0;
    let mut report = |id: u32, name: &str, run: &mut dyn FnMut() -> Result<Outcome>| {
        let clock = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64()
        );
    };
    report(1, "segmented star k=15", &mut star_example);
    report(2, "torus grid a=2", &mut torus_reduced);
    report(3, "torus grid a=3", &mut || torus_full(&mut full));
    report(4, "HT+/HT gap growth", &mut || gap_growth(full.as_ref()));
    report(5, "walk block identity", &mut lemma3);
    report(6, "geometric window concentration", &mut lemma5);
    report(7, "box rescaling scans", &mut lemma4);
    report(8, "fast-forward amplitude bound", &mut lemma6);
    report(9, "conditioning event frequency", &mut corollary_hypothesis);
    report(10, "thread-count determinism", &mut determinism);
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
