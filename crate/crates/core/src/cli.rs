//! Experiment driver: one [`ExperimentConfig`] selects a graph, a marked set
//! and a quantity, and [`run`] renders the result as CSV.
//!
//! Every output starts with a `#` line holding the full configuration. Floats
//! are written with 17 significant digits. Multi-part outputs (the presets)
//! are split into sections introduced by `#section,<name>`, each with its
//! own header row. Scalar annotations use `#marker,<name>,<value>` rows.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::chain::{parse_text, to_text, MarkedSet, ReversibleChain, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::evolve::{
    algorithm2_success, default_r_grid, default_t_max, fastforward_curve, lemma3_deviation, s_set, sweep_q,
    Completion, StepRange, SweepResult,
};
use crate::graphs::{self, StarSpec, TorusSpec};
use crate::spectra::{
    extended_hitting_time, hitting_time_exact_with, hitting_time_monte_carlo, hitting_time_spectral,
    torus_ht_plus_closed_form, torus_ht_plus_lower_bound, HittingTimeReport, SolveMethod, SOLVE_LIMIT,
};
use crate::trajectories::{
    corollary2_estimate, corollary3_check, couple_interpolated, lemma4_exhaustive, lemma4_random_scan,
    lemma5_grid, p_grid, simulate, StartLaw,
};

/// What an experiment computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Hitting time of the marked set.
    Ht,
    /// Extended hitting time.
    HtPlus,
    /// Lower bound on the extended hitting time of a torus marked grid.
    HtBound,
    /// Success bound `q(r)` and step count `tau(r)` over a grid of `r`.
    Qsweep,
    /// Fast-forwarding success `|| Pi_M D(s)^t sqrt(pi_U) ||^2`.
    FfSuccess,
    /// Block structure of explicit walk unitaries.
    Lemma3Check,
    /// Counterexample search for the box-rescaling lemma.
    Lemma4Scan,
    /// Concentration of geometric sums.
    Lemma5Grid,
    /// Monte Carlo trajectory estimate conditioned on the good event.
    Cor2Estimate,
    /// Exact fast-forwarding mean under the corollary's hypotheses.
    Cor3Check,
    /// Torus marked-grid preset.
    Example31,
    /// Segmented star preset.
    Example32,
    /// Hitting time against extended hitting time on torus marked grids.
    GapScan,
    /// One sampled trajectory, optionally coupled to interpolated walks.
    TrajSim,
    /// The chain in its text serialization.
    Chain,
}

impl Quantity {
    fn name(self) -> String {
        self.to_possible_value().map_or_else(|| "?".into(), |v| v.get_name().to_string())
    }

    fn needs_graph(self) -> bool {
        !matches!(
            self,
            Quantity::Lemma4Scan | Quantity::Lemma5Grid | Quantity::Example31 | Quantity::Example32 | Quantity::GapScan
        )
    }
}

/// How the hitting time is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HtMethod {
    /// Linear solve, dense or conjugate gradient by size.
    Exact,
    /// Conjugate gradient regardless of size.
    Cg,
    /// Neumann series.
    Neumann,
    /// Eigendecomposition of the unmarked discriminant block.
    Spectral,
    /// Trajectory sampling.
    MonteCarlo,
    /// Closed form for torus marked grids (extended hitting time only).
    TorusClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CompletionArg {
    Householder,
    GramSchmidt,
    Both,
}

/// Full description of one reproducible experiment.
#[derive(Clone, Debug, Args)]
pub struct ExperimentConfig {
    /// Quantity to compute.
    #[arg(long, value_enum)]
    pub quantity: Quantity,

    /// Torus side length N.
    #[arg(long)]
    pub torus: Option<usize>,
    /// Marked-grid spacing of the dense grid.
    #[arg(long, requires = "torus")]
    pub d1: Option<usize>,
    /// Side of the dense grid.
    #[arg(long, requires = "torus")]
    pub k1: Option<usize>,
    /// Spacing of the sparse grid.
    #[arg(long, requires = "torus")]
    pub d: Option<usize>,
    /// Torus marked-grid family member a: d1 = 1, k1 = a 2^(a^2), d = a^2,
    /// N = a^2 2^(a^2).
    #[arg(long)]
    pub family: Option<u32>,
    /// Segmented star with k paths of length k^2.
    #[arg(long)]
    pub star: Option<usize>,
    /// Chain in the text serialization.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Comma-separated marked vertices, overriding the graph's default.
    #[arg(long)]
    pub marked: Option<String>,

    /// Hitting-time method.
    #[arg(long, value_enum)]
    pub method: Option<HtMethod>,
    /// Use this hitting time instead of computing it.
    #[arg(long)]
    pub ht: Option<f64>,
    /// Explicit grid of r = 1/(1-s) values.
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Vec<f64>,
    /// Points per decade of the default r grid.
    #[arg(long)]
    pub per_decade: Option<usize>,
    /// Step cap for sweeps and curves.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Search horizon T, overriding the multiplier rule.
    #[arg(long)]
    pub t: Option<usize>,
    /// T = ceil(multiplier * ceil(HT)) when --t is absent.
    #[arg(long)]
    pub t_mult: Option<f64>,
    /// Comma-separated interpolation parameters.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    /// Draw fast-forwarding steps from 1..24T instead of 1..T.
    #[arg(long)]
    pub corollary_range: bool,
    /// Trajectory length.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Start vertex (default: stationary distribution).
    #[arg(long)]
    pub start: Option<usize>,
    /// Comma-separated T values for lemma scans, or t values for lemma5-grid.
    #[arg(long, value_delimiter = ',')]
    pub lemma_t: Vec<u64>,
    /// Number of p values in the lemma5 grid.
    #[arg(long)]
    pub p_points: Option<usize>,
    /// Unitary completion for lemma3-check.
    #[arg(long, value_enum)]
    pub completion: Option<CompletionArg>,

    /// Master RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "QWSEARCH_THREADS", default_value_t = 0)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// A configuration with every optional field unset.
    pub fn new(quantity: Quantity) -> Self {
        Self {
            quantity,
            torus: None,
            d1: None,
            k1: None,
            d: None,
            family: None,
            star: None,
            file: None,
            marked: None,
            method: None,
            ht: None,
            r_grid: vec![],
            per_decade: None,
            t_max: None,
            samples: None,
            t: None,
            t_mult: None,
            s: vec![],
            corollary_range: false,
            steps: None,
            start: None,
            lemma_t: vec![],
            p_points: None,
            completion: None,
            seed: 0,
            out: None,
            threads: 0,
        }
    }

    /// The `#` header line. Thread count and output path do not affect the
    /// result and are left out so that outputs compare byte for byte.
    pub fn header(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "-".to_string(), |x| x.to_string())
        }
        fn list<T: std::fmt::Display>(v: &[T]) -> String {
            if v.is_empty() {
                "-".into()
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
            }
        }
        let name = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "# qwsearch quantity={} torus={} d1={} k1={} d={} family={} star={} file={} marked={} method={} ht={} \
             r_grid={} per_decade={} t_max={} samples={} t={} t_mult={} s={} corollary_range={} steps={} start={} \
             lemma_t={} p_points={} completion={} seed={}\n",
            self.quantity.name(),
            opt(&self.torus),
            opt(&self.d1),
            opt(&self.k1),
            opt(&self.d),
            opt(&self.family),
            opt(&self.star),
            name(self.file.as_ref().map(|p| p.display().to_string())),
            name(self.marked.as_ref().map(|m| m.replace(',', ";"))),
            name(self.method.and_then(|m| m.to_possible_value()).map(|v| v.get_name().to_string())),
            opt(&self.ht),
            list(&self.r_grid),
            opt(&self.per_decade),
            opt(&self.t_max),
            opt(&self.samples),
            opt(&self.t),
            opt(&self.t_mult),
            list(&self.s),
            self.corollary_range,
            opt(&self.steps),
            opt(&self.start),
            list(&self.lemma_t),
            opt(&self.p_points),
            name(self.completion.and_then(|m| m.to_possible_value()).map(|v| v.get_name().to_string())),
            self.seed,
        )
    }

    fn graph_specs(&self) -> usize {
        [self.torus.is_some(), self.family.is_some(), self.star.is_some(), self.file.is_some()]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    fn samples_or(&self, default: u64) -> u64 {
        self.samples.unwrap_or(default)
    }
}

/// A constructed graph with its marked set.
struct Instance {
    chain: ReversibleChain,
    marked: MarkedSet,
    torus: Option<TorusSpec>,
}

fn parse_marked(text: &str) -> Result<Vec<usize>> {
    let items: Vec<&str> = text.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::InvalidMarkedSet("marked set is empty".into()));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|e| Error::Config(format!("marked vertex '{s}': {e}")))
        })
        .collect()
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.graph_specs() > 1 {
        return Err(Error::Config("give exactly one of --torus, --family, --star, --file".into()));
    }
    if cfg.quantity.needs_graph() && cfg.graph_specs() == 0 {
        return Err(Error::Config(format!("quantity {} needs a graph spec", cfg.quantity.name())));
    }
    if let Some(m) = &cfg.marked {
        parse_marked(m)?;
    }
    let torus_grid = [cfg.d1, cfg.k1, cfg.d].iter().filter(|v| v.is_some()).count();
    if torus_grid != 0 && torus_grid != 3 {
        return Err(Error::Config("--d1, --k1 and --d go together".into()));
    }
    Ok(())
}

fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let explicit = cfg.marked.as_deref().map(parse_marked).transpose()?;
    let (chain, default_marked, torus) = if let Some(n) = cfg.torus {
        let spec = match (cfg.d1, cfg.k1, cfg.d) {
            (Some(d1), Some(k1), Some(d)) => Some(TorusSpec::new(n, d1, k1, d)?),
            _ => None,
        };
        let chain = graphs::torus_chain(n)?;
        let marked = spec.map_or_else(|| vec![0], |s| s.marked_vertices());
        (chain, marked, spec)
    } else if let Some(a) = cfg.family {
        let spec = TorusSpec::family(a)?;
        (graphs::torus_chain(spec.n)?, spec.marked_vertices(), Some(spec))
    } else if let Some(k) = cfg.star {
        let (chain, marked) = graphs::segmented_star_chain(StarSpec::new(k)?)?;
        let m = marked.members().to_vec();
        (chain, m, None)
    } else if let Some(path) = &cfg.file {
        let text = parse_text(&std::fs::read_to_string(path)?)?;
        let chain = match text.pi {
            Some(pi) => ReversibleChain::new(text.matrix, pi)?,
            None => ReversibleChain::from_matrix(text.matrix)?,
        };
        let marked = text
            .marked
            .ok_or_else(|| Error::InvalidMarkedSet("file has no marked section and --marked is absent".into()));
        match (&explicit, marked) {
            (Some(_), _) => (chain, vec![], None),
            (None, Ok(m)) => (chain, m, None),
            (None, Err(e)) => return Err(e),
        }
    } else {
        return Err(Error::Config("no graph spec".into()));
    };
    let marked = MarkedSet::new(&chain, explicit.unwrap_or(default_marked))?;
    Ok(Instance { chain, marked, torus })
}

/// Runs the experiment and returns the CSV text.
pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    validate(cfg)?;
    let mut out = cfg.header();
    let body = match cfg.quantity {
        Quantity::Ht => {
            let inst = build_instance(cfg)?;
            let rep = hitting_time(&inst, cfg)?;
            ht_section(&[("ht", &rep)], cfg.seed)
        }
        Quantity::HtPlus => {
            let inst = build_instance(cfg)?;
            let rep = ht_plus(&inst, cfg)?;
            ht_section(&[("ht-plus", &rep)], cfg.seed)
        }
        Quantity::HtBound => {
            let inst = build_instance(cfg)?;
            let spec = inst
                .torus
                .ok_or_else(|| Error::Config("ht-bound needs a torus marked grid (--d1 --k1 --d or --family)".into()))?;
            ht_section(&[("ht-bound", &torus_ht_plus_lower_bound(&spec)?)], cfg.seed)
        }
        Quantity::Qsweep => {
            let inst = build_instance(cfg)?;
            let ht = hitting_time_value(&inst, cfg)?;
            qsweep_section(&inst, cfg, ht, cfg.per_decade.unwrap_or(64), &[])?
        }
        Quantity::FfSuccess => ff_success(&build_instance(cfg)?, cfg)?,
        Quantity::Lemma3Check => lemma3(&build_instance(cfg)?, cfg)?,
        Quantity::Lemma4Scan => lemma4(cfg)?,
        Quantity::Lemma5Grid => lemma5(cfg)?,
        Quantity::Cor2Estimate => {
            let inst = build_instance(cfg)?;
            let t = horizon(&inst, cfg, 3.0)?;
            let e = corollary2_estimate(
                inst.chain.matrix(),
                inst.marked.members(),
                &start_weights(&inst, cfg)?,
                t,
                cfg.samples_or(10_000),
                cfg.seed,
            )?;
            format!(
                "t,estimate,ci_half_width,pr_event,pr_event_std_err,events,samples,seed\n{},{},{},{},{},{},{},{}\n",
                e.t,
                f(e.estimate),
                f(e.ci_half_width),
                f(e.pr_event),
                f(e.pr_event_std_err),
                e.events,
                e.samples,
                e.seed
            )
        }
        Quantity::Cor3Check => {
            let inst = build_instance(cfg)?;
            let t = horizon(&inst, cfg, 3.0)?;
            let r = corollary3_check(&inst.chain, &inst.marked, t)?;
            format!(
                "t,ht,p_m,mean,best,floor,above_floor\n{},{},{},{},{},{},{}\n",
                r.t,
                f(r.ht),
                f(r.p_m),
                f(r.mean),
                f(r.best),
                f(r.floor),
                r.above_floor
            )
        }
        Quantity::Example31 => example31(cfg)?,
        Quantity::Example32 => example32(cfg)?,
        Quantity::GapScan => gap_scan(cfg)?,
        Quantity::TrajSim => traj_sim(&build_instance(cfg)?, cfg)?,
        Quantity::Chain => {
            let inst = build_instance(cfg)?;
            to_text(inst.chain.matrix(), Some(inst.chain.pi()), Some(&inst.marked), None)
        }
    };
    out.push_str(&body);
    Ok(out)
}

/// [`run`], writing to `cfg.out` or standard output.
pub fn run_to_output(cfg: &ExperimentConfig) -> Result<()> {
    let text = run(cfg)?;
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// 17 significant digits.
fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn ht_section(rows: &[(&str, &HittingTimeReport)], seed: u64) -> String {
    let mut s = String::from("quantity,value,error_bound,method,seed\n");
    for (name, r) in rows {
        writeln!(
            s,
            "{name},{},{},{},{}",
            f(r.value),
            f(r.error_bound),
            r.method.as_str(),
            r.seed.unwrap_or(seed)
        )
        .unwrap();
    }
    s
}

/// The hitting time as a parameter of other quantities: `--ht` if given.
fn hitting_time_value(inst: &Instance, cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.ht {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::OutOfRange {
            name: "ht",
            value: v,
            expected: "positive and finite",
        }),
        None => Ok(hitting_time(inst, cfg)?.value),
    }
}

fn hitting_time(inst: &Instance, cfg: &ExperimentConfig) -> Result<HittingTimeReport> {
    let (c, m) = (&inst.chain, &inst.marked);
    let nu = c.n() - m.len();
    let samples = cfg.samples_or(1_000_000);
    match cfg.method {
        None if nu > SOLVE_LIMIT => hitting_time_monte_carlo(c, m, samples, cfg.seed),
        None | Some(HtMethod::Exact) => hitting_time_exact_with(c, m, SolveMethod::Auto),
        Some(HtMethod::Cg) => hitting_time_exact_with(c, m, SolveMethod::ConjugateGradient),
        Some(HtMethod::Neumann) => hitting_time_exact_with(c, m, SolveMethod::Neumann),
        Some(HtMethod::Spectral) => hitting_time_spectral(c, m),
        Some(HtMethod::MonteCarlo) => hitting_time_monte_carlo(c, m, samples, cfg.seed),
        Some(HtMethod::TorusClosedForm) => Err(Error::Config("torus-closed-form applies to ht-plus only".into())),
    }
}

fn ht_plus(inst: &Instance, cfg: &ExperimentConfig) -> Result<HittingTimeReport> {
    let closed = cfg.method == Some(HtMethod::TorusClosedForm) || inst.chain.n() > DENSE_LIMIT;
    match (closed, inst.torus) {
        (true, Some(spec)) => torus_ht_plus_closed_form(&spec),
        (true, None) => Err(Error::TooLarge {
            what: "extended hitting time outside torus marked grids",
            n: inst.chain.n(),
            limit: DENSE_LIMIT,
        }),
        (false, _) => extended_hitting_time(&inst.chain, &inst.marked),
    }
}

/// `T` from `--t`, or `ceil(mult * ceil(HT))`.
fn horizon(inst: &Instance, cfg: &ExperimentConfig, default_mult: f64) -> Result<usize> {
    if let Some(t) = cfg.t {
        return Ok(t);
    }
    let ht = hitting_time_value(inst, cfg)?;
    Ok((cfg.t_mult.unwrap_or(default_mult) * ht.ceil()).ceil().max(1.0) as usize)
}

fn start_weights(inst: &Instance, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    Ok(match cfg.start {
        Some(x) => {
            let n = inst.chain.n();
            if x >= n {
                return Err(Error::InvalidDistribution(format!("start vertex {x} outside [0, {n})")));
            }
            let mut w = vec![0.0; n];
            w[x] = 1.0;
            w
        }
        None => inst.chain.pi().to_vec(),
    })
}

fn qsweep_section(inst: &Instance, cfg: &ExperimentConfig, ht: f64, per_decade: usize, extra: &[f64]) -> Result<String> {
    let mut grid = if cfg.r_grid.is_empty() {
        default_r_grid(ht, per_decade)
    } else {
        cfg.r_grid.clone()
    };
    grid.extend_from_slice(extra);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(ht));
    let sw = sweep_q(&inst.chain, &inst.marked, &grid, t_max, ht)?;
    Ok(sweep_csv(&sw))
}

fn sweep_csv(sw: &SweepResult) -> String {
    let mut s = String::from("r,s,q,tau,t_max\n");
    for i in 0..sw.r_grid.len() {
        let r = sw.r_grid[i];
        writeln!(s, "{},{},{},{},{}", f(r), f(1.0 - 1.0 / r), f(sw.q[i]), sw.tau[i], sw.t_max).unwrap();
    }
    let b = sw.best();
    writeln!(s, "#marker,r1,{}", f(sw.r1)).unwrap();
    writeln!(s, "#marker,r2,{}", f(sw.r2)).unwrap();
    writeln!(s, "#marker,best_r,{}", f(sw.r_grid[b])).unwrap();
    writeln!(s, "#marker,best_q,{}", f(sw.q[b])).unwrap();
    writeln!(s, "#marker,best_tau,{}", sw.tau[b]).unwrap();
    s
}

fn ff_success(inst: &Instance, cfg: &ExperimentConfig) -> Result<String> {
    let t = horizon(inst, cfg, 72.0)?;
    let range = if cfg.corollary_range { StepRange::Corollary } else { StepRange::Algorithm };
    let ss = if cfg.s.is_empty() { s_set(t) } else { cfg.s.clone() };
    let t_max = cfg.t_max.unwrap_or_else(|| range.upper(t));
    let mut out = String::from("s,t,value\n");
    for &s in &ss {
        let curve = fastforward_curve(&inst.chain, &inst.marked, s, t_max)?;
        for (step, v) in curve.iter().enumerate() {
            writeln!(out, "{},{step},{}", f(s), f(*v)).unwrap();
        }
    }
    writeln!(out, "#marker,T,{t}").unwrap();
    let success = algorithm2_success(&inst.chain, &inst.marked, t, range)?;
    writeln!(out, "#marker,algorithm2_success,{}", f(success)).unwrap();
    Ok(out)
}

fn lemma3(inst: &Instance, cfg: &ExperimentConfig) -> Result<String> {
    let completions: &[Completion] = match cfg.completion.unwrap_or(CompletionArg::Both) {
        CompletionArg::Householder => &[Completion::Householder],
        CompletionArg::GramSchmidt => &[Completion::ReverseGramSchmidt],
        CompletionArg::Both => &[Completion::Householder, Completion::ReverseGramSchmidt],
    };
    let ss = if cfg.s.is_empty() { vec![0.0, 0.3, 0.9] } else { cfg.s.clone() };
    let t_max = cfg.t_max.unwrap_or(10);
    let mut out = String::from("completion,s,t_max,max_deviation,pass\n");
    for &c in completions {
        let name = match c {
            Completion::Householder => "householder",
            Completion::ReverseGramSchmidt => "gram-schmidt",
        };
        for &s in &ss {
            let dev = lemma3_deviation(&inst.chain, &inst.marked, s, t_max, c)?;
            writeln!(out, "{name},{},{t_max},{},{}", f(s), f(dev), dev <= 1e-8).unwrap();
        }
    }
    Ok(out)
}

fn lemma4(cfg: &ExperimentConfig) -> Result<String> {
    let ts = if cfg.lemma_t.is_empty() { vec![2, 8, 32, 128] } else { cfg.lemma_t.clone() };
    let samples = cfg.samples_or(1_000_000);
    let mut out = String::from("t,mode,examined,checked,violations,seed\n");
    for &t in &ts {
        let (mode, scan) = if t <= 2 {
            ("exhaustive", lemma4_exhaustive(t)?)
        } else {
            ("random", lemma4_random_scan(t, samples, cfg.seed)?)
        };
        let seed = scan.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        writeln!(out, "{t},{mode},{},{},{},{seed}", scan.examined, scan.checked, scan.violations).unwrap();
    }
    Ok(out)
}

fn lemma5(cfg: &ExperimentConfig) -> Result<String> {
    let ts = if cfg.lemma_t.is_empty() { (1..=7).collect() } else { cfg.lemma_t.clone() };
    let rows = lemma5_grid(&ts, &p_grid(cfg.p_points.unwrap_or(100)), cfg.samples_or(100_000), cfg.seed)?;
    let mut out = String::from("t,p,exact_prob,empirical_prob,n_samples,seed\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.t, f(r.p), f(r.exact), f(r.empirical), r.samples, r.seed).unwrap();
    }
    Ok(out)
}

fn traj_sim(inst: &Instance, cfg: &ExperimentConfig) -> Result<String> {
    let law = StartLaw::new(&start_weights(inst, cfg)?)?;
    let base = simulate(inst.chain.matrix(), &law, cfg.steps.unwrap_or(100), cfg.seed)?;
    let mut out = String::from("seed,s,step,vertex,marked\n");
    let mut emit = |seed: u64, s: f64, path: &[usize]| {
        for (i, &x) in path.iter().enumerate() {
            writeln!(out, "{seed},{},{i},{x},{}", f(s), u8::from(inst.marked.contains(x))).unwrap();
        }
    };
    emit(base.seed, 0.0, &base.vertices);
    for (k, &s) in cfg.s.iter().enumerate() {
        let coupled = couple_interpolated(&base, &inst.marked, s, cfg.seed.wrapping_add(1 + k as u64))?;
        emit(coupled.seed, s, &coupled.vertices);
    }
    Ok(out)
}

fn section(out: &mut String, name: &str, body: &str) {
    writeln!(out, "#section,{name}").unwrap();
    out.push_str(body);
}

/// Torus marked grid of the given family member, `a = 3` by default: hitting
/// time (Monte Carlo when the unmarked part exceeds the solver bound), the
/// extended hitting time by closed form, its lower bound and the `q(r)` sweep.
fn example31(cfg: &ExperimentConfig) -> Result<String> {
    let spec = TorusSpec::family(cfg.family.unwrap_or(3))?;
    let chain = graphs::torus_chain(spec.n)?;
    let marked = graphs::lemma2_marked_set(&chain, &spec)?;
    let inst = Instance {
        chain,
        marked,
        torus: Some(spec),
    };
    let ht = hitting_time(&inst, cfg)?;
    let plus = torus_ht_plus_closed_form(&spec)?;
    let bound = torus_ht_plus_lower_bound(&spec)?;
    let mut out = String::new();
    section(
        &mut out,
        "hitting-times",
        &ht_section(&[("ht", &ht), ("ht-plus", &plus), ("ht-bound", &bound)], cfg.seed),
    );
    let per_decade = cfg.per_decade.unwrap_or(if spec.n > 1000 { 16 } else { 64 });
    section(
        &mut out,
        "qsweep",
        &qsweep_section(&inst, cfg, ht.value, per_decade, &[96.61])?,
    );
    Ok(out)
}

/// Segmented star, `k = 15` by default: exact hitting time, extended hitting
/// time and the `q(r)` sweep.
fn example32(cfg: &ExperimentConfig) -> Result<String> {
    let (chain, marked) = graphs::segmented_star_chain(StarSpec::new(cfg.star.unwrap_or(15))?)?;
    let inst = Instance {
        chain,
        marked,
        torus: None,
    };
    let ht = hitting_time(&inst, cfg)?;
    let plus = extended_hitting_time(&inst.chain, &inst.marked)?;
    let k = inst.chain.n().saturating_sub(1) as f64;
    let k = k.cbrt().round();
    let mut out = String::new();
    section(&mut out, "hitting-times", &ht_section(&[("ht", &ht), ("ht-plus", &plus)], cfg.seed));
    section(
        &mut out,
        "qsweep",
        &qsweep_section(&inst, cfg, ht.value, cfg.per_decade.unwrap_or(64), &[k * k])?,
    );
    Ok(out)
}

/// `HT+ / HT` across family members `a` (default 2 and 3).
fn gap_scan(cfg: &ExperimentConfig) -> Result<String> {
    let members: Vec<u32> = if cfg.lemma_t.is_empty() {
        vec![2, 3]
    } else {
        cfg.lemma_t.iter().map(|&a| a as u32).collect()
    };
    let mut out = String::from("a,n,m,ht,ht_method,ht_error,ht_plus,ratio,seed\n");
    let mut ratios = Vec::new();
    for a in members {
        let spec = TorusSpec::family(a)?;
        let chain = graphs::torus_chain(spec.n)?;
        let marked = graphs::lemma2_marked_set(&chain, &spec)?;
        let inst = Instance {
            chain,
            marked,
            torus: Some(spec),
        };
        let ht = hitting_time(&inst, cfg)?;
        let plus = torus_ht_plus_closed_form(&spec)?;
        let ratio = plus.value / ht.value;
        ratios.push(ratio);
        writeln!(
            out,
            "{a},{},{},{},{},{},{},{},{}",
            inst.chain.n(),
            inst.marked.len(),
            f(ht.value),
            ht.method.as_str(),
            f(ht.error_bound),
            f(plus.value),
            f(ratio),
            ht.seed.unwrap_or(cfg.seed)
        )
        .unwrap();
    }
    let grows = ratios.windows(2).all(|w| w[1] > w[0]);
    writeln!(out, "#marker,ratio_grows,{grows}").unwrap();
    Ok(out)
}
