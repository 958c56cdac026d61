use qwsearch::chain::{MarkedSet, StochasticMatrix};
use qwsearch::graphs;
use qwsearch::interpolate::build_interpolated;
use qwsearch::rng::stream_rng;
use qwsearch::trajectories::{
    corollary2_estimate, couple_interpolated, empirical_marginal, event_probability, geometric_sum_window,
    geometric_sum_window_empirical, simulate, simulate_with, total_variation, StartLaw, TrajectoryRecord,
};

fn power_marginal(rho: &[f64], steps: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut v = rho.to_vec();
    for _ in 0..steps {
        v = apply(&v);
    }
    v
}

#[test]
fn torus_marginal_matches_matrix_power() {
    // 10^6 samples keep the expected sampling TV near 0.003 on 64 states,
    // well clear of the 0.01 threshold.
    let m = StochasticMatrix::torus(8).unwrap();
    let mut rho = vec![0.0; 64];
    rho[0] = 0.6;
    rho[27] = 0.4;
    let law = StartLaw::new(&rho).unwrap();
    let emp = empirical_marginal(&m, &law, 10, 1_000_000, 7);
    let exact = power_marginal(&rho, 10, |v| m.left_apply(v));
    let tv = total_variation(&emp, &exact);
    assert!(tv < 0.01, "tv = {tv}");
}

#[test]
fn coupled_paths_follow_interpolated_chain() {
    let chain = graphs::torus_chain(4).unwrap();
    let marked = MarkedSet::new(&chain, [5]).unwrap();
    let s = 0.75;
    let steps = 12;
    let ic = build_interpolated(&chain, &marked, s).unwrap();
    let law = StartLaw::new(chain.pi()).unwrap();
    let samples = 100_000u64;
    let mut counts = vec![0.0; chain.n()];
    let mut rng = stream_rng(3, 0);
    for i in 0..samples {
        let base = TrajectoryRecord {
            vertices: simulate_with(chain.matrix(), &law, steps, &mut rng),
            seed: 0,
            chain_id: 0,
        };
        let y = couple_interpolated(&base, &marked, s, 1000 + i).unwrap();
        counts[y.vertices[steps]] += 1.0 / samples as f64;
    }
    let exact = power_marginal(chain.pi(), steps, |v| ic.left_apply(v));
    let tv = total_variation(&counts, &exact);
    assert!(tv < 0.01, "tv = {tv}");
}

#[test]
fn simulation_is_seeded() {
    let m = StochasticMatrix::torus(5).unwrap();
    let law = StartLaw::vertex(25, 3).unwrap();
    let a = simulate(&m, &law, 200, 11).unwrap();
    let b = simulate(&m, &law, 200, 11).unwrap();
    let c = simulate(&m, &law, 200, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.vertices, c.vertices);
    assert_eq!(a.vertices[0], 3);
    assert_eq!(a.vertices.len(), 201);
}

#[test]
fn geometric_window_sampling_agrees_with_exact() {
    for (t, p) in [(1u64, 0.3), (4, 0.05), (7, 0.62), (12, 0.9)] {
        let exact = geometric_sum_window(p, t).unwrap();
        let (est, se) = geometric_sum_window_empirical(p, t, 200_000, 5).unwrap();
        assert!((est - exact).abs() <= 4.0 * se.max(1e-4), "t={t} p={p}: {est} vs {exact}");
    }
}

#[test]
fn event_frequency_consistent_between_estimators() {
    let chain = graphs::torus_chain(6).unwrap();
    let t = 60;
    let (pr, se) = event_probability(chain.matrix(), &[0], chain.pi(), t, 20_000, 1).unwrap();
    let est = corollary2_estimate(chain.matrix(), &[0], chain.pi(), t, 4_000, 2).unwrap();
    assert!((est.pr_event - pr).abs() < 4.0 * (se + est.pr_event_std_err));
    assert!(est.estimate > 0.0 && est.estimate < 1.0);
    assert!(est.ci_half_width > 0.0 && est.ci_half_width < est.estimate);
}
