use qwsearch::chain::{MarkedSet, ReversibleChain, StochasticMatrix};
use qwsearch::evolve::{
    algorithm1_success_exact, fastforward_success, q_t, trajectory_probability_table, Completion,
    lemma3_deviation,
};
use qwsearch::graphs;

/// Lazy walk on a path of `n` vertices.
fn lazy_path(n: usize) -> ReversibleChain {
    let rows = (0..n)
        .map(|x| {
            let mut row = vec![(x, 0.5)];
            let nb: Vec<usize> = [x.wrapping_sub(1), x + 1].into_iter().filter(|&y| y < n).collect();
            let w = 0.5 / nb.len() as f64;
            row.extend(nb.into_iter().map(|y| (y, w)));
            row
        })
        .collect();
    ReversibleChain::from_matrix(StochasticMatrix::from_rows(rows).unwrap()).unwrap()
}

#[test]
fn trajectory_probability_below_fastforward_amplitude() {
    let chain = lazy_path(12);
    let marked = MarkedSet::new(&chain, [7, 8]).unwrap();
    for s in [0.0, 0.5, 0.875] {
        let table = trajectory_probability_table(&chain, &marked, s, 25, 25).unwrap();
        for (t, row) in table.iter().enumerate() {
            let amp = fastforward_success(&chain, &marked, s, t).unwrap().sqrt();
            for &p in row {
                assert!(amp + 1e-12 >= p, "s={s} t={t}: {amp} < {p}");
            }
        }
    }
}

#[test]
fn explicit_walk_beats_chebyshev_bound() {
    let chain = graphs::torus_chain(3).unwrap();
    let marked = MarkedSet::new(&chain, [4]).unwrap();
    for s in [0.0, 0.4, 0.8] {
        for t in 0..8 {
            let exact = algorithm1_success_exact(&chain, &marked, s, t).unwrap();
            assert!(exact + 1e-10 >= q_t(&chain, &marked, s, t).unwrap(), "s={s} t={t}");
        }
    }
}

#[test]
fn walk_block_is_completion_independent() {
    let chain = lazy_path(5);
    let marked = MarkedSet::new(&chain, [0]).unwrap();
    for completion in [Completion::Householder, Completion::ReverseGramSchmidt] {
        assert!(lemma3_deviation(&chain, &marked, 0.3, 6, completion).unwrap() < 1e-10);
    }
}
