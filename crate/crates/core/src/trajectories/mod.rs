//! Classical trajectories: sampling, the coupling between the walk and its
//! interpolated version, box sequences with r-rescalings, and the lemmas
//! that turn trajectory statements into search success bounds.

pub mod boxes;
pub mod corollary;
pub mod lemma5;
pub mod simulate;

pub use boxes::{
    lemma4_check, lemma4_exhaustive, lemma4_random_scan, random_hypothesis_sequence, to_boxes, BoxSequence,
    Lemma4Report, Lemma4Scan,
};
pub use corollary::{
    corollary2_estimate, corollary3_check, event_holds, event_probability, success_floor, Corollary2Estimate,
    Corollary3Report, FLOOR_CONSTANT,
};
pub use lemma5::{
    chebyshev_window_bound, geometric_sum_window, geometric_sum_window_empirical, lemma5_grid, p_grid, window_bounds,
    Lemma5Row,
};
pub use simulate::{
    couple_interpolated, couple_with_stays, empirical_marginal, simulate, simulate_with, total_variation, StartLaw,
    TrajectoryRecord,
};
