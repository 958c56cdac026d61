//! Walk evolution: Chebyshev recursions for the success bound of the
//! interpolated walk search, sweeps over the interpolation parameter,
//! discriminant powers for fast-forwarding, and explicit walk unitaries.

pub mod chebyshev;
pub mod fastforward;
pub mod sweep;
pub mod unitary;

pub use chebyshev::{chebyshev_apply, for_each_chebyshev, q_curve, q_t};
pub use fastforward::{
    algorithm2_success, fastforward_curve, fastforward_success, mean_fastforward_success, r_set, s_set,
    trajectory_probability_exact, trajectory_probability_table, StepRange,
};
pub use sweep::{default_r_grid, default_t_max, sweep_q, SweepResult};
pub use unitary::{
    algorithm1_curve, algorithm1_success_exact, build_walk_unitary, lemma3_deviation, Completion, WalkUnitary,
};
