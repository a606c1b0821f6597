//! Observability Gramian `G_T = ∫₀ᵀ e^{-itΔ} M_{W²} e^{itΔ} dt` on a truncated
//! subspace, its smallest eigenvalue, mixed `L⁴(L²)` norms of free waves, and
//! eigenspace restriction constants.

mod eigenspace;
mod gramian;
mod mixed;
mod setup;

pub use eigenspace::{
    complete_eigenvalue_limit, eigenspace_modes, eigenspace_observability, restricted_matrix,
    weight_sq_coefficients,
};
pub use gramian::{
    dense_smallest_eigenvalue, gramian_apply, pairwise_sum, observability_constant, sweep_cutoffs, ConjugatedMultiplier, Gramian,
    GramianReport, SetupEcho, SolverOptions, SweepRow,
};
pub use mixed::{
    density_nodes, mixed_norm_l4l2, state_bandwidth, strichartz_sweep, time_integrated_density, StrichartzSweep,
};
pub use setup::{
    required_nodes, ObservationConfig, ObservationSetup, QuadratureRule, Subspace, TimeQuadrature, OVERSAMPLING,
};
