//! Multi-objective learning optimization toolkit.
//!
//! Implements the MoDo double-sampling dynamic-weighting algorithm alongside
//! full-batch MGDA and static weighting, on synthetic objective suites with
//! analytic gradients, and measures the three-way trade-off between
//! Pareto-stationarity optimization error, generalization error, and
//! distance to the conflict-avoidant direction. Includes coupled-run
//! stability estimation and evaluators for the matching theoretical bounds.

pub mod algorithms;
pub mod error;
pub mod metrics;
pub mod minnorm;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod simplex;
pub mod stability;
pub mod types;

pub use algorithms::{
    modo_step, run, run_mgda, run_modo, run_static, AlgoConfig, AlgoKind, Trajectory,
    TrajectoryState,
};
pub use error::{MolError, Result};
pub use metrics::{
    ca_bound_rhs, estimate_initial_suboptimality, evaluate_point, evaluate_trajectory,
    opt_bound_rhs, replicate_seeds, MetricRecord, PopSource, TrajectoryAverages,
};
pub use minnorm::{
    ca_distance, ps_measure, solve_min_norm, solve_min_norm_default, solve_min_norm_regularized,
    MinNormSolution,
};
pub use simplex::{project_simplex, uniform_weights};
pub use stability::{
    estimate_stability, stability_gamma_cap, stability_lower_value, stability_upper_value,
    StabilityReport,
};
pub use types::{
    finite_difference_gradient_check, make_neighboring_dataset, BoundConstants, Dataset,
    GradientMatrix, ModelParams, MolProblem, WeightVector,
};
