//! Synthetic objective suites with analytic gradients and, where derivable,
//! analytic bound constants.

mod lower_bound;
mod sc_quadratic;
mod toy;

pub use lower_bound::{make_lower_bound_example, LowerBoundExample, LowerBoundSpec};
pub use sc_quadratic::{make_sc_quadratic, random_spd_matrix, ScQuadratic, ScQuadraticSpec};
pub use toy::{make_toy_nonconvex, ToyNonconvex, ToySpec};
