//! Two-objective quadratic construction whose coupled trajectories on
//! neighboring datasets admit a provable argument-stability lower bound.
//!
//! Objectives `f_{z,m}(x) = 1/2 x^T A x - b_m z^T x` with `b = [1, 1+sqrt(2)]`
//! chosen so that centering `b` against the simplex gives the unit vector
//! `b_P = [-1/sqrt(2), 1/sqrt(2)]`. `A` has smallest eigenvalue
//! `mu = 16 n^{-1/3}` with eigenvector `v`; all samples are multiples of `v`
//! with dataset means `mu v` (for S) and `(mu - 1/n) v` (for S'), and the
//! replaced sample differs by exactly `v`.

use nalgebra::{DMatrix, DVector};

use crate::error::{MolError, Result};
use crate::problems::sc_quadratic::ScQuadratic;
use crate::types::{make_neighboring_dataset, BoundConstants, Dataset, ModelParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundSpec {
    pub n: usize,
    /// Parameter dimension; the construction only needs d >= 1 but larger d
    /// exercises the eigenvector geometry.
    pub d: usize,
}

/// The constructed problem with both datasets and the prescribed
/// hyperparameter helpers.
#[derive(Debug, Clone)]
pub struct LowerBoundExample {
    pub problem: ScQuadratic,
    pub data: Dataset,
    pub data_prime: Dataset,
    pub mu: f64,
    /// Unit eigenvector of `A` for the smallest eigenvalue.
    pub v: DVector<f64>,
    constants: BoundConstants,
}

const PERTURBATION: f64 = 0.01;

impl LowerBoundExample {
    /// Prescribed start `x_0 = 7 v`.
    pub fn x0(&self) -> ModelParams {
        ModelParams::new(&self.v * 7.0).expect("finite")
    }

    /// Prescribed model step size `alpha = 1 / (4 mu T)`.
    pub fn prescribed_alpha(&self, t_horizon: usize) -> f64 {
        1.0 / (4.0 * self.mu * t_horizon as f64)
    }

    /// Prescribed horizon `T = ceil(4 n^{2/3})`.
    pub fn prescribed_horizon(&self) -> usize {
        (4.0 * (self.data.len() as f64).powf(2.0 / 3.0)).ceil() as usize
    }

    /// Weight step cap `gamma <= 1 / (2 M T l_F l_f)` under which the weight
    /// iterates provably stay interior to the simplex.
    pub fn gamma_cap(&self, t_horizon: usize) -> f64 {
        let c = &self.constants;
        1.0 / (2.0 * c.num_objectives as f64 * t_horizon as f64 * c.lip_val_frob * c.lip_val)
    }

    pub fn constants(&self) -> &BoundConstants {
        &self.constants
    }
}

/// Build the problem, the dataset S, and its neighbor S'.
pub fn make_lower_bound_example(spec: &LowerBoundSpec) -> Result<LowerBoundExample> {
    if spec.n < 8 {
        return Err(MolError::InvalidConfig(format!(
            "lower-bound example needs n >= 8, got {}",
            spec.n
        )));
    }
    if spec.d == 0 {
        return Err(MolError::InvalidDimension("d must be >= 1".into()));
    }
    let n = spec.n;
    let d = spec.d;
    let mu = 16.0 * (n as f64).powf(-1.0 / 3.0);

    // Simplest matrix with smallest eigenvalue mu at eigenvector e_1.
    let mut a = DMatrix::from_diagonal_element(d, d, 2.0 * mu);
    a[(0, 0)] = mu;
    let v = DVector::from_fn(d, |i, _| if i == 0 { 1.0 } else { 0.0 });

    let b2 = vec![1.0, 1.0 + 2.0f64.sqrt()];
    let problem = ScQuadratic::new(vec![1.0, 1.0], b2, a, &v * mu)?;

    // Sample coefficients: c_0 = 0 at the replaced index, the rest carry a
    // zero-sum alternating perturbation so the mean is exactly mu.
    let base = mu * n as f64 / (n - 1) as f64;
    let mut coeffs = Vec::with_capacity(n);
    coeffs.push(0.0);
    let rest = n - 1;
    for k in 0..rest {
        let eps = if rest % 2 == 1 && k == rest - 1 {
            0.0
        } else if k % 2 == 0 {
            PERTURBATION
        } else {
            -PERTURBATION
        };
        coeffs.push(base * (1.0 + eps));
    }
    let samples: Vec<DVector<f64>> = coeffs.iter().map(|&c| &v * c).collect();
    let data = Dataset::new(format!("lb-n{n}-d{d}"), samples)?;
    // z_0' = z_0 - v.
    let data_prime = make_neighboring_dataset(&data, 0, data.sample(0) - &v)?;

    let x0 = ModelParams::new(&v * 7.0)?;
    let mut all: Vec<DVector<f64>> = data.samples().to_vec();
    all.extend_from_slice(data_prime.samples());
    let constants = problem.bound_constants_for(&x0, &all)?;
    let problem = problem.with_constants_for(&x0, &all)?;

    Ok(LowerBoundExample {
        problem,
        data,
        data_prime,
        mu,
        v,
        constants,
    })
}
