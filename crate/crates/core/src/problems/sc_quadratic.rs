//! Strongly convex quadratic family
//! `f_{z,m}(x) = 1/2 b_{1,m} x^T A x - b_{2,m} z^T x`
//! with a shared SPD curvature matrix `A` and Gaussian data
//! `z_i = z_mean + z_std * g_i`.
//!
//! The weighted empirical objective has the closed-form minimizer
//! `x*(lambda) = (b2.lambda / b1.lambda) A^{-1} z_bar`, which makes
//! Pareto-front and bound-constant quantities analytic.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MolError, Result};
use crate::types::{BoundConstants, Dataset, GradientMatrix, ModelParams, MolProblem, WeightVector};

/// Generation parameters for the strongly convex quadratic suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScQuadraticSpec {
    pub d: usize,
    pub m: usize,
    /// Per-objective curvature scales, all positive.
    pub b1: Vec<f64>,
    /// Per-objective linear scales.
    pub b2: Vec<f64>,
    /// Shared symmetric positive definite curvature matrix.
    pub a: DMatrix<f64>,
    pub z_mean: DVector<f64>,
    pub z_std: f64,
    pub n: usize,
    pub data_seed: u64,
}

impl ScQuadraticSpec {
    /// The three-objective configuration used throughout the synthetic
    /// strongly convex experiments: `b1 = [1, 2, 1]`, `b2 = [1, 3, 2]`,
    /// `d = 10`, `n = 50`, `z ~ N(e_1, I)`, and a seeded random SPD `A`
    /// with eigenvalues log-uniform in `[0.5, 5]`.
    pub fn default_suite(n: usize, data_seed: u64) -> Self {
        let d = 10;
        let mut z_mean = DVector::zeros(d);
        z_mean[0] = 1.0;
        ScQuadraticSpec {
            d,
            m: 3,
            b1: vec![1.0, 2.0, 1.0],
            b2: vec![1.0, 3.0, 2.0],
            a: random_spd_matrix(d, 0x5c_ab1e, 0.5, 5.0),
            z_mean,
            z_std: 1.0,
            n,
            data_seed,
        }
    }
}

/// Random SPD matrix `Q D Q^T` with a seeded rotation `Q` and eigenvalues
/// log-uniform in `[eig_lo, eig_hi]`.
pub fn random_spd_matrix(d: usize, seed: u64, eig_lo: f64, eig_hi: f64) -> DMatrix<f64> {
    assert!(eig_lo > 0.0 && eig_hi >= eig_lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let eigs = DVector::from_fn(d, |_, _| {
        (rng.gen_range(eig_lo.ln()..=eig_hi.ln())).exp()
    });
    let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    // Symmetrize away rounding asymmetry.
    (&a + a.transpose()) * 0.5
}

/// The instantiated problem. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct ScQuadratic {
    b1: DVector<f64>,
    b2: DVector<f64>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    z_mean: DVector<f64>,
    eig_min: f64,
    eig_max: f64,
    constants: Option<BoundConstants>,
}

impl ScQuadratic {
    pub fn new(b1: Vec<f64>, b2: Vec<f64>, a: DMatrix<f64>, z_mean: DVector<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(MolError::InvalidDimension("A must be square with d >= 1".into()));
        }
        if b1.len() != b2.len() || b1.is_empty() {
            return Err(MolError::InvalidDimension(
                "b1 and b2 must have the same length M >= 1".into(),
            ));
        }
        if z_mean.len() != d {
            return Err(MolError::SampleShapeMismatch {
                expected: d,
                got: z_mean.len(),
            });
        }
        if b1.iter().any(|&b| !(b > 0.0)) {
            return Err(MolError::InvalidConstants("b1 entries must be positive".into()));
        }
        let scale = a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(MolError::InvalidConstants(format!(
                        "A not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let eigs = a.clone().symmetric_eigen().eigenvalues;
        let eig_min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let eig_max = eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if eig_min < 1e-8 {
            return Err(MolError::NotPositiveDefinite { min_eig: eig_min });
        }
        let a_inv = a
            .clone()
            .cholesky()
            .ok_or(MolError::NotPositiveDefinite { min_eig: eig_min })?
            .inverse();
        Ok(ScQuadratic {
            b1: DVector::from_vec(b1),
            b2: DVector::from_vec(b2),
            a,
            a_inv,
            z_mean,
            eig_min,
            eig_max,
            constants: None,
        })
    }

    /// Attach analytic bound constants derived from a start point and the
    /// sample set the trajectory will draw from.
    pub fn with_constants_for(mut self, x0: &ModelParams, samples: &[DVector<f64>]) -> Result<Self> {
        self.constants = Some(self.bound_constants_for(x0, samples)?);
        Ok(self)
    }

    /// Smallest strong-convexity modulus over objectives: `min_m b_{1,m} * eig_min(A)`.
    pub fn mu(&self) -> f64 {
        self.b1.iter().fold(f64::INFINITY, |a, &b| a.min(b)) * self.eig_min
    }

    /// Largest per-objective gradient Lipschitz constant: `max_m b_{1,m} * eig_max(A)`.
    pub fn lip_grad(&self) -> f64 {
        self.b1.iter().fold(0.0f64, |a, &b| a.max(b)) * self.eig_max
    }

    /// Analytic bound constants.
    ///
    /// The trajectory gradient-norm bound follows the strongly convex
    /// boundedness argument: any weighted per-sample minimizer satisfies
    /// `||x*|| <= max_m |b_{2,m}|/b_{1,m} * max_i ||A^{-1} z_i||`, iterates
    /// stay inside `c_x = max((1 + sqrt(2 kappa)) c_{x*}, ||x0||)` with
    /// `kappa = 3 l_{f,1} / mu`, and the gradient norm is at most
    /// `l_{f,1} (c_x + c_{x*})`.
    pub fn bound_constants_for(
        &self,
        x0: &ModelParams,
        samples: &[DVector<f64>],
    ) -> Result<BoundConstants> {
        let mu = self.mu();
        let lip_grad = self.lip_grad();
        let lip_grad_frob = self.b1.norm() * self.eig_max;
        let ratio = self
            .b1
            .iter()
            .zip(self.b2.iter())
            .fold(0.0f64, |acc, (&b1, &b2)| acc.max(b2.abs() / b1));
        let max_inv_norm = samples
            .iter()
            .map(|z| (&self.a_inv * z).norm())
            .fold(0.0f64, f64::max);
        let c_x_star = ratio * max_inv_norm;
        let kappa = 3.0 * lip_grad / mu;
        let c_x = ((1.0 + (2.0 * kappa).sqrt()) * c_x_star).max(x0.norm());
        let lip_val = lip_grad * (c_x + c_x_star);
        BoundConstants::new(lip_grad, lip_grad_frob, lip_val, mu, self.b1.len())
    }

    /// Minimizer of the lambda-weighted quadratic against data mean `z_bar`:
    /// `(b2.lambda / b1.lambda) A^{-1} z_bar`.
    pub fn weighted_minimizer(&self, weights: &WeightVector, z_bar: &DVector<f64>) -> ModelParams {
        let ratio = self.b2.dot(weights.as_vector()) / self.b1.dot(weights.as_vector());
        ModelParams::new(&self.a_inv * z_bar * ratio).expect("finite by construction")
    }

    pub fn curvature_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn eig_bounds(&self) -> (f64, f64) {
        (self.eig_min, self.eig_max)
    }
}

impl MolProblem for ScQuadratic {
    fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.b1.len())
    }

    fn per_sample_value(&self, x: &ModelParams, z: &DVector<f64>, m: usize) -> f64 {
        let xv = x.as_vector();
        0.5 * self.b1[m] * (xv.dot(&(&self.a * xv))) - self.b2[m] * z.dot(xv)
    }

    fn per_sample_gradient_matrix(&self, x: &ModelParams, z: &DVector<f64>) -> GradientMatrix {
        let ax = &self.a * x.as_vector();
        let (d, m) = self.dims();
        let mut cols = DMatrix::zeros(d, m);
        for j in 0..m {
            cols.set_column(j, &(&ax * self.b1[j] - z * self.b2[j]));
        }
        GradientMatrix::new(cols).expect("finite by construction")
    }

    fn population_gradient_matrix(&self, x: &ModelParams) -> Option<GradientMatrix> {
        Some(self.per_sample_gradient_matrix(x, &self.z_mean))
    }

    fn bound_constants(&self) -> Option<BoundConstants> {
        self.constants.clone()
    }

    fn scalarized_empirical_minimum(&self, weights: &WeightVector, data: &Dataset) -> Option<f64> {
        let z_bar = data.mean();
        let x_star = self.weighted_minimizer(weights, &z_bar);
        let value = (0..self.b1.len())
            .map(|m| self.per_sample_value(&x_star, &z_bar, m) * weights.as_vector()[m])
            .sum();
        Some(value)
    }
}

/// Instantiate the problem and draw its dataset.
pub fn make_sc_quadratic(spec: &ScQuadraticSpec) -> Result<(ScQuadratic, Dataset)> {
    if spec.n == 0 {
        return Err(MolError::InvalidDimension("dataset needs n >= 1".into()));
    }
    if !(spec.z_std >= 0.0 && spec.z_std.is_finite()) {
        return Err(MolError::InvalidConfig(format!(
            "z_std must be >= 0, got {}",
            spec.z_std
        )));
    }
    if spec.b1.len() != spec.m || spec.b2.len() != spec.m || spec.a.nrows() != spec.d {
        return Err(MolError::InvalidDimension(
            "spec dims disagree with b1/b2/A shapes".into(),
        ));
    }
    let problem = ScQuadratic::new(
        spec.b1.clone(),
        spec.b2.clone(),
        spec.a.clone(),
        spec.z_mean.clone(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    let samples: Vec<DVector<f64>> = (0..spec.n)
        .map(|_| {
            let g = DVector::from_fn(spec.d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &spec.z_mean + g * spec.z_std
        })
        .collect();
    let data = Dataset::new(
        format!("scq-d{}-n{}-s{}", spec.d, spec.n, spec.data_seed),
        samples,
    )?;
    let problem = problem.with_constants_for(&ModelParams::zeros(spec.d), data.samples())?;
    Ok((problem, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minnorm::solve_min_norm_default;
    use crate::simplex::uniform_weights;
    use crate::types::finite_difference_gradient_check;

    fn default_pair() -> (ScQuadratic, Dataset) {
        make_sc_quadratic(&ScQuadraticSpec::default_suite(50, 7)).unwrap()
    }

    #[test]
    fn default_suite_matches_stated_scales() {
        let spec = ScQuadraticSpec::default_suite(50, 7);
        assert_eq!(spec.b1, vec![1.0, 2.0, 1.0]);
        assert_eq!(spec.b2, vec![1.0, 3.0, 2.0]);
        assert_eq!(spec.m, 3);
    }

    #[test]
    fn weighted_minimizer_is_empirically_stationary() {
        let (problem, data) = default_pair();
        let lam = uniform_weights(3).unwrap();
        let x_star = problem.weighted_minimizer(&lam, &data.mean());
        let g = problem.empirical_gradient_matrix(&x_star, &data);
        let resid = g.combine(&lam).norm();
        assert!(resid <= 1e-9, "residual {resid}");
    }

    #[test]
    fn weighted_minimizer_is_pareto_stationary() {
        let (problem, data) = default_pair();
        let lam = WeightVector::from_slice(&[0.2, 0.5, 0.3]).unwrap();
        let x_star = problem.weighted_minimizer(&lam, &data.mean());
        let g = problem.empirical_gradient_matrix(&x_star, &data);
        let sol = solve_min_norm_default(&g, 1e-12).unwrap();
        assert!(sol.ps_value <= 1e-8);
    }

    #[test]
    fn zero_noise_collapses_empirical_onto_population() {
        let mut spec = ScQuadraticSpec::default_suite(20, 3);
        spec.z_std = 0.0;
        let (problem, data) = make_sc_quadratic(&spec).unwrap();
        let x = ModelParams::from_slice(&[0.5; 10]).unwrap();
        let emp = problem.empirical_gradient_matrix(&x, &data);
        let pop = problem.population_gradient_matrix(&x).unwrap();
        let diff = (emp.as_matrix() - pop.as_matrix()).norm();
        assert!(diff <= 1e-12, "diff {diff}");
    }

    #[test]
    fn rejects_non_positive_definite_matrices() {
        let mut a = DMatrix::identity(3, 3);
        a[(2, 2)] = -1.0;
        let err = ScQuadratic::new(
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            a,
            DVector::zeros(3),
        )
        .unwrap_err();
        assert!(err.to_string().contains("A not positive definite"));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (problem, data) = default_pair();
        let x = ModelParams::from_slice(&[0.3, -1.0, 0.7, 0.0, 2.0, -0.5, 0.1, 0.9, -1.2, 0.4])
            .unwrap();
        for z in data.samples().iter().take(5) {
            let err = finite_difference_gradient_check(&problem, &x, z, 1e-5).unwrap();
            assert!(err <= 1e-6, "finite difference error {err}");
        }
    }

    #[test]
    fn empirical_average_is_entrywise_mean() {
        let (problem, data) = default_pair();
        let x = ModelParams::from_slice(&[0.1; 10]).unwrap();
        let emp = problem.empirical_gradient_matrix(&x, &data);
        let mut acc = DMatrix::zeros(10, 3);
        for z in data.samples() {
            acc += problem.per_sample_gradient_matrix(&x, z).as_matrix();
        }
        acc /= data.len() as f64;
        assert!((emp.as_matrix() - acc).norm() <= 1e-12);
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let spec = ScQuadraticSpec::default_suite(20, 11);
        let (_, a) = make_sc_quadratic(&spec).unwrap();
        let (_, b) = make_sc_quadratic(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constants_scale_with_curvature() {
        let (problem, data) = default_pair();
        let c = problem
            .bound_constants_for(&ModelParams::zeros(10), data.samples())
            .unwrap();
        let (eig_min, eig_max) = problem.eig_bounds();
        assert!((c.strong_convexity - eig_min).abs() < 1e-12); // min b1 = 1
        assert!((c.lip_grad - 2.0 * eig_max).abs() < 1e-12); // max b1 = 2
        assert!(c.lip_val > 0.0);
        assert!((c.lip_val_frob - 3f64.sqrt() * c.lip_val).abs() < 1e-9 * c.lip_val_frob);
    }
}
