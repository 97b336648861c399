//! Shared domain types: model parameters, objective weights, stacked
//! gradients, datasets, and the problem interface implemented by every
//! synthetic objective suite.

use nalgebra::{DMatrix, DVector};

use crate::error::{MolError, Result};

/// Default tolerance for entrywise nonnegativity of weights.
pub const WEIGHT_NONNEG_TOL: f64 = 1e-12;
/// Default tolerance for the unit-sum constraint of weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;
/// Default tolerance for the `l_F = sqrt(M) l_f` consistency check.
pub const CONSTANT_CONSISTENCY_TOL: f64 = 1e-9;

/// Model parameter vector `x` of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    values: DVector<f64>,
}

impl ModelParams {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MolError::InvalidDimension(
                "model parameters need dimension >= 1".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(MolError::NonFiniteInput);
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            values: DVector::zeros(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Objective weights `lambda` constrained to the probability simplex.
///
/// Construction validates membership: entries nonnegative within
/// [`WEIGHT_NONNEG_TOL`] and unit sum within [`WEIGHT_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: DVector<f64>,
}

impl WeightVector {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        Self::new_with_tol(weights, WEIGHT_NONNEG_TOL, WEIGHT_SUM_TOL)
    }

    pub fn new_with_tol(weights: DVector<f64>, nonneg_tol: f64, sum_tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(MolError::InvalidDimension(
                "weights need dimension >= 1".into(),
            ));
        }
        if !weights.iter().all(|v| v.is_finite()) {
            return Err(MolError::NonFiniteInput);
        }
        if let Some(w) = weights.iter().find(|w| **w < -nonneg_tol) {
            return Err(MolError::InvalidWeights(format!(
                "negative entry {w:.3e} below tolerance -{nonneg_tol:.1e}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > sum_tol {
            return Err(MolError::InvalidWeights(format!(
                "entries sum to {sum:.12} instead of 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Internal constructor for values already known to lie on the simplex
    /// (e.g. projection output). Debug builds still assert the invariants.
    pub(crate) fn new_unchecked(weights: DVector<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= -WEIGHT_NONNEG_TOL));
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
        Self { weights }
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(weights))
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.weights
    }
}

/// The `d x M` matrix of per-objective gradients; column `m` holds the
/// gradient of objective `m` at the evaluation point. Houses population,
/// empirical, and per-sample gradient estimates alike.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    columns: DMatrix<f64>,
}

impl GradientMatrix {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        if columns.nrows() == 0 || columns.ncols() == 0 {
            return Err(MolError::InvalidDimension(
                "gradient matrix needs d >= 1 and M >= 1".into(),
            ));
        }
        if !columns.iter().all(|v| v.is_finite()) {
            return Err(MolError::NonFiniteInput);
        }
        Ok(Self { columns })
    }

    pub(crate) fn new_unchecked(columns: DMatrix<f64>) -> Self {
        Self { columns }
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn num_objectives(&self) -> usize {
        self.columns.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// The weighted gradient combination `G lambda`.
    pub fn combine(&self, weights: &WeightVector) -> DVector<f64> {
        &self.columns * weights.as_vector()
    }

    /// The update direction `d_lambda = -G lambda`.
    pub fn direction(&self, weights: &WeightVector) -> DVector<f64> {
        -self.combine(weights)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.columns.norm()
    }
}

/// An ordered training set `S = {z_1, ..., z_n}`. Sample order is stable so
/// that index `i` is meaningful when constructing neighboring datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    samples: Vec<DVector<f64>>,
}

impl Dataset {
    pub fn new(id: impl Into<String>, samples: Vec<DVector<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(MolError::InvalidDimension("dataset needs n >= 1".into()));
        }
        let dim = samples[0].len();
        for s in &samples {
            if s.len() != dim {
                return Err(MolError::SampleShapeMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(MolError::NonFiniteInput);
            }
        }
        Ok(Self {
            id: id.into(),
            samples,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn sample(&self, i: usize) -> &DVector<f64> {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    /// Entrywise mean of the samples.
    pub fn mean(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.sample_dim());
        for s in &self.samples {
            acc += s;
        }
        acc / self.samples.len() as f64
    }
}

/// Replace the sample at `index` with `replacement`, producing the
/// neighboring dataset S' that differs from S in exactly one position.
pub fn make_neighboring_dataset(
    data: &Dataset,
    index: usize,
    replacement: DVector<f64>,
) -> Result<Dataset> {
    if index >= data.len() {
        return Err(MolError::IndexOutOfBounds {
            index,
            len: data.len(),
        });
    }
    if replacement.len() != data.sample_dim() {
        return Err(MolError::SampleShapeMismatch {
            expected: data.sample_dim(),
            got: replacement.len(),
        });
    }
    if !replacement.iter().all(|v| v.is_finite()) {
        return Err(MolError::NonFiniteInput);
    }
    let mut samples = data.samples.clone();
    samples[index] = replacement;
    Ok(Dataset {
        id: format!("{}-nb{}", data.id, index),
        samples,
    })
}

/// Constants used by the theoretical bound evaluators.
///
/// `lip_grad` and `lip_grad_frob` are the gradient Lipschitz constants of a
/// single objective and of the stacked matrix; `lip_val` bounds the weighted
/// gradient norm along the trajectory and `lip_val_frob = sqrt(M) lip_val`
/// bounds its Frobenius counterpart; `strong_convexity` is the modulus `mu`
/// (zero declares the problem nonconvex).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub lip_grad: f64,
    pub lip_grad_frob: f64,
    pub lip_val: f64,
    pub lip_val_frob: f64,
    pub strong_convexity: f64,
    pub num_objectives: usize,
}

impl BoundConstants {
    /// Build constants, deriving `lip_val_frob = sqrt(M) lip_val`.
    pub fn new(
        lip_grad: f64,
        lip_grad_frob: f64,
        lip_val: f64,
        strong_convexity: f64,
        num_objectives: usize,
    ) -> Result<Self> {
        let c = Self {
            lip_grad,
            lip_grad_frob,
            lip_val,
            lip_val_frob: (num_objectives as f64).sqrt() * lip_val,
            strong_convexity,
            num_objectives,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lip_grad", self.lip_grad),
            ("lip_grad_frob", self.lip_grad_frob),
            ("lip_val", self.lip_val),
            ("lip_val_frob", self.lip_val_frob),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MolError::InvalidConstants(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !(self.strong_convexity.is_finite() && self.strong_convexity >= 0.0) {
            return Err(MolError::InvalidConstants(format!(
                "strong_convexity must be >= 0, got {}",
                self.strong_convexity
            )));
        }
        if self.num_objectives == 0 {
            return Err(MolError::InvalidConstants("num_objectives must be >= 1".into()));
        }
        let expected = (self.num_objectives as f64).sqrt() * self.lip_val;
        if (self.lip_val_frob - expected).abs() > CONSTANT_CONSISTENCY_TOL * expected.max(1.0) {
            return Err(MolError::InvalidConstants(format!(
                "lip_val_frob {} inconsistent with sqrt(M) lip_val = {}",
                self.lip_val_frob, expected
            )));
        }
        Ok(())
    }
}

/// An objective suite: per-sample values and gradients, empirical averages,
/// and (for the synthetic generators) analytic population gradients.
///
/// All methods are pure given `(x, z)`; implementations are immutable after
/// construction and safe to share across threads.
pub trait MolProblem: Send + Sync {
    /// `(d, M)`: parameter dimension and number of objectives.
    fn dims(&self) -> (usize, usize);

    /// `f_{z,m}(x)` for objective index `m` in `0..M`.
    fn per_sample_value(&self, x: &ModelParams, z: &DVector<f64>, m: usize) -> f64;

    /// Stacked per-sample gradient matrix with column `m = grad f_{z,m}(x)`.
    fn per_sample_gradient_matrix(&self, x: &ModelParams, z: &DVector<f64>) -> GradientMatrix;

    /// Empirical gradient matrix: the arithmetic mean of per-sample matrices.
    fn empirical_gradient_matrix(&self, x: &ModelParams, data: &Dataset) -> GradientMatrix {
        let (d, m) = self.dims();
        let mut acc = DMatrix::zeros(d, m);
        for z in data.samples() {
            acc += self.per_sample_gradient_matrix(x, z).as_matrix();
        }
        GradientMatrix::new_unchecked(acc / data.len() as f64)
    }

    /// Analytic population gradient matrix, when the problem has one.
    fn population_gradient_matrix(&self, _x: &ModelParams) -> Option<GradientMatrix> {
        None
    }

    /// Analytic bound constants, when derivable.
    fn bound_constants(&self) -> Option<BoundConstants> {
        None
    }

    /// Exact minimum of the lambda-scalarized empirical objective
    /// `min_x F_S(x) lambda`, when the problem has a closed form for it.
    fn scalarized_empirical_minimum(&self, _weights: &WeightVector, _data: &Dataset) -> Option<f64> {
        None
    }
}

/// Max relative error between analytic per-sample gradients and central
/// finite differences: `max_{m,k} |num - ana| / (1 + |ana|)`.
pub fn finite_difference_gradient_check(
    problem: &dyn MolProblem,
    x: &ModelParams,
    z: &DVector<f64>,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MolError::InvalidConfig(format!("step h must be > 0, got {h}")));
    }
    let (d, m_count) = self_dims_checked(problem, x)?;
    let analytic = problem.per_sample_gradient_matrix(x, z);
    let mut max_rel = 0.0f64;
    for k in 0..d {
        let mut plus = x.as_vector().clone();
        plus[k] += h;
        let mut minus = x.as_vector().clone();
        minus[k] -= h;
        let xp = ModelParams::new(plus)?;
        let xm = ModelParams::new(minus)?;
        for m in 0..m_count {
            let fp = problem.per_sample_value(&xp, z, m);
            let fm = problem.per_sample_value(&xm, z, m);
            if !fp.is_finite() || !fm.is_finite() {
                return Err(MolError::NonFiniteEvaluation);
            }
            let numeric = (fp - fm) / (2.0 * h);
            let ana = analytic.as_matrix()[(k, m)];
            let rel = (numeric - ana).abs() / (1.0 + ana.abs());
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

fn self_dims_checked(problem: &dyn MolProblem, x: &ModelParams) -> Result<(usize, usize)> {
    let (d, m) = problem.dims();
    if x.dim() != d {
        return Err(MolError::SampleShapeMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    Ok((d, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ZeroProblem;

    impl MolProblem for ZeroProblem {
        fn dims(&self) -> (usize, usize) {
            (3, 2)
        }
        fn per_sample_value(&self, _x: &ModelParams, _z: &DVector<f64>, _m: usize) -> f64 {
            0.0
        }
        fn per_sample_gradient_matrix(&self, _x: &ModelParams, _z: &DVector<f64>) -> GradientMatrix {
            GradientMatrix::new_unchecked(DMatrix::zeros(3, 2))
        }
    }

    fn vec3(a: f64, b: f64, c: f64) -> DVector<f64> {
        DVector::from_row_slice(&[a, b, c])
    }

    #[test]
    fn neighboring_same_replacement_is_identity() {
        let data = Dataset::new("d", vec![vec3(1.0, 0.0, 0.0), vec3(0.0, 2.0, 0.0), vec3(0.0, 0.0, 3.0)])
            .unwrap();
        let out = make_neighboring_dataset(&data, 1, vec3(0.0, 2.0, 0.0)).unwrap();
        assert_eq!(out.samples(), data.samples());
        assert_eq!(out.len(), data.len());
        assert_eq!(out.id(), "d-nb1");
    }

    #[test]
    fn neighboring_replaces_exactly_one_position() {
        let data = Dataset::new("d", vec![vec3(1.0, 1.0, 1.0), vec3(2.0, 2.0, 2.0)]).unwrap();
        let out = make_neighboring_dataset(&data, 0, vec3(9.0, 9.0, 9.0)).unwrap();
        assert_eq!(out.sample(0), &vec3(9.0, 9.0, 9.0));
        assert_eq!(out.sample(1), data.sample(1));
    }

    #[test]
    fn neighboring_rejects_bad_index_and_shape() {
        let data = Dataset::new("d", vec![vec3(1.0, 1.0, 1.0)]).unwrap();
        let err = make_neighboring_dataset(&data, 5, vec3(0.0, 0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("index out of bounds"));
        let err = make_neighboring_dataset(&data, 0, DVector::from_row_slice(&[1.0])).unwrap_err();
        assert!(err.to_string().contains("sample shape mismatch"));
    }

    #[test]
    fn weight_vector_validates_simplex_membership() {
        assert!(WeightVector::from_slice(&[0.5, 0.5]).is_ok());
        assert!(WeightVector::from_slice(&[0.5, 0.6]).is_err());
        assert!(WeightVector::from_slice(&[1.5, -0.5]).is_err());
        assert!(WeightVector::from_slice(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn bound_constants_consistency() {
        let c = BoundConstants::new(2.0, 3.0, 1.5, 0.5, 4).unwrap();
        assert!((c.lip_val_frob - 3.0).abs() < 1e-12);
        let mut bad = c.clone();
        bad.lip_val_frob = 5.0;
        assert!(bad.validate().is_err());
        assert!(BoundConstants::new(0.0, 1.0, 1.0, 0.0, 2).is_err());
    }

    #[test]
    fn zero_function_has_zero_fd_error() {
        let p = ZeroProblem;
        let x = ModelParams::from_slice(&[0.3, -0.7, 2.0]).unwrap();
        let z = vec3(1.0, 2.0, 3.0);
        let err = finite_difference_gradient_check(&p, &x, &z, 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn dataset_mean_is_entrywise() {
        let data = Dataset::new("d", vec![vec3(1.0, 0.0, 2.0), vec3(3.0, 4.0, 0.0)]).unwrap();
        assert_eq!(data.mean(), vec3(2.0, 2.0, 1.0));
    }
}
