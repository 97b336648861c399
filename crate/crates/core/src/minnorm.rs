//! The conflict-avoidant direction subproblem: find the min-norm point of
//! the convex hull of the gradient columns,
//! `lambda* in argmin_{lambda in simplex} ||G lambda||^2`,
//! optionally with a `rho ||lambda||^2` regularizer.
//!
//! Solver: projected gradient descent with a fixed step `1/(||G^T G|| + rho)`
//! warm-started from uniform weights. Convergence is certified through the
//! first-order variational inequality at the simplex vertices, so a returned
//! solution always carries a checkable KKT residual.

use nalgebra::{DMatrix, DVector};

use crate::error::{MolError, Result};
use crate::simplex::{project_simplex, uniform_weights};
use crate::types::{GradientMatrix, WeightVector};

/// Default KKT tolerance (relative to `1 + ||G^T G|| + rho`).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Iteration budget heuristic: `100 * M * condition estimate`, with the
/// condition estimate capped at 1e4. The condition comes from the gram
/// eigenvalues (M is tiny, so this is cheap); rank-deficient instances hit
/// the cap.
pub fn default_max_iters(g: &GradientMatrix) -> usize {
    let m = g.num_objectives();
    let eigs = gram(g).symmetric_eigen().eigenvalues;
    let max = eigs.iter().fold(0.0f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return 100 * m;
    }
    let min = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b.max(0.0)));
    let cond = (max / min.max(max * 1e-16)).min(1e4);
    (100.0 * m as f64 * cond.max(1.0)) as usize
}

/// Solution of the min-norm subproblem.
///
/// `kkt_residual` is the largest violation of the variational inequality
/// `<grad h(lambda), e_m - lambda> >= 0`, normalized by
/// `1 + ||G^T G|| + rho`; on success it is at most the requested tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub weights: WeightVector,
    pub direction: DVector<f64>,
    pub ps_value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl MinNormSolution {
    fn from_weights(g: &GradientMatrix, weights: WeightVector, iterations: usize, kkt: f64) -> Self {
        let combined = g.combine(&weights);
        MinNormSolution {
            ps_value: combined.norm(),
            direction: -combined,
            weights,
            iterations,
            kkt_residual: kkt,
        }
    }
}

fn gram(g: &GradientMatrix) -> DMatrix<f64> {
    g.as_matrix().transpose() * g.as_matrix()
}

/// Largest-eigenvalue estimate of a symmetric PSD matrix via 50 power
/// iterations from a deterministic start.
fn spectral_norm_estimate(q: &DMatrix<f64>) -> f64 {
    let m = q.nrows();
    let mut v = DVector::from_fn(m, |i, _| 1.0 + i as f64 * 1e-3);
    v /= v.norm();
    let mut rayleigh = 0.0;
    for _ in 0..50 {
        let w = q * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        rayleigh = (q * &v).dot(&v);
    }
    rayleigh.max(0.0)
}

/// Violation of the first-order optimality condition at the vertices:
/// `max_m <grad, lambda - e_m> = <grad, lambda> - min_m grad_m` (always >= 0).
fn vertex_violation(grad: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    let inner = grad.dot(lambda);
    let min_grad = grad.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    (inner - min_grad).max(0.0)
}

fn solve_inner(
    g: &GradientMatrix,
    rho: f64,
    tol: f64,
    max_iters: usize,
) -> Result<MinNormSolution> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(MolError::InvalidConfig(format!("tol must be > 0, got {tol}")));
    }
    if max_iters == 0 {
        return Err(MolError::InvalidConfig("max_iters must be >= 1".into()));
    }
    let m = g.num_objectives();
    if m == 1 {
        // The simplex is a single point.
        let w = WeightVector::new_unchecked(DVector::from_element(1, 1.0));
        return Ok(MinNormSolution::from_weights(g, w, 0, 0.0));
    }

    let q = gram(g);
    let sigma = spectral_norm_estimate(&q);
    if sigma == 0.0 && rho == 0.0 {
        // G = 0: every lambda is optimal; return the symmetric one.
        let w = uniform_weights(m)?;
        return Ok(MinNormSolution::from_weights(g, w, 0, 0.0));
    }

    let scale = 1.0 + sigma + rho;
    let step = 1.0 / (sigma + rho);
    let mut lambda = uniform_weights(m)?.as_vector().clone();
    let mut iterations = 0;
    let mut kkt = f64::INFINITY;

    for it in 0..=max_iters {
        let grad = &q * &lambda + rho * &lambda;
        kkt = vertex_violation(&grad, &lambda) / scale;
        iterations = it;
        if kkt <= tol {
            let w = WeightVector::new_unchecked(lambda);
            return Ok(MinNormSolution::from_weights(g, w, iterations, kkt));
        }
        if it == max_iters {
            break;
        }
        lambda = project_simplex(&(&lambda - step * &grad))?
            .as_vector()
            .clone();
    }

    let w = WeightVector::new_unchecked(lambda);
    Err(MolError::NoConvergence {
        best: Box::new(MinNormSolution::from_weights(g, w, iterations, kkt)),
        tol,
    })
}

/// `lambda*(x) in argmin ||G lambda||^2` over the simplex, with the
/// Pareto-stationarity value `||G lambda*||` and direction `-G lambda*`.
pub fn solve_min_norm(g: &GradientMatrix, tol: f64, max_iters: usize) -> Result<MinNormSolution> {
    solve_inner(g, 0.0, tol, max_iters)
}

/// Convenience wrapper with the default iteration budget.
pub fn solve_min_norm_default(g: &GradientMatrix, tol: f64) -> Result<MinNormSolution> {
    solve_inner(g, 0.0, tol, default_max_iters(g))
}

/// The rho-regularized variant `argmin ||G lambda||^2 + rho ||lambda||^2`;
/// strongly convex, so the solution is unique.
pub fn solve_min_norm_regularized(
    g: &GradientMatrix,
    rho: f64,
    tol: f64,
    max_iters: usize,
) -> Result<MinNormSolution> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(MolError::InvalidConfig(format!("rho must be > 0, got {rho}")));
    }
    solve_inner(g, rho, tol, max_iters)
}

/// The Pareto stationarity measure `min_lambda ||G lambda||`; zero exactly
/// at Pareto stationary points.
pub fn ps_measure(g: &GradientMatrix, tol: f64) -> Result<f64> {
    Ok(solve_min_norm_default(g, tol)?.ps_value)
}

/// Squared distance between the direction induced by `lambda` and the
/// conflict-avoidant direction: `||G lambda - G lambda*||^2`.
pub fn ca_distance(g: &GradientMatrix, lambda: &WeightVector, tol: f64) -> Result<f64> {
    let star = solve_min_norm_default(g, tol)?;
    let diff = g.combine(lambda) - g.combine(&star.weights);
    Ok(diff.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{min_norm_two_objectives, ps_measure_grid_simplex3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize, m: usize) -> GradientMatrix {
        GradientMatrix::new(DMatrix::from_fn(d, m, |_, _| rng.gen_range(-2.0..2.0))).unwrap()
    }

    #[test]
    fn single_objective_is_immediate() {
        let g = GradientMatrix::new(DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 2.0])).unwrap();
        let sol = solve_min_norm(&g, 1e-10, 10).unwrap();
        assert_eq!(sol.weights.as_vector().as_slice(), &[1.0]);
        assert!((sol.ps_value - 3.0).abs() < 1e-12);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn symmetric_cancellation_is_pareto_stationary() {
        let g = GradientMatrix::new(DMatrix::from_columns(&[
            DVector::from_row_slice(&[1.0, 2.0]),
            DVector::from_row_slice(&[-1.0, -2.0]),
        ]))
        .unwrap();
        let sol = solve_min_norm_default(&g, 1e-10).unwrap();
        assert!((sol.weights.as_vector()[0] - 0.5).abs() < 1e-8);
        assert!(sol.ps_value < 1e-8);
    }

    #[test]
    fn matches_two_objective_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let g = random_matrix(&mut rng, 3, 2);
            let sol = solve_min_norm_default(&g, 1e-12).unwrap();
            let (_, oracle_val) = min_norm_two_objectives(g.as_matrix());
            assert!(
                (sol.ps_value - oracle_val).abs() <= 1e-6,
                "solver {} vs closed form {}",
                sol.ps_value,
                oracle_val
            );
        }
    }

    #[test]
    fn matches_three_objective_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let g = random_matrix(&mut rng, 5, 3);
            let sol = solve_min_norm_default(&g, 1e-12).unwrap();
            let oracle_val = ps_measure_grid_simplex3(g.as_matrix(), 1e-3, 3);
            assert!(
                (sol.ps_value - oracle_val).abs() <= 1e-5,
                "solver {} vs grid {}",
                sol.ps_value,
                oracle_val
            );
        }
    }

    #[test]
    fn solution_fields_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = random_matrix(&mut rng, 4, 3);
        let sol = solve_min_norm_default(&g, 1e-10).unwrap();
        let combined = g.combine(&sol.weights);
        assert!((sol.direction.clone() + &combined).norm() <= 1e-12);
        assert!((sol.ps_value - combined.norm()).abs() <= 1e-12);
        assert!(sol.kkt_residual <= 1e-10);
    }

    #[test]
    fn zero_matrix_returns_uniform() {
        let g = GradientMatrix::new(DMatrix::zeros(4, 3)).unwrap();
        let sol = solve_min_norm_default(&g, 1e-10).unwrap();
        for w in sol.weights.as_vector().iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(sol.ps_value, 0.0);

        let reg = solve_min_norm_regularized(&g, 0.5, 1e-10, 1000).unwrap();
        for w in reg.weights.as_vector().iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_regularizer_pulls_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let g = random_matrix(&mut rng, 4, 3);
        let sigma = spectral_norm_estimate(&gram(&g));
        let reg = solve_min_norm_regularized(&g, 1e6 * sigma, 1e-12, 100_000).unwrap();
        for w in reg.weights.as_vector().iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn regularized_suboptimality_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for &rho in &[1e-3, 1e-1] {
            for _ in 0..100 {
                let g = random_matrix(&mut rng, 4, 3);
                let base = solve_min_norm_default(&g, 1e-12).unwrap();
                let reg = solve_min_norm_regularized(&g, rho, 1e-12, 200_000).unwrap();
                let gap = reg.ps_value.powi(2) - base.ps_value.powi(2);
                assert!(gap >= -1e-8, "gap {gap} negative beyond slack");
                assert!(
                    gap <= rho * (1.0 - 1.0 / 3.0) + 1e-8,
                    "gap {gap} above rho(1 - 1/M) for rho {rho}"
                );
            }
        }
    }

    #[test]
    fn rho_monotonicity_of_ps_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let g = random_matrix(&mut rng, 4, 3);
            let mut prev = solve_min_norm_default(&g, 1e-12).unwrap().ps_value;
            for &rho in &[1e-4, 1e-2, 1.0] {
                let cur = solve_min_norm_regularized(&g, rho, 1e-12, 200_000)
                    .unwrap()
                    .ps_value;
                assert!(cur >= prev - 1e-8, "ps value decreased with rho");
                prev = cur;
            }
        }
    }

    #[test]
    fn first_order_inequality_against_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..100 {
            let g = random_matrix(&mut rng, 5, 4);
            let sol = solve_min_norm_default(&g, 1e-12).unwrap();
            let g_star = g.combine(&sol.weights);
            for m in 0..4 {
                let mut e = DVector::zeros(4);
                e[m] = 1.0;
                let vertex = WeightVector::new(e).unwrap();
                let g_vertex = g.combine(&vertex);
                assert!(
                    g_star.dot(&g_vertex) >= g_star.norm_squared() - 1e-8,
                    "inner product inequality violated"
                );
            }
        }
    }

    #[test]
    fn ca_distance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        // lambda = lambda* gives zero.
        let g = random_matrix(&mut rng, 4, 3);
        let sol = solve_min_norm_default(&g, 1e-12).unwrap();
        assert!(ca_distance(&g, &sol.weights, 1e-12).unwrap() <= 1e-10);

        // Single objective: always zero.
        let g1 = random_matrix(&mut rng, 4, 1);
        let w1 = WeightVector::from_slice(&[1.0]).unwrap();
        assert_eq!(ca_distance(&g1, &w1, 1e-12).unwrap(), 0.0);

        // Bounded by the value gap for arbitrary weights.
        for _ in 0..100 {
            let g = random_matrix(&mut rng, 4, 3);
            let raw = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..2.0));
            let lam = project_simplex(&raw).unwrap();
            let sol = solve_min_norm_default(&g, 1e-12).unwrap();
            let dist = ca_distance(&g, &lam, 1e-12).unwrap();
            let gap = g.combine(&lam).norm_squared() - sol.ps_value.powi(2);
            assert!(dist <= gap + 1e-8, "dist {dist} above gap {gap}");
        }
    }

    #[test]
    fn identical_columns_give_column_norm() {
        let col = DVector::from_row_slice(&[3.0, 4.0]);
        let g = GradientMatrix::new(DMatrix::from_columns(&[col.clone(), col.clone(), col])).unwrap();
        let v = ps_measure(&g, 1e-10).unwrap();
        assert!((v - 5.0).abs() < 1e-9);
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let g = random_matrix(&mut rng, 5, 3);
            let base = solve_min_norm_default(&g, 1e-13).unwrap().ps_value;
            for &c in &[0.1, 10.0] {
                let scaled =
                    GradientMatrix::new(g.as_matrix() * c).unwrap();
                let v = solve_min_norm_default(&scaled, 1e-13).unwrap().ps_value;
                assert!(
                    (v - c.abs() * base).abs() <= 1e-6 * (1.0 + c.abs() * base),
                    "scaling by {c}: {v} vs {}",
                    c.abs() * base
                );
            }
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let g = random_matrix(&mut rng, 6, 4);
        let a = solve_min_norm_default(&g, 1e-11).unwrap();
        let b = solve_min_norm_default(&g, 1e-11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iteration_exhaustion_reports_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let g = random_matrix(&mut rng, 5, 3);
        let err = solve_min_norm(&g, 1e-13, 2).unwrap_err();
        assert!(err.to_string().contains("no convergence"));
        match err {
            MolError::NoConvergence { best, tol } => {
                assert_eq!(tol, 1e-13);
                assert!(best.kkt_residual > tol);
                assert_eq!(best.iterations, 2);
            }
            other => panic!("expected no convergence, got {other}"),
        }
    }
}
