//! Evaluation quantities along trajectories.
//!
//! At a point `x` with weights `lambda`:
//! - `r_opt  = min_lambda ||grad F_S(x) lambda||`  (empirical PS measure)
//! - `r_pop  = min_lambda ||grad F(x) lambda||`    (population PS measure,
//!   analytic when available, otherwise a held-out test set surrogate)
//! - `r_gen  = r_pop - r_opt`                       (identity by construction)
//! - `e_ca   = ||grad F_S(x) lambda - grad F_S(x) lambda*||^2`
//!   (squared distance between the used direction and the CA direction)
//!
//! The guarantees being checked are on time averages over the iterates and
//! expectations over algorithm randomness; the latter is realized as a mean
//! over seeds at the harness level.

use crate::algorithms::{run_mgda, run_modo, AlgoConfig, AlgoKind, Trajectory};
use crate::error::{MolError, Result};
use crate::minnorm::solve_min_norm_default;
use crate::sampling::derive_seed;
use crate::types::{BoundConstants, Dataset, ModelParams, MolProblem, WeightVector};

/// Where the population gradient came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopSource {
    Analytic,
    TestSet,
}

impl PopSource {
    pub fn name(&self) -> &'static str {
        match self {
            PopSource::Analytic => "analytic",
            PopSource::TestSet => "test_set",
        }
    }
}

/// One row of the evaluation table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub t: usize,
    pub r_opt: f64,
    pub r_pop: f64,
    pub r_gen: f64,
    pub e_ca: f64,
    pub pop_source: PopSource,
}

/// Time averages over the recorded states of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryAverages {
    pub r_opt: f64,
    pub r_pop: f64,
    pub r_gen: f64,
    pub e_ca: f64,
}

/// Evaluate one `(x, lambda)` point.
pub fn evaluate_point(
    problem: &dyn MolProblem,
    data: &Dataset,
    test_data: Option<&Dataset>,
    x: &ModelParams,
    lambda: &WeightVector,
    t: usize,
    tol: f64,
) -> Result<MetricRecord> {
    let g_emp = problem.empirical_gradient_matrix(x, data);
    let sol = solve_min_norm_default(&g_emp, tol)?;
    let r_opt = sol.ps_value;
    // Same arithmetic as minnorm::ca_distance, reusing the solve above.
    let e_ca = (g_emp.combine(lambda) - g_emp.combine(&sol.weights)).norm_squared();

    let (g_pop, pop_source) = match problem.population_gradient_matrix(x) {
        Some(g) => (g, PopSource::Analytic),
        None => match test_data {
            Some(te) => (problem.empirical_gradient_matrix(x, te), PopSource::TestSet),
            None => return Err(MolError::NoPopulationOracle),
        },
    };
    let r_pop = solve_min_norm_default(&g_pop, tol)?.ps_value;

    Ok(MetricRecord {
        t,
        r_opt,
        r_pop,
        r_gen: r_pop - r_opt,
        e_ca,
        pop_source,
    })
}

/// Evaluate every recorded state of a trajectory plus the running averages.
pub fn evaluate_trajectory(
    problem: &dyn MolProblem,
    data: &Dataset,
    test_data: Option<&Dataset>,
    trajectory: &Trajectory,
    tol: f64,
) -> Result<(Vec<MetricRecord>, TrajectoryAverages)> {
    if trajectory.states.is_empty() {
        return Err(MolError::InvalidConfig("trajectory has no recorded states".into()));
    }
    let records: Vec<MetricRecord> = trajectory
        .states
        .iter()
        .map(|s| evaluate_point(problem, data, test_data, &s.x, &s.lambda, s.t, tol))
        .collect::<Result<_>>()?;
    let n = records.len() as f64;
    let averages = TrajectoryAverages {
        r_opt: records.iter().map(|r| r.r_opt).sum::<f64>() / n,
        r_pop: records.iter().map(|r| r.r_pop).sum::<f64>() / n,
        r_gen: records.iter().map(|r| r.r_gen).sum::<f64>() / n,
        e_ca: records.iter().map(|r| r.e_ca).sum::<f64>() / n,
    };
    Ok((records, averages))
}

/// Right-hand side of the time-averaged CA-distance guarantee:
/// `4/(gamma T) + 6 sqrt(M l_{f,1} l_f^2 alpha/gamma) + gamma M l_f^4`.
pub fn ca_bound_rhs(constants: &BoundConstants, alpha: f64, gamma: f64, t: usize) -> Result<f64> {
    if gamma == 0.0 {
        return Err(MolError::BoundUndefinedAtGammaZero);
    }
    if t == 0 {
        return Err(MolError::InvalidConfig("bound needs T >= 1".into()));
    }
    constants.validate()?;
    let m = constants.num_objectives as f64;
    let lf = constants.lip_val;
    let lf1 = constants.lip_grad;
    Ok(4.0 / (gamma * t as f64)
        + 6.0 * (m * lf1 * lf * lf * alpha / gamma).sqrt()
        + gamma * m * lf.powi(4))
}

/// Right-hand side of the time-averaged PS optimization-error guarantee:
/// `sqrt(c_F/(2 alpha T)) + sqrt(gamma (M l_f^4 + 2 l_F^3 l_f)/2)
///  + sqrt(alpha l_{f,1} l_f^2 / 2)`, valid for `alpha <= 1/(2 l_{f,1})`.
pub fn opt_bound_rhs(
    constants: &BoundConstants,
    c_f: f64,
    alpha: f64,
    gamma: f64,
    t: usize,
) -> Result<f64> {
    constants.validate()?;
    let cap = 1.0 / (2.0 * constants.lip_grad);
    if alpha > cap {
        return Err(MolError::StepSizeTooLarge { alpha, cap });
    }
    if !(c_f >= 0.0) {
        return Err(MolError::InvalidConfig(format!("c_F must be >= 0, got {c_f}")));
    }
    if t == 0 {
        return Err(MolError::InvalidConfig("bound needs T >= 1".into()));
    }
    let m = constants.num_objectives as f64;
    let lf = constants.lip_val;
    let lf1 = constants.lip_grad;
    let lff = constants.lip_val_frob;
    Ok((c_f / (2.0 * alpha * t as f64)).sqrt()
        + (0.5 * gamma * (m * lf.powi(4) + 2.0 * lff.powi(3) * lf)).sqrt()
        + (0.5 * alpha * lf1 * lf * lf).sqrt())
}

/// Estimate the initial suboptimality `c_F` bounding
/// `E[F_S(x_1) lambda_1] - min_x F_S(x) E[lambda_1]`.
///
/// One algorithm step per seed produces `(x_1, lambda_1)`; the scalarized
/// minimum uses the problem's closed form when available and a long
/// deterministic MGDA pre-run (T = 5000) as a fallback.
pub fn estimate_initial_suboptimality(
    problem: &dyn MolProblem,
    data: &Dataset,
    cfg: &AlgoConfig,
    seeds: &[u64],
    tol: f64,
) -> Result<f64> {
    if seeds.is_empty() {
        return Err(MolError::InvalidConfig("need at least one seed".into()));
    }
    let (_, m) = problem.dims();
    let mut value_sum = 0.0;
    let mut lambda_sum = nalgebra::DVector::zeros(m);
    for &seed in seeds {
        let mut one = cfg.clone();
        one.algo = AlgoKind::Modo;
        one.iterations = 1;
        one.record_every = 1;
        one.seed = seed;
        let traj = run_modo(problem, data, &one)?;
        let state = traj.final_state();
        let value: f64 = (0..m)
            .map(|j| {
                let avg: f64 = data
                    .samples()
                    .iter()
                    .map(|z| problem.per_sample_value(&state.x, z, j))
                    .sum::<f64>()
                    / data.len() as f64;
                avg * state.lambda.as_vector()[j]
            })
            .sum();
        value_sum += value;
        lambda_sum += state.lambda.as_vector();
    }
    let mean_value = value_sum / seeds.len() as f64;
    let mean_lambda = WeightVector::new_with_tol(lambda_sum / seeds.len() as f64, 1e-9, 1e-7)?;

    let minimum = match problem.scalarized_empirical_minimum(&mean_lambda, data) {
        Some(v) => v,
        None => {
            let mut pre = cfg.clone();
            pre.algo = AlgoKind::Mgda;
            pre.iterations = 5000;
            pre.record_every = 5000;
            let traj = run_mgda(problem, data, &pre, tol)?;
            let x = &traj.final_state().x;
            (0..m)
                .map(|j| {
                    let avg: f64 = data
                        .samples()
                        .iter()
                        .map(|z| problem.per_sample_value(x, z, j))
                        .sum::<f64>()
                        / data.len() as f64;
                    avg * mean_lambda.as_vector()[j]
                })
                .sum()
        }
    };
    Ok((mean_value - minimum).max(0.0))
}

/// Derive the per-seed replicate seeds used when averaging over algorithm
/// randomness.
pub fn replicate_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count).map(|k| derive_seed(base, k as u64)).collect()
}
