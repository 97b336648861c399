//! Empirical algorithmic-stability estimation on neighboring datasets.
//!
//! For each replicate seed the configured algorithm runs on S and on S'
//! with the *same* keyed index stream, so both runs draw identical sample
//! positions and the final-iterate gap isolates the effect of the one
//! differing sample. This coupling is what the growth-recursion analysis
//! uses, and it collapses Monte Carlo variance by orders of magnitude.
//!
//! The uniform-stability `sup_z` is approximated by a finite probe set
//! (callers typically pass all samples of S and S' plus fresh draws).

use nalgebra::DVector;

use crate::algorithms::{run, AlgoConfig};
use crate::error::{MolError, Result};
use crate::sampling::derive_seed;
use crate::types::{BoundConstants, Dataset, MolProblem};

/// Empirical stability estimates with standard errors of the seed means.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub num_seeds: usize,
    /// Mean final-iterate distance `||x_T - x_T'||`.
    pub arg_stability: f64,
    pub arg_stability_se: f64,
    /// Mean squared final-iterate distance.
    pub arg_stability_sq: f64,
    pub arg_stability_sq_se: f64,
    /// Max over probe samples of the mean squared Frobenius gap
    /// `||grad F_z(x_T) - grad F_z(x_T')||_F^2`.
    pub mol_stability_sq: f64,
    pub mol_stability_sq_se: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Coupled-seed stability estimate on a neighboring dataset pair.
pub fn estimate_stability(
    problem: &dyn MolProblem,
    data: &Dataset,
    data_prime: &Dataset,
    cfg: &AlgoConfig,
    num_seeds: usize,
    probe_samples: &[DVector<f64>],
    tol: f64,
) -> Result<StabilityReport> {
    if data.len() != data_prime.len() {
        return Err(MolError::NotNeighboring {
            n_left: data.len(),
            n_right: data_prime.len(),
        });
    }
    if num_seeds < 2 {
        return Err(MolError::InvalidConfig("need num_seeds >= 2".into()));
    }
    if probe_samples.is_empty() {
        return Err(MolError::InvalidConfig("need at least one probe sample".into()));
    }

    let mut dists = Vec::with_capacity(num_seeds);
    let mut dists_sq = Vec::with_capacity(num_seeds);
    let mut probe_gaps: Vec<Vec<f64>> = vec![Vec::with_capacity(num_seeds); probe_samples.len()];

    for k in 0..num_seeds {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = derive_seed(cfg.seed, k as u64);
        let traj = run(problem, data, &run_cfg, tol)?;
        let traj_prime = run(problem, data_prime, &run_cfg, tol)?;
        let x = &traj.final_state().x;
        let x_prime = &traj_prime.final_state().x;
        let dist = (x.as_vector() - x_prime.as_vector()).norm();
        dists.push(dist);
        dists_sq.push(dist * dist);
        for (gaps, z) in probe_gaps.iter_mut().zip(probe_samples.iter()) {
            let g = problem.per_sample_gradient_matrix(x, z);
            let g_prime = problem.per_sample_gradient_matrix(x_prime, z);
            gaps.push((g.as_matrix() - g_prime.as_matrix()).norm_squared());
        }
    }

    let (arg_stability, arg_stability_se) = mean_and_se(&dists);
    let (arg_stability_sq, arg_stability_sq_se) = mean_and_se(&dists_sq);
    let (mol_stability_sq, mol_stability_sq_se) = probe_gaps
        .iter()
        .map(|gaps| mean_and_se(gaps))
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();

    Ok(StabilityReport {
        n: data.len(),
        num_seeds,
        arg_stability,
        arg_stability_se,
        arg_stability_sq,
        arg_stability_sq_se,
        mol_stability_sq,
        mol_stability_sq_se,
    })
}

/// Upper bound on the MOL uniform stability in the strongly convex regime:
/// `(48/(mu n)) l_f^2 l_{F,1}^2 (alpha + (12 + 4 M l_f^2)/(mu n)
///  + 10 M l_f^4 gamma / mu)`.
pub fn stability_upper_value(
    constants: &BoundConstants,
    alpha: f64,
    gamma: f64,
    n: usize,
) -> Result<f64> {
    constants.validate()?;
    let mu = constants.strong_convexity;
    if mu <= 0.0 {
        return Err(MolError::NeedsStrongConvexity);
    }
    let m = constants.num_objectives as f64;
    let lf = constants.lip_val;
    let lf1_frob = constants.lip_grad_frob;
    let nf = n as f64;
    Ok(48.0 / (mu * nf)
        * lf
        * lf
        * lf1_frob
        * lf1_frob
        * (alpha + (12.0 + 4.0 * m * lf * lf) / (mu * nf) + 10.0 * m * lf.powi(4) * gamma / mu))
}

/// Weight-step cap under which the strongly convex stability bound holds:
/// `min(mu^2 / (120 l_f^2 l_{g,1}), 1 / (8 (3 l_f^2 + 2 l_{g,1}))) / T`
/// with `l_{g,1} = l_f l_{F,1} + l_F l_{f,1}`.
pub fn stability_gamma_cap(constants: &BoundConstants, t_horizon: usize) -> Result<f64> {
    constants.validate()?;
    let mu = constants.strong_convexity;
    if mu <= 0.0 {
        return Err(MolError::NeedsStrongConvexity);
    }
    if t_horizon == 0 {
        return Err(MolError::InvalidConfig("cap needs T >= 1".into()));
    }
    let lf = constants.lip_val;
    let lg1 = lf * constants.lip_grad_frob + constants.lip_val_frob * constants.lip_grad;
    let cap = (mu * mu / (120.0 * lf * lf * lg1)).min(1.0 / (8.0 * (3.0 * lf * lf + 2.0 * lg1)));
    Ok(cap / t_horizon as f64)
}

/// Lower bound on the expected coupled argument distance for the dedicated
/// quadratic example: `gamma T / (2 n^2) + 1/(16 n)`.
pub fn stability_lower_value(gamma: f64, t_horizon: usize, n: usize) -> f64 {
    let nf = n as f64;
    gamma * t_horizon as f64 / (2.0 * nf * nf) + 1.0 / (16.0 * nf)
}
