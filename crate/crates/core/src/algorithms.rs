//! Trajectory runners: MoDo (stochastic double-sampling dynamic weighting),
//! deterministic full-batch MGDA, and static weighting.
//!
//! One MoDo step draws three independent samples. The first two form the
//! unbiased weight-update gradient, the third drives the model update:
//!
//! ```text
//! lambda' = proj_simplex(lambda - gamma * G_{z1}^T G_{z2} lambda)
//! x'      = x - alpha * G_{z3} lambda'
//! ```
//!
//! The weight update always runs first; the fresh weights multiply the
//! third-sample gradient. Static weighting consumes only the third slot of
//! the same keyed index stream, which makes "MoDo with gamma = 0 equals
//! static weighting" an exact, bit-level identity rather than a statistical
//! one.

use crate::error::{MolError, Result};
use crate::minnorm::{default_max_iters, solve_min_norm};
use crate::sampling::{index_at, triple_at};
use crate::simplex::project_simplex;
use crate::types::{Dataset, ModelParams, MolProblem, WeightVector};

/// Abort a trajectory once the iterate norm passes this guard.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgoKind {
    Modo,
    Mgda,
    Static,
}

impl AlgoKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgoKind::Modo => "modo",
            AlgoKind::Mgda => "mgda",
            AlgoKind::Static => "static",
        }
    }
}

impl std::str::FromStr for AlgoKind {
    type Err = MolError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modo" => Ok(AlgoKind::Modo),
            "mgda" => Ok(AlgoKind::Mgda),
            "static" => Ok(AlgoKind::Static),
            other => Err(MolError::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Trajectory configuration. MGDA ignores `gamma` and the seed (full batch,
/// deterministic); static weighting ignores `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoConfig {
    pub algo: AlgoKind,
    pub iterations: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub lambda0: WeightVector,
    pub x0: ModelParams,
    pub seed: u64,
    pub record_every: usize,
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(MolError::InvalidConfig(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(MolError::InvalidConfig(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.record_every == 0 {
            return Err(MolError::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One recorded trajectory state `(t, x_t, lambda_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: usize,
    pub x: ModelParams,
    pub lambda: WeightVector,
}

/// A full run of one algorithm on one dataset: recorded states plus the
/// sample indices consumed at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    /// `(t, indices used at step t)`: three per step for MoDo, one for
    /// static weighting, none for MGDA.
    pub sampled_indices: Vec<(usize, Vec<usize>)>,
    pub config: AlgoConfig,
    pub dataset_id: String,
}

impl Trajectory {
    pub fn final_state(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory always has the initial state")
    }
}

/// One MoDo step (weight update first, then model update).
pub fn modo_step(
    problem: &dyn MolProblem,
    data: &Dataset,
    x: &ModelParams,
    lambda: &WeightVector,
    alpha: f64,
    gamma: f64,
    indices: (usize, usize, usize),
) -> Result<(ModelParams, WeightVector)> {
    let (i1, i2, i3) = indices;
    let n = data.len();
    for i in [i1, i2, i3] {
        if i >= n {
            return Err(MolError::IndexOutOfBounds { index: i, len: n });
        }
    }

    let g1 = problem.per_sample_gradient_matrix(x, data.sample(i1));
    let g2 = problem.per_sample_gradient_matrix(x, data.sample(i2));
    // grad_lambda = G_{z1}^T (G_{z2} lambda), an unbiased estimate of
    // grad of (1/2)||G_S lambda||^2 thanks to the two independent samples.
    let weighted = g2.combine(lambda);
    let grad_lambda = g1.as_matrix().transpose() * weighted;
    let shifted = lambda.as_vector() - gamma * grad_lambda;
    if !shifted.iter().all(|v| v.is_finite()) {
        return Err(MolError::NonFiniteInput);
    }
    let new_lambda = project_simplex(&shifted)?;

    let g3 = problem.per_sample_gradient_matrix(x, data.sample(i3));
    let new_x = x.as_vector() - alpha * g3.combine(&new_lambda);
    if !new_x.iter().all(|v| v.is_finite()) {
        return Err(MolError::NonFiniteInput);
    }
    Ok((ModelParams::new(new_x)?, new_lambda))
}

struct Recorder {
    states: Vec<TrajectoryState>,
    record_every: usize,
    total: usize,
}

impl Recorder {
    fn new(cfg: &AlgoConfig) -> Self {
        let mut states = Vec::with_capacity(cfg.iterations / cfg.record_every + 2);
        states.push(TrajectoryState {
            t: 0,
            x: cfg.x0.clone(),
            lambda: cfg.lambda0.clone(),
        });
        Recorder {
            states,
            record_every: cfg.record_every,
            total: cfg.iterations,
        }
    }

    fn record(&mut self, t: usize, x: &ModelParams, lambda: &WeightVector) {
        if t % self.record_every == 0 || t == self.total {
            self.states.push(TrajectoryState {
                t,
                x: x.clone(),
                lambda: lambda.clone(),
            });
        }
    }
}

fn guard_divergence(step: usize, x: &ModelParams, lambda: &WeightVector) -> Result<()> {
    let x_norm = x.norm();
    if x_norm > DIVERGENCE_GUARD {
        return Err(MolError::Divergence {
            step,
            x_norm,
            lambda_norm: lambda.as_vector().norm(),
        });
    }
    Ok(())
}

fn wrap_step_error(err: MolError, step: usize, x: &ModelParams, lambda: &WeightVector) -> MolError {
    match err {
        MolError::NonFiniteInput | MolError::NonFiniteEvaluation => MolError::Divergence {
            step,
            x_norm: x.norm(),
            lambda_norm: lambda.as_vector().norm(),
        },
        other => other,
    }
}

/// Run MoDo: three i.i.d. uniform index draws per step from the keyed
/// stream, weight update then model update.
pub fn run_modo(problem: &dyn MolProblem, data: &Dataset, cfg: &AlgoConfig) -> Result<Trajectory> {
    debug_assert_eq!(cfg.algo, AlgoKind::Modo);
    cfg.validate()?;
    let n = data.len();
    let mut recorder = Recorder::new(cfg);
    let mut sampled = Vec::with_capacity(cfg.iterations);
    let mut x = cfg.x0.clone();
    let mut lambda = cfg.lambda0.clone();
    for t in 0..cfg.iterations {
        let [i1, i2, i3] = triple_at(cfg.seed, t, n);
        sampled.push((t, vec![i1, i2, i3]));
        let (nx, nl) = modo_step(problem, data, &x, &lambda, cfg.alpha, cfg.gamma, (i1, i2, i3))
            .map_err(|e| wrap_step_error(e, t, &x, &lambda))?;
        x = nx;
        lambda = nl;
        guard_divergence(t, &x, &lambda)?;
        recorder.record(t + 1, &x, &lambda);
    }
    Ok(Trajectory {
        states: recorder.states,
        sampled_indices: sampled,
        config: cfg.clone(),
        dataset_id: data.id().to_string(),
    })
}

/// Run deterministic full-batch MGDA: exact min-norm weights on the
/// empirical gradient at every step.
pub fn run_mgda(
    problem: &dyn MolProblem,
    data: &Dataset,
    cfg: &AlgoConfig,
    tol: f64,
) -> Result<Trajectory> {
    debug_assert_eq!(cfg.algo, AlgoKind::Mgda);
    cfg.validate()?;
    let mut recorder = Recorder::new(cfg);
    let mut x = cfg.x0.clone();
    for t in 0..cfg.iterations {
        let g = problem.empirical_gradient_matrix(&x, data);
        let sol = solve_min_norm(&g, tol, default_max_iters(&g)).map_err(|e| {
            MolError::SubproblemAtStep {
                step: t,
                source: Box::new(e),
            }
        })?;
        let lambda = sol.weights;
        let new_x = x.as_vector() - cfg.alpha * g.combine(&lambda);
        if !new_x.iter().all(|v| v.is_finite()) {
            return Err(MolError::Divergence {
                step: t,
                x_norm: x.norm(),
                lambda_norm: lambda.as_vector().norm(),
            });
        }
        x = ModelParams::new(new_x)?;
        guard_divergence(t, &x, &lambda)?;
        recorder.record(t + 1, &x, &lambda);
    }
    Ok(Trajectory {
        states: recorder.states,
        sampled_indices: Vec::new(),
        config: cfg.clone(),
        dataset_id: data.id().to_string(),
    })
}

/// Run static weighting: `lambda` stays at `lambda0`; each step consumes
/// only the third slot of the keyed stream.
pub fn run_static(problem: &dyn MolProblem, data: &Dataset, cfg: &AlgoConfig) -> Result<Trajectory> {
    debug_assert_eq!(cfg.algo, AlgoKind::Static);
    cfg.validate()?;
    let n = data.len();
    let mut recorder = Recorder::new(cfg);
    let mut sampled = Vec::with_capacity(cfg.iterations);
    let lambda = cfg.lambda0.clone();
    let mut x = cfg.x0.clone();
    for t in 0..cfg.iterations {
        let i3 = index_at(cfg.seed, t, 3, n);
        sampled.push((t, vec![i3]));
        let g3 = problem.per_sample_gradient_matrix(&x, data.sample(i3));
        let new_x = x.as_vector() - cfg.alpha * g3.combine(&lambda);
        if !new_x.iter().all(|v| v.is_finite()) {
            return Err(MolError::Divergence {
                step: t,
                x_norm: x.norm(),
                lambda_norm: lambda.as_vector().norm(),
            });
        }
        x = ModelParams::new(new_x)?;
        guard_divergence(t, &x, &lambda)?;
        recorder.record(t + 1, &x, &lambda);
    }
    Ok(Trajectory {
        states: recorder.states,
        sampled_indices: sampled,
        config: cfg.clone(),
        dataset_id: data.id().to_string(),
    })
}

/// Dispatch on `cfg.algo`.
pub fn run(problem: &dyn MolProblem, data: &Dataset, cfg: &AlgoConfig, tol: f64) -> Result<Trajectory> {
    match cfg.algo {
        AlgoKind::Modo => run_modo(problem, data, cfg),
        AlgoKind::Mgda => run_mgda(problem, data, cfg, tol),
        AlgoKind::Static => run_static(problem, data, cfg),
    }
}
