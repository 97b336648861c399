//! Sweep execution: every (algorithm, T, alpha, gamma, n) cell runs with
//! every seed, metrics are evaluated along each trajectory, and cells are
//! aggregated across seeds (mean and standard error of the time-averaged
//! metrics). Cells are independent tasks; results are sorted by cell key
//! before emission so the output does not depend on the worker count.

use std::time::Instant;

use mol_core::{
    ca_bound_rhs, estimate_initial_suboptimality, evaluate_trajectory, opt_bound_rhs, run,
    stability_upper_value, uniform_weights, AlgoConfig, AlgoKind, ModelParams, PopSource,
    WeightVector,
};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::SweepConfig;

/// One sweep cell: a full hyperparameter assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub algo: AlgoKind,
    pub n: usize,
    pub t: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl CellKey {
    pub fn run_id(&self, problem_tag: &str, seed: u64) -> String {
        format!(
            "{problem_tag}-{}-n{}-T{}-a{}-g{}-s{seed}",
            self.algo.name(),
            self.n,
            self.t,
            self.alpha,
            self.gamma
        )
    }
}

/// One long-form row: one recorded trajectory state.
#[derive(Debug, Clone)]
pub struct LongRow {
    pub run_id: String,
    pub problem: String,
    pub algo: AlgoKind,
    pub n: usize,
    pub t_total: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
    pub t: usize,
    pub r_opt: f64,
    pub r_pop: f64,
    pub r_gen: f64,
    pub e_ca: f64,
    /// Population PS measure (the quantity r_pop measures).
    pub ps_pop: f64,
    pub pop_source: PopSource,
    pub wall_ns: u128,
}

/// One aggregate row: seed mean and standard error of the time-averaged
/// metrics of one cell, plus theoretical bound values where applicable.
#[derive(Debug, Clone)]
pub struct AggRow {
    pub problem: String,
    pub key: CellKey,
    pub num_seeds: usize,
    pub r_opt_mean: f64,
    pub r_opt_se: f64,
    pub r_pop_mean: f64,
    pub r_pop_se: f64,
    pub r_gen_mean: f64,
    pub r_gen_se: f64,
    pub e_ca_mean: f64,
    pub e_ca_se: f64,
    pub ca_bound: Option<f64>,
    pub opt_bound: Option<f64>,
    pub stab_upper: Option<f64>,
}

/// A cell that aborted (divergence or solver failure), with the reason.
#[derive(Debug, Clone)]
pub struct FailedCell {
    pub problem: String,
    pub key: CellKey,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResults {
    pub long: Vec<LongRow>,
    pub agg: Vec<AggRow>,
    pub failed: Vec<FailedCell>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

enum CellOutcome {
    Ok(Vec<LongRow>, AggRow),
    Failed(FailedCell),
}

fn run_cell(cfg: &SweepConfig, key: &CellKey) -> anyhow::Result<CellOutcome> {
    let (problem, data) = cfg.problem.instantiate(key.n)?;
    let (d, m) = problem.dims();
    let x0 = match &cfg.x0 {
        Some(v) => ModelParams::from_slice(v)?,
        None => ModelParams::zeros(d),
    };
    let lambda0 = match &cfg.lambda0 {
        Some(v) => WeightVector::from_slice(v)?,
        None => uniform_weights(m)?,
    };
    let tag = cfg.problem.tag();

    let mut long = Vec::new();
    let mut per_seed: Vec<[f64; 4]> = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let algo_cfg = AlgoConfig {
            algo: key.algo,
            iterations: key.t,
            alpha: key.alpha,
            gamma: key.gamma,
            lambda0: lambda0.clone(),
            x0: x0.clone(),
            seed,
            record_every: cfg.record_every,
        };
        let started = Instant::now();
        let trajectory = match run(problem.as_ref(), &data, &algo_cfg, cfg.tol) {
            Ok(t) => t,
            Err(e) => {
                return Ok(CellOutcome::Failed(FailedCell {
                    problem: tag.to_string(),
                    key: key.clone(),
                    seed,
                    reason: e.to_string(),
                }));
            }
        };
        let wall_ns = if cfg.record_wall_time {
            started.elapsed().as_nanos()
        } else {
            0
        };
        let (records, avg) =
            match evaluate_trajectory(problem.as_ref(), &data, None, &trajectory, cfg.tol) {
                Ok(r) => r,
                Err(e) => {
                    return Ok(CellOutcome::Failed(FailedCell {
                        problem: tag.to_string(),
                        key: key.clone(),
                        seed,
                        reason: e.to_string(),
                    }));
                }
            };
        let run_id = key.run_id(tag, seed);
        for r in records {
            long.push(LongRow {
                run_id: run_id.clone(),
                problem: tag.to_string(),
                algo: key.algo,
                n: key.n,
                t_total: key.t,
                alpha: key.alpha,
                gamma: key.gamma,
                seed,
                t: r.t,
                r_opt: r.r_opt,
                r_pop: r.r_pop,
                r_gen: r.r_gen,
                e_ca: r.e_ca,
                ps_pop: r.r_pop,
                pop_source: r.pop_source,
                wall_ns,
            });
        }
        per_seed.push([avg.r_opt, avg.r_pop, avg.r_gen, avg.e_ca]);
    }

    let col = |i: usize| per_seed.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let (r_opt_mean, r_opt_se) = mean_se(&col(0));
    let (r_pop_mean, r_pop_se) = mean_se(&col(1));
    let (r_gen_mean, r_gen_se) = mean_se(&col(2));
    let (e_ca_mean, e_ca_se) = mean_se(&col(3));

    // Bound columns apply to the dynamic-weighting updates only, and only
    // when the problem carries analytic constants.
    let constants = problem.bound_constants();
    let (mut ca_bound, mut opt_bound, mut stab_upper) = (None, None, None);
    if key.algo == AlgoKind::Modo {
        if let Some(c) = &constants {
            if key.t > 0 {
                ca_bound = ca_bound_rhs(c, key.alpha, key.gamma, key.t).ok();
                let base_cfg = AlgoConfig {
                    algo: AlgoKind::Modo,
                    iterations: key.t,
                    alpha: key.alpha,
                    gamma: key.gamma,
                    lambda0: lambda0.clone(),
                    x0: x0.clone(),
                    seed: cfg.seeds[0],
                    record_every: cfg.record_every,
                };
                opt_bound = estimate_initial_suboptimality(
                    problem.as_ref(),
                    &data,
                    &base_cfg,
                    &cfg.seeds,
                    cfg.tol,
                )
                .ok()
                .and_then(|c_f| opt_bound_rhs(c, c_f, key.alpha, key.gamma, key.t).ok());
            }
            stab_upper = stability_upper_value(c, key.alpha, key.gamma, key.n).ok();
        }
    }

    Ok(CellOutcome::Ok(
        long,
        AggRow {
            problem: tag.to_string(),
            key: key.clone(),
            num_seeds: cfg.seeds.len(),
            r_opt_mean,
            r_opt_se,
            r_pop_mean,
            r_pop_se,
            r_gen_mean,
            r_gen_se,
            e_ca_mean,
            e_ca_se,
            ca_bound,
            opt_bound,
            stab_upper,
        },
    ))
}

/// Worker count: `MOL_WORKERS` override, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var("MOL_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        })
}

/// Execute the sweep. Failed cells are recorded and skipped; everything
/// else is aggregated. Output order is fixed by the cell enumeration
/// order, independent of parallelism.
pub fn run_sweep(cfg: &SweepConfig) -> anyhow::Result<SweepResults> {
    cfg.validate()?;
    let algos = cfg.parse_algos()?;
    let mut keys = Vec::new();
    for &algo in &algos {
        for &n in &cfg.grids.n {
            for &t in &cfg.grids.t {
                for &alpha in &cfg.grids.alpha {
                    for &gamma in &cfg.grids.gamma {
                        keys.push(CellKey {
                            algo,
                            n,
                            t,
                            alpha,
                            gamma,
                        });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| anyhow::anyhow!("cannot build worker pool: {e}"))?;
    let outcomes: Vec<anyhow::Result<CellOutcome>> =
        pool.install(|| keys.par_iter().map(|key| run_cell(cfg, key)).collect());

    let mut results = SweepResults::default();
    for outcome in outcomes {
        match outcome? {
            CellOutcome::Ok(long, agg) => {
                results.long.extend(long);
                results.agg.push(agg);
            }
            CellOutcome::Failed(f) => results.failed.push(f),
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Grids, OutputConfig, ProblemConfig};

    fn small_cfg() -> SweepConfig {
        SweepConfig {
            problem: ProblemConfig::ScQuadratic {
                d: 10,
                b1: vec![1.0, 2.0, 1.0],
                b2: vec![1.0, 3.0, 2.0],
                eig_range: [0.5, 5.0],
                matrix_seed: 0x5c_ab1e,
                z_mean: None,
                z_std: 1.0,
                data_seed: 42,
            },
            algos: vec!["modo".into()],
            grids: Grids {
                t: vec![5],
                alpha: vec![0.01],
                gamma: vec![0.001],
                n: vec![10],
            },
            seeds: vec![1, 2],
            record_every: 1,
            output: OutputConfig {
                dir: "/tmp/unused".into(),
                formats: vec!["csv".into()],
            },
            tol: 1e-10,
            x0: None,
            lambda0: None,
            record_wall_time: false,
        }
    }

    #[test]
    fn single_cell_zero_iterations() {
        let mut cfg = small_cfg();
        cfg.grids.t = vec![0];
        cfg.seeds = vec![1];
        let results = run_sweep(&cfg).unwrap();
        assert_eq!(results.agg.len(), 1);
        assert_eq!(results.long.len(), 1);
        assert_eq!(results.long[0].t, 0);
        assert!(results.failed.is_empty());
        // The aggregate equals the single initial-point record.
        assert_eq!(results.agg[0].r_opt_mean, results.long[0].r_opt);
    }

    #[test]
    fn long_rows_count_matches_recorded_states() {
        let cfg = small_cfg();
        let results = run_sweep(&cfg).unwrap();
        // T=5, record_every=1: states 0..=5 per seed, 2 seeds.
        assert_eq!(results.long.len(), 12);
        assert_eq!(results.agg.len(), 1);
        assert_eq!(results.agg[0].num_seeds, 2);
        // Bound columns are populated for modo on a problem with constants.
        assert!(results.agg[0].ca_bound.is_some());
        assert!(results.agg[0].opt_bound.is_some());
        assert!(results.agg[0].stab_upper.is_some());
    }

    #[test]
    fn failed_cells_do_not_poison_others() {
        let mut cfg = small_cfg();
        // One sane alpha plus one that diverges on the steep quadratic.
        cfg.grids.alpha = vec![0.01, 1e9];
        cfg.grids.t = vec![500];
        let results = run_sweep(&cfg).unwrap();
        assert_eq!(results.failed.len(), 1);
        assert_eq!(results.agg.len(), 1);
        assert!(results.failed[0].reason.contains("divergence at step"));
        assert_eq!(results.agg[0].key.alpha, 0.01);
    }

    #[test]
    fn results_identical_across_worker_counts() {
        let cfg = small_cfg();
        std::env::set_var("MOL_WORKERS", "1");
        let one = run_sweep(&cfg).unwrap();
        std::env::set_var("MOL_WORKERS", "4");
        let four = run_sweep(&cfg).unwrap();
        std::env::remove_var("MOL_WORKERS");
        assert_eq!(one.long.len(), four.long.len());
        for (a, b) in one.long.iter().zip(four.long.iter()) {
            assert_eq!(a.run_id, b.run_id);
            assert_eq!(a.r_opt, b.r_opt);
            assert_eq!(a.e_ca, b.e_ca);
        }
        for (a, b) in one.agg.iter().zip(four.agg.iter()) {
            assert_eq!(a.r_opt_mean, b.r_opt_mean);
            assert_eq!(a.e_ca_mean, b.e_ca_mean);
        }
    }
}
