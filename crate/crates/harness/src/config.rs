//! Configuration ingestion: one self-contained JSON document describes a
//! sweep (problem, algorithms, grids, seeds, output) so every experiment is
//! reproducible from a single artifact.

use std::path::PathBuf;
use std::sync::Arc;

use mol_core::problems::{
    make_lower_bound_example, make_sc_quadratic, make_toy_nonconvex, random_spd_matrix,
    LowerBoundSpec, ScQuadraticSpec, ToySpec,
};
use mol_core::{AlgoKind, Dataset, MolProblem};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Tagged problem description. The dataset size `n` is supplied per sweep
/// cell, not here, so one problem block serves the whole `n` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProblemConfig {
    /// Strongly convex quadratic suite.
    ScQuadratic {
        #[serde(default = "default_dim")]
        d: usize,
        #[serde(default = "default_b1")]
        b1: Vec<f64>,
        #[serde(default = "default_b2")]
        b2: Vec<f64>,
        /// Eigenvalue range for the seeded random SPD curvature matrix.
        #[serde(default = "default_eig_range")]
        eig_range: [f64; 2],
        #[serde(default = "default_matrix_seed")]
        matrix_seed: u64,
        /// Defaults to the first standard basis vector.
        #[serde(default)]
        z_mean: Option<Vec<f64>>,
        #[serde(default = "default_z_std")]
        z_std: f64,
        #[serde(default = "default_data_seed")]
        data_seed: u64,
    },
    /// Two-objective nonconvex toy landscape.
    Toy {
        #[serde(default = "default_data_seed")]
        data_seed: u64,
    },
    /// Quadratic stability lower-bound construction.
    LowerBound {
        #[serde(default = "default_lb_dim")]
        d: usize,
    },
}

fn default_dim() -> usize {
    10
}
fn default_lb_dim() -> usize {
    2
}
fn default_b1() -> Vec<f64> {
    vec![1.0, 2.0, 1.0]
}
fn default_b2() -> Vec<f64> {
    vec![1.0, 3.0, 2.0]
}
fn default_eig_range() -> [f64; 2] {
    [0.5, 5.0]
}
fn default_matrix_seed() -> u64 {
    0x5c_ab1e
}
fn default_z_std() -> f64 {
    1.0
}
fn default_data_seed() -> u64 {
    42
}
fn default_tol() -> f64 {
    1e-10
}
fn default_record_every() -> usize {
    1
}
fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}

impl ProblemConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            ProblemConfig::ScQuadratic { .. } => "sc_quadratic",
            ProblemConfig::Toy { .. } => "toy",
            ProblemConfig::LowerBound { .. } => "lower_bound",
        }
    }

    /// `(d, M)` of the instantiated problem.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ProblemConfig::ScQuadratic { d, b1, .. } => (*d, b1.len()),
            ProblemConfig::Toy { .. } => (2, 2),
            ProblemConfig::LowerBound { d, .. } => (*d, 2),
        }
    }

    /// Build the problem and its size-`n` training set.
    pub fn instantiate(&self, n: usize) -> anyhow::Result<(Arc<dyn MolProblem>, Dataset)> {
        match self {
            ProblemConfig::ScQuadratic {
                d,
                b1,
                b2,
                eig_range,
                matrix_seed,
                z_mean,
                z_std,
                data_seed,
            } => {
                let mean = match z_mean {
                    Some(v) => DVector::from_row_slice(v),
                    None => {
                        let mut e = DVector::zeros(*d);
                        e[0] = 1.0;
                        e
                    }
                };
                let spec = ScQuadraticSpec {
                    d: *d,
                    m: b1.len(),
                    b1: b1.clone(),
                    b2: b2.clone(),
                    a: random_spd_matrix(*d, *matrix_seed, eig_range[0], eig_range[1]),
                    z_mean: mean,
                    z_std: *z_std,
                    n,
                    data_seed: *data_seed,
                };
                let (problem, data) = make_sc_quadratic(&spec)?;
                Ok((Arc::new(problem), data))
            }
            ProblemConfig::Toy { data_seed } => {
                let (problem, data) = make_toy_nonconvex(&ToySpec {
                    n,
                    data_seed: *data_seed,
                })?;
                Ok((Arc::new(problem), data))
            }
            ProblemConfig::LowerBound { d } => {
                let ex = make_lower_bound_example(&LowerBoundSpec { n, d: *d })?;
                Ok((Arc::new(ex.problem), ex.data))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grids {
    pub t: Vec<usize>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

/// One sweep: every combination of (algorithm, T, alpha, gamma, n) runs with
/// every seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub problem: ProblemConfig,
    pub algos: Vec<String>,
    pub grids: Grids,
    pub seeds: Vec<u64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub output: OutputConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Optional start point; defaults to the origin.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Optional initial weights; defaults to uniform.
    #[serde(default)]
    pub lambda0: Option<Vec<f64>>,
    /// When false (default), the wall_ns column is written as 0 so reruns
    /// are byte-identical; set to true to record real per-trajectory times.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepConfig {
    pub fn parse_algos(&self) -> anyhow::Result<Vec<AlgoKind>> {
        self.algos
            .iter()
            .map(|s| s.parse::<AlgoKind>().map_err(Into::into))
            .collect()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.algos.is_empty() {
            anyhow::bail!("config: algos must be nonempty");
        }
        self.parse_algos()?;
        let g = &self.grids;
        if g.t.is_empty() || g.alpha.is_empty() || g.gamma.is_empty() || g.n.is_empty() {
            anyhow::bail!("config: every grid (t, alpha, gamma, n) must be nonempty");
        }
        if g.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            anyhow::bail!("config: alpha grid values must be positive");
        }
        if g.gamma.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            anyhow::bail!("config: gamma grid values must be >= 0");
        }
        if g.n.iter().any(|&n| n == 0) {
            anyhow::bail!("config: n grid values must be >= 1");
        }
        if self.seeds.is_empty() {
            anyhow::bail!("config: seeds must be nonempty");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            anyhow::bail!("config: seeds must be distinct");
        }
        if self.record_every == 0 {
            anyhow::bail!("config: record_every must be >= 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            anyhow::bail!("config: tol must be positive");
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                anyhow::bail!("config: unknown output format '{f}' (expected csv or json)");
            }
        }
        if self.output.formats.is_empty() {
            anyhow::bail!("config: output formats must be nonempty");
        }
        let (d, m) = self.problem.dims();
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                anyhow::bail!("config: x0 has dimension {}, problem needs {d}", x0.len());
            }
        }
        if let Some(l0) = &self.lambda0 {
            if l0.len() != m {
                anyhow::bail!("config: lambda0 has dimension {}, problem needs {m}", l0.len());
            }
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: SweepConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Weight step size for stability runs: a literal value or the largest step
/// the strongly convex stability theorem permits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, rename_all = "snake_case")]
pub enum GammaChoice {
    Value(f64),
    Named(String),
}

impl GammaChoice {
    pub fn is_cap(&self) -> anyhow::Result<bool> {
        match self {
            GammaChoice::Value(_) => Ok(false),
            GammaChoice::Named(s) if s == "cap" => Ok(true),
            GammaChoice::Named(s) => anyhow::bail!("config: gamma must be a number or \"cap\", got '{s}'"),
        }
    }
}

/// Configuration for the neighboring-dataset stability estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub problem: ProblemConfig,
    pub algo: String,
    pub t: usize,
    pub alpha: f64,
    pub gamma: GammaChoice,
    pub n_grid: Vec<usize>,
    pub num_seeds: usize,
    /// Dataset position replaced to form the neighbor.
    #[serde(default)]
    pub replace_index: usize,
    /// Fresh population draws appended to the probe set.
    #[serde(default = "default_fresh_probes")]
    pub fresh_probes: usize,
    #[serde(default = "default_data_seed")]
    pub seed: u64,
    pub output: OutputConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_fresh_probes() -> usize {
    16
}

impl StabilityConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.algo
            .parse::<AlgoKind>()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        if self.n_grid.is_empty() {
            anyhow::bail!("config: n_grid must be nonempty");
        }
        if self.num_seeds < 2 {
            anyhow::bail!("config: num_seeds must be >= 2");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            anyhow::bail!("config: alpha must be positive");
        }
        if let GammaChoice::Value(v) = &self.gamma {
            if !(*v >= 0.0 && v.is_finite()) {
                anyhow::bail!("config: gamma must be >= 0");
            }
        } else {
            self.gamma.is_cap()?;
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: StabilityConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(dir: &str) -> String {
        format!(
            r#"{{
  "problem": {{"type": "sc_quadratic"}},
  "algos": ["modo"],
  "grids": {{"t": [10], "alpha": [0.01], "gamma": [0.001], "n": [20]}},
  "seeds": [1, 2],
  "output": {{"dir": "{dir}"}}
}}"#
        )
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg: SweepConfig = serde_json::from_str(&minimal_json("/tmp/out")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.record_every, 1);
        assert!(!cfg.record_wall_time);
        assert_eq!(cfg.output.formats, vec!["csv".to_string()]);
        assert_eq!(cfg.problem.dims(), (10, 3));
    }

    #[test]
    fn rejects_duplicate_seeds_and_empty_grids() {
        let mut cfg: SweepConfig = serde_json::from_str(&minimal_json("/tmp/out")).unwrap();
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1];
        cfg.grids.alpha.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_algorithm_and_format() {
        let mut cfg: SweepConfig = serde_json::from_str(&minimal_json("/tmp/out")).unwrap();
        cfg.algos = vec!["adamw".into()];
        assert!(cfg.validate().is_err());
        cfg.algos = vec!["modo".into()];
        cfg.output.formats = vec!["parquet".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gamma_choice_accepts_number_or_cap() {
        let v: GammaChoice = serde_json::from_str("0.001").unwrap();
        assert!(!v.is_cap().unwrap());
        let c: GammaChoice = serde_json::from_str("\"cap\"").unwrap();
        assert!(c.is_cap().unwrap());
        let bad: GammaChoice = serde_json::from_str("\"auto\"").unwrap();
        assert!(bad.is_cap().is_err());
    }

    #[test]
    fn problem_instantiation_matches_dims() {
        let cfg: SweepConfig = serde_json::from_str(&minimal_json("/tmp/out")).unwrap();
        let (problem, data) = cfg.problem.instantiate(20).unwrap();
        assert_eq!(problem.dims(), (10, 3));
        assert_eq!(data.len(), 20);
    }
}
