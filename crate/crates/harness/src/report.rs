//! Result persistence: long-form CSV (one row per recorded step), aggregate
//! CSV (one row per cell), optional JSON mirrors, and a manifest with
//! content hashes. Floats are written in shortest round-trip form and rows
//! are pre-sorted, so identical results produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::SweepConfig;
use crate::sweep::SweepResults;

pub const LONG_HEADER: &str =
    "run_id,problem,algo,n,T,alpha,gamma,seed,t,r_opt,r_pop,r_gen,e_ca,ps_pop,pop_source,wall_ns";
pub const AGG_HEADER: &str = "problem,algo,n,T,alpha,gamma,num_seeds,r_opt_mean,r_opt_se,r_pop_mean,r_pop_se,r_gen_mean,r_gen_se,e_ca_mean,e_ca_se,ca_bound,opt_bound,stab_upper,status,reason";

/// Shortest round-trip decimal form (`Display` for f64).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Commas and newlines would corrupt the unquoted CSV; replace them.
fn sanitize(reason: &str) -> String {
    reason.replace([',', '\n'], ";")
}

pub fn long_csv(results: &SweepResults) -> String {
    let mut out = String::with_capacity(64 * (results.long.len() + 1));
    out.push_str(LONG_HEADER);
    out.push('\n');
    for r in &results.long {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.problem,
            r.algo.name(),
            r.n,
            r.t_total,
            fmt_f64(r.alpha),
            fmt_f64(r.gamma),
            r.seed,
            r.t,
            fmt_f64(r.r_opt),
            fmt_f64(r.r_pop),
            fmt_f64(r.r_gen),
            fmt_f64(r.e_ca),
            fmt_f64(r.ps_pop),
            r.pop_source.name(),
            r.wall_ns
        )
        .expect("string write");
    }
    out
}

pub fn agg_csv(results: &SweepResults) -> String {
    let mut out = String::with_capacity(64 * (results.agg.len() + 1));
    out.push_str(AGG_HEADER);
    out.push('\n');
    for r in &results.agg {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},ok,",
            r.problem,
            r.key.algo.name(),
            r.key.n,
            r.key.t,
            fmt_f64(r.key.alpha),
            fmt_f64(r.key.gamma),
            r.num_seeds,
            fmt_f64(r.r_opt_mean),
            fmt_f64(r.r_opt_se),
            fmt_f64(r.r_pop_mean),
            fmt_f64(r.r_pop_se),
            fmt_f64(r.r_gen_mean),
            fmt_f64(r.r_gen_se),
            fmt_f64(r.e_ca_mean),
            fmt_f64(r.e_ca_se),
            fmt_opt(r.ca_bound),
            fmt_opt(r.opt_bound),
            fmt_opt(r.stab_upper),
        )
        .expect("string write");
    }
    for f in &results.failed {
        writeln!(
            out,
            "{},{},{},{},{},{},,,,,,,,,,,,,failed,{}",
            f.problem,
            f.key.algo.name(),
            f.key.n,
            f.key.t,
            fmt_f64(f.key.alpha),
            fmt_f64(f.key.gamma),
            sanitize(&f.reason)
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct LongRowJson {
    run_id: String,
    problem: String,
    algo: String,
    n: usize,
    t_total: usize,
    alpha: f64,
    gamma: f64,
    seed: u64,
    t: usize,
    r_opt: f64,
    r_pop: f64,
    r_gen: f64,
    e_ca: f64,
    ps_pop: f64,
    pop_source: String,
    wall_ns: u128,
}

#[derive(Debug, Clone, Serialize)]
struct AggRowJson {
    problem: String,
    algo: String,
    n: usize,
    t_total: usize,
    alpha: f64,
    gamma: f64,
    num_seeds: usize,
    r_opt_mean: f64,
    r_opt_se: f64,
    r_pop_mean: f64,
    r_pop_se: f64,
    r_gen_mean: f64,
    r_gen_se: f64,
    e_ca_mean: f64,
    e_ca_se: f64,
    ca_bound: Option<f64>,
    opt_bound: Option<f64>,
    stab_upper: Option<f64>,
}

fn long_json(results: &SweepResults) -> String {
    let rows: Vec<LongRowJson> = results
        .long
        .iter()
        .map(|r| LongRowJson {
            run_id: r.run_id.clone(),
            problem: r.problem.clone(),
            algo: r.algo.name().into(),
            n: r.n,
            t_total: r.t_total,
            alpha: r.alpha,
            gamma: r.gamma,
            seed: r.seed,
            t: r.t,
            r_opt: r.r_opt,
            r_pop: r.r_pop,
            r_gen: r.r_gen,
            e_ca: r.e_ca,
            ps_pop: r.ps_pop,
            pop_source: r.pop_source.name().into(),
            wall_ns: r.wall_ns,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable rows")
}

fn agg_json(results: &SweepResults) -> String {
    let rows: Vec<AggRowJson> = results
        .agg
        .iter()
        .map(|r| AggRowJson {
            problem: r.problem.clone(),
            algo: r.key.algo.name().into(),
            n: r.key.n,
            t_total: r.key.t,
            alpha: r.key.alpha,
            gamma: r.key.gamma,
            num_seeds: r.num_seeds,
            r_opt_mean: r.r_opt_mean,
            r_opt_se: r.r_opt_se,
            r_pop_mean: r.r_pop_mean,
            r_pop_se: r.r_pop_se,
            r_gen_mean: r.r_gen_mean,
            r_gen_se: r.r_gen_se,
            e_ca_mean: r.e_ca_mean,
            e_ca_se: r.e_ca_se,
            ca_bound: r.ca_bound,
            opt_bound: r.opt_bound,
            stab_upper: r.stab_upper,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable rows")
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedCellJson {
    pub problem: String,
    pub algo: String,
    pub n: usize,
    pub t_total: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: SweepConfig,
    pub files: Vec<ManifestFile>,
    pub failed_cells: Vec<FailedCellJson>,
}

fn sha256_hex(data: &str) -> String {
    hex::encode(Sha256::digest(data.as_bytes()))
}

/// Write results per the configured formats into `dir` and return the
/// manifest (also written as `manifest.json`).
///
/// `force_empty` permits writing header-only tables when there are no rows;
/// without it an empty result set is an error.
pub fn emit_report(
    results: &SweepResults,
    cfg: &SweepConfig,
    dir: &Path,
    force_empty: bool,
) -> anyhow::Result<Manifest> {
    if results.agg.is_empty() && results.failed.is_empty() && !force_empty {
        anyhow::bail!("refusing to write an empty report (pass force to allow)");
    }
    std::fs::create_dir_all(dir)?;

    let mut planned: Vec<(PathBuf, String)> = Vec::new();
    if cfg.output.formats.iter().any(|f| f == "csv") {
        planned.push((dir.join("long.csv"), long_csv(results)));
        planned.push((dir.join("agg.csv"), agg_csv(results)));
    }
    if cfg.output.formats.iter().any(|f| f == "json") {
        planned.push((dir.join("long.json"), long_json(results)));
        planned.push((dir.join("agg.json"), agg_json(results)));
    }

    let mut files = Vec::new();
    for (path, content) in &planned {
        std::fs::write(path, content).map_err(|e| {
            anyhow::anyhow!(
                "write failed for {} (completed: {:?}): {e}",
                path.display(),
                files
            )
        })?;
        files.push(ManifestFile {
            path: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(content),
            bytes: content.len(),
        });
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        files,
        failed_cells: results
            .failed
            .iter()
            .map(|f| FailedCellJson {
                problem: f.problem.clone(),
                algo: f.key.algo.name().into(),
                n: f.key.n,
                t_total: f.key.t,
                alpha: f.key.alpha,
                gamma: f.key.gamma,
                seed: f.seed,
                reason: f.reason.clone(),
            })
            .collect(),
    };
    let manifest_text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), manifest_text)?;
    Ok(manifest)
}
