//! Sweep runner for weighted-graph-state experiments: resolves a
//! configuration, evaluates it in parallel, caches and writes the result.

pub mod cache;
pub mod config;
pub mod experiments;
pub mod table;
pub mod validate;

use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;
use wgs_core::WgsError;

use crate::cache::{cache_lookup, cache_store, config_hash, CacheEntry, CODE_VERSION};
use crate::config::{FieldError, SweepConfig};
use crate::experiments::Status;
use crate::table::{write_outputs, OutputPaths, ResultTable};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {}", fields(.0))]
    Config(Vec<FieldError>),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
    /// A size cap was hit; rows computed before it were written.
    #[error("{0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn fields(errs: &[FieldError]) -> String {
    errs.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; ")
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Usage(_) => 1,
            LabError::Numerical(_) | LabError::Validation(_) | LabError::Io(_) => 2,
            LabError::Resource(_) => 3,
        }
    }
}

impl From<WgsError> for LabError {
    fn from(e: WgsError) -> Self {
        match e {
            WgsError::Domain(_) => LabError::Usage(e.to_string()),
            WgsError::Resource { .. } => LabError::Resource(e.to_string()),
            WgsError::Numerical(_) | WgsError::NoTransition(_) => LabError::Numerical(e.to_string()),
        }
    }
}

/// What a finished run produced and where it went.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub paths: OutputPaths,
    pub table: ResultTable,
    pub derived: Value,
    pub config_hash: String,
    pub cache_hit: bool,
}

fn convergence(unconverged: &[String]) -> Value {
    json!({"all_converged": unconverged.is_empty(), "unconverged": unconverged})
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn cache_dir(cfg: &SweepConfig) -> PathBuf {
    cfg.out.join(".cache")
}

/// Runs one resolved configuration end to end. Outputs are written even when
/// the run stops early at a size cap or fails validation; the error then
/// carries the exit status.
pub fn execute(cfg: &SweepConfig) -> Result<RunSummary, LabError> {
    let started = Instant::now();
    let hash = config_hash(cfg, CODE_VERSION);
    let paths = OutputPaths::new(&cfg.out, cfg.experiment.name());

    let (entry, cache_hit, status) = match cache_lookup(&cache_dir(cfg), &hash, CODE_VERSION) {
        Some(e) => {
            log::info!("cache hit {hash}");
            (e, true, Status::Complete)
        }
        None => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs.unwrap_or(0))
                .build()
                .map_err(|e| LabError::Usage(e.to_string()))?;
            let out = pool.install(|| experiments::run(cfg))?;
            let entry = CacheEntry {
                code_version: CODE_VERSION.into(),
                config_hash: hash.clone(),
                table: out.table,
                derived: Value::Object(out.derived),
                convergence: convergence(&out.unconverged),
            };
            (entry, false, out.status)
        }
    };

    let incomplete = matches!(status, Status::Incomplete(_));
    let sidecar = json!({
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "derived": entry.derived,
        "convergence": entry.convergence,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "code_version": CODE_VERSION,
        "timestamp": timestamp(),
        "seed": cfg.seed,
        "config_hash": hash,
        "cache_hit": cache_hit,
        "incomplete": incomplete,
    });
    write_outputs(&paths, &entry.table, &sidecar)?;
    if !cache_hit && status == Status::Complete {
        if let Err(e) = cache_store(&cache_dir(cfg), &entry) {
            log::warn!("could not store cache entry: {e}");
        }
    }
    match status {
        Status::Complete => Ok(RunSummary {
            paths,
            table: entry.table,
            derived: entry.derived,
            config_hash: hash,
            cache_hit,
        }),
        Status::Incomplete(why) => Err(LabError::Resource(why)),
        Status::Failed(why) => Err(LabError::Validation(why)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;
    use wgs_core::AlphaGrid;

    fn sidecar(s: &RunSummary) -> Value {
        serde_json::from_slice(&std::fs::read(&s.paths.json).unwrap()).unwrap()
    }

    fn resolved(mut cfg: SweepConfig, out: &std::path::Path) -> SweepConfig {
        cfg.out = out.to_path_buf();
        cfg.resolve().unwrap()
    }

    #[test]
    fn second_run_is_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SweepConfig::new(Experiment::GgmTime);
        cfg.n = 40;
        cfg.alpha = Some(AlphaGrid::new(0.5, 1.0, 2).unwrap());
        let cfg = resolved(cfg, dir.path());

        let first = execute(&cfg).unwrap();
        assert!(!first.cache_hit);
        let csv = std::fs::read(&first.paths.csv).unwrap();
        let again = execute(&cfg).unwrap();
        assert!(again.cache_hit);
        assert!(std::fs::read(&again.paths.csv).unwrap() == csv);
        let meta = sidecar(&again);
        assert_eq!(meta["cache_hit"], Value::Bool(true));
        assert_eq!(meta["incomplete"], Value::Bool(false));
        assert_eq!(meta["config"]["n"], 40);
        assert_eq!(meta["config_hash"], Value::String(first.config_hash.clone()));

        let mut changed = cfg.clone();
        changed.n = 41;
        assert!(!execute(&changed).unwrap().cache_hit);
    }

    #[test]
    fn size_cap_flushes_partial_rows_without_caching() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SweepConfig::new(Experiment::ApproxError);
        cfg.d = 4;
        cfg.sizes = (2, 9);
        cfg.t0 = Some(0.5);
        let cfg = resolved(cfg, dir.path());
        let err = execute(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let csv = std::fs::read_to_string(dir.path().join("approx-error.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6);
        let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("approx-error.json")).unwrap()).unwrap();
        assert_eq!(meta["incomplete"], Value::Bool(true));
        assert!(!cache_dir(&cfg).exists());
    }

    #[test]
    fn validation_run_passes_and_records_seed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SweepConfig::new(Experiment::Validate);
        cfg.seed = 7;
        cfg.cases = 40;
        let s = execute(&resolved(cfg, dir.path())).unwrap();
        let meta = sidecar(&s);
        assert_eq!(meta["derived"]["validation"]["failures"], 0);
        assert_eq!(meta["seed"], 7);
    }

    #[test]
    fn unconverged_averages_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SweepConfig::new(Experiment::Saturation);
        cfg.step = Some(1.5);
        cfg.n = 30;
        cfg.n_cap = 30;
        cfg.alpha = Some(AlphaGrid::new(0.5, 1.0, 2).unwrap());
        let s = execute(&resolved(cfg, dir.path())).unwrap();
        let meta = sidecar(&s);
        assert_eq!(meta["convergence"]["all_converged"], Value::Bool(false));
        assert!(!meta["convergence"]["unconverged"].as_array().unwrap().is_empty());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(LabError::from(WgsError::Domain("x".into())).exit_code(), 1);
        assert_eq!(LabError::from(WgsError::Numerical("x".into())).exit_code(), 2);
        assert_eq!(LabError::Validation("x".into()).exit_code(), 2);
        let cap = WgsError::Resource { what: "sites", requested: 9, cap: 7 };
        assert_eq!(LabError::from(cap).exit_code(), 3);
    }
}
