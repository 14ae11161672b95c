//! Experiment runner: reads a JSON [`config::RunConfig`], runs one
//! experiment and writes `<prefix>_<experiment>.csv` plus a JSON sidecar.

pub mod config;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use config::RunConfig;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    /// Numerical failure; `diagnostics` is the file describing it, if it
    /// could be written.
    Numerical { message: String, diagnostics: Option<PathBuf> },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Numerical { .. } => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical { message, diagnostics } => {
                write!(f, "numerical failure: {message}")?;
                if let Some(p) = diagnostics {
                    write!(f, " (details in {})", p.display())?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for RunError {}

pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub sidecar: PathBuf,
}

fn sidecar_path(cfg: &RunConfig, dir: &Path, suffix: &str) -> PathBuf {
    dir.join(format!("{}_{}{suffix}.json", cfg.output.prefix, cfg.experiment))
}

fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values always serialize");
    std::fs::write(path, text + "\n")
}

fn library() -> Value {
    json!({ "name": "blockade-core", "version": blockade_core::VERSION })
}

/// Validate `cfg`, run its experiment and write all outputs.
pub fn run(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate().map_err(|e| RunError::Config(e.0))?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| RunError::Config(format!("cannot create {}: {e}", dir.display())))?;

    let started = Instant::now();
    log::info!("running {} into {}", cfg.experiment, dir.display());
    let mut resolved = cfg.clone();
    let outcome = experiments::resolve_drive(cfg).and_then(|params| {
        resolved.model = params;
        experiments::run(cfg, dir)
    });
    let elapsed = started.elapsed().as_secs_f64();

    match outcome {
        Ok(emitted) => {
            let sidecar = sidecar_path(cfg, dir, "");
            let files: Vec<String> = emitted
                .files
                .iter()
                .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
                .collect();
            let doc = json!({
                "experiment": cfg.experiment,
                "library": library(),
                "config": resolved,
                "timing": { "wall_seconds": elapsed, "threads": rayon::current_num_threads() },
                "files": files,
                "metrics": emitted.metrics,
            });
            write_json(&sidecar, &doc).map_err(|e| RunError::Config(format!("cannot write {}: {e}", sidecar.display())))?;
            log::info!("{} finished in {elapsed:.1} s", cfg.experiment);
            Ok(RunReport {
                files: emitted.files,
                sidecar,
            })
        }
        Err(e) if experiments::is_config_error(&e) => Err(RunError::Config(e.to_string())),
        Err(e) => {
            let path = sidecar_path(cfg, dir, "_diagnostics");
            let doc = json!({
                "experiment": cfg.experiment,
                "library": library(),
                "error": e.to_string(),
                "detail": format!("{e:?}"),
                "config": resolved,
                "timing": { "wall_seconds": elapsed, "threads": rayon::current_num_threads() },
            });
            let diagnostics = write_json(&path, &doc).ok().map(|_| path);
            Err(RunError::Numerical {
                message: e.to_string(),
                diagnostics,
            })
        }
    }
}
