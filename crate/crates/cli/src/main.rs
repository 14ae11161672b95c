use std::path::PathBuf;
use std::process::ExitCode;

use blockade_cli::config::{Experiment, RunConfig};
use clap::Parser;

#[derive(Parser)]
#[command(version, about = "Photon statistics of a driven qubit-cavity system")]
struct Cli {
    /// spectrum, g2zero-sweep, g2tau, fluorescence, circuit-check, convergence or flux-demo
    experiment: String,
    /// JSON run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps
    #[arg(short, long)]
    threads: Option<usize>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("configuration error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let Some(experiment) = Experiment::parse(&cli.experiment) else {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        return config_error(format!("unknown experiment `{}` (expected one of {})", cli.experiment, names.join(", ")));
    };
    let mut cfg = match RunConfig::from_path(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => return config_error(e),
    };
    if cfg.experiment != experiment {
        return config_error(format!(
            "command line asks for `{experiment}` but the config describes `{}`",
            cfg.experiment
        ));
    }
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return config_error("--threads must be >= 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return config_error(e);
        }
    }

    match blockade_cli::run(&cfg) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            println!("{}", report.sidecar.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
