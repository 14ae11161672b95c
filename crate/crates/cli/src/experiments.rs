//! One function per experiment. Each writes its CSV files into the output
//! directory and returns the metrics that go into the JSON sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use blockade_core::circuit::{max_mixing_angle, mode_mixing_coupling, write_margin_csv, LevelDiagram};
use blockade_core::dressed::{fmt_f64, orthonormality_error, spectrum_sweep, DressedBasis};
use blockade_core::dynamics::Numerics;
use blockade_core::linalg::projector;
use blockade_core::model::ModelParams;
use blockade_core::observables::{
    g2_zero, g2_zero_sweep, linspace, naive_photon_number, output_flux, resolved_peaks, CorrelationResult, Simulation,
};
use blockade_core::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};

/// Levels compared between convergence rungs.
const COMPARED_LEVELS: usize = 10;
/// Spectral peaks below this fraction of the maximum are not reported.
const PEAK_FLOOR: f64 = 0.01;

pub struct Emitted {
    pub files: Vec<PathBuf>,
    pub metrics: Value,
}

pub fn csv_path(dir: &Path, prefix: &str, experiment: Experiment, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}_{experiment}{suffix}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// `omega_d` set to the requested dressed transition, if any.
pub fn resolve_drive(cfg: &RunConfig) -> Result<ModelParams> {
    let mut params = cfg.model.clone();
    if let Some([lower, upper]) = cfg.drive_transition {
        let basis = DressedBasis::from_params(&params)?;
        params.omega_d = basis.delta(upper, lower);
    }
    Ok(params)
}

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<Emitted> {
    let params = resolve_drive(cfg)?;
    match cfg.experiment {
        Experiment::Spectrum => spectrum(cfg, &params, dir),
        Experiment::G2zeroSweep => g2zero_sweep(cfg, &params, dir),
        Experiment::G2tau => g2tau(cfg, &params, dir),
        Experiment::Fluorescence => fluorescence(cfg, &params, dir),
        Experiment::CircuitCheck => circuit_check(cfg, dir),
        Experiment::Convergence => convergence(cfg, &params, dir),
        Experiment::FluxDemo => flux_demo(cfg, &params, dir),
    }
}

fn grid(spec: &Option<crate::config::GridSpec>) -> Vec<f64> {
    spec.as_ref().map(|g| g.points()).unwrap_or_default()
}

fn write_correlation(cfg: &RunConfig, dir: &Path, result: &CorrelationResult) -> Result<PathBuf> {
    let path = csv_path(dir, &cfg.output.prefix, cfg.experiment, "");
    let mut w = create(&path)?;
    result.write_csv(&mut w)?;
    finish(w)?;
    Ok(path)
}

fn polaritons(params: &ModelParams) -> Result<Value> {
    let basis = DressedBasis::from_params(params)?;
    Ok(json!({
        "delta10": basis.delta(1, 0),
        "delta20": basis.delta(2, 0),
        "delta21": basis.delta(2, 1),
    }))
}

fn spectrum(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let g_grid = grid(&cfg.grids.g);
    let thetas = cfg.grids.theta.as_ref().map_or_else(|| vec![params.theta], |t| t.points());
    let mut files = Vec::new();
    let mut per_theta = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let p = ModelParams {
            theta,
            ..params.clone()
        };
        let sweep = spectrum_sweep(&p, &g_grid, cfg.spectrum.levels, cfg.spectrum.relative)?;
        let suffix = if thetas.len() == 1 { String::new() } else { format!("_theta{i}") };
        let path = csv_path(dir, &cfg.output.prefix, cfg.experiment, &suffix);
        let mut w = create(&path)?;
        sweep.write_csv(&mut w)?;
        finish(w)?;
        let ortho = g_grid
            .iter()
            .map(|&g| {
                let b = DressedBasis::from_params(&ModelParams {
                    g,
                    n_dressed: cfg.spectrum.levels.max(2),
                    ..p.clone()
                })?;
                Ok(orthonormality_error(&b))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        per_theta.push(json!({
            "theta": theta,
            "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "max_orthonormality_error": ortho,
        }));
        files.push(path);
    }
    Ok(Emitted {
        files,
        metrics: json!({ "levels": cfg.spectrum.levels, "relative": cfg.spectrum.relative, "sweeps": per_theta }),
    })
}

fn g2zero_sweep(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let omega_d = grid(&cfg.grids.omega_d);
    let result = g2_zero_sweep(params, &cfg.numerics, &omega_d)?;
    let path = write_correlation(cfg, dir, &result)?;
    let argmax = (0..result.values.len())
        .max_by(|&a, &b| result.values[a].total_cmp(&result.values[b]))
        .unwrap_or(0);
    let argmin = (0..result.values.len())
        .min_by(|&a, &b| result.values[a].total_cmp(&result.values[b]))
        .unwrap_or(0);
    Ok(Emitted {
        files: vec![path],
        metrics: json!({
            "max_g2": { "omega_d": result.grid[argmax], "g2_zero": result.values[argmax] },
            "min_g2": { "omega_d": result.grid[argmin], "g2_zero": result.values[argmin] },
            "transitions": polaritons(params)?,
            "convergence": result.meta,
        }),
    })
}

fn g2tau(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let sim = Simulation::new(params, &cfg.numerics)?;
    let tau = match &cfg.grids.tau {
        Some(spec) => spec.points(),
        None => sim.default_tau_grid()?,
    };
    let result = sim.g2_tau(&tau)?;
    let path = write_correlation(cfg, dir, &result)?;
    Ok(Emitted {
        files: vec![path],
        metrics: json!({
            "omega_d": params.omega_d,
            "g2_zero": result.values.first(),
            "g2_last": result.values.last(),
            "flux_squared": result.normalization,
            "max_imag_ratio": result.max_imag_ratio,
            "transitions": polaritons(params)?,
            "convergence": result.meta,
        }),
    })
}

fn fluorescence(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let omega = grid(&cfg.grids.omega);
    let sim = Simulation::new(params, &cfg.numerics)?;
    let result = sim.fluorescence_spectrum(&omega)?;
    let path = write_correlation(cfg, dir, &result)?;
    let width = params.gamma_min().unwrap_or(0.0);
    let peaks: Vec<Value> = resolved_peaks(&result.grid, &result.values, width, PEAK_FLOOR)
        .into_iter()
        .map(|(w, s)| json!({ "omega": w, "s_normalized": s }))
        .collect();
    Ok(Emitted {
        files: vec![path],
        metrics: json!({
            "omega_d": params.omega_d,
            "peaks": peaks,
            "raw_peak": result.normalization,
            "max_imag_ratio": result.max_imag_ratio,
            "transitions": polaritons(params)?,
            "convergence": result.meta,
        }),
    })
}

fn circuit_check(cfg: &RunConfig, dir: &Path) -> Result<Emitted> {
    let cp = &cfg.circuit.device;
    let bound = max_mixing_angle(cp, cfg.circuit.margin_points)?;
    let margin_path = csv_path(dir, &cfg.output.prefix, cfg.experiment, "");
    let mut w = create(&margin_path)?;
    write_margin_csv(&bound.margin, &mut w)?;
    finish(w)?;

    let eps = match &cfg.grids.eps {
        Some(spec) => spec.points(),
        None => linspace(0.0, 2.0 * bound.resonance_eps, 201),
    };
    let diagram = LevelDiagram::new(cp, &eps, &blockade_core::circuit::default_levels());
    let levels_path = csv_path(dir, &cfg.output.prefix, cfg.experiment, "_levels");
    let mut w = create(&levels_path)?;
    diagram.write_csv(&mut w)?;
    finish(w)?;

    let crossings: Vec<Value> = diagram
        .crossings()
        .into_iter()
        .map(|c| {
            json!({
                "first": diagram.labels[c.first].name(),
                "second": diagram.labels[c.second].name(),
                "dphi_freq_GHz": c.eps,
                "energy_GHz": c.energy,
            })
        })
        .collect();
    let min_margin = bound.margin.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(Emitted {
        files: vec![margin_path, levels_path],
        metrics: json!({
            "cos_theta_max": bound.cos_theta_max,
            "resonance_dphi_freq_GHz": bound.resonance_eps,
            "coupling_at_resonance_GHz": mode_mixing_coupling(cp, bound.resonance_eps),
            "min_margin_ratio": min_margin,
            "flux_per_phi0_GHz": cp.flux_frequency(1.0),
            "crossings": crossings,
        }),
    })
}

struct RungResult {
    dt: f64,
    g2: f64,
    delta10: f64,
    delta20: f64,
    levels: Vec<f64>,
}

fn relative_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
    }
}

fn convergence(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let spec = &cfg.convergence;
    let results = spec
        .rungs
        .par_iter()
        .map(|r| {
            let mut p = ModelParams {
                n_fock: r.n_fock,
                n_dressed: r.n_dressed,
                ..params.clone()
            };
            let numerics = Numerics {
                dt: r.dt.or(cfg.numerics.dt),
                ..cfg.numerics.clone()
            };
            let basis = DressedBasis::from_params(&p)?;
            if let Some([lower, upper]) = cfg.drive_transition {
                p.omega_d = basis.delta(upper, lower);
            }
            let (g2, dt) = if spec.g2 {
                let point = g2_zero(&p, &numerics)?;
                (point.g2, point.dt)
            } else {
                (f64::NAN, numerics.dt.unwrap_or(f64::NAN))
            };
            let mut levels = basis.relative_energies();
            levels.truncate(COMPARED_LEVELS);
            Ok(RungResult {
                dt,
                g2,
                delta10: basis.delta(1, 0),
                delta20: basis.delta(2, 0),
                levels,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let path = csv_path(dir, &cfg.output.prefix, cfg.experiment, "");
    let mut w = create(&path)?;
    writeln!(
        w,
        "rung,n_fock,n_dressed,dt,g2_zero,delta10,delta20,rel_change_g2_zero,rel_change_delta10,rel_change_delta20,max_level_shift"
    )?;
    let mut rows = Vec::new();
    for (i, (rung, res)) in spec.rungs.iter().zip(&results).enumerate() {
        let (dg, d10, d20, shift) = match i.checked_sub(1).map(|j| &results[j]) {
            Some(prev) => (
                relative_change(res.g2, prev.g2),
                relative_change(res.delta10, prev.delta10),
                relative_change(res.delta20, prev.delta20),
                res.levels
                    .iter()
                    .zip(&prev.levels)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            ),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{},{},{},{}",
            rung.n_fock,
            rung.n_dressed,
            fmt_f64(res.dt),
            fmt_f64(res.g2),
            fmt_f64(res.delta10),
            fmt_f64(res.delta20),
            fmt_f64(dg),
            fmt_f64(d10),
            fmt_f64(d20),
            fmt_f64(shift)
        )?;
        rows.push([dg, d10, d20, shift]);
    }
    finish(w)?;

    let last = rows.last().copied().unwrap_or([f64::NAN; 4]);
    let tracked = if spec.g2 { &last[..3] } else { &last[1..3] };
    let converged = tracked.iter().all(|&d| d <= spec.threshold);
    if !converged {
        log::warn!(
            "last two rungs differ by more than {:.2}% (g2 {:.3e}, delta10 {:.3e}, delta20 {:.3e})",
            100.0 * spec.threshold,
            last[0],
            last[1],
            last[2]
        );
    }
    Ok(Emitted {
        files: vec![path],
        metrics: json!({
            "converged": converged,
            "threshold": spec.threshold,
            "last_rel_change": { "g2_zero": last[0], "delta10": last[1], "delta20": last[2] },
            "last_max_level_shift": last[3],
        }),
    })
}

fn flux_demo(cfg: &RunConfig, params: &ModelParams, dir: &Path) -> Result<Emitted> {
    let g_grid = grid(&cfg.grids.g);
    let rows = g_grid
        .par_iter()
        .map(|&g| {
            let basis = DressedBasis::from_params(&ModelParams {
                g,
                drive_amplitude: 0.0,
                ..params.clone()
            })?;
            let ground = projector(basis.len(), 0);
            Ok((output_flux(&ground, &basis), naive_photon_number(&ground, &basis)))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = csv_path(dir, &cfg.output.prefix, cfg.experiment, "");
    let mut w = create(&path)?;
    writeln!(w, "g,output_flux,naive_photon_number")?;
    for (g, (flux, naive)) in g_grid.iter().zip(&rows) {
        writeln!(w, "{},{},{}", fmt_f64(*g), fmt_f64(*flux), fmt_f64(*naive))?;
    }
    finish(w)?;
    let max_flux = rows.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
    let max_naive = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Emitted {
        files: vec![path],
        metrics: json!({ "max_abs_output_flux": max_flux, "max_naive_photon_number": max_naive }),
    })
}

/// Errors caused by the configuration rather than by the numerics.
pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::InvalidParams(_) | Error::ResonanceUnreachable { .. } | Error::Io(_))
}
