//! Measurable output quantities built on the positive-frequency field `Ẋ+`.
//!
//! The input-output prefactor and `X0` are set to 1, so fluxes are in
//! normalized units; both cancel in `g2(τ)` and in the unit-peak spectrum.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dissipation::{assemble_liouvillian, dephasing_rates, relaxation_rates, Channel, Superoperator};
use crate::dressed::{fmt_f64, positive_frequency_part, DressedBasis};
use crate::dynamics::{quasi_steady_state, regression_two_time, Numerics, QuasiSteadyState, Seed};
use crate::linalg::trace_product;
use crate::model::ModelParams;
use crate::{CMatrix, Error, Result, C64};

/// Fluxes below this are treated as an undriven system.
pub const FLUX_FLOOR: f64 = 1e-300;

/// `Ẋ+`, `Ẋ-` and the normally ordered products used by the correlators.
#[derive(Debug, Clone)]
pub struct FieldOperators {
    pub xp: CMatrix,
    pub xm: CMatrix,
    /// `Ẋ- Ẋ+`
    pub intensity: CMatrix,
    /// `Ẋ- Ẋ- Ẋ+ Ẋ+`
    pub coincidence: CMatrix,
}

impl FieldOperators {
    pub fn new(basis: &DressedBasis) -> Self {
        Self::from_positive_part(positive_frequency_part(basis))
    }

    pub fn from_positive_part(xp: CMatrix) -> Self {
        let xm = xp.adjoint();
        let intensity = &xm * &xp;
        let coincidence = &xm * &intensity * &xp;
        Self {
            xp,
            xm,
            intensity,
            coincidence,
        }
    }

    pub fn flux(&self, rho: &CMatrix) -> f64 {
        trace_product(&self.intensity, rho).re
    }
}

/// Output photon flux `Tr[Ẋ- Ẋ+ ρ]`.
pub fn output_flux(rho: &CMatrix, basis: &DressedBasis) -> f64 {
    FieldOperators::new(basis).flux(rho)
}

/// `Tr[a†a ρ]`: the intracavity photon number, which the standard
/// input-output relation would mistake for the output flux.
pub fn naive_photon_number(rho: &CMatrix, basis: &DressedBasis) -> f64 {
    let n = crate::linalg::to_complex(&basis.number);
    trace_product(&n, rho).re
}

/// Everything that depends on the model but not on the drive frequency.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: ModelParams,
    pub numerics: Numerics,
    pub basis: DressedBasis,
    pub superop: Superoperator,
    pub fields: FieldOperators,
}

impl Simulation {
    pub fn new(params: &ModelParams, numerics: &Numerics) -> Result<Self> {
        params.validate()?;
        numerics.validate()?;
        let basis = DressedBasis::from_params(params)?;
        let tables = vec![
            relaxation_rates(&basis, Channel::Cavity, params.gamma_a)?,
            relaxation_rates(&basis, Channel::Qubit, params.gamma_x)?,
            dephasing_rates(&basis, params.gamma_deph, numerics.dephasing_power)?,
        ];
        let superop = assemble_liouvillian(&basis, &tables)?;
        let fields = FieldOperators::new(&basis);
        Ok(Self {
            params: params.clone(),
            numerics: numerics.clone(),
            basis,
            superop,
            fields,
        })
    }

    pub fn with_drive_frequency(&self, omega_d: f64) -> ModelParams {
        ModelParams {
            omega_d,
            ..self.params.clone()
        }
    }

    pub fn quasi_steady_state(&self, params: &ModelParams) -> Result<QuasiSteadyState> {
        quasi_steady_state(&self.superop, params, &self.numerics)
    }

    fn gamma_min(&self) -> Result<f64> {
        self.params
            .gamma_min()
            .ok_or_else(|| Error::InvalidParams("need gamma_a > 0 or gamma_x > 0".into()))
    }

    /// `g2(0)` at a single drive frequency.
    pub fn g2_zero_at(&self, omega_d: f64) -> Result<G2Zero> {
        let params = self.with_drive_frequency(omega_d);
        let qss = self.quasi_steady_state(&params)?;
        self.g2_zero_from(&qss, omega_d)
    }

    pub fn g2_zero_from(&self, qss: &QuasiSteadyState, omega_d: f64) -> Result<G2Zero> {
        let inv = 1.0 / qss.n_phase() as f64;
        let flux: f64 = qss.phase_states.iter().map(|r| self.fields.flux(r)).sum::<f64>() * inv;
        let numerator: f64 = qss
            .phase_states
            .iter()
            .map(|r| trace_product(&self.fields.coincidence, r).re)
            .sum::<f64>()
            * inv;
        if !(flux > FLUX_FLOOR) {
            return Err(Error::DenominatorUnderflow { flux });
        }
        Ok(G2Zero {
            omega_d,
            g2: numerator / (flux * flux),
            flux,
            numerator,
            qss_metric: qss.metric,
            dt: qss.dt,
        })
    }

    pub fn default_tau_grid(&self) -> Result<Vec<f64>> {
        let span = self.numerics.g2_tau_span_factor / self.gamma_min()?;
        Ok(uniform_grid(0.0, span, self.numerics.tau_step))
    }

    /// Normalized `g2(τ)` from the sandwich-form regression seed `Ẋ+ ρ Ẋ-`.
    pub fn g2_tau(&self, tau_grid: &[f64]) -> Result<CorrelationResult> {
        if tau_grid.first() != Some(&0.0) {
            return Err(Error::InvalidParams("tau grid must start at 0".into()));
        }
        let qss = self.quasi_steady_state(&self.params)?;
        let flux = self.mean_flux(&qss)?;
        let seed = Seed::Sandwich {
            left: self.fields.xm.clone(),
            right: self.fields.xp.clone(),
        };
        let corr = regression_two_time(&self.superop, &qss, &seed, &self.fields.intensity, tau_grid)?;
        let norm = flux * flux;
        let max_imag_ratio = corr
            .values
            .iter()
            .map(|z| z.im.abs() / z.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        Ok(CorrelationResult {
            kind: CorrelationKind::G2Tau,
            grid: corr.tau.clone(),
            values: corr.values.iter().map(|z| z.re / norm).collect(),
            normalization: norm,
            max_imag_ratio,
            params: self.params.clone(),
            meta: self.meta(Some(&qss), tau_grid),
        })
    }

    /// Phase-averaged connected first-order correlator
    /// `⟨Ẋ-(t) Ẋ+(t+τ)⟩ − ⟨Ẋ-(t)⟩⟨Ẋ+(t+τ)⟩` on a uniform grid up to
    /// `tau_max_factor / γ_min`.
    pub fn incoherent_correlation(&self) -> Result<(Vec<f64>, Vec<C64>, QuasiSteadyState)> {
        let tau_max = self.numerics.tau_max_factor / self.gamma_min()?;
        let tau = uniform_grid(0.0, tau_max, self.numerics.tau_step);
        let qss = self.quasi_steady_state(&self.params)?;
        self.mean_flux(&qss)?;
        let seed = Seed::Connected {
            left: self.fields.xm.clone(),
        };
        let corr = regression_two_time(&self.superop, &qss, &seed, &self.fields.xp, &tau)?;
        Ok((tau, corr.values, qss))
    }

    /// Incoherent resonance-fluorescence spectrum, normalized to unit peak on
    /// `omega_grid`.
    pub fn fluorescence_spectrum(&self, omega_grid: &[f64]) -> Result<CorrelationResult> {
        if omega_grid.is_empty() {
            return Err(Error::InvalidParams("omega grid is empty".into()));
        }
        let (tau, corr, qss) = self.incoherent_correlation()?;
        let raw = spectrum_from_correlation(&tau, &corr, omega_grid);
        let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(peak > FLUX_FLOOR) {
            return Err(Error::DenominatorUnderflow { flux: peak });
        }
        Ok(CorrelationResult {
            kind: CorrelationKind::Spectrum,
            grid: omega_grid.to_vec(),
            values: raw.iter().map(|s| s / peak).collect(),
            normalization: peak,
            max_imag_ratio: 0.0,
            params: self.params.clone(),
            meta: self.meta(Some(&qss), &tau),
        })
    }

    fn mean_flux(&self, qss: &QuasiSteadyState) -> Result<f64> {
        let flux = qss.phase_states.iter().map(|r| self.fields.flux(r)).sum::<f64>() / qss.n_phase() as f64;
        if !(flux > FLUX_FLOOR) {
            return Err(Error::DenominatorUnderflow { flux });
        }
        Ok(flux)
    }

    fn meta(&self, qss: Option<&QuasiSteadyState>, tau: &[f64]) -> CorrelationMeta {
        CorrelationMeta {
            n_phase: self.numerics.n_phase,
            dt: qss.map(|q| q.dt),
            tau_step: self.numerics.tau_step,
            tau_max: tau.last().cloned(),
            qss_metric: qss.map(|q| q.metric),
        }
    }
}

/// `g2(0)` at one drive frequency with its ingredients.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct G2Zero {
    pub omega_d: f64,
    pub g2: f64,
    /// Phase-averaged `⟨Ẋ- Ẋ+⟩`.
    pub flux: f64,
    /// Phase-averaged `⟨Ẋ- Ẋ- Ẋ+ Ẋ+⟩`.
    pub numerator: f64,
    pub qss_metric: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationKind {
    G2ZeroSweep,
    G2Tau,
    Spectrum,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationMeta {
    pub n_phase: usize,
    pub dt: Option<f64>,
    pub tau_step: f64,
    pub tau_max: Option<f64>,
    pub qss_metric: Option<f64>,
}

/// Grid of drive frequencies, delays or emission frequencies with real
/// correlator values.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub kind: CorrelationKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `⟨Ẋ- Ẋ+⟩²` for `g2`; the raw spectral peak for spectra.
    pub normalization: f64,
    /// Largest `|Im G| / |G|` among the reported correlator values.
    pub max_imag_ratio: f64,
    pub params: ModelParams,
    pub meta: CorrelationMeta,
}

impl CorrelationResult {
    pub fn header(&self) -> &'static str {
        match self.kind {
            CorrelationKind::G2ZeroSweep => "omega_d,g2_zero",
            CorrelationKind::G2Tau => "tau,g2",
            CorrelationKind::Spectrum => "omega,S_normalized",
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for (x, y) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*y))?;
        }
        Ok(())
    }
}

/// `g2(0)` at the drive frequency stored in `params`.
pub fn g2_zero(params: &ModelParams, numerics: &Numerics) -> Result<G2Zero> {
    Simulation::new(params, numerics)?.g2_zero_at(params.omega_d)
}

/// `g2(0)` over drive frequencies, evaluated in parallel.
pub fn g2_zero_sweep(params: &ModelParams, numerics: &Numerics, omega_d_grid: &[f64]) -> Result<CorrelationResult> {
    if omega_d_grid.is_empty() {
        return Err(Error::InvalidParams("drive-frequency grid is empty".into()));
    }
    let sim = Simulation::new(params, numerics)?;
    let points = omega_d_grid
        .par_iter()
        .map(|&w| sim.g2_zero_at(w))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationResult {
        kind: CorrelationKind::G2ZeroSweep,
        grid: omega_d_grid.to_vec(),
        values: points.iter().map(|p| p.g2).collect(),
        normalization: f64::NAN,
        max_imag_ratio: 0.0,
        params: params.clone(),
        meta: CorrelationMeta {
            n_phase: numerics.n_phase,
            dt: points.first().map(|p| p.dt),
            tau_step: numerics.tau_step,
            tau_max: None,
            qss_metric: points.iter().map(|p| p.qss_metric).reduce(f64::max),
        },
    })
}

pub fn g2_tau(params: &ModelParams, numerics: &Numerics, tau_grid: &[f64]) -> Result<CorrelationResult> {
    Simulation::new(params, numerics)?.g2_tau(tau_grid)
}

pub fn fluorescence_spectrum(params: &ModelParams, numerics: &Numerics, omega_grid: &[f64]) -> Result<CorrelationResult> {
    Simulation::new(params, numerics)?.fluorescence_spectrum(omega_grid)
}

/// Points `start, start + step, …` up to and including `stop` (within rounding).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Trapezoid weights for an arbitrary ascending grid.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// `S(ω) = 2 Re ∫ G(τ) e^{iωτ} dτ` by trapezoid quadrature on the given
/// (truncated, unwindowed) delay grid.
pub fn spectrum_from_correlation(tau: &[f64], corr: &[C64], omega_grid: &[f64]) -> Vec<f64> {
    let w = trapezoid_weights(tau);
    omega_grid
        .par_iter()
        .map(|&omega| {
            let mut acc = C64::new(0.0, 0.0);
            for ((t, g), wt) in tau.iter().zip(corr).zip(&w) {
                acc += g * C64::from_polar(*wt, omega * t);
            }
            2.0 * acc.re
        })
        .collect()
}

/// Frequency on `freq_grid` maximizing `|∫ y(τ) e^{iωτ} dτ|`.
pub fn fourier_peak(tau: &[f64], y: &[f64], freq_grid: &[f64]) -> f64 {
    let w = trapezoid_weights(tau);
    let mut best = (f64::NAN, -1.0);
    for &f in freq_grid {
        let mut acc = C64::new(0.0, 0.0);
        for ((t, v), wt) in tau.iter().zip(y).zip(&w) {
            acc += C64::from_polar(v * wt, f * t);
        }
        if acc.norm() > best.1 {
            best = (f, acc.norm());
        }
    }
    best.0
}

/// Interior strict local maxima `(x, y)` whose value exceeds `min_value`.
pub fn local_maxima(grid: &[f64], values: &[f64], min_value: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        if c > l && c >= r && c > min_value {
            out.push((grid[i], c));
        }
    }
    out
}

/// Local maxima that are also the largest value within `half_width` on either
/// side and exceed `min_value`. Truncation side-lobes narrower than the
/// resolution are skipped this way.
pub fn resolved_peaks(grid: &[f64], values: &[f64], half_width: f64, min_value: f64) -> Vec<(f64, f64)> {
    local_maxima(grid, values, min_value)
        .into_iter()
        .filter(|&(x, v)| {
            grid.iter()
                .zip(values)
                .all(|(g, w)| (g - x).abs() > half_width || *w <= v)
        })
        .collect()
}
