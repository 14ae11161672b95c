//! Flux-qubit / transmission-line feasibility estimates.
//!
//! All frequencies are ordinary frequencies in GHz (`ω/2π`). The flux bias is
//! parameterized by its frequency equivalent `ε = 2 I_p δφ / h`, so
//! `ω_q = √(Δ² + ε²)`, `cosθ = ε/ω_q` and `sinθ = Δ/ω_q`.
//!
//! Uncoupled energies use the half-splitting convention `±ω_q/2` for the qubit
//! so that the qubit transition is `ω_q`. Only energy differences are used.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dressed::fmt_f64;
use crate::{Error, Result};

/// Elementary charge in coulomb.
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitParams {
    /// Sweet-spot splitting `Δ/h`.
    pub delta_gap: f64,
    /// `2 I_p` in nA; only used to convert flux (in units of Φ0) to `ε`.
    pub persistent_current_na: f64,
    /// Resonator modes `ω_n/2π`, ascending.
    pub mode_freqs: [f64; 3],
    /// Qubit-mode couplings `g_n/2π`.
    pub mode_couplings: [f64; 3],
}

impl Default for CircuitParams {
    /// Device values of the galvanically coupled flux-qubit experiment.
    fn default() -> Self {
        Self {
            delta_gap: 2.25,
            persistent_current_na: 630.0,
            mode_freqs: [2.782, 5.357, 7.777],
            mode_couplings: [0.314, 0.636, 0.568],
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = std::iter::once(self.delta_gap)
            .chain(std::iter::once(self.persistent_current_na))
            .chain(self.mode_freqs)
            .chain(self.mode_couplings)
            .all(|v| v > 0.0 && v.is_finite());
        if !positive {
            return Err(Error::InvalidParams("circuit parameters must be positive".into()));
        }
        if self.mode_freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("mode frequencies must be ascending".into()));
        }
        Ok(())
    }

    /// `ε = 2 I_p δφ / h` in GHz for a flux offset `δφ` in units of the flux
    /// quantum `Φ0 = h / 2e`.
    pub fn flux_frequency(&self, dphi_phi0: f64) -> f64 {
        // 2 I_p Φ0 / h = 2 I_p / (2e)
        self.persistent_current_na * 1e-9 / (2.0 * ELEMENTARY_CHARGE) * 1e-9 * dphi_phi0
    }
}

pub fn qubit_frequency(cp: &CircuitParams, eps: f64) -> f64 {
    cp.delta_gap.hypot(eps)
}

/// `(cosθ, sinθ)` at flux frequency `eps`.
pub fn mixing_angle(cp: &CircuitParams, eps: f64) -> (f64, f64) {
    let wq = qubit_frequency(cp, eps);
    (eps / wq, cp.delta_gap / wq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitState {
    Down,
    Up,
}

/// Product state `|qubit, n1 n2 n3⟩` of the uncoupled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelLabel {
    pub qubit: QubitState,
    pub occupations: [u32; 3],
}

impl LevelLabel {
    pub const fn new(qubit: QubitState, occupations: [u32; 3]) -> Self {
        Self { qubit, occupations }
    }

    /// Whether the state lives in the qubit + fundamental-mode space.
    pub fn single_mode(&self) -> bool {
        self.occupations[1] == 0 && self.occupations[2] == 0
    }

    pub fn name(&self) -> String {
        let q = match self.qubit {
            QubitState::Down => 'd',
            QubitState::Up => 'u',
        };
        let [a, b, c] = self.occupations;
        format!("{q}{a}{b}{c}")
    }
}

/// `E/h = ±ω_q/2 + Σ_l ω_l (n_l + ½)`.
pub fn uncoupled_level(cp: &CircuitParams, eps: f64, label: LevelLabel) -> f64 {
    let half = 0.5 * qubit_frequency(cp, eps);
    let qubit = match label.qubit {
        QubitState::Up => half,
        QubitState::Down => -half,
    };
    qubit
        + cp
            .mode_freqs
            .iter()
            .zip(label.occupations)
            .map(|(w, n)| w * (n as f64 + 0.5))
            .sum::<f64>()
}

/// Second-order coupling `J/h = g1 g2 cosθ sinθ / (ω_q + ω2)` between
/// `|↑,100⟩` and `|↓,010⟩`.
pub fn mode_mixing_coupling(cp: &CircuitParams, eps: f64) -> f64 {
    let (c, s) = mixing_angle(cp, eps);
    cp.mode_couplings[0] * cp.mode_couplings[1] * c * s / (qubit_frequency(cp, eps) + cp.mode_freqs[1])
}

/// `E(|↑,100⟩) − E(|↓,010⟩) = ω_q + ω1 − ω2`.
pub fn detuning_up100_down010(cp: &CircuitParams, eps: f64) -> f64 {
    let up = LevelLabel::new(QubitState::Up, [1, 0, 0]);
    let down = LevelLabel::new(QubitState::Down, [0, 1, 0]);
    uncoupled_level(cp, eps, up) - uncoupled_level(cp, eps, down)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginRow {
    pub eps: f64,
    pub cos_theta: f64,
    pub coupling: f64,
    pub detuning: f64,
    /// `|ΔE| / J`; infinite where `J = 0`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingBound {
    pub cos_theta_max: f64,
    /// `ε` at which `|↑,100⟩` and `|↓,010⟩` become resonant.
    pub resonance_eps: f64,
    pub margin: Vec<MarginRow>,
}

pub fn margin_row(cp: &CircuitParams, eps: f64) -> MarginRow {
    let coupling = mode_mixing_coupling(cp, eps);
    let detuning = detuning_up100_down010(cp, eps);
    MarginRow {
        eps,
        cos_theta: mixing_angle(cp, eps).0,
        coupling,
        detuning,
        ratio: if coupling == 0.0 {
            f64::INFINITY
        } else {
            detuning.abs() / coupling.abs()
        },
    }
}

/// Upper bound on `cosθ` set by the resonance of `|↑,100⟩` with `|↓,010⟩`,
/// plus the `|ΔE|/J` margin on `n_margin` flux points across the allowed range
/// `0 ≤ ε ≤ ε_res`.
pub fn max_mixing_angle(cp: &CircuitParams, n_margin: usize) -> Result<MixingBound> {
    cp.validate()?;
    let resonance = cp.mode_freqs[1] - cp.mode_freqs[0];
    if resonance <= cp.delta_gap {
        return Err(Error::ResonanceUnreachable {
            resonance,
            gap: cp.delta_gap,
        });
    }
    let resonance_eps = (resonance * resonance - cp.delta_gap * cp.delta_gap).sqrt();
    let margin = (0..n_margin)
        .map(|i| {
            let eps = if n_margin > 1 {
                resonance_eps * i as f64 / (n_margin - 1) as f64
            } else {
                0.0
            };
            margin_row(cp, eps)
        })
        .collect();
    Ok(MixingBound {
        cos_theta_max: resonance_eps / resonance,
        resonance_eps,
        margin,
    })
}

/// States drawn in the level diagram: every state with at most one photon,
/// for both qubit states. `|↓, n1 ≥ 2, 0, 0⟩` is left out.
pub fn default_levels() -> Vec<LevelLabel> {
    let mut out = Vec::new();
    for occ in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]] {
        out.push(LevelLabel::new(QubitState::Down, occ));
        out.push(LevelLabel::new(QubitState::Up, occ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct LevelDiagram {
    pub labels: Vec<LevelLabel>,
    pub eps: Vec<f64>,
    /// `energies[i][s]`: state `s` at `eps[i]`.
    pub energies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub first: usize,
    pub second: usize,
    pub eps: f64,
    pub energy: f64,
}

impl LevelDiagram {
    pub fn new(cp: &CircuitParams, eps: &[f64], labels: &[LevelLabel]) -> Self {
        let energies = eps
            .iter()
            .map(|&e| labels.iter().map(|&l| uncoupled_level(cp, e, l)).collect())
            .collect();
        Self {
            labels: labels.to_vec(),
            eps: eps.to_vec(),
            energies,
        }
    }

    /// Level crossings located by sign changes of pairwise differences and
    /// linear interpolation.
    pub fn crossings(&self) -> Vec<Crossing> {
        let mut out = Vec::new();
        let n = self.labels.len();
        for a in 0..n {
            for b in a + 1..n {
                for i in 1..self.eps.len() {
                    let d0 = self.energies[i - 1][a] - self.energies[i - 1][b];
                    let d1 = self.energies[i][a] - self.energies[i][b];
                    if d0 == 0.0 && i == 1 {
                        out.push(Crossing { first: a, second: b, eps: self.eps[0], energy: self.energies[0][a] });
                    }
                    if d0 * d1 < 0.0 || (d1 == 0.0 && d0 != 0.0) {
                        let f = d0 / (d0 - d1);
                        let eps = self.eps[i - 1] + f * (self.eps[i] - self.eps[i - 1]);
                        let energy = self.energies[i - 1][a] + f * (self.energies[i][a] - self.energies[i - 1][a]);
                        out.push(Crossing { first: a, second: b, eps, energy });
                    }
                }
            }
        }
        out
    }

    /// Columns `dphi_freq_GHz, E_<label>…`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "dphi_freq_GHz")?;
        for l in &self.labels {
            write!(w, ",E_{}", l.name())?;
        }
        writeln!(w)?;
        for (e, row) in self.eps.iter().zip(&self.energies) {
            write!(w, "{}", fmt_f64(*e))?;
            for v in row {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Columns `dphi_freq_GHz, cos_theta, J_GHz, deltaE_GHz, margin_ratio`.
pub fn write_margin_csv<W: Write>(rows: &[MarginRow], mut w: W) -> Result<()> {
    writeln!(w, "dphi_freq_GHz,cos_theta,J_GHz,deltaE_GHz,margin_ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.eps),
            fmt_f64(r.cos_theta),
            fmt_f64(r.coupling),
            fmt_f64(r.detuning),
            fmt_f64(r.ratio)
        )?;
    }
    Ok(())
}
