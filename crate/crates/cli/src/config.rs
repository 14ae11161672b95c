use std::fmt;
use std::path::{Path, PathBuf};

use blockade_core::circuit::CircuitParams;
use blockade_core::dynamics::Numerics;
use blockade_core::model::ModelParams;
use blockade_core::observables::linspace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    G2zeroSweep,
    G2tau,
    Fluorescence,
    CircuitCheck,
    Convergence,
    FluxDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Self::Spectrum,
        Self::G2zeroSweep,
        Self::G2tau,
        Self::Fluorescence,
        Self::CircuitCheck,
        Self::Convergence,
        Self::FluxDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::G2zeroSweep => "g2zero-sweep",
            Self::G2tau => "g2tau",
            Self::Fluorescence => "fluorescence",
            Self::CircuitCheck => "circuit-check",
            Self::Convergence => "convergence",
            Self::FluxDemo => "flux-demo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Either an inclusive linear range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Range { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Self::Range { start, stop, points } => linspace(*start, *stop, *points),
            Self::Values { values } => values.clone(),
        }
    }

    fn check(&self, name: &str, problems: &mut Vec<String>) {
        let pts = self.points();
        if pts.is_empty() {
            problems.push(format!("grid `{name}` is empty"));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            problems.push(format!("grid `{name}` has non-finite entries"));
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// Coupling strengths for `spectrum` and `flux-demo`.
    pub g: Option<GridSpec>,
    /// Mixing angles for `spectrum`; defaults to the model's angle.
    pub theta: Option<GridSpec>,
    pub omega_d: Option<GridSpec>,
    /// Delays for `g2tau`; defaults to `[0, g2_tau_span_factor/γ_min]`.
    pub tau: Option<GridSpec>,
    /// Emission frequencies for `fluorescence`.
    pub omega: Option<GridSpec>,
    /// Flux detuning `ε` in GHz for the `circuit-check` level diagram.
    pub eps: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            prefix: "run".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rung {
    pub n_fock: usize,
    pub n_dressed: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub rungs: Vec<Rung>,
    /// Relative change between the last two rungs above which the ladder is
    /// flagged as not converged.
    pub threshold: f64,
    /// Solve for `g2(0)` on every rung; `false` compares spectra only.
    pub g2: bool,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            rungs: Vec::new(),
            threshold: 5e-3,
            g2: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    pub levels: usize,
    /// Energies relative to the ground state.
    pub relative: bool,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            levels: 6,
            relative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSpec {
    /// Device values in GHz (persistent current in nA).
    pub device: CircuitParams,
    /// Flux points in the margin report.
    pub margin_points: usize,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        Self {
            device: CircuitParams::default(),
            margin_points: 41,
        }
    }
}

/// One experiment invocation, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: Output,
    /// `[lower, upper]`: set `omega_d` to that dressed transition.
    #[serde(default)]
    pub drive_transition: Option<[usize; 2]>,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))
    }

    fn require<'a>(&self, grid: &'a Option<GridSpec>, name: &str) -> Result<&'a GridSpec, ConfigError> {
        grid.as_ref()
            .ok_or_else(|| ConfigError(format!("experiment `{}` needs grids.{name}", self.experiment)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if let Err(e) = self.model.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.numerics.validate() {
            problems.push(e.to_string());
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            problems.push("output.prefix must be a non-empty file-name stem".into());
        }
        let required: &[(&Option<GridSpec>, &str)] = match self.experiment {
            Experiment::Spectrum | Experiment::FluxDemo => &[(&self.grids.g, "g")],
            Experiment::G2zeroSweep => &[(&self.grids.omega_d, "omega_d")],
            Experiment::Fluorescence => &[(&self.grids.omega, "omega")],
            _ => &[],
        };
        for (grid, name) in required {
            if let Err(e) = self.require(grid, name) {
                problems.push(e.0);
            }
        }
        for (grid, name) in [
            (&self.grids.g, "g"),
            (&self.grids.theta, "theta"),
            (&self.grids.omega_d, "omega_d"),
            (&self.grids.tau, "tau"),
            (&self.grids.omega, "omega"),
            (&self.grids.eps, "eps"),
        ] {
            if let Some(spec) = grid {
                spec.check(name, &mut problems);
            }
        }
        if let Some([lower, upper]) = self.drive_transition {
            if lower >= upper || upper >= self.model.n_dressed {
                problems.push(format!(
                    "drive_transition must satisfy lower < upper < n_dressed = {}",
                    self.model.n_dressed
                ));
            }
        }
        match self.experiment {
            Experiment::Spectrum if self.spectrum.levels == 0 => problems.push("spectrum.levels must be >= 1".into()),
            Experiment::CircuitCheck => {
                if let Err(e) = self.circuit.device.validate() {
                    problems.push(e.to_string());
                }
                if self.circuit.margin_points == 0 {
                    problems.push("circuit.margin_points must be >= 1".into());
                }
            }
            Experiment::Convergence => {
                if self.convergence.rungs.len() < 2 {
                    problems.push("convergence.rungs needs at least two rungs".into());
                }
                if !(self.convergence.threshold > 0.0) {
                    problems.push("convergence.threshold must be > 0".into());
                }
                for (i, r) in self.convergence.rungs.iter().enumerate() {
                    let p = ModelParams {
                        n_fock: r.n_fock,
                        n_dressed: r.n_dressed,
                        ..self.model.clone()
                    };
                    if let Err(e) = p.validate() {
                        problems.push(format!("rung {i}: {e}"));
                    }
                    if r.n_dressed < 3 {
                        problems.push(format!("rung {i}: n_dressed must be >= 3"));
                    }
                    if matches!(r.dt, Some(dt) if !(dt > 0.0)) {
                        problems.push(format!("rung {i}: dt must be > 0"));
                    }
                }
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(problems.join("; ")))
        }
    }
}
