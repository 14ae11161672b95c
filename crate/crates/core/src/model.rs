//! Truncated operator algebra and the static Hamiltonian.
//!
//! The joint space is ordered TLS-major: index `s * n_fock + n` holds
//! `|s⟩ ⊗ |n⟩` with `s = 0` the qubit ground state `|g⟩` and `s = 1` the
//! excited state `|e⟩`. So the basis runs `|g,0⟩, |g,1⟩, …, |e,0⟩, |e,1⟩, …`.
//! `σz |e⟩ = +|e⟩`, `σz |g⟩ = -|g⟩` and `σ+ = |e⟩⟨g|`.
//!
//! A coupling term `∝ (a + a†) σy` is not provided: it can be removed by a
//! rotation of the qubit about the z axis.

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, RMatrix, Result, C64};

/// Physical parameters of the driven, damped qubit-cavity system.
///
/// Frequencies and rates are in units of a reference frequency; by convention
/// `omega0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega_x: f64,
    pub g: f64,
    /// Mixing angle between longitudinal (`σz`) and transverse (`σx`) coupling.
    pub theta: f64,
    /// Drive amplitude `Ω` of `Ω cos(ωd t)(a + a†)`.
    #[serde(alias = "Omega")]
    pub drive_amplitude: f64,
    pub omega_d: f64,
    pub gamma_a: f64,
    pub gamma_x: f64,
    pub gamma_deph: f64,
    pub n_fock: usize,
    pub n_dressed: usize,
}

impl Default for ModelParams {
    /// Working point of the photon-blockade study: resonant qubit and cavity,
    /// `g = 0.2 ω0`, `θ = 0.93`, weak drive tuned near the upper polariton.
    fn default() -> Self {
        Self {
            omega0: 1.0,
            omega_x: 1.0,
            g: 0.2,
            theta: 0.93,
            drive_amplitude: 1e-4,
            omega_d: 1.18,
            gamma_a: 1e-2,
            gamma_x: 1e-2,
            gamma_deph: 0.0,
            n_fock: 20,
            n_dressed: 16,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let finite = [
            ("omega0", self.omega0),
            ("omega_x", self.omega_x),
            ("g", self.g),
            ("theta", self.theta),
            ("drive_amplitude", self.drive_amplitude),
            ("omega_d", self.omega_d),
            ("gamma_a", self.gamma_a),
            ("gamma_x", self.gamma_x),
            ("gamma_deph", self.gamma_deph),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        if !(self.omega0 > 0.0) {
            problems.push("omega0 must be > 0".into());
        }
        if !(self.omega_x > 0.0) {
            problems.push("omega_x must be > 0".into());
        }
        for (name, v) in [
            ("g", self.g),
            ("gamma_a", self.gamma_a),
            ("gamma_x", self.gamma_x),
            ("gamma_deph", self.gamma_deph),
            ("drive_amplitude", self.drive_amplitude),
            ("omega_d", self.omega_d),
        ] {
            if v < 0.0 {
                problems.push(format!("{name} must be >= 0"));
            }
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            problems.push("theta must lie in [0, pi]".into());
        }
        if self.n_fock < 2 {
            problems.push("n_fock must be >= 2".into());
        }
        if self.n_dressed < 2 || self.n_dressed > 2 * self.n_fock {
            problems.push(format!(
                "n_dressed must lie in [2, 2*n_fock] = [2, {}]",
                2 * self.n_fock
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Smallest strictly positive damping rate among the cavity and qubit channels.
    pub fn gamma_min(&self) -> Option<f64> {
        [self.gamma_a, self.gamma_x]
            .into_iter()
            .filter(|&g| g > 0.0)
            .reduce(f64::min)
    }
}

/// Ladder and Pauli operators on the truncated joint space.
///
/// Everything is real in the chosen basis except `sigma_y`.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub n_fock: usize,
    pub a: RMatrix,
    pub a_dag: RMatrix,
    pub sigma_x: RMatrix,
    pub sigma_y: CMatrix,
    pub sigma_z: RMatrix,
    pub sigma_plus: RMatrix,
    pub sigma_minus: RMatrix,
    pub identity: RMatrix,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    /// `a†a`.
    pub fn number(&self) -> RMatrix {
        &self.a_dag * &self.a
    }

    /// Excitation-parity operator `P = σz exp(iπ a†a)`; diagonal in this basis.
    pub fn parity(&self) -> RMatrix {
        let n = self.n_fock;
        RMatrix::from_fn(2 * n, 2 * n, |r, c| {
            if r != c {
                return 0.0;
            }
            let spin = if r < n { -1.0 } else { 1.0 };
            let photons = r % n;
            if photons % 2 == 0 {
                spin
            } else {
                -spin
            }
        })
    }
}

fn embed_qubit(q: [[f64; 2]; 2], n_fock: usize) -> RMatrix {
    RMatrix::from_fn(2 * n_fock, 2 * n_fock, |r, c| {
        if r % n_fock == c % n_fock {
            q[r / n_fock][c / n_fock]
        } else {
            0.0
        }
    })
}

pub fn build_operators(n_fock: usize) -> Result<OperatorSet> {
    if n_fock < 2 {
        return Err(Error::InvalidParams(format!(
            "n_fock must be >= 2, got {n_fock}"
        )));
    }
    let dim = 2 * n_fock;
    let a = RMatrix::from_fn(dim, dim, |r, c| {
        // ⟨s,n-1| a |s,n⟩ = √n, same qubit sector
        if r / n_fock == c / n_fock && c % n_fock == r % n_fock + 1 {
            ((c % n_fock) as f64).sqrt()
        } else {
            0.0
        }
    });
    let a_dag = a.transpose();
    // qubit ordering: row/col 0 = |g⟩, 1 = |e⟩
    let sigma_plus = embed_qubit([[0.0, 0.0], [1.0, 0.0]], n_fock);
    let sigma_minus = sigma_plus.transpose();
    let sigma_x = &sigma_plus + &sigma_minus;
    let sigma_z = embed_qubit([[-1.0, 0.0], [0.0, 1.0]], n_fock);
    let i = C64::new(0.0, 1.0);
    let sigma_y = (crate::linalg::to_complex(&sigma_plus) - crate::linalg::to_complex(&sigma_minus))
        .map(|z| -i * z);
    Ok(OperatorSet {
        n_fock,
        a,
        a_dag,
        sigma_x,
        sigma_y,
        sigma_z,
        sigma_plus,
        sigma_minus,
        identity: RMatrix::identity(dim, dim),
    })
}

/// Static Hamiltonian plus the operator the periodic drive couples to.
#[derive(Debug, Clone)]
pub struct HamiltonianPair {
    pub h0: RMatrix,
    /// `a + a†`; the time dependence `Ω cos(ωd t)` is applied during integration.
    pub h_drive_op: RMatrix,
    pub operators: OperatorSet,
    pub omega0: f64,
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<HamiltonianPair> {
    params.validate()?;
    let ops = build_operators(params.n_fock)?;
    let x = &ops.a + &ops.a_dag;
    let (s, c) = params.theta.sin_cos();
    let coupling = &ops.sigma_z * c - &ops.sigma_x * s;
    let h0 = ops.number() * params.omega0
        + (&ops.sigma_plus * &ops.sigma_minus) * params.omega_x
        + (&x * &coupling) * params.g;
    Ok(HamiltonianPair {
        h0,
        h_drive_op: x,
        operators: ops,
        omega0: params.omega0,
    })
}
