//! Dressed basis: eigenstates of `H0` and every operator expressed in them.
//!
//! Levels are sorted by energy. Exactly degenerate levels (within
//! [`DEGENERACY_TOL`]) are first rotated inside their eigenspace so that they
//! diagonalize `P + N / (4 n_fock)` (parity first, photon number second), then
//! ordered by descending `|⟨P⟩|` and finally by the bare-basis index of their
//! dominant component. Each eigenvector is signed so that its largest-modulus
//! component is positive.

use std::io::Write;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::model::{build_hamiltonian, HamiltonianPair, ModelParams};
use crate::{linalg, CMatrix, Error, RMatrix, Result, C64};

/// Eigenvalue ties closer than this (in units of `ω0`) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub omega0: f64,
    pub n_fock: usize,
    /// Absolute eigenvalues `ωj`, ascending.
    pub energies: Vec<f64>,
    /// Columns are the kept eigenvectors in the bare basis.
    pub states: RMatrix,
    /// `X_jk = ⟨j| -i(a - a†) |k⟩` with `X0 = 1`.
    pub x_elems: CMatrix,
    /// `C^a_jk = -i⟨j|(a - a†)|k⟩`.
    pub c_elems_a: CMatrix,
    /// `C^σ_jk = -i⟨j|(σ- - σ+)|k⟩`.
    pub c_elems_x: CMatrix,
    /// `⟨j|(a + a†)|k⟩`, the drive operator.
    pub drive: RMatrix,
    /// `⟨j|σz|k⟩`.
    pub sigma_z: RMatrix,
    /// `⟨j|a†a|k⟩`, the projection of the bare photon number.
    pub number: RMatrix,
    /// `⟨j|P|j⟩` for the parity `P = σz exp(iπ a†a)`.
    pub parity_expectation: Vec<f64>,
}

impl DressedBasis {
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let hp = build_hamiltonian(params)?;
        diagonalize(&hp, params.n_dressed)
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// `Δ_kj = ωk - ωj`.
    pub fn delta(&self, k: usize, j: usize) -> f64 {
        self.energies[k] - self.energies[j]
    }

    /// Energies measured from the ground state.
    pub fn relative_energies(&self) -> Vec<f64> {
        let e0 = self.ground_energy();
        self.energies.iter().map(|e| e - e0).collect()
    }

    /// Largest retained transition frequency.
    pub fn max_transition(&self) -> f64 {
        self.energies[self.len() - 1] - self.energies[0]
    }

    pub fn degeneracy_tol(&self) -> f64 {
        DEGENERACY_TOL * self.omega0
    }

    /// Optional parity labels; `None` unless every level is a parity eigenstate.
    pub fn parity(&self) -> Option<Vec<i8>> {
        parity_labels(self).ok()
    }
}

fn dominant_index(v: nalgebra::DVectorView<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs + 1e-12 {
            best = i;
            best_abs = x.abs();
        }
    }
    best
}

/// Diagonalizes `H0` and fills all dressed transition tables for the lowest
/// `n_dressed` levels.
pub fn diagonalize(hp: &HamiltonianPair, n_dressed: usize) -> Result<DressedBasis> {
    let dim = hp.h0.nrows();
    if n_dressed > dim || n_dressed < 2 {
        return Err(Error::DimensionMismatch {
            what: "n_dressed must lie in [2, dim(H0)]",
            expected: dim,
            found: n_dressed,
        });
    }
    let eig = SymmetricEigen::try_new(hp.h0.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::Eigensolver {
            context: format!("H0 of dimension {dim} (omega0 = {})", hp.omega0),
        }
    })?;
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigensolver {
            context: format!("H0 of dimension {dim}: non-finite eigenvalue"),
        });
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = RMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);

    let parity = hp.operators.parity();
    let tie_breaker = &parity + hp.operators.number() / (4.0 * hp.operators.n_fock as f64);
    let tol = DEGENERACY_TOL * hp.omega0;

    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] < tol {
            end += 1;
        }
        if end - start > 1 {
            resolve_cluster(&mut vectors, start, end, &parity, &tie_breaker);
        }
        start = end;
    }

    for c in 0..dim {
        let d = dominant_index(vectors.column(c));
        if vectors[(d, c)] < 0.0 {
            vectors.column_mut(c).neg_mut();
        }
    }

    let states = vectors.columns(0, n_dressed).into_owned();
    let energies = values[..n_dressed].to_vec();
    let ops = &hp.operators;
    let project = |op: &RMatrix| -> RMatrix { states.transpose() * op * &states };
    let minus_i = C64::new(0.0, -1.0);

    let a_minus_adag = project(&(&ops.a - &ops.a_dag));
    let x_elems = a_minus_adag.map(|v| minus_i * v);
    let c_elems_a = x_elems.clone();
    let c_elems_x = project(&(&ops.sigma_minus - &ops.sigma_plus)).map(|v| minus_i * v);
    let parity_d = project(&parity);

    Ok(DressedBasis {
        omega0: hp.omega0,
        n_fock: ops.n_fock,
        energies,
        x_elems,
        c_elems_a,
        c_elems_x,
        drive: project(&hp.h_drive_op),
        sigma_z: project(&ops.sigma_z),
        number: project(&ops.number()),
        parity_expectation: (0..n_dressed).map(|j| parity_d[(j, j)]).collect(),
        states,
    })
}

fn resolve_cluster(
    vectors: &mut RMatrix,
    start: usize,
    end: usize,
    parity: &RMatrix,
    tie_breaker: &RMatrix,
) {
    // eigenvalues stay in place: they agree within the tolerance
    let block = vectors.columns(start, end - start).into_owned();
    let projected = block.transpose() * tie_breaker * &block;
    let rot = projected.symmetric_eigen().eigenvectors;
    let rotated = &block * rot;

    let mut members: Vec<(f64, usize, usize)> = (0..end - start)
        .map(|i| {
            let v = rotated.column(i);
            let p = (v.transpose() * parity * v)[(0, 0)].abs();
            (p, dominant_index(v), i)
        })
        .collect();
    members.sort_by(|a, b| {
        if (a.0 - b.0).abs() > 1e-9 {
            b.0.total_cmp(&a.0)
        } else {
            a.1.cmp(&b.1)
        }
    });
    for (slot, &(_, _, i)) in members.iter().enumerate() {
        vectors.set_column(start + slot, &rotated.column(i));
    }
}

/// Rounds `⟨j|P|j⟩` to ±1 for every level.
///
/// Meaningful at `θ = π/2` (or `g = 0`), where `H0` conserves parity. With
/// `P = σz exp(iπ a†a)` and `σz|g⟩ = -|g⟩` the ground state `|g,0⟩` has
/// parity −1; only relative parities carry physical meaning.
pub fn parity_labels(basis: &DressedBasis) -> Result<Vec<i8>> {
    basis
        .parity_expectation
        .iter()
        .enumerate()
        .map(|(level, &p)| {
            if p.abs() < 0.99 {
                Err(Error::NotParityEigenstate {
                    level,
                    expectation: p,
                })
            } else if p > 0.0 {
                Ok(1)
            } else {
                Ok(-1)
            }
        })
        .collect()
}

/// `Ẋ+ = -i Σ_{j, k>j} Δ_kj X_jk |j⟩⟨k|`.
///
/// Strictly upper triangular in the energy ordering, so `Ẋ+ |0⟩ = 0`.
/// Degenerate pairs carry zero weight. `Ẋ-` is the adjoint.
pub fn positive_frequency_part(basis: &DressedBasis) -> CMatrix {
    let n = basis.len();
    let tol = basis.degeneracy_tol();
    let minus_i = C64::new(0.0, -1.0);
    CMatrix::from_fn(n, n, |j, k| {
        if k > j {
            let delta = basis.delta(k, j);
            if delta > tol {
                return minus_i * delta * basis.x_elems[(j, k)];
            }
        }
        C64::new(0.0, 0.0)
    })
}

/// Lowest levels of `H0` along a coupling-strength grid.
#[derive(Debug, Clone)]
pub struct SpectrumSweep {
    pub theta: f64,
    pub relative: bool,
    pub g_grid: Vec<f64>,
    /// `levels[i][l]`: `l`-th level at `g_grid[i]`.
    pub levels: Vec<Vec<f64>>,
}

impl SpectrumSweep {
    /// Columns `g, E0, …, E{L-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n_levels = self.levels.first().map_or(0, Vec::len);
        let mut header = String::from("g");
        for l in 0..n_levels {
            header.push_str(&format!(",E{l}"));
        }
        writeln!(w, "{header}")?;
        for (g, row) in self.g_grid.iter().zip(&self.levels) {
            write!(w, "{}", fmt_f64(*g))?;
            for e in row {
                write!(w, ",{}", fmt_f64(*e))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn spectrum_sweep(
    params: &ModelParams,
    g_grid: &[f64],
    n_levels: usize,
    relative: bool,
) -> Result<SpectrumSweep> {
    if g_grid.is_empty() {
        return Err(Error::InvalidParams("g grid is empty".into()));
    }
    if g_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("g grid must be ascending".into()));
    }
    if n_levels < 1 || n_levels > 2 * params.n_fock {
        return Err(Error::InvalidParams(format!(
            "number of levels must lie in [1, {}]",
            2 * params.n_fock
        )));
    }
    let levels = g_grid
        .par_iter()
        .map(|&g| {
            let p = ModelParams {
                g,
                n_dressed: n_levels.max(2),
                ..params.clone()
            };
            let basis = DressedBasis::from_params(&p)?;
            let mut e = if relative {
                basis.relative_energies()
            } else {
                basis.energies.clone()
            };
            e.truncate(n_levels);
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep {
        theta: params.theta,
        relative,
        g_grid: g_grid.to_vec(),
        levels,
    })
}

/// Largest deviation from orthonormality of the kept eigenvectors.
pub fn orthonormality_error(basis: &DressedBasis) -> f64 {
    let n = basis.len();
    let gram = basis.states.transpose() * &basis.states;
    linalg::max_abs_real(&(gram - RMatrix::identity(n, n)))
}
