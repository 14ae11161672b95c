//! Dressed-state dissipators and the Liouville-space generator.
//!
//! Relaxation acts only downwards in energy (zero-temperature baths):
//! `L_c ρ = Σ_{j,k>j} Γ^{jk}_c D[|j⟩⟨k|] ρ` with
//! `Γ^{jk}_c = γ_c (Δ_kj / ω0) |C^c_jk|²` and
//! `D[O]ρ = ½(2 O ρ O† − ρ O†O − O†O ρ)`.
//! Dephasing uses `Σ_j Γ^j D[|j⟩⟨j|]` with `Γ^j = γ_deph |⟨j|σz|j⟩|^p`.
//! Lamb shifts are neglected.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dressed::{fmt_f64, DressedBasis};
use crate::linalg::{kron, ket_bra};
use crate::{CMatrix, Error, RMatrix, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Relaxation through the cavity field, `c = a`.
    Cavity,
    /// Relaxation through the qubit, `c = σ-`.
    Qubit,
    Dephasing,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Cavity => "cavity",
            Channel::Qubit => "qubit",
            Channel::Dephasing => "dephasing",
        })
    }
}

/// Exponent `p` in `Γ^j = γ_deph |⟨j|σz|j⟩|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DephasingPower {
    #[default]
    Magnitude,
    Square,
}

impl TryFrom<u8> for DephasingPower {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Magnitude),
            2 => Ok(Self::Square),
            other => Err(format!("dephasing_power must be 1 or 2, got {other}")),
        }
    }
}

impl From<DephasingPower> for u8 {
    fn from(p: DephasingPower) -> u8 {
        match p {
            DephasingPower::Magnitude => 1,
            DephasingPower::Square => 2,
        }
    }
}

/// One dissipative term. For relaxation `lower < upper` and the jump operator
/// is `|lower⟩⟨upper|`; for dephasing `lower == upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEntry {
    pub lower: usize,
    pub upper: usize,
    pub delta: f64,
    /// `|C^c_jk|²` for relaxation, `|⟨j|σz|j⟩|^p` for dephasing.
    pub weight: f64,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub channel: Channel,
    pub dim: usize,
    pub entries: Vec<RateEntry>,
}

impl RateTable {
    /// Rate for a given pair, zero if absent.
    pub fn rate(&self, lower: usize, upper: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.lower == lower && e.upper == upper)
            .map_or(0.0, |e| e.rate)
    }

    /// Total decay rate out of `level`.
    pub fn total_out(&self, level: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.upper == level && e.lower != level)
            .map(|e| e.rate)
            .sum()
    }

    /// Rows `channel,j,k,delta_kj,abs_C_jk_sq,rate`; pass `header = false` to append.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "channel,j,k,delta_kj,abs_C_jk_sq,rate")?;
        }
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.channel,
                e.lower,
                e.upper,
                fmt_f64(e.delta),
                fmt_f64(e.weight),
                fmt_f64(e.rate)
            )?;
        }
        Ok(())
    }
}

pub fn relaxation_rates(basis: &DressedBasis, channel: Channel, gamma_c: f64) -> Result<RateTable> {
    let c = match channel {
        Channel::Cavity => &basis.c_elems_a,
        Channel::Qubit => &basis.c_elems_x,
        Channel::Dephasing => {
            return Err(Error::InvalidParams(
                "relaxation_rates needs the cavity or qubit channel".into(),
            ))
        }
    };
    if !(gamma_c >= 0.0) {
        return Err(Error::InvalidParams(format!("damping rate must be >= 0, got {gamma_c}")));
    }
    let n = basis.len();
    let tol = basis.degeneracy_tol();
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for k in 1..n {
        for j in 0..k {
            let delta = basis.delta(k, j);
            let weight = c[(j, k)].norm_sqr();
            let rate = if delta > tol {
                gamma_c * (delta / basis.omega0) * weight
            } else {
                0.0
            };
            entries.push(RateEntry {
                lower: j,
                upper: k,
                delta,
                weight,
                rate,
            });
        }
    }
    Ok(RateTable {
        channel,
        dim: n,
        entries,
    })
}

pub fn dephasing_rates(basis: &DressedBasis, gamma_deph: f64, power: DephasingPower) -> Result<RateTable> {
    if !(gamma_deph >= 0.0) {
        return Err(Error::InvalidParams(format!("dephasing rate must be >= 0, got {gamma_deph}")));
    }
    let n = basis.len();
    let entries = if gamma_deph == 0.0 {
        Vec::new()
    } else {
        (0..n)
            .map(|j| {
                let sz = basis.sigma_z[(j, j)].abs();
                let weight = match power {
                    DephasingPower::Magnitude => sz,
                    DephasingPower::Square => sz * sz,
                };
                RateEntry {
                    lower: j,
                    upper: j,
                    delta: 0.0,
                    weight,
                    rate: gamma_deph * weight,
                }
            })
            .collect()
    };
    Ok(RateTable {
        channel: Channel::Dephasing,
        dim: n,
        entries,
    })
}

/// Generator of the master equation in Liouville space (column-major
/// vectorization, see [`crate::linalg`]).
///
/// The dense matrices are assembled from Kronecker products of the jump
/// operators. Time integration goes through [`Superoperator::apply`], which
/// exploits the structure of the dressed-state dissipators: every coherence
/// `ρ_mn` decays independently and only populations feed populations.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    /// `−i[H0, ·]` plus all dissipators.
    pub l_static: CMatrix,
    /// `−i[(a + a†), ·]` in the dressed basis.
    pub l_drive: CMatrix,
    /// `−i[D+, ·]` with `D+` the energy-raising part of the drive operator.
    pub l_drive_raise: CMatrix,
    /// `−i[D-, ·]`, `D- = (D+)†`.
    pub l_drive_lower: CMatrix,
    /// Drive operator `⟨j|(a + a†)|k⟩`.
    pub drive_full: RMatrix,
    /// Raising part: entries `(k, j)` with `k > j` of the drive operator.
    pub drive_raise: RMatrix,
    max_transition: f64,
    /// `ρ_mn` is multiplied by `−decay[(m, n)]`.
    decay: CMatrix,
    /// `(j, k, Γ)`: population of `k` feeds `j` at rate `Γ`.
    feeds: Vec<(usize, usize, f64)>,
}

fn add_dissipator(l: &mut CMatrix, jump: &CMatrix, rate: f64, id: &CMatrix) {
    let jdj = jump.adjoint() * jump;
    let term = kron(&jump.conjugate(), jump) - kron(id, &jdj).scale(0.5) - kron(&jdj.transpose(), id).scale(0.5);
    *l += term.scale(rate);
}

fn commutator_superop(h: &CMatrix, id: &CMatrix) -> CMatrix {
    let minus_i = C64::new(0.0, -1.0);
    (kron(id, h) - kron(&h.transpose(), id)).map(|z| minus_i * z)
}

pub fn assemble_liouvillian(basis: &DressedBasis, tables: &[RateTable]) -> Result<Superoperator> {
    let n = basis.len();
    for t in tables {
        if t.dim != n {
            return Err(Error::DimensionMismatch {
                what: "rate table built from a different basis",
                expected: n,
                found: t.dim,
            });
        }
        if let Some(e) = t.entries.iter().find(|e| e.upper >= n || e.lower >= n) {
            return Err(Error::DimensionMismatch {
                what: "rate table level index",
                expected: n,
                found: e.upper.max(e.lower) + 1,
            });
        }
    }

    let id = CMatrix::identity(n, n);
    let rel = basis.relative_energies();
    let h0 = CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            C64::new(rel[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut l_static = commutator_superop(&h0, &id);
    for t in tables {
        for e in t.entries.iter().filter(|e| e.rate > 0.0) {
            add_dissipator(&mut l_static, &ket_bra(n, e.lower, e.upper), e.rate, &id);
        }
    }

    let drive_full = basis.drive.clone();
    let drive_raise = RMatrix::from_fn(n, n, |r, c| if r > c { drive_full[(r, c)] } else { 0.0 });
    let to_c = crate::linalg::to_complex;
    let l_drive = commutator_superop(&to_c(&drive_full), &id);
    let l_drive_raise = commutator_superop(&to_c(&drive_raise), &id);
    let l_drive_lower = commutator_superop(&to_c(&drive_raise.transpose()), &id);

    // structured form of the same static generator
    let mut out_rate = vec![0.0; n];
    let mut deph = vec![0.0; n];
    let mut feeds = Vec::new();
    for t in tables {
        for e in t.entries.iter().filter(|e| e.rate > 0.0) {
            if e.lower == e.upper {
                deph[e.lower] += e.rate;
            } else {
                out_rate[e.upper] += e.rate;
                feeds.push((e.lower, e.upper, e.rate));
            }
        }
    }
    let decay = CMatrix::from_fn(n, n, |m, k| {
        let mut re = 0.5 * (out_rate[m] + out_rate[k]);
        if m != k {
            re += 0.5 * (deph[m] + deph[k]);
        }
        C64::new(re, rel[m] - rel[k])
    });

    Ok(Superoperator {
        dim: n,
        l_static,
        l_drive,
        l_drive_raise,
        l_drive_lower,
        drive_full,
        drive_raise,
        max_transition: basis.max_transition(),
        decay,
        feeds,
    })
}

impl Superoperator {
    /// Liouville-space dimension `n²`.
    pub fn liouville_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn max_transition(&self) -> f64 {
        self.max_transition
    }

    /// `out = L_static[ρ] − i[h, ρ]`, with `h` an optional (time-dependent)
    /// drive Hamiltonian in the dressed basis.
    pub fn apply(&self, h: Option<&CMatrix>, rho: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        for k in 0..n {
            for m in 0..n {
                out[(m, k)] = -self.decay[(m, k)] * rho[(m, k)];
            }
        }
        for &(j, k, rate) in &self.feeds {
            out[(j, j)] += rho[(k, k)] * rate;
        }
        if let Some(h) = h {
            let minus_i = C64::new(0.0, -1.0);
            let plus_i = C64::new(0.0, 1.0);
            let one = C64::new(1.0, 0.0);
            out.gemm(minus_i, h, rho, one);
            out.gemm(plus_i, rho, h, one);
        }
    }
}
