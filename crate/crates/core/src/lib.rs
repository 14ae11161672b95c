//! Output-photon statistics of a coherently driven qubit-cavity system at
//! arbitrary coupling strength.
//!
//! The pipeline is:
//!
//! 1. [`model`] builds the truncated Fock ⊗ qubit operator algebra and the
//!    static Hamiltonian `H0 = ω0 a†a + ωx σ+σ- + g (a + a†)(cosθ σz - sinθ σx)`.
//! 2. [`dressed`] diagonalizes `H0` and expresses every operator of interest in
//!    the dressed (energy) basis, including the positive-frequency part of the
//!    field derivative `Ẋ+`.
//! 3. [`dissipation`] turns the dressed transition tables into relaxation and
//!    dephasing rates and assembles the Liouville-space generator.
//! 4. [`dynamics`] integrates the periodically driven master equation, extracts
//!    the quasi-steady state and evaluates two-time correlators through the
//!    quantum regression theorem.
//! 5. [`observables`] reports photon flux, `g2(0)`, `g2(τ)` and the incoherent
//!    fluorescence spectrum.
//!
//! [`circuit`] holds the independent flux-qubit feasibility estimates.

pub mod circuit;
pub mod dissipation;
pub mod dressed;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;

pub use error::{Error, Result};

/// Library version recorded in output sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used for all density matrices and dressed operators.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
