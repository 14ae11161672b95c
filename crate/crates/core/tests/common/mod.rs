//! Test-only reference implementations, written without the library's
//! dressed-basis machinery.
#![allow(dead_code)]

use blockade_core::{CMatrix, C64};
use nalgebra::{DMatrix, DVector};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn dag(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Bare ladder operators on `qubit ⊗ Fock(n)`, qubit ordering (g, e).
pub struct BareOps {
    pub a: CMatrix,
    pub sm: CMatrix,
    pub sz: CMatrix,
    pub sx: CMatrix,
}

pub fn bare_ops(n: usize) -> BareOps {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    let mut sm = CMatrix::zeros(2, 2);
    sm[(0, 1)] = c(1.0);
    let mut sz = CMatrix::zeros(2, 2);
    sz[(0, 0)] = c(-1.0);
    sz[(1, 1)] = c(1.0);
    let sx = &sm + dag(&sm);
    BareOps {
        a: kron(&eye(2), &a),
        sm: kron(&sm, &eye(n)),
        sz: kron(&sz, &eye(n)),
        sx: kron(&sx, &eye(n)),
    }
}

/// Real symmetric eigensolve of the full bare Hamiltonian at angle `theta`;
/// eigenvalues ascending with matching eigenvector columns.
pub fn bare_spectrum(n: usize, omega_x: f64, g: f64, theta: f64) -> (Vec<f64>, DMatrix<f64>, BareOps) {
    let ops = bare_ops(n);
    let h = dag(&ops.a) * &ops.a
        + dag(&ops.sm) * &ops.sm * c(omega_x)
        + (&ops.a + dag(&ops.a)) * (&ops.sz * c(theta.cos()) - &ops.sx * c(theta.sin())) * c(g);
    let hr = h.map(|z| z.re);
    let eig = nalgebra::SymmetricEigen::new(hr);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(2 * n, idx.len(), |r, k| eig.eigenvectors[(r, idx[k])]);
    (values, vectors, ops)
}

/// Column-major vectorized Lindblad generator for Hamiltonian `h` and jump
/// operators `jumps`.
pub fn lindblad(h: &CMatrix, jumps: &[CMatrix]) -> CMatrix {
    let n = h.nrows();
    let id = eye(n);
    let i = C64::new(0.0, 1.0);
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-i);
    for j in jumps {
        let jdj = dag(j) * j;
        l += kron(&j.conjugate(), j);
        l -= kron(&id, &jdj) * c(0.5);
        l -= kron(&jdj.transpose(), &id) * c(0.5);
    }
    l
}

/// Normalized null vector of `l` reshaped to a density matrix.
pub fn steady_state(l: &CMatrix, n: usize) -> CMatrix {
    let mut m = l.clone();
    let mut rhs = DVector::<C64>::zeros(n * n);
    for col in 0..n * n {
        m[(0, col)] = c(0.0);
    }
    for k in 0..n {
        m[(0, k * n + k)] = c(1.0);
    }
    rhs[0] = c(1.0);
    let v = m.lu().solve(&rhs).expect("nonsingular steady-state system");
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Standard driven Jaynes-Cummings master equation in the frame rotating at
/// the drive frequency, with jump operators `√γa a` and `√γx σ-`.
pub struct JcOracle {
    pub n_fock: usize,
    pub omega0: f64,
    pub omega_x: f64,
    pub g: f64,
    pub gamma_a: f64,
    pub gamma_x: f64,
    pub omega_d: f64,
    pub drive: f64,
}

impl JcOracle {
    pub fn ops(&self) -> BareOps {
        bare_ops(self.n_fock)
    }

    fn coupling(&self, o: &BareOps) -> CMatrix {
        (&o.a * dag(&o.sm) + dag(&o.a) * &o.sm) * c(self.g)
    }

    fn jumps(&self, o: &BareOps) -> Vec<CMatrix> {
        vec![&o.a * c(self.gamma_a.sqrt()), &o.sm * c(self.gamma_x.sqrt())]
    }

    /// Undriven generator in the laboratory frame.
    pub fn lab_generator(&self) -> CMatrix {
        let o = self.ops();
        let h = dag(&o.a) * &o.a * c(self.omega0) + dag(&o.sm) * &o.sm * c(self.omega_x) + self.coupling(&o);
        lindblad(&h, &self.jumps(&o))
    }

    pub fn rotating_hamiltonian(&self) -> CMatrix {
        let o = self.ops();
        dag(&o.a) * &o.a * c(self.omega0 - self.omega_d)
            + dag(&o.sm) * &o.sm * c(self.omega_x - self.omega_d)
            + self.coupling(&o)
            + (&o.a + dag(&o.a)) * c(0.5 * self.drive)
    }

    pub fn rotating_generator(&self) -> CMatrix {
        let o = self.ops();
        lindblad(&self.rotating_hamiltonian(), &self.jumps(&o))
    }

    pub fn steady_state(&self) -> CMatrix {
        steady_state(&self.rotating_generator(), 2 * self.n_fock)
    }

    /// `⟨a†a⟩` and `g2(τ) = ⟨a†(0)a†(τ)a(τ)a(0)⟩ / ⟨a†a⟩²` on `tau`
    /// (ascending, starting at 0), propagated by RK4 with step ≤ `h_max`.
    pub fn g2_tau(&self, tau: &[f64], h_max: f64) -> (f64, Vec<f64>) {
        let o = self.ops();
        let l = self.rotating_generator();
        let n = 2 * self.n_fock;
        let rho = self.steady_state();
        let ad = dag(&o.a);
        let intensity = &ad * &o.a;
        let mean = (&intensity * &rho).trace().re;
        let seed = &o.a * &rho * &ad;
        let mut v = DVector::from_column_slice(seed.as_slice());
        let mut out = Vec::with_capacity(tau.len());
        let mut now = 0.0;
        for &t in tau {
            let span = t - now;
            if span > 0.0 {
                let steps = (span / h_max).ceil() as usize;
                let h = c(span / steps as f64);
                for _ in 0..steps {
                    let k1 = &l * &v;
                    let k2 = &l * (&v + &k1 * (h * 0.5));
                    let k3 = &l * (&v + &k2 * (h * 0.5));
                    let k4 = &l * (&v + &k3 * h);
                    v += (k1 + (k2 + k3) * c(2.0) + k4) * (h / 6.0);
                }
                now = t;
            }
            let sigma = CMatrix::from_column_slice(n, n, v.as_slice());
            out.push((&intensity * sigma).trace().re / (mean * mean));
        }
        (mean, out)
    }
}

/// Eigenvalues of a general complex matrix via Schur decomposition.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let schur = nalgebra::linalg::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Decay eigenvalue with the smallest nonzero `|Re|`; eigenvalues with
/// `|λ| < zero_tol` count as the stationary mode.
pub fn slowest_decay(values: &[C64], zero_tol: f64) -> f64 {
    values
        .iter()
        .filter(|z| z.norm() > zero_tol)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min)
}
