//! Time evolution under the periodically driven generator.
//!
//! The drive `Ω cos(ωd t)(a + a†)` is expressed in the dressed basis and, by
//! default, filtered to its co-rotating part: the energy-raising block
//! `D+ = Σ_{k>j} D_kj |k⟩⟨j|` carries `(Ω/2) e^{−iωd t}` and the lowering
//! block `D- = (D+)†` carries `(Ω/2) e^{+iωd t}`. Diagonal elements of the
//! drive operator oscillate at `ωd` with nothing to compensate and are dropped.
//! [`Drive::full_cosine`] switches the unfiltered drive back on.
//!
//! Integration is fixed-step RK4 so every output is reproducible bit for bit.

use std::f64::consts::TAU;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissipation::{DephasingPower, Superoperator};
use crate::linalg::{max_abs, min_eigenvalue_hermitian, projector, trace, trace_product};
use crate::model::ModelParams;
use crate::{CMatrix, Error, Result, C64};

/// Tolerance on `|Tr ρ − 1|` for every stored state.
pub const TRACE_TOL: f64 = 1e-8;
/// Lower bound on the smallest eigenvalue of every stored state.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Numerical settings shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Upper bound on the RK4 step; `None` uses the largest allowed step.
    pub dt: Option<f64>,
    /// Relaxation time before sampling, in units of `1/γ_min`.
    pub t_relax_factor: f64,
    /// Minimum number of drive periods before sampling.
    pub min_relax_periods: usize,
    /// Drive phases sampled per period.
    pub n_phase: usize,
    /// Number of consecutive periods averaged in the quasi-steady state.
    pub n_average_periods: usize,
    /// Period-to-period convergence threshold (max entry-wise distance).
    pub qss_tol: f64,
    /// Give up after this many `1/γ_min`.
    pub qss_cap_factor: f64,
    /// Correlator span for spectra, in units of `1/γ_min`.
    pub tau_max_factor: f64,
    /// Grid step for `g2(τ)` and spectra, in units of `1/ω0`.
    pub tau_step: f64,
    /// Default `g2(τ)` span, in units of `1/γ_min`.
    pub g2_tau_span_factor: f64,
    pub dephasing_power: DephasingPower,
    pub drive_full_cosine: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: None,
            t_relax_factor: 20.0,
            min_relax_periods: 50,
            n_phase: 8,
            n_average_periods: 1,
            qss_tol: 1e-10,
            qss_cap_factor: 200.0,
            tau_max_factor: 10.0,
            tau_step: 0.1,
            g2_tau_span_factor: 5.0,
            dephasing_power: DephasingPower::Magnitude,
            drive_full_cosine: false,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                problems.push("dt must be > 0".to_string());
            }
        }
        if self.n_phase == 0 {
            problems.push("n_phase must be >= 1".into());
        }
        if self.n_average_periods == 0 {
            problems.push("n_average_periods must be >= 1".into());
        }
        for (name, v) in [
            ("t_relax_factor", self.t_relax_factor),
            ("qss_tol", self.qss_tol),
            ("qss_cap_factor", self.qss_cap_factor),
            ("tau_max_factor", self.tau_max_factor),
            ("tau_step", self.tau_step),
            ("g2_tau_span_factor", self.g2_tau_span_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive and finite"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

/// Coherent drive `Ω cos(ωd t)(a + a†)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub amplitude: f64,
    pub frequency: f64,
    pub full_cosine: bool,
}

impl Drive {
    pub fn from_params(params: &ModelParams, numerics: &Numerics) -> Self {
        Self {
            amplitude: params.drive_amplitude,
            frequency: params.omega_d,
            full_cosine: numerics.drive_full_cosine,
        }
    }

    pub fn period(&self) -> Option<f64> {
        (self.frequency > 0.0).then(|| TAU / self.frequency)
    }

    /// Drive Hamiltonian at time `t`, written into `h`. Returns `false` when
    /// the drive is off.
    pub fn hamiltonian_into(&self, sop: &Superoperator, t: f64, h: &mut CMatrix) -> bool {
        if self.amplitude == 0.0 {
            return false;
        }
        let n = sop.dim;
        if self.full_cosine {
            let f = self.amplitude * (self.frequency * t).cos();
            for k in 0..n {
                for j in 0..n {
                    h[(j, k)] = C64::new(f * sop.drive_full[(j, k)], 0.0);
                }
            }
        } else {
            let c = C64::from_polar(0.5 * self.amplitude, -self.frequency * t);
            for k in 0..n {
                for j in 0..n {
                    h[(j, k)] = if j > k {
                        c * sop.drive_raise[(j, k)]
                    } else if j < k {
                        c.conj() * sop.drive_raise[(k, j)]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                }
            }
        }
        true
    }
}

/// Largest RK4 step allowed: 2 % of the shortest period among the retained
/// transitions and the drive.
pub fn max_step(sop: &Superoperator, drive: &Drive) -> f64 {
    let mut dt = f64::INFINITY;
    if sop.max_transition() > 0.0 {
        dt = dt.min(0.02 * TAU / sop.max_transition());
    }
    if drive.frequency > 0.0 {
        dt = dt.min(0.02 * TAU / drive.frequency);
    }
    dt
}

struct Rk4Work {
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    tmp: CMatrix,
    h: CMatrix,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        let z = CMatrix::zeros(n, n);
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z.clone(),
            h: z,
        }
    }
}

/// Fixed-step RK4 propagator for `dσ/dt = L(t) σ`. Works on any operator
/// `σ`, not only density matrices.
pub struct Propagator<'a> {
    sop: &'a Superoperator,
    drive: Drive,
    work: Rk4Work,
}

impl<'a> Propagator<'a> {
    pub fn new(sop: &'a Superoperator, drive: Drive) -> Self {
        Self {
            sop,
            drive,
            work: Rk4Work::new(sop.dim),
        }
    }

    fn rhs(sop: &Superoperator, drive: &Drive, t: f64, h: &mut CMatrix, rho: &CMatrix, out: &mut CMatrix) {
        let on = drive.hamiltonian_into(sop, t, h);
        sop.apply(on.then_some(&*h), rho, out);
    }

    pub fn step(&mut self, t: f64, dt: f64, rho: &mut CMatrix) {
        let Rk4Work { k1, k2, k3, k4, tmp, h } = &mut self.work;
        let (sop, drive) = (self.sop, &self.drive);
        let half = 0.5 * dt;

        Self::rhs(sop, drive, t, h, rho, k1);
        shifted(tmp, rho, half, k1);
        Self::rhs(sop, drive, t + half, h, tmp, k2);
        shifted(tmp, rho, half, k2);
        Self::rhs(sop, drive, t + half, h, tmp, k3);
        shifted(tmp, rho, dt, k3);
        Self::rhs(sop, drive, t + dt, h, tmp, k4);

        let w = dt / 6.0;
        for (((r, a), (b, c)), d) in rho
            .iter_mut()
            .zip(k1.iter())
            .zip(k2.iter().zip(k3.iter()))
            .zip(k4.iter())
        {
            *r += (a + (b + c) * 2.0 + d) * w;
        }
    }

    /// `n_steps` steps of size `dt` starting at `t0`; times are recomputed from
    /// the step index to avoid drift.
    pub fn advance(&mut self, t0: f64, dt: f64, n_steps: usize, rho: &mut CMatrix) {
        for s in 0..n_steps {
            self.step(t0 + s as f64 * dt, dt, rho);
        }
    }
}

/// `out = rho + c·k`.
fn shifted(out: &mut CMatrix, rho: &CMatrix, c: f64, k: &CMatrix) {
    for ((o, r), k) in out.iter_mut().zip(rho.iter()).zip(k.iter()) {
        *o = r + k * c;
    }
}

fn check_state(rho: &CMatrix, time: f64) -> Result<()> {
    let tr = trace(rho);
    let min_eig = min_eigenvalue_hermitian(rho);
    if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL || min_eig < -POSITIVITY_TOL || !min_eig.is_finite() {
        return Err(Error::Unphysical {
            time,
            trace: tr.re,
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    /// Step actually used (the requested step shrunk to divide the span).
    pub dt: f64,
    pub drive: Drive,
}

/// Integrates `ρ0` over `t_span`, storing every `save_every`-th step and the
/// final state. Each stored state is checked for unit trace and positivity.
pub fn evolve(
    rho0: &CMatrix,
    sop: &Superoperator,
    drive: Drive,
    t_span: (f64, f64),
    dt: f64,
    save_every: usize,
) -> Result<Trajectory> {
    if rho0.nrows() != sop.dim || rho0.ncols() != sop.dim {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: sop.dim,
            found: rho0.nrows(),
        });
    }
    let limit = max_step(sop, &drive);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, max: limit });
    }
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(Error::InvalidParams(format!("empty time span ({t0}, {t1})")));
    }
    let n_steps = (((t1 - t0) / dt) - 1e-9).ceil().max(0.0) as usize;
    let dt = if n_steps > 0 { (t1 - t0) / n_steps as f64 } else { dt };
    let save_every = save_every.max(1);

    let mut prop = Propagator::new(sop, drive);
    let mut rho = rho0.clone();
    let mut times = vec![t0];
    let mut states = vec![rho.clone()];
    check_state(&rho, t0)?;
    for s in 0..n_steps {
        let t = t0 + s as f64 * dt;
        prop.step(t, dt, &mut rho);
        if (s + 1) % save_every == 0 || s + 1 == n_steps {
            let t = t0 + (s + 1) as f64 * dt;
            check_state(&rho, t)?;
            times.push(t);
            states.push(rho.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        dt,
        drive,
    })
}

/// Periodic long-time state of the driven system.
#[derive(Debug, Clone)]
pub struct QuasiSteadyState {
    pub drive: Drive,
    /// Drive period (0 when undriven and `ωd = 0`).
    pub period: f64,
    /// RK4 step used; divides `period / n_phase`.
    pub dt: f64,
    /// Largest step allowed for subsequent propagation.
    pub max_step: f64,
    /// Drive phases `i T / N` (modulo the period) of the sampled states.
    pub phase_times: Vec<f64>,
    pub phase_states: Vec<CMatrix>,
    pub averaged_state: CMatrix,
    /// Final period-to-period distance.
    pub metric: f64,
    /// Distances of all sampled periods, oldest first.
    pub metric_history: Vec<f64>,
    /// Whether the distance decreased monotonically over the last five periods.
    pub monotone_tail: bool,
    pub t_final: f64,
}

impl QuasiSteadyState {
    pub fn n_phase(&self) -> usize {
        self.phase_states.len()
    }
}

fn ground_qss(n: usize, drive: Drive, n_phase: usize, max_step: f64) -> QuasiSteadyState {
    let period = drive.period().unwrap_or(0.0);
    let ground = projector(n, 0);
    QuasiSteadyState {
        drive,
        period,
        dt: max_step,
        max_step,
        phase_times: (0..n_phase).map(|i| i as f64 * period / n_phase as f64).collect(),
        phase_states: vec![ground.clone(); n_phase],
        averaged_state: ground,
        metric: 0.0,
        metric_history: vec![0.0],
        monotone_tail: true,
        t_final: 0.0,
    }
}

/// Integrates from `|0⟩⟨0|` until the state repeats from one drive period to
/// the next, then returns the states at `n_phase` equidistant drive phases
/// (over `n_average_periods` periods) and their average.
pub fn quasi_steady_state(sop: &Superoperator, params: &ModelParams, numerics: &Numerics) -> Result<QuasiSteadyState> {
    numerics.validate()?;
    let gamma_min = params.gamma_min().ok_or_else(|| {
        Error::InvalidParams("a quasi-steady state needs gamma_a > 0 or gamma_x > 0".into())
    })?;
    let drive = Drive::from_params(params, numerics);
    let limit = max_step(sop, &drive);
    let dt_max = match numerics.dt {
        Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(Error::StepSize { dt, max: limit }),
        Some(dt) => dt,
        None => limit,
    };
    let n = sop.dim;
    let n_phase = numerics.n_phase;

    if drive.amplitude == 0.0 {
        // |0⟩⟨0| is annihilated exactly by the undriven generator
        return Ok(ground_qss(n, drive, n_phase, dt_max));
    }
    let period = drive.period().ok_or_else(|| {
        Error::InvalidParams("a driven quasi-steady state needs omega_d > 0".into())
    })?;
    if drive.amplitude > 1e-2 * gamma_min {
        warn!(
            "drive amplitude {} exceeds 1% of the smallest damping rate {}; weak-drive treatment may be inaccurate",
            drive.amplitude, gamma_min
        );
    }

    let steps_per_phase = ((period / n_phase as f64) / dt_max - 1e-9).ceil().max(1.0) as usize;
    let dt = period / (n_phase * steps_per_phase) as f64;
    let t_relax = (numerics.t_relax_factor / gamma_min).max(numerics.min_relax_periods as f64 * period);
    let relax_periods = (t_relax / period).ceil() as usize;
    let cap = numerics.qss_cap_factor / gamma_min;

    let mut prop = Propagator::new(sop, drive);
    let mut rho = projector(n, 0);
    let steps_per_period = n_phase * steps_per_phase;
    for p in 0..relax_periods {
        prop.advance(p as f64 * period, dt, steps_per_period, &mut rho);
    }

    let sample_period = |prop: &mut Propagator, rho: &mut CMatrix, p: usize| -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(n_phase);
        for i in 0..n_phase {
            out.push(rho.clone());
            let t0 = p as f64 * period + (i * steps_per_phase) as f64 * dt;
            prop.advance(t0, dt, steps_per_phase, rho);
        }
        out
    };

    let mut p = relax_periods;
    let mut prev = sample_period(&mut prop, &mut rho, p);
    p += 1;
    let mut history = Vec::new();
    let mut window: Vec<Vec<CMatrix>>;
    loop {
        let current = sample_period(&mut prop, &mut rho, p);
        p += 1;
        let metric = prev
            .iter()
            .zip(&current)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max);
        history.push(metric);
        if metric < numerics.qss_tol {
            window = vec![current];
            break;
        }
        if p as f64 * period > cap {
            return Err(Error::NonConvergence {
                time: p as f64 * period,
                metric,
            });
        }
        prev = current;
    }
    for _ in 1..numerics.n_average_periods {
        window.push(sample_period(&mut prop, &mut rho, p));
        p += 1;
    }

    let tail: Vec<f64> = history.iter().rev().take(5).rev().cloned().collect();
    let monotone_tail = tail.windows(2).all(|w| w[1] <= w[0]);
    if !monotone_tail {
        warn!("quasi-steady-state distance not monotone over the last periods: {tail:?}");
    }
    debug!(
        "quasi-steady state after {} periods (t = {:.1}), distance {:e}",
        p,
        p as f64 * period,
        history.last().unwrap()
    );

    let phase_states: Vec<CMatrix> = window.into_iter().flatten().collect();
    let phase_times: Vec<f64> = (0..phase_states.len())
        .map(|i| (i % n_phase) as f64 * period / n_phase as f64)
        .collect();
    for (s, &t) in phase_states.iter().zip(&phase_times) {
        check_state(s, t)?;
    }
    let mut averaged_state = CMatrix::zeros(n, n);
    for s in &phase_states {
        averaged_state += s;
    }
    averaged_state /= C64::new(phase_states.len() as f64, 0.0);

    Ok(QuasiSteadyState {
        drive,
        period,
        dt,
        max_step: dt_max,
        phase_times,
        phase_states,
        averaged_state,
        metric: *history.last().unwrap(),
        metric_history: history,
        monotone_tail,
        t_final: p as f64 * period,
    })
}

/// How the regression seed is formed from the phase state `ρ(t_i)`.
#[derive(Debug, Clone)]
pub enum Seed {
    /// `σ(0) = right · ρ · left`.
    Sandwich { left: CMatrix, right: CMatrix },
    /// `σ(0) = ρ · left`.
    RightMultiply { left: CMatrix },
    /// `σ(0) = ρ · left − Tr[ρ · left] ρ`; removes the factorized (coherent)
    /// part `⟨left(t)⟩⟨mid(t+τ)⟩` from the correlator.
    Connected { left: CMatrix },
}

impl Seed {
    fn build(&self, rho: &CMatrix) -> CMatrix {
        match self {
            Seed::Sandwich { left, right } => right * rho * left,
            Seed::RightMultiply { left } => rho * left,
            Seed::Connected { left } => {
                let s = rho * left;
                let mean = trace(&s);
                s - rho.map(|z| z * mean)
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Seed::Sandwich { left, right } => left.nrows().max(right.nrows()),
            Seed::RightMultiply { left } | Seed::Connected { left } => left.nrows(),
        }
    }
}

/// Phase-averaged two-time correlator `Tr[mid · σ(τ)]`.
#[derive(Debug, Clone)]
pub struct TwoTimeCorrelation {
    pub tau: Vec<f64>,
    pub values: Vec<C64>,
    pub n_phase: usize,
}

/// Quantum regression: for every sampled phase `t_i`, seed `σ(0)` from
/// `ρ(t_i)`, propagate it under the full time-dependent generator starting at
/// `t_i` and record `Tr[mid · σ(τ)]`; the result is the average over phases.
pub fn regression_two_time(
    sop: &Superoperator,
    qss: &QuasiSteadyState,
    seed: &Seed,
    mid: &CMatrix,
    tau_grid: &[f64],
) -> Result<TwoTimeCorrelation> {
    let n = sop.dim;
    if seed.dim() != n || mid.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "correlator operators",
            expected: n,
            found: if seed.dim() != n { seed.dim() } else { mid.nrows() },
        });
    }
    if tau_grid.is_empty() || tau_grid[0] < 0.0 || tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams(
            "tau grid must be nonempty, nonnegative and ascending".into(),
        ));
    }
    let limit = max_step(sop, &qss.drive);
    let dt_max = qss.max_step.min(limit);

    let per_phase: Vec<Vec<C64>> = qss
        .phase_states
        .par_iter()
        .zip(qss.phase_times.par_iter())
        .map(|(rho, &t_start)| {
            let mut prop = Propagator::new(sop, qss.drive);
            let mut sigma = seed.build(rho);
            let mut out = Vec::with_capacity(tau_grid.len());
            let mut tau_now = 0.0;
            for &tau in tau_grid {
                let span = tau - tau_now;
                if span > 0.0 {
                    let steps = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
                    let h = span / steps as f64;
                    let mut t = t_start + tau_now;
                    for _ in 0..steps {
                        prop.step(t, h, &mut sigma);
                        t += h;
                    }
                    tau_now = tau;
                }
                out.push(trace_product(mid, &sigma));
            }
            out
        })
        .collect();

    let scale = 1.0 / per_phase.len() as f64;
    let values = (0..tau_grid.len())
        .map(|i| per_phase.iter().map(|v| v[i]).sum::<C64>() * scale)
        .collect();
    Ok(TwoTimeCorrelation {
        tau: tau_grid.to_vec(),
        values,
        n_phase: per_phase.len(),
    })
}
