mod common;

use blockade_core::dissipation::{relaxation_rates, Channel};
use blockade_core::dynamics::{evolve, max_step, regression_two_time, Drive, Numerics, Propagator, Seed};
use blockade_core::linalg::{ket_bra, projector, trace, unvectorize, vectorize};
use blockade_core::model::ModelParams;
use blockade_core::observables::{naive_photon_number, uniform_grid, Simulation};
use blockade_core::{CMatrix, C64};
use std::f64::consts::FRAC_PI_2;

fn undriven() -> ModelParams {
    ModelParams {
        drive_amplitude: 0.0,
        ..Default::default()
    }
}

/// Least-squares slope of `ln y` against `x`.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn level_one_width(sim: &Simulation) -> f64 {
    let cav = relaxation_rates(&sim.basis, Channel::Cavity, sim.params.gamma_a).unwrap();
    let qub = relaxation_rates(&sim.basis, Channel::Qubit, sim.params.gamma_x).unwrap();
    cav.rate(0, 1) + qub.rate(0, 1)
}

#[test]
fn level_one_population_decays_at_total_width() {
    let sim = Simulation::new(&undriven(), &Numerics::default()).unwrap();
    let drive = Drive::from_params(&sim.params, &sim.numerics);
    let dt = max_step(&sim.superop, &drive);
    let n = sim.basis.len();
    let traj = evolve(&projector(n, 1), &sim.superop, drive, (0.0, 200.0), dt, 200).unwrap();
    let pops: Vec<f64> = traj.states.iter().map(|r| r[(1, 1)].re).collect();
    let rate = -log_slope(&traj.times, &pops);
    let width = level_one_width(&sim);
    assert!((rate - width).abs() < 1e-3 * width, "{rate} vs {width}");
    // nothing decays out of level 1 except into the ground state
    let last = traj.states.last().unwrap();
    let t = *traj.times.last().unwrap();
    assert!((last[(0, 0)].re - (1.0 - (-width * t).exp())).abs() < 1e-6);
}

#[test]
fn regression_from_level_one_decays_at_total_width() {
    let sim = Simulation::new(&undriven(), &Numerics::default()).unwrap();
    let qss = sim.quasi_steady_state(&sim.params).unwrap();
    let n = sim.basis.len();
    let seed = Seed::Sandwich {
        left: ket_bra(n, 0, 1),
        right: ket_bra(n, 1, 0),
    };
    let tau = uniform_grid(0.0, 200.0, 10.0);
    let corr = regression_two_time(&sim.superop, &qss, &seed, &sim.fields.intensity, &tau).unwrap();
    let re: Vec<f64> = corr.values.iter().map(|z| z.re).collect();
    let rate = -log_slope(&tau, &re);
    let width = level_one_width(&sim);
    assert!((rate - width).abs() < 1e-3 * width, "{rate} vs {width}");
    let d10 = sim.basis.delta(1, 0);
    assert!((re[0] - d10 * d10 * sim.basis.x_elems[(0, 1)].norm_sqr()).abs() < 1e-12);
}

fn bare_cavity() -> ModelParams {
    ModelParams {
        g: 0.0,
        theta: FRAC_PI_2,
        omega_d: 1.0,
        ..Default::default()
    }
}

#[test]
fn bare_cavity_photon_number_matches_driven_oscillator() {
    let p = bare_cavity();
    let sim = Simulation::new(&p, &Numerics::default()).unwrap();
    let qss = sim.quasi_steady_state(&p).unwrap();
    let n = naive_photon_number(&qss.averaged_state, &sim.basis);
    let expected = (0.5 * p.drive_amplitude).powi(2) / (0.5 * p.gamma_a).powi(2);
    assert!((n - expected).abs() < 1e-3 * expected, "{n} vs {expected}");
    let g2 = sim.g2_zero_from(&qss, p.omega_d).unwrap();
    assert!((g2.flux - expected).abs() < 1e-3 * expected);
}

#[test]
fn bare_cavity_emits_coherent_light() {
    // per-transition jump operators drop the coherence feeding of a harmonic
    // ladder, which shifts g2 by the mean photon number; keep that below 1e-7
    let p = ModelParams {
        drive_amplitude: 3e-6,
        ..bare_cavity()
    };
    let sim = Simulation::new(&p, &Numerics::default()).unwrap();
    let g2 = sim.g2_zero_at(p.omega_d).unwrap();
    assert!((g2.g2 - 1.0).abs() < 1e-6, "g2 = {}", g2.g2);
}

#[test]
fn weak_drive_response_is_quadratic() {
    let base = ModelParams::default();
    let probe = Simulation::new(&base, &Numerics::default()).unwrap();
    let omega_d = probe.basis.delta(1, 0);
    let run = |amp: f64| {
        let p = ModelParams {
            drive_amplitude: amp,
            omega_d,
            ..base.clone()
        };
        let sim = Simulation::new(&p, &Numerics::default()).unwrap();
        let qss = sim.quasi_steady_state(&p).unwrap();
        let g2 = sim.g2_zero_from(&qss, omega_d).unwrap();
        (qss.averaged_state[(1, 1)].re, g2.flux)
    };
    let (p1, f1) = run(1e-4);
    let (p2, f2) = run(2e-4);
    assert!((p2 / p1 - 4.0).abs() < 0.04, "population ratio {}", p2 / p1);
    assert!((f2 / f1 - 4.0).abs() < 0.04, "flux ratio {}", f2 / f1);
    assert!(f1 > 0.0 && p1 > 1e-6 && p1 < 1e-3);
}

#[test]
fn evolution_preserves_hermiticity() {
    let p = ModelParams {
        omega_d: 1.1,
        drive_amplitude: 1e-2,
        n_fock: 12,
        n_dressed: 8,
        ..Default::default()
    };
    let sim = Simulation::new(&p, &Numerics::default()).unwrap();
    let n = sim.basis.len();
    // deterministic pseudo-random Hermitian matrix
    let mut state = 0x2545_f491_u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let m = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
    let mut sigma = &m + m.adjoint();
    let drive = Drive::from_params(&p, &sim.numerics);
    let dt = max_step(&sim.superop, &drive);
    let steps = (1.0 / dt).ceil() as usize;
    let mut prop = Propagator::new(&sim.superop, drive);
    prop.advance(0.3, 1.0 / steps as f64, steps, &mut sigma);
    let err = (&sigma - sigma.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn static_generator_has_a_unique_stationary_state() {
    let p = ModelParams {
        n_fock: 10,
        n_dressed: 6,
        ..Default::default()
    };
    let sim = Simulation::new(&p, &Numerics::default()).unwrap();
    let l = &sim.superop.l_static;
    let values = common::eigenvalues(l);
    let zeros = values.iter().filter(|z| z.norm() < 1e-10).count();
    assert_eq!(zeros, 1, "{values:?}");
    let n = sim.basis.len();
    let out = unvectorize(&(l * vectorize(&projector(n, 0))), n);
    assert!(out.iter().all(|z| z.norm() < 1e-12));
    // the trace functional annihilates every column
    let id = vectorize(&CMatrix::identity(n, n));
    let row = id.adjoint() * l;
    assert!(row.iter().all(|z| z.norm() < 1e-12));
    assert_eq!(trace(&projector(n, 0)), C64::new(1.0, 0.0));
}

#[test]
fn g2_tau_starts_at_g2_zero() {
    let base = ModelParams {
        n_fock: 12,
        n_dressed: 8,
        ..Default::default()
    };
    let probe = Simulation::new(&base, &Numerics::default()).unwrap();
    let p = ModelParams {
        omega_d: probe.basis.delta(2, 0),
        ..base
    };
    let sim = Simulation::new(&p, &Numerics::default()).unwrap();
    let zero = sim.g2_zero_at(p.omega_d).unwrap();
    let curve = sim.g2_tau(&[0.0, 1.0, 2.0]).unwrap();
    assert!((curve.values[0] - zero.g2).abs() < 1e-10 * zero.g2, "{} vs {}", curve.values[0], zero.g2);
    assert!(curve.max_imag_ratio < 1e-6);
}
