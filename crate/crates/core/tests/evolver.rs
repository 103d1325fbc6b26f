use std::f64::consts::PI;

use gsle_core::bath::OhmicSpec;
use gsle_core::coupling::CouplingFunction;
use gsle_core::evolver::{
    ehrenfest_residual, run, step, InitialState, NoiseSpec, RunWarning, SimConfig, SimState,
};
use gsle_core::potentials::{DampingSign, PotentialSpec};
use gsle_core::spline::CubicSpline;
use gsle_core::{Error, Grid};

fn harmonic() -> PotentialSpec {
    PotentialSpec::Harmonic { omega: 1.0, mass: 1.0 }
}

fn grid() -> Grid {
    Grid::new(-20.0, 20.0, 512).unwrap()
}

fn coherent(x0: f64, dt: f64, n: usize) -> SimConfig {
    SimConfig::new(grid(), harmonic(), InitialState::Gaussian { x0, p0: 0.0, sigma: 0.5f64.sqrt() }, dt, n)
}

#[test]
fn coherent_state_returns_after_one_period() {
    let period = 2.0 * PI;
    let c = coherent(2.0, period / 2000.0, 2000);
    let rec = run(&c).unwrap();
    let last = rec.rows.last().unwrap();
    assert!((last.t - period).abs() < 1e-9);
    assert!((last.mean_x - 2.0).abs() < 1e-4, "{}", last.mean_x);
}

#[test]
fn free_packet_spreads() {
    let c = SimConfig::new(grid(), PotentialSpec::Free, InitialState::Gaussian { x0: 0.0, p0: 0.0, sigma: 1.0 }, 0.001, 1000);
    let rec = run(&c).unwrap();
    let last = rec.rows.last().unwrap();
    assert!((last.var_x - 1.25).abs() < 1e-4, "{}", last.var_x);
}

#[test]
fn second_order_self_convergence() {
    let at = |dt: f64| {
        let mut c = coherent(1.5, dt, (2.0 / dt).round() as usize);
        c.coupling = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
        c.friction = 0.3;
        run(&c).unwrap().rows.last().unwrap().mean_x
    };
    let (a, b, c) = (at(0.04), at(0.02), at(0.01));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
}

#[test]
fn tiny_step_is_identity() {
    let mut c = coherent(2.0, 1e-8, 1);
    c.friction = 0.1;
    let rec = run(&c).unwrap();
    let (a, b) = (rec.rows[0], rec.rows[1]);
    for (u, v) in [(a.norm, b.norm), (a.mean_x, b.mean_x), (a.mean_p, b.mean_p), (a.var_x, b.var_x), (a.energy, b.energy)] {
        assert!((u - v).abs() < 1e-7);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut c = coherent(1.0, 0.01, 200);
    c.friction = 0.2;
    c.coupling = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
    c.noise = NoiseSpec::White { temperature: 0.1 };
    c.kappa = 0.05;
    c.seed = 17;
    c.snapshot_stride = 50;
    assert_eq!(run(&c).unwrap(), run(&c).unwrap());
    let mut other = c.clone();
    other.seed = 18;
    assert_ne!(run(&c).unwrap().rows, run(&other).unwrap().rows);
}

#[test]
fn norm_is_conserved_with_every_term() {
    let mut c = coherent(1.0, 0.005, 2000);
    c.friction = 0.1;
    c.coupling = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
    c.noise = NoiseSpec::Ohmic(OhmicSpec { friction: 0.1, cutoff: 20.0, n_oscillators: 200, temperature: 0.05 });
    c.kappa = 0.05;
    let rec = run(&c).unwrap();
    let worst = rec.rows.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn free_particle_energy_is_exact() {
    let c = SimConfig::new(grid(), PotentialSpec::Free, InitialState::Gaussian { x0: 0.0, p0: 1.0, sigma: 1.0 }, 0.001, 10_000);
    let rec = run(&c).unwrap();
    let e0 = rec.rows[0].energy;
    let drift = rec.rows.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8 * e0.abs(), "{drift}");
}

#[test]
fn harmonic_energy_error_is_bounded_and_second_order() {
    let drift = |dt: f64| {
        let c = coherent(2.0, dt, 10_000);
        let rec = run(&c).unwrap();
        let e0 = rec.rows[0].energy;
        rec.rows.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0
    };
    let (a, b) = (drift(0.002), drift(0.001));
    assert!(a / b > 3.5, "{a} {b}");
    let fine = drift(1e-4);
    assert!(fine < 1e-8, "{fine}");
}

fn shifted_harmonic(shift: f64) -> SimConfig {
    let xs: Vec<f64> = (0..=800).map(|i| -20.0 + i as f64 * 0.05).collect();
    let vs = xs.iter().map(|x| 0.5 * x * x + shift).collect();
    let mut c = coherent(1.5, 0.005, 400);
    c.potential = PotentialSpec::Tabulated(CubicSpline::not_a_knot(xs, vs).unwrap());
    c.friction = 0.1;
    c.coupling = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
    c
}

#[test]
fn constant_potential_shift_is_a_gauge() {
    let reference = run(&shifted_harmonic(0.0)).unwrap();
    let shifted = run(&shifted_harmonic(3.0)).unwrap();
    for (a, b) in shifted.rows.iter().zip(&reference.rows) {
        for (u, v) in [(a.norm, b.norm), (a.mean_x, b.mean_x), (a.mean_p, b.mean_p), (a.var_x, b.var_x)] {
            assert!((u - v).abs() < 1e-10, "{u} {v}");
        }
        // W carries the integration constant from x_min, which picks up
        // round-off from the far tail amplified by the density floor.
        assert!((a.gauge - b.gauge).abs() < 1e-9);
        assert!((a.energy - b.energy - 3.0).abs() < 1e-10);
    }
}

#[test]
fn conservative_ehrenfest_residual() {
    let mut c = coherent(2.0, 0.002, 3000);
    c.potential = PotentialSpec::DoubleWell { a: 0.05, b: 0.5 };
    c.snapshot_stride = 100;
    let rec = run(&c).unwrap();
    let r = ehrenfest_residual(&rec, &c).unwrap();
    let scale = rec
        .snapshots
        .iter()
        .map(|s| {
            let vp = c.potential.sample(&c.grid, 1).unwrap();
            gsle_core::field::expectation(&s.psi, &vp).unwrap().abs()
        })
        .fold(0.0, f64::max);
    let worst = r.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-4 * scale, "{worst} vs {scale}");
}

#[test]
fn damped_ehrenfest_residual_and_sign_contrast() {
    let mut c = coherent(2.0, 0.005, 3000);
    c.friction = 0.1;
    c.snapshot_stride = 100;
    let rec = run(&c).unwrap();
    let worst = ehrenfest_residual(&rec, &c).unwrap().iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3 * 2.0, "{worst}");

    c.sign = DampingSign::Paper;
    let rec = run(&c).unwrap();
    let paper = ehrenfest_residual(&rec, &c).unwrap();
    let late = paper.last().unwrap().residual.abs();
    assert!(late > 100.0 * worst, "{late}");
}

#[test]
fn residual_needs_data() {
    let mut c = coherent(2.0, 0.01, 1);
    c.snapshot_stride = 1;
    let rec = run(&c).unwrap();
    assert!(matches!(ehrenfest_residual(&rec, &c), Err(Error::InsufficientData(_))));
}

#[test]
fn eigenstate_is_stationary() {
    let mut c = coherent(0.0, 0.005, 1000);
    c.initial_state = InitialState::Eigenstate { index: 2 };
    let rec = run(&c).unwrap();
    let (a, b) = (rec.rows[0], *rec.rows.last().unwrap());
    assert!((a.energy - 2.5).abs() < 1e-8);
    assert!((a.var_x - b.var_x).abs() < 1e-4 && b.mean_x.abs() < 1e-12, "{a:?} {b:?}");
    let mut bad = c.clone();
    bad.potential = PotentialSpec::Free;
    assert!(bad.validate().is_err());
}

#[test]
fn warnings_are_recorded() {
    let mut c = coherent(0.0, 0.2, 5);
    c.initial_state = InitialState::Gaussian { x0: 0.0, p0: 0.0, sigma: 4.0 };
    let rec = run(&c).unwrap();
    assert!(rec.warnings.iter().any(|w| matches!(w, RunWarning::StabilityGuard { .. })));
    assert!(rec.warnings.iter().any(|w| matches!(w, RunWarning::BoundaryContamination { .. })));
    let quiet = run(&coherent(2.0, 0.005, 20)).unwrap();
    assert!(quiet.warnings.is_empty());
}

#[test]
fn blowup_is_reported() {
    let mut c = coherent(2.0, 0.01, 50);
    c.kappa = 1e6;
    let err = run(&c).unwrap_err();
    assert!(matches!(err, Error::NumericalBlowup { last: Some(_), .. }), "{err:?}");
}

#[test]
fn single_step_matches_run() {
    let mut c = coherent(2.0, 0.01, 1);
    c.friction = 0.2;
    let psi = c.initial_wavefunction().unwrap();
    let s = step(&SimState { t: 0.0, psi, noise_cursor: 0 }, &c, 0.0).unwrap();
    c.snapshot_stride = 1;
    let rec = run(&c).unwrap();
    assert_eq!(rec.snapshots[1].psi, s.psi);
    assert_eq!(s.noise_cursor, 1);
}

#[test]
fn invalid_configs() {
    let mut c = coherent(2.0, -1.0, 10);
    assert_eq!(c.validate(), Err(Error::InvalidConfig("dt must be positive")));
    c.dt = 0.01;
    c.friction = -1.0;
    assert_eq!(c.validate(), Err(Error::InvalidFriction(-1.0)));
    c.friction = 0.0;
    c.kappa = -0.5;
    assert_eq!(c.validate(), Err(Error::InvalidResolution(-0.5)));
}
