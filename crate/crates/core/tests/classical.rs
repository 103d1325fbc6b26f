use gsle_core::bath::{discretize_ohmic, BathSpec, OhmicSpec, Oscillator};
use gsle_core::classical::{
    gle_step, langevin_ensemble, langevin_step, particle_chunks, record_times, simulate_chunk, ClassicalEnsemble,
    EnsembleAccumulator, GleState, KernelTable, LangevinConfig, Memory, ParticleCloud,
};
use gsle_core::coupling::CouplingFunction;
use gsle_core::evolver::NoiseSpec;
use gsle_core::potentials::PotentialSpec;

fn harmonic() -> PotentialSpec {
    PotentialSpec::Harmonic { omega: 1.0, mass: 1.0 }
}

fn point(x0: f64) -> ParticleCloud {
    ParticleCloud { x0, p0: 0.0, sigma_x: 0.0, sigma_p: 0.0 }
}

/// System plus one explicit bath oscillator, `H_B = p₁²/2m₁ + ½m₁ω₁²(x₁ + d₁f/(m₁ω₁²))²`.
fn two_body(x0: f64, m1: f64, w1: f64, d1: f64, t_end: f64, h: f64) -> Vec<f64> {
    let rhs = |s: [f64; 4]| {
        let [x, v, y, u] = s;
        let shifted = y + d1 * x / (m1 * w1 * w1);
        [v, -x - d1 * shifted, u, -w1 * w1 * y - d1 * x / m1]
    };
    let mut s = [x0, 0.0, -d1 * x0 / (m1 * w1 * w1), 0.0];
    let n = (t_end / h).round() as usize;
    let mut xs = vec![x0];
    for _ in 0..n {
        let k1 = rhs(s);
        let k2 = rhs(std::array::from_fn(|i| s[i] + 0.5 * h * k1[i]));
        let k3 = rhs(std::array::from_fn(|i| s[i] + 0.5 * h * k2[i]));
        let k4 = rhs(std::array::from_fn(|i| s[i] + h * k3[i]));
        s = std::array::from_fn(|i| s[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
        xs.push(s[0]);
    }
    xs
}

#[test]
fn memory_reproduces_two_body_dynamics() {
    let (m1, w1, d1) = (1.0, 2.0, 0.8);
    let bath = BathSpec::new(vec![Oscillator { mass: m1, frequency: w1, coupling: d1 }], 1.0).unwrap();
    let dt = 0.001;
    let n = 10_000;
    let mut c = LangevinConfig::new(harmonic(), point(1.0), dt, n, 1);
    c.memory = Memory::Kernel(bath.clone());
    let table = KernelTable::new(&bath, dt, n, c.history_cap).unwrap();
    let reference = two_body(1.0, m1, w1, d1, n as f64 * dt, dt / 4.0);
    let mut s = GleState::new(1.0, 0.0, &c).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        gle_step(&mut s, &table, &c, 0.0).unwrap();
        worst = worst.max((s.x - reference[4 * k]).abs());
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn sharp_kernel_approaches_markovian_friction() {
    let alpha = 0.5;
    let dt = 0.002;
    let n = 2500;
    let mut markov = LangevinConfig::new(harmonic(), point(2.0), dt, n, 1);
    markov.friction = alpha;
    let (mut x, mut v) = (2.0, 0.0);
    let mut reference = vec![x];
    for _ in 0..n {
        (x, v) = langevin_step(x, v, &markov, 0.0).unwrap();
        reference.push(x);
    }
    let deviation = |cutoff: f64| {
        let spec = OhmicSpec { friction: alpha, cutoff, n_oscillators: (cutoff * 100.0) as usize, temperature: 0.0 };
        let bath = discretize_ohmic(&spec, 1.0).unwrap();
        let mut c = markov.clone();
        c.memory = Memory::Kernel(bath.clone());
        let table = KernelTable::new(&bath, dt, n, c.history_cap).unwrap();
        let mut s = GleState::new(2.0, 0.0, &c).unwrap();
        let mut worst: f64 = 0.0;
        for r in &reference[1..] {
            gle_step(&mut s, &table, &c, 0.0).unwrap();
            worst = worst.max((s.x - r).abs());
        }
        worst / 2.0
    };
    let (coarse, fine) = (deviation(20.0), deviation(100.0));
    assert!(fine < coarse, "{coarse} {fine}");
    assert!(fine < 0.02, "{fine}");
}

#[test]
fn equipartition() {
    let mut c = LangevinConfig::new(PotentialSpec::Free, point(0.0), 0.005, 2000, 4000);
    c.friction = 1.0;
    c.noise = NoiseSpec::White { temperature: 0.5 };
    c.record_stride = 100;
    let e = langevin_ensemble(&c, 5).unwrap();
    let late: Vec<f64> = e.times.iter().zip(&e.var_p).filter(|(t, _)| **t >= 5.0).map(|(_, v)| *v).collect();
    let mean = late.iter().sum::<f64>() / late.len() as f64;
    assert!((mean - 0.5).abs() < 0.02 * 0.5, "{mean}");
}

#[test]
fn gibbs_variance() {
    let mut c = LangevinConfig::new(harmonic(), point(0.0), 0.01, 3000, 4000);
    c.friction = 0.5;
    c.noise = NoiseSpec::White { temperature: 0.3 };
    c.record_stride = 3000;
    let e = langevin_ensemble(&c, 8).unwrap();
    let (v, se) = (*e.var_x.last().unwrap(), *e.stderr_var_x.last().unwrap());
    assert!((v - 0.3).abs() < 3.0 * se, "{v} ± {se}");
    assert!(e.mean_x.last().unwrap().abs() < 3.0 * e.stderr_x.last().unwrap());
}

#[test]
fn multiplicative_noise_runs_and_is_deterministic() {
    let mut c = LangevinConfig::new(harmonic(), ParticleCloud { x0: 1.0, p0: 0.0, sigma_x: 0.5, sigma_p: 1.0 }, 0.01, 200, 700);
    c.friction = 0.1;
    c.coupling = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
    c.noise = NoiseSpec::White { temperature: 0.05 };
    let a = langevin_ensemble(&c, 3).unwrap();
    assert_eq!(a, langevin_ensemble(&c, 3).unwrap());
    let mut total = EnsembleAccumulator::new(a.times.len());
    let parts: Vec<EnsembleAccumulator> = particle_chunks(c.n_particles).map(|r| simulate_chunk(&c, 3, r).unwrap()).collect();
    for p in &parts {
        total.merge(p);
    }
    assert_eq!(ClassicalEnsemble::from_accumulator(&total, record_times(&c)), a);
    assert!(a.var_x.iter().all(|v| v.is_finite() && *v >= 0.0));
}

#[test]
fn zero_spread_cloud_tracks_single_trajectory() {
    let mut c = LangevinConfig::new(harmonic(), point(2.0), 0.01, 500, 300);
    c.friction = 0.1;
    let e = langevin_ensemble(&c, 1).unwrap();
    let (mut x, mut v) = (2.0, 0.0);
    for n in 0..500 {
        (x, v) = langevin_step(x, v, &c, 0.0).unwrap();
        assert!((e.mean_x[n + 1] - x).abs() < 1e-13);
    }
    let _ = v;
}

/// Strong and weak convergence under common noise: coarse steps see the
/// average of the fine piecewise-constant noise over their span.
#[test]
fn time_step_convergence() {
    let t_end = 2.0;
    let fine_dt = 0.0005;
    let n_fine = (t_end / fine_dt) as usize;
    let paths = 2000;
    let mut c = LangevinConfig::new(harmonic(), point(1.0), fine_dt, n_fine, 1);
    c.friction = 0.5;
    let sd = (2.0 * 0.5 * 0.5 / fine_dt).sqrt();
    let noises: Vec<Vec<f64>> = (0..paths)
        .map(|k| gsle_core::bath::white_noise(0.5, 0.5, 1.0, fine_dt, n_fine, k as u64).unwrap().values)
        .collect();
    assert!((noises[0].iter().map(|v| v * v).sum::<f64>() / n_fine as f64).sqrt() > 0.5 * sd);
    let endpoint = |factor: usize, noise: &[f64]| {
        let mut cc = c.clone();
        cc.dt = fine_dt * factor as f64;
        let (mut x, mut v) = (1.0, 0.0);
        for chunk in noise.chunks(factor) {
            let xi = chunk.iter().sum::<f64>() / factor as f64;
            (x, v) = langevin_step(x, v, &cc, xi).unwrap();
        }
        x
    };
    let reference: Vec<f64> = noises.iter().map(|n| endpoint(1, n)).collect();
    let errors: Vec<(f64, f64)> = [64usize, 32, 16]
        .iter()
        .map(|&f| {
            let ends: Vec<f64> = noises.iter().map(|n| endpoint(f, n)).collect();
            let strong = ends.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>() / paths as f64;
            let weak = (ends.iter().map(|a| a * a).sum::<f64>() - reference.iter().map(|a| a * a).sum::<f64>()).abs()
                / paths as f64;
            (strong, weak)
        })
        .collect();
    for w in errors.windows(2) {
        let strong_order = (w[0].0 / w[1].0).log2();
        let weak_order = (w[0].1 / w[1].1).log2();
        assert!(strong_order >= 0.5, "strong {strong_order} {errors:?}");
        assert!(weak_order >= 1.0 - 0.2, "weak {weak_order} {errors:?}");
    }
}
