//! Classical Langevin and generalized Langevin ensembles: the oracle the
//! wave dynamics is checked against.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::bath::{discretize_ohmic, memory_kernel, sample_bath_noise, BathSpec};
use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};
use crate::evolver::NoiseSpec;
use crate::field::PhysicalParams;
use crate::potentials::PotentialSpec;
use crate::rng::{self, derive_seed};

/// Particles per accumulation chunk. Chunks are merged in index order so the
/// ensemble statistics do not depend on how chunks are scheduled.
pub const PARTICLE_CHUNK: usize = 256;
/// Kernel values below this fraction of `|α(0)|` end the kernel support.
pub const KERNEL_CUTOFF: f64 = 1e-4;

/// Gaussian initial cloud in phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleCloud {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Memory {
    Markovian,
    Kernel(BathSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangevinConfig {
    pub params: PhysicalParams,
    pub potential: PotentialSpec,
    pub coupling: CouplingFunction,
    pub friction: f64,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub n_steps: usize,
    pub n_particles: usize,
    pub initial: ParticleCloud,
    pub memory: Memory,
    /// Longest kernel history a memory run may keep.
    pub history_cap: usize,
    /// Statistics are recorded every `record_stride` steps (and at step 0).
    pub record_stride: usize,
}

impl LangevinConfig {
    pub fn new(potential: PotentialSpec, initial: ParticleCloud, dt: f64, n_steps: usize, n_particles: usize) -> Self {
        Self {
            params: PhysicalParams::default(),
            potential,
            coupling: CouplingFunction::Linear,
            friction: 0.0,
            noise: NoiseSpec::Zero,
            dt,
            n_steps,
            n_particles,
            initial,
            memory: Memory::Markovian,
            history_cap: 1 << 20,
            record_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig("dt must be positive"));
        }
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("n_particles must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1"));
        }
        if !(self.friction >= 0.0) {
            return Err(Error::InvalidFriction(self.friction));
        }
        if !(self.initial.sigma_x >= 0.0 && self.initial.sigma_p >= 0.0) {
            return Err(Error::InvalidConfig("cloud widths must be non-negative"));
        }
        Ok(())
    }

    /// Recorded step indices.
    pub fn record_steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.n_steps).filter(move |n| n % self.record_stride == 0)
    }
}

struct Forces<'a> {
    config: &'a LangevinConfig,
}

impl Forces<'_> {
    fn conservative(&self, x: f64) -> Result<f64> {
        Ok(-self.config.potential.eval(x, 1)?)
    }

    fn slope(&self, x: f64) -> Result<f64> {
        self.config.coupling.eval(x, 1)
    }
}

fn check(x: f64, v: f64, t: f64) -> Result<(f64, f64)> {
    if x.is_finite() && v.is_finite() {
        Ok((x, v))
    } else {
        Err(Error::NumericalBlowup { t, last: None })
    }
}

/// One velocity-Verlet step of `m ẍ = −V′ − m α f′² ẋ + f′ ξ` with the
/// damping treated implicitly at the end of the step and the noise force
/// frozen at the start-of-step position.
pub fn langevin_step(x: f64, v: f64, config: &LangevinConfig, xi: f64) -> Result<(f64, f64)> {
    if config.coupling.is_linear() {
        langevin_step_additive(x, v, config, xi)
    } else {
        langevin_step_multiplicative(x, v, config, xi)
    }
}

pub fn langevin_step_multiplicative(x: f64, v: f64, config: &LangevinConfig, xi: f64) -> Result<(f64, f64)> {
    let forces = Forces { config };
    let fp0 = forces.slope(x)?;
    verlet(x, v, config, fp0, fp0 * xi, |y| forces.slope(y))
}

/// Specialization for `f(x) = x`; numerically identical to the generic path.
pub fn langevin_step_additive(x: f64, v: f64, config: &LangevinConfig, xi: f64) -> Result<(f64, f64)> {
    verlet(x, v, config, 1.0, xi, |_| Ok(1.0))
}

fn verlet(
    x: f64,
    v: f64,
    config: &LangevinConfig,
    fp0: f64,
    noise: f64,
    slope: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let forces = Forces { config };
    let (m, a, dt) = (config.params.mass, config.friction, config.dt);
    let gamma0 = a * fp0 * fp0;
    let v_half = v + 0.5 * dt * ((forces.conservative(x)? + noise) / m - gamma0 * v);
    let x1 = x + dt * v_half;
    let fp1 = slope(x1)?;
    let gamma1 = a * fp1 * fp1;
    let v1 = (v_half + 0.5 * dt * (forces.conservative(x1)? + noise) / m) / (1.0 + 0.5 * gamma1 * dt);
    check(x1, v1, f64::NAN)
}

/// Kernel samples `α(j·dt)` over its support.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub values: Vec<f64>,
}

impl KernelTable {
    /// Support ends after the last `j ≤ max_steps` with
    /// `|α(j·dt)| ≥ KERNEL_CUTOFF·|α(0)|`.
    pub fn new(bath: &BathSpec, dt: f64, max_steps: usize, cap: usize) -> Result<Self> {
        let all: Vec<f64> = (0..=max_steps).map(|j| memory_kernel(bath, j as f64 * dt)).collect();
        let floor = KERNEL_CUTOFF * all[0].abs();
        let needed = all.iter().rposition(|a| a.abs() >= floor && *a != 0.0).map_or(1, |j| j + 1);
        if needed > cap {
            return Err(Error::MemoryBudgetExceeded { needed, cap });
        }
        let mut values = all;
        values.truncate(needed);
        Ok(Self { values })
    }

    pub fn support(&self) -> usize {
        self.values.len()
    }
}

/// Particle state of the memory integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct GleState {
    pub x: f64,
    pub v: f64,
    pub step: usize,
    /// `f′(x_k) v_k`, newest first, at most the kernel support long.
    history: VecDeque<f64>,
    /// Memory integral `∫₀ᵗ α(t−s) f′ẋ ds` at the current step.
    memory: f64,
}

impl GleState {
    pub fn new(x: f64, v: f64, config: &LangevinConfig) -> Result<Self> {
        let g = config.coupling.eval(x, 1)? * v;
        Ok(Self { x, v, step: 0, history: VecDeque::from(vec![g]), memory: 0.0 })
    }

    pub fn memory_integral(&self) -> f64 {
        self.memory
    }
}

/// One step of `m ẍ = −V′ − m f′(x) ∫₀ᵗ α(t−s) f′(x(s)) ẋ(s) ds + f′ ξ`
/// with trapezoidal memory over the stored history.
pub fn gle_step(state: &mut GleState, kernel: &KernelTable, config: &LangevinConfig, xi: f64) -> Result<()> {
    let forces = Forces { config };
    let (m, dt) = (config.params.mass, config.dt);
    let k = &kernel.values;
    let fp0 = forces.slope(state.x)?;
    let noise = fp0 * xi;
    let a0 = (forces.conservative(state.x)? + noise) / m - fp0 * state.memory;
    let v_half = state.v + 0.5 * dt * a0;
    let x1 = state.x + dt * v_half;
    let fp1 = forces.slope(x1)?;

    // history[i] holds g at step n − i; in the new integral it sits at lag i + 1.
    let n1 = state.step + 1;
    let mut rest = 0.0;
    for (i, g) in state.history.iter().enumerate() {
        let lag = i + 1;
        if lag >= k.len() {
            break;
        }
        let w = if lag == n1 { 0.5 } else { 1.0 };
        rest += w * k[lag] * g;
    }
    rest *= dt;
    let end = 0.5 * dt * k[0];
    let rhs = v_half + 0.5 * dt * ((forces.conservative(x1)? + noise) / m - fp1 * rest);
    let v1 = rhs / (1.0 + 0.5 * dt * fp1 * end * fp1);
    let (x1, v1) = check(x1, v1, n1 as f64 * dt)?;

    let g1 = fp1 * v1;
    state.memory = end * g1 + rest;
    state.history.push_front(g1);
    state.history.truncate(k.len().max(1));
    state.x = x1;
    state.v = v1;
    state.step = n1;
    Ok(())
}

/// Running moment sums per recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    pub count: usize,
    /// `[Σx, Σx², Σx³, Σx⁴, Σp, Σp²]` per recorded time.
    pub sums: Vec<[f64; 6]>,
}

impl EnsembleAccumulator {
    pub fn new(n_times: usize) -> Self {
        Self { count: 0, sums: vec![[0.0; 6]; n_times] }
    }

    fn add(&mut self, i: usize, x: f64, p: f64) {
        let s = &mut self.sums[i];
        let x2 = x * x;
        s[0] += x;
        s[1] += x2;
        s[2] += x2 * x;
        s[3] += x2 * x2;
        s[4] += p;
        s[5] += p * p;
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub times: Vec<f64>,
    pub n_particles: usize,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    /// Standard errors of `mean_x`, `mean_p` and `var_x`.
    pub stderr_x: Vec<f64>,
    pub stderr_p: Vec<f64>,
    pub stderr_var_x: Vec<f64>,
}

impl ClassicalEnsemble {
    pub fn from_accumulator(acc: &EnsembleAccumulator, times: Vec<f64>) -> Self {
        let n = acc.count as f64;
        let bessel = if acc.count > 1 { n / (n - 1.0) } else { 1.0 };
        let mut out = Self {
            times,
            n_particles: acc.count,
            mean_x: Vec::new(),
            mean_p: Vec::new(),
            var_x: Vec::new(),
            var_p: Vec::new(),
            stderr_x: Vec::new(),
            stderr_p: Vec::new(),
            stderr_var_x: Vec::new(),
        };
        for s in &acc.sums {
            let mx = s[0] / n;
            let mp = s[4] / n;
            let vx = (s[1] / n - mx * mx).max(0.0);
            let vp = (s[5] / n - mp * mp).max(0.0);
            let m4 = s[3] / n - 4.0 * mx * s[2] / n + 6.0 * mx * mx * s[1] / n - 3.0 * mx.powi(4);
            out.mean_x.push(mx);
            out.mean_p.push(mp);
            out.var_x.push(vx * bessel);
            out.var_p.push(vp * bessel);
            out.stderr_x.push((vx * bessel / n).sqrt());
            out.stderr_p.push((vp * bessel / n).sqrt());
            out.stderr_var_x.push(((m4 - vx * vx).max(0.0) / n).sqrt());
        }
        out
    }
}

/// Noise source shared by every particle of an ensemble.
enum NoiseSource {
    Zero,
    White { sd: f64 },
    Bath { bath: BathSpec, temperature: f64, times: Vec<f64> },
}

impl NoiseSource {
    fn new(config: &LangevinConfig) -> Result<Self> {
        let times = || (0..=config.n_steps).map(|n| n as f64 * config.dt).collect();
        Ok(match &config.noise {
            NoiseSpec::Zero => NoiseSource::Zero,
            NoiseSpec::White { temperature } => NoiseSource::White {
                sd: (2.0 * config.params.mass * config.friction * temperature.max(0.0) / config.dt).sqrt(),
            },
            NoiseSpec::Ohmic(spec) => NoiseSource::Bath {
                bath: discretize_ohmic(spec, config.params.mass)?,
                temperature: spec.temperature,
                times: times(),
            },
            NoiseSpec::Bath { bath, temperature } => {
                NoiseSource::Bath { bath: bath.clone(), temperature: *temperature, times: times() }
            }
        })
    }

    /// Per-particle noise values, one per step.
    fn realize(&self, rng: &mut rng::Rng, n_steps: usize) -> Vec<f64> {
        match self {
            NoiseSource::Zero => vec![0.0; n_steps],
            NoiseSource::White { sd } => (0..n_steps)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                })
                .collect(),
            NoiseSource::Bath { bath, temperature, times } => {
                sample_bath_noise(bath, *temperature, &times[..n_steps], rng.next_u64()).values
            }
        }
    }
}

/// Simulates the particles with indices in `range` and sums their moments.
pub fn simulate_chunk(config: &LangevinConfig, seed: u64, range: Range<usize>) -> Result<EnsembleAccumulator> {
    config.validate()?;
    let source = NoiseSource::new(config)?;
    let kernel = match &config.memory {
        Memory::Markovian => None,
        Memory::Kernel(bath) => Some(KernelTable::new(bath, config.dt, config.n_steps, config.history_cap)?),
    };
    let n_times = config.record_steps().count();
    let mut acc = EnsembleAccumulator::new(n_times);
    let m = config.params.mass;
    let c = config.initial;
    for k in range {
        let mut r = rng::from_seed(derive_seed(seed, k as u64));
        let zx: f64 = StandardNormal.sample(&mut r);
        let zp: f64 = StandardNormal.sample(&mut r);
        let x = c.x0 + c.sigma_x * zx;
        let v = (c.p0 + c.sigma_p * zp) / m;
        let noise = source.realize(&mut r, config.n_steps);
        acc.count += 1;
        acc.add(0, x, m * v);
        let mut slot = 1;
        let stride = config.record_stride;
        match &kernel {
            None => {
                let (mut x, mut v) = (x, v);
                for (n, xi) in noise.iter().enumerate() {
                    (x, v) = langevin_step(x, v, config, *xi).map_err(|e| at_time(e, n, config))?;
                    if (n + 1) % stride == 0 {
                        acc.add(slot, x, m * v);
                        slot += 1;
                    }
                }
            }
            Some(table) => {
                let mut s = GleState::new(x, v, config)?;
                for (n, xi) in noise.iter().enumerate() {
                    gle_step(&mut s, table, config, *xi)?;
                    if (n + 1) % stride == 0 {
                        acc.add(slot, s.x, m * s.v);
                        slot += 1;
                    }
                }
            }
        }
    }
    Ok(acc)
}

fn at_time(e: Error, n: usize, config: &LangevinConfig) -> Error {
    match e {
        Error::NumericalBlowup { last, .. } => Error::NumericalBlowup { t: (n + 1) as f64 * config.dt, last },
        other => other,
    }
}

/// Chunk boundaries used by [`langevin_ensemble`].
pub fn particle_chunks(n_particles: usize) -> impl Iterator<Item = Range<usize>> {
    (0..n_particles).step_by(PARTICLE_CHUNK).map(move |s| s..(s + PARTICLE_CHUNK).min(n_particles))
}

/// Recorded times of an ensemble run.
pub fn record_times(config: &LangevinConfig) -> Vec<f64> {
    config.record_steps().map(|n| n as f64 * config.dt).collect()
}

/// Independent particles with per-particle streams derived from `seed`.
pub fn langevin_ensemble(config: &LangevinConfig, seed: u64) -> Result<ClassicalEnsemble> {
    config.validate()?;
    let mut total = EnsembleAccumulator::new(config.record_steps().count());
    for chunk in particle_chunks(config.n_particles) {
        total.merge(&simulate_chunk(config, seed, chunk)?);
    }
    Ok(ClassicalEnsemble::from_accumulator(&total, record_times(config)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Oscillator;

    fn harmonic(friction: f64, dt: f64, n: usize) -> LangevinConfig {
        let mut c = LangevinConfig::new(
            PotentialSpec::Harmonic { omega: 1.0, mass: 1.0 },
            ParticleCloud { x0: 2.0, p0: 0.0, sigma_x: 0.0, sigma_p: 0.0 },
            dt,
            n,
            1,
        );
        c.friction = friction;
        c
    }

    #[test]
    fn ballistic() {
        let mut c = harmonic(0.0, 0.01, 1);
        c.potential = PotentialSpec::Free;
        let (mut x, mut v) = (1.0, 0.5);
        for _ in 0..1000 {
            (x, v) = langevin_step(x, v, &c, 0.0).unwrap();
        }
        assert!((x - 6.0).abs() < 1e-12 && v == 0.5);
    }

    #[test]
    fn damped_oscillator_closed_form() {
        let a = 0.1;
        let period = 2.0 * core::f64::consts::PI;
        let dt = period / 1e4;
        let c = harmonic(a, dt, 1);
        let w = (1.0 - a * a / 4.0).sqrt();
        let (mut x, mut v) = (2.0, 0.0);
        let mut worst: f64 = 0.0;
        for n in 1..=20000 {
            (x, v) = langevin_step(x, v, &c, 0.0).unwrap();
            let t = n as f64 * dt;
            let e = 2.0 * (-a * t / 2.0).exp() * ((w * t).cos() + a / (2.0 * w) * (w * t).sin());
            worst = worst.max((x - e).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn additive_path_is_bit_compatible() {
        let c = harmonic(0.3, 0.01, 1);
        for &(x, v, xi) in &[(0.3, -1.2, 0.7), (2.0, 0.0, -3.1), (-5.5, 4.4, 0.0)] {
            assert_eq!(
                langevin_step_additive(x, v, &c, xi).unwrap(),
                langevin_step_multiplicative(x, v, &c, xi).unwrap()
            );
        }
    }

    #[test]
    fn single_particle_ensemble_is_the_trajectory() {
        let c = harmonic(0.1, 0.01, 300);
        let e = langevin_ensemble(&c, 9).unwrap();
        let (mut x, mut v) = (2.0, 0.0);
        for n in 0..300 {
            (x, v) = langevin_step(x, v, &c, 0.0).unwrap();
            assert_eq!(e.mean_x[n + 1], x);
            assert_eq!(e.mean_p[n + 1], v);
        }
        let mut many = c.clone();
        many.n_particles = 600;
        let e2 = langevin_ensemble(&many, 1).unwrap();
        for (a, b) in e.mean_x.iter().zip(&e2.mean_x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_support_and_cap() {
        let bath = BathSpec::new(vec![Oscillator { mass: 1.0, frequency: 1.0, coupling: 0.5 }], 1.0).unwrap();
        assert_eq!(KernelTable::new(&bath, 0.1, 50, 100).unwrap().support(), 51);
        assert_eq!(
            KernelTable::new(&bath, 0.1, 50, 10),
            Err(Error::MemoryBudgetExceeded { needed: 51, cap: 10 })
        );
    }

    #[test]
    fn zero_kernel_is_conservative() {
        let bath = BathSpec::new(vec![Oscillator { mass: 1.0, frequency: 1.0, coupling: 0.0 }], 1.0).unwrap();
        let mut c = harmonic(0.0, 1e-4, 1);
        c.memory = Memory::Kernel(bath.clone());
        let table = KernelTable::new(&bath, c.dt, 100, 1000).unwrap();
        let mut s = GleState::new(2.0, 0.0, &c).unwrap();
        for _ in 0..60000 {
            gle_step(&mut s, &table, &c, 0.0).unwrap();
        }
        let e = 0.5 * s.v * s.v + 0.5 * s.x * s.x;
        assert!((e - 2.0).abs() < 1e-8 * 2.0, "{e}");
    }
}
