//! Discrete harmonic bath: memory kernel, Ohmic discretization and noise
//! realizations (explicit bath form and the Markovian white-noise limit).
//!
//! The paper-level symbol clash between the memory kernel and the Ohmic
//! friction constant is resolved by naming: [`memory_kernel`] returns the
//! kernel value, `friction` is always the Ohmic constant.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub mass: f64,
    pub frequency: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    oscillators: Vec<Oscillator>,
    system_mass: f64,
}

impl BathSpec {
    pub fn new(oscillators: Vec<Oscillator>, system_mass: f64) -> Result<Self> {
        if oscillators.is_empty() {
            return Err(Error::EmptyBath);
        }
        if oscillators.iter().any(|o| !(o.mass > 0.0 && o.frequency > 0.0)) {
            return Err(Error::InvalidBath("oscillator masses and frequencies must be positive"));
        }
        if oscillators.iter().any(|o| !o.coupling.is_finite()) {
            return Err(Error::InvalidBath("couplings must be finite"));
        }
        if !(system_mass > 0.0) {
            return Err(Error::InvalidBath("system mass must be positive"));
        }
        Ok(Self { oscillators, system_mass })
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.oscillators
    }

    pub fn system_mass(&self) -> f64 {
        self.system_mass
    }
}

/// Ohmic spectral density with a sharp cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicSpec {
    pub friction: f64,
    pub cutoff: f64,
    pub n_oscillators: usize,
    pub temperature: f64,
}

impl OhmicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.friction >= 0.0) {
            return Err(Error::InvalidFriction(self.friction));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidBath("cutoff must be positive"));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidBath("temperature must be non-negative"));
        }
        if self.n_oscillators == 0 {
            return Err(Error::EmptyBath);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Bath,
    White,
    Zero,
}

/// Sampled `ξ(t_n)` on a uniform time axis, with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub kind: NoiseKind,
}

impl NoiseRealization {
    pub fn zero(times: Vec<f64>) -> Self {
        let values = alloc::vec![0.0; times.len()];
        Self { times, values, seed: 0, kind: NoiseKind::Zero }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(1/m) Σ d_i²/(m_i ω_i²) cos(ω_i t)`.
pub fn memory_kernel(bath: &BathSpec, t: f64) -> f64 {
    bath.oscillators
        .iter()
        .map(|o| o.coupling * o.coupling / (o.mass * o.frequency * o.frequency) * (o.frequency * t).cos())
        .sum::<f64>()
        / bath.system_mass
}

/// Equally spaced frequencies `ω_i = iΔω`, `Δω = ω_c/N`, unit masses and
/// `d_i = ω_i √(2 m α m_i Δω / π)`, so the kernel approaches
/// `(2α/π) sin(ω_c t)/t` and integrates to the friction constant.
pub fn discretize_ohmic(spec: &OhmicSpec, system_mass: f64) -> Result<BathSpec> {
    if spec.n_oscillators == 0 {
        return Err(Error::EmptyBath);
    }
    spec.validate()?;
    let dw = spec.cutoff / spec.n_oscillators as f64;
    let oscillators = (1..=spec.n_oscillators)
        .map(|i| {
            let w = i as f64 * dw;
            Oscillator {
                mass: 1.0,
                frequency: w,
                coupling: w * (2.0 * system_mass * spec.friction * dw / PI).sqrt(),
            }
        })
        .collect();
    BathSpec::new(oscillators, system_mass)
}

/// Noise force of a bath prepared in classical thermal equilibrium around the
/// shifted minimum: `q_i ~ N(0, T/(m_i ω_i²))`, `p_i ~ N(0, m_i T)`, then
/// `ξ(t) = −Σ d_i q_i cos(ω_i t) − Σ d_i p_i/(m_i ω_i) sin(ω_i t)`.
pub fn sample_bath_noise(bath: &BathSpec, temperature: f64, times: &[f64], seed: u64) -> NoiseRealization {
    let mut rng = rng::from_seed(seed);
    let t = temperature.max(0.0);
    let amplitudes: Vec<(f64, f64, f64)> = bath
        .oscillators
        .iter()
        .map(|o| {
            let z_q: f64 = StandardNormal.sample(&mut rng);
            let z_p: f64 = StandardNormal.sample(&mut rng);
            let q = z_q * (t / (o.mass * o.frequency * o.frequency)).sqrt();
            let p = z_p * (o.mass * t).sqrt();
            (o.frequency, -o.coupling * q, -o.coupling * p / (o.mass * o.frequency))
        })
        .collect();
    let values = times
        .iter()
        .map(|&time| {
            amplitudes
                .iter()
                .map(|&(w, c, s)| {
                    let (sin, cos) = (w * time).sin_cos();
                    c * cos + s * sin
                })
                .sum()
        })
        .collect();
    NoiseRealization { times: times.to_vec(), values, seed, kind: NoiseKind::Bath }
}

/// Piecewise-constant white noise with per-step variance `2 m α T / dt`.
pub fn white_noise(
    friction: f64,
    temperature: f64,
    system_mass: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<NoiseRealization> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("dt must be positive"));
    }
    if !(friction >= 0.0) {
        return Err(Error::InvalidFriction(friction));
    }
    let sd = (2.0 * system_mass * friction * temperature.max(0.0) / dt).sqrt();
    let mut rng = rng::from_seed(seed);
    let values = (0..n_steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect();
    let times = (0..n_steps).map(|n| n as f64 * dt).collect();
    Ok(NoiseRealization { times, values, seed, kind: NoiseKind::White })
}
