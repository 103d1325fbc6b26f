//! Split-operator propagation of the generalized Schrödinger-Langevin
//! equation, run records and the averaged-Langevin (Ehrenfest) residual.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::bath::{discretize_ohmic, sample_bath_noise, white_noise, BathSpec, NoiseRealization, OhmicSpec};
use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};
use crate::field::{observables, ComplexField, Grid, ObservableSet, PhysicalParams, RealField, WaveFunction};
use crate::potentials::{
    current_samples, dissipative_samples, first_derivative, log_density_deviation, DampingSign, MeasurementSign,
    PotentialSpec, DENSITY_FLOOR,
};

/// Stability guard threshold on `dt·max|U|/ħ`.
pub const STABILITY_LIMIT: f64 = 0.5;
/// Boundary density above which a run is flagged as contaminated.
pub const BOUNDARY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Zero,
    /// Markovian limit at temperature `T`, using the run's friction.
    White { temperature: f64 },
    /// Ohmic bath discretized from its spectral parameters.
    Ohmic(OhmicSpec),
    Bath { bath: BathSpec, temperature: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `exp(−(x−x₀)²/4σ² + i p₀ x/ħ)`, normalized.
    Gaussian { x0: f64, p0: f64, sigma: f64 },
    /// Harmonic-oscillator eigenstate; requires a harmonic potential.
    Eigenstate { index: usize },
    /// Raw samples on the grid, normalized on preparation.
    Samples(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub potential: PotentialSpec,
    pub coupling: CouplingFunction,
    pub friction: f64,
    pub noise: NoiseSpec,
    pub kappa: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub sign: DampingSign,
    pub measurement_sign: MeasurementSign,
    pub initial_state: InitialState,
    /// Snapshot every `snapshot_stride` steps; 0 disables snapshots.
    pub snapshot_stride: usize,
}

impl SimConfig {
    /// Defaults: free particle at rest, linear coupling, no dissipation.
    pub fn new(grid: Grid, potential: PotentialSpec, initial_state: InitialState, dt: f64, n_steps: usize) -> Self {
        Self {
            grid,
            params: PhysicalParams::default(),
            potential,
            coupling: CouplingFunction::Linear,
            friction: 0.0,
            noise: NoiseSpec::Zero,
            kappa: 0.0,
            dt,
            n_steps,
            seed: 0,
            sign: DampingSign::Damping,
            measurement_sign: MeasurementSign::Localizing,
            initial_state,
            snapshot_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig("dt must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be at least 1"));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(Error::InvalidFriction(self.friction));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidResolution(self.kappa));
        }
        match &self.noise {
            NoiseSpec::Zero => {}
            NoiseSpec::White { temperature } | NoiseSpec::Bath { temperature, .. } => {
                if !(*temperature >= 0.0) {
                    return Err(Error::InvalidConfig("temperature must be non-negative"));
                }
            }
            NoiseSpec::Ohmic(spec) => spec.validate()?,
        }
        match &self.initial_state {
            InitialState::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                return Err(Error::InvalidConfig("initial width must be positive"))
            }
            InitialState::Eigenstate { .. } if !matches!(self.potential, PotentialSpec::Harmonic { .. }) => {
                return Err(Error::InvalidConfig("eigenstate initial state needs a harmonic potential"))
            }
            InitialState::Samples(s) if s.len() != self.grid.n_points() => {
                return Err(Error::InvalidConfig("initial samples do not match the grid"))
            }
            _ => {}
        }
        self.potential.sample(&self.grid, 0)?;
        self.coupling.sample(&self.grid)?;
        Ok(())
    }

    /// Noise values `ξ(t_n)`, `t_n = n·dt`, `n = 0..=n_steps`.
    pub fn noise_realization(&self) -> Result<NoiseRealization> {
        let times: Vec<f64> = (0..=self.n_steps).map(|n| n as f64 * self.dt).collect();
        Ok(match &self.noise {
            NoiseSpec::Zero => NoiseRealization::zero(times),
            NoiseSpec::White { temperature } => white_noise(
                self.friction,
                *temperature,
                self.params.mass,
                self.dt,
                self.n_steps + 1,
                self.seed,
            )?,
            NoiseSpec::Ohmic(spec) => {
                let bath = discretize_ohmic(spec, self.params.mass)?;
                sample_bath_noise(&bath, spec.temperature, &times, self.seed)
            }
            NoiseSpec::Bath { bath, temperature } => sample_bath_noise(bath, *temperature, &times, self.seed),
        })
    }

    pub fn initial_wavefunction(&self) -> Result<WaveFunction> {
        let g = &self.grid;
        let hbar = self.params.hbar;
        let psi = match &self.initial_state {
            InitialState::Gaussian { x0, p0, sigma } => ComplexField::from_fn(g, |x| {
                let d = x - x0;
                Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), p0 * x / hbar)
            })?,
            InitialState::Eigenstate { index } => {
                let PotentialSpec::Harmonic { omega, mass } = self.potential else {
                    return Err(Error::InvalidConfig("eigenstate initial state needs a harmonic potential"));
                };
                let m = self.params.mass;
                let w = (mass * omega * omega / m).sqrt();
                let scale = (m * w / hbar).sqrt();
                ComplexField::from_fn(g, |x| Complex64::new(hermite_function(*index, scale * x), 0.0))?
            }
            InitialState::Samples(s) => ComplexField::new(g.clone(), s.clone())?,
        };
        psi.normalized()
    }
}

/// Normalized Hermite function `h_n(ξ)` by the stable three-term recurrence.
fn hermite_function(n: usize, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub psi: WaveFunction,
    /// Index of the noise value driving the next step.
    pub noise_cursor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRow {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub energy: f64,
    /// Density-weighted mean of the friction potential.
    pub gauge: f64,
    pub xi: f64,
    pub boundary_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub psi: WaveFunction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunWarning {
    /// First time the boundary density exceeded the limit.
    BoundaryContamination { t: f64, boundary_density: f64 },
    /// First time `dt·max|U|/ħ` over the support reached the limit.
    StabilityGuard { t: f64, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RecordRow>,
    pub snapshots: Vec<Snapshot>,
    pub warnings: Vec<RunWarning>,
    pub sign: DampingSign,
    pub seed: u64,
}

/// Potential `U = V + V_d − W + V_r` plus the measurement exponent for one
/// state.
struct StepPotential {
    real: Vec<f64>,
    /// Growth rate per unit time from the measurement term.
    growth: Vec<f64>,
    max_abs: f64,
}

/// Precomputed operators for a fixed configuration.
pub struct Propagator<'a> {
    config: &'a SimConfig,
    kinetic_half: Vec<Complex64>,
    v: RealField,
    f: Vec<f64>,
    fprime_sq: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(config: &'a SimConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.grid;
        let p = &config.params;
        let tau = config.dt / 2.0;
        let kinetic_half = g
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0, -p.hbar * k * k * tau / (2.0 * p.mass)))
            .collect();
        let c = config.coupling.sample(g)?;
        Ok(Self {
            config,
            kinetic_half,
            v: config.potential.sample(g, 0)?,
            fprime_sq: c.first_squared(),
            f: c.value.into_values(),
        })
    }

    pub fn potential(&self) -> &RealField {
        &self.v
    }

    fn kinetic(&self, data: &mut [Complex64]) {
        let g = &self.config.grid;
        g.forward(data);
        for (z, k) in data.iter_mut().zip(&self.kinetic_half) {
            *z *= k;
        }
        g.inverse(data);
    }

    fn gauge_of(&self, psi: &[Complex64]) -> f64 {
        let cfg = self.config;
        if cfg.friction == 0.0 {
            return 0.0;
        }
        let g = &cfg.grid;
        let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let d = first_derivative(g, psi);
        let j = current_samples(psi, &d, &cfg.params);
        dissipative_samples(g, &rho, &j, &self.fprime_sq, cfg.friction, &cfg.params, cfg.sign).1
    }

    fn evaluate(&self, psi: &[Complex64], xi: f64) -> StepPotential {
        let cfg = self.config;
        let g = &cfg.grid;
        let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let mut real: Vec<f64> = self.v.values().iter().zip(&self.f).map(|(v, f)| v - f * xi).collect();
        if cfg.friction > 0.0 {
            let d = first_derivative(g, psi);
            let j = current_samples(psi, &d, &cfg.params);
            let (vd, w) = dissipative_samples(g, &rho, &j, &self.fprime_sq, cfg.friction, &cfg.params, cfg.sign);
            for (u, v) in real.iter_mut().zip(&vd) {
                *u += v - w;
            }
        }
        let growth = if cfg.kappa > 0.0 {
            let s = -cfg.measurement_sign.factor() * cfg.kappa;
            log_density_deviation(&rho).into_iter().map(|u| s * u).collect()
        } else {
            vec![0.0; psi.len()]
        };
        let peak = rho.iter().fold(0.0_f64, |m, &r| m.max(r));
        let eps = DENSITY_FLOOR * peak;
        let hbar = cfg.params.hbar;
        let max_abs = (0..psi.len())
            .filter(|&j| rho[j] >= eps)
            .fold(0.0_f64, |m, j| m.max(real[j].hypot(hbar * growth[j])));
        StepPotential { real, growth, max_abs }
    }

    fn apply_potential(&self, data: &mut [Complex64], u: &StepPotential, tau: f64) {
        let hbar = self.config.params.hbar;
        for ((z, r), g) in data.iter_mut().zip(&u.real).zip(&u.growth) {
            *z *= Complex64::from_polar((g * tau).exp(), -r * tau / hbar);
        }
    }

    /// One Strang step. Nonlinear terms are evaluated at the explicit
    /// midpoint of the potential sub-step. Returns the new state and
    /// `dt·max|U|/ħ` at the midpoint.
    pub fn step(&self, state: &SimState, xi: f64) -> Result<(SimState, f64)> {
        let dt = self.config.dt;
        let mut a = state.psi.values().to_vec();
        self.kinetic(&mut a);
        let ua = self.evaluate(&a, xi);
        let mut half = a.clone();
        self.apply_potential(&mut half, &ua, dt / 2.0);
        let um = self.evaluate(&half, xi);
        self.apply_potential(&mut a, &um, dt);
        self.kinetic(&mut a);
        let t = state.t + dt;
        if a.iter().any(|z| !z.is_finite()) {
            let last = observables(&state.psi, &self.v, &self.config.params).ok();
            return Err(Error::NumericalBlowup { t, last });
        }
        let psi = WaveFunction::from_parts_unchecked(self.config.grid.clone(), a);
        let ratio = dt * um.max_abs / self.config.params.hbar;
        Ok((SimState { t, psi, noise_cursor: state.noise_cursor + 1 }, ratio))
    }

    fn row(&self, state: &SimState, xi: f64) -> Result<RecordRow> {
        let o = observables(&state.psi, &self.v, &self.config.params)?;
        Ok(row_from(state.t, &o, self.gauge_of(state.psi.values()), xi))
    }
}

fn row_from(t: f64, o: &ObservableSet, gauge: f64, xi: f64) -> RecordRow {
    RecordRow {
        t,
        norm: o.norm,
        mean_x: o.mean_x,
        mean_p: o.mean_p,
        var_x: o.var_x,
        energy: o.energy,
        gauge,
        xi,
        boundary_density: o.boundary_density,
    }
}

/// Single step for an arbitrary state; builds the operators each call.
pub fn step(state: &SimState, config: &SimConfig, xi: f64) -> Result<SimState> {
    Propagator::new(config)?.step(state, xi).map(|(s, _)| s)
}

/// Full run: noise sampled once, observables every step, snapshots at the
/// configured stride.
pub fn run(config: &SimConfig) -> Result<RunRecord> {
    let prop = Propagator::new(config)?;
    let noise = config.noise_realization()?;
    run_with_noise(&prop, &noise)
}

pub fn run_with_noise(prop: &Propagator<'_>, noise: &NoiseRealization) -> Result<RunRecord> {
    let config = prop.config;
    if noise.len() < config.n_steps + 1 {
        return Err(Error::InsufficientData("noise realization shorter than the run"));
    }
    let mut state = SimState { t: 0.0, psi: config.initial_wavefunction()?, noise_cursor: 0 };
    let mut rows = Vec::with_capacity(config.n_steps + 1);
    let mut snapshots = Vec::new();
    let mut warnings = Vec::new();
    let stride = config.snapshot_stride;
    let mut boundary_flagged = false;
    let mut stability_flagged = false;
    for n in 0..=config.n_steps {
        let xi = noise.values[n];
        let row = prop.row(&state, xi)?;
        if !boundary_flagged && row.boundary_density > BOUNDARY_LIMIT {
            boundary_flagged = true;
            warnings.push(RunWarning::BoundaryContamination { t: row.t, boundary_density: row.boundary_density });
        }
        rows.push(row);
        if stride > 0 && n % stride == 0 {
            snapshots.push(Snapshot { step: n, t: state.t, psi: state.psi.clone() });
        }
        if n == config.n_steps {
            break;
        }
        let (next, ratio) = prop.step(&state, xi)?;
        if !stability_flagged && ratio >= STABILITY_LIMIT {
            stability_flagged = true;
            warnings.push(RunWarning::StabilityGuard { t: state.t, ratio });
        }
        state = SimState { t: (n + 1) as f64 * config.dt, ..next };
    }
    Ok(RunRecord { rows, snapshots, warnings, sign: config.sign, seed: config.seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub t: f64,
    pub residual: f64,
}

/// `m d²⟨x⟩/dt² + m α ∫J̃ dx + ⟨V′⟩ − ⟨f′⟩ ξ` at every interior snapshot,
/// with the second derivative from the per-step rows and `ξ` averaged over
/// the two adjacent steps.
pub fn ehrenfest_residual(record: &RunRecord, config: &SimConfig) -> Result<Vec<ResidualSample>> {
    if record.rows.len() < 3 {
        return Err(Error::InsufficientData("need at least three recorded steps"));
    }
    let g = &config.grid;
    let p = &config.params;
    let c = config.coupling.sample(g)?;
    let fprime = c.first.values();
    let vprime = config.potential.sample(g, 1)?.into_values();
    let dt = config.dt;
    let rows = &record.rows;
    let mut out = Vec::new();
    for snap in &record.snapshots {
        let n = snap.step;
        if n == 0 || n + 1 >= rows.len() {
            continue;
        }
        let z = snap.psi.values();
        let d = first_derivative(g, z);
        let j = current_samples(z, &d, p);
        let (mut norm, mut mean_vp, mut mean_fp, mut flux) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..z.len() {
            let r = z[k].norm_sqr();
            norm += r;
            mean_vp += vprime[k] * r;
            mean_fp += fprime[k] * r;
            flux += fprime[k] * fprime[k] * j[k];
        }
        if !(norm > 0.0) {
            return Err(Error::DegenerateState);
        }
        let accel = (rows[n + 1].mean_x - 2.0 * rows[n].mean_x + rows[n - 1].mean_x) / (dt * dt);
        let xi = 0.5 * (rows[n - 1].xi + rows[n].xi);
        let residual = p.mass * accel + p.mass * config.friction * flux / norm
            + mean_vp / norm
            - mean_fp / norm * xi;
        out.push(ResidualSample { t: snap.t, residual });
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no interior snapshots"));
    }
    Ok(out)
}
