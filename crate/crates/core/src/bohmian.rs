//! Polar (Bohmian) picture of the wavefunction: amplitude and unwrapped
//! action, guiding momentum, coupling-dependent phase, trajectory ensembles
//! and the weak-value field.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::Rng as _;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};
use crate::evolver::Snapshot;
use crate::field::{cumulative_integral_samples, Grid, PhysicalParams, RealField, WaveFunction};
use crate::potentials::{first_derivative, DENSITY_FLOOR};
use crate::rng;

/// `ψ = A e^{iS/ħ}` with `S` unwrapped and node cells flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub amplitude: RealField,
    pub action: RealField,
    /// True where `|ψ|² < ε_den`.
    pub node_mask: Vec<bool>,
    psi: WaveFunction,
}

impl PolarField {
    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }

    /// The wavefunction this decomposition was taken from.
    pub fn source(&self) -> &WaveFunction {
        &self.psi
    }

    /// `A e^{iS/ħ}`.
    pub fn reconstruct(&self, params: &PhysicalParams) -> WaveFunction {
        let values = self
            .amplitude
            .values()
            .iter()
            .zip(self.action.values())
            .map(|(a, s)| Complex64::from_polar(*a, s / params.hbar))
            .collect();
        WaveFunction::from_parts_unchecked(self.grid().clone(), values)
    }
}

/// Splits `ψ` into amplitude and action. The phase is unwrapped outward in
/// both directions from the density maximum; cells below the density floor
/// are masked and their action linearly interpolated (held constant past the
/// last unmasked cell at either edge).
pub fn polar_decompose(psi: &WaveFunction, params: &PhysicalParams) -> Result<PolarField> {
    let z = psi.values();
    let n = z.len();
    let rho: Vec<f64> = z.iter().map(|z| z.norm_sqr()).collect();
    let (anchor, peak) = rho
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(i, m), (j, &r)| if r > m { (j, r) } else { (i, m) });
    if !(peak > 0.0) {
        return Err(Error::DegenerateState);
    }
    let eps = DENSITY_FLOOR * peak;
    let mask: Vec<bool> = rho.iter().map(|&r| r < eps).collect();
    let hbar = params.hbar;
    let turn = 2.0 * PI * hbar;

    let mut s = vec![0.0; n];
    s[anchor] = hbar * z[anchor].arg();
    let unwrap = |range: &mut dyn Iterator<Item = usize>, s: &mut [f64]| {
        let mut last = s[anchor];
        for j in range {
            if mask[j] {
                continue;
            }
            let raw = hbar * z[j].arg();
            let v = raw + turn * ((last - raw) / turn).round();
            s[j] = v;
            last = v;
        }
    };
    unwrap(&mut (anchor + 1..n), &mut s);
    unwrap(&mut (0..anchor).rev(), &mut s);

    fill_masked(&mut s, &mask);
    Ok(PolarField {
        amplitude: RealField::from_parts_unchecked(psi.grid().clone(), rho.iter().map(|r| r.sqrt()).collect()),
        action: RealField::from_parts_unchecked(psi.grid().clone(), s),
        node_mask: mask,
        psi: psi.clone(),
    })
}

fn fill_masked(s: &mut [f64], mask: &[bool]) {
    let n = s.len();
    let mut j = 0;
    while j < n {
        if !mask[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && mask[j] {
            j += 1;
        }
        match (start.checked_sub(1), (j < n).then_some(j)) {
            (Some(l), Some(r)) => {
                let span = (r - l) as f64;
                for k in start..j {
                    s[k] = s[l] + (s[r] - s[l]) * (k - l) as f64 / span;
                }
            }
            (Some(edge), None) | (None, Some(edge)) => {
                let v = s[edge];
                s[start..j].iter_mut().for_each(|x| *x = v);
            }
            (None, None) => {}
        }
    }
}

fn guiding_samples(polar: &PolarField, params: &PhysicalParams) -> Vec<f64> {
    let z = polar.psi.values();
    let d = first_derivative(polar.grid(), z);
    let s = polar.action.values();
    let n = z.len();
    let dx = polar.grid().dx();
    (0..n)
        .map(|j| {
            if polar.node_mask[j] {
                let (l, r) = (j.saturating_sub(1), (j + 1).min(n - 1));
                (s[r] - s[l]) / ((r - l) as f64 * dx)
            } else {
                params.hbar * (z[j].conj() * d[j]).im / z[j].norm_sqr()
            }
        })
        .collect()
}

/// `p = ∂S/∂x`, evaluated as `ħ Im(ψ*ψ′)/|ψ|²` outside nodes and from the
/// interpolated action inside them.
pub fn guiding_momentum(polar: &PolarField, params: &PhysicalParams) -> Result<RealField> {
    RealField::new(polar.grid().clone(), guiding_samples(polar, params))
}

/// Both forms of the coupling-dependent phase, each integrated from `x_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildePhase {
    /// `∫ f′² ∂S/∂x dx`.
    pub current_form: RealField,
    /// `f′² S − 2∫ S f′ f″ dx`.
    pub action_form: RealField,
}

pub fn tilde_phase(polar: &PolarField, f: &CouplingFunction, params: &PhysicalParams) -> Result<TildePhase> {
    let grid = polar.grid();
    let c = f.sample(grid)?;
    let fp = c.first.values();
    let fpp = c.second.values();
    let p = guiding_samples(polar, params);
    let s = polar.action.values();
    let integrand: Vec<f64> = p.iter().zip(fp).map(|(p, d)| d * d * p).collect();
    let current_form = cumulative_integral_samples(&integrand, grid.dx());
    let cross: Vec<f64> = (0..s.len()).map(|j| s[j] * fp[j] * fpp[j]).collect();
    let cross = cumulative_integral_samples(&cross, grid.dx());
    let action_form = (0..s.len()).map(|j| fp[j] * fp[j] * s[j] - 2.0 * cross[j]).collect();
    Ok(TildePhase {
        current_form: RealField::new(grid.clone(), current_form)?,
        action_form: RealField::new(grid.clone(), action_form)?,
    })
}

/// `⟨x|p|ψ⟩/⟨x|ψ⟩ = ∂S/∂x − (iħ/2A²) ∂A²/∂x`. Node cells carry zero and are
/// flagged in `node_mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueField {
    pub real_part: RealField,
    pub imag_part: RealField,
    pub node_mask: Vec<bool>,
}

pub fn weak_value(polar: &PolarField, params: &PhysicalParams) -> Result<WeakValueField> {
    let grid = polar.grid();
    let z = polar.psi.values();
    let d = first_derivative(grid, z);
    let mut real = guiding_samples(polar, params);
    let mut imag = vec![0.0; z.len()];
    for j in 0..z.len() {
        if polar.node_mask[j] {
            real[j] = 0.0;
        } else {
            imag[j] = -params.hbar * (z[j].conj() * d[j]).re / z[j].norm_sqr();
        }
    }
    Ok(WeakValueField {
        real_part: RealField::new(grid.clone(), real)?,
        imag_part: RealField::new(grid.clone(), imag)?,
        node_mask: polar.node_mask.clone(),
    })
}

/// Bohmian trajectories sampled at the snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    n_trajectories: usize,
    /// Time-major: `positions[i * n_trajectories + k]`.
    positions: Vec<f64>,
}

impl TrajectoryEnsemble {
    pub fn n_trajectories(&self) -> usize {
        self.n_trajectories
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Positions of every trajectory at time index `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        &self.positions[i * self.n_trajectories..(i + 1) * self.n_trajectories]
    }

    pub fn trajectory(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.times.len()).map(move |i| self.positions[i * self.n_trajectories + k])
    }

    /// Concatenates ensembles propagated over the same history.
    pub fn concat(parts: &[TrajectoryEnsemble]) -> Result<Self> {
        let first = parts.first().ok_or(Error::InsufficientData("no ensembles to join"))?;
        if parts.iter().any(|p| p.times != first.times) {
            return Err(Error::InvalidConfig("ensembles cover different times"));
        }
        let n_trajectories = parts.iter().map(|p| p.n_trajectories).sum();
        let mut positions = Vec::with_capacity(n_trajectories * first.times.len());
        for i in 0..first.times.len() {
            for p in parts {
                positions.extend_from_slice(p.at(i));
            }
        }
        Ok(Self { times: first.times.clone(), n_trajectories, positions })
    }
}

/// Cell-centred periodic wrap onto `[x_min − dx/2, x_max − dx/2)`, the
/// support of the piecewise-uniform density.
fn wrap_cell(grid: &Grid, x: f64) -> f64 {
    let h = 0.5 * grid.dx();
    grid.wrap(x + h) - h
}

/// `n` positions drawn from `|ψ|²` by inverse CDF, each cell's mass spread
/// uniformly over `[x_j − dx/2, x_j + dx/2)`.
pub fn sample_positions(psi: &WaveFunction, n: usize, seed: u64) -> Result<Vec<f64>> {
    let grid = psi.grid();
    let rho = psi.density().into_values();
    let mut cdf = Vec::with_capacity(rho.len() + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for r in &rho {
        acc += r;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::DegenerateState);
    }
    let mut rng = rng::from_seed(seed);
    let dx = grid.dx();
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let j = (cdf.partition_point(|&c| c <= u) - 1).min(rho.len() - 1);
            let frac = if rho[j] > 0.0 { ((u - cdf[j]) / rho[j]).clamp(0.0, 1.0) } else { 0.5 };
            grid.x(j) - 0.5 * dx + frac * dx
        })
        .collect())
}

struct VelocityHistory<'a> {
    grid: &'a Grid,
    times: Vec<f64>,
    fields: Vec<Vec<f64>>,
}

impl VelocityHistory<'_> {
    fn at(&self, i: usize, x: f64) -> f64 {
        let g = self.grid;
        let n = g.n_points() as isize;
        let s = (wrap_cell(g, x) - g.x_min()) / g.dx();
        let j = s.floor();
        let t = s - j;
        let j = j as isize;
        let v = &self.fields[i];
        let at = |o: isize| v[(j + o).rem_euclid(n) as usize];
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        w[0] * at(-1) + w[1] * at(0) + w[2] * at(1) + w[3] * at(2)
    }

    /// Velocity at fraction `theta` of interval `i`.
    fn blend(&self, i: usize, theta: f64, x: f64) -> f64 {
        let a = self.at(i, x);
        if theta == 0.0 {
            return a;
        }
        let b = self.at(i + 1, x);
        if theta == 1.0 {
            return b;
        }
        (1.0 - theta) * a + theta * b
    }
}

/// Advances given initial positions through the snapshot history with one
/// RK4 step per snapshot interval, velocity `p/m` cubic in `x` and linear in
/// `t`.
pub fn advance_trajectories(
    history: &[Snapshot],
    initial: &[f64],
    params: &PhysicalParams,
) -> Result<TrajectoryEnsemble> {
    let first = history.first().ok_or(Error::InsufficientData("empty snapshot history"))?;
    let grid = first.psi.grid();
    if history.iter().any(|s| s.psi.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let mut fields = Vec::with_capacity(history.len());
    for snap in history {
        let polar = polar_decompose(&snap.psi, params)?;
        fields.push(guiding_samples(&polar, params).into_iter().map(|p| p / params.mass).collect());
    }
    let vel = VelocityHistory { grid, times: history.iter().map(|s| s.t).collect(), fields };
    let n_traj = initial.len();
    let mut positions = Vec::with_capacity(n_traj * history.len());
    positions.extend(initial.iter().map(|&x| wrap_cell(grid, x)));
    for i in 0..history.len() - 1 {
        let h = vel.times[i + 1] - vel.times[i];
        let base = i * n_traj;
        for k in 0..n_traj {
            let x = positions[base + k];
            let k1 = vel.blend(i, 0.0, x);
            let k2 = vel.blend(i, 0.5, x + 0.5 * h * k1);
            let k3 = vel.blend(i, 0.5, x + 0.5 * h * k2);
            let k4 = vel.blend(i, 1.0, x + h * k3);
            let next = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            if !next.is_finite() {
                return Err(Error::NumericalBlowup { t: vel.times[i + 1], last: None });
            }
            positions.push(wrap_cell(grid, next));
        }
    }
    Ok(TrajectoryEnsemble { times: vel.times, n_trajectories: n_traj, positions })
}

/// Samples `n_traj` starting points from the first snapshot and advances them.
pub fn propagate_trajectories(
    history: &[Snapshot],
    n_traj: usize,
    seed: u64,
    params: &PhysicalParams,
) -> Result<TrajectoryEnsemble> {
    let first = history.first().ok_or(Error::InsufficientData("empty snapshot history"))?;
    if n_traj == 0 {
        return Err(Error::InvalidConfig("n_traj must be at least 1"));
    }
    let initial = sample_positions(&first.psi, n_traj, seed)?;
    advance_trajectories(history, &initial, params)
}

/// Kolmogorov-Smirnov distance between the trajectory positions at `t_index`
/// and the piecewise-uniform CDF of `|ψ|²`.
pub fn equivariance_distance(ensemble: &TrajectoryEnsemble, psi_t: &WaveFunction, t_index: usize) -> Result<f64> {
    if t_index >= ensemble.n_times() {
        return Err(Error::InsufficientData("t_index beyond the recorded times"));
    }
    let grid = psi_t.grid();
    let rho = psi_t.density().into_values();
    let total: f64 = rho.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateState);
    }
    let mut cdf = Vec::with_capacity(rho.len() + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for r in &rho {
        acc += r / total;
        cdf.push(acc);
    }
    let dx = grid.dx();
    let lower = grid.x_min() - 0.5 * dx;
    let model = |x: f64| {
        let s = ((x - lower) / dx).clamp(0.0, rho.len() as f64);
        let j = (s.floor() as usize).min(rho.len() - 1);
        cdf[j] + (cdf[j + 1] - cdf[j]) * (s - j as f64)
    };
    let mut xs = ensemble.at(t_index).to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = model(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}
