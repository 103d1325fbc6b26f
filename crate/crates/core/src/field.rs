//! Uniform periodic grid, real and complex fields on it, quadrature,
//! spectral differentiation and the basic observables.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft;

struct SpectralPlan {
    fft: Fft,
    /// Angular wavenumbers in FFT order.
    wavenumbers: Vec<f64>,
}

/// Uniform periodic grid `x_j = x_min + j·dx`, `j < n_points`; `x_max` is
/// identified with `x_min`.
#[derive(Clone)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
    plan: Arc<SpectralPlan>,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite"));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid("x_max must exceed x_min"));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid("n_points must be a power of two >= 8"));
        }
        let length = x_max - x_min;
        let dx = length / n_points as f64;
        let dk = 2.0 * PI / length;
        let wavenumbers = (0..n_points)
            .map(|j| {
                let m = if j < n_points / 2 { j as f64 } else { j as f64 - n_points as f64 };
                m * dk
            })
            .collect();
        Ok(Self {
            x_min,
            x_max,
            n_points,
            dx,
            plan: Arc::new(SpectralPlan { fft: Fft::new(n_points)?, wavenumbers }),
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.x(j))
    }

    /// Angular wavenumbers in FFT order; index `n/2` is the Nyquist mode.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.plan.wavenumbers
    }

    /// In-place unnormalized forward FFT of grid samples.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.plan.fft.forward(data);
    }

    /// In-place inverse FFT (normalized).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.plan.fft.inverse(data);
    }

    /// Maps `x` onto the fundamental cell `[x_min, x_max)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        let mut y = (x - self.x_min) % l;
        if y < 0.0 {
            y += l;
        }
        self.x_min + y
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.x_min == other.x_min && self.x_max == other.x_max && self.n_points == other.n_points
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .field("n_points", &self.n_points)
            .finish()
    }
}

/// `ħ` and the system mass. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidConfig("hbar must be positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidConfig("mass must be positive"));
        }
        Ok(Self { hbar, mass })
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: alloc::vec![0.0; grid.n_points()] }
    }

    /// The coordinate field `x_j`.
    pub fn coordinate(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: grid.points().collect() }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// The state `ψ(x, t)` sampled on the grid.
pub type WaveFunction = ComplexField;

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|ψ|²` sampled on the grid.
    pub fn density(&self) -> RealField {
        RealField::from_parts_unchecked(
            self.grid.clone(),
            self.values.iter().map(|z| z.norm_sqr()).collect(),
        )
    }

    /// `∫|ψ|² dx`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Copy rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::DegenerateState);
        }
        let s = 1.0 / n.sqrt();
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.values.iter().map(|z| z * s).collect(),
        ))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-9
    }

    /// Multiplies every sample by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let w = Complex64::from_polar(1.0, theta);
        Self::from_parts_unchecked(self.grid.clone(), self.values.iter().map(|z| z * w).collect())
    }
}

/// Periodic rectangle rule `Σ f_j dx`.
pub fn integrate(field: &RealField) -> Result<f64> {
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidField);
    }
    Ok(field.values.iter().sum::<f64>() * field.grid.dx())
}

/// Stencil width of the running quadrature.
const CUMULATIVE_STENCIL: usize = 8;

/// Running integral `F_j = ∫_{x_0}^{x_j} g dx` of uniformly spaced samples.
///
/// Each cell `[x_j, x_{j+1}]` is integrated exactly for the degree-7
/// polynomial through the eight nearest samples (centred in the interior,
/// shifted at the ends), so the result is eighth-order accurate and does not
/// assume periodicity. Fewer than eight samples fall back to trapezoids.
pub fn cumulative_integral_samples(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(0.0);
    if n < CUMULATIVE_STENCIL {
        let mut acc = 0.0;
        for j in 0..n - 1 {
            acc += 0.5 * dx * (values[j] + values[j + 1]);
            out.push(acc);
        }
        return out;
    }
    let weights: Vec<[f64; CUMULATIVE_STENCIL]> =
        (0..CUMULATIVE_STENCIL).map(cell_weights).collect();
    let mut acc = 0.0;
    for j in 0..n - 1 {
        let start = j.saturating_sub(3).min(n - CUMULATIVE_STENCIL);
        let w = &weights[j - start];
        let cell: f64 = (0..CUMULATIVE_STENCIL).map(|i| w[i] * values[start + i]).sum();
        acc += dx * cell;
        out.push(acc);
    }
    out
}

/// Weights for `∫_0^1 p(t) dt` where `p` interpolates nodes at offsets
/// `i - position`, `i = 0..8`.
fn cell_weights(position: usize) -> [f64; CUMULATIVE_STENCIL] {
    // Four-point Gauss-Legendre on [0,1] integrates the degree-7 basis exactly.
    const NODES: [f64; 4] = [
        0.069_431_844_202_973_71,
        0.330_009_478_207_571_9,
        0.669_990_521_792_428_1,
        0.930_568_155_797_026_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.173_927_422_568_726_93,
        0.326_072_577_431_273_07,
        0.326_072_577_431_273_07,
        0.173_927_422_568_726_93,
    ];
    let offsets: [f64; CUMULATIVE_STENCIL] =
        core::array::from_fn(|i| i as f64 - position as f64);
    core::array::from_fn(|i| {
        NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&t, w)| {
                let basis = (0..CUMULATIVE_STENCIL)
                    .filter(|&k| k != i)
                    .fold(1.0, |p, k| p * (t - offsets[k]) / (offsets[i] - offsets[k]));
                w * basis
            })
            .sum()
    })
}

/// Running integral of a grid field from `x_min`.
pub fn cumulative_integral(field: &RealField) -> RealField {
    RealField::from_parts_unchecked(
        field.grid.clone(),
        cumulative_integral_samples(&field.values, field.grid.dx()),
    )
}

/// Spectral derivative of order 1 or 2. The Nyquist mode is dropped for the
/// first derivative and kept (as `-k²`) for the second.
pub fn differentiate(field: &ComplexField, order: u8) -> Result<ComplexField> {
    let grid = &field.grid;
    let mut data = field.values.clone();
    spectral_derivative_in_place(grid, &mut data, order)?;
    Ok(ComplexField::from_parts_unchecked(grid.clone(), data))
}

/// Spectral derivative of a real field (result is real up to round-off).
pub fn differentiate_real(field: &RealField, order: u8) -> Result<RealField> {
    let grid = &field.grid;
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_derivative_in_place(grid, &mut data, order)?;
    Ok(RealField::from_parts_unchecked(grid.clone(), data.into_iter().map(|z| z.re).collect()))
}

pub(crate) fn spectral_derivative_in_place(
    grid: &Grid,
    data: &mut [Complex64],
    order: u8,
) -> Result<()> {
    if order != 1 && order != 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let n = grid.n_points();
    grid.forward(data);
    for (j, (z, &k)) in data.iter_mut().zip(grid.wavenumbers()).enumerate() {
        *z = match order {
            1 if j == n / 2 => Complex64::new(0.0, 0.0),
            1 => *z * Complex64::new(0.0, k),
            _ => *z * (-k * k),
        };
    }
    grid.inverse(data);
    Ok(())
}

/// `∫ O |ψ|² dx / ∫ |ψ|² dx`.
pub fn expectation(psi: &WaveFunction, observable: &RealField) -> Result<f64> {
    if psi.grid != observable.grid {
        return Err(Error::GridMismatch);
    }
    let (num, den) = psi
        .values
        .iter()
        .zip(&observable.values)
        .fold((0.0, 0.0), |(a, b), (z, o)| {
            let r = z.norm_sqr();
            (a + o * r, b + r)
        });
    if !(den > 0.0) {
        return Err(Error::DegenerateState);
    }
    Ok(num / den)
}

/// Diagnostics recorded along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSet {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    /// `⟨p²/2m + V⟩` of the isolated system.
    pub energy: f64,
    /// Peak density over the outermost 2% of the grid relative to the global peak.
    pub boundary_density: f64,
}

pub fn observables(
    psi: &WaveFunction,
    potential: &RealField,
    params: &PhysicalParams,
) -> Result<ObservableSet> {
    let grid = &psi.grid;
    if *grid != potential.grid {
        return Err(Error::GridMismatch);
    }
    if psi.values.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidField);
    }
    let dx = grid.dx();
    let mut sum = 0.0;
    let mut sum_x = 0.0;
    let mut sum_v = 0.0;
    for (j, (z, v)) in psi.values.iter().zip(&potential.values).enumerate() {
        let r = z.norm_sqr();
        sum += r;
        sum_x += grid.x(j) * r;
        sum_v += v * r;
    }
    if !(sum > 0.0) {
        return Err(Error::DegenerateState);
    }
    let mean_x = sum_x / sum;
    let var_x = psi
        .values
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let d = grid.x(j) - mean_x;
            d * d * z.norm_sqr()
        })
        .sum::<f64>()
        / sum;

    // Momentum moments in wavenumber space; Parseval gives Σ|ψ̂|² = n Σ|ψ|².
    let mut spectrum = psi.values.clone();
    grid.forward(&mut spectrum);
    let n = grid.n_points();
    let mut sum_k = 0.0;
    let mut sum_k2 = 0.0;
    let mut sum_hat = 0.0;
    for (j, (z, &k)) in spectrum.iter().zip(grid.wavenumbers()).enumerate() {
        let w = z.norm_sqr();
        sum_hat += w;
        if j != n / 2 {
            sum_k += k * w;
        }
        sum_k2 += k * k * w;
    }
    let hbar = params.hbar;
    let mean_p = hbar * sum_k / sum_hat;
    let kinetic = hbar * hbar * sum_k2 / (2.0 * params.mass * sum_hat);

    Ok(ObservableSet {
        norm: sum * dx,
        mean_x,
        mean_p,
        var_x: var_x.max(0.0),
        energy: kinetic + sum_v / sum,
        boundary_density: boundary_density(psi),
    })
}

/// Max of `|ψ|²` over the outermost 2% of grid points (1% per side, at least
/// one point each) divided by the global max.
pub fn boundary_density(psi: &WaveFunction) -> f64 {
    let n = psi.values.len();
    let edge = ((n as f64 * 0.01).ceil() as usize).max(1);
    let peak = psi.values.iter().fold(0.0_f64, |m, z| m.max(z.norm_sqr()));
    if peak <= 0.0 {
        return 0.0;
    }
    let outer = psi.values[..edge]
        .iter()
        .chain(&psi.values[n - edge..])
        .fold(0.0_f64, |m, z| m.max(z.norm_sqr()));
    outer / peak
}

/// `Σ|ψ̂_k|² dx / n`, the norm evaluated in wavenumber space.
pub fn spectral_norm(psi: &WaveFunction) -> f64 {
    let mut spectrum = psi.values.clone();
    psi.grid.forward(&mut spectrum);
    spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi.grid.dx() / psi.grid.n_points() as f64
}
