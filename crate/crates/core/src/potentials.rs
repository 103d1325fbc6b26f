//! External potential and every state-dependent potential entering the
//! generalized Schrödinger-Langevin equation, plus the currents they are
//! built from.

use alloc::vec::Vec;
use num_complex::Complex64;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::bohmian;
use crate::coupling::{gup_coupling, monotone_slopes, CouplingFunction};
use crate::error::{Error, Result};
use crate::field::{
    cumulative_integral_samples, spectral_derivative_in_place, ComplexField, Grid, PhysicalParams,
    RealField, WaveFunction,
};
use crate::spline::CubicSpline;

/// Relative density floor `ε_den = DENSITY_FLOOR · max|ψ|²` used wherever a
/// functional divides by, or takes the log of, the density.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// `½ m ω² x²`.
    Harmonic { omega: f64, mass: f64 },
    /// `b·x`.
    LinearRamp { slope: f64 },
    /// `a x⁴ − b x²`.
    DoubleWell { a: f64, b: f64 },
    Tabulated(CubicSpline),
}

impl PotentialSpec {
    /// `V`, `V′` or `V″` at `x`.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega, mass } => {
                let k = mass * omega * omega;
                [0.5 * k * x * x, k * x, k][order as usize]
            }
            PotentialSpec::LinearRamp { slope } => [slope * x, *slope, 0.0][order as usize],
            PotentialSpec::DoubleWell { a, b } => match order {
                0 => a * x.powi(4) - b * x * x,
                1 => 4.0 * a * x.powi(3) - 2.0 * b * x,
                _ => 12.0 * a * x * x - 2.0 * b,
            },
            PotentialSpec::Tabulated(s) => s.eval(x, order)?,
        })
    }

    pub fn sample(&self, grid: &Grid, order: u8) -> Result<RealField> {
        let values = grid.points().map(|x| self.eval(x, order)).collect::<Result<Vec<_>>>()?;
        RealField::new(grid.clone(), values)
    }
}

/// Sign of the friction potential. `Damping` (`V_d = +α S̃`) reproduces the
/// averaged Langevin equation; `Paper` is the literal `V_d = −α S̃`, which
/// anti-damps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingSign {
    #[default]
    Damping,
    Paper,
}

impl DampingSign {
    pub fn factor(self) -> f64 {
        match self {
            DampingSign::Damping => 1.0,
            DampingSign::Paper => -1.0,
        }
    }
}

/// Sign of the continuous-measurement term. `Paper` is the literal
/// `W_κ = −iħκ(ln|ψ|² − ⟨ln|ψ|²⟩)`, which spreads the packet; `Localizing`
/// flips it so that measurement narrows the packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasurementSign {
    #[default]
    Localizing,
    Paper,
}

impl MeasurementSign {
    /// Factor multiplying `−iħκ(ln ρ − ⟨ln ρ⟩)`.
    pub fn factor(self) -> f64 {
        match self {
            MeasurementSign::Localizing => -1.0,
            MeasurementSign::Paper => 1.0,
        }
    }
}

pub(crate) fn floored(rho: &[f64]) -> (Vec<f64>, f64) {
    let peak = rho.iter().fold(0.0_f64, |m, &r| m.max(r));
    let eps = DENSITY_FLOOR * peak;
    (rho.iter().map(|&r| r.max(eps)).collect(), eps)
}

/// `ψ′` by spectral differentiation of the real and imaginary parts
/// separately, so a real `ψ` has an exactly real derivative.
pub(crate) fn first_derivative(grid: &Grid, psi: &[Complex64]) -> Vec<Complex64> {
    let part = |f: fn(&Complex64) -> f64| {
        let mut d: Vec<Complex64> = psi.iter().map(|z| Complex64::new(f(z), 0.0)).collect();
        spectral_derivative_in_place(grid, &mut d, 1).expect("order 1 is supported");
        d
    };
    let re = part(|z| z.re);
    let im = part(|z| z.im);
    re.iter().zip(&im).map(|(a, b)| Complex64::new(a.re, b.re)).collect()
}

/// `J = (ħ/m) Im(ψ* ψ′)` from precomputed samples.
pub(crate) fn current_samples(psi: &[Complex64], dpsi: &[Complex64], params: &PhysicalParams) -> Vec<f64> {
    let c = params.hbar / params.mass;
    psi.iter().zip(dpsi).map(|(z, d)| c * (z.conj() * d).im).collect()
}

/// Probability current `J = (ħ/m) Im(ψ* ∂ψ/∂x) = |ψ|² (∂S/∂x) / m`.
pub fn current(psi: &WaveFunction, params: &PhysicalParams) -> Result<RealField> {
    let d = first_derivative(psi.grid(), psi.values());
    RealField::new(psi.grid().clone(), current_samples(psi.values(), &d, params))
}

/// Coupling-weighted current `J̃ = f′(x)² J`.
pub fn tilde_current(psi: &WaveFunction, f: &CouplingFunction, params: &PhysicalParams) -> Result<RealField> {
    let j = current(psi, params)?;
    let fp = f.sample(psi.grid())?.first;
    let values = j.values().iter().zip(fp.values()).map(|(j, d)| d * d * j).collect();
    RealField::new(psi.grid().clone(), values)
}

/// Friction potential and its density-weighted mean `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativePotential {
    pub potential: RealField,
    pub gauge: f64,
}

/// `V_d(x) = s·m·α·∫_{x_min}^x J̃ / max(|ψ|², ε_den) dx′` and `W = ⟨V_d⟩`.
pub(crate) fn dissipative_samples(
    grid: &Grid,
    rho: &[f64],
    current: &[f64],
    fprime_sq: &[f64],
    friction: f64,
    params: &PhysicalParams,
    sign: DampingSign,
) -> (Vec<f64>, f64) {
    let (rho_f, _) = floored(rho);
    let scale = sign.factor() * params.mass * friction;
    let integrand: Vec<f64> = current
        .iter()
        .zip(fprime_sq)
        .zip(&rho_f)
        .map(|((j, f2), r)| scale * f2 * j / r)
        .collect();
    let vd = cumulative_integral_samples(&integrand, grid.dx());
    let (num, den) = vd.iter().zip(rho).fold((0.0, 0.0), |(a, b), (v, r)| (a + v * r, b + r));
    let gauge = if den > 0.0 { num / den } else { 0.0 };
    (vd, gauge)
}

pub fn dissipative_potential(
    psi: &WaveFunction,
    f: &CouplingFunction,
    friction: f64,
    params: &PhysicalParams,
    sign: DampingSign,
) -> Result<DissipativePotential> {
    if !(friction >= 0.0) {
        return Err(Error::InvalidFriction(friction));
    }
    let grid = psi.grid();
    if friction == 0.0 {
        return Ok(DissipativePotential { potential: RealField::zeros(grid), gauge: 0.0 });
    }
    let rho = psi.density().into_values();
    let d = first_derivative(grid, psi.values());
    let j = current_samples(psi.values(), &d, params);
    let f2 = f.sample(grid)?.first_squared();
    let (vd, gauge) = dissipative_samples(grid, &rho, &j, &f2, friction, params, sign);
    Ok(DissipativePotential { potential: RealField::new(grid.clone(), vd)?, gauge })
}

/// `V_r = −f(x) ξ`.
pub fn random_potential(f: &CouplingFunction, xi: f64, grid: &Grid) -> Result<RealField> {
    if !xi.is_finite() {
        return Err(Error::InvalidField);
    }
    let values = grid.points().map(|x| f.eval(x, 0).map(|v| -v * xi)).collect::<Result<Vec<_>>>()?;
    RealField::new(grid.clone(), values)
}

/// `ln ρ_f − ⟨ln ρ_f⟩` with the density floor inside the logarithm.
pub(crate) fn log_density_deviation(rho: &[f64]) -> Vec<f64> {
    let (rho_f, _) = floored(rho);
    let logs: Vec<f64> = rho_f.iter().map(|r| r.ln()).collect();
    let (num, den) = logs.iter().zip(rho).fold((0.0, 0.0), |(a, b), (l, r)| (a + l * r, b + r));
    let mean = if den > 0.0 { num / den } else { 0.0 };
    logs.into_iter().map(|l| l - mean).collect()
}

/// Continuous-measurement term, purely imaginary:
/// `sign · (−iħκ) (ln|ψ|² − ⟨ln|ψ|²⟩)`.
pub fn measurement_potential(
    psi: &WaveFunction,
    kappa: f64,
    params: &PhysicalParams,
    sign: MeasurementSign,
) -> Result<ComplexField> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidResolution(kappa));
    }
    let grid = psi.grid();
    if kappa == 0.0 {
        return ComplexField::new(grid.clone(), alloc::vec![Complex64::new(0.0, 0.0); grid.n_points()]);
    }
    let u = log_density_deviation(psi.density().values());
    let c = -sign.factor() * params.hbar * kappa;
    ComplexField::new(grid.clone(), u.into_iter().map(|u| Complex64::new(0.0, c * u)).collect())
}

/// Quantum potential `Q = −(ħ²/2m) A″/A`, evaluated through
/// `A″/A = Re(ψ″/ψ) + (Im(ψ′/ψ))²` so that no spectral derivative of `|ψ|`
/// is needed.
pub fn quantum_potential(psi: &WaveFunction, params: &PhysicalParams) -> Result<RealField> {
    let grid = psi.grid();
    let z = psi.values();
    let d1 = first_derivative(grid, z);
    let mut d2 = z.to_vec();
    spectral_derivative_in_place(grid, &mut d2, 2)?;
    let (rho_f, _) = floored(psi.density().values());
    let c = -params.hbar * params.hbar / (2.0 * params.mass);
    let values = (0..z.len())
        .map(|j| {
            let r = rho_f[j];
            let curvature = (z[j].conj() * d2[j]).re / r;
            let phase = (z[j].conj() * d1[j]).im / r;
            c * (curvature + phase * phase)
        })
        .collect();
    RealField::new(grid.clone(), values)
}

fn check_monotone(potential: &PotentialSpec, grid: &Grid) -> Result<()> {
    let xs: Vec<f64> = grid.points().collect();
    monotone_slopes(potential, &xs).map(|_| ())
}

/// Closed-form damping potential of the deformed-commutator coupling,
/// `−2·gup_alpha·p(x)·V(x)` with `p` the guiding momentum.
pub fn gup_damping_closed_form(
    psi: &WaveFunction,
    potential: &PotentialSpec,
    gup_alpha: f64,
    params: &PhysicalParams,
) -> Result<RealField> {
    let grid = psi.grid();
    check_monotone(potential, grid)?;
    let polar = bohmian::polar_decompose(psi, params)?;
    let p = bohmian::guiding_momentum(&polar, params)?;
    let v = potential.sample(grid, 0)?;
    let values = p.values().iter().zip(v.values()).map(|(p, v)| -2.0 * gup_alpha * p * v).collect();
    RealField::new(grid.clone(), values)
}

/// Closed-form damping potential next to the generic `−2·gup_alpha·S̃` route
/// built from the induced coupling. The two differ by `∫ p′ V dx`; the report
/// quantifies that gap after removing density-weighted means.
#[derive(Debug, Clone, PartialEq)]
pub struct GupDiscrepancy {
    pub closed_form: RealField,
    pub generic: RealField,
    /// Max |difference| over cells with `|ψ|² > 1e-6·max|ψ|²`.
    pub max_abs_difference: f64,
    /// Density-weighted RMS difference.
    pub weighted_rms_difference: f64,
}

pub fn gup_discrepancy(
    psi: &WaveFunction,
    potential: &PotentialSpec,
    gup_alpha: f64,
    params: &PhysicalParams,
) -> Result<GupDiscrepancy> {
    let grid = psi.grid();
    let closed_form = gup_damping_closed_form(psi, potential, gup_alpha, params)?;
    let f = gup_coupling(potential, grid)?;
    let polar = bohmian::polar_decompose(psi, params)?;
    let tilde = bohmian::tilde_phase(&polar, &f, params)?;
    let generic = tilde.current_form.map(|s| -2.0 * gup_alpha * s)?;

    let rho = psi.density().into_values();
    let total: f64 = rho.iter().sum();
    let mean = |v: &[f64]| v.iter().zip(&rho).map(|(a, r)| a * r).sum::<f64>() / total;
    let (mc, mg) = (mean(closed_form.values()), mean(generic.values()));
    let peak = rho.iter().fold(0.0_f64, |m, &r| m.max(r));
    let mut max_abs: f64 = 0.0;
    let mut sq = 0.0;
    for ((c, g), r) in closed_form.values().iter().zip(generic.values()).zip(&rho) {
        let d = (c - mc) - (g - mg);
        sq += d * d * r;
        if *r > 1e-6 * peak {
            max_abs = max_abs.max(d.abs());
        }
    }
    Ok(GupDiscrepancy {
        closed_form,
        generic,
        max_abs_difference: max_abs,
        weighted_rms_difference: (sq / total).sqrt(),
    })
}

/// Every potential entering the wave equation for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct GsleTerms {
    pub dissipative: RealField,
    pub gauge: f64,
    pub random: RealField,
    pub measurement: ComplexField,
    pub quantum: RealField,
}

#[allow(clippy::too_many_arguments)]
pub fn gsle_terms(
    psi: &WaveFunction,
    f: &CouplingFunction,
    friction: f64,
    xi: f64,
    kappa: f64,
    params: &PhysicalParams,
    sign: DampingSign,
    measurement_sign: MeasurementSign,
) -> Result<GsleTerms> {
    let d = dissipative_potential(psi, f, friction, params, sign)?;
    Ok(GsleTerms {
        dissipative: d.potential,
        gauge: d.gauge,
        random: random_potential(f, xi, psi.grid())?,
        measurement: measurement_potential(psi, kappa, params, measurement_sign)?,
        quantum: quantum_potential(psi, params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(-20.0, 20.0, 512).unwrap()
    }

    fn packet(g: &Grid, x0: f64, p0: f64, sigma: f64) -> WaveFunction {
        ComplexField::from_fn(g, |x| {
            Complex64::from_polar((-(x - x0) * (x - x0) / (4.0 * sigma * sigma)).exp(), p0 * x)
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    fn plane_wave(g: &Grid, modes: f64) -> (WaveFunction, f64) {
        let k = 2.0 * PI * modes / g.length();
        let psi = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0 / g.length().sqrt(), k * x)).unwrap();
        (psi, k)
    }

    #[test]
    fn potential_kinds() {
        let h = PotentialSpec::Harmonic { omega: 2.0, mass: 0.5 };
        assert_eq!(h.eval(1.0, 0).unwrap(), 1.0);
        assert_eq!(h.eval(1.0, 1).unwrap(), 2.0);
        let dw = PotentialSpec::DoubleWell { a: 1.0, b: 2.0 };
        assert_eq!(dw.eval(1.0, 0).unwrap(), -1.0);
        assert_eq!(dw.eval(1.0, 1).unwrap(), 0.0);
        assert_eq!(dw.eval(1.0, 2).unwrap(), 8.0);
        assert_eq!(PotentialSpec::Free.eval(3.0, 3), Err(Error::UnsupportedOrder(3)));
    }

    #[test]
    fn current_examples() {
        let g = grid();
        let p = PhysicalParams::default();
        let real = packet(&g, 0.0, 0.0, 1.0);
        assert!(current(&real, &p).unwrap().values().iter().all(|j| j.abs() < 1e-15));
        let (pw, k) = plane_wave(&g, 4.0);
        for j in current(&pw, &p).unwrap().values() {
            assert!((j - k / g.length()).abs() < 1e-12);
        }
        let moving = packet(&g, 1.0, 1.3, 1.0);
        let total: f64 = current(&moving, &p).unwrap().values().iter().sum::<f64>() * g.dx();
        assert!((total - 1.3).abs() < 1e-8);
    }

    #[test]
    fn tilde_current_examples() {
        let g = grid();
        let p = PhysicalParams::default();
        let psi = packet(&g, 0.5, 0.7, 1.2);
        let j = current(&psi, &p).unwrap();
        assert_eq!(tilde_current(&psi, &CouplingFunction::Linear, &p).unwrap(), j);
        let c = tilde_current(&psi, &CouplingFunction::Constant(2.0), &p).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        let (pw, k) = plane_wave(&g, 3.0);
        let t = tilde_current(&pw, &CouplingFunction::Power(2), &p).unwrap();
        for (x, v) in g.points().zip(t.values()) {
            assert!((v - 4.0 * x * x * k / g.length()).abs() < 1e-10);
        }
    }

    #[test]
    fn dissipative_examples() {
        let g = grid();
        let p = PhysicalParams::default();
        let psi = packet(&g, 0.0, 1.0, 1.0);
        let zero = dissipative_potential(&psi, &CouplingFunction::Linear, 0.0, &p, DampingSign::Damping).unwrap();
        assert!(zero.potential.values().iter().all(|&v| v == 0.0) && zero.gauge == 0.0);
        assert_eq!(
            dissipative_potential(&psi, &CouplingFunction::Linear, -0.1, &p, DampingSign::Damping),
            Err(Error::InvalidFriction(-0.1))
        );

        let (pw, k) = plane_wave(&g, 5.0);
        let d = dissipative_potential(&pw, &CouplingFunction::Linear, 0.3, &p, DampingSign::Damping).unwrap();
        let v = d.potential.values();
        for (j, x) in g.points().enumerate() {
            assert!((v[j] - v[0] - 0.3 * k * (x - g.x_min())).abs() < 1e-10);
        }

        let p0 = 1.5;
        let psi = packet(&g, 0.8, p0, 1.0);
        let d = dissipative_potential(&psi, &CouplingFunction::Linear, 0.2, &p, DampingSign::Damping).unwrap();
        let mean_x = crate::field::expectation(&psi, &RealField::coordinate(&g)).unwrap();
        for (j, x) in g.points().enumerate() {
            if (x - 0.8).abs() < 4.0 {
                let e = 0.2 * p0 * (x - mean_x);
                assert!((d.potential.values()[j] - d.gauge - e).abs() < 1e-6);
            }
        }
        let lit = dissipative_potential(&psi, &CouplingFunction::Linear, 0.2, &p, DampingSign::Paper).unwrap();
        for (a, b) in lit.potential.values().iter().zip(d.potential.values()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn random_potential_examples() {
        let g = grid();
        assert!(random_potential(&CouplingFunction::Linear, 0.0, &g).unwrap().values().iter().all(|&v| v == 0.0));
        let v = random_potential(&CouplingFunction::Linear, 2.0, &g).unwrap();
        for (x, v) in g.points().zip(v.values()) {
            assert_eq!(*v, -2.0 * x);
        }
        let g = Grid::new(0.0, 2.0 * PI, 64).unwrap();
        let f = CouplingFunction::Sinusoidal { amplitude: 1.0, wavenumber: 1.0 };
        let vr = random_potential(&f, 1.0, &g).unwrap();
        let force = crate::field::differentiate_real(&vr, 1).unwrap();
        for (x, d) in g.points().zip(force.values()) {
            assert!((-d - x.cos()).abs() < 1e-10);
        }
        assert!(random_potential(&f, f64::NAN, &g).is_err());
    }

    #[test]
    fn measurement_examples() {
        let g = grid();
        let p = PhysicalParams::default();
        let psi = packet(&g, 0.0, 0.0, 1.0);
        let z = measurement_potential(&psi, 0.0, &p, MeasurementSign::Paper).unwrap();
        assert!(z.values().iter().all(|w| w.norm() == 0.0));
        let (pw, _) = plane_wave(&g, 2.0);
        let w = measurement_potential(&pw, 0.4, &p, MeasurementSign::Paper).unwrap();
        assert!(w.values().iter().all(|w| w.norm() < 1e-12));

        let kappa = 0.3;
        let w = measurement_potential(&psi, kappa, &p, MeasurementSign::Paper).unwrap();
        for (x, w) in g.points().zip(w.values()) {
            assert_eq!(w.re, 0.0);
            if x.abs() < 5.0 {
                assert!((w.im - kappa * (x * x - 1.0) / 2.0).abs() < 1e-6, "{x}");
            }
        }
        let l = measurement_potential(&psi, kappa, &p, MeasurementSign::Localizing).unwrap();
        for (a, b) in l.values().iter().zip(w.values()) {
            assert_eq!(a.im, -b.im);
        }
        assert_eq!(
            measurement_potential(&psi, -1.0, &p, MeasurementSign::Paper),
            Err(Error::InvalidResolution(-1.0))
        );
    }

    #[test]
    fn quantum_potential_examples() {
        let g = grid();
        let p = PhysicalParams::default();
        let (pw, _) = plane_wave(&g, 3.0);
        assert!(quantum_potential(&pw, &p).unwrap().values().iter().all(|q| q.abs() < 1e-10));

        let psi = packet(&g, 0.0, 0.0, 1.0);
        let q = quantum_potential(&psi, &p).unwrap();
        assert!((q.values()[256] - 0.25).abs() < 1e-6);

        let ground = ComplexField::from_fn(&g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let q = quantum_potential(&ground, &p).unwrap();
        for (x, q) in g.points().zip(q.values()) {
            if x.abs() < 3.0 {
                assert!((q + 0.5 * x * x - 0.5).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gup_closed_form_examples() {
        let g = Grid::new(1.0, 41.0, 512).unwrap();
        let p = PhysicalParams::default();
        let ramp = PotentialSpec::LinearRamp { slope: 1.0 };
        let real = packet(&g, 20.0, 0.0, 2.0);
        let c = gup_damping_closed_form(&real, &ramp, 0.1, &p).unwrap();
        assert!(c.values().iter().all(|v| v.abs() < 1e-9));
        let free = gup_damping_closed_form(&packet(&g, 20.0, 1.0, 2.0), &PotentialSpec::Free, 0.1, &p).unwrap();
        assert!(free.values().iter().all(|&v| v == 0.0));
        let harmonic = PotentialSpec::Harmonic { omega: 1.0, mass: 1.0 };
        let g2 = grid();
        assert!(matches!(
            gup_damping_closed_form(&packet(&g2, 0.0, 0.0, 1.0), &harmonic, 0.1, &p),
            Err(Error::NonmonotonePotential { .. })
        ));
    }
}
