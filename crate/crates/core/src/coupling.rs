//! System-bath coupling `f(x)` and its first two derivatives.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{cumulative_integral_samples, Grid, RealField};
use crate::potentials::PotentialSpec;
use crate::spline::CubicSpline;

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingFunction {
    /// `f(x) = x`, the Caldeira-Leggett / Kostin case.
    Linear,
    /// `f(x) = c`; decouples the bath entirely.
    Constant(f64),
    /// `f(x) = x^n`.
    Power(u32),
    /// `f(x) = a·sin(kx)`.
    Sinusoidal { amplitude: f64, wavenumber: f64 },
    Tabulated(TabulatedCoupling),
}

/// Spline-backed coupling. Derivative splines, when present, take precedence
/// over differentiating the value spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCoupling {
    value: CubicSpline,
    first: Option<CubicSpline>,
    second: Option<CubicSpline>,
}

impl TabulatedCoupling {
    pub fn new(value: CubicSpline) -> Self {
        Self { value, first: None, second: None }
    }

    pub fn with_derivatives(value: CubicSpline, first: CubicSpline, second: CubicSpline) -> Result<Self> {
        if value.domain() != first.domain() || value.domain() != second.domain() {
            return Err(Error::InvalidSpline("derivative tables must share the value domain"));
        }
        Ok(Self { value, first: Some(first), second: Some(second) })
    }

    pub fn value_spline(&self) -> &CubicSpline {
        &self.value
    }

    fn eval(&self, x: f64, order: u8) -> Result<f64> {
        match (order, &self.first, &self.second) {
            (1, Some(s), _) => s.eval(x, 0),
            (2, _, Some(s)) => s.eval(x, 0),
            _ => self.value.eval(x, order),
        }
    }
}

/// `f`, `f′`, `f″` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSamples {
    pub value: RealField,
    pub first: RealField,
    pub second: RealField,
}

impl CouplingSamples {
    /// `f′(x)²`, the local friction profile.
    pub fn first_squared(&self) -> Vec<f64> {
        self.first.values().iter().map(|d| d * d).collect()
    }
}

impl CouplingFunction {
    pub fn is_linear(&self) -> bool {
        matches!(self, CouplingFunction::Linear)
    }

    /// `f(x)`, `f′(x)` or `f″(x)` for `order` 0, 1, 2.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(match self {
            CouplingFunction::Linear => [x, 1.0, 0.0][order as usize],
            CouplingFunction::Constant(c) => [*c, 0.0, 0.0][order as usize],
            CouplingFunction::Power(n) => {
                let n = *n;
                match order {
                    0 => x.powi(n as i32),
                    1 if n == 0 => 0.0,
                    1 => n as f64 * x.powi(n as i32 - 1),
                    _ if n < 2 => 0.0,
                    _ => (n * (n - 1)) as f64 * x.powi(n as i32 - 2),
                }
            }
            CouplingFunction::Sinusoidal { amplitude: a, wavenumber: k } => match order {
                0 => a * (k * x).sin(),
                1 => a * k * (k * x).cos(),
                _ => -a * k * k * (k * x).sin(),
            },
            CouplingFunction::Tabulated(t) => t.eval(x, order)?,
        })
    }

    pub fn sample(&self, grid: &Grid) -> Result<CouplingSamples> {
        let column = |order| -> Result<RealField> {
            let values = grid.points().map(|x| self.eval(x, order)).collect::<Result<Vec<_>>>()?;
            RealField::new(grid.clone(), values)
        };
        Ok(CouplingSamples { value: column(0)?, first: column(1)?, second: column(2)? })
    }
}

pub fn eval_coupling(f: &CouplingFunction, x: f64, order: u8) -> Result<f64> {
    f.eval(x, order)
}

/// Coupling `f(x) = ∫_0^x √V′(y) dy` induced by a deformed commutator.
///
/// Tabulated on the grid points plus `x_max`; `f′ = √V′` and
/// `f″ = V″ / (2√V′)` are tabulated from the potential directly, with
/// `f″ = 0` where `V′ = 0`.
pub fn gup_coupling(potential: &PotentialSpec, grid: &Grid) -> Result<CouplingFunction> {
    let n = grid.n_points();
    let xs: Vec<f64> = (0..=n).map(|j| grid.x(j)).collect();
    let slopes = monotone_slopes(potential, &xs)?;
    let mut root = Vec::with_capacity(n + 1);
    let mut second = Vec::with_capacity(n + 1);
    for (&x, &slope) in xs.iter().zip(&slopes) {
        let r = slope.sqrt();
        root.push(r);
        second.push(if r > 0.0 { potential.eval(x, 2)? / (2.0 * r) } else { 0.0 });
    }
    let mut values = cumulative_integral_samples(&root, grid.dx());
    let (lo, hi) = (xs[0], xs[n]);
    let shift = if (lo..=hi).contains(&0.0) {
        let running = CubicSpline::not_a_knot(xs.clone(), values.clone())?;
        -running.eval(0.0, 0)?
    } else {
        simpson_root_slope(potential, 0.0, lo)?
    };
    for v in &mut values {
        *v += shift;
    }
    let table = TabulatedCoupling::with_derivatives(
        CubicSpline::not_a_knot(xs.clone(), values)?,
        CubicSpline::not_a_knot(xs.clone(), root)?,
        CubicSpline::not_a_knot(xs, second)?,
    )?;
    Ok(CouplingFunction::Tabulated(table))
}

/// `V′` at `xs`, failing if any slope is negative beyond round-off
/// (`1e-10·max|V′|`); round-off negatives are clamped to zero.
pub(crate) fn monotone_slopes(potential: &PotentialSpec, xs: &[f64]) -> Result<Vec<f64>> {
    let slopes = xs.iter().map(|&x| potential.eval(x, 1)).collect::<Result<Vec<f64>>>()?;
    let tol = 1e-10 * slopes.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    for (&x, &slope) in xs.iter().zip(&slopes) {
        if slope < -tol || slope.is_nan() {
            return Err(Error::NonmonotonePotential { x, slope });
        }
    }
    Ok(slopes.into_iter().map(|s| s.max(0.0)).collect())
}

/// `∫_a^b √V′ dy` by composite Simpson (signed for `b < a`).
fn simpson_root_slope(potential: &PotentialSpec, a: f64, b: f64) -> Result<f64> {
    const INTERVALS: usize = 4096;
    let h = (b - a) / INTERVALS as f64;
    let xs: Vec<f64> = (0..=INTERVALS).map(|i| a + i as f64 * h).collect();
    let slopes = monotone_slopes(potential, &xs)?;
    let mut acc = 0.0;
    for (i, slope) in slopes.into_iter().enumerate() {
        let w = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * slope.sqrt();
    }
    Ok(acc * h / 3.0)
}
