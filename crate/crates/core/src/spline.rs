//! Cubic interpolating spline with not-a-knot end conditions.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl CubicSpline {
    /// Needs at least four strictly increasing, finite knots.
    pub fn not_a_knot(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() {
            return Err(Error::InvalidSpline("knot and value counts differ"));
        }
        if n < 4 {
            return Err(Error::InvalidSpline("need at least four knots"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpline("non-finite knot data"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpline("knots must be strictly increasing"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} are eliminated with the
        // not-a-knot conditions (continuous third derivative at x_1, x_{n-2}).
        let m = n - 2;
        let mut lower = alloc::vec![0.0; m];
        let mut diag = alloc::vec![0.0; m];
        let mut upper = alloc::vec![0.0; m];
        let mut rhs = alloc::vec![0.0; m];
        for r in 0..m {
            let i = r + 1;
            lower[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            upper[r] = h[i];
            rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (1.0 + h0 / h1);
        upper[0] -= h0 * h0 / h1;
        let (a, b) = (h[n - 3], h[n - 2]);
        diag[m - 1] += b * (1.0 + b / a);
        lower[m - 1] -= b * b / a;

        // Thomas algorithm.
        for r in 1..m {
            let w = lower[r] / diag[r - 1];
            diag[r] -= w * upper[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        let mut inner = alloc::vec![0.0; m];
        inner[m - 1] = rhs[m - 1] / diag[m - 1];
        for r in (0..m - 1).rev() {
            inner[r] = (rhs[r] - upper[r] * inner[r + 1]) / diag[r];
        }

        let mut curvature = Vec::with_capacity(n);
        curvature.push((1.0 + h0 / h1) * inner[0] - (h0 / h1) * inner[1]);
        curvature.extend_from_slice(&inner);
        curvature.push((1.0 + b / a) * inner[m - 1] - (b / a) * inner[m - 2]);
        Ok(Self { xs, ys, curvature })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Value (`order` 0) or derivative (1, 2) at `x`.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfDomain { x, min: lo, max: hi });
        }
        let n = self.xs.len();
        let i = self.xs.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let h = self.xs[i + 1] - self.xs[i];
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let a = self.xs[i + 1] - x;
        let b = x - self.xs[i];
        let c0 = self.ys[i] / h - m0 * h / 6.0;
        let c1 = self.ys[i + 1] / h - m1 * h / 6.0;
        Ok(match order {
            0 => m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + c0 * a + c1 * b,
            1 => -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1,
            _ => (m0 * a + m1 * b) / h,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn reproduces_cubics_exactly() {
        let xs: Vec<f64> = vec![-1.0, -0.3, 0.2, 0.9, 1.7, 2.0, 3.1];
        let p = |x: f64| 2.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        let dp = |x: f64| -1.0 + x - 0.75 * x * x;
        let ddp = |x: f64| 1.0 - 1.5 * x;
        let s = CubicSpline::not_a_knot(xs.clone(), xs.iter().map(|&x| p(x)).collect()).unwrap();
        for &x in &[-1.0, -0.7, 0.0, 0.55, 1.2, 2.5, 3.1] {
            assert!((s.eval(x, 0).unwrap() - p(x)).abs() < 1e-12);
            assert!((s.eval(x, 1).unwrap() - dp(x)).abs() < 1e-11);
            assert!((s.eval(x, 2).unwrap() - ddp(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn four_knots_give_the_interpolating_cubic() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powi(3)).collect();
        let s = CubicSpline::not_a_knot(xs, ys).unwrap();
        assert!((s.eval(1.5, 0).unwrap() - 3.375).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input_and_out_of_domain() {
        assert!(CubicSpline::not_a_knot(vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(CubicSpline::not_a_knot(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
        let s = CubicSpline::not_a_knot(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).unwrap();
        assert!(matches!(s.eval(3.5, 0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(s.eval(-0.1, 1), Err(Error::OutOfDomain { .. })));
    }
}
