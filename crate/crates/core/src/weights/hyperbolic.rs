//! Hyperbolic weight family: subtracted edge-factor integral C(u; a),
//! its spline tabulation for lattice-scale reuse, and the sinh-product
//! single-spin weight.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::budget::{Interval, PrecisionBudget};
use crate::error::{Error, Result};
use crate::quad::integrate_finite;
use crate::specfun::log_kappa_hyperbolic;
use crate::specfun::{sinh_minus_arg, ModularParam};

/// Single-spin weight S(x) = 2 sinh(2πxb) sinh(2πx/b), real in both regimes.
pub(crate) fn single_spin(x: f64, b: &ModularParam) -> f64 {
    2.0 * b.sinh_product(2.0 * PI * x)
}

/// C(u; a) = ∫₀^∞ [cos(2yu) sinh(2ya)/(y sinh(yb) sinh(y/b)) − 2a/y²] dy,
/// assembled from cancellation-free pieces; odd in a, |a| < η.
pub(crate) fn c_integral(u: f64, a: f64, b: &ModularParam, budget: &PrecisionBudget) -> Result<f64> {
    let eta = b.eta();
    if a.abs() >= eta {
        return Err(Error::Domain(format!(
            "hyperbolic edge factor needs |a| < eta = {eta}, got {a}"
        )));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let y_max = (60.0 / (2.0 * (eta - a.abs()))).min(330.0 / eta).min(4000.0);
    let kern = move |y: f64| {
        let ss = b.sinh_product(y);
        let d = b.sinh_product_defect(y);
        let cos2 = (2.0 * y * u).cos();
        let cos_m1 = -2.0 * (y * u).sin().powi(2);
        let v = (cos2 * sinh_minus_arg(2.0 * y * a) + 2.0 * y * a * cos_m1) / (y * ss)
            - 2.0 * a * d / (y * y * ss);
        Complex64::new(v, 0.0)
    };
    let r = integrate_finite(kern, Interval::new(0.0, y_max)?, budget)?;
    Ok(r.value.re - 2.0 * a / y_max)
}

/// log W_a(x, y) = −log κ(a) + C(x+y; a) + C(x−y; a).
pub(crate) fn log_edge(
    a: f64,
    x: f64,
    y: f64,
    b: &ModularParam,
    budget: &PrecisionBudget,
) -> Result<f64> {
    Ok(-log_kappa_hyperbolic(a, b, budget)?
        + c_integral(x + y, a, b, budget)?
        + c_integral(x - y, a, b, budget)?)
}

/// Spline-tabulated hyperbolic edge weight at a fixed spectral value,
/// for workloads that evaluate W on many spin pairs.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    spline: CubicSpline,
    log_kappa: f64,
    spectral: f64,
}

impl EdgeTable {
    /// Tabulates C(·; a) on [0, umax] with n nodes and precomputes log κ(a).
    pub fn new(
        a: f64,
        b: &ModularParam,
        umax: f64,
        n: usize,
        budget: &PrecisionBudget,
    ) -> Result<Self> {
        if !(umax > 0.0 && umax.is_finite()) {
            return Err(Error::Domain(format!("table range must be positive, got {umax}")));
        }
        let h = umax / (n - 1) as f64;
        let values = (0..n)
            .map(|i| c_integral(i as f64 * h, a, b, budget))
            .collect::<Result<Vec<f64>>>()?;
        Ok(EdgeTable {
            spline: CubicSpline::uniform(0.0, h, values)?,
            log_kappa: log_kappa_hyperbolic(a, b, budget)?,
            spectral: a,
        })
    }

    /// The spectral value the table was built for.
    pub fn spectral(&self) -> f64 {
        self.spectral
    }

    /// Node count that resolves the sharpest feature of W_a on [0, umax]:
    /// the edge factor concentrates on a scale of eta - a as a approaches
    /// eta, so the grid keeps at least 40 nodes per feature width (floor
    /// spacing 0.009, capped at 60_000 nodes).
    pub fn suggested_nodes(a: f64, eta: f64, umax: f64) -> usize {
        let width = (eta - a.abs()).abs().max(1e-12);
        let h = (width / 40.0).min(0.009);
        (((umax / h).ceil() as usize).saturating_add(1)).clamp(600, 60_000)
    }

    /// log W_a(x, y) from the tabulated edge factor; |x ± y| must lie in range.
    pub fn log_edge(&self, x: f64, y: f64) -> Result<f64> {
        Ok(-self.log_kappa + self.spline.eval((x + y).abs())? + self.spline.eval((x - y).abs())?)
    }
}

/// Not-a-knot cubic spline on a uniform grid.
#[derive(Debug, Clone)]
struct CubicSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    fn uniform(x0: f64, h: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 6 {
            return Err(Error::Domain(format!("spline needs at least 6 nodes, got {n}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("spline spacing must be positive, got {h}")));
        }
        let r = |i: usize| 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (h * h);
        let mut m = vec![0.0f64; n];
        // Third-derivative continuity at the second and penultimate knots
        // collapses the first and last smoothness rows to single unknowns.
        m[1] = r(1) / 6.0;
        m[n - 2] = r(n - 2) / 6.0;
        let k = n - 4;
        let mut diag = vec![4.0f64; k];
        let mut rhs: Vec<f64> = (2..=n - 3).map(r).collect();
        rhs[0] -= m[1];
        rhs[k - 1] -= m[n - 2];
        for j in 1..k {
            let w = 1.0 / diag[j - 1];
            diag[j] -= w;
            rhs[j] -= w * rhs[j - 1];
        }
        m[k + 1] = rhs[k - 1] / diag[k - 1];
        for j in (0..k - 1).rev() {
            m[j + 2] = (rhs[j] - m[j + 3]) / diag[j];
        }
        m[0] = 2.0 * m[1] - m[2];
        m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
        Ok(CubicSpline { x0, h, y, m })
    }

    fn eval(&self, u: f64) -> Result<f64> {
        let n = self.y.len();
        let t = (u - self.x0) / self.h;
        if !(-1e-9..=(n - 1) as f64 + 1e-9).contains(&t) {
            return Err(Error::Domain(format!(
                "spline argument {u} outside tabulated range [{}, {}]",
                self.x0,
                self.x0 + (n - 1) as f64 * self.h
            )));
        }
        let i = (t.floor().max(0.0) as usize).min(n - 2);
        let dt = u - (self.x0 + i as f64 * self.h);
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let slope = (self.y[i + 1] - self.y[i]) / self.h - self.h * (2.0 * mi + mj) / 6.0;
        Ok(self.y[i] + dt * (slope + dt * (0.5 * mi + dt * (mj - mi) / (6.0 * self.h))))
    }
}
