//! Gamma-function two-spin weight family on dual (real, integer) sites.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{gamma_pm_log, log_gamma};
use crate::weights::DualSpin;

/// Single-spin weight S(x, n) = (x² + n²)/(2π).
pub(crate) fn single_spin(s: DualSpin) -> f64 {
    (s.x * s.x + (s.n * s.n) as f64) / (2.0 * PI)
}

/// Log of the eight-gamma edge weight W_β(s1, s2); real up to branch
/// multiples of 2π which the caller folds away.
pub(crate) fn log_edge(beta: f64, s1: DualSpin, s2: DualSpin) -> Result<Complex64> {
    if beta.abs() >= 1.0 {
        return Err(Error::Domain(format!("gamma edge weight needs |beta| < 1, got {beta}")));
    }
    let a_lo = Complex64::new(0.5 * (1.0 - beta), 0.0);
    let a_hi = Complex64::new(0.5 * (1.0 + beta), 0.0);
    let sum_x = s1.x + s2.x;
    let dif_x = s1.x - s2.x;
    let sum_n = (s1.n + s2.n) as f64;
    let dif_n = (s2.n - s1.n) as f64;
    let cp = Complex64::new(-0.5 * sum_n, 0.5 * sum_x);
    let cm = Complex64::new(-0.5 * dif_n, 0.5 * dif_x);
    let dp = Complex64::new(0.5 * sum_n, 0.5 * sum_x);
    let dm = Complex64::new(0.5 * dif_n, 0.5 * dif_x);
    // Grouped so that β → −β negates each difference bitwise.
    let g_plus = gamma_pm_log(a_lo, cp)? - gamma_pm_log(a_hi, dp)?;
    let g_minus = gamma_pm_log(a_lo, cm)? - gamma_pm_log(a_hi, dm)?;
    let pref = log_gamma(a_hi)? - log_gamma(a_lo)?;
    Ok(g_plus + g_minus + pref)
}
