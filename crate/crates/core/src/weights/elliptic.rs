//! Elliptic weight family: stable series for the edge-factor logarithm,
//! its quasi-period continuation, and the theta-product single-spin weight.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{theta1, theta_shift_product, EllipticNomes};
use crate::specfun::log_kappa_elliptic;

/// Log of the four-factor edge ratio per edge argument u, for |a| < η.
///
/// The geometric part is resummed in closed form so the residual series
/// converges at a rate independent of η − a.
pub(crate) fn log_ratio(u: f64, a: f64, nomes: &EllipticNomes) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    if a < 0.0 {
        return Ok(-log_ratio(u, -a, nomes)?);
    }
    let eta = nomes.eta();
    if a >= eta {
        return Err(Error::Domain(format!(
            "elliptic edge ratio series needs |a| < eta = {eta}, got {a}"
        )));
    }
    let (dp, dq) = nomes.decay();
    let tm = (-2.0 * (eta - a)).exp();
    let tp = (-2.0 * (eta + a)).exp();
    let c2u = (2.0 * u).cos();
    let closed = (1.0 - 2.0 * tp * c2u + tp * tp).ln() - (1.0 - 2.0 * tm * c2u + tm * tm).ln();
    let mut sum = 0.0f64;
    for n in 1..=1200u32 {
        let nf = f64::from(n);
        let ep = (-2.0 * nf * dp).exp();
        let eq = (-2.0 * nf * dq).exp();
        let excess = (ep + eq - ep * eq) / ((1.0 - ep) * (1.0 - eq));
        let rn = 2.0 / nf * ((-2.0 * nf * (eta - a)).exp() - (-2.0 * nf * (eta + a)).exp()) * excess;
        sum += rn * (2.0 * nf * u).cos();
        if n > 8 && rn.abs() < 1e-18 * (1.0 + sum.abs()) {
            return Ok(closed + sum);
        }
    }
    Err(Error::Convergence("elliptic edge ratio residual series failed to settle".into()))
}

/// log W_a(x, y) = L(x+y; a) + L(x−y; a) − log κ(a).
pub(crate) fn log_edge(a: f64, x: f64, y: f64, nomes: &EllipticNomes) -> Result<f64> {
    Ok(log_ratio(x + y, a, nomes)? + log_ratio(x - y, a, nomes)?
        - log_kappa_elliptic(a, nomes)?)
}

/// Single-spin weight S(x) = e^{η/2}/(2π) · θ₁(2x|p) θ₁(2x|q).
pub(crate) fn single_spin(x: f64, nomes: &EllipticNomes) -> Result<f64> {
    let z = Complex64::new(2.0 * x, 0.0);
    let tp = theta1(z, nomes.p())?.re;
    let tq = theta1(z, nomes.q())?.re;
    Ok((0.5 * nomes.eta()).exp() / (2.0 * PI) * tp * tq)
}

/// Edge ratio continued one quasi-period past the series strip,
/// valid for η < a′ < 2η; real, possibly negative.
pub(crate) fn ratio_continued(u: f64, a_prime: f64, nomes: &EllipticNomes) -> Result<f64> {
    let eta = nomes.eta();
    if !(a_prime > eta && a_prime < 2.0 * eta) {
        return Err(Error::Domain(format!(
            "continued edge ratio needs eta < a' < 2*eta = {}, got {a_prime}",
            2.0 * eta
        )));
    }
    let (dp, dq) = nomes.decay();
    let (dbig, dsmall) = if dp >= dq { (dp, dq) } else { (dq, dp) };
    let w = a_prime - dbig;
    let nome = (-2.0 * dsmall).exp();
    let phase = Complex64::new(0.0, 2.0 * u).exp();
    let w1 = phase * (-2.0 * w - 2.0 * eta).exp();
    let w2 = phase * (2.0 * w + dbig - dsmall).exp();
    let th = theta_shift_product(w1, nome)? * theta_shift_product(w2, nome)?;
    if th.norm() < 1e-14 {
        return Err(Error::Pole { re: u, im: a_prime });
    }
    if th.im.abs() > 1e-9 * th.norm() {
        return Err(Error::RealityViolation { im_log: th.im.atan2(th.re), tol: 1e-9 });
    }
    Ok(log_ratio(u, w, nomes)?.exp() / th.re)
}
