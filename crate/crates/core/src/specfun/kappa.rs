//! Normalization factors κ of the elliptic and hyperbolic edge weights.

use num_complex::Complex64;

use crate::budget::{Interval, PrecisionBudget};
use crate::error::{Error, Result};
use crate::quad::integrate_finite;
use crate::specfun::elliptic_gamma::EllipticNomes;
use crate::specfun::ncqdl::{sinh_minus_arg, ModularParam};

/// log κ(α) for the elliptic weights: folded bilateral sum, odd in α,
/// convergent for |α| < η.
pub(crate) fn log_kappa_elliptic(alpha: f64, nomes: &EllipticNomes) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha < 0.0 {
        return Ok(-log_kappa_elliptic(-alpha, nomes)?);
    }
    let eta = nomes.eta();
    if alpha >= eta {
        return Err(Error::Domain(format!(
            "elliptic kappa series needs |alpha| < eta, got alpha={alpha}, eta={eta}"
        )));
    }
    let (dp, dq) = nomes.decay();
    let gap = 4.0 * (eta - alpha);
    let nmax = 400usize.max((12.0 / gap) as usize + 100);
    let mut sum = 0.0f64;
    for n in 1..=nmax {
        let nf = n as f64;
        let term = (-gap * nf).exp() * (1.0 - (-8.0 * alpha * nf).exp())
            / (nf
                * (1.0 - (-2.0 * nf * dp).exp())
                * (1.0 - (-2.0 * nf * dq).exp())
                * (1.0 + (-4.0 * eta * nf).exp()));
        sum += term;
        if n > 8 && term < 1e-18 * sum.max(1e-300) {
            return Ok(sum);
        }
    }
    Ok(sum)
}

/// κ(α) for the elliptic weights on the physical domain 0 < α < η.
pub fn kappa_elliptic(alpha: f64, nomes: &EllipticNomes, budget: &PrecisionBudget) -> Result<f64> {
    let eta = nomes.eta();
    if !(alpha > 0.0 && alpha < eta) {
        return Err(Error::Domain(format!(
            "kappa_elliptic domain is 0 < alpha < eta = {eta}, got {alpha}"
        )));
    }
    let _ = budget;
    Ok(log_kappa_elliptic(alpha, nomes)?.exp())
}

/// κ(α) continued past the series domain through its signed lattice product;
/// valid for |α| < 2η, and negative just above α = η.
pub(crate) fn kappa_elliptic_continued(alpha: f64, nomes: &EllipticNomes) -> Result<f64> {
    let eta = nomes.eta();
    if alpha.abs() >= 2.0 * eta {
        return Err(Error::Domain(format!(
            "continued kappa product needs |alpha| < 2*eta = {}, got {alpha}",
            2.0 * eta
        )));
    }
    let (dp, dq) = nomes.decay();
    let e_minus = (-4.0 * alpha).exp();
    let e_plus = (4.0 * alpha).exp();
    let mut tot = 0.0f64;
    let mut sign = 1.0f64;
    for j in 0..60 {
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        let ej = (-4.0 * eta * (j as f64 + 1.0)).exp();
        if ej < 1e-30 {
            break;
        }
        for a in 0..60 {
            let pa = ej * (-2.0 * dp * a as f64).exp();
            if pa < 1e-26 {
                break;
            }
            for b in 0..60 {
                let e = pa * (-2.0 * dq * b as f64).exp();
                if e < 1e-26 {
                    break;
                }
                let x1 = 1.0 - e_minus * e;
                let x2 = 1.0 - e_plus * e;
                if x1 == 0.0 || x2 == 0.0 {
                    return Err(Error::Pole { re: alpha, im: 0.0 });
                }
                if x1 < 0.0 {
                    sign = -sign;
                }
                if x2 < 0.0 {
                    sign = -sign;
                }
                tot += sgn * (x1.abs().ln() - x2.abs().ln());
            }
        }
    }
    Ok(sign * tot.exp())
}

/// log κ(α) for the hyperbolic weights: folded subtracted integral, odd in α,
/// manifestly real in both regimes; |α| < η.
pub(crate) fn log_kappa_hyperbolic(
    alpha: f64,
    b: &ModularParam,
    budget: &PrecisionBudget,
) -> Result<f64> {
    let eta = b.eta();
    if alpha.abs() >= eta {
        return Err(Error::Domain(format!(
            "hyperbolic kappa needs |alpha| < eta = {eta}, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let y_max = (60.0 / (4.0 * (eta - alpha.abs()))).min(165.0 / eta).min(4000.0);
    let kern = move |y: f64| {
        let ss = b.sinh_product(y);
        let sh_eta = (y * eta).sinh();
        let ch = (2.0 * y * eta).cosh();
        // ss·cosh(2yη) − y², split so every piece is cancellation-free.
        let defect = 2.0 * ss * sh_eta * sh_eta + b.sinh_product_defect(y);
        let v = (sinh_minus_arg(4.0 * y * alpha) - 4.0 * alpha * defect / y) / (y * ss * ch);
        Complex64::new(v, 0.0)
    };
    let r = integrate_finite(kern, Interval::new(0.0, y_max)?, budget)?;
    Ok(0.25 * (r.value.re - 4.0 * alpha / y_max))
}

/// κ(α) for the hyperbolic weights, real positive on 0 < α < η.
pub fn kappa_hyperbolic(alpha: f64, b: &ModularParam, budget: &PrecisionBudget) -> Result<f64> {
    Ok(log_kappa_hyperbolic(alpha, b, budget)?.exp())
}
