//! The non-compact quantum dilogarithm φ: a subtracted-kernel integral
//! representation inside the strip |Im z| < η, and a q-Pochhammer
//! double-product factorization on the unit-circle regime.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::budget::{Interval, PrecisionBudget};
use crate::error::{Error, Result};
use crate::quad::integrate_finite;

/// Which arc of modular parameters the model lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModularRegime {
    /// b real and positive; η = (b + 1/b)/2 ≥ 1.
    RealPositive,
    /// b = e^{iθ} with 0 < θ < π/2; η = cos θ ∈ (0, 1), Im b² > 0.
    UnitCircle,
}

/// Modular parameter b of the hyperbolic weights, with η = Re(b + 1/b)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularParam {
    b: Complex64,
    regime: ModularRegime,
}

impl ModularParam {
    /// Real regime, b > 0.
    pub fn real(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!("real-regime b must be positive, got {b}")));
        }
        Ok(Self { b: Complex64::new(b, 0.0), regime: ModularRegime::RealPositive })
    }

    /// Unit-circle regime, b = e^{iθ} with 0 < θ < π/2.
    pub fn unit_circle(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "unit-circle angle must lie in (0, π/2), got {theta}"
            )));
        }
        Ok(Self { b: Complex64::from_polar(1.0, theta), regime: ModularRegime::UnitCircle })
    }

    /// Dispatches on a raw complex b: positive real, or upper-right unit circle.
    pub fn from_b(b: Complex64) -> Result<Self> {
        if b.im == 0.0 {
            Self::real(b.re)
        } else if (b.norm() - 1.0).abs() < 1e-9 && b.re > 0.0 && b.im > 0.0 {
            Self::unit_circle(b.arg())
        } else {
            Err(Error::Domain(format!(
                "b must be positive real or on the upper-right unit circle, got {b}"
            )))
        }
    }

    /// The modular parameter itself.
    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// Regime tag.
    pub fn regime(&self) -> ModularRegime {
        self.regime
    }

    /// Crossing parameter η = Re(b + 1/b)/2, real and positive in both regimes.
    pub fn eta(&self) -> f64 {
        match self.regime {
            ModularRegime::RealPositive => 0.5 * (self.b.re + 1.0 / self.b.re),
            ModularRegime::UnitCircle => self.b.re,
        }
    }

    /// b² + b⁻², real in both regimes.
    pub(crate) fn b_sq_plus_inv_sq(&self) -> f64 {
        match self.regime {
            ModularRegime::RealPositive => {
                let t = self.b.re * self.b.re;
                t + 1.0 / t
            }
            ModularRegime::UnitCircle => 2.0 * (self.b.re * self.b.re - self.b.im * self.b.im),
        }
    }

    /// sinh(yb)·sinh(y/b), real and positive for y > 0 in both regimes.
    pub(crate) fn sinh_product(&self, y: f64) -> f64 {
        match self.regime {
            ModularRegime::RealPositive => (y * self.b.re).sinh() * (y / self.b.re).sinh(),
            ModularRegime::UnitCircle => {
                let sh = (y * self.b.re).sinh();
                let sn = (y * self.b.im).sin();
                sh * sh + sn * sn
            }
        }
    }

    /// sinh(yb)·sinh(y/b) − y², assembled from cancellation-free primitives.
    pub(crate) fn sinh_product_defect(&self, y: f64) -> f64 {
        match self.regime {
            ModularRegime::RealPositive => {
                let br = self.b.re;
                let plus = 0.5 * y * (br + 1.0 / br);
                let minus = 0.5 * y * (br - 1.0 / br);
                sinh_sq_minus_sq(plus) - sinh_sq_minus_sq(minus)
            }
            ModularRegime::UnitCircle => {
                sinh_sq_minus_sq(y * self.b.re) - sq_minus_sin_sq(y * self.b.im)
            }
        }
    }
}

/// sinh²u − u², stable near 0.
pub(crate) fn sinh_sq_minus_sq(u: f64) -> f64 {
    if u.abs() < 0.5 {
        let u2 = u * u;
        u2 * u2
            * (1.0 / 3.0
                + u2 * (2.0 / 45.0
                    + u2 * (1.0 / 315.0
                        + u2 * (2.0 / 14175.0
                            + u2 * (1.0 / 233887.5 + u2 * (8192.0 / 87178291200.0))))))
    } else {
        let s = u.sinh();
        s * s - u * u
    }
}

/// v² − sin²v, stable near 0.
pub(crate) fn sq_minus_sin_sq(v: f64) -> f64 {
    if v.abs() < 0.5 {
        let v2 = v * v;
        v2 * v2
            * (1.0 / 3.0
                - v2 * (2.0 / 45.0
                    - v2 * (1.0 / 315.0
                        - v2 * (2.0 / 14175.0
                            - v2 * (1.0 / 233887.5 - v2 * (8192.0 / 87178291200.0))))))
    } else {
        let s = v.sin();
        v * v - s * s
    }
}

/// sinh v − v, stable near 0.
pub(crate) fn sinh_minus_arg(v: f64) -> f64 {
    if v.abs() < 0.5 {
        let v2 = v * v;
        v * v2
            * (1.0 / 6.0
                + v2 * (1.0 / 120.0
                    + v2 * (1.0 / 5040.0
                        + v2 * (1.0 / 362880.0
                            + v2 * (1.0 / 39916800.0 + v2 / 6227020800.0)))))
    } else {
        v.sinh() - v
    }
}

/// u − sin u for complex u, stable near 0.
pub(crate) fn arg_minus_sin(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let u2 = u * u;
        u * u2
            * (1.0 / 6.0
                - u2 * (1.0 / 120.0
                    - u2 * (1.0 / 5040.0
                        - u2 * (1.0 / 362880.0
                            - u2 * (1.0 / 39916800.0 - u2 / 6227020800.0)))))
    } else {
        u - u.sin()
    }
}

/// log φ(z) through the subtracted-kernel integral; requires |Im z| < η.
pub fn log_ncqdl(z: Complex64, b: &ModularParam, budget: &PrecisionBudget) -> Result<Complex64> {
    let eta = b.eta();
    if z.im.abs() >= eta {
        return Err(Error::Strip { im_z: z.im, eta });
    }
    let y_max = (60.0 / (2.0 * (eta - z.im.abs()))).min(330.0 / eta).min(4000.0);
    let kern = move |y: f64| {
        let ss = b.sinh_product(y);
        let d = b.sinh_product_defect(y);
        -(arg_minus_sin(2.0 * y * z) + 2.0 * z * d / y) / (y * ss)
    };
    let r = integrate_finite(kern, Interval::new(0.0, y_max)?, budget)?;
    let j = r.value - 2.0 * z / y_max;
    let bb = b.b_sq_plus_inv_sq();
    Ok(Complex64::new(0.0, -0.5) * j
        + Complex64::new(0.0, 0.5 * PI) * z * z
        + Complex64::new(0.0, PI * bb / 24.0))
}

/// φ(z) through the integral path.
pub fn ncqdl_integral(z: Complex64, b: &ModularParam, budget: &PrecisionBudget) -> Result<Complex64> {
    Ok(log_ncqdl(z, b, budget)?.exp())
}

fn qpoch(a: Complex64, q: Complex64) -> Result<Complex64> {
    let mut out = Complex64::new(1.0, 0.0);
    let mut t = a;
    for _ in 0..100_000 {
        out *= 1.0 - t;
        t *= q;
        if t.norm() < 1e-18 {
            return Ok(out);
        }
    }
    Err(Error::Convergence("q-Pochhammer product failed to settle".into()))
}

/// φ(z) through the double q-Pochhammer product; unit-circle regime only.
pub fn ncqdl_product(z: Complex64, b: &ModularParam) -> Result<Complex64> {
    let bv = b.b();
    let b2 = bv * bv;
    let qb = (Complex64::i() * PI * b2).exp();
    if qb.norm() >= 1.0 - 1e-12 {
        return Err(Error::Contour(
            "product path needs Im b² > 0 (unit-circle regime)".into(),
        ));
    }
    let qt = (-Complex64::i() * PI / b2).exp();
    let num = qpoch(-qb * (2.0 * PI * bv * z).exp(), qb * qb)?;
    let den = qpoch(-qt * (2.0 * PI * z / bv).exp(), qt * qt)?;
    if den.norm() < 1e-280 {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    Ok(num / den)
}

/// φ(z), dispatched to the natural path for the regime.
pub fn ncqdl(z: Complex64, b: &ModularParam, budget: &PrecisionBudget) -> Result<Complex64> {
    match b.regime() {
        ModularRegime::RealPositive => ncqdl_integral(z, b, budget),
        ModularRegime::UnitCircle => ncqdl_product(z, b),
    }
}
