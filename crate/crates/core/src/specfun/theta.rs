//! Jacobi θ₁ series and the shifted-product theta used for
//! quasi-period continuation of elliptic weight ratios.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// θ₁(z|q) = 2 Σ_{n≥0} (−1)ⁿ q^{(n+1/2)²} sin((2n+1)z) for real nome 0 ≤ q < 1.
pub fn theta1(z: Complex64, q: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::NomeDomain { which: 'q', modulus: q.abs() });
    }
    if q == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let lnq = q.ln();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    for n in 0..200u32 {
        let nf = f64::from(n);
        let amp = (lnq * (nf + 0.5) * (nf + 0.5)).exp();
        let term = amp * ((2.0 * nf + 1.0) * z).sin();
        sum += if n % 2 == 0 { term } else { -term };
        let mag = term.norm();
        scale = scale.max(mag);
        if n >= 4 && mag < 1e-18 * scale.max(1e-300) {
            return Ok(2.0 * sum);
        }
    }
    Err(Error::Convergence("theta1 series failed to settle within 200 terms".into()))
}

/// Π_{k≥0} (1 − nomeᵏ·w)(1 − nome^{k+1}/w): the theta factor picked up when an
/// elliptic-gamma ratio is continued one quasi-period past its strip.
pub(crate) fn theta_shift_product(w: Complex64, nome: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&nome) {
        return Err(Error::NomeDomain { which: 'q', modulus: nome.abs() });
    }
    let mut out = Complex64::new(1.0, 0.0);
    let mut a = 1.0f64;
    for _ in 0..400 {
        out *= (1.0 - a * w) * (1.0 - a * nome / w);
        a *= nome;
        if a * (w.norm() + nome / w.norm()) < 1e-19 {
            return Ok(out);
        }
    }
    Err(Error::Convergence("theta shift product failed to settle".into()))
}
