//! The elliptic gamma function Φ in its two defining representations:
//! a double product over the nome lattice, and an exponential-sum form
//! valid in the strip |Im z| < η.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair of real elliptic nomes with 0 < p, q < 1; crossing parameter
/// η = −(ln p + ln q)/2 > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticNomes {
    p: f64,
    q: f64,
}

impl EllipticNomes {
    /// Validates 0 < p < 1 and 0 < q < 1.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::NomeDomain { which: 'p', modulus: p });
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::NomeDomain { which: 'q', modulus: q });
        }
        Ok(Self { p, q })
    }

    /// First nome.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Second nome.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Crossing parameter η = −(ln p + ln q)/2.
    pub fn eta(&self) -> f64 {
        -0.5 * (self.p.ln() + self.q.ln())
    }

    /// Modulus of the p-direction: τ = −i·ln p / π (purely imaginary, upper half-plane).
    pub fn tau(&self) -> Complex64 {
        Complex64::new(0.0, -self.p.ln() / std::f64::consts::PI)
    }

    /// Modulus of the q-direction: σ = −i·ln q / π.
    pub fn sigma(&self) -> Complex64 {
        Complex64::new(0.0, -self.q.ln() / std::f64::consts::PI)
    }

    /// Decay rates (−ln p, −ln q), both positive.
    pub(crate) fn decay(&self) -> (f64, f64) {
        (-self.p.ln(), -self.q.ln())
    }
}

/// Φ(z) as the double product Π_{j,k≥0} (1 − e^{2iz} q^{2j+1} p^{2k+1}) /
/// (1 − e^{−2iz} q^{2j+1} p^{2k+1}).
pub fn elliptic_gamma(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    let (p, q) = (nomes.p, nomes.q);
    let e2 = (2.0 * Complex64::i() * z).exp();
    let em2 = (-2.0 * Complex64::i() * z).exp();
    let reach = e2.norm().max(em2.norm());
    let cut = 1e-18 / reach.max(1.0);
    let mut val = Complex64::new(1.0, 0.0);
    let mut qj = q; // q^{2j+1}
    loop {
        if qj * p <= cut {
            break;
        }
        let mut f = qj * p; // q^{2j+1} p^{2k+1}
        loop {
            if f <= cut {
                break;
            }
            let den = 1.0 - em2 * f;
            if den.norm() < 1e-14 {
                return Err(Error::Pole { re: z.re, im: z.im });
            }
            val *= (1.0 - e2 * f) / den;
            f *= p * p;
        }
        qj *= q * q;
    }
    Ok(val)
}

/// Φ(z) via the exponential sum form, valid only in the strip |Im z| < η.
pub fn elliptic_gamma_strip(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    let eta = nomes.eta();
    if z.im.abs() >= eta {
        return Err(Error::Strip { im_z: z.im, eta });
    }
    let (dp, dq) = nomes.decay();
    let mut acc = Complex64::new(0.0, 0.0);
    let gap = 2.0 * (eta - z.im.abs());
    let mut settled = 0u32;
    for n in 1..=4000u32 {
        let nf = f64::from(n);
        // sin(2nz)·e^{−2ηn}, assembled from one-sided exponentials so neither
        // factor overflows inside the strip.
        let up = (2.0 * Complex64::i() * nf * z - 2.0 * eta * nf).exp();
        let dn = (-2.0 * Complex64::i() * nf * z - 2.0 * eta * nf).exp();
        let s = (up - dn) / Complex64::new(0.0, 2.0);
        let c = 4.0 * s / (nf * (1.0 - (-2.0 * nf * dp).exp()) * (1.0 - (-2.0 * nf * dq).exp()));
        acc += c;
        if (gap * nf).exp().recip() < 1e-18 {
            settled += 1;
            if settled > 2 {
                return Ok((Complex64::new(0.0, -0.5) * acc).exp());
            }
        }
    }
    Err(Error::Convergence("elliptic gamma strip series failed to settle".into()))
}
