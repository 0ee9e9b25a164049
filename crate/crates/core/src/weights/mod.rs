//! Boltzmann weight families: single-spin weights S and two-spin edge
//! weights W, with crossing, reflection, reality, and positivity contracts.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::budget::PrecisionBudget;
use crate::error::{Error, Result};
use crate::specfun::{EllipticNomes, ModularParam};

pub(crate) mod elliptic;
pub(crate) mod gamma;
pub(crate) mod hyperbolic;

pub use hyperbolic::EdgeTable;

/// Tolerance on the folded imaginary part of a log-weight before the
/// result is declared non-real.
const REALITY_TOL: f64 = 1e-9;

/// Continuous spin variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spin {
    pub x: f64,
}

/// Site variable carrying a continuous and an integer component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSpin {
    pub x: f64,
    pub n: i64,
}

/// A site variable of either kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpinVar {
    Spin(Spin),
    Dual(DualSpin),
}

impl SpinVar {
    /// Continuous spin from a bare coordinate.
    pub fn scalar(x: f64) -> Self {
        SpinVar::Spin(Spin { x })
    }

    /// Paired spin from its two components.
    pub fn dual(x: f64, n: i64) -> Self {
        SpinVar::Dual(DualSpin { x, n })
    }

    /// Continuous coordinate of either kind.
    pub fn x(&self) -> f64 {
        match self {
            SpinVar::Spin(s) => s.x,
            SpinVar::Dual(d) => d.x,
        }
    }

    pub(crate) fn as_spin(&self) -> Result<Spin> {
        match self {
            SpinVar::Spin(s) => Ok(*s),
            SpinVar::Dual(_) => {
                Err(Error::KindMismatch("expected a continuous spin, got a dual spin".into()))
            }
        }
    }

    pub(crate) fn as_dual(&self) -> Result<DualSpin> {
        match self {
            SpinVar::Dual(d) => Ok(*d),
            SpinVar::Spin(_) => {
                Err(Error::KindMismatch("expected a dual spin, got a continuous spin".into()))
            }
        }
    }
}

/// Spectral parameter bundled with the crossing point of its model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    value: f64,
    model_eta: f64,
}

impl SpectralParam {
    /// Physical-domain constructor: 0 < value < model_eta.
    pub fn new(value: f64, model_eta: f64) -> Result<Self> {
        if !(model_eta > 0.0 && model_eta.is_finite()) {
            return Err(Error::Domain(format!("crossing parameter must be positive, got {model_eta}")));
        }
        if !(value > 0.0 && value < model_eta) {
            return Err(Error::Domain(format!(
                "spectral value must lie in (0, {model_eta}), got {value}"
            )));
        }
        Ok(SpectralParam { value, model_eta })
    }

    /// Signed constructor for analytic continuation to |value| < model_eta,
    /// as needed by the inversion relations.
    pub fn new_signed(value: f64, model_eta: f64) -> Result<Self> {
        if !(model_eta > 0.0 && model_eta.is_finite()) {
            return Err(Error::Domain(format!("crossing parameter must be positive, got {model_eta}")));
        }
        if !(value.abs() < model_eta) {
            return Err(Error::Domain(format!(
                "spectral value must satisfy |value| < {model_eta}, got {value}"
            )));
        }
        Ok(SpectralParam { value, model_eta })
    }

    /// The spectral value.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The crossing point η of the owning model (1 for the gamma model).
    pub fn model_eta(&self) -> f64 {
        self.model_eta
    }

    /// The crossing-reflected parameter η − α.
    pub fn crossed(&self) -> Self {
        SpectralParam { value: self.model_eta - self.value, model_eta: self.model_eta }
    }

    /// The sign-reflected parameter −α.
    pub fn negated(&self) -> Self {
        SpectralParam { value: -self.value, model_eta: self.model_eta }
    }
}

/// The three weight families.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Model {
    Elliptic(EllipticNomes),
    Hyperbolic(ModularParam),
    Gamma,
}

impl Model {
    /// Crossing parameter η of the family (the gamma model normalizes to 1).
    pub fn eta(&self) -> f64 {
        match self {
            Model::Elliptic(nomes) => nomes.eta(),
            Model::Hyperbolic(b) => b.eta(),
            Model::Gamma => 1.0,
        }
    }

    /// Physical spectral parameter for this model.
    pub fn spectral(&self, value: f64) -> Result<SpectralParam> {
        SpectralParam::new(value, self.eta())
    }

    /// Signed spectral parameter for this model (inversion continuation).
    pub fn spectral_signed(&self, value: f64) -> Result<SpectralParam> {
        SpectralParam::new_signed(value, self.eta())
    }

    fn check_eta(&self, a: &SpectralParam) -> Result<()> {
        if (a.model_eta - self.eta()).abs() > 1e-12 * self.eta() {
            return Err(Error::KindMismatch(format!(
                "spectral parameter was built for eta = {}, model has eta = {}",
                a.model_eta,
                self.eta()
            )));
        }
        Ok(())
    }
}

/// Reduce an elliptic spin coordinate to its canonical representative in [0, π).
pub fn canonical_spin(s: Spin) -> Spin {
    Spin { x: s.x.rem_euclid(PI) }
}

/// Single-spin weight S of the given model.
pub fn single_spin_weight(m: &Model, s: SpinVar) -> Result<f64> {
    match m {
        Model::Elliptic(nomes) => elliptic::single_spin(s.as_spin()?.x, nomes),
        Model::Hyperbolic(b) => Ok(hyperbolic::single_spin(s.as_spin()?.x, b)),
        Model::Gamma => Ok(gamma::single_spin(s.as_dual()?)),
    }
}

/// Log of the edge weight W_α(s1, s2), guaranteed real by the reality gate.
pub fn log_edge_weight(
    m: &Model,
    a: SpectralParam,
    s1: SpinVar,
    s2: SpinVar,
    budget: &PrecisionBudget,
) -> Result<f64> {
    m.check_eta(&a)?;
    match m {
        Model::Elliptic(nomes) => {
            let (x, y) = (s1.as_spin()?.x, s2.as_spin()?.x);
            elliptic::log_edge(a.value, x, y, nomes)
        }
        Model::Hyperbolic(b) => {
            let (x, y) = (s1.as_spin()?.x, s2.as_spin()?.x);
            hyperbolic::log_edge(a.value, x, y, b, budget)
        }
        Model::Gamma => {
            let (d1, d2) = (s1.as_dual()?, s2.as_dual()?);
            let lw = gamma::log_edge(a.value, d1, d2)?;
            fold_real(lw.re, lw.im)
        }
    }
}

/// Edge weight W_α(s1, s2) > 0 on the physical domain.
pub fn edge_weight(m: &Model, a: SpectralParam, s1: SpinVar, s2: SpinVar) -> Result<f64> {
    Ok(log_edge_weight(m, a, s1, s2, &PrecisionBudget::default())?.exp())
}

/// Crossing-reflected edge weight W_{η−α}(s1, s2) (gamma model: W_{1−β}).
pub fn crossed_edge_weight(m: &Model, a: SpectralParam, s1: SpinVar, s2: SpinVar) -> Result<f64> {
    edge_weight(m, a.crossed(), s1, s2)
}

/// Fold the imaginary part of a log to (−π, π] and demand it be negligible.
pub(crate) fn fold_real(re: f64, im: f64) -> Result<f64> {
    let mut folded = im.rem_euclid(TAU);
    if folded > PI {
        folded -= TAU;
    }
    if folded.abs() > REALITY_TOL {
        return Err(Error::RealityViolation { im_log: folded, tol: REALITY_TOL });
    }
    Ok(re)
}
