//! Special functions underlying the three weight families: complex
//! log-gamma, Jacobi θ₁, the elliptic gamma function, the non-compact
//! quantum dilogarithm, and the two κ normalization factors.

mod elliptic_gamma;
mod gamma;
mod kappa;
mod ncqdl;
mod theta;

pub use elliptic_gamma::{elliptic_gamma, elliptic_gamma_strip, EllipticNomes};
pub use gamma::{gamma_pm_log, gamma_q, log_gamma};
pub use kappa::{kappa_elliptic, kappa_hyperbolic};
pub use ncqdl::{log_ncqdl, ncqdl, ncqdl_integral, ncqdl_product, ModularParam, ModularRegime};
pub use theta::theta1;

pub(crate) use kappa::{kappa_elliptic_continued, log_kappa_elliptic, log_kappa_hyperbolic};
pub(crate) use ncqdl::sinh_minus_arg;
pub(crate) use theta::theta_shift_product;
