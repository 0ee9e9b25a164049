//! Numerical laboratory for three families of star-triangle-solvable
//! lattice models: elliptic, hyperbolic, and a gamma-function model
//! with paired continuous/integer spins.
//!
//! The crate verifies the star-triangle and inversion identities of the
//! three weight families at controlled precision, follows the two limit
//! degenerations between them, and evaluates partition functions on
//! desk-scale lattices exactly and by Metropolis sampling.

pub mod budget;
pub mod error;
pub mod lattice;
pub mod quad;
pub mod specfun;
pub mod verify;
pub mod weights;

pub use budget::{Interval, PrecisionBudget, QuadResult, TailPolicy};
pub use error::{Error, Result};
pub use lattice::{
    exact_edge_log_means, exact_partition, free_energy_trend, gauss_legendre, mc_run, Boundary,
    GridDiscretization, LatticeSpec, MCConfig, McRun, PartitionResult, TrendPoint,
};
pub use specfun::{EllipticNomes, ModularParam, ModularRegime};
pub use verify::{
    hyperbolic_limit_residual, inversion_campaign, inversion_pointwise, inversion_weak,
    random_star_config, str_campaign, str_residual, strong_coupling_residual, BudgetUsed,
    CampaignItem, InversionItem, LimitProbe, LimitSchedule, StarConfig, VerificationReport,
    WeakInversionKernel,
};
pub use weights::{
    canonical_spin, crossed_edge_weight, edge_weight, log_edge_weight, single_spin_weight,
    DualSpin, EdgeTable, Model, SpectralParam, Spin, SpinVar,
};
