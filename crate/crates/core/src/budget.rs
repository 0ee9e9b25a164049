use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy and work limits threaded through every numerical routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionBudget {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
    pub max_refinements: usize,
}

impl PrecisionBudget {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize, max_refinements: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || max_terms == 0 {
            return Err(Error::Config(format!(
                "invalid budget: rel_tol = {rel_tol}, max_terms = {max_terms}"
            )));
        }
        Ok(Self { rel_tol, abs_tol, max_terms, max_refinements })
    }

    /// Tighter budget for oracle-grade reference evaluations.
    pub fn strict() -> Self {
        Self { rel_tol: 1e-13, abs_tol: 1e-15, max_terms: 2_000_000, max_refinements: 4000 }
    }
}

impl Default for PrecisionBudget {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-14, max_terms: 500_000, max_refinements: 1500 }
    }
}

/// Finite integration interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

/// Growth schedule for line integrals and bilateral sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    pub initial_cutoff: f64,
    pub growth_factor: f64,
    pub stop_rel: f64,
}

impl TailPolicy {
    pub fn new(initial_cutoff: f64, growth_factor: f64, stop_rel: f64) -> Result<Self> {
        if !(growth_factor >= 1.5) {
            return Err(Error::Config(format!("growth_factor {growth_factor} < 1.5")));
        }
        if !(initial_cutoff > 0.0) || !(stop_rel > 0.0) {
            return Err(Error::Config("tail policy cutoffs must be positive".into()));
        }
        Ok(Self { initial_cutoff, growth_factor, stop_rel })
    }
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { initial_cutoff: 8.0, growth_factor: 2.0, stop_rel: 1e-12 }
    }
}

/// Outcome of a quadrature or summation, including the work spent.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Final cutoff used by line/sum paths (0 for finite intervals).
    pub truncation_used: f64,
}

impl QuadResult {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}
