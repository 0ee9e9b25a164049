//! Identity verification: star-triangle residuals, pointwise and weak
//! inversion relations, limit degenerations between the weight families,
//! and deterministic seeded campaigns over random configurations.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{Interval, PrecisionBudget};
use crate::error::{Error, Result};
use crate::quad::integrate_finite;
use crate::specfun::{
    kappa_elliptic_continued, log_gamma, log_kappa_elliptic, log_kappa_hyperbolic, EllipticNomes,
    ModularParam,
};
use crate::weights::{
    elliptic, gamma, hyperbolic, log_edge_weight, DualSpin, EdgeTable, Model, SpectralParam,
    SpinVar,
};

/// A star: three outer spins and a spectral split of the crossing point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarConfig {
    outer: [SpinVar; 3],
    spectral: [SpectralParam; 3],
}

impl StarConfig {
    /// Requires three physical spectral values that sum to the crossing point.
    pub fn new(outer: [SpinVar; 3], spectral: [SpectralParam; 3]) -> Result<Self> {
        let eta = spectral[0].model_eta();
        let mut sum = 0.0;
        for a in &spectral {
            if (a.model_eta() - eta).abs() > 1e-12 * eta.abs() {
                return Err(Error::KindMismatch(
                    "spectral values built against different crossing points".into(),
                ));
            }
            if !(a.value() > 0.0 && a.value() < eta) {
                return Err(Error::Domain(format!(
                    "star spectral values must lie in (0, {eta}), got {}",
                    a.value()
                )));
            }
            sum += a.value();
        }
        if (sum - eta).abs() > 1e-9 * eta {
            return Err(Error::Domain(format!(
                "star spectral values must sum to {eta}, got {sum}"
            )));
        }
        Ok(StarConfig { outer, spectral })
    }

    /// The three outer spins.
    pub fn outer(&self) -> &[SpinVar; 3] {
        &self.outer
    }

    /// The three spectral parameters.
    pub fn spectral(&self) -> &[SpectralParam; 3] {
        &self.spectral
    }

    /// The same star with spins and spectral roles cyclically advanced.
    pub fn cycled(&self) -> Self {
        StarConfig {
            outer: [self.outer[1], self.outer[2], self.outer[0]],
            spectral: [self.spectral[1], self.spectral[2], self.spectral[0]],
        }
    }
}

/// Cutoffs reached and integrand evaluations spent producing a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetUsed {
    pub cutoffs: f64,
    pub evaluations: u64,
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub r_factor: f64,
    pub budget_used: BudgetUsed,
    pub passed: bool,
}

impl VerificationReport {
    fn from_sides(lhs: f64, rhs: f64, budget_used: BudgetUsed, tol: f64) -> Self {
        let abs_residual = (lhs - rhs).abs();
        let rel_residual = abs_residual / lhs.abs().max(rhs.abs());
        VerificationReport {
            lhs,
            rhs,
            abs_residual,
            rel_residual,
            r_factor: lhs / rhs,
            budget_used,
            passed: rel_residual.is_finite() && rel_residual <= tol,
        }
    }
}

/// Integration tolerance derived from a report tolerance: two decades
/// tighter, clamped to what the integrand class supports. Sub-1e-12
/// requests pass through unclamped so an impossible budget surfaces as
/// `BudgetExhausted` instead of silently loosening.
fn inner_rel(tol: f64, floor: f64) -> f64 {
    let eff = tol * 1e-2;
    if tol >= 1e-12 {
        eff.max(floor).min(1e-9)
    } else {
        eff
    }
}

fn inner_budget(budget: &PrecisionBudget, floor: f64, abs_tol: f64) -> PrecisionBudget {
    PrecisionBudget {
        rel_tol: inner_rel(budget.rel_tol, floor),
        abs_tol,
        max_terms: budget.max_terms.max(500_000),
        max_refinements: budget.max_refinements.max(4_000),
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Convergence(format!("{what} produced a non-finite value")))
    }
}

/// Star-triangle residual report at one configuration: the smeared star
/// integral against the triangle product.
pub fn str_residual(m: &Model, cfg: &StarConfig, budget: &PrecisionBudget) -> Result<VerificationReport> {
    let x = cfg.outer();
    let a = cfg.spectral();
    let log_rhs = log_edge_weight(m, a[0], x[1], x[2], budget)?
        + log_edge_weight(m, a[1], x[0], x[2], budget)?
        + log_edge_weight(m, a[2], x[1], x[0], budget)?;
    let rhs = finite(log_rhs.exp(), "triangle product")?;
    let (lhs, used) = match m {
        Model::Elliptic(nomes) => star_lhs_elliptic(nomes, cfg, budget)?,
        Model::Hyperbolic(b) => star_lhs_hyperbolic(b, cfg, budget)?,
        Model::Gamma => star_lhs_gamma(cfg, budget)?,
    };
    finite(lhs, "star integral")?;
    Ok(VerificationReport::from_sides(lhs, rhs, used, budget.rel_tol))
}

fn star_lhs_elliptic(
    nomes: &EllipticNomes,
    cfg: &StarConfig,
    budget: &PrecisionBudget,
) -> Result<(f64, BudgetUsed)> {
    let eta = nomes.eta();
    let mut xs = [0.0; 3];
    let mut lk = [0.0; 3];
    for i in 0..3 {
        xs[i] = cfg.outer[i].as_spin()?.x;
        lk[i] = log_kappa_elliptic(eta - cfg.spectral[i].value(), nomes)?;
    }
    let ib = inner_budget(budget, 1e-12, 0.0);
    let f = |z: f64| -> Complex64 {
        let mut lw = 0.0;
        for i in 0..3 {
            let a = eta - cfg.spectral[i].value();
            let lp = elliptic::log_ratio(xs[i] + z, a, nomes).unwrap_or(f64::NAN);
            let lm = elliptic::log_ratio(xs[i] - z, a, nomes).unwrap_or(f64::NAN);
            lw += lp + lm - lk[i];
        }
        let s = elliptic::single_spin(z, nomes).unwrap_or(f64::NAN);
        Complex64::new(s * lw.exp(), 0.0)
    };
    let r = integrate_finite(f, Interval::new(0.0, PI)?, &ib)?;
    Ok((r.value.re, BudgetUsed { cutoffs: 0.0, evaluations: r.evaluations as u64 }))
}

fn star_lhs_hyperbolic(
    b: &ModularParam,
    cfg: &StarConfig,
    budget: &PrecisionBudget,
) -> Result<(f64, BudgetUsed)> {
    let eta = b.eta();
    let mut xs = [0.0; 3];
    for i in 0..3 {
        xs[i] = cfg.outer[i].as_spin()?.x;
    }
    let t_cut = 38.0 / (4.0 * PI * eta);
    let umax = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())) + t_cut + 1.0;
    let ib = inner_budget(budget, 1e-10, 0.0);
    let tables = (0..3)
        .into_par_iter()
        .map(|i| {
            let a = eta - cfg.spectral[i].value();
            EdgeTable::new(a, b, umax, EdgeTable::suggested_nodes(a, eta, umax), &ib)
        })
        .collect::<Result<Vec<EdgeTable>>>()?;
    let f = |z: f64| -> Complex64 {
        let mut lw = 0.0;
        for (i, t) in tables.iter().enumerate() {
            lw += t.log_edge(xs[i], z).unwrap_or(f64::NAN);
        }
        Complex64::new(hyperbolic::single_spin(z, b) * lw.exp(), 0.0)
    };
    let r = integrate_finite(f, Interval::new(-t_cut, t_cut)?, &ib)?;
    Ok((r.value.re, BudgetUsed { cutoffs: t_cut, evaluations: r.evaluations as u64 }))
}

fn star_lhs_gamma(cfg: &StarConfig, budget: &PrecisionBudget) -> Result<(f64, BudgetUsed)> {
    const X_CUT: f64 = 70.0;
    const N_CAP: i64 = 40;
    let mut ds = [DualSpin { x: 0.0, n: 0 }; 3];
    let mut cb = [0.0; 3];
    for i in 0..3 {
        ds[i] = cfg.outer[i].as_dual()?;
        cb[i] = 1.0 - cfg.spectral[i].value();
    }
    let rel = inner_rel(budget.rel_tol, 1e-9);

    // One n0 section: the x0 integral at fixed n0 plus a fitted power tail.
    let section = |n0: i64, abs_tol: f64| -> Result<(f64, u64)> {
        let f = |x0: f64| -> Complex64 {
            let s0 = DualSpin { x: x0, n: n0 };
            let mut lw = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                match gamma::log_edge(cb[i], ds[i], s0) {
                    Ok(v) => lw += v,
                    Err(_) => return Complex64::new(f64::NAN, 0.0),
                }
            }
            gamma::single_spin(s0) * lw.exp()
        };
        let ib = PrecisionBudget {
            rel_tol: rel,
            abs_tol,
            max_terms: budget.max_terms.max(500_000),
            max_refinements: budget.max_refinements.max(4_000),
        };
        let r = integrate_finite(f, Interval::new(-X_CUT, X_CUT)?, &ib)?;
        let mut v = r.value.re;
        // Power-law remainder beyond the x cutoff, fitted from two probes.
        let t1 = X_CUT / 1.25;
        let f1 = f(t1).re + f(-t1).re;
        let f2 = f(X_CUT).re + f(-X_CUT).re;
        if f1 > 0.0 && f2 > 0.0 && f2 < f1 {
            let s = (f1 / f2).ln() / 1.25f64.ln();
            if s > 1.0 {
                v += f2 * X_CUT / (s - 1.0);
            }
        }
        Ok((v, r.evaluations as u64 + 4))
    };

    let (v0, mut evals) = section(0, 0.0)?;
    let mut total = v0;
    let mut scale = total.abs().max(1e-300);
    let mut lo = 1i64;
    let mut edge_prev: Option<(i64, f64)> = None;
    let mut edge_last: Option<(i64, f64)> = None;
    loop {
        let hi = (lo + 3).min(N_CAP);
        let abs_tol = 1e-12 * scale;
        let parts = (lo..=hi)
            .into_par_iter()
            .map(|k| {
                let (vp, ep) = section(k, abs_tol)?;
                let (vm, em) = section(-k, abs_tol)?;
                Ok((k, vp + vm, ep + em))
            })
            .collect::<Result<Vec<(i64, f64, u64)>>>()?;
        let mut shell = 0.0;
        for &(_, v, e) in &parts {
            shell += v;
            evals += e;
        }
        if parts.len() >= 2 {
            edge_prev = Some((parts[parts.len() - 2].0, parts[parts.len() - 2].1));
            edge_last = Some((parts[parts.len() - 1].0, parts[parts.len() - 1].1));
        } else if let Some(&(k, v, _)) = parts.last() {
            edge_prev = edge_last;
            edge_last = Some((k, v));
        }
        total += shell;
        scale = scale.max(total.abs());
        if shell.abs() < 1e-9 * total.abs() || hi >= N_CAP {
            break;
        }
        lo = hi + 1;
    }

    // Fitted bilateral remainder in n0 from the last two band edges.
    if let (Some((n1, f1)), Some((n2, f2))) = (edge_prev, edge_last) {
        if f1 > 0.0 && f2 > 0.0 && f2 < f1 && n2 > n1 {
            let s = (f1 / f2).ln() / (n2 as f64 / n1 as f64).ln();
            if s > 1.0 {
                total += f2 * n2 as f64 / (s - 1.0);
            }
        }
    }

    let cutoffs = edge_last.map_or(0.0, |(n, _)| n as f64);
    Ok((0.5 * total, BudgetUsed { cutoffs, evaluations: evals }))
}

/// |W_α(s1, s2) · W_{−α}(s1, s2) − 1| at one spin pair.
pub fn inversion_pointwise(
    m: &Model,
    a: SpectralParam,
    s1: SpinVar,
    s2: SpinVar,
    budget: &PrecisionBudget,
) -> Result<f64> {
    let l1 = log_edge_weight(m, a, s1, s2, budget)?;
    let l2 = log_edge_weight(m, a.negated(), s1, s2, budget)?;
    Ok(((l1 + l2).exp() - 1.0).abs())
}

/// Midpoint-grid composition of the two elliptic kernels around the
/// crossing point: W_{η−α} smeared against W_{η+α} applied to a test
/// function. As α → 0⁺ the composition approaches the delta-comb that the
/// inversion relation prescribes.
pub struct WeakInversionKernel<F: Fn(f64) -> f64> {
    nomes: EllipticNomes,
    alpha: f64,
    f: F,
    h: f64,
    g: Vec<f64>,
    kappa_minus: f64,
}

impl<F: Fn(f64) -> f64 + Sync> WeakInversionKernel<F> {
    /// Tabulates G(z) = ∫ W_{η+α}(z, y) f(y) dy on an m-point midpoint grid.
    pub fn new(nomes: &EllipticNomes, alpha: f64, f: F, m: usize) -> Result<Self> {
        let eta = nomes.eta();
        if !(alpha > 0.0 && alpha < eta) {
            return Err(Error::Domain(format!(
                "weak inversion needs 0 < alpha < {eta}, got {alpha}"
            )));
        }
        if m < 16 {
            return Err(Error::Domain(format!("grid size must be at least 16, got {m}")));
        }
        let h = PI / m as f64;
        let rb = (0..m)
            .into_par_iter()
            .map(|k| elliptic::ratio_continued(k as f64 * h, eta + alpha, nomes))
            .collect::<Result<Vec<f64>>>()?;
        let mut rb2 = rb.clone();
        rb2.extend_from_slice(&rb);
        let fv: Vec<f64> = (0..m).map(|j| f((j as f64 + 0.5) * h)).collect();
        let kappa_plus = kappa_elliptic_continued(eta + alpha, nomes)?;
        let kappa_minus = log_kappa_elliptic(eta - alpha, nomes)?.exp();
        let scale = h / kappa_plus;
        let g = (0..m)
            .into_par_iter()
            .map(|i| {
                let window = &rb2[i + 1..i + 1 + m];
                let mut acc = 0.0;
                for j in 0..m {
                    acc += window[j] * window[m - 1 - j] * fv[j];
                }
                acc * scale
            })
            .collect();
        Ok(WeakInversionKernel { nomes: nomes.clone(), alpha, f, h, g, kappa_minus })
    }

    /// (smeared double integral, pointwise limit) at the probe spin x.
    pub fn sides_at(&self, x: f64) -> Result<(f64, f64)> {
        let eta = self.nomes.eta();
        let am = eta - self.alpha;
        let m = self.g.len();
        let mut lhs = 0.0;
        for i in 0..m {
            let z = (i as f64 + 0.5) * self.h;
            let lw = elliptic::log_ratio(x + z, am, &self.nomes)?
                + elliptic::log_ratio(x - z, am, &self.nomes)?;
            let s = elliptic::single_spin(z, &self.nomes)?;
            lhs += s * (lw.exp() / self.kappa_minus) * self.g[i];
        }
        lhs *= self.h;
        let sx = elliptic::single_spin(x, &self.nomes)?;
        let rhs = ((self.f)(x) + (self.f)(PI - x)) / (2.0 * sx);
        Ok((lhs, rhs))
    }

    /// Relative defect of |smeared| against the pointwise limit at x.
    pub fn residual_at(&self, x: f64) -> Result<f64> {
        let (lhs, rhs) = self.sides_at(x)?;
        if rhs == 0.0 {
            return Err(Error::Domain(
                "test function gives a vanishing right side at this probe".into(),
            ));
        }
        Ok((lhs.abs() / rhs - 1.0).abs())
    }
}

/// One-call weak inversion residual with a resolution chosen from α.
pub fn inversion_weak<F: Fn(f64) -> f64 + Sync>(
    nomes: &EllipticNomes,
    alpha: f64,
    x: f64,
    f: F,
) -> Result<f64> {
    let m = if alpha >= 0.02 * nomes.eta() { 8192 } else { 32768 };
    WeakInversionKernel::new(nomes, alpha, f, m)?.residual_at(x)
}

/// Probe point a limit schedule is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitProbe {
    /// Elliptic edge weight at shrinking nomes against the hyperbolic one,
    /// after dividing the known spin-independent bulk factor.
    HyperbolicFromElliptic { b: f64, alpha: f64, x: f64, y: f64 },
    /// Hyperbolic edge weight near the unit circle against the
    /// gamma-model edge weight with its matching prefactor.
    StrongCouplingEdge { beta: f64, m: i64, n: i64, x: f64, y: f64 },
    /// Hyperbolic single-spin weight near the unit circle against its
    /// quadratic asymptotic form.
    StrongCouplingSite { x: f64, n: i64 },
    /// Hyperbolic normalization near the unit circle against its
    /// gamma-function asymptotic form.
    StrongCouplingKappa { beta: f64 },
}

/// A strictly decreasing positive control sequence with its probe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSchedule {
    control: Vec<f64>,
    probe_point: LimitProbe,
}

impl LimitSchedule {
    /// Requires at least three strictly decreasing positive control values.
    pub fn new(control: Vec<f64>, probe_point: LimitProbe) -> Result<Self> {
        if control.len() < 3 {
            return Err(Error::Domain(format!(
                "a limit schedule needs at least 3 control values, got {}",
                control.len()
            )));
        }
        for w in control.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Domain(format!(
                    "control values must decrease strictly, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if control.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Domain("control values must be positive and finite".into()));
        }
        Ok(LimitSchedule { control, probe_point })
    }

    /// The control values, largest first.
    pub fn control(&self) -> &[f64] {
        &self.control
    }

    /// The probe the schedule drives.
    pub fn probe_point(&self) -> &LimitProbe {
        &self.probe_point
    }
}

/// Signed ratio defects r(ε) − 1 of the elliptic edge weight, renormalized
/// by exp(π²α / 2ε), against the hyperbolic edge weight, one per control
/// value ε of the schedule.
pub fn hyperbolic_limit_residual(
    schedule: &LimitSchedule,
    budget: &PrecisionBudget,
) -> Result<Vec<f64>> {
    let LimitProbe::HyperbolicFromElliptic { b, alpha, x, y } = schedule.probe_point else {
        return Err(Error::Config(
            "this schedule's probe point does not drive the hyperbolic limit".into(),
        ));
    };
    let bm = ModularParam::real(b)?;
    let lw_h = hyperbolic::log_edge(alpha, x, y, &bm, budget)?;
    schedule
        .control
        .iter()
        .map(|&eps| {
            let nomes = EllipticNomes::new((-b * eps).exp(), (-eps / b).exp())?;
            let lw_e = elliptic::log_edge(alpha * eps, x * eps, y * eps, &nomes)?;
            Ok((lw_e - lw_h - PI * PI * alpha / (2.0 * eps)).exp() - 1.0)
        })
        .collect()
}

/// Signed ratio defects r(δ) − 1 of the hyperbolic quantities against
/// their strong-coupling asymptotic forms, one per control value δ.
pub fn strong_coupling_residual(
    schedule: &LimitSchedule,
    budget: &PrecisionBudget,
) -> Result<Vec<f64>> {
    schedule
        .control
        .iter()
        .map(|&delta| {
            if !(delta > 0.0 && delta < FRAC_PI_2) {
                return Err(Error::Domain(format!(
                    "strong-coupling control values must lie in (0, pi/2), got {delta}"
                )));
            }
            let b = ModularParam::unit_circle(FRAC_PI_2 - delta)?;
            let eta = b.eta();
            let r = match schedule.probe_point {
                LimitProbe::StrongCouplingEdge { beta, m, n, x, y } => {
                    let wh = hyperbolic::log_edge(
                        beta * eta,
                        m as f64 + x * eta,
                        n as f64 + y * eta,
                        &b,
                        budget,
                    )?
                    .exp();
                    let lg = gamma::log_edge(beta, DualSpin { x, n: m }, DualSpin { x: y, n })?;
                    let pref = -5.0 * beta * LN_2 - 3.0 * beta * (PI * eta).ln();
                    wh / (Complex64::new(pref, 0.0) + lg).exp().re
                }
                LimitProbe::StrongCouplingSite { x, n } => {
                    let s = hyperbolic::single_spin(n as f64 + x * eta, &b);
                    s / (8.0 * PI * PI * (x * x + (n * n) as f64) * eta * eta)
                }
                LimitProbe::StrongCouplingKappa { beta } => {
                    let k = log_kappa_hyperbolic(beta * eta, &b, budget)?.exp();
                    let half = |v: f64| Complex64::new(v / 2.0, 0.0);
                    let lasym = -beta * (8.0 * PI * eta).ln()
                        + (log_gamma(half(1.0 - beta))? - log_gamma(half(1.0 + beta))?).re;
                    k / lasym.exp()
                }
                LimitProbe::HyperbolicFromElliptic { .. } => {
                    return Err(Error::Config(
                        "this schedule's probe point does not drive the strong-coupling limit"
                            .into(),
                    ));
                }
            };
            Ok(r - 1.0)
        })
        .collect()
}

/// A random star configuration from the model's sampling ranges:
/// spins uniform over the model's natural window, spectral split from a
/// flat simplex draw compressed away from the edges.
pub fn random_star_config<R: Rng>(m: &Model, rng: &mut R) -> Result<StarConfig> {
    let eta = m.eta();
    let mut outer = [SpinVar::scalar(0.0); 3];
    for slot in outer.iter_mut() {
        *slot = match m {
            Model::Elliptic(_) => SpinVar::scalar(rng.gen::<f64>() * PI),
            Model::Hyperbolic(_) => SpinVar::scalar(rng.gen_range(-2.0..2.0)),
            Model::Gamma => {
                let x = rng.gen_range(-2.0..2.0);
                let n = rng.gen_range(-2i64..=2);
                SpinVar::dual(x, n)
            }
        };
    }
    let (u1, u2) = (rng.gen::<f64>(), rng.gen::<f64>());
    let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
    let raw = [lo, hi - lo, 1.0 - hi];
    let spectral = [
        m.spectral((0.1 + 0.7 * raw[0]) * eta)?,
        m.spectral((0.1 + 0.7 * raw[1]) * eta)?,
        m.spectral((0.1 + 0.7 * raw[2]) * eta)?,
    ];
    StarConfig::new(outer, spectral)
}

/// One campaign entry: the drawn configuration and its report, or the
/// error that stopped it.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignItem {
    pub id: usize,
    pub seed: u64,
    pub config: StarConfig,
    pub report: Option<VerificationReport>,
    pub error: Option<String>,
    pub passed: bool,
}

/// Runs `count` star-triangle checks with per-item seeds `base_seed + id`,
/// in parallel, reported in id order.
pub fn str_campaign(
    m: &Model,
    count: usize,
    base_seed: u64,
    budget: &PrecisionBudget,
) -> Result<Vec<CampaignItem>> {
    (0..count)
        .into_par_iter()
        .map(|id| {
            let seed = base_seed.wrapping_add(id as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let config = random_star_config(m, &mut rng)?;
            Ok(match str_residual(m, &config, budget) {
                Ok(rep) => {
                    let passed = rep.passed;
                    CampaignItem { id, seed, config, report: Some(rep), error: None, passed }
                }
                Err(e) => CampaignItem {
                    id,
                    seed,
                    config,
                    report: None,
                    error: Some(e.to_string()),
                    passed: false,
                },
            })
        })
        .collect()
}

/// One pointwise-inversion campaign entry.
#[derive(Debug, Clone, Serialize)]
pub struct InversionItem {
    pub id: usize,
    pub seed: u64,
    pub residual: f64,
    pub passed: bool,
}

/// Runs `count` pointwise inversion checks at random spins and spectral
/// values, with per-item seeds `base_seed + id`, reported in id order.
pub fn inversion_campaign(
    m: &Model,
    count: usize,
    base_seed: u64,
    budget: &PrecisionBudget,
) -> Result<Vec<InversionItem>> {
    let draw_spin = |m: &Model, rng: &mut ChaCha8Rng| match m {
        Model::Elliptic(_) => SpinVar::scalar(rng.gen::<f64>() * PI),
        Model::Hyperbolic(_) => SpinVar::scalar(rng.gen_range(-2.0..2.0)),
        Model::Gamma => {
            let x = rng.gen_range(-2.0..2.0);
            let n = rng.gen_range(-2i64..=2);
            SpinVar::dual(x, n)
        }
    };
    (0..count)
        .into_par_iter()
        .map(|id| {
            let seed = base_seed.wrapping_add(id as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s1 = draw_spin(m, &mut rng);
            let s2 = draw_spin(m, &mut rng);
            let a = m.spectral_signed(m.eta() * (0.05 + 0.9 * rng.gen::<f64>()))?;
            let residual = inversion_pointwise(m, a, s1, s2, budget)?;
            Ok(InversionItem { id, seed, residual, passed: residual <= budget.rel_tol })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(tol: f64) -> PrecisionBudget {
        PrecisionBudget { rel_tol: tol, ..PrecisionBudget::default() }
    }

    fn star(m: &Model, xs: [SpinVar; 3], fr: [f64; 3]) -> StarConfig {
        let eta = m.eta();
        StarConfig::new(
            xs,
            [
                m.spectral(fr[0] * eta).unwrap(),
                m.spectral(fr[1] * eta).unwrap(),
                m.spectral(fr[2] * eta).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn elliptic_star_triangle_frozen() {
        let m = Model::Elliptic(EllipticNomes::new(0.3, 0.3).unwrap());
        let xs = [SpinVar::scalar(0.5), SpinVar::scalar(1.1), SpinVar::scalar(2.0)];
        let rep = str_residual(&m, &star(&m, xs, [0.2, 0.3, 0.5]), &budget(1e-8)).unwrap();
        assert!((rep.lhs / 0.5119572899046009 - 1.0).abs() < 1e-9, "lhs = {}", rep.lhs);
        assert!(rep.rel_residual < 1e-9, "rel = {}", rep.rel_residual);
        assert!((rep.r_factor - 1.0).abs() < 1e-9);
        assert!(rep.passed);
    }

    #[test]
    fn elliptic_star_triangle_mixed_nomes() {
        let m = Model::Elliptic(EllipticNomes::new(0.3, 0.5).unwrap());
        let xs = [SpinVar::scalar(0.5), SpinVar::scalar(1.1), SpinVar::scalar(2.0)];
        let rep = str_residual(&m, &star(&m, xs, [0.2, 0.3, 0.5]), &budget(1e-8)).unwrap();
        assert!((rep.lhs / 3.300127018625e-01 - 1.0).abs() < 1e-9, "lhs = {}", rep.lhs);
        assert!(rep.rel_residual < 1e-9);
        assert!(rep.passed);
    }

    #[test]
    fn hyperbolic_star_triangle_frozen() {
        let m = Model::Hyperbolic(ModularParam::real(1.0).unwrap());
        let xs = [SpinVar::scalar(0.4), SpinVar::scalar(-0.2), SpinVar::scalar(0.7)];
        let rep = str_residual(&m, &star(&m, xs, [0.2, 0.3, 0.5]), &budget(1e-6)).unwrap();
        assert!((rep.lhs / 5.837116427462e-03 - 1.0).abs() < 1e-7, "lhs = {}", rep.lhs);
        assert!(rep.rel_residual < 1e-6, "rel = {}", rep.rel_residual);
        assert!(rep.passed);
    }

    #[test]
    fn hyperbolic_star_triangle_off_symmetric_point() {
        let m = Model::Hyperbolic(ModularParam::real(1.3).unwrap());
        let xs = [SpinVar::scalar(0.4), SpinVar::scalar(-0.2), SpinVar::scalar(0.7)];
        let rep = str_residual(&m, &star(&m, xs, [0.2, 0.3, 0.5]), &budget(1e-6)).unwrap();
        assert!((rep.lhs / 4.800310180479e-03 - 1.0).abs() < 1e-7, "lhs = {}", rep.lhs);
        assert!(rep.rel_residual < 1e-6);
        assert!(rep.passed);
    }

    #[test]
    fn hyperbolic_star_triangle_unit_circle() {
        let m = Model::Hyperbolic(ModularParam::unit_circle(FRAC_PI_2 - 0.6).unwrap());
        let xs = [SpinVar::scalar(0.5), SpinVar::scalar(-0.1), SpinVar::scalar(0.35)];
        let rep = str_residual(&m, &star(&m, xs, [0.25, 0.35, 0.40]), &budget(1e-6)).unwrap();
        assert!((rep.lhs / 8.7376173753e-02 - 1.0).abs() < 1e-6, "lhs = {}", rep.lhs);
        assert!(rep.rel_residual < 1e-6, "rel = {}", rep.rel_residual);
        assert!(rep.passed);
    }

    #[test]
    fn gamma_star_triangle_at_origin() {
        let m = Model::Gamma;
        let xs = [SpinVar::dual(0.0, 0); 3];
        let third = 1.0 / 3.0;
        let rep = str_residual(&m, &star(&m, xs, [third, third, third]), &budget(1e-6)).unwrap();
        assert!(rep.lhs > 0.0 && rep.rhs > 0.0);
        assert!(rep.rel_residual < 1e-6, "rel = {}", rep.rel_residual);
        assert!(rep.passed);
    }

    #[test]
    fn gamma_star_triangle_near_vanishing_spectral_value() {
        let m = Model::Gamma;
        let xs = [SpinVar::dual(0.3, 0), SpinVar::dual(-0.7, 1), SpinVar::dual(1.1, -1)];
        let rep = str_residual(&m, &star(&m, xs, [0.6, 0.4 - 1e-6, 1e-6]), &budget(1e-5)).unwrap();
        assert!(rep.rel_residual < 1e-5, "rel = {}", rep.rel_residual);
        assert!(rep.passed);
    }

    #[test]
    fn star_config_gates() {
        let m = Model::Gamma;
        let xs = [SpinVar::dual(0.0, 0); 3];
        let a = |v: f64| SpectralParam::new(v, 1.0).unwrap();
        assert!(StarConfig::new(xs, [a(0.2), a(0.3), a(0.5)]).is_ok());
        assert!(StarConfig::new(xs, [a(0.2), a(0.3), a(0.4)]).is_err());
        let mixed = SpectralParam::new(0.2, 2.0).unwrap();
        assert!(StarConfig::new(xs, [mixed, a(0.3), a(0.5)]).is_err());
        let _ = m;
    }

    #[test]
    fn pointwise_inversion_is_exact_for_all_models() {
        let b = budget(1e-9);
        let ell = Model::Elliptic(EllipticNomes::new(0.3, 0.5).unwrap());
        let a = ell.spectral_signed(0.4 * ell.eta()).unwrap();
        let r = inversion_pointwise(&ell, a, SpinVar::scalar(0.7), SpinVar::scalar(2.1), &b)
            .unwrap();
        assert!(r < 1e-14, "elliptic residual {r}");

        let hyp = Model::Hyperbolic(ModularParam::real(1.2).unwrap());
        let a = hyp.spectral_signed(0.55 * hyp.eta()).unwrap();
        let r = inversion_pointwise(&hyp, a, SpinVar::scalar(0.4), SpinVar::scalar(-1.3), &b)
            .unwrap();
        assert!(r < 1e-14, "hyperbolic residual {r}");

        let gam = Model::Gamma;
        let a = gam.spectral_signed(0.35).unwrap();
        let r = inversion_pointwise(&gam, a, SpinVar::dual(0.8, -1), SpinVar::dual(-0.2, 2), &b)
            .unwrap();
        assert!(r < 1e-14, "gamma residual {r}");
    }

    #[test]
    fn weak_inversion_approaches_the_comb() {
        let nomes = EllipticNomes::new(0.3, 0.3).unwrap();
        let eta = nomes.eta();
        let kern = WeakInversionKernel::new(&nomes, 0.005 * eta, |_| 1.0, 8192).unwrap();
        let res = kern.residual_at(0.9).unwrap();
        assert!(res < 4e-3, "residual {res}");
    }

    #[test]
    fn weak_inversion_far_from_the_crossing_point_stays_off() {
        // At alpha = 0.3 eta the composition is nowhere near the comb: the
        // smeared side is negative while the pointwise side is positive.
        let nomes = EllipticNomes::new(0.3, 0.3).unwrap();
        let eta = nomes.eta();
        let kern = WeakInversionKernel::new(&nomes, 0.3 * eta, |_| 1.0, 2048).unwrap();
        let (lhs, rhs) = kern.sides_at(0.9).unwrap();
        assert!((lhs - -0.3747450872395124).abs() < 1e-8, "lhs = {lhs}");
        assert!((rhs - 1.4420194910289388).abs() < 1e-10, "rhs = {rhs}");
    }

    #[test]
    fn limit_schedule_gates() {
        let probe = LimitProbe::StrongCouplingKappa { beta: 0.5 };
        assert!(LimitSchedule::new(vec![0.3, 0.2, 0.1], probe).is_ok());
        assert!(LimitSchedule::new(vec![0.3, 0.2], probe).is_err());
        assert!(LimitSchedule::new(vec![0.3, 0.3, 0.1], probe).is_err());
        assert!(LimitSchedule::new(vec![0.3, 0.2, -0.1], probe).is_err());
    }

    #[test]
    fn hyperbolic_limit_tracks_frozen_defects() {
        let schedule = LimitSchedule::new(
            vec![0.2, 0.1, 0.05],
            LimitProbe::HyperbolicFromElliptic { b: 1.0, alpha: 0.3, x: 0.4, y: -0.2 },
        )
        .unwrap();
        let d = hyperbolic_limit_residual(&schedule, &PrecisionBudget::default()).unwrap();
        let frozen = [0.0182, 0.0090, 0.0045];
        for (got, want) in d.iter().zip(frozen) {
            assert!((got - want).abs() < 5e-4, "defect {got} vs {want}");
        }
        assert!(d[0].abs() > d[1].abs() && d[1].abs() > d[2].abs());
    }

    #[test]
    fn hyperbolic_limit_neutral_spin_defect_is_negative() {
        let schedule = LimitSchedule::new(
            vec![0.2, 0.1, 0.05],
            LimitProbe::HyperbolicFromElliptic { b: 1.0, alpha: 0.3, x: 0.0, y: 0.0 },
        )
        .unwrap();
        let d = hyperbolic_limit_residual(&schedule, &PrecisionBudget::default()).unwrap();
        assert!(d.iter().all(|&v| v < 0.0));
        assert!(d[0].abs() > d[1].abs() && d[1].abs() > d[2].abs());
    }

    #[test]
    fn strong_coupling_probes_converge() {
        let b = PrecisionBudget::default();
        let cases = [
            (
                LimitProbe::StrongCouplingEdge { beta: 0.4, m: 1, n: 0, x: 0.7, y: -0.3 },
                [-0.30358, -0.14147, -0.04342],
            ),
            (LimitProbe::StrongCouplingSite { x: 1.0, n: 1 }, [3.52639, 0.69727, 0.10365]),
            (LimitProbe::StrongCouplingKappa { beta: 0.5 }, [0.058312, 0.031599, 0.008201]),
        ];
        for (probe, frozen) in cases {
            let schedule = LimitSchedule::new(vec![0.3, 0.2, 0.1], probe).unwrap();
            let d = strong_coupling_residual(&schedule, &b).unwrap();
            assert!(
                d[0].abs() > d[1].abs() && d[1].abs() > d[2].abs(),
                "defects not shrinking for {probe:?}: {d:?}"
            );
            for (got, want) in d.iter().zip(frozen) {
                assert!((got - want).abs() < 5e-4, "{probe:?}: defect {got} vs {want}");
            }
        }
    }

    #[test]
    fn probe_kind_mismatch_is_a_config_error() {
        let schedule = LimitSchedule::new(
            vec![0.3, 0.2, 0.1],
            LimitProbe::StrongCouplingKappa { beta: 0.5 },
        )
        .unwrap();
        assert!(matches!(
            hyperbolic_limit_residual(&schedule, &PrecisionBudget::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn random_config_is_deterministic_and_valid() {
        let m = Model::Gamma;
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let c1 = random_star_config(&m, &mut r1).unwrap();
        let c2 = random_star_config(&m, &mut r2).unwrap();
        let sum: f64 = c1.spectral().iter().map(|a| a.value()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(c1.spectral().iter().all(|a| a.value() >= 0.1 && a.value() <= 0.8));
        for (s1, s2) in c1.outer().iter().zip(c2.outer()) {
            assert_eq!(s1.x(), s2.x());
        }
    }

    #[test]
    fn cycled_star_preserves_both_sides() {
        let m = Model::Elliptic(EllipticNomes::new(0.3, 0.5).unwrap());
        let xs = [SpinVar::scalar(0.5), SpinVar::scalar(1.1), SpinVar::scalar(2.0)];
        let cfg = star(&m, xs, [0.2, 0.3, 0.5]);
        let b = budget(1e-8);
        let r1 = str_residual(&m, &cfg, &b).unwrap();
        let r2 = str_residual(&m, &cfg.cycled(), &b).unwrap();
        assert!((r1.lhs / r2.lhs - 1.0).abs() < 1e-10);
        assert!((r1.rhs / r2.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_campaigns_pass_and_order_items() {
        let m = Model::Elliptic(EllipticNomes::new(0.3, 0.3).unwrap());
        let items = str_campaign(&m, 3, 41, &budget(1e-8)).unwrap();
        assert_eq!(items.len(), 3);
        for (i, item) in items.iter().enumerate() {
            assert_eq!(item.id, i);
            assert_eq!(item.seed, 41 + i as u64);
            assert!(item.passed, "item {i}: {:?}", item.error);
        }
        let inv = inversion_campaign(&Model::Gamma, 5, 3, &budget(1e-9)).unwrap();
        assert!(inv.iter().all(|it| it.passed));
    }
}
