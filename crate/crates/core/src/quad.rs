//! Adaptive quadrature and bilateral summation.
//!
//! One engine under every identity check: a globally adaptive
//! Gauss-Kronrod 7-15 rule on finite intervals, a growing-cutoff wrapper
//! for integrals over the whole real line, and a shell-summed bilateral
//! series with an empirical power-law tail fit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::budget::{Interval, PrecisionBudget, QuadResult, TailPolicy};
use crate::error::{Error, Result};

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss-7 weights for the embedded rule (nodes XK[1], XK[3], XK[5], XK[7]).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
    seq: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.seq == other.seq
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on error; older segment wins ties for determinism.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> (Complex64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let fc = f(c);
    kron += WK[7] * fc;
    gauss += WG[3] * fc;
    for i in 0..7 {
        let x = h * XK[i];
        let fsum = f(c - x) + f(c + x);
        kron += WK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kron *= h;
    gauss *= h;
    (kron, (kron - gauss).norm())
}

/// Adaptive integral of `f` over a finite interval.
pub fn integrate_finite<F: Fn(f64) -> Complex64>(
    f: F,
    iv: Interval,
    budget: &PrecisionBudget,
) -> Result<QuadResult> {
    let (v0, e0) = gk15(&f, iv.lo, iv.hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { lo: iv.lo, hi: iv.hi, value: v0, error: e0, seq: 0 });
    let mut total = v0;
    let mut total_err = e0;
    let mut evals = 15usize;
    let mut seq = 1usize;

    for _ in 0..budget.max_refinements {
        if total_err <= budget.abs_tol.max(budget.rel_tol * total.norm()) {
            break;
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval at floating-point resolution; keep its estimate.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        let (vl, el) = gk15(&f, worst.lo, mid);
        let (vr, er) = gk15(&f, mid, worst.hi);
        evals += 30;
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        heap.push(Segment { lo: worst.lo, hi: mid, value: vl, error: el, seq });
        heap.push(Segment { lo: mid, hi: worst.hi, value: vr, error: er, seq: seq + 1 });
        seq += 2;
        if evals > budget.max_terms {
            return Err(Error::BudgetExhausted { value: total.re, error_estimate: total_err });
        }
    }

    // Re-accumulate from segments for a sharper running-sum error.
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    if error > budget.abs_tol.max(budget.rel_tol * value.norm()) * 10.0 {
        return Err(Error::BudgetExhausted { value: value.re, error_estimate: error });
    }
    Ok(QuadResult { value, error_estimate: error, evaluations: evals, truncation_used: 0.0 })
}

/// Integral of a decaying `f` over the whole real line: grows the cutoff
/// geometrically until the shell increment is negligible.
pub fn integrate_line<F: Fn(f64) -> Complex64>(
    f: F,
    tail: &TailPolicy,
    budget: &PrecisionBudget,
) -> Result<QuadResult> {
    let mut t = tail.initial_cutoff;
    let core = integrate_finite(&f, Interval::new(-t, t)?, budget)?;
    let mut value = core.value;
    let mut error = core.error_estimate;
    let mut evals = core.evaluations;
    let mut prev_inc = f64::INFINITY;
    let mut grew = 0usize;

    loop {
        let t_next = t * tail.growth_factor;
        let right = integrate_finite(&f, Interval::new(t, t_next)?, budget)?;
        let left = integrate_finite(&f, Interval::new(-t_next, -t)?, budget)?;
        let inc = right.value + left.value;
        evals += right.evaluations + left.evaluations;
        value += inc;
        error += right.error_estimate + left.error_estimate;
        t = t_next;
        grew += 1;

        let inc_mag = inc.norm();
        if inc_mag <= tail.stop_rel * value.norm().max(budget.abs_tol) {
            break;
        }
        if inc_mag > prev_inc && grew > 2 {
            return Err(Error::TailNotDecaying { last: inc_mag, previous: prev_inc });
        }
        prev_inc = inc_mag;
        if grew >= 64 {
            return Err(Error::Convergence(format!(
                "line integral cutoff grew to {t:e} without the tail settling"
            )));
        }
    }

    Ok(QuadResult { value, error_estimate: error, evaluations: evals, truncation_used: t })
}

/// Bilateral sum over all integers, in shells of growing radius.
///
/// For power-law tails the last two shell edges fix an empirical exponent
/// and the fitted remainder is added to the error estimate.
pub fn sum_bilateral<F: Fn(i64) -> Complex64>(
    term: F,
    tail: &TailPolicy,
    budget: &PrecisionBudget,
) -> Result<QuadResult> {
    let mut value = term(0);
    let mut evals = 1usize;
    let mut n_prev = 0i64;
    let mut n = tail.initial_cutoff.ceil() as i64;
    let mut prev_shell = f64::INFINITY;
    let mut edge_prev: Option<(i64, f64)>;
    let mut edge_last: Option<(i64, f64)> = None;

    loop {
        let mut shell = Complex64::new(0.0, 0.0);
        for k in (n_prev + 1)..=n {
            shell += term(k) + term(-k);
            evals += 2;
        }
        value += shell;
        edge_prev = edge_last;
        edge_last = Some((n, (term(n) + term(-n)).norm()));

        let shell_mag = shell.norm();
        if shell_mag <= tail.stop_rel * value.norm().max(budget.abs_tol) {
            break;
        }
        if shell_mag > prev_shell && n_prev > 0 {
            return Err(Error::TailNotDecaying { last: shell_mag, previous: prev_shell });
        }
        prev_shell = shell_mag;
        n_prev = n;
        n = ((n as f64) * tail.growth_factor).ceil() as i64;
        if evals > budget.max_terms {
            return Err(Error::BudgetExhausted { value: value.re, error_estimate: shell_mag });
        }
    }

    // Power-law remainder estimate from the last two shell edges.
    let mut tail_est = 0.0;
    if let (Some((n1, f1)), Some((n2, f2))) = (edge_prev, edge_last) {
        if f1 > 0.0 && f2 > 0.0 && f2 < f1 {
            let s = (f1 / f2).ln() / (n2 as f64 / n1 as f64).ln();
            if s > 1.0 {
                tail_est = f2 * n2 as f64 / (s - 1.0);
            }
        }
    }

    Ok(QuadResult {
        value,
        error_estimate: tail_est + value.norm() * f64::EPSILON * evals as f64,
        evaluations: evals,
        truncation_used: edge_last.map_or(0.0, |(n, _)| n as f64),
    })
}
