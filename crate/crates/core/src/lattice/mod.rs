//! Small-lattice partition evaluation: exact Gauss-Legendre contraction
//! for blocks of up to four internal sites, per-edge log-weight means by
//! differentiation of log Z, and a Metropolis sampler over the same
//! boundary-value problem.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::PrecisionBudget;
use crate::error::{Error, Result};
use crate::verify::StarConfig;
use crate::weights::{
    log_edge_weight, single_spin_weight, EdgeTable, Model, SpectralParam, SpinVar,
};

/// Fixed spins surrounding the internal block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Boundary {
    /// Ring of fixed spins: top row left-to-right, bottom row
    /// left-to-right, left column top-to-bottom, right column
    /// top-to-bottom; corners are absent.
    Ring(Vec<SpinVar>),
    /// Three fixed spins of a single-site star with their spectral split;
    /// the three edges carry the crossed parameters.
    Star([SpinVar; 3], [SpectralParam; 3]),
}

/// A boundary-value block: model, shape, per-edge spectral value, and the
/// fixed surrounding spins. Horizontal edges carry α, vertical edges η − α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    model: Model,
    rows: usize,
    cols: usize,
    spectral: SpectralParam,
    boundary: Boundary,
}

impl LatticeSpec {
    /// Validates shape, boundary length, spin kinds, and spectral consistency.
    pub fn new(
        model: Model,
        rows: usize,
        cols: usize,
        spectral: SpectralParam,
        boundary: Boundary,
    ) -> Result<Self> {
        if rows * cols > 4 {
            return Err(Error::TooManyInternalSites(rows * cols));
        }
        if rows >= 2 && cols >= 2 && !(rows == 2 && cols == 2) {
            return Err(Error::TooManyInternalSites(rows * cols));
        }
        let eta = model.eta();
        if (spectral.model_eta() - eta).abs() > 1e-12 * eta {
            return Err(Error::KindMismatch(format!(
                "spectral parameter was built for eta = {}, model has eta = {eta}",
                spectral.model_eta()
            )));
        }
        if !(spectral.value() > 0.0 && spectral.value() < eta) {
            return Err(Error::Domain(format!(
                "lattice spectral value must lie in (0, {eta}), got {}",
                spectral.value()
            )));
        }
        let check_kind = |s: &SpinVar| -> Result<()> {
            match (&model, s) {
                (Model::Gamma, SpinVar::Dual(_)) => Ok(()),
                (Model::Gamma, SpinVar::Spin(_)) => Err(Error::KindMismatch(
                    "this model needs dual boundary spins".into(),
                )),
                (_, SpinVar::Spin(_)) => Ok(()),
                (_, SpinVar::Dual(_)) => Err(Error::KindMismatch(
                    "this model needs continuous boundary spins".into(),
                )),
            }
        };
        match &boundary {
            Boundary::Ring(ring) => {
                if ring.len() != 2 * (rows + cols) {
                    return Err(Error::Config(format!(
                        "ring boundary needs {} spins for a {rows}x{cols} block, got {}",
                        2 * (rows + cols),
                        ring.len()
                    )));
                }
                ring.iter().try_for_each(check_kind)?;
            }
            Boundary::Star(outer, split) => {
                if rows != 1 || cols != 1 {
                    return Err(Error::Config(
                        "a star boundary needs exactly one internal site".into(),
                    ));
                }
                outer.iter().try_for_each(check_kind)?;
                StarConfig::new(*outer, *split)?;
            }
        }
        Ok(LatticeSpec { model, rows, cols, spectral, boundary })
    }

    /// The weight family of the block.
    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Internal rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Internal columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The horizontal-edge spectral parameter.
    pub fn spectral(&self) -> SpectralParam {
        self.spectral
    }

    /// The fixed surrounding spins.
    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    fn sites(&self) -> usize {
        self.rows * self.cols
    }
}

/// Single-site quadrature grid: node count, integer window for dual
/// spins, and the half-width of the continuous window (the elliptic
/// family always integrates over [0, π]).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridDiscretization {
    pub nodes: usize,
    pub n_max: i64,
    pub half_width: f64,
}

impl GridDiscretization {
    /// Model defaults: 64 nodes on [0, π] (elliptic) or |x| ≤ 2.2/η
    /// (hyperbolic); 160 nodes with |n| ≤ 8 on |x| ≤ 10 for the gamma model
    /// (the slowly decaying gamma integrand needs ~8 nodes per unit length).
    pub fn for_model(m: &Model) -> Self {
        match m {
            Model::Elliptic(_) => {
                GridDiscretization { nodes: 64, n_max: 0, half_width: FRAC_PI_2 }
            }
            Model::Hyperbolic(b) => {
                GridDiscretization { nodes: 64, n_max: 0, half_width: 2.2 / b.eta() }
            }
            Model::Gamma => GridDiscretization { nodes: 160, n_max: 8, half_width: 10.0 },
        }
    }

    fn validate(&self, m: &Model) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::Config(format!("grid needs at least 2 nodes, got {}", self.nodes)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Config(format!(
                "grid half-width must be positive, got {}",
                self.half_width
            )));
        }
        if matches!(m, Model::Gamma) && self.n_max < 0 {
            return Err(Error::Config(format!(
                "integer window must be nonnegative, got {}",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on [−1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, 0.0f64);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

#[derive(Debug, Clone, Copy)]
enum Vertex {
    Fixed(SpinVar),
    Site(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Orient {
    H,
    V,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: Vertex,
    b: Vertex,
    spectral: SpectralParam,
    orient: Orient,
}

/// Edges in canonical order: horizontal edges row by row (left boundary,
/// internal, right boundary), then vertical edges column by column (top
/// boundary, internal, bottom boundary). A star boundary yields its three
/// crossed edges in spin order.
fn build_edges(spec: &LatticeSpec) -> Vec<Edge> {
    let (rows, cols) = (spec.rows, spec.cols);
    let mut edges = Vec::new();
    match &spec.boundary {
        Boundary::Star(outer, split) => {
            for i in 0..3 {
                edges.push(Edge {
                    a: Vertex::Fixed(outer[i]),
                    b: Vertex::Site(0),
                    spectral: split[i].crossed(),
                    orient: Orient::H,
                });
            }
        }
        Boundary::Ring(ring) => {
            let top = &ring[0..cols];
            let bottom = &ring[cols..2 * cols];
            let left = &ring[2 * cols..2 * cols + rows];
            let right = &ring[2 * cols + rows..];
            let site = |r: usize, c: usize| r * cols + c;
            let ah = spec.spectral;
            let av = spec.spectral.crossed();
            for r in 0..rows {
                if cols == 0 {
                    edges.push(Edge {
                        a: Vertex::Fixed(left[r]),
                        b: Vertex::Fixed(right[r]),
                        spectral: ah,
                        orient: Orient::H,
                    });
                    continue;
                }
                edges.push(Edge {
                    a: Vertex::Fixed(left[r]),
                    b: Vertex::Site(site(r, 0)),
                    spectral: ah,
                    orient: Orient::H,
                });
                for c in 0..cols - 1 {
                    edges.push(Edge {
                        a: Vertex::Site(site(r, c)),
                        b: Vertex::Site(site(r, c + 1)),
                        spectral: ah,
                        orient: Orient::H,
                    });
                }
                edges.push(Edge {
                    a: Vertex::Site(site(r, cols - 1)),
                    b: Vertex::Fixed(right[r]),
                    spectral: ah,
                    orient: Orient::H,
                });
            }
            for c in 0..cols {
                if rows == 0 {
                    edges.push(Edge {
                        a: Vertex::Fixed(top[c]),
                        b: Vertex::Fixed(bottom[c]),
                        spectral: av,
                        orient: Orient::V,
                    });
                    continue;
                }
                edges.push(Edge {
                    a: Vertex::Fixed(top[c]),
                    b: Vertex::Site(site(0, c)),
                    spectral: av,
                    orient: Orient::V,
                });
                for r in 0..rows - 1 {
                    edges.push(Edge {
                        a: Vertex::Site(site(r, c)),
                        b: Vertex::Site(site(r + 1, c)),
                        spectral: av,
                        orient: Orient::V,
                    });
                }
                edges.push(Edge {
                    a: Vertex::Site(site(rows - 1, c)),
                    b: Vertex::Fixed(bottom[c]),
                    spectral: av,
                    orient: Orient::V,
                });
            }
        }
    }
    edges
}

/// Edge-weight evaluator: spline tables for the hyperbolic family,
/// direct evaluation otherwise.
struct EdgeWeigher<'a> {
    model: &'a Model,
    budget: &'a PrecisionBudget,
    tables: Vec<(f64, EdgeTable)>,
}

impl<'a> EdgeWeigher<'a> {
    fn new(
        model: &'a Model,
        edges: &[Edge],
        umax: f64,
        budget: &'a PrecisionBudget,
    ) -> Result<Self> {
        let mut tables = Vec::new();
        if let Model::Hyperbolic(b) = model {
            let mut values: Vec<f64> = edges.iter().map(|e| e.spectral.value()).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let eta = model.eta();
            tables = values
                .into_par_iter()
                .map(|v| {
                    let n = EdgeTable::suggested_nodes(v, eta, umax);
                    Ok((v, EdgeTable::new(v, b, umax, n, budget)?))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(EdgeWeigher { model, budget, tables })
    }

    fn log_w(&self, a: SpectralParam, s1: SpinVar, s2: SpinVar) -> Result<f64> {
        if let Some((_, t)) = self.tables.iter().find(|(v, _)| *v == a.value()) {
            return t.log_edge(s1.as_spin()?.x, s2.as_spin()?.x);
        }
        log_edge_weight(self.model, a, s1, s2, self.budget)
    }
}

struct ExactCtx {
    sites: usize,
    edges: Vec<Edge>,
    states: Vec<SpinVar>,
    /// Quadrature log-measure plus log S per grid state.
    site_log: Vec<f64>,
    /// Per edge: the G-vector of log-weights against the fixed endpoint.
    bvecs: Vec<Option<Vec<f64>>>,
    /// Per edge: the log-weight when both endpoints are fixed.
    direct_logs: Vec<Option<f64>>,
    mh: Option<Vec<f64>>,
    mv: Option<Vec<f64>>,
    evaluations: u64,
}

fn grid_states(m: &Model, disc: &GridDiscretization) -> (Vec<SpinVar>, Vec<f64>) {
    let (t, w) = gauss_legendre(disc.nodes);
    match m {
        Model::Elliptic(_) => {
            let states = t.iter().map(|&u| SpinVar::scalar(FRAC_PI_2 * (u + 1.0))).collect();
            let meas = w.iter().map(|&wi| (wi * FRAC_PI_2).ln()).collect();
            (states, meas)
        }
        Model::Hyperbolic(_) => {
            let hw = disc.half_width;
            let states = t.iter().map(|&u| SpinVar::scalar(hw * u)).collect();
            let meas = w.iter().map(|&wi| (wi * hw).ln()).collect();
            (states, meas)
        }
        Model::Gamma => {
            let hw = disc.half_width;
            let mut states = Vec::new();
            let mut meas = Vec::new();
            for n in -disc.n_max..=disc.n_max {
                for (u, wi) in t.iter().zip(&w) {
                    states.push(SpinVar::dual(hw * u, n));
                    meas.push((wi * hw).ln());
                }
            }
            (states, meas)
        }
    }
}

fn build_ctx(spec: &LatticeSpec, disc: &GridDiscretization, budget: &PrecisionBudget) -> Result<ExactCtx> {
    disc.validate(&spec.model)?;
    let edges = build_edges(spec);
    let (states, meas) = grid_states(&spec.model, disc);
    let g = states.len();

    let mut bmax = 0.0f64;
    for e in &edges {
        for v in [e.a, e.b] {
            if let Vertex::Fixed(s) = v {
                bmax = bmax.max(s.x().abs());
            }
        }
    }
    let umax = 2.0 * disc.half_width.max(bmax) + 1.0;
    let weigher = EdgeWeigher::new(&spec.model, &edges, umax, budget)?;
    let mut evaluations = 0u64;

    let mut site_log = vec![0.0; g];
    if spec.sites() > 0 {
        for (i, s) in states.iter().enumerate() {
            site_log[i] = meas[i] + single_spin_weight(&spec.model, *s)?.ln();
        }
    }

    let mut bvecs: Vec<Option<Vec<f64>>> = vec![None; edges.len()];
    let mut direct_logs: Vec<Option<f64>> = vec![None; edges.len()];
    for (ei, e) in edges.iter().enumerate() {
        match (e.a, e.b) {
            (Vertex::Fixed(fa), Vertex::Fixed(fb)) => {
                direct_logs[ei] = Some(weigher.log_w(e.spectral, fa, fb)?);
                evaluations += 1;
            }
            (Vertex::Fixed(f), Vertex::Site(_)) | (Vertex::Site(_), Vertex::Fixed(f)) => {
                let v = states
                    .par_iter()
                    .map(|s| weigher.log_w(e.spectral, f, *s))
                    .collect::<Result<Vec<f64>>>()?;
                evaluations += g as u64;
                bvecs[ei] = Some(v);
            }
            (Vertex::Site(_), Vertex::Site(_)) => {}
        }
    }

    let needs = |o: Orient| {
        edges
            .iter()
            .any(|e| e.orient == o && matches!((e.a, e.b), (Vertex::Site(_), Vertex::Site(_))))
    };
    let mut pair_matrix = |a: SpectralParam| -> Result<Vec<f64>> {
        let mut m = vec![0.0; g * g];
        let rows: Vec<Result<Vec<f64>>> = (0..g)
            .into_par_iter()
            .map(|i| {
                (i..g).map(|j| weigher.log_w(a, states[i], states[j])).collect::<Result<Vec<f64>>>()
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            let row = row?;
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                m[i * g + j] = v;
                m[j * g + i] = v;
            }
        }
        evaluations += (g * (g + 1) / 2) as u64;
        Ok(m)
    };
    let mh = if needs(Orient::H) { Some(pair_matrix(spec.spectral)?) } else { None };
    let mv = if needs(Orient::V) { Some(pair_matrix(spec.spectral.crossed())?) } else { None };

    Ok(ExactCtx { sites: spec.sites(), edges, states, site_log, bvecs, direct_logs, mh, mv, evaluations })
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Per-site log factors with λ-scaled boundary edges folded in.
fn a_vectors(ctx: &ExactCtx, lam: &[f64]) -> Vec<Vec<f64>> {
    let g = ctx.states.len();
    let mut a = vec![ctx.site_log.clone(); ctx.sites];
    for (ei, e) in ctx.edges.iter().enumerate() {
        if let Some(vec) = &ctx.bvecs[ei] {
            let site = match (e.a, e.b) {
                (Vertex::Site(s), _) | (_, Vertex::Site(s)) => s,
                _ => unreachable!(),
            };
            let scale = 1.0 + lam[ei];
            for k in 0..g {
                a[site][k] += scale * vec[k];
            }
        }
    }
    a
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    c.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                let brow = &b[k * n..(k + 1) * n];
                for (rj, bj) in row.iter_mut().zip(brow) {
                    *rj += aik * bj;
                }
            }
        }
    });
    c
}

fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Scaled exponential of a λ-weighted log matrix, returning the shift.
fn exp_shifted(m: &[f64], scale: f64) -> (Vec<f64>, f64) {
    let mx = m.iter().map(|&v| scale * v).fold(f64::NEG_INFINITY, f64::max);
    (m.iter().map(|&v| (scale * v - mx).exp()).collect(), mx)
}

fn log_z_lambda(ctx: &ExactCtx, lam: &[f64]) -> Result<f64> {
    let g = ctx.states.len();
    if ctx.sites == 0 {
        let mut lz = 0.0;
        for (ei, d) in ctx.direct_logs.iter().enumerate() {
            if let Some(v) = d {
                lz += (1.0 + lam[ei]) * v;
            }
        }
        return Ok(lz);
    }
    let a = a_vectors(ctx, lam);
    if ctx.sites == 1 {
        return Ok(log_sum_exp(&a[0]));
    }

    let internal: Vec<(usize, usize, usize)> = ctx
        .edges
        .iter()
        .enumerate()
        .filter_map(|(ei, e)| match (e.a, e.b) {
            (Vertex::Site(s1), Vertex::Site(s2)) => Some((ei, s1, s2)),
            _ => None,
        })
        .collect();

    if ctx.rows_cols_is_chain() {
        // Path contraction with one max-shift per step.
        let m = ctx.mh.as_ref().or(ctx.mv.as_ref()).expect("chain needs a pair matrix");
        let m0 = a[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut v: Vec<f64> = a[0].iter().map(|&x| (x - m0).exp()).collect();
        let mut acc = m0;
        for step in 0..ctx.sites - 1 {
            let (ei, s1, s2) = internal[step];
            debug_assert!(s1 == step && s2 == step + 1);
            let scale = 1.0 + lam[ei];
            let an = &a[step + 1];
            let mut c = f64::NEG_INFINITY;
            for i in 0..g {
                for j in 0..g {
                    c = c.max(scale * m[i * g + j] + an[j]);
                }
            }
            let mut u = vec![0.0; g];
            for (i, &vi) in v.iter().enumerate() {
                if vi != 0.0 {
                    for (j, uj) in u.iter_mut().enumerate() {
                        *uj += vi * (scale * m[i * g + j] + an[j] - c).exp();
                    }
                }
            }
            let um = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(um > 0.0) {
                return Err(Error::Convergence("transfer step annihilated the state".into()));
            }
            v = u.iter().map(|&x| x / um).collect();
            acc += c + um.ln();
        }
        return Ok(acc + v.iter().sum::<f64>().ln());
    }

    // 2x2 block: sites 0,1 top row, 2,3 bottom row.
    let mh = ctx.mh.as_ref().expect("2x2 needs the horizontal matrix");
    let mv = ctx.mv.as_ref().expect("2x2 needs the vertical matrix");
    let mut lam_h = [0.0; 2];
    let mut lam_v = [0.0; 2];
    for &(ei, s1, s2) in &internal {
        match (s1, s2) {
            (0, 1) => lam_h[0] = lam[ei],
            (2, 3) => lam_h[1] = lam[ei],
            (0, 2) => lam_v[0] = lam[ei],
            (1, 3) => lam_v[1] = lam[ei],
            _ => unreachable!("unexpected internal edge in a 2x2 block"),
        }
    }
    let mut m1 = vec![0.0; g * g];
    let mut m2 = vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            m1[i * g + j] = a[0][i] + a[1][j] + (1.0 + lam_h[0]) * mh[i * g + j];
            m2[i * g + j] = a[2][i] + a[3][j] + (1.0 + lam_h[1]) * mh[i * g + j];
        }
    }
    let mx = m1
        .iter()
        .chain(m2.iter())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let e1: Vec<f64> = m1.iter().map(|&v| (v - mx).exp()).collect();
    let e2: Vec<f64> = m2.iter().map(|&v| (v - mx).exp()).collect();
    let (ev1, s1) = exp_shifted(mv, 1.0 + lam_v[0]);
    let (ev2, s2) = exp_shifted(mv, 1.0 + lam_v[1]);
    // Z e^{-2mx-s1-s2} = Σ_{b,c} (E1ᵀ EV1)[b,c] · (E2 EV2ᵀ)[c,b]
    let t1 = matmul(g, &transpose(g, &e1), &ev1);
    let r = matmul(g, &e2, &transpose(g, &ev2));
    let mut z = 0.0;
    for bidx in 0..g {
        for cidx in 0..g {
            z += t1[bidx * g + cidx] * r[cidx * g + bidx];
        }
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Convergence(format!("block contraction collapsed to {z}")));
    }
    Ok(z.ln() + 2.0 * mx + s1 + s2)
}

impl ExactCtx {
    fn rows_cols_is_chain(&self) -> bool {
        // Chains have sites in a single path; the 2x2 block is the only
        // multi-site shape with four internal edges.
        let internal = self
            .edges
            .iter()
            .filter(|e| matches!((e.a, e.b), (Vertex::Site(_), Vertex::Site(_))))
            .count();
        internal == self.sites - 1
    }
}

/// Exact partition result on the chosen grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionResult {
    pub log_z: f64,
    pub evaluations: u64,
    /// Integer-window sensitivity for dual-spin grids: |Δ log Z| when the
    /// window grows by 4.
    pub truncation_error: Option<f64>,
}

/// Exact log partition function by Gauss-Legendre contraction.
pub fn exact_partition(
    spec: &LatticeSpec,
    disc: &GridDiscretization,
    budget: &PrecisionBudget,
) -> Result<PartitionResult> {
    let ctx = build_ctx(spec, disc, budget)?;
    let lam = vec![0.0; ctx.edges.len()];
    let log_z = log_z_lambda(&ctx, &lam)?;
    let mut evaluations = ctx.evaluations;
    let truncation_error = if matches!(spec.model, Model::Gamma) && spec.sites() > 0 {
        let wide = GridDiscretization { n_max: disc.n_max + 4, ..*disc };
        let ctx2 = build_ctx(spec, &wide, budget)?;
        let wide_log_z = log_z_lambda(&ctx2, &lam)?;
        evaluations += ctx2.evaluations;
        Some((wide_log_z - log_z).abs())
    } else {
        None
    };
    Ok(PartitionResult { log_z, evaluations, truncation_error })
}

/// Exact per-edge mean log-weights ⟨log W_e⟩, in canonical edge order, by
/// central differences of log Z under a per-edge (1 + λ) scaling, λ = ±1e-4.
pub fn exact_edge_log_means(
    spec: &LatticeSpec,
    disc: &GridDiscretization,
    budget: &PrecisionBudget,
) -> Result<Vec<f64>> {
    const H: f64 = 1e-4;
    let ctx = build_ctx(spec, disc, budget)?;
    let mut lam = vec![0.0; ctx.edges.len()];
    let mut means = Vec::with_capacity(ctx.edges.len());
    for ei in 0..ctx.edges.len() {
        lam[ei] = H;
        let up = log_z_lambda(&ctx, &lam)?;
        lam[ei] = -H;
        let dn = log_z_lambda(&ctx, &lam)?;
        lam[ei] = 0.0;
        means.push((up - dn) / (2.0 * H));
    }
    Ok(means)
}

/// Metropolis sampler controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MCConfig {
    pub seed: u64,
    /// Measured sweeps after burn-in.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Record every `thin`-th sweep.
    pub thin: usize,
    /// Standard deviation of the continuous proposal.
    pub x_step: f64,
    /// Probability that a dual-spin proposal moves the integer component.
    pub n_step_prob: f64,
    /// Batch count for batch-means error bars.
    pub batches: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            seed: 1,
            sweeps: 20_000,
            burn_in: 2_000,
            thin: 20,
            x_step: 1.0,
            n_step_prob: 0.5,
            batches: 32,
        }
    }
}

/// Metropolis run summary: per-edge mean log-weights with batch-means
/// errors (canonical edge order), the acceptance rate, and the thinned
/// trajectory of internal spins.
#[derive(Debug, Clone, Serialize)]
pub struct McRun {
    pub edge_log_mean: Vec<f64>,
    pub edge_log_err: Vec<f64>,
    pub acceptance: f64,
    #[serde(skip_serializing)]
    pub samples: Vec<Vec<SpinVar>>,
}

/// Metropolis sampling of the internal spins at fixed boundary.
pub fn mc_run(spec: &LatticeSpec, mc: &MCConfig) -> Result<McRun> {
    if spec.sites() == 0 {
        return Err(Error::Config("sampling needs at least one internal site".into()));
    }
    if mc.thin == 0 || mc.sweeps == 0 {
        return Err(Error::Config("sweeps and thin must be positive".into()));
    }
    let records = mc.sweeps / mc.thin;
    if mc.batches < 2 || records < 2 * mc.batches {
        return Err(Error::Config(format!(
            "{records} recorded sweeps cannot fill {} batches",
            mc.batches
        )));
    }
    if !(mc.x_step > 0.0) || !(0.0..=1.0).contains(&mc.n_step_prob) {
        return Err(Error::Config("bad proposal parameters".into()));
    }
    let budget = PrecisionBudget::default();
    let edges = build_edges(spec);
    let n_sites = spec.sites();
    let mut adjacency = vec![Vec::new(); n_sites];
    for (ei, e) in edges.iter().enumerate() {
        for v in [e.a, e.b] {
            if let Vertex::Site(s) = v {
                adjacency[s].push(ei);
            }
        }
    }

    let is_elliptic = matches!(spec.model, Model::Elliptic(_));
    let mut state: Vec<SpinVar> = (0..n_sites)
        .map(|_| match spec.model {
            Model::Elliptic(_) => SpinVar::scalar(0.77),
            Model::Hyperbolic(_) => SpinVar::scalar(0.5),
            Model::Gamma => SpinVar::dual(0.5, 0),
        })
        .collect();

    let edge_log = |ei: usize, state: &[SpinVar], cand: Option<(usize, SpinVar)>| -> Result<f64> {
        let e = &edges[ei];
        let resolve = |v: Vertex| match v {
            Vertex::Fixed(s) => s,
            Vertex::Site(s) => match cand {
                Some((cs, cv)) if cs == s => cv,
                _ => state[s],
            },
        };
        log_edge_weight(&spec.model, e.spectral, resolve(e.a), resolve(e.b), &budget)
    };
    // Log weight of everything the given site touches.
    let site_local = |site: usize, cand: SpinVar, state: &[SpinVar]| -> Result<f64> {
        let s = single_spin_weight(&spec.model, cand)?;
        assert!(s >= 0.0, "single-spin weight must be nonnegative, got {s}");
        let mut lw = s.ln();
        for &ei in &adjacency[site] {
            lw += edge_log(ei, state, Some((site, cand)))?;
        }
        Ok(lw)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    let normal = Normal::new(0.0, mc.x_step)
        .map_err(|e| Error::Config(format!("bad proposal width: {e}")))?;
    let mut site_logs: Vec<f64> = (0..n_sites)
        .map(|s| site_local(s, state[s], &state))
        .collect::<Result<Vec<f64>>>()?;

    let mut accepted = 0u64;
    let mut proposed = 0u64;
    let mut n_moved = false;
    let mut samples = Vec::with_capacity(records);
    let mut edge_series: Vec<Vec<f64>> = vec![Vec::with_capacity(records); edges.len()];

    for sweep in 0..mc.burn_in + mc.sweeps {
        for site in 0..n_sites {
            let current = state[site];
            let cand = match current {
                SpinVar::Spin(sp) => {
                    let mut x = sp.x + normal.sample(&mut rng);
                    if is_elliptic {
                        x = x.rem_euclid(PI);
                    }
                    SpinVar::scalar(x)
                }
                SpinVar::Dual(d) => {
                    if rng.gen::<f64>() < mc.n_step_prob {
                        let dn = if rng.gen_bool(0.5) { 1 } else { -1 };
                        SpinVar::dual(d.x, d.n + dn)
                    } else {
                        SpinVar::dual(d.x + normal.sample(&mut rng), d.n)
                    }
                }
            };
            proposed += 1;
            let cand_log = site_local(site, cand, &state)?;
            let delta = cand_log - site_logs[site];
            if delta >= 0.0 || rng.gen::<f64>() < delta.exp() {
                if let (SpinVar::Dual(old), SpinVar::Dual(new)) = (current, cand) {
                    if old.n != new.n {
                        n_moved = true;
                    }
                }
                state[site] = cand;
                accepted += 1;
                // Neighbouring sites share edges with this one.
                for s in 0..n_sites {
                    site_logs[s] = site_local(s, state[s], &state)?;
                }
            }
        }
        if sweep >= mc.burn_in && (sweep - mc.burn_in) % mc.thin == mc.thin - 1 {
            samples.push(state.clone());
            for (ei, series) in edge_series.iter_mut().enumerate() {
                series.push(edge_log(ei, &state, None)?);
            }
        }
    }

    let acceptance = accepted as f64 / proposed as f64;
    if acceptance < 0.01 {
        return Err(Error::Ergodicity(format!(
            "acceptance rate {acceptance:.4} is too low to sample"
        )));
    }
    if matches!(spec.model, Model::Gamma) && mc.n_step_prob > 0.0 && !n_moved {
        return Err(Error::Ergodicity("integer spin components never moved".into()));
    }

    let mut edge_log_mean = Vec::with_capacity(edges.len());
    let mut edge_log_err = Vec::with_capacity(edges.len());
    let per_batch = samples.len() / mc.batches;
    for series in &edge_series {
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let mut var = 0.0;
        for b in 0..mc.batches {
            let chunk = &series[b * per_batch..(b + 1) * per_batch];
            let bm = chunk.iter().sum::<f64>() / chunk.len() as f64;
            var += (bm - mean) * (bm - mean);
        }
        let se = (var / (mc.batches as f64 * (mc.batches as f64 - 1.0))).sqrt();
        edge_log_mean.push(mean);
        edge_log_err.push(se);
    }

    Ok(McRun { edge_log_mean, edge_log_err, acceptance, samples })
}

/// One shape in a free-energy trend.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrendPoint {
    pub rows: usize,
    pub cols: usize,
    pub log_z: f64,
    pub log_z_per_site: f64,
}

/// Exact log Z across block shapes at a uniform ring boundary, for
/// qualitative inspection of the per-site trend.
pub fn free_energy_trend(
    m: &Model,
    spectral: SpectralParam,
    boundary_spin: SpinVar,
    shapes: &[(usize, usize)],
    disc: &GridDiscretization,
    budget: &PrecisionBudget,
) -> Result<Vec<TrendPoint>> {
    shapes
        .iter()
        .map(|&(rows, cols)| {
            let ring = vec![boundary_spin; 2 * (rows + cols)];
            let spec = LatticeSpec::new(m.clone(), rows, cols, spectral, Boundary::Ring(ring))?;
            let r = exact_partition(&spec, disc, budget)?;
            Ok(TrendPoint {
                rows,
                cols,
                log_z: r.log_z,
                log_z_per_site: r.log_z / (rows * cols).max(1) as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::EllipticNomes;

    fn elliptic_model() -> Model {
        Model::Elliptic(EllipticNomes::new(0.3, 0.3).unwrap())
    }

    #[test]
    fn gauss_legendre_matches_reference_values() {
        let (x, w) = gauss_legendre(5);
        let xr = [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664];
        let wr = [0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647, 0.23692688505618908];
        for i in 0..5 {
            assert!((x[i] - xr[i]).abs() < 1e-14);
            assert!((w[i] - wr[i]).abs() < 1e-14);
        }
        // n-point rule is exact through degree 2n-1.
        let (x, w) = gauss_legendre(4);
        let int: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(6)).sum();
        assert!((int - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn star_partition_matches_adaptive_oracle() {
        let m = elliptic_model();
        let eta = m.eta();
        let outer = [SpinVar::scalar(0.5), SpinVar::scalar(1.1), SpinVar::scalar(2.0)];
        let split = [
            m.spectral(0.2 * eta).unwrap(),
            m.spectral(0.3 * eta).unwrap(),
            m.spectral(0.5 * eta).unwrap(),
        ];
        let spec = LatticeSpec::new(
            m.clone(),
            1,
            1,
            m.spectral(0.5 * eta).unwrap(),
            Boundary::Star(outer, split),
        )
        .unwrap();
        let disc = GridDiscretization::for_model(&m);
        let r = exact_partition(&spec, &disc, &PrecisionBudget::default()).unwrap();
        let z = r.log_z.exp();
        assert!((z / 0.5119572899046009 - 1.0).abs() < 1e-11, "z = {z}");
        assert!(r.truncation_error.is_none());
    }

    #[test]
    fn two_by_two_block_frozen_and_transpose_invariant() {
        let m = elliptic_model();
        let eta = m.eta();
        let ring = vec![SpinVar::scalar(0.3); 8];
        let disc = GridDiscretization { nodes: 48, ..GridDiscretization::for_model(&m) };
        let b = PrecisionBudget::default();
        let spec = LatticeSpec::new(
            m.clone(),
            2,
            2,
            m.spectral(0.3 * eta).unwrap(),
            Boundary::Ring(ring.clone()),
        )
        .unwrap();
        let lz = exact_partition(&spec, &disc, &b).unwrap().log_z;
        assert!((lz - 2.16548441).abs() < 2e-7, "log Z = {lz}");
        // Swapping the roles of the two directions transposes the square
        // block, which leaves it invariant.
        let spec_t = LatticeSpec::new(
            m.clone(),
            2,
            2,
            m.spectral(0.7 * eta).unwrap(),
            Boundary::Ring(ring),
        )
        .unwrap();
        let lz_t = exact_partition(&spec_t, &disc, &b).unwrap().log_z;
        assert!((lz - lz_t).abs() < 1e-8, "transpose drift {}", lz - lz_t);
    }

    #[test]
    fn chain_matches_brute_force() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.4 * eta).unwrap();
        let ring = vec![
            SpinVar::scalar(0.4),
            SpinVar::scalar(1.2),
            SpinVar::scalar(0.9),
            SpinVar::scalar(2.1),
            SpinVar::scalar(0.6),
            SpinVar::scalar(1.7),
        ];
        let spec = LatticeSpec::new(m.clone(), 1, 2, a, Boundary::Ring(ring)).unwrap();
        let disc = GridDiscretization { nodes: 16, ..GridDiscretization::for_model(&m) };
        let budget = PrecisionBudget::default();
        let lz = exact_partition(&spec, &disc, &budget).unwrap().log_z;

        let ctx = build_ctx(&spec, &disc, &budget).unwrap();
        let lam = vec![0.0; ctx.edges.len()];
        let av = a_vectors(&ctx, &lam);
        let g = ctx.states.len();
        let mh = ctx.mh.as_ref().unwrap();
        let mut z = 0.0;
        for i in 0..g {
            for j in 0..g {
                z += (av[0][i] + av[1][j] + mh[i * g + j]).exp();
            }
        }
        assert!((lz - z.ln()).abs() < 1e-12, "{lz} vs {}", z.ln());
    }

    #[test]
    fn block_and_edge_means_match_brute_force() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.35 * eta).unwrap();
        let ring: Vec<SpinVar> =
            [0.4, 1.2, 0.9, 2.1, 0.6, 1.7, 1.1, 0.2].iter().map(|&x| SpinVar::scalar(x)).collect();
        let spec = LatticeSpec::new(m.clone(), 2, 2, a, Boundary::Ring(ring)).unwrap();
        let disc = GridDiscretization { nodes: 8, ..GridDiscretization::for_model(&m) };
        let budget = PrecisionBudget::default();
        let lz = exact_partition(&spec, &disc, &budget).unwrap().log_z;
        let means = exact_edge_log_means(&spec, &disc, &budget).unwrap();

        let ctx = build_ctx(&spec, &disc, &budget).unwrap();
        let lam = vec![0.0; ctx.edges.len()];
        let av = a_vectors(&ctx, &lam);
        let g = ctx.states.len();
        let mh = ctx.mh.as_ref().unwrap();
        let mv = ctx.mv.as_ref().unwrap();
        // Boundary log-weight vectors, keyed by the site each edge touches.
        let bv =
            |ei: usize| ctx.bvecs[ei].as_ref().expect("boundary edge must carry a vector");
        let mut z = 0.0;
        let mut sums = vec![0.0; 12];
        for ia in 0..g {
            for ib in 0..g {
                for ic in 0..g {
                    for id in 0..g {
                        let lw = av[0][ia] + av[1][ib] + av[2][ic] + av[3][id]
                            + mh[ia * g + ib]
                            + mh[ic * g + id]
                            + mv[ia * g + ic]
                            + mv[ib * g + id];
                        let w = lw.exp();
                        z += w;
                        // Canonical order: H row 0 = edges 0..3, H row 1 =
                        // 3..6, V col 0 = 6..9, V col 1 = 9..12; internal
                        // edges sit at 1, 4, 7, 10.
                        sums[0] += w * bv(0)[ia];
                        sums[1] += w * mh[ia * g + ib];
                        sums[2] += w * bv(2)[ib];
                        sums[3] += w * bv(3)[ic];
                        sums[4] += w * mh[ic * g + id];
                        sums[5] += w * bv(5)[id];
                        sums[6] += w * bv(6)[ia];
                        sums[7] += w * mv[ia * g + ic];
                        sums[8] += w * bv(8)[ic];
                        sums[9] += w * bv(9)[ib];
                        sums[10] += w * mv[ib * g + id];
                        sums[11] += w * bv(11)[id];
                    }
                }
            }
        }
        assert!((lz - z.ln()).abs() < 1e-11, "{lz} vs {}", z.ln());
        for (ei, s) in sums.iter().enumerate() {
            let exact = s / z;
            assert!(
                (means[ei] - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                "edge {ei}: {} vs {exact}",
                means[ei]
            );
        }
    }

    #[test]
    fn zero_site_shapes_reduce_to_direct_products() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.4 * eta).unwrap();
        let ring = vec![SpinVar::scalar(0.7), SpinVar::scalar(1.3)];
        let spec = LatticeSpec::new(m.clone(), 0, 1, a, Boundary::Ring(ring)).unwrap();
        let disc = GridDiscretization::for_model(&m);
        let budget = PrecisionBudget::default();
        let lz = exact_partition(&spec, &disc, &budget).unwrap().log_z;
        let direct = log_edge_weight(
            &m,
            a.crossed(),
            SpinVar::scalar(0.7),
            SpinVar::scalar(1.3),
            &budget,
        )
        .unwrap();
        assert!((lz - direct).abs() < 1e-14);
    }

    #[test]
    fn shape_and_boundary_gates() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.4 * eta).unwrap();
        let ring3 = vec![SpinVar::scalar(0.5); 10];
        assert!(matches!(
            LatticeSpec::new(m.clone(), 2, 3, a, Boundary::Ring(ring3)),
            Err(Error::TooManyInternalSites(6))
        ));
        let short_ring = vec![SpinVar::scalar(0.5); 3];
        assert!(matches!(
            LatticeSpec::new(m.clone(), 1, 1, a, Boundary::Ring(short_ring)),
            Err(Error::Config(_))
        ));
        let outer = [SpinVar::scalar(0.5); 3];
        let split = [a, a, m.spectral(eta - 2.0 * a.value()).unwrap()];
        assert!(matches!(
            LatticeSpec::new(m.clone(), 1, 2, a, Boundary::Star(outer, split)),
            Err(Error::Config(_))
        ));
        let wrong_kind = vec![SpinVar::dual(0.5, 0); 4];
        assert!(matches!(
            LatticeSpec::new(m.clone(), 1, 1, a, Boundary::Ring(wrong_kind)),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn gamma_partition_reports_truncation_sensitivity() {
        let m = Model::Gamma;
        let a = m.spectral(0.4).unwrap();
        let ring = vec![
            SpinVar::dual(0.6, 0),
            SpinVar::dual(-0.4, 1),
            SpinVar::dual(0.3, -1),
            SpinVar::dual(0.2, 0),
        ];
        let spec = LatticeSpec::new(m, 1, 1, a, Boundary::Ring(ring)).unwrap();
        let disc = GridDiscretization { nodes: 48, n_max: 6, half_width: 10.0 };
        let r = exact_partition(&spec, &disc, &PrecisionBudget::default()).unwrap();
        let te = r.truncation_error.unwrap();
        assert!(te >= 0.0 && te < 1e-3, "window sensitivity {te}");
        assert!(r.log_z.is_finite());
    }

    #[test]
    fn mc_is_deterministic_and_moves() {
        let m = Model::Gamma;
        let a = m.spectral(0.4).unwrap();
        let ring = vec![
            SpinVar::dual(0.6, 0),
            SpinVar::dual(-0.4, 1),
            SpinVar::dual(0.3, -1),
            SpinVar::dual(0.2, 0),
        ];
        let spec = LatticeSpec::new(m, 1, 1, a, Boundary::Ring(ring)).unwrap();
        let mc = MCConfig { sweeps: 2_000, burn_in: 200, thin: 10, batches: 10, ..MCConfig::default() };
        let r1 = mc_run(&spec, &mc).unwrap();
        let r2 = mc_run(&spec, &mc).unwrap();
        assert_eq!(r1.edge_log_mean, r2.edge_log_mean);
        assert_eq!(r1.samples.len(), 200);
        assert!(r1.acceptance > 0.05 && r1.acceptance < 0.98, "acceptance {}", r1.acceptance);
        assert!(r1.edge_log_err.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn mc_tracks_exact_single_site_means() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.45 * eta).unwrap();
        let ring = vec![
            SpinVar::scalar(0.5),
            SpinVar::scalar(1.4),
            SpinVar::scalar(0.9),
            SpinVar::scalar(2.2),
        ];
        let spec = LatticeSpec::new(m.clone(), 1, 1, a, Boundary::Ring(ring)).unwrap();
        let disc = GridDiscretization::for_model(&m);
        let budget = PrecisionBudget::default();
        let exact = exact_edge_log_means(&spec, &disc, &budget).unwrap();
        let mc = MCConfig { seed: 5, sweeps: 8_000, burn_in: 500, thin: 8, batches: 20, ..MCConfig::default() };
        let run = mc_run(&spec, &mc).unwrap();
        for (ei, (&ex, (&mean, &err))) in
            exact.iter().zip(run.edge_log_mean.iter().zip(&run.edge_log_err)).enumerate()
        {
            assert!(
                (mean - ex).abs() < 4.0 * err + 1e-3,
                "edge {ei}: mc {mean} ± {err} vs exact {ex}"
            );
        }
    }

    #[test]
    fn trend_runs_across_shapes() {
        let m = elliptic_model();
        let eta = m.eta();
        let a = m.spectral(0.5 * eta).unwrap();
        let disc = GridDiscretization { nodes: 24, ..GridDiscretization::for_model(&m) };
        let pts = free_energy_trend(
            &m,
            a,
            SpinVar::scalar(0.8),
            &[(1, 1), (1, 2), (2, 2)],
            &disc,
            &PrecisionBudget::default(),
        )
        .unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.log_z.is_finite()));
    }
}
