//! Space forms, charted maps and the pointwise geometry of a map on a grid.
//!
//! Curved space forms are handled extrinsically: the sphere of curvature
//! `c > 0` sits in Euclidean `E^{n+1}` as `⟨x, x⟩ = 1/c`, the hyperbolic space
//! of curvature `c < 0` sits in Minkowski `E^{n+1}_1` as the upper sheet of
//! `⟨x, x⟩ = 1/c`. In both cases the tangential projection at `x` is
//! `P(w) = w - c⟨w, x⟩x`, and the Levi-Civita connection along a map is the
//! projected ambient derivative.
//!
//! Curvature tensors follow `R(X, Y) = ∇_X∇_Y - ∇_Y∇_X - ∇_[X,Y]`, so
//! `R^N(X, Y)Z = c(⟨Y, Z⟩X - ⟨X, Z⟩Y)` on a space form and, in coordinates,
//! `R(∂_a, ∂_b)∂_c = R^l_abc ∂_l`.
//!
//! All fields are stored per grid node in storage order with the innermost
//! index last: `t1[p][a][k]`, `g[p][a][b]`, `Γ[p][k][a][b]`, `h[p][a][b][k]`,
//! where `k` runs over embedding coordinates.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::invariant_algebra::{FormCoefficients, Signature};

/// Largest accepted condition number of the domain metric.
pub const METRIC_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AmbientModel {
    PseudoEuclidean,
    SphereEmbedded,
    HyperbolicEmbedded,
}

/// Complete simply connected space form `N^n(c)` with its embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceForm {
    sig: Signature,
    c: f64,
    model: AmbientModel,
}

impl SpaceForm {
    pub fn new(sig: Signature, c: f64, model: AmbientModel) -> Result<Self> {
        let ok = match model {
            AmbientModel::PseudoEuclidean => c == 0.0,
            AmbientModel::SphereEmbedded => c > 0.0 && sig.index() == 0,
            AmbientModel::HyperbolicEmbedded => c < 0.0 && sig.index() == 0,
        };
        if !ok || !c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "curvature {c} and signature ({}, {}) are incompatible with {model:?}",
                sig.dim(),
                sig.index()
            )));
        }
        Ok(Self { sig, c, model })
    }

    pub fn euclidean(n: usize) -> Self {
        Self { sig: Signature::riemannian(n), c: 0.0, model: AmbientModel::PseudoEuclidean }
    }

    pub fn pseudo_euclidean(n: usize, q: usize) -> Result<Self> {
        Self::new(Signature::new(n, q)?, 0.0, AmbientModel::PseudoEuclidean)
    }

    pub fn sphere(n: usize, c: f64) -> Result<Self> {
        Self::new(Signature::new(n, 0)?, c, AmbientModel::SphereEmbedded)
    }

    pub fn hyperbolic(n: usize, c: f64) -> Result<Self> {
        Self::new(Signature::new(n, 0)?, c, AmbientModel::HyperbolicEmbedded)
    }

    /// Picks the model from the sign of `c`.
    pub fn riemannian(n: usize, c: f64) -> Result<Self> {
        if c > 0.0 {
            Self::sphere(n, c)
        } else if c < 0.0 {
            Self::hyperbolic(n, c)
        } else {
            Ok(Self::euclidean(n))
        }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn dim(&self) -> usize {
        self.sig.dim()
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn model(&self) -> AmbientModel {
        self.model
    }

    pub fn embedding_dim(&self) -> usize {
        match self.model {
            AmbientModel::PseudoEuclidean => self.sig.dim(),
            _ => self.sig.dim() + 1,
        }
    }

    /// Sign of the embedding metric on coordinate `k`.
    #[inline]
    pub fn embedding_epsilon(&self, k: usize) -> f64 {
        match self.model {
            AmbientModel::PseudoEuclidean => self.sig.epsilon(k),
            AmbientModel::SphereEmbedded => 1.0,
            AmbientModel::HyperbolicEmbedded => {
                if k == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn embedding_signature(&self) -> Signature {
        let d = self.embedding_dim();
        let q = (0..d).filter(|&k| self.embedding_epsilon(k) < 0.0).count();
        Signature::new(d, q).expect("embedding signature is valid")
    }

    #[inline]
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..x.len() {
            acc += self.embedding_epsilon(k) * x[k] * y[k];
        }
        acc
    }

    /// Tangential projection at the point `x` of `N`, in place.
    #[inline]
    pub fn project(&self, x: &[f64], w: &mut [f64]) {
        if self.c != 0.0 {
            let s = self.c * self.inner(w, x);
            for k in 0..w.len() {
                w[k] -= s * x[k];
            }
        }
    }

    /// `out += scale · R^N(x, y)z`.
    #[inline]
    pub fn add_curvature(&self, x: &[f64], y: &[f64], z: &[f64], scale: f64, out: &mut [f64]) {
        if self.c == 0.0 {
            return;
        }
        let yz = self.c * scale * self.inner(y, z);
        let xz = self.c * scale * self.inner(x, z);
        for k in 0..out.len() {
            out[k] += yz * x[k] - xz * y[k];
        }
    }
}

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Row-major `m × m` metric components at a domain point.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Vector the unit normal should have positive inner product with, given `(u, φ(u))`.
pub type NormalHint = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum MapSource {
    Closed(MapFn),
    /// Embedding coordinates at every node, in storage order.
    Sampled(Arc<Vec<f64>>),
}

#[derive(Clone)]
pub enum DomainMetric {
    /// Pullback of the ambient metric (isometric immersion mode).
    Induced,
    Explicit(MetricFn),
}

/// A map from a box domain into a space form, with its domain metric.
#[derive(Clone)]
pub struct ChartedMap {
    name: String,
    axes: Vec<Axis>,
    decks: Vec<Option<Vec<f64>>>,
    source: MapSource,
    metric: DomainMetric,
    metric_scale: f64,
    domain_index: usize,
    ambient: SpaceForm,
    stencil_order: usize,
    normal_hint: Option<NormalHint>,
}

impl fmt::Debug for ChartedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedMap")
            .field("name", &self.name)
            .field("axes", &self.axes)
            .field("decks", &self.decks)
            .field("induced", &self.is_immersion())
            .field("metric_scale", &self.metric_scale)
            .field("domain_index", &self.domain_index)
            .field("ambient", &self.ambient)
            .field("stencil_order", &self.stencil_order)
            .finish()
    }
}

impl ChartedMap {
    /// Induced-metric map given in closed form, fourth-order stencils.
    pub fn new(name: impl Into<String>, axes: Vec<Axis>, ambient: SpaceForm, map: MapFn) -> Self {
        let m = axes.len();
        Self {
            name: name.into(),
            axes,
            decks: vec![None; m],
            source: MapSource::Closed(map),
            metric: DomainMetric::Induced,
            metric_scale: 1.0,
            domain_index: 0,
            ambient,
            stencil_order: 4,
            normal_hint: None,
        }
    }

    /// Induced-metric map from samples at every node.
    pub fn sampled(name: impl Into<String>, axes: Vec<Axis>, ambient: SpaceForm, data: Vec<f64>) -> Result<Self> {
        let npts: usize = axes.iter().map(|a| a.n).product();
        if data.len() != npts * ambient.embedding_dim() {
            return Err(Error::InvalidInput(format!(
                "sampled map has {} values, expected {} nodes × {} coordinates",
                data.len(),
                npts,
                ambient.embedding_dim()
            )));
        }
        let m = axes.len();
        Ok(Self {
            name: name.into(),
            axes,
            decks: vec![None; m],
            source: MapSource::Sampled(Arc::new(data)),
            metric: DomainMetric::Induced,
            metric_scale: 1.0,
            domain_index: 0,
            ambient,
            stencil_order: 4,
            normal_hint: None,
        })
    }

    pub fn with_explicit_metric(mut self, index: usize, metric: MetricFn) -> Self {
        self.metric = DomainMetric::Explicit(metric);
        self.domain_index = index;
        self
    }

    /// Expected index of the induced metric.
    pub fn with_domain_index(mut self, index: usize) -> Self {
        self.domain_index = index;
        self
    }

    /// Declares `φ(u + period·e_axis) = φ(u) + deck`.
    pub fn with_deck(mut self, axis: usize, deck: Vec<f64>) -> Self {
        self.decks[axis] = Some(deck);
        self
    }

    pub fn with_stencil_order(mut self, order: usize) -> Self {
        self.stencil_order = order;
        self
    }

    /// Replaces an explicit metric `g` by `scale² g`.
    pub fn with_metric_scale(mut self, scale: f64) -> Self {
        self.metric_scale = scale;
        self
    }

    pub fn with_normal_hint(mut self, hint: NormalHint) -> Self {
        self.normal_hint = Some(hint);
        self
    }

    /// Same map on a grid with the given node counts.
    pub fn with_grid(&self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.axes.len() {
            return Err(Error::InvalidInput(format!(
                "chart has {} axes, got {} grid sizes",
                self.axes.len(),
                dims.len()
            )));
        }
        if matches!(self.source, MapSource::Sampled(_)) && dims != self.dims().as_slice() {
            return Err(Error::UnsupportedMode("a sampled map cannot be regridded".into()));
        }
        let mut out = self.clone();
        out.axes = self.axes.iter().zip(dims).map(|(a, &n)| a.resized(n)).collect();
        Ok(out)
    }

    /// `x ↦ a x + b` applied after the map; `a` must preserve the embedding metric
    /// and, for curved models, `b` must vanish.
    pub fn compose_isometry(&self, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let d = self.ambient.embedding_dim();
        let eta = self.ambient.embedding_signature().eta();
        let defect = (a.transpose() * &eta * &a - &eta).amax();
        if a.nrows() != d || a.ncols() != d || defect > 1e-10 {
            return Err(Error::NotPseudoOrthogonal(defect));
        }
        if self.ambient.curvature() != 0.0 && b.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidInput("curved space forms admit no translations".into()));
        }
        if self.ambient.model() == AmbientModel::HyperbolicEmbedded && a[(0, 0)] < 0.0 {
            return Err(Error::InvalidInput("isometry swaps the hyperboloid sheets".into()));
        }
        let apply = {
            let a = a.clone();
            move |x: &[f64]| -> Vec<f64> { (0..d).map(|i| (0..d).map(|j| a[(i, j)] * x[j]).sum()).collect() }
        };
        let mut out = self.clone();
        let apply = Arc::new(apply);
        out.source = match &self.source {
            MapSource::Closed(f) => {
                let (f, ap, b) = (f.clone(), apply.clone(), b.clone());
                MapSource::Closed(Arc::new(move |u: &[f64]| {
                    let mut y = ap(&f(u));
                    for k in 0..d {
                        y[k] += b[k];
                    }
                    y
                }))
            }
            MapSource::Sampled(data) => MapSource::Sampled(Arc::new(
                data.chunks(d)
                    .flat_map(|x| {
                        let mut y = apply(x);
                        for k in 0..d {
                            y[k] += b[k];
                        }
                        y
                    })
                    .collect(),
            )),
        };
        out.decks = self.decks.iter().map(|dk| dk.as_ref().map(|v| apply(v))).collect();
        if let Some(hint) = &self.normal_hint {
            let (hint, ap) = (hint.clone(), apply.clone());
            // a⁻¹ = η aᵀ η maps the new image point back to the old one.
            let a_inv = &eta * a.transpose() * &eta;
            let back = move |y: &[f64]| -> Vec<f64> {
                (0..d).map(|i| (0..d).map(|j| a_inv[(i, j)] * y[j]).sum()).collect()
            };
            let b2 = b.clone();
            out.normal_hint = Some(Arc::new(move |u: &[f64], y: &[f64]| {
                let shifted: Vec<f64> = y.iter().zip(&b2).map(|(v, s)| v - s).collect();
                ap(&hint(u, &back(&shifted)))
            }));
        }
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn ambient(&self) -> SpaceForm {
        self.ambient
    }

    pub fn is_immersion(&self) -> bool {
        matches!(self.metric, DomainMetric::Induced)
    }

    pub fn stencil_order(&self) -> usize {
        self.stencil_order
    }

    pub fn domain_signature(&self) -> Result<Signature> {
        Signature::new(self.dim(), self.domain_index)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.axes.clone(), self.stencil_order)
    }

    pub fn is_periodic(&self) -> bool {
        self.axes.iter().all(Axis::is_periodic)
    }

    /// Evaluates a closed-form map at an arbitrary domain point.
    pub fn eval(&self, u: &[f64]) -> Option<Vec<f64>> {
        match &self.source {
            MapSource::Closed(f) => Some(f(u)),
            MapSource::Sampled(_) => None,
        }
    }
}

/// Pseudo-orthonormal frame of a domain tangent space, timelike vectors first.
#[derive(Debug, Clone)]
pub struct DomainFrame {
    /// Columns are the frame vectors in coordinate components.
    pub vectors: DMatrix<f64>,
    pub eps: Vec<f64>,
    pub signature: Signature,
}

impl DomainFrame {
    /// Components of an operator `A^a_b` in this frame: `E⁻¹ A E`.
    pub fn operator_in_frame(&self, op: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.eps.len();
        let eta = DMatrix::from_fn(m, m, |i, j| if i == j { self.eps[i] } else { 0.0 });
        let e_inv = &eta * self.vectors.transpose() * g;
        e_inv * op * &self.vectors
    }
}

/// Signature-aware Gram–Schmidt on the coordinate basis with largest-|norm| pivoting.
pub fn pseudo_orthonormal_frame(g: &DMatrix<f64>) -> Result<DomainFrame> {
    let m = g.nrows();
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += u[i] * g[(i, j)] * v[j];
            }
        }
        acc
    };
    let mut remaining: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut chosen: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m);
    while !remaining.is_empty() {
        for v in remaining.iter_mut() {
            for (e, s) in &chosen {
                let c = s * inner(v, e);
                for k in 0..m {
                    v[k] -= c * e[k];
                }
            }
        }
        let (best, norm) = remaining
            .iter()
            .enumerate()
            .map(|(i, v)| (i, inner(v, v)))
            .fold((0, 0.0_f64), |acc, (i, n)| if n.abs() > acc.1.abs() { (i, n) } else { acc });
        if norm.abs() < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidInput("metric is degenerate".into()));
        }
        let v = remaining.remove(best);
        let s = norm.signum();
        let scale = norm.abs().sqrt();
        chosen.push((v.into_iter().map(|x| x / scale).collect(), s));
    }
    // negatives first, stable
    chosen.sort_by(|a, b| a.1.total_cmp(&b.1));
    let p = chosen.iter().filter(|c| c.1 < 0.0).count();
    let vectors = DMatrix::from_fn(m, m, |i, j| chosen[j].0[i]);
    Ok(DomainFrame {
        vectors,
        eps: chosen.iter().map(|c| c.1).collect(),
        signature: Signature::new(m, p)?,
    })
}

/// Pseudo-orthonormal frame of `T_φN` in embedding coordinates.
#[derive(Debug, Clone)]
pub struct AmbientFrame {
    pub vectors: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
    pub is_normal: Vec<bool>,
    pub signature: Signature,
}

impl AmbientFrame {
    pub fn normals(&self) -> impl Iterator<Item = (usize, &Vec<f64>)> {
        self.vectors.iter().enumerate().filter(|(i, _)| self.is_normal[*i])
    }
}

/// Induced or explicit metric and second fundamental form on every grid node.
pub struct ChartFields {
    grid: Grid,
    m: usize,
    d: usize,
    ambient: SpaceForm,
    immersion: bool,
    domain_sig: Signature,
    normal_hint: Option<NormalHint>,
    phi: Vec<f64>,
    t1: Vec<f64>,
    g: Vec<f64>,
    g_inv: Vec<f64>,
    vol: Vec<f64>,
    gamma: Vec<f64>,
    h: Vec<f64>,
    h_asym: Vec<f64>,
}

impl fmt::Debug for ChartFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartFields")
            .field("dims", &self.grid.dims())
            .field("m", &self.m)
            .field("embedding_dim", &self.d)
            .field("ambient", &self.ambient)
            .field("immersion", &self.immersion)
            .finish()
    }
}

fn metric_check(g: &DMatrix<f64>, index: usize, point: usize) -> Result<()> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &v in eig.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= METRIC_CONDITION_LIMIT) {
        return Err(Error::SingularChart { point, condition, limit: METRIC_CONDITION_LIMIT });
    }
    let neg = eig.iter().filter(|&&v| v < 0.0).count();
    if neg != index {
        return Err(Error::InvalidInput(format!(
            "metric at node {point} has index {neg}, expected {index}"
        )));
    }
    Ok(())
}

impl ChartFields {
    pub fn new(map: &ChartedMap) -> Result<Self> {
        let grid = map.grid()?;
        let m = grid.dim();
        let ambient = map.ambient;
        let d = ambient.embedding_dim();
        let npts = grid.len();
        let domain_sig = map.domain_signature()?;
        if map.is_immersion() && map.metric_scale != 1.0 {
            return Err(Error::UnsupportedMode("metric scaling requires an explicit metric".into()));
        }
        if m > ambient.dim() && map.is_immersion() {
            return Err(Error::InvalidInput("an immersion cannot raise dimension".into()));
        }
        for (k, deck) in map.decks.iter().enumerate() {
            if let Some(v) = deck {
                if v.len() != d || !map.axes[k].is_periodic() {
                    return Err(Error::InvalidInput(format!("bad deck translation on axis {k}")));
                }
            }
        }

        let phi = match &map.source {
            MapSource::Closed(f) => {
                let probe = f(&grid.coords(0));
                if probe.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "map returns {} coordinates, ambient embedding has {d}",
                        probe.len()
                    )));
                }
                grid.sample(d, |u| f(u))
            }
            MapSource::Sampled(data) => {
                if data.len() != npts * d {
                    return Err(Error::InvalidInput("sampled map does not match the grid".into()));
                }
                data.as_ref().clone()
            }
        };
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("map produced non-finite coordinates".into()));
        }

        let derivs: Vec<Vec<f64>> = (0..m)
            .map(|a| grid.derivative(&phi, d, a, map.decks[a].as_deref()))
            .collect();
        let mut t1 = vec![0.0; npts * m * d];
        t1.par_chunks_mut(m * d).enumerate().for_each(|(p, out)| {
            let x = &phi[p * d..(p + 1) * d];
            for a in 0..m {
                let w = &mut out[a * d..(a + 1) * d];
                w.copy_from_slice(&derivs[a][p * d..(p + 1) * d]);
                ambient.project(x, w);
            }
        });
        drop(derivs);

        let mut g = vec![0.0; npts * m * m];
        match &map.metric {
            DomainMetric::Induced => {
                g.par_chunks_mut(m * m).enumerate().for_each(|(p, out)| {
                    let t = &t1[p * m * d..(p + 1) * m * d];
                    for a in 0..m {
                        for b in 0..m {
                            out[a * m + b] = ambient.inner(&t[a * d..(a + 1) * d], &t[b * d..(b + 1) * d]);
                        }
                    }
                });
            }
            DomainMetric::Explicit(f) => {
                let s2 = map.metric_scale * map.metric_scale;
                let probe = f(&grid.coords(0));
                if probe.len() != m * m {
                    return Err(Error::InvalidInput(format!(
                        "explicit metric returns {} entries, expected {}",
                        probe.len(),
                        m * m
                    )));
                }
                g = grid.sample(m * m, |u| f(u).into_iter().map(|v| v * s2).collect());
                for p in 0..npts {
                    for a in 0..m {
                        for b in 0..a {
                            let avg = 0.5 * (g[p * m * m + a * m + b] + g[p * m * m + b * m + a]);
                            g[p * m * m + a * m + b] = avg;
                            g[p * m * m + b * m + a] = avg;
                        }
                    }
                }
            }
        }

        let checks: Vec<Result<(Vec<f64>, f64)>> = (0..npts)
            .into_par_iter()
            .map(|p| {
                let gm = DMatrix::from_row_slice(m, m, &g[p * m * m..(p + 1) * m * m]);
                metric_check(&gm, domain_sig.index(), p)?;
                let inv = gm.clone().try_inverse().ok_or(Error::SingularChart {
                    point: p,
                    condition: f64::INFINITY,
                    limit: METRIC_CONDITION_LIMIT,
                })?;
                let vol = gm.determinant().abs().sqrt();
                Ok((inv.transpose().as_slice().to_vec(), vol))
            })
            .collect();
        let mut g_inv = Vec::with_capacity(npts * m * m);
        let mut vol = Vec::with_capacity(npts);
        for r in checks {
            let (inv, v) = r?;
            g_inv.extend(inv);
            vol.push(v);
        }

        let dg: Vec<Vec<f64>> = (0..m).map(|a| grid.derivative(&g, m * m, a, None)).collect();
        let mut gamma = vec![0.0; npts * m * m * m];
        gamma.par_chunks_mut(m * m * m).enumerate().for_each(|(p, out)| {
            let gi = &g_inv[p * m * m..(p + 1) * m * m];
            let dgp = |c: usize, i: usize, j: usize| dg[c][p * m * m + i * m + j];
            for k in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        let mut acc = 0.0;
                        for l in 0..m {
                            acc += gi[k * m + l] * (dgp(a, l, b) + dgp(b, l, a) - dgp(l, a, b));
                        }
                        out[(k * m + a) * m + b] = 0.5 * acc;
                    }
                }
            }
        });

        let mut fields = Self {
            grid,
            m,
            d,
            ambient,
            immersion: map.is_immersion(),
            domain_sig,
            normal_hint: map.normal_hint.clone(),
            phi,
            t1,
            g,
            g_inv,
            vol,
            gamma,
            h: Vec::new(),
            h_asym: Vec::new(),
        };
        let raw = fields.covariant_derivative(&fields.t1, 1);
        let mut h = vec![0.0; npts * m * m * d];
        let mut h_asym = vec![0.0; npts];
        h.par_chunks_mut(m * m * d).zip(h_asym.par_iter_mut()).enumerate().for_each(|(p, (out, asym))| {
            let r = &raw[p * m * m * d..(p + 1) * m * m * d];
            let mut worst = 0.0_f64;
            for a in 0..m {
                for b in 0..m {
                    for k in 0..d {
                        let x = r[(a * m + b) * d + k];
                        let y = r[(b * m + a) * d + k];
                        out[(a * m + b) * d + k] = 0.5 * (x + y);
                        worst = worst.max((x - y).abs());
                    }
                }
            }
            *asym = worst;
        });
        fields.h = h;
        fields.h_asym = h_asym;
        Ok(fields)
    }

    /// `∇̄` of a tensor field with `rank` domain slots valued in `T N`:
    /// `G(a, i_1..i_r) = P(∂_a F(i_1..i_r)) - Σ_s Γ^k_{a i_s} F(.., k, ..)`.
    /// The new slot is first.
    pub fn covariant_derivative(&self, field: &[f64], rank: usize) -> Vec<f64> {
        let (m, d) = (self.m, self.d);
        let block = m.pow(rank as u32) * d;
        assert_eq!(field.len(), self.grid.len() * block);
        let derivs: Vec<Vec<f64>> = (0..m).map(|a| self.grid.derivative(field, block, a, None)).collect();
        let mut out = vec![0.0; self.grid.len() * m * block];
        let ambient = self.ambient;
        out.par_chunks_mut(m * block).enumerate().for_each(|(p, o)| {
            let x = &self.phi[p * d..(p + 1) * d];
            let f = &field[p * block..(p + 1) * block];
            let gam = &self.gamma[p * m * m * m..(p + 1) * m * m * m];
            let mut idx = vec![0usize; rank];
            for a in 0..m {
                for slot in 0..m.pow(rank as u32) {
                    // decode slot into rank indices, most significant first
                    let mut rem = slot;
                    for s in (0..rank).rev() {
                        idx[s] = rem % m;
                        rem /= m;
                    }
                    let dst = &mut o[(a * m.pow(rank as u32) + slot) * d..(a * m.pow(rank as u32) + slot + 1) * d];
                    dst.copy_from_slice(&derivs[a][p * block + slot * d..p * block + (slot + 1) * d]);
                    ambient.project(x, dst);
                    for s in 0..rank {
                        let stride = m.pow((rank - 1 - s) as u32);
                        let base = slot - idx[s] * stride;
                        for k in 0..m {
                            let c = gam[(k * m + a) * m + idx[s]];
                            if c != 0.0 {
                                let src = &f[(base + k * stride) * d..(base + k * stride + 1) * d];
                                for q in 0..d {
                                    dst[q] -= c * src[q];
                                }
                            }
                        }
                    }
                }
            }
        });
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn embedding_dim(&self) -> usize {
        self.d
    }

    pub fn ambient(&self) -> SpaceForm {
        self.ambient
    }

    pub fn is_immersion(&self) -> bool {
        self.immersion
    }

    pub fn domain_signature(&self) -> Signature {
        self.domain_sig
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_at(&self, p: usize) -> &[f64] {
        &self.phi[p * self.d..(p + 1) * self.d]
    }

    /// `dφ(∂_a)` for all `a`, shape `[a][k]`.
    pub fn t1(&self) -> &[f64] {
        &self.t1
    }

    pub fn t1_at(&self, p: usize) -> &[f64] {
        let s = self.m * self.d;
        &self.t1[p * s..(p + 1) * s]
    }

    pub fn metric(&self) -> &[f64] {
        &self.g
    }

    pub fn metric_at(&self, p: usize) -> DMatrix<f64> {
        let s = self.m * self.m;
        DMatrix::from_row_slice(self.m, self.m, &self.g[p * s..(p + 1) * s])
    }

    pub fn metric_inverse(&self) -> &[f64] {
        &self.g_inv
    }

    pub fn metric_inverse_at(&self, p: usize) -> DMatrix<f64> {
        let s = self.m * self.m;
        DMatrix::from_row_slice(self.m, self.m, &self.g_inv[p * s..(p + 1) * s])
    }

    /// `√|det g|` per node.
    pub fn volume_density(&self) -> &[f64] {
        &self.vol
    }

    /// `Γ^k_ab`, shape `[k][a][b]`.
    pub fn christoffel(&self) -> &[f64] {
        &self.gamma
    }

    pub fn christoffel_at(&self, p: usize) -> &[f64] {
        let s = self.m.pow(3);
        &self.gamma[p * s..(p + 1) * s]
    }

    /// Symmetrized `(∇̃dφ)(∂_a, ∂_b)`, shape `[a][b][k]`.
    pub fn second_fundamental(&self) -> &[f64] {
        &self.h
    }

    pub fn second_fundamental_at(&self, p: usize) -> &[f64] {
        let s = self.m * self.m * self.d;
        &self.h[p * s..(p + 1) * s]
    }

    /// Largest `|h(∂_a, ∂_b) - h(∂_b, ∂_a)|` before symmetrization, per node.
    pub fn second_fundamental_asymmetry(&self) -> &[f64] {
        &self.h_asym
    }

    /// Tension field `τ = g^ab h_ab`.
    pub fn tension_at(&self, p: usize) -> Vec<f64> {
        let (m, d) = (self.m, self.d);
        let gi = &self.g_inv[p * m * m..(p + 1) * m * m];
        let h = self.second_fundamental_at(p);
        let mut out = vec![0.0; d];
        for a in 0..m {
            for b in 0..m {
                let w = gi[a * m + b];
                for k in 0..d {
                    out[k] += w * h[(a * m + b) * d + k];
                }
            }
        }
        out
    }

    /// Tension field on every node, shape `[p][k]`.
    pub fn tension(&self) -> Vec<f64> {
        (0..self.grid.len()).into_par_iter().flat_map_iter(|p| self.tension_at(p)).collect()
    }

    pub fn domain_frame_at(&self, p: usize) -> Result<DomainFrame> {
        pseudo_orthonormal_frame(&self.metric_at(p))
    }

    fn orient(&self, p: usize, normal: &mut [f64]) {
        let x = self.phi_at(p);
        let flip = match &self.normal_hint {
            Some(hint) => self.ambient.inner(normal, &hint(&self.grid.coords(p), x)) < 0.0,
            None => {
                let (k, _) = normal
                    .iter()
                    .enumerate()
                    .fold((0, 0.0_f64), |acc, (k, v)| if v.abs() > acc.1 + 1e-12 { (k, v.abs()) } else { acc });
                normal[k] < 0.0
            }
        };
        if flip {
            for v in normal.iter_mut() {
                *v = -*v;
            }
        }
    }

    /// Frame of `T_φN`: normals before tangent images within each causal type,
    /// timelike vectors first. In explicit-metric mode all vectors are flagged tangent.
    pub fn ambient_frame_at(&self, p: usize, frame: &DomainFrame) -> Result<AmbientFrame> {
        let (m, d, n) = (self.m, self.d, self.ambient.dim());
        let x = self.phi_at(p);
        let amb = self.ambient;
        let t1 = self.t1_at(p);
        let mut chosen: Vec<(Vec<f64>, f64, bool)> = Vec::with_capacity(n);
        if self.immersion {
            for i in 0..m {
                let mut v = vec![0.0; d];
                for a in 0..m {
                    for k in 0..d {
                        v[k] += frame.vectors[(a, i)] * t1[a * d + k];
                    }
                }
                chosen.push((v, frame.eps[i], false));
            }
        }
        let mut candidates: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                amb.project(x, &mut e);
                e
            })
            .collect();
        while chosen.len() < n {
            for v in candidates.iter_mut() {
                for (e, s, _) in &chosen {
                    let c = s * amb.inner(v, e);
                    for k in 0..d {
                        v[k] -= c * e[k];
                    }
                }
            }
            let (best, norm) = candidates
                .iter()
                .enumerate()
                .map(|(i, v)| (i, amb.inner(v, v)))
                .fold((0, 0.0_f64), |acc, (i, nv)| if nv.abs() > acc.1.abs() { (i, nv) } else { acc });
            if candidates.is_empty() || norm.abs() < 1e-24 {
                return Err(Error::SingularChart { point: p, condition: f64::INFINITY, limit: METRIC_CONDITION_LIMIT });
            }
            let v = candidates.remove(best);
            let scale = norm.abs().sqrt();
            chosen.push((v.into_iter().map(|c| c / scale).collect(), norm.signum(), self.immersion));
        }
        if self.immersion && n == m + 1 {
            let last = chosen.len() - 1;
            self.orient(p, &mut chosen[last].0);
        }
        // timelike first; within a causal type normals before tangents
        chosen.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let q = chosen.iter().filter(|c| c.1 < 0.0).count();
        Ok(AmbientFrame {
            signature: Signature::new(n, q)?,
            eps: chosen.iter().map(|c| c.1).collect(),
            is_normal: chosen.iter().map(|c| c.2).collect(),
            vectors: chosen.into_iter().map(|c| c.0).collect(),
        })
    }

    /// Coefficients `h^α_ij = ⟨h(e_i, e_j), ξ_α⟩` in adapted frames.
    pub fn form_at(&self, p: usize) -> Result<FormCoefficients> {
        let frame = self.domain_frame_at(p)?;
        let amb = self.ambient_frame_at(p, &frame)?;
        Ok(self.form_in_frames(p, &frame, &amb))
    }

    pub fn form_in_frames(&self, p: usize, frame: &DomainFrame, amb: &AmbientFrame) -> FormCoefficients {
        let (m, d) = (self.m, self.d);
        let h = self.second_fundamental_at(p);
        let hij = |i: usize, j: usize| -> Vec<f64> {
            let mut v = vec![0.0; d];
            for a in 0..m {
                for b in 0..m {
                    let w = frame.vectors[(a, i)] * frame.vectors[(b, j)];
                    for k in 0..d {
                        v[k] += w * h[(a * m + b) * d + k];
                    }
                }
            }
            v
        };
        let mut cache = vec![Vec::new(); m * m];
        for i in 0..m {
            for j in i..m {
                cache[i * m + j] = hij(i, j);
            }
        }
        FormCoefficients::from_fn(frame.signature, amb.signature, |alpha, i, j| {
            self.ambient.inner(&cache[i * m + j], &amb.vectors[alpha])
        })
    }

    /// Oriented unit normal of a codimension-one immersion.
    pub fn unit_normal_at(&self, p: usize) -> Result<Vec<f64>> {
        self.require_hypersurface()?;
        let frame = self.domain_frame_at(p)?;
        let amb = self.ambient_frame_at(p, &frame)?;
        let normal = amb.normals().next().expect("hypersurface has one normal").1.clone();
        Ok(normal)
    }

    fn require_immersion(&self) -> Result<()> {
        if !self.immersion {
            return Err(Error::UnsupportedMode("operation needs an isometric immersion (induced metric)".into()));
        }
        Ok(())
    }

    fn require_hypersurface(&self) -> Result<()> {
        self.require_immersion()?;
        if self.ambient.dim() != self.m + 1 {
            return Err(Error::UnsupportedMode(format!(
                "operation needs codimension 1, chart has codimension {}",
                self.ambient.dim() - self.m
            )));
        }
        Ok(())
    }

    /// Shape operator `A_ξ` in coordinates: `(A_ξ)^a_b = g^ac ⟨h_cb, ξ⟩`.
    pub fn shape_operator_at(&self, p: usize, xi: &[f64]) -> DMatrix<f64> {
        let (m, d) = (self.m, self.d);
        let h = self.second_fundamental_at(p);
        let hx = DMatrix::from_fn(m, m, |c, b| self.ambient.inner(&h[(c * m + b) * d..(c * m + b + 1) * d], xi));
        self.metric_inverse_at(p) * hx
    }

    /// Eigenvalues of the shape operator for the oriented normal, descending.
    pub fn principal_curvatures_at(&self, p: usize) -> Result<Vec<f64>> {
        self.require_hypersurface()?;
        if self.domain_sig.index() != 0 || self.ambient.signature().index() != 0 {
            return Err(Error::UnsupportedMode("principal curvatures need Riemannian signatures".into()));
        }
        let form = self.form_at(p)?;
        let m = self.m;
        // the single normal sits first in a Riemannian adapted frame
        let s = DMatrix::from_fn(m, m, |i, j| form.get(0, i, j));
        let mut eig: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        Ok(eig)
    }

    /// `ℋ = τ/m`.
    pub fn mean_curvature_at(&self, p: usize) -> Result<Vec<f64>> {
        self.require_immersion()?;
        let m = self.m as f64;
        Ok(self.tension_at(p).into_iter().map(|v| v / m).collect())
    }

    /// Casorati operator `A^C`: `(A^C)^a_b = g^ac g^de ⟨h_cd, h_eb⟩`.
    pub fn casorati_at(&self, p: usize) -> Result<DMatrix<f64>> {
        self.require_immersion()?;
        let (m, d) = (self.m, self.d);
        let h = self.second_fundamental_at(p);
        let gi = self.metric_inverse_at(p);
        let hv = |a: usize, b: usize| &h[(a * m + b) * d..(a * m + b + 1) * d];
        let low = DMatrix::from_fn(m, m, |c, b| {
            let mut acc = 0.0;
            for dd in 0..m {
                for e in 0..m {
                    acc += gi[(dd, e)] * self.ambient.inner(hv(c, dd), hv(e, b));
                }
            }
            acc
        });
        Ok(&gi * low)
    }

    /// `Ξ = A_τ - A^C = m A_ℋ - Σ_α A²_{ξ_α}` in coordinates.
    pub fn xi_at(&self, p: usize) -> Result<DMatrix<f64>> {
        let tau = self.tension_at(p);
        Ok(self.shape_operator_at(p, &tau) - self.casorati_at(p)?)
    }

    /// Nodes used in reports.
    pub fn report_points(&self) -> Vec<usize> {
        self.grid.interior_points()
    }

    pub fn point_geometry(&self, p: usize, curvature: Option<&CurvatureFields>) -> Result<PointGeometry> {
        let m = self.m;
        let form = self.form_at(p)?;
        let frame = self.domain_frame_at(p)?;
        let amb = self.ambient_frame_at(p, &frame)?;
        let shape_operators = if self.immersion {
            amb.normals().map(|(_, xi)| self.shape_operator_at(p, xi)).collect()
        } else {
            Vec::new()
        };
        let principal = if self.immersion && self.ambient.dim() == m + 1 && self.domain_sig.index() == 0 {
            Some(self.principal_curvatures_at(p)?)
        } else {
            None
        };
        Ok(PointGeometry {
            point: p,
            coords: self.grid.coords(p),
            g: self.metric_at(p),
            g_inv: self.metric_inverse_at(p),
            christoffel: self.christoffel_at(p).to_vec(),
            riemann: curvature.map(|c| c.riemann_at(p).to_vec()),
            ricci_operator: curvature.map(|c| c.ricci_operator_at(p)),
            shape_operators,
            principal_curvatures: principal,
            mean_curvature: if self.immersion { Some(self.mean_curvature_at(p)?) } else { None },
            tension: self.tension_at(p),
            form,
        })
    }
}

/// Intrinsic curvature of the domain metric on every node.
#[derive(Debug, Clone)]
pub struct CurvatureFields {
    m: usize,
    riemann: Vec<f64>,
    ricci: Vec<f64>,
    q: Vec<f64>,
    grad_q: Vec<f64>,
}

impl CurvatureFields {
    pub fn new(fields: &ChartFields) -> Self {
        let m = fields.m;
        let grid = &fields.grid;
        let npts = grid.len();
        let m3 = m * m * m;
        let m4 = m3 * m;
        let dgam: Vec<Vec<f64>> = (0..m).map(|a| grid.derivative(&fields.gamma, m3, a, None)).collect();
        let mut riemann = vec![0.0; npts * m4];
        riemann.par_chunks_mut(m4).enumerate().for_each(|(p, out)| {
            let gam = &fields.gamma[p * m3..(p + 1) * m3];
            let gm = |k: usize, a: usize, b: usize| gam[(k * m + a) * m + b];
            let dg = |x: usize, k: usize, a: usize, b: usize| dgam[x][p * m3 + (k * m + a) * m + b];
            for l in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            let mut v = dg(a, l, b, c) - dg(b, l, a, c);
                            for e in 0..m {
                                v += gm(l, a, e) * gm(e, b, c) - gm(l, b, e) * gm(e, a, c);
                            }
                            out[((l * m + a) * m + b) * m + c] = v;
                        }
                    }
                }
            }
        });
        let mut ricci = vec![0.0; npts * m * m];
        let mut q = vec![0.0; npts * m * m];
        ricci
            .par_chunks_mut(m * m)
            .zip(q.par_chunks_mut(m * m))
            .enumerate()
            .for_each(|(p, (ric, qq))| {
                let r = &riemann[p * m4..(p + 1) * m4];
                for b in 0..m {
                    for c in 0..m {
                        let mut v = 0.0;
                        for a in 0..m {
                            v += r[((a * m + a) * m + b) * m + c];
                        }
                        ric[b * m + c] = v;
                    }
                }
                let gi = &fields.g_inv[p * m * m..(p + 1) * m * m];
                for a in 0..m {
                    for c in 0..m {
                        let mut v = 0.0;
                        for b in 0..m {
                            v += gi[a * m + b] * ric[b * m + c];
                        }
                        qq[a * m + c] = v;
                    }
                }
            });
        let dq: Vec<Vec<f64>> = (0..m).map(|a| grid.derivative(&q, m * m, a, None)).collect();
        let mut grad_q = vec![0.0; npts * m3];
        grad_q.par_chunks_mut(m3).enumerate().for_each(|(p, out)| {
            let gam = &fields.gamma[p * m3..(p + 1) * m3];
            let gm = |k: usize, a: usize, b: usize| gam[(k * m + a) * m + b];
            let qp = &q[p * m * m..(p + 1) * m * m];
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        let mut v = dq[a][p * m * m + b * m + c];
                        for e in 0..m {
                            v += gm(b, a, e) * qp[e * m + c] - gm(e, a, c) * qp[b * m + e];
                        }
                        out[(a * m + b) * m + c] = v;
                    }
                }
            }
        });
        Self { m, riemann, ricci, q, grad_q }
    }

    /// `R^l_abc`, shape `[l][a][b][c]`.
    pub fn riemann_at(&self, p: usize) -> &[f64] {
        let s = self.m.pow(4);
        &self.riemann[p * s..(p + 1) * s]
    }

    pub fn riemann(&self) -> &[f64] {
        &self.riemann
    }

    /// `Ric_bc = R^a_abc`.
    pub fn ricci_at(&self, p: usize) -> DMatrix<f64> {
        let s = self.m * self.m;
        DMatrix::from_row_slice(self.m, self.m, &self.ricci[p * s..(p + 1) * s])
    }

    /// Ricci operator `Q^a_c = g^ab Ric_bc`.
    pub fn ricci_operator_at(&self, p: usize) -> DMatrix<f64> {
        let s = self.m * self.m;
        DMatrix::from_row_slice(self.m, self.m, &self.q[p * s..(p + 1) * s])
    }

    /// `(∇_a Q)^b_c`, shape `[a][b][c]`.
    pub fn grad_ricci_operator_at(&self, p: usize) -> &[f64] {
        let s = self.m.pow(3);
        &self.grad_q[p * s..(p + 1) * s]
    }

    /// Scalar curvature `tr Q`; equals `2K` on surfaces.
    pub fn scalar_curvature_at(&self, p: usize) -> f64 {
        self.ricci_operator_at(p).trace()
    }

    /// `(∇_a R)^l_bcd`, shape `[a][l][b][c][d]`.
    pub fn grad_riemann(&self, fields: &ChartFields) -> Vec<f64> {
        let m = self.m;
        let (m3, m4, m5) = (m.pow(3), m.pow(4), m.pow(5));
        let grid = &fields.grid;
        let dr: Vec<Vec<f64>> = (0..m).map(|a| grid.derivative(&self.riemann, m4, a, None)).collect();
        let mut out = vec![0.0; grid.len() * m5];
        out.par_chunks_mut(m5).enumerate().for_each(|(p, o)| {
            let gam = &fields.gamma[p * m3..(p + 1) * m3];
            let gm = |k: usize, a: usize, b: usize| gam[(k * m + a) * m + b];
            let r = &self.riemann[p * m4..(p + 1) * m4];
            let rr = |l: usize, b: usize, c: usize, d: usize| r[((l * m + b) * m + c) * m + d];
            for a in 0..m {
                for l in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            for d in 0..m {
                                let mut v = dr[a][p * m4 + ((l * m + b) * m + c) * m + d];
                                for e in 0..m {
                                    v += gm(l, a, e) * rr(e, b, c, d)
                                        - gm(e, a, b) * rr(l, e, c, d)
                                        - gm(e, a, c) * rr(l, b, e, d)
                                        - gm(e, a, d) * rr(l, b, c, e);
                                }
                                o[(((a * m + l) * m + b) * m + c) * m + d] = v;
                            }
                        }
                    }
                }
            }
        });
        out
    }
}

/// Geometry at one node.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: usize,
    pub coords: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `Γ^k_ab`, shape `[k][a][b]`.
    pub christoffel: Vec<f64>,
    pub riemann: Option<Vec<f64>>,
    pub ricci_operator: Option<DMatrix<f64>>,
    /// One coordinate shape operator per normal of the adapted frame.
    pub shape_operators: Vec<DMatrix<f64>>,
    pub principal_curvatures: Option<Vec<f64>>,
    pub mean_curvature: Option<Vec<f64>>,
    pub tension: Vec<f64>,
    pub form: FormCoefficients,
}

/// Largest deviation of `Q - c(m-1)id - Ξ` over report points, measured in
/// pseudo-orthonormal frames.
pub fn gauss_identity_deviation(fields: &ChartFields, curvature: &CurvatureFields) -> Result<f64> {
    fields.require_immersion()?;
    let m = fields.m;
    let c = fields.ambient.curvature();
    let devs: Result<Vec<f64>> = fields
        .report_points()
        .into_par_iter()
        .map(|p| {
            let g = fields.metric_at(p);
            let frame = fields.domain_frame_at(p)?;
            let lhs = curvature.ricci_operator_at(p);
            let rhs = DMatrix::identity(m, m) * (c * (m as f64 - 1.0)) + fields.xi_at(p)?;
            Ok(frame.operator_in_frame(&(lhs - rhs), &g).amax())
        })
        .collect();
    Ok(devs?.into_iter().fold(0.0, f64::max))
}

fn grid_point(fields: &ChartFields, u: &[usize]) -> Result<usize> {
    fields.grid.flat_index(u)
}

/// Second fundamental form at grid node `u` in adapted pseudo-orthonormal frames.
pub fn second_fundamental_form(map: &ChartedMap, u: &[usize]) -> Result<FormCoefficients> {
    let fields = ChartFields::new(map)?;
    fields.form_at(grid_point(&fields, u)?)
}

/// Ricci operator `g⁻¹ Ric` at grid node `u`, in coordinates.
pub fn ricci_operator(map: &ChartedMap, u: &[usize]) -> Result<DMatrix<f64>> {
    let fields = ChartFields::new(map)?;
    let p = grid_point(&fields, u)?;
    Ok(CurvatureFields::new(&fields).ricci_operator_at(p))
}

/// `Ξ` at grid node `u`, in coordinates.
pub fn xi_operator(map: &ChartedMap, u: &[usize]) -> Result<DMatrix<f64>> {
    let fields = ChartFields::new(map)?;
    fields.require_immersion()?;
    fields.xi_at(grid_point(&fields, u)?)
}

/// Casorati operator at grid node `u`, in coordinates.
pub fn casorati_operator(map: &ChartedMap, u: &[usize]) -> Result<DMatrix<f64>> {
    let fields = ChartFields::new(map)?;
    fields.casorati_at(grid_point(&fields, u)?)
}

pub fn principal_curvatures(map: &ChartedMap, u: &[usize]) -> Result<Vec<f64>> {
    let fields = ChartFields::new(map)?;
    fields.principal_curvatures_at(grid_point(&fields, u)?)
}

pub fn mean_curvature_vector(map: &ChartedMap, u: &[usize]) -> Result<Vec<f64>> {
    let fields = ChartFields::new(map)?;
    fields.mean_curvature_at(grid_point(&fields, u)?)
}

/// Writes a sampled map: `u64` LE axis count, the axis sizes, the coordinate
/// count, then `f64` LE values in storage order.
pub fn write_sampled_map(path: &Path, dims: &[usize], coords: usize, data: &[f64]) -> Result<()> {
    let npts: usize = dims.iter().product();
    if data.len() != npts * coords {
        return Err(Error::InvalidInput("sample count does not match the header".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(dims.len() as u64).to_le_bytes())?;
    for &n in dims {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&(coords as u64).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_sampled_map`]; returns `(dims, coords, data)`.
pub fn read_sampled_map(path: &Path) -> Result<(Vec<usize>, usize, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word)
            .map_err(|e| Error::MalformedConfig(format!("truncated sampled-map header: {e}")))?;
        Ok(u64::from_le_bytes(word))
    };
    let naxes = next(&mut r)? as usize;
    if naxes == 0 || naxes > 8 {
        return Err(Error::MalformedConfig(format!("sampled map declares {naxes} axes")));
    }
    let dims: Vec<usize> = (0..naxes).map(|_| next(&mut r).map(|v| v as usize)).collect::<Result<_>>()?;
    let coords = next(&mut r)? as usize;
    let npts = dims.iter().try_fold(1usize, |a, &n| a.checked_mul(n));
    let total = npts
        .and_then(|n| n.checked_mul(coords))
        .filter(|&t| t > 0 && t <= (1 << 32))
        .ok_or_else(|| Error::MalformedConfig("sampled map header is out of range".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(Error::MalformedConfig(format!(
            "sampled map body has {} bytes, header implies {}",
            bytes.len(),
            total * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((dims, coords, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn clifford(r1: f64, n: usize) -> ChartedMap {
        let r2 = (1.0 - r1 * r1).sqrt();
        ChartedMap::new(
            "clifford",
            vec![Axis::periodic(n, TAU), Axis::periodic(n, TAU)],
            SpaceForm::sphere(3, 1.0).unwrap(),
            Arc::new(move |u: &[f64]| vec![r1 * u[0].cos(), r1 * u[0].sin(), r2 * u[1].cos(), r2 * u[1].sin()]),
        )
        .with_normal_hint(Arc::new(move |_u: &[f64], x: &[f64]| {
            // toward the smaller first-factor radius
            vec![-x[0], -x[1], x[2] * r1 * r1 / (r2 * r2), x[3] * r1 * r1 / (r2 * r2)]
        }))
    }

    fn round_sphere(r: f64, n: usize) -> ChartedMap {
        ChartedMap::new(
            "sphere",
            vec![Axis::open(n, 0.6, PI - 0.6), Axis::periodic(n, TAU)],
            SpaceForm::euclidean(3),
            Arc::new(move |u: &[f64]| {
                vec![r * u[0].sin() * u[1].cos(), r * u[0].sin() * u[1].sin(), r * u[0].cos()]
            }),
        )
        .with_normal_hint(Arc::new(|_u: &[f64], x: &[f64]| x.iter().map(|v| -v).collect()))
    }

    fn plane(n: usize) -> ChartedMap {
        ChartedMap::new(
            "plane",
            vec![Axis::periodic(n, 2.0), Axis::periodic(n, 3.0)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0], u[1] + 0.3 * u[0], 1.0]),
        )
        .with_deck(0, vec![2.0, 0.6, 0.0])
        .with_deck(1, vec![0.0, 3.0, 0.0])
    }

    fn max_over<F: Fn(usize) -> f64>(f: &ChartFields, g: F) -> f64 {
        f.report_points().into_iter().map(g).fold(0.0, f64::max)
    }

    #[test]
    fn space_form_validation_and_curvature_tensor() {
        assert!(SpaceForm::sphere(3, -1.0).is_err());
        assert!(SpaceForm::hyperbolic(3, 1.0).is_err());
        assert!(SpaceForm::new(Signature::new(3, 1).unwrap(), 1.0, AmbientModel::SphereEmbedded).is_err());
        let s = SpaceForm::sphere(2, 1.0).unwrap();
        assert_eq!(s.embedding_dim(), 3);
        let h = SpaceForm::hyperbolic(2, -1.0).unwrap();
        assert_eq!(h.embedding_signature().index(), 1);
        // R(X,Y)Y = c(|Y|²X - ⟨X,Y⟩Y) on orthonormal X, Y gives c X
        let mut out = vec![0.0; 3];
        s.add_curvature(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0], 1.0, &mut out);
        assert_eq!(out, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn plane_has_zero_form_and_flat_metric() {
        let f = ChartFields::new(&plane(16)).unwrap();
        for p in 0..f.grid().len() {
            let form = f.form_at(p).unwrap();
            assert!(form.coefficients().iter().all(|v| v.abs() < 1e-10));
        }
        let curv = CurvatureFields::new(&f);
        assert!(max_over(&f, |p| curv.ricci_operator_at(p).amax()) < 1e-7);
        assert_eq!(f.principal_curvatures_at(0).unwrap().len(), 2);
    }

    #[test]
    fn unit_sphere_is_umbilic() {
        let f = ChartFields::new(&round_sphere(1.0, 64)).unwrap();
        let worst = max_over(&f, |p| {
            let form = f.form_at(p).unwrap();
            let mut e = 0.0_f64;
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    e = e.max((form.get(0, i, j).abs() - want).abs());
                }
            }
            e
        });
        assert!(worst < 1e-6, "umbilicity error {worst}");
    }

    #[test]
    fn sphere_of_radius_r_principal_curvatures() {
        let r = 2.5;
        let f = ChartFields::new(&round_sphere(r, 48)).unwrap();
        let worst = max_over(&f, |p| {
            f.principal_curvatures_at(p).unwrap().iter().map(|k| (k - 1.0 / r).abs()).fold(0.0, f64::max)
        });
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn clifford_torus_geometry() {
        let f = ChartFields::new(&clifford(FRAC_1_SQRT_2, 64)).unwrap();
        let curv = CurvatureFields::new(&f);
        let pc = max_over(&f, |p| {
            let k = f.principal_curvatures_at(p).unwrap();
            (k[0] - 1.0).abs().max((k[1] + 1.0).abs())
        });
        assert!(pc < 1e-6, "{pc}");
        assert!(max_over(&f, |p| f.mean_curvature_at(p).unwrap().iter().map(|v| v.abs()).fold(0.0, f64::max)) < 1e-6);
        assert!(max_over(&f, |p| curv.ricci_operator_at(p).amax()) < 1e-6);
        let xi = max_over(&f, |p| {
            let frame = f.domain_frame_at(p).unwrap();
            (frame.operator_in_frame(&f.xi_at(p).unwrap(), &f.metric_at(p)) + DMatrix::identity(2, 2)).amax()
        });
        assert!(xi < 1e-6, "{xi}");
        assert!(gauss_identity_deviation(&f, &curv).unwrap() < 1e-6);
    }

    #[test]
    fn non_minimal_clifford_mean_curvature() {
        let r1: f64 = 0.6;
        let r2 = (1.0 - r1 * r1).sqrt();
        let want = (r2 * r2 - r1 * r1) / (2.0 * r1 * r2);
        let f = ChartFields::new(&clifford(r1, 64)).unwrap();
        let err = max_over(&f, |p| {
            let h = f.mean_curvature_at(p).unwrap();
            (f.ambient().inner(&h, &h).sqrt() - want.abs()).abs()
        });
        assert!(err < 1e-6, "{err}");
        let k = f.principal_curvatures_at(5).unwrap();
        assert!((k[0] - r2 / r1).abs() < 1e-6 && (k[1] + r1 / r2).abs() < 1e-6, "{k:?}");
    }

    #[test]
    fn round_sphere_ricci_is_identity() {
        let f = ChartFields::new(&round_sphere(1.0, 64)).unwrap();
        let curv = CurvatureFields::new(&f);
        let err = max_over(&f, |p| (curv.ricci_operator_at(p) - DMatrix::identity(2, 2)).amax());
        assert!(err < 1e-5, "{err}");
        assert!(gauss_identity_deviation(&f, &curv).unwrap() < 1e-5);
    }

    #[test]
    fn symmetrization_matches_raw_form() {
        let f = ChartFields::new(&clifford(0.6, 64)).unwrap();
        let asym = f.second_fundamental_asymmetry().iter().cloned().fold(0.0, f64::max);
        assert!(asym < 1e-6, "{asym}");
    }

    #[test]
    fn invariants_survive_frame_changes() {
        use crate::invariant_algebra::{act_group, eval_q1, eval_q2, random_pseudo_orthogonal};
        let f = ChartFields::new(&clifford(0.55, 32)).unwrap();
        for (k, p) in [0usize, 17, 300].into_iter().enumerate() {
            let form = f.form_at(p).unwrap();
            let a = random_pseudo_orthogonal(form.domain(), k as u64);
            let b = random_pseudo_orthogonal(form.codomain(), 100 + k as u64);
            let moved = act_group(&a, &b, &form).unwrap();
            assert!((eval_q1(&moved) - eval_q1(&form)).abs() < 1e-6);
            assert!((eval_q2(&moved) - eval_q2(&form)).abs() < 1e-6);
        }
    }

    #[test]
    fn codimension_and_mode_errors() {
        let curve = ChartedMap::new(
            "circle",
            vec![Axis::periodic(32, TAU)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin(), 0.0]),
        );
        assert!(matches!(principal_curvatures(&curve, &[0]), Err(Error::UnsupportedMode(_))));
        let explicit = plane(16).with_explicit_metric(0, Arc::new(|_u: &[f64]| vec![1.0, 0.0, 0.0, 1.0]));
        assert!(matches!(xi_operator(&explicit, &[0, 0]), Err(Error::UnsupportedMode(_))));
        assert!(matches!(mean_curvature_vector(&explicit, &[0, 0]), Err(Error::UnsupportedMode(_))));
    }

    #[test]
    fn degenerate_chart_is_rejected() {
        let squashed = ChartedMap::new(
            "squashed",
            vec![Axis::periodic(16, TAU), Axis::periodic(16, TAU)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin(), 0.0]),
        );
        assert!(matches!(ChartFields::new(&squashed), Err(Error::SingularChart { .. })));
    }

    #[test]
    fn point_wrappers_agree_with_fields() {
        let map = clifford(0.6, 32);
        let f = ChartFields::new(&map).unwrap();
        let p = f.grid().flat_index(&[3, 5]).unwrap();
        assert_eq!(second_fundamental_form(&map, &[3, 5]).unwrap(), f.form_at(p).unwrap());
        assert_eq!(mean_curvature_vector(&map, &[3, 5]).unwrap(), f.mean_curvature_at(p).unwrap());
        let q = ricci_operator(&map, &[3, 5]).unwrap();
        assert!(q.amax() < 1e-4);
        let cas = casorati_operator(&map, &[3, 5]).unwrap();
        assert!((cas.trace() - crate::invariant_algebra::eval_q1(&f.form_at(p).unwrap())).abs() < 1e-8);
        let pg = f.point_geometry(p, None).unwrap();
        assert_eq!(pg.shape_operators.len(), 1);
        assert!(pg.principal_curvatures.is_some());
    }

    #[test]
    fn sampled_map_round_trip() {
        let map = clifford(0.6, 16);
        let f = ChartFields::new(&map).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clifford.bin");
        write_sampled_map(&path, &[16, 16], 4, f.phi()).unwrap();
        let (dims, coords, data) = read_sampled_map(&path).unwrap();
        assert_eq!((dims.clone(), coords), (vec![16, 16], 4));
        let sampled = ChartedMap::sampled("s", map.axes().to_vec(), map.ambient(), data).unwrap();
        let g = ChartFields::new(&sampled).unwrap();
        assert_eq!(g.second_fundamental(), f.second_fundamental());
        std::fs::write(&path, [1u8, 2, 3]).unwrap();
        assert!(matches!(read_sampled_map(&path), Err(Error::MalformedConfig(_))));
    }

    #[test]
    fn hyperbolic_sphere_curvatures() {
        let rho: f64 = 0.9;
        let map = ChartedMap::new(
            "hsphere",
            vec![Axis::open(64, 0.6, PI - 0.6), Axis::periodic(64, TAU)],
            SpaceForm::hyperbolic(3, -1.0).unwrap(),
            Arc::new(move |u: &[f64]| {
                let (s, c) = (rho.sinh(), rho.cosh());
                vec![c, s * u[0].sin() * u[1].cos(), s * u[0].sin() * u[1].sin(), s * u[0].cos()]
            }),
        )
        .with_normal_hint(Arc::new(|_u: &[f64], x: &[f64]| vec![0.0, -x[1], -x[2], -x[3]]));
        let f = ChartFields::new(&map).unwrap();
        let want = 1.0 / rho.tanh();
        let err = max_over(&f, |p| f.principal_curvatures_at(p).unwrap().iter().map(|k| (k - want).abs()).fold(0.0, f64::max));
        assert!(err < 1e-6, "{err}");
        let curv = CurvatureFields::new(&f);
        assert!(gauss_identity_deviation(&f, &curv).unwrap() < 1e-5);
    }
}
