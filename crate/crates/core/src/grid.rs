//! Structured grids over chart domains and finite-difference first derivatives.
//!
//! Periodic axes use central stencils with wraparound. Open axes use the same
//! number of nodes, shifted inward near the ends; values within
//! [`Grid::margin`] nodes of an open end are never reported.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AxisKind {
    /// Nodes `i·period/n` for `i = 0..n`.
    Periodic { period: f64 },
    /// Nodes `lo + (hi - lo)·i/(n - 1)` for `i = 0..n`, both ends included.
    Open { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub n: usize,
    pub kind: AxisKind,
}

impl Axis {
    pub fn periodic(n: usize, period: f64) -> Self {
        Self { n, kind: AxisKind::Periodic { period } }
    }

    pub fn open(n: usize, lo: f64, hi: f64) -> Self {
        Self { n, kind: AxisKind::Open { lo, hi } }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic { .. })
    }

    pub fn step(&self) -> f64 {
        match self.kind {
            AxisKind::Periodic { period } => period / self.n as f64,
            AxisKind::Open { lo, hi } => (hi - lo) / (self.n - 1) as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        match self.kind {
            AxisKind::Periodic { .. } => i as f64 * self.step(),
            AxisKind::Open { lo, .. } => lo + i as f64 * self.step(),
        }
    }

    /// Same axis with a different node count.
    pub fn resized(&self, n: usize) -> Self {
        Self { n, kind: self.kind }
    }
}

/// Weights of the derivative of order `deriv` at 0 from nodes `x` (Fornberg).
pub fn fornberg_weights(x: &[f64], deriv: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i];
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// Precomputed first-derivative stencil along one axis, already divided by the step.
#[derive(Debug, Clone)]
struct AxisStencil {
    /// For periodic axes a single entry; for open axes one entry per node.
    rows: Vec<(isize, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    npts: usize,
    order: usize,
    stencils: Vec<AxisStencil>,
}

impl Grid {
    /// `order` is the accuracy order of the first-derivative stencils (2 or 4).
    pub fn new(axes: Vec<Axis>, order: usize) -> Result<Self> {
        if order != 2 && order != 4 {
            return Err(Error::InvalidInput(format!("stencil order must be 2 or 4, got {order}")));
        }
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        let width = order + 1;
        for (k, ax) in axes.iter().enumerate() {
            if ax.n < width.max(3) {
                return Err(Error::InvalidInput(format!(
                    "axis {k} has {} nodes, fewer than the stencil width {width}",
                    ax.n
                )));
            }
            let bad = match ax.kind {
                AxisKind::Periodic { period } => !(period.is_finite() && period > 0.0),
                AxisKind::Open { lo, hi } => !(lo.is_finite() && hi.is_finite() && hi > lo),
            };
            if bad {
                return Err(Error::InvalidInput(format!("axis {k} has an invalid extent")));
            }
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].n;
        }
        let npts = axes.iter().map(|a| a.n).product();
        let half = (order / 2) as isize;
        let stencils = axes
            .iter()
            .map(|ax| {
                let h = ax.step();
                let make = |start: isize, i: isize| {
                    let offs: Vec<f64> = (0..width as isize).map(|s| (start + s - i) as f64).collect();
                    let w = fornberg_weights(&offs, 1).into_iter().map(|v| v / h).collect();
                    (start - i, w)
                };
                let rows = if ax.is_periodic() {
                    vec![make(-half, 0)]
                } else {
                    let n = ax.n as isize;
                    (0..n).map(|i| make((i - half).clamp(0, n - width as isize), i)).collect()
                };
                AxisStencil { rows }
            })
            .collect();
        Ok(Self { axes, strides, npts, order, stencils })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.npts
    }

    pub fn is_empty(&self) -> bool {
        self.npts == 0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn is_fully_periodic(&self) -> bool {
        self.axes.iter().all(Axis::is_periodic)
    }

    /// Product of the axis steps.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(ax, &s)| (flat / s) % ax.n)
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "grid point needs {} indices, got {}",
                self.dim(),
                idx.len()
            )));
        }
        let mut flat = 0;
        for ((&i, ax), &s) in idx.iter().zip(&self.axes).zip(&self.strides) {
            if i >= ax.n {
                return Err(Error::InvalidInput(format!("grid index {i} out of range 0..{}", ax.n)));
            }
            flat += i * s;
        }
        Ok(flat)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(ax, &s)| ax.coord((flat / s) % ax.n))
            .collect()
    }

    /// Nodes excluded from reports at each open end: four nested stencils reach this far.
    pub fn margin(&self) -> usize {
        4 * (self.order / 2)
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        let mg = self.margin();
        self.axes.iter().zip(&self.strides).all(|(ax, &s)| {
            ax.is_periodic() || {
                let i = (flat / s) % ax.n;
                i >= mg && i + mg < ax.n
            }
        })
    }

    /// Indices of all reportable nodes, in storage order.
    pub fn interior_points(&self) -> Vec<usize> {
        (0..self.npts).filter(|&p| self.is_interior(p)).collect()
    }

    /// `∂_axis` of a field with `comps` components per node.
    ///
    /// `deck` is the jump `f(u + period·e_axis) - f(u)` of a field that is
    /// periodic only up to translation; it is added once per wrap.
    pub fn derivative(&self, field: &[f64], comps: usize, axis: usize, deck: Option<&[f64]>) -> Vec<f64> {
        assert_eq!(field.len(), self.npts * comps, "field size does not match grid");
        let ax = self.axes[axis];
        let stride = self.strides[axis];
        let n = ax.n as isize;
        let stencil = &self.stencils[axis];
        let mut out = vec![0.0; self.npts * comps];
        out.par_chunks_mut(comps).enumerate().for_each(|(p, o)| {
            let i = ((p / stride) % ax.n) as isize;
            let base = p - (i as usize) * stride;
            let (shift, w) = if ax.is_periodic() { &stencil.rows[0] } else { &stencil.rows[i as usize] };
            for (s, &wt) in w.iter().enumerate() {
                let j = i + shift + s as isize;
                let wraps = j.div_euclid(n);
                let jj = j.rem_euclid(n) as usize;
                let src = &field[(base + jj * stride) * comps..(base + jj * stride + 1) * comps];
                for c in 0..comps {
                    o[c] += wt * src[c];
                }
                if wraps != 0 {
                    if let Some(d) = deck {
                        for c in 0..comps {
                            o[c] += wt * wraps as f64 * d[c];
                        }
                    }
                }
            }
        });
        out
    }

    /// Samples `f` at every node, in storage order.
    pub fn sample<F>(&self, comps: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let mut out = vec![0.0; self.npts * comps];
        out.par_chunks_mut(comps).enumerate().for_each(|(p, o)| {
            let v = f(&self.coords(p));
            o.copy_from_slice(&v[..comps]);
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn fornberg_matches_textbook_weights() {
        let w = fornberg_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = fornberg_weights(&[0.0, 1.0, 2.0], 1);
        for (a, b) in w.iter().zip([-1.5, 2.0, -0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_derivative_of_sine() {
        for order in [2, 4] {
            let errs: Vec<f64> = [32, 64]
                .iter()
                .map(|&n| {
                    let g = Grid::new(vec![Axis::periodic(n, TAU)], order).unwrap();
                    let f = g.sample(1, |u| vec![u[0].sin()]);
                    let d = g.derivative(&f, 1, 0, None);
                    (0..n).map(|p| (d[p] - g.coords(p)[0].cos()).abs()).fold(0.0, f64::max)
                })
                .collect();
            let rate = (errs[0] / errs[1]).log2();
            assert!((rate - order as f64).abs() < 0.2, "order {order}: rate {rate}");
        }
    }

    #[test]
    fn open_axis_is_exact_on_low_degree_polynomials() {
        let g = Grid::new(vec![Axis::open(11, -1.0, 2.0)], 4).unwrap();
        let f = g.sample(1, |u| vec![u[0].powi(4) - 3.0 * u[0]]);
        let d = g.derivative(&f, 1, 0, None);
        for p in 0..11 {
            let x = g.coords(p)[0];
            assert!((d[p] - (4.0 * x.powi(3) - 3.0)).abs() < 1e-10);
        }
        assert!(g.interior_points().is_empty());
        let wide = Grid::new(vec![Axis::open(20, 0.0, 1.0)], 2).unwrap();
        assert_eq!(wide.interior_points(), (4..16).collect::<Vec<_>>());
    }

    #[test]
    fn deck_translation_recovers_linear_maps() {
        let g = Grid::new(vec![Axis::periodic(16, 3.0), Axis::periodic(16, 2.0)], 4).unwrap();
        let f = g.sample(2, |u| vec![u[0] + 0.5 * u[1], u[1]]);
        let d0 = g.derivative(&f, 2, 0, Some(&[3.0, 0.0]));
        let d1 = g.derivative(&f, 2, 1, Some(&[1.0, 2.0]));
        for p in 0..g.len() {
            assert!((d0[2 * p] - 1.0).abs() < 1e-12 && d0[2 * p + 1].abs() < 1e-12);
            assert!((d1[2 * p] - 0.5).abs() < 1e-12 && (d1[2 * p + 1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn indexing_round_trips() {
        let g = Grid::new(vec![Axis::periodic(5, 1.0), Axis::open(7, 0.0, 1.0), Axis::periodic(6, 2.0)], 2).unwrap();
        for p in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(p)).unwrap(), p);
        }
        assert!(g.flat_index(&[5, 0, 0]).is_err());
        assert!(Grid::new(vec![Axis::periodic(4, 1.0)], 4).is_err());
        assert!(Grid::new(vec![Axis::periodic(8, 1.0)], 3).is_err());
    }
}
