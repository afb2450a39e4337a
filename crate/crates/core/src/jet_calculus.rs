//! Higher covariant derivatives of `dφ` and the Euler–Lagrange operators.
//!
//! Everything is computed in coordinate frames and contracted with `g⁻¹`.
//! Jets are stored with the newest derivative slot first:
//! `T3[a][b][c] = (∇̃²dφ)(∂_a, ∂_b, ∂_c)` and `T4[a][b][c][d] = (∇̃³dφ)(…)`,
//! each followed by the embedding coordinate.
//!
//! ```text
//! W1 = g^ac g^bd { T4(a,b,c,d) + R^N(h_ab, dφ_c) dφ_d }
//! W2 = g^ab g^cd { T4(a,b,c,d) + R^N(h_ab, dφ_c) dφ_d }
//! ```
//!
//! and the Chern–Federer operator is `W2 - W1`, with the second-order form
//! `-dφ(tr ∇Q) + 2c(m-1)τ - g^ab h(Q ∂_a, ∂_b)` for isometric immersions.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart_geometry::{ChartFields, ChartedMap, CurvatureFields, DomainFrame, SpaceForm};
use crate::error::{Error, Result};
use crate::invariant_algebra::Permutation4;
use crate::sum::{max_value, pairwise_sum};

/// Borrowed view of `∇̃^order dφ` on every node.
#[derive(Debug, Clone, Copy)]
pub struct JetField<'a> {
    pub order: usize,
    /// Number of domain slots, `order + 1`.
    pub slots: usize,
    pub data: &'a [f64],
}

/// Fields, curvature and jets of one charted map.
#[derive(Debug)]
pub struct JetAnalysis {
    fields: ChartFields,
    curvature: CurvatureFields,
    t3: Vec<f64>,
    t4: Vec<f64>,
}

fn norm(amb: &SpaceForm, v: &[f64]) -> f64 {
    if amb.embedding_signature().index() == 0 || amb.curvature() != 0.0 {
        amb.inner(v, v).abs().sqrt()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// One ambient vector per node plus norm summaries over the report nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualSlice {
    pub label: String,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub max_norm: f64,
    pub l2_norm: f64,
    /// Max norms of the tangential and normal parts (immersion mode only).
    pub tangent_max: Option<f64>,
    pub normal_max: Option<f64>,
}

impl ResidualSlice {
    fn build(label: &str, values: Vec<f64>, fields: &ChartFields) -> Self {
        let d = fields.embedding_dim();
        let amb = fields.ambient();
        let pts = fields.report_points();
        let norms: Vec<f64> = pts.iter().map(|&p| norm(&amb, &values[p * d..(p + 1) * d])).collect();
        let cell = fields.grid().cell_volume();
        let vol = fields.volume_density();
        let sq: Vec<f64> = pts.iter().zip(&norms).map(|(&p, n)| n * n * vol[p] * cell).collect();
        let (tangent_max, normal_max) = if fields.is_immersion() {
            let (mut t, mut nn) = (Vec::with_capacity(pts.len()), Vec::with_capacity(pts.len()));
            for &p in &pts {
                let (tan, nor) = split_tangent_normal(fields, p, &values[p * d..(p + 1) * d]);
                t.push(norm(&amb, &tan));
                nn.push(norm(&amb, &nor));
            }
            (Some(max_value(&t)), Some(max_value(&nn)))
        } else {
            (None, None)
        };
        Self {
            label: label.to_string(),
            max_norm: max_value(&norms),
            l2_norm: pairwise_sum(&sq).sqrt(),
            tangent_max,
            normal_max,
            values,
        }
    }

    pub fn at(&self, p: usize, d: usize) -> &[f64] {
        &self.values[p * d..(p + 1) * d]
    }
}

/// `(Σ g^ab ⟨v, dφ_a⟩ dφ_b, remainder)`.
pub fn split_tangent_normal(fields: &ChartFields, p: usize, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (m, d) = (fields.dim(), fields.embedding_dim());
    let amb = fields.ambient();
    let t1 = fields.t1_at(p);
    let gi = fields.metric_inverse_at(p);
    let coef: Vec<f64> = (0..m).map(|a| amb.inner(v, &t1[a * d..(a + 1) * d])).collect();
    let mut tan = vec![0.0; d];
    for a in 0..m {
        for b in 0..m {
            let w = gi[(a, b)] * coef[a];
            for k in 0..d {
                tan[k] += w * t1[b * d + k];
            }
        }
    }
    let nor = v.iter().zip(&tan).map(|(x, t)| x - t).collect();
    (tan, nor)
}

/// W1, W2 and their Chern–Federer and Willmore–Chen combinations.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualField {
    pub dims: Vec<usize>,
    pub embedding_dim: usize,
    pub report_points: usize,
    pub w1: ResidualSlice,
    pub w2: ResidualSlice,
    /// Assembled as `w2 - w1`.
    pub cf: ResidualSlice,
    /// Assembled as `m·w1 - w2`.
    pub wc: ResidualSlice,
    pub combination: Option<(f64, f64, ResidualSlice)>,
    #[serde(skip)]
    coords: Vec<Vec<f64>>,
}

impl ResidualField {
    /// CSV with one row per report node: index, coordinates, W1, W2, CF, WC components and norms.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let d = self.embedding_dim;
        let m = self.dims.len();
        let mut header = vec!["point".to_string()];
        header.extend((0..m).map(|a| format!("u{a}")));
        for s in ["w1", "w2", "cf", "wc"] {
            header.extend((0..d).map(|k| format!("{s}_{k}")));
        }
        header.extend(["w1_norm", "w2_norm", "cf_norm", "wc_norm"].map(String::from));
        w.write_record(&header)?;
        for (p, coords) in self.coords.iter().enumerate() {
            if coords.is_empty() {
                continue;
            }
            let mut row = vec![p.to_string()];
            row.extend(coords.iter().map(|v| format!("{v:.16e}")));
            let slices = [&self.w1, &self.w2, &self.cf, &self.wc];
            for s in slices {
                row.extend(s.at(p, d).iter().map(|v| format!("{v:.16e}")));
            }
            for s in slices {
                let v = s.at(p, d);
                row.push(format!("{:.16e}", v.iter().map(|x| x * x).sum::<f64>().sqrt()));
            }
            w.write_record(&row)?;
        }
        Ok(())
    }
}

/// Tangential and normal parts of the second-order Chern–Federer operator.
#[derive(Debug, Clone, Serialize)]
pub struct SecondOrderResidual {
    /// `-dφ(tr ∇Q)`.
    pub tangent: ResidualSlice,
    /// `2c(m-1)τ - g^ab h(Q ∂_a, ∂_b)`.
    pub normal: ResidualSlice,
    pub total: ResidualSlice,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub name: String,
    pub points: usize,
    pub max_abs_deviation: f64,
    pub reference_max: f64,
    /// `max_abs_deviation / max(1, reference_max)`.
    pub scaled_deviation: f64,
}

impl DeviationReport {
    fn new(name: &str, points: usize, dev: f64, reference: f64) -> Self {
        Self {
            name: name.to_string(),
            points,
            max_abs_deviation: dev,
            reference_max: reference,
            scaled_deviation: dev / reference.max(1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    pub third_order: DeviationReport,
    pub fourth_order: DeviationReport,
    /// Largest `|T3(a,b,c) - T3(a,c,b)|`.
    pub slot_symmetry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuNuReport {
    /// `(v2 - v1)` against the separately assembled `W2 - W1`.
    pub assembly: DeviationReport,
    /// CF contraction of `σ3(μ+ν)` against `-(v2 - v1)`.
    pub sigma3_antisymmetry: f64,
    pub sigma6_antisymmetry: f64,
    /// Largest slot-(3,4) asymmetry of μ and of ν.
    pub mu_symmetry: f64,
    pub nu_symmetry: f64,
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

impl JetAnalysis {
    pub fn new(map: &ChartedMap) -> Result<Self> {
        Ok(Self::from_fields(ChartFields::new(map)?))
    }

    pub fn from_fields(fields: ChartFields) -> Self {
        let curvature = CurvatureFields::new(&fields);
        let t3 = fields.covariant_derivative(fields.second_fundamental(), 2);
        let t4 = fields.covariant_derivative(&t3, 3);
        Self { fields, curvature, t3, t4 }
    }

    pub fn fields(&self) -> &ChartFields {
        &self.fields
    }

    pub fn curvature(&self) -> &CurvatureFields {
        &self.curvature
    }

    /// `order` 1 is `∇̃dφ`, 2 is `∇̃²dφ`, 3 is `∇̃³dφ`.
    pub fn jet(&self, order: usize) -> Result<JetField<'_>> {
        let data = match order {
            1 => self.fields.second_fundamental(),
            2 => &self.t3,
            3 => &self.t4,
            _ => return Err(Error::InvalidInput(format!("jet order must be 1, 2 or 3, got {order}"))),
        };
        Ok(JetField { order, slots: order + 1, data })
    }

    fn t4_at(&self, p: usize) -> &[f64] {
        let s = self.fields.dim().pow(4) * self.fields.embedding_dim();
        &self.t4[p * s..(p + 1) * s]
    }

    fn t3_at(&self, p: usize) -> &[f64] {
        let s = self.fields.dim().pow(3) * self.fields.embedding_dim();
        &self.t3[p * s..(p + 1) * s]
    }

    /// `T4(a,b,c,d) + R^N(h_ab, dφ_c) dφ_d`, shape `[a][b][c][d][k]`.
    fn integrand_at(&self, p: usize) -> Vec<f64> {
        let (m, d) = (self.fields.dim(), self.fields.embedding_dim());
        let amb = self.fields.ambient();
        let mut out = self.t4_at(p).to_vec();
        let h = self.fields.second_fundamental_at(p);
        let t1 = self.fields.t1_at(p);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for dd in 0..m {
                        let o = ((((a * m + b) * m + c) * m + dd) * d)..((((a * m + b) * m + c) * m + dd + 1) * d);
                        amb.add_curvature(
                            &h[(a * m + b) * d..(a * m + b + 1) * d],
                            &t1[c * d..(c + 1) * d],
                            &t1[dd * d..(dd + 1) * d],
                            1.0,
                            &mut out[o],
                        );
                    }
                }
            }
        }
        out
    }

    /// `(W1, W2)` at node `p` by coordinate contraction.
    pub fn w_at(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let (m, d) = (self.fields.dim(), self.fields.embedding_dim());
        let gi = self.fields.metric_inverse_at(p);
        let u = self.integrand_at(p);
        let (mut w1, mut w2) = (vec![0.0; d], vec![0.0; d]);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for dd in 0..m {
                        let c1 = gi[(a, c)] * gi[(b, dd)];
                        let c2 = gi[(a, b)] * gi[(c, dd)];
                        let base = (((a * m + b) * m + c) * m + dd) * d;
                        for k in 0..d {
                            w1[k] += c1 * u[base + k];
                            w2[k] += c2 * u[base + k];
                        }
                    }
                }
            }
        }
        (w1, w2)
    }

    /// `(W1, W2)` at node `p` summed over a pseudo-orthonormal frame.
    pub fn w_in_frame(&self, p: usize, frame: &DomainFrame) -> (Vec<f64>, Vec<f64>) {
        let (m, d) = (self.fields.dim(), self.fields.embedding_dim());
        let u = self.integrand_at(p);
        let e = &frame.vectors;
        let (mut w1, mut w2) = (vec![0.0; d], vec![0.0; d]);
        for i in 0..m {
            for j in 0..m {
                let s = frame.eps[i] * frame.eps[j];
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            for dd in 0..m {
                                let c1 = s * e[(a, i)] * e[(b, j)] * e[(c, i)] * e[(dd, j)];
                                let c2 = s * e[(a, i)] * e[(b, i)] * e[(c, j)] * e[(dd, j)];
                                let base = (((a * m + b) * m + c) * m + dd) * d;
                                for k in 0..d {
                                    w1[k] += c1 * u[base + k];
                                    w2[k] += c2 * u[base + k];
                                }
                            }
                        }
                    }
                }
            }
        }
        (w1, w2)
    }

    fn w_fields(&self) -> (Vec<f64>, Vec<f64>) {
        let (npts, d) = (self.fields.grid().len(), self.fields.embedding_dim());
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..npts).into_par_iter().map(|p| self.w_at(p)).collect();
        let mut w1 = Vec::with_capacity(npts * d);
        let mut w2 = Vec::with_capacity(npts * d);
        for (a, b) in pairs {
            w1.extend(a);
            w2.extend(b);
        }
        (w1, w2)
    }

    pub fn residuals(&self) -> ResidualField {
        self.residuals_with(None)
    }

    fn residuals_with(&self, combo: Option<(f64, f64)>) -> ResidualField {
        let f = &self.fields;
        let m = f.dim() as f64;
        let (w1, w2) = self.w_fields();
        let cf: Vec<f64> = w2.iter().zip(&w1).map(|(b, a)| b - a).collect();
        let wc: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| m * a - b).collect();
        let combination = combo.map(|(al, be)| {
            let v = w1.iter().zip(&w2).map(|(a, b)| al * a + be * b).collect();
            (al, be, ResidualSlice::build("alpha_beta", v, f))
        });
        let interior: std::collections::HashSet<usize> = f.report_points().into_iter().collect();
        let coords = (0..f.grid().len())
            .map(|p| if interior.contains(&p) { f.grid().coords(p) } else { Vec::new() })
            .collect();
        ResidualField {
            dims: f.grid().dims(),
            embedding_dim: f.embedding_dim(),
            report_points: interior.len(),
            w1: ResidualSlice::build("w1", w1, f),
            w2: ResidualSlice::build("w2", w2, f),
            cf: ResidualSlice::build("cf", cf, f),
            wc: ResidualSlice::build("wc", wc, f),
            combination,
            coords,
        }
    }

    /// `αW1 + βW2`; `α = β = 0` is rejected.
    pub fn alpha_beta(&self, alpha: f64, beta: f64) -> Result<ResidualSlice> {
        check_alpha_beta(alpha, beta)?;
        let (w1, w2) = self.w_fields();
        let v = w1.iter().zip(&w2).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(ResidualSlice::build("alpha_beta", v, &self.fields))
    }

    /// Residual field with the `αW1 + βW2` slot filled in.
    pub fn residuals_for(&self, alpha: f64, beta: f64) -> Result<ResidualField> {
        check_alpha_beta(alpha, beta)?;
        Ok(self.residuals_with(Some((alpha, beta))))
    }

    fn second_order_at(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let c = f.ambient().curvature();
        let gi = f.metric_inverse_at(p);
        let t1 = f.t1_at(p);
        let h = f.second_fundamental_at(p);
        let gq = self.curvature.grad_ricci_operator_at(p);
        let q = self.curvature.ricci_operator_at(p);
        let mut tan = vec![0.0; d];
        for a in 0..m {
            for b in 0..m {
                for cc in 0..m {
                    let w = -gi[(a, b)] * gq[(a * m + cc) * m + b];
                    for k in 0..d {
                        tan[k] += w * t1[cc * d + k];
                    }
                }
            }
        }
        let tau = f.tension_at(p);
        let mut nor: Vec<f64> = tau.iter().map(|t| 2.0 * c * (m as f64 - 1.0) * t).collect();
        for a in 0..m {
            for b in 0..m {
                for cc in 0..m {
                    let w = gi[(a, b)] * q[(cc, a)];
                    for k in 0..d {
                        nor[k] -= w * h[(cc * m + b) * d + k];
                    }
                }
            }
        }
        (tan, nor)
    }

    pub fn cf_second_order(&self) -> Result<SecondOrderResidual> {
        if !self.fields.is_immersion() {
            return Err(Error::UnsupportedMode("the second-order form needs an isometric immersion".into()));
        }
        let npts = self.fields.grid().len();
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..npts).into_par_iter().map(|p| self.second_order_at(p)).collect();
        let mut tan = Vec::new();
        let mut nor = Vec::new();
        for (t, n) in parts {
            tan.extend(t);
            nor.extend(n);
        }
        let total = tan.iter().zip(&nor).map(|(a, b)| a + b).collect();
        Ok(SecondOrderResidual {
            tangent: ResidualSlice::build("tangent", tan, &self.fields),
            normal: ResidualSlice::build("normal", nor, &self.fields),
            total: ResidualSlice::build("total", total, &self.fields),
        })
    }

    /// Pointwise comparison of `W2 - W1` with the second-order expression.
    pub fn oracle_equivalence(&self) -> Result<DeviationReport> {
        let d = self.fields.embedding_dim();
        let amb = self.fields.ambient();
        let second = self.cf_second_order()?;
        let res = self.residuals();
        let pts = self.fields.report_points();
        let devs: Vec<f64> = pts
            .iter()
            .map(|&p| {
                let a = res.cf.at(p, d);
                let b = second.total.at(p, d);
                let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                norm(&amb, &diff)
            })
            .collect();
        Ok(DeviationReport::new("cf_fourth_vs_second_order", pts.len(), max_value(&devs), second.total.max_norm))
    }

    /// `g^ab ∇̄_a∇̄_b τ` against `g^ab g^cd T4(a,b,c,d)`.
    pub fn rough_laplacian(&self) -> DeviationReport {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let tau = f.tension();
        let s1 = f.covariant_derivative(&tau, 0);
        let s2 = f.covariant_derivative(&s1, 1);
        let pts = f.report_points();
        let rows: Vec<(f64, f64)> = pts
            .par_iter()
            .map(|&p| {
                let gi = f.metric_inverse_at(p);
                let t4 = self.t4_at(p);
                let (mut lhs, mut rhs) = (vec![0.0; d], vec![0.0; d]);
                for a in 0..m {
                    for b in 0..m {
                        for k in 0..d {
                            lhs[k] += gi[(a, b)] * s2[(p * m * m + a * m + b) * d + k];
                        }
                        for c in 0..m {
                            for dd in 0..m {
                                let w = gi[(a, b)] * gi[(c, dd)];
                                for k in 0..d {
                                    rhs[k] += w * t4[(((a * m + b) * m + c) * m + dd) * d + k];
                                }
                            }
                        }
                    }
                }
                let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
                (norm(&f.ambient(), &diff), norm(&f.ambient(), &rhs))
            })
            .collect();
        let dev = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let refm = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        DeviationReport::new("rough_laplacian", pts.len(), dev, refm)
    }

    /// Both commutation identities on every coordinate index combination.
    pub fn commutation(&self) -> CommutationReport {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let amb = f.ambient();
        let grad_r = self.curvature.grad_riemann(f);
        let m5 = m.pow(5);
        let pts = f.report_points();
        let rows: Vec<[f64; 5]> = pts
            .par_iter()
            .map(|&p| {
                let t1 = f.t1_at(p);
                let h = f.second_fundamental_at(p);
                let t3 = self.t3_at(p);
                let t4 = self.t4_at(p);
                let r = self.curvature.riemann_at(p);
                let gr = &grad_r[p * m5..(p + 1) * m5];
                let v1 = |a: usize| &t1[a * d..(a + 1) * d];
                let hv = |a: usize, b: usize| &h[(a * m + b) * d..(a * m + b + 1) * d];
                let (mut dev3, mut ref3, mut dev4, mut ref4, mut sym) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            let i3 = |x: usize, y: usize, z: usize| ((x * m + y) * m + z) * d;
                            let mut rhs = vec![0.0; d];
                            amb.add_curvature(v1(a), v1(b), v1(c), 1.0, &mut rhs);
                            for l in 0..m {
                                let w = r[((l * m + a) * m + b) * m + c];
                                for k in 0..d {
                                    rhs[k] -= w * t1[l * d + k];
                                }
                            }
                            let mut diff = 0.0_f64;
                            for k in 0..d {
                                let lhs = t3[i3(a, b, c) + k] - t3[i3(b, a, c) + k];
                                diff = diff.max((lhs - rhs[k]).abs());
                                sym = sym.max((t3[i3(a, b, c) + k] - t3[i3(a, c, b) + k]).abs());
                                ref3 = ref3.max(t3[i3(a, b, c) + k].abs());
                            }
                            dev3 = dev3.max(diff);
                            for dd in 0..m {
                                let i4 = |x: usize, y: usize, z: usize, w: usize| (((x * m + y) * m + z) * m + w) * d;
                                let mut rhs = vec![0.0; d];
                                amb.add_curvature(hv(a, b), v1(c), v1(dd), 1.0, &mut rhs);
                                amb.add_curvature(v1(b), hv(a, c), v1(dd), 1.0, &mut rhs);
                                amb.add_curvature(v1(b), v1(c), hv(a, dd), 1.0, &mut rhs);
                                for l in 0..m {
                                    let w = r[((l * m + b) * m + c) * m + dd];
                                    let wg = gr[(((a * m + l) * m + b) * m + c) * m + dd];
                                    for k in 0..d {
                                        rhs[k] -= w * h[(a * m + l) * d + k] + wg * t1[l * d + k];
                                    }
                                }
                                for k in 0..d {
                                    let lhs = t4[i4(a, b, c, dd) + k] - t4[i4(a, c, b, dd) + k];
                                    dev4 = dev4.max((lhs - rhs[k]).abs());
                                    ref4 = ref4.max(t4[i4(a, b, c, dd) + k].abs());
                                }
                            }
                        }
                    }
                }
                [dev3, ref3, dev4, ref4, sym]
            })
            .collect();
        let col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
        CommutationReport {
            third_order: DeviationReport::new("third_order_commutation", pts.len(), col(0), col(1)),
            fourth_order: DeviationReport::new("fourth_order_commutation", pts.len(), col(2), col(3)),
            slot_symmetry: col(4),
        }
    }

    /// `μ + ν` at node `p`, shape `[a][b][c][d][k]`.
    pub fn mu_plus_nu_at(&self, p: usize) -> Vec<f64> {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let amb = f.ambient();
        let t1 = f.t1_at(p);
        let h = f.second_fundamental_at(p);
        let mut out = self.t4_at(p).to_vec();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for dd in 0..m {
                        let base = (((a * m + b) * m + c) * m + dd) * d;
                        amb.add_curvature(
                            &h[(c * m + dd) * d..(c * m + dd + 1) * d],
                            &t1[a * d..(a + 1) * d],
                            &t1[b * d..(b + 1) * d],
                            1.0,
                            &mut out[base..base + d],
                        );
                    }
                }
            }
        }
        out
    }

    /// `(C12C34 T, C13C24 T)` of a vector-valued four-tensor at node `p`.
    fn contract_vec(&self, p: usize, t: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let gi = f.metric_inverse_at(p);
        let (mut v2, mut v1) = (vec![0.0; d], vec![0.0; d]);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for dd in 0..m {
                        let base = (((a * m + b) * m + c) * m + dd) * d;
                        let c12 = gi[(a, b)] * gi[(c, dd)];
                        let c13 = gi[(a, c)] * gi[(b, dd)];
                        for k in 0..d {
                            v2[k] += c12 * t[base + k];
                            v1[k] += c13 * t[base + k];
                        }
                    }
                }
            }
        }
        (v2, v1)
    }

    fn permuted(&self, t: &[f64], sigma: &Permutation4) -> Vec<f64> {
        let (m, d) = (self.fields.dim(), self.fields.embedding_dim());
        let mut out = vec![0.0; t.len()];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for dd in 0..m {
                        let [i, j, k, l] = sigma.source_index([a, b, c, dd]);
                        let dst = (((a * m + b) * m + c) * m + dd) * d;
                        let src = (((i * m + j) * m + k) * m + l) * d;
                        out[dst..dst + d].copy_from_slice(&t[src..src + d]);
                    }
                }
            }
        }
        out
    }

    pub fn mu_nu(&self) -> MuNuReport {
        let f = &self.fields;
        let (m, d) = (f.dim(), f.embedding_dim());
        let amb = f.ambient();
        let pts = f.report_points();
        let s3 = Permutation4::sigma(3);
        let s6 = Permutation4::sigma(6);
        let rows: Vec<[f64; 6]> = pts
            .par_iter()
            .map(|&p| {
                let u = self.mu_plus_nu_at(p);
                let (v2, v1) = self.contract_vec(p, &u);
                let cf: Vec<f64> = v2.iter().zip(&v1).map(|(a, b)| a - b).collect();
                let (w1, w2) = self.w_at(p);
                let wcf: Vec<f64> = w2.iter().zip(&w1).map(|(a, b)| a - b).collect();
                let dev = norm(&amb, &cf.iter().zip(&wcf).map(|(a, b)| a - b).collect::<Vec<_>>());
                let anti = |sigma: &Permutation4| {
                    let (x2, x1) = self.contract_vec(p, &self.permuted(&u, sigma));
                    let s: Vec<f64> = x2.iter().zip(&x1).zip(&cf).map(|((a, b), c)| a - b + c).collect();
                    amax(&s)
                };
                let mu = self.t4_at(p);
                let (mut mu_sym, mut nu_sym) = (0.0_f64, 0.0_f64);
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            for dd in 0..m {
                                let x = (((a * m + b) * m + c) * m + dd) * d;
                                let y = (((a * m + b) * m + dd) * m + c) * d;
                                for k in 0..d {
                                    mu_sym = mu_sym.max((mu[x + k] - mu[y + k]).abs());
                                    let nx = u[x + k] - mu[x + k];
                                    let ny = u[y + k] - mu[y + k];
                                    nu_sym = nu_sym.max((nx - ny).abs());
                                }
                            }
                        }
                    }
                }
                [dev, norm(&amb, &wcf), anti(&s3), anti(&s6), mu_sym, nu_sym]
            })
            .collect();
        let col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
        MuNuReport {
            assembly: DeviationReport::new("mu_nu_assembly", pts.len(), col(0), col(1)),
            sigma3_antisymmetry: col(2),
            sigma6_antisymmetry: col(3),
            mu_symmetry: col(4),
            nu_symmetry: col(5),
        }
    }
}

fn check_alpha_beta(alpha: f64, beta: f64) -> Result<()> {
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::InvalidInput("alpha and beta must not both vanish".into()));
    }
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidInput("alpha and beta must be finite".into()));
    }
    Ok(())
}

pub fn covariant_jets(map: &ChartedMap) -> Result<JetAnalysis> {
    JetAnalysis::new(map)
}

pub fn w1_residual(map: &ChartedMap) -> Result<ResidualSlice> {
    Ok(JetAnalysis::new(map)?.residuals().w1)
}

pub fn w2_residual(map: &ChartedMap) -> Result<ResidualSlice> {
    Ok(JetAnalysis::new(map)?.residuals().w2)
}

pub fn alpha_beta_residual(map: &ChartedMap, alpha: f64, beta: f64) -> Result<ResidualSlice> {
    check_alpha_beta(alpha, beta)?;
    JetAnalysis::new(map)?.alpha_beta(alpha, beta)
}

pub fn cf_residual_second_order(map: &ChartedMap) -> Result<SecondOrderResidual> {
    if !map.is_immersion() {
        return Err(Error::UnsupportedMode("the second-order form needs an isometric immersion".into()));
    }
    JetAnalysis::new(map)?.cf_second_order()
}

pub fn oracle_equivalence(map: &ChartedMap) -> Result<DeviationReport> {
    JetAnalysis::new(map)?.oracle_equivalence()
}

pub fn rough_laplacian_check(map: &ChartedMap) -> Result<DeviationReport> {
    Ok(JetAnalysis::new(map)?.rough_laplacian())
}

pub fn commutation_checks(map: &ChartedMap) -> Result<CommutationReport> {
    Ok(JetAnalysis::new(map)?.commutation())
}

pub fn mu_nu_contraction_residual(map: &ChartedMap) -> Result<MuNuReport> {
    Ok(JetAnalysis::new(map)?.mu_nu())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
    use std::sync::Arc;

    fn clifford(r1: f64, n: usize) -> ChartedMap {
        let r2 = (1.0 - r1 * r1).sqrt();
        ChartedMap::new(
            "clifford",
            vec![Axis::periodic(n, TAU), Axis::periodic(n, TAU)],
            SpaceForm::sphere(3, 1.0).unwrap(),
            Arc::new(move |u: &[f64]| vec![r1 * u[0].cos(), r1 * u[0].sin(), r2 * u[1].cos(), r2 * u[1].sin()]),
        )
        .with_normal_hint(Arc::new(|_u: &[f64], x: &[f64]| vec![-x[0], -x[1], x[2], x[3]]))
    }

    fn flat_identity(n: usize) -> ChartedMap {
        ChartedMap::new(
            "identity",
            vec![Axis::periodic(n, 2.0), Axis::periodic(n, 3.0)],
            SpaceForm::euclidean(2),
            Arc::new(|u: &[f64]| vec![u[0], u[1]]),
        )
        .with_deck(0, vec![2.0, 0.0])
        .with_deck(1, vec![0.0, 3.0])
    }

    /// Exact W1, W2 coefficients along the oriented normal of a Clifford torus.
    fn clifford_w(r1: f64) -> (f64, f64) {
        let r2 = (1.0 - r1 * r1).sqrt();
        let h = (r2 * r2 - r1 * r1) / (2.0 * r1 * r2);
        (-4.0 * h * (1.0 + 2.0 * h * h), -8.0 * h * h * h)
    }

    fn normal_error(jets: &JetAnalysis, slice: &ResidualSlice, coef: f64) -> f64 {
        let f = jets.fields();
        let d = f.embedding_dim();
        f.report_points()
            .into_iter()
            .map(|p| {
                let xi = f.unit_normal_at(p).unwrap();
                slice.at(p, d).iter().zip(&xi).map(|(w, x)| (w - coef * x).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_of_flat_torus_has_vanishing_jets() {
        let jets = covariant_jets(&flat_identity(16)).unwrap();
        for order in 1..=3 {
            assert!(amax(jets.jet(order).unwrap().data) < 1e-10, "order {order}");
        }
        assert!(jets.jet(4).is_err());
        let res = jets.residuals();
        assert!(res.w1.max_norm < 1e-10 && res.w2.max_norm < 1e-10);
    }

    #[test]
    fn totally_geodesic_plane_in_e3() {
        let map = ChartedMap::new(
            "plane",
            vec![Axis::periodic(16, 1.0), Axis::periodic(16, 1.0)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0], u[1], 0.5]),
        )
        .with_deck(0, vec![1.0, 0.0, 0.0])
        .with_deck(1, vec![0.0, 1.0, 0.0]);
        let jets = covariant_jets(&map).unwrap();
        for order in 2..=3 {
            assert!(amax(jets.jet(order).unwrap().data) < 1e-10);
        }
        let c = jets.commutation();
        assert!(c.third_order.max_abs_deviation < 1e-10 && c.fourth_order.max_abs_deviation < 1e-10);
    }

    #[test]
    fn clifford_w_operators_match_closed_forms() {
        for r1 in [0.5, 0.8] {
            let jets = covariant_jets(&clifford(r1, 64)).unwrap();
            let res = jets.residuals();
            let (c1, c2) = clifford_w(r1);
            assert!(normal_error(&jets, &res.w1, c1) / c1.abs() < 3e-3);
            assert!(normal_error(&jets, &res.w2, c2) / c2.abs() < 3e-3);
        }
    }

    #[test]
    fn minimal_clifford_is_critical_for_everything() {
        let res = covariant_jets(&clifford(FRAC_1_SQRT_2, 64)).unwrap().residuals();
        assert!(res.w1.max_norm < 1e-4 && res.w2.max_norm < 1e-4 && res.cf.max_norm < 1e-4);
    }

    #[test]
    fn assembled_slots_are_exact_combinations() {
        let jets = covariant_jets(&clifford(0.6, 32)).unwrap();
        let res = jets.residuals_for(2.0, -0.5).unwrap();
        let (_, _, combo) = res.combination.as_ref().unwrap();
        for i in 0..res.w1.values.len() {
            assert_eq!(res.cf.values[i], res.w2.values[i] - res.w1.values[i]);
            assert_eq!(res.wc.values[i], 2.0 * res.w1.values[i] - res.w2.values[i]);
            assert_eq!(combo.values[i], 2.0 * res.w1.values[i] - 0.5 * res.w2.values[i]);
        }
        assert!(jets.alpha_beta(0.0, 0.0).is_err());
        let w1 = jets.alpha_beta(1.0, 0.0).unwrap();
        assert_eq!(w1.values, res.w1.values);
    }

    #[test]
    fn frame_and_coordinate_contractions_agree() {
        use crate::invariant_algebra::random_pseudo_orthogonal;
        let jets = covariant_jets(&clifford(0.6, 32)).unwrap();
        let f = jets.fields();
        for (s, p) in [3usize, 100, 517].into_iter().enumerate() {
            let mut frame = f.domain_frame_at(p).unwrap();
            let rot = random_pseudo_orthogonal(frame.signature, s as u64);
            frame.vectors = &frame.vectors * rot;
            let (a1, a2) = jets.w_at(p);
            let (b1, b2) = jets.w_in_frame(p, &frame);
            for k in 0..4 {
                assert!((a1[k] - b1[k]).abs() < 1e-9 && (a2[k] - b2[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn second_order_form_on_flat_torus() {
        let r1: f64 = 0.6;
        let r2 = (1.0 - r1 * r1).sqrt();
        let h = (r2 * r2 - r1 * r1) / (2.0 * r1 * r2);
        let jets = covariant_jets(&clifford(r1, 64)).unwrap();
        let so = jets.cf_second_order().unwrap();
        assert!(so.tangent.max_norm < 1e-4);
        assert!(normal_error(&jets, &so.normal, 4.0 * h) < 1e-4);
        assert!(jets.oracle_equivalence().unwrap().scaled_deviation < 1e-2);
    }

    #[test]
    fn curvature_identities_on_clifford() {
        let jets = covariant_jets(&clifford(0.6, 64)).unwrap();
        let c = jets.commutation();
        assert!(c.third_order.max_abs_deviation < 1e-4, "{:?}", c.third_order);
        assert!(c.fourth_order.max_abs_deviation < 1e-2, "{:?}", c.fourth_order);
        assert!(c.slot_symmetry < 1e-6);
        assert!(jets.rough_laplacian().scaled_deviation < 1e-3);
        let mn = jets.mu_nu();
        assert!(mn.assembly.max_abs_deviation < 1e-6);
        assert!(mn.sigma3_antisymmetry < 1e-6 && mn.sigma6_antisymmetry < 1e-6);
        assert!(mn.mu_symmetry < 1e-6 && mn.nu_symmetry < 1e-12);
    }

    #[test]
    fn sphere_in_e3_commutation() {
        let map = ChartedMap::new(
            "sphere",
            vec![Axis::open(64, 0.6, PI - 0.6), Axis::periodic(64, TAU)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0].sin() * u[1].cos(), u[0].sin() * u[1].sin(), u[0].cos()]),
        );
        let c = commutation_checks(&map).unwrap();
        assert!(c.third_order.max_abs_deviation < 1e-4, "{:?}", c.third_order);
    }

    #[test]
    fn explicit_mode_rejects_second_order_form() {
        let map = flat_identity(16).with_explicit_metric(0, Arc::new(|_u: &[f64]| vec![1.0, 0.0, 0.0, 1.0]));
        assert!(matches!(cf_residual_second_order(&map), Err(Error::UnsupportedMode(_))));
        assert!(w1_residual(&map).unwrap().max_norm < 1e-10);
        assert!(w1_residual(&map).unwrap().tangent_max.is_none());
    }

    #[test]
    fn pseudo_euclidean_identity_map() {
        let map = ChartedMap::new(
            "lorentz_identity",
            vec![Axis::periodic(16, 2.0), Axis::periodic(16, 2.0)],
            SpaceForm::pseudo_euclidean(2, 1).unwrap(),
            Arc::new(|u: &[f64]| vec![u[0], u[1]]),
        )
        .with_deck(0, vec![2.0, 0.0])
        .with_deck(1, vec![0.0, 2.0])
        .with_domain_index(1);
        let jets = covariant_jets(&map).unwrap();
        assert!(amax(jets.jet(3).unwrap().data) < 1e-10);
        assert!(jets.residuals().cf.max_norm < 1e-10);
    }

    #[test]
    fn residual_csv_has_one_row_per_report_point() {
        let res = covariant_jets(&clifford(0.6, 16)).unwrap().residuals();
        let mut w = csv::Writer::from_writer(Vec::new());
        res.write_csv_to(&mut w).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 256);
        assert!(text.starts_with("point,u0,u1,w1_0"));
    }
}
