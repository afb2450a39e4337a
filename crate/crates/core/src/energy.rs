//! Integral invariants `I^P(φ) = ∫_M P(∇̃dφ) dμ` over closed chart domains.
//!
//! Densities are evaluated pointwise from the second fundamental form in
//! adapted pseudo-orthonormal frames and summed with the trapezoidal rule,
//! which is spectrally accurate for smooth periodic integrands. The quadrature
//! error estimate is the difference to the same sum on every other node.

use rayon::prelude::*;
use serde::Serialize;

use crate::chart_geometry::{ChartFields, ChartedMap};
use crate::error::{Error, Result};
use crate::invariant_algebra::{eval_q1, eval_q2};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub grid: Vec<usize>,
    pub volume: f64,
    pub q1: f64,
    pub q2: f64,
    /// `q2 - q1`.
    pub cf: f64,
    /// `m·q1 - q2`.
    pub wc: f64,
    /// `|I - I_coarse|` for `I^{Q1}` and `I^{Q2}`; absent when an axis has an odd node count.
    pub quadrature_error: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BienergyReport {
    /// `½∫⟨τ, τ⟩` with `τ = g^ab h_ab`.
    pub bienergy: f64,
    /// Same integral with `τ = P(Δ_g φ)` from the divergence form of the Laplacian.
    pub bienergy_divergence_form: f64,
    pub q2_energy: f64,
    /// `|I^{Q2} - 2E₂| / max(1, |I^{Q2}|)`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomothetyReport {
    pub dim: usize,
    pub scale: f64,
    pub invariance_expected: bool,
    pub base: [f64; 2],
    pub scaled: [f64; 2],
    /// `|I(scale² g) - I(g)| / |I(g)|` for `Q1` and `Q2` (absolute when `I(g) = 0`).
    pub relative_change: [f64; 2],
    /// `scale^(m-4)`.
    pub expected_ratio: f64,
    /// Largest `|I(scale² g)/I(g) - scale^(m-4)| / scale^(m-4)` over nonzero energies.
    pub scaling_law_deviation: f64,
}

fn require_closed(fields: &ChartFields) -> Result<()> {
    if !fields.grid().is_fully_periodic() {
        return Err(Error::UnsupportedMode(
            "energies are defined on closed domains; this chart has an open axis".into(),
        ));
    }
    Ok(())
}

/// Trapezoidal sum of a nodal density against `√|det g|`, plus the every-other-node sum.
fn quadrature(fields: &ChartFields, density: &[f64]) -> (f64, Option<f64>) {
    let grid = fields.grid();
    let vol = fields.volume_density();
    let cell = grid.cell_volume();
    let terms: Vec<f64> = density.iter().zip(vol).map(|(a, v)| a * v).collect();
    let fine = pairwise_sum(&terms) * cell;
    let dims = grid.dims();
    let coarse = if dims.iter().all(|n| n % 2 == 0) {
        let sub: Vec<f64> = (0..grid.len())
            .filter(|&p| grid.multi_index(p).iter().all(|i| i % 2 == 0))
            .map(|p| terms[p])
            .collect();
        Some(pairwise_sum(&sub) * cell * 2f64.powi(dims.len() as i32))
    } else {
        None
    };
    (fine, coarse)
}

/// `Q1` and `Q2` densities from adapted-frame coefficients at every node.
pub fn densities(fields: &ChartFields) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Result<Vec<(f64, f64)>> = (0..fields.grid().len())
        .into_par_iter()
        .map(|p| {
            let form = fields.form_at(p)?;
            Ok((eval_q1(&form), eval_q2(&form)))
        })
        .collect();
    Ok(rows?.into_iter().unzip())
}

pub fn integrate_fields(fields: &ChartFields) -> Result<EnergyReport> {
    require_closed(fields)?;
    let (d1, d2) = densities(fields)?;
    let ones = vec![1.0; d1.len()];
    let (volume, _) = quadrature(fields, &ones);
    let (q1, c1) = quadrature(fields, &d1);
    let (q2, c2) = quadrature(fields, &d2);
    let m = fields.dim() as f64;
    Ok(EnergyReport {
        grid: fields.grid().dims(),
        volume,
        q1,
        q2,
        cf: q2 - q1,
        wc: m * q1 - q2,
        quadrature_error: c1.zip(c2).map(|(a, b)| [(q1 - a).abs(), (q2 - b).abs()]),
    })
}

pub fn integrate_invariants(map: &ChartedMap) -> Result<EnergyReport> {
    if !map.is_periodic() {
        return Err(Error::UnsupportedMode(
            "energies are defined on closed domains; this chart has an open axis".into(),
        ));
    }
    integrate_fields(&ChartFields::new(map)?)
}

/// Tension field from `P((1/√g) ∂_a(√g g^ab ∂_b φ))`.
pub fn tension_divergence_form(fields: &ChartFields) -> Vec<f64> {
    let (m, d) = (fields.dim(), fields.embedding_dim());
    let grid = fields.grid();
    let npts = grid.len();
    let vol = fields.volume_density();
    let gi = fields.metric_inverse();
    let t1 = fields.t1();
    let mut lap = vec![0.0; npts * d];
    for a in 0..m {
        let mut flux = vec![0.0; npts * d];
        flux.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
            for b in 0..m {
                let w = vol[p] * gi[p * m * m + a * m + b];
                for k in 0..d {
                    o[k] += w * t1[(p * m + b) * d + k];
                }
            }
        });
        let div = grid.derivative(&flux, d, a, None);
        for (l, v) in lap.iter_mut().zip(div) {
            *l += v;
        }
    }
    let amb = fields.ambient();
    lap.par_chunks_mut(d).enumerate().for_each(|(p, o)| {
        for v in o.iter_mut() {
            *v /= vol[p];
        }
        amb.project(fields.phi_at(p), o);
    });
    lap
}

pub fn bienergy_fields(fields: &ChartFields) -> Result<BienergyReport> {
    require_closed(fields)?;
    let d = fields.embedding_dim();
    let amb = fields.ambient();
    let tau = fields.tension();
    let dens: Vec<f64> = tau.chunks(d).map(|t| 0.5 * amb.inner(t, t)).collect();
    let (bienergy, _) = quadrature(fields, &dens);
    let tau_div = tension_divergence_form(fields);
    let dens_div: Vec<f64> = tau_div.chunks(d).map(|t| 0.5 * amb.inner(t, t)).collect();
    let (bienergy_divergence_form, _) = quadrature(fields, &dens_div);
    let (_, d2) = densities(fields)?;
    let (q2_energy, _) = quadrature(fields, &d2);
    Ok(BienergyReport {
        bienergy,
        bienergy_divergence_form,
        q2_energy,
        relative_gap: (q2_energy - 2.0 * bienergy).abs() / q2_energy.abs().max(1.0),
    })
}

pub fn bienergy(map: &ChartedMap) -> Result<BienergyReport> {
    bienergy_fields(&ChartFields::new(map)?)
}

/// Recomputes `I^{Q1}`, `I^{Q2}` with the explicit metric replaced by `scale² g`.
pub fn homothety_check(map: &ChartedMap, scale: f64) -> Result<HomothetyReport> {
    if map.is_immersion() {
        return Err(Error::UnsupportedMode("homothety check needs an explicit domain metric".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    let base = integrate_invariants(map)?;
    let scaled = if scale == 1.0 { base.clone() } else { integrate_invariants(&map.clone().with_metric_scale(scale))? };
    let m = map.dim();
    let expected_ratio = scale.powi(m as i32 - 4);
    let change = |a: f64, b: f64| if a != 0.0 { (b - a).abs() / a.abs() } else { (b - a).abs() };
    let law = [(base.q1, scaled.q1), (base.q2, scaled.q2)]
        .iter()
        .filter(|(a, _)| *a != 0.0)
        .map(|(a, b)| (b / a - expected_ratio).abs() / expected_ratio)
        .fold(0.0, f64::max);
    Ok(HomothetyReport {
        dim: m,
        scale,
        invariance_expected: m == 4,
        base: [base.q1, base.q2],
        scaled: [scaled.q1, scaled.q2],
        relative_change: [change(base.q1, scaled.q1), change(base.q2, scaled.q2)],
        expected_ratio,
        scaling_law_deviation: law,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_geometry::SpaceForm;
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
    }

    #[test]
    fn minimal_clifford_energies() {
        let rep = integrate_invariants(&clifford(FRAC_1_SQRT_2, 128)).unwrap();
        let four_pi2 = 4.0 * PI * PI;
        assert!((rep.volume - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 1e-6);
        assert!((rep.q1 - four_pi2).abs() / four_pi2 < 1e-6);
        assert!(rep.q2.abs() < 1e-8);
        assert!((rep.cf + four_pi2).abs() / four_pi2 < 1e-6);
        assert_eq!(rep.cf, rep.q2 - rep.q1);
        assert_eq!(rep.wc, 2.0 * rep.q1 - rep.q2);
        assert!(rep.quadrature_error.unwrap()[0] < 1e-8);
    }

    #[test]
    fn flat_inclusion_has_zero_energy() {
        let map = ChartedMap::new(
            "plane",
            vec![Axis::periodic(16, 1.0), Axis::periodic(16, 2.0)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[0], u[1], 0.0]),
        )
        .with_deck(0, vec![1.0, 0.0, 0.0])
        .with_deck(1, vec![0.0, 2.0, 0.0]);
        let rep = integrate_invariants(&map).unwrap();
        assert!(rep.q1.abs() < 1e-20 && rep.q2.abs() < 1e-20);
        assert!((rep.volume - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q2_energy_is_twice_bienergy() {
        let rep = bienergy(&clifford(0.6, 64)).unwrap();
        assert!(rep.relative_gap < 1e-10);
        assert!((rep.bienergy - rep.bienergy_divergence_form).abs() / rep.bienergy < 1e-5);
    }

    #[test]
    fn open_chart_is_rejected() {
        let map = ChartedMap::new(
            "strip",
            vec![Axis::open(16, 0.0, 1.0), Axis::periodic(16, TAU)],
            SpaceForm::euclidean(3),
            Arc::new(|u: &[f64]| vec![u[1].cos(), u[1].sin(), u[0]]),
        );
        assert!(matches!(integrate_invariants(&map), Err(Error::UnsupportedMode(_))));
    }

    #[test]
    fn homothety_scaling_in_dimension_two() {
        let map = clifford(0.6, 32).with_explicit_metric(0, Arc::new(|u: &[f64]| {
            vec![1.0 + 0.2 * u[1].cos(), 0.1, 0.1, 1.5]
        }));
        let rep = homothety_check(&map, 2.0).unwrap();
        assert!(!rep.invariance_expected);
        assert_eq!(rep.expected_ratio, 0.25);
        assert!(rep.scaling_law_deviation < 1e-6);
        let same = homothety_check(&map, 1.0).unwrap();
        assert_eq!(same.relative_change, [0.0, 0.0]);
        assert!(homothety_check(&clifford(0.6, 32), 2.0).is_err());
    }
}
