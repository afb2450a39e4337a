//! Geometry of a charted immersion: metric, principal curvatures, mean
//! curvature and the Gauss identity, on a non-flat torus in S³.
//!
//! cargo run --release --example chart_geometry

use cfvar::catalog::{chart, Params};
use cfvar::chart_geometry::{gauss_identity_deviation, ChartFields, CurvatureFields};

fn main() -> cfvar::Result<()> {
    let mut params = Params::new();
    params.insert("eps".into(), 0.08);
    let map = chart("wavy-torus", &params, Some(&[96, 96]))?;
    let fields = ChartFields::new(&map)?;
    let curv = CurvatureFields::new(&fields);
    let amb = fields.ambient();

    for p in fields.report_points().into_iter().step_by(96 * 24 + 11).take(4) {
        let u = fields.grid().coords(p);
        let k = fields.principal_curvatures_at(p)?;
        let h = fields.mean_curvature_at(p)?;
        println!(
            "u = ({:.3}, {:.3}): κ = ({:+.6}, {:+.6}), |H| = {:.6}, scalar curvature {:+.6}",
            u[0],
            u[1],
            k[0],
            k[1],
            amb.inner(&h, &h).sqrt(),
            curv.scalar_curvature_at(p)
        );
    }
    let dev = gauss_identity_deviation(&fields, &curv)?;
    println!("max |Q - c(m-1) id - Ξ| over the grid: {dev:.2e}");
    Ok(())
}
