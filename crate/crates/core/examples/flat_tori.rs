//! Critical constant-mean-curvature flat tori in S³ for α I^Q1 + β I^Q2:
//! case analysis, critical Clifford radii, a chart-level cross-check and the
//! Chebyshev-net description of flat tori.
//!
//! cargo run --release --example flat_tori

use cfvar::catalog::{clifford_radii, flat_torus_chart_check, flat_torus_classify, ChebyshevNet};

fn main() -> cfvar::Result<()> {
    for (a, b) in [(-1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (2.0, -1.0), (-1.0, 3.0), (-1.0, 2.0)] {
        let c = flat_torus_classify(a, b)?;
        let radii = clifford_radii(a, b).map(|(r1, r2)| format!("({r1:.6}, {r2:.6})")).unwrap_or_else(|e| e.to_string());
        println!("(α, β) = ({a:+}, {b:+}): case {:<3} ℋ² ∈ {:?}; radii {radii}", c.case.label(), c.h_squared);
    }
    let chk = flat_torus_chart_check(-1.0, 3.0, &[0.5, 0.6, 0.8], 64, 1e-3)?;
    for (r1, h, coef, dev) in &chk.samples {
        println!("r1 = {r1}: ℋ = {h:+.6}, predicted normal coefficient {coef:+.6}, deviation {dev:.1e}");
    }
    println!("residual on the critical tori: {:?}", chk.critical_residuals);

    let net = ChebyshevNet::new(1.1)?;
    println!(
        "Chebyshev net ω = 1.1: ℋ = {:+.6}, K = {:.1e}, frame\n{}",
        net.mean_curvature(),
        net.gauss_curvature(),
        net.geodesic_frame()
    );
    Ok(())
}
