//! Euler–Lagrange residuals W1, W2 of I^Q1 and I^Q2 on Clifford tori, their
//! closed forms along the unit normal, and the second-order form of the
//! Chern–Federer operator on a curved torus.
//!
//! cargo run --release --example residuals

use cfvar::catalog::{chart, clifford_chart, clifford_mean_curvature, normal_coefficient_deviation, Params};
use cfvar::jet_calculus::JetAnalysis;

fn main() -> cfvar::Result<()> {
    println!("{:>6} {:>10} {:>12} {:>12} {:>12}", "r1", "H", "|W1|", "|W2|", "closed-form dev");
    for r1 in [0.5, 0.6, std::f64::consts::FRAC_1_SQRT_2, 0.8] {
        let jets = JetAnalysis::new(&clifford_chart(r1, 64)?)?;
        let res = jets.residuals();
        let h = clifford_mean_curvature(r1);
        let d1 = normal_coefficient_deviation(&jets, &res.w1.values, -4.0 * h * (1.0 + 2.0 * h * h))?;
        let d2 = normal_coefficient_deviation(&jets, &res.w2.values, -8.0 * h.powi(3))?;
        println!(
            "{r1:>6.4} {h:>+10.6} {:>12.6} {:>12.6} {:>12.1e}",
            res.w1.max_norm,
            res.w2.max_norm,
            d1.max(d2)
        );
    }

    let jets = JetAnalysis::new(&chart("torus-revolution", &Params::new(), Some(&[128, 128]))?)?;
    let so = jets.cf_second_order()?;
    let dev = jets.oracle_equivalence()?;
    println!(
        "torus of revolution: |W2 - W1| = {:.6}, tangent part {:.6}, normal part {:.6}, agreement {:.1e}",
        jets.residuals().cf.max_norm,
        so.tangent.max_norm,
        so.normal.max_norm,
        dev.scaled_deviation
    );
    let dir = std::env::temp_dir().join("cfvar-residuals.csv");
    jets.residuals().write_csv(&dir)?;
    println!("per-node residuals written to {}", dir.display());
    Ok(())
}
