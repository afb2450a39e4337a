//! Integrated invariants: I^Q1 and I^CF of the minimal Clifford torus, I^Q2
//! against the bienergy, and the scaling of the energies under homotheties.
//!
//! cargo run --release --example energies

use std::f64::consts::PI;

use cfvar::catalog::{chart, chart_explicit, Params};
use cfvar::energy::{bienergy, homothety_check, integrate_invariants};

fn main() -> cfvar::Result<()> {
    let e = integrate_invariants(&chart("clifford", &Params::new(), Some(&[128, 128]))?)?;
    println!("minimal Clifford torus: vol = {:.10} (2π² = {:.10})", e.volume, 2.0 * PI * PI);
    println!("  I^Q1 = {:.10}, I^CF = {:.10}, 4π² = {:.10}", e.q1, e.cf, 4.0 * PI * PI);

    let mut p = Params::new();
    p.insert("r1".into(), 0.6);
    let b = bienergy(&chart("clifford", &p, Some(&[64, 64]))?)?;
    println!("Clifford torus r1 = 0.6: I^Q2 = {:.12}, 2·E2 = {:.12}", b.q2_energy, 2.0 * b.bienergy);

    for scale in [0.5, 2.0] {
        let h4 = homothety_check(&chart("flat-4-torus", &Params::new(), None)?, scale)?;
        let h2 = homothety_check(&chart_explicit("clifford", &p, Some(&[32, 32]))?, scale)?;
        println!(
            "scale {scale}: m=4 relative change {:.1e}/{:.1e}; m=2 ratio law deviation {:.1e} (expected ratio {})",
            h4.relative_change[0], h4.relative_change[1], h2.scaling_law_deviation, h2.expected_ratio
        );
    }
    Ok(())
}
