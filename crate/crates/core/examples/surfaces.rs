//! Two-dimensional criterion (K constant and minimal, or K = 2c) and the
//! Ricci-flat criterion for immersions into Euclidean space.
//!
//! cargo run --release --example surfaces

use cfvar::catalog::{chart, ricci_flat_check, two_dim_criterion, Params};

fn main() -> cfvar::Result<()> {
    let p = |k: &str, v: f64| Params::from([(k.to_string(), v)]);
    for (id, params) in [
        ("clifford", Params::new()),
        ("clifford", p("r1", 0.6)),
        ("small-sphere", Params::new()),
        ("small-sphere", p("r", 0.5)),
        ("wavy-torus", Params::new()),
    ] {
        let v = two_dim_criterion(&chart(id, &params, Some(&[64, 64]))?, 1e-4)?;
        println!(
            "{id:<13} {params:?}: K ∈ [{:+.5}, {:+.5}], max|ℋ| = {:.5} → {:?}",
            v.k_min, v.k_max, v.h_max, v.branch
        );
    }
    for id in ["plane", "cylinder", "round-sphere", "torus-revolution"] {
        let r = ricci_flat_check(&chart(id, &Params::new(), None)?, 1e-5)?;
        println!(
            "{id:<17} max|Ric| = {:.2e}, CF residual {:.2e} (tangent {:.2e}, normal {:.2e})",
            r.ricci_max, r.cf_residual_max, r.tangent_max, r.normal_max
        );
    }
    Ok(())
}
