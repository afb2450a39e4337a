//! Exact Chern–Federer condition polynomials of isoparametric hypersurfaces
//! in S^{m+1}, with root isolation in each family's λ-range.
//!
//! cargo run --release --example isoparametric

use cfvar::isopara_algebra::{
    condition_polynomial, family_interval, isolate_positive_roots, ConditionKind, SPHERICAL_G,
};
use num_rational::BigRational;

fn main() -> cfvar::Result<()> {
    let c = BigRational::from_integer(1.into());
    let cases: [(usize, &[u64]); 7] = [
        (1, &[3]),
        (2, &[2, 3]),
        (3, &[2, 2, 2]),
        (4, &[2, 2, 2, 2]),
        (4, &[4, 5, 4, 5]),
        (4, &[9, 6, 9, 6]),
        (6, &[1; 6]),
    ];
    println!("supported g: {SPHERICAL_G:?}");
    for (g, mults) in cases {
        let (lo, hi) = family_interval(g)?;
        for kind in [ConditionKind::CF, ConditionKind::Q2] {
            let p = condition_polynomial(g, mults, kind, &c)?;
            let roots = isolate_positive_roots(&p, &lo, &hi)?;
            let shown: Vec<String> = roots
                .endpoint_roots
                .iter()
                .cloned()
                .chain(roots.roots.iter().map(|r| format!("{:.12}", r.midpoint())))
                .collect();
            println!("g={g} {mults:?} {kind}: {}", p.display_poly());
            println!("    roots in ({lo}, {hi}): [{}]", shown.join(", "));
        }
    }
    Ok(())
}
