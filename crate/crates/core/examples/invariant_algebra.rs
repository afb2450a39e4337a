//! Q1, Q2, CF and WC of a second fundamental form, their invariance under
//! pseudo-orthogonal changes of frame, and the ρ-tensor contractions.
//!
//! cargo run --example invariant_algebra

use cfvar::invariant_algebra::{
    act_group, contract_pattern, eval_cf, eval_q1, eval_q2, eval_wc, random_pseudo_orthogonal, rho_tensor,
    s4_symmetry_report, FormCoefficients, Signature,
};

fn main() -> cfvar::Result<()> {
    // a Lorentzian 3-dimensional domain mapped into a Riemannian 2-plane of normals
    let dom = Signature::new(3, 1)?;
    let cod = Signature::new(2, 0)?;
    let form = FormCoefficients::random(dom, cod, 42);
    println!("Q1 = {:+.12}", eval_q1(&form));
    println!("Q2 = {:+.12}", eval_q2(&form));
    println!("CF = {:+.12}  (Q2 - Q1)", eval_cf(&form));
    println!("WC = {:+.12}  (m·Q1 - Q2)", eval_wc(&form));

    let a = random_pseudo_orthogonal(dom, 7);
    let b = random_pseudo_orthogonal(cod, 8);
    let moved = act_group(&a, &b, &form)?;
    println!(
        "after a random (A, B) ∈ O(3,1)×O(2): ΔQ1 = {:.2e}, ΔQ2 = {:.2e}",
        eval_q1(&moved) - eval_q1(&form),
        eval_q2(&moved) - eval_q2(&form)
    );

    let (c1234, c1324) = contract_pattern(&rho_tensor(&form));
    println!("C12C34 ρ = {c1234:+.12}, C13C24 ρ = {c1324:+.12}");

    let s4 = s4_symmetry_report(&form);
    for e in &s4.entries {
        println!("σ{} = {:?}: CF contraction {:+.12}", e.sigma, e.images, e.cf);
    }
    println!(
        "σ3 and σ6 flip the sign of CF: deviations {:.1e}, {:.1e}",
        s4.sigma3_antisymmetry_deviation, s4.sigma6_antisymmetry_deviation
    );
    Ok(())
}
