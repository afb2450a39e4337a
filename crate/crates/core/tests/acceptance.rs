//! Acceptance criteria, one PASS/FAIL line each. Runs with its own harness so
//! the verdict lines always reach the test log.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use cfvar::catalog::{
    self, chart, chart_explicit, classification_suite, clifford_chart_warped, clifford_mean_curvature, clifford_radii,
    flat_torus_chart_check, flat_torus_classify, normal_coefficient_deviation, FlatTorusCase, Params, Verdict,
};
use cfvar::chart_geometry::{gauss_identity_deviation, ChartFields, CurvatureFields};
use cfvar::energy::{bienergy, homothety_check, integrate_invariants};
use cfvar::invariant_algebra::{
    act_group, contract_pattern, eval_q1, eval_q2, random_pseudo_orthogonal, rho_tensor, s4_symmetry_report,
    FormCoefficients, Signature,
};
use cfvar::isopara_algebra::{
    condition_polynomial, condition_value, family_interval, isolate_positive_roots, ConditionKind, Poly,
    PrincipalSpectrum, RationalFunction, SpectrumEntry, ROOT_WIDTH,
};
use cfvar::jet_calculus::JetAnalysis;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

/// Collects named checks for one criterion.
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn le(&mut self, what: &str, value: f64, tol: f64) {
        self.check(value <= tol, format!("{what}: {value:.3e} > {tol:.1e}"));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn budget(&mut self, what: &str, elapsed: Duration, limit: Duration) {
        self.check(elapsed < limit, format!("{what} took {elapsed:.2?}, budget {limit:.0?}"));
    }
}

fn run_criterion(id: u32, title: &str, f: impl FnOnce(&mut Checks)) -> bool {
    let start = Instant::now();
    let mut c = Checks::new();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut c)));
    if let Err(e) = outcome {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        c.failures.push(format!("panicked: {msg}"));
    }
    let ok = c.failures.is_empty();
    println!(
        "{} [{id}] {title} ({:.2?}){}",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed(),
        if c.notes.is_empty() { String::new() } else { format!(": {}", c.notes.join("; ")) }
    );
    for f in &c.failures {
        println!("       - {f}");
    }
    ok
}

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn one() -> BigRational {
    BigRational::from_integer(BigInt::from(1))
}

// ---------------------------------------------------------------------------

fn polynomial_reproduction(c: &mut Checks) {
    let start = Instant::now();
    let reports = classification_suite().expect("suite runs");
    let elapsed = start.elapsed();
    let families = ["g2", "g3_2", "g4_2", "g4_3", "g4_4", "g4_5", "g4_6"];
    let mut counted = 0;
    for r in reports.iter().filter(|r| families.contains(&r.family.as_str())) {
        counted += 1;
        c.check(
            r.verdict == Verdict::Match,
            format!("{} {} {}: {:?}", r.family, r.kind, r.parameters, r.evidence),
        );
    }
    for f in families {
        c.check(reports.iter().any(|r| r.family == f), format!("family {f} missing from the suite"));
    }
    for f in ["g4_4", "g4_5", "g4_6"] {
        let symbolic = reports.iter().any(|r| r.family == f && r.parameters.contains("symbolic"));
        c.check(symbolic, format!("{f}: no symbolic-in-m report"));
    }
    c.check(
        reports.iter().any(|r| r.family == "g2" && r.parameters.contains("symbolic")),
        "g2: no symbolic-in-(p, m) report",
    );
    // integer equality of the two fixed g = 4 polynomials
    let want: [(&str, Vec<i64>); 2] = [
        ("g4_2", vec![3, 0, -40, 0, 223, 0, -692, 0, 223, 0, -40, 0, 3]),
        ("g4_3", vec![12, 0, -111, 0, 488, 0, -1098, 0, 488, 0, -111, 0, 12]),
    ];
    for (f, coeffs) in want {
        let r = reports.iter().find(|r| r.family == f && r.kind == ConditionKind::CF);
        let got: Option<Vec<BigInt>> = r.and_then(|r| r.derived.as_ref()).map(|d| d.coefficients.clone());
        let want: Vec<BigInt> = coeffs.iter().map(|&v| BigInt::from(v)).collect();
        c.check(got.as_ref() == Some(&want), format!("{f}: derived coefficients {got:?}"));
    }
    let m18 = reports.iter().find(|r| r.family == "g4_2").and_then(|r| r.recovered_multiplicities.clone());
    let m30 = reports.iter().find(|r| r.family == "g4_3").and_then(|r| r.recovered_multiplicities.clone());
    c.note(format!("{counted} polynomial reports, M18 split {m18:?}, M30 split {m30:?}"));
    c.check(reports.iter().all(|r| r.verdict == Verdict::Match), "some suite report is not a match");
    c.budget("classification suite", elapsed, Duration::from_secs(10));
}

fn root_reproduction(c: &mut Checks) {
    let start = Instant::now();
    // (label, g, multiplicities, closed-form roots)
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let cases: Vec<(&str, usize, Vec<u64>, Vec<f64>)> = vec![
        ("g1 m=2", 1, vec![2], vec![1.0]),
        ("g1 m=5", 1, vec![5], vec![1.0]),
        ("g3_1", 3, vec![1; 3], vec![s3]),
        ("g3_3", 3, vec![4; 3], vec![s3]),
        ("g3_4", 3, vec![8; 3], vec![s3]),
        ("g4_1", 4, vec![2, 2, 2, 2], vec![1.0 + s2]),
        ("g6_1", 6, vec![1; 6], vec![2.0 + s3]),
        ("g6_2", 6, vec![2; 6], vec![2.0 + s3]),
    ];
    for (label, g, mults, want) in cases {
        let d = condition_polynomial(g, &mults, ConditionKind::CF, &one()).expect("polynomial");
        let (lo, hi) = family_interval(g).expect("interval");
        let iso = isolate_positive_roots(&d, &lo, &hi).expect("isolation");
        c.check(iso.roots.len() == want.len(), format!("{label}: {} roots, want {}", iso.roots.len(), want.len()));
        for (r, w) in iso.roots.iter().zip(&want) {
            c.check(r.width() <= ROOT_WIDTH, format!("{label}: enclosure width {:.2e}", r.width()));
            let slack = 4.0 * f64::EPSILON * w;
            c.check(r.lo_f64 - slack <= *w && *w <= r.hi_f64 + slack, format!("{label}: [{}, {}] misses {w}", r.lo_f64, r.hi_f64));
        }
        if g == 1 {
            c.check(iso.endpoint_roots == ["0"], format!("{label}: endpoint roots {:?}", iso.endpoint_roots));
            // r = 1/√(1 + λ²)
            let radii: Vec<f64> = std::iter::once(0.0)
                .chain(iso.roots.iter().map(|r| r.midpoint()))
                .map(|l| 1.0 / (1.0 + l * l).sqrt())
                .collect();
            c.check(
                (radii[0] - 1.0).abs() < 1e-12 && (radii[1] - FRAC_1_SQRT_2).abs() < 1e-12,
                format!("{label}: radii {radii:?}"),
            );
        }
    }
    c.note("g1 {0, 1}, √3, 1+√2, 2+√3 enclosed at width ≤ 1e-12");
    c.budget("root isolation", start.elapsed(), Duration::from_secs(1));
}

fn flat_torus_formulas(c: &mut Checks) {
    // Uniform charts: stencil errors reduce to a rescaling of each axis, a
    // reparametrization, so W1 and W2 come out exact up to rounding. The
    // warped charts carry genuine truncation error and show its rate.
    let mut worst = [0.0f64; 2];
    let mut min_rate = f64::INFINITY;
    for warp in [0.0, 0.1] {
        for r1 in [0.5, 0.6, 0.8] {
            let start = Instant::now();
            let h = clifford_mean_curvature(r1);
            let coef = [-4.0 * h * (1.0 + 2.0 * h * h), -8.0 * h * h * h];
            let mut err = [[0.0; 2]; 2];
            for (gi, n) in [64usize, 128].into_iter().enumerate() {
                let jets = JetAnalysis::new(&clifford_chart_warped(r1, warp, n).expect("chart")).expect("jets");
                let res = jets.residuals();
                for (k, w) in [&res.w1, &res.w2].into_iter().enumerate() {
                    err[gi][k] = normal_coefficient_deviation(&jets, &w.values, coef[k]).expect("normal") / coef[k].abs();
                }
            }
            for k in 0..2 {
                let name = ["W1", "W2"][k];
                c.le(&format!("{name} r1={r1} warp={warp} at 64²"), err[0][k], 3e-3);
                c.le(&format!("{name} r1={r1} warp={warp} at 128²"), err[1][k], 1e-3);
                worst[k] = worst[k].max(err[1][k]);
                if warp != 0.0 {
                    let rate = (err[0][k] / err[1][k]).log2();
                    min_rate = min_rate.min(rate);
                    c.check(rate >= 1.9, format!("{name} r1={r1} warp={warp}: observed order {rate:.2}"));
                }
            }
            c.budget(&format!("chart r1={r1} warp={warp}"), start.elapsed(), Duration::from_secs(30));
        }
    }
    c.note(format!(
        "max relative error at 128²: W1 {:.2e}, W2 {:.2e}; min observed order {min_rate:.2}",
        worst[0], worst[1]
    ));
}

fn oracle_equivalence(c: &mut Checks) {
    let start = Instant::now();
    let charts = ["hyperbolic-sphere", "perturbed-torus", "torus-revolution", "wavy-torus"];
    let mut out = Vec::new();
    for id in charts {
        let mut devs = [0.0; 2];
        for (k, n) in [128usize, 256].into_iter().enumerate() {
            let map = chart(id, &Params::new(), Some(&[n, n])).expect("chart");
            let jets = JetAnalysis::new(&map).expect("jets");
            devs[k] = jets.oracle_equivalence().expect("oracle").scaled_deviation;
        }
        c.le(&format!("{id} at 128²"), devs[0], 1e-2);
        c.le(&format!("{id} at 256²"), devs[1], 2.5e-3);
        out.push(format!("{id} {:.1e}/{:.1e}", devs[0], devs[1]));
    }
    c.note(out.join(", "));
    c.budget("oracle equivalence", start.elapsed(), Duration::from_secs(120));
}

fn identity_suites(c: &mut Checks) {
    // G-invariance over random signatures, forms and pseudo-orthogonal pairs
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (1usize..=4, 0usize..=2, 1usize..=3, 0usize..=1, any::<u64>());
    let invariance = runner.run(&strategy, |(m, p, n, q, seed)| {
        let dom = Signature::new(m, p.min(m)).unwrap();
        let cod = Signature::new(n, q.min(n)).unwrap();
        let form = FormCoefficients::random(dom, cod, seed);
        let a = random_pseudo_orthogonal(dom, seed.wrapping_add(1));
        let b = random_pseudo_orthogonal(cod, seed.wrapping_add(2));
        let moved = act_group(&a, &b, &form).unwrap();
        let (q1, q2) = (eval_q1(&form), eval_q2(&form));
        let d1 = (eval_q1(&moved) - q1).abs() / q1.abs().max(1.0);
        let d2 = (eval_q2(&moved) - q2).abs() / q2.abs().max(1.0);
        prop_assert!(d1 <= 1e-8 && d2 <= 1e-8, "Q1 drift {d1:e}, Q2 drift {d2:e}");
        Ok(())
    });
    c.check(invariance.is_ok(), format!("G-invariance: {invariance:?}"));

    let mut worst_contraction = 0.0f64;
    let mut worst_anti = 0.0f64;
    for seed in 0..50u64 {
        let m = 2 + (seed % 3) as usize;
        let form = FormCoefficients::random(
            Signature::new(m, (seed % 2) as usize).unwrap(),
            Signature::new(2, 0).unwrap(),
            1000 + seed,
        );
        let (c1234, c1324) = contract_pattern(&rho_tensor(&form));
        worst_contraction = worst_contraction
            .max((c1234 - eval_q2(&form)).abs() / eval_q2(&form).abs().max(1.0))
            .max((c1324 - eval_q1(&form)).abs() / eval_q1(&form).abs().max(1.0));
        let s4 = s4_symmetry_report(&form);
        worst_anti = worst_anti.max(s4.sigma3_antisymmetry_deviation).max(s4.sigma6_antisymmetry_deviation);
    }
    c.le("contraction identities", worst_contraction, 1e-12);
    c.le("σ3/σ6 antisymmetry", worst_anti, 1e-12);

    let mut rough = 0.0f64;
    let (mut third, mut fourth, mut slot) = (0.0f64, 0.0f64, 0.0f64);
    let charts = [
        chart("clifford", &params(&[("r1", 0.6), ("warp", 0.1)]), Some(&[128, 128])).unwrap(),
        chart("torus-revolution", &Params::new(), Some(&[128, 128])).unwrap(),
        chart("wavy-torus", &Params::new(), Some(&[128, 128])).unwrap(),
        chart("hyperbolic-sphere", &Params::new(), Some(&[128, 128])).unwrap(),
    ];
    for map in &charts {
        let jets = JetAnalysis::new(map).unwrap();
        rough = rough.max(jets.rough_laplacian().scaled_deviation);
        let cm = jets.commutation();
        third = third.max(cm.third_order.scaled_deviation);
        fourth = fourth.max(cm.fourth_order.scaled_deviation);
        slot = slot.max(cm.slot_symmetry);
    }
    c.le("rough Laplacian identity", rough, 1e-3);
    c.le("third-order commutation", third, 1e-4);
    c.le("fourth-order commutation", fourth, 1e-2);
    c.le("slot symmetry of the second jet", slot, 1e-6);

    let mut curves = 0.0f64;
    for seed in 1..=5u64 {
        for map in [catalog::random_curve_e3(seed, 256), catalog::random_curve_s2(seed, 256)] {
            let res = JetAnalysis::new(&map).unwrap().residuals();
            // W1 and W2 are individually nonzero; only their difference vanishes
            c.check(res.w1.max_norm > 1e-2, format!("{}: W1 unexpectedly small", map.name()));
            curves = curves.max(res.cf.max_norm);
        }
    }
    c.le("CF residual on 10 random closed curves", curves, 1e-4);
    c.note(format!(
        "200 invariance cases; contraction {worst_contraction:.1e}, antisymmetry {worst_anti:.1e}, rough {rough:.1e}, \
         commutation {third:.1e}/{fourth:.1e}, slot {slot:.1e}, curves {curves:.1e}"
    ));
}

fn gauss_identity(c: &mut Checks) {
    let mut worst = (String::new(), 0.0f64);
    let mut count = 0;
    for f in catalog::families() {
        let grid = vec![64; f.default_grid.len()];
        let map = chart(f.id, &Params::new(), Some(&grid)).unwrap();
        if !map.is_immersion() {
            continue;
        }
        let fields = ChartFields::new(&map).unwrap();
        let dev = gauss_identity_deviation(&fields, &CurvatureFields::new(&fields)).unwrap();
        c.le(&format!("{} at 64^{}", f.id, grid.len()), dev, 1e-4);
        if dev >= worst.1 {
            worst = (f.id.to_string(), dev);
        }
        count += 1;
    }
    c.check(count >= 10, format!("only {count} immersion charts"));
    c.note(format!("{count} immersion charts, worst {} {:.1e}", worst.0, worst.1));
}

fn energy_values(c: &mut Checks) {
    let four_pi2 = 4.0 * PI * PI;
    let e = integrate_invariants(&chart("clifford", &Params::new(), Some(&[128, 128])).unwrap()).unwrap();
    c.le("I^Q1 of the minimal Clifford torus", (e.q1 - four_pi2).abs() / four_pi2, 1e-6);
    c.le("I^CF of the minimal Clifford torus", (e.cf + four_pi2).abs() / four_pi2, 1e-6);

    let mut gap = 0.0f64;
    for (id, prm) in [
        ("clifford", params(&[("r1", 0.6)])),
        ("wavy-torus", Params::new()),
        ("perturbed-torus", Params::new()),
    ] {
        let b = bienergy(&chart(id, &prm, Some(&[64, 64])).unwrap()).unwrap();
        c.check(b.bienergy > 0.0, format!("{id}: bienergy {}", b.bienergy));
        gap = gap.max(b.relative_gap);
    }
    c.le("I^Q2 = 2·bienergy", gap, 1e-10);

    let h4 = homothety_check(&chart("flat-4-torus", &Params::new(), None).unwrap(), 1.7).unwrap();
    c.check(h4.invariance_expected, "m = 4 should be scale invariant");
    c.le("m = 4 homothety change of I^Q1", h4.relative_change[0], 1e-8);
    c.le("m = 4 homothety change of I^Q2", h4.relative_change[1], 1e-8);

    let law_const = homothety_check(&chart_explicit("clifford", &params(&[("r1", 0.6)]), Some(&[32, 32])).unwrap(), 2.0)
        .unwrap()
        .scaling_law_deviation;
    let varying = chart("clifford", &params(&[("r1", 0.6)]), Some(&[32, 32]))
        .unwrap()
        .with_explicit_metric(0, Arc::new(|u: &[f64]| vec![1.0 + 0.2 * u[1].cos(), 0.1, 0.1, 1.5]));
    let law_var = homothety_check(&varying, 2.0).unwrap().scaling_law_deviation;
    c.le("m = 2 scale^(m-4) law, induced metric", law_const, 1e-6);
    c.le("m = 2 scale^(m-4) law, varying metric", law_var, 1e-6);
    c.note(format!(
        "I^Q1 = {:.10}, I^CF = {:.10} (4π² = {four_pi2:.10}); bienergy gap {gap:.1e}; m=4 change {:.1e}/{:.1e}",
        e.q1, e.cf, h4.relative_change[0], h4.relative_change[1]
    ));
}

fn classification_cross_checks(c: &mut Checks) {
    let radii = [0.5, 0.6, FRAC_1_SQRT_2, 0.8];
    let expected = [
        ((-1.0, 1.0), FlatTorusCase::I),
        ((0.0, 1.0), FlatTorusCase::II),
        ((1.0, 0.0), FlatTorusCase::II),
        ((2.0, -1.0), FlatTorusCase::II),
        ((-1.0, 3.0), FlatTorusCase::III),
    ];
    let mut worst = 0.0f64;
    for ((a, b), case) in expected {
        let chk = flat_torus_chart_check(a, b, &radii, 64, 1e-3).unwrap();
        c.check(chk.classification.case == case, format!("({a}, {b}): case {:?}", chk.classification.case));
        c.check(chk.agrees, format!("({a}, {b}): chart residuals disagree: {:?}", chk.samples));
        worst = worst.max(chk.max_relative_deviation);
        // residual vanishes exactly at the admissible ℋ values
        for h2 in &chk.classification.h_squared {
            let r = catalog::flat_torus_residual_coefficient(a, b, h2.sqrt());
            c.check(r.abs() < 1e-12, format!("({a}, {b}): residual {r} at ℋ² = {h2}"));
        }
    }
    let c3 = flat_torus_classify(-1.0, 3.0).unwrap();
    c.check(c3.h_squared == [0.0, 0.25], format!("(-1, 3): ℋ² {:?}", c3.h_squared));

    let mut radii_dev = 0.0f64;
    for (a, b) in [(-1.0, 3.0), (-1.0, 2.0), (-0.5, 1.0), (-2.0, 5.0), (-1.0, 1.5), (-3.0, 7.0)] {
        let (r1, r2) = clifford_radii(a, b).unwrap();
        radii_dev = radii_dev
            .max((clifford_mean_curvature(r1).powi(2) + a / (2.0 * (a + b))).abs())
            .max((r1 * r1 + r2 * r2 - 1.0).abs());
    }
    c.le("clifford_radii ℋ² identity", radii_dev, 1e-12);

    // Euclidean spectra, exact: cylinder {λ, 0^{m-1}} vs umbilic {λ^m}
    let zero = BigRational::from_integer(BigInt::from(0));
    for m in 2..=8u64 {
        let cyl = PrincipalSpectrum::new(
            vec![
                SpectrumEntry::Single { value: RationalFunction::lambda(), multiplicity: 1 },
                SpectrumEntry::Single { value: RationalFunction::constant(zero.clone()), multiplicity: m - 1 },
            ],
            zero.clone(),
        )
        .unwrap();
        c.check(condition_value(&cyl, ConditionKind::CF).is_zero(), format!("cylinder m={m} not identically CF"));
        let umb = PrincipalSpectrum::new(
            vec![SpectrumEntry::Single { value: RationalFunction::lambda(), multiplicity: m }],
            zero.clone(),
        )
        .unwrap();
        let v = condition_value(&umb, ConditionKind::CF);
        let expect = Poly::from_i64_descending(&[m as i64 * (1 - m as i64), 0, 0, 0]);
        c.check(v.numerator() == expect && v.denominator() == Poly::one(), format!("umbilic m={m}: {v}"));
    }
    let cyl = catalog::ricci_flat_check(&chart("cylinder", &Params::new(), None).unwrap(), 1e-5).unwrap();
    c.check(cyl.cf, format!("cylinder chart CF residual {:.2e}", cyl.cf_residual_max));
    c.note(format!("flat-torus chart deviation {worst:.1e}, radii identity {radii_dev:.1e}"));
}

fn main() {
    let criteria: [(&str, fn(&mut Checks)); 8] = [
        ("polynomial reproduction", polynomial_reproduction),
        ("root reproduction", root_reproduction),
        ("flat-torus W1/W2 formulas", flat_torus_formulas),
        ("fourth-order vs second-order CF residual", oracle_equivalence),
        ("identity suites", identity_suites),
        ("Gauss identity on immersion charts", gauss_identity),
        ("energy values", energy_values),
        ("classification cross-checks", classification_cross_checks),
    ];
    let mut failed = 0;
    for (k, (title, f)) in criteria.into_iter().enumerate() {
        if !run_criterion(k as u32 + 1, title, f) {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
