use dmlab::families::builtin;
use dmlab::limits::Schedule;
use dmlab::lsc::{lsc_gap, lsc_report, plessn_condition, Verdict};
use dmlab::measures::reference_triple;
use dmlab::quad::Quadrature;
use dmlab::represent::Integrand;

#[test]
fn constant_family_has_no_gap() {
    let q = Quadrature::default();
    let fam = builtin("constant(1.5)").unwrap();
    for h in ["r_lift", "sqrt1p", "one_plus_r_q(2)", "abs_s"] {
        let g = lsc_gap(&fam, &Integrand::parse(h).unwrap(), &Schedule::default(), &q).unwrap();
        assert!(g.gap.abs() < 1e-12, "{h}: {}", g.gap);
    }
}

#[test]
fn convex_with_nonnegative_condition_is_lsc() {
    // 1D convex integrands; the boundary condition and the gap should agree
    let q = Quadrature::default();
    let schedule = Schedule::default();
    let cases = [
        ("ex_first", &["abs_s", "sqrt1p"][..]),
        ("down_up_down", &["abs_s", "sqrt1p"]),
        ("ex_simple", &["abs_s", "sqrt1p"]),
        ("ramp", &["abs_s", "sqrt1p"]),
        ("sawtooth", &["s_sq"]),
    ];
    for (name, hs) in cases {
        let fam = builtin(name).unwrap();
        let t = reference_triple(name).unwrap();
        for h in hs {
            let h = Integrand::parse(h).unwrap();
            let r = lsc_report(&fam, &t, &h, &schedule, &q).unwrap();
            assert!(r.condition >= 0.0);
            assert_eq!(r.verdict, Verdict::Satisfied);
            assert!(r.gap.gap >= -1e-3, "{name} / {}", h.name);
        }
    }
}

#[test]
fn negative_condition_with_failing_gap() {
    let q = Quadrature::default();
    let r = lsc_report(
        &builtin("ex_first").unwrap(),
        &reference_triple("ex_first").unwrap(),
        &Integrand::parse("signed_s").unwrap(),
        &Schedule::default(),
        &q,
    )
    .unwrap();
    assert!((r.condition + 1.0).abs() < 1e-14);
    assert_eq!(r.verdict, Verdict::NotSatisfied);
}

#[test]
fn one_point_data_has_no_recession_direction() {
    use dmlab::compactify::{ExtPoint, GFunction, RingFunction};
    use dmlab::error::LabError;
    use dmlab::represent::Term;
    let h = Integrand::new(
        "one_point",
        1.0,
        1.0,
        vec![Term {
            coef: 1.0,
            g: GFunction::one(),
            f: RingFunction::constant(1.0),
            psi: RingFunction::parse("one_point_abs_frac").unwrap(),
        }],
        vec![],
    )
    .unwrap();
    let t = reference_triple("ex_first").unwrap();
    let r = plessn_condition(&t, &h, &Quadrature::default());
    assert!(matches!(r, Err(LabError::Recession(_))));
    assert_eq!(h.h01_ext(0.0, ExtPoint::Finite(0.0), ExtPoint::Infinity).unwrap(), 1.0);
}
