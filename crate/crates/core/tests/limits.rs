mod support;

use dmlab::compactify::{GFunction, RingFunction};
use dmlab::families::builtin;
use dmlab::limits::{extrapolate_with, fit_limit, functional_value, limit_extrapolate, Schedule};
use dmlab::quad::Quadrature;

fn ring(s: &str) -> RingFunction {
    RingFunction::parse(s).unwrap()
}

#[test]
fn ramp_sequence_matches_closed_form() {
    let fam = builtin("ramp").unwrap();
    let q = Quadrature::default();
    for j in 0..=14 {
        let k = 1u64 << j;
        let v = functional_value(&fam, k, &GFunction::one(), &ring("sq_clamp(1)"), &ring("sqrt1p_frac"), 1.0, &q).unwrap();
        assert!((v - support::ramp_limit0_term(k)).abs() < 1e-12, "k = {k}");
    }
}

#[test]
fn ex_simple_moments_at_every_k() {
    // ∫ (k(x-1)+1)^α k dx over the spike is 1/(α+1) for every k
    let fam = builtin("ex_simple").unwrap();
    let q = Quadrature::default();
    let g = GFunction::parse("tent(1,0.5)").unwrap();
    for alpha in 0..=3 {
        let f0 = ring(&format!("poly_clamped({alpha})"));
        let est = limit_extrapolate(&fam, &g, &f0, &ring("abs_frac"), 1.0, &Schedule::default(), &q).unwrap();
        assert!((est.value - support::power_moment(alpha)).abs() < 1e-3);
    }
}

#[test]
fn extrapolation_recovers_a_plus_b_over_k() {
    let s = Schedule::default();
    let est = extrapolate_with(&s, |k| Ok(2.5 - 3.0 / k as f64)).unwrap();
    assert!((est.value - 2.5).abs() < 1e-12);
    assert!(!est.diverging);
}

#[test]
fn growth_is_flagged() {
    let s = Schedule::default();
    let est = extrapolate_with(&s, |k| Ok((k as f64).sqrt())).unwrap();
    assert!(est.diverging);
}

#[test]
fn fit_rejects_short_input() {
    assert!(fit_limit(&[1, 2, 3], &[1.0, 1.0, 1.0]).is_err());
}

#[test]
fn quadrature_order_does_not_matter_for_piecewise_polynomials() {
    let fam = builtin("ex_first").unwrap();
    let (g, f0, psi) = (GFunction::parse("x").unwrap(), ring("sq_clamp(1)"), ring("one"));
    let a = functional_value(&fam, 64, &g, &f0, &psi, 1.0, &Quadrature::new(4).unwrap()).unwrap();
    let b = functional_value(&fam, 64, &g, &f0, &psi, 1.0, &Quadrature::new(12).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-13);
}
