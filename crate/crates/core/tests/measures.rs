use dmlab::compactify::{ExtPoint, GFunction, RingFunction, TestBattery};
use dmlab::error::LabError;
use dmlab::measures::{
    barycenter_check, battery_moments, integrate_triple, reference_triple, young_from_dm, DMTriple, ExtMeasure,
};
use dmlab::quad::Quadrature;

const TRIPLES: &[&str] = &[
    "ex_first",
    "down_up_down",
    "fixed_u",
    "ex_simple",
    "ramp",
    "sawtooth",
    "constant(0.7)",
];

fn ring(s: &str) -> RingFunction {
    RingFunction::parse(s).unwrap()
}

#[test]
fn ex_first_masses() {
    let t = reference_triple("ex_first").unwrap();
    let q = Quadrature::default();
    let one = integrate_triple(&t, &GFunction::one(), &ring("one"), &ring("one"), &q).unwrap();
    // σ = L¹ on [0,2] plus 3δ₁
    assert_eq!(one, 5.0);
    // ν̂₁ = ⅓δ₊∞ + ⅔δ₋∞, so a signed boundary value weighs 3·(⅓ − ⅔)
    let signed = integrate_triple(&t, &GFunction::one(), &ring("one"), &ring("signed_frac"), &q).unwrap();
    assert!((signed + 1.0).abs() < 1e-15);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let q = Quadrature::default();
    let battery = TestBattery::default_battery();
    for name in TRIPLES {
        let t = reference_triple(name).unwrap();
        let back = DMTriple::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t, "{name}");
        let a = battery_moments(&t, &battery, &q).unwrap();
        let b = battery_moments(&back, &battery, &q).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn battery_separates_catalog_triples_on_shared_domains() {
    let q = Quadrature::default();
    let battery = TestBattery::default_battery();
    let triples: Vec<DMTriple> = TRIPLES.iter().map(|n| reference_triple(n).unwrap()).collect();
    for (i, a) in triples.iter().enumerate() {
        for b in &triples[i + 1..] {
            if a.domain != b.domain {
                continue;
            }
            let ma = battery_moments(a, &battery, &q).unwrap();
            let mb = battery_moments(b, &battery, &q).unwrap();
            let gap = ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(gap > 1e-3, "{} vs {}", a.label, b.label);
        }
    }
}

#[test]
fn barycenter_holds_for_gradient_triples() {
    for name in ["ex_first", "down_up_down", "ex_simple", "ramp", "sawtooth", "constant(0.7)"] {
        let t = reference_triple(name).unwrap();
        assert!(barycenter_check(&t).unwrap() < 1e-12, "{name}");
    }
}

#[test]
fn young_map_examples() {
    use ExtPoint::*;
    let fiber = ExtMeasure::atoms(vec![(Finite(0.0), 0.5), (PlusInf, 0.5)]);
    let nu = young_from_dm(&fiber, 2.0).unwrap();
    assert_eq!(nu.measure().atoms, vec![(Finite(0.0), 1.0)]);
    let boundary_only = ExtMeasure::atoms(vec![(PlusInf, 1.0)]);
    assert!(matches!(young_from_dm(&boundary_only, 1.0), Err(LabError::DegenerateFiber(_))));
}

#[test]
fn dirac_completion_changes_nothing_for_uniform_limits() {
    let q = Quadrature::default();
    let battery = TestBattery::default_battery();
    for name in ["sawtooth", "constant(0.7)"] {
        let t = reference_triple(name).unwrap();
        let d = t.dirac_completion().unwrap();
        let a = battery_moments(&t, &battery, &q).unwrap();
        let b = battery_moments(&d, &battery, &q).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10, "{name}");
        }
    }
}
