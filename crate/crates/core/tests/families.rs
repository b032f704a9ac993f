use dmlab::error::LabError;
use dmlab::families::{builtin, u_norms, Family};
use dmlab::quad::Quadrature;
use proptest::prelude::*;

fn fam(name: &str) -> Family {
    builtin(name).unwrap()
}

#[test]
fn ex_first_values() {
    let f = fam("ex_first");
    assert_eq!(f.evaluate(4, 0.5).unwrap(), (0.0, 0.0));
    assert_eq!(f.evaluate(4, 1.0).unwrap(), (1.0, 4.0));
}

#[test]
fn first_piece_at_left_end() {
    for name in ["ex_first", "ramp", "ex_simple", "sawtooth", "down_up_down"] {
        let f = fam(name);
        let r = f.realize(1).unwrap();
        let first = &r.pieces[0];
        assert_eq!(f.evaluate(1, first.lo).unwrap(), (first.u(first.lo), first.w), "{name}");
    }
}

#[test]
fn outside_domain() {
    assert!(matches!(fam("ramp").evaluate(3, 1.5), Err(LabError::Domain { .. })));
}

#[test]
fn breakpoint_examples() {
    let bp = fam("ex_first").breakpoints(10).unwrap();
    let want = [0.0, 0.9, 1.0, 1.1, 2.0];
    assert_eq!(bp.len(), want.len());
    for (a, b) in bp.iter().zip(want) {
        assert!((a - b).abs() < 1e-15, "{bp:?}");
    }
    assert_eq!(fam("ramp").breakpoints(2).unwrap(), vec![-1.0, 0.0, 0.5, 1.0]);
    assert_eq!(fam("sawtooth").breakpoints(1).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn ex_first_slopes() {
    let k = 8u64;
    let slopes: Vec<f64> = fam("ex_first").realize(k).unwrap().pieces.iter().map(|p| p.w).collect();
    assert_eq!(slopes, vec![0.0, 8.0, -16.0, 0.0]);
}

#[test]
fn ramp_total_variation_is_one() {
    let f = fam("ramp");
    for j in 0..=14 {
        let r = f.realize(1 << j).unwrap();
        let tv: f64 = r.pieces.iter().map(|p| p.w.abs() * p.len()).sum();
        assert!((tv - 1.0).abs() < 1e-12, "k = 2^{j}: {tv}");
    }
}

#[test]
fn scaling_norms() {
    // u_k = k^{n/p - 1} w(kx) keeps the gradient norm and shrinks u_k itself
    let f = fam("scaling_tent(2)");
    let q = Quadrature::default();
    let (_, a) = u_norms(&f, 16, 2.0, &q).unwrap();
    let (_, b) = u_norms(&f, 256, 2.0, &q).unwrap();
    assert!(b < a);
}

#[test]
fn unknown_name() {
    assert!(matches!(builtin("exfirst"), Err(LabError::UnknownName { .. })));
}

proptest! {
    #[test]
    fn central_differences_match_w(j in 4u32..=14, t in 0.01f64..0.99, which in 0usize..5) {
        let name = ["ex_first", "ramp", "ex_simple", "sawtooth", "down_up_down"][which];
        let f = fam(name);
        let k = 1u64 << j;
        let r = f.realize(k).unwrap();
        for p in &r.pieces {
            let x = p.lo + t * (p.hi - p.lo);
            let h = 1e-3 * (p.hi - p.lo);
            let du = (p.u(x + h) - p.u(x - h)) / (2.0 * h);
            let tol = 1e-6 * (1.0 + p.w.abs());
            prop_assert!((du - p.w).abs() <= tol, "{} k={} x={} du={} w={}", name, k, x, du, p.w);
        }
    }

    #[test]
    fn breakpoints_increase(k in 1u64..5000, which in 0usize..5) {
        let name = ["ex_first", "ramp", "ex_simple", "sawtooth", "down_up_down"][which];
        let bp = fam(name).breakpoints(k).unwrap();
        prop_assert!(bp.windows(2).all(|w| w[0] < w[1]));
    }
}
