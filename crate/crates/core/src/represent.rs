//! Representation formulas for limits of `∫ h(x, u_k, w_k) dx`.
//!
//! Integrands are declared as `h = h01·(1+|s|^p) + h02·(1+|r|^q)` with
//! `h01`, `h02` sums of separable terms `c·g(x)·f(r)·ψ(s)` built from ring
//! functions, so their boundary values are known exactly.

use std::fmt;

use serde::Serialize;

use crate::compactify::{parse_call, ExtPoint, GFunction, RingFunction};
use crate::error::{LabError, Result};
use crate::families::{sobolev_exponent, u_norms, Family};
use crate::limits::{extrapolate_with, integrate_sequence, limits_agree, LimitEstimate, Schedule};
use crate::measures::{
    limit_dirac_entries, young_from_dm, Cell, DMTriple, Density, DensitySegment, ExtMeasure, FiberCell, FiberFamily,
    Kinks, Law, RadonMeasure, Role, SPart,
};
use crate::quad::{interior_cuts, pairwise_sum, Quadrature};

/// `coef · g(x) · f(r) · ψ(s)`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: f64,
    pub g: GFunction,
    pub f: RingFunction,
    pub psi: RingFunction,
}

impl Term {
    pub fn new(coef: f64, g: &str, f: &str, psi: &str) -> Result<Self> {
        Ok(Self {
            coef,
            g: GFunction::parse(g)?,
            f: RingFunction::parse(f)?,
            psi: RingFunction::parse(psi)?,
        })
    }

    fn eval(&self, x: f64, r: f64, s: f64) -> f64 {
        self.coef * self.g.eval(x) * self.f.eval(r) * self.psi.eval(s)
    }

    fn eval_ext(&self, x: f64, r: ExtPoint, s: ExtPoint) -> Result<f64> {
        Ok(self.coef * self.g.eval(x) * self.f.eval_ext(r)? * self.psi.eval_ext(s)?)
    }
}

/// An integrand of class `H^{q,p}`.
#[derive(Clone)]
pub struct Integrand {
    pub name: String,
    pub p: f64,
    pub q: f64,
    pub h01: Vec<Term>,
    pub h02: Vec<Term>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .finish()
    }
}

/// Names accepted by [`Integrand::parse`].
pub const INTEGRAND_CATALOG: &[&str] = &[
    "s_sq",
    "neg_s_sq",
    "double_well",
    "abs_s",
    "signed_s",
    "sqrt1p",
    "r_lift",
    "r_s",
    "f_sq_sqrt1p",
    "one_plus_r_q(q)",
    "s_sq_plus_r_q(q)",
];

impl Integrand {
    pub fn new(name: impl Into<String>, p: f64, q: f64, h01: Vec<Term>, h02: Vec<Term>) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) {
            return Err(LabError::Precondition(format!("integrand needs p, q >= 1 (got {p}, {q})")));
        }
        Ok(Self {
            name: name.into(),
            p,
            q,
            h01,
            h02,
        })
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let (base, args) = parse_call(spec)?;
        let t = |c: f64, f: &str, psi: &str| Term::new(c, "one", f, psi);
        let (p, q, h01, h02) = match (base.as_str(), args.as_slice()) {
            ("s_sq", []) => (2.0, 1.0, vec![t(1.0, "one", "pow_frac(2,2)")?], vec![]),
            ("neg_s_sq", []) => (2.0, 1.0, vec![t(-1.0, "one", "pow_frac(2,2)")?], vec![]),
            ("double_well", []) => (4.0, 1.0, vec![t(1.0, "one", "double_well_frac(4)")?], vec![]),
            ("abs_s", []) => (1.0, 1.0, vec![t(1.0, "one", "abs_frac")?], vec![]),
            ("signed_s", []) => (1.0, 1.0, vec![t(1.0, "one", "signed_frac")?], vec![]),
            ("sqrt1p", []) => (1.0, 1.0, vec![t(1.0, "one", "sqrt1p_frac")?], vec![]),
            ("r_lift", []) => (1.0, 1.0, vec![t(1.0, "clamp(1)", "one")?], vec![]),
            ("r_s", []) => (1.0, 1.0, vec![t(1.0, "clamp(1)", "signed_frac")?], vec![]),
            ("f_sq_sqrt1p", []) => (1.0, 1.0, vec![t(1.0, "sq_clamp(1)", "sqrt1p_frac")?], vec![]),
            ("one_plus_r_q", [q]) => (1.0, *q, vec![], vec![t(1.0, "one", "one")?]),
            ("s_sq_plus_r_q", [q]) => (
                2.0,
                *q,
                vec![t(1.0, "one", "pow_frac(2,2)")?],
                vec![t(1.0, "one", "one")?],
            ),
            _ => {
                return Err(LabError::UnknownName {
                    kind: "integrand",
                    name: spec.to_string(),
                })
            }
        };
        Self::new(spec.trim(), p, q, h01, h02)
    }

    pub fn eval(&self, x: f64, r: f64, s: f64) -> f64 {
        let a: f64 = self.h01.iter().map(|t| t.eval(x, r, s)).sum();
        let b: f64 = self.h02.iter().map(|t| t.eval(x, r, s)).sum();
        a * (1.0 + s.abs().powf(self.p)) + b * (1.0 + r.abs().powf(self.q))
    }

    pub fn h01_ext(&self, x: f64, r: ExtPoint, s: ExtPoint) -> Result<f64> {
        self.h01.iter().map(|t| t.eval_ext(x, r, s)).sum()
    }

    pub fn h02_ext(&self, x: f64, r: ExtPoint, s: ExtPoint) -> Result<f64> {
        self.h02.iter().map(|t| t.eval_ext(x, r, s)).sum()
    }

    fn terms(&self) -> impl Iterator<Item = &Term> {
        self.h01.iter().chain(&self.h02)
    }

    pub fn x_kinks(&self) -> Vec<f64> {
        self.terms().flat_map(|t| t.g.kinks().to_vec()).collect()
    }

    pub fn r_kinks(&self) -> Vec<f64> {
        self.terms().flat_map(|t| t.f.kinks().to_vec()).collect()
    }

    pub fn s_kinks(&self) -> Vec<f64> {
        self.terms().flat_map(|t| t.psi.kinks().to_vec()).collect()
    }

    /// A constant `C` with `|h(x,r,s)| ≤ C(1+|r|^q+|s|^p)` on `[a, b]`.
    pub fn growth_constant(&self, domain: [f64; 2]) -> f64 {
        let [a, b] = domain;
        let sup_g = |g: &GFunction| {
            (0..=64)
                .map(|j| g.eval(a + (b - a) * j as f64 / 64.0).abs())
                .fold(0.0, f64::max)
        };
        self.terms()
            .map(|t| t.coef.abs() * sup_g(&t.g) * t.f.bound() * t.psi.bound())
            .sum()
    }
}

/// `lim ∫ h(x, u_k, w_k) dx` along the family, by extrapolation.
pub fn empirical_limit(family: &Family, h: &Integrand, schedule: &Schedule, quad: &Quadrature) -> Result<LimitEstimate> {
    let (xk, rk) = (h.x_kinks(), h.r_kinks());
    extrapolate_with(schedule, |k| {
        integrate_sequence(family, k, quad, &xk, &rk, |x, r, s| h.eval(x, r, s))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub oscillation: f64,
    pub concentration: f64,
    pub total: f64,
    /// Set when the family falls outside the hypotheses of the gradient theory (p = 1).
    pub outside_hypotheses: bool,
}

fn check_exponents(family: &Family, triple: &DMTriple, h: &Integrand) -> Result<()> {
    if !family.gradient_consistent() {
        return Err(LabError::Precondition(format!(
            "family '{}' is not gradient-consistent",
            family.name()
        )));
    }
    let p_star = sobolev_exponent(family.p(), family.dim());
    if !(h.q < p_star) {
        return Err(LabError::Subcritical { q: h.q, p_star });
    }
    if !h.h01.is_empty() && h.p != triple.p {
        return Err(LabError::Precondition(format!(
            "integrand growth p = {} differs from the triple's p = {}",
            h.p, triple.p
        )));
    }
    Ok(())
}

/// The Young-measure part of a primal triple: `L¹` with fibers `ν_x` from
/// [`young_from_dm`] and the same μ̂.
pub fn young_triple(triple: &DMTriple) -> Result<DMTriple> {
    let [a, b] = triple.domain;
    let cells = triple
        .nu_hat
        .intervals()
        .map(|(iv, f)| {
            Ok(FiberCell {
                cell: Cell::Interval(iv),
                fiber: young_from_dm(f, triple.p)?.into_measure(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMTriple {
        label: format!("young({})", triple.label),
        sigma: RadonMeasure::lebesgue(a, b, 1.0),
        nu_hat: FiberFamily { cells },
        ..triple.clone()
    })
}

fn kinks_of(h: &Integrand) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (h.x_kinks(), h.r_kinks(), h.s_kinks())
}

/// Oscillation `∫_Ω ∫∫ h μ̂ ν dx` plus concentration `∫_Ω̄ ∫_{∂} ∫ h01 μ̂ ν̂ σ`.
pub fn represent_limit(family: &Family, triple: &DMTriple, h: &Integrand, quad: &Quadrature) -> Result<Decomposition> {
    check_exponents(family, triple, h)?;
    let (xk, rk, sk) = kinks_of(h);
    let kinks = Kinks { x: &xk, r: &rk, s: &sk };
    let young = young_triple(triple)?;
    let oscillation = young.integrate_fn(quad, SPart::Finite, kinks, |x, r, s| match (r, s) {
        (ExtPoint::Finite(r), ExtPoint::Finite(s)) => Ok(h.eval(x, r, s)),
        _ => Err(LabError::Evaluation(format!(
            "oscillation term needs finite (r, s), got ({r}, {s})"
        ))),
    })?;
    let concentration = triple.integrate_fn(quad, SPart::Boundary, kinks, |x, r, s| h.h01_ext(x, r, s))?;
    Ok(Decomposition {
        oscillation,
        concentration,
        total: oscillation + concentration,
        outside_hypotheses: family.p() <= 1.0,
    })
}

/// The triple `(σ*, ν̂*, μ̂*)` generated with the roles of `u_k` and `w_k` swapped.
///
/// Requires `{u_k}` uniformly bounded: then `σ* = (1+|u|^q)L¹`, `ν̂*_x` is the
/// Young measure of `w_k` and `μ̂*_{s,x} = δ_{u(x)}`.
pub fn dual_triple(family: &Family, primal: &DMTriple, q: f64, schedule: &Schedule, quad: &Quadrature) -> Result<DMTriple> {
    if !(q >= 1.0) {
        return Err(LabError::Precondition(format!("q must be >= 1, got {q}")));
    }
    let (k0, k1) = (schedule.ks[0], schedule.k_max());
    let (sup0, lq0) = u_norms(family, k0, q, quad)?;
    let (sup1, lq1) = u_norms(family, k1, q, quad)?;
    let grows = |a: f64, b: f64| b > 2.0 * a + 1e-9;
    if !family.uniformly_bounded() || grows(sup0, sup1) || grows(lq0, lq1) {
        return Err(LabError::Boundedness(format!(
            "'{}': ||u_k||_inf {sup0:.3e} -> {sup1:.3e}, ||u_k||_{q} {lq0:.3e} -> {lq1:.3e} over k = {k0}..{k1}",
            family.name()
        )));
    }
    let u = primal
        .limit
        .clone()
        .ok_or_else(|| LabError::Precondition("dual triple needs the limit function".into()))?;
    let density = u
        .pieces
        .iter()
        .map(|p| DensitySegment {
            lo: p.lo,
            hi: p.hi,
            density: Density::OnePlusAbsPow {
                slope: p.slope,
                intercept: p.intercept,
                q,
            },
        })
        .collect();
    let young = young_triple(primal)?;
    Ok(DMTriple {
        label: format!("dual({})", primal.label),
        domain: primal.domain,
        p: primal.p,
        role: Role::Dual { q },
        sigma: RadonMeasure {
            density,
            atoms: vec![],
        },
        nu_hat: young.nu_hat,
        mu_hat: limit_dirac_entries(&u),
        limit: Some(u),
    })
}

/// `μ̄*_x = ∫ μ̂*_{s,x} ν̂*_x(ds)`, the `u`-marginal of a dual triple.
pub fn barmustar(dual: &DMTriple, x: f64) -> Result<ExtMeasure> {
    let fiber = dual
        .nu_hat
        .at_ac(x)
        .ok_or_else(|| LabError::InvalidMeasure(format!("no nu-hat* cell covers x = {x}")))?;
    let mut out = ExtMeasure::default();
    let mut push = |law: Law<'_>, w: f64| match law {
        Law::Dirac(r) => out.atoms.push((ExtPoint::Finite(r), w)),
        Law::Measure(m) => {
            let s = m.scaled(w);
            out.atoms.extend(s.atoms);
            out.slabs.extend(s.slabs);
        }
    };
    for &(s, w) in &fiber.atoms {
        push(dual.mu_at(x, s, false)?, w);
    }
    for slab in &fiber.slabs {
        let quad = Quadrature::default();
        let mass = slab.integrate(&quad, &[], |_| 1.0);
        // finite-s entries do not depend on s
        push(dual.mu_at(x, ExtPoint::Finite(0.5 * (slab.lo + slab.hi)), false)?, mass);
    }
    Ok(out)
}

/// `∫ g(x) ∫ f₀(r) μ̄*_x(dr) σ*(dx)`: the DiPerna–Majda moment of `{u_k}` read off a dual triple.
pub fn dual_marginal_moment(dual: &DMTriple, g: &GFunction, f0: &RingFunction, quad: &Quadrature) -> Result<f64> {
    let kinks = Kinks {
        x: g.kinks(),
        r: f0.kinks(),
        s: &[],
    };
    dual.integrate_fn(quad, SPart::All, kinks, |x, r, _| Ok(g.eval(x) * f0.eval_ext(r)?))
}

/// `lim ∫ g(x) f₀(u_k)(1+|u_k|^q) dx` along the family.
pub fn sequence_dm_moment(
    family: &Family,
    g: &GFunction,
    f0: &RingFunction,
    q: f64,
    schedule: &Schedule,
    quad: &Quadrature,
) -> Result<LimitEstimate> {
    extrapolate_with(schedule, |k| {
        integrate_sequence(family, k, quad, g.kinks(), f0.kinks(), |x, r, _| {
            g.eval(x) * f0.eval(r) * (1.0 + r.abs().powf(q))
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplifyReport {
    /// Three-term form (both concentration terms plus oscillation).
    pub full: f64,
    /// Two-term form without the `h02` concentration term.
    pub simplified: f64,
    pub difference: f64,
    pub empirical: f64,
    pub error_bar: f64,
    pub pass: bool,
}

/// Checks that the `h02` concentration term vanishes and that the simplified
/// representation matches the empirical limit.
pub fn simplify_check(
    family: &Family,
    triple: &DMTriple,
    h: &Integrand,
    schedule: &Schedule,
    quad: &Quadrature,
    tol: f64,
) -> Result<SimplifyReport> {
    let parts = represent_limit(family, triple, h, quad)?;
    let dual = dual_triple(family, triple, h.q, schedule, quad)?;
    let (xk, rk, sk) = kinks_of(h);
    let kinks = Kinks { x: &xk, r: &rk, s: &sk };
    let h02_conc = dual.integrate_fn(quad, SPart::All, kinks, |x, r, s| {
        if r.is_finite() {
            Ok(0.0)
        } else {
            h.h02_ext(x, r, s)
        }
    })?;
    let full = pairwise_sum(&[parts.concentration, h02_conc]) + parts.oscillation;
    let simplified = parts.concentration + parts.oscillation;
    let difference = (full - simplified).abs();
    let emp = empirical_limit(family, h, schedule, quad)?;
    Ok(SimplifyReport {
        full,
        simplified,
        difference,
        empirical: emp.value,
        error_bar: emp.error_bar,
        pass: difference <= tol && limits_agree(&emp, simplified, tol),
    })
}

/// `∫_Ω h(x, u(x), u'(x)) dx` for the closed-form limit of the family.
pub fn functional_at_limit(family: &Family, h: &Integrand, quad: &Quadrature) -> Result<f64> {
    let u = family.limit();
    let xk = h.x_kinks();
    let rk = h.r_kinks();
    let geometry = family.realize(1)?.geometry;
    let parts: Vec<f64> = u
        .pieces
        .iter()
        .filter(|p| p.hi > p.lo)
        .map(|p| {
            let mut cuts = interior_cuts(p.lo, p.hi, &xk);
            if p.slope != 0.0 {
                cuts.extend(rk.iter().map(|r| (r - p.intercept) / p.slope));
            }
            quad.integrate_split(p.lo, p.hi, &cuts, |x| {
                geometry.weight(x) * h.eval(x, p.slope * x + p.intercept, p.slope)
            })
        })
        .collect();
    Ok(pairwise_sum(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::builtin;
    use crate::measures::reference_triple;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn ex_first_r_lift() {
        let d = represent_limit(
            &builtin("ex_first").unwrap(),
            &reference_triple("ex_first").unwrap(),
            &Integrand::parse("r_lift").unwrap(),
            &q(),
        )
        .unwrap();
        assert!((d.oscillation + 1.0).abs() < 1e-14);
        assert!((d.concentration - 0.5).abs() < 1e-14);
        assert!((d.total + 0.5).abs() < 1e-14);
        assert!(d.outside_hypotheses);
    }

    #[test]
    fn sawtooth_s_sq() {
        let d = represent_limit(
            &builtin("sawtooth").unwrap(),
            &reference_triple("sawtooth").unwrap(),
            &Integrand::parse("s_sq").unwrap(),
            &q(),
        )
        .unwrap();
        assert!((d.oscillation - 1.0).abs() < 1e-14);
        assert_eq!(d.concentration, 0.0);
    }

    #[test]
    fn constant_family_total() {
        let fam = builtin("constant(0.25)").unwrap();
        let t = reference_triple("constant(0.25)").unwrap();
        for name in ["r_lift", "sqrt1p", "one_plus_r_q(2)"] {
            let h = Integrand::parse(name).unwrap();
            let d = represent_limit(&fam, &t, &h, &q()).unwrap();
            let direct = h.eval(0.5, 0.25, 0.0);
            assert!((d.total - direct).abs() < 1e-14, "{name}");
        }
    }

    #[test]
    fn exponent_mismatch_rejected() {
        let r = represent_limit(
            &builtin("ex_first").unwrap(),
            &reference_triple("ex_first").unwrap(),
            &Integrand::parse("s_sq").unwrap(),
            &q(),
        );
        assert!(matches!(r, Err(LabError::Precondition(_))));
    }

    #[test]
    fn gradient_inconsistent_rejected() {
        let r = represent_limit(
            &builtin("fixed_u").unwrap(),
            &reference_triple("fixed_u").unwrap(),
            &Integrand::parse("r_lift").unwrap(),
            &q(),
        );
        assert!(matches!(r, Err(LabError::Precondition(_))));
    }

    #[test]
    fn dual_of_constant() {
        let fam = builtin("constant(2)").unwrap();
        let t = reference_triple("constant(2)").unwrap();
        let d = dual_triple(&fam, &t, 2.0, &Schedule::default(), &q()).unwrap();
        assert_eq!(d.sigma.density_at(0.3), 5.0);
        assert!(d.nu_hat.cells.iter().all(|c| c.fiber.boundary_mass() == 0.0));
        let m = barmustar(&d, 0.3).unwrap();
        assert_eq!(m.atoms, vec![(ExtPoint::Finite(2.0), 1.0)]);
    }

    #[test]
    fn dual_of_ex_simple_moment() {
        let fam = builtin("ex_simple").unwrap();
        let t = reference_triple("ex_simple").unwrap();
        let d = dual_triple(&fam, &t, 1.0, &Schedule::default(), &q()).unwrap();
        let m = barmustar(&d, 1.5).unwrap();
        let first: f64 = m.atoms.iter().map(|(r, w)| w * r.finite().unwrap()).sum();
        assert_eq!(first, 1.0);
    }

    #[test]
    fn unbounded_family_has_no_dual() {
        let fam = builtin("radial_tent(2,1.5)").unwrap();
        let t = reference_triple("constant(0)").unwrap();
        let r = dual_triple(&fam, &t, 1.0, &Schedule::default(), &q());
        assert!(matches!(r, Err(LabError::Boundedness(_))));
    }

    #[test]
    fn simplify_constant_is_exact() {
        let fam = builtin("constant").unwrap();
        let t = reference_triple("constant").unwrap();
        let h = Integrand::parse("one_plus_r_q(2)").unwrap();
        let r = simplify_check(&fam, &t, &h, &Schedule::default(), &q(), 1e-3).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn unknown_integrand() {
        assert!(matches!(Integrand::parse("s_cubed"), Err(LabError::UnknownName { .. })));
    }
}
