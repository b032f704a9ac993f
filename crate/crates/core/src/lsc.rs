//! Weak lower semicontinuity along catalog sequences.

use std::fmt;

use serde::Serialize;

use crate::compactify::ExtPoint;
use crate::error::{LabError, Result};
use crate::families::Family;
use crate::limits::{Schedule, LIMIT_TOL};
use crate::measures::{DMTriple, Kinks, SPart};
use crate::quad::Quadrature;
use crate::represent::{empirical_limit, functional_at_limit, Integrand};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscGap {
    /// Extrapolated `lim ∫ h(x, u_k, ∇u_k)`, standing in for the liminf.
    pub limit: f64,
    pub error_bar: f64,
    pub at_limit: f64,
    pub gap: f64,
    pub diverging: bool,
}

pub fn lsc_gap(family: &Family, h: &Integrand, schedule: &Schedule, quad: &Quadrature) -> Result<LscGap> {
    if !family.gradient_consistent() {
        return Err(LabError::Precondition(format!(
            "family '{}' is not gradient-consistent",
            family.name()
        )));
    }
    let est = empirical_limit(family, h, schedule, quad)?;
    let at_limit = functional_at_limit(family, h, quad)?;
    Ok(LscGap {
        limit: est.value,
        error_bar: est.error_bar,
        at_limit,
        gap: est.value - at_limit,
        diverging: est.diverging,
    })
}

/// `∫_Ω̄ ∫_{∂} h̃(x,s) ν̂_x(ds) σ(dx)` with `h̃` the recession values of `h01` averaged against μ̂.
pub fn plessn_condition(triple: &DMTriple, h: &Integrand, quad: &Quadrature) -> Result<f64> {
    let (xk, rk) = (h.x_kinks(), h.r_kinks());
    let kinks = Kinks { x: &xk, r: &rk, s: &[] };
    triple
        .integrate_fn(quad, SPart::Boundary, kinks, |x, r, s: ExtPoint| {
            h.h01_ext(x, r, s).map_err(|e| match e {
                LabError::KindMismatch(m) => LabError::Recession(m),
                other => other,
            })
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Boundary condition nonnegative.
    Satisfied,
    /// Condition negative and the gap confirms lsc fails.
    NotSatisfied,
    /// Condition negative but the sequence shows no failure.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::NotSatisfied => "not_satisfied",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

pub fn verdict(condition: f64, gap: f64, tol: f64) -> Verdict {
    if condition >= 0.0 {
        Verdict::Satisfied
    } else if gap < -tol {
        Verdict::NotSatisfied
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscRow {
    pub gap: LscGap,
    pub condition: f64,
    pub verdict: Verdict,
}

pub fn lsc_report(family: &Family, triple: &DMTriple, h: &Integrand, schedule: &Schedule, quad: &Quadrature) -> Result<LscRow> {
    let gap = lsc_gap(family, h, schedule, quad)?;
    let condition = plessn_condition(triple, h, quad)?;
    let tol = LIMIT_TOL.max(3.0 * gap.error_bar);
    Ok(LscRow {
        verdict: verdict(condition, gap.gap, tol),
        gap,
        condition,
    })
}
