//! `I_k = ∫ g(x) f₀(u_k) ψ(w_k) dx` along a family, and its limit as `k → ∞`.

use rayon::prelude::*;
use serde::Serialize;

use crate::compactify::{BatteryMember, GFunction, RingFunction, TestBattery};
use crate::error::{LabError, Result};
use crate::families::{Family, K_GUARD};
use crate::measures::{integrate_triple, DMTriple};
use crate::quad::{interior_cuts, pairwise_sum, Quadrature};

/// Default absolute tolerance of a limit match.
pub const LIMIT_TOL: f64 = 1e-3;
/// Number of trailing schedule points used by the fit.
pub const FIT_POINTS: usize = 4;

/// The `k`-schedule `2^j`, `j = j_min..=j_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub ks: Vec<u64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self::dyadic(4, 14).expect("default schedule")
    }
}

impl Schedule {
    pub fn dyadic(j_min: u32, j_max: u32) -> Result<Self> {
        if j_max < j_min || (j_max - j_min + 1) < FIT_POINTS as u32 {
            return Err(LabError::Schedule(format!(
                "need at least {FIT_POINTS} schedule points, got 2^{j_min}..2^{j_max}"
            )));
        }
        if j_max > 40 {
            return Err(LabError::Schedule(format!("2^{j_max} exceeds the overflow guard 2^40")));
        }
        Ok(Self {
            ks: (j_min..=j_max).map(|j| 1u64 << j).collect(),
        })
    }

    /// Default start `2^4`, custom cap.
    pub fn up_to(j_max: u32) -> Result<Self> {
        Self::dyadic(4.min(j_max.saturating_sub(FIT_POINTS as u32 - 1)), j_max)
    }

    pub fn new(ks: Vec<u64>) -> Result<Self> {
        if ks.len() < FIT_POINTS {
            return Err(LabError::Schedule(format!("need at least {FIT_POINTS} schedule points")));
        }
        if ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 {
            return Err(LabError::Schedule("schedule must be strictly increasing and positive".into()));
        }
        if let Some(&k) = ks.iter().find(|&&k| k > K_GUARD) {
            return Err(LabError::Schedule(format!("k = {k} exceeds the overflow guard 2^40")));
        }
        Ok(Self { ks })
    }

    pub fn k_max(&self) -> u64 {
        *self.ks.last().expect("nonempty schedule")
    }
}

/// `∫_Ω h(x, u_k(x), w_k(x)) dx`, split at the breakpoints of the family, at
/// `x_kinks`, and at the preimages of `r_kinks` under each affine piece of `u_k`.
pub fn integrate_sequence<H>(family: &Family, k: u64, quad: &Quadrature, x_kinks: &[f64], r_kinks: &[f64], h: H) -> Result<f64>
where
    H: Fn(f64, f64, f64) -> f64,
{
    let real = family.realize(k)?;
    let mut parts = Vec::with_capacity(real.pieces.len());
    let mut cuts = Vec::new();
    for piece in &real.pieces {
        if !(piece.hi > piece.lo) {
            continue;
        }
        cuts.clear();
        cuts.extend(interior_cuts(piece.lo, piece.hi, x_kinks));
        if piece.slope != 0.0 {
            cuts.extend(r_kinks.iter().map(|r| (r - piece.intercept) / piece.slope));
        }
        let geom = real.geometry;
        parts.push(quad.integrate_split(piece.lo, piece.hi, &cuts, |x| {
            geom.weight(x) * h(x, piece.u(x), piece.w)
        }));
    }
    let v = pairwise_sum(&parts);
    if !v.is_finite() {
        return Err(LabError::Evaluation(format!("I_k is not finite at k = {k}")));
    }
    Ok(v)
}

/// `I_k` for the battery triple `(g, f₀, ψ₀)` with `ψ = ψ₀(1+|s|^p)`.
pub fn functional_value(
    family: &Family,
    k: u64,
    g: &GFunction,
    f0: &RingFunction,
    psi0: &RingFunction,
    p: f64,
    quad: &Quadrature,
) -> Result<f64> {
    integrate_sequence(family, k, quad, g.kinks(), f0.kinks(), |x, r, s| {
        g.eval(x) * f0.eval(r) * psi0.eval(s) * (1.0 + s.abs().powf(p))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub error_bar: f64,
    pub schedule: Vec<u64>,
    pub samples: Vec<f64>,
    /// Successive differences stopped shrinking at the end of the schedule.
    pub diverging: bool,
}

impl LimitEstimate {
    /// `I_k` at the largest `k` of the schedule.
    pub fn last_sample(&self) -> f64 {
        *self.samples.last().expect("nonempty schedule")
    }
}

/// Fits `I_k ≈ a + b/k` on the last [`FIT_POINTS`] samples by least squares.
pub fn fit_limit(ks: &[u64], samples: &[f64]) -> Result<LimitEstimate> {
    if ks.len() != samples.len() || ks.len() < FIT_POINTS {
        return Err(LabError::Schedule(format!(
            "need {FIT_POINTS} matching schedule points and samples, got {} and {}",
            ks.len(),
            samples.len()
        )));
    }
    let n = ks.len();
    let t: Vec<f64> = ks[n - FIT_POINTS..].iter().map(|&k| 1.0 / k as f64).collect();
    let y = &samples[n - FIT_POINTS..];
    let m = FIT_POINTS as f64;
    let t_bar = pairwise_sum(&t) / m;
    let y_bar = pairwise_sum(y) / m;
    let stt: Vec<f64> = t.iter().map(|ti| (ti - t_bar) * (ti - t_bar)).collect();
    let sty: Vec<f64> = t.iter().zip(y).map(|(ti, yi)| (ti - t_bar) * (yi - y_bar)).collect();
    let b = pairwise_sum(&sty) / pairwise_sum(&stt);
    let a = y_bar - b * t_bar;
    let max_residual = t
        .iter()
        .zip(y)
        .map(|(ti, yi)| (yi - (a + b * ti)).abs())
        .fold(0.0, f64::max);
    let error_bar = max_residual + (samples[n - 1] - a).abs();

    let diffs: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let diverging = diffs.len() >= 2 && {
        let last = diffs[diffs.len() - 1];
        let prev = diffs[diffs.len() - 2];
        last > 1e-12 * (1.0 + samples[n - 1].abs()) && last > 1.1 * prev
    };
    Ok(LimitEstimate {
        value: a,
        error_bar,
        schedule: ks.to_vec(),
        samples: samples.to_vec(),
        diverging,
    })
}

/// Evaluates `sample(k)` over the schedule in parallel and fits the limit.
pub fn extrapolate_with<F>(schedule: &Schedule, sample: F) -> Result<LimitEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let samples: Vec<f64> = schedule.ks.par_iter().map(|&k| sample(k)).collect::<Result<_>>()?;
    fit_limit(&schedule.ks, &samples)
}

pub fn limit_extrapolate(
    family: &Family,
    g: &GFunction,
    f0: &RingFunction,
    psi0: &RingFunction,
    p: f64,
    schedule: &Schedule,
    quad: &Quadrature,
) -> Result<LimitEstimate> {
    extrapolate_with(schedule, |k| functional_value(family, k, g, f0, psi0, p, quad))
}

/// Pass rule shared by every limit comparison.
pub fn limits_agree(empirical: &LimitEstimate, predicted: f64, tol: f64) -> bool {
    (empirical.value - predicted).abs() <= tol.max(3.0 * empirical.error_bar)
}

/// One battery member of an empirical check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub g: String,
    pub f0: String,
    pub psi0: String,
    pub k: u64,
    pub i_k: f64,
    pub limit: f64,
    pub error_bar: f64,
    pub predicted: f64,
    pub diverging: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub rows: Vec<CheckRow>,
}

impl DiscrepancyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }
}

fn check_member(
    family: &Family,
    triple: &DMTriple,
    m: &BatteryMember,
    p: f64,
    schedule: &Schedule,
    quad: &Quadrature,
    tol: f64,
) -> Result<CheckRow> {
    let est = limit_extrapolate(family, &m.g, &m.f0, &m.psi0, p, schedule, quad)?;
    let predicted = integrate_triple(triple, &m.g, &m.f0, &m.psi0, quad)?;
    Ok(CheckRow {
        g: m.g.name().to_string(),
        f0: m.f0.name().to_string(),
        psi0: m.psi0.name().to_string(),
        k: schedule.k_max(),
        i_k: est.last_sample(),
        limit: est.value,
        error_bar: est.error_bar,
        predicted,
        diverging: est.diverging,
        pass: limits_agree(&est, predicted, tol),
    })
}

/// Compares the extrapolated limit with the triple integral for every battery member.
pub fn empirical_triple_check(
    family: &Family,
    triple: &DMTriple,
    battery: &TestBattery,
    p: f64,
    schedule: &Schedule,
    quad: &Quadrature,
    tol: f64,
) -> Result<DiscrepancyReport> {
    if family.domain() != triple.domain {
        return Err(LabError::Precondition(format!(
            "family domain {:?} differs from triple domain {:?}",
            family.domain(),
            triple.domain
        )));
    }
    let rows = battery
        .members
        .par_iter()
        .map(|m| check_member(family, triple, m, p, schedule, quad, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscrepancyReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::builtin;

    fn ring(s: &str) -> RingFunction {
        RingFunction::parse(s).unwrap()
    }

    #[test]
    fn ex_first_mass_is_five() {
        let f = builtin("ex_first").unwrap();
        let q = Quadrature::default();
        // dyadic breakpoints are exact, so is the sum
        for j in 1..=14 {
            let v = functional_value(&f, 1 << j, &GFunction::one(), &ring("one"), &ring("one"), 1.0, &q).unwrap();
            assert_eq!(v, 5.0, "k = 2^{j}");
        }
        // otherwise 1 - 1/k rounds and the slope 2k amplifies it
        for k in [3u64, 7, 1000] {
            let v = functional_value(&f, k, &GFunction::one(), &ring("one"), &ring("one"), 1.0, &q).unwrap();
            assert!((v - 5.0).abs() <= 1e-15 * k as f64 * 5.0, "k = {k}: {v}");
        }
    }

    #[test]
    fn constant_data_fit_exactly() {
        let ks = Schedule::default().ks;
        let e = fit_limit(&ks, &vec![5.0; ks.len()]).unwrap();
        assert_eq!((e.value, e.error_bar, e.diverging), (5.0, 0.0, false));
    }

    #[test]
    fn fit_recovers_a_plus_b_over_k() {
        let ks = Schedule::default().ks;
        let y: Vec<f64> = ks.iter().map(|&k| 2.0 - 3.0 / k as f64).collect();
        let e = fit_limit(&ks, &y).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!(e.error_bar < 1e-3);
    }

    #[test]
    fn growth_is_flagged() {
        let ks = Schedule::default().ks;
        let y: Vec<f64> = ks.iter().map(|&k| (k as f64).sqrt()).collect();
        assert!(fit_limit(&ks, &y).unwrap().diverging);
    }

    #[test]
    fn schedule_guard() {
        assert!(Schedule::dyadic(4, 41).is_err());
        assert!(Schedule::new(vec![1, 2, 3]).is_err());
        assert!(matches!(
            functional_value(&builtin("ramp").unwrap(), (1 << 40) + 1, &GFunction::one(), &ring("one"), &ring("one"), 1.0, &Quadrature::default()),
            Err(LabError::Schedule(_))
        ));
    }

    #[test]
    fn constant_family_gives_domain_length() {
        let f = builtin("constant(0)").unwrap();
        let v = functional_value(&f, 8, &GFunction::one(), &ring("one"), &ring("one"), 1.0, &Quadrature::default()).unwrap();
        assert_eq!(v, 1.0);
    }
}
