//! Fixed-order Gauss–Legendre quadrature over split intervals.
//!
//! Every integral in the crate goes through [`Quadrature::integrate_split`]:
//! the interval is cut at the supplied kinks, each subinterval is integrated
//! with the same rule, and the partial results are combined by pairwise
//! summation in left-to-right order. The result is therefore a pure function
//! of the inputs, independent of threading.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{LabError, Result};

pub const DEFAULT_ORDER: usize = 8;

#[derive(Debug, Clone)]
pub struct Quadrature {
    order: usize,
    rule: GaussLegendre,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(DEFAULT_ORDER).expect("default order is nonzero")
    }
}

impl Quadrature {
    pub fn new(order: usize) -> Result<Self> {
        let n = NonZeroUsize::new(order)
            .ok_or_else(|| LabError::Precondition("quadrature order must be >= 1".into()))?;
        Ok(Self {
            order,
            rule: GaussLegendre::new(n),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.rule.integrate(a, b, f)
    }

    /// Integrates over `[a, b]` after splitting at every kink strictly inside.
    pub fn integrate_split<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        kinks: &[f64],
        mut f: F,
    ) -> f64 {
        let cuts = interior_cuts(a, b, kinks);
        let mut parts = Vec::with_capacity(cuts.len() + 1);
        let mut lo = a;
        for &c in cuts.iter().chain(std::iter::once(&b)) {
            parts.push(self.integrate(lo, c, &mut f));
            lo = c;
        }
        pairwise_sum(&parts)
    }
}

/// Sorted, deduplicated kinks lying strictly inside `(a, b)`.
pub fn interior_cuts(a: f64, b: f64, kinks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|&c| c.is_finite() && c > a && c < b)
        .collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    cuts
}

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_eight_is_exact_for_degree_fifteen() {
        let q = Quadrature::default();
        let v = q.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn split_handles_kinks() {
        let q = Quadrature::default();
        let v = q.integrate_split(-1.0, 2.0, &[0.0, 5.0, -3.0, 0.0], |x: f64| x.abs());
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(Quadrature::new(0).is_err());
    }

    #[test]
    fn pairwise_matches_plain_sum_on_integers() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }
}
