//! Radon measures, compactified fibers and the triples `(σ, ν̂, μ̂)`.
//!
//! Everything here is a finite object: densities are closed-form on a few
//! segments, fibers are constant on cells, and integrals reduce to finite sums
//! plus split Gauss–Legendre quadrature. Scalar targets only (`m = n = 1`),
//! with the two-point compactification `R ∪ {±∞}` on both factors.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::compactify::{ExtPoint, GFunction, RingFunction, TestBattery};
use crate::error::{LabError, Result};
use crate::families::LimitFunction;
use crate::quad::{pairwise_sum, Quadrature};

/// Total-mass tolerance for probability measures.
pub const MASS_TOL: f64 = 1e-10;
/// Absolute tolerance for comparing atom locations.
pub const LOCATION_TOL: f64 = 1e-9;
/// Relative tolerance of the density-formula check.
pub const DENSITY_TOL: f64 = 1e-8;

/// Panels per slab for quadrature over the target variable.
const SLAB_PANELS: usize = 16;
/// Sample points per interval cell for pointwise checks.
const CELL_SAMPLES: usize = 16;

/// Uniform (or `1/(1+|s|^p)`-weighted) density on a finite interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub lo: f64,
    pub hi: f64,
    pub coef: f64,
    /// When set to `p`, the density is `coef / (1 + |s|^p)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recip_p: Option<f64>,
}

impl Slab {
    pub fn uniform(lo: f64, hi: f64, coef: f64) -> Self {
        Self {
            lo,
            hi,
            coef,
            recip_p: None,
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        match self.recip_p {
            None => self.coef,
            Some(p) => self.coef / (1.0 + s.abs().powf(p)),
        }
    }

    /// `∫ f(s) density(s) ds` over the slab, split at `kinks` and at 0.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, quad: &Quadrature, kinks: &[f64], mut f: F) -> f64 {
        if self.recip_p.is_none() && self.coef == 0.0 {
            return 0.0;
        }
        let width = (self.hi - self.lo) / SLAB_PANELS as f64;
        let mut cuts: Vec<f64> = (1..SLAB_PANELS).map(|j| self.lo + j as f64 * width).collect();
        cuts.extend_from_slice(kinks);
        cuts.push(0.0);
        quad.integrate_split(self.lo, self.hi, &cuts, |s| self.density(s) * f(s))
    }
}

/// A finite signed measure on the compactified line: atoms plus slabs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtMeasure {
    #[serde(default)]
    pub atoms: Vec<(ExtPoint, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slabs: Vec<Slab>,
}

impl ExtMeasure {
    pub fn dirac(at: ExtPoint) -> Self {
        Self {
            atoms: vec![(at, 1.0)],
            slabs: vec![],
        }
    }

    pub fn atoms(atoms: Vec<(ExtPoint, f64)>) -> Self {
        Self { atoms, slabs: vec![] }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(a, w)| (a, c * w)).collect(),
            slabs: self
                .slabs
                .iter()
                .map(|s| Slab {
                    coef: c * s.coef,
                    ..*s
                })
                .collect(),
        }
    }

    /// `∫ f dm`, restricted to the part selected by `part`.
    pub fn integrate<F>(&self, quad: &Quadrature, kinks: &[f64], part: SPart, mut f: F) -> Result<f64>
    where
        F: FnMut(ExtPoint) -> Result<f64>,
    {
        let mut parts = Vec::with_capacity(self.atoms.len() + self.slabs.len());
        for &(at, w) in &self.atoms {
            if part.admits(at) {
                parts.push(w * f(at)?);
            }
        }
        if part.admits(ExtPoint::Finite(0.0)) {
            let err = RefCell::new(None);
            for slab in &self.slabs {
                parts.push(slab.integrate(quad, kinks, |s| {
                    f(ExtPoint::Finite(s)).unwrap_or_else(|e| {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    })
                }));
            }
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
        }
        Ok(pairwise_sum(&parts))
    }

    fn integrate_plain<F: FnMut(ExtPoint) -> f64>(&self, part: SPart, mut f: F) -> f64 {
        let quad = Quadrature::default();
        self.integrate(&quad, &[], part, |s| Ok(f(s))).unwrap_or(f64::NAN)
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate_plain(SPart::All, |_| 1.0)
    }

    /// Mass carried by the finite part `R`.
    pub fn finite_mass(&self) -> f64 {
        self.integrate_plain(SPart::Finite, |_| 1.0)
    }

    pub fn boundary_mass(&self) -> f64 {
        self.integrate_plain(SPart::Boundary, |_| 1.0)
    }

    /// `∫_R (1+|s|^p)^{-1} m(ds)`.
    pub fn recip_moment(&self, p: f64) -> f64 {
        self.integrate_plain(SPart::Finite, |s| {
            let v = s.finite().unwrap_or(0.0);
            1.0 / (1.0 + v.abs().powf(p))
        })
    }

    /// Smallest weight or slab coefficient (`+∞` for the zero measure).
    pub fn min_weight(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.1)
            .chain(self.slabs.iter().map(|s| s.coef))
            .fold(f64::INFINITY, f64::min)
    }

    /// Weight of the atom at `at` (boundary points compared exactly, finite ones within tolerance).
    pub fn weight_at(&self, at: ExtPoint) -> f64 {
        self.atoms
            .iter()
            .filter(|(a, _)| same_point(*a, at))
            .map(|a| a.1)
            .sum()
    }

    /// The boundary atoms, in storage order.
    pub fn boundary_atoms(&self) -> impl Iterator<Item = (ExtPoint, f64)> + '_ {
        self.atoms.iter().copied().filter(|(a, _)| !a.is_finite())
    }
}

fn same_point(a: ExtPoint, b: ExtPoint) -> bool {
    match (a, b) {
        (ExtPoint::Finite(x), ExtPoint::Finite(y)) => (x - y).abs() <= LOCATION_TOL,
        _ => a == b,
    }
}

/// Which part of the compactified target an integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SPart {
    All,
    Finite,
    Boundary,
}

impl SPart {
    pub fn admits(&self, s: ExtPoint) -> bool {
        match self {
            SPart::All => true,
            SPart::Finite => s.is_finite(),
            SPart::Boundary => !s.is_finite(),
        }
    }
}

/// A probability measure on the compactified line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExtMeasure", into = "ExtMeasure")]
pub struct CompactifiedProbability(ExtMeasure);

impl TryFrom<ExtMeasure> for CompactifiedProbability {
    type Error = LabError;

    fn try_from(m: ExtMeasure) -> Result<Self> {
        Self::new(m)
    }
}

impl From<CompactifiedProbability> for ExtMeasure {
    fn from(p: CompactifiedProbability) -> Self {
        p.0
    }
}

impl CompactifiedProbability {
    pub fn new(m: ExtMeasure) -> Result<Self> {
        if m.min_weight() < 0.0 {
            return Err(LabError::InvalidMeasure(format!(
                "negative weight {} in a probability measure",
                m.min_weight()
            )));
        }
        if m.slabs.iter().any(|s| !(s.lo < s.hi)) {
            return Err(LabError::InvalidMeasure("slab with empty support".into()));
        }
        let mass = m.total_mass();
        if !((mass - 1.0).abs() <= MASS_TOL) {
            return Err(LabError::InvalidMeasure(format!(
                "total mass {mass} differs from 1 by more than {MASS_TOL:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn dirac(at: ExtPoint) -> Self {
        Self(ExtMeasure::dirac(at))
    }

    /// Normalized Lebesgue measure on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(LabError::InvalidMeasure(format!("empty interval [{lo}, {hi}]")));
        }
        Self::new(ExtMeasure {
            atoms: vec![],
            slabs: vec![Slab::uniform(lo, hi, 1.0 / (hi - lo))],
        })
    }

    /// Convex combination `Σ w_i P_i`.
    pub fn mixture(parts: &[(f64, CompactifiedProbability)]) -> Result<Self> {
        let mut m = ExtMeasure::default();
        for (w, p) in parts {
            let s = p.0.scaled(*w);
            m.atoms.extend(s.atoms);
            m.slabs.extend(s.slabs);
        }
        Self::new(m)
    }

    pub fn measure(&self) -> &ExtMeasure {
        &self.0
    }

    pub fn into_measure(self) -> ExtMeasure {
        self.0
    }
}

/// Density of the absolutely continuous part of σ on one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Density {
    /// `Σ c_i x^i`.
    Poly { coeffs: Vec<f64> },
    /// `1 + |slope·x + intercept|^q`.
    OnePlusAbsPow { slope: f64, intercept: f64, q: f64 },
}

impl Density {
    pub fn constant(c: f64) -> Self {
        Density::Poly { coeffs: vec![c] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Density::OnePlusAbsPow { slope, intercept, q } => 1.0 + (slope * x + intercept).abs().powf(*q),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Density::OnePlusAbsPow { slope, intercept, .. } if *slope != 0.0 => vec![-intercept / slope],
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySegment {
    pub lo: f64,
    pub hi: f64,
    pub density: Density,
}

/// Absolutely continuous density plus finitely many atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadonMeasure {
    #[serde(default)]
    pub density: Vec<DensitySegment>,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

impl RadonMeasure {
    /// `c·L¹` on `[a, b]`.
    pub fn lebesgue(a: f64, b: f64, c: f64) -> Self {
        Self {
            density: vec![DensitySegment {
                lo: a,
                hi: b,
                density: Density::constant(c),
            }],
            atoms: vec![],
        }
    }

    pub fn with_atom(mut self, x: f64, w: f64) -> Self {
        self.atoms.push((x, w));
        self
    }

    /// `d_σ(x)`, zero off every segment.
    pub fn density_at(&self, x: f64) -> f64 {
        self.density
            .iter()
            .find(|s| x >= s.lo && x <= s.hi)
            .map_or(0.0, |s| s.density.eval(x))
    }

    pub fn ac_mass(&self, quad: &Quadrature) -> f64 {
        let parts: Vec<f64> = self
            .density
            .iter()
            .map(|s| quad.integrate_split(s.lo, s.hi, &s.density.kinks(), |x| s.density.eval(x)))
            .collect();
        pairwise_sum(&parts)
    }

    pub fn total_mass(&self, quad: &Quadrature) -> f64 {
        self.ac_mass(quad) + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    fn breaks(&self) -> Vec<f64> {
        self.density
            .iter()
            .flat_map(|s| {
                let mut v = vec![s.lo, s.hi];
                v.extend(s.density.kinks());
                v
            })
            .collect()
    }
}

/// A cell of the fiber partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Interval([f64; 2]),
    Point(f64),
}

impl Cell {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Cell::Interval([lo, hi]) => x >= lo && x <= hi,
            Cell::Point(at) => (x - at).abs() <= LOCATION_TOL,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Cell::Point(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCell {
    pub cell: Cell,
    pub fiber: ExtMeasure,
}

/// Cellwise-constant fibers `x ↦ ν̂_x`. Point cells override intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiberFamily {
    pub cells: Vec<FiberCell>,
}

impl FiberFamily {
    pub fn constant(a: f64, b: f64, fiber: ExtMeasure) -> Self {
        Self {
            cells: vec![FiberCell {
                cell: Cell::Interval([a, b]),
                fiber,
            }],
        }
    }

    pub fn with_point(mut self, x: f64, fiber: ExtMeasure) -> Self {
        self.cells.push(FiberCell {
            cell: Cell::Point(x),
            fiber,
        });
        self
    }

    /// The fiber seen by σ at `x`: a point cell if one matches, else an interval.
    pub fn at_point(&self, x: f64) -> Option<&ExtMeasure> {
        self.cells
            .iter()
            .find(|c| c.cell.is_point() && c.cell.contains(x))
            .or_else(|| self.cells.iter().find(|c| !c.cell.is_point() && c.cell.contains(x)))
            .map(|c| &c.fiber)
    }

    /// The fiber seen by the absolutely continuous part (interval cells only).
    pub fn at_ac(&self, x: f64) -> Option<&ExtMeasure> {
        self.cells
            .iter()
            .find(|c| !c.cell.is_point() && c.cell.contains(x))
            .map(|c| &c.fiber)
    }

    pub fn intervals(&self) -> impl Iterator<Item = ([f64; 2], &ExtMeasure)> + '_ {
        self.cells.iter().filter_map(|c| match c.cell {
            Cell::Interval(iv) => Some((iv, &c.fiber)),
            Cell::Point(_) => None,
        })
    }

    /// True when the interval cells cover `[a, b]` without overlapping interiors.
    pub fn covers(&self, a: f64, b: f64) -> bool {
        let mut ivs: Vec<[f64; 2]> = self.intervals().map(|(iv, _)| iv).collect();
        ivs.sort_by(|x, y| x[0].total_cmp(&y[0]));
        let mut reach = a;
        for [lo, hi] in ivs {
            if lo > reach + LOCATION_TOL || lo < reach - LOCATION_TOL || hi < lo {
                return false;
            }
            reach = hi;
        }
        (reach - b).abs() <= LOCATION_TOL
    }
}

/// Key of a μ̂ entry in the `s` variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SKey {
    /// Every finite `s`.
    Finite,
    At(ExtPoint),
}

/// The law of `μ̂_{s,x}` on a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLaw {
    Fixed(ExtMeasure),
    /// `δ_{slope·x + intercept}`.
    AffineDirac { slope: f64, intercept: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEntry {
    pub cell: Cell,
    pub s: SKey,
    pub law: CellLaw,
}

/// Resolved `μ̂_{s,x}`.
#[derive(Debug, Clone, Copy)]
pub enum Law<'a> {
    Measure(&'a ExtMeasure),
    Dirac(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// `σ` is the limit of `(1+|w_k|^p) dx`.
    #[default]
    Primal,
    /// `σ*` is the limit of `(1+|u_k|^q) dx` (roles of the two sequences swapped).
    Dual { q: f64 },
}

/// Kink locations handed to the triple integrator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kinks<'a> {
    pub x: &'a [f64],
    pub r: &'a [f64],
    pub s: &'a [f64],
}

/// The anisotropic parametrized measure `(σ, ν̂, μ̂)` on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DMTriple {
    pub label: String,
    pub domain: [f64; 2],
    pub p: f64,
    #[serde(default)]
    pub role: Role,
    pub sigma: RadonMeasure,
    pub nu_hat: FiberFamily,
    #[serde(default)]
    pub mu_hat: Vec<MuEntry>,
    /// The weak limit `u`; enables the `δ_{u(x)}` completion of μ̂ over finite `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitFunction>,
}

impl DMTriple {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("triples serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::InvalidMeasure(format!("triple JSON: {e}")))
    }

    /// Resolves `μ̂_{s,x}`. `atom` selects the σ-atom view (point cells first).
    pub fn mu_at(&self, x: f64, s: ExtPoint, atom: bool) -> Result<Law<'_>> {
        let stages: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];
        for (point_cells, exact) in stages {
            if point_cells && !atom {
                continue;
            }
            let hit = self.mu_hat.iter().find(|e| {
                e.cell.is_point() == point_cells
                    && e.cell.contains(x)
                    && match e.s {
                        SKey::At(at) => exact && same_point(at, s),
                        SKey::Finite => !exact && s.is_finite(),
                    }
            });
            if let Some(e) = hit {
                return Ok(match &e.law {
                    CellLaw::Fixed(m) => Law::Measure(m),
                    CellLaw::AffineDirac { slope, intercept } => Law::Dirac(slope * x + intercept),
                });
            }
        }
        match (&self.limit, s.is_finite()) {
            (Some(u), true) => u.value(x).map(Law::Dirac).ok_or_else(|| LabError::IncompleteTriple {
                x,
                s: s.to_string(),
            }),
            _ => Err(LabError::IncompleteTriple { x, s: s.to_string() }),
        }
    }

    /// Points where the ac integrand may fail to be smooth.
    fn x_breaks(&self, kinks: &Kinks<'_>) -> Vec<f64> {
        let mut v = self.sigma.breaks();
        v.extend_from_slice(kinks.x);
        for c in &self.nu_hat.cells {
            if let Cell::Interval([lo, hi]) = c.cell {
                v.extend([lo, hi]);
            }
        }
        let mut affine: Vec<(f64, f64)> = Vec::new();
        for e in &self.mu_hat {
            if let Cell::Interval([lo, hi]) = e.cell {
                v.extend([lo, hi]);
                if let CellLaw::AffineDirac { slope, intercept } = e.law {
                    affine.push((slope, intercept));
                }
            }
        }
        if let Some(u) = &self.limit {
            v.extend(u.breakpoints());
            affine.extend(u.pieces.iter().map(|p| (p.slope, p.intercept)));
        }
        for (slope, intercept) in affine {
            if slope != 0.0 {
                v.extend(kinks.r.iter().map(|r| (r - intercept) / slope));
            }
        }
        v
    }

    fn mu_integral<H>(&self, quad: &Quadrature, kinks: &Kinks<'_>, x: f64, s: ExtPoint, atom: bool, h: &H) -> Result<f64>
    where
        H: Fn(f64, ExtPoint, ExtPoint) -> Result<f64>,
    {
        match self.mu_at(x, s, atom)? {
            Law::Dirac(r) => h(x, ExtPoint::Finite(r), s),
            Law::Measure(m) => m.integrate(quad, kinks.r, SPart::All, |r| h(x, r, s)),
        }
    }

    fn fiber_integral<H>(&self, quad: &Quadrature, kinks: &Kinks<'_>, part: SPart, x: f64, atom: bool, h: &H) -> Result<f64>
    where
        H: Fn(f64, ExtPoint, ExtPoint) -> Result<f64>,
    {
        let fiber = if atom { self.nu_hat.at_point(x) } else { self.nu_hat.at_ac(x) };
        let fiber = fiber.ok_or_else(|| LabError::InvalidMeasure(format!("no nu-hat cell covers x = {x}")))?;
        fiber.integrate(quad, kinks.s, part, |s| self.mu_integral(quad, kinks, x, s, atom, h))
    }

    /// `∫_{Ω̄} ∫ ∫ h(x, r, s) μ̂_{s,x}(dr) ν̂_x(ds) σ(dx)` with `s` restricted to `part`.
    pub fn integrate_fn<H>(&self, quad: &Quadrature, part: SPart, kinks: Kinks<'_>, h: H) -> Result<f64>
    where
        H: Fn(f64, ExtPoint, ExtPoint) -> Result<f64>,
    {
        let breaks = self.x_breaks(&kinks);
        let mut parts = Vec::with_capacity(self.sigma.density.len() + self.sigma.atoms.len());
        let err = RefCell::new(None);
        for seg in &self.sigma.density {
            parts.push(quad.integrate_split(seg.lo, seg.hi, &breaks, |x| {
                let d = seg.density.eval(x);
                match self.fiber_integral(quad, &kinks, part, x, false, &h) {
                    Ok(v) => d * v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            }));
        }
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        for &(x0, w) in &self.sigma.atoms {
            parts.push(w * self.fiber_integral(quad, &kinks, part, x0, true, &h)?);
        }
        Ok(pairwise_sum(&parts))
    }

    /// Structural form of the Dirac identification: every μ̂ entry over finite
    /// `s` on an interval cell is `δ_{u(x)}` for the stored limit `u`.
    pub fn finite_mu_is_dirac_at_limit(&self) -> bool {
        let Some(u) = &self.limit else { return false };
        self.mu_hat.iter().all(|e| {
            let finite_key = match e.s {
                SKey::Finite => true,
                SKey::At(at) => at.is_finite(),
            };
            let Cell::Interval([lo, hi]) = e.cell else { return true };
            if !finite_key {
                return true;
            }
            (0..CELL_SAMPLES).all(|j| {
                let x = lo + (j as f64 + 0.5) * (hi - lo) / CELL_SAMPLES as f64;
                let want = u.value(x);
                match (&e.law, want) {
                    (CellLaw::AffineDirac { slope, intercept }, Some(v)) => {
                        (slope * x + intercept - v).abs() <= LOCATION_TOL
                    }
                    (CellLaw::Fixed(m), Some(v)) => {
                        m.slabs.is_empty() && m.atoms.len() == 1 && same_point(m.atoms[0].0, ExtPoint::Finite(v))
                    }
                    _ => false,
                }
            })
        })
    }

    /// The same triple with every μ̂ replaced by `δ_{u(x)}`.
    pub fn dirac_completion(&self) -> Result<Self> {
        let u = self
            .limit
            .as_ref()
            .ok_or_else(|| LabError::Precondition("Dirac completion needs the limit function".into()))?;
        let mut mu_hat = limit_dirac_entries(u);
        for &(x0, _) in &self.sigma.atoms {
            let v = u
                .value(x0)
                .ok_or(LabError::Domain { x: x0, lo: self.domain[0], hi: self.domain[1] })?;
            if let Some(f) = self.nu_hat.at_point(x0) {
                for (at, _) in f.boundary_atoms() {
                    mu_hat.push(MuEntry {
                        cell: Cell::Point(x0),
                        s: SKey::At(at),
                        law: CellLaw::AffineDirac { slope: 0.0, intercept: v },
                    });
                }
            }
        }
        Ok(Self {
            label: format!("{} (dirac)", self.label),
            mu_hat,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> DmReport {
        self.validate_with(MASS_TOL)
    }

    pub fn validate_with(&self, mass_tol: f64) -> DmReport {
        validate_dm_on(self.domain, &self.sigma, &self.nu_hat, self.p, mass_tol)
    }
}

/// `μ̂_{s,x} = δ_{u(x)}` over finite `s`, one entry per piece of `u`.
pub fn limit_dirac_entries(u: &LimitFunction) -> Vec<MuEntry> {
    u.pieces
        .iter()
        .map(|p| MuEntry {
            cell: Cell::Interval([p.lo, p.hi]),
            s: SKey::Finite,
            law: CellLaw::AffineDirac {
                slope: p.slope,
                intercept: p.intercept,
            },
        })
        .collect()
}

/// `∫∫∫ g(x) f₀(r) ψ₀(s) μ̂ ν̂ σ`.
pub fn integrate_triple(
    triple: &DMTriple,
    g: &GFunction,
    f0: &RingFunction,
    psi0: &RingFunction,
    quad: &Quadrature,
) -> Result<f64> {
    let kinks = Kinks {
        x: g.kinks(),
        r: f0.kinks(),
        s: psi0.kinks(),
    };
    triple.integrate_fn(quad, SPart::All, kinks, |x, r, s| {
        Ok(g.eval(x) * f0.eval_ext(r)? * psi0.eval_ext(s)?)
    })
}

/// Battery values of a triple, in battery order.
pub fn battery_moments(triple: &DMTriple, battery: &TestBattery, quad: &Quadrature) -> Result<Vec<f64>> {
    battery
        .members
        .iter()
        .map(|m| integrate_triple(triple, &m.g, &m.f0, &m.psi0, quad))
        .collect()
}

/// Measure equality by moment matching against a battery.
pub fn moments_match(a: &DMTriple, b: &DMTriple, battery: &TestBattery, tol: f64, quad: &Quadrature) -> Result<bool> {
    let ma = battery_moments(a, battery, quad)?;
    let mb = battery_moments(b, battery, quad)?;
    Ok(ma.iter().zip(&mb).all(|(x, y)| (x - y).abs() <= tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// σ and every fiber are nonnegative.
    Positivity,
    /// Atoms of σ carry fibers without finite mass.
    AtomsBoundaryOnly,
    /// `d_σ(x) ∫_R ν̂_x = (∫ ν̂_x/(1+|s|^p))^{-1} ∫_R ν̂_x` with `∫_R ν̂_x > 0` on cells.
    DensityFormula,
    /// Every fiber has total mass 1.
    Normalization,
    /// Interval cells tile the domain and σ lives on it.
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportItem {
    pub check: Check,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmReport {
    pub items: Vec<ReportItem>,
}

impl DmReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn passed(&self, check: Check) -> bool {
        self.items.iter().filter(|i| i.check == check).all(|i| i.pass)
    }

    pub fn failures(&self) -> Vec<&ReportItem> {
        self.items.iter().filter(|i| !i.pass).collect()
    }
}

fn cell_samples(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..CELL_SAMPLES).map(move |j| lo + (j as f64 + 0.5) * (hi - lo) / CELL_SAMPLES as f64)
}

/// Checks the DiPerna–Majda characterization for `(σ, ν̂)` with exponent `p`.
pub fn validate_dm(sigma: &RadonMeasure, nu_hat: &FiberFamily, p: f64) -> DmReport {
    let lo = nu_hat.intervals().map(|(iv, _)| iv[0]).fold(f64::INFINITY, f64::min);
    let hi = nu_hat.intervals().map(|(iv, _)| iv[1]).fold(f64::NEG_INFINITY, f64::max);
    validate_dm_on([lo, hi], sigma, nu_hat, p, MASS_TOL)
}

/// [`validate_dm`] with a custom mass tolerance.
pub fn validate_dm_with(sigma: &RadonMeasure, nu_hat: &FiberFamily, p: f64, mass_tol: f64) -> DmReport {
    let lo = nu_hat.intervals().map(|(iv, _)| iv[0]).fold(f64::INFINITY, f64::min);
    let hi = nu_hat.intervals().map(|(iv, _)| iv[1]).fold(f64::NEG_INFINITY, f64::max);
    validate_dm_on([lo, hi], sigma, nu_hat, p, mass_tol)
}

fn validate_dm_on(domain: [f64; 2], sigma: &RadonMeasure, nu_hat: &FiberFamily, p: f64, mass_tol: f64) -> DmReport {
    let [a, b] = domain;
    let mut items = Vec::new();
    let mut push = |check, pass, detail: String| items.push(ReportItem { check, pass, detail });

    // positivity
    let mut bad = Vec::new();
    for &(x, w) in &sigma.atoms {
        if !(w > 0.0) {
            bad.push(format!("sigma atom at {x} has weight {w}"));
        }
    }
    for seg in &sigma.density {
        let mut pts: Vec<f64> = cell_samples(seg.lo, seg.hi).collect();
        pts.extend([seg.lo, seg.hi]);
        if let Some(x) = pts.into_iter().find(|&x| seg.density.eval(x) < 0.0) {
            bad.push(format!("sigma density negative at x = {x}"));
        }
    }
    for c in &nu_hat.cells {
        if c.fiber.min_weight() < 0.0 {
            bad.push(format!("fiber on {:?} has weight {}", c.cell, c.fiber.min_weight()));
        }
    }
    push(Check::Positivity, bad.is_empty(), detail(&bad, "sigma and all fibers nonnegative"));

    // atoms of σ must not charge the finite part
    let mut bad = Vec::new();
    for &(x, _) in &sigma.atoms {
        match nu_hat.at_point(x) {
            Some(f) if f.finite_mass().abs() <= mass_tol => {}
            Some(f) => bad.push(format!("atom at {x}: fiber has finite mass {}", f.finite_mass())),
            None => bad.push(format!("atom at {x}: no fiber")),
        }
    }
    push(
        Check::AtomsBoundaryOnly,
        bad.is_empty(),
        detail(&bad, "every sigma atom carries a boundary-only fiber"),
    );

    // density formula on interval cells
    let mut bad = Vec::new();
    for ([lo, hi], fiber) in nu_hat.intervals() {
        let finite = fiber.finite_mass();
        let z = fiber.recip_moment(p);
        for x in cell_samples(lo, hi) {
            let d = sigma.density_at(x);
            if !(finite > 0.0 && z > 0.0) {
                bad.push(format!("x = {x}: fiber has no finite mass"));
                break;
            }
            let lhs = d * finite;
            let rhs = finite / z;
            if (lhs - rhs).abs() > DENSITY_TOL * rhs.abs().max(1.0) {
                bad.push(format!("x = {x}: d_sigma * mass = {lhs}, formula gives {rhs}"));
                break;
            }
        }
    }
    push(
        Check::DensityFormula,
        bad.is_empty(),
        detail(&bad, "density formula holds on every cell"),
    );

    // normalization
    let mut bad = Vec::new();
    for c in &nu_hat.cells {
        let m = c.fiber.total_mass();
        if !((m - 1.0).abs() <= mass_tol) {
            bad.push(format!("fiber on {:?} has mass {m}", c.cell));
        }
    }
    push(Check::Normalization, bad.is_empty(), detail(&bad, "every fiber is a probability"));

    // coverage
    let mut bad = Vec::new();
    if !nu_hat.covers(a, b) {
        bad.push(format!("interval cells do not tile [{a}, {b}]"));
    }
    for &(x, _) in &sigma.atoms {
        if x < a - LOCATION_TOL || x > b + LOCATION_TOL {
            bad.push(format!("sigma atom at {x} outside [{a}, {b}]"));
        }
    }
    for seg in &sigma.density {
        if seg.lo < a - LOCATION_TOL || seg.hi > b + LOCATION_TOL {
            bad.push(format!("density segment [{}, {}] outside the domain", seg.lo, seg.hi));
        }
    }
    push(Check::Coverage, bad.is_empty(), detail(&bad, "cells tile the domain"));

    DmReport { items }
}

fn detail(bad: &[String], ok: &str) -> String {
    if bad.is_empty() {
        ok.to_string()
    } else {
        bad.join("; ")
    }
}

/// Young-measure fiber `ν_x = Z^{-1} ν̂_x/(1+|s|^p)`, `Z = ∫_R ν̂_x/(1+|t|^p)`.
pub fn young_from_dm(fiber: &ExtMeasure, p: f64) -> Result<CompactifiedProbability> {
    if fiber.slabs.iter().any(|s| s.recip_p.is_some()) {
        return Err(LabError::Precondition(
            "fiber already carries a reciprocal weight; apply the map to the original fiber".into(),
        ));
    }
    let z = fiber.recip_moment(p);
    if !(z > 0.0) {
        return Err(LabError::DegenerateFiber(z));
    }
    let atoms = fiber
        .atoms
        .iter()
        .filter_map(|&(at, w)| at.finite().map(|s| (at, w / (1.0 + s.abs().powf(p)) / z)))
        .collect();
    let slabs = fiber
        .slabs
        .iter()
        .map(|s| Slab {
            coef: s.coef / z,
            recip_p: Some(p),
            ..*s
        })
        .collect();
    CompactifiedProbability::new(ExtMeasure { atoms, slabs })
}

/// `sup_x |u'(x) − d_σ(x) ∫ s/(1+|s|^p) ν̂_x(ds)|` over sample points of every
/// interval cell. Boundary mass contributes `±1` per unit weight when `p = 1`
/// and nothing when `p > 1`.
pub fn barycenter_check(triple: &DMTriple) -> Result<f64> {
    let u = triple
        .limit
        .as_ref()
        .ok_or_else(|| LabError::Precondition("barycenter check needs the limit function".into()))?;
    let p = triple.p;
    let mut worst: f64 = 0.0;
    for ([lo, hi], fiber) in triple.nu_hat.intervals() {
        let moment = fiber.integrate_plain(SPart::All, |s| match s {
            ExtPoint::Finite(v) => v / (1.0 + v.abs().powf(p)),
            ExtPoint::PlusInf if p == 1.0 => 1.0,
            ExtPoint::MinusInf if p == 1.0 => -1.0,
            _ => 0.0,
        });
        for x in cell_samples(lo, hi) {
            let Some(du) = u.derivative(x) else { continue };
            let defect = (du - triple.sigma.density_at(x) * moment).abs();
            worst = worst.max(defect);
        }
    }
    Ok(worst)
}

/// Names accepted by [`reference_triple`].
pub const TRIPLE_CATALOG: &[&str] = &[
    "ex_first",
    "down_up_down",
    "fixed_u",
    "ex_simple",
    "ramp",
    "sawtooth",
    "sawtooth(p)",
    "constant",
    "constant(c)",
];

/// Closed-form triples generated by the catalog families.
pub fn reference_triple(name: &str) -> Result<DMTriple> {
    use ExtPoint::{Finite, MinusInf, PlusInf};
    let (base, args) = crate::compactify::parse_call(name).map_err(|_| LabError::UnknownName {
        kind: "triple",
        name: name.to_string(),
    })?;
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    let split_fiber = || ExtMeasure::atoms(vec![(PlusInf, third), (MinusInf, two_thirds)]);
    let boundary = |x0: f64, at: ExtPoint, law: CompactifiedProbability| MuEntry {
        cell: Cell::Point(x0),
        s: SKey::At(at),
        law: CellLaw::Fixed(law.into_measure()),
    };
    let build = |label: &str, domain: [f64; 2], p: f64, sigma: RadonMeasure, nu_hat: FiberFamily, u: LimitFunction, extra: Vec<MuEntry>| {
        let mut mu_hat = limit_dirac_entries(&u);
        mu_hat.extend(extra);
        DMTriple {
            label: label.to_string(),
            domain,
            p,
            role: Role::Primal,
            sigma,
            nu_hat,
            mu_hat,
            limit: Some(u),
        }
    };
    let jump = |at: f64, left: f64, right: f64, a: f64, b: f64| LimitFunction::steps(&[(a, at, left), (at, b, right)]);
    let zero_fiber = |a: f64, b: f64| FiberFamily::constant(a, b, ExtMeasure::dirac(Finite(0.0)));

    let t = match (base.as_str(), args.as_slice()) {
        ("ex_first", []) => build(
            "ex_first",
            [0.0, 2.0],
            1.0,
            RadonMeasure::lebesgue(0.0, 2.0, 1.0).with_atom(1.0, 3.0),
            zero_fiber(0.0, 2.0).with_point(1.0, split_fiber()),
            jump(1.0, 0.0, -1.0, 0.0, 2.0),
            vec![
                boundary(1.0, PlusInf, CompactifiedProbability::uniform(0.0, 1.0)?),
                boundary(1.0, MinusInf, CompactifiedProbability::uniform(-1.0, 1.0)?),
            ],
        ),
        ("down_up_down", []) => build(
            "down_up_down",
            [0.0, 2.0],
            1.0,
            RadonMeasure::lebesgue(0.0, 2.0, 1.0).with_atom(1.0, 3.0),
            zero_fiber(0.0, 2.0).with_point(1.0, split_fiber()),
            jump(1.0, 0.0, -1.0, 0.0, 2.0),
            vec![
                boundary(1.0, PlusInf, CompactifiedProbability::uniform(-1.0, 0.0)?),
                boundary(1.0, MinusInf, CompactifiedProbability::uniform(-1.0, 0.0)?),
            ],
        ),
        ("fixed_u", []) => build(
            "fixed_u",
            [0.0, 2.0],
            1.0,
            RadonMeasure::lebesgue(0.0, 2.0, 1.0).with_atom(1.0, 3.0),
            zero_fiber(0.0, 2.0).with_point(1.0, split_fiber()),
            jump(1.0, 0.0, -1.0, 0.0, 2.0),
            vec![
                boundary(1.0, PlusInf, CompactifiedProbability::dirac(Finite(0.0))),
                boundary(1.0, MinusInf, CompactifiedProbability::dirac(Finite(-1.0))),
            ],
        ),
        ("ex_simple", []) => build(
            "ex_simple",
            [0.0, 2.0],
            1.0,
            RadonMeasure::lebesgue(0.0, 2.0, 1.0).with_atom(1.0, 1.0),
            zero_fiber(0.0, 2.0).with_point(1.0, ExtMeasure::dirac(PlusInf)),
            jump(1.0, 0.0, 1.0, 0.0, 2.0),
            vec![boundary(1.0, PlusInf, CompactifiedProbability::uniform(0.0, 1.0)?)],
        ),
        ("ramp", []) => build(
            "ramp",
            [-1.0, 1.0],
            1.0,
            RadonMeasure::lebesgue(-1.0, 1.0, 1.0).with_atom(0.0, 1.0),
            zero_fiber(-1.0, 1.0).with_point(0.0, ExtMeasure::dirac(PlusInf)),
            jump(0.0, 0.0, 1.0, -1.0, 1.0),
            vec![boundary(0.0, PlusInf, CompactifiedProbability::uniform(0.0, 1.0)?)],
        ),
        // |w_k| = 1, so the same measures serve every exponent
        ("sawtooth", []) | ("sawtooth", [_]) => build(
            &if args.is_empty() { "sawtooth".to_string() } else { name.trim().to_string() },
            [0.0, 1.0],
            args.first().copied().unwrap_or(2.0),
            RadonMeasure::lebesgue(0.0, 1.0, 2.0),
            FiberFamily::constant(0.0, 1.0, ExtMeasure::atoms(vec![(Finite(-1.0), 0.5), (Finite(1.0), 0.5)])),
            LimitFunction::constant(0.0, 1.0, 0.0),
            vec![],
        ),
        ("constant", []) | ("constant", [_]) => {
            let c = args.first().copied().unwrap_or(0.5);
            build(
                &if args.is_empty() { "constant".to_string() } else { name.trim().to_string() },
                [0.0, 1.0],
                1.0,
                RadonMeasure::lebesgue(0.0, 1.0, 1.0),
                zero_fiber(0.0, 1.0),
                LimitFunction::constant(0.0, 1.0, c),
                vec![],
            )
        }
        _ => {
            return Err(LabError::UnknownName {
                kind: "triple",
                name: name.to_string(),
            })
        }
    };
    Ok(t)
}
