//! Closed-form test sequences `(u_k, w_k)`.
//!
//! A [`PiecewiseFamily`] is affine in `u` and constant in `w` on every piece;
//! breakpoints are `base + per_k/k` and coefficients are `c0 + c1·k`, so the
//! realization at any `k` is exact up to one rounding per coefficient.
//! A [`ScalingFamily`] is the concentration profile `u_k(x) = k^{n/p-1} w(k x)`
//! (radial when `n > 1`).

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad::{interior_cuts, Quadrature};

/// Largest `k` any realization accepts.
pub const K_GUARD: u64 = 1 << 40;

/// `c0 + c1·k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct KAffine {
    pub c0: f64,
    pub c1: f64,
}

impl KAffine {
    pub const fn new(c0: f64, c1: f64) -> Self {
        Self { c0, c1 }
    }

    pub const fn constant(c0: f64) -> Self {
        Self { c0, c1: 0.0 }
    }

    pub fn at(&self, k: f64) -> f64 {
        self.c0 + self.c1 * k
    }
}

impl From<[f64; 2]> for KAffine {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<KAffine> for [f64; 2] {
    fn from(v: KAffine) -> Self {
        [v.c0, v.c1]
    }
}

/// `base + per_k / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Offset {
    pub base: f64,
    pub per_k: f64,
}

impl Offset {
    pub const fn new(base: f64, per_k: f64) -> Self {
        Self { base, per_k }
    }

    pub fn at(&self, k: f64) -> f64 {
        self.base + self.per_k / k
    }
}

impl From<[f64; 2]> for Offset {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Offset> for [f64; 2] {
    fn from(v: Offset) -> Self {
        [v.base, v.per_k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub start: Offset,
    pub slope: KAffine,
    pub intercept: KAffine,
    pub w: KAffine,
}

/// One realized piece: `u(x) = slope·x + intercept`, `w ≡ w` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
    pub w: f64,
}

impl Piece {
    pub fn u(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Spatial integration geometry of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Interval,
    /// Radial coordinate on the unit ball of R^dim, Jacobian `|S^{dim-1}| r^{dim-1}`.
    Radial { dim: u32 },
}

impl Geometry {
    pub fn weight(&self, r: f64) -> f64 {
        match *self {
            Geometry::Interval => 1.0,
            Geometry::Radial { dim } => sphere_area(dim) * r.powi(dim as i32 - 1),
        }
    }
}

/// Surface area of the unit sphere in R^dim.
pub fn sphere_area(dim: u32) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        n => {
            // |S^{n-1}| = n·π^{n/2}/Γ(n/2+1), via the recursion |S^{n-1}| = 2π/(n-2)·|S^{n-3}|
            2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Realized {
    pub pieces: Vec<Piece>,
    pub geometry: Geometry,
}

impl Realized {
    pub fn sup_abs_u(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.u(p.lo).abs().max(p.u(p.hi).abs()))
            .fold(0.0, f64::max)
    }
}

/// Piecewise-affine limit `u` (jumps allowed between pieces).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPiece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LimitFunction {
    pub pieces: Vec<LimitPiece>,
}

impl LimitFunction {
    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        Self {
            pieces: vec![LimitPiece {
                lo,
                hi,
                slope: 0.0,
                intercept: c,
            }],
        }
    }

    /// Piecewise constant from `(lo, hi, value)` triples.
    pub fn steps(parts: &[(f64, f64, f64)]) -> Self {
        Self {
            pieces: parts
                .iter()
                .map(|&(lo, hi, c)| LimitPiece {
                    lo,
                    hi,
                    slope: 0.0,
                    intercept: c,
                })
                .collect(),
        }
    }

    fn piece_at(&self, x: f64) -> Option<&LimitPiece> {
        self.pieces.iter().find(|p| x >= p.lo && x <= p.hi)
    }

    /// Value with the left-limit convention at jumps.
    pub fn value(&self, x: f64) -> Option<f64> {
        self.piece_at(x).map(|p| p.slope * x + p.intercept)
    }

    /// Absolutely continuous derivative (jump parts ignored).
    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.piece_at(x).map(|p| p.slope)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Pieces(Vec<PieceSpec>),
    /// Triangle wave on `[0, 1]`: slope ±1, period `2/k`, values in `[-1/(2k), 1/(2k)]`.
    Sawtooth,
}

/// Serializable description of a piecewise family (scenario files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub domain: [f64; 2],
    pub pieces: Vec<PieceSpec>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "yes")]
    pub gradient_consistent: bool,
    #[serde(default = "yes")]
    pub continuous: bool,
    pub limit: LimitFunction,
    #[serde(default = "yes")]
    pub uniformly_bounded: bool,
    #[serde(default)]
    pub uniform_limit: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFamily {
    pub name: String,
    pub domain: [f64; 2],
    pub layout: Layout,
    pub p: f64,
    pub q: f64,
    pub gradient_consistent: bool,
    pub continuous: bool,
    pub limit: LimitFunction,
    /// `sup_k ‖u_k‖_∞ < ∞`, hence `{|u_k|^q}` is equi-integrable.
    pub uniformly_bounded: bool,
    /// `u_k → u` uniformly on the closed domain.
    pub uniform_limit: bool,
}

/// Exponent checks applied at construction.
fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(LabError::InvalidFamily(format!(
            "exponents must satisfy p >= 1, q >= 1 (got p = {p}, q = {q})"
        )));
    }
    Ok(())
}

fn check_k(k: u64) -> Result<f64> {
    if k == 0 {
        return Err(LabError::Schedule("k must be >= 1".into()));
    }
    if k > K_GUARD {
        return Err(LabError::Schedule(format!("k = {k} exceeds the overflow guard 2^40")));
    }
    Ok(k as f64)
}

impl PiecewiseFamily {
    pub fn from_spec(spec: FamilySpec) -> Result<Self> {
        check_exponents(spec.p, spec.q)?;
        let fam = Self {
            name: spec.name,
            domain: spec.domain,
            layout: Layout::Pieces(spec.pieces),
            p: spec.p,
            q: spec.q,
            gradient_consistent: spec.gradient_consistent,
            continuous: spec.continuous,
            limit: spec.limit,
            uniformly_bounded: spec.uniformly_bounded,
            uniform_limit: spec.uniform_limit,
        };
        fam.validate(&[16, 1 << 14])?;
        Ok(fam)
    }

    /// Checks the structural invariants at each listed `k`.
    pub fn validate(&self, ks: &[u64]) -> Result<()> {
        let [a, b] = self.domain;
        if !(a < b) {
            return Err(LabError::InvalidFamily(format!("empty domain [{a}, {b}]")));
        }
        if let Layout::Pieces(specs) = &self.layout {
            if specs.is_empty() {
                return Err(LabError::InvalidFamily("no pieces".into()));
            }
            if specs[0].start.per_k != 0.0 || specs[0].start.base != a {
                return Err(LabError::InvalidFamily(
                    "first piece must start at the left end of the domain".into(),
                ));
            }
        }
        for &k in ks {
            let r = self.realize(k)?;
            if let Layout::Pieces(specs) = &self.layout {
                if r.pieces.len() != specs.len() {
                    return Err(LabError::InvalidFamily(format!(
                        "{}: breakpoints not strictly increasing at k = {k}",
                        self.name
                    )));
                }
            }
            for pair in r.pieces.windows(2) {
                if !(pair[0].lo < pair[0].hi) {
                    return Err(LabError::InvalidFamily(format!(
                        "{}: breakpoints not strictly increasing at k = {k}",
                        self.name
                    )));
                }
                if self.continuous {
                    let x = pair[0].hi;
                    let (l, rr) = (pair[0].u(x), pair[1].u(x));
                    if (l - rr).abs() > 1e-9 * (1.0 + l.abs()) {
                        return Err(LabError::InvalidFamily(format!(
                            "{}: u jumps at x = {x} (k = {k}): {l} vs {rr}",
                            self.name
                        )));
                    }
                }
            }
            if self.gradient_consistent {
                for p in &r.pieces {
                    if p.w != p.slope {
                        return Err(LabError::InvalidFamily(format!(
                            "{}: w = {} differs from du/dx = {} on [{}, {}] at k = {k}",
                            self.name, p.w, p.slope, p.lo, p.hi
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn realize(&self, k: u64) -> Result<Realized> {
        let kf = check_k(k)?;
        let [a, b] = self.domain;
        let pieces = match &self.layout {
            Layout::Pieces(specs) => {
                // Small k can push breakpoints outside the domain; they are
                // clamped and the pieces that collapse are dropped.
                let starts: Vec<f64> = specs
                    .iter()
                    .enumerate()
                    .scan(a, |prev, (i, s)| {
                        let x = if i == 0 { a } else { s.start.at(kf).clamp(*prev, b) };
                        *prev = x;
                        Some(x)
                    })
                    .collect();
                let mut out = Vec::with_capacity(specs.len());
                for (i, s) in specs.iter().enumerate() {
                    let lo = starts[i];
                    let hi = starts.get(i + 1).copied().unwrap_or(b);
                    if hi <= lo && !(out.is_empty() && i + 1 == specs.len()) {
                        continue;
                    }
                    out.push(Piece {
                        lo,
                        hi,
                        slope: s.slope.at(kf),
                        intercept: s.intercept.at(kf),
                        w: s.w.at(kf),
                    });
                }
                out
            }
            Layout::Sawtooth => {
                let half = 0.5 / kf;
                (0..k)
                    .map(|j| {
                        let lo = j as f64 / kf;
                        let hi = if j + 1 == k { b } else { (j + 1) as f64 / kf };
                        let (start, slope) = if j % 2 == 0 { (-half, 1.0) } else { (half, -1.0) };
                        Piece {
                            lo,
                            hi,
                            slope,
                            intercept: start - slope * lo,
                            w: slope,
                        }
                    })
                    .collect()
            }
        };
        Ok(Realized {
            pieces,
            geometry: Geometry::Interval,
        })
    }
}

/// `u_k(x) = k^{n/p-1} w(k|x|)` with a piecewise-affine profile `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFamily {
    pub name: String,
    /// Profile nodes `(y, w(y))`: on `[-1, 1]` when `dim = 1`, on `[0, 1]` (radial) otherwise.
    pub profile: Vec<(f64, f64)>,
    pub p: f64,
    pub dim: u32,
}

impl ScalingFamily {
    pub fn new(name: impl Into<String>, profile: Vec<(f64, f64)>, p: f64, dim: u32) -> Result<Self> {
        if !(p > 1.0) {
            return Err(LabError::InvalidFamily(format!("scaling family needs p > 1, got {p}")));
        }
        if dim == 0 {
            return Err(LabError::InvalidFamily("dimension must be >= 1".into()));
        }
        let start = if dim == 1 { -1.0 } else { 0.0 };
        let ok_ends = profile.first().map(|n| n.0) == Some(start)
            && profile.last().map(|n| n.0) == Some(1.0)
            && profile.last().map(|n| n.1) == Some(0.0)
            && (dim > 1 || profile[0].1 == 0.0);
        if !ok_ends || profile.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(LabError::InvalidFamily(
                "profile nodes must increase over the reference interval and vanish at its boundary".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            profile,
            p,
            dim,
        })
    }

    /// Tent profile `1 - |y|`.
    pub fn tent(p: f64, dim: u32) -> Result<Self> {
        let profile = if dim == 1 {
            vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]
        } else {
            vec![(0.0, 1.0), (1.0, 0.0)]
        };
        Self::new(format!("tent(p={p}, n={dim})"), profile, p, dim)
    }

    pub fn geometry(&self) -> Geometry {
        if self.dim == 1 {
            Geometry::Interval
        } else {
            Geometry::Radial { dim: self.dim }
        }
    }

    pub fn domain(&self) -> [f64; 2] {
        if self.dim == 1 {
            [-1.0, 1.0]
        } else {
            [0.0, 1.0]
        }
    }

    /// Sobolev conjugate `p*` in dimension `dim`.
    pub fn p_star(&self) -> f64 {
        sobolev_exponent(self.p, self.dim)
    }

    pub fn realize(&self, k: u64) -> Result<Realized> {
        let kf = check_k(k)?;
        let n = self.dim as f64;
        let amp = kf.powf(n / self.p - 1.0);
        let [a, b] = self.domain();
        let mut pieces = Vec::with_capacity(self.profile.len() + 1);
        let zero = |lo: f64, hi: f64| Piece {
            lo,
            hi,
            slope: 0.0,
            intercept: 0.0,
            w: 0.0,
        };
        if self.dim == 1 && k > 1 {
            pieces.push(zero(a, -1.0 / kf));
        }
        for pair in self.profile.windows(2) {
            let (y0, w0) = pair[0];
            let (y1, w1) = pair[1];
            let slope = amp * kf * (w1 - w0) / (y1 - y0);
            let lo = y0 / kf;
            pieces.push(Piece {
                lo,
                hi: y1 / kf,
                slope,
                intercept: amp * w0 - slope * lo,
                w: slope,
            });
        }
        if k > 1 {
            pieces.push(zero(1.0 / kf, b));
        }
        Ok(Realized {
            pieces,
            geometry: self.geometry(),
        })
    }

    /// Closed-form limit of `∫ h(x, u_k, ∇u_k)` for `h` positively
    /// p-homogeneous in its last argument; `None` when `p < n`.
    pub fn reference_limit<H>(&self, quad: &Quadrature, h: H) -> Option<f64>
    where
        H: Fn(f64, f64, f64) -> f64,
    {
        let n = self.dim as f64;
        if self.p < n {
            return None;
        }
        let keep_u = self.p == n;
        let geom = self.geometry();
        let mut total = 0.0;
        for pair in self.profile.windows(2) {
            let (y0, w0) = pair[0];
            let (y1, w1) = pair[1];
            let d = (w1 - w0) / (y1 - y0);
            total += quad.integrate(y0, y1, |y| {
                let r = if keep_u { w0 + d * (y - y0) } else { 0.0 };
                geom.weight(y.abs()) * h(0.0, r, d)
            });
        }
        Some(total)
    }
}

/// `p* = pn/(n-p)` for `p < n`, `+∞` otherwise.
pub fn sobolev_exponent(p: f64, n: u32) -> f64 {
    let n = n as f64;
    if p < n {
        p * n / (n - p)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Piecewise(PiecewiseFamily),
    Scaling(ScalingFamily),
}

impl From<PiecewiseFamily> for Family {
    fn from(f: PiecewiseFamily) -> Self {
        Family::Piecewise(f)
    }
}

impl From<ScalingFamily> for Family {
    fn from(f: ScalingFamily) -> Self {
        Family::Scaling(f)
    }
}

impl Family {
    pub fn name(&self) -> &str {
        match self {
            Family::Piecewise(f) => &f.name,
            Family::Scaling(f) => &f.name,
        }
    }

    pub fn domain(&self) -> [f64; 2] {
        match self {
            Family::Piecewise(f) => f.domain,
            Family::Scaling(f) => f.domain(),
        }
    }

    pub fn dim(&self) -> u32 {
        match self {
            Family::Piecewise(_) => 1,
            Family::Scaling(f) => f.dim,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            Family::Piecewise(f) => f.p,
            Family::Scaling(f) => f.p,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            Family::Piecewise(f) => f.q,
            Family::Scaling(_) => 1.0,
        }
    }

    pub fn gradient_consistent(&self) -> bool {
        match self {
            Family::Piecewise(f) => f.gradient_consistent,
            Family::Scaling(_) => true,
        }
    }

    pub fn uniformly_bounded(&self) -> bool {
        match self {
            Family::Piecewise(f) => f.uniformly_bounded,
            Family::Scaling(f) => f.p >= f.dim as f64,
        }
    }

    pub fn uniform_limit(&self) -> bool {
        match self {
            Family::Piecewise(f) => f.uniform_limit,
            Family::Scaling(f) => f.p > f.dim as f64,
        }
    }

    /// Weak limit `u` in closed form.
    pub fn limit(&self) -> LimitFunction {
        match self {
            Family::Piecewise(f) => f.limit.clone(),
            Family::Scaling(f) => {
                let [a, b] = f.domain();
                LimitFunction::constant(a, b, 0.0)
            }
        }
    }

    pub fn realize(&self, k: u64) -> Result<Realized> {
        match self {
            Family::Piecewise(f) => f.realize(k),
            Family::Scaling(f) => f.realize(k),
        }
    }

    /// The kink/discontinuity set of `(u_k, w_k)`, domain ends included.
    pub fn breakpoints(&self, k: u64) -> Result<Vec<f64>> {
        let r = self.realize(k)?;
        let mut v: Vec<f64> = Vec::with_capacity(r.pieces.len() + 1);
        for p in &r.pieces {
            v.push(p.lo);
        }
        if let Some(last) = r.pieces.last() {
            v.push(last.hi);
        }
        v.dedup();
        Ok(v)
    }

    /// `(u_k(x), w_k(x))`, left-limit convention at breakpoints.
    pub fn evaluate(&self, k: u64, x: f64) -> Result<(f64, f64)> {
        let [a, b] = self.domain();
        if !(x >= a && x <= b) {
            return Err(LabError::Domain { x, lo: a, hi: b });
        }
        let r = self.realize(k)?;
        let idx = r.pieces.partition_point(|p| p.hi < x).min(r.pieces.len() - 1);
        let p = &r.pieces[idx];
        Ok((p.u(x), p.w))
    }
}

/// Catalog names accepted by [`builtin`].
pub const CATALOG: &[&str] = &[
    "ex_first",
    "down_up_down",
    "fixed_u",
    "ex_simple",
    "ramp",
    "sawtooth",
    "sawtooth(p)",
    "constant",
    "constant(c)",
    "scaling_tent(p)",
    "radial_tent(n,p)",
];

fn spec(start: Offset, slope: KAffine, intercept: KAffine, w: KAffine) -> PieceSpec {
    PieceSpec {
        start,
        slope,
        intercept,
        w,
    }
}

fn flat(start: Offset, value: f64) -> PieceSpec {
    spec(start, KAffine::constant(0.0), KAffine::constant(value), KAffine::constant(0.0))
}

/// Spike piece with `u = s·k·x + (c0 + c1·k)` and `w = s·k`.
fn spike(start: Offset, s: f64, intercept: KAffine) -> PieceSpec {
    spec(start, KAffine::new(0.0, s), intercept, KAffine::new(0.0, s))
}

/// Builds a catalog family by name.
pub fn builtin(name: &str) -> Result<Family> {
    let (base, args) = crate::compactify::parse_call(name).map_err(|_| LabError::UnknownName {
        kind: "family",
        name: name.to_string(),
    })?;
    let unknown = || LabError::UnknownName {
        kind: "family",
        name: name.to_string(),
    };
    let pw = |name: &str, domain: [f64; 2], pieces: Vec<PieceSpec>, limit: LimitFunction| PiecewiseFamily {
        name: name.to_string(),
        domain,
        layout: Layout::Pieces(pieces),
        p: 1.0,
        q: 1.0,
        gradient_consistent: true,
        continuous: true,
        limit,
        uniformly_bounded: true,
        uniform_limit: false,
    };
    let fam = match (base.as_str(), args.as_slice()) {
        ("ex_first", []) => pw(
            "ex_first",
            [0.0, 2.0],
            vec![
                flat(Offset::new(0.0, 0.0), 0.0),
                spike(Offset::new(1.0, -1.0), 1.0, KAffine::new(1.0, -1.0)),
                spike(Offset::new(1.0, 0.0), -2.0, KAffine::new(1.0, 2.0)),
                flat(Offset::new(1.0, 1.0), -1.0),
            ],
            LimitFunction::steps(&[(0.0, 1.0, 0.0), (1.0, 2.0, -1.0)]),
        ),
        ("down_up_down", []) => pw(
            "down_up_down",
            [0.0, 2.0],
            vec![
                flat(Offset::new(0.0, 0.0), 0.0),
                spike(Offset::new(1.0, -2.0), -1.0, KAffine::new(-2.0, 1.0)),
                spike(Offset::new(1.0, -1.0), 1.0, KAffine::new(0.0, -1.0)),
                spike(Offset::new(1.0, 0.0), -1.0, KAffine::new(0.0, 1.0)),
                flat(Offset::new(1.0, 1.0), -1.0),
            ],
            LimitFunction::steps(&[(0.0, 1.0, 0.0), (1.0, 2.0, -1.0)]),
        ),
        ("fixed_u", []) => PiecewiseFamily {
            gradient_consistent: false,
            continuous: false,
            uniform_limit: false,
            ..pw(
                "fixed_u",
                [0.0, 2.0],
                vec![
                    flat(Offset::new(0.0, 0.0), 0.0),
                    spec(
                        Offset::new(1.0, -1.0),
                        KAffine::constant(0.0),
                        KAffine::constant(0.0),
                        KAffine::new(0.0, 1.0),
                    ),
                    spec(
                        Offset::new(1.0, 0.0),
                        KAffine::constant(0.0),
                        KAffine::constant(-1.0),
                        KAffine::new(0.0, -2.0),
                    ),
                    flat(Offset::new(1.0, 1.0), -1.0),
                ],
                LimitFunction::steps(&[(0.0, 1.0, 0.0), (1.0, 2.0, -1.0)]),
            )
        },
        ("ex_simple", []) => pw(
            "ex_simple",
            [0.0, 2.0],
            vec![
                flat(Offset::new(0.0, 0.0), 0.0),
                spike(Offset::new(1.0, -1.0), 1.0, KAffine::new(1.0, -1.0)),
                flat(Offset::new(1.0, 0.0), 1.0),
            ],
            LimitFunction::steps(&[(0.0, 1.0, 0.0), (1.0, 2.0, 1.0)]),
        ),
        ("ramp", []) => pw(
            "ramp",
            [-1.0, 1.0],
            vec![
                flat(Offset::new(-1.0, 0.0), 0.0),
                spike(Offset::new(0.0, 0.0), 1.0, KAffine::constant(0.0)),
                flat(Offset::new(0.0, 1.0), 1.0),
            ],
            LimitFunction::steps(&[(-1.0, 0.0, 0.0), (0.0, 1.0, 1.0)]),
        ),
        ("sawtooth", []) | ("sawtooth", [_]) => PiecewiseFamily {
            name: name.trim().to_string(),
            domain: [0.0, 1.0],
            layout: Layout::Sawtooth,
            p: args.first().copied().unwrap_or(2.0),
            q: 2.0,
            gradient_consistent: true,
            continuous: true,
            limit: LimitFunction::constant(0.0, 1.0, 0.0),
            uniformly_bounded: true,
            uniform_limit: true,
        },
        ("constant", []) | ("constant", [_]) => {
            let c = args.first().copied().unwrap_or(0.5);
            PiecewiseFamily {
                name: if args.is_empty() { "constant".into() } else { name.trim().to_string() },
                uniform_limit: true,
                ..pw(
                    "constant",
                    [0.0, 1.0],
                    vec![flat(Offset::new(0.0, 0.0), c)],
                    LimitFunction::constant(0.0, 1.0, c),
                )
            }
        }
        ("scaling_tent", [p]) => return Ok(Family::Scaling(ScalingFamily::tent(*p, 1)?)),
        ("radial_tent", [n, p]) if *n >= 1.0 && n.fract() == 0.0 => {
            return Ok(Family::Scaling(ScalingFamily::tent(*p, *n as u32)?))
        }
        _ => return Err(unknown()),
    };
    Ok(Family::Piecewise(fam))
}

/// Sup-norm and L^q norm of `u_k`, used by boundedness checks.
pub fn u_norms(family: &Family, k: u64, q: f64, quad: &Quadrature) -> Result<(f64, f64)> {
    let r = family.realize(k)?;
    let sup = r.sup_abs_u();
    let mut parts = Vec::with_capacity(r.pieces.len());
    for p in r.pieces.iter().filter(|p| p.hi > p.lo) {
        let cuts = if p.slope != 0.0 {
            interior_cuts(p.lo, p.hi, &[-p.intercept / p.slope])
        } else {
            vec![]
        };
        parts.push(quad.integrate_split(p.lo, p.hi, &cuts, |x| {
            r.geometry.weight(x) * p.u(x).abs().powf(q)
        }));
    }
    Ok((sup, crate::quad::pairwise_sum(&parts).powf(1.0 / q)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(name: &str) -> Family {
        builtin(name).unwrap()
    }

    #[test]
    fn ex_first_values() {
        let f = fam("ex_first");
        assert_eq!(f.evaluate(4, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(f.evaluate(4, 1.0).unwrap(), (1.0, 4.0));
        assert_eq!(f.evaluate(4, 2.0).unwrap(), (-1.0, 0.0));
    }

    #[test]
    fn first_piece_at_left_end() {
        for name in ["ex_first", "ramp", "sawtooth", "ex_simple", "down_up_down", "constant"] {
            let f = fam(name);
            let a = f.domain()[0];
            let r = f.realize(1).unwrap();
            let (u, w) = f.evaluate(1, a).unwrap();
            assert_eq!(u, r.pieces[0].u(a), "{name}");
            assert_eq!(w, r.pieces[0].w, "{name}");
        }
    }

    #[test]
    fn out_of_domain() {
        let f = fam("ex_first");
        assert!(matches!(f.evaluate(4, 2.5), Err(LabError::Domain { .. })));
        assert!(matches!(f.evaluate(4, -0.1), Err(LabError::Domain { .. })));
    }

    #[test]
    fn catalog_breakpoints() {
        assert_eq!(fam("ex_first").breakpoints(10).unwrap(), vec![0.0, 0.9, 1.0, 1.1, 2.0]);
        assert_eq!(fam("ramp").breakpoints(2).unwrap(), vec![-1.0, 0.0, 0.5, 1.0]);
        assert_eq!(fam("sawtooth").breakpoints(1).unwrap(), vec![0.0, 1.0]);
        assert_eq!(fam("sawtooth").breakpoints(4).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn ex_first_slopes() {
        let r = fam("ex_first").realize(7).unwrap();
        let slopes: Vec<f64> = r.pieces.iter().map(|p| p.w).collect();
        assert_eq!(slopes, vec![0.0, 7.0, -14.0, 0.0]);
    }

    #[test]
    fn sawtooth_shape() {
        let f = fam("sawtooth");
        let r = f.realize(8).unwrap();
        assert!(r.pieces.iter().all(|p| p.w.abs() == 1.0));
        assert!((r.sup_abs_u() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_family() {
        assert!(matches!(builtin("exfirst"), Err(LabError::UnknownName { .. })));
    }

    #[test]
    fn k_guard() {
        let f = fam("ramp");
        assert!(matches!(f.realize((1 << 40) + 1), Err(LabError::Schedule(_))));
        assert!(f.realize(0).is_err());
    }

    #[test]
    fn catalog_invariants_hold_over_schedule() {
        let ks: Vec<u64> = (4..=14).map(|j| 1u64 << j).collect();
        for name in ["ex_first", "down_up_down", "fixed_u", "ex_simple", "ramp", "sawtooth", "constant"] {
            match fam(name) {
                Family::Piecewise(p) => p.validate(&ks).unwrap(),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn continuity_violation_detected() {
        let mut spec = FamilySpec {
            name: "broken".into(),
            domain: [0.0, 1.0],
            pieces: vec![
                flat(Offset::new(0.0, 0.0), 0.0),
                flat(Offset::new(0.5, 0.0), 1.0),
            ],
            p: 1.0,
            q: 1.0,
            gradient_consistent: true,
            continuous: true,
            limit: LimitFunction::constant(0.0, 1.0, 0.0),
            uniformly_bounded: true,
            uniform_limit: false,
        };
        assert!(PiecewiseFamily::from_spec(spec.clone()).is_err());
        spec.continuous = false;
        assert!(PiecewiseFamily::from_spec(spec).is_ok());
    }

    #[test]
    fn scaling_family_support() {
        let f = fam("scaling_tent(2)");
        let r = f.realize(8).unwrap();
        let outside = r.pieces.iter().filter(|p| p.hi <= -0.125 || p.lo >= 0.125);
        for p in outside {
            assert_eq!((p.slope, p.intercept), (0.0, 0.0));
        }
        let (u0, _) = f.evaluate(8, 0.0).unwrap();
        assert!((u0 - 8f64.powf(-0.5)).abs() < 1e-15);
        assert!(ScalingFamily::tent(1.0, 1).is_err());
    }

    #[test]
    fn sobolev_exponent_cases() {
        assert_eq!(sobolev_exponent(2.0, 3), 6.0);
        assert!(sobolev_exponent(2.0, 2).is_infinite());
        assert!(sobolev_exponent(1.0, 1).is_infinite());
    }

    #[test]
    fn sphere_area_values() {
        use std::f64::consts::PI;
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }
}
