//! Rings of bounded continuous functions and the compactifications they induce.
//!
//! Scalar targets use the two-point compactification `R ∪ {±∞}` (or the
//! one-point one); matrix targets use the sphere compactification, where a
//! ring element decomposes as
//! `ψ₀(s) = c + ψ₀₀(s) + ψ₀₁(s/|s|)·|s|^p/(1+|s|^p)` with `ψ₀₀ ∈ C₀`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

/// Radius at which ray convergence of ring functions is smoke-tested.
pub const RAY_TEST_RADIUS: f64 = 1e6;
pub const RAY_TEST_TOL: f64 = 1e-4;

/// A point of the (scalar) compactified line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtPoint {
    Finite(f64),
    PlusInf,
    MinusInf,
    /// The single point at infinity of the one-point compactification.
    Infinity,
}

impl ExtPoint {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtPoint::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtPoint::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for ExtPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtPoint::Finite(v) => write!(f, "{v}"),
            ExtPoint::PlusInf => f.write_str("+inf"),
            ExtPoint::MinusInf => f.write_str("-inf"),
            ExtPoint::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRepr {
    Num(f64),
    Tag(String),
}

impl Serialize for ExtPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtPoint::Finite(v) => ExtRepr::Num(*v),
            other => ExtRepr::Tag(other.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtRepr::deserialize(d)? {
            ExtRepr::Num(v) => Ok(ExtPoint::Finite(v)),
            ExtRepr::Tag(t) => match t.as_str() {
                "+inf" => Ok(ExtPoint::PlusInf),
                "-inf" => Ok(ExtPoint::MinusInf),
                "inf" => Ok(ExtPoint::Infinity),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"+inf\", \"-inf\" or \"inf\", got \"{other}\""
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompactificationKind {
    TwoPoint,
    OnePoint,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compactification {
    pub kind: CompactificationKind,
    pub dimension: usize,
}

impl Compactification {
    pub fn new(kind: CompactificationKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(LabError::Precondition("dimension must be >= 1".into()));
        }
        if kind == CompactificationKind::TwoPoint && dimension != 1 {
            return Err(LabError::KindMismatch(format!(
                "two-point compactification needs a scalar target, got dimension {dimension}"
            )));
        }
        Ok(Self { kind, dimension })
    }

    pub fn two_point() -> Self {
        Self {
            kind: CompactificationKind::TwoPoint,
            dimension: 1,
        }
    }

    /// Boundary points a scalar fiber may charge under this compactification.
    pub fn admits(&self, point: ExtPoint) -> bool {
        match (self.kind, point) {
            (_, ExtPoint::Finite(_)) => true,
            (CompactificationKind::OnePoint, ExtPoint::Infinity) => true,
            (CompactificationKind::OnePoint, _) => false,
            (_, ExtPoint::Infinity) => false,
            _ => self.dimension == 1,
        }
    }
}

/// Direction of approach to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    Plus,
    Minus,
    Unit(Vec<f64>),
}

impl Direction {
    fn as_vector(&self) -> Vec<f64> {
        match self {
            Direction::Plus => vec![1.0],
            Direction::Minus => vec![-1.0],
            Direction::Unit(v) => v.clone(),
        }
    }
}

/// Boundary data of a scalar ring function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    TwoPoint { plus: f64, minus: f64 },
    OnePoint(f64),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Anything with a finite-part evaluator and boundary (recession) data.
pub trait Ring: Send + Sync {
    fn value(&self, s: &[f64]) -> f64;
    fn recession(&self, direction: &Direction) -> Result<f64>;
}

/// A bounded continuous function on R with limits at infinity.
#[derive(Clone)]
pub struct RingFunction {
    name: String,
    finite: ScalarFn,
    boundary: Boundary,
    kinks: Vec<f64>,
    bound: f64,
}

impl fmt::Debug for RingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingFunction")
            .field("name", &self.name)
            .field("boundary", &self.boundary)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl RingFunction {
    pub fn new(
        name: impl Into<String>,
        finite: impl Fn(f64) -> f64 + Send + Sync + 'static,
        boundary: Boundary,
        kinks: Vec<f64>,
        bound: f64,
    ) -> Self {
        Self {
            name: name.into(),
            finite: Arc::new(finite),
            boundary,
            kinks,
            bound,
        }
    }

    pub fn constant(c: f64) -> Self {
        let name = if c == 1.0 { "one".to_string() } else { format!("const({c})") };
        Self::new(name, move |_| c, Boundary::TwoPoint { plus: c, minus: c }, vec![], c.abs())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Declared sup-norm bound.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.finite)(s)
    }

    /// True when the boundary evaluator vanishes (the function lies in C₀).
    pub fn is_c0(&self) -> bool {
        match self.boundary {
            Boundary::TwoPoint { plus, minus } => plus == 0.0 && minus == 0.0,
            Boundary::OnePoint(v) => v == 0.0,
        }
    }

    /// Evaluates at a point of the compactified line.
    pub fn eval_ext(&self, point: ExtPoint) -> Result<f64> {
        match point {
            ExtPoint::Finite(s) => Ok(self.eval(s)),
            ExtPoint::PlusInf => self.recession(&Direction::Plus),
            ExtPoint::MinusInf => self.recession(&Direction::Minus),
            ExtPoint::Infinity => match self.boundary {
                Boundary::OnePoint(v) => Ok(v),
                Boundary::TwoPoint { plus, minus } if plus == minus => Ok(plus),
                Boundary::TwoPoint { .. } => Err(LabError::KindMismatch(format!(
                    "'{}' has distinct limits at +inf and -inf; it has no value at the one-point infinity",
                    self.name
                ))),
            },
        }
    }

    pub fn recession(&self, direction: &Direction) -> Result<f64> {
        let Boundary::TwoPoint { plus, minus } = self.boundary else {
            return Err(LabError::KindMismatch(format!(
                "'{}' is a one-point ring function; directional boundary values are undefined",
                self.name
            )));
        };
        let sign = match direction {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
            Direction::Unit(v) if v.len() == 1 && (v[0].abs() - 1.0).abs() < 1e-12 => v[0],
            Direction::Unit(v) => {
                return Err(LabError::KindMismatch(format!(
                    "scalar ring function '{}' given a {}-dimensional direction",
                    self.name,
                    v.len()
                )))
            }
        };
        Ok(if sign > 0.0 { plus } else { minus })
    }

    /// `s ↦ ψ₀(clamp(s, -radius, radius))`: the faithful bounded version of a
    /// function applied to unbounded-ranged data.
    pub fn clamped(&self, radius: f64) -> Self {
        let inner = self.finite.clone();
        let plus = self.eval(radius);
        let minus = self.eval(-radius);
        let mut kinks: Vec<f64> = self
            .kinks
            .iter()
            .copied()
            .filter(|k| k.abs() < radius)
            .collect();
        kinks.extend([-radius, radius]);
        let bound = plus.abs().max(minus.abs()).max(self.bound);
        Self {
            name: format!("{}@{radius}", self.name),
            finite: Arc::new(move |s| inner(s.clamp(-radius, radius))),
            boundary: Boundary::TwoPoint { plus, minus },
            kinks,
            bound,
        }
    }

    /// Parses a catalog name such as `abs_frac`, `clamp(1)` or `poly_clamped(2)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = parse_call(spec)?;
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(LabError::UnknownName {
                    kind: "ring function",
                    name: format!("{spec} (expected {n} argument(s))"),
                })
            }
        };
        let f = match name.as_str() {
            "one" => {
                want(0)?;
                Self::constant(1.0)
            }
            "zero" => {
                want(0)?;
                Self::new("zero", |_| 0.0, Boundary::TwoPoint { plus: 0.0, minus: 0.0 }, vec![], 0.0)
            }
            "const" => {
                want(1)?;
                Self::constant(args[0])
            }
            "abs_frac" => {
                want(0)?;
                Self::new(
                    "abs_frac",
                    |s: f64| s.abs() / (1.0 + s.abs()),
                    Boundary::TwoPoint { plus: 1.0, minus: 1.0 },
                    vec![0.0],
                    1.0,
                )
            }
            "signed_frac" => {
                want(0)?;
                Self::new(
                    "signed_frac",
                    |s: f64| s / (1.0 + s.abs()),
                    Boundary::TwoPoint { plus: 1.0, minus: -1.0 },
                    vec![0.0],
                    1.0,
                )
            }
            "pow_frac" => {
                want(2)?;
                let (e, p) = (args[0], args[1]);
                if !(e >= 0.0 && e <= p) {
                    return Err(LabError::Precondition(format!(
                        "pow_frac({e},{p}) needs 0 <= e <= p"
                    )));
                }
                let lim = if e == p { 1.0 } else { 0.0 };
                Self::new(
                    spec.trim(),
                    move |s: f64| s.abs().powf(e) / (1.0 + s.abs().powf(p)),
                    Boundary::TwoPoint { plus: lim, minus: lim },
                    vec![0.0],
                    1.0,
                )
            }
            "double_well_frac" => {
                want(1)?;
                let p = args[0];
                if p < 4.0 {
                    return Err(LabError::Precondition(format!(
                        "double_well_frac({p}) is unbounded for p < 4"
                    )));
                }
                let lim = if p == 4.0 { 1.0 } else { 0.0 };
                Self::new(
                    spec.trim(),
                    move |s: f64| {
                        let t = s * s - 1.0;
                        t * t / (1.0 + s.abs().powf(p))
                    },
                    Boundary::TwoPoint { plus: lim, minus: lim },
                    vec![],
                    1.0,
                )
            }
            "sqrt1p_frac" => {
                want(0)?;
                Self::new(
                    "sqrt1p_frac",
                    |s: f64| (1.0 + s * s).sqrt() / (1.0 + s.abs()),
                    Boundary::TwoPoint { plus: 1.0, minus: 1.0 },
                    vec![0.0],
                    1.0,
                )
            }
            "bump" => {
                want(1)?;
                let c = args[0];
                Self::new(
                    spec.trim(),
                    move |s: f64| 1.0 / (1.0 + (s - c) * (s - c)),
                    Boundary::TwoPoint { plus: 0.0, minus: 0.0 },
                    vec![],
                    1.0,
                )
            }
            "clamp" => {
                want(1)?;
                let r = args[0];
                Self::new(
                    spec.trim(),
                    move |s: f64| s.clamp(-r, r),
                    Boundary::TwoPoint { plus: r, minus: -r },
                    vec![-r, r],
                    r,
                )
            }
            "sq_clamp" => {
                want(1)?;
                let r = args[0];
                Self::new(
                    spec.trim(),
                    move |s: f64| {
                        let c = s.clamp(-r, r);
                        c * c
                    },
                    Boundary::TwoPoint { plus: r * r, minus: r * r },
                    vec![-r, r],
                    r * r,
                )
            }
            "poly_clamped" => {
                want(1)?;
                let a = args[0];
                if a < 0.0 {
                    return Err(LabError::Precondition("poly_clamped needs alpha >= 0".into()));
                }
                let minus = if a == 0.0 { 1.0 } else { 0.0 };
                Self::new(
                    spec.trim(),
                    move |s: f64| s.clamp(0.0, 1.0).powf(a),
                    Boundary::TwoPoint { plus: 1.0, minus },
                    vec![0.0, 1.0],
                    1.0,
                )
            }
            "one_point_abs_frac" => {
                want(0)?;
                Self::new(
                    "one_point_abs_frac",
                    |s: f64| s.abs() / (1.0 + s.abs()),
                    Boundary::OnePoint(1.0),
                    vec![0.0],
                    1.0,
                )
            }
            _ => {
                return Err(LabError::UnknownName {
                    kind: "ring function",
                    name: spec.to_string(),
                })
            }
        };
        Ok(f)
    }

    /// Names of every shipped scalar ring function, with representative arguments.
    pub fn catalog() -> Vec<&'static str> {
        vec![
            "one",
            "zero",
            "const(2)",
            "abs_frac",
            "signed_frac",
            "pow_frac(2,2)",
            "pow_frac(1,2)",
            "double_well_frac(4)",
            "sqrt1p_frac",
            "bump(0)",
            "clamp(1)",
            "sq_clamp(1)",
            "poly_clamped(2)",
            "one_point_abs_frac",
        ]
    }
}

impl Ring for RingFunction {
    fn value(&self, s: &[f64]) -> f64 {
        self.eval(s[0])
    }

    fn recession(&self, direction: &Direction) -> Result<f64> {
        RingFunction::recession(self, direction)
    }
}

/// Element of the sphere ring: `c + ψ₀₀(s) + ψ₀₁(s/|s|)·|s|^p/(1+|s|^p)`.
#[derive(Clone)]
pub struct SphereFunction {
    name: String,
    dim: usize,
    p: f64,
    c: f64,
    decaying: VectorFn,
    angular: VectorFn,
}

impl fmt::Debug for SphereFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("p", &self.p)
            .field("c", &self.c)
            .finish()
    }
}

impl SphereFunction {
    /// `decaying` must vanish at infinity; `angular` is a function on the unit sphere.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        p: f64,
        c: f64,
        decaying: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        angular: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            p,
            c,
            decaying: Arc::new(decaying),
            angular: Arc::new(angular),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The constant `c` and `ψ₀₀(0)`; continuity forces `ψ₀(0) = c + ψ₀₀(0)`.
    pub fn decomposition_at_origin(&self) -> (f64, f64) {
        (self.c, (self.decaying)(&vec![0.0; self.dim]))
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let base = self.c + (self.decaying)(s);
        if norm == 0.0 {
            return base;
        }
        let dir: Vec<f64> = s.iter().map(|v| v / norm).collect();
        let np = norm.powf(self.p);
        let weight = if np.is_infinite() { 1.0 } else { np / (1.0 + np) };
        base + (self.angular)(&dir) * weight
    }

    pub fn recession(&self, direction: &Direction) -> Result<f64> {
        let v = direction.as_vector();
        if v.len() != self.dim {
            return Err(LabError::KindMismatch(format!(
                "sphere function '{}' on R^{} given a {}-dimensional direction",
                self.name,
                self.dim,
                v.len()
            )));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(LabError::Precondition(format!("direction has norm {norm}, expected 1")));
        }
        Ok(self.c + (self.angular)(&v))
    }

    /// Catalog of shipped sphere functions on R^dim.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (name, args) = parse_call(spec)?;
        match (name.as_str(), args.as_slice()) {
            ("first_coord", []) => Ok(Self::new(spec, dim, 1.0, 0.0, |_| 0.0, |d| d[0])),
            ("norm_frac", [p]) => {
                let p = *p;
                Ok(Self::new(spec, dim, p, 0.0, |_| 0.0, |_| 1.0))
            }
            ("gauss_plus_first", []) => Ok(Self::new(
                spec,
                dim,
                2.0,
                0.5,
                |s| (-s.iter().map(|v| v * v).sum::<f64>()).exp(),
                |d| d[0] * d[0],
            )),
            _ => Err(LabError::UnknownName {
                kind: "sphere function",
                name: spec.to_string(),
            }),
        }
    }

    pub fn catalog() -> Vec<&'static str> {
        vec!["first_coord", "norm_frac(2)", "gauss_plus_first"]
    }
}

impl Ring for SphereFunction {
    fn value(&self, s: &[f64]) -> f64 {
        self.eval(s)
    }

    fn recession(&self, direction: &Direction) -> Result<f64> {
        SphereFunction::recession(self, direction)
    }
}

/// `ψ(s) = ψ₀(s)(1+|s|^p)`; boundary data of `ψ₀` is retained.
#[derive(Debug, Clone)]
pub struct Lifted<R> {
    base: R,
    p: f64,
}

pub fn lift<R: Ring>(base: R, p: f64) -> Result<Lifted<R>> {
    if !(p >= 1.0) {
        return Err(LabError::Precondition(format!("lift needs p >= 1, got {p}")));
    }
    Ok(Lifted { base, p })
}

impl<R: Ring> Lifted<R> {
    pub fn eval(&self, s: &[f64]) -> f64 {
        self.base.value(s) * (1.0 + growth_norm(s).powf(self.p))
    }

    pub fn base(&self) -> &R {
        &self.base
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn recession(&self, direction: &Direction) -> Result<f64> {
        self.base.recession(direction)
    }
}

fn growth_norm(s: &[f64]) -> f64 {
    s.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest deviation between `ψ₀(t·d)` at `t = 10⁶` and the recession value, over `rays`.
pub fn ray_deviation<R: Ring + ?Sized>(ring: &R, rays: &[Direction]) -> Result<f64> {
    let mut worst = 0.0f64;
    for d in rays {
        let v = d.as_vector();
        let point: Vec<f64> = v.iter().map(|c| c * RAY_TEST_RADIUS).collect();
        worst = worst.max((ring.value(&point) - ring.recession(d)?).abs());
    }
    Ok(worst)
}

/// Equispaced nodes on the unit circle (dim 2) or `{±1}` (dim 1), equal weights.
pub fn sphere_nodes(dim: usize, count: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match dim {
        1 => Ok(vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)]),
        2 if count > 0 => Ok((0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                (vec![t.cos(), t.sin()], 1.0 / count as f64)
            })
            .collect()),
        _ => Err(LabError::Precondition(format!(
            "sphere nodes available for dim 1 and 2 (count > 0), got dim {dim}"
        ))),
    }
}

/// A continuous function on the closed spatial domain.
#[derive(Clone)]
pub struct GFunction {
    name: String,
    f: ScalarFn,
    kinks: Vec<f64>,
}

impl fmt::Debug for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GFunction").field("name", &self.name).finish()
    }
}

impl GFunction {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kinks: Vec<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            kinks,
        }
    }

    pub fn one() -> Self {
        Self::new("one", |_| 1.0, vec![])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = parse_call(spec)?;
        match (name.as_str(), args.as_slice()) {
            ("one", []) => Ok(Self::one()),
            ("x", []) => Ok(Self::new("x", |x| x, vec![])),
            ("x2", []) => Ok(Self::new("x2", |x| x * x, vec![])),
            ("affine", [a, b]) => {
                let (a, b) = (*a, *b);
                Ok(Self::new(spec.trim(), move |x| a * x + b, vec![]))
            }
            ("tent", [c, w]) => {
                let (c, w) = (*c, *w);
                Ok(Self::new(
                    spec.trim(),
                    move |x: f64| (1.0 - (x - c).abs() / w).max(0.0),
                    vec![c - w, c, c + w],
                ))
            }
            _ => Err(LabError::UnknownName {
                kind: "g function",
                name: spec.to_string(),
            }),
        }
    }
}

/// One test triple `(g, f₀, ψ₀)`.
#[derive(Debug, Clone)]
pub struct BatteryMember {
    pub g: GFunction,
    pub f0: RingFunction,
    pub psi0: RingFunction,
}

impl BatteryMember {
    pub fn parse(g: &str, f0: &str, psi0: &str) -> Result<Self> {
        Ok(Self {
            g: GFunction::parse(g)?,
            f0: RingFunction::parse(f0)?,
            psi0: RingFunction::parse(psi0)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TestBattery {
    pub members: Vec<BatteryMember>,
}

impl TestBattery {
    /// The 12-member default battery: `g ∈ {1, x}`, `f₀ ∈ {1, clamp(1), sq_clamp(1)}`,
    /// `ψ₀ ∈ {1, signed_frac}`. It separates every catalog reference triple
    /// on a shared domain (checked in the integration tests).
    pub fn default_battery() -> Self {
        let mut members = Vec::with_capacity(12);
        for g in ["one", "x"] {
            for f0 in ["one", "clamp(1)", "sq_clamp(1)"] {
                for psi0 in ["one", "signed_frac"] {
                    members.push(BatteryMember::parse(g, f0, psi0).expect("catalog names"));
                }
            }
        }
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Splits `name(a, b, ...)` into the name and numeric arguments.
pub fn parse_call(spec: &str) -> Result<(String, Vec<f64>)> {
    let spec = spec.trim();
    let bad = || LabError::UnknownName {
        kind: "function",
        name: spec.to_string(),
    };
    match spec.find('(') {
        None => Ok((spec.to_string(), vec![])),
        Some(open) => {
            if !spec.ends_with(')') {
                return Err(bad());
            }
            let name = spec[..open].trim().to_string();
            let inner = &spec[open + 1..spec.len() - 1];
            let args = inner
                .split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            Ok((name, args))
        }
    }
}
