//! Quasiconvexity toolkit for scalar gradients (`m = n = 1`).
//!
//! Test functions are continuous piecewise-affine on a uniform grid of the
//! unit cell with zero boundary values, so `∇φ` is piecewise constant and
//! `∫ ψ(s₀ + ∇φ)` is an exact finite sum.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::compactify::parse_call;
use crate::error::{LabError, Result};
use crate::quad::pairwise_sum;

pub const DEFAULT_SEED: u64 = 0x5EED;
const LAMINATE_GRID: usize = 400;
const MIN_STEP: f64 = 1e-8;
const MAX_SWEEPS: usize = 5_000;

/// The multistart seed, overridable through `LAB_SEED` (decimal or `0x` hex).
pub fn seed_from_env() -> u64 {
    std::env::var("LAB_SEED")
        .ok()
        .and_then(|v| {
            let v = v.trim();
            match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16).ok(),
                None => v.parse().ok(),
            }
        })
        .unwrap_or(DEFAULT_SEED)
}

/// A full-growth integrand `ψ(s)`.
#[derive(Clone)]
pub struct GrowthFn {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GrowthFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrowthFn({})", self.name)
    }
}

pub const GROWTH_CATALOG: &[&str] = &["double_well", "square", "abs", "linear", "pow(p)", "neg_pow(p)"];

impl GrowthFn {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let (base, args) = parse_call(spec)?;
        let name = spec.trim().to_string();
        Ok(match (base.as_str(), args.as_slice()) {
            ("double_well", []) => Self::new(name, |s| (s * s - 1.0).powi(2)),
            ("square", []) => Self::new(name, |s| s * s),
            ("abs", []) => Self::new(name, f64::abs),
            ("linear", []) => Self::new(name, |s| s),
            ("pow", [p]) if *p >= 1.0 => {
                let p = *p;
                Self::new(name, move |s: f64| s.abs().powf(p))
            }
            ("neg_pow", [p]) if *p >= 1.0 => {
                let p = *p;
                Self::new(name, move |s: f64| -s.abs().powf(p))
            }
            _ => {
                return Err(LabError::UnknownName {
                    kind: "growth function",
                    name,
                })
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    fn checked(&self, s: f64) -> Result<f64> {
        let v = self.eval(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(LabError::Evaluation(format!("{}({s}) = {v}", self.name)))
        }
    }
}

/// A discrete test function: nodal values `φ_1..φ_{N-1}` on the grid `j/N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HatFunction {
    pub n: usize,
    pub nodes: Vec<f64>,
}

impl HatFunction {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            nodes: vec![0.0; n - 1],
        }
    }

    /// Builds `φ` from its element gradients; they must sum to zero.
    pub fn from_gradients(t: &[f64]) -> Self {
        let n = t.len();
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        let nodes = t[..n - 1]
            .iter()
            .map(|g| {
                acc += g * h;
                acc
            })
            .collect();
        Self { n, nodes }
    }

    pub fn gradients(&self) -> Vec<f64> {
        let h = 1.0 / self.n as f64;
        (0..self.n)
            .map(|i| {
                let right = if i + 1 < self.n { self.nodes[i] } else { 0.0 };
                let left = if i > 0 { self.nodes[i - 1] } else { 0.0 };
                (right - left) / h
            })
            .collect()
    }

    /// The same function on the grid refined by a factor of two.
    pub fn refine(&self) -> Self {
        let t = self.gradients();
        Self::from_gradients(&t.iter().flat_map(|&g| [g, g]).collect::<Vec<_>>())
    }
}

/// `(1/|Ω|) ∫_Ω ψ(s₀ + ∇φ)`.
pub fn mean_energy(psi: &GrowthFn, s0: f64, phi: &HatFunction) -> Result<f64> {
    let vals = phi
        .gradients()
        .iter()
        .map(|g| psi.checked(s0 + g))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&vals) / phi.n as f64)
}

/// Coordinate descent over the element gradients `t_i`, moving one node at a
/// time (which shifts mass between the two adjacent elements).
fn descend(psi: &GrowthFn, s0: f64, mut t: Vec<f64>, scale: f64) -> Result<Vec<f64>> {
    let n = t.len();
    let mut step = scale;
    let mut sweeps = 0;
    while step > MIN_STEP && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut improved = false;
        for j in 0..n - 1 {
            let current = psi.checked(s0 + t[j])? + psi.checked(s0 + t[j + 1])?;
            for d in [step, -step] {
                let pair = |d: f64| -> Result<f64> { Ok(psi.checked(s0 + t[j] + d)? + psi.checked(s0 + t[j + 1] - d)?) };
                let mut best = (current, 0.0);
                let mut d = d;
                // keep doubling while the move pays off
                loop {
                    let trial = pair(d)?;
                    if trial < best.0 {
                        best = (trial, d);
                        d *= 2.0;
                    } else {
                        break;
                    }
                }
                if best.1 != 0.0 {
                    t[j] += best.1;
                    t[j + 1] -= best.1;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(t)
}

/// `j` elements at `a`, the rest at the value that keeps the mean gradient zero.
fn laminate(n: usize, j: usize, a: f64) -> Vec<f64> {
    let b = -(j as f64) * a / (n - j) as f64;
    (0..n).map(|i| if i < j { a } else { b }).collect()
}

fn best_laminate(psi: &GrowthFn, s0: f64, n: usize, radius: f64) -> Result<Vec<f64>> {
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for j in 1..n {
        let b_of = |a: f64| -(j as f64) * a / (n - j) as f64;
        for i in 0..=LAMINATE_GRID {
            let a = -radius + 2.0 * radius * i as f64 / LAMINATE_GRID as f64;
            let e = j as f64 * psi.checked(s0 + a)? + (n - j) as f64 * psi.checked(s0 + b_of(a))?;
            if e < best.0 {
                best = (e, laminate(n, j, a));
            }
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub s0: f64,
    pub n: usize,
    pub m: usize,
    pub value: f64,
    /// Index of the start that produced the minimum; `m` is the warm start.
    pub start: usize,
    pub phi: HatFunction,
}

/// Upper bound for the quasiconvex envelope `Qψ(s₀)`: the least discrete
/// energy found over `m` starts on a grid of `n` elements.
///
/// Start 0 is `φ = 0` and start 1 the best two-phase laminate; the rest are
/// random laminates. When `n` is even and `n/2 ≥ 4` the optimum for `n/2` is
/// refined and used as an extra start, and the value never exceeds the
/// coarser one.
pub fn qc_envelope_upper(psi: &GrowthFn, s0: f64, n: usize, m: usize, seed: u64) -> Result<Envelope> {
    if n < 4 {
        return Err(LabError::Precondition(format!("grid needs N >= 4, got {n}")));
    }
    if m < 1 {
        return Err(LabError::Precondition("at least one start is required".into()));
    }
    psi.checked(s0)?;
    let radius = 4.0 * (1.0 + s0.abs());
    let coarse = if n.is_multiple_of(2) && n / 2 >= 4 {
        Some(qc_envelope_upper(psi, s0, n / 2, m, seed)?)
    } else {
        None
    };
    let warm = coarse.as_ref().map(|c| c.phi.refine().gradients());
    let starts: Vec<usize> = (0..m + warm.is_some() as usize).collect();
    let results = starts
        .par_iter()
        .map(|&i| {
            let t0 = match i {
                _ if i == m => warm.clone().unwrap_or_else(|| vec![0.0; n]),
                0 => vec![0.0; n],
                1 => best_laminate(psi, s0, n, radius)?,
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                    let j = rng.gen_range(1..n);
                    let mut t = laminate(n, j, rng.gen_range(-radius..=radius));
                    t.shuffle(&mut rng);
                    t
                }
            };
            let t = descend(psi, s0, t0, 0.5 * (1.0 + s0.abs()))?;
            let phi = HatFunction::from_gradients(&t);
            Ok((mean_energy(psi, s0, &phi)?, phi))
        })
        .collect::<Result<Vec<_>>>()?;
    let (start, (value, phi)) = results
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.total_cmp(&b.0).then(i.cmp(j)))
        .expect("at least one start");
    // summing 2N terms instead of N can round the warm start up by an ulp
    let (value, phi, start) = match coarse {
        Some(c) if c.value < value => (c.value, c.phi.refine(), m),
        _ => (value, phi, start),
    };
    Ok(Envelope {
        s0,
        n,
        m,
        value,
        start,
        phi,
    })
}

pub const WITNESS_MARGIN: f64 = 1e-6;
const WITNESS_GRID: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub phi: HatFunction,
    pub energy: f64,
    pub psi_s0: f64,
}

/// A `φ` with `∫ψ(s₀+∇φ) < ψ(s₀)|Ω| − 10⁻⁶`, if the search finds one.
pub fn qc_witness_search(psi: &GrowthFn, s0: f64, trials: usize, seed: u64) -> Result<Option<Witness>> {
    if trials < 1 {
        return Err(LabError::Precondition("trials must be >= 1".into()));
    }
    let psi_s0 = psi.checked(s0)?;
    let env = qc_envelope_upper(psi, s0, WITNESS_GRID, trials, seed)?;
    Ok((env.value < psi_s0 - WITNESS_MARGIN).then_some(Witness {
        phi: env.phi,
        energy: env.value,
        psi_s0,
    }))
}

pub const BLOWUP_EXPONENT: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqscbRow {
    pub eps: f64,
    /// Smallest `C` covering every test function up to the largest amplitude.
    pub c_required: f64,
    /// Fitted growth exponent of the required `C` in the amplitude.
    pub exponent: f64,
    pub violated: bool,
}

/// Boundary ramps on `D = (−1, 0)`: `φ = A·(1 + x/δ)` on `(−δ, 0)`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    pub widths: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Default for RampSchedule {
    fn default() -> Self {
        Self {
            widths: (0..=12).map(|j| 0.5f64.powi(j)).collect(),
            amplitudes: (0..=12).map(|j| 2f64.powi(j)).collect(),
        }
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Tests `∫_D h̃(∇φ) ≥ −ε∫_D |∇φ|^p − C` for every `ε` in the grid.
pub fn pqscb_test(h: &GrowthFn, p: f64, eps_grid: &[f64], schedule: &RampSchedule) -> Result<Vec<PqscbRow>> {
    let h0 = h.checked(0.0)?;
    eps_grid
        .iter()
        .map(|&eps| {
            let mut running = 0.0f64;
            let mut c_of_a = Vec::with_capacity(schedule.amplitudes.len());
            for &a in &schedule.amplitudes {
                for &d in &schedule.widths {
                    for amp in [a, -a] {
                        let g = amp / d;
                        let lhs = d * h.checked(g)? + (1.0 - d) * h0;
                        running = running.max(-lhs - eps * d * g.abs().powf(p));
                    }
                }
                c_of_a.push(running);
            }
            let half = c_of_a.len() / 2;
            let (xs, ys): (Vec<f64>, Vec<f64>) = schedule.amplitudes[half..]
                .iter()
                .zip(&c_of_a[half..])
                .filter(|(_, c)| **c > 0.0)
                .map(|(a, c)| (a.ln(), c.ln()))
                .unzip();
            let exponent = if xs.len() >= 2 { slope(&xs, &ys) } else { 0.0 };
            Ok(PqscbRow {
                eps,
                c_required: running,
                exponent,
                violated: exponent >= BLOWUP_EXPONENT,
            })
        })
        .collect()
}
