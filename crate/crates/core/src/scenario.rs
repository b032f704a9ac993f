//! Scenario files and the CSV report.
//!
//! A scenario file is JSON:
//!
//! ```json
//! { "tolerance": 1e-3,
//!   "scenarios": [
//!     { "name": "ex_first", "pipeline": "verify", "family": "ex_first", "triple": "ex_first" } ] }
//! ```
//!
//! `family` and `triple` take a catalog name or an inline object. Tolerances
//! set at the top level apply to every scenario unless overridden there.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compactify::{BatteryMember, GFunction, RingFunction, TestBattery};
use crate::error::{LabError, Result};
use crate::families::{builtin, Family, FamilySpec, PiecewiseFamily};
use crate::limits::{empirical_triple_check, limits_agree, Schedule, LIMIT_TOL};
use crate::lsc::{lsc_gap, plessn_condition, verdict, Verdict};
use crate::measures::{reference_triple, DMTriple, MASS_TOL};
use crate::quad::Quadrature;
use crate::quasiconvex::{qc_envelope_upper, GrowthFn};
use crate::represent::{
    dual_marginal_moment, dual_triple, empirical_limit, represent_limit, sequence_dm_moment, simplify_check, Integrand,
};

pub const SCHEMA_LINE: &str = "#schema=1";
pub const DEFAULT_K_MAX: u32 = 14;
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_STARTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Verify,
    Represent,
    Envelope,
    Lsc,
    Dual,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Verify => "verify",
            Pipeline::Represent => "represent",
            Pipeline::Envelope => "envelope",
            Pipeline::Lsc => "lsc",
            Pipeline::Dual => "dual",
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FamilyRef {
    Name(String),
    Inline(FamilySpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TripleRef {
    Name(String),
    Inline(Box<DMTriple>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub pipeline: Pipeline,
    pub family: Option<FamilyRef>,
    pub triple: Option<TripleRef>,
    /// `[g, f0, psi0]` triples; the default battery when absent.
    pub battery: Option<Vec<[String; 3]>>,
    pub p: Option<f64>,
    #[serde(default)]
    pub integrands: Vec<String>,
    pub q: Option<f64>,
    pub psi: Option<String>,
    #[serde(default)]
    pub s0: Vec<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// Expected values, one per `s0` (envelope) or per integrand (lsc).
    pub expected: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub mass_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub tolerance: Option<f64>,
    pub mass_tolerance: Option<f64>,
    pub scenarios: Vec<ScenarioSpec>,
}

/// A parse or resolution failure, located by line or field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(location: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        location: location.into(),
        message: message.to_string(),
    }
}

pub fn parse_scenarios(text: &str) -> std::result::Result<ScenarioFile, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        let path = e.path().to_string();
        let location = if path == "." || path.is_empty() {
            format!("line {} column {}", inner.line(), inner.column())
        } else {
            format!("{path} (line {} column {})", inner.line(), inner.column())
        };
        config_err(location, inner)
    })
}

/// A scenario with every reference resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub pipeline: Pipeline,
    pub family: Option<Family>,
    pub triple: Option<DMTriple>,
    pub battery: TestBattery,
    pub p: Option<f64>,
    pub integrands: Vec<Integrand>,
    pub q: Option<f64>,
    pub psi: Option<GrowthFn>,
    pub s0: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub expected: Option<Vec<f64>>,
    pub tolerance: f64,
    pub mass_tolerance: f64,
}

fn resolve_family(r: &FamilyRef) -> Result<Family> {
    match r {
        FamilyRef::Name(n) => builtin(n),
        FamilyRef::Inline(spec) => PiecewiseFamily::from_spec(spec.clone()).map(Family::from),
    }
}

fn resolve_triple(r: &TripleRef) -> Result<DMTriple> {
    match r {
        TripleRef::Name(n) => reference_triple(n),
        TripleRef::Inline(t) => Ok((**t).clone()),
    }
}

fn resolve_one(file: &ScenarioFile, i: usize, s: &ScenarioSpec) -> std::result::Result<Scenario, ConfigError> {
    let at = |field: &str| format!("scenarios[{i}].{field}");
    let need = |field: &str| config_err(at(field), format!("required by pipeline '{}'", s.pipeline));
    let family = s
        .family
        .as_ref()
        .map(resolve_family)
        .transpose()
        .map_err(|e| config_err(at("family"), e))?;
    let triple = s
        .triple
        .as_ref()
        .map(resolve_triple)
        .transpose()
        .map_err(|e| config_err(at("triple"), e))?;
    let battery = match &s.battery {
        None => TestBattery::default_battery(),
        Some(rows) => TestBattery {
            members: rows
                .iter()
                .enumerate()
                .map(|(j, [g, f0, psi0])| {
                    BatteryMember::parse(g, f0, psi0).map_err(|e| config_err(at(&format!("battery[{j}]")), e))
                })
                .collect::<std::result::Result<_, _>>()?,
        },
    };
    let integrands = s
        .integrands
        .iter()
        .enumerate()
        .map(|(j, h)| Integrand::parse(h).map_err(|e| config_err(at(&format!("integrands[{j}]")), e)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let psi = s
        .psi
        .as_deref()
        .map(GrowthFn::parse)
        .transpose()
        .map_err(|e| config_err(at("psi"), e))?;

    match s.pipeline {
        Pipeline::Verify => {
            family.as_ref().ok_or_else(|| need("family"))?;
            triple.as_ref().ok_or_else(|| need("triple"))?;
        }
        Pipeline::Represent | Pipeline::Dual => {
            family.as_ref().ok_or_else(|| need("family"))?;
            triple.as_ref().ok_or_else(|| need("triple"))?;
            if integrands.is_empty() && s.pipeline == Pipeline::Represent {
                return Err(need("integrands"));
            }
        }
        Pipeline::Lsc => {
            family.as_ref().ok_or_else(|| need("family"))?;
            if integrands.is_empty() {
                return Err(need("integrands"));
            }
        }
        Pipeline::Envelope => {
            psi.as_ref().ok_or_else(|| need("psi"))?;
            if s.s0.is_empty() {
                return Err(need("s0"));
            }
        }
    }
    if let Some(exp) = &s.expected {
        let want = match s.pipeline {
            Pipeline::Envelope => s.s0.len(),
            Pipeline::Lsc => integrands.len(),
            _ => return Err(config_err(at("expected"), "only envelope and lsc scenarios take expected values")),
        };
        if exp.len() != want {
            return Err(config_err(
                at("expected"),
                format!("has {} values, expected {want}", exp.len()),
            ));
        }
    }
    Ok(Scenario {
        name: s.name.clone(),
        pipeline: s.pipeline,
        family,
        triple,
        battery,
        p: s.p,
        integrands,
        q: s.q,
        psi,
        s0: s.s0.clone(),
        n: s.n.unwrap_or(DEFAULT_GRID),
        m: s.m.unwrap_or(DEFAULT_STARTS),
        expected: s.expected.clone(),
        tolerance: s.tolerance.or(file.tolerance).unwrap_or(LIMIT_TOL),
        mass_tolerance: s.mass_tolerance.or(file.mass_tolerance).unwrap_or(MASS_TOL),
    })
}

pub fn resolve(file: &ScenarioFile) -> std::result::Result<Vec<Scenario>, ConfigError> {
    file.scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| resolve_one(file, i, s))
        .collect()
}

pub fn load(path: &Path) -> std::result::Result<Vec<Scenario>, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_err(path.display().to_string(), e))?;
    let file = parse_scenarios(&text).map_err(|e| ConfigError {
        location: format!("{}: {}", path.display(), e.location),
        ..e
    })?;
    resolve(&file)
}

/// Numerical settings shared by a run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub schedule: Schedule,
    pub quad: Quadrature,
    pub seed: u64,
}

impl Settings {
    pub fn new(k_max: u32, quad_order: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            schedule: Schedule::up_to(k_max)?,
            quad: Quadrature::new(quad_order)?,
            seed,
        })
    }
}

/// One CSV line; unused columns stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub pipeline: String,
    pub g: Option<String>,
    pub f0: Option<String>,
    pub psi0: Option<String>,
    pub integrand: Option<String>,
    pub s0: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<f64>,
    pub k: Option<u64>,
    pub i_k: Option<f64>,
    pub limit: Option<f64>,
    pub error_bar: Option<f64>,
    pub predicted: Option<f64>,
    pub oscillation: Option<f64>,
    pub concentration: Option<f64>,
    pub total: Option<f64>,
    pub empirical: Option<f64>,
    pub value: Option<f64>,
    pub gap: Option<f64>,
    pub condition_value: Option<f64>,
    pub verdict: Option<Verdict>,
    pub diverging: Option<bool>,
    pub outside_hypotheses: Option<bool>,
    pub note: Option<String>,
    pub pass: bool,
}

fn base_row(s: &Scenario) -> Row {
    Row {
        scenario: s.name.clone(),
        pipeline: s.pipeline.to_string(),
        ..Row::default()
    }
}

fn family_of(s: &Scenario) -> &Family {
    s.family.as_ref().expect("checked at resolution")
}

fn triple_of(s: &Scenario) -> &DMTriple {
    s.triple.as_ref().expect("checked at resolution")
}

fn run_verify(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    let (family, triple) = (family_of(s), triple_of(s));
    let mut rows = Vec::new();
    let report = triple.validate_with(s.mass_tolerance);
    for item in report.failures() {
        rows.push(Row {
            note: Some(format!("{:?}: {}", item.check, item.detail)),
            pass: false,
            ..base_row(s)
        });
    }
    let p = s.p.unwrap_or(triple.p);
    let check = empirical_triple_check(family, triple, &s.battery, p, &set.schedule, &set.quad, s.tolerance)?;
    rows.extend(check.rows.into_iter().map(|r| Row {
        g: Some(r.g),
        f0: Some(r.f0),
        psi0: Some(r.psi0),
        k: Some(r.k),
        i_k: Some(r.i_k),
        limit: Some(r.limit),
        error_bar: Some(r.error_bar),
        predicted: Some(r.predicted),
        diverging: Some(r.diverging),
        pass: r.pass,
        ..base_row(s)
    }));
    Ok(rows)
}

fn run_represent(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    let (family, triple) = (family_of(s), triple_of(s));
    s.integrands
        .par_iter()
        .map(|h| {
            let d = represent_limit(family, triple, h, &set.quad)?;
            let est = empirical_limit(family, h, &set.schedule, &set.quad)?;
            Ok(Row {
                integrand: Some(h.name.clone()),
                k: Some(set.schedule.k_max()),
                limit: Some(est.value),
                error_bar: Some(est.error_bar),
                oscillation: Some(d.oscillation),
                concentration: Some(d.concentration),
                total: Some(d.total),
                empirical: Some(est.value),
                diverging: Some(est.diverging),
                outside_hypotheses: Some(d.outside_hypotheses),
                note: d.outside_hypotheses.then(|| "outside theorem hypotheses".to_string()),
                pass: limits_agree(&est, d.total, s.tolerance),
                ..base_row(s)
            })
        })
        .collect()
}

fn run_envelope(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    let psi = s.psi.as_ref().expect("checked at resolution");
    s.s0
        .par_iter()
        .enumerate()
        .map(|(j, &s0)| {
            let env = qc_envelope_upper(psi, s0, s.n, s.m, set.seed)?;
            let expected = s.expected.as_ref().map(|e| e[j]);
            let upper_ok = env.value <= psi.eval(s0) + 1e-12;
            let match_ok = expected.is_none_or(|e| (env.value - e).abs() <= s.tolerance);
            Ok(Row {
                psi0: Some(psi.name().to_string()),
                s0: Some(s0),
                n: Some(s.n),
                m: Some(s.m),
                value: Some(env.value),
                predicted: expected,
                note: Some("upper bound".into()),
                pass: upper_ok && match_ok,
                ..base_row(s)
            })
        })
        .collect()
}

fn run_lsc(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    let family = family_of(s);
    s.integrands
        .par_iter()
        .enumerate()
        .map(|(j, h)| {
            let gap = lsc_gap(family, h, &set.schedule, &set.quad)?;
            let condition = s.triple.as_ref().map(|t| plessn_condition(t, h, &set.quad)).transpose()?;
            let tol = s.tolerance.max(3.0 * gap.error_bar);
            let expected = s.expected.as_ref().map(|e| e[j]);
            Ok(Row {
                integrand: Some(h.name.clone()),
                k: Some(set.schedule.k_max()),
                limit: Some(gap.limit),
                error_bar: Some(gap.error_bar),
                value: Some(gap.at_limit),
                gap: Some(gap.gap),
                predicted: expected,
                condition_value: condition,
                verdict: condition.map(|c| verdict(c, gap.gap, tol)),
                diverging: Some(gap.diverging),
                pass: expected.is_none_or(|e| (gap.gap - e).abs() <= tol),
                ..base_row(s)
            })
        })
        .collect()
}

const DUAL_G: [&str; 2] = ["one", "x"];
const DUAL_F0: [&str; 3] = ["one", "clamp(1)", "sq_clamp(1)"];

fn run_dual(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    let (family, triple) = (family_of(s), triple_of(s));
    let q = s.q.unwrap_or_else(|| family.q());
    let dual = dual_triple(family, triple, q, &set.schedule, &set.quad)?;
    let pairs: Vec<(&str, &str)> = DUAL_G.iter().flat_map(|g| DUAL_F0.iter().map(move |f| (*g, *f))).collect();
    let mut rows = pairs
        .par_iter()
        .map(|&(g, f0)| {
            let (gf, ff) = (GFunction::parse(g)?, RingFunction::parse(f0)?);
            let predicted = dual_marginal_moment(&dual, &gf, &ff, &set.quad)?;
            let est = sequence_dm_moment(family, &gf, &ff, q, &set.schedule, &set.quad)?;
            Ok(Row {
                g: Some(g.into()),
                f0: Some(f0.into()),
                q: Some(q),
                k: Some(set.schedule.k_max()),
                limit: Some(est.value),
                error_bar: Some(est.error_bar),
                predicted: Some(predicted),
                diverging: Some(est.diverging),
                pass: limits_agree(&est, predicted, s.tolerance),
                ..base_row(s)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for h in &s.integrands {
        let r = simplify_check(family, triple, h, &set.schedule, &set.quad, s.tolerance)?;
        rows.push(Row {
            integrand: Some(h.name.clone()),
            q: Some(h.q),
            k: Some(set.schedule.k_max()),
            error_bar: Some(r.error_bar),
            total: Some(r.full),
            predicted: Some(r.simplified),
            empirical: Some(r.empirical),
            value: Some(r.difference),
            note: Some("simplify".into()),
            pass: r.pass,
            ..base_row(s)
        });
    }
    Ok(rows)
}

pub fn run_scenario(s: &Scenario, set: &Settings) -> Result<Vec<Row>> {
    match s.pipeline {
        Pipeline::Verify => run_verify(s, set),
        Pipeline::Represent => run_represent(s, set),
        Pipeline::Envelope => run_envelope(s, set),
        Pipeline::Lsc => run_lsc(s, set),
        Pipeline::Dual => run_dual(s, set),
    }
}

/// Runs every scenario, keeping declaration order. Errors name the scenario.
pub fn run_all(scenarios: &[Scenario], set: &Settings) -> std::result::Result<Vec<Vec<Row>>, ConfigError> {
    scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_scenario(s, set).map_err(|e| config_err(format!("scenarios[{i}] ({})", s.name), e)))
        .collect()
}

pub fn write_csv<W: Write>(mut out: W, rows: &[Row]) -> std::result::Result<(), LabError> {
    let io = |e: std::io::Error| LabError::Evaluation(format!("writing CSV: {e}"));
    writeln!(out, "{SCHEMA_LINE}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| LabError::Evaluation(format!("writing CSV: {e}")))?;
    }
    w.flush().map_err(io)
}
