//! Acceptance criteria, one line per criterion.
#![allow(clippy::type_complexity)]

mod support;

use std::process::Command;
use std::time::Instant;

use dmlab::compactify::{ExtPoint, GFunction, RingFunction, TestBattery};
use dmlab::families::builtin;
use dmlab::limits::{empirical_triple_check, functional_value, limit_extrapolate, Schedule, LIMIT_TOL};
use dmlab::lsc::lsc_gap;
use dmlab::measures::{
    integrate_triple, reference_triple, validate_dm, young_from_dm, Check, DMTriple, Density, SPart,
};
use dmlab::quad::Quadrature;
use dmlab::quasiconvex::{pqscb_test, qc_envelope_upper, GrowthFn, RampSchedule, DEFAULT_SEED};
use dmlab::represent::Integrand;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

const CONCRETE_TRIPLES: &[&str] = &[
    "ex_first",
    "down_up_down",
    "fixed_u",
    "ex_simple",
    "ramp",
    "sawtooth",
    "sawtooth(4)",
    "constant",
    "constant(-0.25)",
];

fn c1_ex_first() -> Outcome {
    let start = Instant::now();
    let fam = builtin("ex_first").map_err(err)?;
    let triple = reference_triple("ex_first").map_err(err)?;
    let report = empirical_triple_check(
        &fam,
        &triple,
        &TestBattery::default_battery(),
        1.0,
        &Schedule::default(),
        &Quadrature::default(),
        LIMIT_TOL,
    )
    .map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let passed = report.rows.len() - report.failures();
    ensure(
        report.rows.len() == 12 && report.all_pass() && secs < 10.0,
        format!("{passed}/{} battery rows agree, {secs:.3} s", report.rows.len()),
    )
}

fn c2_variant() -> Outcome {
    let fam = builtin("ex_first").map_err(err)?;
    let triple = reference_triple("down_up_down").map_err(err)?;
    let report = empirical_triple_check(
        &fam,
        &triple,
        &TestBattery::default_battery(),
        1.0,
        &Schedule::default(),
        &Quadrature::default(),
        LIMIT_TOL,
    )
    .map_err(err)?;
    ensure(
        report.failures() >= 1,
        format!("{} of {} rows reject the variant triple", report.failures(), report.rows.len()),
    )
}

fn c3_ex_simple() -> Outcome {
    let fam = builtin("ex_simple").map_err(err)?;
    let triple = reference_triple("ex_simple").map_err(err)?;
    let quad = Quadrature::default();
    let psi = RingFunction::parse("abs_frac").map_err(err)?;
    let mut worst: f64 = 0.0;
    for alpha in 0..=3 {
        let f0 = RingFunction::parse(&format!("poly_clamped({alpha})")).map_err(err)?;
        let g = GFunction::parse("tent(1,0.5)").map_err(err)?;
        let est = limit_extrapolate(&fam, &g, &f0, &psi, 1.0, &Schedule::default(), &quad).map_err(err)?;
        let from_triple = integrate_triple(&triple, &g, &f0, &psi, &quad).map_err(err)?;
        let want = support::power_moment(alpha);
        worst = worst.max((est.value - want).abs()).max((from_triple - want).abs());
    }
    ensure(worst <= 1e-3, format!("max |moment - 1/(alpha+1)| = {worst:.2e} over alpha = 0..3"))
}

fn c4_limit0() -> Outcome {
    let fam = builtin("ramp").map_err(err)?;
    let quad = Quadrature::default();
    let g = GFunction::one();
    let f0 = RingFunction::parse("sq_clamp(1)").map_err(err)?;
    let psi = RingFunction::parse("sqrt1p_frac").map_err(err)?;
    let schedule = Schedule::default();
    let est = limit_extrapolate(&fam, &g, &f0, &psi, 1.0, &schedule, &quad).map_err(err)?;
    let k = schedule.k_max();
    let i_k = functional_value(&fam, k, &g, &f0, &psi, 1.0, &quad).map_err(err)?;
    let closed = support::ramp_limit0_term(k);
    ensure(
        (est.value - 4.0 / 3.0).abs() <= 1e-3 && (i_k - closed).abs() <= 1e-12,
        format!("limit {:.9} (error bar {:.1e}), target 4/3", est.value, est.error_bar),
    )
}

fn mutate_unnormalized(t: &mut DMTriple) {
    let f = &mut t.nu_hat.cells[0].fiber;
    *f = f.scaled(1.25);
}

fn mutate_density(t: &mut DMTriple) {
    for seg in &mut t.sigma.density {
        if let Density::Poly { coeffs } = &mut seg.density {
            coeffs.iter_mut().for_each(|c| *c *= 1.5);
        }
    }
}

fn mutate_negative(t: &mut DMTriple) {
    let f = &mut t.nu_hat.cells[0].fiber;
    f.atoms.push((ExtPoint::Finite(7.0), -0.125));
    f.atoms[0].1 += 0.125;
}

fn c5_characterization() -> Outcome {
    let mut valid = 0;
    let mut detected = 0;
    let mut total = 0;
    let mutations: [(fn(&mut DMTriple), Check); 3] = [
        (mutate_unnormalized, Check::Normalization),
        (mutate_density, Check::DensityFormula),
        (mutate_negative, Check::Positivity),
    ];
    for name in CONCRETE_TRIPLES {
        let t = reference_triple(name).map_err(err)?;
        if validate_dm(&t.sigma, &t.nu_hat, t.p).all_pass() {
            valid += 1;
        }
        for (mutate, check) in &mutations {
            let mut m = t.clone();
            mutate(&mut m);
            total += 1;
            if !validate_dm(&m.sigma, &m.nu_hat, m.p).passed(*check) {
                detected += 1;
            }
        }
    }
    ensure(
        valid == CONCRETE_TRIPLES.len() && detected == total,
        format!("{valid}/{} catalog triples valid, {detected}/{total} mutations detected", CONCRETE_TRIPLES.len()),
    )
}

fn c6_young() -> Outcome {
    let quad = Quadrature::default();
    let saw = reference_triple("sawtooth").map_err(err)?;
    let fiber = saw.nu_hat.at_ac(0.5).ok_or("no sawtooth fiber")?;
    let young = young_from_dm(fiber, saw.p).map_err(err)?;
    let mut atoms = young.measure().atoms.clone();
    atoms.sort_by(|a, b| a.0.finite().unwrap_or(0.0).total_cmp(&b.0.finite().unwrap_or(0.0)));
    let exact = atoms == vec![(ExtPoint::Finite(-1.0), 0.5), (ExtPoint::Finite(1.0), 0.5)]
        && young.measure().slabs.is_empty();

    let tests = ["one", "clamp(1)", "signed_frac", "bump(0.5)", "sq_clamp(1)"];
    let mut defect: f64 = 0.0;
    for name in CONCRETE_TRIPLES {
        let t = reference_triple(name).map_err(err)?;
        for ([lo, hi], fiber) in t.nu_hat.intervals() {
            let nu = young_from_dm(fiber, t.p).map_err(err)?;
            for psi_name in tests {
                let psi = RingFunction::parse(psi_name).map_err(err)?;
                let lhs = nu
                    .measure()
                    .integrate(&quad, psi.kinks(), SPart::All, |s| psi.eval_ext(s))
                    .map_err(err)?;
                let weighted = fiber
                    .integrate(&quad, psi.kinks(), SPart::Finite, |s| {
                        let v = s.finite().unwrap_or(0.0);
                        Ok(psi.eval(v) / (1.0 + v.abs().powf(t.p)))
                    })
                    .map_err(err)?;
                let x = 0.5 * (lo + hi);
                defect = defect.max((lhs - t.sigma.density_at(x) * weighted).abs());
            }
        }
    }
    ensure(
        exact && defect < 1e-10,
        format!("sawtooth fiber maps to 1/2(delta_-1 + delta_1): {exact}, moment defect {defect:.1e}"),
    )
}

fn c7_envelope() -> Outcome {
    let psi = GrowthFn::parse("double_well").map_err(err)?;
    let at0 = qc_envelope_upper(&psi, 0.0, 64, 16, DEFAULT_SEED).map_err(err)?.value;
    let ladder = [8, 16, 32, 64]
        .iter()
        .map(|&n| qc_envelope_upper(&psi, 0.0, n, 16, DEFAULT_SEED).map(|e| e.value))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let monotone = ladder.windows(2).all(|w| w[1] <= w[0]);
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let s0 = -2.0 + 0.2 * i as f64;
        let v = qc_envelope_upper(&psi, s0, 64, 16, DEFAULT_SEED).map_err(err)?.value;
        worst = worst.max((v - support::biconjugate(support::double_well, s0, 4.0)).abs());
    }
    ensure(
        (0.0..=0.02).contains(&at0) && monotone && worst <= 0.05,
        format!("Q(0) <= {at0:.2e}, monotone in N: {monotone}, max oracle gap {worst:.2e} at 21 points"),
    )
}

fn c8_pqscb() -> Outcome {
    let schedule = RampSchedule::default();
    let eps = [0.01, 0.1, 0.5, 1.0];
    let pos = pqscb_test(&GrowthFn::parse("pow(2)").map_err(err)?, 2.0, &eps, &schedule).map_err(err)?;
    let neg = pqscb_test(&GrowthFn::parse("neg_pow(2)").map_err(err)?, 2.0, &[0.5], &schedule).map_err(err)?;
    let pos_ok = pos.iter().all(|r| !r.violated);
    ensure(
        pos_ok && neg[0].violated && neg[0].exponent >= 1.2,
        format!(
            "|s|^2 passes all eps: {pos_ok}; -|s|^2 at eps = 0.5: exponent {:.3}, violated {}",
            neg[0].exponent, neg[0].violated
        ),
    )
}

fn c9_lsc() -> Outcome {
    let fam = builtin("sawtooth").map_err(err)?;
    let [a, b] = fam.domain();
    let omega = b - a;
    let quad = Quadrature::default();
    let schedule = Schedule::default();
    let convex = lsc_gap(&fam, &Integrand::parse("s_sq").map_err(err)?, &schedule, &quad).map_err(err)?;
    let well = lsc_gap(&fam, &Integrand::parse("double_well").map_err(err)?, &schedule, &quad).map_err(err)?;
    ensure(
        (convex.gap - omega).abs() <= 1e-3 && (well.gap + omega).abs() <= 1e-3,
        format!("gap(s^2) = {:.6}, gap((s^2-1)^2) = {:.6}, |Omega| = {omega}", convex.gap, well.gap),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let scenario = support::scenario_dir().join("acceptance.scn");
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let out = dir.path().join(format!("jobs{jobs}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_dmlab"))
            .args(["run", "--jobs", jobs, "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(err)?;
        if !status.status.success() {
            return Err(format!(
                "run with --jobs {jobs} exited with {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        outputs.push(std::fs::read(&out).map_err(err)?);
    }
    let lines = outputs[0].iter().filter(|&&b| b == b'\n').count();
    ensure(
        outputs[0] == outputs[1],
        format!("--jobs 1 and --jobs 8 reports byte-identical ({lines} lines): {}", outputs[0] == outputs[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ex_first battery reproduction", c1_ex_first),
        ("variant discrimination", c2_variant),
        ("ex_simple moments", c3_ex_simple),
        ("ramp limit 4/3", c4_limit0),
        ("characterization suite", c5_characterization),
        ("Young-measure consistency", c6_young),
        ("envelope oracle", c7_envelope),
        ("p-qscb verdicts", c8_pqscb),
        ("lsc gaps", c9_lsc),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, msg) = match run() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {tag} {name}: {msg}", i + 1);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
