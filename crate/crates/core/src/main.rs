use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dmlab::compactify::RingFunction;
use dmlab::families::{builtin, CATALOG};
use dmlab::lsc::lsc_report;
use dmlab::measures::{reference_triple, TRIPLE_CATALOG};
use dmlab::quasiconvex::{qc_envelope_upper, seed_from_env, GrowthFn, GROWTH_CATALOG};
use dmlab::represent::{Integrand, INTEGRAND_CATALOG};
use dmlab::scenario::{self, Settings, DEFAULT_GRID, DEFAULT_K_MAX, DEFAULT_STARTS, SCHEMA_LINE};

#[derive(Parser)]
#[command(name = "dmlab", version, about = "Numerical laboratory for DiPerna-Majda measures and lower semicontinuity")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Largest schedule exponent: k runs over 2^4..2^EXP.
    #[arg(long, global = true, default_value_t = DEFAULT_K_MAX, value_name = "EXP")]
    k_max: u32,
    /// Gauss-Legendre points per panel.
    #[arg(long, global = true, default_value_t = 8, value_name = "N")]
    quad_order: usize,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// CSV destination (stdout when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a file and write the CSV report.
    Run {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
    },
    /// Upper bounds for the quasiconvex envelope.
    Envelope {
        #[arg(long, default_value = "double_well")]
        psi: String,
        #[arg(long = "s0", required = true, allow_hyphen_values = true)]
        s0: Vec<f64>,
        #[arg(short = 'N', long = "grid", default_value_t = DEFAULT_GRID)]
        n: usize,
        #[arg(short = 'M', long = "starts", default_value_t = DEFAULT_STARTS)]
        m: usize,
    },
    /// Lower semicontinuity gaps and the boundary condition.
    Lsc {
        #[arg(long)]
        family: String,
        #[arg(long)]
        triple: Option<String>,
        #[arg(long = "integrand", required = true)]
        integrands: Vec<String>,
    },
    /// List catalog names.
    Catalog,
}

enum Failure {
    Config(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn config(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_simple<R: Serialize>(path: &Option<PathBuf>, rows: &[R]) -> Result<(), Failure> {
    let mut out = output(path)?;
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(config)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli, settings: &Settings) -> Result<bool, Failure> {
    match &cli.command {
        Command::Run { scenario: path } => {
            let scenarios = scenario::load(path).map_err(config)?;
            let results = scenario::run_all(&scenarios, settings).map_err(config)?;
            let mut all = Vec::new();
            let mut ok = true;
            for (s, rows) in scenarios.iter().zip(results) {
                let passed = rows.iter().filter(|r| r.pass).count();
                ok &= passed == rows.len();
                let status = if passed == rows.len() { "PASS" } else { "FAIL" };
                eprintln!("{status} {} [{}] {passed}/{} rows", s.name, s.pipeline, rows.len());
                all.extend(rows);
            }
            scenario::write_csv(output(&cli.common.out)?, &all).map_err(config)?;
            Ok(ok)
        }
        Command::Envelope { psi, s0, n, m } => {
            #[derive(Serialize)]
            struct Row {
                s0: f64,
                #[serde(rename = "N")]
                n: usize,
                #[serde(rename = "M")]
                m: usize,
                value: f64,
            }
            let psi = GrowthFn::parse(psi).map_err(|e| config(format!("--psi: {e}")))?;
            let rows = s0
                .iter()
                .map(|&s| {
                    qc_envelope_upper(&psi, s, *n, *m, settings.seed).map(|e| Row {
                        s0: s,
                        n: *n,
                        m: *m,
                        value: e.value,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(config)?;
            write_simple(&cli.common.out, &rows)?;
            Ok(true)
        }
        Command::Lsc {
            family,
            triple,
            integrands,
        } => {
            #[derive(Serialize)]
            struct Row {
                scenario: String,
                integrand: String,
                gap: f64,
                condition_value: Option<f64>,
                verdict: Option<String>,
            }
            let fam = builtin(family).map_err(|e| config(format!("--family: {e}")))?;
            let tri = triple
                .as_deref()
                .map(reference_triple)
                .transpose()
                .map_err(|e| config(format!("--triple: {e}")))?;
            let mut rows = Vec::new();
            for name in integrands {
                let h = Integrand::parse(name).map_err(|e| config(format!("--integrand: {e}")))?;
                let (gap, condition, verdict) = match &tri {
                    Some(t) => {
                        let r = lsc_report(&fam, t, &h, &settings.schedule, &settings.quad).map_err(config)?;
                        (r.gap.gap, Some(r.condition), Some(r.verdict.to_string()))
                    }
                    None => {
                        let g = dmlab::lsc::lsc_gap(&fam, &h, &settings.schedule, &settings.quad).map_err(config)?;
                        (g.gap, None, None)
                    }
                };
                rows.push(Row {
                    scenario: family.clone(),
                    integrand: name.clone(),
                    gap,
                    condition_value: condition,
                    verdict,
                });
            }
            write_simple(&cli.common.out, &rows)?;
            Ok(true)
        }
        Command::Catalog => {
            let mut out = output(&cli.common.out)?;
            let rings = RingFunction::catalog();
            let sections: [(&str, &[&str]); 5] = [
                ("families", CATALOG),
                ("triples", TRIPLE_CATALOG),
                ("integrands", INTEGRAND_CATALOG),
                ("growth functions", GROWTH_CATALOG),
                ("ring functions", &rings),
            ];
            for (title, names) in sections {
                writeln!(out, "{title}:")?;
                for n in names {
                    writeln!(out, "  {n}")?;
                }
            }
            out.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match Settings::new(cli.common.k_max, cli.common.quad_order, seed_from_env()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.common.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli, &settings)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
