//! Batch driver: runs verification suites and simulations described by a
//! [`config::RunConfig`] and writes the artifacts into one directory.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use exdyn::models::ModelSpec;
use exdyn::simulate::{
    dual_moment_all, monte_carlo_mean, run, stationary_histogram, Graph, GraphModel, SimulationSummary,
};
use exdyn::verify::{Arithmetic, CheckReport, SectorRange, Witness};
use exdyn::{suite, Rational, Scalar};

pub use config::{parse_config, ArithmeticMode, Command, ConfigError, GraphSource, RunConfig};

/// What a run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<CheckReport>,
    pub files: Vec<PathBuf>,
    pub success: bool,
    /// Human-readable lines for stdout.
    pub log: Vec<String>,
}

fn write(out: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn to_json<S: serde::Serialize>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Runs a model-independent or model-level battery in the requested
/// arithmetic.
fn battery(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    macro_rules! dispatch {
        ($t:ty, $tol:expr) => {{
            let (n, tol) = (cfg.nmax, $tol);
            let spec = cfg.model.as_ref();
            let reports: Vec<CheckReport> = match cfg.command {
                Command::VerifyAlgebra => suite::algebra::<$t>(n, tol)?,
                Command::VerifyDuality => suite::duality::<$t>(spec.unwrap(), n, tol)?,
                Command::VerifyReversibility => suite::reversibility::<$t>(spec.unwrap(), n, tol)?,
                Command::VerifyAll => suite::all::<$t>(spec.unwrap(), n, tol)?,
                _ => unreachable!("not a verification command"),
            };
            reports
        }};
    }
    Ok(match cfg.arithmetic {
        ArithmeticMode::Exact => dispatch!(Rational, 0.0),
        ArithmeticMode::Float { tolerance } => dispatch!(f64, tolerance),
    })
}

#[derive(serde::Serialize)]
struct FailedCheck<'a> {
    check: &'a str,
    model: &'a str,
    witness: Option<&'a Witness>,
}

fn witnesses(reports: &[CheckReport]) -> Vec<FailedCheck<'_>> {
    reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| FailedCheck { check: &r.check, model: &r.model, witness: r.witness.as_ref() })
        .collect()
}

fn finish_reports(out: &Path, mut outcome: Outcome) -> Result<Outcome> {
    write(out, "reports.json", &to_json(&outcome.reports)?, &mut outcome.files)?;
    outcome.success = outcome.reports.iter().all(CheckReport::passed);
    if !outcome.success {
        write(out, "witnesses.json", &to_json(&witnesses(&outcome.reports))?, &mut outcome.files)?;
    }
    outcome.log.extend(outcome.reports.iter().map(|r| r.to_string()));
    Ok(outcome)
}

fn thermalize(cfg: &RunConfig, spec: &ModelSpec) -> Result<(CheckReport, String)> {
    fn table<T: Scalar>(laws: &[exdyn::dist::Pmf<T>]) -> String {
        let mut csv = String::from("sector,k,probability\n");
        for (n, law) in laws.iter().enumerate() {
            for (k, p) in law.iter() {
                let _ = writeln!(csv, "{n},{k},{}", p.render());
            }
        }
        csv
    }
    Ok(match cfg.arithmetic {
        ArithmeticMode::Exact => {
            let (r, laws) = suite::model_thermalization::<Rational>(spec, cfg.nmax, 0.0)?;
            (r, table(&laws))
        }
        ArithmeticMode::Float { tolerance } => {
            let (r, laws) = suite::model_thermalization::<f64>(spec, cfg.nmax, tolerance)?;
            (r, table(&laws))
        }
    })
}

fn load_graph(source: &GraphSource, base: &Path) -> Result<Graph> {
    Ok(match source {
        GraphSource::Path(n) => Graph::path(*n),
        GraphSource::Complete(n) => Graph::complete(*n),
        GraphSource::File(p) => {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            let text = fs::read_to_string(&path).with_context(|| format!("reading graph {}", path.display()))?;
            Graph::parse_edge_list(&text, None).with_context(|| format!("parsing graph {}", path.display()))?
        }
    })
}

fn graph_model(cfg: &RunConfig, spec: &ModelSpec, base: &Path) -> Result<(GraphModel, Vec<u32>)> {
    let graph = load_graph(cfg.graph.as_ref().expect("validated"), base)?;
    let init = cfg.init.clone().expect("validated");
    if init.len() != graph.vertices() {
        bail!("init has {} wealths but the graph has {} vertices", init.len(), graph.vertices());
    }
    let total = init.iter().sum();
    Ok((GraphModel::new(spec, &graph, total)?, init))
}

/// Executes `cfg`, resolving relative graph paths against `base` and
/// writing into `cfg.out`.
pub fn execute(cfg: &RunConfig, base: &Path) -> Result<Outcome> {
    let out = cfg.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outcome = Outcome::default();
    match cfg.command {
        Command::VerifyAlgebra | Command::VerifyDuality | Command::VerifyReversibility | Command::VerifyAll => {
            outcome.reports = battery(cfg)?;
            finish_reports(out, outcome)
        }
        Command::Thermalize => {
            let spec = cfg.model.as_ref().expect("validated");
            let (report, csv) = thermalize(cfg, spec)?;
            write(out, "thermalization.csv", &csv, &mut outcome.files)?;
            outcome.reports.push(report);
            finish_reports(out, outcome)
        }
        Command::Simulate => {
            let spec = cfg.model.as_ref().expect("validated");
            let (model, init) = graph_model(cfg, spec, base)?;
            let traj = run(&model, &init, cfg.tmax, cfg.seed)?;
            let hist = stationary_histogram(&model, &init, cfg.burn_in, cfg.samples, cfg.thin, cfg.seed)?;
            write(out, "trajectory.csv", &traj.to_csv(), &mut outcome.files)?;
            write(out, "histogram.csv", &hist.vertex_csv(), &mut outcome.files)?;
            if let Some(joint) = hist.joint_csv() {
                write(out, "joint_histogram.csv", &joint, &mut outcome.files)?;
            }
            let summary = SimulationSummary::new(&traj, &hist);
            write(out, "summary.json", &to_json(&summary)?, &mut outcome.files)?;
            outcome.log.push(format!(
                "simulated {} events to t={} on {} vertices; {} histogram samples",
                summary.events, cfg.tmax, summary.vertices, summary.histogram_samples
            ));
            outcome.log.extend(hist.warnings.iter().map(|w| format!("warning: {w}")));
            outcome.success = true;
            Ok(outcome)
        }
        Command::DualCheck => {
            let spec = cfg.model.as_ref().expect("validated");
            let (model, init) = graph_model(cfg, spec, base)?;
            let predicted = dual_moment_all(&model, &init, cfg.time)?;
            let simulated = monte_carlo_mean(&model, &init, cfg.time, cfg.replicas, cfg.seed)?;
            let mut csv = String::from("vertex,predicted,monte_carlo,relative_error\n");
            let mut worst: Option<(usize, f64)> = None;
            for (v, (p, m)) in predicted.iter().zip(&simulated).enumerate() {
                let rel = if *p == 0.0 { m.abs() } else { (m - p).abs() / p.abs() };
                let _ = writeln!(csv, "{v},{p},{m},{rel}");
                if rel > cfg.max_relative_error && worst.is_none_or(|(_, w)| rel > w) {
                    worst = Some((v, rel));
                }
            }
            write(out, "dual_check.csv", &csv, &mut outcome.files)?;
            let report = CheckReport::new(
                "dual-moment",
                &spec.to_string(),
                SectorRange { from: 0, to: init.iter().sum() },
                Arithmetic::Float { tolerance: cfg.max_relative_error },
            )
            .with_outcome(
                worst.map(|(v, _)| Witness {
                    location: format!("vertex {v} t={}", cfg.time),
                    lhs: simulated[v].to_string(),
                    rhs: predicted[v].to_string(),
                }),
                Vec::new(),
            )
            .with_detail(format!("{} replicas, seed {}", cfg.replicas, cfg.seed));
            outcome.reports.push(report);
            finish_reports(out, outcome)
        }
    }
}
