use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gdfractal::attractor::{homogeneous_cloud, inhomogeneous_cloud, orbital_cloud};
use gdfractal::boxdim::{cloud_series, cre, delta_range, estimate_dims};
use gdfractal::document::{load_family, load_system, SystemDocument};
use gdfractal::experiment::{
    continuity_experiment, lower_bound_experiment, verify_dimension_formulas, ExperimentParams,
    ExperimentReport,
};
use gdfractal::export::{cloud_csv, perron_csv, render_pgm, samples_csv, series_csv};
use gdfractal::measure::{sample_measure, sample_mean, ProbabilityScheme};
use gdfractal::separation::check_gdiosc;
use gdfractal::spectral::{build_ratio_matrix, graph_dimension, perron_vector};
use gdfractal::{Error, GdSystem, RatioKind, VertexId};

#[derive(Parser)]
#[command(name = "gdlab", version, about = "Graph-directed fractal laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// System document.
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Clone, Copy, ValueEnum)]
enum CloudKind {
    Homogeneous,
    Orbital,
    Inhomogeneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Formulas,
    Lowerbound,
    Continuity,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a system document.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Graph dimensions s*, s' and the Perron vector at s*.
    Dim {
        #[command(flatten)]
        common: Common,
    },
    /// Point cloud of an attractor.
    Attractor {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "v1")]
        vertex: String,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = CloudKind::Inhomogeneous)]
        kind: CloudKind,
        /// Sample spacing on condensation sets (default epsilon/2).
        #[arg(long)]
        spacing: Option<f64>,
        /// Image width for --format pgm.
        #[arg(long, default_value_t = 512)]
        pixels: usize,
    },
    /// Box-counting series and slopes of an inhomogeneous cloud.
    Boxdim {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "v1")]
        vertex: String,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 2f64.powi(-3))]
        delta_max: f64,
        #[arg(long, default_value_t = 2f64.powi(-10))]
        delta_min: f64,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        #[arg(long, default_value_t = 4)]
        window: usize,
    },
    /// Covering regularity exponent of a condensation set at one scale.
    Cre {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "v1")]
        vertex: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 64)]
        p_grid: usize,
    },
    /// Exact samples from the invariant measure.
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "v1")]
        vertex: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Open set condition with the document's open regions.
    Osc {
        #[command(flatten)]
        common: Common,
    },
    /// Dimension experiments; continuity reads a family document via --system.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: ExperimentKind,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Exponents for the lower-bound experiment.
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.6,0.9")]
        t: Vec<f64>,
        /// Family parameter values for the continuity experiment.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
        n: Vec<i64>,
        /// Record wall-clock time (makes the report nondeterministic).
        #[arg(long)]
        timing: bool,
    },
}

enum Failure {
    Input(Error),
    Numeric(Error),
    Anomaly,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConvergenceFailure(_)
            | Error::BracketFailure(_)
            | Error::InsufficientResolution(_) => Failure::Numeric(e),
            e => Failure::Input(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(Error::Io(e))
    }
}

fn emit(common: &Common, bytes: &[u8]) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json(common: &Common, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("json value");
    text.push('\n');
    emit(common, text.as_bytes())
}

fn vertex(sys: &GdSystem, name: &str) -> Result<VertexId, Failure> {
    sys.vertex_by_name(name)
        .ok_or_else(|| Error::UnknownVertex(name.to_string()).into())
}

fn emit_report(common: &Common, report: &ExperimentReport) -> Result<(), Failure> {
    let mut text = report.to_json();
    text.push('\n');
    emit(common, text.as_bytes())?;
    if report.has_anomaly() {
        return Err(Failure::Anomaly);
    }
    Ok(())
}

fn params_for(sys: &GdSystem, epsilon: Option<f64>, timing: bool) -> ExperimentParams {
    let mut p = match epsilon {
        Some(e) => ExperimentParams::with_epsilon(e),
        None => ExperimentParams::for_dim(sys.dim()),
    };
    p.timing = timing;
    p
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { common } => {
            let text = fs::read_to_string(&common.system)?;
            let doc = SystemDocument::from_json(&text)?;
            let sys = doc.build_unchecked(&Default::default())?;
            let report = sys.validate();
            emit_json(
                &common,
                &json!({
                    "valid": report.is_valid(),
                    "vertices": sys.vertex_count(),
                    "edges": sys.edges().len(),
                    "hash": sys.fingerprint(),
                    "violations": report.violations,
                }),
            )?;
            if !report.is_valid() {
                return Err(Failure::Input(Error::InvalidSystem(report)));
            }
        }
        Command::Dim { common } => {
            let sys = load_system(&common.system)?;
            let upper = graph_dimension(&sys, RatioKind::Upper)?;
            let lower = graph_dimension(&sys, RatioKind::Lower)?;
            let perron = perron_vector(&build_ratio_matrix(&sys, upper.value, RatioKind::Upper)?)?;
            if common.format == Format::Csv {
                return emit(&common, perron_csv(&sys, &perron).as_bytes());
            }
            let names: Vec<&str> = sys.vertices().map(|v| sys.vertex_name(v)).collect();
            emit_json(
                &common,
                &json!({
                    "s_star": upper.value,
                    "s_prime": lower.value,
                    "phi_at_s_star": upper.phi_at_value,
                    "vertices": names,
                    "perron_vector": perron.vector,
                    "perron_residual": perron.residual,
                }),
            )?;
        }
        Command::Attractor {
            common,
            vertex: name,
            epsilon,
            kind,
            spacing,
            pixels,
        } => {
            let sys = load_system(&common.system)?;
            let v = vertex(&sys, &name)?;
            let spacing = spacing.unwrap_or(epsilon / 2.0);
            let cloud = match kind {
                CloudKind::Homogeneous => homogeneous_cloud(&sys, v, epsilon)?,
                CloudKind::Orbital => orbital_cloud(&sys, v, epsilon, spacing)?,
                CloudKind::Inhomogeneous => inhomogeneous_cloud(&sys, v, epsilon, spacing)?,
            };
            match common.format {
                Format::Csv => emit(&common, cloud_csv(&cloud).as_bytes())?,
                Format::Pgm => emit(&common, &render_pgm(&cloud, pixels)?)?,
                Format::Json => {
                    let pts: Vec<&[f64]> = cloud.points.iter().map(|p| &p[..cloud.dim]).collect();
                    emit_json(
                        &common,
                        &json!({"vertex": name, "epsilon": epsilon, "role": cloud.role, "points": pts}),
                    )?
                }
            }
        }
        Command::Boxdim {
            common,
            vertex: name,
            epsilon,
            delta_max,
            delta_min,
            steps,
            window,
        } => {
            let sys = load_system(&common.system)?;
            let v = vertex(&sys, &name)?;
            let deltas = delta_range(delta_max, delta_min, steps)?;
            let eps = epsilon.unwrap_or(delta_min / 2.0);
            let cloud = inhomogeneous_cloud(&sys, v, eps, eps / 2.0)?;
            let series = cloud_series(&cloud, &deltas)?;
            if common.format == Format::Csv {
                return emit(&common, series_csv(&series).as_bytes());
            }
            let est = estimate_dims(&series, window)?;
            emit_json(
                &common,
                &json!({"vertex": name, "epsilon": eps, "series": series, "estimate": est}),
            )?;
        }
        Command::Cre {
            common,
            vertex: name,
            t,
            delta,
            p_grid,
        } => {
            let sys = load_system(&common.system)?;
            let v = vertex(&sys, &name)?;
            let p = cre(sys.condensation(v), sys.dim(), t, delta, p_grid)?;
            if common.format == Format::Csv {
                let text = format!("t,delta,p\n{t:.16e},{delta:.16e},{p:.16e}\n");
                return emit(&common, text.as_bytes());
            }
            emit_json(&common, &json!({"vertex": name, "t": t, "delta": delta, "p": p}))?;
        }
        Command::Measure {
            common,
            vertex: name,
            samples,
            seed,
        } => {
            let sys = load_system(&common.system)?;
            let v = vertex(&sys, &name)?;
            let scheme = sys
                .scheme()
                .cloned()
                .unwrap_or_else(|| ProbabilityScheme::uniform(&sys, 0.2));
            let sample = sample_measure(&sys, &scheme, v, samples, seed)?;
            if common.format == Format::Csv {
                return emit(&common, samples_csv(&sample, sys.dim()).as_bytes());
            }
            let mean = sample_mean(&sample);
            emit_json(
                &common,
                &json!({"vertex": name, "seed": seed, "count": sample.count, "mean": &mean[..sys.dim()]}),
            )?;
        }
        Command::Osc { common } => {
            let sys = load_system(&common.system)?;
            let regions = sys.regions().ok_or_else(|| {
                Error::InvalidParameter("system document has no open_regions".into())
            })?;
            let report = check_gdiosc(&sys, regions)?;
            emit_json(
                &common,
                &json!({"holds": report.holds(), "report": report}),
            )?;
        }
        Command::Experiment {
            common,
            kind,
            epsilon,
            t,
            n,
            timing,
        } => {
            let report = match kind {
                ExperimentKind::Continuity => {
                    let family = load_family(&common.system)?;
                    let first = family.instantiate(n[0])?;
                    continuity_experiment(&family, &n, &params_for(&first, epsilon, timing))?
                }
                ExperimentKind::Formulas => {
                    let sys = load_system(&common.system)?;
                    verify_dimension_formulas(&sys, &params_for(&sys, epsilon, timing))?
                }
                ExperimentKind::Lowerbound => {
                    let sys = load_system(&common.system)?;
                    lower_bound_experiment(&sys, &t, &params_for(&sys, epsilon, timing))?
                }
            };
            emit_report(&common, &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Anomaly) => {
            eprintln!("report contains a numerical-anomaly verdict");
            ExitCode::from(2)
        }
    }
}
