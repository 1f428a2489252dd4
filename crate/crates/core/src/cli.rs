//! The `phasekit` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input or usage error,
//! 3 numerical failure, 4 the input lies outside the domain of the command.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::essential::{self, LmiOptions};
use crate::graphs;
use crate::matrix_io::read_matrix;
use crate::numerics::Tolerances;
use crate::sectorial;
use crate::verify;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "phasekit", version, about = "Phases of semi-sectorial matrices")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TolArgs {
    /// Relative singular value cutoff for rank decisions.
    #[arg(long, global = true)]
    eps_rank: Option<f64>,
    /// Relative eigenvalue floor for semidefiniteness tests.
    #[arg(long, global = true)]
    eps_psd: Option<f64>,
    /// Angle tolerance in radians.
    #[arg(long, global = true)]
    eps_phase: Option<f64>,
    /// Print a plain-text summary with angles in degrees instead of JSON.
    #[arg(long, global = true)]
    degrees: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sectorial class, rank, feasible rotation arc and field angle.
    Classify { matrix: PathBuf },
    /// Phases of a semi-sectorial matrix.
    Phases { matrix: PathBuf },
    /// Essential phase of a real matrix by bisection.
    Essential {
        matrix: PathBuf,
        /// Absolute bisection accuracy.
        #[arg(long, default_value_t = 1e-5)]
        e: f64,
        /// Initial upper end of the bisection bracket.
        #[arg(long)]
        upper: Option<f64>,
        /// Initial lower end of the bisection bracket.
        #[arg(long)]
        lower: Option<f64>,
        /// Seed of the inner solver's random restarts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Directedness report or per-component bounds of a digraph.
    Graph {
        graph: PathBuf,
        /// Whole-graph report (the default).
        #[arg(long, conflicts_with = "blocks")]
        directedness: bool,
        /// Per strongly connected component bounds.
        #[arg(long)]
        blocks: bool,
        /// With --blocks, also bisect each non-root block to this accuracy.
        #[arg(long)]
        bisect: Option<f64>,
    },
    /// Numerical range boundary samples as CSV.
    Nrange {
        matrix: PathBuf,
        /// Number of equally spaced angles, at least 8.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Seeded property suites.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Trials per suite.
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Master seed; trial streams are derived from it.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Emit the reports as JSON.
        #[arg(long)]
        json: bool,
    },
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    use Error::*;
    match err {
        NonSquare { .. }
        | NonFinite
        | BadLine { .. }
        | NonPositiveWeight { .. }
        | DuplicateEdge { .. }
        | Parse(_)
        | InvalidArgument(_)
        | InvalidTolerance(_)
        | DimensionMismatch(_)
        | LengthMismatch(..)
        | InvalidCone { .. }
        | BadPartition { .. } => EXIT_PARSE,
        NotHermitian { .. }
        | ZeroMatrix
        | NotQuasiSectorial
        | NotRotatedHermitian
        | NotSemiSectorial
        | RankDeficientX
        | ZeroCompression
        | RangeConditionViolated { .. }
        | NotQuasiSectorialA
        | NotSemiSectorialB
        | ConditionNotViolated
        | ScaledNotQuasiSectorial
        | NotMMatrix(_)
        | Reducible
        | NoUpperBound
        | NotStronglyConnected
        | NoSpanningTree => EXIT_DOMAIN,
        SearchFailed { .. }
        | MaxIterExceeded { .. }
        | UpperBoundInfeasible(_)
        | InnerSolverFailure { .. }
        | InternalClassificationFailure(_) => EXIT_NUMERIC,
    }
}

/// Runs the command line with `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn tolerances(t: &TolArgs) -> crate::Result<Tolerances> {
    let mut tol = Tolerances::from_env()?;
    if let Some(v) = t.eps_rank {
        tol.eps_rank = v;
    }
    if let Some(v) = t.eps_psd {
        tol.eps_psd = v;
    }
    if let Some(v) = t.eps_phase {
        tol.eps_phase = v;
    }
    tol.validate()?;
    Ok(tol)
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> crate::Result<()> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(out, "{}", round_json(v)).map_err(io_err)
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("write failed: {e}"))
}

/// Rounds every number to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            // -0 prints as -0.0; normalize it.
            let r = if r == 0.0 { 0.0 } else { r };
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn deg(x: f64) -> String {
    format!("{:.6}", x.to_degrees())
}

fn deg_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| deg(x)).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct ClassifyOut {
    kind: sectorial::SectorKind,
    rank: usize,
    rotated_hermitian: bool,
    feasible_arc: sectorial::FeasibleArc,
    field_angle: f64,
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> crate::Result<i32> {
    let tol = tolerances(&cli.tol)?;
    let degrees = cli.tol.degrees;
    match &cli.command {
        Command::Classify { matrix } => {
            let m = read_matrix(matrix)?;
            let cls = sectorial::classify(&m, &tol)?;
            let field_angle = sectorial::field_angle(&m, &tol)?;
            if degrees {
                let arc = match cls.feasible_arc.endpoints() {
                    Some((lo, hi)) => format!("[{}, {}]", deg(lo), deg(hi)),
                    None if cls.feasible_arc.is_empty() => "empty".into(),
                    None => "full".into(),
                };
                writeln!(
                    out,
                    "kind: {:?}\nrank: {}\nfeasible arc (deg): {arc}\nfield angle (deg): {}",
                    cls.kind,
                    cls.rank,
                    deg(field_angle)
                )
                .map_err(io_err)?;
            } else {
                emit(
                    out,
                    &ClassifyOut {
                        kind: cls.kind,
                        rank: cls.rank,
                        rotated_hermitian: cls.rotated_hermitian,
                        feasible_arc: cls.feasible_arc,
                        field_angle,
                    },
                )?;
            }
        }
        Command::Phases { matrix } => {
            let m = read_matrix(matrix)?;
            let p = sectorial::phases(&m, &tol)?;
            if degrees {
                writeln!(
                    out,
                    "phases (deg): [{}]\ncenter (deg): {}",
                    deg_list(&p.phases),
                    deg(p.center)
                )
                .map_err(io_err)?;
            } else {
                emit(out, &p)?;
            }
        }
        Command::Essential {
            matrix,
            e,
            upper,
            lower,
            seed,
        } => {
            let m = essential::as_real(&read_matrix(matrix)?)?;
            let bounds = match (lower, upper) {
                (None, None) => None,
                (lo, Some(hi)) => Some((lo.unwrap_or(0.0), *hi)),
                (Some(lo), None) => {
                    let perron = essential::perron_scaling(&m, &tol).map_err(|_| Error::NoUpperBound)?;
                    Some((*lo, essential::scaled_upper_phase(&m, &perron.d, &tol)?))
                }
            };
            let opts = LmiOptions {
                seed: *seed,
                ..LmiOptions::default()
            };
            let r = essential::essential_phase(&m, *e, bounds, &opts, &tol)?;
            if degrees {
                writeln!(out, "essential phase (deg): {}", deg(r.alpha_star)).map_err(io_err)?;
            } else {
                emit(out, &r)?;
            }
        }
        Command::Graph {
            graph, blocks, bisect, ..
        } => {
            let text = std::fs::read_to_string(graph).map_err(|e| Error::Parse(format!("{}: {e}", graph.display())))?;
            let g = graphs::parse_graph(&text)?;
            let report = if *blocks {
                graphs::component_phase_bounds(&g, *bisect, &tol)?
            } else {
                graphs::directedness(&g, &tol)?
            };
            if degrees {
                match report.phi_ess {
                    Some(p) => writeln!(out, "phi_ess (deg): {}", deg(p)),
                    None => writeln!(out, "phi_ess: undefined (not strongly connected)"),
                }
                .map_err(io_err)?;
                for b in &report.blocks {
                    writeln!(
                        out,
                        "block {} (size {}): phi_ess {} <= bound {} (deg)",
                        b.block,
                        b.size,
                        deg(b.phi_ess),
                        deg(b.upper_bound)
                    )
                    .map_err(io_err)?;
                }
            } else {
                emit(out, &report)?;
            }
        }
        Command::Nrange { matrix, samples } => {
            let m = read_matrix(matrix)?;
            let b = sectorial::nr_boundary(&m, *samples, &tol)?;
            write!(out, "{}", b.to_csv()).map_err(io_err)?;
        }
        Command::Verify {
            suite,
            trials,
            seed,
            json,
        } => {
            let names: Vec<&str> = if suite == "all" {
                verify::SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut reports = Vec::new();
            for name in names {
                let r = verify::run_suite(name, *trials, *seed, &tol).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown suite `{name}`; known: all, {}",
                        verify::SUITES.join(", ")
                    ))
                })?;
                reports.push(r);
            }
            if *json {
                emit(out, &reports)?;
            } else {
                for r in &reports {
                    let status = if r.ok() { "pass" } else { "FAIL" };
                    write!(out, "{status} {}: {}/{} passed", r.suite, r.passed, r.trials).map_err(io_err)?;
                    if let Some(c) = &r.first_failure {
                        write!(out, "; first counterexample at trial {}: {}", c.trial, c.message).map_err(io_err)?;
                    }
                    writeln!(out).map_err(io_err)?;
                }
            }
            if reports.iter().any(|r| !r.ok()) {
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}
