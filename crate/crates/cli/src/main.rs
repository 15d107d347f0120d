//! `normforge`: command-line access to the norm laboratory.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a mathematical
//! check fails or a characterization returns a violation verdict.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use normforge::characterize::{characterize, CharacterizeConfig};
use normforge::schatten::SchattenDiag;
use normforge::seqcore::{Exponent, FiniteSequence, KyFanNorm, LpNorm, NormOracle};

use commands::{CharacterizeRow, MatrixKind, Shape, MAX_MATRIX_DIM, MAX_RV_N};
use output::{write_json, write_rows, Format};

const EXIT_USAGE: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for --{flag}: {reason}")]
    Usage { flag: &'static str, reason: String },
    #[error(transparent)]
    Lab(#[from] normforge::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn usage(flag: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Usage {
        flag,
        reason: reason.into(),
    }
}

#[derive(Debug, Parser)]
#[command(name = "normforge", version, about = "Multiplicative symmetric norm laboratory")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file holding the input sequence as an array of numbers.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Empirical rates of x^{⊗n} against the rate-function limit.
    Rate {
        /// Sequence, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Thresholds t: a list `a,b,c` or `start:end:count`.
        #[arg(long = "t-grid", allow_hyphen_values = true)]
        t_grid: String,
        /// Tensor powers n, comma separated.
        #[arg(long, default_value = "10,100")]
        n: String,
    },
    /// Lower and staircase upper bounds around ‖x‖_p.
    Sandwich {
        /// Sequence, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Finite exponent p >= 1.
        #[arg(long)]
        p: String,
        /// Staircase spacing.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Number of thresholds for the lower-bound search.
        #[arg(long = "t-grid", default_value_t = 200)]
        t_grid: usize,
        /// Tensor powers n, comma separated.
        #[arg(long, default_value = "1,10,100")]
        n: String,
    },
    /// Classify a norm oracle as l_p or report a violation.
    Characterize {
        /// One of lp:<p>, kyfan:<k>, schatten-diag:<p>.
        #[arg(long)]
        norm: String,
        /// Random samples per sampling phase.
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Multiplicativity and unitary invariance of Schatten norms.
    SchattenCheck {
        /// Shape of A and optionally B: `4`, `3x2` or `3x2,2x5`.
        #[arg(long, default_value = "4")]
        sizes: String,
        /// Exponents, comma separated (`inf` allowed).
        #[arg(long, default_value = "1,2,inf")]
        p: String,
        /// Number of random draws of A, B and the orthogonal factors.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Matrix family to draw from.
        #[arg(long, value_enum, default_value_t = MatrixKind::Random)]
        kind: MatrixKind,
    },
    /// Bernoulli semigroup and L_p norm identities.
    RvCheck {
        /// Largest n and m of the Bernoulli variables B_n, B_m.
        #[arg(long = "n-max", default_value_t = 10)]
        n_max: u64,
        /// Exponents, comma separated (`inf` allowed).
        #[arg(long, default_value = "1,2,3")]
        p: String,
    },
}

fn parse_f64(flag: &'static str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| usage(flag, format!("`{s}` is not a number")))?;
    if v.is_nan() {
        return Err(usage(flag, "NaN is not allowed"));
    }
    Ok(v)
}

fn parse_list<T>(
    flag: &'static str,
    s: &str,
    item: impl Fn(&str) -> Result<T, CliError>,
) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(usage(flag, "list is empty"));
    }
    Ok(items)
}

fn parse_exponent(flag: &'static str, s: &str) -> Result<Exponent, CliError> {
    s.trim()
        .parse::<Exponent>()
        .map_err(|_| usage(flag, format!("`{s}` is not an exponent p >= 1 or inf")))
}

fn parse_ns(s: &str) -> Result<Vec<usize>, CliError> {
    parse_list("n", s, |v| match v.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(usage("n", format!("`{v}` is not a positive integer"))),
    })
}

fn parse_t_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let ts = match parts.as_slice() {
        [start, end, count] => {
            let (a, b) = (parse_f64("t-grid", start)?, parse_f64("t-grid", end)?);
            let count: usize = count
                .trim()
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| usage("t-grid", "count must be a positive integer"))?;
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(usage("t-grid", "need finite start <= end"));
            }
            normforge::rate_function::uniform_grid(a, b, count)
        }
        [_] => parse_list("t-grid", s, |v| parse_f64("t-grid", v))?,
        _ => return Err(usage("t-grid", "expected a list or start:end:count")),
    };
    Ok(ts)
}

fn parse_shape(s: &str) -> Result<Shape, CliError> {
    let dims: Vec<&str> = s.trim().split('x').collect();
    let dim = |d: &str| match d.trim().parse::<usize>() {
        Ok(v) if (1..=MAX_MATRIX_DIM).contains(&v) => Ok(v),
        _ => Err(usage(
            "sizes",
            format!("`{d}` is not a dimension between 1 and {MAX_MATRIX_DIM}"),
        )),
    };
    match dims.as_slice() {
        [n] => {
            let n = dim(n)?;
            Ok(Shape { rows: n, cols: n })
        }
        [r, c] => Ok(Shape {
            rows: dim(r)?,
            cols: dim(c)?,
        }),
        _ => Err(usage("sizes", format!("`{s}` is not of the form n or rxc"))),
    }
}

fn parse_sizes(s: &str) -> Result<(Shape, Shape), CliError> {
    let shapes = parse_list("sizes", s, parse_shape)?;
    match shapes.as_slice() {
        [a] => Ok((*a, *a)),
        [a, b] => Ok((*a, *b)),
        _ => Err(usage("sizes", "give one or two shapes")),
    }
}

fn parse_selector(s: &str) -> Result<Box<dyn NormOracle>, CliError> {
    let (family, arg) = s
        .split_once(':')
        .ok_or_else(|| usage("norm", format!("`{s}` is not of the form family:param")))?;
    match family {
        "lp" => Ok(Box::new(LpNorm(parse_exponent("norm", arg)?))),
        "schatten-diag" => Ok(Box::new(SchattenDiag(parse_exponent("norm", arg)?))),
        "kyfan" => {
            let k: usize = arg
                .trim()
                .parse()
                .map_err(|_| usage("norm", format!("`{arg}` is not a positive integer")))?;
            Ok(Box::new(
                KyFanNorm::new(k).map_err(|e| usage("norm", e.to_string()))?,
            ))
        }
        other => Err(usage(
            "norm",
            format!("unknown family `{other}` (expected lp, kyfan or schatten-diag)"),
        )),
    }
}

/// Inline `--x` wins over `--input`, with a warning.
fn load_sequence(inline: Option<&str>, input: Option<&PathBuf>) -> Result<FiniteSequence, CliError> {
    let coords = match (inline, input) {
        (Some(x), other) => {
            if other.is_some() {
                eprintln!("warning: both --x and --input given; using --x");
            }
            parse_list("x", x, |v| parse_f64("x", v))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage("input", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Vec<f64>>(&text)
                .map_err(|e| usage("input", format!("expected a JSON array of numbers: {e}")))?
        }
        (None, None) => return Err(usage("x", "a sequence is required (--x or --input)")),
    };
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(usage("x", "coordinates must be finite"));
    }
    let x = FiniteSequence::new(coords);
    if x.is_zero() {
        return Err(usage("x", "sequence has no nonzero coordinate"));
    }
    Ok(x)
}

enum Plan {
    Rate {
        x: FiniteSequence,
        ts: Vec<f64>,
        ns: Vec<usize>,
    },
    Sandwich {
        x: FiniteSequence,
        p: f64,
        epsilon: f64,
        t_grid: usize,
        ns: Vec<usize>,
    },
    Characterize {
        oracle: Box<dyn NormOracle>,
        config: CharacterizeConfig,
    },
    SchattenCheck {
        shapes: (Shape, Shape),
        ps: Vec<Exponent>,
        trials: usize,
        kind: MatrixKind,
    },
    RvCheck {
        n_max: u64,
        ps: Vec<Exponent>,
    },
}

/// Validate every parameter before any computation starts.
fn plan(cli: &Cli) -> Result<Plan, CliError> {
    Ok(match &cli.command {
        Command::Rate { x, t_grid, n } => Plan::Rate {
            x: load_sequence(x.as_deref(), cli.input.as_ref())?,
            ts: parse_t_grid(t_grid)?,
            ns: parse_ns(n)?,
        },
        Command::Sandwich {
            x,
            p,
            epsilon,
            t_grid,
            n,
        } => {
            let p = match parse_exponent("p", p)? {
                Exponent::Finite(p) => p,
                Exponent::Infinity => return Err(usage("p", "sandwich bounds need a finite p")),
            };
            if !(epsilon.is_finite() && *epsilon > 0.0) {
                return Err(usage("epsilon", "must be a positive number"));
            }
            if *t_grid == 0 {
                return Err(usage("t-grid", "need at least one point"));
            }
            Plan::Sandwich {
                x: load_sequence(x.as_deref(), cli.input.as_ref())?,
                p,
                epsilon: *epsilon,
                t_grid: *t_grid,
                ns: parse_ns(n)?,
            }
        }
        Command::Characterize { norm, samples } => {
            let config = CharacterizeConfig {
                seed: cli.seed,
                samples: *samples,
                ..CharacterizeConfig::default()
            };
            config
                .validate()
                .map_err(|e| usage("samples", e.to_string()))?;
            Plan::Characterize {
                oracle: parse_selector(norm)?,
                config,
            }
        }
        Command::SchattenCheck {
            sizes,
            p,
            trials,
            kind,
        } => {
            if *trials == 0 {
                return Err(usage("trials", "need at least one trial"));
            }
            Plan::SchattenCheck {
                shapes: parse_sizes(sizes)?,
                ps: parse_list("p", p, |v| parse_exponent("p", v))?,
                trials: *trials,
                kind: *kind,
            }
        }
        Command::RvCheck { n_max, p } => {
            if !(1..=MAX_RV_N).contains(n_max) {
                return Err(usage("n-max", format!("must lie in 1..={MAX_RV_N}")));
            }
            Plan::RvCheck {
                n_max: *n_max,
                ps: parse_list("p", p, |v| parse_exponent("p", v))?,
            }
        }
    })
}

/// Run the plan, returning whether a violation was found.
fn execute(plan: Plan, seed: u64, format: Format, out: &mut dyn Write) -> Result<bool, CliError> {
    match plan {
        Plan::Rate { x, ts, ns } => {
            write_rows(&commands::rate(&x, &ts, &ns)?, format, out)?;
            Ok(false)
        }
        Plan::Sandwich {
            x,
            p,
            epsilon,
            t_grid,
            ns,
        } => {
            let (rows, violated) = commands::sandwich(&x, p, epsilon, t_grid, &ns)?;
            write_rows(&rows, format, out)?;
            Ok(violated)
        }
        Plan::Characterize { oracle, config } => {
            let report = characterize(&oracle, &config)?;
            match format {
                Format::Json => write_json(&report, out)?,
                Format::Csv => write_rows(&[CharacterizeRow::from(&report)], format, out)?,
            }
            Ok(report.verdict.is_violation())
        }
        Plan::SchattenCheck {
            shapes,
            ps,
            trials,
            kind,
        } => {
            let (rows, violated) = commands::schatten_check(shapes, &ps, trials, kind, seed)?;
            write_rows(&rows, format, out)?;
            Ok(violated)
        }
        Plan::RvCheck { n_max, ps } => {
            let (rows, violated) = commands::rv_check(n_max, &ps)?;
            write_rows(&rows, format, out)?;
            Ok(violated)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let plan = plan(&cli)?;
    let mut buf = Vec::new();
    let violated = execute(plan, cli.seed, cli.format, &mut buf)?;
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(violated)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_VIOLATION),
        Err(e @ (CliError::Usage { .. } | CliError::Lab(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
