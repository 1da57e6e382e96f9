//! Command-line front end.
//!
//! [`run`] parses arguments, executes one command and returns the exit code
//! with the complete stdout and stderr text; nothing is printed on the way, so
//! error paths never leave partial output behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Float;
use serde::Serialize;

use crate::counting::{CountConstraint, CountError, CountTable};
use crate::evaluator::{
    self, default_depth, format_float, format_radius, ApproxValue, EvalError, Method, TableParams,
};
use crate::numeral::{Block, NumeralError};
use crate::reducer::{derive_bw, ln_base};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ellipsephic", version, about = "Kempner-like sums over integers with constrained digit blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Derive b_w(n) for a block
    Derive,
    /// Check that Σ log_B b_w(n) over a_w(n) = k encloses -1
    Check,
    /// Check that the digit-sum logarithmic sum encloses -ln B
    CheckDigitsum,
    /// Σ 1/n over a_w(n) = k
    Sum,
    /// Σ 1/n over s_B(n) = k
    SumDigitsum,
    /// Sums for a range of k next to their limit constant
    Table,
    /// Counts of d-digit integers with exactly k occurrences (or digit sum k)
    Count,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    #[arg(long, global = true)]
    base: Option<u32>,
    /// Digits such as "011"; bracket digits above 9 as "[10][3]"
    #[arg(long, global = true)]
    block: Option<String>,
    /// Use the digit-sum constraint (table, count)
    #[arg(long, global = true)]
    digit_sum: bool,
    /// A single k or an inclusive range "a..b"
    #[arg(long, global = true)]
    k: Option<String>,
    /// Sum over n < B^depth
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Sum over n <= limit (brute force)
    #[arg(long, global = true)]
    limit: Option<u64>,
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    max_k: Option<u32>,
    #[arg(long, global = true)]
    max_d: Option<u32>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Brute,
    Accel,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum CliError {
    Invalid(String),
    Certification(String),
    Io(String),
}

impl From<NumeralError> for CliError {
    fn from(e: NumeralError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::CertificationFailure { .. } => CliError::Certification(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Count(c) => c.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_INVALID, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let result = match cli.opts.threads {
        Some(0) => Err(CliError::Invalid("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command, &cli.opts)),
            Err(e) => Err(CliError::Io(e.to_string())),
        },
        None => execute(cli.command, &cli.opts),
    };
    let (code, body) = match result {
        Ok(pair) => pair,
        Err(CliError::Invalid(msg)) => return failure(EXIT_INVALID, msg),
        Err(CliError::Certification(msg)) => return failure(EXIT_CERTIFICATION, msg),
        Err(CliError::Io(msg)) => return failure(EXIT_INVALID, msg),
    };
    match &cli.opts.output {
        Some(path) => match std::fs::write(path, &body) {
            Ok(()) => Outcome { code, ..Outcome::default() },
            Err(e) => failure(EXIT_INVALID, format!("cannot write {}: {e}", path.display())),
        },
        None => Outcome { code, stdout: body, stderr: String::new() },
    }
}

fn failure(code: i32, msg: String) -> Outcome {
    Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
}

fn execute(command: Command, o: &Opts) -> CliResult<(i32, String)> {
    match command {
        Command::Derive => cmd_derive(o),
        Command::Check => cmd_check(o),
        Command::CheckDigitsum => cmd_check_digitsum(o),
        Command::Sum => cmd_sum(o, false),
        Command::SumDigitsum => cmd_sum(o, true),
        Command::Table => cmd_table(o),
        Command::Count => cmd_count(o),
    }
}

fn need<T: Copy>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Invalid(format!("missing --{flag}")))
}

fn base(o: &Opts) -> CliResult<u32> {
    let b = need(o.base, "base")?;
    crate::numeral::check_base(b)?;
    Ok(b)
}

fn block(o: &Opts) -> CliResult<Block> {
    let text = o.block.as_deref().ok_or_else(|| CliError::Invalid("missing --block".into()))?;
    Ok(Block::parse(base(o)?, text)?)
}

pub fn parse_k_range(text: &str) -> Result<RangeInclusive<u32>, String> {
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("invalid k {text:?}"));
    let range = match text.split_once("..") {
        Some((a, b)) => parse(a)?..=parse(b)?,
        None => {
            let k = parse(text)?;
            k..=k
        }
    };
    if range.is_empty() {
        return Err(format!("empty k range {text:?}"));
    }
    Ok(range)
}

fn ks(o: &Opts) -> CliResult<RangeInclusive<u32>> {
    let text = o.k.as_deref().ok_or_else(|| CliError::Invalid("missing --k".into()))?;
    parse_k_range(text).map_err(CliError::Invalid)
}

fn precision(o: &Opts) -> CliResult<u32> {
    if !(32..=65536).contains(&o.precision) {
        return Err(CliError::Invalid(format!("precision {} out of range 32..65536", o.precision)));
    }
    Ok(o.precision)
}

fn depth(o: &Opts, base: u32) -> u32 {
    o.depth.unwrap_or_else(|| default_depth(base))
}

fn cmd_derive(o: &Opts) -> CliResult<(i32, String)> {
    let ts = derive_bw(&block(o)?);
    let body = match o.format {
        Format::Text => format!("{}\n{}\n", ts.factored(), ts.to_json()),
        Format::Json => format!("{}\n", ts.to_json()),
        Format::Csv => {
            let mut s = String::from("mult,s,t\n");
            for t in ts.terms() {
                writeln!(s, "{},{},{}", t.mult, t.scale_exp, t.offset).unwrap();
            }
            s
        }
    };
    Ok((EXIT_OK, body))
}

#[derive(Serialize)]
struct CheckDoc {
    k: u32,
    estimate: String,
    radius: String,
    target: String,
    status: &'static str,
}

fn check_report(format: Format, target: &Float, ks: RangeInclusive<u32>, values: &[ApproxValue]) -> (i32, String) {
    let docs: Vec<CheckDoc> = ks
        .zip(values)
        .map(|(k, v)| CheckDoc {
            k,
            estimate: format_float(&v.estimate),
            radius: format_radius(v.radius),
            target: format_float(target),
            status: if v.contains(target) { "PASS" } else { "FAIL" },
        })
        .collect();
    let code = if docs.iter().all(|d| d.status == "PASS") { EXIT_OK } else { EXIT_FAIL };
    let body = match format {
        Format::Text => docs
            .iter()
            .map(|d| format!("k={} estimate={} radius={} target={} {}\n", d.k, d.estimate, d.radius, d.target, d.status))
            .collect(),
        Format::Csv => {
            let mut s = String::from("k,estimate,radius,target,status\n");
            for d in &docs {
                writeln!(s, "{},{},{},{},{}", d.k, d.estimate, d.radius, d.target, d.status).unwrap();
            }
            s
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&docs).unwrap()),
    };
    (code, body)
}

fn cmd_check(o: &Opts) -> CliResult<(i32, String)> {
    let w = block(o)?;
    let prec = precision(o)?;
    let ks = ks(o)?;
    let values = evaluator::identity_checks(&w, ks.clone(), depth(o, w.base()), prec)?;
    Ok(check_report(o.format, &Float::with_val(prec, -1), ks, &values))
}

fn cmd_check_digitsum(o: &Opts) -> CliResult<(i32, String)> {
    let b = base(o)?;
    let prec = precision(o)?;
    let ks = ks(o)?;
    let values = evaluator::digitsum_identity_checks(b, ks.clone(), depth(o, b), prec)?;
    Ok(check_report(o.format, &-ln_base(b, prec), ks, &values))
}

#[derive(Serialize)]
struct SumDoc {
    k: u32,
    estimate: String,
    radius: String,
    empty_set: bool,
}

fn cmd_sum(o: &Opts, digit_sum: bool) -> CliResult<(i32, String)> {
    let prec = precision(o)?;
    let ks = ks(o)?;
    let family = if digit_sum {
        CountConstraint::DigitSum { base: base(o)? }
    } else {
        CountConstraint::Block(block(o)?)
    };
    let method = o.method.unwrap_or(MethodArg::Brute);
    let values: Vec<ApproxValue> = match method {
        MethodArg::Brute => {
            let limit = need(o.limit, "limit")?;
            evaluator::harmonic_partial_sums(&family, ks.clone(), limit, prec)?
                .into_iter()
                .zip(ks.clone())
                .map(|((estimate, rounding), k)| ApproxValue {
                    estimate,
                    radius: rounding,
                    rounding,
                    empty_set: digit_sum && k == 0,
                })
                .collect()
        }
        MethodArg::Accel => {
            let w = match &family {
                CountConstraint::Block(w) => w.clone(),
                CountConstraint::DigitSum { base: 2 } => Block::new(2, vec![1])?,
                CountConstraint::DigitSum { base } => {
                    return Err(CliError::Invalid(format!(
                        "no accelerated digit-sum sums for base {base}; use --method brute"
                    )))
                }
            };
            evaluator::harmonic_sums_accelerated(&w, ks.clone(), depth(o, w.base()), prec)?
        }
    };
    let docs: Vec<SumDoc> = ks
        .zip(&values)
        .map(|(k, v)| SumDoc {
            k,
            estimate: format_float(&v.estimate),
            radius: format_radius(v.radius),
            empty_set: v.empty_set,
        })
        .collect();
    let body = match o.format {
        Format::Text => {
            let mut s = String::new();
            for d in &docs {
                let value = match method {
                    MethodArg::Brute => d.estimate.clone(),
                    MethodArg::Accel => format!("{} +/- {}", d.estimate, d.radius),
                };
                let flag = if d.empty_set { " (empty set)" } else { "" };
                if docs.len() == 1 {
                    writeln!(s, "{value}{flag}").unwrap();
                } else {
                    writeln!(s, "k={} {value}{flag}", d.k).unwrap();
                }
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("k,estimate,radius\n");
            for d in &docs {
                writeln!(s, "{},{},{}", d.k, d.estimate, d.radius).unwrap();
            }
            s
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&docs).unwrap()),
    };
    Ok((EXIT_OK, body))
}

fn family(o: &Opts) -> CliResult<CountConstraint> {
    match (&o.block, o.digit_sum) {
        (Some(_), true) => Err(CliError::Invalid("--block and --digit-sum are exclusive".into())),
        (Some(_), false) => Ok(CountConstraint::Block(block(o)?)),
        (None, true) => Ok(CountConstraint::DigitSum { base: base(o)? }),
        (None, false) => Err(CliError::Invalid("give --block or --digit-sum".into())),
    }
}

fn cmd_table(o: &Opts) -> CliResult<(i32, String)> {
    let family = family(o)?;
    let prec = precision(o)?;
    let ks = ks(o)?;
    let b = family.base();
    let method = match (o.method, &family) {
        (Some(MethodArg::Brute), _) => Method::Brute,
        (Some(MethodArg::Accel), _) => Method::Accelerated,
        (None, CountConstraint::DigitSum { base }) if *base > 2 => Method::Brute,
        (None, _) => Method::Accelerated,
    };
    let cutoff = match method {
        Method::Brute => need(o.limit, "limit")?,
        Method::Accelerated => 0,
    };
    let rows = evaluator::limit_table(&family, ks, TableParams { method, depth: depth(o, b), cutoff, prec })?;
    let body = match o.format {
        Format::Csv => evaluator::rows_to_csv(&rows),
        Format::Json => format!("{}\n", evaluator::rows_to_json(&rows)),
        Format::Text => {
            let mut s = String::new();
            for r in &rows {
                let flag = if r.sum.empty_set { " (empty set)" } else { "" };
                writeln!(
                    s,
                    "k={} estimate={} radius={} limit={} certified_distance={}{flag}",
                    r.k,
                    format_float(&r.sum.estimate),
                    format_radius(r.sum.radius),
                    format_float(&r.limit),
                    format_radius(r.certified_distance)
                )
                .unwrap();
            }
            s
        }
    };
    Ok((EXIT_OK, body))
}

fn cmd_count(o: &Opts) -> CliResult<(i32, String)> {
    let family = family(o)?;
    let max_k = need(o.max_k, "max-k")?;
    let max_d = need(o.max_d, "max-d")?;
    if max_d == 0 || max_d > 4096 || max_k > 4096 {
        return Err(CliError::Invalid("--max-d must be in 1..4096 and --max-k at most 4096".into()));
    }
    let table = CountTable::build(family, max_k, max_d);
    let body = match o.format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            #[derive(Serialize)]
            struct Cell {
                k: u32,
                d: u32,
                count: String,
            }
            let cells: Vec<Cell> = (0..=max_k)
                .flat_map(|k| (1..=max_d).map(move |d| (k, d)))
                .map(|(k, d)| Cell { k, d, count: table.get(k, d).to_string() })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&cells).unwrap())
        }
        Format::Text => {
            let mut s = String::new();
            for k in 0..=max_k {
                let row: Vec<String> = (1..=max_d).map(|d| table.get(k, d).to_string()).collect();
                writeln!(s, "k={k}: {}", row.join(" ")).unwrap();
            }
            let over: Vec<String> = (1..=max_d).map(|d| table.overflow(d).to_string()).collect();
            writeln!(s, "k>{max_k}: {}", over.join(" ")).unwrap();
            s
        }
    };
    Ok((EXIT_OK, body))
}
