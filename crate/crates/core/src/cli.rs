//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on domain errors, 2 on I/O or parse errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use crate::cohomology::h0h1;
use crate::conics::{branch_divisor, degeneration_pattern, fiber_analysis, ConicError, ConicPencil};
use crate::expr::{parse_expr, Session, Value};
use crate::moduli::{degree_from_branch_count, enumerate_and_verify, ModuliReport, VerdictRecord};
use crate::prym::{build_homology, classify_index, prym_polarization, BranchData, BranchDataFile, PrymError};

#[derive(Debug, Parser)]
#[command(name = "quadcover", version, about = "Exact computations for quadruple covers of an elliptic curve")]
pub struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report to a file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a bundle expression to canonical form.
    Eval { expr: String },
    /// h⁰, h¹ and χ of a bundle expression.
    Cohom { expr: String },
    /// Enumerate pair types for degree e and run the dimension count.
    Moduli(ModuliArgs),
    /// Homology and polarization type from a branch-data file.
    Prym { path: PathBuf },
    /// Pencil-of-conics analysis of a pencil file.
    Conics {
        #[command(subcommand)]
        action: ConicsCommand,
    },
}

#[derive(Debug, Args)]
pub struct ModuliArgs {
    /// Degree e of E and F.
    #[arg(long, required_unless_present = "n", conflicts_with = "n")]
    pub e: Option<i64>,
    /// Number of branch points n = 2e.
    #[arg(long)]
    pub n: Option<i64>,
    /// Slope window around e/3 and e/2.
    #[arg(long, default_value_t = 4)]
    pub window: i64,
}

#[derive(Debug, Subcommand)]
pub enum ConicsCommand {
    /// Base points of the fiber over one chart value.
    Fiber {
        path: PathBuf,
        /// Chart coordinate, an integer or p/q.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Branch divisor as a square-free factorization in y.
    Branch { path: PathBuf },
    /// Structural coefficient degeneration.
    Pattern { path: PathBuf },
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) | CliError::Parse(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn eval_value(src: &str) -> Result<Value, CliError> {
    let e = parse_expr(src).map_err(|e| CliError::Parse(e.to_string()))?;
    Session::for_expr(&e).eval(&e).map_err(|e| CliError::Domain(e.to_string()))
}

fn conic_error(e: ConicError) -> CliError {
    match e {
        ConicError::Parse(m) => CliError::Parse(m),
        other => CliError::Domain(other.to_string()),
    }
}

fn parse_rational(s: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Parse(format!("not a rational number: {s}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = p.trim().parse().map_err(|_| bad())?;
            let q: num_bigint::BigInt = q.trim().parse().map_err(|_| bad())?;
            if q == 0.into() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

#[derive(Serialize)]
struct ModuliJson {
    e: i64,
    window: i64,
    accepted: Vec<usize>,
    verdicts: Vec<VerdictRecord>,
}

fn moduli_table(r: &ModuliReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "e = {}, n = {}, window = {}", r.e, 2 * r.e, r.window);
    let _ = writeln!(
        s,
        "{:<5} {:<22} {:<14} {:<27} {:>3} {:>4} {:>5} {:>5} {:>4}  relations",
        "case", "E", "F", "status", "mod", "h0", "EndE", "EndF", "cov"
    );
    let shape = |v: &[crate::moduli::Summand]| {
        v.iter()
            .map(|x| format!("({},{})", x.rank, x.degree))
            .collect::<Vec<_>>()
            .join("+")
    };
    for v in &r.verdicts {
        let rec = v.record();
        let _ = writeln!(
            s,
            "{:<5} {:<22} {:<14} {:<27} {:>3} {:>4} {:>5} {:>5} {:>4}  {}",
            rec.case_tag,
            shape(&rec.e_shape),
            shape(&rec.f_shape),
            rec.status.to_string(),
            rec.moduli_of_pair,
            rec.h0_fs2e,
            rec.h0_end_e,
            rec.h0_end_f,
            rec.covering_moduli,
            rec.relations.join("; ")
        );
    }
    let accepted = r.accepted();
    let _ = writeln!(s, "accepted: {}", accepted.len());
    for v in accepted {
        let _ = writeln!(s, "  {}", v.pair);
    }
    s
}

/// Runs one command and returns the report text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let json = cli.json;
    match &cli.command {
        Command::Eval { expr } => {
            let v = eval_value(expr)?;
            Ok(if json {
                to_json(&json!({ "result": v.to_string() }))
            } else {
                format!("{v}\n")
            })
        }
        Command::Cohom { expr } => {
            let b = match eval_value(expr)? {
                Value::Bundle(b) => b,
                Value::Class(_) => return Err(CliError::Domain("cohom expects a bundle".into())),
            };
            let r = h0h1(&b);
            Ok(if json {
                to_json(&r)
            } else {
                let note = if r.resolved { "" } else { " (unresolved at slope 0)" };
                format!("h0 = {}, h1 = {}, chi = {}{note}\n", r.h0, r.h1, r.chi)
            })
        }
        Command::Moduli(args) => {
            let e = match (args.e, args.n) {
                (Some(e), _) => e,
                (None, Some(n)) => degree_from_branch_count(n).map_err(|e| CliError::Domain(e.to_string()))?,
                (None, None) => return Err(CliError::Parse("one of --e or --n is required".into())),
            };
            let report = enumerate_and_verify(e, args.window).map_err(|e| CliError::Domain(e.to_string()))?;
            Ok(if json {
                let accepted = report
                    .verdicts
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.status == crate::moduli::Status::Accepted)
                    .map(|(i, _)| i)
                    .collect();
                to_json(&ModuliJson {
                    e: report.e,
                    window: report.window,
                    accepted,
                    verdicts: report.records(),
                })
            } else {
                moduli_table(&report)
            })
        }
        Command::Prym { path } => {
            let text = read(path)?;
            let file: BranchDataFile = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
            let domain = |e: PrymError| CliError::Domain(e.to_string());
            let b = BranchData::from_file(&file).map_err(domain)?;
            let h = build_homology(&b).map_err(domain)?;
            let r = prym_polarization(&h).map_err(domain)?;
            Ok(if json {
                to_json(&r)
            } else {
                let pol: Vec<String> = r.polarization.iter().map(ToString::to_string).collect();
                let mut s = format!(
                    "genus {}, d2 = {}{}, polarization ({})\n",
                    r.genus,
                    r.d2,
                    if r.surjective { " (surjective)" } else { "" },
                    pol.join(", ")
                );
                if b.degree() == 4 {
                    match classify_index(r.d2) {
                        Ok(c) => {
                            let _ = writeln!(s, "component: {}", serde_json::to_value(c).expect("unit").as_str().unwrap_or("?"));
                        }
                        Err(e) => return Err(domain(e)),
                    }
                }
                s
            })
        }
        Command::Conics { action } => {
            let path = match action {
                ConicsCommand::Fiber { path, .. } | ConicsCommand::Branch { path } | ConicsCommand::Pattern { path } => path,
            };
            let pencil = ConicPencil::from_json(&read(path)?).map_err(conic_error)?;
            match action {
                ConicsCommand::Fiber { y, .. } => {
                    let y = parse_rational(y)?;
                    let f = fiber_analysis(&pencil, &y).map_err(conic_error)?;
                    Ok(if json {
                        to_json(&f)
                    } else {
                        let pat: Vec<String> = f.pattern.iter().map(ToString::to_string).collect();
                        format!(
                            "y = {y}: base points with multiplicities ({}), branched: {}, simple: {}\n",
                            pat.join(", "),
                            f.branched,
                            f.simple
                        )
                    })
                }
                ConicsCommand::Branch { .. } => {
                    let b = branch_divisor(&pencil).map_err(conic_error)?;
                    Ok(if json {
                        to_json(&json!({
                            "degree": b.degree(),
                            "squarefree": b.is_squarefree(),
                            "polynomial": b.polynomial.to_string(),
                            "factors": b.factor_report(),
                        }))
                    } else {
                        let mut s = format!("branch divisor: {} (degree {})\n", b.polynomial, b.degree());
                        for (f, m) in &b.factors {
                            let _ = writeln!(s, "  ({f})^{m}");
                        }
                        s
                    })
                }
                ConicsCommand::Pattern { .. } => {
                    let p = degeneration_pattern(&pencil);
                    Ok(if json {
                        to_json(&json!({ "pattern": p }))
                    } else {
                        format!("{p}\n")
                    })
                }
            }
        }
    }
}

/// Parses arguments, runs, writes the report; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match run(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, out) {
                eprintln!("{}", CliError::Io(format!("{}: {e}", path.display())));
                return 2;
            }
        }
        None => {
            use std::io::Write as _;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                Err(e) => {
                    eprintln!("{}", CliError::Io(format!("stdout: {e}")));
                    return 2;
                }
            }
        }
    }
    0
}
