//! `omodule`: build Lubin–Tate towers, run verification suites, and merge
//! their reports.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use omodule::algebra::DEFAULT_PRECISION;
use omodule::formalmod::DEGREE_CAP;
use omodule::report::{merge, run_suites, tower_summary, CoverageMatrix, ReportDocument, RunConfig, Suite, TowerSummary};

/// Exit codes above this are reserved by shells.
const MAX_EXIT: usize = 125;

#[derive(Parser)]
#[command(name = "omodule", version, about = "Formal o-modules over F_q((t)): towers, torsion and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Lubin–Tate tower and print degrees, relations and torsion.
    Tower {
        #[command(flatten)]
        params: Params,
        /// Use the tower of F_{q^n}((t)) (the CM point of height n).
        #[arg(long)]
        cm: bool,
    },
    /// Run verification suites; the exit code is the number of failures.
    Verify {
        #[command(flatten)]
        params: Params,
        /// Comma-separated suites (default: all).
        #[arg(long, value_delimiter = ',')]
        which: Vec<String>,
    },
    /// Merge JSON report files and print the coverage matrix.
    Report {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Params {
    /// Residue characteristic.
    #[arg(long, conflicts_with = "q")]
    p: Option<u32>,
    /// Residue degree, q = p^f.
    #[arg(long, conflicts_with = "q")]
    f: Option<u32>,
    /// Residue cardinality (alternative to --p/--f).
    #[arg(long)]
    q: Option<u32>,
    /// Height.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Level.
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Working precision in uniformizer-adic terms.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    prec: i64,
    #[arg(long, default_value_t = DEGREE_CAP)]
    degree_cap: u64,
    /// Tower cache directory.
    #[arg(long, env = "OMODULE_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// `(p, f)` with `p^f = q`.
fn prime_power(q: u32) -> Result<(u32, u32)> {
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).with_context(|| format!("q = {q} is not a prime power"))?;
    let mut f = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        f += 1;
    }
    if r != 1 {
        bail!("q = {q} is not a prime power");
    }
    Ok((p, f))
}

impl Params {
    fn config(&self) -> Result<RunConfig> {
        let (p, f) = match (self.q, self.p) {
            (Some(q), _) => prime_power(q)?,
            (None, Some(p)) => (p, self.f.unwrap_or(1)),
            (None, None) => bail!("give --q, or --p (and optionally --f)"),
        };
        let config = RunConfig {
            p,
            f,
            n: self.n,
            m: self.m,
            precision: self.prec,
            degree_cap: self.degree_cap,
            cache_dir: self.cache_dir.clone(),
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

fn render_tower(s: &TowerSummary, output: Output) -> Result<String> {
    Ok(match output {
        Output::Json => serde_json::to_string_pretty(s)? + "\n",
        Output::Csv => {
            let mut out = String::from("level,degree,relation,torsion_points,primitive_valuation\n");
            for (i, d) in s.degrees.iter().enumerate() {
                let t = &s.torsion[i];
                out += &format!(
                    "{},{d},\"{}\",{},{}\n",
                    i + 1,
                    s.relations[i],
                    t.points,
                    t.primitive_valuation.as_deref().unwrap_or("")
                );
            }
            out
        }
        Output::Text => {
            let base = if s.cm { format!("F_{}((t)) (CM, n = {})", s.q.pow(s.n), s.n) } else { format!("F_{}((t))", s.q) };
            let mut out = format!("Lubin–Tate tower of {base}, m = {}\ndegrees: {:?}\n", s.m, s.degrees);
            for (i, r) in s.relations.iter().enumerate() {
                let t = &s.torsion[i];
                out += &format!(
                    "level {}: {r}\n  torsion points {}, primitive valuation {}\n",
                    i + 1,
                    t.points,
                    t.primitive_valuation.as_deref().unwrap_or("-")
                );
            }
            out
        }
    })
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tower { params, cm } => {
            let config = params.config()?;
            print!("{}", render_tower(&tower_summary(&config, cm)?, params.output)?);
            Ok(0)
        }
        Command::Verify { params, which } => {
            let config = params.config()?;
            let suites = if which.is_empty() {
                Suite::ALL.to_vec()
            } else {
                which.iter().map(|w| w.parse::<Suite>()).collect::<omodule::Result<Vec<_>>>()?
            };
            let doc = ReportDocument::new(run_suites(&suites, &config)?);
            match params.output {
                Output::Json => print!("{}", doc.to_json()),
                Output::Csv => print!("{}", doc.to_csv()?),
                Output::Text => print!("{}", doc.to_text()),
            }
            Ok(doc.failures().min(MAX_EXIT) as u8)
        }
        Command::Report { files, output } => {
            if files.is_empty() {
                bail!("no report files given");
            }
            let docs = files
                .iter()
                .map(|f| {
                    let raw = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                    ReportDocument::from_json(&raw).with_context(|| format!("parsing {}", f.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let merged = merge(&docs)?;
            let coverage = CoverageMatrix::from_document(&merged);
            match output {
                Output::Json => {
                    let v = serde_json::json!({ "merged": merged, "coverage": coverage });
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
                Output::Csv => print!("{}", coverage.to_csv()?),
                Output::Text => {
                    print!("{}", coverage.to_text());
                    println!("{} checks, {} failed", merged.reports.len(), merged.failures());
                }
            }
            Ok(merged.failures().min(MAX_EXIT) as u8)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(126)
        }
    }
}
