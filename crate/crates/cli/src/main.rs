//! `diophantus`: batch front end over the core library.
//!
//! Machine output goes to `--output` (stdout by default); diagnostics go to stderr.
//! Exit status is 0 on success, 1 on bad input, 2 when a computation refuses for
//! lack of precision or depth.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diophantus::Error;

/// Env var holding the default precision: `low`, `standard`, `high` or a bit count.
pub const PRECISION_ENV: &str = "DIOPHANTUS_PRECISION";

#[derive(Parser, Debug)]
#[command(
    name = "diophantus",
    version,
    about = "Inhomogeneous Diophantine approximation along rotations"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output path; `-` is stdout.
    #[arg(long, short, global = true, default_value = "-")]
    pub output: PathBuf,
    /// Working precision in bits. Default from $DIOPHANTUS_PRECISION, else 192.
    #[arg(long, global = true)]
    pub bits: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Convergent table p_k/q_k with enclosures of |q_kθ − p_k|.
    Cf {
        #[arg(long)]
        theta: String,
        /// Deepest index K.
        #[arg(long, default_value_t = 20)]
        k: usize,
    },
    /// Partial sums of the block series with a certificate when one applies.
    Criterion {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 25)]
        kmax: usize,
    },
    /// The Log series for ψ(n) = 1/(nφ(n)), optionally with the block sandwich check.
    Khintchine {
        #[arg(long)]
        theta: String,
        /// `const:c`, `pow:b` or `logpow:b`.
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 20)]
        kmax: usize,
        /// Also check the sandwich on this many blocks past k_0.
        #[arg(long)]
        sandwich: Option<usize>,
    },
    /// The series Σ t_i ψ(⌊1/(t_i φ(t_i δ(t_i)))⌋) and its side condition.
    KurzweilCond {
        #[arg(long)]
        psi: String,
        /// Decay φ as `pow:c,s`.
        #[arg(long)]
        phi: String,
        /// `id` or `pow:k`.
        #[arg(long, default_value = "id")]
        delta: String,
        /// `double-exp` or `geometric:b`.
        #[arg(long, default_value = "double-exp")]
        t: String,
        #[arg(long, default_value_t = 6)]
        imax: usize,
        /// Optional θ for the class evidence.
        #[arg(long)]
        theta: Option<String>,
    },
    /// Running minimum of q_k^τ ‖q_kθ‖.
    OmegaTau {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value = "1")]
        tau: String,
        #[arg(long, default_value_t = 30)]
        kmax: usize,
    },
    /// Builds E_{k+1} and G_k for k ≤ K and runs the exact set checks.
    Sets {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = diophantus::circle_sets::DEFAULT_CAP)]
        cap: usize,
        /// θ surrogate budget 2^-width.
        #[arg(long, default_value_t = 200)]
        width: u64,
    },
    /// Monte Carlo estimate of the fraction of targets hit in a window.
    Simulate {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 2000)]
        m: u64,
        #[arg(long)]
        nlo: u64,
        #[arg(long)]
        nhi: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = diophantus::montecarlo::SCAN_LIMIT)]
        scan_limit: u64,
        #[arg(long)]
        stop_at_first_hit: bool,
    },
    /// Exact measure of the union of balls over a finite window.
    WindowMeasure {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        nlo: u64,
        #[arg(long)]
        nhi: u64,
        #[arg(long, default_value_t = diophantus::circle_sets::DEFAULT_CAP)]
        cap: usize,
        #[arg(long, default_value_t = 200)]
        width: u64,
    },
    /// Constructs and validates the piecewise-constant counterexample ψ.
    Tseng {
        #[arg(long, default_value = "rule:doubling")]
        theta: String,
        #[arg(long, default_value = "1")]
        tau: String,
        #[arg(long, default_value_t = 5)]
        l: usize,
        /// Also write the witness JSON (loadable as `piecewise:@file`).
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Continued fraction of a Laurent series over F_q.
    LaurentCf {
        #[arg(long)]
        field: String,
        #[arg(long = "A")]
        a: String,
        #[arg(long, default_value_t = 20)]
        k: usize,
    },
    /// The Laurent block series for ψ(Q) = q^{-l(deg Q)}.
    LaurentCriterion {
        #[arg(long)]
        field: String,
        #[arg(long = "A")]
        a: String,
        /// `affine:s=..,c=..`, `table:[..]` or `table-hold:[..]`.
        #[arg(long)]
        l: String,
        #[arg(long, default_value_t = 100)]
        kmax: usize,
        /// Also verify the norm identities to this depth.
        #[arg(long)]
        norms: Option<usize>,
    },
}

pub struct Artifact {
    pub json: serde_json::Value,
    pub csv: String,
}

/// Bits from `--bits`, else the environment profile.
fn resolve_bits(flag: Option<u32>) -> Result<u32, Error> {
    let bits = match flag {
        Some(b) => b,
        None => match std::env::var(PRECISION_ENV) {
            Err(_) => 192,
            Ok(v) => match v.as_str() {
                "low" => 96,
                "standard" => 192,
                "high" => 384,
                s => s.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "{PRECISION_ENV}={s:?}: expected low, standard, high or a bit count"
                    ))
                })?,
            },
        },
    };
    if !(32..=4096).contains(&bits) {
        return Err(Error::InvalidInput(format!(
            "precision {bits} bits outside 32..=4096"
        )));
    }
    Ok(bits)
}

fn emit(common: &Common, art: &Artifact) -> std::io::Result<()> {
    let text = match common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&art.json).expect("values serialize");
            s.push('\n');
            s
        }
        Format::Csv => art.csv.clone(),
    };
    if common.output.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())
    } else {
        std::fs::write(&common.output, text)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = resolve_bits(cli.common.bits).and_then(|bits| commands::run(&cli.cmd, bits));
    match result {
        Ok(art) => match emit(&cli.common, &art) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", cli.common.output.display());
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_refusal() { 2 } else { 1 })
        }
    }
}
