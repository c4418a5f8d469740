//! `normform`: command-line front end for sieving, exponential sums, spectral
//! scans, Vaughan and residue checks, ergodic averages and variation reports.

mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normform::poly::IntPolynomial;
use normform::Error;

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "normform", version, about = "Primes u^2 + n v^2: sieves, exponential sums and ergodic averages")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, env = "NORMFORM_CACHE", default_value = "cache")]
    pub cache_dir: PathBuf,
    /// Neither read nor write the sieve cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PolyArg {
    /// Polynomial coefficients, constant term first.
    #[arg(long, default_value = "0,1")]
    pub poly: IntPolynomial,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Members of P_n up to x.
    Sieve {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        x: u64,
    },
    /// Complete sums S(a, q) and the coefficients S(a, q) / (R_n phi2(q0)).
    Expsum {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        q: u64,
        /// Single numerator; every reduced numerator when absent.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<i64>,
    },
    /// K^_m against the approximant L'_m on a uniform grid.
    SpectrumScan {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        m: u64,
        #[arg(long = "B", alias = "b", default_value_t = normform::spectrum::DEFAULT_B)]
        b: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Prime sum at alpha against the major-arc main term around a/q.
    MajorArc {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<u64>,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long)]
        q: u64,
        /// Defaults to a/q.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "B", alias = "b", default_value_t = normform::spectrum::DEFAULT_B)]
        b: f64,
    },
    /// Normalized prime sums |sum log p e(alpha P(p^k))| / x.
    MinorArc {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<u64>,
        #[arg(long = "B", alias = "b", default_value_t = normform::spectrum::DEFAULT_B)]
        b: f64,
    },
    /// Vaughan's identity for every ideal with norm in (U, x].
    Vaughan {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        x: u64,
        #[arg(long = "U", alias = "u")]
        u: u64,
        #[arg(long = "V", alias = "v")]
        v: u64,
    },
    /// Solutions of u^2 + n v^2 = b (mod p) for every unit b.
    Residue {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: u64,
    },
    /// Ergodic averages A_m f(x) across scales.
    Avg {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<u64>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        point: i64,
        /// Cyclic modulus; the integer shift when absent.
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long, default_value_t = 1)]
        step: u64,
        /// Signal as `x:re[:im]` entries separated by commas.
        #[arg(long, default_value = "0:1", allow_hyphen_values = true)]
        signal: String,
        /// Random real signal on [0, len) drawn from --seed, replacing --signal.
        #[arg(long)]
        random_signal: Option<usize>,
        #[arg(long)]
        weighted: bool,
    },
    /// Randomized verification of the variation-operator inequalities.
    Varcheck {
        #[arg(long, default_value_t = 1000)]
        count: u64,
    },
    /// Ionescu-Wainger base set and frequency count.
    Iw {
        #[arg(long)]
        rho: f64,
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long)]
        q_cap: Option<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_resource_limit() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = commands::run(&cli).and_then(|out| {
        let text = out.render(cli.format);
        match &cli.out {
            Some(path) => fs::write(path, text).map_err(Error::from),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
