//! `thetalift` — traces of CM values, mock theta coefficients, theta
//! lifts, and Borcherds products from the command line.
//!
//! Every subcommand prints a single JSON document on stdout (canonically
//! ordered, so identical invocations produce identical bytes); `--output
//! table` switches to a human-oriented rendering with no stability
//! promise.  Exit codes: 0 success, 1 usage error, 2 mathematical or
//! validation failure.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use thetalift::numctx::Precision;
use thetalift::Result;

mod ops;
mod render;

#[derive(Parser)]
#[command(name = "thetalift", version, about = "Traces of CM values and theta lifts")]
struct Cli {
    /// Working precision in bits
    #[arg(long, global = true, default_value_t = 256, env = "THETALIFT_PREC")]
    prec: u32,

    /// Series window for q-expansions
    #[arg(long, global = true, default_value_t = 64)]
    terms: i64,

    /// Tolerance for residual checks and rational reconstruction
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Worker threads for trace sums (default: all logical cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum MockKind {
    F,
    Omega,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    #[value(name = "1/2")]
    Half,
    #[value(name = "3/2")]
    ThreeHalf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftKind {
    Km,
    Millson,
}

/// Which weakly holomorphic input to use.
#[derive(Clone, Copy, ValueEnum)]
enum InputKind {
    /// The canonical cusp-vanishing product over the Hauptmodul
    Construct,
    /// The level-6 Atkin-Lehner eigenform q^-1 - 4 - 83q - ...
    F6,
    /// The constant 1
    One,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate Gamma_0(N)-classes of definite forms for (D, r)
    Classes {
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        /// Definiteness: + for positive, - for negative
        #[arg(long, default_value = "+")]
        sign: String,
    },
    /// Trace of CM values of an input function over both class sets
    Trace {
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "D", allow_hyphen_values = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        #[arg(long, value_enum, default_value_t = InputKind::Construct)]
        input: InputKind,
    },
    /// Coefficients of the mock theta functions f(q) and omega(q)
    Mock {
        #[arg(value_enum)]
        which: MockKind,
        /// Coefficient index (n >= 1)
        #[arg(long)]
        n: u64,
    },
    /// q-expansion of a unary theta function
    Theta {
        #[arg(long = "N")]
        n: u32,
        #[arg(long, value_enum, default_value_t = Weight::Half)]
        weight: Weight,
    },
    /// The weight-1/2 basis attached to the divisor classes of N
    ThetaBasis {
        #[arg(long = "N")]
        n: u32,
    },
    /// Holomorphic part of a theta lift, as a rationalized table
    Lift {
        #[arg(value_enum)]
        which: LiftKind,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, value_enum, default_value_t = InputKind::Construct)]
        input: InputKind,
        /// Largest |D| carried in the output
        #[arg(long, default_value_t = 100)]
        dmax: i64,
        /// Denominator bound for rational reconstruction
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
    },
    /// Weyl vector of a table at the cusp 1/c
    Weyl {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        c: u32,
        /// Coefficient table file (default: the weight-1/2 theta table)
        #[arg(long)]
        table: Option<std::path::PathBuf>,
    },
    /// Petersson norms of both unary theta functions
    Norms {
        #[arg(long = "N")]
        n: u32,
    },
    /// Borcherds product expansion of a weight-1/2 table
    Borcherds {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        table: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        max_den: u64,
    },
    /// Twisted Borcherds product for a fundamental discriminant Delta
    Twisted {
        #[arg(long = "N")]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        #[arg(long)]
        table: Option<std::path::PathBuf>,
        /// Rational multiplier applied to the constructed input
        #[arg(long, default_value = "1")]
        scale: String,
    },
    /// The canonical cusp-vanishing input F_N
    ConstructF {
        #[arg(long = "N")]
        n: u32,
    },
    /// Evaluate an input function at a point of the upper half-plane
    EvalF {
        #[arg(long = "N")]
        n: u32,
        /// Real part (decimal or rational like 10/12)
        #[arg(long, allow_hyphen_values = true)]
        re: String,
        /// Imaginary part (decimal or rational), must be positive
        #[arg(long)]
        im: String,
        #[arg(long, value_enum, default_value_t = InputKind::Construct)]
        input: InputKind,
    },
    /// Run the full acceptance battery
    Selftest,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Some(jobs) = cli.jobs {
        // ignore failure: the pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    std::process::exit(match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    });
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = ops::Config {
        prec: Precision::new(cli.prec)?,
        terms: cli.terms,
        tol: cli.tol,
    };
    let (value, ok) = match &cli.cmd {
        Cmd::Classes { n, d, r, sign } => (ops::classes(*n, *d, *r, sign)?, true),
        Cmd::Trace { n, d, r, input } => (ops::trace(&cfg, *n, *d, *r, *input)?, true),
        Cmd::Mock { which, n } => (ops::mock(&cfg, *which, *n)?, true),
        Cmd::Theta { n, weight } => (ops::theta(&cfg, *n, *weight)?, true),
        Cmd::ThetaBasis { n } => (ops::theta_basis(&cfg, *n)?, true),
        Cmd::Lift {
            which,
            n,
            input,
            dmax,
            max_den,
        } => (ops::lift(&cfg, *which, *n, *input, *dmax, *max_den)?, true),
        Cmd::Weyl { n, c, table } => (ops::weyl(&cfg, *n, *c, table.as_deref())?, true),
        Cmd::Norms { n } => (ops::norms(&cfg, *n)?, true),
        Cmd::Borcherds { n, table, max_den } => {
            (ops::borcherds(&cfg, *n, table.as_deref(), *max_den)?, true)
        }
        Cmd::Twisted {
            n,
            delta,
            r,
            table,
            scale,
        } => (
            ops::twisted(&cfg, *n, *delta, *r, table.as_deref(), scale)?,
            true,
        ),
        Cmd::ConstructF { n } => (ops::construct_f(&cfg, *n)?, true),
        Cmd::EvalF { n, re, im, input } => (ops::eval_f(&cfg, *n, re, im, *input)?, true),
        Cmd::Selftest => ops::selftest(),
    };
    match cli.output {
        Output::Json => println!("{}", serde_json::to_string_pretty(&value).expect("json")),
        Output::Table => print!("{}", render::table(&value)),
    }
    Ok(if ok { 0 } else { 2 })
}
