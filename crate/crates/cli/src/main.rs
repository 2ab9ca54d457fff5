mod batch;
mod report;
mod sim;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use repbf_core::{repbf_f, repbf_t, Estimator, FTestStudy, RepBfConfig, TTestStudy};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{flag}: {message}")]
    Validation { flag: String, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(#[from] repbf_core::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn validation(flag: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            flag: flag.to_string(),
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "repbf", version, about = "Replication Bayes factors for t-tests and ANOVA F-tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replication Bayes factor from two t-tests.
    T(TArgs),
    /// Replication Bayes factor from two fixed-effect ANOVA F-tests.
    F(FArgs),
    /// Evaluate every study pair in a CSV file.
    #[command(after_long_help = batch::SCHEMA_HELP)]
    Batch(batch::BatchArgs),
    /// Emit one of the simulation tables as CSV.
    #[command(after_long_help = sim::SCHEMA_HELP)]
    Sim(sim::SimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
pub struct EstimationArgs {
    /// importance, monte_carlo (mc) or quadrature.
    #[arg(long, default_value = "importance", value_parser = parse_estimator)]
    estimator: Estimator,
    /// Importance draws, or total posterior draws for Monte Carlo.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    draws: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl EstimationArgs {
    pub fn config(&self) -> RepBfConfig {
        RepBfConfig {
            estimator: self.estimator,
            n_draws: self.draws as usize,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct TArgs {
    /// Original t value (sign gives the direction of the effect).
    #[arg(long, allow_negative_numbers = true, value_parser = finite)]
    t_orig: f64,
    /// Original degrees of freedom [default: n1 + n2 - 2, or n1 - 1].
    #[arg(long, allow_negative_numbers = true, value_parser = positive)]
    df_orig: Option<f64>,
    /// Original group 1 size (the only group for a one-sample test).
    #[arg(long)]
    n1_orig: u64,
    /// Original group 2 size; omit for a one-sample test.
    #[arg(long)]
    n2_orig: Option<u64>,
    #[arg(long, allow_negative_numbers = true, value_parser = finite)]
    t_rep: f64,
    #[arg(long, allow_negative_numbers = true, value_parser = positive)]
    df_rep: Option<f64>,
    #[arg(long)]
    n1_rep: u64,
    #[arg(long)]
    n2_rep: Option<u64>,
    /// Replace the original posterior by a moment-matched normal.
    #[arg(long)]
    normal_approximation: bool,
    #[command(flatten)]
    estimation: EstimationArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct FArgs {
    #[arg(long, value_parser = non_negative)]
    f_orig: f64,
    /// Effect degrees of freedom, shared by both studies unless --df-effect-rep is given.
    #[arg(long, value_parser = at_least_one)]
    df_effect: f64,
    #[arg(long, value_parser = at_least_one)]
    df_error_orig: f64,
    /// Original total sample size.
    #[arg(long)]
    n_orig: u64,
    #[arg(long, value_parser = non_negative)]
    f_rep: f64,
    #[arg(long, value_parser = at_least_one)]
    df_effect_rep: Option<f64>,
    #[arg(long, value_parser = at_least_one)]
    df_error_rep: f64,
    /// Replication total sample size.
    #[arg(long)]
    n_rep: u64,
    #[command(flatten)]
    estimation: EstimationArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|_| "expected importance, monte_carlo (mc) or quadrature".to_string())
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| e.to_string())
}

fn finite(s: &str) -> Result<f64, String> {
    number(s).and_then(|x| if x.is_finite() { Ok(x) } else { Err("must be finite".into()) })
}

fn positive(s: &str) -> Result<f64, String> {
    finite(s).and_then(|x| if x > 0.0 { Ok(x) } else { Err("must be positive".into()) })
}

fn non_negative(s: &str) -> Result<f64, String> {
    finite(s).and_then(|x| if x >= 0.0 { Ok(x) } else { Err("must be non-negative".into()) })
}

fn at_least_one(s: &str) -> Result<f64, String> {
    finite(s).and_then(|x| if x >= 1.0 { Ok(x) } else { Err("must be at least 1".into()) })
}

/// A t study from flag values. `names` are the df, n1 and n2 flags, for
/// messages. A missing df defaults to `n1 + n2 - 2`, or `n1 - 1` for one sample.
pub fn t_study(t: f64, df: Option<f64>, n1: u64, n2: Option<u64>, names: [&str; 3]) -> Result<TTestStudy, CliError> {
    let [df_name, n1_name, n2_name] = names;
    if n1 < 2 {
        return Err(CliError::validation(n1_name, format!("must be at least 2, got {n1}")));
    }
    let n2 = n2.unwrap_or(0);
    if n2 == 1 {
        return Err(CliError::validation(n2_name, "must be at least 2 (omit it for a one-sample test)"));
    }
    let df = df.unwrap_or(if n2 == 0 { n1 as f64 - 1.0 } else { (n1 + n2) as f64 - 2.0 });
    TTestStudy::new(t, df, n1, n2).map_err(|e| CliError::validation(df_name, e.to_string()))
}

pub fn f_study(f: f64, df_effect: f64, df_error: f64, n: u64, n_flag: &str) -> Result<FTestStudy, CliError> {
    if (n as f64) < df_effect + 2.0 {
        return Err(CliError::validation(
            n_flag,
            format!("total sample size {n} is too small for {df_effect} effect degrees of freedom"),
        ));
    }
    FTestStudy::new(f, df_effect, df_error, n).map_err(|e| CliError::validation(n_flag, e.to_string()))
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn print_result(result: &repbf_core::RepBfResult, test: &str, format: Format) -> Result<(), CliError> {
    warn(&result.warnings);
    let out = match format {
        Format::Text => report::text(result, test),
        Format::Json => report::json(result),
    };
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn cmd_t(args: &TArgs) -> Result<(), CliError> {
    let orig = t_study(
        args.t_orig,
        args.df_orig,
        args.n1_orig,
        args.n2_orig,
        ["--df-orig", "--n1-orig", "--n2-orig"],
    )?;
    let rep = t_study(args.t_rep, args.df_rep, args.n1_rep, args.n2_rep, ["--df-rep", "--n1-rep", "--n2-rep"])?;
    let config = RepBfConfig {
        normal_approximation: args.normal_approximation,
        ..args.estimation.config()
    };
    let result = repbf_t(&orig, &rep, &config)?;
    print_result(&result, "t", args.format)
}

fn cmd_f(args: &FArgs) -> Result<(), CliError> {
    let orig = f_study(args.f_orig, args.df_effect, args.df_error_orig, args.n_orig, "--n-orig")?;
    let df_effect_rep = args.df_effect_rep.unwrap_or(args.df_effect);
    let rep = f_study(args.f_rep, df_effect_rep, args.df_error_rep, args.n_rep, "--n-rep")?;
    let result = repbf_f(&orig, &rep, &args.estimation.config())?;
    print_result(&result, "F", args.format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::T(args) => cmd_t(args),
        Command::F(args) => cmd_f(args),
        Command::Batch(args) => batch::run(args),
        Command::Sim(args) => sim::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
