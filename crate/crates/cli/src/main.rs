mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use condapprove::{Error, Method};

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "condapprove",
    version,
    about = "Combined pre-/post-market evidence for conditional approval"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(name = "twotrials", alias = "two-trials", alias = "t")]
    TwoTrials,
    /// Unweighted harmonic mean χ²-test.
    #[value(alias = "hu")]
    Harmonic,
    /// Harmonic mean χ²-test with --weights.
    #[value(alias = "hw")]
    HarmonicWeighted,
    Fisher,
    Stouffer,
    /// Every applicable method.
    All,
}

impl MethodArg {
    pub fn methods(self, all: &[Method]) -> Vec<Method> {
        match self {
            MethodArg::TwoTrials => vec![Method::TwoTrials],
            MethodArg::Harmonic => vec![Method::HarmonicUnweighted],
            MethodArg::HarmonicWeighted => vec![Method::HarmonicWeighted],
            MethodArg::Fisher => vec![Method::Fisher],
            MethodArg::Stouffer => vec![Method::Stouffer],
            MethodArg::All => all.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeliefArg {
    Cp,
    Pp,
    Ipp,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    /// Post-market bound p̄2 against p1.
    Bounds,
    /// Variance ratio c against p1 for s = 0 and 0.5.
    VarianceRatio,
    /// Region masses against pre-market power.
    Superiority,
}

fn parse_weights(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once([',', ':']).ok_or("expected two weights, e.g. 3,2")?;
    let w1 = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let w2 = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((w1, w2))
}

/// Levels and weights shared by the evidence commands.
#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    /// One-sided level of each trial.
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    /// Overall level; defaults to α².
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Weights of the weighted harmonic test as w1,w2.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<(f64, f64)>,
}

/// Pre-market result as a z-value or a one-sided p-value.
#[derive(Debug, Clone, Args)]
pub struct PreMarketArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub z1: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply combination rules to a pre-/post-market pair.
    Combine {
        #[command(flatten)]
        pre: PreMarketArgs,
        #[arg(long, allow_negative_numbers = true)]
        z2: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[command(flatten)]
        levels: LevelArgs,
    },
    /// Size the post-market trial.
    Design(commands::DesignArgs),
    /// Interim power and futility verdict.
    Interim(commands::InterimArgs),
    /// Run the Monte Carlo study.
    Simulate(commands::SimulateArgs),
    /// Probability that the harmonic rule beats the two-trials rule.
    Superiority(commands::SuperiorityArgs),
    /// Figure-ready curves.
    Figures(commands::FiguresArgs),
    /// Fampridine worked example.
    Casestudy,
}

#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Core(e)
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io(_) => 1,
            AppError::Core(e) => match e {
                Error::Domain(_) | Error::Unsupported(_) | Error::DirectionViolation { .. } => 2,
                Error::NoTrialRequired { .. } | Error::NecessaryConditionViolated { .. } => 3,
                Error::Numerical { .. } | Error::DegenerateTruncation { .. } => 4,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Usage(m) | AppError::Io(m) => m.clone(),
            AppError::Core(Error::NoTrialRequired { p1, c_f }) => format!(
                "refused: post-market trial not required; Fisher's criterion is met by p1 = {p1:e} alone (c_F = {c_f:e}), so there is no level to size against"
            ),
            AppError::Core(e @ Error::NecessaryConditionViolated { .. }) => {
                format!("refused: {e}; no post-market result can reach overall significance")
            }
            AppError::Core(e) => e.to_string(),
        }
    }
}

pub struct Ctx {
    pub format: Format,
    pub seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), AppError> {
    let ctx = Ctx {
        format: cli.format,
        seed: cli.seed,
    };
    let out = match cli.command {
        Command::Combine {
            pre,
            z2,
            p2,
            method,
            levels,
        } => commands::combine(&pre, z2, p2, method, &levels)?,
        Command::Design(a) => commands::design(&a)?,
        Command::Interim(a) => commands::interim(&a)?,
        Command::Simulate(a) => commands::simulate(&a, &ctx)?,
        Command::Superiority(a) => commands::superiority(&a)?,
        Command::Figures(a) => commands::figures(&a)?,
        Command::Casestudy => commands::casestudy()?,
    };
    let text = out.render(ctx.format);
    if ctx.format != Format::Table {
        for n in &out.notes {
            eprintln!("{n}");
        }
    }
    match cli.out {
        Some(path) => std::fs::write(&path, text).map_err(|e| AppError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_kind() {
        let code = |e: Error| AppError::Core(e).exit_code();
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::NoTrialRequired { p1: 1e-9, c_f: 5.8e-5 }), 3);
        assert_eq!(
            code(Error::NecessaryConditionViolated {
                p1: 0.2,
                p1_bound: 0.065
            }),
            3
        );
        let numerical = Error::Numerical {
            message: "x".into(),
            estimate: 0.0,
            error: 1.0,
            evaluations: 10,
        };
        assert_eq!(code(numerical), 4);
        assert_eq!(AppError::Usage("x".into()).exit_code(), 2);
    }

    #[test]
    fn weights_parse_with_either_separator() {
        assert_eq!(parse_weights("3,2"), Ok((3.0, 2.0)));
        assert_eq!(parse_weights("3:2"), Ok((3.0, 2.0)));
        assert!(parse_weights("3").is_err());
    }
}
