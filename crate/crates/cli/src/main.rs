//! `zeta`: strip analysis of the Riemann zeta function from the command line.
//!
//! Every flag can also be set through an environment variable with the
//! `ZETA_` prefix, for example `ZETA_M_MAX=50`.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use zeta_strips::pipeline::{self, PipelineError, RunConfig, Target};
use zeta_strips::{ComplexPoint, Zeta};

#[derive(Parser)]
#[command(name = "zeta", version, about = "Strip decomposition of the Riemann zeta function")]
struct Cli {
    /// Log progress to stderr (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write all artifacts.
    Run(RunArgs),
    /// Find the critical zeros and write zeros.csv.
    Zeros {
        #[command(flatten)]
        run: RunArgs,
        /// Lower end of the scan; defaults to the strips' range.
        #[arg(long, env = "ZETA_T_MIN", requires = "t_max")]
        t_min: Option<f64>,
        #[arg(long, env = "ZETA_T_MAX", requires = "t_min")]
        t_max: Option<f64>,
    },
    /// Trace the contours bounding a range of strips.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Strip range such as `1..200`, or a single strip.
        #[arg(long = "m", value_name = "A..B", env = "ZETA_M")]
        range: StripRange,
    },
    /// Build the strips and write strips.csv.
    Strips(RunArgs),
    /// Recompute statistics and figures from cached zeros and traces.
    Report(RunArgs),
    /// Run the consistency checks; exits with status 2 if any fails.
    Validate(RunArgs),
    /// Evaluate zeta at one point.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Also print the derivative.
        #[arg(long)]
        deriv: bool,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, env = "ZETA_M_MAX", default_value_t = 200)]
    m_max: u32,
    #[arg(long, env = "ZETA_SIGMA_RIGHT", default_value_t = 8.0, allow_hyphen_values = true)]
    sigma_right: f64,
    #[arg(long, env = "ZETA_SIGMA_LEFT", default_value_t = -3.0, allow_hyphen_values = true)]
    sigma_left: f64,
    #[arg(long, env = "ZETA_MEASUREMENT_SIGMA", default_value_t = 0.5, allow_hyphen_values = true)]
    measurement_sigma: f64,
    /// Round strip heights to integers before fitting, as if read off a plot.
    #[arg(long, env = "ZETA_ROUNDING_EMULATION", default_value_t = true, action = clap::ArgAction::Set)]
    rounding_emulation: bool,
    #[arg(long, short, env = "ZETA_OUTPUT_DIR", default_value = "zeta-out")]
    output_dir: PathBuf,
    #[arg(long, env = "ZETA_SCAN_STEP", default_value_t = 0.05)]
    scan_step: f64,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "ZETA_WORKER_COUNT", default_value_t = 0)]
    worker_count: usize,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            m_max: a.m_max,
            sigma_right: a.sigma_right,
            sigma_left: a.sigma_left,
            measurement_sigma: a.measurement_sigma,
            rounding_emulation: a.rounding_emulation,
            output_dir: a.output_dir,
            scan_step: a.scan_step,
            worker_count: a.worker_count,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct StripRange {
    lo: u32,
    hi: u32,
}

impl std::str::FromStr for StripRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("bad strip number `{x}`: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let m = parse(s)?;
                (m, m)
            }
        };
        if lo == 0 || hi < lo {
            return Err(format!("strip range must satisfy 1 <= A <= B, got {s}"));
        }
        Ok(StripRange { lo, hi })
    }
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Invalid(anyhow::Error),
    Error(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    match e {
        PipelineError::Config(_) => Failure::Invalid(e.into()),
        other => Failure::Error(other.into()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn execute(config: RunConfig, target: Target) -> Result<(), Failure> {
    let summary = pipeline::execute(&config, target).map_err(pipeline_failure)?;
    print_json(&summary)?;
    Ok(())
}

fn eval(sigma: f64, t: f64, deriv: bool) -> anyhow::Result<()> {
    let zeta = Zeta::default();
    let s = ComplexPoint::new(sigma, t);
    let value = zeta.eval(s).with_context(|| format!("evaluating zeta at {s}"))?;
    let phase = zeta.phase(s)?;
    let mut out = serde_json::json!({
        "sigma": sigma,
        "t": t,
        "re": value.value.re,
        "im": value.value.im,
        "abs_error_bound": value.abs_error_bound,
        "phase": phase.theta,
    });
    if deriv {
        let d = zeta.eval_deriv(s)?;
        out["deriv_re"] = d.value.re.into();
        out["deriv_im"] = d.value.im.into();
        out["deriv_abs_error_bound"] = d.abs_error_bound.into();
    }
    print_json(&out)
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(a) => execute(a.into(), Target::Report),
        Command::Zeros { run, t_min, t_max } => {
            let range = t_min.zip(t_max);
            execute(run.into(), Target::Zeros { range })
        }
        Command::Trace { run, range } => {
            let config: RunConfig = run.into();
            execute(
                config,
                Target::Traces {
                    m_lo: range.lo,
                    m_hi: range.hi,
                },
            )
        }
        Command::Strips(a) => execute(a.into(), Target::Strips),
        Command::Report(a) => execute(a.into(), Target::ReportFromCache),
        Command::Validate(a) => {
            let checks = pipeline::validate(&a.into());
            print_json(&checks)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Invalid(anyhow::anyhow!("failed checks: {}", failed.join(", "))))
            }
        }
        Command::Eval { sigma, t, deriv } => {
            if !(sigma.is_finite() && t.is_finite()) {
                return Err(Failure::Invalid(anyhow::anyhow!("sigma and t must be finite")));
            }
            eval(sigma, t, deriv).map_err(Failure::Error)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("zeta: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("zeta: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_ranges() {
        let r: StripRange = "1..200".parse().unwrap();
        assert_eq!((r.lo, r.hi), (1, 200));
        let r: StripRange = "3..=5".parse().unwrap();
        assert_eq!((r.lo, r.hi), (3, 5));
        let r: StripRange = "7".parse().unwrap();
        assert_eq!((r.lo, r.hi), (7, 7));
        assert!("0..3".parse::<StripRange>().is_err());
        assert!("5..2".parse::<StripRange>().is_err());
        assert!("a..b".parse::<StripRange>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
