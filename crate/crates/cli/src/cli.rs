//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use icselect::info::InfoMethod;
use icselect::sim::{InspectionScheme, Reading};

#[derive(Debug, Parser)]
#[command(name = "icselect", version, about = "Post-lasso selective inference for interval-censored Cox regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for replications and numerical derivatives.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the penalised model and write the estimates as JSON.
    Fit(FitArgs),
    /// Fit, select, and report selective p-values and intervals as JSON.
    Infer(InferArgs),
    /// Coverage table of a simulated scenario as CSV.
    Simulate(SimArgs),
    /// Pooled null p-values against uniform quantiles as CSV.
    Qq(SimArgs),
    /// Conditioned pivot draws from the Gaussian linear-model oracle as CSV.
    Oracle(OracleArgs),
}

/// `lo,hi,k`: `k` log-spaced penalties in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AicSpec {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
}

fn parse_aic(s: &str) -> Result<AicSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, k] = parts[..] else {
        return Err("expected lo,hi,k".into());
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    let k: usize = k.parse().map_err(|_| format!("bad count `{k}`"))?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || k == 0 {
        return Err("need 0 < lo <= hi and k >= 1".into());
    }
    Ok(AicSpec { lo, hi, k })
}

#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct LambdaArgs {
    /// Penalty level on the summed log likelihood.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Penalty `C sqrt(n)`.
    #[arg(long = "lambda-c", value_name = "C")]
    pub lambda_c: Option<f64>,
    /// Minimum-AIC penalty over `k` log-spaced values in `[lo, hi]`.
    #[arg(long = "lambda-aic", value_name = "LO,HI,K", value_parser = parse_aic)]
    pub lambda_aic: Option<AicSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub lambda: LambdaArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long = "info-onestep")]
    pub info_onestep: Option<InfoMethod>,
    #[arg(long = "info-pivot")]
    pub info_pivot: Option<InfoMethod>,
    #[arg(long, default_value_t = icselect::info::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub methods: MethodArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value = "strong")]
    pub scenario: InspectionScheme,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Drawn at random and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `calibrated` or `literal` tuning constants.
    #[arg(long, default_value = "calibrated")]
    pub reading: Reading,
    #[command(flatten)]
    pub lambda: LambdaArgs,
    #[command(flatten)]
    pub methods: MethodArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Comma-separated true coefficients; their count sets `p`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3,-2.5,0,0,0")]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn lambda_flags_are_exclusive() {
        let r = Cli::try_parse_from(["icselect", "fit", "--input", "a.csv", "--lambda", "1", "--lambda-c", "2"]);
        assert!(r.is_err());
        let ok = Cli::try_parse_from(["icselect", "fit", "--input", "a.csv", "--lambda-aic", "1,10,5"]).unwrap();
        let Command::Fit(f) = ok.command else { panic!() };
        assert_eq!(f.lambda.lambda_aic, Some(AicSpec { lo: 1.0, hi: 10.0, k: 5 }));
    }
}
