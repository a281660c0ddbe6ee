mod config;
mod error;
mod output;
mod run;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use varshot_core::online::Method;

use crate::config::{parse_override, parse_value, Mode};
use crate::error::CliError;

/// Variable-shot meta-learning experiments.
///
/// Settings come from the optional TOML file, then each `--set`, then the
/// dedicated flags, later sources winning.
#[derive(Debug, Parser)]
#[command(name = "varshot", version)]
struct Args {
    /// online, offline-meta, verify or summarize.
    #[arg(long)]
    mode: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set online.meta.outer_rate=1e-3`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
    /// Comma-separated seeds, or a half-open range such as `0..5`.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated methods (toe, ftml, ftml-vl, ftml-vs, meta-sgd) or `all`.
    #[arg(long)]
    method: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cells sequentially.
    #[arg(long)]
    deterministic: bool,
    /// Shot counts for the scaling-rule check, comma-separated.
    #[arg(long)]
    s: Option<String>,
    /// Monte Carlo draws per shot count for the scaling-rule check.
    #[arg(long)]
    n_mc: Option<usize>,
    /// Ledger files to combine in summarize mode.
    ledgers: Vec<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|e| CliError::Config(format!("--{flag}: `{p}`: {e}")))
        })
        .collect()
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>, CliError> {
    if let Some((lo, hi)) = raw.split_once("..") {
        let bound = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Config(format!("--seeds: `{raw}`: {e}")))
        };
        return Ok((bound(lo)?..bound(hi)?).collect());
    }
    parse_list("seeds", raw)
}

fn toml_array<T: Into<toml::Value>>(items: Vec<T>) -> toml::Value {
    toml::Value::Array(items.into_iter().map(Into::into).collect())
}

fn overrides(args: &Args) -> Result<Vec<(String, toml::Value)>, CliError> {
    let mut list = args
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut push = |key: &str, value: toml::Value| list.push((key.to_string(), value));
    if let Some(mode) = &args.mode {
        push("mode", parse_value(mode));
    }
    if let Some(seeds) = &args.seeds {
        let seeds = parse_seeds(seeds)?;
        let as_int = |s: u64| {
            i64::try_from(s).map_err(|_| CliError::Config(format!("--seeds: {s} is too large")))
        };
        push(
            "seeds",
            toml_array(
                seeds
                    .into_iter()
                    .map(as_int)
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        );
    }
    if let Some(methods) = &args.method {
        let methods: Vec<Method> = if methods.trim() == "all" {
            Method::ALL.to_vec()
        } else {
            parse_list("method", methods)?
        };
        push(
            "methods",
            toml_array(
                methods
                    .into_iter()
                    .map(|m| m.as_str().to_string())
                    .collect(),
            ),
        );
    }
    if let Some(out) = &args.out {
        push(
            "out",
            toml::Value::String(out.to_string_lossy().into_owned()),
        );
    }
    if args.deterministic {
        push("deterministic", toml::Value::Boolean(true));
    }
    if let Some(s) = &args.s {
        let s: Vec<i64> = parse_list("s", s)?;
        push("verify.s", toml_array(s));
    }
    if let Some(n) = args.n_mc {
        let n = i64::try_from(n).map_err(|_| CliError::Config("--n-mc is too large".into()))?;
        push("verify.n_mc", toml::Value::Integer(n));
    }
    Ok(list)
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let config = config::load(args.config.as_deref(), &overrides(args)?)?;
    if config.mode != Mode::Summarize && !args.ledgers.is_empty() {
        return Err(CliError::Config(
            "ledger files are only accepted in summarize mode".into(),
        ));
    }
    match config.mode {
        Mode::Online => run::online(&config),
        Mode::OfflineMeta => run::offline(&config),
        Mode::Verify => run::verify(&config),
        Mode::Summarize => run::summarize_files(&config.out, &args.ledgers),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
