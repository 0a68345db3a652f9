// SPDX-License-Identifier: Apache-2.0

//! `shade` command-line interface.
//!
//! Exit codes: 0 on success, 1 on input validation failure, 2 on
//! configuration or usage errors. Log verbosity is read from `SHADE_LOG`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use shade_core::evaluation::{detect, error_columns, pairwise_win_rates, subsample_eval, EvalOptions};
use shade_core::record::write_jsonl;
use shade_core::report::{
    read_error_columns, write_bundles_csv, write_bundles_jsonl, write_detection_report, write_error_report,
    write_query_errors, write_winrate_report,
};
use shade_core::synthetic::{generate_pool, SyntheticSpec};
use shade_core::{load_jsonl, score_queries, Error, LoadMode, Query, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "shade", version, about = "Semantic alphabet-size estimation and entropy risk scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct InputArgs {
    /// Query records, one JSON object per line.
    #[arg(long)]
    input: PathBuf,
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip malformed lines instead of aborting.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit every estimate for each query.
    Score {
        #[command(flatten)]
        input: InputArgs,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Output format; inferred from the output extension, CSV otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Subsampled alphabet-size error against the pool pseudo-oracle.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write trial-averaged per-query errors (input for `winrates --errors`).
        #[arg(long)]
        errors_out: Option<PathBuf>,
    },
    /// Pairwise win rates of one estimator against the others.
    Winrates {
        /// Query pool to subsample at the configured `winrate_n_values`.
        #[arg(long, conflicts_with = "errors", required_unless_present = "errors")]
        input: Option<PathBuf>,
        /// Precomputed per-item error columns (CSV).
        #[arg(long)]
        errors: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lenient: bool,
        /// Column compared against every other column.
        #[arg(long, default_value = "shade")]
        reference: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// ROC-AUC incorrectness detection grouped by dataset tag.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic query pool.
    Simulate {
        /// Synthetic pool description (TOML); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of queries in the spec.
        #[arg(long)]
        queries: Option<usize>,
        /// Override the spec seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHADE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = err
                .chain()
                .any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::Config(_))));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Score { input, output, format } => {
            let cfg = load_config(input.config.as_deref())?;
            let queries = load_queries(&input.input, input.lenient)?;
            let bundles = score_queries(&queries, &cfg.fusion())?;
            let rows: Vec<_> = queries.iter().map(|q| q.id.clone()).zip(bundles).collect();
            let meta = metadata("score", &cfg);
            let format = format.unwrap_or_else(|| match output.as_deref().and_then(Path::extension) {
                Some(ext) if ext == "jsonl" || ext == "json" => Format::Jsonl,
                _ => Format::Csv,
            });
            let w = writer(output.as_deref())?;
            match format {
                Format::Csv => write_bundles_csv(w, &rows, &meta)?,
                Format::Jsonl => write_bundles_jsonl(w, &rows, &meta)?,
            }
            info!("scored {} queries", rows.len());
        }
        Command::Evaluate { input, output, errors_out } => {
            let cfg = load_config(input.config.as_deref())?;
            let queries = load_queries(&input.input, input.lenient)?;
            let eval = subsample_eval(&queries, &cfg.eval_options(), &cfg.fusion())?;
            let meta = metadata("evaluate", &cfg);
            write_error_report(writer(output.as_deref())?, &eval.report, &meta)?;
            if let Some(path) = errors_out {
                write_query_errors(writer(Some(&path))?, &eval, &meta)?;
            }
            info!("evaluated {} queries", eval.report.queries);
        }
        Command::Winrates { input, errors, config, lenient, reference, output } => {
            let cfg = load_config(config.as_deref())?;
            let columns = match (input, errors) {
                (_, Some(path)) => {
                    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    read_error_columns(file)?
                }
                (Some(path), None) => {
                    let queries = load_queries(&path, lenient)?;
                    let opts = EvalOptions {
                        n_values: cfg.winrate_n_values.clone(),
                        ..cfg.eval_options()
                    };
                    let eval = subsample_eval(&queries, &opts, &cfg.fusion())?;
                    error_columns(&eval, &cfg.winrate_n_values)
                }
                (None, None) => bail!(Error::Config("winrates needs --input or --errors".into())),
            };
            let report = pairwise_win_rates(&reference, &columns)?;
            write_winrate_report(writer(output.as_deref())?, &report, &metadata("winrates", &cfg))?;
        }
        Command::Detect { input, output } => {
            let cfg = load_config(input.config.as_deref())?;
            let queries = load_queries(&input.input, input.lenient)?;
            let report = detect(&queries, &cfg.detect_options(), &cfg.fusion())?;
            write_detection_report(writer(output.as_deref())?, &report, &metadata("detect", &cfg))?;
        }
        Command::Simulate { spec, out, queries, seed } => {
            let mut spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    toml::from_str::<SyntheticSpec>(&text).map_err(|e| Error::Config(e.to_string()))?
                }
                None => SyntheticSpec::default(),
            };
            if let Some(q) = queries {
                spec.queries = q;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            let records = generate_pool(&spec, spec.queries)?;
            let meta = serde_json::json!({
                "tool": "shade",
                "version": env!("CARGO_PKG_VERSION"),
                "command": "simulate",
                "spec": spec,
            });
            write_jsonl(writer(out.as_deref())?, &meta, &records)?;
            info!("wrote {} synthetic queries", records.len());
        }
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn load_queries(path: &Path, lenient: bool) -> Result<Vec<Query>> {
    let mode = if lenient { LoadMode::Lenient } else { LoadMode::Strict };
    let loaded = load_jsonl(path, mode).with_context(|| format!("loading {}", path.display()))?;
    if !loaded.warnings.is_empty() {
        warn!("{}: {} warning(s)", path.display(), loaded.warnings.len());
    }
    Ok(loaded.queries)
}

fn metadata(command: &str, cfg: &RunConfig) -> serde_json::Value {
    serde_json::json!({
        "tool": "shade",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
    })
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
