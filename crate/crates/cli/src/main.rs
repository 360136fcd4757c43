//! `dircast` — train direction classifiers on daily bars and backtest them.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dircast_core::experiment::{gen_synthetic, run, write_outputs, RunConfig, RunReport};
use dircast_core::features::assemble;
use dircast_core::indicators::{catalog_with, IndicatorSettings};
use dircast_core::market_data::{load_series, save_series, BarSeries};
use dircast_core::Scaler;

#[derive(Parser)]
#[command(
    name = "dircast",
    version,
    about = "Daily market-direction forecasting: indicators, three classifiers, \
             walk-forward evaluation, backtest"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment described by a TOML config file.
    Run {
        /// Path to the config; every omitted key takes its documented default.
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic daily OHLCV series and write it as CSV.
    GenSynthetic {
        /// Number of trading days.
        #[arg(long)]
        days: usize,
        /// RNG seed; same seed, same series.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Mixing weight of the learnable drift pattern, 0 (pure random
        /// walk) through 1.
        #[arg(long, default_value_t = 0.8)]
        signal: f64,
        /// Output CSV path (date,open,high,low,close,volume).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print every indicator series for a bar CSV as one wide CSV table.
    DumpIndicators {
        /// Input bar CSV (date,open,high,low,close,volume).
        #[arg(long)]
        data: PathBuf,
        /// Optional config whose [indicators] section overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the assembled model-ready feature matrix ([0,1]-scaled) as CSV.
    DumpFeatures {
        /// Input bar CSV (date,open,high,low,close,volume).
        #[arg(long)]
        data: PathBuf,
        /// Optional config whose [indicators] section overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-emit an existing run report in the chosen format.
    Report {
        /// Path to a report.json produced by `run`.
        #[arg(long, default_value = "out/report.json")]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::GenSynthetic {
            days,
            seed,
            signal,
            out,
        } => cmd_gen_synthetic(days, seed, signal, &out),
        Command::DumpIndicators { data, config } => cmd_dump(&data, config.as_deref(), false),
        Command::DumpFeatures { data, config } => cmd_dump(&data, config.as_deref(), true),
        Command::Report { report, format } => cmd_report(&report, format),
    }
}

fn cmd_run(config_path: &std::path::Path) -> Result<()> {
    let config = RunConfig::load(config_path)
        .with_context(|| format!("loading config {}", config_path.display()))?;
    log::info!(
        "running {} windows of train {} / test {}",
        config
            .protocol
            .models
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join("+"),
        config.protocol.train_len,
        config.protocol.test_len
    );
    let report = run(&config).context("experiment failed")?;
    let written = write_outputs(&report, &config.output).context("writing outputs")?;
    for (name, averages) in &report.averages {
        println!(
            "{name}: accuracy {:.2}% over {} windows",
            100.0 * averages.metrics.accuracy,
            averages.windows_used
        );
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    let failures: usize = report
        .windows
        .iter()
        .flat_map(|w| w.models.values())
        .filter(|m| m.error.is_some())
        .count();
    if failures > 0 {
        log::warn!("{failures} model/window fits failed; see report.json");
    }
    Ok(())
}

fn cmd_gen_synthetic(days: usize, seed: u64, signal: f64, out: &std::path::Path) -> Result<()> {
    let series = gen_synthetic(days, seed, signal)
        .with_context(|| format!("generating {days} days at signal {signal}"))?;
    save_series(&series, out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} bars to {}", series.len(), out.display());
    Ok(())
}

fn indicator_settings(config: Option<&std::path::Path>) -> Result<IndicatorSettings> {
    match config {
        None => Ok(IndicatorSettings::default()),
        Some(path) => {
            let run_config = RunConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?;
            Ok(run_config.indicators)
        }
    }
}

fn load_bars(data: &std::path::Path) -> Result<BarSeries> {
    load_series(data).with_context(|| format!("loading bars from {}", data.display()))
}

fn cmd_dump(data: &std::path::Path, config: Option<&std::path::Path>, scaled: bool) -> Result<()> {
    let series = load_bars(data)?;
    let specs = catalog_with(&indicator_settings(config)?);
    let features = assemble(&series, &specs).context("assembling indicator matrix")?;
    let matrix = if scaled {
        let scaler = Scaler::fit(&features).context("fitting the [0,1] scaler")?;
        scaler.transform(&features).context("scaling features")?
    } else {
        features
    };
    print!("{}", matrix.to_csv_string());
    Ok(())
}

fn cmd_report(report_path: &std::path::Path, format: ReportFormat) -> Result<()> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let report = RunReport::from_json(&text).context("parsing run report")?;
    match format {
        ReportFormat::Json => {
            println!("{}", report.to_json().context("serializing report")?);
        }
        ReportFormat::Csv => {
            for metric in ["accuracy", "precision", "recall", "f_score"] {
                println!("# {metric} (% per window)");
                print!("{}", report.metric_table_csv(metric));
                println!();
            }
            println!("# trading summary");
            print!("{}", report.trading_table_csv());
            println!();
            println!("# worst drawdowns");
            print!("{}", report.drawdown_table_csv());
            if let Some(curve) = report.equity_curve_csv() {
                println!();
                println!("# equity curves (cumulative %)");
                print!("{curve}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn report_format_accepts_both_names() {
        assert!(matches!(
            ReportFormat::from_str("json", true),
            Ok(ReportFormat::Json)
        ));
        assert!(matches!(
            ReportFormat::from_str("csv", true),
            Ok(ReportFormat::Csv)
        ));
    }
}
