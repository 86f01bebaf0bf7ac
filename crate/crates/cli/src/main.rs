//! `rigsim`: drive the servo destructive-test pipeline end to end —
//! recorder ingestion, schedule generation, campaign simulation, the
//! repeated-measures analysis and report rendering.

mod config;
mod render;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use config::{Overrides, PipelineConfig, Preset};
use rigsim_core::anova;
use rigsim_core::fdr::{self, ColumnMap, CommandSchedule, DeflectionSample, DescriptiveStats};
use rigsim_core::report::{self, ReportBundle};
use rigsim_core::testbed::{self, CampaignConfig, WearModel};

#[derive(Parser)]
#[command(name = "rigsim", about = "Servo destructive-test rig simulator and analysis pipeline")]
struct Cli {
    /// Path to a TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named scale preset applied on top of the config file.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the recorder file; write the positions file and print
    /// sign-split descriptive statistics and the position frequency table.
    Ingest,
    /// Build the frequency-weighted command schedule from the positions file.
    GenSchedule,
    /// Run the wear campaign over the schedule and write the cycle log.
    Simulate,
    /// Build the subject matrix from the log and run the full analysis.
    Analyze,
    /// Render a stored report as markdown, CSV tables or SVG charts.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Directory receiving the rendered artifacts.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Svg,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = PipelineConfig::load(cli.config.as_deref(), cli.preset, &cli.overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::GenSchedule => cmd_gen_schedule(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Analyze => cmd_analyze(&cfg),
        Command::Report { format, out_dir } => cmd_report(&cfg, format, &out_dir),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn open_reader(path: &str) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {path}"))?,
    ))
}

fn print_stats(label: &str, stats: &DescriptiveStats) {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    println!("{label}");
    println!("  n {}  missing {}", stats.n, stats.missing);
    println!("  mean {:.4}  se_mean {:.4}  median {:.4}", stats.mean, stats.se_mean, stats.median);
    println!("  sd {:.4}  variance {:.4}", stats.sd, stats.variance);
    println!(
        "  skewness {}  se_skewness {}  kurtosis {}  se_kurtosis {}",
        opt(stats.skewness),
        opt(stats.se_skewness),
        opt(stats.kurtosis),
        opt(stats.se_kurtosis)
    );
    println!("  range {:.4}  min {:.4}  max {:.4}", stats.range, stats.min, stats.max);
    println!("  p25 {:.4}  p50 {:.4}  p75 {:.4}", stats.p25, stats.p50, stats.p75);
}

fn cmd_ingest(cfg: &PipelineConfig) -> Result<()> {
    let map = ColumnMap {
        delimiter: cfg.delimiter,
        units_column: cfg.units_column.clone(),
        time_column: cfg.time_column.clone(),
    };
    let parsed = fdr::parse_fdr(open_reader(&cfg.fdr_path)?, &map)
        .with_context(|| format!("failed to parse {}", cfg.fdr_path))?;
    for rej in &parsed.rejected {
        eprintln!("{}:{}: rejected row: {}", cfg.fdr_path, rej.line, rej.reason);
    }
    let deflections: Vec<DeflectionSample> =
        parsed.entries.iter().map(fdr::to_deflection).collect();
    let kept = fdr::filter_outliers(&deflections);

    let mut out = BufWriter::new(
        File::create(&cfg.positions_path)
            .with_context(|| format!("cannot create {}", cfg.positions_path))?,
    );
    for s in &kept {
        writeln!(out, "{}", s.degrees)?;
    }
    out.flush()?;

    println!(
        "parsed {} rows ({} rejected), wrote {} positions to {}",
        parsed.entries.len(),
        parsed.rejected.len(),
        kept.len(),
        cfg.positions_path
    );

    let (neg, pos) = fdr::split_by_sign(&kept);
    if let Ok(stats) = fdr::describe(&neg) {
        print_stats("negative positions", &stats);
    }
    if let Ok(stats) = fdr::describe(&pos) {
        print_stats("positive positions", &stats);
    }

    let mut freqs: BTreeMap<i32, usize> = BTreeMap::new();
    for s in &kept {
        *freqs.entry(s.degrees.round() as i32).or_insert(0) += 1;
    }
    println!("position frequencies (rounded to whole degrees):");
    for (pos, count) in &freqs {
        println!("  {pos:>4}  {count}");
    }
    Ok(())
}

fn read_positions(path: &str) -> Result<Vec<DeflectionSample>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let degrees: f64 = line
            .parse()
            .with_context(|| format!("{path}:{}: bad position value '{line}'", i + 1))?;
        samples.push(DeflectionSample::new(degrees));
    }
    Ok(samples)
}

fn cmd_gen_schedule(cfg: &PipelineConfig) -> Result<()> {
    let samples = read_positions(&cfg.positions_path)?;
    let schedule = fdr::build_schedule(&samples, cfg.schedule_length, cfg.schedule_seed)?;
    let mut out = BufWriter::new(
        File::create(&cfg.schedule_path)
            .with_context(|| format!("cannot create {}", cfg.schedule_path))?,
    );
    for pos in &schedule.positions {
        writeln!(out, "{pos}")?;
    }
    out.flush()?;
    let distinct = schedule.distinct_positions();
    println!(
        "wrote {} commands ({} distinct, span {}..{}) to {}",
        schedule.len(),
        distinct.len(),
        distinct.first().copied().unwrap_or(0),
        distinct.last().copied().unwrap_or(0),
        cfg.schedule_path
    );
    Ok(())
}

fn read_schedule(path: &str) -> Result<CommandSchedule> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
    let mut positions = Vec::new();
    let mut freqs: BTreeMap<i32, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let pos: i32 = line
            .parse()
            .with_context(|| format!("{path}:{}: bad command '{line}'", i + 1))?;
        positions.push(pos);
        *freqs.entry(pos).or_insert(0) += 1;
    }
    if positions.is_empty() {
        bail!("{path}: schedule is empty");
    }
    Ok(CommandSchedule { positions, source_frequencies: freqs })
}

fn cmd_simulate(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let schedule = read_schedule(&cfg.schedule_path)?;
    let wear = WearModel {
        alpha: cfg.wear_alpha,
        beta: cfg.wear_beta,
        noise_sd_deg: cfg.wear_noise_sd_deg,
        seed: cfg.wear_seed,
    };
    let campaign = CampaignConfig {
        total_cycles: cfg.total_cycles,
        step_period_ms: cfg.step_period_ms,
        ppr: cfg.ppr,
        seed: cfg.campaign_seed,
    };
    let log = testbed::run_campaign(&schedule, &wear, &campaign)?;
    let mut out = BufWriter::new(
        File::create(&cfg.log_path).with_context(|| format!("cannot create {}", cfg.log_path))?,
    );
    testbed::write_log(&mut out, &log)?;
    out.flush()?;
    let hours = log.last().map(|r| r.sim_time_ms as f64 / 3_600_000.0).unwrap_or(0.0);
    println!("wrote {} cycles to {} ({hours:.1} simulated hours)", log.len(), cfg.log_path);
    Ok(())
}

fn cmd_analyze(cfg: &PipelineConfig) -> Result<()> {
    let log = testbed::read_log(open_reader(&cfg.log_path)?)
        .with_context(|| format!("failed to read {}", cfg.log_path))?;
    let matrix = anova::build_subject_matrix(
        &log,
        cfg.period_cycles,
        cfg.n_periods,
        cfg.sample_size,
        cfg.sampling_seed,
    )?;
    let bundle = report::analyze(&matrix)?;
    let json = serde_json::to_string_pretty(&bundle)?;
    std::fs::write(&cfg.report_path, json + "\n")
        .with_context(|| format!("cannot write {}", cfg.report_path))?;
    println!(
        "analyzed {} subjects x {} periods; omnibus F = {:.3}; report written to {}",
        bundle.n, bundle.k, bundle.within.f, cfg.report_path
    );
    for note in &bundle.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn cmd_report(cfg: &PipelineConfig, format: Format, out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(&cfg.report_path)
        .with_context(|| format!("cannot read {}", cfg.report_path))?;
    let bundle: ReportBundle = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a valid report file", cfg.report_path))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut written = Vec::new();
    match format {
        Format::Markdown => {
            let path = out_dir.join("report.md");
            std::fs::write(&path, render::markdown(&bundle))?;
            written.push(path);
        }
        Format::Csv => {
            for (name, table) in render::csv_tables(&bundle) {
                let path = out_dir.join(format!("report_{name}.csv"));
                std::fs::write(&path, table)?;
                written.push(path);
            }
        }
        Format::Svg => {
            for (name, svg) in [
                ("chart_period_means.svg", render::svg_period_means(&bundle)),
                ("chart_sign_clusters.svg", render::svg_sign_clusters(&bundle)),
                ("chart_scatter_fit.svg", render::svg_scatter_fit(&bundle)),
            ] {
                let path = out_dir.join(name);
                std::fs::write(&path, svg)?;
                written.push(path);
            }
        }
    }
    for path in &written {
        println!("{}", path.display());
    }
    Ok(())
}
