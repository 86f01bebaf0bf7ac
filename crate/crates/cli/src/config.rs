//! Flat key-value pipeline configuration: TOML file, preset scaling and
//! flag overrides, merged in that order.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Everything the pipeline needs, with explicit seeds throughout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    // file paths
    pub fdr_path: String,
    pub positions_path: String,
    pub schedule_path: String,
    pub log_path: String,
    pub report_path: String,

    // recorder parsing
    pub units_column: String,
    pub time_column: Option<String>,
    pub delimiter: char,

    // schedule construction
    pub schedule_length: usize,

    // wear model
    pub wear_alpha: f64,
    pub wear_beta: f64,
    pub wear_noise_sd_deg: f64,

    // campaign
    pub total_cycles: u64,
    pub step_period_ms: u64,
    pub ppr: u32,

    // analysis
    pub period_cycles: usize,
    pub n_periods: usize,
    pub sample_size: usize,

    // seeds (never wall-clock)
    pub schedule_seed: u64,
    pub campaign_seed: u64,
    pub wear_seed: u64,
    pub sampling_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fdr_path: "flight.csv".into(),
            positions_path: "positions.txt".into(),
            schedule_path: "schedule.txt".into(),
            log_path: "campaign.csv".into(),
            report_path: "report.json".into(),
            units_column: "servo_fine_units".into(),
            time_column: Some("time_s".into()),
            delimiter: ',',
            schedule_length: 119,
            wear_alpha: 1e-6,
            wear_beta: 0.0,
            wear_noise_sd_deg: 0.25,
            total_cycles: 393_313,
            step_period_ms: 232,
            ppr: 1024,
            period_cycles: 131_000,
            n_periods: 3,
            sample_size: 5000,
            schedule_seed: 1,
            campaign_seed: 2,
            wear_seed: 3,
            sampling_seed: 4,
        }
    }
}

/// Named scale presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Desk-scale run: 39,300 cycles, 13,100-cycle periods, 500-sample draws.
    PaperMini,
}

/// Per-field command-line overrides; any set flag wins over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub schedule_length: Option<usize>,
    #[arg(long, global = true)]
    pub wear_alpha: Option<f64>,
    #[arg(long, global = true)]
    pub wear_beta: Option<f64>,
    #[arg(long, global = true)]
    pub wear_noise_sd_deg: Option<f64>,
    #[arg(long, global = true)]
    pub total_cycles: Option<u64>,
    #[arg(long, global = true)]
    pub step_period_ms: Option<u64>,
    #[arg(long, global = true)]
    pub ppr: Option<u32>,
    #[arg(long, global = true)]
    pub period_cycles: Option<usize>,
    #[arg(long, global = true)]
    pub n_periods: Option<usize>,
    #[arg(long, global = true)]
    pub sample_size: Option<usize>,
    #[arg(long, global = true)]
    pub schedule_seed: Option<u64>,
    #[arg(long, global = true)]
    pub campaign_seed: Option<u64>,
    #[arg(long, global = true)]
    pub wear_seed: Option<u64>,
    #[arg(long, global = true)]
    pub sampling_seed: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, preset: Option<Preset>, ov: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("cannot parse config file {}", p.display()))?
            }
            None => Self::default(),
        };
        if let Some(Preset::PaperMini) = preset {
            cfg.total_cycles = 39_300;
            cfg.period_cycles = 13_100;
            cfg.sample_size = 500;
        }
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = ov.$field { cfg.$field = v; })*
            };
        }
        apply!(
            schedule_length, wear_alpha, wear_beta, wear_noise_sd_deg, total_cycles,
            step_period_ms, ppr, period_cycles, n_periods, sample_size,
            schedule_seed, campaign_seed, wear_seed, sampling_seed
        );
        Ok(cfg)
    }

    /// Collect every configuration problem, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.schedule_length == 0 {
            problems.push("schedule_length must be positive".to_string());
        }
        if self.step_period_ms == 0 {
            problems.push("step_period_ms must be positive".to_string());
        }
        if self.ppr == 0 {
            problems.push("ppr must be positive".to_string());
        }
        if self.n_periods < 2 {
            problems.push(format!("n_periods must be at least 2, got {}", self.n_periods));
        }
        if self.period_cycles == 0 {
            problems.push("period_cycles must be positive".to_string());
        }
        if self.sample_size == 0 {
            problems.push("sample_size must be positive".to_string());
        }
        if self.wear_noise_sd_deg < 0.0 {
            problems.push(format!("wear_noise_sd_deg must be non-negative, got {}", self.wear_noise_sd_deg));
        }
        if !(0.0..=1.0).contains(&self.wear_beta) {
            problems.push(format!("wear_beta must be in [0, 1], got {}", self.wear_beta));
        }
        let needed = self.period_cycles as u64 * self.n_periods as u64;
        if self.total_cycles < needed {
            problems.push(format!(
                "total_cycles {} is below n_periods x period_cycles = {needed}",
                self.total_cycles
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  - {}", problems.join("\n  - "));
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.total_cycles, cfg.total_cycles);
        assert_eq!(back.units_column, cfg.units_column);
    }

    #[test]
    fn preset_and_overrides_win_in_order() {
        let ov = Overrides { sample_size: Some(250), ..Overrides::default() };
        let cfg = PipelineConfig::load(None, Some(Preset::PaperMini), &ov).unwrap();
        assert_eq!(cfg.total_cycles, 39_300);
        assert_eq!(cfg.period_cycles, 13_100);
        assert_eq!(cfg.sample_size, 250); // flag beats preset
    }

    #[test]
    fn validate_reports_all_problems() {
        let cfg = PipelineConfig {
            ppr: 0,
            n_periods: 1,
            total_cycles: 10,
            ..PipelineConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("ppr"));
        assert!(msg.contains("n_periods"));
        assert!(msg.contains("total_cycles"));
    }
}
