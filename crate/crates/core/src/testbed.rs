//! End-to-end rig simulation: stepped servo motion, a configurable wear
//! model, pulse-level quadrature encoder generation and decoding,
//! first-pass calibration and campaign logging.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::fdr::CommandSchedule;
use crate::{Error, Result};

/// Default per-degree step period of the servo controller, milliseconds.
pub const DEFAULT_STEP_PERIOD_MS: u64 = 232;

/// Default encoder resolution, pulses per revolution.
pub const DEFAULT_PPR: u32 = 1024;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The servo controller's view of the output shaft.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServoState {
    pub current_deg: i32,
    pub commanded_deg: i32,
    /// Simulated milliseconds per one-degree step.
    pub step_period_ms: u64,
    /// Completed commands.
    pub cycle_count: u64,
}

impl ServoState {
    pub fn new(step_period_ms: u64) -> Self {
        Self { current_deg: 0, commanded_deg: 0, step_period_ms, cycle_count: 0 }
    }
}

/// Intermediate positions and elapsed time of one stepped move.
#[derive(Debug, Clone)]
pub struct StepTrace {
    /// Unit-degree waypoints from the old position (exclusive) to the
    /// target (inclusive), in motion order.
    pub angles: Vec<i32>,
    pub elapsed_ms: u64,
}

/// Move the servo to `target_deg` in unit-degree steps, one step per
/// `step_period_ms` of simulated time. Completion is reported exactly once
/// via the returned trace; an out-of-range target leaves the state
/// untouched.
pub fn step_servo(state: &mut ServoState, target_deg: i32) -> Result<StepTrace> {
    if target_deg.abs() > 90 {
        return Err(Error::Domain(format!("commanded position {target_deg}° outside [-90, 90]")));
    }
    state.commanded_deg = target_deg;
    let mut angles = Vec::new();
    let dir = (target_deg - state.current_deg).signum();
    let mut pos = state.current_deg;
    while pos != target_deg {
        pos += dir;
        angles.push(pos);
    }
    let elapsed_ms = angles.len() as u64 * state.step_period_ms;
    state.current_deg = target_deg;
    state.cycle_count += 1;
    Ok(StepTrace { angles, elapsed_ms })
}

/// Multiplicative gain-drift wear with an asymmetry knob.
///
/// The achieved angle for a command `c` at cycle count `t` is
/// `c·(1 + alpha·t)` for positive commands and `c·(1 + beta·alpha·t)` for
/// negative ones, plus Gaussian jitter, clamped to ±90°.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WearModel {
    /// Fractional gain drift per cycle applied to positive commands.
    pub alpha: f64,
    /// Asymmetry factor in [0, 1] scaling the drift of negative commands.
    pub beta: f64,
    /// Standard deviation of the measurement jitter, degrees.
    pub noise_sd_deg: f64,
    pub seed: u64,
}

impl Default for WearModel {
    fn default() -> Self {
        Self { alpha: 1e-6, beta: 0.0, noise_sd_deg: 0.25, seed: 0 }
    }
}

impl WearModel {
    /// A drift-free, noise-free servo.
    pub fn pristine() -> Self {
        Self { alpha: 0.0, beta: 0.0, noise_sd_deg: 0.0, seed: 0 }
    }

    /// Achieved shaft angle for a command at the given cycle count.
    /// Deterministic in (seed, cycle_count).
    pub fn apply(&self, commanded_deg: i32, cycle_count: u64) -> f64 {
        let c = commanded_deg as f64;
        let gain = if commanded_deg > 0 {
            1.0 + self.alpha * cycle_count as f64
        } else {
            1.0 + self.beta * self.alpha * cycle_count as f64
        };
        let noise = if self.noise_sd_deg > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(cycle_count)));
            Normal::new(0.0, self.noise_sd_deg).unwrap().sample(&mut rng)
        } else {
            0.0
        };
        (c * gain + noise).clamp(-90.0, 90.0)
    }
}

/// Incremental optical encoder simulated at channel-waveform level.
///
/// Channel A toggles every `360 / (2·ppr)` degrees of shaft travel with B
/// in quadrature; decoding reacts to both edges of channel A with the sign
/// taken from B, so net resolution is `2·ppr` counts per revolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderState {
    pub ppr: u32,
    pub counter: i64,
    pub a_level: bool,
    pub b_level: bool,
    pub shaft_deg: f64,
}

impl EncoderState {
    pub fn new(ppr: u32, shaft_deg: f64) -> Self {
        let (a, b) = Self::levels(ppr, shaft_deg);
        Self { ppr, counter: 0, a_level: a, b_level: b, shaft_deg }
    }

    /// Decoded counts per degree of shaft travel.
    pub fn counts_per_degree(&self) -> f64 {
        2.0 * self.ppr as f64 / 360.0
    }

    fn levels(ppr: u32, shaft_deg: f64) -> (bool, bool) {
        let period = 360.0 / ppr as f64;
        let u = shaft_deg / period;
        let fa = u - u.floor();
        let ub = u - 0.25;
        let fb = ub - ub.floor();
        (fa < 0.5, fb < 0.5)
    }

    fn sample(&mut self) {
        let (a, b) = Self::levels(self.ppr, self.shaft_deg);
        if a != self.a_level {
            // edge on channel A: direction from the B comparison
            if b != a {
                self.counter += 1;
            } else {
                self.counter -= 1;
            }
        }
        self.a_level = a;
        self.b_level = b;
    }

    /// Rotate the shaft to `target_deg`, sub-stepping densely enough that
    /// channel A toggles at most once between samples.
    pub fn advance_to(&mut self, target_deg: f64) {
        let half_period = 360.0 / (2.0 * self.ppr as f64);
        let sub = half_period / 4.0;
        let delta = target_deg - self.shaft_deg;
        let n = (delta.abs() / sub).ceil() as u64;
        let start = self.shaft_deg;
        for i in 1..=n {
            self.shaft_deg = start + delta * (i as f64 / n as f64);
            self.sample();
        }
        self.shaft_deg = target_deg;
        self.sample();
    }
}

/// Drive the encoder through a shaft trajectory; returns the counter after
/// the final point.
pub fn drive_encoder(enc: &mut EncoderState, trajectory: &[f64]) -> i64 {
    for &angle in trajectory {
        enc.advance_to(angle);
    }
    enc.counter
}

/// One logged command completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_index: u64,
    pub sim_time_ms: u64,
    pub commanded_deg: i32,
    /// Raw encoder counter at command completion.
    pub encoder_counts: i64,
}

/// Header of the campaign log file.
pub const LOG_HEADER: &str = "cycle,sim_time_ms,commanded_deg,encoder_counts";

/// Write a campaign log in the external delimiter-separated layout.
pub fn write_log<W: Write>(mut w: W, records: &[CycleRecord]) -> Result<()> {
    w.write_all(LOG_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.cycle_index, r.sim_time_ms, r.commanded_deg, r.encoder_counts)?;
    }
    Ok(())
}

/// Read a campaign log written by [`write_log`].
pub fn read_log<R: BufRead>(source: R) -> Result<Vec<CycleRecord>> {
    let mut lines = source.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(LOG_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header '{LOG_HEADER}'") });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse { line: i + 2, msg: format!("expected 4 fields, got {}", parts.len()) });
        }
        let parse = |s: &str, what: &str| -> Result<i64> {
            s.trim().parse().map_err(|_| Error::Parse { line: i + 2, msg: format!("bad {what} '{s}'") })
        };
        records.push(CycleRecord {
            cycle_index: parse(parts[0], "cycle")? as u64,
            sim_time_ms: parse(parts[1], "sim_time_ms")? as u64,
            commanded_deg: parse(parts[2], "commanded_deg")? as i32,
            encoder_counts: parse(parts[3], "encoder_counts")?,
        });
    }
    Ok(records)
}

/// First-pass mapping from commanded positions to raw encoder counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub anchors: BTreeMap<i32, i64>,
}

impl CalibrationTable {
    /// Convert a raw counter value to degrees by piecewise-linear
    /// interpolation between the calibration anchors; outside the anchor
    /// span the nearest segment is extended.
    pub fn counts_to_deg(&self, counts: i64) -> f64 {
        let pts: Vec<(f64, f64)> =
            self.anchors.iter().map(|(&deg, &c)| (c as f64, deg as f64)).collect();
        match pts.len() {
            0 => f64::NAN,
            1 => pts[0].1,
            _ => {
                let c = counts as f64;
                // anchors are count-monotone for a healthy rig
                let seg = pts
                    .windows(2)
                    .find(|w| c <= w[1].0)
                    .map(|w| (w[0], w[1]))
                    .unwrap_or((pts[pts.len() - 2], pts[pts.len() - 1]));
                let ((c0, d0), (c1, d1)) = seg;
                if (c1 - c0).abs() < f64::EPSILON {
                    return d0;
                }
                d0 + (c - c0) / (c1 - c0) * (d1 - d0)
            }
        }
    }

    /// True when larger commanded angles map to larger counts.
    pub fn is_monotone(&self) -> bool {
        self.anchors.values().zip(self.anchors.values().skip(1)).all(|(a, b)| a < b)
    }
}

/// Build the calibration table from the first schedule pass.
///
/// `positions` is the set of distinct scheduled positions that the pass
/// must cover; gaps produce an error naming every missing position.
pub fn calibrate(first_pass: &[CycleRecord], positions: &[i32]) -> Result<CalibrationTable> {
    let mut anchors = BTreeMap::new();
    for rec in first_pass {
        anchors.entry(rec.commanded_deg).or_insert(rec.encoder_counts);
    }
    let missing: Vec<i32> =
        positions.iter().copied().filter(|p| !anchors.contains_key(p)).collect();
    if !missing.is_empty() {
        return Err(Error::CalibrationIncomplete(missing));
    }
    Ok(CalibrationTable { anchors })
}

/// Campaign-level configuration of the simulated rig.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub total_cycles: u64,
    pub step_period_ms: u64,
    pub ppr: u32,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            total_cycles: 393_313,
            step_period_ms: DEFAULT_STEP_PERIOD_MS,
            ppr: DEFAULT_PPR,
            seed: 0,
        }
    }
}

/// Run a full campaign: cycle through the schedule (wrapping) until
/// `total_cycles` commands complete, logging one record per command.
/// Fully deterministic for equal (schedule, wear, config).
pub fn run_campaign(
    schedule: &CommandSchedule,
    wear: &WearModel,
    cfg: &CampaignConfig,
) -> Result<Vec<CycleRecord>> {
    if cfg.total_cycles > 0 && schedule.is_empty() {
        return Err(Error::Config("cannot run a campaign over an empty schedule".into()));
    }
    if cfg.step_period_ms == 0 {
        return Err(Error::Config("step period must be positive".into()));
    }
    if cfg.ppr == 0 {
        return Err(Error::Config("encoder resolution must be positive".into()));
    }
    // fold the campaign seed into the wear noise stream
    let effective_wear =
        WearModel { seed: wear.seed ^ splitmix64(cfg.seed), ..wear.clone() };

    let mut servo = ServoState::new(cfg.step_period_ms);
    let mut encoder = EncoderState::new(cfg.ppr, 0.0);
    let mut shaft = 0.0_f64;
    let mut sim_time_ms = 0_u64;
    let mut log = Vec::with_capacity(cfg.total_cycles as usize);

    for cycle in 0..cfg.total_cycles {
        let commanded = schedule.positions[(cycle % schedule.len() as u64) as usize];
        let achieved = effective_wear.apply(commanded, cycle);
        let trace = step_servo(&mut servo, commanded)?;
        sim_time_ms += trace.elapsed_ms;
        if trace.angles.is_empty() {
            encoder.advance_to(achieved);
        } else {
            let n = trace.angles.len();
            let start = shaft;
            for i in 1..=n {
                encoder.advance_to(start + (achieved - start) * (i as f64 / n as f64));
            }
        }
        shaft = achieved;
        log.push(CycleRecord {
            cycle_index: cycle,
            sim_time_ms,
            commanded_deg: commanded,
            encoder_counts: encoder.counter,
        });
    }
    Ok(log)
}
