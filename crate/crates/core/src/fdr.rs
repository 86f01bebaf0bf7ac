//! Flight-data-recorder ingestion: parsing the autopilot's servo-position
//! log, converting fine servo units to aileron deflection degrees,
//! descriptive statistics and construction of the frequency-weighted
//! command schedule that drives the rig.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Autopilot sampling rate of the recorder, in samples per second.
pub const SAMPLE_RATE_HZ: f64 = 5.0;

/// Full scale of the recorder's integer position encoding.
pub const FINE_UNIT_FULL_SCALE: i32 = 32_767;

/// Deflection magnitude mapped to full scale, in degrees.
pub const DEFLECTION_FULL_SCALE_DEG: f64 = 90.0;

/// One raw recorder row: an integer servo position sampled at 5 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrEntry {
    pub sample_index: usize,
    pub time_s: f64,
    pub fine_units: i32,
}

/// A signed aileron deflection angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeflectionSample {
    pub degrees: f64,
}

impl DeflectionSample {
    pub fn new(degrees: f64) -> Self {
        Self { degrees }
    }
}

/// Column layout of a delimiter-separated recorder file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    /// Field delimiter, a single character.
    pub delimiter: char,
    /// Name of the fine-servo-units column in the header row.
    pub units_column: String,
    /// Optional name of a time column in seconds; when absent, time is
    /// derived from the sample index at [`SAMPLE_RATE_HZ`].
    pub time_column: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            delimiter: ',',
            units_column: "servo_fine_units".to_string(),
            time_column: Some("time_s".to_string()),
        }
    }
}

/// A rejected input row and the reason it was dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowDiagnostic {
    /// 1-based line number in the source file.
    pub line: usize,
    pub reason: String,
}

/// Outcome of parsing one recorder file.
#[derive(Debug, Clone)]
pub struct FdrParse {
    pub entries: Vec<FdrEntry>,
    pub rejected: Vec<RowDiagnostic>,
}

/// Parse a delimiter-separated recorder file with a header row.
///
/// Valid rows are returned in file order. Rows with a non-integer or
/// out-of-range units cell, or with time running backwards, are counted
/// separately with a per-row diagnostic. A header missing the configured
/// units column is a configuration error.
pub fn parse_fdr<R: BufRead>(source: R, map: &ColumnMap) -> Result<FdrParse> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Config("empty input: header row required".into())),
    };
    let cols: Vec<&str> = header.split(map.delimiter).map(str::trim).collect();
    let units_idx = cols
        .iter()
        .position(|c| *c == map.units_column)
        .ok_or_else(|| Error::Config(format!("column '{}' not found in header", map.units_column)))?;
    let time_idx = match &map.time_column {
        Some(name) => Some(
            cols.iter()
                .position(|c| *c == name.as_str())
                .ok_or_else(|| Error::Config(format!("column '{name}' not found in header")))?,
        ),
        None => None,
    };

    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    let mut last_time = f64::NEG_INFINITY;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2; // header is line 1
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(map.delimiter).map(str::trim).collect();
        let Some(cell) = fields.get(units_idx) else {
            rejected.push(RowDiagnostic { line: lineno, reason: "missing units cell".into() });
            continue;
        };
        let units: i32 = match cell.parse() {
            Ok(u) => u,
            Err(_) => {
                rejected.push(RowDiagnostic {
                    line: lineno,
                    reason: format!("non-integer units cell '{cell}'"),
                });
                continue;
            }
        };
        if units.abs() > FINE_UNIT_FULL_SCALE {
            rejected.push(RowDiagnostic {
                line: lineno,
                reason: format!("units {units} outside [-32767, 32767]"),
            });
            continue;
        }
        let sample_index = entries.len();
        let time_s = match time_idx {
            Some(ti) => {
                let Some(tcell) = fields.get(ti) else {
                    rejected.push(RowDiagnostic { line: lineno, reason: "missing time cell".into() });
                    continue;
                };
                match tcell.parse::<f64>() {
                    Ok(t) => t,
                    Err(_) => {
                        rejected.push(RowDiagnostic {
                            line: lineno,
                            reason: format!("non-numeric time cell '{tcell}'"),
                        });
                        continue;
                    }
                }
            }
            None => sample_index as f64 / SAMPLE_RATE_HZ,
        };
        if time_s < last_time {
            rejected.push(RowDiagnostic {
                line: lineno,
                reason: format!("time {time_s} runs backwards"),
            });
            continue;
        }
        last_time = time_s;
        entries.push(FdrEntry { sample_index, time_s, fine_units: units });
    }
    Ok(FdrParse { entries, rejected })
}

/// Serialize entries back to the delimiter-separated layout read by
/// [`parse_fdr`].
pub fn write_fdr<W: Write>(mut w: W, entries: &[FdrEntry], map: &ColumnMap) -> Result<()> {
    let d = map.delimiter;
    match &map.time_column {
        Some(t) => writeln!(w, "{}{d}{}", t, map.units_column)?,
        None => writeln!(w, "{}", map.units_column)?,
    }
    for e in entries {
        match &map.time_column {
            Some(_) => writeln!(w, "{}{d}{}", e.time_s, e.fine_units)?,
            None => writeln!(w, "{}", e.fine_units)?,
        }
    }
    Ok(())
}

/// Convert one recorder row to a deflection angle.
///
/// The mapping is linear and odd-symmetric: full scale corresponds to
/// ±90° of deflection (servo angle = deflection + 90°).
pub fn to_deflection(entry: &FdrEntry) -> DeflectionSample {
    DeflectionSample::new(
        entry.fine_units as f64 / FINE_UNIT_FULL_SCALE as f64 * DEFLECTION_FULL_SCALE_DEG,
    )
}

/// Drop samples that cannot be real deflections: non-finite values and
/// magnitudes beyond 90°. Order is preserved.
pub fn filter_outliers(samples: &[DeflectionSample]) -> Vec<DeflectionSample> {
    samples
        .iter()
        .copied()
        .filter(|s| s.degrees.is_finite() && s.degrees.abs() <= DEFLECTION_FULL_SCALE_DEG)
        .collect()
}

/// Partition samples by sign. Zero-degree samples fall in neither group.
pub fn split_by_sign(samples: &[DeflectionSample]) -> (Vec<DeflectionSample>, Vec<DeflectionSample>) {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for s in samples {
        if s.degrees < 0.0 {
            neg.push(*s);
        } else if s.degrees > 0.0 {
            pos.push(*s);
        }
    }
    (neg, pos)
}

/// Moment and quantile summary of one sample group.
///
/// Conventions follow the usual statistics-package output: sample standard
/// deviation with n-1 denominator, adjusted (bias-corrected) skewness and
/// kurtosis, and weighted-average percentiles at h = (n+1)p. Skewness
/// needs n >= 3 and kurtosis n >= 4; below that the fields are `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub missing: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub median: f64,
    pub sd: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub se_skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub se_kurtosis: Option<f64>,
    pub range: f64,
    pub min: f64,
    pub max: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

/// Weighted-average percentile at rank h = (n+1)p over sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 + 1.0) * p;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let i = h.floor() as usize; // 1-based lower rank
    let frac = h - i as f64;
    sorted[i - 1] + frac * (sorted[i] - sorted[i - 1])
}

/// Standard error of skewness for sample size n.
pub fn se_skewness(n: usize) -> f64 {
    let n = n as f64;
    (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
}

/// Standard error of kurtosis for sample size n.
pub fn se_kurtosis(n: usize) -> f64 {
    let n = n as f64;
    let ses2 = 6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0));
    (4.0 * (n * n - 1.0) * ses2 / ((n - 3.0) * (n + 5.0))).sqrt()
}

/// Compute the descriptive summary of a sample group.
///
/// Needs at least two samples (sample variance); skewness and kurtosis and
/// their standard errors are reported only where defined.
pub fn describe(samples: &[DeflectionSample]) -> Result<DescriptiveStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "descriptive statistics need at least 2 samples, got {n}"
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.degrees).collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let variance = m2 / (nf - 1.0);
    let sd = variance.sqrt();

    let (skewness, se_skew) = if n >= 3 && sd > 0.0 {
        let sum3: f64 = xs.iter().map(|x| ((x - mean) / sd).powi(3)).sum();
        let g1 = nf / ((nf - 1.0) * (nf - 2.0)) * sum3;
        (Some(g1), Some(se_skewness(n)))
    } else {
        (None, None)
    };
    let (kurtosis, se_kurt) = if n >= 4 && sd > 0.0 {
        let sum4: f64 = xs.iter().map(|x| ((x - mean) / sd).powi(4)).sum();
        let g2 = nf * (nf + 1.0) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0)) * sum4
            - 3.0 * (nf - 1.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0));
        (Some(g2), Some(se_kurtosis(n)))
    } else {
        (None, None)
    };

    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = sorted[0];
    let max = sorted[n - 1];
    let p25 = percentile(&sorted, 0.25);
    let p50 = percentile(&sorted, 0.50);
    let p75 = percentile(&sorted, 0.75);

    Ok(DescriptiveStats {
        n,
        missing: 0,
        mean,
        se_mean: sd / nf.sqrt(),
        median: p50,
        sd,
        variance,
        skewness,
        se_skewness: se_skew,
        kurtosis,
        se_kurtosis: se_kurt,
        range: max - min,
        min,
        max,
        p25,
        p50,
        p75,
    })
}

/// The ordered command list driving the rig, with source frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandSchedule {
    /// Commanded positions in execution order, integer degrees.
    pub positions: Vec<i32>,
    /// Occurrence count of each distinct position in the source data.
    pub source_frequencies: BTreeMap<i32, usize>,
}

impl CommandSchedule {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Distinct commanded positions, ascending.
    pub fn distinct_positions(&self) -> Vec<i32> {
        self.source_frequencies.keys().copied().collect()
    }
}

/// Build the frequency-weighted schedule from deflection samples.
///
/// Positions are rounded to whole degrees; each distinct position is
/// repeated `round(freq / total * target_len)` times with a floor of one,
/// then the list is shuffled deterministically by `seed`.
pub fn build_schedule(
    samples: &[DeflectionSample],
    target_len: usize,
    seed: u64,
) -> Result<CommandSchedule> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("cannot build a schedule from no samples".into()));
    }
    let mut freqs: BTreeMap<i32, usize> = BTreeMap::new();
    for s in samples {
        let deg = s.degrees.round() as i32;
        if deg.abs() > 90 {
            return Err(Error::Domain(format!("sample {deg}° outside [-90, 90]")));
        }
        *freqs.entry(deg).or_insert(0) += 1;
    }
    let total = samples.len() as f64;
    let mut positions = Vec::new();
    for (&pos, &count) in &freqs {
        let m = ((count as f64 / total) * target_len as f64).round() as usize;
        let m = m.max(1);
        positions.extend(std::iter::repeat_n(pos, m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positions.shuffle(&mut rng);
    Ok(CommandSchedule { positions, source_frequencies: freqs })
}

/// Deterministic generation of a recorder file shaped like the case-study
/// flight: 7854 rows of which 1095 are negative deflections, 6557 positive
/// and the rest a zero dead band, with integer-degree positions drawn from
/// the published command list frequencies.
pub mod synth {
    use super::*;

    /// The published sample of prepared command positions (119 entries,
    /// spanning -30..=37 degrees).
    pub const REFERENCE_POSITIONS: [i32; 119] = [
        4, -11, 13, -11, 32, 15, 7, 17, 23, 14, //
        3, 11, 11, 11, 10, 17, -1, -11, 18, 6, //
        25, -10, 25, 20, 11, 10, 7, -24, 7, 37, //
        8, 14, -18, -14, 10, 11, -4, 17, 35, 6, //
        3, 14, 28, 17, 34, -6, 11, -30, 4, 13, //
        17, 21, 11, 15, -20, -1, 24, 20, 6, -11, //
        14, 13, 24, -25, 21, 8, -13, 23, 14, -15, //
        3, 14, 17, 30, 31, 15, -28, 14, -11, 15, //
        1, 27, 13, -8, 8, -3, -7, 10, 8, 10, //
        7, 18, 27, 14, 20, 8, 4, 13, 15, -17, //
        23, -11, -3, 18, 8, 20, 13, -21, 6, -27, //
        -23, 21, 15, 13, 10, 13, 28, 15, 7,
    ];

    /// Total rows in the synthetic flight.
    pub const TOTAL_ROWS: usize = 7854;
    /// Negative-deflection rows.
    pub const NEGATIVE_ROWS: usize = 1095;
    /// Positive-deflection rows.
    pub const POSITIVE_ROWS: usize = 6557;

    fn weighted_pool(positions: &[i32]) -> (Vec<i32>, Vec<usize>) {
        let mut freq: BTreeMap<i32, usize> = BTreeMap::new();
        for &p in positions {
            *freq.entry(p).or_insert(0) += 1;
        }
        (freq.keys().copied().collect(), freq.values().copied().collect())
    }

    fn draw_group(
        rng: &mut ChaCha8Rng,
        values: &[i32],
        weights: &[usize],
        count: usize,
    ) -> Vec<f64> {
        let total: usize = weights.iter().sum();
        let mut out = Vec::with_capacity(count);
        // one of each first, so every distinct position survives into the
        // frequency table regardless of sample size
        for &v in values {
            out.push(v as f64 + rng.random_range(-0.45..0.45));
        }
        while out.len() < count {
            let mut pick = rng.random_range(0..total);
            let mut chosen = values[0];
            for (v, w) in values.iter().zip(weights) {
                if pick < *w {
                    chosen = *v;
                    break;
                }
                pick -= w;
            }
            out.push(chosen as f64 + rng.random_range(-0.45..0.45));
        }
        out.truncate(count);
        out
    }

    /// Generate the synthetic flight log, seeded and reproducible.
    pub fn synthetic_flight(seed: u64) -> Vec<FdrEntry> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let neg_src: Vec<i32> =
            REFERENCE_POSITIONS.iter().copied().filter(|&p| p < 0).collect();
        let mut pos_src: Vec<i32> =
            REFERENCE_POSITIONS.iter().copied().filter(|&p| p > 0).collect();
        // one command value the published sample happens to miss; added so
        // the distinct-position count matches the study's 48 subjects
        pos_src.push(5);

        let (nv, nw) = weighted_pool(&neg_src);
        let (pv, pw) = weighted_pool(&pos_src);

        let mut degrees = Vec::with_capacity(TOTAL_ROWS);
        degrees.extend(draw_group(&mut rng, &nv, &nw, NEGATIVE_ROWS));
        degrees.extend(draw_group(&mut rng, &pv, &pw, POSITIVE_ROWS));
        degrees.extend(std::iter::repeat_n(0.0, TOTAL_ROWS - NEGATIVE_ROWS - POSITIVE_ROWS));
        degrees.shuffle(&mut rng);

        degrees
            .into_iter()
            .enumerate()
            .map(|(i, deg)| FdrEntry {
                sample_index: i,
                time_s: i as f64 / SAMPLE_RATE_HZ,
                fine_units: (deg / DEFLECTION_FULL_SCALE_DEG * FINE_UNIT_FULL_SCALE as f64).round()
                    as i32,
            })
            .collect()
    }
}
