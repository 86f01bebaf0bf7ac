//! Acceptance gate: one test per published anchor or behavioral property,
//! each printing a PASS/FAIL line. The reference subject matrix is
//! reconstructed from the published per-period summaries with exact
//! moment matching (see `reconstruct`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigsim_core::anova::{self, Correction, SubjectMatrix};
use rigsim_core::fdr::{self, synth};
use rigsim_core::reconstruct;
use rigsim_core::testbed::{self, CampaignConfig, WearModel};
use rigsim_core::{dist, report};

/// Published per-period summaries: means, sds (n = 48 each) and the
/// variances of the pairwise period difference scores.
const MEANS: [f64; 3] = [54.3347, 59.9299, 66.6863];
const SDS: [f64; 3] = [44.81194, 50.30706, 55.13150];
const DIFF_VARS: [(usize, usize, f64); 3] =
    [(0, 1, 54.662), (1, 2, 224.155), (0, 2, 245.42)];
const N: usize = 48;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn criterion(&mut self, number: u32, label: &str, result: Result<(), String>) {
        match result {
            Ok(()) => println!("PASS criterion {number}: {label}"),
            Err(msg) => {
                println!("FAIL criterion {number}: {label} - {msg}");
                self.failures.push(format!("criterion {number} ({label}): {msg}"));
            }
        }
    }

    fn finish(self) {
        assert!(self.failures.is_empty(), "acceptance failures:\n{}", self.failures.join("\n"));
    }
}

fn near(value: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    if (value - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what} = {value}, want {want} ± {tol}"))
    }
}

fn near_rel(value: f64, want: f64, rel: f64, what: &str) -> Result<(), String> {
    near(value, want, rel * want.abs(), what)
}

fn reference_matrix() -> SubjectMatrix {
    let cov = reconstruct::covariance_from_diff_vars(&SDS, &DIFF_VARS).unwrap();
    reconstruct::matrix_with_moments(&MEANS, &cov, N, 2024, None).unwrap()
}

fn criterion_1() -> Result<(), String> {
    let started = Instant::now();
    near(fdr::se_skewness(1095), 0.074, 0.001, "se_skew(1095)")?;
    near(fdr::se_kurtosis(1095), 0.148, 0.001, "se_kurt(1095)")?;
    near(fdr::se_skewness(6557), 0.030, 0.001, "se_skew(6557)")?;
    near(fdr::se_kurtosis(6557), 0.060, 0.001, "se_kurt(6557)")?;
    if started.elapsed().as_secs_f64() >= 1.0 {
        return Err("standard-error evaluation exceeded 1 s".into());
    }
    Ok(())
}

fn criterion_2() -> Result<(), String> {
    // rows computed from the column summaries alone, no matrix involved
    let rows = [
        // (mean, se, t, ci_low, ci_high, eta2)
        (54.335, 6.468, 8.400, 41.323, 67.347, 0.600),
        (59.930, 7.261, 8.253, 45.322, 74.538, 0.592),
        (66.686, 7.958, 8.380, 50.678, 82.695, 0.599),
    ];
    for (j, want) in rows.iter().enumerate() {
        let e = anova::estimate_from_summary(&format!("period_{}", j + 1), MEANS[j], SDS[j], N)
            .map_err(|e| e.to_string())?;
        let tag = format!("level {}", j + 1);
        near(e.mean, want.0, 0.005, &format!("{tag} mean"))?;
        near(e.se, want.1, 0.005, &format!("{tag} se"))?;
        near(e.t, want.2, 0.005, &format!("{tag} t"))?;
        near(e.ci_low, want.3, 0.005, &format!("{tag} ci_low"))?;
        near(e.ci_high, want.4, 0.005, &format!("{tag} ci_high"))?;
        near(e.partial_eta2, want.5, 0.005, &format!("{tag} partial_eta2"))?;
    }
    Ok(())
}

fn criterion_3(m: &SubjectMatrix) -> Result<(), String> {
    let r = anova::within_subjects(m).map_err(|e| e.to_string())?;
    near_rel(r.ss_effect, 3672.252, 0.005, "ss_effect")?;
    near_rel(r.ss_error, 8211.475, 0.005, "ss_error")?;
    near_rel(r.f, 21.019, 0.02, "F")?;
    near(r.partial_eta2, 0.309, 0.01, "partial_eta2")
}

fn criterion_4(m: &SubjectMatrix) -> Result<(), String> {
    let s = anova::sphericity(m).map_err(|e| e.to_string())?;
    // the Mauchly small-sample factor is exact for n = 48, k = 3
    let d = 1.0 - (2.0 * 4.0 + 2.0 + 2.0) / (6.0 * 2.0 * 47.0);
    near(d, 0.97872, 5e-6, "d")?;
    near(s.w, 0.523, 0.01, "W")?;
    near(s.chi2, 29.82, 0.3, "chi2")?;
    near(s.eps_gg, 0.677, 0.01, "eps_gg")?;
    let r = anova::within_subjects(m).map_err(|e| e.to_string())?;
    let gg = r
        .tests
        .iter()
        .find(|t| t.correction == Correction::GreenhouseGeisser)
        .ok_or("missing GG row")?;
    near(gg.df_effect, 1.354, 0.02, "df_effect_gg")?;
    near(gg.df_error, 63.64, 0.02, "df_error_gg")?;
    near_rel(gg.ms_effect, 2712.04, 0.005, "ms_gg")
}

fn criterion_5(m: &SubjectMatrix) -> Result<(), String> {
    let cs = anova::contrasts(m).map_err(|e| e.to_string())?;
    let want = [(27.491, 0.369, 1502.707), (9.775, 0.172, 2191.117)];
    for (c, (f, eta2, ss)) in cs.iter().zip(want) {
        near_rel(c.f, f, 0.01, &format!("{} F", c.label))?;
        near(c.partial_eta2, eta2, 0.005, &format!("{} eta2", c.label))?;
        near_rel(c.ss_hypothesis, ss, 0.005, &format!("{} ss", c.label))?;
    }
    Ok(())
}

fn criterion_6(m: &SubjectMatrix) -> Result<(), String> {
    let r = anova::multivariate(m).map_err(|e| e.to_string())?;
    near(r.pillai, 0.479, 0.005, "pillai")?;
    near(r.wilks, 0.521, 0.005, "wilks")?;
    near(r.hotelling, 0.919, 0.005, "hotelling")?;
    near(r.roy, 0.919, 0.005, "roy")?;
    near(r.df_hypothesis, 2.0, 1e-12, "df_hypothesis")?;
    near(r.df_error, 46.0, 1e-12, "df_error")?;
    near_rel(r.f, 21.148, 0.01, "F")
}

fn criterion_7(m: &SubjectMatrix) -> Result<(), String> {
    let pw = anova::pairwise(m, 0.05).map_err(|e| e.to_string())?;
    let d12 = pw.iter().find(|p| p.i == 1 && p.j == 2).ok_or("missing pair (1,2)")?;
    near(d12.mean_diff, -5.595, 0.01, "diff_12")?;
    near(d12.se, 1.067, 0.01, "se_12")?;
    let d13 = pw.iter().find(|p| p.i == 1 && p.j == 3).ok_or("missing pair (1,3)")?;
    near(d13.mean_diff, -12.352, 0.02, "diff_13")?;
    let b = anova::between_intercept(m).map_err(|e| e.to_string())?;
    near_rel(b.ss_intercept, 174630.6, 0.001, "ss_intercept")?;
    near_rel(b.f, 70.761, 0.01, "F_intercept")
}

fn criterion_8() -> Result<(), String> {
    let started = Instant::now();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<Vec<f64>> =
            (0..10).map(|_| (0..2).map(|_| rng.random_range(-50.0..50.0)).collect()).collect();
        let d: Vec<f64> = values.iter().map(|r| r[1] - r[0]).collect();
        let dbar = d.iter().sum::<f64>() / 10.0;
        let var = d.iter().map(|x| (x - dbar).powi(2)).sum::<f64>() / 9.0;
        if var < 1e-9 {
            continue;
        }
        let t = dbar / (var / 10.0).sqrt();
        let m = SubjectMatrix::new(
            values,
            (0..10).collect(),
            vec!["period_1".into(), "period_2".into()],
        )
        .map_err(|e| e.to_string())?;
        let r = anova::within_subjects(&m).map_err(|e| e.to_string())?;
        let rel = (r.f - t * t).abs() / (t * t).max(1e-12);
        if rel > 1e-9 {
            return Err(format!("seed {seed}: F = {} vs t² = {}", r.f, t * t));
        }
    }
    if started.elapsed().as_secs_f64() >= 5.0 {
        return Err("oracle sweep exceeded 5 s".into());
    }
    Ok(())
}

fn criterion_9() -> Result<(), String> {
    near(dist::t_quantile(0.975, 47.0).unwrap(), 2.01174, 1e-4, "t_quantile(0.975, 47)")?;
    near(dist::chi2_sf(29.82, 2.0).unwrap(), 3.34e-7, 1e-9, "chi2_sf(29.82, 2)")?;
    for d in [1.0, 5.0, 47.0] {
        near(dist::f_sf(1.0, d, d).unwrap(), 0.5, 1e-10, &format!("f_sf(1, {d}, {d})"))?;
    }
    Ok(())
}

fn criterion_10() -> Result<(), String> {
    // closed loop at zero wear over the published command list
    let mut freqs = std::collections::BTreeMap::new();
    for &p in &synth::REFERENCE_POSITIONS {
        *freqs.entry(p).or_insert(0usize) += 1;
    }
    let schedule = fdr::CommandSchedule {
        positions: synth::REFERENCE_POSITIONS.to_vec(),
        source_frequencies: freqs,
    };
    let cfg =
        CampaignConfig { total_cycles: 3 * schedule.len() as u64, ..CampaignConfig::default() };
    let log = testbed::run_campaign(&schedule, &WearModel::pristine(), &cfg)
        .map_err(|e| e.to_string())?;
    let table = testbed::calibrate(&log[..schedule.len()], &schedule.distinct_positions())
        .map_err(|e| e.to_string())?;
    let half_quantum = 0.09;
    for rec in &log {
        let decoded = table.counts_to_deg(rec.encoder_counts);
        let err = (decoded - rec.commanded_deg as f64).abs();
        if err > half_quantum {
            return Err(format!(
                "cycle {}: calibrated error {err}° exceeds {half_quantum}°",
                rec.cycle_index
            ));
        }
    }

    // identical seeds give identical serialized logs
    let again = testbed::run_campaign(&schedule, &WearModel::pristine(), &cfg)
        .map_err(|e| e.to_string())?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    testbed::write_log(&mut a, &log).map_err(|e| e.to_string())?;
    testbed::write_log(&mut b, &again).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same-seed campaign logs differ".into());
    }

    // desk-scale preset finishes inside the budget
    let started = Instant::now();
    let mini = CampaignConfig { total_cycles: 39_300, ..CampaignConfig::default() };
    let flight = synth::synthetic_flight(7);
    let deflections: Vec<_> = flight.iter().map(fdr::to_deflection).collect();
    let mini_schedule =
        fdr::build_schedule(&deflections, 119, 7).map_err(|e| e.to_string())?;
    let mini_log = testbed::run_campaign(&mini_schedule, &WearModel::default(), &mini)
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    if mini_log.len() != 39_300 {
        return Err(format!("mini campaign produced {} cycles", mini_log.len()));
    }
    if elapsed >= 30.0 {
        return Err(format!("mini campaign took {elapsed:.1} s"));
    }
    Ok(())
}

fn criterion_11() -> Result<(), String> {
    let flight = synth::synthetic_flight(7);
    let deflections: Vec<_> = flight.iter().map(fdr::to_deflection).collect();
    let schedule = fdr::build_schedule(&deflections, 119, 7).map_err(|e| e.to_string())?;
    let cfg = CampaignConfig { total_cycles: 39_300, seed: 11, ..CampaignConfig::default() };
    let log = testbed::run_campaign(&schedule, &WearModel::default(), &cfg)
        .map_err(|e| e.to_string())?;
    let m = anova::build_subject_matrix(&log, 13_100, 3, 500, 11).map_err(|e| e.to_string())?;
    let bundle = report::analyze(&m).map_err(|e| e.to_string())?;

    let means: Vec<f64> = bundle.column_summaries.iter().map(|c| c.mean).collect();
    if !(means[0] < means[1] && means[1] < means[2]) {
        return Err(format!("period means not strictly increasing: {means:?}"));
    }
    let gg = bundle
        .within
        .tests
        .iter()
        .find(|t| t.correction == Correction::GreenhouseGeisser)
        .ok_or("missing GG row")?;
    if gg.p >= 0.05 {
        return Err(format!("GG-corrected omnibus p = {}", gg.p));
    }

    let span = |vals: Vec<f64>| {
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    };
    let neg_span = span(
        bundle.sign_means.iter().filter_map(|s| s.negative_mean).collect(),
    );
    let pos_span = span(
        bundle.sign_means.iter().filter_map(|s| s.positive_mean).collect(),
    );
    if neg_span >= 0.2 * pos_span {
        return Err(format!(
            "negative-command variation {neg_span} not below 20% of positive {pos_span}"
        ));
    }
    Ok(())
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    let m = reference_matrix();

    gate.criterion(1, "descriptive standard errors", criterion_1());
    gate.criterion(2, "parameter estimates from summaries", criterion_2());
    gate.criterion(3, "within-subjects decomposition", criterion_3(&m));
    gate.criterion(4, "sphericity and GG correction", criterion_4(&m));
    gate.criterion(5, "within-subjects contrasts", criterion_5(&m));
    gate.criterion(6, "multivariate tests", criterion_6(&m));
    gate.criterion(7, "pairwise and between-subjects", criterion_7(&m));
    gate.criterion(8, "paired-t oracle equivalence", criterion_8());
    gate.criterion(9, "distribution functions", criterion_9());
    gate.criterion(10, "simulator closed loop and determinism", criterion_10());
    gate.criterion(11, "end-to-end wear reproduction", criterion_11());

    gate.finish();
}
