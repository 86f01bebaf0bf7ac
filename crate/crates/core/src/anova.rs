//! One-way repeated-measures ANOVA over the campaign log: subject-matrix
//! construction, the within-subjects decomposition with sphericity
//! corrections, planned contrasts, multivariate tests, Bonferroni pairwise
//! comparisons and per-period parameter estimates.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::linalg;
use crate::testbed::CycleRecord;
use crate::{Error, Result};

/// n subjects (distinct commanded positions) by k periods of mean encoder
/// readings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectMatrix {
    /// Row-major n x k cell values.
    pub values: Vec<Vec<f64>>,
    /// Commanded position acting as the subject of each row.
    pub row_labels: Vec<i32>,
    /// Period names.
    pub column_labels: Vec<String>,
}

impl SubjectMatrix {
    pub fn new(values: Vec<Vec<f64>>, row_labels: Vec<i32>, column_labels: Vec<String>) -> Result<Self> {
        let n = values.len();
        let k = column_labels.len();
        if n == 0 || k == 0 {
            return Err(Error::InsufficientData("subject matrix must be non-empty".into()));
        }
        if row_labels.len() != n {
            return Err(Error::Config("row label count does not match row count".into()));
        }
        if values.iter().any(|r| r.len() != k) {
            return Err(Error::Config("ragged subject matrix".into()));
        }
        Ok(Self { values, row_labels, column_labels })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn k(&self) -> usize {
        self.column_labels.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    fn column_mean(&self, j: usize) -> f64 {
        self.values.iter().map(|r| r[j]).sum::<f64>() / self.n() as f64
    }

    fn grand_mean(&self) -> f64 {
        let total: f64 = self.values.iter().flat_map(|r| r.iter()).sum();
        total / (self.n() * self.k()) as f64
    }

    /// Sample covariance matrix of the columns (n - 1 denominator).
    fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let k = self.k();
        let means: Vec<f64> = (0..k).map(|j| self.column_mean(j)).collect();
        let mut cov = vec![vec![0.0; k]; k];
        for row in &self.values {
            for a in 0..k {
                for b in 0..k {
                    cov[a][b] += (row[a] - means[a]) * (row[b] - means[b]);
                }
            }
        }
        for r in cov.iter_mut() {
            for v in r.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        cov
    }
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Split the log into consecutive `period_cycles` blocks, draw
/// `sample_size` records per block without replacement (single seeded
/// stream, block order), group by commanded position and average the
/// encoder readings. Positions missing from any period are dropped.
pub fn build_subject_matrix(
    log: &[CycleRecord],
    period_cycles: usize,
    n_periods: usize,
    sample_size: usize,
    seed: u64,
) -> Result<SubjectMatrix> {
    let needed = period_cycles
        .checked_mul(n_periods)
        .ok_or_else(|| Error::Config("period_cycles * n_periods overflows".into()))?;
    if n_periods < 2 {
        return Err(Error::Config(format!("need at least 2 periods, got {n_periods}")));
    }
    if log.len() < needed {
        return Err(Error::InsufficientData(format!(
            "log has {} records, analysis needs {needed} ({n_periods} periods of {period_cycles})",
            log.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_period: Vec<BTreeMap<i32, (f64, usize)>> = Vec::with_capacity(n_periods);
    for p in 0..n_periods {
        let block = &log[p * period_cycles..(p + 1) * period_cycles];
        let chosen: Vec<usize> = if sample_size >= block.len() {
            (0..block.len()).collect()
        } else {
            index_sample(&mut rng, block.len(), sample_size).into_vec()
        };
        let mut groups: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
        for idx in chosen {
            let rec = &block[idx];
            let e = groups.entry(rec.commanded_deg).or_insert((0.0, 0));
            e.0 += rec.encoder_counts as f64;
            e.1 += 1;
        }
        if groups.is_empty() {
            return Err(Error::InsufficientData(format!("period {p} retained no positions")));
        }
        per_period.push(groups);
    }

    let mut common: BTreeSet<i32> = per_period[0].keys().copied().collect();
    for groups in &per_period[1..] {
        let keys: BTreeSet<i32> = groups.keys().copied().collect();
        common = common.intersection(&keys).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::InsufficientData(
            "no commanded position is present in every period's sample".into(),
        ));
    }

    let row_labels: Vec<i32> = common.iter().copied().collect();
    let values: Vec<Vec<f64>> = row_labels
        .iter()
        .map(|pos| {
            per_period
                .iter()
                .map(|groups| {
                    let (sum, count) = groups[pos];
                    sum / count as f64
                })
                .collect()
        })
        .collect();
    let column_labels = (1..=n_periods).map(|p| format!("period_{p}")).collect();
    SubjectMatrix::new(values, row_labels, column_labels)
}

/// Per-period mean, standard deviation and count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub label: String,
    pub mean: f64,
    /// None for a single-row matrix, where the sd is undefined.
    pub sd: Option<f64>,
    pub n: usize,
}

/// Column-wise sample statistics of the matrix.
pub fn column_summary(m: &SubjectMatrix) -> Vec<ColumnSummary> {
    (0..m.k())
        .map(|j| {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let sd = if col.len() >= 2 {
                Some(
                    (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64)
                        .sqrt(),
                )
            } else {
                None
            };
            ColumnSummary { label: m.column_labels[j].clone(), mean, sd, n: col.len() }
        })
        .collect()
}

/// Mauchly sphericity test with the Greenhouse-Geisser, Huynh-Feldt and
/// lower-bound epsilon estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericityResult {
    pub w: f64,
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    pub eps_gg: f64,
    pub eps_hf: f64,
    pub eps_lb: f64,
    /// Set when the contrast covariance is singular (or k = 2, where the
    /// test is vacuous).
    pub degenerate: bool,
}

/// Orthonormal (Helmert) contrast rows spanning the mean-orthogonal space.
fn orthonormal_contrasts(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let norm = (j as f64 * (j as f64 + 1.0)).sqrt();
            let mut row = vec![0.0; k];
            for cell in row.iter_mut().take(j) {
                *cell = 1.0 / norm;
            }
            row[j] = -(j as f64) / norm;
            row
        })
        .collect()
}

/// Test the sphericity assumption on the matrix's contrast covariance.
pub fn sphericity(m: &SubjectMatrix) -> Result<SphericityResult> {
    let n = m.n();
    let k = m.k();
    if k < 2 {
        return Err(Error::InsufficientData("sphericity needs at least 2 periods".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData("sphericity needs at least 2 subjects".into()));
    }
    let eps_lb = 1.0 / (k as f64 - 1.0);
    if k == 2 {
        // a single contrast variable is always spherical
        return Ok(SphericityResult {
            w: 1.0,
            chi2: 0.0,
            df: 0,
            p: 1.0,
            eps_gg: 1.0,
            eps_hf: 1.0,
            eps_lb,
            degenerate: false,
        });
    }

    let cov = m.covariance();
    let c = orthonormal_contrasts(k);
    let p = k - 1;
    // S_c = C Σ Cᵀ
    let mut sc = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for i in 0..k {
                for j in 0..k {
                    acc += c[a][i] * cov[i][j] * c[b][j];
                }
            }
            sc[a][b] = acc;
        }
    }

    let eigen = linalg::sym_eigenvalues(sc);
    let trace: f64 = eigen.iter().sum();
    let sum_sq: f64 = eigen.iter().map(|l| l * l).sum();
    if trace <= 0.0 || eigen.iter().any(|&l| l < trace * 1e-12) {
        return Ok(SphericityResult {
            w: 0.0,
            chi2: 0.0,
            df: p * (p + 1) / 2 - 1,
            p: 1.0,
            eps_gg: eps_lb,
            eps_hf: eps_lb,
            eps_lb,
            degenerate: true,
        });
    }

    let det: f64 = eigen.iter().product();
    let w = det / (trace / p as f64).powi(p as i32);
    let kf = k as f64;
    let nf = n as f64;
    let d = 1.0 - (2.0 * (kf - 1.0).powi(2) + (kf - 1.0) + 2.0) / (6.0 * (kf - 1.0) * (nf - 1.0));
    let chi2 = -(nf - 1.0) * d * w.ln();
    let df = p * (p + 1) / 2 - 1;
    let p_value = dist::chi2_sf(chi2, df as f64)?;
    let eps_gg = trace * trace / ((kf - 1.0) * sum_sq);
    let eps_hf = ((nf * (kf - 1.0) * eps_gg - 2.0)
        / ((kf - 1.0) * (nf - 1.0 - (kf - 1.0) * eps_gg)))
        .min(1.0);
    Ok(SphericityResult {
        w,
        chi2,
        df,
        p: p_value,
        eps_gg,
        eps_hf: eps_hf.max(eps_lb),
        eps_lb,
        degenerate: false,
    })
}

/// Degrees-of-freedom correction applied to the omnibus F test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    SphericityAssumed,
    GreenhouseGeisser,
    HuynhFeldt,
    LowerBound,
}

/// One corrected row of the within-subjects table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectedTest {
    pub correction: Correction,
    pub df_effect: f64,
    pub df_error: f64,
    pub ms_effect: f64,
    pub ms_error: f64,
    pub f: f64,
    pub p: f64,
}

/// The within-subjects decomposition and its four correction rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WithinSubjectsResult {
    pub ss_effect: f64,
    pub ss_subjects: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub partial_eta2: f64,
    /// The F ratio, identical across correction rows.
    pub f: f64,
    pub tests: Vec<CorrectedTest>,
    /// Set when the error term vanishes (perfectly additive matrix).
    pub degenerate: bool,
}

/// Two-way additive decomposition of the subject matrix with the time
/// (column) factor as the within-subjects effect.
pub fn within_subjects(m: &SubjectMatrix) -> Result<WithinSubjectsResult> {
    let n = m.n();
    let k = m.k();
    if n < 2 || k < 2 {
        return Err(Error::InsufficientData(format!(
            "within-subjects ANOVA needs n >= 2 and k >= 2, got {n} x {k}"
        )));
    }
    let nf = n as f64;
    let kf = k as f64;
    let grand = m.grand_mean();
    let col_means: Vec<f64> = (0..k).map(|j| m.column_mean(j)).collect();
    let row_means: Vec<f64> =
        m.values.iter().map(|r| r.iter().sum::<f64>() / kf).collect();

    let ss_effect = nf * col_means.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
    let ss_subjects = kf * row_means.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    let ss_total: f64 =
        m.values.iter().flat_map(|r| r.iter()).map(|v| (v - grand).powi(2)).sum();
    let ss_error = ss_total - ss_effect - ss_subjects;

    let df_effect = kf - 1.0;
    let df_error = (nf - 1.0) * (kf - 1.0);
    let ms_error_raw = ss_error / df_error;

    let degenerate = ms_error_raw.abs() < 1e-12 * (1.0 + ss_total.abs());
    let f = if degenerate {
        if ss_effect.abs() < 1e-12 * (1.0 + ss_total.abs()) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (ss_effect / df_effect) / ms_error_raw
    };

    let sph = sphericity(m)?;
    let eps_for = |c: Correction| match c {
        Correction::SphericityAssumed => 1.0,
        Correction::GreenhouseGeisser => sph.eps_gg,
        Correction::HuynhFeldt => sph.eps_hf,
        Correction::LowerBound => sph.eps_lb,
    };
    let mut tests = Vec::with_capacity(4);
    for correction in [
        Correction::SphericityAssumed,
        Correction::GreenhouseGeisser,
        Correction::HuynhFeldt,
        Correction::LowerBound,
    ] {
        let eps = eps_for(correction);
        let dfe = df_effect * eps;
        let dferr = df_error * eps;
        let p = if f.is_infinite() {
            0.0
        } else if f == 0.0 && degenerate {
            1.0
        } else {
            dist::f_sf(f, dfe, dferr)?
        };
        tests.push(CorrectedTest {
            correction,
            df_effect: dfe,
            df_error: dferr,
            ms_effect: ss_effect / dfe,
            ms_error: ss_error / dferr,
            f,
            p,
        });
    }

    let denom = ss_effect + ss_error;
    let partial_eta2 = if denom > 0.0 { ss_effect / denom } else { 0.0 };
    Ok(WithinSubjectsResult {
        ss_effect,
        ss_subjects,
        ss_error,
        ss_total,
        partial_eta2,
        f,
        tests,
        degenerate,
    })
}

/// One adjacent-level planned contrast.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastResult {
    pub label: String,
    pub ss_hypothesis: f64,
    pub ss_error: f64,
    pub df_hypothesis: usize,
    pub df_error: usize,
    pub ms_hypothesis: f64,
    pub ms_error: f64,
    pub f: f64,
    pub p: f64,
    pub partial_eta2: f64,
}

/// Adjacent-level contrasts on raw (unnormalized) difference scores.
pub fn contrasts(m: &SubjectMatrix) -> Result<Vec<ContrastResult>> {
    let n = m.n();
    let k = m.k();
    if n < 2 || k < 2 {
        return Err(Error::InsufficientData(format!(
            "contrasts need n >= 2 and k >= 2, got {n} x {k}"
        )));
    }
    let nf = n as f64;
    let mut out = Vec::with_capacity(k - 1);
    for j in 0..k - 1 {
        let d: Vec<f64> = m.values.iter().map(|r| r[j + 1] - r[j]).collect();
        let (dbar, var) = mean_and_var(&d);
        let ss_h = nf * dbar * dbar;
        let ss_e: f64 = d.iter().map(|x| (x - dbar).powi(2)).sum();
        let ms_e = ss_e / (nf - 1.0);
        let f = if ms_e > 0.0 {
            ss_h / ms_e
        } else if ss_h > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let p = if f.is_infinite() { 0.0 } else { dist::f_sf(f, 1.0, nf - 1.0)? };
        let denom = ss_h + ss_e;
        out.push(ContrastResult {
            label: format!("level {} vs level {}", j + 1, j + 2),
            ss_hypothesis: ss_h,
            ss_error: ss_e,
            df_hypothesis: 1,
            df_error: n - 1,
            ms_hypothesis: ss_h,
            ms_error: var,
            f,
            p,
            partial_eta2: if denom > 0.0 { ss_h / denom } else { 0.0 },
        });
    }
    Ok(out)
}

/// The four multivariate statistics, coincident functions of one
/// eigenvalue in this single within-factor design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultivariateResult {
    pub pillai: f64,
    pub wilks: f64,
    pub hotelling: f64,
    pub roy: f64,
    pub f: f64,
    pub df_hypothesis: f64,
    pub df_error: f64,
    pub p: f64,
    pub partial_eta2: f64,
}

/// One-sample Hotelling T² test on the k - 1 adjacent difference
/// variables.
pub fn multivariate(m: &SubjectMatrix) -> Result<MultivariateResult> {
    let n = m.n();
    let k = m.k();
    if n < k + 1 {
        return Err(Error::InsufficientData(format!(
            "multivariate test needs n >= k + 1, got n = {n}, k = {k}"
        )));
    }
    let p = k - 1;
    let nf = n as f64;
    let diffs: Vec<Vec<f64>> =
        m.values.iter().map(|r| (0..p).map(|j| r[j + 1] - r[j]).collect()).collect();
    let dbar: Vec<f64> =
        (0..p).map(|j| diffs.iter().map(|d| d[j]).sum::<f64>() / nf).collect();
    let mut sd = vec![vec![0.0; p]; p];
    for d in &diffs {
        for a in 0..p {
            for b in 0..p {
                sd[a][b] += (d[a] - dbar[a]) * (d[b] - dbar[b]);
            }
        }
    }
    for r in sd.iter_mut() {
        for v in r.iter_mut() {
            *v /= nf - 1.0;
        }
    }
    let solved = linalg::solve(&sd, &dbar).ok_or_else(|| {
        Error::Degenerate(format!(
            "difference covariance is singular; adjacent period columns {:?} are collinear",
            m.column_labels
        ))
    })?;
    let t2 = nf * dbar.iter().zip(&solved).map(|(a, b)| a * b).sum::<f64>();
    let hotelling = t2 / (nf - 1.0);
    let pillai = hotelling / (1.0 + hotelling);
    let df_hyp = p as f64;
    let df_err = nf - k as f64 + 1.0;
    let f = hotelling * df_err / df_hyp;
    let p_value = dist::f_sf(f, df_hyp, df_err)?;
    Ok(MultivariateResult {
        pillai,
        wilks: 1.0 - pillai,
        hotelling,
        roy: hotelling,
        f,
        df_hypothesis: df_hyp,
        df_error: df_err,
        p: p_value,
        partial_eta2: pillai,
    })
}

/// One Bonferroni-adjusted pairwise comparison (SPSS emits both orders).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseResult {
    /// 1-based period indices.
    pub i: usize,
    pub j: usize,
    pub mean_diff: f64,
    pub se: f64,
    pub p_bonferroni: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// All ordered pairwise comparisons with Bonferroni adjustment and
/// simultaneous confidence intervals at level `alpha`.
pub fn pairwise(m: &SubjectMatrix, alpha: f64) -> Result<Vec<PairwiseResult>> {
    let n = m.n();
    let k = m.k();
    if n < 2 || k < 2 {
        return Err(Error::InsufficientData("pairwise comparisons need n >= 2 and k >= 2".into()));
    }
    let nf = n as f64;
    let comparisons = (k * (k - 1) / 2) as f64;
    let t_crit = dist::t_quantile(1.0 - alpha / (2.0 * comparisons), nf - 1.0)?;
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let d: Vec<f64> = m.values.iter().map(|r| r[i] - r[j]).collect();
            let (dbar, var) = mean_and_var(&d);
            let se = (var / nf).sqrt();
            let (p_raw, ci_low, ci_high) = if se > 0.0 {
                let t = dbar / se;
                (
                    dist::t_sf_two_sided(t, nf - 1.0)?,
                    dbar - t_crit * se,
                    dbar + t_crit * se,
                )
            } else {
                (if dbar == 0.0 { 1.0 } else { 0.0 }, dbar, dbar)
            };
            out.push(PairwiseResult {
                i: i + 1,
                j: j + 1,
                mean_diff: dbar,
                se,
                p_bonferroni: (p_raw * comparisons).min(1.0),
                ci_low,
                ci_high,
            });
        }
    }
    Ok(out)
}

/// Intercept estimate for one period column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub label: String,
    pub mean: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub partial_eta2: f64,
}

/// Estimate directly from a column summary (mean, sd, n).
pub fn estimate_from_summary(label: &str, mean: f64, sd: f64, n: usize) -> Result<ParamEstimate> {
    if n < 2 {
        return Err(Error::InsufficientData("parameter estimate needs n >= 2".into()));
    }
    let nf = n as f64;
    let se = sd / nf.sqrt();
    let t = mean / se;
    let t_crit = dist::t_quantile(0.975, nf - 1.0)?;
    Ok(ParamEstimate {
        label: label.to_string(),
        mean,
        se,
        t,
        p: dist::t_sf_two_sided(t, nf - 1.0)?,
        ci_low: mean - t_crit * se,
        ci_high: mean + t_crit * se,
        partial_eta2: t * t / (t * t + nf - 1.0),
    })
}

/// Per-period intercept estimates.
pub fn param_estimates(m: &SubjectMatrix) -> Result<Vec<ParamEstimate>> {
    column_summary(m)
        .into_iter()
        .map(|c| {
            let sd = c.sd.ok_or_else(|| {
                Error::InsufficientData("parameter estimate needs n >= 2".into())
            })?;
            estimate_from_summary(&c.label, c.mean, sd, c.n)
        })
        .collect()
}

/// The between-subjects intercept test on the subject means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetweenSubjectsResult {
    pub ss_intercept: f64,
    pub df_intercept: usize,
    pub ms_intercept: f64,
    pub ss_error: f64,
    pub df_error: usize,
    pub ms_error: f64,
    pub f: f64,
    pub p: f64,
    pub partial_eta2: f64,
}

/// Intercept test on the unscaled subject (row) means.
pub fn between_intercept(m: &SubjectMatrix) -> Result<BetweenSubjectsResult> {
    let n = m.n();
    if n < 2 {
        return Err(Error::InsufficientData("between-subjects test needs n >= 2".into()));
    }
    let kf = m.k() as f64;
    let nf = n as f64;
    let z: Vec<f64> = m.values.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let (zbar, var) = mean_and_var(&z);
    let ss_intercept = nf * zbar * zbar;
    let ss_error: f64 = z.iter().map(|x| (x - zbar).powi(2)).sum();
    let ms_error = var;
    let f = if ms_error > 0.0 {
        ss_intercept / ms_error
    } else if ss_intercept > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p = if f.is_infinite() { 0.0 } else { dist::f_sf(f, 1.0, nf - 1.0)? };
    let denom = ss_intercept + ss_error;
    Ok(BetweenSubjectsResult {
        ss_intercept,
        df_intercept: 1,
        ms_intercept: ss_intercept,
        ss_error,
        df_error: n - 1,
        ms_error,
        f,
        p,
        partial_eta2: if denom > 0.0 { ss_intercept / denom } else { 0.0 },
    })
}
