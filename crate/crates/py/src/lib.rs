//! Python bindings for the rig simulator and the repeated-measures
//! analysis: subject matrices, the ANOVA battery, distribution helpers,
//! schedule construction and campaign simulation.

use std::collections::{BTreeMap, HashMap};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rigsim_core::fdr::{self, DeflectionSample};
use rigsim_core::testbed::{CampaignConfig, CycleRecord, WearModel};
use rigsim_core::{anova, dist, reconstruct, report};

fn err(e: rigsim_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An n-subjects by k-periods matrix of mean encoder readings.
#[pyclass(name = "SubjectMatrix", from_py_object)]
#[derive(Clone)]
struct PySubjectMatrix {
    inner: anova::SubjectMatrix,
}

#[pymethods]
impl PySubjectMatrix {
    #[new]
    #[pyo3(signature = (values, row_labels=None))]
    fn new(values: Vec<Vec<f64>>, row_labels: Option<Vec<i32>>) -> PyResult<Self> {
        let n = values.len();
        let k = values.first().map(|r| r.len()).unwrap_or(0);
        let labels = row_labels.unwrap_or_else(|| (0..n as i32).collect());
        let columns = (1..=k).map(|j| format!("period_{j}")).collect();
        Ok(Self { inner: anova::SubjectMatrix::new(values, labels, columns).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.clone()
    }

    #[getter]
    fn row_labels(&self) -> Vec<i32> {
        self.inner.row_labels.clone()
    }

    /// Per-column (mean, sd, n) tuples; sd is None for a single row.
    fn column_summary(&self) -> Vec<(String, f64, Option<f64>, usize)> {
        anova::column_summary(&self.inner)
            .into_iter()
            .map(|c| (c.label, c.mean, c.sd, c.n))
            .collect()
    }
}

/// Rebuild a matrix with exact sample moments from published summaries.
#[pyfunction]
fn reconstruct_matrix(
    means: Vec<f64>,
    sds: Vec<f64>,
    diff_vars: Vec<(usize, usize, f64)>,
    n: usize,
    seed: u64,
) -> PyResult<PySubjectMatrix> {
    let cov = reconstruct::covariance_from_diff_vars(&sds, &diff_vars).map_err(err)?;
    let inner = reconstruct::matrix_with_moments(&means, &cov, n, seed, None).map_err(err)?;
    Ok(PySubjectMatrix { inner })
}

/// Within-subjects decomposition with the four correction rows.
#[pyfunction]
fn within_subjects(m: &PySubjectMatrix) -> PyResult<HashMap<String, f64>> {
    let r = anova::within_subjects(&m.inner).map_err(err)?;
    let mut out = HashMap::from([
        ("ss_effect".to_string(), r.ss_effect),
        ("ss_subjects".to_string(), r.ss_subjects),
        ("ss_error".to_string(), r.ss_error),
        ("ss_total".to_string(), r.ss_total),
        ("f".to_string(), r.f),
        ("partial_eta2".to_string(), r.partial_eta2),
    ]);
    for t in &r.tests {
        let tag = match t.correction {
            anova::Correction::SphericityAssumed => "none",
            anova::Correction::GreenhouseGeisser => "gg",
            anova::Correction::HuynhFeldt => "hf",
            anova::Correction::LowerBound => "lb",
        };
        out.insert(format!("{tag}_df_effect"), t.df_effect);
        out.insert(format!("{tag}_df_error"), t.df_error);
        out.insert(format!("{tag}_ms_effect"), t.ms_effect);
        out.insert(format!("{tag}_p"), t.p);
    }
    Ok(out)
}

/// Mauchly test and epsilon estimates.
#[pyfunction]
fn sphericity(m: &PySubjectMatrix) -> PyResult<HashMap<String, f64>> {
    let s = anova::sphericity(&m.inner).map_err(err)?;
    Ok(HashMap::from([
        ("w".to_string(), s.w),
        ("chi2".to_string(), s.chi2),
        ("df".to_string(), s.df as f64),
        ("p".to_string(), s.p),
        ("eps_gg".to_string(), s.eps_gg),
        ("eps_hf".to_string(), s.eps_hf),
        ("eps_lb".to_string(), s.eps_lb),
        ("degenerate".to_string(), if s.degenerate { 1.0 } else { 0.0 }),
    ]))
}

/// Multivariate statistics on the difference variables.
#[pyfunction]
fn multivariate(m: &PySubjectMatrix) -> PyResult<HashMap<String, f64>> {
    let r = anova::multivariate(&m.inner).map_err(err)?;
    Ok(HashMap::from([
        ("pillai".to_string(), r.pillai),
        ("wilks".to_string(), r.wilks),
        ("hotelling".to_string(), r.hotelling),
        ("roy".to_string(), r.roy),
        ("f".to_string(), r.f),
        ("df_hypothesis".to_string(), r.df_hypothesis),
        ("df_error".to_string(), r.df_error),
        ("p".to_string(), r.p),
        ("partial_eta2".to_string(), r.partial_eta2),
    ]))
}

/// One pairwise row: (i, j, mean_diff, se, p_bonferroni, ci_low, ci_high).
type PairwiseRow = (usize, usize, f64, f64, f64, f64, f64);

/// Bonferroni pairwise comparisons.
#[pyfunction]
#[pyo3(signature = (m, alpha=0.05))]
fn pairwise(m: &PySubjectMatrix, alpha: f64) -> PyResult<Vec<PairwiseRow>> {
    Ok(anova::pairwise(&m.inner, alpha)
        .map_err(err)?
        .into_iter()
        .map(|p| (p.i, p.j, p.mean_diff, p.se, p.p_bonferroni, p.ci_low, p.ci_high))
        .collect())
}

/// Intercept estimate from (mean, sd, n) alone.
#[pyfunction]
fn estimate_from_summary(mean: f64, sd: f64, n: usize) -> PyResult<HashMap<String, f64>> {
    let e = anova::estimate_from_summary("summary", mean, sd, n).map_err(err)?;
    Ok(HashMap::from([
        ("mean".to_string(), e.mean),
        ("se".to_string(), e.se),
        ("t".to_string(), e.t),
        ("p".to_string(), e.p),
        ("ci_low".to_string(), e.ci_low),
        ("ci_high".to_string(), e.ci_high),
        ("partial_eta2".to_string(), e.partial_eta2),
    ]))
}

/// The complete analysis battery as a JSON document.
#[pyfunction]
fn analyze_json(m: &PySubjectMatrix) -> PyResult<String> {
    let bundle = report::analyze(&m.inner).map_err(err)?;
    serde_json::to_string(&bundle).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn se_skewness(n: usize) -> f64 {
    fdr::se_skewness(n)
}

#[pyfunction]
fn se_kurtosis(n: usize) -> f64 {
    fdr::se_kurtosis(n)
}

/// Deflection degrees for a fine-servo-units reading.
#[pyfunction]
fn to_deflection_degrees(units: i32) -> f64 {
    units as f64 / fdr::FINE_UNIT_FULL_SCALE as f64 * fdr::DEFLECTION_FULL_SCALE_DEG
}

#[pyfunction]
fn t_quantile(p: f64, df: f64) -> PyResult<f64> {
    dist::t_quantile(p, df).map_err(err)
}

#[pyfunction]
fn f_sf(x: f64, d1: f64, d2: f64) -> PyResult<f64> {
    dist::f_sf(x, d1, d2).map_err(err)
}

#[pyfunction]
fn chi2_sf(x: f64, df: f64) -> PyResult<f64> {
    dist::chi2_sf(x, df).map_err(err)
}

/// Fine-servo-units of a deterministic recorder file shaped like the
/// case-study flight.
#[pyfunction]
fn synthetic_flight_units(seed: u64) -> Vec<i32> {
    fdr::synth::synthetic_flight(seed).into_iter().map(|e| e.fine_units).collect()
}

/// Frequency-weighted integer command schedule from deflection degrees.
#[pyfunction]
fn build_schedule(degrees: Vec<f64>, target_len: usize, seed: u64) -> PyResult<Vec<i32>> {
    let samples: Vec<DeflectionSample> = degrees.into_iter().map(DeflectionSample::new).collect();
    Ok(fdr::build_schedule(&samples, target_len, seed).map_err(err)?.positions)
}

/// Run a wear campaign; returns (cycle, sim_time_ms, commanded_deg,
/// encoder_counts) tuples.
#[pyfunction]
#[pyo3(signature = (schedule, total_cycles, alpha=1e-6, beta=0.0, noise_sd_deg=0.25,
                    wear_seed=0, campaign_seed=0, step_period_ms=232, ppr=1024))]
#[allow(clippy::too_many_arguments)]
fn run_campaign(
    schedule: Vec<i32>,
    total_cycles: u64,
    alpha: f64,
    beta: f64,
    noise_sd_deg: f64,
    wear_seed: u64,
    campaign_seed: u64,
    step_period_ms: u64,
    ppr: u32,
) -> PyResult<Vec<(u64, u64, i32, i64)>> {
    let mut freqs: BTreeMap<i32, usize> = BTreeMap::new();
    for &p in &schedule {
        *freqs.entry(p).or_insert(0) += 1;
    }
    let sched = fdr::CommandSchedule { positions: schedule, source_frequencies: freqs };
    let wear = WearModel { alpha, beta, noise_sd_deg, seed: wear_seed };
    let cfg = CampaignConfig { total_cycles, step_period_ms, ppr, seed: campaign_seed };
    let log = rigsim_core::testbed::run_campaign(&sched, &wear, &cfg).map_err(err)?;
    Ok(log
        .into_iter()
        .map(|r: CycleRecord| (r.cycle_index, r.sim_time_ms, r.commanded_deg, r.encoder_counts))
        .collect())
}

/// Subject matrix from campaign log tuples.
#[pyfunction]
fn build_subject_matrix(
    log: Vec<(u64, u64, i32, i64)>,
    period_cycles: usize,
    n_periods: usize,
    sample_size: usize,
    seed: u64,
) -> PyResult<PySubjectMatrix> {
    let records: Vec<CycleRecord> = log
        .into_iter()
        .map(|(cycle_index, sim_time_ms, commanded_deg, encoder_counts)| CycleRecord {
            cycle_index,
            sim_time_ms,
            commanded_deg,
            encoder_counts,
        })
        .collect();
    let inner = anova::build_subject_matrix(&records, period_cycles, n_periods, sample_size, seed)
        .map_err(err)?;
    Ok(PySubjectMatrix { inner })
}

#[pymodule]
fn rigsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySubjectMatrix>()?;
    m.add_function(wrap_pyfunction!(reconstruct_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(within_subjects, m)?)?;
    m.add_function(wrap_pyfunction!(sphericity, m)?)?;
    m.add_function(wrap_pyfunction!(multivariate, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_from_summary, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_json, m)?)?;
    m.add_function(wrap_pyfunction!(se_skewness, m)?)?;
    m.add_function(wrap_pyfunction!(se_kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(to_deflection_degrees, m)?)?;
    m.add_function(wrap_pyfunction!(t_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(f_sf, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_flight_units, m)?)?;
    m.add_function(wrap_pyfunction!(build_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(build_subject_matrix, m)?)?;
    Ok(())
}
