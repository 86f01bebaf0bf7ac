//! Rebuild a subject matrix with prescribed sample moments from published
//! summaries: per-period means and standard deviations plus the variances
//! of the pairwise difference scores pin down the full sample covariance,
//! and a whiten/recolor pass on seeded Gaussian draws produces a matrix
//! whose empirical moments match those targets exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::anova::SubjectMatrix;
use crate::linalg;
use crate::{Error, Result};

/// Sample covariance implied by per-column sds and pairwise difference
/// variances: var(x_i - x_j) = s_i² + s_j² - 2 cov_ij.
///
/// `diff_vars` lists `(i, j, var)` for every unordered column pair.
pub fn covariance_from_diff_vars(sds: &[f64], diff_vars: &[(usize, usize, f64)]) -> Result<Vec<Vec<f64>>> {
    let k = sds.len();
    if k < 2 {
        return Err(Error::Config("need at least 2 columns".into()));
    }
    if sds.iter().any(|s| *s < 0.0) {
        return Err(Error::Config("standard deviations must be non-negative".into()));
    }
    let mut cov = vec![vec![f64::NAN; k]; k];
    for (i, s) in sds.iter().enumerate() {
        cov[i][i] = s * s;
    }
    for &(i, j, v) in diff_vars {
        if i >= k || j >= k || i == j {
            return Err(Error::Config(format!("bad difference pair ({i}, {j})")));
        }
        if v < 0.0 {
            return Err(Error::Config(format!("difference variance for ({i}, {j}) is negative")));
        }
        let c = (sds[i] * sds[i] + sds[j] * sds[j] - v) / 2.0;
        cov[i][j] = c;
        cov[j][i] = c;
    }
    if cov.iter().any(|r| r.iter().any(|v| v.is_nan())) {
        return Err(Error::Config("difference variances do not cover every column pair".into()));
    }
    Ok(cov)
}

/// Matrix of `n` rows whose empirical column means and sample covariance
/// equal `means` and `cov` to floating-point precision.
///
/// Seeded standard-normal draws are centered, whitened with the inverse of
/// their own sample Cholesky factor and recolored with the target factor,
/// so the construction is exact rather than asymptotic. Requires n > k and
/// a positive-definite target.
pub fn matrix_with_moments(
    means: &[f64],
    cov: &[Vec<f64>],
    n: usize,
    seed: u64,
    row_labels: Option<Vec<i32>>,
) -> Result<SubjectMatrix> {
    let k = means.len();
    if cov.len() != k || cov.iter().any(|r| r.len() != k) {
        return Err(Error::Config("covariance shape does not match the mean vector".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "exact moment matching needs n > k, got n = {n}, k = {k}"
        )));
    }
    let target_l = linalg::cholesky(cov)
        .ok_or_else(|| Error::Degenerate("target covariance is not positive definite".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![vec![0.0f64; k]; n];
    loop {
        for row in z.iter_mut() {
            for cell in row.iter_mut() {
                *cell = StandardNormal.sample(&mut rng);
            }
        }
        // center the draws
        for j in 0..k {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            for row in z.iter_mut() {
                row[j] -= mean;
            }
        }
        // sample covariance of the centered draws
        let mut sz = vec![vec![0.0; k]; k];
        for row in &z {
            for a in 0..k {
                for b in 0..k {
                    sz[a][b] += row[a] * row[b];
                }
            }
        }
        for r in sz.iter_mut() {
            for v in r.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        // a rank-deficient draw (probability zero in theory) forces a redraw
        let Some(lz) = linalg::cholesky(&sz) else { continue };
        let lz_inv = linalg::invert_lower(&lz);
        // X = Z Lz⁻ᵀ Lᵀ + μ : whitened draws recolored to the target
        let values: Vec<Vec<f64>> = z
            .iter()
            .map(|row| {
                let mut w = vec![0.0; k];
                for (a, wa) in w.iter_mut().enumerate() {
                    for b in 0..k {
                        *wa += lz_inv[a][b] * row[b];
                    }
                }
                (0..k)
                    .map(|a| {
                        let mut x = means[a];
                        for b in 0..=a {
                            x += target_l[a][b] * w[b];
                        }
                        x
                    })
                    .collect()
            })
            .collect();
        let labels = row_labels.unwrap_or_else(|| (0..n as i32).collect());
        if labels.len() != n {
            return Err(Error::Config("row label count does not match n".into()));
        }
        let columns = (1..=k).map(|j| format!("period_{j}")).collect();
        return SubjectMatrix::new(values, labels, columns);
    }
}
