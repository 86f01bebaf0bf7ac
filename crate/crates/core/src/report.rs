//! Aggregate analysis bundle: every table the campaign report needs plus
//! the series behind the three standard charts, in one serializable value.

use serde::{Deserialize, Serialize};

use crate::anova::{
    self, BetweenSubjectsResult, ColumnSummary, ContrastResult, MultivariateResult,
    PairwiseResult, ParamEstimate, SphericityResult, SubjectMatrix, WithinSubjectsResult,
};
use crate::{Error, Result};

/// Mean reading of the positive- and negative-command subjects in one
/// period (feeds the clustered bar chart).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignMeans {
    pub label: String,
    pub negative_mean: Option<f64>,
    pub positive_mean: Option<f64>,
}

/// Ordinary least-squares line of reading against commanded position for
/// one period (feeds the scatter chart).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitLine {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
}

/// The full analysis output for one campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub n: usize,
    pub k: usize,
    pub row_labels: Vec<i32>,
    pub column_labels: Vec<String>,
    /// Raw n x k cell values, so renderers can plot without the log.
    pub matrix_values: Vec<Vec<f64>>,
    pub column_summaries: Vec<ColumnSummary>,
    pub within: WithinSubjectsResult,
    pub sphericity: SphericityResult,
    pub contrasts: Vec<ContrastResult>,
    /// None when the difference covariance is singular; see `notes`.
    pub multivariate: Option<MultivariateResult>,
    pub pairwise: Vec<PairwiseResult>,
    pub estimates: Vec<ParamEstimate>,
    pub between: BetweenSubjectsResult,
    pub sign_means: Vec<SignMeans>,
    pub fit_lines: Vec<FitLine>,
    /// Human-readable caveats (degenerate terms, skipped tests).
    pub notes: Vec<String>,
}

fn sign_means(m: &SubjectMatrix) -> Vec<SignMeans> {
    (0..m.k())
        .map(|j| {
            let mut neg = (0.0, 0usize);
            let mut pos = (0.0, 0usize);
            for (row, &label) in m.values.iter().zip(&m.row_labels) {
                if label < 0 {
                    neg.0 += row[j];
                    neg.1 += 1;
                } else if label > 0 {
                    pos.0 += row[j];
                    pos.1 += 1;
                }
            }
            SignMeans {
                label: m.column_labels[j].clone(),
                negative_mean: (neg.1 > 0).then(|| neg.0 / neg.1 as f64),
                positive_mean: (pos.1 > 0).then(|| pos.0 / pos.1 as f64),
            }
        })
        .collect()
}

fn fit_lines(m: &SubjectMatrix) -> Vec<FitLine> {
    let n = m.n() as f64;
    let xs: Vec<f64> = m.row_labels.iter().map(|&l| l as f64).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    (0..m.k())
        .map(|j| {
            let ys = m.column(j);
            let ybar = ys.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            FitLine { label: m.column_labels[j].clone(), slope, intercept: ybar - slope * xbar }
        })
        .collect()
}

/// Run the complete analysis battery on a subject matrix.
///
/// Degenerate inputs (constant matrices, collinear difference columns)
/// still produce a bundle; the affected tests carry their degenerate
/// flags and an explanatory note instead of aborting the report.
pub fn analyze(m: &SubjectMatrix) -> Result<ReportBundle> {
    let within = anova::within_subjects(m)?;
    let sphericity = anova::sphericity(m)?;
    let contrasts = anova::contrasts(m)?;
    let pairwise = anova::pairwise(m, 0.05)?;
    let estimates = anova::param_estimates(m)?;
    let between = anova::between_intercept(m)?;

    let mut notes = Vec::new();
    if within.degenerate {
        notes.push("within-subjects error term is zero; omnibus F is degenerate".to_string());
    }
    if sphericity.degenerate {
        notes.push("contrast covariance is singular; Mauchly test not computable".to_string());
    }
    let multivariate = match anova::multivariate(m) {
        Ok(r) => Some(r),
        Err(Error::Degenerate(msg)) | Err(Error::InsufficientData(msg)) => {
            notes.push(format!("multivariate tests skipped: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    Ok(ReportBundle {
        n: m.n(),
        k: m.k(),
        row_labels: m.row_labels.clone(),
        column_labels: m.column_labels.clone(),
        matrix_values: m.values.clone(),
        column_summaries: anova::column_summary(m),
        within,
        sphericity,
        contrasts,
        multivariate,
        pairwise,
        estimates,
        between,
        sign_means: sign_means(m),
        fit_lines: fit_lines(m),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_matrix() -> SubjectMatrix {
        SubjectMatrix::new(
            vec![
                vec![-20.0, -21.0, -22.5],
                vec![-5.0, -5.5, -6.0],
                vec![4.0, 4.4, 4.9],
                vec![10.0, 11.0, 12.5],
                vec![25.0, 27.0, 30.0],
            ],
            vec![-20, -5, 4, 10, 25],
            vec!["period_1".into(), "period_2".into(), "period_3".into()],
        )
        .unwrap()
    }

    #[test]
    fn bundle_is_complete_and_serializable() {
        let bundle = analyze(&sample_matrix()).unwrap();
        assert_eq!(bundle.n, 5);
        assert_eq!(bundle.k, 3);
        assert_eq!(bundle.within.tests.len(), 4);
        assert_eq!(bundle.contrasts.len(), 2);
        assert_eq!(bundle.pairwise.len(), 6);
        assert_eq!(bundle.estimates.len(), 3);
        assert_eq!(bundle.sign_means.len(), 3);
        assert_eq!(bundle.fit_lines.len(), 3);
        let json = serde_json::to_string(&bundle).unwrap();
        let back: ReportBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n, bundle.n);
        assert_abs_diff_eq!(back.within.f, bundle.within.f, epsilon = 1e-12);
    }

    #[test]
    fn sign_means_split_by_label_sign() {
        let bundle = analyze(&sample_matrix()).unwrap();
        let first = &bundle.sign_means[0];
        assert_abs_diff_eq!(first.negative_mean.unwrap(), -12.5, epsilon = 1e-12);
        assert_abs_diff_eq!(first.positive_mean.unwrap(), 13.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_line_recovers_exact_linear_response() {
        let m = SubjectMatrix::new(
            vec![
                vec![-40.0, -60.0],
                vec![-20.0, -30.0],
                vec![20.0, 30.0],
                vec![40.0, 60.0],
            ],
            vec![-20, -10, 10, 20],
            vec!["period_1".into(), "period_2".into()],
        )
        .unwrap();
        let lines = fit_lines(&m);
        assert_abs_diff_eq!(lines[0].slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lines[0].intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lines[1].slope, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_matrix_still_reports() {
        let m = SubjectMatrix::new(
            vec![vec![7.0; 3]; 5],
            vec![1, 2, 3, 4, 5],
            vec!["period_1".into(), "period_2".into(), "period_3".into()],
        )
        .unwrap();
        let bundle = analyze(&m).unwrap();
        assert!(bundle.within.degenerate);
        assert!(bundle.sphericity.degenerate);
        assert!(bundle.multivariate.is_none());
        assert!(!bundle.notes.is_empty());
    }
}
