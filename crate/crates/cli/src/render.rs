//! Render a report bundle as markdown tables, CSV tables or static SVG
//! charts. Every cell is copied from the bundle; nothing is recomputed
//! here.

use std::fmt::Write as _;

use rigsim_core::anova::Correction;
use rigsim_core::report::ReportBundle;

fn fmt3(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else if v.is_infinite() {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn correction_name(c: Correction) -> &'static str {
    match c {
        Correction::SphericityAssumed => "Sphericity Assumed",
        Correction::GreenhouseGeisser => "Greenhouse-Geisser",
        Correction::HuynhFeldt => "Huynh-Feldt",
        Correction::LowerBound => "Lower-bound",
    }
}

/// The full report as one markdown document.
pub fn markdown(b: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Campaign Analysis Report\n");
    let _ = writeln!(out, "Subjects (commanded positions): {}; periods: {}\n", b.n, b.k);

    let _ = writeln!(out, "## Descriptive Statistics\n");
    let _ = writeln!(out, "| Period | Mean | Std. Dev. | N |");
    let _ = writeln!(out, "|---|---|---|---|");
    for c in &b.column_summaries {
        let sd = c.sd.map(fmt3).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "| {} | {} | {} | {} |", c.label, fmt3(c.mean), sd, c.n);
    }

    let _ = writeln!(out, "\n## Tests of Within-Subjects Effects\n");
    let _ = writeln!(out, "| Source | SS | df | MS | F | Sig. | Partial eta2 |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for t in &b.within.tests {
        let _ = writeln!(
            out,
            "| Cycle ({}) | {} | {} | {} | {} | {} | {} |",
            correction_name(t.correction),
            fmt3(b.within.ss_effect),
            fmt3(t.df_effect),
            fmt3(t.ms_effect),
            fmt3(t.f),
            fmt3(t.p),
            fmt3(b.within.partial_eta2),
        );
    }
    for t in &b.within.tests {
        let _ = writeln!(
            out,
            "| Error ({}) | {} | {} | {} | | | |",
            correction_name(t.correction),
            fmt3(b.within.ss_error),
            fmt3(t.df_error),
            fmt3(t.ms_error),
        );
    }

    let _ = writeln!(out, "\n## Mauchly's Test of Sphericity\n");
    let _ = writeln!(out, "| W | chi2 | df | Sig. | eps GG | eps HF | eps LB |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    let s = &b.sphericity;
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} | {} |",
        fmt3(s.w), fmt3(s.chi2), s.df, fmt3(s.p), fmt3(s.eps_gg), fmt3(s.eps_hf), fmt3(s.eps_lb)
    );

    let _ = writeln!(out, "\n## Tests of Within-Subjects Contrasts\n");
    let _ = writeln!(out, "| Contrast | SS | df | MS | F | Sig. | Partial eta2 |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for c in &b.contrasts {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            c.label,
            fmt3(c.ss_hypothesis),
            c.df_hypothesis,
            fmt3(c.ms_hypothesis),
            fmt3(c.f),
            fmt3(c.p),
            fmt3(c.partial_eta2),
        );
    }

    let _ = writeln!(out, "\n## Multivariate Tests\n");
    match &b.multivariate {
        Some(m) => {
            let _ = writeln!(out, "| Statistic | Value | F | Hyp. df | Error df | Sig. | Partial eta2 |");
            let _ = writeln!(out, "|---|---|---|---|---|---|---|");
            for (name, v) in [
                ("Pillai's trace", m.pillai),
                ("Wilks' lambda", m.wilks),
                ("Hotelling's trace", m.hotelling),
                ("Roy's largest root", m.roy),
            ] {
                let _ = writeln!(
                    out,
                    "| {name} | {} | {} | {} | {} | {} | {} |",
                    fmt3(v),
                    fmt3(m.f),
                    fmt3(m.df_hypothesis),
                    fmt3(m.df_error),
                    fmt3(m.p),
                    fmt3(m.partial_eta2),
                );
            }
        }
        None => {
            let _ = writeln!(out, "not computed (see notes)");
        }
    }

    let _ = writeln!(out, "\n## Pairwise Comparisons\n");
    let _ = writeln!(out, "| (I) | (J) | Mean Diff (I-J) | Std. Error | Sig. | Lower | Upper |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    for p in &b.pairwise {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            p.i, p.j, fmt3(p.mean_diff), fmt3(p.se), fmt3(p.p_bonferroni),
            fmt3(p.ci_low), fmt3(p.ci_high)
        );
    }

    let _ = writeln!(out, "\n## Parameter Estimates\n");
    let _ = writeln!(out, "| Period | Mean | Std. Error | t | Sig. | Lower | Upper | Partial eta2 |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for e in &b.estimates {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            e.label, fmt3(e.mean), fmt3(e.se), fmt3(e.t), fmt3(e.p),
            fmt3(e.ci_low), fmt3(e.ci_high), fmt3(e.partial_eta2)
        );
    }

    let _ = writeln!(out, "\n## Tests of Between-Subjects Effects\n");
    let _ = writeln!(out, "| Source | SS | df | MS | F | Sig. | Partial eta2 |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|");
    let bt = &b.between;
    let _ = writeln!(
        out,
        "| Intercept | {} | {} | {} | {} | {} | {} |",
        fmt3(bt.ss_intercept), bt.df_intercept, fmt3(bt.ms_intercept),
        fmt3(bt.f), fmt3(bt.p), fmt3(bt.partial_eta2)
    );
    let _ = writeln!(
        out,
        "| Error | {} | {} | {} | | | |",
        fmt3(bt.ss_error), bt.df_error, fmt3(bt.ms_error)
    );

    if !b.notes.is_empty() {
        let _ = writeln!(out, "\n## Notes\n");
        for n in &b.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    out
}

/// The report tables as named (file stem, CSV text) pairs.
pub fn csv_tables(b: &ReportBundle) -> Vec<(String, String)> {
    let mut tables = Vec::new();

    let mut t = String::from("period,mean,sd,n\n");
    for c in &b.column_summaries {
        let sd = c.sd.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(t, "{},{},{},{}", c.label, c.mean, sd, c.n);
    }
    tables.push(("summaries".to_string(), t));

    let mut t = String::from("correction,ss_effect,df_effect,ms_effect,ss_error,df_error,ms_error,f,p,partial_eta2\n");
    for row in &b.within.tests {
        let _ = writeln!(
            t,
            "{},{},{},{},{},{},{},{},{},{}",
            correction_name(row.correction),
            b.within.ss_effect, row.df_effect, row.ms_effect,
            b.within.ss_error, row.df_error, row.ms_error,
            row.f, row.p, b.within.partial_eta2
        );
    }
    tables.push(("within_subjects".to_string(), t));

    let s = &b.sphericity;
    let t = format!(
        "w,chi2,df,p,eps_gg,eps_hf,eps_lb,degenerate\n{},{},{},{},{},{},{},{}\n",
        s.w, s.chi2, s.df, s.p, s.eps_gg, s.eps_hf, s.eps_lb, s.degenerate
    );
    tables.push(("sphericity".to_string(), t));

    let mut t = String::from("contrast,ss,df,ms,f,p,partial_eta2\n");
    for c in &b.contrasts {
        let _ = writeln!(
            t,
            "{},{},{},{},{},{},{}",
            c.label, c.ss_hypothesis, c.df_hypothesis, c.ms_hypothesis, c.f, c.p, c.partial_eta2
        );
    }
    tables.push(("contrasts".to_string(), t));

    let mut t = String::from("statistic,value,f,df_hyp,df_err,p,partial_eta2\n");
    if let Some(m) = &b.multivariate {
        for (name, v) in [
            ("pillai", m.pillai),
            ("wilks", m.wilks),
            ("hotelling", m.hotelling),
            ("roy", m.roy),
        ] {
            let _ = writeln!(
                t,
                "{name},{v},{},{},{},{},{}",
                m.f, m.df_hypothesis, m.df_error, m.p, m.partial_eta2
            );
        }
    }
    tables.push(("multivariate".to_string(), t));

    let mut t = String::from("i,j,mean_diff,se,p_bonferroni,ci_low,ci_high\n");
    for p in &b.pairwise {
        let _ = writeln!(t, "{},{},{},{},{},{},{}", p.i, p.j, p.mean_diff, p.se, p.p_bonferroni, p.ci_low, p.ci_high);
    }
    tables.push(("pairwise".to_string(), t));

    let mut t = String::from("period,mean,se,t,p,ci_low,ci_high,partial_eta2\n");
    for e in &b.estimates {
        let _ = writeln!(t, "{},{},{},{},{},{},{},{}", e.label, e.mean, e.se, e.t, e.p, e.ci_low, e.ci_high, e.partial_eta2);
    }
    tables.push(("estimates".to_string(), t));

    let bt = &b.between;
    let t = format!(
        "source,ss,df,ms,f,p,partial_eta2\nintercept,{},{},{},{},{},{}\nerror,{},{},{},,,\n",
        bt.ss_intercept, bt.df_intercept, bt.ms_intercept, bt.f, bt.p, bt.partial_eta2,
        bt.ss_error, bt.df_error, bt.ms_error
    );
    tables.push(("between_subjects".to_string(), t));

    tables
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < f64::EPSILON { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n",
        WIDTH / 2.0
    )
}

const PERIOD_COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Simple bar chart of per-period mean readings.
pub fn svg_period_means(b: &ReportBundle) -> String {
    let mut out = svg_open("Mean encoder reading by period");
    let values: Vec<f64> = b.column_summaries.iter().map(|c| c.mean).collect();
    let lo = values.iter().cloned().fold(0.0_f64, f64::min);
    let hi = values.iter().cloned().fold(0.0_f64, f64::max);
    let y = Scale::new(lo, hi, HEIGHT - MARGIN, MARGIN);
    let zero = y.map(0.0);
    let slot = (WIDTH - 2.0 * MARGIN) / values.len() as f64;
    for (i, (v, c)) in values.iter().zip(&b.column_summaries).enumerate() {
        let x = MARGIN + i as f64 * slot + slot * 0.2;
        let w = slot * 0.6;
        let top = y.map(*v).min(zero);
        let h = (y.map(*v) - zero).abs();
        let _ = writeln!(
            out,
            "<rect class=\"bar\" x=\"{x}\" y=\"{top}\" width=\"{w}\" height=\"{h}\" fill=\"{}\"/>",
            PERIOD_COLORS[i % PERIOD_COLORS.len()]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            x + w / 2.0,
            HEIGHT - MARGIN / 2.0,
            c.label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Clustered bar chart: negative vs positive command groups per period.
pub fn svg_sign_clusters(b: &ReportBundle) -> String {
    let mut out = svg_open("Mean encoder reading by period and command sign");
    let mut values = Vec::new();
    for s in &b.sign_means {
        values.push(s.negative_mean.unwrap_or(0.0));
        values.push(s.positive_mean.unwrap_or(0.0));
    }
    let lo = values.iter().cloned().fold(0.0_f64, f64::min);
    let hi = values.iter().cloned().fold(0.0_f64, f64::max);
    let y = Scale::new(lo, hi, HEIGHT - MARGIN, MARGIN);
    let zero = y.map(0.0);
    let slot = (WIDTH - 2.0 * MARGIN) / b.sign_means.len() as f64;
    for (i, s) in b.sign_means.iter().enumerate() {
        let base = MARGIN + i as f64 * slot;
        let w = slot * 0.3;
        for (g, (v, color)) in [
            (s.negative_mean.unwrap_or(0.0), "#d62728"),
            (s.positive_mean.unwrap_or(0.0), "#1f77b4"),
        ]
        .iter()
        .enumerate()
        {
            let x = base + slot * 0.15 + g as f64 * w;
            let top = y.map(*v).min(zero);
            let h = (y.map(*v) - zero).abs();
            let _ = writeln!(
                out,
                "<rect class=\"bar\" x=\"{x}\" y=\"{top}\" width=\"{w}\" height=\"{h}\" fill=\"{color}\"/>"
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            base + slot / 2.0,
            HEIGHT - MARGIN / 2.0,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of encoder reading against commanded position with one
/// least-squares fit line per period.
pub fn svg_scatter_fit(b: &ReportBundle) -> String {
    let mut out = svg_open("Encoder reading vs commanded position");
    let xs: Vec<f64> = b.row_labels.iter().map(|&l| l as f64).collect();
    let x_lo = xs.iter().cloned().fold(f64::MAX, f64::min);
    let x_hi = xs.iter().cloned().fold(f64::MIN, f64::max);
    let mut ys = Vec::new();
    for row in &b.matrix_values {
        ys.extend_from_slice(row);
    }
    let y_lo = ys.iter().cloned().fold(f64::MAX, f64::min);
    let y_hi = ys.iter().cloned().fold(f64::MIN, f64::max);
    let sx = Scale::new(x_lo, x_hi, MARGIN, WIDTH - MARGIN);
    let sy = Scale::new(y_lo, y_hi, HEIGHT - MARGIN, MARGIN);
    for j in 0..b.k {
        let color = PERIOD_COLORS[j % PERIOD_COLORS.len()];
        for (row, &x) in b.matrix_values.iter().zip(&b.row_labels) {
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
                sx.map(x as f64),
                sy.map(row[j])
            );
        }
        let fit = &b.fit_lines[j];
        let (y1, y2) = (fit.intercept + fit.slope * x_lo, fit.intercept + fit.slope * x_hi);
        let _ = writeln!(
            out,
            "<line class=\"fit\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            sx.map(x_lo),
            sy.map(y1),
            sx.map(x_hi),
            sy.map(y2)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>",
            WIDTH - MARGIN - 90.0,
            MARGIN + 16.0 * (j as f64 + 1.0),
            fit.label
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rigsim_core::anova::SubjectMatrix;
    use rigsim_core::report;

    fn bundle() -> ReportBundle {
        let m = SubjectMatrix::new(
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
        .unwrap();
        report::analyze(&m).unwrap()
    }

    #[test]
    fn markdown_has_required_tables() {
        let md = markdown(&bundle());
        assert!(md.contains("Tests of Within-Subjects Effects"));
        assert!(md.contains("Mauchly"));
        assert!(md.contains("Pairwise Comparisons"));
        assert!(md.contains("Greenhouse-Geisser"));
    }

    #[test]
    fn csv_has_all_tables() {
        let tables = csv_tables(&bundle());
        let names: Vec<&str> = tables.iter().map(|(n, _)| n.as_str()).collect();
        for want in [
            "summaries", "within_subjects", "sphericity", "contrasts",
            "multivariate", "pairwise", "estimates", "between_subjects",
        ] {
            assert!(names.contains(&want), "missing table {want}");
        }
        for (_, text) in &tables {
            assert!(text.ends_with('\n'));
        }
    }

    #[test]
    fn scatter_has_one_fit_line_per_period() {
        let svg = svg_scatter_fit(&bundle());
        assert_eq!(svg.matches("class=\"fit\"").count(), 3);
    }

    #[test]
    fn clustered_bars_count() {
        let b = bundle();
        let svg = svg_sign_clusters(&b);
        assert_eq!(svg.matches("class=\"bar\"").count(), 2 * b.k);
    }

    #[test]
    fn period_bars_count() {
        let b = bundle();
        let svg = svg_period_means(&b);
        assert_eq!(svg.matches("class=\"bar\"").count(), b.k);
    }
}
