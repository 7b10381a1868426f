//! Text and CSV renderings of metrics. Both are pure functions of their
//! inputs, so identical runs produce byte-identical output.

use std::fmt::Write;

use super::metrics::MetricsReport;

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Aligned table: one row per class, then OA, AA and kappa (scaled to percent).
/// `names` overrides the class column; missing names fall back to the label.
pub fn format_table(report: &MetricsReport, names: &[String]) -> String {
    let label = |i: usize| {
        names
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("class {}", report.classes[i]))
    };
    let width = (0..report.classes.len())
        .map(|i| label(i).len())
        .chain([5])
        .max()
        .unwrap_or(5);
    let spread = report.run_count > 1;
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}", "Class", "Accuracy");
    for (i, &acc) in report.per_class_accuracy.iter().enumerate() {
        let _ = writeln!(out, "{:<width$}  {:>8}", label(i), cell(acc));
    }
    let summary = [
        ("OA", report.oa, report.oa_std),
        ("AA", report.aa, report.aa_std),
        ("K(%)", 100.0 * report.kappa, 100.0 * report.kappa_std),
    ];
    for (name, mean, std) in summary {
        if spread {
            let _ = writeln!(out, "{name:<width$}  {mean:>8.2} ± {std:.2}");
        } else {
            let _ = writeln!(out, "{name:<width$}  {mean:>8.2}");
        }
    }
    let _ = writeln!(out, "runs: {}", report.run_count);
    out
}

/// One row per run (`run,seed,oa,aa,kappa,acc_<label>...`) followed by
/// `mean` and `std` rows. Empty per-class cells mean no test pixels.
pub fn format_csv(runs: &[MetricsReport], seeds: &[u64], summary: &MetricsReport) -> String {
    let mut out = String::from("run,seed,oa,aa,kappa");
    for c in &summary.classes {
        let _ = write!(out, ",acc_{c}");
    }
    out.push('\n');
    let per_class = |out: &mut String, values: &[Option<f64>]| {
        for v in values {
            match v {
                Some(x) => {
                    let _ = write!(out, ",{x:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    };
    for (i, r) in runs.iter().enumerate() {
        let seed = seeds.get(i).map_or(String::new(), u64::to_string);
        let _ = write!(out, "{i},{seed},{:.6},{:.6},{:.6}", r.oa, r.aa, r.kappa);
        per_class(&mut out, &r.per_class_accuracy);
    }
    let _ = write!(out, "mean,,{:.6},{:.6},{:.6}", summary.oa, summary.aa, summary.kappa);
    per_class(&mut out, &summary.per_class_accuracy);
    let _ = writeln!(
        out,
        "std,,{:.6},{:.6},{:.6}{}",
        summary.oa_std,
        summary.aa_std,
        summary.kappa_std,
        ",".repeat(summary.classes.len())
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::metrics::ConfusionMatrix;

    fn sample() -> MetricsReport {
        let cm = ConfusionMatrix::from_counts(vec![1, 2], vec![2, 1, 1, 2]).unwrap();
        MetricsReport::from_confusion(&cm).unwrap()
    }

    #[test]
    fn table_layout() {
        let t = format_table(&sample(), &[]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "Class    Accuracy");
        assert_eq!(lines[1], "class 1     66.67");
        assert_eq!(lines[5], "K(%)        33.33");
        assert_eq!(lines[6], "runs: 1");
    }

    #[test]
    fn csv_rows() {
        let r = sample();
        let csv = format_csv(&[r.clone()], &[5], &r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "run,seed,oa,aa,kappa,acc_1,acc_2");
        assert_eq!(lines[1], "0,5,66.666667,66.666667,0.333333,66.666667,66.666667");
        assert_eq!(lines[2], "mean,,66.666667,66.666667,0.333333,66.666667,66.666667");
        assert_eq!(lines[3], "std,,0.000000,0.000000,0.000000,,");
    }
}
