use rayon::prelude::*;

use super::metrics::MetricsReport;
use crate::error::{Error, Result};

/// Per-run reports in run order plus their summary.
#[derive(Debug, Clone)]
pub struct MonteCarloOutcome<R> {
    pub summary: MetricsReport,
    pub runs: Vec<MetricsReport>,
    pub outputs: Vec<R>,
}

/// Runs `pipeline(i, base_seed + i)` for `i in 0..runs`, in parallel, and
/// summarises the reports. Results are collected and reduced in run order so
/// the summary does not depend on scheduling.
pub fn monte_carlo<R, F>(runs: usize, base_seed: u64, pipeline: F) -> Result<MonteCarloOutcome<R>>
where
    R: Send,
    F: Fn(usize, u64) -> Result<(MetricsReport, R)> + Sync,
{
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let results: Vec<(MetricsReport, R)> = (0..runs)
        .into_par_iter()
        .map(|i| {
            pipeline(i, base_seed.wrapping_add(i as u64)).map_err(|e| Error::Run {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let (reports, outputs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(&reports)?;
    Ok(MonteCarloOutcome {
        summary,
        runs: reports,
        outputs,
    })
}

/// Arithmetic means and sample standard deviations (divisor `n − 1`, zero
/// for a single run). Per-class means skip runs where the class had no test pixels.
pub fn summarize(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to summarise".into()))?;
    if let Some(r) = reports.iter().find(|r| r.classes != first.classes) {
        return Err(Error::InvalidArgument(format!(
            "runs disagree on the class list: {:?} vs {:?}",
            first.classes, r.classes
        )));
    }
    let (oa, oa_std) = mean_std(reports.iter().map(|r| r.oa));
    let (aa, aa_std) = mean_std(reports.iter().map(|r| r.aa));
    let (kappa, kappa_std) = mean_std(reports.iter().map(|r| r.kappa));
    let per_class_accuracy = (0..first.classes.len())
        .map(|c| {
            let vals: Vec<f64> = reports.iter().filter_map(|r| r.per_class_accuracy[c]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    Ok(MetricsReport {
        classes: first.classes.clone(),
        oa,
        aa,
        kappa,
        per_class_accuracy,
        oa_std,
        aa_std,
        kappa_std,
        run_count: reports.len(),
    })
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() < 2 {
        0.0
    } else {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::metrics::ConfusionMatrix;

    fn report(hits: u64) -> MetricsReport {
        let cm = ConfusionMatrix::from_counts(vec![1, 2], vec![hits, 4 - hits, 0, 4]).unwrap();
        MetricsReport::from_confusion(&cm).unwrap()
    }

    #[test]
    fn single_run_is_identity() {
        let out = monte_carlo(1, 9, |_, _| Ok((report(3), ()))).unwrap();
        assert_eq!(out.summary, report(3));
    }

    #[test]
    fn identical_runs_have_zero_spread() {
        let out = monte_carlo(4, 0, |_, _| Ok((report(2), ()))).unwrap();
        assert_eq!(out.summary.oa, report(2).oa);
        assert_eq!(out.summary.oa_std, 0.0);
        assert_eq!(out.summary.run_count, 4);
    }

    #[test]
    fn seeds_and_order() {
        let out = monte_carlo(5, 100, |i, seed| {
            assert_eq!(seed, 100 + i as u64);
            Ok((report((i % 5) as u64), seed))
        })
        .unwrap();
        assert_eq!(out.outputs, vec![100, 101, 102, 103, 104]);
        // OA = 100·(h + 4)/8 for h = 0..4 → 50, 62.5, 75, 87.5, 100
        assert_eq!(out.summary.oa, 75.0);
        // squared deviations 625 + 156.25 + 0 + 156.25 + 625 over n − 1 = 4
        assert!((out.summary.oa_std - (1562.5f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn failure_carries_run_index() {
        let err = monte_carlo(6, 0, |i, _| {
            if i == 3 {
                Err(Error::Degenerate("boom".into()))
            } else {
                Ok((report(1), ()))
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Run { index: 3, .. }));
        assert!(monte_carlo(0, 0, |_, _| Ok((report(1), ()))).is_err());
    }
}
