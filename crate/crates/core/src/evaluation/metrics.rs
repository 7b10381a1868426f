use crate::datacube::LabelMap;
use crate::error::{Error, Result};

/// `counts[i][j]` = pixels of true class `classes[i]` predicted as `classes[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<u16>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<u16>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![0; k * k],
        }
    }

    /// Builds from explicit row-major counts.
    pub fn from_counts(classes: Vec<u16>, counts: Vec<u64>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k * k {
            return Err(Error::DimensionMismatch {
                what: "confusion matrix entries",
                expected: k * k,
                actual: counts.len(),
            });
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    /// Tallies paired truth/prediction labels.
    pub fn tally(classes: Vec<u16>, truth: &[u16], predicted: &[u16]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                what: "prediction count",
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        let mut cm = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            let i = cm.position(t)?;
            let j = cm.position(p)?;
            let k = cm.k();
            cm.counts[i * k + j] += 1;
        }
        Ok(cm)
    }

    fn position(&self, label: u16) -> Result<usize> {
        self.classes.binary_search(&label).map_err(|_| {
            Error::InvalidArgument(format!("label {label} is not in the class list {:?}", self.classes))
        })
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }
    pub fn k(&self) -> usize {
        self.classes.len()
    }
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k() + predicted]
    }
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.get(i, i)).sum()
    }
    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.k()).map(|j| self.get(i, j)).sum()
    }
    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.k()).map(|i| self.get(i, j)).sum()
    }

    /// Same matrix with classes relabelled so that row/column `i` moves to `order[i]`'s slot.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let k = self.k();
        let mut counts = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                counts[i * k + j] = self.get(order[i], order[j]);
            }
        }
        ConfusionMatrix {
            classes: self.classes.clone(),
            counts,
        }
    }

    /// Per-class accuracy in percent; `None` for classes with no test pixels.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.k())
            .map(|i| {
                let row = self.row_sum(i);
                (row > 0).then(|| 100.0 * self.get(i, i) as f64 / row as f64)
            })
            .collect()
    }
}

/// Tallies `pred` against `truth` over `test_indices`. The class list is the
/// set of labels present in `truth`.
pub fn confusion(pred: &LabelMap, truth: &LabelMap, test_indices: &[usize]) -> Result<ConfusionMatrix> {
    if (pred.rows(), pred.cols()) != (truth.rows(), truth.cols()) {
        return Err(Error::DimensionMismatch {
            what: "prediction map pixel count",
            expected: truth.labels().len(),
            actual: pred.labels().len(),
        });
    }
    let n = truth.labels().len();
    if let Some(&bad) = test_indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!("test index {bad} out of range")));
    }
    let t: Vec<u16> = test_indices.iter().map(|&i| truth.get(i)).collect();
    let p: Vec<u16> = test_indices.iter().map(|&i| pred.get(i)).collect();
    ConfusionMatrix::tally(truth.classes(), &t, &p)
}

fn require_total(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::Degenerate("confusion matrix is empty".into())),
        t => Ok(t as f64),
    }
}

/// `100 · trace / total`.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(100.0 * cm.trace() as f64 / require_total(cm)?)
}

/// Mean of per-class accuracies in percent over classes that have test pixels.
pub fn average_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    require_total(cm)?;
    let per_class = cm.per_class_accuracy();
    let skipped: Vec<u16> = per_class
        .iter()
        .zip(cm.classes())
        .filter(|(a, _)| a.is_none())
        .map(|(_, &c)| c)
        .collect();
    if !skipped.is_empty() {
        log::warn!("classes {skipped:?} have no test pixels; left out of the average accuracy");
    }
    let present: Vec<f64> = per_class.into_iter().flatten().collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Cohen's kappa `(p_o − p_e) / (1 − p_e)`; defined as 0 when `p_e = 1`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = require_total(cm)?;
    let p_o = cm.trace() as f64 / total;
    let p_e = (0..cm.k())
        .map(|i| cm.row_sum(i) as f64 * cm.col_sum(i) as f64)
        .sum::<f64>()
        / (total * total);
    if p_e >= 1.0 {
        log::warn!("chance agreement is 1; kappa reported as 0");
        return Ok(0.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// OA / AA in percent, kappa as a fraction. For Monte Carlo summaries the
/// values are means over runs and the `_std` fields hold sample standard
/// deviations; for single runs the deviations are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<u16>,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub oa_std: f64,
    pub aa_std: f64,
    pub kappa_std: f64,
    pub run_count: usize,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        Ok(MetricsReport {
            classes: cm.classes().to_vec(),
            oa: overall_accuracy(cm)?,
            aa: average_accuracy(cm)?,
            kappa: kappa(cm)?,
            per_class_accuracy: cm.per_class_accuracy(),
            oa_std: 0.0,
            aa_std: 0.0,
            kappa_std: 0.0,
            run_count: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_by_hand() {
        let cm = ConfusionMatrix::from_counts(vec![1, 2], vec![2, 1, 1, 2]).unwrap();
        assert!((overall_accuracy(&cm).unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert!((average_accuracy(&cm).unwrap() - 200.0 / 3.0).abs() < 1e-12);
        // p_o = 4/6, p_e = (3·3 + 3·3)/36 = 1/2
        assert!((kappa(&cm).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tally_and_perfect_prediction() {
        let truth = [1, 1, 2, 2, 3, 3, 3, 1, 2, 3];
        let cm = ConfusionMatrix::tally(vec![1, 2, 3], &truth, &truth).unwrap();
        assert_eq!(cm.trace(), 10);
        assert_eq!(cm.total(), 10);
        assert_eq!(overall_accuracy(&cm).unwrap(), 100.0);
        assert_eq!(average_accuracy(&cm).unwrap(), 100.0);
        assert_eq!(kappa(&cm).unwrap(), 1.0);
        assert!(ConfusionMatrix::tally(vec![1, 2], &[1], &[4]).is_err());
    }

    #[test]
    fn two_hits_one_miss_per_class() {
        let truth = LabelMap::new(1, 6, vec![1, 1, 1, 2, 2, 2], None).unwrap();
        let pred = LabelMap::new(1, 6, vec![1, 1, 2, 2, 1, 2], None).unwrap();
        let cm = confusion(&pred, &truth, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(cm, ConfusionMatrix::from_counts(vec![1, 2], vec![2, 1, 1, 2]).unwrap());
        let empty = confusion(&pred, &truth, &[]).unwrap();
        assert_eq!(empty.total(), 0);
        assert!(overall_accuracy(&empty).is_err());
        assert!(confusion(&pred, &truth, &[6]).is_err());
    }

    #[test]
    fn chance_agreement_one() {
        let cm = ConfusionMatrix::from_counts(vec![1, 2], vec![5, 0, 0, 0]).unwrap();
        assert_eq!(kappa(&cm).unwrap(), 0.0);
        // class 2 has no test pixels: AA covers class 1 only
        assert_eq!(average_accuracy(&cm).unwrap(), 100.0);
    }
}
