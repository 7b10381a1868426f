//! One-vs-one soft-margin SVM with a polynomial kernel.

mod cache;
mod io;
mod smo;

pub use io::{read_model, write_model, MODEL_FORMAT_VERSION};

use rayon::prelude::*;

use crate::datacube::LabelMap;
use crate::error::{Error, Result};
use crate::profile::{ScaleParams, ScaledFeatures};
use crate::scalar::{dot, Real};

/// `(gamma·xᵀy + coef0)^degree` with soft-margin penalty `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    pub degree: u32,
    pub gamma: T,
    pub coef0: T,
    pub penalty_c: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(degree: u32, gamma: T, coef0: T, penalty_c: T) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("kernel degree must be at least 1".into()));
        }
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("kernel gamma must be positive, got {gamma}")));
        }
        if !(penalty_c > T::zero()) || !penalty_c.is_finite() {
            return Err(Error::InvalidArgument(format!("penalty C must be positive, got {penalty_c}")));
        }
        if !coef0.is_finite() {
            return Err(Error::InvalidArgument("kernel coef0 must be finite".into()));
        }
        Ok(KernelParams {
            degree,
            gamma,
            coef0,
            penalty_c,
        })
    }

    /// Degree 3, `gamma = 1/dim`, `coef0 = 0`, `C = 1`.
    pub fn default_for_dim(dim: usize) -> Self {
        KernelParams {
            degree: 3,
            gamma: T::one() / T::from_usize(dim.max(1)).unwrap(),
            coef0: T::zero(),
            penalty_c: T::one(),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        (self.gamma * dot(x, y) + self.coef0).powi(self.degree as i32)
    }
}

pub fn polynomial_kernel<T: Real>(x: &[T], y: &[T], params: &KernelParams<T>) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "kernel argument length",
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(params.eval_unchecked(x, y))
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    /// Kernel rows are fully precomputed when they fit in this budget,
    /// otherwise kept in an LRU cache of this size.
    pub cache_mb: usize,
    pub max_iterations: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tolerance: 1e-3,
            cache_mb: 200,
            max_iterations: None,
        }
    }
}

/// Dual solution of one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel<T> {
    pub support_vectors: Vec<Vec<T>>,
    /// `α_i·y_i` for each support vector.
    pub coefficients: Vec<T>,
    /// Positions of the support vectors in the training sample list.
    pub support_indices: Vec<usize>,
    pub bias: T,
    pub params: KernelParams<T>,
}

impl<T: Real> BinaryModel<T> {
    /// `Σ coef_i K(sv_i, x) + bias`; positive means the `+1` class.
    pub fn decision(&self, x: &[T]) -> T {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, &a)| a * self.params.eval_unchecked(sv, x))
            .sum::<T>()
            + self.bias
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }
}

/// Solver diagnostics returned with a binary model.
#[derive(Debug, Clone, Copy)]
pub struct TrainStats {
    pub iterations: usize,
    pub converged: bool,
}

/// Trains on `samples` labelled `+1`/`-1`.
pub fn train_binary<T: Real>(
    samples: &[&[T]],
    labels: &[i8],
    params: &KernelParams<T>,
    options: &TrainOptions,
) -> Result<(BinaryModel<T>, TrainStats)> {
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: samples.len(),
            actual: labels.len(),
        });
    }
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("binary SVM needs at least 2 samples".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidArgument(format!("binary labels must be +1/-1, got {bad}")));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::InvalidArgument("binary SVM needs both classes present".into()));
    }
    let dim = samples[0].len();
    if let Some(s) = samples.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            what: "sample length",
            expected: dim,
            actual: s.len(),
        });
    }
    let max_iterations = options
        .max_iterations
        .unwrap_or_else(|| (100 * samples.len()).max(10_000_000));
    let sol = smo::solve(
        samples,
        labels,
        params,
        options.tolerance,
        options.cache_mb * (1 << 20),
        max_iterations,
    );
    if !sol.converged {
        log::warn!("SMO stopped after {} iterations without reaching tolerance", sol.iterations);
    }
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    let mut support_indices = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > T::zero() {
            support_vectors.push(samples[i].to_vec());
            coefficients.push(a * T::from_i8(labels[i]).unwrap());
            support_indices.push(i);
        }
    }
    if support_vectors.is_empty() {
        return Err(Error::Numerical("SVM training produced no support vectors".into()));
    }
    Ok((
        BinaryModel {
            support_vectors,
            coefficients,
            support_indices,
            bias: -sol.rho,
            params: *params,
        },
        TrainStats {
            iterations: sol.iterations,
            converged: sol.converged,
        },
    ))
}

/// One-vs-one ensemble. Machine `m` separates `pairs[m].0` (`+1`) from `pairs[m].1` (`-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    pub classes: Vec<u16>,
    pub pairs: Vec<(u16, u16)>,
    pub machines: Vec<BinaryModel<T>>,
    pub scaling: ScaleParams<T>,
}

/// Class pairs `(a, b)` with `a < b`, in lexicographic order.
pub fn class_pairs(classes: &[u16]) -> Vec<(u16, u16)> {
    let mut out = Vec::with_capacity(classes.len() * classes.len().saturating_sub(1) / 2);
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

/// Trains one machine per class pair on that pair's samples only.
pub fn train_one_vs_one<T: Real>(
    samples: &[&[T]],
    labels: &[u16],
    params: &KernelParams<T>,
    options: &TrainOptions,
    scaling: ScaleParams<T>,
) -> Result<SvmModel<T>> {
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: samples.len(),
            actual: labels.len(),
        });
    }
    let mut classes: Vec<u16> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Degenerate(format!(
            "multiclass SVM needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    let pairs = class_pairs(&classes);
    let machines = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (&x, &l) in samples.iter().zip(labels) {
                if l == a {
                    xs.push(x);
                    ys.push(1i8);
                } else if l == b {
                    xs.push(x);
                    ys.push(-1i8);
                }
            }
            train_binary(&xs, &ys, params, options).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        classes,
        pairs,
        machines,
        scaling,
    })
}

/// Trains on the training pixels of a scaled profile.
pub fn train_multiclass<T: Real>(
    features: &ScaledFeatures<T>,
    truth: &LabelMap,
    train_indices: &[usize],
    params: &KernelParams<T>,
    options: &TrainOptions,
) -> Result<SvmModel<T>> {
    if truth.labels().len() != features.profile.pixel_count() {
        return Err(Error::DimensionMismatch {
            what: "label map pixel count",
            expected: features.profile.pixel_count(),
            actual: truth.labels().len(),
        });
    }
    let mut samples = Vec::with_capacity(train_indices.len());
    let mut labels = Vec::with_capacity(train_indices.len());
    for &i in train_indices {
        let l = truth.get(i);
        if l == 0 {
            return Err(Error::InvalidArgument(format!("training pixel {i} is unlabeled")));
        }
        samples.push(features.pixel(i));
        labels.push(l);
    }
    train_one_vs_one(&samples, &labels, params, options, features.params.clone())
}

impl<T: Real> SvmModel<T> {
    pub fn dim(&self) -> usize {
        self.scaling.dim()
    }

    /// Votes per class (in `classes` order) for a scaled feature vector.
    pub fn votes(&self, x: &[T]) -> Result<Vec<usize>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature vector length",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut votes = vec![0usize; self.classes.len()];
        for (&(a, b), m) in self.pairs.iter().zip(&self.machines) {
            let winner = if m.decision(x) > T::zero() { a } else { b };
            let pos = self.classes.binary_search(&winner).expect("pair class in class list");
            votes[pos] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lowest class label.
    pub fn predict(&self, x: &[T]) -> Result<u16> {
        let votes = self.votes(x)?;
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    /// Predicts each listed pixel.
    pub fn predict_indices(&self, features: &ScaledFeatures<T>, indices: &[usize]) -> Result<Vec<u16>> {
        indices.par_iter().map(|&i| self.predict(features.pixel(i))).collect()
    }
}

pub fn predict<T: Real>(model: &SvmModel<T>, x: &[T]) -> Result<u16> {
    model.predict(x)
}

/// Labels every pixel that is nonzero in `mask`; background stays 0.
pub fn classify_map<T: Real>(model: &SvmModel<T>, features: &ScaledFeatures<T>, mask: &LabelMap) -> Result<LabelMap> {
    if mask.labels().len() != features.profile.pixel_count()
        || mask.rows() != features.profile.rows()
    {
        return Err(Error::DimensionMismatch {
            what: "mask pixel count",
            expected: features.profile.pixel_count(),
            actual: mask.labels().len(),
        });
    }
    let targets = mask.labeled_indices();
    let predicted = model.predict_indices(features, &targets)?;
    let class_count = model.classes.last().copied().unwrap_or(0).max(mask.class_count());
    let mut out = LabelMap::background(mask.rows(), mask.cols(), class_count);
    for (&i, &l) in targets.iter().zip(&predicted) {
        out.set(i, l);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, coef0: f64, c: f64) -> KernelParams<f64> {
        KernelParams::new(3, gamma, coef0, c).unwrap()
    }

    #[test]
    fn kernel_values() {
        let p = params(0.5, 0.0, 1.0);
        assert_eq!(polynomial_kernel(&[1.0, 2.0], &[3.0, 4.0], &p).unwrap(), 166.375);
        assert_eq!(polynomial_kernel(&[1.0, 0.0], &[0.0, 5.0], &p).unwrap(), 0.0);
        // gamma·‖x‖² = 1
        let q = params(0.2, 0.0, 1.0);
        assert!((polynomial_kernel(&[1.0, 2.0], &[1.0, 2.0], &q).unwrap() - 1.0).abs() < 1e-15);
        assert!(polynomial_kernel(&[1.0], &[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(KernelParams::new(0, 1.0, 0.0, 1.0).is_err());
        assert!(KernelParams::new(3, 0.0, 0.0, 1.0).is_err());
        assert!(KernelParams::new(3, 1.0, 0.0, -1.0).is_err());
        let d = KernelParams::<f64>::default_for_dim(4);
        assert_eq!((d.degree, d.gamma, d.coef0, d.penalty_c), (3, 0.25, 0.0, 1.0));
    }

    #[test]
    fn two_point_problem() {
        let a = [1.0, 1.0];
        let b = [-1.0, -0.5];
        let samples: Vec<&[f64]> = vec![&a, &b];
        let (m, _) = train_binary(&samples, &[1, -1], &params(0.5, 1.0, 10.0), &TrainOptions::default()).unwrap();
        assert_eq!(m.support_vectors.len(), 2);
        assert!(m.decision(&a) > 0.0);
        assert!(m.decision(&b) < 0.0);
    }

    #[test]
    fn binary_input_validation() {
        let a = [1.0];
        let b = [2.0];
        let samples: Vec<&[f64]> = vec![&a, &b];
        let p = params(1.0, 0.0, 1.0);
        let o = TrainOptions::default();
        assert!(train_binary(&samples, &[1, 1], &p, &o).is_err());
        assert!(train_binary(&samples[..1], &[1], &p, &o).is_err());
        assert!(train_binary(&samples, &[1, 0], &p, &o).is_err());
    }

    #[test]
    fn machine_counts() {
        let data: Vec<Vec<f64>> = (0..32).map(|i| vec![(i / 2) as f64, ((i / 2) % 3) as f64]).collect();
        let samples: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let labels: Vec<u16> = (0..32).map(|i| (i / 2) as u16 + 1).collect();
        let scaling = ScaleParams { mins: vec![0.0; 2], maxs: vec![1.0; 2] };
        let model = train_one_vs_one(&samples, &labels, &params(0.5, 1.0, 1.0), &TrainOptions::default(), scaling.clone()).unwrap();
        assert_eq!(model.classes.len(), 16);
        assert_eq!(model.machines.len(), 120);
        let two = train_one_vs_one(&samples[..4], &labels[..4], &params(0.5, 1.0, 1.0), &TrainOptions::default(), scaling.clone()).unwrap();
        assert_eq!(two.machines.len(), 1);
        assert!(train_one_vs_one(&samples[..2], &labels[..2], &params(0.5, 1.0, 1.0), &TrainOptions::default(), scaling).is_err());
    }

    fn constant_machine(bias: f64) -> BinaryModel<f64> {
        BinaryModel {
            support_vectors: vec![vec![0.0, 0.0]],
            coefficients: vec![1.0],
            support_indices: vec![0],
            bias,
            params: params(1.0, 0.0, 1.0),
        }
    }

    #[test]
    fn voting_and_ties() {
        let scaling = ScaleParams { mins: vec![0.0; 2], maxs: vec![1.0; 2] };
        // (1,2) → 1, (1,3) → 3, (2,3) → 2: one vote each.
        let cyclic = SvmModel {
            classes: vec![1, 2, 3],
            pairs: class_pairs(&[1, 2, 3]),
            machines: vec![constant_machine(1.0), constant_machine(-1.0), constant_machine(1.0)],
            scaling: scaling.clone(),
        };
        assert_eq!(cyclic.votes(&[0.3, 0.4]).unwrap(), vec![1, 1, 1]);
        assert_eq!(cyclic.predict(&[0.3, 0.4]).unwrap(), 1);
        // all machines favouring class 3
        let unanimous = SvmModel {
            machines: vec![constant_machine(1.0), constant_machine(-1.0), constant_machine(-1.0)],
            ..cyclic.clone()
        };
        assert_eq!(unanimous.votes(&[0.0, 0.0]).unwrap(), vec![1, 0, 2]);
        assert_eq!(unanimous.predict(&[0.0, 0.0]).unwrap(), 3);
        assert!(cyclic.predict(&[0.0]).is_err());
    }
}
