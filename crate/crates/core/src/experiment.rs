//! End-to-end pipeline: spectral PCA, eigenfilter design, profile
//! construction, and Monte Carlo evaluation of the SVM on repeated draws.

use crate::datacube::{HyperCube, LabelMap};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, draw_training_set, monte_carlo, MetricsReport, MonteCarloOutcome, SamplingScheme, TrainTestSplit};
use crate::filters::{design_filter_set, FilterSelection, FilterSet};
use crate::profile::{build_profile_with, component_features, fit_feature_scaling, EnergyProfile};
use crate::scalar::Real;
use crate::spectral::{fit_spectral_pca, PcStack, PcaModel, DEFAULT_VARIANCE_FRACTION};
use crate::svm::{classify_map, train_multiclass, KernelParams, SvmModel, TrainOptions};

/// Which per-pixel features feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// Eigenfilter responses on every retained component.
    Energy,
    /// The retained component values only.
    Pca,
    /// Eigenfilter responses followed by the component values.
    EnergyAndPca,
}

/// Which image the patch statistics are learned from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterSource {
    /// One filter set from the first component, shared by all components.
    FirstComponent,
    /// One filter set per component; all keep the first component's filter count.
    PerComponent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub variance_fraction: f64,
    pub window: usize,
    pub selection: FilterSelection,
    pub source: FilterSource,
    pub mode: FeatureMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            variance_fraction: DEFAULT_VARIANCE_FRACTION,
            window: 35,
            selection: FilterSelection::default(),
            source: FilterSource::FirstComponent,
            mode: FeatureMode::Energy,
        }
    }
}

/// Everything computed before the per-run loop.
#[derive(Debug, Clone)]
pub struct Features<T> {
    pub pca: PcaModel<T>,
    pub pcs: PcStack<T>,
    /// Empty in [`FeatureMode::Pca`].
    pub filters: Vec<FilterSet<T>>,
    pub profile: EnergyProfile<T>,
}

impl<T> Features<T> {
    pub fn k(&self) -> usize {
        self.pcs.planes.len()
    }
}

/// PCA, component selection, projection, filter design and profile construction.
pub fn extract_features<T: Real>(cube: &HyperCube<T>, config: &FeatureConfig) -> Result<Features<T>> {
    let (pca, pcs) = reduce_spectra(cube, config.variance_fraction)?;
    let (filters, profile) = spatial_features(&pcs, config)?;
    Ok(Features {
        pca,
        pcs,
        filters,
        profile,
    })
}

/// Spectral PCA and projection onto the components reaching `variance_fraction`.
pub fn reduce_spectra<T: Real>(cube: &HyperCube<T>, variance_fraction: f64) -> Result<(PcaModel<T>, PcStack<T>)> {
    let pca = fit_spectral_pca(cube)?;
    let k = pca.select_components(variance_fraction)?;
    let pcs = pca.project(cube, k)?;
    log::info!("{k} of {} components retained", pca.bands());
    Ok((pca, pcs))
}

/// Filter sets and the per-pixel profile for `config.mode`. No filters are
/// designed in [`FeatureMode::Pca`].
pub fn spatial_features<T: Real>(pcs: &PcStack<T>, config: &FeatureConfig) -> Result<(Vec<FilterSet<T>>, EnergyProfile<T>)> {
    if config.mode == FeatureMode::Pca {
        return Ok((Vec::new(), component_features(pcs)?));
    }
    let first = design_filter_set(&pcs.planes[0], config.window, config.selection)?;
    log::info!("{} filters of {1}x{1}", first.len(), config.window);
    let filters = match config.source {
        FilterSource::FirstComponent => vec![first],
        FilterSource::PerComponent => {
            let n = FilterSelection::Count(first.len());
            let mut sets = vec![first];
            for plane in &pcs.planes[1..] {
                sets.push(design_filter_set(plane, config.window, n)?);
            }
            sets
        }
    };
    let sets: Vec<&FilterSet<T>> = match config.source {
        FilterSource::FirstComponent => vec![&filters[0]; pcs.k()],
        FilterSource::PerComponent => filters.iter().collect(),
    };
    let mut profile = build_profile_with(pcs, &sets)?;
    if config.mode == FeatureMode::EnergyAndPca {
        profile = profile.concat(&component_features(pcs)?)?;
    }
    Ok((filters, profile))
}

/// Classifier settings for each run. `gamma = None` means `1 / feature count`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub degree: u32,
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub penalty_c: f64,
    pub options: TrainOptions,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            degree: 3,
            gamma: None,
            coef0: 0.0,
            penalty_c: 1.0,
            options: TrainOptions::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn kernel<T: Real>(&self, dim: usize) -> Result<KernelParams<T>> {
        let gamma = self.gamma.unwrap_or(1.0 / dim.max(1) as f64);
        KernelParams::new(self.degree, T::lit(gamma), T::lit(self.coef0), T::lit(self.penalty_c))
    }
}

/// Sampling, classifier and Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub proportion: f64,
    pub min_per_class: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub classifier: ClassifierConfig,
}

/// Outputs of a single run besides its metrics.
#[derive(Debug, Clone)]
pub struct RunArtifacts<T> {
    pub seed: u64,
    pub split: TrainTestSplit,
    pub model: SvmModel<T>,
}

/// Draw → scale → train → predict test pixels → score.
pub fn run_once<T: Real>(
    profile: &EnergyProfile<T>,
    truth: &LabelMap,
    config: &EvaluationConfig,
    seed: u64,
) -> Result<(MetricsReport, RunArtifacts<T>)> {
    if profile.pixel_count() != truth.labels().len() {
        return Err(Error::DimensionMismatch {
            what: "label map pixel count",
            expected: profile.pixel_count(),
            actual: truth.labels().len(),
        });
    }
    let scheme = SamplingScheme::new(config.proportion, config.min_per_class, seed)?;
    let split = draw_training_set(truth, &scheme)?;
    if split.test.is_empty() {
        return Err(Error::Degenerate("no test pixels left after the training draw".into()));
    }
    let features = fit_feature_scaling(profile, &split.train)?;
    let params = config.classifier.kernel(features.dim())?;
    let model = train_multiclass(&features, truth, &split.train, &params, &config.classifier.options)?;
    let predicted = model.predict_indices(&features, &split.test)?;
    let mut pred_map = LabelMap::background(truth.rows(), truth.cols(), truth.class_count());
    for (&i, &l) in split.test.iter().zip(&predicted) {
        pred_map.set(i, l);
    }
    let cm = confusion(&pred_map, truth, &split.test)?;
    let report = MetricsReport::from_confusion(&cm)?;
    Ok((report, RunArtifacts { seed, split, model }))
}

/// [`run_once`] over `config.runs` seeds starting at `config.base_seed`.
pub fn evaluate<T: Real>(
    profile: &EnergyProfile<T>,
    truth: &LabelMap,
    config: &EvaluationConfig,
) -> Result<MonteCarloOutcome<RunArtifacts<T>>> {
    monte_carlo(config.runs, config.base_seed, |_, seed| run_once(profile, truth, config, seed))
}

/// Labels every labeled pixel of `truth` with a run's model, rescaling with
/// the training range stored in the model.
pub fn classify_scene<T: Real>(profile: &EnergyProfile<T>, truth: &LabelMap, artifacts: &RunArtifacts<T>) -> Result<LabelMap> {
    let features = fit_feature_scaling(profile, &artifacts.split.train)?;
    classify_map(&artifacts.model, &features, truth)
}
