use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eigenprofile::datacube::{load_cube, load_labels, write_class_map, CubeHeader, Palette};
use eigenprofile::evaluation::{format_csv, format_table, MetricsReport};
use eigenprofile::experiment::{
    classify_scene, evaluate, reduce_spectra, spatial_features, ClassifierConfig, EvaluationConfig, FeatureConfig, FeatureMode,
};
use eigenprofile::svm::{write_model, TrainOptions};
use eigenprofile::HyperCube;

use crate::config::PipelineConfig;
use crate::{CliError, StageExt};

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub bands: usize,
    pub components: usize,
    pub filters: usize,
    pub feature_dim: usize,
    pub report: MetricsReport,
    pub artifacts: Vec<PathBuf>,
}

struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.written.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
    }
}

fn load(config: &PipelineConfig) -> Result<(HyperCube, eigenprofile::datacube::LabelMap), CliError> {
    let header_path = match &config.header {
        Some(h) => h.clone(),
        None => CubeHeader::sibling_path(&config.cube).ok_or_else(|| CliError::Io {
            path: config.cube.clone(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                if config.cube.exists() {
                    "no header file next to the cube (tried <cube>.hdr and <stem>.hdr)"
                } else {
                    "cube file not found"
                },
            ),
        })?,
    };
    let header = CubeHeader::read(&header_path).stage("datacube")?;
    let mut cube: HyperCube = load_cube(&config.cube, &header).stage("datacube")?;
    if !config.removed_bands.is_empty() {
        cube = cube.remove_bands(&config.removed_bands).stage("datacube")?;
    }
    let labels = load_labels(&config.labels, cube.rows(), cube.cols()).stage("datacube")?;
    Ok((cube, labels))
}

/// load → remove bands → PCA → profile → Monte Carlo evaluation → artifacts.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary, CliError> {
    let (cube, labels) = load(config)?;
    log::info!(
        "cube {}x{}x{}, {} labeled pixels",
        cube.rows(),
        cube.cols(),
        cube.bands(),
        labels.labeled_indices().len()
    );
    let mut out = OutDir::create(&config.out)?;

    let (pca, pcs) = reduce_spectra(&cube, config.variance_fraction).stage("spectral_reduction")?;
    out.text("eigenspectrum.txt", &pca.spectrum_table())?;

    let features = FeatureConfig {
        variance_fraction: config.variance_fraction,
        window: config.window_c,
        selection: config.filter_selection,
        source: config.filter_source,
        mode: config.features,
    };
    let (filters, profile) = spatial_features(&pcs, &features).stage("filter_design")?;
    if !filters.is_empty() {
        let text: String = filters.iter().map(|f| f.to_text()).collect::<Vec<_>>().join("\n");
        out.text("filters.txt", &text)?;
    }
    if config.write_profile {
        let path = out.path("profile.bin");
        profile.write(&path).stage("energy_profile")?;
    }

    let evaluation = EvaluationConfig {
        proportion: config.proportion,
        min_per_class: config.min_per_class,
        runs: config.runs,
        base_seed: config.seed,
        classifier: ClassifierConfig {
            degree: config.degree,
            gamma: config.gamma,
            coef0: config.coef0,
            penalty_c: config.penalty_c,
            options: TrainOptions {
                tolerance: config.tolerance,
                cache_mb: config.cache_mb,
                max_iterations: None,
            },
        },
    };
    let outcome = evaluate(&profile, &labels, &evaluation).stage("evaluation")?;
    let seeds: Vec<u64> = outcome.outputs.iter().map(|a| a.seed).collect();

    let n_filters = filters.first().map_or(0, |f| f.len());
    let mut table = String::new();
    let _ = writeln!(table, "cube: {}x{}x{} (after band removal)", cube.rows(), cube.cols(), cube.bands());
    let _ = writeln!(table, "components: {} ({:.2} variance fraction)", pcs.k(), config.variance_fraction);
    match config.features {
        FeatureMode::Pca => {
            let _ = writeln!(table, "features: {} component values", profile.dim());
        }
        _ => {
            let _ = writeln!(
                table,
                "features: {} ({n_filters} filters of {1}x{1} per component)",
                profile.dim(),
                config.window_c
            );
        }
    }
    let _ = writeln!(
        table,
        "training: proportion {}, at least {} per class, seeds {}..{}",
        config.proportion,
        config.min_per_class,
        config.seed,
        config.seed + config.runs as u64 - 1
    );
    table.push('\n');
    table.push_str(&format_table(&outcome.summary, &[]));
    out.text("metrics.txt", &table)?;
    out.text("metrics.csv", &format_csv(&outcome.runs, &seeds, &outcome.summary))?;

    let last = outcome.outputs.last().expect("at least one run");
    let map = classify_scene(&profile, &labels, last).stage("svm_classifier")?;
    let palette = Palette::distinct(labels.class_count().max(map.class_count()));
    let path = out.path("classmap.ppm");
    write_class_map(&map, &palette, &path).stage("datacube")?;
    let path = out.path("model.bin");
    write_model(&last.model, &path).stage("svm_classifier")?;

    Ok(PipelineSummary {
        bands: cube.bands(),
        components: pcs.k(),
        filters: n_filters,
        feature_dim: profile.dim(),
        report: outcome.summary,
        artifacts: out.written,
    })
}
