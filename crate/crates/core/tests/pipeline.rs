use eigenprofile::evaluation::MetricsReport;
use eigenprofile::experiment::{
    classify_scene, evaluate, extract_features, run_once, ClassifierConfig, EvaluationConfig, FeatureConfig,
};
use eigenprofile::svm::{read_model, write_model};
use eigenprofile::synthetic::{generate_scene, SceneSpec};
use eigenprofile::{EnergyProfile, EnergyProfile32, HyperCube, HyperCube32};

fn spec() -> SceneSpec {
    SceneSpec {
        rows: 32,
        cols: 32,
        bands: 8,
        classes: 3,
        separation: 2.0,
        texture: 2.0,
        noise: 0.7,
        ..SceneSpec::default()
    }
}

fn features() -> FeatureConfig {
    FeatureConfig { window: 5, ..FeatureConfig::default() }
}

fn evaluation(runs: usize) -> EvaluationConfig {
    EvaluationConfig {
        proportion: 0.10,
        min_per_class: 5,
        runs,
        base_seed: 7,
        classifier: ClassifierConfig { coef0: 1.0, ..ClassifierConfig::default() },
    }
}

fn scene() -> (EnergyProfile, eigenprofile::datacube::LabelMap) {
    let (cube, labels): (HyperCube, _) = generate_scene(&spec()).unwrap();
    (extract_features(&cube, &features()).unwrap().profile, labels)
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn summary_is_the_mean_of_independent_runs() {
    let (profile, labels) = scene();
    let config = evaluation(5);
    let outcome = evaluate(&profile, &labels, &config).unwrap();
    let singles: Vec<MetricsReport> = (0..5).map(|i| run_once(&profile, &labels, &config, 7 + i).unwrap().0).collect();
    assert_eq!(outcome.runs, singles);
    let oa: Vec<f64> = singles.iter().map(|r| r.oa).collect();
    let (mean, std) = mean_and_std(&oa);
    assert!((outcome.summary.oa - mean).abs() < 1e-12);
    assert!((outcome.summary.oa_std - std).abs() < 1e-12);
    assert_eq!(outcome.summary.run_count, 5);
    assert!(outcome.summary.oa > 90.0, "OA {}", outcome.summary.oa);
}

#[test]
fn thread_count_does_not_change_results() {
    let (cube, labels): (HyperCube, _) = generate_scene(&spec()).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let profile = extract_features(&cube, &features()).unwrap().profile;
            let outcome = evaluate(&profile, &labels, &evaluation(3)).unwrap();
            (profile.values().to_vec(), outcome.runs)
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn single_precision_pipeline_matches_double() {
    let (cube, labels): (HyperCube32, _) = generate_scene(&spec()).unwrap();
    let profile: EnergyProfile32 = extract_features(&cube, &features()).unwrap().profile;
    let single = evaluate(&profile, &labels, &evaluation(3)).unwrap().summary;
    let (profile64, _) = scene();
    let double = evaluate(&profile64, &labels, &evaluation(3)).unwrap().summary;
    assert!(single.oa > 90.0, "f32 OA {}", single.oa);
    assert!((single.oa - double.oa).abs() < 2.0, "f32 {} vs f64 {}", single.oa, double.oa);
}

#[test]
fn reloaded_model_reproduces_the_class_map() {
    let (profile, labels) = scene();
    let (_, artifacts) = run_once(&profile, &labels, &evaluation(1), 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    write_model(&artifacts.model, &path).unwrap();
    let mut reloaded = artifacts.clone();
    reloaded.model = read_model(&path).unwrap();
    assert_eq!(
        classify_scene(&profile, &labels, &artifacts).unwrap(),
        classify_scene(&profile, &labels, &reloaded).unwrap()
    );
}
