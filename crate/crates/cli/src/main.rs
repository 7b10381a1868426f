use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eigenprofile::datacube::{write_cube, write_labels, CubeHeader, SampleType};
use eigenprofile::synthetic::{generate_scene, SceneSpec};
use eigenprofile::HyperCube;
use eigenprofile_cli::{run_pipeline, validate, CliError, RawConfig, EXIT_CONFIG, EXIT_IO};

/// Eigenfilter energy profiles and SVM classification for hyperspectral cubes.
#[derive(Parser)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Write a textured synthetic scene with ground truth and a matching config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cube: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Training proportion: a, b, c, d, a fraction, or a percentage.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// Odd patch window size c.
    #[arg(long)]
    window: Option<String>,
    /// Number of filters, or "auto" for the energy-fraction rule.
    #[arg(long)]
    num_filters: Option<String>,
    #[arg(long)]
    variance_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads; 1 runs everything sequentially, 0 uses all cores.
    #[arg(long)]
    threads: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[arg(long, default_value_t = 10)]
    bands: usize,
    #[arg(long, default_value_t = 4)]
    classes: u16,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 2.0)]
    texture: f64,
    #[arg(long, default_value_t = 0.7)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::parse(&std::fs::read_to_string(path).map_err(io_error(path))?)?,
        None => RawConfig::default(),
    };
    let path_flag = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
    let flags = [
        ("cube", path_flag(&args.cube), "--cube"),
        ("labels", path_flag(&args.labels), "--labels"),
        ("scheme", args.scheme, "--scheme"),
        ("runs", args.runs, "--runs"),
        ("window_c", args.window, "--window"),
        ("num_filters", args.num_filters, "--num-filters"),
        ("variance_fraction", args.variance_fraction, "--variance-fraction"),
        ("seed", args.seed, "--seed"),
        ("threads", args.threads, "--threads"),
        ("out", path_flag(&args.out), "--out"),
    ];
    for (key, value, flag) in flags {
        if let Some(v) = value {
            raw.set(key, v, flag);
        }
    }
    let config = validate(&raw)?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .expect("thread pool is configured once");
    }
    let summary = run_pipeline(&config)?;
    let r = &summary.report;
    println!(
        "OA {:.2} ± {:.2}  AA {:.2} ± {:.2}  K {:.4} ± {:.4}  ({} runs, {} components, {} filters, {} features)",
        r.oa, r.oa_std, r.aa, r.aa_std, r.kappa, r.kappa_std, r.run_count, summary.components, summary.filters, summary.feature_dim
    );
    for p in &summary.artifacts {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SceneSpec {
        rows: args.rows,
        cols: args.cols,
        bands: args.bands,
        classes: args.classes,
        separation: args.separation,
        texture: args.texture,
        period: 4.0,
        noise: args.noise,
        seed: args.seed,
    };
    let stage = |source| CliError::Stage { stage: "synthetic", source };
    let (cube, labels): (HyperCube, _) = generate_scene(&spec).map_err(stage)?;
    std::fs::create_dir_all(&args.out).map_err(io_error(&args.out))?;
    let header = CubeHeader::new(spec.rows, spec.cols, spec.bands, SampleType::F64);
    let cube_path = args.out.join("cube.raw");
    write_cube(&cube, &cube_path, &header).map_err(stage)?;
    header.write(args.out.join("cube.raw.hdr")).map_err(stage)?;
    let labels_path = args.out.join("labels.raw");
    write_labels(&labels, &labels_path).map_err(stage)?;
    let config = format!(
        "# synthetic {}x{}x{} scene, {} classes\ncube = {}\nlabels = {}\nwindow_c = 7\nscheme = b\nruns = 5\ncoef0 = 1\nout = {}\n",
        spec.rows,
        spec.cols,
        spec.bands,
        spec.classes,
        cube_path.display(),
        labels_path.display(),
        args.out.join("results").display()
    );
    let config_path = args.out.join("config.txt");
    std::fs::write(&config_path, config).map_err(io_error(&config_path))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Some(Command::Synth(args)) => synth(args),
        None => run(cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code >= EXIT_IO);
            ExitCode::from(code)
        }
    }
}
