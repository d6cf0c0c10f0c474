use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use agbench_core::benchgen::{
    sample_human_subset, sample_human_subset_excluding, verify_benchmark, verify_files, write_benchmark, ConditionGrid,
    DatasetKind, GenOptions, OutputOptions,
};
use agbench_core::dataset_io::{
    load_class_map, load_mnist, load_silhouettes, write_idx_images, write_idx_labels, write_png_file, LabeledDataset,
    Manifest, MnistSplit,
};
use agbench_core::probe::{
    average_activation_map, grayscale_input, montage, per_filter_maps, read_weight_bundle, InputNorm, Stage, StemOutputs,
};
use agbench_core::scoring::{
    manifest_truth, outliers, score_labels, score_manifest, summarize, Condition, PredictionSet, ScoreReport,
    DEFAULT_BIN_WIDTH, OUTLIER_THRESHOLD,
};
use agbench_core::study::{SessionManager, StimulusStore};
use agbench_core::synth::{synthetic_digits, synthetic_silhouettes, write_class_dirs};
use agbench_core::{Direction, Kernel, Polarity};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "agbench", version, about = "Abutting-grating illusory-contour benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate abutting-grating stimuli from a source dataset.
    Gen(GenArgs),
    /// Check a generated benchmark against its manifest.
    Verify(VerifyArgs),
    /// Score a prediction CSV against a generated benchmark.
    Score(ScoreArgs),
    /// Histogram score files per condition and list outlier models.
    Summarize(SummarizeArgs),
    /// Run the human-study HTTP server over a stimulus store.
    Serve(ServeArgs),
    /// Export stem activation maps for one stimulus.
    Probe(ProbeArgs),
    /// Write synthetic stand-in source data.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct SourceArgs {
    /// mnist, mnist-hires or silhouettes.
    #[arg(long, value_parser = parse_with::<DatasetKind>)]
    dataset: DatasetKind,
    /// MNIST directory or image file; silhouette category directory.
    #[arg(long)]
    input: PathBuf,
    /// MNIST label file when --input names the image file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "test", value_parser = parse_with::<MnistSplit>)]
    split: MnistSplit,
}

#[derive(clap::Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Comma-separated directions (h, v, ul, ur); defaults to the dataset grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Direction>)]
    directions: Vec<Direction>,
    /// Comma-separated even intervals; defaults to the dataset grid.
    #[arg(long, value_delimiter = ',')]
    intervals: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f32,
    #[arg(long, default_value_t = 0)]
    figure_phase: usize,
    /// Treat dark pixels as figure (default for silhouettes).
    #[arg(long)]
    figure_is_dark: bool,
    /// Draw black lines on white instead of white on black.
    #[arg(long)]
    invert: bool,
    #[arg(long, default_value = "bilinear", value_parser = parse_with::<Kernel>)]
    kernel: Kernel,
    /// Draw ten items per class and use the human-study grid.
    #[arg(long)]
    human_subset: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Make the subset disjoint from the draw with this seed.
    #[arg(long, requires = "human_subset")]
    disjoint_from_seed: Option<u64>,
    /// Also write IDX files per condition.
    #[arg(long)]
    idx: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Benchmark directory holding manifest.json.
    #[arg(long)]
    dir: PathBuf,
    /// Source data to regenerate from; without it only file hashes are checked.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ScoreArgs {
    /// Benchmark root (manifest.json) or one condition directory inside it.
    #[arg(long)]
    truth: PathBuf,
    /// CSV with header `stimulus_id,fine_class`.
    #[arg(long)]
    pred: PathBuf,
    /// CSV with header `fine_index,category`; maps fine predictions to 16 categories.
    #[arg(long)]
    classmap: Option<PathBuf>,
    /// Defaults to the prediction file stem.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SummarizeArgs {
    /// Glob of score files, may be repeated.
    #[arg(long, required = true)]
    results: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin: f64,
    #[arg(long, default_value_t = OUTLIER_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ServeArgs {
    /// Directory searched for benchmark manifests.
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Session logs; defaults to `<store>/sessions`.
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// Static front-end directory.
    #[arg(long)]
    ui: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ProbeArgs {
    /// Weight bundle manifest (weights.json).
    #[arg(long)]
    weights: PathBuf,
    /// Grayscale stimulus PNG.
    #[arg(long)]
    stimulus: PathBuf,
    /// Stages to export; defaults to all.
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Stage>)]
    stage: Vec<Stage>,
    #[arg(long, default_value = "imagenet", value_parser = parse_with::<InputNorm>)]
    norm: InputNorm,
    /// Montage width in filters.
    #[arg(long, default_value_t = 8)]
    columns: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Digits,
    Silhouettes,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Digits in total, or silhouettes per category.
    #[arg(long)]
    count: usize,
    /// Silhouette edge length.
    #[arg(long, default_value_t = 224)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "test", value_parser = parse_with::<MnistSplit>)]
    split: MnistSplit,
    #[arg(long)]
    out: PathBuf,
}

fn parse_with<T: std::str::FromStr<Err = agbench_core::Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: agbench_core::Error| e.to_string())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Score(a) => score(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Serve(a) => serve(a),
        Command::Probe(a) => probe(a),
        Command::Synth(a) => synth(a),
    }
}

fn load_source(kind: DatasetKind, input: &Path, labels: Option<&Path>, split: MnistSplit) -> Result<LabeledDataset> {
    let ds = match kind {
        DatasetKind::Silhouettes => load_silhouettes(input),
        _ => load_mnist(input, labels, split),
    };
    ds.with_context(|| format!("loading {kind} from {}", input.display()))
}

fn gen(a: GenArgs) -> Result<()> {
    let kind = a.source.dataset;
    let source = load_source(kind, &a.source.input, a.source.labels.as_deref(), a.source.split)?;
    let mut grid = if a.human_subset {
        ConditionGrid::human_study(kind)
    } else {
        ConditionGrid::default_for(kind)
    };
    if !a.directions.is_empty() {
        grid.directions = a.directions;
    }
    if !a.intervals.is_empty() {
        grid.intervals = a.intervals;
    }
    let options = GenOptions {
        threshold: a.threshold,
        figure_phase: a.figure_phase,
        polarity: if a.invert { Polarity::LinesBlackOnWhite } else { Polarity::LinesWhiteOnBlack },
        figure_is_dark: a.figure_is_dark.then_some(true),
        kernel: a.kernel,
    };
    let output = OutputOptions {
        idx: a.idx,
        ..OutputOptions::default()
    };
    let manifest = if a.human_subset {
        let subset = match a.disjoint_from_seed {
            Some(other) => sample_human_subset_excluding(&source, a.seed, other)?,
            None => sample_human_subset(&source, a.seed)?,
        };
        write_benchmark(&subset.dataset, Some(subset.record()), &grid, &options, &a.out, &output)?
    } else {
        write_benchmark(&source, None, &grid, &options, &a.out, &output)?
    };
    println!(
        "wrote {} stimuli in {} sets to {}",
        manifest.total_stimuli,
        manifest.set_count(),
        a.out.display()
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let manifest = Manifest::read(&a.dir.join("manifest.json"))?;
    let mut bad = verify_files(&a.dir, &manifest)?;
    if let Some(input) = &a.input {
        let kind: DatasetKind = manifest.dataset.parse()?;
        let split = manifest.split.as_deref().unwrap_or("test").parse()?;
        let source = load_source(kind, input, a.labels.as_deref(), split)?;
        bad.extend(verify_benchmark(&manifest, &source)?);
    }
    bad.sort();
    bad.dedup();
    if !bad.is_empty() {
        for b in &bad {
            eprintln!("mismatch: {b}");
        }
        bail!("{} of {} stimuli do not match the manifest", bad.len(), manifest.total_stimuli);
    }
    println!("ok: {} stimuli verified", manifest.total_stimuli);
    Ok(())
}

/// Finds the manifest governing `dir`: its own, or the nearest ancestor's
/// restricted to the set at `dir`.
fn resolve_truth(dir: &Path) -> Result<(Manifest, Option<String>)> {
    let dir = dir.canonicalize().with_context(|| format!("truth directory {}", dir.display()))?;
    for ancestor in dir.ancestors() {
        let path = ancestor.join("manifest.json");
        if path.is_file() {
            let manifest = Manifest::read(&path)?;
            if ancestor == dir {
                return Ok((manifest, None));
            }
            let rel = dir.strip_prefix(ancestor)?.to_string_lossy().replace('\\', "/");
            if !manifest.sets.iter().any(|s| s.path == rel) {
                bail!("{} is not a condition set of {}", rel, path.display());
            }
            return Ok((manifest, Some(rel)));
        }
    }
    bail!("no manifest.json at or above {}", dir.display())
}

fn score(a: ScoreArgs) -> Result<()> {
    let model = match a.model {
        Some(m) => m,
        None => a.pred.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let file = std::fs::File::open(&a.pred).with_context(|| format!("opening {}", a.pred.display()))?;
    let predictions = PredictionSet::from_csv(model, file)?;
    let map = match &a.classmap {
        Some(p) => Some(load_class_map(std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)?),
        None => None,
    };
    let (manifest, only) = resolve_truth(&a.truth)?;
    let results = match only {
        Some(rel) => {
            let set = manifest.sets.iter().find(|s| s.path == rel).expect("resolved set exists");
            vec![score_labels(&predictions, &manifest_truth(set), map.as_ref(), Condition::of_set(&manifest, set))?]
        }
        None => score_manifest(&predictions, &manifest, map.as_ref())?,
    };
    for r in &results {
        println!(
            "{} {}_{} {:.4} ({}/{})",
            r.condition.dataset, r.condition.direction, r.condition.interval, r.accuracy, r.correct, r.n
        );
    }
    let report = ScoreReport::new(results, a.classmap.map(|p| p.display().to_string()));
    write_json(&a.out, &report)
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let mut files = Vec::new();
    for pattern in &a.results {
        for entry in glob::glob(pattern).with_context(|| format!("bad glob `{pattern}`"))? {
            files.push(entry?);
        }
    }
    files.sort();
    files.dedup();
    let mut results = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let report: ScoreReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
        results.extend(report.results);
    }
    let mut summary = summarize(&results, a.bin)?;
    summary.outlier_threshold = a.threshold;
    summary.outliers = outliers(&results, a.threshold)?;
    println!(
        "{} results from {} files, {} conditions, {} outlier models",
        results.len(),
        files.len(),
        summary.histograms.len(),
        summary.outliers.len()
    );
    write_json(&a.out, &summary)
}

fn serve(a: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let store = StimulusStore::open(&a.store)?;
    let sessions = a.sessions.unwrap_or_else(|| a.store.join("sessions"));
    let manager = SessionManager::open(store, &sessions)?;
    let addr = SocketAddr::new(a.host, a.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(agbench_server::serve(Arc::new(manager), addr, a.ui))?;
    Ok(())
}

#[derive(Serialize)]
struct ProbeSidecar {
    stimulus: String,
    source_model: String,
    norm: InputNorm,
    bn_eps: f32,
    stages: Vec<StageSidecar>,
}

#[derive(Serialize)]
struct StageSidecar {
    stage: Stage,
    shape: Vec<usize>,
    average_png: String,
    average: agbench_core::probe::MapStats,
    filters_png: String,
    filters: agbench_core::probe::MapStats,
}

fn probe(a: ProbeArgs) -> Result<()> {
    let bundle = read_weight_bundle(&a.weights)?;
    let image = agbench_core::dataset_io::read_png_file(&a.stimulus)?;
    let input = grayscale_input(&image, bundle.in_channels(), a.norm)?;
    let outputs = StemOutputs::run(&bundle, &input)?;
    let stages = if a.stage.is_empty() { Stage::ALL.to_vec() } else { a.stage };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut sidecar = ProbeSidecar {
        stimulus: a.stimulus.display().to_string(),
        source_model: bundle.source_model.clone(),
        norm: a.norm,
        bn_eps: outputs.bn_eps,
        stages: Vec::new(),
    };
    for stage in stages {
        let t = outputs.stage(stage);
        let (avg, avg_stats) = average_activation_map(t)?;
        let (maps, filter_stats) = per_filter_maps(t)?;
        let average_png = format!("{stage}_average.png");
        let filters_png = format!("{stage}_filters.png");
        write_png_file(&a.out.join(&average_png), &avg)?;
        write_png_file(&a.out.join(&filters_png), &montage(&maps, a.columns)?)?;
        sidecar.stages.push(StageSidecar {
            stage,
            shape: t.shape().to_vec(),
            average_png,
            average: avg_stats,
            filters_png,
            filters: filter_stats,
        });
    }
    write_json(&a.out.join("probe.json"), &sidecar)?;
    println!("wrote {} stage maps to {}", sidecar.stages.len(), a.out.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    match a.kind {
        SynthKind::Digits => {
            let ds = synthetic_digits(a.count, a.seed);
            let prefix = match a.split {
                MnistSplit::Train => "train",
                MnistSplit::Test => "t10k",
            };
            std::fs::write(a.out.join(format!("{prefix}-images-idx3-ubyte")), write_idx_images(&ds))?;
            std::fs::write(a.out.join(format!("{prefix}-labels-idx1-ubyte")), write_idx_labels(&ds)?)?;
            println!("wrote {} digits to {}", ds.len(), a.out.display());
        }
        SynthKind::Silhouettes => {
            let ds = synthetic_silhouettes(a.count, a.size, a.seed);
            write_class_dirs(&ds, &a.out)?;
            println!("wrote {} silhouettes to {}", ds.len(), a.out.display());
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}
