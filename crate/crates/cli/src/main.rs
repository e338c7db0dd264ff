use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use drforest::eval::bench::{self, LsviConfig, PredictiveConfig};
use drforest::eval::{self, Noise, Simulation, SimulationSpec};
use drforest::io::csv as dcsv;
use drforest::io::{self as dio, Model};
use drforest::{Dataset, Forest, ForestParams, MTry, SplitMode, TreeParams};
use log::{info, warn};
use rand::SeedableRng;

#[derive(Parser, Debug)]
#[command(name = "drforest", version, about = "Dimension reduction forests")]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on this.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a forest to a CSV file and save the model.
    Fit(FitArgs),
    /// Predict the response for every row of a CSV file.
    Predict(PredictArgs),
    /// Forest kernel weights between query points and the training rows.
    Kernel(TrainQueryArgs),
    /// Local subspace variable importance at query points.
    Lsvi(TrainQueryArgs),
    /// Out-of-bag permutation importance of each feature.
    Importance(ImportanceArgs),
    /// Write a simulated dataset.
    Simulate(SimulateArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    target: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    trees: u32,
    /// Screened features per node: an integer, all, sqrt or third.
    #[arg(long, default_value = "all")]
    mtry: MTry,
    /// Nodes with fewer samples become leaves.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    min_leaf: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
    slices: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center and scale every covariate before fitting; the model applies the same map.
    #[arg(long)]
    standardize: bool,
    /// Disable SIR/SAVE splits (a plain bagged CART forest).
    #[arg(long)]
    axis_only: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainQueryArgs {
    #[arg(long)]
    model: PathBuf,
    /// The training CSV the model was fitted on.
    #[arg(long)]
    train: PathBuf,
    /// Query points; must contain every feature column.
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    repeats: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    name: Simulation,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    /// Number of covariates (defaults to the simulation's own).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, conflicts_with = "snr")]
    sigma: Option<f64>,
    /// Var(E[Y|X]) / sigma^2.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Predictive,
    Lsvi,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Full-scale protocol: 50 replicates, 500 trees, the complete grid.
    #[arg(long)]
    full: bool,
    /// Restrict to these simulations (comma separated).
    #[arg(long, value_delimiter = ',')]
    sims: Vec<Simulation>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    replicates: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    trees: Option<u32>,
    /// Signal-to-noise ratio for the lsvi suite.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-replicate records.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-method summary table (also printed to stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Result<Model> {
    dio::load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn to_model_space(model: &Model, data: &Dataset) -> Dataset {
    match &model.standardization {
        Some(s) => s.apply(data),
        None => data.clone(),
    }
}

fn read_queries(model: &Model, path: &Path) -> Result<Dataset> {
    let q = dcsv::read_points(path, &model.feature_names).with_context(|| format!("reading {}", path.display()))?;
    Ok(to_model_space(model, &q))
}

/// Training data in the coordinates the forest was fitted in, checked against the
/// model's fingerprint.
fn read_training(model: &Model, path: &Path) -> Result<Dataset> {
    let table =
        dcsv::read_dataset(path, &model.target, false).with_context(|| format!("reading {}", path.display()))?;
    if table.feature_names != model.feature_names {
        bail!("{}: feature columns differ from the model's", path.display());
    }
    let data = to_model_space(model, &table.data);
    if &data.fingerprint() != model.forest.fingerprint() {
        bail!("{} is not the training set this model was fitted on", path.display());
    }
    Ok(data)
}

fn fit(a: FitArgs) -> Result<()> {
    let table = dcsv::read_dataset(&a.data, &a.target, a.standardize)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let p = table.data.p();
    let params = ForestParams {
        tree: TreeParams {
            n_min: a.min_leaf as usize,
            m_try: a.mtry.resolve(p),
            n_slices: a.slices as usize,
            mode: if a.axis_only { SplitMode::AxisOnly } else { SplitMode::Sdr },
        },
        n_trees: a.trees as usize,
        seed: a.seed,
    };
    info!(
        "fit: data={} target={} n={} p={} trees={} mtry={}({}) min_leaf={} slices={} seed={} standardize={} mode={:?}",
        a.data.display(),
        a.target,
        table.data.n(),
        p,
        params.n_trees,
        a.mtry,
        params.tree.m_try,
        params.tree.n_min,
        params.tree.n_slices,
        params.seed,
        a.standardize,
        params.tree.mode
    );
    let forest = Forest::fit(&table.data, &params)?;
    let model = Model {
        forest,
        feature_names: table.feature_names,
        target: table.target,
        standardization: table.standardization,
    };
    dio::save_model(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    info!("wrote {}", a.out.display());
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    info!("predict: model={} data={}", a.model.display(), a.data.display());
    let model = load(&a.model)?;
    let q = read_queries(&model, &a.data)?;
    let pred = model.forest.predict_dataset(&q)?;
    let rows: Vec<[f64; 1]> = pred.iter().map(|&v| [v]).collect();
    dcsv::write_matrix(output(a.out.as_deref())?, &["prediction".into()], rows.iter().map(|r| &r[..]))?;
    Ok(())
}

fn kernel(a: TrainQueryArgs) -> Result<()> {
    info!(
        "kernel: model={} train={} query={}",
        a.model.display(),
        a.train.display(),
        a.query.display()
    );
    let model = load(&a.model)?;
    let train = read_training(&model, &a.train)?;
    let q = read_queries(&model, &a.query)?;
    let leaves = model.forest.leaf_matrix(&train)?;
    let query_leaves = model.forest.leaf_matrix(&q)?;
    let rows: Vec<Vec<f64>> = query_leaves
        .iter()
        .map(|ql| drforest::forest::kernel_from_leaves(ql, &leaves))
        .collect();
    let header: Vec<String> = (1..=train.n()).map(|i| format!("w{i}")).collect();
    dcsv::write_matrix(output(a.out.as_deref())?, &header, rows.iter().map(Vec::as_slice))?;
    Ok(())
}

fn lsvi(a: TrainQueryArgs) -> Result<()> {
    info!(
        "lsvi: model={} train={} query={}",
        a.model.display(),
        a.train.display(),
        a.query.display()
    );
    let model = load(&a.model)?;
    let train = read_training(&model, &a.train)?;
    let q = read_queries(&model, &a.query)?;
    let results = drforest::compute_lsvi_batch(&model.forest, &train, &q)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    let mut header: Vec<String> = model.feature_names.iter().map(|f| format!("d_{f}")).collect();
    header.extend(["min_eigenvalue", "weight_mass", "ambiguous", "status"].map(String::from));
    w.write_record(&header)?;
    for (i, r) in results.into_iter().enumerate() {
        let mut rec: Vec<String>;
        match r {
            Ok(li) => {
                rec = li.direction.iter().map(f64::to_string).collect();
                rec.push(li.min_eigenvalue.to_string());
                rec.push(li.weight_mass.to_string());
                rec.push(u8::from(li.ambiguous).to_string());
                rec.push("ok".into());
            }
            Err(e) => {
                warn!("query row {}: {e}", i + 1);
                rec = vec!["NaN".into(); model.feature_names.len() + 2];
                rec.push("0".into());
                rec.push("degenerate".into());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn importance(a: ImportanceArgs) -> Result<()> {
    info!(
        "importance: model={} train={} repeats={} seed={}",
        a.model.display(),
        a.train.display(),
        a.repeats,
        a.seed
    );
    let model = load(&a.model)?;
    let train = read_training(&model, &a.train)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let imp = drforest::permutation_importance(&model.forest, &train, &mut rng, a.repeats as usize)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["feature", "importance"])?;
    for (f, v) in model.feature_names.iter().zip(&imp) {
        w.write_record([f.clone(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = SimulationSpec::new(a.name, a.n as usize, a.seed);
    if let Some(p) = a.p {
        spec.p = p;
    }
    if let Some(s) = a.sigma {
        spec.noise = Noise::Sigma(s);
    }
    if let Some(s) = a.snr {
        spec.noise = Noise::Snr(s);
    }
    info!(
        "simulate: name={} n={} p={} noise={:?} seed={}",
        spec.sim, spec.n, spec.p, spec.noise, spec.seed
    );
    let sim = eval::generate(&spec)?;
    dcsv::write_dataset(output(a.out.as_deref())?, &sim.data)?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    match a.suite {
        Suite::Predictive => {
            let mut cfg = if a.full { PredictiveConfig::full() } else { PredictiveConfig::desk() };
            if !a.sims.is_empty() {
                cfg.suites = a.sims.clone();
            }
            if let Some(r) = a.replicates {
                cfg.replicates = r as usize;
            }
            if let Some(t) = a.trees {
                cfg.n_trees = t as usize;
            }
            cfg.seed = a.seed;
            info!("bench: {cfg:?}");
            let res = bench::run_predictive_bench(&cfg)?;
            if let Some(p) = &a.out {
                dcsv::write_records(output(Some(p))?, &res.records)?;
            }
            if let Some(p) = &a.summary {
                dcsv::write_records(output(Some(p))?, &res.summaries)?;
            }
            let mut out = io::stdout().lock();
            writeln!(out, "{:<10} {:<8} {:>12} {:>10} {:>16}", "suite", "method", "mse", "(sd)", "improvement %")?;
            for s in &res.summaries {
                writeln!(
                    out,
                    "{:<10} {:<8} {:>12.4} {:>10.4} {:>9.2} ({:.2})",
                    s.suite,
                    s.method,
                    s.mse_mean,
                    s.mse_sd,
                    100.0 * s.improvement_mean,
                    100.0 * s.improvement_sd
                )?;
            }
        }
        Suite::Lsvi => {
            let mut cfg = if a.full { LsviConfig::full() } else { LsviConfig::desk() };
            if !a.sims.is_empty() {
                cfg.suites = a.sims.clone();
            }
            if let Some(r) = a.replicates {
                cfg.replicates = r as usize;
            }
            if let Some(t) = a.trees {
                cfg.n_trees = t as usize;
            }
            if let Some(s) = a.snr {
                cfg.snr = s;
            }
            cfg.seed = a.seed;
            info!("bench: {cfg:?}");
            let res = bench::run_lsvi_bench(&cfg)?;
            if let Some(p) = &a.out {
                dcsv::write_records(output(Some(p))?, &res.records)?;
            }
            if let Some(p) = &a.summary {
                dcsv::write_records(output(Some(p))?, &res.summaries)?;
            }
            let mut out = io::stdout().lock();
            writeln!(out, "{:<8} {:<9} {:>8} {:>8}", "suite", "method", "median", "mean")?;
            for s in &res.summaries {
                writeln!(out, "{:<8} {:<9} {:>8.3} {:>8.3}", s.suite, s.method, s.median, s.mean)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w as usize)
            .build_global()
            .context("configuring worker threads")?;
    }
    info!("workers: {}", rayon::current_num_threads());
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Kernel(a) => kernel(a),
        Command::Lsvi(a) => lsvi(a),
        Command::Importance(a) => importance(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // Usage errors exit with status 2 from inside `parse`.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
