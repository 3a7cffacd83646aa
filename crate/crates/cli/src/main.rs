//! `lacboost` command-line tool: train, evaluate and diagnose boosted
//! classifiers and multi-exit cascades, benchmark the simplex QP solvers and
//! generate synthetic datasets. All tabular output is CSV.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::{json, Map, Value};

use lacboost::bench::{bench_qp, bench_solvers};
use lacboost::cascade::{
    evaluate_cascade, even_schedule, normality_diagnostic, theta_grid_search, train_cascade,
    train_strong, CascadeEvaluation, MultiExitCascade, DEFAULT_THETA_GRID, NORMALITY_MIN_POINTS,
};
use lacboost::data::{Dataset, Label};
use lacboost::datasets::{
    gen_cascade_task, gen_gaussian, gen_image_windows, gen_toy_2d, load_dataset, metadata_path,
    save_dataset, write_metadata, GaussianSpec, GeneratorMetadata,
};
use lacboost::model::{ModelBody, ModelFile};
use lacboost::simplex::EgConfig;

use crate::config::{resolve, set, TrainSettings};

#[derive(Parser, Debug)]
#[command(
    name = "lacboost",
    version,
    about = "Asymmetric totally-corrective boosting and cascade training"
)]
struct Cli {
    /// Cap on worker threads for stump search and evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)] // parsed once per process
enum Command {
    /// Train a strong classifier or a multi-exit cascade.
    Train(TrainArgs),
    /// Evaluate a model: per-exit node report and ROC.
    Eval(EvalArgs),
    /// Time the EG solver against the reference solver on a random QP.
    BenchSolver(BenchArgs),
    /// Normal probability plot of positive margins at every exit.
    Diagnose(DiagnoseArgs),
    /// Write a synthetic dataset (CSV, or a PGM directory for images).
    GenData(GenArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// One of: fisherboost, lacboost, adaboost, asymboost, ada+lac, ada+lda, asym+lac, asym+lda.
    #[arg(long)]
    method: Option<String>,
    /// Training data (CSV file or PGM directory).
    #[arg(long)]
    data: PathBuf,
    /// Model output path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Column-generation trace CSV (default: <out>.trace.csv).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Node report CSV on the training data (default: <out>.nodes.csv).
    #[arg(long)]
    report: Option<PathBuf>,
    /// TOML configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train a cascade: `exits=K` (K evenly spaced exits ending at n_max),
    /// `schedule=10,20,40` (explicit cumulative counts), or `default`.
    #[arg(long)]
    cascade: Option<String>,
    /// Negative pool for cascade bootstrapping (default: the negatives in --data).
    #[arg(long)]
    neg_pool: Option<PathBuf>,
    /// Pick θ from a fixed grid by cascade training accuracy.
    #[arg(long)]
    theta_search: bool,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Use the exact within-class scatter matrix instead of (1/m) I.
    #[arg(long)]
    q_exact: bool,
    #[arg(long)]
    feature_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    negatives_per_exit: Option<usize>,
    #[arg(long)]
    min_weak_for_lac: Option<usize>,
    #[arg(long)]
    k_asym: Option<f64>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    d_target: Option<f64>,
    #[arg(long)]
    f_target: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Node report CSV (exit_index, prefix_length, d_t, f_t, cumulative rates).
    #[arg(long)]
    report: Option<PathBuf>,
    /// ROC CSV over the final exit's score threshold.
    #[arg(long)]
    roc: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Number of QP variables (weak classifiers).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of examples behind the QP.
    #[arg(long, default_value_t = 500)]
    m: usize,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the timing table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data whose positives are diagnosed; negatives are ignored.
    #[arg(long)]
    data: PathBuf,
    /// Normality CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    /// Two 2-D Gaussians.
    Toy,
    /// Asymmetric Gaussians in `dim` dimensions.
    Gaussian,
    /// Gaussian positives inside a uniform box of negatives.
    Cascade,
    /// Synthetic image windows (written as a PGM directory).
    Images,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenClass {
    Both,
    Positive,
    Negative,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Output CSV file, or directory for images.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    m1: usize,
    #[arg(long, default_value_t = 2000)]
    m2: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only one class (e.g. to build a negative pool).
    #[arg(long, value_enum, default_value_t = GenClass::Both)]
    class: GenClass,
    #[arg(long, default_value_t = 0.5)]
    positive_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    positive_sd: f64,
    #[arg(long, default_value_t = 2.0)]
    negative_sd: f64,
    /// Half-width of the negatives' box for `cascade`.
    #[arg(long, default_value_t = 6.0)]
    half_width: f64,
    #[arg(long, default_value_t = 24)]
    width: usize,
    #[arg(long, default_value_t = 24)]
    height: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::BenchSolver(a) => cmd_bench(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::GenData(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<Dataset> {
    load_dataset(path, None).with_context(|| format!("loading dataset {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// `model.json` → `model.json.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Provenance sidecar (`<file>.meta.json`) next to a CSV artifact.
fn write_provenance(artifact: &Path, command: &str, details: Value) -> Result<()> {
    let path = metadata_path(artifact);
    let doc = json!({ "command": command, "artifact": artifact.display().to_string(), "details": details });
    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn train_flags(a: &TrainArgs) -> Result<Map<String, Value>> {
    let mut f = Map::new();
    if let Some(m) = &a.method {
        set(&mut f, &["method"], json!(m));
    }
    let boost: [(&str, Option<Value>); 6] = [
        ("theta", a.theta.map(|v| json!(v))),
        ("epsilon", a.epsilon.map(|v| json!(v))),
        ("n_max", a.n_max.map(|v| json!(v))),
        ("delta", a.delta.map(|v| json!(v))),
        ("feature_fraction", a.feature_fraction.map(|v| json!(v))),
        ("seed", a.seed.map(|v| json!(v))),
    ];
    for (k, v) in boost {
        if let Some(v) = v {
            set(&mut f, &["boost", k], v);
        }
    }
    if a.q_exact {
        set(&mut f, &["boost", "q_exact"], json!(true));
    }
    let top: [(&str, Option<Value>); 4] = [
        ("negatives_per_exit", a.negatives_per_exit.map(|v| json!(v))),
        ("min_weak_for_lac", a.min_weak_for_lac.map(|v| json!(v))),
        ("k_asym", a.k_asym.map(|v| json!(v))),
        ("shrinkage", a.shrinkage.map(|v| json!(v))),
    ];
    for (k, v) in top {
        if let Some(v) = v {
            set(&mut f, &[k], v);
        }
    }
    if let Some(v) = a.d_target {
        set(&mut f, &["goals", "d_target"], json!(v));
    }
    if let Some(v) = a.f_target {
        set(&mut f, &["goals", "f_target"], json!(v));
    }
    if a.cascade.is_some() {
        set(&mut f, &["cascade"], json!(true));
    }
    Ok(f)
}

/// Apply a `--cascade` argument to the resolved settings.
fn apply_cascade_spec(spec: &str, s: &mut TrainSettings) -> Result<()> {
    let spec = spec.trim();
    let schedule = if spec == "default" || spec.is_empty() {
        None
    } else if let Some(k) = spec.strip_prefix("exits=") {
        let k: usize = k
            .trim()
            .parse()
            .with_context(|| format!("bad exit count in --cascade {spec:?}"))?;
        Some(even_schedule(k, s.config.boost.n_max)?)
    } else if let Some(list) = spec.strip_prefix("schedule=") {
        Some(
            list.split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("bad schedule in --cascade {spec:?}"))?,
        )
    } else {
        bail!("--cascade expects exits=K, schedule=a,b,c or default; got {spec:?}");
    };
    if let Some(schedule) = schedule {
        s.echo["exit_schedule"] = json!(schedule);
        s.config.exit_schedule = schedule;
    }
    s.config.validate()?;
    Ok(())
}

fn split_classes(data: &Dataset) -> (Dataset, Dataset) {
    (
        data.select(&data.indices_with(Label::Positive)),
        data.select(&data.indices_with(Label::Negative)),
    )
}

fn print_evaluation(eval: &CascadeEvaluation) {
    println!("examples,{}", eval.positives + eval.negatives);
    println!("accuracy,{}", eval.accuracy());
    println!("F_dr,{}", eval.f_dr);
    println!("F_fp,{}", eval.f_fp);
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut settings = resolve(a.config.as_deref(), train_flags(&a)?)?;
    if let Some(spec) = &a.cascade {
        apply_cascade_spec(spec, &mut settings)?;
    }
    let data = load(&a.data)?;
    let method = settings.method;
    let trace_path = a
        .trace
        .clone()
        .unwrap_or_else(|| sibling(&a.out, ".trace.csv"));
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| sibling(&a.out, ".nodes.csv"));

    let (model, report_data) = if settings.cascade {
        let (positives, data_negatives) = split_classes(&data);
        let pool = match &a.neg_pool {
            Some(p) => {
                let pool = load(p)?;
                let (pos_in_pool, negs) = split_classes(&pool);
                if !pos_in_pool.is_empty() {
                    warn!(
                        "ignoring {} positive examples in the negative pool",
                        pos_in_pool.len()
                    );
                }
                negs
            }
            None => data_negatives,
        };
        if a.theta_search {
            let search = theta_grid_search(
                &positives,
                &pool,
                method,
                &settings.config,
                &DEFAULT_THETA_GRID,
            )?;
            for (theta, acc) in &search.results {
                info!("theta {theta}: training accuracy {acc}");
            }
            println!("theta,{}", search.best_theta);
            settings.config.boost.theta = search.best_theta;
            settings.echo["boost"]["theta"] = json!(search.best_theta);
            settings.echo["theta_search"] = json!(search.results);
        }
        let trained = train_cascade(&positives, &pool, method, &settings.config)?;
        if trained.truncated {
            warn!("cascade training stopped before the end of the exit schedule");
        }
        let all = positives.concat(&pool)?;
        let model = ModelFile::new(
            method,
            settings.echo.clone(),
            &all,
            ModelBody::Cascade(trained.cascade),
        );
        if a.trace.is_some() {
            warn!("cascade training does not produce a single column-generation trace; --trace ignored");
        }
        (model, all)
    } else {
        let (clf, trace) = train_strong(&data, method, &settings.config)?;
        match &trace {
            Some(t) => {
                t.write_csv(create(&trace_path)?)?;
                write_provenance(&trace_path, "train", settings.echo.clone())?;
                println!("trace,{}", trace_path.display());
            }
            None if a.trace.is_some() => {
                warn!("{method} has no column-generation trace; --trace ignored")
            }
            None => {}
        }
        let model = ModelFile::new(method, settings.echo.clone(), &data, ModelBody::Strong(clf));
        (model, data)
    };

    model
        .save(&a.out)
        .with_context(|| format!("writing model {}", a.out.display()))?;
    let cascade: MultiExitCascade = model.as_cascade();
    let eval = evaluate_cascade(&cascade, &report_data)?;
    eval.write_node_csv(create(&report_path)?)?;
    write_provenance(&report_path, "train", settings.echo.clone())?;
    println!("method,{method}");
    println!("weak_classifiers,{}", cascade.stumps.len());
    println!("exits,{}", cascade.exits.len());
    print_evaluation(&eval);
    println!("model,{}", a.out.display());
    println!("report,{}", report_path.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = load(&a.data)?;
    model.feature_space.check(&data)?;
    let eval = evaluate_cascade(&model.as_cascade(), &data)?;
    let details = json!({
        "model": a.model.display().to_string(),
        "data": a.data.display().to_string(),
        "config": model.config,
    });
    if let Some(p) = &a.report {
        eval.write_node_csv(create(p)?)?;
        write_provenance(p, "eval", details.clone())?;
    }
    if let Some(p) = &a.roc {
        eval.write_roc_csv(create(p)?)?;
        write_provenance(p, "eval", details)?;
    }
    println!("method,{}", model.method);
    print_evaluation(&eval);
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let qp = bench_qp(a.n, a.m, a.theta, a.seed)?;
    let r = bench_solvers(&qp, a.tolerance, &EgConfig::default())?;
    let header = "n,tolerance,eg_seconds,reference_seconds,eg_objective,reference_objective,eg_iterations,reference_iterations,objective_gap,speed_ratio";
    let row = format!(
        "{},{:e},{},{},{:.17e},{:.17e},{},{},{:e},{}",
        r.n,
        r.tolerance,
        r.eg_seconds,
        r.reference_seconds,
        r.eg_objective,
        r.reference_objective,
        r.eg_iterations,
        r.reference_iterations,
        r.objective_gap,
        r.speed_ratio
    );
    println!("{header}\n{row}");
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        writeln!(w, "{header}\n{row}")?;
        w.flush()?;
        write_provenance(
            p,
            "bench-solver",
            json!({ "n": a.n, "m": a.m, "theta": a.theta, "tolerance": a.tolerance, "seed": a.seed }),
        )?;
    }
    Ok(())
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = load(&a.data)?;
    model.feature_space.check(&data)?;
    let cascade = model.as_cascade();
    let per_exit = cascade.positive_margins_per_exit(&data);

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(
        out,
        "exit_index,prefix_length,count,rank,margin,normal_quantile,r_normal,flag"
    )?;
    let mut summary = Vec::new();
    for (t, margins) in per_exit.iter().enumerate() {
        let prefix = cascade.exits[t].prefix_length;
        let n = margins.len();
        if n < NORMALITY_MIN_POINTS {
            writeln!(out, "{t},{prefix},{n},,,,,too_few_positives")?;
            summary.push((t, prefix, n, None, "too_few_positives"));
            continue;
        }
        let report = normality_diagnostic(margins)?;
        let (r_text, flag) = match report.r_normal {
            Some(r) => (r.to_string(), ""),
            None => (String::new(), "constant_margins"),
        };
        for (k, (margin, q)) in report.pairs.iter().enumerate() {
            writeln!(
                out,
                "{t},{prefix},{n},{},{margin},{q},{r_text},{flag}",
                k + 1
            )?;
        }
        summary.push((t, prefix, n, report.r_normal, flag));
    }
    out.flush()?;
    drop(out);
    if let Some(p) = &a.out {
        write_provenance(
            p,
            "diagnose",
            json!({ "model": a.model.display().to_string(), "data": a.data.display().to_string(), "config": model.config }),
        )?;
        println!("exit_index,prefix_length,count,r_normal,flag");
        for (t, prefix, n, r, flag) in summary {
            println!(
                "{t},{prefix},{n},{},{flag}",
                r.map(|v| v.to_string()).unwrap_or_default()
            );
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let (data, generator, params) = match a.kind {
        GenKind::Toy => (
            gen_toy_2d(a.m1, a.m2, a.seed)?,
            "toy-2d",
            json!({ "m1": a.m1, "m2": a.m2 }),
        ),
        GenKind::Gaussian => {
            let spec = GaussianSpec {
                m1: a.m1,
                m2: a.m2,
                dim: a.dim,
                positive_mean: a.positive_mean,
                positive_sd: a.positive_sd,
                negative_sd: a.negative_sd,
            };
            (
                gen_gaussian(&spec, a.seed)?,
                "gaussian",
                serde_json::to_value(spec)?,
            )
        }
        GenKind::Cascade => (
            gen_cascade_task(a.m1, a.m2, a.dim, a.half_width, a.seed)?,
            "cascade-task",
            json!({ "m1": a.m1, "m2": a.m2, "dim": a.dim, "half_width": a.half_width }),
        ),
        GenKind::Images => (
            gen_image_windows(a.m1, a.m2, a.width, a.height, a.seed)?,
            "image-windows",
            json!({ "m1": a.m1, "m2": a.m2, "width": a.width, "height": a.height }),
        ),
    };
    let data = match a.class {
        GenClass::Both => data,
        GenClass::Positive => data.select(&data.indices_with(Label::Positive)),
        GenClass::Negative => data.select(&data.indices_with(Label::Negative)),
    };
    save_dataset(&data, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let mut params = params;
    params["class"] = json!(format!("{:?}", a.class).to_lowercase());
    let meta = write_metadata(
        &a.out,
        &GeneratorMetadata {
            generator: generator.to_string(),
            seed: a.seed,
            params,
        },
    )?;
    println!("examples,{}", data.len());
    println!("positives,{}", data.num_positives());
    println!("negatives,{}", data.num_negatives());
    println!("data,{}", a.out.display());
    println!("metadata,{}", meta.display());
    Ok(())
}
