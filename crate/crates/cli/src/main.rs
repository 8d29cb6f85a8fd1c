//! `hypstab` command-line driver.
//!
//! Exit codes: 0 success, 1 numerical abort or failed probe, 2 usage or I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hypstab::geometry::Chart;
use hypstab::io;
use hypstab::stability::{render_table, run_suite, Suite};
use hypstab::svm::{gen_gmm_poincare, run_svm, Algorithm, DecisionMode, SvmConfig};
use hypstab::treeembed::{generate_tree, train_embedding, EmbedConfig, TreeInstance, TreeKind};
use hypstab::Error;

#[derive(Parser, Debug)]
#[command(
    name = "hypstab",
    version,
    about = "Binary64 stability experiments for hyperbolic models",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Rerun a configuration saved in a previous output's `config` field.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<RunConfig>,
}

/// A fully resolved invocation; serialized into every JSON output.
#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum RunConfig {
    /// Representation-capacity and one-step optimizer probes.
    Probe(ProbeArgs),
    /// Write a synthetic tree as CSV.
    GenTree(GenTreeArgs),
    /// Write a Gaussian-mixture hyperbolic dataset as CSV.
    GenGmm(GenGmmArgs),
    /// Embed a tree by distortion minimization in one or all charts.
    Embed(EmbedArgs),
    /// Train and score a one-vs-all SVM on a dataset CSV.
    Svm(SvmArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ProbeArgs {
    /// radius | boundary | constraint | one-step | scaling | all
    #[arg(long, default_value = "all")]
    suite: String,
    /// Decimal exponent; overrides the suite's default.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct GenTreeArgs {
    /// path:N | star:N | balanced:B:D | caterpillar:S:L | random:N
    #[arg(long)]
    kind: String,
    #[arg(long, env = "HYPSTAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct GenGmmArgs {
    /// Number of classes.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1200)]
    n: usize,
    #[arg(long, env = "HYPSTAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Coordinates written to the file: poincare | lorentz | param
    #[arg(long, default_value = "poincare")]
    chart: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct EmbedArgs {
    /// A tree spec such as `balanced:2:4`, or a tree CSV file.
    #[arg(long)]
    tree: String,
    /// poincare | lorentz | eparam | all
    #[arg(long, default_value = "all")]
    chart: String,
    #[arg(long, default_value_t = 3000)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, env = "HYPSTAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SvmArgs {
    #[arg(long)]
    data: PathBuf,
    /// esvm | lsvm | lsvmpp
    #[arg(long, default_value = "lsvmpp")]
    algo: String,
    /// Defaults to 5 for esvm and 0.5 otherwise.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Defaults to a scale-dependent rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, env = "HYPSTAB_SEED", default_value_t = 0)]
    seed: u64,
    /// raw | arcsinh
    #[arg(long, default_value = "arcsinh")]
    platt: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Numerical(String),
    ProbeFailed,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>, Failure> {
    io::create_file(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_probe(args: &ProbeArgs, cfg: &RunConfig) -> Outcome {
    let suite: Suite = args.suite.parse()?;
    let reports = run_suite(suite, args.k, args.eta)?;
    print!("{}", render_table(&reports));
    let pass = reports.iter().all(|r| r.pass);
    if let Some(out) = &args.out {
        write_json(out, &json!({ "config": cfg, "pass": pass, "reports": reports }))?;
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::ProbeFailed)
    }
}

fn cmd_gen_tree(args: &GenTreeArgs) -> Outcome {
    let kind: TreeKind = args.kind.parse()?;
    let t = generate_tree(kind, args.seed)?;
    let mut w = create(&args.out)?;
    io::write_tree(&mut w, &t)?;
    w.flush()?;
    println!("wrote {} nodes to {}", t.len(), args.out.display());
    Ok(())
}

fn cmd_gen_gmm(args: &GenGmmArgs) -> Outcome {
    let chart: Chart = args.chart.parse()?;
    let d = gen_gmm_poincare(args.k, args.n, args.seed)?;
    let mut w = create(&args.out)?;
    io::write_dataset(&mut w, chart, &d)?;
    w.flush()?;
    println!("wrote {} points in {} classes to {}", d.len(), d.n_classes, args.out.display());
    Ok(())
}

fn load_tree(spec: &str, seed: u64) -> Result<TreeInstance, Failure> {
    let path = Path::new(spec);
    if spec.ends_with(".csv") || path.is_file() {
        return io::read_tree_file(path).map_err(|e| Failure::Usage(format!("{spec}: {e}")));
    }
    Ok(generate_tree(spec.parse()?, seed)?)
}

fn chart_label(c: Chart) -> &'static str {
    match c {
        Chart::Poincare => "poincare",
        Chart::Lorentz => "lorentz",
        Chart::Param => "eparam",
    }
}

fn cmd_embed(args: &EmbedArgs, cfg: &RunConfig) -> Outcome {
    let charts = match args.chart.as_str() {
        "all" => vec![Chart::Poincare, Chart::Lorentz, Chart::Param],
        c => vec![c.parse()?],
    };
    let tree = load_tree(&args.tree, args.seed)?;
    let ecfg = EmbedConfig {
        lr: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        ..EmbedConfig::default()
    };
    fs::create_dir_all(&args.out)?;
    let mut runs = Vec::new();
    for chart in charts {
        let run = train_embedding(&tree, chart, &ecfg)?;
        let name = chart_label(chart);
        let mut w = create(&args.out.join(format!("loss_{name}.csv")))?;
        io::write_loss(&mut w, &run.loss_history)?;
        w.flush()?;
        let mut w = create(&args.out.join(format!("coords_{name}.csv")))?;
        io::write_points(&mut w, chart, &run.coords.points)?;
        w.flush()?;
        if chart == Chart::Lorentz {
            let mut w = create(&args.out.join("coords_lorentz_ball.csv"))?;
            io::write_points(&mut w, Chart::Poincare, &run.coords.to_poincare())?;
            w.flush()?;
        }
        let m = run.final_metrics;
        println!(
            "{name:<9} delta={:.6} delta_max={:.6} diameter={:.6}",
            m.delta, m.delta_max, m.diameter
        );
        runs.push(json!({
            "chart": name,
            "delta": m.delta,
            "delta_max": m.delta_max,
            "diameter": m.diameter,
            "final_loss": run.loss_history.last(),
            "history": run.metrics_history,
        }));
    }
    write_json(
        &args.out.join("metrics.json"),
        &json!({ "config": cfg, "nodes": tree.len(), "runs": runs }),
    )
}

fn cmd_svm(args: &SvmArgs, cfg: &RunConfig) -> Outcome {
    let algo: Algorithm = args.algo.parse()?;
    let mode: DecisionMode = args.platt.parse()?;
    let data = io::read_dataset_file(&args.data)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.data.display())))?;
    let defaults = SvmConfig::defaults(algo);
    let scfg = SvmConfig {
        c: args.c.unwrap_or(defaults.c),
        lr: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        mode,
        ..defaults
    };
    let report = run_svm(&data, &scfg)?;
    println!(
        "{algo} ({mode}) accuracy={:.4} macro_f1={:.4} train_accuracy={:.4} lr={:e}",
        report.accuracy, report.macro_f1, report.train_accuracy, report.lr
    );
    if let Some(out) = &args.out {
        write_json(out, &json!({ "config": cfg, "result": report }))?;
    }
    Ok(())
}

fn run(cfg: &RunConfig) -> Outcome {
    match cfg {
        RunConfig::Probe(a) => cmd_probe(a, cfg),
        RunConfig::GenTree(a) => cmd_gen_tree(a),
        RunConfig::GenGmm(a) => cmd_gen_gmm(a),
        RunConfig::Embed(a) => cmd_embed(a, cfg),
        RunConfig::Svm(a) => cmd_svm(a, cfg),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = value.get("config").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match (cli.config, cli.command) {
        (Some(path), _) => load_config(&path).and_then(|cfg| run(&cfg)),
        (None, Some(cfg)) => run(&cfg),
        (None, None) => Err(Failure::Usage("a subcommand or --config is required; see --help".into())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ProbeFailed) => {
            eprintln!("one or more probes failed");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
