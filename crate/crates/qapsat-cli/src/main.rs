use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use qapsat::analysis::{analyze, FitTables};
use qapsat::exact::{branch_and_bound, enumerate_min, BnbOptions, SolveOutcome, DEFAULT_ENUMERATION_CAP};
use qapsat::generator::{generate, generate_suite, GeneratorConfig};
use qapsat::harness::{read_ledger, run_experiment, ExperimentPlan, PlanFile, SolverKind};
use qapsat::io::{read_instance, write_instance, InstanceFilePair, LoadedInstance};
use qapsat::plot::emit_plots;
use qapsat::rots::{rots_runs, RotsConfig, RotsSummary};

/// Random QAP-SAT instances: generate, solve, sweep and fit.
#[derive(Parser, Debug)]
#[command(name = "qapsat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one instance (matrix file plus sidecar).
    Generate(GenerateArgs),
    /// Generate every instance of a plan's grid, with a manifest.
    Suite(SuiteArgs),
    /// Certify the global minimum of an instance.
    Solve(SolveArgs),
    /// Measure the tabu-search success rate against a known optimum.
    Rots(RotsArgs),
    /// Run a factorial sweep into a CSV ledger (restartable).
    Experiment(ExperimentArgs),
    /// Fit models to a ledger; writes fits.csv, curves.csv and figures.
    Analyze(AnalyzeArgs),
    /// Render figures from a directory written by `analyze`.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Problem dimension.
    #[arg(long)]
    n: usize,
    /// Clause size (only 3 is available).
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Number of flow clauses.
    #[arg(long)]
    m: usize,
    /// Number of distance clauses.
    #[arg(long)]
    m1: usize,
    /// 64-bit generator seed.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// File stem; defaults to one built from the parameters and seed.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Plan file; its grid, instances_per_cell and master_seed are used.
    #[arg(long)]
    plan: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the plan's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Enum,
    Bnb,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Plain,
    Csv,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Matrix file; a sidecar next to it is read when present.
    #[arg(long = "in")]
    input: PathBuf,
    /// Exhaustive enumeration or branch-and-bound.
    #[arg(long, value_enum, default_value_t = Method::Bnb)]
    method: Method,
    /// Early-exit value for branch-and-bound: `auto` uses the sidecar's
    /// lower bound (optimization when there is no sidecar), `none` always
    /// optimizes, or an integer.
    #[arg(long, default_value = "none")]
    target: String,
    /// Stop branch-and-bound after this many node expansions.
    #[arg(long)]
    node_cap: Option<u64>,
    /// Largest dimension enumeration accepts.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    enumeration_cap: usize,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(Args, Debug)]
struct RotsArgs {
    /// Matrix file; a sidecar next to it is read when present.
    #[arg(long = "in")]
    input: PathBuf,
    /// Known optimum, or `auto` to certify it with branch-and-bound first.
    #[arg(long, default_value = "auto")]
    optimum: String,
    /// Independent runs.
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Base seed of the runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget per run.
    #[arg(long, default_value_t = 1000)]
    max_iterations: u64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Plan file (TOML).
    #[arg(long)]
    plan: PathBuf,
    /// Ledger CSV; existing rows are kept and skipped.
    #[arg(long)]
    ledger: PathBuf,
    /// Overrides the plan's worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the plan's solvers, comma separated (enum,bnb,rots).
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<SolverKind>>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Ledger CSV written by `experiment`.
    #[arg(long)]
    ledger: PathBuf,
    /// Output directory for fits.csv, curves.csv and the figures.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Directory holding fits.csv and curves.csv.
    #[arg(long)]
    fits: PathBuf,
    /// Output directory for the figures.
    #[arg(long)]
    out: PathBuf,
}

/// Failure after argument parsing; always exit status 2.
#[derive(Debug)]
struct DataError(anyhow::Error);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QAPSAT_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> std::result::Result<(), DataError> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Rots(a) => cmd_rots(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Plot(a) => cmd_plot(a),
    }
    .map_err(DataError)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let config = GeneratorConfig {
        n: a.n,
        k: a.k,
        m: a.m,
        m1: a.m1,
        seed: a.seed,
    };
    let qs = generate(&config)?;
    let stem = a
        .name
        .unwrap_or_else(|| format!("qapsat_n{}_m1-{}_m{}_s{}", a.n, a.m1, a.m, a.seed));
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let pair = InstanceFilePair::in_dir(&a.out, &stem);
    write_instance(&qs, &pair)?;
    println!("{}", pair.data_path.display());
    println!("{}", pair.meta_path.display());
    Ok(())
}

fn cmd_suite(a: SuiteArgs) -> Result<()> {
    let plan = PlanFile::load(&a.plan)?;
    let grid = plan.grid()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let entries = generate_suite(
        &grid,
        plan.instances_per_cell,
        a.seed.unwrap_or(plan.master_seed),
        &a.out,
    )?;
    info!("{} instances written to {}", entries.len(), a.out.display());
    Ok(())
}

fn load(path: &Path) -> Result<LoadedInstance> {
    Ok(read_instance(&InstanceFilePair::from_data_path(path))?)
}

fn parse_target(spec: &str, loaded: &LoadedInstance) -> Result<Option<i64>> {
    match spec {
        "none" => Ok(None),
        "auto" => Ok(loaded.as_sat().map(|s| s.global_lower_bound())),
        v => v
            .parse::<i64>()
            .map(Some)
            .map_err(|_| anyhow!("--target expects auto, none or an integer, got {v:?}")),
    }
}

fn one_based(outcome: &SolveOutcome) -> String {
    outcome
        .argmin
        .to_one_based()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let loaded = load(&a.input)?;
    let inst = loaded.instance();
    let mut out = match a.method {
        Method::Enum => enumerate_min(inst, a.enumeration_cap)?,
        Method::Bnb => branch_and_bound(
            inst,
            BnbOptions {
                target: parse_target(&a.target, &loaded)?,
                node_cap: a.node_cap,
            },
        ),
    };
    let lower_bound = loaded.as_sat().map(|s| s.global_lower_bound());
    if let (Some(lb), true) = (lower_bound, out.proven) {
        out = out.with_lower_bound(lb)?;
    }
    let satisfied = match (out.satisfied, lower_bound) {
        (Some(s), _) => s.to_string(),
        // An early exit at the bound is a satisfied certificate too.
        (None, Some(lb)) if out.minimum == lb => "true".into(),
        _ => String::new(),
    };
    let fields = [
        ("minimum", out.minimum.to_string()),
        (
            "global_lower_bound",
            lower_bound.map(|v| v.to_string()).unwrap_or_default(),
        ),
        ("satisfied", satisfied),
        ("proven", out.proven.to_string()),
        ("nodes", out.nodes_expanded.to_string()),
        ("lap_calls", out.lap_calls.to_string()),
        ("seconds", format!("{:.6}", out.elapsed.as_secs_f64())),
        ("permutation", one_based(&out)),
    ];
    print_fields(&fields, a.format);
    Ok(())
}

fn print_fields(fields: &[(&str, String)], format: Format) {
    match format {
        Format::Plain => {
            for (k, v) in fields {
                println!("{k}: {v}");
            }
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout());
            let _ = w.write_record(fields.iter().map(|f| f.0));
            let _ = w.write_record(fields.iter().map(|f| f.1.as_str()));
            let _ = w.flush();
        }
    }
}

fn cmd_rots(a: RotsArgs) -> Result<()> {
    let loaded = load(&a.input)?;
    let inst = loaded.instance();
    if a.runs == 0 || a.max_iterations == 0 {
        bail!("--runs and --max-iterations must be positive");
    }
    let optimum = match a.optimum.as_str() {
        "auto" => {
            let out = branch_and_bound(inst, BnbOptions::default());
            if !out.proven {
                bail!("branch-and-bound did not prove the optimum");
            }
            out.minimum
        }
        v => v
            .parse::<i64>()
            .map_err(|_| anyhow!("--optimum expects auto or an integer, got {v:?}"))?,
    };
    let config = RotsConfig {
        runs: a.runs,
        max_iterations: a.max_iterations,
        ..RotsConfig::for_dimension(inst.n(), a.seed)
    };
    let results = rots_runs(inst, optimum, &config);
    let summary = RotsSummary::from_results(&results, config.max_iterations);
    let best = results.iter().map(|r| r.best_value).min().unwrap_or(i64::MAX);
    let fields = [
        ("optimum", optimum.to_string()),
        ("runs", a.runs.to_string()),
        ("success_rate", summary.success_rate.to_string()),
        ("mean_iterations", summary.mean_iterations.to_string()),
        ("best_value", best.to_string()),
    ];
    print_fields(&fields, a.format);
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut file = PlanFile::load(&a.plan)?;
    if let Some(w) = a.workers {
        file.workers = w;
    }
    if let Some(s) = a.solvers {
        file.solvers = s;
    }
    let plan = ExperimentPlan::from_file(&file, &a.ledger)?;
    let summary = run_experiment(&plan)?;
    info!(
        "{}: {} rows ({} new, {} failed)",
        summary.ledger.display(),
        summary.total_rows,
        summary.new_rows,
        summary.failed_rows
    );
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let rows = read_ledger(&a.ledger)?;
    let report = analyze(&rows);
    let tables = report.tables();
    tables.write(&a.out)?;
    let figures = emit_plots(&tables, &a.out)?;
    info!(
        "{} logit fits, {} figures written to {}",
        report.logit.len(),
        figures.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let tables = FitTables::read(&a.fits)?;
    let figures = emit_plots(&tables, &a.out)?;
    for f in figures {
        println!("{}", f.display());
    }
    Ok(())
}
