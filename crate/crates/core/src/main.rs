use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tgsim::bench::{self, BenchPlan, ClusterSpec, Reference};
use tgsim::cluster::{Cluster, MIB};
use tgsim::graphgen::{self, Dataset, GeneratorSpec};
use tgsim::netmodel::NetModelKind;
use tgsim::schedulers;
use tgsim::simulator::{self, Imode, SimConfig};
use tgsim::taskgraph::{self, TaskGraph};

#[derive(Parser)]
#[command(name = "tgsim", version, about = "Simulate task-graph schedulers on multi-core clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated graphs as JSON files.
    Generate(GenerateArgs),
    /// Run one configuration and print its makespan.
    Simulate(SimulateArgs),
    /// Run a JSON plan and write the result table as CSV.
    Bench(BenchArgs),
    /// Add a score column relative to a reference configuration.
    Normalize(NormalizeArgs),
    /// Print `#T,#O,TS[GiB],LP` for graphs.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator names, or `elementary`, `irw`, `all`. `--list` shows them.
    names: Vec<String>,
    #[arg(long)]
    list: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distribution override, e.g. `duration_sd=0`. Repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output directory; a single graph goes to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph file, or a generator name.
    graph: String,
    /// Seed for generating the graph when `graph` is a generator name.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
    #[arg(long, default_value = "32x4")]
    cluster: ClusterSpec,
    /// Per-worker bandwidth in MiB/s.
    #[arg(long, default_value_t = 256.0)]
    bandwidth: f64,
    #[arg(long, default_value = "blevel")]
    scheduler: String,
    #[arg(long, default_value = "maxmin")]
    netmodel: NetModelKind,
    #[arg(long, default_value = "exact")]
    imode: Imode,
    /// Minimal scheduling delay in seconds.
    #[arg(long, default_value_t = 0.1)]
    msd: f64,
    /// Decision latency in seconds; 0.05 when the MSD is non-zero by default.
    #[arg(long)]
    latency: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the event trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    plan: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct NormalizeArgs {
    csv: PathBuf,
    /// `netmodel=<name>`, `imode=<name>` or `msd=<seconds>`.
    #[arg(long)]
    reference: Reference,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Graph files, generator names, or `elementary`, `irw`, `all`.
    #[arg(required = true)]
    graphs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prefix each row with the graph name.
    #[arg(long)]
    named: bool,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.to_string(), v))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Replaces `all`, `elementary` and `irw` with the generator names they cover.
fn expand_groups(args: &[String]) -> Vec<String> {
    let mut names = Vec::new();
    for n in args {
        let dataset = match n.as_str() {
            "all" => None,
            "elementary" => Some(Dataset::Elementary),
            "irw" => Some(Dataset::Irw),
            _ => {
                names.push(n.clone());
                continue;
            }
        };
        names.extend(
            graphgen::list_generators()
                .iter()
                .filter(|g| dataset.is_none_or(|d| g.dataset == d))
                .map(|g| g.name.to_string()),
        );
    }
    names
}

/// A path that exists is read as a graph file; anything else must name a generator.
fn resolve_graph(arg: &str, seed: u64) -> Result<TaskGraph> {
    if Path::new(arg).exists() {
        return graphgen::load(arg).with_context(|| format!("cannot load {arg}"));
    }
    Ok(graphgen::generate(&GeneratorSpec::new(arg, seed))?)
}

fn generate(args: GenerateArgs) -> Result<()> {
    if args.list {
        let mut out = output(None)?;
        for g in graphgen::list_generators() {
            let defaults: Vec<String> = g.defaults.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "{:<18} {:<10} {}", g.name, g.dataset, g.description)?;
            if !defaults.is_empty() {
                writeln!(out, "{:<29}{}", "", defaults.join(" "))?;
            }
        }
        out.flush()?;
        return Ok(());
    }
    if args.names.is_empty() {
        bail!("no generator given (try --list)");
    }
    let specs: Vec<GeneratorSpec> = expand_groups(&args.names)
        .iter()
        .map(|n| {
            let mut s = GeneratorSpec::new(n, args.seed);
            s.params.extend(args.params.iter().cloned());
            s
        })
        .collect();
    match &args.out {
        None if specs.len() == 1 => {
            let mut out = output(None)?;
            writeln!(out, "{}", graphgen::generate(&specs[0])?.to_json())?;
            out.flush()?;
        }
        None => bail!("several graphs requested; pass --out <dir>"),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for s in &specs {
                let g = graphgen::generate(s)?;
                let path = dir.join(format!("{}.json", g.meta().name.as_deref().unwrap_or(&s.name)));
                fs::write(&path, g.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
                log::info!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let graph = resolve_graph(&args.graph, args.graph_seed)?;
    if !(args.bandwidth.is_finite() && args.bandwidth > 0.0) {
        bail!("bandwidth must be positive");
    }
    if !(args.msd.is_finite() && args.msd >= 0.0) {
        bail!("msd must be non-negative");
    }
    let mut scheduler = schedulers::create(&args.scheduler)?;
    let cluster = Cluster::uniform(args.cluster, args.bandwidth * MIB);
    let config = SimConfig {
        netmodel: args.netmodel,
        imode: args.imode,
        msd: args.msd,
        decision_latency: args.latency.unwrap_or_else(|| SimConfig::default_latency(args.msd)),
        seed: args.seed,
        record_trace: args.trace.is_some(),
        ..SimConfig::default()
    };
    let result = simulator::run(&graph, &cluster, scheduler.as_mut(), &config)?;
    if let Some(path) = &args.trace {
        let mut out = output(Some(path))?;
        simulator::write_jsonl(&result.trace, &graph, &mut out)?;
        out.flush()?;
    }
    let mut out = output(None)?;
    writeln!(out, "makespan_s={}", result.makespan)?;
    writeln!(out, "transferred_mib={}", result.transferred_bytes as f64 / MIB)?;
    writeln!(out, "transfers={}", result.transfers)?;
    writeln!(out, "invocations={}", result.invocations)?;
    out.flush()?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("cannot read {}", args.plan.display()))?;
    let plan = BenchPlan::from_json(&text)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let rows = bench::run_plan(&plan, args.plan.parent())?;
    bench::write_csv(&rows, output(args.out.as_deref())?)?;
    let failed = rows.iter().filter(|r| r.makespan_s.is_none()).count();
    if failed > 0 {
        log::warn!("{failed} of {} simulations failed", rows.len());
    }
    Ok(())
}

fn normalize(args: NormalizeArgs) -> Result<()> {
    let file = File::open(&args.csv).with_context(|| format!("cannot open {}", args.csv.display()))?;
    let rows = bench::read_csv(file)?;
    let scored = bench::normalize(&rows, &args.reference)?;
    bench::write_scored_csv(&scored, output(args.out.as_deref())?)?;
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let mut out = output(None)?;
    for arg in &expand_groups(&args.graphs) {
        let g = resolve_graph(arg, args.seed)?;
        let row = taskgraph::stats(&g).to_row();
        if args.named {
            writeln!(out, "{},{row}", g.meta().name.as_deref().unwrap_or(arg))?;
        } else {
            writeln!(out, "{row}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => run_bench(a),
        Command::Normalize(a) => normalize(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe (e.g. `| head`) is not an error.
        Err(e)
            if e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
