//! `ccm`: sample vertex-colored multigraphs with a fixed colored degree
//! matrix, diagnose chain convergence, compute graph statistics, run
//! polarization significance tests, and verify the chain structure on
//! enumerable instances.
//!
//! Progress goes to standard error; machine-readable results go to files or
//! standard output. Exit codes: 0 success, 2 input error, 3 verification
//! failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ccm_core::diagnostics::{
    degree_assortativity, m_statistics, theta, top_degree_mv, write_trace_csv,
};
use ccm_core::graph::ColoredMultigraph;
use ccm_core::io::{load_graph, write_colors, write_edge_list};
use ccm_core::oracle::{enumerate_states, verify_chain_structure, write_dot};
use ccm_core::polarization::{significance_test, RwcConfig, ScoreKind};
use ccm_core::sampler::{
    default_iterations, run, run_ensemble, Algorithm, ChainConfig, Laziness, TraceSpec,
    UniformTarget,
};

#[derive(Parser)]
#[command(name = "ccm", version, about = "Colored-configuration-model sampling and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random graphs with the input's colored degree matrix.
    Sample(SampleArgs),
    /// Run one chain and emit a convergence trace plus a summary.
    Diagnose(DiagnoseArgs),
    /// Print graph statistics as JSON.
    Stats(StatsArgs),
    /// Significance of a polarization score against a graph null model.
    Test(TestArgs),
    /// Enumerate the state space and check the chain structure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Edge list: one `u<TAB>v` per line, repeats encode multiplicity.
    #[arg(long)]
    edges: PathBuf,
    /// Node colors: one `vertex<TAB>color` per line.
    #[arg(long)]
    colors: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Sirius,
    SiriusB,
    Cm,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Sirius => Algorithm::Sirius,
            AlgoArg::SiriusB => Algorithm::SiriusB,
            AlgoArg::Cm => Algorithm::Cm,
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, value_enum, default_value_t = AlgoArg::Sirius)]
    algo: AlgoArg,
    /// Iterations; defaults to ceil(m ln m).
    #[arg(long)]
    iters: Option<u64>,
    /// Hold each step with probability 1/2 (runs the lazy chain).
    #[arg(long)]
    lazy: bool,
    #[arg(long, env = "CCM_SEED", default_value_t = 0)]
    seed: u64,
    /// Fail instead of auto-enabling laziness on possibly periodic inputs.
    #[arg(long)]
    strict: bool,
}

impl ChainArgs {
    fn config(&self, m: usize) -> ChainConfig {
        ChainConfig {
            algorithm: self.algo.into(),
            iterations: self.iters.unwrap_or_else(|| default_iterations(m)),
            laziness: if self.lazy { Laziness::Half } else { Laziness::None },
            seed: self.seed,
            trace: TraceSpec::Off,
            strict_periodicity: self.strict,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Number of independent samples.
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Snapshot every N iterations; default is 100 evenly spaced points.
    #[arg(long)]
    trace_stride: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// How many highest-degree vertices to report.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScoreArg {
    Rwc,
    M,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NullArg {
    Sirius,
    Cm,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Polarization score to test.
    #[arg(long, value_enum, default_value_t = ScoreArg::Rwc)]
    score: ScoreArg,
    /// Null model the samples are drawn from.
    #[arg(long, value_enum, default_value_t = NullArg::Sirius)]
    null: NullArg,
    /// Number of null samples.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    lazy: bool,
    #[arg(long, env = "CCM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Random-walk restart probability.
    #[arg(long, default_value_t = 0.15)]
    restart: f64,
    /// Influential vertices per community.
    #[arg(long, default_value_t = 10)]
    influencers: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Abort if the state space exceeds this many states.
    #[arg(long, default_value_t = 5_000)]
    limit: usize,
    /// Optional DOT export of the state graph.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    colors_path: String,
    edges_path: String,
    chain: ChainConfig,
    resolved_seed: u64,
    samples: usize,
    score: Option<String>,
    out_dir: String,
}

#[derive(Serialize)]
struct DiagnoseSummary {
    n: usize,
    m: usize,
    num_colors: u32,
    algorithm: Algorithm,
    iterations: u64,
    auto_lazy: bool,
    theta: Option<f64>,
    tallies: ccm_core::OutcomeTallies,
    out_of_space_fraction: f64,
    accepted_fraction: f64,
    assortativity_initial: Option<f64>,
    assortativity_final: Option<f64>,
}

#[derive(Serialize)]
struct StatsReport {
    n: usize,
    m: usize,
    num_colors: u32,
    colors: Vec<String>,
    theta: Option<f64>,
    assortativity: Option<f64>,
    m_mean: f64,
    top_degree_mv: Vec<TopVertex>,
    jcm: Vec<Vec<u64>>,
    cdm_digest: String,
}

#[derive(Serialize)]
struct TopVertex {
    vertex: String,
    degree: u32,
    m_v: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> ccm_core::Result<ExitCode> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Test(args) => cmd_test(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn load(input: &InputArgs) -> ccm_core::Result<ColoredMultigraph> {
    let g = load_graph(&input.colors, &input.edges)?;
    eprintln!(
        "loaded graph: {} vertices, {} edge occurrences, {} colors",
        g.n(),
        g.m(),
        g.num_colors()
    );
    Ok(g)
}

fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> ccm_core::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).expect("serializable report");
    writeln!(w)?;
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> ccm_core::Result<ExitCode> {
    let g = load(&args.input)?;
    let cfg = args.chain.config(g.m());
    std::fs::create_dir_all(&args.out)?;
    eprintln!(
        "sampling {} graph(s) with {} for {} iterations",
        args.samples, cfg.algorithm, cfg.iterations
    );
    let results = run_ensemble(&g, &cfg, &UniformTarget, args.samples, args.parallelism)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        colors_path: args.input.colors.display().to_string(),
        edges_path: args.input.edges.display().to_string(),
        chain: cfg.clone(),
        resolved_seed: cfg.seed,
        samples: args.samples,
        score: None,
        out_dir: args.out.display().to_string(),
    };
    write_json(args.out.join("manifest.json"), &manifest)?;
    {
        let mut w = BufWriter::new(File::create(args.out.join("colors.tsv"))?);
        write_colors(&g, &mut w)?;
    }
    let mut tallies = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        if r.auto_lazy {
            eprintln!("chain {i}: laziness auto-enabled (no aperiodicity witness)");
        }
        let path = args.out.join(format!("sample_{i:03}.tsv"));
        let mut w = BufWriter::new(File::create(path)?);
        write_edge_list(&r.graph, &mut w)?;
        tallies.push(r.tallies);
    }
    write_json(args.out.join("tallies.json"), &tallies)?;
    eprintln!("wrote {} sample(s) to {}", results.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(args: DiagnoseArgs) -> ccm_core::Result<ExitCode> {
    let g = load(&args.input)?;
    let mut cfg = args.chain.config(g.m());
    cfg.trace = match args.trace_stride {
        Some(stride) => TraceSpec::EveryN(stride.max(1)),
        None => TraceSpec::Checkpoints(100),
    };
    let initial_assort = degree_assortativity(&g).ok();
    let initial_theta = theta(&g).ok();
    eprintln!("running {} for {} iterations", cfg.algorithm, cfg.iterations);
    let result = run(g.clone(), &cfg, &UniformTarget)?;
    std::fs::create_dir_all(&args.out)?;
    {
        let mut w = BufWriter::new(File::create(args.out.join("trace.csv"))?);
        write_trace_csv(&result.trace, &mut w)?;
    }
    let total = result.tallies.total().max(1) as f64;
    let summary = DiagnoseSummary {
        n: g.n(),
        m: g.m(),
        num_colors: g.num_colors(),
        algorithm: cfg.algorithm,
        iterations: cfg.iterations,
        auto_lazy: result.auto_lazy,
        theta: initial_theta,
        tallies: result.tallies,
        out_of_space_fraction: result.tallies.out_of_space as f64 / total,
        accepted_fraction: result.tallies.accepted as f64 / total,
        assortativity_initial: initial_assort,
        assortativity_final: degree_assortativity(&result.graph).ok(),
    };
    write_json(args.out.join("summary.json"), &summary)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        colors_path: args.input.colors.display().to_string(),
        edges_path: args.input.edges.display().to_string(),
        chain: cfg.clone(),
        resolved_seed: cfg.seed,
        samples: 1,
        score: None,
        out_dir: args.out.display().to_string(),
    };
    write_json(args.out.join("manifest.json"), &manifest)?;
    eprintln!("wrote trace.csv and summary.json to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn cdm_digest(g: &ColoredMultigraph) -> String {
    let cdm = g.cdm();
    let bytes = cdm.num_colors()
        .to_le_bytes()
        .into_iter()
        .chain(cdm.n().to_le_bytes())
        .chain(cdm.entries().iter().flat_map(|e| e.to_le_bytes()));
    format!("{:016x}", fnv1a64(bytes))
}

fn cmd_stats(args: StatsArgs) -> ccm_core::Result<ExitCode> {
    let g = load(&args.input)?;
    let stats = m_statistics(&g);
    let jcm = g.jcm();
    let k = g.num_colors() as usize;
    let jcm_rows = (0..k)
        .map(|l| (0..k).map(|r| jcm.entry(l as u32, r as u32)).collect())
        .collect();
    let report = StatsReport {
        n: g.n(),
        m: g.m(),
        num_colors: g.num_colors(),
        colors: g.color_names().to_vec(),
        theta: theta(&g).ok(),
        assortativity: degree_assortativity(&g).ok(),
        m_mean: stats.mean,
        top_degree_mv: top_degree_mv(&g, args.top_k)
            .into_iter()
            .map(|(v, m_v)| TopVertex {
                vertex: g.vertex_name(v).to_string(),
                degree: g.degree(v),
                m_v,
            })
            .collect(),
        jcm: jcm_rows,
        cdm_digest: cdm_digest(&g),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_test(args: TestArgs) -> ccm_core::Result<ExitCode> {
    let g = load(&args.input)?;
    let cfg = ChainConfig {
        algorithm: match args.null {
            NullArg::Sirius => Algorithm::Sirius,
            NullArg::Cm => Algorithm::Cm,
        },
        iterations: args.iters.unwrap_or_else(|| default_iterations(g.m())),
        laziness: if args.lazy { Laziness::Half } else { Laziness::None },
        seed: args.seed,
        trace: TraceSpec::Off,
        strict_periodicity: false,
    };
    let score = match args.score {
        ScoreArg::Rwc => ScoreKind::Rwc,
        ScoreArg::M => ScoreKind::M,
    };
    let rwc_cfg = RwcConfig {
        restart: args.restart,
        influencers_per_side: args.influencers,
        ..RwcConfig::default()
    };
    eprintln!(
        "testing {score} against {} nulls ({} samples, t = {})",
        cfg.algorithm, args.samples, cfg.iterations
    );
    let report = significance_test(&g, &cfg, score, args.samples, &rwc_cfg, args.parallelism)?;
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => {
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"))
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> ccm_core::Result<ExitCode> {
    let g = load(&args.input)?;
    let atlas = enumerate_states(&g, args.limit)?;
    eprintln!("enumerated {} states", atlas.len());
    let report = verify_chain_structure(&atlas);
    if let Some(path) = &args.dot {
        let mut w = BufWriter::new(File::create(path)?);
        write_dot(&atlas, &mut w)?;
        eprintln!("wrote state graph to {}", path.display());
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed");
        Ok(ExitCode::from(3))
    }
}
