//! Command-line surface: argument definitions and command drivers.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::graph::{build_graph, WeightGraph, WeightStrategy};
use crate::io::{
    load_samples, read_factors, read_summary, read_tensor, read_wall_ms, stack_cores,
    unstack_cores, write_factors, write_manifest, write_summary, write_tensor, write_timing_csv,
    RunConfig, RunSummary, CORES_FILE, SUMMARY_FILE, TIMING_FILE, TRACE_FILE,
};
use crate::rank_select::{select_ranks, RankPolicy};
use crate::solver::{solve, stationarity_residual, AlphaVariant, SolverConfig};
use crate::synth::{generate, EvalReport, SynthSpec, TimingSummary};

#[derive(Debug, Parser)]
#[command(
    name = "smtucker",
    version,
    about = "Sparse, manifold-regularized orthogonal Tucker decomposition of tensor sample sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the truncation ranks selected by cumulative mode energy.
    Ranks(RanksArgs),
    /// Build the k-nearest-neighbor weight graph and write its edge list.
    Graph(GraphArgs),
    /// Run the decomposition and write factors, cores, trace, and summary.
    Decompose(DecomposeArgs),
    /// Generate a synthetic clustered sample set with a manifest.
    Synth(SynthArgs),
    /// Evaluate a finished run against its samples.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Energy thresholds for modes 1, 2, 3.
    #[arg(long, value_parser = parse_triple::<f64>, default_value = "0.90,0.90,0.9985")]
    pub sigma: [f64; 3],
    /// Select the third rank from its energy threshold instead of keeping the full mode.
    #[arg(long)]
    pub free_r3: bool,
}

impl RankArgs {
    fn policy(&self) -> RankPolicy {
        RankPolicy {
            sigmas: self.sigma,
            fixed_r3_to_n: !self.free_r3,
        }
    }
}

#[derive(Debug, Args)]
pub struct RanksArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub rank: RankArgs,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    pub manifest: PathBuf,
    /// Number of nearest neighbors per sample.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// binary, cosine, heat, or heat:DELTA.
    #[arg(long, default_value = "binary")]
    pub weights: WeightStrategy,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    pub manifest: PathBuf,
    /// The ℓ1 term is weighted by 1/gamma.
    #[arg(long, default_value_t = 1e4)]
    pub gamma: f64,
    /// The manifold term is weighted by 1/beta.
    #[arg(long, default_value_t = 1e-6)]
    pub beta: f64,
    /// Nearest neighbors per sample; 0 disables the manifold term.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// binary, cosine, heat, or heat:DELTA.
    #[arg(long, default_value = "binary")]
    pub weights: WeightStrategy,
    #[command(flatten)]
    pub rank: RankArgs,
    /// Explicit ranks R1,R2,R3; overrides energy selection.
    #[arg(long, value_parser = parse_triple::<usize>)]
    pub ranks: Option<[usize; 3]>,
    /// Stop when the objective change relative to ‖X‖_F falls below this.
    #[arg(long, default_value_t = 1e-4)]
    pub zeta: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Serial reductions and timing-free trace, for byte-identical reruns.
    #[arg(long)]
    pub deterministic: bool,
    /// Worker threads for the parallel reductions.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use the neighbor sum without the factor 2 in the core update.
    #[arg(long)]
    pub alpha_printed: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON synthesis recipe; omitted fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output directory of a `decompose` run.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Neighborhood size for neighbor preservation; defaults to the run's k (or 4).
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed of the stratified train/test split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> std::result::Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got `{s}`"));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| format!("invalid value `{p}`"))?);
    }
    out.try_into().map_err(|_| unreachable!())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ranks(a) => ranks(a),
        Command::Graph(a) => graph(a),
        Command::Decompose(a) => decompose(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
    }
}

fn ranks(args: RanksArgs) -> Result<()> {
    let loaded = load_samples(&args.manifest)?;
    let r = select_ranks(&loaded.samples, &args.rank.policy())?;
    println!("{},{},{}", r[0], r[1], r[2]);
    Ok(())
}

fn graph(args: GraphArgs) -> Result<()> {
    let loaded = load_samples(&args.manifest)?;
    let g = build_graph(&loaded.samples, args.k, args.weights)?;
    g.write_edges_csv(BufWriter::new(File::create(&args.out)?))?;
    Ok(())
}

fn decompose(args: DecomposeArgs) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let loaded = load_samples(&args.manifest)?;
    let samples = &loaded.samples;
    let policy = args.rank.policy();
    policy.validate()?;
    let ranks = match args.ranks {
        Some(r) => r,
        None => select_ranks(samples, &policy)?,
    };
    let graph = if args.k == 0 {
        WeightGraph::empty(samples.len())
    } else {
        build_graph(samples, args.k, args.weights)?
    };
    let solver = SolverConfig {
        gamma: args.gamma,
        beta: args.beta,
        zeta: args.zeta,
        max_iter: args.max_iter,
        seed: args.seed,
        deterministic: args.deterministic,
        alpha: if args.alpha_printed {
            AlphaVariant::Printed
        } else {
            AlphaVariant::Derived
        },
    };
    let solution = solve(samples, &graph, ranks, &solver)?;
    let stationarity =
        stationarity_residual(samples, &solution.cores, &solution.factors, &graph, &solver)?;

    let mut resid = 0.0;
    for (x, g) in samples.iter().zip(solution.cores.iter()) {
        resid += x.distance_sq(&solution.factors.expand(g)?)?;
    }
    let x_norm = samples.frobenius_norm();
    let last = solution
        .trace
        .records
        .last()
        .expect("at least one iteration");
    let summary = RunSummary {
        config: RunConfig {
            manifest: args.manifest.clone(),
            solver,
            k: args.k,
            weights: args.weights,
            sigma: policy.sigmas,
            fixed_r3_to_n: policy.fixed_r3_to_n,
            ranks,
            ranks_given: args.ranks.is_some(),
            threads: args.threads,
        },
        samples: samples.len(),
        shape: samples.shape(),
        iterations: solution.trace.records.len(),
        stop: solution.stop,
        initial_objective: solution.trace.initial.expect("initial objective recorded"),
        final_objective: last.objective,
        final_relative_change: last.relative_error,
        reconstruction_error: if x_norm > 0.0 {
            resid.sqrt() / x_norm
        } else {
            resid.sqrt()
        },
        sparsity: solution.cores.sparsity(),
        orthonormality_error: solution.factors.orthonormality_error(),
        stationarity_max: stationarity.max(),
        stationarity,
    };

    let out = &args.out;
    fs::create_dir_all(out)?;
    write_factors(out, &solution.factors)?;
    write_tensor(&out.join(CORES_FILE), &stack_cores(&solution.cores)?)?;
    solution.trace.write_csv(
        BufWriter::new(File::create(out.join(TRACE_FILE))?),
        !args.deterministic,
    )?;
    if args.deterministic {
        let wall: Vec<f64> = solution.trace.records.iter().map(|r| r.wall_ms).collect();
        write_timing_csv(BufWriter::new(File::create(out.join(TIMING_FILE))?), &wall)?;
    }
    write_summary(&out.join(SUMMARY_FILE), &summary)?;

    println!(
        "ranks {:?}, {} iterations ({:?}), L = {:.6e}, reconstruction error {:.3e}, stationarity {:.3e}",
        ranks,
        summary.iterations,
        summary.stop,
        summary.final_objective.total,
        summary.reconstruction_error,
        summary.stationarity_max
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec: SynthSpec = match &args.spec {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => SynthSpec::default(),
    };
    let data = generate(&spec)?;
    let out = &args.out;
    fs::create_dir_all(out)?;
    let width = data.samples.len().to_string().len().max(3);
    let mut rows = Vec::with_capacity(data.samples.len());
    for (i, (x, label)) in data.samples.iter().zip(&data.labels).enumerate() {
        let name = format!("x{i:0width$}.dten");
        write_tensor(&out.join(&name), x)?;
        rows.push((name, Some(format!("c{label}"))));
    }
    let manifest = out.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    let truth = out.join("truth");
    fs::create_dir_all(&truth)?;
    write_factors(&truth, &data.factors)?;
    write_tensor(&truth.join(CORES_FILE), &stack_cores(&data.cores)?)?;
    fs::write(
        out.join("spec.json"),
        serde_json::to_string_pretty(&spec)? + "\n",
    )?;
    println!("{}", manifest.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let loaded = load_samples(&args.manifest)?;
    let run = &args.run;
    let factors = read_factors(run)?;
    let cores = unstack_cores(&read_tensor(&run.join(CORES_FILE))?)?;
    let summary = read_summary(&run.join(SUMMARY_FILE)).ok();

    let m = loaded.samples.len();
    let k = args
        .k
        .or_else(|| summary.as_ref().map(|s| s.config.k).filter(|&k| k > 0))
        .unwrap_or(4)
        .min(m.saturating_sub(1));
    let wall = timing_of(run)?;
    let iterations = summary.as_ref().map_or(wall.len(), |s| s.iterations);
    let report = EvalReport::evaluate(
        &loaded.samples,
        loaded.labels.as_deref(),
        &factors,
        &cores,
        k,
        args.split_seed,
        TimingSummary::new(iterations, &wall),
    )?;
    match args.format {
        ReportFormat::Json => println!("{}", report.to_json_line()?),
        ReportFormat::Table => println!("{report}"),
    }
    Ok(())
}

fn timing_of(run: &Path) -> Result<Vec<f64>> {
    let timing = run.join(TIMING_FILE);
    if timing.exists() {
        return read_wall_ms(&timing);
    }
    let trace = run.join(TRACE_FILE);
    if trace.exists() {
        return read_wall_ms(&trace);
    }
    Ok(Vec::new())
}
