use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use pcesolve::encoding::{capacity, min_qubits};
use pcesolve::experiments::{
    ablation_histograms, build_parent_hamiltonian, gate_budget_sweep, plateau_variance, sample_bound,
    verify_parent_hamiltonian, PlateauOptions, SweepOptions,
};
use pcesolve::graph::{generate_random_instance, parse_graph, Assignment, Graph, GraphFormat};
use pcesolve::loss::{default_alpha, LossForm, DEFAULT_BETA};
use pcesolve::record::{
    read_records, AblateConfig, BoundConfig, GenConfig, GraphSource, ParentHamConfig, PlateauConfig, RecordWriter,
    ResultRecord, RunConfig, SolveConfig, SweepConfig,
};
use pcesolve::solver::{qubits_for, solve, SolveOptions};
use pcesolve::{rng, Error, StopRule, TrainConfig};

#[derive(Parser)]
#[command(name = "pcesolve", version, about = "Variational MaxCut with Pauli-correlation encodings")]
struct Cli {
    /// Worker threads for seeded runs; 0 uses every core.
    #[arg(long, global = true, env = "PCESOLVE_JOBS", default_value_t = 0)]
    jobs: usize,

    /// Record output path; `-` writes records to stdout and summaries to stderr.
    #[arg(long, global = true, default_value = "-")]
    records: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, read out and refine; one record per (instance, seed).
    Solve(SolveArgs),
    /// Loss variance over random initializations.
    Plateau(PlateauArgs),
    /// Shots per family sufficient for an ε-accurate loss estimate.
    Bound(BoundArgs),
    /// Build and verify the coloring-based parent Hamiltonian.
    Parentham(ParentHamArgs),
    /// Generate a post-selected random instance in Gset format.
    Gen(GenArgs),
    /// Compare loss forms by their final correlator distributions.
    Ablate(AblateArgs),
    /// Minimal two-qubit gate counts reaching a readout ratio target.
    Sweep(SweepArgs),
    /// Re-run every record in a file from its embedded configuration.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug)]
enum AlphaArg {
    Auto,
    Value(f64),
}

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(AlphaArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(AlphaArg::Value(v)),
            _ => Err(format!("expected `auto` or a positive number, got `{s}`")),
        }
    }
}

impl AlphaArg {
    fn resolve(self, n: usize, k: usize) -> f64 {
        match self {
            AlphaArg::Auto => default_alpha(n, k),
            AlphaArg::Value(v) => v,
        }
    }

    fn explicit(self) -> Option<f64> {
        match self {
            AlphaArg::Auto => None,
            AlphaArg::Value(v) => Some(v),
        }
    }
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 10_000)]
    max_epochs: usize,
    #[arg(long, default_value_t = StopRule::DEFAULT_WINDOW)]
    stop_window: usize,
    #[arg(long, default_value_t = StopRule::DEFAULT_THRESHOLD)]
    stop_threshold: f64,
    /// Stop after 150 non-improving steps instead of the windowed rule.
    #[arg(long)]
    relaxed_stop: bool,
    /// Shots per measurement family; 0 uses exact expectations.
    #[arg(long, default_value_t = 0)]
    shots: u64,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            max_epochs: self.max_epochs,
            stop: if self.relaxed_stop {
                StopRule::relaxed()
            } else {
                StopRule::Window {
                    window: self.stop_window,
                    threshold: self.stop_threshold,
                }
            },
            shots: self.shots,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Brickwork layers; defaults to ⌈m/n⌉.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long, default_value = "auto")]
    alpha: AlphaArg,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value = "tanh+reg")]
    loss: LossForm,
    #[command(flatten)]
    train: TrainArgs,
}

impl ModelArgs {
    fn options(&self, seed: u64, best_known: Option<f64>) -> SolveOptions {
        SolveOptions {
            k: self.k,
            layers: self.layers,
            alpha: self.alpha.explicit(),
            beta: self.beta,
            form: self.loss,
            train: self.train.config(seed),
            best_known,
            exact_reference: true,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance files; may be repeated.
    #[arg(long, required = true)]
    graph: Vec<PathBuf>,
    #[arg(long, default_value = "gset")]
    format: GraphFormat,
    /// Runs per instance, seeded `seed, seed+1, …`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long)]
    seed: u64,
    /// Best-known cut counting each cut edge once.
    #[arg(long)]
    best_known: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct PlateauArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Brickwork layers; defaults to 9n.
    #[arg(long)]
    depth_rows: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "1")]
    alpha: AlphaArg,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value = "tanh+reg")]
    loss: LossForm,
    /// Instance size; defaults to the encoding capacity 3·C(n, k).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    deg: f64,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "gset")]
    format: GraphFormat,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "auto")]
    alpha: AlphaArg,
    /// Body order used to resolve `--alpha auto`.
    #[arg(long, default_value_t = 2)]
    k: usize,
}

#[derive(Args)]
struct ParentHamArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "gset")]
    format: GraphFormat,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Random assignments to verify; 0 checks every assignment.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 4.0)]
    deg: f64,
    #[arg(long)]
    seed: u64,
    /// Destination of the generated instance.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 18)]
    m: usize,
    #[arg(long, default_value_t = 4.0)]
    deg: f64,
    #[arg(long, value_delimiter = ',', default_value = "quadratic,quadratic+reg,tanh,tanh+reg")]
    forms: Vec<LossForm>,
    /// Training seeds per instance, seeded `seed, seed+1, …`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    m_values: Vec<usize>,
    #[arg(long, default_value_t = 16.0 / 17.0)]
    target: f64,
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long, default_value_t = 16)]
    max_layers: usize,
    #[arg(long, default_value_t = 4.0)]
    deg: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// Record file to replay.
    #[arg(long = "from")]
    from: PathBuf,
}

enum Failure {
    /// Missing or unreadable input file.
    Input(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn read_input(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(src: &GraphSource) -> Outcome<Graph> {
    let text = read_input(Path::new(&src.path))?;
    parse_graph(&text, src.format).map_err(|e| Failure::Run(format!("{}: {e}", src.path)))
}

fn source(path: &Path, format: GraphFormat) -> GraphSource {
    GraphSource {
        path: path.display().to_string(),
        format,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("metrics serialize")
}

/// Run one configuration to its metrics.
fn execute(config: &RunConfig) -> Outcome<Value> {
    match config {
        RunConfig::Solve(c) => {
            let g = load_graph(&c.graph)?;
            let res = solve(&g, &c.options)?;
            Ok(json!({
                "m": g.num_vertices(),
                "edges": g.num_edges(),
                "n": res.num_qubits,
                "layers": res.layers,
                "two_qubit_gates": res.two_qubit_gates,
                "alpha": res.alpha,
                "cut": res.cut,
                "ratio": res.ratio,
                "ratio_exact": res.ratio_exact,
                "readout_cut": res.readout_cut,
                "exact_cut": res.exact_cut,
                "epochs": res.epochs,
                "best_loss": res.trace.best_loss,
                "wall_time_secs": res.trace.wall_time_secs,
                "x_star": res.x_star,
            }))
        }
        RunConfig::Plateau(c) => {
            let g = generate_random_instance(c.m, c.mean_degree, c.instance_seed)?;
            Ok(to_value(&plateau_variance(&g, &c.options)?))
        }
        RunConfig::Bound(c) => {
            let g = load_graph(&c.graph)?;
            let s = sample_bound(c.epsilon, c.delta, &g, c.alpha)?;
            Ok(json!({ "shots_per_family": s, "m": g.num_vertices(), "edges": g.num_edges() }))
        }
        RunConfig::Parentham(c) => {
            let g = load_graph(&c.graph)?;
            let ph = build_parent_hamiltonian(&g, c.k)?;
            let m = g.num_vertices();
            let xs: Vec<Assignment> = if c.samples == 0 {
                if m > 20 {
                    return Err(Failure::Run(format!("exhaustive verification needs m ≤ 20, got {m}; pass --samples")));
                }
                (0..1u64 << m).map(|mask| Assignment::from_mask(mask, m)).collect()
            } else {
                let mut r = rng::seeded(c.seed);
                (0..c.samples).map(|_| Assignment::random(m, &mut r)).collect()
            };
            let worst = xs
                .par_iter()
                .map(|x| verify_parent_hamiltonian(&ph, &g, x))
                .collect::<Result<Vec<f64>, Error>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(json!({
                "colors": ph.num_colors(),
                "total_qubits": ph.total_qubits(),
                "terms": ph.terms.len(),
                "assignments_checked": xs.len(),
                "max_discrepancy": worst,
            }))
        }
        RunConfig::Gen(c) => {
            let g = generate_random_instance(c.m, c.mean_degree, c.seed)?;
            let text = g.to_gset_string();
            std::fs::write(&c.out, &text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", c.out)))?;
            let lossless = parse_graph(&text, GraphFormat::Gset)? == g;
            Ok(json!({ "m": g.num_vertices(), "edges": g.num_edges(), "mean_degree": g.mean_degree(), "round_trip": lossless }))
        }
        RunConfig::Ablate(c) => {
            let instances = (0..c.instances)
                .map(|i| generate_random_instance(c.m, c.mean_degree, rng::derive_seed(c.instance_seed, &[i as u64])))
                .collect::<Result<Vec<_>, Error>>()?;
            let variants = ablation_histograms(&instances, &c.forms, &c.seeds, &c.options, c.bins)?;
            Ok(to_value(&variants))
        }
        RunConfig::Sweep(c) => Ok(to_value(&gate_budget_sweep(&c.m_values, &c.sweep, &c.options)?)),
    }
}

fn configs(cmd: &Command) -> Outcome<Vec<RunConfig>> {
    Ok(match cmd {
        Command::Solve(a) => {
            if a.seeds == 0 {
                return Err(Failure::Run("--seeds must be ≥ 1".into()));
            }
            let mut out = Vec::new();
            for path in &a.graph {
                if !path.is_file() {
                    return Err(Failure::Input(format!("graph file not found: {}", path.display())));
                }
                for s in 0..a.seeds {
                    out.push(RunConfig::Solve(SolveConfig {
                        graph: source(path, a.format),
                        options: a.model.options(a.seed + s, a.best_known),
                    }));
                }
            }
            out
        }
        Command::Plateau(a) => {
            let m = a.m.unwrap_or_else(|| capacity(a.n, a.k));
            vec![RunConfig::Plateau(PlateauConfig {
                options: PlateauOptions {
                    n: a.n,
                    k: a.k,
                    layers: a.depth_rows.unwrap_or(9 * a.n),
                    trials: a.trials,
                    seed: a.seed,
                    alpha: a.alpha.resolve(a.n, a.k),
                    beta: a.beta,
                    form: a.loss,
                    bootstrap: a.bootstrap,
                },
                m,
                mean_degree: a.deg,
                instance_seed: a.seed,
            })]
        }
        Command::Bound(a) => {
            let g = load_graph(&source(&a.graph, a.format))?;
            let n = min_qubits(g.num_vertices(), a.k);
            vec![RunConfig::Bound(BoundConfig {
                graph: source(&a.graph, a.format),
                epsilon: a.eps,
                delta: a.delta,
                alpha: a.alpha.resolve(n, a.k),
            })]
        }
        Command::Parentham(a) => vec![RunConfig::Parentham(ParentHamConfig {
            graph: source(&a.graph, a.format),
            k: a.k,
            samples: a.samples,
            seed: a.seed,
        })],
        Command::Gen(a) => vec![RunConfig::Gen(GenConfig {
            m: a.m,
            mean_degree: a.deg,
            seed: a.seed,
            out: a.out.display().to_string(),
        })],
        Command::Ablate(a) => {
            let n = qubits_for(a.m, a.model.k)?;
            let mut options = a.model.options(a.seed, None);
            options.alpha = Some(a.model.alpha.resolve(n, a.model.k));
            vec![RunConfig::Ablate(AblateConfig {
                instances: a.instances,
                m: a.m,
                mean_degree: a.deg,
                instance_seed: a.seed,
                forms: a.forms.clone(),
                seeds: (0..a.seeds).map(|s| a.seed + s).collect(),
                bins: a.bins,
                options,
            })]
        }
        Command::Sweep(a) => vec![RunConfig::Sweep(SweepConfig {
            m_values: a.m_values.clone(),
            sweep: SweepOptions {
                k: a.model.k,
                target_mean_ratio: a.target,
                seeds: a.seeds,
                max_layers: a.max_layers,
                mean_degree: a.deg,
                seed: a.seed,
            },
            options: a.model.options(a.seed, None),
        })],
        Command::Replay(a) => {
            let file = File::open(&a.from)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", a.from.display())))?;
            read_records(BufReader::new(file))?.into_iter().map(|r| r.config).collect()
        }
    })
}

fn summarize(records: &[ResultRecord]) -> String {
    let Some(first) = records.first() else {
        return "no runs".into();
    };
    let field = |r: &ResultRecord, k: &str| r.metrics.get(k).and_then(Value::as_f64);
    match first.command.as_str() {
        "solve" => {
            let ratios: Vec<f64> = records
                .iter()
                .filter_map(|r| field(r, "ratio").or_else(|| field(r, "ratio_exact")))
                .collect();
            let cuts: Vec<f64> = records.iter().filter_map(|r| field(r, "cut")).collect();
            let max_cut = cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if ratios.is_empty() {
                format!("solve: runs={} max_cut={max_cut}", records.len())
            } else {
                let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
                let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                format!("solve: runs={} mean_r={mean:.6} max_r={max:.6} max_cut={max_cut}", records.len())
            }
        }
        "plateau" => {
            let m = &first.metrics;
            format!(
                "plateau: n={} k={} trials={} variance={:.6e} normalized={:.6e} predicted={:.6e} mean={:.6e}",
                m["n"], m["k"], m["trials"], m["variance"].as_f64().unwrap_or(f64::NAN),
                m["normalized"].as_f64().unwrap_or(f64::NAN), m["predicted"].as_f64().unwrap_or(f64::NAN),
                m["mean"].as_f64().unwrap_or(f64::NAN)
            )
        }
        "bound" => format!("S={}", first.metrics["shots_per_family"]),
        "parentham" => {
            let m = &first.metrics;
            format!(
                "parentham: colors={} qubits={} checked={} max_discrepancy={:.3e}",
                m["colors"], m["total_qubits"], m["assignments_checked"],
                m["max_discrepancy"].as_f64().unwrap_or(f64::NAN)
            )
        }
        "gen" => format!("gen: m={} edges={} wrote {}", first.metrics["m"], first.metrics["edges"], match &first.config {
            RunConfig::Gen(c) => c.out.as_str(),
            _ => "",
        }),
        "ablate" => first.metrics.as_array().map_or_else(String::new, |vs| {
            vs.iter()
                .map(|v| {
                    format!(
                        "ablate: form={} mean_abs={:.4} mean_r={:.4} readout_r={:.4}",
                        v["form"].as_str().unwrap_or("?"),
                        v["mean_abs_expectation"].as_f64().unwrap_or(f64::NAN),
                        v["mean_ratio"].as_f64().unwrap_or(f64::NAN),
                        v["mean_readout_ratio"].as_f64().unwrap_or(f64::NAN)
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }),
        "sweep" => first.metrics.as_array().map_or_else(String::new, |ps| {
            ps.iter()
                .map(|p| format!("sweep: m={} n={} layers={} gates={} r={:.4}", p["m"], p["n"], p["layers"], p["two_qubit_gates"], p["mean_readout_ratio"].as_f64().unwrap_or(f64::NAN)))
                .collect::<Vec<_>>()
                .join("\n")
        }),
        other => format!("{other}: runs={}", records.len()),
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Failure::Run(e.to_string()))?;
    let configs = configs(&cli.command)?;
    let results: Vec<Outcome<Value>> = pool.install(|| configs.par_iter().map(execute).collect());

    let to_stdout = cli.records == "-";
    let sink: Box<dyn Write> = if to_stdout {
        Box::new(io::stdout())
    } else {
        Box::new(File::create(&cli.records).map_err(|e| Failure::Input(format!("cannot write {}: {e}", cli.records)))?)
    };
    let mut writer = RecordWriter::new(sink);
    let mut records = Vec::new();
    let mut first_failure = None;
    for (config, result) in configs.into_iter().zip(results) {
        match result {
            Ok(metrics) => {
                let rec = ResultRecord::new(config, metrics);
                writer.write(&rec)?;
                records.push(rec);
            }
            Err(f) => {
                if first_failure.is_none() {
                    first_failure = Some(f);
                }
            }
        }
    }
    let summary = summarize(&records);
    if to_stdout {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    match first_failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
