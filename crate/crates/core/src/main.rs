use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rumor_block::experiment::{
    format_seed_labels, parse_seed_labels, rumor_by_degree, run_and_write, seeds_path, CsvRow,
    EvalMethod, Evaluator, ExperimentConfig, RunSwitches, CSV_HEADER,
};
use rumor_block::graph::{generate_power_law, load_edge_list, save_edge_list, DegreeKind};
use rumor_block::rbr::{RbrParams, DEFAULT_MAX_TUPLES};
use rumor_block::strategy::{AlgoOptions, Registry, SelectionContext};
use rumor_block::{Error, Graph, NodeSet, WeightingModel};

#[derive(Parser)]
#[command(
    name = "rumor-block",
    version,
    about = "Rumor blocking seed selection on competitive cascades"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a power-law graph as an edge list.
    Generate(GenerateArgs),
    /// Select positive seeds with one algorithm and print a report.
    Run(RunArgs),
    /// Estimate f for a seed file.
    Evaluate(EvaluateArgs),
    /// Run a sweep described by a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 10.4)]
    avg_deg: f64,
    #[arg(long, default_value_t = 2.5)]
    exponent: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// cp, cp:<p>, wc or file.
    #[arg(long, default_value = "cp")]
    model: WeightingModel,
    /// Number of top-degree nodes used as rumor seeds.
    #[arg(long, default_value_t = 20)]
    rumor_count: usize,
    /// Degree used to rank rumor seeds: out, in or total.
    #[arg(long, default_value = "out")]
    degree: DegreeKind,
}

#[derive(Args)]
struct EvalArgs {
    /// tuples or mc; `none` skips evaluation.
    #[arg(long, default_value = "tuples")]
    eval: String,
    /// Evaluation tuples or trials (default 1000000 tuples, 10000 trials).
    #[arg(long)]
    eval_count: Option<usize>,
    /// Multiplies the evaluation count.
    #[arg(long, default_value_t = 1.0)]
    eval_scale: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "rbr")]
    algo: String,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta2: f64,
    #[arg(long, default_value_t = 0.1)]
    delta3: f64,
    /// A number, or `n` for the node count.
    #[arg(long = "bigN", alias = "big-n", default_value = "n")]
    big_n: String,
    #[arg(long, default_value_t = DEFAULT_MAX_TUPLES)]
    max_tuples: usize,
    /// Simulations per estimate for the greedy baseline.
    #[arg(long, default_value_t = 2000)]
    sims: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    eval: EvalArgs,
    /// Write the selected seed labels here.
    #[arg(long)]
    seeds_out: Option<PathBuf>,
    /// Append a CSV row (header written if the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dataset name for the CSV row (default: graph file stem).
    #[arg(long)]
    name: Option<String>,
    /// Report wall times as 0 so output is byte-reproducible.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Whitespace-separated node labels; `#` comments.
    #[arg(long)]
    seeds: PathBuf,
    /// Pick the line `ALGO:K` (or `ALGO:K:TUPLES`) from an experiment seeds file.
    #[arg(long)]
    cell: Option<String>,
    #[arg(long, default_value = "tuples")]
    method: String,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    eval_scale: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Override the config's output path.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    eval_scale: f64,
    #[arg(long)]
    no_timings: bool,
}

enum Outcome {
    Done,
    GuardTripped,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::UnknownAlgorithm(_) => 1,
        Error::GuardExceeded { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.cmd {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::GuardTripped) => {
            eprintln!("warning: tuple guard tripped; results used a clamped sample");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn generate(a: GenerateArgs) -> Result<Outcome, Error> {
    let g = generate_power_law(a.nodes, a.avg_deg, a.exponent, a.seed)?;
    save_edge_list(&g, &a.output)?;
    let isolated = (0..g.node_count() as u32)
        .filter(|&v| g.out_degree(v) + g.in_degree(v) == 0)
        .count();
    eprintln!("wrote {} edges to {}", g.edge_count(), a.output.display());
    if isolated > 0 {
        eprintln!("note: {isolated} isolated nodes have no edge line and will not be loaded back");
    }
    Ok(Outcome::Done)
}

fn load(a: &GraphArgs) -> Result<(Graph, NodeSet), Error> {
    let g = load_edge_list(&a.graph, a.model)?;
    let rumor = rumor_by_degree(&g, a.rumor_count, a.degree)?;
    Ok((g, rumor))
}

fn eval_method(
    method: &str,
    count: Option<usize>,
    scale: f64,
) -> Result<Option<EvalMethod>, Error> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::InvalidParameter(
            "--eval-scale must be positive".into(),
        ));
    }
    if method.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    Ok(Some(EvalMethod::parse(method, count)?.scaled(scale)))
}

fn run(a: RunArgs) -> Result<Outcome, Error> {
    let (g, rumor) = load(&a.graph)?;
    let big_n = if a.big_n == "n" {
        None
    } else {
        Some(
            a.big_n
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad --bigN `{}`", a.big_n)))?,
        )
    };
    let opts = AlgoOptions {
        rbr: RbrParams {
            k: a.k,
            delta1: a.delta1,
            delta2: a.delta2,
            delta3: a.delta3,
            big_n,
            max_tuples: a.max_tuples,
        },
        greedy_sims: a.sims,
    };
    let method = eval_method(&a.eval.eval, a.eval.eval_count, a.eval.eval_scale)?;
    let selector = Registry::default().create(&a.algo, &opts)?;
    let ctx = SelectionContext {
        graph: &g,
        rumor: &rumor,
        k: a.k,
        master_seed: a.seed,
    };
    let started = std::time::Instant::now();
    let sel = selector.select(&ctx)?;
    let wall_ms = if a.no_timings {
        0.0
    } else {
        started.elapsed().as_secs_f64() * 1e3
    };

    let mut out = String::new();
    out.push_str(&format!("algo={}\n", selector.name()));
    out.push_str(&format!(
        "rumor_seeds={}\n",
        format_seed_labels(&g, rumor.as_slice()).replace(' ', ",")
    ));
    match &sel.report {
        Some(rep) => out.push_str(&rep.to_key_values(|v| g.label(v), !a.no_timings)),
        None => out.push_str(&format!(
            "k={}\nseeds={}\n",
            a.k,
            format_seed_labels(&g, &sel.seeds).replace(' ', ",")
        )),
    }
    out.push_str(&format!("wall_ms={:.3}\n", wall_ms));
    let est = match method {
        Some(m) => {
            let est = Evaluator::new(&g, &rumor, m, a.seed)?.evaluate(&sel.seeds)?;
            out.push_str(&format!(
                "f_estimate={:.6}\nf_stderr={:.6}\neval_samples={}\n",
                est.mean, est.stderr, est.samples
            ));
            Some(est)
        }
        None => None,
    };
    print!("{out}");

    if let Some(p) = &a.seeds_out {
        std::fs::write(p, format_seed_labels(&g, &sel.seeds) + "\n")?;
    }
    if let Some(p) = &a.csv {
        let row = CsvRow {
            dataset: a.name.clone().unwrap_or_else(|| stem(&a.graph.graph)),
            model: a.graph.model.label(),
            algo: selector.name().to_string(),
            k: a.k,
            f_estimate: est.map_or(f64::NAN, |e| e.mean),
            f_stderr: est.map_or(f64::NAN, |e| e.stderr),
            tuples_used: sel.tuples_used,
            wall_ms,
            master_seed: a.seed,
        };
        append_row(p, &row)?;
    }
    let tripped = sel.report.as_ref().is_some_and(|r| r.guard_tripped());
    Ok(if tripped {
        Outcome::GuardTripped
    } else {
        Outcome::Done
    })
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn append_row(path: &Path, row: &CsvRow) -> Result<(), Error> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(f, "{CSV_HEADER}")?;
    }
    writeln!(f, "{}", row.to_line())?;
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<Outcome, Error> {
    let (g, rumor) = load(&a.graph)?;
    let text = std::fs::read_to_string(&a.seeds)?;
    let labels = match &a.cell {
        None => text,
        Some(cell) => pick_cell(&text, cell, &a.seeds)?,
    };
    let seeds = parse_seed_labels(&labels, &a.seeds, &g)?;
    let method = eval_method(&a.method, a.count, a.eval_scale)?
        .ok_or_else(|| Error::InvalidParameter("evaluate needs a method".into()))?;
    let est = Evaluator::new(&g, &rumor, method, a.seed)?.evaluate(&seeds)?;
    println!(
        "f_estimate={:.6}\nf_stderr={:.6}\nsamples={}",
        est.mean, est.stderr, est.samples
    );
    Ok(Outcome::Done)
}

/// The label part of the first seeds-file line matching `algo:k[:tuples]`.
fn pick_cell(text: &str, cell: &str, path: &Path) -> Result<String, Error> {
    let want: Vec<&str> = cell.split(':').collect();
    if !(2..=3).contains(&want.len()) {
        return Err(Error::InvalidParameter(format!(
            "bad --cell `{cell}`; expected ALGO:K[:TUPLES]"
        )));
    }
    for line in text.lines() {
        let fields: Vec<&str> = line.splitn(4, ' ').collect();
        if fields.len() >= 3 && fields[..want.len()] == want[..] {
            return Ok(fields.get(3).copied().unwrap_or("").to_string());
        }
    }
    Err(Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("no line for cell {cell}"),
    })
}

fn experiment(a: ExperimentArgs) -> Result<Outcome, Error> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(o) = a.output {
        cfg.output = o;
    }
    let out = run_and_write(
        &cfg,
        RunSwitches {
            eval_scale: a.eval_scale,
            timings: !a.no_timings,
        },
    )?;
    eprintln!(
        "wrote {} rows to {} and seeds to {}",
        out.rows.len(),
        cfg.output.display(),
        seeds_path(&cfg.output).display()
    );
    Ok(if out.guard_tripped {
        Outcome::GuardTripped
    } else {
        Outcome::Done
    })
}
