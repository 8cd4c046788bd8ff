//! Experiment sweeps: configuration, independent evaluation and CSV output.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `name` | dataset label in the CSV | file stem or `power-law` |
//! | `graph` | edge-list path, relative to the config file | |
//! | `generate.nodes`, `generate.avg_degree`, `generate.exponent`, `generate.seed` | power-law generator, used when `graph` is absent | -, 10.4, 2.5, 1 |
//! | `model` | `cp`, `cp:<p>`, `wc` or `file` | `cp` |
//! | `rumor_seeds` | number of top-degree rumor seeds | 20 |
//! | `degree` | `out`, `in` or `total` | `out` |
//! | `k` | list (`1,5,10`) or range (`1..20`) | `1..20` |
//! | `algorithms` | comma list of registry names | `rbr,proximity,random,unblocking` |
//! | `eval` | `tuples` or `mc` | `tuples` |
//! | `eval_count` | evaluation tuples or trials | 1000000 / 10000 |
//! | `master_seed` | | 1 |
//! | `output` | CSV path, relative to the config file | required |
//! | `greedy_sims`, `delta1`, `delta2`, `delta3`, `big_n`, `max_tuples` | selector tunables | |
//! | `budgets` | explicit tuple counts; switches to budget mode | |
//!
//! In budget mode every `(k, l)` pair runs the tuple selector with `l`
//! tuples and no estimation phase; `algorithms` is ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::diffusion::{estimate_f_parallel, Estimate};
use crate::error::{Error, Result};
use crate::graph::{
    degree_top_k, generate_power_law, load_edge_list, reweight, DegreeKind, Graph, NodeId, NodeSet,
    WeightingModel,
};
use crate::rbr::run_with_budget;
use crate::rng::domain;
use crate::rtuple::SampleSet;
use crate::strategy::{AlgoOptions, Registry, SelectionContext};

pub const CSV_HEADER: &str =
    "dataset,model,algo,k,f_estimate,f_stderr,tuples_used,wall_ms,master_seed";

/// Formats `x` with six significant digits, without exponent and without
/// trailing zeros.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            x.to_string()
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = DIGITS - 1 - magnitude;
    let s = if decimals > 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub dataset: String,
    pub model: String,
    pub algo: String,
    pub k: usize,
    pub f_estimate: f64,
    pub f_stderr: f64,
    pub tuples_used: usize,
    pub wall_ms: f64,
    pub master_seed: u64,
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&self.dataset),
            csv_field(&self.model),
            csv_field(&self.algo),
            self.k,
            format_sig(self.f_estimate),
            format_sig(self.f_stderr),
            self.tuples_used,
            format_sig(self.wall_ms),
            self.master_seed
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// How seed sets are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    /// `n · F(S, R) / l` over this many fresh tuples.
    Tuples(usize),
    /// Forward simulations.
    MonteCarlo(usize),
}

impl EvalMethod {
    pub fn parse(method: &str, count: Option<usize>) -> Result<Self> {
        let m = match method.trim().to_ascii_lowercase().as_str() {
            "tuples" | "rtuples" => EvalMethod::Tuples(count.unwrap_or(1_000_000)),
            "mc" | "monte-carlo" => EvalMethod::MonteCarlo(count.unwrap_or(10_000)),
            other => return Err(Error::param(format!("unknown evaluation method `{other}`"))),
        };
        if m.count() == 0 {
            return Err(Error::param("evaluation count must be at least 1"));
        }
        Ok(m)
    }

    pub fn count(&self) -> usize {
        match *self {
            EvalMethod::Tuples(c) | EvalMethod::MonteCarlo(c) => c,
        }
    }

    /// Multiplies the count by `scale`, keeping at least one sample.
    pub fn scaled(self, scale: f64) -> Self {
        let c = ((self.count() as f64 * scale).round() as usize).max(1);
        match self {
            EvalMethod::Tuples(_) => EvalMethod::Tuples(c),
            EvalMethod::MonteCarlo(_) => EvalMethod::MonteCarlo(c),
        }
    }
}

/// Scores seed sets on samples independent of every selector: tuples come
/// from the evaluation stream domain and simulations from the Monte Carlo
/// domain. One evaluator scores all cells of an experiment on the same
/// samples.
pub struct Evaluator<'g> {
    graph: &'g Graph,
    rumor: NodeSet,
    method: EvalMethod,
    master_seed: u64,
    tuples: Option<SampleSet>,
}

impl<'g> Evaluator<'g> {
    pub fn new(
        graph: &'g Graph,
        rumor: &NodeSet,
        method: EvalMethod,
        master_seed: u64,
    ) -> Result<Self> {
        if method.count() == 0 {
            return Err(Error::param("evaluation count must be at least 1"));
        }
        let tuples = match method {
            EvalMethod::Tuples(l) => Some(SampleSet::generate(
                graph,
                rumor,
                l,
                master_seed,
                domain::EVALUATION,
            )?),
            EvalMethod::MonteCarlo(_) => None,
        };
        Ok(Evaluator {
            graph,
            rumor: rumor.clone(),
            method,
            master_seed,
            tuples,
        })
    }

    pub fn method(&self) -> EvalMethod {
        self.method
    }

    pub fn evaluate(&self, seeds: &[NodeId]) -> Result<Estimate> {
        let s = crate::baselines::check_disjoint(self.graph, &self.rumor, seeds)?;
        match (&self.tuples, self.method) {
            (Some(set), _) => Ok(set.estimate(&s)),
            (None, EvalMethod::MonteCarlo(t)) => {
                estimate_f_parallel(self.graph, &self.rumor, &s, t, self.master_seed)
            }
            (None, EvalMethod::Tuples(_)) => unreachable!("tuple evaluator always holds a sample"),
        }
    }
}

/// Top-degree rumor seeds.
pub fn rumor_by_degree(g: &Graph, count: usize, kind: DegreeKind) -> Result<NodeSet> {
    if count == 0 {
        return Err(Error::param("at least one rumor seed is required"));
    }
    if count >= g.node_count() {
        return Err(Error::param(format!(
            "{count} rumor seeds leave no candidates among {} nodes",
            g.node_count()
        )));
    }
    NodeSet::new(g.node_count(), degree_top_k(g, count, kind)?)
}

/// Reads whitespace-separated node labels; `#` starts a comment.
pub fn parse_seed_labels(text: &str, path: &Path, g: &Graph) -> Result<Vec<NodeId>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split([' ', '\t', ',']).filter(|t| !t.is_empty()) {
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let label: u64 = tok
                .parse()
                .map_err(|_| err(format!("bad node label `{tok}`")))?;
            let v = g
                .node_of_label(label)
                .ok_or_else(|| err(format!("unknown node label {label}")))?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn format_seed_labels(g: &Graph, seeds: &[NodeId]) -> String {
    let labels: Vec<String> = seeds.iter().map(|&v| g.label(v).to_string()).collect();
    labels.join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Generate {
        nodes: usize,
        avg_degree: f64,
        exponent: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: GraphSource,
    pub model: WeightingModel,
    pub rumor_seeds: usize,
    pub degree: DegreeKind,
    pub ks: Vec<usize>,
    pub algorithms: Vec<String>,
    pub eval: EvalMethod,
    pub master_seed: u64,
    pub output: PathBuf,
    pub options: AlgoOptions,
    /// Set in budget mode.
    pub budgets: Option<Vec<usize>>,
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list item `{s}`")))
        .collect()
}

fn parse_ks(v: &str) -> std::result::Result<Vec<usize>, String> {
    if let Some((a, b)) = v.split_once("..") {
        let lo: usize = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start `{a}`"))?;
        let hi: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad range end `{b}`"))?;
        if lo > hi {
            return Err(format!("empty range {v}"));
        }
        return Ok((lo..=hi).collect());
    }
    parse_list(v)
}

impl ExperimentConfig {
    /// Parses config text. Relative paths are resolved against `base`.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut graph = None;
        let mut gen_nodes = None;
        let mut gen_avg = 10.4;
        let mut gen_exp = 2.5;
        let mut gen_seed = 1u64;
        let mut name = None;
        let mut model = WeightingModel::Constant(0.1);
        let mut rumor_seeds = 20;
        let mut degree = DegreeKind::Out;
        let mut ks: Vec<usize> = (1..=20).collect();
        let mut algorithms: Vec<String> = ["rbr", "proximity", "random", "unblocking"]
            .map(String::from)
            .to_vec();
        let mut eval_method = "tuples".to_string();
        let mut eval_count = None;
        let mut master_seed = 1u64;
        let mut output = None;
        let mut options = AlgoOptions::default();
        let mut budgets = None;

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad number `{v}`"))
            }
            let res: std::result::Result<(), String> = (|| {
                match key {
                    "name" => name = Some(value.to_string()),
                    "graph" => graph = Some(base.join(value)),
                    "generate.nodes" => gen_nodes = Some(num(value)?),
                    "generate.avg_degree" => gen_avg = num(value)?,
                    "generate.exponent" => gen_exp = num(value)?,
                    "generate.seed" => gen_seed = num(value)?,
                    "model" => model = value.parse().map_err(|e: Error| e.to_string())?,
                    "rumor_seeds" => rumor_seeds = num(value)?,
                    "degree" => degree = value.parse().map_err(|e: Error| e.to_string())?,
                    "k" => ks = parse_ks(value)?,
                    "algorithms" => {
                        algorithms = value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect()
                    }
                    "eval" => eval_method = value.to_string(),
                    "eval_count" => eval_count = Some(num(value)?),
                    "master_seed" => master_seed = num(value)?,
                    "output" => output = Some(base.join(value)),
                    "greedy_sims" => options.greedy_sims = num(value)?,
                    "delta1" => options.rbr.delta1 = Some(num(value)?),
                    "delta2" => options.rbr.delta2 = num(value)?,
                    "delta3" => options.rbr.delta3 = num(value)?,
                    "big_n" => {
                        options.rbr.big_n = if value == "n" {
                            None
                        } else {
                            Some(num(value)?)
                        }
                    }
                    "max_tuples" => options.rbr.max_tuples = num(value)?,
                    "budgets" => budgets = Some(parse_list(value)?),
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            res.map_err(err)?;
        }

        let at_end = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            msg: msg.to_string(),
        };
        let source = match (graph, gen_nodes) {
            (Some(p), None) => GraphSource::File(p),
            (None, Some(nodes)) => GraphSource::Generate {
                nodes,
                avg_degree: gen_avg,
                exponent: gen_exp,
                seed: gen_seed,
            },
            (Some(_), Some(_)) => {
                return Err(at_end("set either `graph` or `generate.nodes`, not both"))
            }
            (None, None) => return Err(at_end("missing `graph` or `generate.nodes`")),
        };
        let output = output.ok_or_else(|| at_end("missing `output`"))?;
        if ks.is_empty() || ks.contains(&0) {
            return Err(at_end("k values must be at least 1"));
        }
        if algorithms.is_empty() {
            return Err(at_end("no algorithms listed"));
        }
        if let Some(b) = &budgets {
            if b.is_empty() || b.contains(&0) {
                return Err(at_end("budgets must be positive"));
            }
        }
        let eval =
            EvalMethod::parse(&eval_method, eval_count).map_err(|e| at_end(&e.to_string()))?;
        let name = name.unwrap_or_else(|| match &source {
            GraphSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            GraphSource::Generate { .. } => "power-law".into(),
        });
        Ok(ExperimentConfig {
            name,
            source,
            model,
            rumor_seeds,
            degree,
            ks,
            algorithms,
            eval,
            master_seed,
            output,
            options,
            budgets,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn build_graph(&self) -> Result<Graph> {
        match &self.source {
            GraphSource::File(p) => load_edge_list(p, self.model),
            GraphSource::Generate {
                nodes,
                avg_degree,
                exponent,
                seed,
            } => {
                if self.model == WeightingModel::FromFile {
                    return Err(Error::param("generated graphs need a cp or wc model"));
                }
                reweight(
                    &generate_power_law(*nodes, *avg_degree, *exponent, *seed)?,
                    self.model,
                )
            }
        }
    }
}

/// Run-time switches that are not part of the config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSwitches {
    pub eval_scale: f64,
    /// When false every wall time is written as 0 so outputs are
    /// byte-reproducible.
    pub timings: bool,
}

impl Default for RunSwitches {
    fn default() -> Self {
        RunSwitches {
            eval_scale: 1.0,
            timings: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<CsvRow>,
    /// CSV text with header, LF line endings.
    pub csv: String,
    /// One line per row: `algo k tuples_used label...`.
    pub seeds: String,
    pub guard_tripped: bool,
}

/// Path of the seeds file written next to a CSV.
pub fn seeds_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".seeds.txt");
    PathBuf::from(s)
}

/// Runs every cell in order; cells run one at a time so wall times are not
/// contended.
pub fn run_experiment(cfg: &ExperimentConfig, switches: RunSwitches) -> Result<ExperimentOutcome> {
    if switches.eval_scale.is_nan() || switches.eval_scale <= 0.0 {
        return Err(Error::param("eval scale must be positive"));
    }
    let g = cfg.build_graph()?;
    let rumor = rumor_by_degree(&g, cfg.rumor_seeds, cfg.degree)?;
    let evaluator = Evaluator::new(
        &g,
        &rumor,
        cfg.eval.scaled(switches.eval_scale),
        cfg.master_seed,
    )?;
    let model = cfg.model.label();
    let registry = Registry::default();

    let mut rows = Vec::new();
    let mut seeds_text = String::new();
    let mut guard_tripped = false;
    let mut record =
        |algo: &str, k: usize, seeds: &[NodeId], tuples: usize, ms: f64| -> Result<()> {
            let est = evaluator.evaluate(seeds)?;
            let _ = writeln!(
                seeds_text,
                "{algo} {k} {tuples} {}",
                format_seed_labels(&g, seeds).trim_end()
            );
            rows.push(CsvRow {
                dataset: cfg.name.clone(),
                model: model.clone(),
                algo: algo.to_string(),
                k,
                f_estimate: est.mean,
                f_stderr: est.stderr,
                tuples_used: tuples,
                wall_ms: if switches.timings { ms } else { 0.0 },
                master_seed: cfg.master_seed,
            });
            Ok(())
        };

    match &cfg.budgets {
        Some(budgets) => {
            for &l in budgets {
                for &k in &cfg.ks {
                    let started = Instant::now();
                    let rep = run_with_budget(&g, &rumor, k, l, cfg.master_seed)?;
                    let ms = started.elapsed().as_secs_f64() * 1e3;
                    record("rbr", k, &rep.seeds, l, ms)?;
                }
            }
        }
        None => {
            let selectors = cfg
                .algorithms
                .iter()
                .map(|a| registry.create(a, &cfg.options))
                .collect::<Result<Vec<_>>>()?;
            for &k in &cfg.ks {
                for sel in &selectors {
                    let ctx = SelectionContext {
                        graph: &g,
                        rumor: &rumor,
                        k,
                        master_seed: cfg.master_seed,
                    };
                    let started = Instant::now();
                    let out = sel.select(&ctx)?;
                    let ms = started.elapsed().as_secs_f64() * 1e3;
                    if out.report.as_ref().is_some_and(|r| r.guard_tripped()) {
                        guard_tripped = true;
                    }
                    record(sel.name(), k, &out.seeds, out.tuples_used, ms)?;
                }
            }
        }
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_line());
        csv.push('\n');
    }
    Ok(ExperimentOutcome {
        rows,
        csv,
        seeds: seeds_text,
        guard_tripped,
    })
}

/// Runs the experiment and writes the CSV and its seeds file.
pub fn run_and_write(cfg: &ExperimentConfig, switches: RunSwitches) -> Result<ExperimentOutcome> {
    let out = run_experiment(cfg, switches)?;
    std::fs::write(&cfg.output, &out.csv)?;
    std::fs::write(seeds_path(&cfg.output), &out.seeds)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::exact_f;
    use crate::graph::save_edge_list;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1834.5678), "1834.57");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(0.000123456789), "0.000123457");
        assert_eq!(format_sig(123_456_789.0), "123457000");
        assert_eq!(format_sig(-5.5), "-5.5");
        assert_eq!(format_sig(999_999.7), "1000000");
    }

    #[test]
    fn csv_quoting() {
        let row = CsvRow {
            dataset: "a,b".into(),
            model: "CP(0.1)".into(),
            algo: "rbr".into(),
            k: 3,
            f_estimate: 10.0,
            f_stderr: 0.5,
            tuples_used: 7,
            wall_ms: 1.25,
            master_seed: 9,
        };
        assert_eq!(row.to_line(), "\"a,b\",CP(0.1),rbr,3,10,0.5,7,1.25,9");
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let p = Path::new("exp.cfg");
        let err = ExperimentConfig::parse("# c\ngraph = g.txt\nbogus = 1\n", p, Path::new("."))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err =
            ExperimentConfig::parse("graph = g.txt\nk = 1,x\n", p, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = ExperimentConfig::parse("graph = g.txt\nno equals sign\n", p, Path::new("."))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(ExperimentConfig::parse("graph = g.txt\n", p, Path::new(".")).is_err());
    }

    #[test]
    fn config_defaults_and_ranges() {
        let cfg = ExperimentConfig::parse(
            "generate.nodes = 300\nk = 2..4\noutput = out.csv\nbig_n = n\n",
            Path::new("x.cfg"),
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(cfg.ks, vec![2, 3, 4]);
        assert_eq!(cfg.rumor_seeds, 20);
        assert_eq!(cfg.eval, EvalMethod::Tuples(1_000_000));
        assert_eq!(cfg.output, PathBuf::from("/tmp/out.csv"));
        assert_eq!(cfg.model, WeightingModel::Constant(0.1));
        assert_eq!(cfg.name, "power-law");
    }

    #[test]
    fn p_zero_graph_evaluates_exactly() {
        let g = Graph::from_edge_list(10, &[(0, 1, 0.0), (1, 2, 0.0)]).unwrap();
        let r = NodeSet::new(10, [0, 5]).unwrap();
        let mc = Evaluator::new(&g, &r, EvalMethod::MonteCarlo(100), 1).unwrap();
        assert_eq!(mc.evaluate(&[]).unwrap().mean, 8.0);
        assert!(mc.evaluate(&[0]).is_err());
    }

    #[test]
    fn both_evaluators_agree_with_exact() {
        let g = Graph::from_edge_list(
            6,
            &[
                (0, 1, 0.6),
                (1, 2, 0.5),
                (0, 3, 0.4),
                (3, 2, 0.7),
                (2, 4, 0.9),
                (4, 5, 0.3),
            ],
        )
        .unwrap();
        let r = NodeSet::new(6, [0]).unwrap();
        let s = [3];
        let exact = exact_f(&g, &r, &NodeSet::new(6, s).unwrap()).unwrap();
        for method in [EvalMethod::Tuples(200_000), EvalMethod::MonteCarlo(200_000)] {
            let est = Evaluator::new(&g, &r, method, 4)
                .unwrap()
                .evaluate(&s)
                .unwrap();
            assert!(
                (est.mean - exact).abs() <= 3.0 * est.stderr + 1e-9,
                "{method:?} {est:?} vs {exact}"
            );
        }
    }

    #[test]
    fn stderr_shrinks_with_sample_size() {
        let g = Graph::from_edge_list(
            6,
            &[
                (0, 1, 0.6),
                (1, 2, 0.5),
                (0, 3, 0.4),
                (3, 2, 0.7),
                (2, 4, 0.9),
            ],
        )
        .unwrap();
        let r = NodeSet::new(6, [0]).unwrap();
        let spread = |l: usize| {
            let vals: Vec<f64> = (0..40)
                .map(|s| {
                    Evaluator::new(&g, &r, EvalMethod::Tuples(l), s)
                        .unwrap()
                        .evaluate(&[])
                        .unwrap()
                        .mean
                })
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
        };
        let ratio = spread(8000) / spread(4000);
        // 40 replicates put the sample-sd ratio within about ±0.25 of 1/√2
        assert!((ratio - 0.5f64.sqrt()).abs() < 0.25, "{ratio}");
    }

    fn small_config(dir: &Path, extra: &str) -> ExperimentConfig {
        let g = reweight(
            &generate_power_law(300, 4.0, 2.5, 3).unwrap(),
            WeightingModel::Constant(0.1),
        )
        .unwrap();
        save_edge_list(&g, dir.join("g.txt")).unwrap();
        let text = format!(
            "graph = g.txt\nmodel = cp\nrumor_seeds = 5\neval_count = 20000\noutput = out.csv\n{extra}"
        );
        ExperimentConfig::parse(&text, &dir.join("exp.cfg"), dir).unwrap()
    }

    #[test]
    fn sweep_cardinality_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), "k = 1,5,10,20\nalgorithms = rbr,proximity,random,unblocking\ndelta2 = 0.3\ndelta3 = 0.3\n");
        let sw = RunSwitches {
            timings: false,
            ..RunSwitches::default()
        };
        let a = run_and_write(&cfg, sw).unwrap();
        assert_eq!(a.rows.len(), 16);
        assert_eq!(a.csv.lines().count(), 17);
        assert!(!a.csv.contains('\r'));
        let b = run_experiment(&cfg, sw).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(std::fs::read_to_string(&cfg.output).unwrap(), a.csv);
        assert_eq!(a.seeds.lines().count(), 16);
    }

    #[test]
    fn rows_recompute_from_seeds_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "k = 3\nalgorithms = rbr,proximity\ndelta2 = 0.3\ndelta3 = 0.3\n",
        );
        let out = run_and_write(&cfg, RunSwitches::default()).unwrap();
        let g = cfg.build_graph().unwrap();
        let rumor = rumor_by_degree(&g, 5, DegreeKind::Out).unwrap();
        let ev = Evaluator::new(&g, &rumor, cfg.eval, cfg.master_seed).unwrap();
        for (line, row) in out.seeds.lines().zip(&out.rows) {
            let labels = line.splitn(4, ' ').nth(3).unwrap_or("");
            let seeds = parse_seed_labels(labels, Path::new("s"), &g).unwrap();
            assert_eq!(
                format_sig(ev.evaluate(&seeds).unwrap().mean),
                format_sig(row.f_estimate)
            );
        }
    }

    #[test]
    fn budget_mode_trend() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), "k = 10\nbudgets = 20,200,2000,20000\n");
        let out = run_experiment(&cfg, RunSwitches::default()).unwrap();
        assert_eq!(out.rows.len(), 4);
        let f: Vec<f64> = out.rows.iter().map(|r| r.f_estimate).collect();
        let noise = 3.0 * out.rows[0].f_stderr * 2f64.sqrt();
        for w in f.windows(2) {
            assert!(w[1] >= w[0] - noise, "{f:?}");
        }
        assert!(f[3] > f[0], "{f:?}");
    }
}
