//! Command-line front end.
//!
//! Settings resolve as flag, then `--config` file, then default. The
//! `RIDESHARE_SEED` environment variable only replaces the default seed.
//! Exit status: 0 on success, 1 for bad input or usage, 2 for failures at
//! run time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    run_benchmark, sample_scenario, write_report, Algorithm, BenchmarkConfig, BenchmarkResult,
};
use crate::graph::{
    generate_grid_graph, generate_random_graph, read_graph, read_node_edge_files, write_graph,
    NodeId, RoadGraph, TravelTimeMatrix,
};
use crate::satisfaction::{
    generate_synthetic_dataset, train_mlp, Dataset, EconParams, Mlp, ProxyKind, ProxyObjective,
    TrainConfig,
};
use crate::solvers::{
    evaluate_assignment, optimal_assign, simsat, InsertionRule, Instance, SimsatConfig,
    DEFAULT_EXACT_LIMIT,
};

pub const SEED_ENV: &str = "RIDESHARE_SEED";

/// Examples used when a command needs a model and none was given.
const FALLBACK_EXAMPLES: usize = 5000;

#[derive(Debug, Parser)]
#[command(
    name = "rideshare",
    version,
    about = "Last-mile ridesharing with satisfaction-aware assignment"
)]
struct Cli {
    /// File of `key = value` lines supplying defaults for flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct SeedArg {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
struct ParamArgs {
    /// Weight of time in the inconvenience measure.
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of money in the inconvenience measure.
    #[arg(long)]
    beta: Option<f64>,
    /// Operating cost per minute of driving.
    #[arg(long)]
    cost_per_minute: Option<f64>,
    /// Speed in km per minute.
    #[arg(long)]
    speed: Option<f64>,
    /// Waiting time added to every ride, in minutes.
    #[arg(long)]
    wait: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic road graph.
    GenGraph {
        /// Vertices of a random geometric graph.
        #[arg(long)]
        vertices: Option<usize>,
        /// Jittered lattice instead, as WIDTHxHEIGHT.
        #[arg(long, conflicts_with = "vertices")]
        grid: Option<String>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Import a graph from node and edge CSV files.
    ImportGraph {
        /// CSV with `id,x_km,y_km`.
        #[arg(long)]
        nodes: PathBuf,
        /// CSV with `u,v,time_min`.
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        origin: u64,
        /// Keep only the K vertices closest to the origin.
        #[arg(long)]
        crop: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a labelled synthetic satisfaction dataset.
    GenData {
        #[arg(long)]
        examples: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train the satisfaction network.
    Train {
        /// Dataset file; a synthetic one is generated when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        examples: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Assign one sampled set of passengers to vehicles.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        /// Trained model; a default one is trained when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        /// simsat, optimal, cost, time or gain.
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        passengers: Option<usize>,
        /// Simsat restarts (default n squared).
        #[arg(long)]
        restarts: Option<usize>,
        /// Use the literal insertion rule in Simsat.
        #[arg(long)]
        literal: bool,
        #[arg(long)]
        exact_limit: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        params: ParamArgs,
        /// Write the assignment here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the five-algorithm comparison.
    Bench {
        /// Graph file; a random one is generated when absent.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Vertices of the generated graph.
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Passenger counts, e.g. `6..10`, `8` or `6,8,10`.
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        literal: bool,
        #[arg(long)]
        exact_limit: Option<usize>,
        /// Record wall-clock times (makes output non-reproducible).
        #[arg(long)]
        record_runtime: bool,
        /// Also write chart.svg.
        #[arg(long)]
        chart: bool,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        params: ParamArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute aggregates from a results CSV.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Output directory (defaults to the results file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        chart: bool,
    },
}

/// `key = value` settings from a config file.
#[derive(Debug, Default)]
struct FileConfig {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "alpha",
    "beta",
    "cost_per_minute",
    "speed",
    "wait",
    "vertices",
    "examples",
    "epochs",
    "patience",
    "learning_rate",
    "batch_size",
    "algorithm",
    "passengers",
    "restarts",
    "literal",
    "exact_limit",
    "n",
    "samples",
    "record_runtime",
    "chart",
];

impl FileConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            let key = k.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::parse(
                    i + 1,
                    format!("unknown setting `{}`", k.trim()),
                ));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&fs::read_to_string(p)?),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::input(format!("config: bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

/// Resolved settings, printed at the start of every run.
struct Resolved {
    lines: Vec<(String, String)>,
    file: FileConfig,
}

impl Resolved {
    fn pick<T: std::str::FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => self.file.get(key)?.unwrap_or(default),
        };
        self.lines.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    fn pick_opt<T: std::str::FromStr + ToString>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.get(key)?,
        };
        let shown = v
            .as_ref()
            .map_or_else(|| "default".to_string(), |x| x.to_string());
        self.lines.push((key.to_string(), shown));
        Ok(v)
    }

    fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let v = flag || self.file.flag(key)?;
        self.lines.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    fn seed(&mut self, flag: &SeedArg) -> Result<u64> {
        let default = match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Error::input(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
            })?,
            Err(_) => 0,
        };
        self.pick("seed", flag.seed, default)
    }

    fn params(&mut self, p: &ParamArgs) -> Result<EconParams> {
        let d = EconParams::default();
        let params = EconParams {
            alpha: self.pick("alpha", p.alpha, d.alpha)?,
            beta: self.pick("beta", p.beta, d.beta)?,
            cost_per_minute: self.pick("cost_per_minute", p.cost_per_minute, d.cost_per_minute)?,
            speed: self.pick("speed", p.speed, d.speed)?,
            wait_const: self.pick("wait", p.wait, d.wait_const)?,
        };
        params.validate()?;
        Ok(params)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn announce(&self, command: &str) {
        let mut s = format!("rideshare {command}:");
        for (k, v) in &self.lines {
            let _ = write!(s, " {k}={v}");
        }
        eprintln!("{s}");
    }
}

/// Parses `6..10` (inclusive), `6..=10`, `8` or `6,8,10`.
fn parse_n_values(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::input(format!("cannot read passenger counts from `{text}`"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if values.is_empty() || values.contains(&0) {
        return Err(bad());
    }
    Ok(values)
}

fn load_or_train_model(path: Option<&Path>, seed: u64, params: &EconParams) -> Result<Mlp> {
    match path {
        Some(p) => Mlp::load(p),
        None => {
            eprintln!("no --model given; training a default model on {FALLBACK_EXAMPLES} synthetic examples");
            let data = generate_synthetic_dataset(FALLBACK_EXAMPLES, params, seed)?;
            let (net, _) = train_mlp(
                &data,
                &TrainConfig {
                    seed,
                    ..Default::default()
                },
            )?;
            Ok(net)
        }
    }
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::input(format!("grid must look like WIDTHxHEIGHT, got `{text}`"));
    let (w, h) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn run(cli: Cli) -> Result<()> {
    let mut r = Resolved {
        lines: Vec::new(),
        file: FileConfig::load(cli.config.as_deref())?,
    };
    match cli.command {
        Command::GenGraph {
            vertices,
            grid,
            seed,
            output,
        } => {
            let seed = r.seed(&seed)?;
            let graph = match grid {
                Some(g) => {
                    let (w, h) = parse_grid(&g)?;
                    r.note("grid", g);
                    generate_grid_graph(w, h, seed)
                }
                None => {
                    let n = r.pick("vertices", vertices, 35)?;
                    if n == 0 {
                        return Err(Error::input("a graph needs at least one vertex"));
                    }
                    generate_random_graph(n, seed)
                }
            };
            r.announce("gen-graph");
            write_graph(&graph, &output)?;
            println!(
                "wrote {} vertices, {} edges to {}",
                graph.node_count(),
                graph.edge_count(),
                output.display()
            );
        }
        Command::ImportGraph {
            nodes,
            edges,
            origin,
            crop,
            output,
        } => {
            r.note("origin", origin);
            r.note("crop", crop.map_or("none".into(), |k| k.to_string()));
            r.announce("import-graph");
            let mut graph = read_node_edge_files(&nodes, &edges, NodeId(origin))?;
            if let Some(k) = crop {
                if k == 0 {
                    return Err(Error::input("--crop must be positive"));
                }
                graph = graph.crop_to_k_nearest(k);
            }
            write_graph(&graph, &output)?;
            println!(
                "wrote {} vertices, {} edges to {}",
                graph.node_count(),
                graph.edge_count(),
                output.display()
            );
        }
        Command::GenData {
            examples,
            seed,
            params,
            output,
        } => {
            let seed = r.seed(&seed)?;
            let params = r.params(&params)?;
            let n = r.pick("examples", examples, FALLBACK_EXAMPLES)?;
            r.announce("gen-data");
            let data = generate_synthetic_dataset(n, &params, seed)?;
            data.save(&output)?;
            println!("wrote {} examples to {}", data.len(), output.display());
        }
        Command::Train {
            data,
            examples,
            epochs,
            patience,
            learning_rate,
            batch_size,
            seed,
            params,
            output,
        } => {
            let seed = r.seed(&seed)?;
            let params = r.params(&params)?;
            let d = TrainConfig::default();
            let config = TrainConfig {
                max_epochs: r.pick("epochs", epochs, d.max_epochs)?,
                patience: r.pick("patience", patience, d.patience)?,
                learning_rate: r.pick("learning_rate", learning_rate, d.learning_rate)?,
                batch_size: r.pick("batch_size", batch_size, d.batch_size)?,
                seed,
                ..d
            };
            let dataset = match &data {
                Some(p) => {
                    r.note("data", p.display());
                    Dataset::load(p)?
                }
                None => {
                    let n = r.pick("examples", examples, FALLBACK_EXAMPLES)?;
                    generate_synthetic_dataset(n, &params, seed)?
                }
            };
            r.announce("train");
            let (net, report) = train_mlp(&dataset, &config)?;
            net.save(&output)?;
            println!(
                "train_rmse {:.4} val_rmse {:.4} test_rmse {:.4} epochs {} best_epoch {} early_stop {}",
                report.train_rmse,
                report.val_rmse,
                report.test_rmse,
                report.epochs_run,
                report.best_epoch,
                report.stopped_early
            );
        }
        Command::Solve {
            graph,
            model,
            algorithm,
            passengers,
            restarts,
            literal,
            exact_limit,
            seed,
            params,
            output,
        } => {
            let seed = r.seed(&seed)?;
            let params = r.params(&params)?;
            let algorithm = r.pick("algorithm", algorithm, "simsat".to_string())?;
            let n = r.pick("passengers", passengers, 8)?;
            let restarts = r.pick_opt("restarts", restarts)?;
            let literal = r.switch("literal", literal)?;
            let exact_limit = r.pick("exact_limit", exact_limit, DEFAULT_EXACT_LIMIT)?;
            r.note("graph", graph.display());
            r.announce("solve");

            let proxy = match algorithm.as_str() {
                "simsat" | "optimal" => None,
                "cost" => Some(ProxyKind::CostOnly),
                "time" => Some(ProxyKind::TimeOnly),
                "gain" => Some(ProxyKind::Gain),
                other => {
                    return Err(Error::input(format!(
                        "unknown algorithm `{other}` (expected simsat, optimal, cost, time or gain)"
                    )))
                }
            };
            let g = read_graph(&graph)?;
            let scenario = sample_scenario(&g, n, seed)?;
            if algorithm != "simsat" && n > exact_limit {
                return Err(Error::Capacity {
                    n,
                    limit: exact_limit,
                });
            }
            let net = load_or_train_model(model.as_deref(), seed, &params)?;
            let matrix = TravelTimeMatrix::build(&g, &scenario.terminals())?;
            let instance = Instance::new(&matrix, scenario.origin, &scenario.passengers, params)?;
            let assignment = match (algorithm.as_str(), proxy) {
                ("simsat", _) => simsat(
                    &instance,
                    &net,
                    &SimsatConfig {
                        restarts,
                        seed,
                        rule: if literal {
                            InsertionRule::Literal
                        } else {
                            InsertionRule::Baseline
                        },
                        parallel: true,
                    },
                ),
                (_, Some(kind)) => {
                    optimal_assign(&instance, &ProxyObjective::new(kind, params), exact_limit)?
                }
                _ => optimal_assign(&instance, &net, exact_limit)?,
            };
            let avg = evaluate_assignment(&instance, &assignment, &net)?;
            let text = instance.rescore(&assignment, &net)?.to_text(avg);
            match output {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Bench {
            graph,
            vertices,
            model,
            n,
            samples,
            restarts,
            literal,
            exact_limit,
            record_runtime,
            chart,
            seed,
            params,
            out,
        } => {
            let seed = r.seed(&seed)?;
            let params = r.params(&params)?;
            let n_text = r.pick("n", n, "6..10".to_string())?;
            let n_values = parse_n_values(&n_text)?;
            let samples = r.pick("samples", samples, 100)?;
            let restarts = r.pick_opt("restarts", restarts)?;
            let literal = r.switch("literal", literal)?;
            let exact_limit = r.pick("exact_limit", exact_limit, DEFAULT_EXACT_LIMIT)?;
            let record_runtime = r.switch("record_runtime", record_runtime)?;
            let chart = r.switch("chart", chart)?;
            let g: RoadGraph = match &graph {
                Some(p) => {
                    r.note("graph", p.display());
                    read_graph(p)?
                }
                None => {
                    let v = r.pick("vertices", vertices, 35)?;
                    if v == 0 {
                        return Err(Error::input("a graph needs at least one vertex"));
                    }
                    generate_random_graph(v, seed)
                }
            };
            r.announce("bench");
            let net = load_or_train_model(model.as_deref(), seed, &params)?;
            let config = BenchmarkConfig {
                n_values,
                samples,
                algorithms: Algorithm::ALL.to_vec(),
                seed,
                params,
                exact_limit,
                restarts,
                rule: if literal {
                    InsertionRule::Literal
                } else {
                    InsertionRule::Baseline
                },
                record_runtime,
                parallel: true,
            };
            let result = run_benchmark(&g, &net, &config)?;
            write_report(&result, &out, chart)?;
            print!("{}", result.aggregate_csv());
        }
        Command::Report {
            results,
            out,
            chart,
        } => {
            r.note("results", results.display());
            r.announce("report");
            let result = BenchmarkResult::parse_results_csv(&fs::read_to_string(&results)?)?;
            let dir = match out {
                Some(d) => d,
                None => results
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("aggregate.csv"), result.aggregate_csv())?;
            if chart {
                fs::write(dir.join("chart.svg"), result.chart_svg())?;
            }
            print!("{}", result.aggregate_csv());
        }
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_value_forms() {
        assert_eq!(parse_n_values("6..10").unwrap(), vec![6, 7, 8, 9, 10]);
        assert_eq!(parse_n_values("6..=7").unwrap(), vec![6, 7]);
        assert_eq!(parse_n_values("8").unwrap(), vec![8]);
        assert_eq!(parse_n_values("6,8").unwrap(), vec![6, 8]);
        for bad in ["", "10..6", "0", "a..b", "3,,4"] {
            assert!(parse_n_values(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_file_parsing() {
        let c = FileConfig::parse("# comment\nalpha = 0.5\n\nsamples=3\ncost-per-minute = 2\n")
            .unwrap();
        assert_eq!(c.get::<f64>("alpha").unwrap(), Some(0.5));
        assert_eq!(c.get::<usize>("samples").unwrap(), Some(3));
        assert_eq!(c.get::<f64>("cost_per_minute").unwrap(), Some(2.0));
        assert!(FileConfig::parse("bogus = 1").is_err());
        assert!(FileConfig::parse("alpha 1").is_err());
        assert!(c.get::<usize>("alpha").is_err());
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let mut r = Resolved {
            lines: Vec::new(),
            file: FileConfig::parse("alpha = 0.5\nbeta = 2").unwrap(),
        };
        let p = r
            .params(&ParamArgs {
                alpha: Some(0.7),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(p.alpha, 0.7);
        assert_eq!(p.beta, 2.0);
        assert_eq!(p.cost_per_minute, EconParams::default().cost_per_minute);
    }

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("20x30").unwrap(), (20, 30));
        assert!(parse_grid("20").is_err());
        assert!(parse_grid("0x3").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(dispatch(["rideshare", "frobnicate"]), 1);
        assert_eq!(dispatch(["rideshare", "gen-graph", "--bogus"]), 1);
        assert_eq!(dispatch(["rideshare", "--help"]), 0);
    }
}
