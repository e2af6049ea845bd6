//! Scenario sampling, the benchmark matrix and its CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeId, RoadGraph, TravelTimeMatrix};
use crate::satisfaction::{
    EconParams, PassengerProfile, ProxyKind, ProxyObjective, SatisfactionModel,
};
use crate::solvers::{
    evaluate_assignment, optimal_assign, simsat, Assignment, InsertionRule, Instance, Passenger,
    PassengerId, SimsatConfig, DEFAULT_EXACT_LIMIT,
};

pub const RESULTS_HEADER: &str = "algorithm,n,sample,avg_sat,total_cost,vehicles,runtime_ms";
pub const AGGREGATE_HEADER: &str = "algorithm,n,mean_sat,stderr,mean_cost";

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub origin: NodeId,
    pub passengers: Vec<Passenger>,
    pub seed: u64,
}

impl Scenario {
    /// Origin first, then the distinct destinations.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut t = vec![self.origin];
        t.extend(self.passengers.iter().map(|p| p.destination));
        t
    }
}

/// Draws `n` passengers with destinations uniform over all vertices and
/// profiles from the survey marginals.
pub fn sample_scenario(graph: &RoadGraph, n: usize, seed: u64) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::input("a scenario needs at least one passenger"));
    }
    if n > u32::MAX as usize {
        return Err(Error::input("too many passengers"));
    }
    if !graph.is_connected() {
        return Err(Error::Connectivity(
            "scenario graph has vertices unreachable from the origin".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = graph.nodes();
    let passengers = (0..n)
        .map(|i| {
            let destination = nodes[rng.random_range(0..nodes.len())].id;
            Passenger {
                id: PassengerId(i as u32),
                destination,
                profile: PassengerProfile::sample(&mut rng),
            }
        })
        .collect();
    Ok(Scenario {
        origin: graph.origin(),
        passengers,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    OptimalFull,
    SimsatFull,
    OptimalCost,
    OptimalTime,
    OptimalGain,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::OptimalFull,
        Algorithm::SimsatFull,
        Algorithm::OptimalCost,
        Algorithm::OptimalTime,
        Algorithm::OptimalGain,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::OptimalFull => "optimal_full",
            Algorithm::SimsatFull => "simsat_full",
            Algorithm::OptimalCost => "optimal_cost",
            Algorithm::OptimalTime => "optimal_time",
            Algorithm::OptimalGain => "optimal_gain",
        }
    }

    fn proxy(self) -> Option<ProxyKind> {
        match self {
            Algorithm::OptimalCost => Some(ProxyKind::CostOnly),
            Algorithm::OptimalTime => Some(ProxyKind::TimeOnly),
            Algorithm::OptimalGain => Some(ProxyKind::Gain),
            _ => None,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::input(format!("unknown algorithm tag {s:?}")))
    }
}

/// Runs one algorithm on one instance and returns its assignment. Solvers
/// other than Simsat may fail when the instance exceeds `exact_limit`.
pub fn run_algorithm<M: SatisfactionModel + ?Sized>(
    algorithm: Algorithm,
    instance: &Instance<'_>,
    full_model: &M,
    exact_limit: usize,
    simsat_config: &SimsatConfig,
) -> Result<Assignment> {
    match (algorithm, algorithm.proxy()) {
        (Algorithm::SimsatFull, _) => Ok(simsat(instance, full_model, simsat_config)),
        (_, Some(kind)) => {
            let proxy = ProxyObjective::new(kind, *instance.params());
            optimal_assign(instance, &proxy, exact_limit)
        }
        _ => optimal_assign(instance, full_model, exact_limit),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub params: EconParams,
    pub exact_limit: usize,
    /// Simsat restarts; `None` is n².
    pub restarts: Option<usize>,
    pub rule: InsertionRule,
    /// Wall-clock times make the CSV non-reproducible, so they are written
    /// as 0 unless asked for.
    pub record_runtime: bool,
    pub parallel: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            n_values: (6..=10).collect(),
            samples: 100,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 0,
            params: EconParams::default(),
            exact_limit: DEFAULT_EXACT_LIMIT,
            restarts: None,
            rule: InsertionRule::Baseline,
            record_runtime: false,
            parallel: true,
        }
    }
}

/// Numeric outcome of one run; absent when the algorithm was skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub avg_sat: f64,
    pub total_cost: f64,
    pub vehicles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub sample: usize,
    pub metrics: Option<RunMetrics>,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkResult {
    pub rows: Vec<BenchmarkRow>,
}

/// Derives an independent seed for each (n, sample) cell.
pub fn sample_seed(master: u64, n: usize, sample: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ n as u64) ^ sample as u64)
}

fn run_cell<M: SatisfactionModel + ?Sized>(
    graph: &RoadGraph,
    model: &M,
    config: &BenchmarkConfig,
    n: usize,
    sample: usize,
) -> Result<Vec<BenchmarkRow>> {
    let seed = sample_seed(config.seed, n, sample);
    let scenario = sample_scenario(graph, n, seed)?;
    let matrix = TravelTimeMatrix::build(graph, &scenario.terminals())?;
    let instance = Instance::new(
        &matrix,
        scenario.origin,
        &scenario.passengers,
        config.params,
    )?;
    let simsat_config = SimsatConfig {
        restarts: config.restarts,
        seed,
        rule: config.rule,
        parallel: config.parallel,
    };
    let mut rows = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let start = Instant::now();
        let metrics = match run_algorithm(
            algorithm,
            &instance,
            model,
            config.exact_limit,
            &simsat_config,
        ) {
            Ok(a) => Some(RunMetrics {
                avg_sat: evaluate_assignment(&instance, &a, model)?,
                total_cost: a.total_cost(),
                vehicles: a.vehicle_count(),
            }),
            Err(Error::Capacity { .. }) => None,
            Err(e) => return Err(e),
        };
        let runtime_ms = if config.record_runtime {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        rows.push(BenchmarkRow {
            algorithm,
            n,
            sample,
            metrics,
            runtime_ms,
        });
    }
    Ok(rows)
}

/// Runs every configured algorithm on `samples` scenarios for each n and
/// scores all of them with `model`. Rows come out ordered by
/// (n, sample, algorithm) whether or not cells run in parallel.
pub fn run_benchmark<M: SatisfactionModel + ?Sized>(
    graph: &RoadGraph,
    model: &M,
    config: &BenchmarkConfig,
) -> Result<BenchmarkResult> {
    config.params.validate()?;
    if config.n_values.is_empty() || config.samples == 0 || config.algorithms.is_empty() {
        return Err(Error::input(
            "benchmark needs n values, samples and algorithms",
        ));
    }
    if config.n_values.contains(&0) {
        return Err(Error::input("n values must be positive"));
    }
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let config = BenchmarkConfig {
        algorithms,
        ..config.clone()
    };
    let cells: Vec<(usize, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.samples).map(move |s| (n, s)))
        .collect();
    let per_cell: Vec<Vec<BenchmarkRow>> = if config.parallel {
        cells
            .par_iter()
            .map(|&(n, s)| run_cell(graph, model, &config, n, s))
            .collect::<Result<_>>()?
    } else {
        cells
            .iter()
            .map(|&(n, s)| run_cell(graph, model, &config, n, s))
            .collect::<Result<_>>()?
    };
    let mut rows: Vec<BenchmarkRow> = per_cell.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.sample, r.algorithm));
    Ok(BenchmarkResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub n: usize,
    /// Number of non-skipped rows behind the means.
    pub count: usize,
    pub mean_sat: Option<f64>,
    pub stderr: Option<f64>,
    pub mean_cost: Option<f64>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn parse_opt<T: FromStr>(field: &str, line: usize, what: &str) -> Result<Option<T>> {
    if field == "NA" {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::parse(line, format!("bad {what} {field:?}")))
}

impl BenchmarkResult {
    /// Mean and standard error of satisfaction plus mean cost per
    /// (algorithm, n), ordered by algorithm then n.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(Algorithm, usize)> =
            self.rows.iter().map(|r| (r.algorithm, r.n)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(algorithm, n)| {
                let ms: Vec<RunMetrics> = self
                    .rows
                    .iter()
                    .filter(|r| r.algorithm == algorithm && r.n == n)
                    .filter_map(|r| r.metrics)
                    .collect();
                let count = ms.len();
                if count == 0 {
                    return AggregateRow {
                        algorithm,
                        n,
                        count,
                        mean_sat: None,
                        stderr: None,
                        mean_cost: None,
                    };
                }
                let k = count as f64;
                let mean_sat = ms.iter().map(|m| m.avg_sat).sum::<f64>() / k;
                let mean_cost = ms.iter().map(|m| m.total_cost).sum::<f64>() / k;
                let stderr = if count > 1 {
                    let var = ms
                        .iter()
                        .map(|m| (m.avg_sat - mean_sat).powi(2))
                        .sum::<f64>()
                        / (k - 1.0);
                    (var / k).sqrt()
                } else {
                    0.0
                };
                AggregateRow {
                    algorithm,
                    n,
                    count,
                    mean_sat: Some(mean_sat),
                    stderr: Some(stderr),
                    mean_cost: Some(mean_cost),
                }
            })
            .collect()
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let m = r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.algorithm.tag(),
                r.n,
                r.sample,
                fmt_opt(m.map(|m| m.avg_sat)),
                fmt_opt(m.map(|m| m.total_cost)),
                m.map_or_else(|| "NA".to_string(), |m| m.vehicles.to_string()),
                r.runtime_ms
            );
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(AGGREGATE_HEADER);
        out.push('\n');
        for a in self.aggregate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                a.algorithm.tag(),
                a.n,
                fmt_opt(a.mean_sat),
                fmt_opt(a.stderr),
                fmt_opt(a.mean_cost)
            );
        }
        out
    }

    /// Reads a results CSV written by [`BenchmarkResult::results_csv`].
    pub fn parse_results_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == RESULTS_HEADER => {}
            _ => {
                return Err(Error::parse(
                    1,
                    format!("expected header {RESULTS_HEADER:?}"),
                ))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse(line_no, "expected 7 fields"));
            }
            let algorithm: Algorithm = f[0]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("unknown algorithm {:?}", f[0])))?;
            let n = f[1].parse().map_err(|_| Error::parse(line_no, "bad n"))?;
            let sample = f[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad sample"))?;
            let avg_sat: Option<f64> = parse_opt(f[3], line_no, "avg_sat")?;
            let total_cost: Option<f64> = parse_opt(f[4], line_no, "total_cost")?;
            let vehicles: Option<usize> = parse_opt(f[5], line_no, "vehicles")?;
            let runtime_ms = f[6]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad runtime_ms"))?;
            let metrics = match (avg_sat, total_cost, vehicles) {
                (Some(avg_sat), Some(total_cost), Some(vehicles)) => Some(RunMetrics {
                    avg_sat,
                    total_cost,
                    vehicles,
                }),
                (None, None, None) => None,
                _ => return Err(Error::parse(line_no, "NA must cover all metric fields")),
            };
            rows.push(BenchmarkRow {
                algorithm,
                n,
                sample,
                metrics,
                runtime_ms,
            });
        }
        Ok(BenchmarkResult { rows })
    }

    /// Minimal SVG line chart of mean satisfaction against n.
    pub fn chart_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 50.0;
        const COLORS: [&str; 5] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];
        let agg = self.aggregate();
        let ns: Vec<usize> = agg.iter().map(|a| a.n).collect();
        let (lo, hi) = (
            ns.iter().copied().min().unwrap_or(0) as f64,
            ns.iter().copied().max().unwrap_or(1) as f64,
        );
        let x = |n: usize| PAD + (n as f64 - lo) / (hi - lo).max(1.0) * (W - 2.0 * PAD);
        let y = |s: f64| H - PAD - (s - 1.0) / 6.0 * (H - 2.0 * PAD);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">"#
        );
        let _ = writeln!(
            out,
            r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        );
        for (k, alg) in Algorithm::ALL.iter().enumerate() {
            let pts: Vec<String> = agg
                .iter()
                .filter(|a| a.algorithm == *alg)
                .filter_map(|a| a.mean_sat.map(|s| format!("{:.1},{:.1}", x(a.n), y(s))))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" points="{}"/><text x="{}" y="{}" font-size="12" fill="{}">{}</text>"#,
                COLORS[k],
                pts.join(" "),
                W - PAD - 100.0,
                PAD + 14.0 * k as f64,
                COLORS[k],
                alg.tag()
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Writes `results.csv` and `aggregate.csv` (and `chart.svg` if asked) into
/// `dir`, creating it if needed.
pub fn write_report(result: &BenchmarkResult, dir: impl AsRef<Path>, chart: bool) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::input("cannot report an empty benchmark result"));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), result.results_csv())?;
    fs::write(dir.join("aggregate.csv"), result.aggregate_csv())?;
    if chart {
        fs::write(dir.join("chart.svg"), result.chart_svg())?;
    }
    Ok(())
}
