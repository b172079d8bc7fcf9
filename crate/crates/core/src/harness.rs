//! Experiment orchestration: parameter sweeps over scenario families,
//! replication across master seeds, aggregation, and CSV/plot emission.
//!
//! An experiment is a grid of independent cells: one (sweep value, algorithm,
//! seed) triple per cell. Cells run in parallel on the rayon pool; results
//! are reduced in a fixed order, so output files are byte-identical across
//! reruns regardless of thread count. Every emitted CSV row carries the full
//! provenance tuple (experiment, sweep value, algorithm, seed).

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostModel, ScenarioConfig};
use crate::plot::{Chart, Series};
use crate::simulator::{
    run_offloading, run_random_seeding, PeriodConfig, RunResult,
};
use crate::stochastic::RngStream;
use crate::supernetwork::{
    condense, verify_theorem1, PayoffTable, RuleSupernetwork, TheoremReport,
};

/// The figure analogue an experiment reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Single-scenario timelines plus the convergence-time distribution over
    /// seeds, per (population size, cost ratio) cell.
    Convergence,
    /// Offloading efficiency vs. population size, formation vs. seeding.
    EfficiencyVsN,
    /// Efficiency vs. the mean minimum inter-contact time.
    EfficiencyVsTau,
    /// Efficiency vs. the mean access-delay scale.
    EfficiencyVsLambda,
    /// Final per-user payoff distributions, formation vs. seeding.
    PayoffDistribution,
    /// Exhaustive small-scale verification of the stability theory.
    SupernetworkVerify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Convergence,
        ExperimentKind::EfficiencyVsN,
        ExperimentKind::EfficiencyVsTau,
        ExperimentKind::EfficiencyVsLambda,
        ExperimentKind::PayoffDistribution,
        ExperimentKind::SupernetworkVerify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::EfficiencyVsN => "efficiency-vs-n",
            ExperimentKind::EfficiencyVsTau => "efficiency-vs-tau",
            ExperimentKind::EfficiencyVsLambda => "efficiency-vs-lambda",
            ExperimentKind::PayoffDistribution => "payoff-distribution",
            ExperimentKind::SupernetworkVerify => "supernetwork-verify",
        }
    }

    /// What the swept values mean for this kind.
    pub fn sweep_parameter(self) -> &'static str {
        match self {
            ExperimentKind::Convergence | ExperimentKind::EfficiencyVsN => "n_users",
            ExperimentKind::EfficiencyVsTau => "contact_scale_mean",
            ExperimentKind::EfficiencyVsLambda => "access_scale_mean",
            ExperimentKind::PayoffDistribution => "n_users",
            ExperimentKind::SupernetworkVerify => "n_users",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One algorithm arm of a sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Algorithm {
    /// Selfish link formation at a given cellular-to-D2D cost ratio.
    NetworkFormation { cost_ratio: f64 },
    /// Centralized baseline pushing the item to `n_seeds` random users per
    /// round over the full contact network.
    RandomSeeding { n_seeds: usize },
}

impl Algorithm {
    /// Stable label used in CSV provenance columns and legends.
    pub fn label(&self) -> String {
        match self {
            Algorithm::NetworkFormation { cost_ratio } => {
                format!("network-formation-r{}", trim_float(*cost_ratio))
            }
            Algorithm::RandomSeeding { n_seeds } => format!("random-seeding-s{n_seeds}"),
        }
    }
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// A full experiment description; serializable to and from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Scenario family all cells are drawn from; sweeps override one field.
    pub base: ScenarioConfig,
    pub period: PeriodConfig,
    /// Swept values, interpreted per [`ExperimentKind::sweep_parameter`].
    pub sweep: Vec<f64>,
    /// Master seeds; each is one independent replication per cell.
    pub seeds: Vec<u64>,
    /// Cost ratios for the formation arms (cellular price per unit D2D price).
    pub cost_ratios: Vec<f64>,
    /// Seed counts for the random-seeding arms.
    pub seed_counts: Vec<usize>,
    /// Rounds simulated per random-seeding cell.
    pub seeding_rounds: usize,
    /// Bins of the convergence-time histogram.
    pub histogram_bins: usize,
    /// Bins of the payoff histogram.
    pub payoff_bins: usize,
    /// Random payoff tables per population size (supernetwork verify).
    pub tables_per_size: usize,
    /// Random dynamics trajectories per table (supernetwork verify).
    pub walks_per_table: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Convergence,
            base: ScenarioConfig::default(),
            period: PeriodConfig::default(),
            sweep: vec![20.0],
            seeds: (0..30).collect(),
            cost_ratios: vec![4.0],
            seed_counts: vec![0, 1, 2, 4, 8, 16],
            seeding_rounds: 400,
            histogram_bins: 20,
            payoff_bins: 15,
            tables_per_size: 1000,
            walks_per_table: 100,
        }
    }
}


impl ExperimentSpec {
    /// The stock experiment of each kind, mirroring the reference figures.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut spec = ExperimentSpec {
            kind,
            ..ExperimentSpec::default()
        };
        match kind {
            ExperimentKind::Convergence => {
                spec.sweep = vec![10.0, 20.0, 30.0];
                spec.cost_ratios = vec![4.0, 6.0];
            }
            ExperimentKind::EfficiencyVsN => {
                spec.sweep = vec![10.0, 20.0, 40.0, 80.0, 160.0];
                spec.cost_ratios = vec![4.0, 6.0];
                spec.period = PeriodConfig::for_efficiency();
            }
            ExperimentKind::EfficiencyVsTau => {
                spec.sweep = vec![7.5, 10.0, 12.5, 15.0, 17.5];
                spec.period = PeriodConfig::for_efficiency();
            }
            ExperimentKind::EfficiencyVsLambda => {
                spec.sweep = vec![20.0, 25.0, 30.0, 35.0, 40.0];
                spec.period = PeriodConfig::for_efficiency();
            }
            ExperimentKind::PayoffDistribution => {
                spec.sweep = vec![20.0];
                spec.seed_counts = vec![0];
            }
            ExperimentKind::SupernetworkVerify => {
                spec.sweep = vec![3.0, 4.0];
                spec.seeds = vec![0];
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep value list is empty".into()));
        }
        self.base.validate()?;
        self.period.validate()?;
        match self.kind {
            ExperimentKind::SupernetworkVerify => {
                for &v in &self.sweep {
                    let n = v as usize;
                    if n as f64 != v || n < 2 {
                        return Err(Error::InvalidConfig(format!(
                            "population size {v} must be an integer >= 2"
                        )));
                    }
                }
                if self.tables_per_size == 0 || self.walks_per_table == 0 {
                    return Err(Error::InvalidConfig(
                        "tables_per_size and walks_per_table must be positive".into(),
                    ));
                }
                return Ok(());
            }
            ExperimentKind::Convergence
            | ExperimentKind::EfficiencyVsN
            | ExperimentKind::PayoffDistribution => {
                for &v in &self.sweep {
                    let n = v as usize;
                    if n as f64 != v || n < 2 {
                        return Err(Error::InvalidConfig(format!(
                            "population size {v} must be an integer >= 2"
                        )));
                    }
                }
            }
            ExperimentKind::EfficiencyVsTau => {
                let w = self.base.contact_scale_range.1 - self.base.contact_scale_range.0;
                for &v in &self.sweep {
                    if v - w / 2.0 <= 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "contact-scale mean {v} leaves a non-positive lower bound"
                        )));
                    }
                }
            }
            ExperimentKind::EfficiencyVsLambda => {
                let w = self.base.access_scale_range.1 - self.base.access_scale_range.0;
                for &v in &self.sweep {
                    if v - w / 2.0 <= 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "access-scale mean {v} leaves a non-positive lower bound"
                        )));
                    }
                }
            }
        }
        if self.uses_formation() && self.cost_ratios.is_empty() {
            return Err(Error::InvalidConfig("cost ratio list is empty".into()));
        }
        for &r in &self.cost_ratios {
            if !(r > 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "cost ratio {r} must exceed 1 for D2D to be worthwhile"
                )));
            }
        }
        if self.uses_seeding() {
            if self.seed_counts.is_empty() {
                return Err(Error::InvalidConfig("seed count list is empty".into()));
            }
            if self.seeding_rounds == 0 {
                return Err(Error::InvalidConfig("seeding_rounds must be positive".into()));
            }
        }
        Ok(())
    }

    fn uses_formation(&self) -> bool {
        !matches!(self.kind, ExperimentKind::SupernetworkVerify)
    }

    fn uses_seeding(&self) -> bool {
        matches!(
            self.kind,
            ExperimentKind::EfficiencyVsN
                | ExperimentKind::EfficiencyVsTau
                | ExperimentKind::EfficiencyVsLambda
                | ExperimentKind::PayoffDistribution
        )
    }

    /// Algorithm arms run at every sweep value, in output order.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut algos: Vec<Algorithm> = self
            .cost_ratios
            .iter()
            .map(|&cost_ratio| Algorithm::NetworkFormation { cost_ratio })
            .collect();
        if self.uses_seeding() {
            algos.extend(
                self.seed_counts
                    .iter()
                    .map(|&n_seeds| Algorithm::RandomSeeding { n_seeds }),
            );
        }
        algos
    }

    /// Scenario config of one cell: the base with the sweep value and the
    /// algorithm's cost ratio applied, stamped with the cell's master seed.
    pub fn cell_config(&self, sweep_value: f64, algorithm: Algorithm, seed: u64) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        match self.kind {
            ExperimentKind::Convergence
            | ExperimentKind::EfficiencyVsN
            | ExperimentKind::PayoffDistribution
            | ExperimentKind::SupernetworkVerify => {
                cfg.n_users = sweep_value as usize;
            }
            ExperimentKind::EfficiencyVsTau => {
                let w = cfg.contact_scale_range.1 - cfg.contact_scale_range.0;
                cfg.contact_scale_range = (sweep_value - w / 2.0, sweep_value + w / 2.0);
            }
            ExperimentKind::EfficiencyVsLambda => {
                let w = cfg.access_scale_range.1 - cfg.access_scale_range.0;
                cfg.access_scale_range = (sweep_value - w / 2.0, sweep_value + w / 2.0);
            }
        }
        if let Algorithm::NetworkFormation { cost_ratio } = algorithm {
            cfg.costs = CostModel {
                cellular: cost_ratio * self.base.costs.d2d,
                d2d: self.base.costs.d2d,
            };
        }
        cfg.master_seed = seed;
        cfg
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExperimentSpec = toml::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// One completed sweep cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub run: RunResult,
}

impl CellResult {
    /// Fraction of users whose realized mean payoff is negative.
    pub fn negative_payoff_fraction(&self) -> f64 {
        let n = self.run.user_stats.len();
        if n == 0 {
            return 0.0;
        }
        self.run
            .user_stats
            .iter()
            .filter(|s| s.mean_payoff < 0.0)
            .count() as f64
            / n as f64
    }
}

/// A cell that failed, with enough provenance to rerun it alone.
#[derive(Clone, Debug)]
pub struct CellFailure {
    pub sweep_value: f64,
    pub algorithm: String,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cell (value={}, algorithm={}, seed={}) failed: {}",
            self.sweep_value, self.algorithm, self.seed, self.message
        )
    }
}

fn run_cell(
    spec: &ExperimentSpec,
    sweep_value: f64,
    algorithm: Algorithm,
    seed: u64,
) -> Result<CellResult> {
    let config = spec.cell_config(sweep_value, algorithm, seed);
    config.validate()?;
    let scenario = config.generate(&mut RngStream::new(seed, "scenario"))?;
    let run_rng = RngStream::new(seed, &format!("run/{}", algorithm.label()));
    let run = match algorithm {
        Algorithm::NetworkFormation { .. } => {
            run_offloading(&scenario, &spec.period, &config.costs, &run_rng)?
        }
        Algorithm::RandomSeeding { n_seeds } => run_random_seeding(
            &scenario,
            n_seeds.min(scenario.n_users()),
            spec.seeding_rounds,
            &config.costs,
            spec.period.relay_policy,
            spec.period.contact_model,
            &run_rng,
        )?,
    };
    Ok(CellResult {
        sweep_value,
        algorithm,
        seed,
        run,
    })
}

/// Runs every (sweep value, algorithm, seed) cell on the current rayon pool.
/// Cell order in the result is fixed regardless of thread count; failed
/// cells are collected, not fatal.
pub fn run_cells(spec: &ExperimentSpec) -> (Vec<CellResult>, Vec<CellFailure>) {
    let mut grid = Vec::new();
    for &sweep_value in &spec.sweep {
        for algorithm in spec.algorithms() {
            for &seed in &spec.seeds {
                grid.push((sweep_value, algorithm, seed));
            }
        }
    }
    let outcomes: Vec<std::result::Result<CellResult, CellFailure>> = grid
        .par_iter()
        .map(|&(sweep_value, algorithm, seed)| {
            run_cell(spec, sweep_value, algorithm, seed).map_err(|e| CellFailure {
                sweep_value,
                algorithm: algorithm.label(),
                seed,
                message: e.to_string(),
            })
        })
        .collect();
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => cells.push(c),
            Err(f) => failures.push(f),
        }
    }
    (cells, failures)
}

/// Mean and standard deviation across seeds for one (sweep value, algorithm)
/// group.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub n_runs: usize,
    pub mean_cellular_fraction: f64,
    pub sd_cellular_fraction: f64,
    pub mean_payoff: f64,
    pub sd_payoff: f64,
    pub mean_convergence_period: f64,
    pub mean_negative_fraction: f64,
    pub converged_fraction: f64,
}

impl Aggregate {
    pub fn mean_offloaded_fraction(&self) -> f64 {
        1.0 - self.mean_cellular_fraction
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Folds cells into per-(sweep value, algorithm) aggregates, ordered as the
/// spec enumerates them.
pub fn aggregate(spec: &ExperimentSpec, cells: &[CellResult]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &sweep_value in &spec.sweep {
        for algorithm in spec.algorithms() {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.sweep_value == sweep_value && c.algorithm == algorithm)
                .collect();
            if group.is_empty() {
                continue;
            }
            let cellular: Vec<f64> = group.iter().map(|c| c.run.cellular_fraction).collect();
            let payoff: Vec<f64> = group.iter().map(|c| c.run.mean_payoff).collect();
            let conv: Vec<f64> = group
                .iter()
                .map(|c| c.run.convergence_period as f64)
                .collect();
            let neg: Vec<f64> = group.iter().map(|c| c.negative_payoff_fraction()).collect();
            let (mean_cellular_fraction, sd_cellular_fraction) = mean_sd(&cellular);
            let (mean_payoff, sd_payoff) = mean_sd(&payoff);
            out.push(Aggregate {
                sweep_value,
                algorithm,
                n_runs: group.len(),
                mean_cellular_fraction,
                sd_cellular_fraction,
                mean_payoff,
                sd_payoff,
                mean_convergence_period: mean_sd(&conv).0,
                mean_negative_fraction: mean_sd(&neg).0,
                converged_fraction: group.iter().filter(|c| c.run.converged).count() as f64
                    / group.len() as f64,
            });
        }
    }
    out
}

/// The best random-seeding arm at one sweep value.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopePoint {
    pub sweep_value: f64,
    pub best_seed_count: usize,
    /// Lowest mean cellular fraction over the seeding arms.
    pub cellular_fraction: f64,
}

impl EnvelopePoint {
    pub fn offloaded_fraction(&self) -> f64 {
        1.0 - self.cellular_fraction
    }
}

/// Lower envelope of the random-seeding arms: per sweep value, the seed
/// count with the lowest mean cellular fraction.
pub fn seeding_envelope(aggregates: &[Aggregate]) -> Vec<EnvelopePoint> {
    let mut out: Vec<EnvelopePoint> = Vec::new();
    for a in aggregates {
        let Algorithm::RandomSeeding { n_seeds } = a.algorithm else {
            continue;
        };
        match out.iter_mut().find(|p| p.sweep_value == a.sweep_value) {
            Some(p) if a.mean_cellular_fraction < p.cellular_fraction => {
                p.best_seed_count = n_seeds;
                p.cellular_fraction = a.mean_cellular_fraction;
            }
            Some(_) => {}
            None => out.push(EnvelopePoint {
                sweep_value: a.sweep_value,
                best_seed_count: n_seeds,
                cellular_fraction: a.mean_cellular_fraction,
            }),
        }
    }
    out
}

/// Efficiency lost to selfishness: the best seeding offloaded fraction minus
/// the formation offloaded fraction. Zero when the inputs coincide.
pub fn price_of_anarchy(formation_offloaded: f64, envelope_offloaded: f64) -> f64 {
    envelope_offloaded - formation_offloaded
}

/// One bin of the convergence-time distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramBin {
    /// Inclusive lower period bound.
    pub lo: usize,
    /// Exclusive upper period bound (`lo` == `hi` marks the overflow bin).
    pub hi: usize,
    pub count: usize,
    pub probability: f64,
    pub overflow: bool,
}

/// Empirical distribution of convergence periods for one group of runs.
/// Non-converged runs land in a dedicated overflow bin. Bin width is
/// `ceil(max_periods / bins)`, at least 1.
pub fn convergence_time_histogram(
    cells: &[&CellResult],
    max_periods: usize,
    bins: usize,
) -> Vec<HistogramBin> {
    assert!(bins > 0, "need at least one bin");
    let width = max_periods.div_ceil(bins).max(1);
    let mut counts = vec![0usize; bins];
    let mut overflow = 0usize;
    for c in cells {
        if !c.run.converged {
            overflow += 1;
            continue;
        }
        let bin = (c.run.convergence_period / width).min(bins - 1);
        counts[bin] += 1;
    }
    let total = cells.len().max(1) as f64;
    let mut out: Vec<HistogramBin> = counts
        .iter()
        .enumerate()
        .map(|(b, &count)| HistogramBin {
            lo: b * width,
            hi: (b + 1) * width,
            count,
            probability: count as f64 / total,
            overflow: false,
        })
        .collect();
    out.push(HistogramBin {
        lo: bins * width,
        hi: bins * width,
        count: overflow,
        probability: overflow as f64 / total,
        overflow: true,
    });
    out
}

/// One bin of a payoff histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub probability: f64,
}

/// Bins realized per-user payoffs pooled over a group of runs into `bins`
/// equal-width bins spanning `[lo, hi]`.
pub fn payoff_histogram(cells: &[&CellResult], lo: f64, hi: f64, bins: usize) -> Vec<PayoffBin> {
    assert!(bins > 0 && hi > lo, "need a positive bin range");
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    for c in cells {
        for s in &c.run.user_stats {
            let b = (((s.mean_payoff - lo) / width).floor() as isize)
                .clamp(0, bins as isize - 1) as usize;
            counts[b] += 1;
            total += 1;
        }
    }
    let total = total.max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &count)| PayoffBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count,
            probability: count as f64 / total,
        })
        .collect()
}

/// Pooled payoff range over runs, widened a little so every value bins.
fn payoff_range(cells: &[&CellResult]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in cells {
        for s in &c.run.user_stats {
            lo = lo.min(s.mean_payoff);
            hi = hi.max(s.mean_payoff);
        }
    }
    if !lo.is_finite() || lo == hi {
        return (lo.min(0.0) - 0.5, hi.max(0.0) + 0.5);
    }
    let pad = (hi - lo) * 0.01;
    (lo - pad, hi + pad)
}

/// Result of one exhaustively verified payoff table.
#[derive(Clone, Debug)]
pub struct VerifyCell {
    pub n_users: usize,
    pub table_index: usize,
    pub report: TheoremReport,
}

/// Exhaustively verifies the stability claims on random payoff tables:
/// `tables_per_size` tables per population size, `walks_per_table` dynamics
/// trajectories each. Deterministic in the first master seed.
pub fn run_verification(spec: &ExperimentSpec) -> Result<Vec<VerifyCell>> {
    let master = spec.seeds[0];
    let sizes: Vec<usize> = spec.sweep.iter().map(|&v| v as usize).collect();
    let mut grid = Vec::new();
    for &n in &sizes {
        for t in 0..spec.tables_per_size {
            grid.push((n, t));
        }
    }
    grid.par_iter()
        .map(|&(n, t)| {
            let mut table_rng = RngStream::new(master, &format!("table/{n}/{t}"));
            let table = PayoffTable::random(n, &mut table_rng)?;
            let sn = RuleSupernetwork::build(&table)?;
            let cond = condense(&sn);
            let n_slots = n * (n - 1) / 2;
            let max_steps = 10 * (1usize << n_slots);
            let mut walk_rng = RngStream::new(master, &format!("walk/{n}/{t}"));
            let report = verify_theorem1(
                &sn,
                &cond,
                spec.walks_per_table,
                max_steps,
                &mut walk_rng,
            );
            Ok(VerifyCell {
                n_users: n,
                table_index: t,
                report,
            })
        })
        .collect()
}

/// Everything one experiment produced.
#[derive(Debug)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub cells_run: usize,
    pub failures: Vec<CellFailure>,
    pub csv_paths: Vec<PathBuf>,
    pub plot_paths: Vec<PathBuf>,
    /// Verification outcomes (supernetwork-verify only).
    pub verify_failures: usize,
}

impl ExperimentReport {
    pub fn success(&self) -> bool {
        self.failures.is_empty() && self.verify_failures == 0
    }
}

fn open_csv(dir: &Path, name: &str, paths: &mut Vec<PathBuf>) -> Result<csv::Writer<File>> {
    let path = dir.join(name);
    let w = csv::Writer::from_writer(File::create(&path)?);
    paths.push(path);
    Ok(w)
}

fn write_runs_csv(
    spec: &ExperimentSpec,
    cells: &[CellResult],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "runs.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "converged",
        "convergence_period",
        "n_edges",
        "cellular_fraction",
        "offloaded_fraction",
        "mean_payoff",
        "negative_payoff_fraction",
    ])?;
    for c in cells {
        w.write_record([
            spec.kind.name().to_string(),
            c.sweep_value.to_string(),
            c.algorithm.label(),
            c.seed.to_string(),
            c.run.converged.to_string(),
            c.run.convergence_period.to_string(),
            c.run.final_network.edge_count().to_string(),
            c.run.cellular_fraction.to_string(),
            c.run.offloaded_fraction().to_string(),
            c.run.mean_payoff.to_string(),
            c.negative_payoff_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate_csv(
    spec: &ExperimentSpec,
    aggregates: &[Aggregate],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "aggregate.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "n_runs",
        "mean_cellular_fraction",
        "sd_cellular_fraction",
        "mean_offloaded_fraction",
        "mean_payoff",
        "sd_payoff",
        "mean_convergence_period",
        "mean_negative_payoff_fraction",
        "converged_fraction",
    ])?;
    for a in aggregates {
        w.write_record([
            spec.kind.name().to_string(),
            a.sweep_value.to_string(),
            a.algorithm.label(),
            "all".to_string(),
            a.n_runs.to_string(),
            a.mean_cellular_fraction.to_string(),
            a.sd_cellular_fraction.to_string(),
            a.mean_offloaded_fraction().to_string(),
            a.mean_payoff.to_string(),
            a.sd_payoff.to_string(),
            a.mean_convergence_period.to_string(),
            a.mean_negative_fraction.to_string(),
            a.converged_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_periods_csv(
    spec: &ExperimentSpec,
    cells: &[CellResult],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "periods.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "period",
        "n_edges",
        "cellular_fraction",
        "mean_payoff",
        "removals",
    ])?;
    for c in cells {
        for p in &c.run.periods {
            w.write_record([
                spec.kind.name().to_string(),
                c.sweep_value.to_string(),
                c.algorithm.label(),
                c.seed.to_string(),
                p.period.to_string(),
                p.n_edges.to_string(),
                p.cellular_fraction.to_string(),
                p.mean_payoff.to_string(),
                p.removals.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_histogram_csv(
    spec: &ExperimentSpec,
    cells: &[CellResult],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "convergence_histogram.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "bin_lo",
        "bin_hi",
        "count",
        "probability",
        "overflow",
    ])?;
    for &sweep_value in &spec.sweep {
        for algorithm in spec.algorithms() {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.sweep_value == sweep_value && c.algorithm == algorithm)
                .collect();
            if group.is_empty() {
                continue;
            }
            for b in
                convergence_time_histogram(&group, spec.period.max_periods, spec.histogram_bins)
            {
                w.write_record([
                    spec.kind.name().to_string(),
                    sweep_value.to_string(),
                    algorithm.label(),
                    "all".to_string(),
                    b.lo.to_string(),
                    b.hi.to_string(),
                    b.count.to_string(),
                    b.probability.to_string(),
                    b.overflow.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_envelope_csvs(
    spec: &ExperimentSpec,
    aggregates: &[Aggregate],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let envelope = seeding_envelope(aggregates);
    let mut w = open_csv(dir, "envelope.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "best_seed_count",
        "cellular_fraction",
        "offloaded_fraction",
    ])?;
    for p in &envelope {
        w.write_record([
            spec.kind.name().to_string(),
            p.sweep_value.to_string(),
            "random-seeding-envelope".to_string(),
            "all".to_string(),
            p.best_seed_count.to_string(),
            p.cellular_fraction.to_string(),
            p.offloaded_fraction().to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = open_csv(dir, "price_of_anarchy.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "formation_offloaded",
        "envelope_offloaded",
        "price_of_anarchy",
    ])?;
    for a in aggregates {
        let Algorithm::NetworkFormation { .. } = a.algorithm else {
            continue;
        };
        let Some(p) = envelope.iter().find(|p| p.sweep_value == a.sweep_value) else {
            continue;
        };
        w.write_record([
            spec.kind.name().to_string(),
            a.sweep_value.to_string(),
            a.algorithm.label(),
            "all".to_string(),
            a.mean_offloaded_fraction().to_string(),
            p.offloaded_fraction().to_string(),
            price_of_anarchy(a.mean_offloaded_fraction(), p.offloaded_fraction()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_users_csv(
    spec: &ExperimentSpec,
    cells: &[CellResult],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "users.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "user",
        "degree",
        "mean_payoff",
        "payoff_std_error",
        "d2d_sent",
        "d2d_received",
    ])?;
    for c in cells {
        for s in &c.run.user_stats {
            w.write_record([
                spec.kind.name().to_string(),
                c.sweep_value.to_string(),
                c.algorithm.label(),
                c.seed.to_string(),
                s.user.to_string(),
                s.degree.to_string(),
                s.mean_payoff.to_string(),
                s.payoff_std_error.to_string(),
                s.d2d_sent.to_string(),
                s.d2d_received.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_payoff_histogram_csv(
    spec: &ExperimentSpec,
    cells: &[CellResult],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "payoff_histogram.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "bin_lo",
        "bin_hi",
        "count",
        "probability",
    ])?;
    let all: Vec<&CellResult> = cells.iter().collect();
    let (lo, hi) = payoff_range(&all);
    for &sweep_value in &spec.sweep {
        for algorithm in spec.algorithms() {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.sweep_value == sweep_value && c.algorithm == algorithm)
                .collect();
            if group.is_empty() {
                continue;
            }
            for b in payoff_histogram(&group, lo, hi, spec.payoff_bins) {
                w.write_record([
                    spec.kind.name().to_string(),
                    sweep_value.to_string(),
                    algorithm.label(),
                    "all".to_string(),
                    b.lo.to_string(),
                    b.hi.to_string(),
                    b.count.to_string(),
                    b.probability.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_verify_csv(
    spec: &ExperimentSpec,
    cells: &[VerifyCell],
    dir: &Path,
    paths: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = open_csv(dir, "verify.csv", paths)?;
    w.write_record([
        "experiment",
        "sweep_value",
        "algorithm",
        "seed",
        "table_index",
        "n_networks",
        "n_classes",
        "n_basins",
        "n_singleton_basins",
        "n_stable",
        "trajectories_absorbed",
        "pass",
    ])?;
    for c in cells {
        w.write_record([
            spec.kind.name().to_string(),
            c.n_users.to_string(),
            "exhaustive-verify".to_string(),
            spec.seeds[0].to_string(),
            c.table_index.to_string(),
            c.report.n_networks.to_string(),
            c.report.n_classes.to_string(),
            c.report.n_basins.to_string(),
            c.report.n_singleton_basins.to_string(),
            c.report.n_stable.to_string(),
            format!("{}/{}", c.report.n_absorbed, c.report.n_trajectories),
            c.report.pass().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn efficiency_chart(spec: &ExperimentSpec, aggregates: &[Aggregate]) -> Chart {
    let mut chart = Chart::new(
        format!("Cellular traffic vs {}", spec.kind.sweep_parameter()),
        spec.kind.sweep_parameter(),
        "mean cellular fraction",
    );
    for algorithm in spec.algorithms() {
        let rows: Vec<&Aggregate> = aggregates
            .iter()
            .filter(|a| a.algorithm == algorithm)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let points = rows
            .iter()
            .map(|a| (a.sweep_value, a.mean_cellular_fraction))
            .collect();
        let errors = rows.iter().map(|a| a.sd_cellular_fraction).collect();
        chart.add(Series::new(algorithm.label(), points).with_errors(errors));
    }
    let envelope = seeding_envelope(aggregates);
    if envelope.len() > 1 {
        chart.add(Series::new(
            "random-seeding-envelope",
            envelope
                .iter()
                .map(|p| (p.sweep_value, p.cellular_fraction))
                .collect(),
        ));
    }
    chart
}

fn convergence_charts(spec: &ExperimentSpec, cells: &[CellResult]) -> Vec<(String, Chart)> {
    let mut charts = Vec::new();
    // Timeline of the first cell: connectivity and cellular fraction.
    if let Some(first) = cells.first() {
        let mut edges = Chart::new(
            format!(
                "Link count over periods ({}={}, {}, seed {})",
                spec.kind.sweep_parameter(),
                first.sweep_value,
                first.algorithm.label(),
                first.seed
            ),
            "period",
            "agreement links",
        );
        edges.add(Series::new(
            "links",
            first
                .run
                .periods
                .iter()
                .map(|p| (p.period as f64, p.n_edges as f64))
                .collect(),
        ));
        charts.push(("connectivity.svg".to_string(), edges));
        let mut frac = Chart::new(
            "Cellular fraction over periods",
            "period",
            "cellular fraction",
        );
        frac.add(Series::new(
            "cellular",
            first
                .run
                .periods
                .iter()
                .map(|p| (p.period as f64, p.cellular_fraction))
                .collect(),
        ));
        charts.push(("cellular_fraction.svg".to_string(), frac));
    }
    // Convergence-time distribution per cell group.
    let mut hist = Chart::new(
        "Convergence time distribution",
        "period (bin center)",
        "probability",
    );
    for &sweep_value in &spec.sweep {
        for algorithm in spec.algorithms() {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.sweep_value == sweep_value && c.algorithm == algorithm)
                .collect();
            if group.is_empty() {
                continue;
            }
            let bins =
                convergence_time_histogram(&group, spec.period.max_periods, spec.histogram_bins);
            hist.add(Series::new(
                format!("n={} {}", sweep_value, algorithm.label()),
                bins.iter()
                    .filter(|b| !b.overflow)
                    .map(|b| ((b.lo + b.hi) as f64 / 2.0, b.probability))
                    .collect(),
            ));
        }
    }
    charts.push(("convergence_histogram.svg".to_string(), hist));
    charts
}

fn payoff_chart(spec: &ExperimentSpec, cells: &[CellResult]) -> Chart {
    let mut chart = Chart::new("Realized payoff distribution", "mean payoff", "probability");
    let all: Vec<&CellResult> = cells.iter().collect();
    let (lo, hi) = payoff_range(&all);
    for algorithm in spec.algorithms() {
        let group: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .collect();
        if group.is_empty() {
            continue;
        }
        let bins = payoff_histogram(&group, lo, hi, spec.payoff_bins);
        chart.add(Series::new(
            algorithm.label(),
            bins.iter()
                .map(|b| ((b.lo + b.hi) / 2.0, b.probability))
                .collect(),
        ));
    }
    chart
}

/// Runs an experiment end to end: executes all cells, writes the CSV tables
/// (and optional SVG charts) under `out_dir`, and reports failures without
/// aborting the sweep.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
    plots: bool,
) -> Result<ExperimentReport> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut csv_paths = Vec::new();
    let mut plot_paths = Vec::new();

    if spec.kind == ExperimentKind::SupernetworkVerify {
        let cells = run_verification(spec)?;
        write_verify_csv(spec, &cells, out_dir, &mut csv_paths)?;
        let verify_failures = cells.iter().filter(|c| !c.report.pass()).count();
        return Ok(ExperimentReport {
            kind: spec.kind,
            cells_run: cells.len(),
            failures: Vec::new(),
            csv_paths,
            plot_paths,
            verify_failures,
        });
    }

    let (cells, failures) = run_cells(spec);
    let aggregates = aggregate(spec, &cells);
    write_runs_csv(spec, &cells, out_dir, &mut csv_paths)?;
    write_aggregate_csv(spec, &aggregates, out_dir, &mut csv_paths)?;

    let mut charts: Vec<(String, Chart)> = Vec::new();
    match spec.kind {
        ExperimentKind::Convergence => {
            write_periods_csv(spec, &cells, out_dir, &mut csv_paths)?;
            write_histogram_csv(spec, &cells, out_dir, &mut csv_paths)?;
            charts.extend(convergence_charts(spec, &cells));
        }
        ExperimentKind::EfficiencyVsN
        | ExperimentKind::EfficiencyVsTau
        | ExperimentKind::EfficiencyVsLambda => {
            write_envelope_csvs(spec, &aggregates, out_dir, &mut csv_paths)?;
            charts.push(("efficiency.svg".to_string(), efficiency_chart(spec, &aggregates)));
        }
        ExperimentKind::PayoffDistribution => {
            write_users_csv(spec, &cells, out_dir, &mut csv_paths)?;
            write_payoff_histogram_csv(spec, &cells, out_dir, &mut csv_paths)?;
            charts.push(("payoff_histogram.svg".to_string(), payoff_chart(spec, &cells)));
        }
        ExperimentKind::SupernetworkVerify => unreachable!(),
    }
    if plots {
        for (name, chart) in &charts {
            let path = out_dir.join(name);
            chart.save(&path)?;
            plot_paths.push(path);
        }
    }
    Ok(ExperimentReport {
        kind: spec.kind,
        cells_run: cells.len(),
        failures,
        csv_paths,
        plot_paths,
        verify_failures: 0,
    })
}
