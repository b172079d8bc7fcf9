//! Command-line front end for the offloading simulator: single runs, the
//! seeding baseline, figure-style sweeps, exhaustive stability verification,
//! and a payoff estimator probe.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use offload_core::harness::{self, ExperimentKind, ExperimentSpec};
use offload_core::payoff::{
    estimate_payoff, quadrature_delivery_probs, QUADRATURE_NEIGHBOR_LIMIT,
};
use offload_core::simulator::{run_offloading, run_random_seeding};
use offload_core::plot::{Chart, Series};
use offload_core::{RngStream, Scenario};

#[derive(Parser)]
#[command(
    name = "offload",
    version,
    about = "Simulate selfish D2D content offloading and its network formation game"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML); omit for built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed. Single-run commands default to the config's first seed;
    /// for `sweep` this replaces the whole seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV tables and charts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Emit SVG charts next to the CSVs (default).
    #[arg(long, global = true, overrides_with = "no_plot")]
    plot: bool,
    /// Skip chart emission.
    #[arg(long, global = true)]
    no_plot: bool,
}

impl Common {
    fn plots(&self) -> bool {
        !self.no_plot
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the formation process once and export per-period and per-user CSVs.
    Simulate,
    /// Run the random-seeding baseline once and export per-user CSVs.
    SeedBaseline {
        /// Users seeded with the content in each round.
        #[arg(long, default_value_t = 2)]
        seeds_per_round: usize,
        /// Rounds to simulate.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Run a full sweep experiment and aggregate across seeds.
    Sweep {
        /// Which figure-style experiment to run.
        kind: KindArg,
    },
    /// Exhaustively verify the stability theory on random payoff tables.
    SupernetworkVerify,
    /// Compare the Monte-Carlo payoff estimator against the quadrature
    /// oracle for one user.
    PayoffProbe {
        /// User to probe.
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Monte-Carlo samples.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Quadrature grid size per dimension.
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Convergence,
    EfficiencyVsN,
    EfficiencyVsTau,
    EfficiencyVsLambda,
    PayoffDistribution,
    SupernetworkVerify,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Convergence => ExperimentKind::Convergence,
            KindArg::EfficiencyVsN => ExperimentKind::EfficiencyVsN,
            KindArg::EfficiencyVsTau => ExperimentKind::EfficiencyVsTau,
            KindArg::EfficiencyVsLambda => ExperimentKind::EfficiencyVsLambda,
            KindArg::PayoffDistribution => ExperimentKind::PayoffDistribution,
            KindArg::SupernetworkVerify => ExperimentKind::SupernetworkVerify,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            warn!("could not size the worker pool: {e}");
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Configuration and input problems exit 1; failures while
            // running exit 2.
            if e.downcast_ref::<offload_core::Error>().is_some_and(|c| {
                matches!(
                    c,
                    offload_core::Error::InvalidParameter(_)
                        | offload_core::Error::InvalidConfig(_)
                        | offload_core::Error::TomlParse(_)
                        | offload_core::Error::UnknownUser { .. }
                )
            }) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// Loads the experiment spec from `--config` or falls back to the built-in
/// defaults of `kind`.
fn load_spec(common: &Common, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => {
            if !path.exists() {
                bail!(offload_core::Error::InvalidConfig(format!(
                    "config file {} not found",
                    path.display()
                )));
            }
            let spec = ExperimentSpec::load(path)
                .with_context(|| format!("loading config {}", path.display()))?;
            if spec.kind != kind {
                info!(
                    "config file declares kind {}, running {} as requested",
                    spec.kind, kind
                );
            }
            ExperimentSpec { kind, ..spec }
        }
        None => ExperimentSpec::default_for(kind),
    };
    if let Some(seed) = common.seed {
        spec.seeds = vec![seed];
    }
    spec.validate()?;
    Ok(spec)
}

/// Builds the single-run scenario of `spec` at its first seed.
fn single_scenario(spec: &ExperimentSpec) -> Result<(Scenario, u64)> {
    let seed = spec.seeds[0];
    let mut cfg = spec.base.clone();
    cfg.master_seed = seed;
    cfg.validate()?;
    let scenario = cfg.generate(&mut RngStream::new(seed, "scenario"))?;
    Ok((scenario, seed))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match &cli.cmd {
        Cmd::Simulate => {
            let spec = load_spec(common, ExperimentKind::Convergence)?;
            let (scenario, seed) = single_scenario(&spec)?;
            info!(
                "simulating {} users, {} contact pairs, seed {seed}",
                scenario.n_users(),
                scenario.contacts.len()
            );
            let run = run_offloading(
                &scenario,
                &spec.period,
                &spec.base.costs,
                &RngStream::new(seed, "run/network-formation"),
            )?;
            std::fs::create_dir_all(&common.out)?;
            let periods_path = common.out.join("periods.csv");
            run.write_period_csv(std::fs::File::create(&periods_path)?)?;
            let users_path = common.out.join("users.csv");
            run.write_user_csv(std::fs::File::create(&users_path)?)?;
            if common.plots() {
                let mut chart = Chart::new("Formation run", "period", "value");
                chart.add(Series::new(
                    "agreement links",
                    run.periods
                        .iter()
                        .map(|p| (p.period as f64, p.n_edges as f64))
                        .collect(),
                ));
                chart.save(&common.out.join("connectivity.svg"))?;
                let mut frac = Chart::new("Cellular fraction", "period", "fraction");
                frac.add(Series::new(
                    "cellular",
                    run.periods
                        .iter()
                        .map(|p| (p.period as f64, p.cellular_fraction))
                        .collect(),
                ));
                frac.save(&common.out.join("cellular_fraction.svg"))?;
            }
            println!(
                "converged={} last_change_period={} periods={} final_links={} \
                 cellular_fraction={:.4} mean_payoff={:.4}",
                run.converged,
                run.convergence_period,
                run.periods.len(),
                run.final_network.edge_count(),
                run.cellular_fraction,
                run.mean_payoff
            );
            println!("wrote {} and {}", periods_path.display(), users_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SeedBaseline {
            seeds_per_round,
            rounds,
        } => {
            let spec = load_spec(common, ExperimentKind::PayoffDistribution)?;
            let (scenario, seed) = single_scenario(&spec)?;
            let rounds = rounds.unwrap_or(spec.seeding_rounds);
            let run = run_random_seeding(
                &scenario,
                *seeds_per_round,
                rounds,
                &spec.base.costs,
                spec.period.relay_policy,
                spec.period.contact_model,
                &RngStream::new(seed, "run/random-seeding"),
            )?;
            std::fs::create_dir_all(&common.out)?;
            let users_path = common.out.join("users.csv");
            run.write_user_csv(std::fs::File::create(&users_path)?)?;
            println!(
                "seeds_per_round={seeds_per_round} rounds={rounds} \
                 cellular_fraction={:.4} offloaded={:.4} mean_payoff={:.4}",
                run.cellular_fraction,
                run.offloaded_fraction(),
                run.mean_payoff
            );
            println!("wrote {}", users_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { kind } => {
            let spec = load_spec(common, (*kind).into())?;
            let cells = spec.sweep.len() * spec.algorithms().len().max(1) * spec.seeds.len();
            info!("running {} with {cells} cells", spec.kind);
            let report = harness::run_experiment(&spec, &common.out, common.plots())?;
            for f in &report.failures {
                eprintln!("{f}");
            }
            println!(
                "experiment={} cells={} failures={} outputs={}",
                report.kind,
                report.cells_run,
                report.failures.len(),
                report
                    .csv_paths
                    .iter()
                    .chain(report.plot_paths.iter())
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            Ok(if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Cmd::SupernetworkVerify => {
            let spec = load_spec(common, ExperimentKind::SupernetworkVerify)?;
            let report = harness::run_experiment(&spec, &common.out, false)?;
            println!(
                "experiment={} tables={} failures={}",
                report.kind, report.cells_run, report.verify_failures
            );
            for p in &report.csv_paths {
                println!("wrote {}", p.display());
            }
            Ok(if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Cmd::PayoffProbe {
            user,
            samples,
            grid,
        } => {
            let spec = load_spec(common, ExperimentKind::PayoffDistribution)?;
            let (scenario, seed) = single_scenario(&spec)?;
            if *user >= scenario.n_users() {
                bail!(offload_core::Error::UnknownUser {
                    user: *user,
                    len: scenario.n_users()
                });
            }
            let g = scenario.contacts.full_agreement();
            let est = estimate_payoff(
                *user,
                &g,
                &scenario.users,
                &scenario.contacts,
                &spec.base.costs,
                *samples,
                &RngStream::new(seed, "probe"),
            )?;
            println!(
                "user={user} neighbors={} samples={samples}",
                g.degree(*user)
            );
            println!(
                "monte-carlo: p_cellular={:.6} gain={:.6} cost={:.6} payoff={:.6} (se {:.6})",
                est.delivery.get(user).copied().unwrap_or(0.0),
                est.gain,
                est.cost,
                est.payoff,
                est.std_error
            );
            if g.degree(*user) <= QUADRATURE_NEIGHBOR_LIMIT {
                let oracle = quadrature_delivery_probs(
                    *user,
                    &g,
                    &scenario.users,
                    &scenario.contacts,
                    *grid,
                )?;
                println!("source        monte-carlo    quadrature     |diff|");
                for (src, q) in &oracle {
                    let m = est.delivery.get(src).copied().unwrap_or(0.0);
                    let name = if src == user {
                        "cellular".to_string()
                    } else {
                        format!("user {src}")
                    };
                    println!("{name:<12} {m:>12.6}  {q:>12.6}  {:>10.2e}", (m - q).abs());
                }
            } else {
                println!(
                    "quadrature oracle skipped: {} neighbors exceeds its limit of {}",
                    g.degree(*user),
                    QUADRATURE_NEIGHBOR_LIMIT
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
