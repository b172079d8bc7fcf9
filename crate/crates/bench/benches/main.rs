//! Criterion benchmarks for the library's hot paths: single-round epidemic
//! simulation, the Monte Carlo and quadrature delivery estimators, exhaustive
//! supernetwork analysis, and a short end-to-end formation run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use offload_core::payoff::{estimate_delivery_probs, quadrature_delivery_probs};
use offload_core::simulator::{
    run_offloading, simulate_round, ContactModel, PeriodConfig, RelayPolicy,
};
use offload_core::supernetwork::{condense, PayoffTable, RuleSupernetwork};
use offload_core::{RngStream, Scenario, ScenarioConfig};

fn reference_scenario(n_users: usize) -> Scenario {
    let cfg = ScenarioConfig {
        n_users,
        master_seed: 7,
        ..ScenarioConfig::default()
    };
    cfg.generate(&mut RngStream::new(7, "bench/scenario"))
        .expect("reference scenario generates")
}

fn bench_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("round");
    for n in [20usize, 80] {
        let scenario = reference_scenario(n);
        let g = scenario.contacts.full_agreement();
        let mut rng = RngStream::new(1, "bench/round");
        group.bench_with_input(BenchmarkId::new("full-agreement", n), &n, |b, _| {
            b.iter(|| {
                black_box(simulate_round(
                    &g,
                    &scenario.users,
                    &scenario.contacts,
                    RelayPolicy::OnHold,
                    ContactModel::Recurring,
                    &[],
                    &mut rng,
                ))
            })
        });
    }
    group.finish();
}

fn bench_payoff(c: &mut Criterion) {
    let scenario = reference_scenario(20);
    let g = scenario.contacts.full_agreement();
    let user = 0;
    let mut group = c.benchmark_group("delivery");
    group.bench_function("monte-carlo-10k", |b| {
        let rng = RngStream::new(2, "bench/mc");
        b.iter(|| {
            black_box(
                estimate_delivery_probs(user, &g, &scenario.users, &scenario.contacts, 10_000, &rng)
                    .unwrap(),
            )
        })
    });

    // The quadrature oracle only supports small neighborhoods; restrict the
    // probed user's agreements to two partners.
    let mut partners = scenario.contacts.neighbors(user);
    partners.truncate(2);
    let small = offload_core::AgreementNetwork::from_edges(
        scenario.users.len(),
        partners.iter().map(|&v| offload_core::Edge::new(user, v)),
    )
    .unwrap();
    group.bench_function("quadrature-200", |b| {
        b.iter(|| {
            black_box(
                quadrature_delivery_probs(user, &small, &scenario.users, &scenario.contacts, 200)
                    .unwrap(),
            )
        })
    });
    group.finish();
}

fn bench_supernetwork(c: &mut Criterion) {
    let mut rng = RngStream::new(3, "bench/table");
    let table = PayoffTable::random(4, &mut rng).unwrap();
    c.bench_function("supernetwork/build-condense-n4", |b| {
        b.iter(|| {
            let sn = RuleSupernetwork::build(black_box(&table)).unwrap();
            black_box(condense(&sn))
        })
    });
}

fn bench_formation(c: &mut Criterion) {
    let scenario = reference_scenario(10);
    let costs = ScenarioConfig::default().costs;
    let period = PeriodConfig {
        rounds_per_period: 20,
        max_periods: 5,
        eval_rounds: 50,
        ..PeriodConfig::default()
    };
    c.bench_function("formation/short-run-n10", |b| {
        b.iter(|| {
            black_box(
                run_offloading(&scenario, &period, &costs, &RngStream::new(4, "bench/run"))
                    .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_round,
    bench_payoff,
    bench_supernetwork,
    bench_formation
);
criterion_main!(benches);
