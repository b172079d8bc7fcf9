//! Discrete-event simulation of content rounds and the data-driven link
//! review that prunes the agreement network.
//!
//! In each round a fresh content item appears at time zero. Every user draws
//! an access delay (their cellular deadline). Deliveries spread as a
//! first-passage epidemic over the agreement links that have a contact
//! process: from the moment a holder is ready to share with a partner, the
//! pair's next meeting decides whether the handover beats the partner's
//! deadline. How that waiting time is drawn is the [`ContactModel`]: under
//! the default [`ContactModel::Recurring`] each pair meets according to a
//! renewal process with inter-contact gaps from the pair's distribution, so
//! the wait is the residual until the next renewal; under
//! [`ContactModel::FirstContact`] the wait is a single fresh gap draw, which
//! reproduces exactly the single-window meeting probability the payoff
//! estimator integrates over. A user still empty-handed at their deadline
//! downloads over cellular, so every user ends the round with the item and
//! cellular plus D2D deliveries always add up to the population size.
//!
//! Rounds are grouped into periods. During a period the agreement network is
//! frozen and a [`Ledger`] tallies realized per-link transfers; at the end
//! of the period each user reviews their links in random order and cuts the
//! first one whose realized value (cellular downloads avoided minus
//! handovers paid for) is negative, at most one cut per user per period. By
//! default the tallies are running totals over the whole history
//! ([`LedgerMode::Cumulative`]), so early periods give noisy reviews that
//! sharpen as evidence accumulates and link removals spread out over many
//! periods. The process converges when no user cuts for a configured number
//! of consecutive periods.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AgreementNetwork, ContactGraph, CostModel, Edge, Scenario, UserId, UserProfile,
};
use crate::stochastic::RngStream;

/// When a holder may relay the item.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayPolicy {
    /// A holder is ready to share the moment the item arrives.
    #[default]
    OnHold,
    /// A holder shares only from their own access deadline onward; users who
    /// received early via D2D sit on the item until they would have consumed
    /// it themselves.
    AfterAccess,
}

/// How pair meetings are generated within a round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactModel {
    /// Each pair meets repeatedly: a renewal process from time zero with
    /// inter-contact gaps drawn from the pair's distribution. The wait from
    /// any ready time is the residual to the next renewal, so a meeting can
    /// arrive arbitrarily soon after a holder becomes ready.
    #[default]
    Recurring,
    /// One fresh gap draw per (holder, partner) readiness: the chance of
    /// beating a deadline a window Δ away is exactly the single-window
    /// meeting probability of the pair's distribution, matching the
    /// declared-payoff model's marginals hop for hop.
    FirstContact,
}

/// Who reviews their links at the end of a period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewSchedule {
    /// Every user reviews at the end of every period, in a fresh random
    /// order; up to one cut per user per period.
    #[default]
    AllUsers,
    /// One uniformly drawn user reviews per period — the asynchronous
    /// dynamic matching the one-move-at-a-time formation rules; at most one
    /// link is cut per period.
    OneUser,
}

/// Whether review tallies reset between periods.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerMode {
    /// Counters reset after every review; each review sees only the last
    /// period, making the cut decision independent across periods.
    #[default]
    PerPeriod,
    /// Transfer counters run over the whole history; each review weighs all
    /// evidence collected so far.
    Cumulative,
}

/// Agreement network the formation process starts from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialNetwork {
    /// One agreement per contact pair (only physically meaningful links).
    #[default]
    ContactEdges,
    /// All pairs agree initially; links without a contact process never
    /// carry transfers, keep weight zero, and are never reviewed away.
    Complete,
}

/// Period structure of the offloading process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodConfig {
    /// Rounds simulated between two link reviews. Larger periods give the
    /// review lower-noise evidence, so marginally profitable links survive
    /// more reliably.
    pub rounds_per_period: usize,
    /// Consecutive removal-free periods required to declare convergence.
    pub stable_periods: usize,
    pub max_periods: usize,
    pub relay_policy: RelayPolicy,
    pub contact_model: ContactModel,
    pub ledger_mode: LedgerMode,
    pub review_schedule: ReviewSchedule,
    pub initial_network: InitialNetwork,
    /// Fresh rounds simulated on the frozen final network for the reported
    /// per-user statistics.
    pub eval_rounds: usize,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        Self {
            rounds_per_period: 50,
            stable_periods: 5,
            max_periods: 500,
            relay_policy: RelayPolicy::OnHold,
            contact_model: ContactModel::Recurring,
            ledger_mode: LedgerMode::PerPeriod,
            review_schedule: ReviewSchedule::AllUsers,
            initial_network: InitialNetwork::ContactEdges,
            eval_rounds: 250,
        }
    }
}

impl PeriodConfig {
    /// Settings used by the offloading-efficiency experiments: asynchronous
    /// one-user review over a cumulative ledger, with longer periods and a
    /// wider stability window. One cut at a time on consolidated evidence
    /// makes pruning gradual, so the stability window halts the process at a
    /// partially pruned network — the regime the efficiency figures measure —
    /// rather than racing every user to the fully pruned fixed point.
    pub fn for_efficiency() -> Self {
        Self {
            rounds_per_period: 100,
            stable_periods: 8,
            max_periods: 2000,
            ledger_mode: LedgerMode::Cumulative,
            review_schedule: ReviewSchedule::OneUser,
            eval_rounds: 400,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rounds_per_period", self.rounds_per_period),
            ("stable_periods", self.stable_periods),
            ("max_periods", self.max_periods),
            ("eval_rounds", self.eval_rounds),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// How a user obtained the item in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Cellular,
    D2d { from: UserId },
}

/// One user's delivery in one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Acquisition {
    /// When the item arrived.
    pub time: f64,
    /// The user's cellular deadline in this round.
    pub access_time: f64,
    pub source: Source,
}

/// Outcome of a single content round; `acquisitions` is indexed by user id.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub acquisitions: Vec<Acquisition>,
    pub n_cellular: usize,
    pub n_d2d: usize,
}

impl RoundOutcome {
    pub fn n_users(&self) -> usize {
        self.acquisitions.len()
    }

    /// D2D handovers performed per user.
    pub fn d2d_sent_counts(&self) -> Vec<usize> {
        let mut sent = vec![0; self.acquisitions.len()];
        for a in &self.acquisitions {
            if let Source::D2d { from } = a.source {
                sent[from] += 1;
            }
        }
        sent
    }
}

/// Event queue entry: a cellular deadline or a delivery offer, ordered by
/// time with deadlines winning ties (a user downloading at the same instant
/// an offer arrives is counted as cellular).
#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    /// 0 = cellular deadline of `to`; 1 = delivery offer `from` -> `to`.
    kind: u8,
    from: UserId,
    to: UserId,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.from.cmp(&other.from))
            .then(self.to.cmp(&other.to))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

fn schedule_offers(
    u: UserId,
    t: f64,
    access: &[f64],
    g: &AgreementNetwork,
    contacts: &ContactGraph,
    policy: RelayPolicy,
    holds: &[bool],
    heap: &mut BinaryHeap<std::cmp::Reverse<Event>>,
    wait: &mut dyn FnMut(UserId, UserId, f64) -> f64,
) {
    let ready = match policy {
        RelayPolicy::OnHold => t,
        RelayPolicy::AfterAccess => t.max(access[u]),
    };
    for v in g.neighbors(u) {
        if holds[v] || contacts.get(u, v).is_none() {
            continue;
        }
        let w = wait(u, v, ready);
        debug_assert!(w > 0.0, "waiting times must be positive");
        let s = ready + w;
        if s < access[v] {
            heap.push(std::cmp::Reverse(Event {
                time: s,
                kind: 1,
                from: u,
                to: v,
            }));
        }
    }
}

/// Replays one round. `access[u]` is user `u`'s cellular deadline; users in
/// `seeds` hold the item from time zero (counted as cellular deliveries at
/// time zero). `wait(from, to, ready)` supplies the waiting time from the
/// moment `from` is ready to share until they next meet `to`; it is invoked
/// once per (holder, empty-handed partner) pair in a deterministic order
/// (acquisitions in time order, partners ascending) and must be positive.
///
/// A holder is ready immediately under [`RelayPolicy::OnHold`] and from
/// their own deadline under [`RelayPolicy::AfterAccess`]. Offers that would
/// arrive at or after the partner's deadline are dropped: at equal times the
/// cellular download wins.
pub fn resolve_round(
    access: &[f64],
    g: &AgreementNetwork,
    contacts: &ContactGraph,
    policy: RelayPolicy,
    seeds: &[UserId],
    mut wait: impl FnMut(UserId, UserId, f64) -> f64,
) -> RoundOutcome {
    let n = access.len();
    let mut holds = vec![false; n];
    let mut acquired = vec![0.0f64; n];
    let mut source = vec![Source::Cellular; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<Event>> = BinaryHeap::new();

    let mut sorted_seeds: Vec<UserId> = seeds.to_vec();
    sorted_seeds.sort_unstable();
    for &s in &sorted_seeds {
        assert!(s < n, "seed user {s} out of range");
        holds[s] = true;
    }
    for &s in &sorted_seeds {
        schedule_offers(
            s, 0.0, access, g, contacts, policy, &holds, &mut heap, &mut wait,
        );
    }
    for u in 0..n {
        heap.push(std::cmp::Reverse(Event {
            time: access[u],
            kind: 0,
            from: u,
            to: u,
        }));
    }

    while let Some(std::cmp::Reverse(ev)) = heap.pop() {
        let u = ev.to;
        if holds[u] {
            continue;
        }
        holds[u] = true;
        acquired[u] = ev.time;
        source[u] = if ev.kind == 0 {
            Source::Cellular
        } else {
            Source::D2d { from: ev.from }
        };
        schedule_offers(
            u, ev.time, access, g, contacts, policy, &holds, &mut heap, &mut wait,
        );
    }

    let acquisitions: Vec<Acquisition> = (0..n)
        .map(|u| Acquisition {
            time: acquired[u],
            access_time: access[u],
            source: source[u],
        })
        .collect();
    let n_d2d = acquisitions
        .iter()
        .filter(|a| matches!(a.source, Source::D2d { .. }))
        .count();
    RoundOutcome {
        n_cellular: n - n_d2d,
        n_d2d,
        acquisitions,
    }
}

/// Simulates one round: draws every user's access delay in id order, then
/// resolves the epidemic with waiting times generated per the contact
/// model. Each ordered pair is consulted at most once per round (only when
/// one endpoint holds the item and the other does not), so the residual
/// under [`ContactModel::Recurring`] can be drawn lazily: partial sums of
/// gap draws from time zero until one passes the ready time.
pub fn simulate_round(
    g: &AgreementNetwork,
    users: &[UserProfile],
    contacts: &ContactGraph,
    policy: RelayPolicy,
    model: ContactModel,
    seeds: &[UserId],
    rng: &mut RngStream,
) -> RoundOutcome {
    let n = users.len();
    debug_assert_eq!(g.n_users(), n);
    let access: Vec<f64> = users.iter().map(|u| u.access.sample(rng)).collect();
    let draw = |from: UserId, to: UserId, ready: f64| {
        let pair = contacts
            .get(from, to)
            .expect("offer scheduled without a contact process");
        match model {
            ContactModel::FirstContact => pair.sample(rng),
            ContactModel::Recurring => {
                let mut t = 0.0;
                loop {
                    t += pair.sample(rng);
                    if t > ready {
                        break t - ready;
                    }
                }
            }
        }
    };
    resolve_round(&access, g, contacts, policy, seeds, draw)
}

/// Per-ordered-pair transfer tallies for one period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ledger {
    n: usize,
    sent: Vec<u32>,
    received: Vec<u32>,
}

impl Ledger {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            sent: vec![0; n * n],
            received: vec![0; n * n],
        }
    }

    pub fn reset(&mut self) {
        self.sent.fill(0);
        self.received.fill(0);
    }

    pub fn apply_round(&mut self, outcome: &RoundOutcome) {
        assert_eq!(outcome.n_users(), self.n, "round size mismatch");
        for (to, a) in outcome.acquisitions.iter().enumerate() {
            if let Source::D2d { from } = a.source {
                self.sent[from * self.n + to] += 1;
                self.received[to * self.n + from] += 1;
            }
        }
    }

    /// Items `user` handed to `peer`.
    pub fn sent(&self, user: UserId, peer: UserId) -> u32 {
        self.sent[user * self.n + peer]
    }

    /// Items `user` got from `peer`.
    pub fn received(&self, user: UserId, peer: UserId) -> u32 {
        self.received[user * self.n + peer]
    }

    pub fn total_transfers(&self) -> u64 {
        self.sent.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Realized value of the link to `peer` from `user`'s point of view over the
/// ledger's period: downloads avoided at the cellular price minus handovers
/// paid at the D2D price.
pub fn link_weight(ledger: &Ledger, costs: &CostModel, user: UserId, peer: UserId) -> f64 {
    f64::from(ledger.received(user, peer)) * costs.cellular
        - f64::from(ledger.sent(user, peer)) * costs.d2d
}

/// One user's end-of-period link review: scans their links in random order
/// and cuts the first with negative realized value. Returns the cut link, if
/// any.
pub fn review_links(
    user: UserId,
    g: &mut AgreementNetwork,
    ledger: &Ledger,
    costs: &CostModel,
    rng: &mut RngStream,
) -> Option<Edge> {
    let mut peers = g.neighbors(user);
    rng.shuffle(&mut peers);
    for peer in peers {
        if link_weight(ledger, costs, user, peer) < 0.0 {
            let e = Edge::new(user, peer);
            g.remove(&e);
            return Some(e);
        }
    }
    None
}

/// Aggregates of one period.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodRecord {
    /// 1-based period index.
    pub period: usize,
    /// Agreement edges after this period's review.
    pub n_edges: usize,
    /// Fraction of deliveries that used cellular during the period.
    pub cellular_fraction: f64,
    /// Realized payoff per user per round during the period.
    pub mean_payoff: f64,
    /// Links cut by this period's review.
    pub removals: usize,
}

/// Per-user statistics over the evaluation rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct UserStat {
    pub user: UserId,
    /// Degree in the final agreement network.
    pub degree: usize,
    /// Realized payoff per round.
    pub mean_payoff: f64,
    /// Standard error of `mean_payoff` across rounds.
    pub payoff_std_error: f64,
    pub d2d_sent: u64,
    pub d2d_received: u64,
}

/// Result of a full offloading run (or of the seeding baseline, which has no
/// period records).
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub periods: Vec<PeriodRecord>,
    /// Whether the review went the configured number of consecutive periods
    /// without a removal before the period cap.
    pub converged: bool,
    /// Last period whose review cut a link (0 when none ever did).
    pub convergence_period: usize,
    pub final_network: AgreementNetwork,
    pub user_stats: Vec<UserStat>,
    /// Cellular fraction over the evaluation rounds.
    pub cellular_fraction: f64,
    /// Mean per-user per-round payoff over the evaluation rounds.
    pub mean_payoff: f64,
    pub eval_rounds: usize,
}

impl RunResult {
    /// Fraction of deliveries offloaded to D2D over the evaluation rounds.
    pub fn offloaded_fraction(&self) -> f64 {
        1.0 - self.cellular_fraction
    }

    /// One CSV row per period.
    pub fn write_period_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "period",
            "n_edges",
            "cellular_fraction",
            "mean_payoff",
            "removals",
        ])?;
        for p in &self.periods {
            w.write_record([
                p.period.to_string(),
                p.n_edges.to_string(),
                p.cellular_fraction.to_string(),
                p.mean_payoff.to_string(),
                p.removals.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One CSV row per user with final-network statistics.
    pub fn write_user_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user", "degree", "mean_payoff", "d2d_sent", "d2d_received"])?;
        for s in &self.user_stats {
            w.write_record([
                s.user.to_string(),
                s.degree.to_string(),
                s.mean_payoff.to_string(),
                s.d2d_sent.to_string(),
                s.d2d_received.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates rounds on a frozen network and folds them into per-user
/// statistics; used for the final evaluation of both algorithms.
fn evaluate_network(
    g: &AgreementNetwork,
    scenario: &Scenario,
    costs: &CostModel,
    policy: RelayPolicy,
    model: ContactModel,
    rounds: usize,
    seeds_for_round: impl Fn(usize, &RngStream) -> Vec<UserId>,
    rng: &RngStream,
) -> (Vec<UserStat>, f64, f64) {
    let n = scenario.n_users();
    let mut sent = vec![0u64; n];
    let mut received = vec![0u64; n];
    let mut payoff_sum = vec![0.0f64; n];
    let mut payoff_sq = vec![0.0f64; n];
    let mut cellular = 0u64;
    for r in 0..rounds {
        let seeds = seeds_for_round(r, rng);
        let mut rr = rng.derive(&format!("round/{r}"));
        let out = simulate_round(
            g,
            &scenario.users,
            &scenario.contacts,
            policy,
            model,
            &seeds,
            &mut rr,
        );
        cellular += out.n_cellular as u64;
        let sent_now = out.d2d_sent_counts();
        for u in 0..n {
            let got = matches!(out.acquisitions[u].source, Source::D2d { .. });
            if got {
                received[u] += 1;
            }
            sent[u] += sent_now[u] as u64;
            let p = if got { costs.cellular } else { 0.0 } - costs.d2d * sent_now[u] as f64;
            payoff_sum[u] += p;
            payoff_sq[u] += p * p;
        }
    }
    let stats: Vec<UserStat> = (0..n)
        .map(|u| {
            let mean = payoff_sum[u] / rounds as f64;
            let var = if rounds > 1 {
                ((payoff_sq[u] - payoff_sum[u] * payoff_sum[u] / rounds as f64)
                    / (rounds - 1) as f64)
                    .max(0.0)
            } else {
                0.0
            };
            UserStat {
                user: u,
                degree: g.degree(u),
                mean_payoff: mean,
                payoff_std_error: (var / rounds as f64).sqrt(),
                d2d_sent: sent[u],
                d2d_received: received[u],
            }
        })
        .collect();
    let cellular_fraction = cellular as f64 / (n * rounds) as f64;
    let mean_payoff = stats.iter().map(|s| s.mean_payoff).sum::<f64>() / n as f64;
    (stats, cellular_fraction, mean_payoff)
}

/// Runs the full offloading process: periods of frozen-network rounds, a
/// data-driven link review after each period, stop on convergence or at the
/// period cap, then an evaluation pass on the final network.
pub fn run_offloading(
    scenario: &Scenario,
    cfg: &PeriodConfig,
    costs: &CostModel,
    rng: &RngStream,
) -> Result<RunResult> {
    scenario.validate()?;
    cfg.validate()?;
    costs.validate()?;
    let n = scenario.n_users();
    let mut g = match cfg.initial_network {
        InitialNetwork::ContactEdges => scenario.contacts.full_agreement(),
        InitialNetwork::Complete => AgreementNetwork::complete(n),
    };
    let mut ledger = Ledger::new(n);
    let mut periods = Vec::new();
    let mut last_removal = 0usize;
    let mut converged = false;

    for period in 1..=cfg.max_periods {
        if cfg.ledger_mode == LedgerMode::PerPeriod {
            ledger.reset();
        }
        let mut cellular = 0u64;
        let mut d2d = 0u64;
        for r in 0..cfg.rounds_per_period {
            let mut rr = rng.derive(&format!("period/{period}/round/{r}"));
            let out = simulate_round(
                &g,
                &scenario.users,
                &scenario.contacts,
                cfg.relay_policy,
                cfg.contact_model,
                &[],
                &mut rr,
            );
            cellular += out.n_cellular as u64;
            d2d += out.n_d2d as u64;
            ledger.apply_round(&out);
        }

        let mut review_rng = rng.derive(&format!("period/{period}/review"));
        let mut removals = 0;
        match cfg.review_schedule {
            ReviewSchedule::OneUser => {
                let mut order: Vec<UserId> = (0..n).collect();
                review_rng.shuffle(&mut order);
                let u = order[0];
                if review_links(u, &mut g, &ledger, costs, &mut review_rng).is_some() {
                    removals += 1;
                }
            }
            ReviewSchedule::AllUsers => {
                let mut order: Vec<UserId> = (0..n).collect();
                review_rng.shuffle(&mut order);
                for &u in &order {
                    if review_links(u, &mut g, &ledger, costs, &mut review_rng).is_some() {
                        removals += 1;
                    }
                }
            }
        }
        if removals > 0 {
            last_removal = period;
        }

        let rounds = (n * cfg.rounds_per_period) as f64;
        periods.push(PeriodRecord {
            period,
            n_edges: g.edge_count(),
            cellular_fraction: cellular as f64 / rounds,
            mean_payoff: (costs.cellular - costs.d2d) * d2d as f64 / rounds,
            removals,
        });

        if period - last_removal >= cfg.stable_periods {
            converged = true;
            break;
        }
    }

    let eval_rng = rng.derive("eval");
    let (user_stats, cellular_fraction, mean_payoff) = evaluate_network(
        &g,
        scenario,
        costs,
        cfg.relay_policy,
        cfg.contact_model,
        cfg.eval_rounds,
        |_, _| Vec::new(),
        &eval_rng,
    );
    Ok(RunResult {
        periods,
        converged,
        convergence_period: last_removal,
        final_network: g,
        user_stats,
        cellular_fraction,
        mean_payoff,
        eval_rounds: cfg.eval_rounds,
    })
}

/// Baseline without formation: every contact pair shares, and in each round
/// `n_seeds` uniformly drawn users receive the item over cellular at time
/// zero and relay it onward.
pub fn run_random_seeding(
    scenario: &Scenario,
    n_seeds: usize,
    rounds: usize,
    costs: &CostModel,
    policy: RelayPolicy,
    model: ContactModel,
    rng: &RngStream,
) -> Result<RunResult> {
    scenario.validate()?;
    costs.validate()?;
    let n = scenario.n_users();
    if n_seeds > n {
        return Err(Error::InvalidConfig(format!(
            "{n_seeds} seeds but only {n} users"
        )));
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be positive".into()));
    }
    let g = scenario.contacts.full_agreement();
    let (user_stats, cellular_fraction, mean_payoff) = evaluate_network(
        &g,
        scenario,
        costs,
        policy,
        model,
        rounds,
        |r, base| {
            let mut pick = base.derive(&format!("seeds/{r}"));
            let mut ids: Vec<UserId> = (0..n).collect();
            pick.shuffle(&mut ids);
            ids.truncate(n_seeds);
            ids.sort_unstable();
            ids
        },
        rng,
    );
    Ok(RunResult {
        periods: Vec::new(),
        converged: true,
        convergence_period: 0,
        final_network: g,
        user_stats,
        cellular_fraction,
        mean_payoff,
        eval_rounds: rounds,
    })
}

/// Comparison of declared expected payoffs against realized ones, summed
/// over one connected component of the final network.
#[derive(Clone, Debug)]
pub struct ComponentCheck {
    /// Component members, ascending.
    pub members: Vec<UserId>,
    /// Sum of declared expected payoffs.
    pub estimated: f64,
    /// Sum of realized mean payoffs.
    pub empirical: f64,
    /// Three combined standard errors.
    pub tolerance: f64,
}

impl ComponentCheck {
    /// The declared total does not overestimate the realized one beyond
    /// statistical error. The declared model ignores multi-hop relaying, and
    /// longer relay paths only add deliveries, so per component the realized
    /// total should not fall below the declared one.
    pub fn underestimates(&self) -> bool {
        self.estimated <= self.empirical + self.tolerance
    }
}

/// Splits the final network into connected components and compares declared
/// (one-hop) expected payoffs against realized means per component.
pub fn aggregate_payoff_check(
    result: &RunResult,
    estimates: &[crate::payoff::PayoffEstimate],
) -> Result<Vec<ComponentCheck>> {
    let n = result.final_network.n_users();
    if estimates.len() != n || result.user_stats.len() != n {
        return Err(Error::InvalidConfig(format!(
            "need estimates and stats for all {n} users, got {} and {}",
            estimates.len(),
            result.user_stats.len()
        )));
    }
    let mut seen = vec![false; n];
    let mut checks = Vec::new();
    for u in 0..n {
        if seen[u] {
            continue;
        }
        let members: Vec<UserId> = result
            .final_network
            .connected_component(u)
            .into_iter()
            .collect();
        let mut estimated = 0.0;
        let mut empirical = 0.0;
        let mut var = 0.0;
        for &m in &members {
            seen[m] = true;
            estimated += estimates[m].payoff;
            empirical += result.user_stats[m].mean_payoff;
            var += estimates[m].std_error.powi(2)
                + result.user_stats[m].payoff_std_error.powi(2);
        }
        checks.push(ComponentCheck {
            members,
            estimated,
            empirical,
            tolerance: 3.0 * var.sqrt(),
        });
    }
    Ok(checks)
}
