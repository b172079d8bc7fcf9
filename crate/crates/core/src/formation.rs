//! Myopic network formation: feasible link moves and pairwise stability.
//!
//! Users evaluate links selfishly through a [`PayoffFn`]. A missing link is
//! a feasible addition when both endpoints strictly improve from adding it;
//! an existing link is a feasible subtraction when at least one endpoint
//! strictly improves from cutting it (consent is only needed to create a
//! link, not to sever one). A network with no feasible move in either
//! direction is pairwise stable.
//!
//! [`run_dynamics`] plays the one-link-at-a-time process: while feasible
//! moves exist, pick one uniformly at random, apply it, and record the step.

use std::collections::HashMap;
use std::io::Write;

use crate::error::Result;
use crate::model::{AgreementNetwork, ContactGraph, CostModel, Edge, UserId, UserProfile};
use crate::payoff::estimate_payoff;
use crate::stochastic::RngStream;

/// Expected payoff of a user under a given agreement network.
///
/// Implementations may cache (hence `&mut self`), and may be noisy
/// estimators; `comparison_tolerance` is the margin a change must clear to
/// count as a strict improvement.
pub trait PayoffFn {
    fn payoff(&mut self, user: UserId, g: &AgreementNetwork) -> f64;

    /// Margin for strict comparisons; an endpoint improves only when the
    /// payoff rises by more than this.
    fn comparison_tolerance(&self) -> f64 {
        0.0
    }
}

impl<F: FnMut(UserId, &AgreementNetwork) -> f64> PayoffFn for F {
    fn payoff(&mut self, user: UserId, g: &AgreementNetwork) -> f64 {
        self(user, g)
    }
}

/// Missing links that both endpoints strictly want, in ascending edge order.
pub fn feasible_additions<P: PayoffFn + ?Sized>(
    g: &AgreementNetwork,
    payoffs: &mut P,
) -> Vec<Edge> {
    let eps = payoffs.comparison_tolerance();
    let mut work = g.clone();
    let mut out = Vec::new();
    for i in 0..g.n_users() {
        for j in (i + 1)..g.n_users() {
            let e = Edge::new(i, j);
            if g.contains(&e) {
                continue;
            }
            let before_i = payoffs.payoff(i, g);
            let before_j = payoffs.payoff(j, g);
            work.add(e);
            let gain_i = payoffs.payoff(i, &work) - before_i > eps;
            let gain_j = payoffs.payoff(j, &work) - before_j > eps;
            work.remove(&e);
            if gain_i && gain_j {
                out.push(e);
            }
        }
    }
    out
}

/// Existing links that at least one endpoint strictly wants to cut, in
/// ascending edge order.
pub fn feasible_subtractions<P: PayoffFn + ?Sized>(
    g: &AgreementNetwork,
    payoffs: &mut P,
) -> Vec<Edge> {
    let eps = payoffs.comparison_tolerance();
    let mut work = g.clone();
    let mut out = Vec::new();
    for e in g.edges() {
        let (i, j) = e.endpoints();
        let before_i = payoffs.payoff(i, g);
        let before_j = payoffs.payoff(j, g);
        work.remove(e);
        let gain_i = payoffs.payoff(i, &work) - before_i > eps;
        let gain_j = payoffs.payoff(j, &work) - before_j > eps;
        work.add(*e);
        if gain_i || gain_j {
            out.push(*e);
        }
    }
    out
}

/// No feasible addition and no feasible subtraction.
pub fn is_pairwise_stable<P: PayoffFn + ?Sized>(g: &AgreementNetwork, payoffs: &mut P) -> bool {
    feasible_additions(g, payoffs).is_empty() && feasible_subtractions(g, payoffs).is_empty()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Add,
    Remove,
}

impl StepKind {
    fn label(self) -> &'static str {
        match self {
            StepKind::Add => "add",
            StepKind::Remove => "remove",
        }
    }
}

/// One applied move. Payoffs are reported for the edge's endpoints in
/// ascending id order, evaluated just before and just after the move.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationStep {
    pub kind: StepKind,
    pub edge: Edge,
    pub payoff_before: (f64, f64),
    pub payoff_after: (f64, f64),
    /// Edge count after applying the move.
    pub n_edges: usize,
}

/// A completed run of the formation dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsRun {
    pub steps: Vec<FormationStep>,
    pub final_network: AgreementNetwork,
    /// True when the run stopped because no feasible move was left, in which
    /// case `final_network` is pairwise stable. False means the step cap was
    /// hit with moves still available.
    pub terminated: bool,
}

impl DynamicsRun {
    /// Writes the trajectory as CSV with one row per applied move.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "kind",
            "i",
            "j",
            "n_edges",
            "payoff_i_before",
            "payoff_i_after",
            "payoff_j_before",
            "payoff_j_after",
        ])?;
        for (idx, s) in self.steps.iter().enumerate() {
            let (i, j) = s.edge.endpoints();
            w.write_record([
                idx.to_string(),
                s.kind.label().to_string(),
                i.to_string(),
                j.to_string(),
                s.n_edges.to_string(),
                s.payoff_before.0.to_string(),
                s.payoff_after.0.to_string(),
                s.payoff_before.1.to_string(),
                s.payoff_after.1.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plays the formation dynamics from `start`: while feasible moves exist and
/// fewer than `max_steps` moves were made, one move is drawn uniformly from
/// the union of feasible additions and subtractions and applied.
///
/// Stability is re-checked after the last move, so `terminated` is true
/// exactly when the final network is pairwise stable.
pub fn run_dynamics<P: PayoffFn + ?Sized>(
    start: &AgreementNetwork,
    payoffs: &mut P,
    max_steps: usize,
    rng: &mut RngStream,
) -> DynamicsRun {
    let mut g = start.clone();
    let mut steps = Vec::new();
    let terminated = loop {
        let adds = feasible_additions(&g, payoffs);
        let subs = feasible_subtractions(&g, payoffs);
        if adds.is_empty() && subs.is_empty() {
            break true;
        }
        if steps.len() >= max_steps {
            break false;
        }
        let pick = rng.index(adds.len() + subs.len());
        let (kind, edge) = if pick < adds.len() {
            (StepKind::Add, adds[pick])
        } else {
            (StepKind::Remove, subs[pick - adds.len()])
        };
        let (i, j) = edge.endpoints();
        let payoff_before = (payoffs.payoff(i, &g), payoffs.payoff(j, &g));
        match kind {
            StepKind::Add => {
                g.add(edge);
            }
            StepKind::Remove => {
                g.remove(&edge);
            }
        }
        let payoff_after = (payoffs.payoff(i, &g), payoffs.payoff(j, &g));
        steps.push(FormationStep {
            kind,
            edge,
            payoff_before,
            payoff_after,
            n_edges: g.edge_count(),
        });
    };
    DynamicsRun {
        steps,
        final_network: g,
        terminated,
    }
}

/// Monte-Carlo payoff function over a fixed population, with caching.
///
/// All evaluations share one base stream, so a user's estimate under two
/// networks reuses the same variates for shared neighbors (common random
/// numbers); this keeps comparisons far less noisy than independent
/// estimates of the same size.
pub struct McPayoff<'a> {
    users: &'a [UserProfile],
    contacts: &'a ContactGraph,
    costs: CostModel,
    n_samples: u64,
    base: RngStream,
    tolerance: f64,
    cache: HashMap<(UserId, Vec<Edge>), f64>,
}

impl<'a> McPayoff<'a> {
    pub fn new(
        users: &'a [UserProfile],
        contacts: &'a ContactGraph,
        costs: CostModel,
        n_samples: u64,
        base: RngStream,
    ) -> Self {
        Self {
            users,
            contacts,
            costs,
            n_samples,
            base,
            tolerance: 0.0,
            cache: HashMap::new(),
        }
    }

    /// Sets the strict-comparison margin (useful to absorb estimator noise).
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

impl PayoffFn for McPayoff<'_> {
    fn payoff(&mut self, user: UserId, g: &AgreementNetwork) -> f64 {
        let key = (user, g.edges().copied().collect::<Vec<_>>());
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let est = estimate_payoff(
            user,
            g,
            self.users,
            self.contacts,
            &self.costs,
            self.n_samples,
            &self.base,
        )
        .expect("payoff estimation on validated population");
        self.cache.insert(key, est.payoff);
        est.payoff
    }

    fn comparison_tolerance(&self) -> f64 {
        self.tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(g: &AgreementNetwork) -> Vec<Edge> {
        g.edges().copied().collect()
    }

    #[test]
    fn zero_payoff_means_everything_is_stable() {
        let mut flat = |_: UserId, _: &AgreementNetwork| 0.0;
        assert!(is_pairwise_stable(&AgreementNetwork::empty(4), &mut flat));
        assert!(is_pairwise_stable(&AgreementNetwork::complete(4), &mut flat));
    }

    #[test]
    fn degree_lovers_build_the_complete_network() {
        let mut social = |u: UserId, g: &AgreementNetwork| g.degree(u) as f64;
        let empty = AgreementNetwork::empty(4);
        assert_eq!(feasible_additions(&empty, &mut social).len(), 6);
        assert!(feasible_subtractions(&empty, &mut social).is_empty());
        let mut rng = RngStream::new(3, "dyn");
        let run = run_dynamics(&empty, &mut social, 100, &mut rng);
        assert!(run.terminated);
        assert_eq!(run.final_network, AgreementNetwork::complete(4));
        assert_eq!(run.steps.len(), 6);
        assert!(run.steps.iter().all(|s| s.kind == StepKind::Add));
    }

    #[test]
    fn degree_haters_tear_everything_down() {
        let mut hermit = |u: UserId, g: &AgreementNetwork| -(g.degree(u) as f64);
        let full = AgreementNetwork::complete(4);
        assert_eq!(feasible_subtractions(&full, &mut hermit).len(), 6);
        assert!(feasible_additions(&full, &mut hermit).is_empty());
        let mut rng = RngStream::new(3, "dyn");
        let run = run_dynamics(&full, &mut hermit, 100, &mut rng);
        assert!(run.terminated);
        assert_eq!(run.final_network.edge_count(), 0);
    }

    #[test]
    fn one_sided_gain_cannot_add_but_can_cut() {
        // User 0 profits from the link, user 1 suffers: never added by
        // mutual consent, cut unilaterally once present.
        let mut lopsided = |u: UserId, g: &AgreementNetwork| {
            let linked = g.contains(&Edge::new(0, 1));
            match (u, linked) {
                (0, true) => 1.0,
                (1, true) => -1.0,
                _ => 0.0,
            }
        };
        let apart = AgreementNetwork::empty(2);
        assert!(feasible_additions(&apart, &mut lopsided).is_empty());
        let together = AgreementNetwork::from_edges(2, [Edge::new(0, 1)]).unwrap();
        assert_eq!(
            feasible_subtractions(&together, &mut lopsided),
            vec![Edge::new(0, 1)]
        );
        assert!(!is_pairwise_stable(&together, &mut lopsided));
        assert!(is_pairwise_stable(&apart, &mut lopsided));
    }

    #[test]
    fn tolerance_swallows_small_gains() {
        struct Faint;
        impl PayoffFn for Faint {
            fn payoff(&mut self, u: UserId, g: &AgreementNetwork) -> f64 {
                0.01 * g.degree(u) as f64
            }
            fn comparison_tolerance(&self) -> f64 {
                0.1
            }
        }
        let mut p = Faint;
        assert!(feasible_additions(&AgreementNetwork::empty(3), &mut p).is_empty());
        assert!(is_pairwise_stable(&AgreementNetwork::empty(3), &mut p));
    }

    #[test]
    fn zero_step_run_reports_stability_without_moving() {
        let mut social = |u: UserId, g: &AgreementNetwork| g.degree(u) as f64;
        let mut rng = RngStream::new(1, "dyn");
        let run = run_dynamics(&AgreementNetwork::empty(3), &mut social, 0, &mut rng);
        assert!(!run.terminated);
        assert!(run.steps.is_empty());
        let run = run_dynamics(&AgreementNetwork::complete(3), &mut social, 0, &mut rng);
        assert!(run.terminated);
    }

    #[test]
    fn recorded_steps_respect_the_rules() {
        // Pseudo-random but deterministic payoffs keyed on (user, network).
        let mut chaotic = |u: UserId, g: &AgreementNetwork| {
            let mut h = 0xcbf29ce484222325u64 ^ (u as u64).wrapping_mul(31);
            for e in g.edges() {
                let (a, b) = e.endpoints();
                h ^= (a * 97 + b) as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
            (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, "chaos");
            let start = AgreementNetwork::empty(4);
            let run = run_dynamics(&start, &mut chaotic, 200, &mut rng);
            for s in &run.steps {
                match s.kind {
                    StepKind::Add => {
                        assert!(s.payoff_after.0 > s.payoff_before.0);
                        assert!(s.payoff_after.1 > s.payoff_before.1);
                    }
                    StepKind::Remove => {
                        assert!(
                            s.payoff_after.0 > s.payoff_before.0
                                || s.payoff_after.1 > s.payoff_before.1
                        );
                    }
                }
            }
            if run.terminated {
                assert!(is_pairwise_stable(&run.final_network.clone(), &mut chaotic));
            }
        }
    }

    #[test]
    fn dynamics_replay_exactly() {
        let mut social = |u: UserId, g: &AgreementNetwork| {
            g.degree(u) as f64 - 0.3 * g.edge_count() as f64
        };
        let start = AgreementNetwork::empty(5);
        let mut r1 = RngStream::new(11, "dyn");
        let mut r2 = RngStream::new(11, "dyn");
        let a = run_dynamics(&start, &mut social, 50, &mut r1);
        let b = run_dynamics(&start, &mut social, 50, &mut r2);
        assert_eq!(a, b);
        assert_eq!(edges(&a.final_network), edges(&b.final_network));
    }

    #[test]
    fn trajectory_csv_has_one_row_per_step() {
        let mut social = |u: UserId, g: &AgreementNetwork| g.degree(u) as f64;
        let mut rng = RngStream::new(2, "dyn");
        let run = run_dynamics(&AgreementNetwork::empty(3), &mut social, 10, &mut rng);
        let mut buf = Vec::new();
        run.write_trajectory_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), run.steps.len() + 1);
        assert!(lines[0].starts_with("step,kind,i,j,n_edges"));
        assert!(lines[1].contains("add"));
    }

    #[test]
    fn mc_payoff_caches_and_replays() {
        use crate::model::ScenarioConfig;
        let cfg = ScenarioConfig {
            n_users: 4,
            max_contacts: 2,
            access_shape_range: (2.0, 6.0),
            access_scale_range: (15.0, 45.0),
            contact_scale_range: (10.0, 15.0),
            contact_shape_range: (1.5, 3.0),
            costs: CostModel {
                cellular: 4.0,
                d2d: 1.0,
            },
            master_seed: 0,
        };
        let s = cfg.generate(&mut RngStream::new(4, "scenario")).unwrap();
        let costs = cfg.costs;
        let g = s.contacts.full_agreement();
        let mut p1 = McPayoff::new(&s.users, &s.contacts, costs, 2_000, RngStream::new(1, "mc"));
        let mut p2 = McPayoff::new(&s.users, &s.contacts, costs, 2_000, RngStream::new(1, "mc"));
        let v1 = p1.payoff(0, &g);
        assert_eq!(v1, p1.payoff(0, &g));
        assert_eq!(v1, p2.payoff(0, &g));
        assert_eq!(p1.comparison_tolerance(), 0.0);
        assert_eq!(p1.with_tolerance(0.05).comparison_tolerance(), 0.05);
    }
}
