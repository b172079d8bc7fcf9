//! Exhaustive analysis of the formation rules over all networks on a small
//! user set.
//!
//! Every agreement network on `n` users maps to a bitmask over the
//! `n*(n-1)/2` edge slots ([`NetworkId`]). Given a complete payoff table
//! (one value per user per network), the rule supernetwork is the directed
//! graph whose arcs are the feasible one-link moves: add when both endpoints
//! strictly gain, remove when at least one does. Strongly connected
//! components of this graph collapse into a condensation DAG; its sink
//! classes are the basins of the dynamics.
//!
//! The structural claims verified by [`verify_theorem1`] are:
//! 1. at least one basin exists;
//! 2. the pairwise stable networks are exactly the singleton basins;
//! 3. random move trajectories are absorbed into a basin and never leave it;
//! 4. every trajectory settles at a single network exactly when all basins
//!    are singletons.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::formation::PayoffFn;
use crate::model::{AgreementNetwork, Edge, Scenario, UserId};
use crate::model::CostModel;
use crate::payoff::estimate_payoff;
use crate::stochastic::RngStream;

/// Hard cap on edge slots (7 users): the supernetwork has `2^slots` nodes.
pub const MAX_EDGE_SLOTS: usize = 20;

pub fn edge_slot_count(n_users: usize) -> usize {
    n_users * (n_users - 1) / 2
}

fn check_table_size(n_users: usize) -> Result<()> {
    if n_users < 2 {
        return Err(Error::InvalidParameter(format!(
            "a payoff table needs at least 2 users, got {n_users}"
        )));
    }
    let slots = edge_slot_count(n_users);
    if slots > MAX_EDGE_SLOTS {
        return Err(Error::TooManyEdgeSlots {
            slots,
            limit: MAX_EDGE_SLOTS,
        });
    }
    Ok(())
}

/// Lexicographic slot of an edge: (0,1), (0,2), ..., (0,n-1), (1,2), ...
pub fn edge_slot(n_users: usize, edge: Edge) -> usize {
    let (i, j) = edge.endpoints();
    assert!(j < n_users, "edge endpoint {j} out of range");
    i * (2 * n_users - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`edge_slot`].
pub fn slot_edge(n_users: usize, slot: usize) -> Edge {
    let mut rest = slot;
    for i in 0..n_users {
        let row = n_users - i - 1;
        if rest < row {
            return Edge::new(i, i + 1 + rest);
        }
        rest -= row;
    }
    panic!("slot {slot} out of range for {n_users} users");
}

/// A network on a fixed small user set, encoded as an edge-slot bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetworkId(pub u32);

impl NetworkId {
    pub fn from_network(g: &AgreementNetwork) -> Result<Self> {
        let n = g.n_users();
        let slots = edge_slot_count(n);
        if slots > MAX_EDGE_SLOTS {
            return Err(Error::TooManyEdgeSlots {
                slots,
                limit: MAX_EDGE_SLOTS,
            });
        }
        let mut bits = 0u32;
        for e in g.edges() {
            bits |= 1 << edge_slot(n, *e);
        }
        Ok(Self(bits))
    }

    pub fn to_network(self, n_users: usize) -> AgreementNetwork {
        let mut g = AgreementNetwork::empty(n_users);
        for slot in 0..edge_slot_count(n_users) {
            if self.has_slot(slot) {
                g.add(slot_edge(n_users, slot));
            }
        }
        g
    }

    pub fn has_slot(self, slot: usize) -> bool {
        self.0 & (1 << slot) != 0
    }

    pub fn toggle(self, slot: usize) -> Self {
        Self(self.0 ^ (1 << slot))
    }

    pub fn edge_count(self) -> u32 {
        self.0.count_ones()
    }
}

/// Expected payoff of every user under every network on the user set.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTable {
    n_users: usize,
    values: Vec<f64>,
}

impl PayoffTable {
    /// `values` is laid out network-major: entry `net * n_users + user`.
    /// Rejects wrong sizes and non-finite entries.
    pub fn new(n_users: usize, values: Vec<f64>) -> Result<Self> {
        check_table_size(n_users)?;
        let slots = edge_slot_count(n_users);
        let expect = (1usize << slots) * n_users;
        if values.len() != expect {
            return Err(Error::IncompleteTable(format!(
                "need {expect} entries for {n_users} users, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::IncompleteTable(format!(
                "non-finite payoff for user {} under network {}",
                pos % n_users,
                pos / n_users
            )));
        }
        Ok(Self { n_users, values })
    }

    pub fn from_fn(n_users: usize, mut f: impl FnMut(UserId, NetworkId) -> f64) -> Result<Self> {
        check_table_size(n_users)?;
        let slots = edge_slot_count(n_users);
        let mut values = Vec::with_capacity((1usize << slots) * n_users);
        for net in 0..(1u32 << slots) {
            for user in 0..n_users {
                values.push(f(user, NetworkId(net)));
            }
        }
        Self::new(n_users, values)
    }

    /// Independent uniform payoffs on [-1, 1]; ties have probability zero,
    /// so the induced move graph is almost surely in general position.
    pub fn random(n_users: usize, rng: &mut RngStream) -> Result<Self> {
        Self::from_fn(n_users, |_, _| rng.range(-1.0, 1.0))
    }

    /// Monte-Carlo payoff of every user under every network of a concrete
    /// population. All entries share `base`, so comparisons across networks
    /// ride on common random numbers.
    pub fn from_scenario(
        scenario: &Scenario,
        costs: &CostModel,
        n_samples: u64,
        base: &RngStream,
    ) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.n_users();
        check_table_size(n)?;
        let slots = edge_slot_count(n);
        let mut values = Vec::with_capacity((1usize << slots) * n);
        for net in 0..(1u32 << slots) {
            let g = NetworkId(net).to_network(n);
            for user in 0..n {
                let est = estimate_payoff(
                    user,
                    &g,
                    &scenario.users,
                    &scenario.contacts,
                    costs,
                    n_samples,
                    base,
                )?;
                values.push(est.payoff);
            }
        }
        Self::new(n, values)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_networks(&self) -> usize {
        1usize << edge_slot_count(self.n_users)
    }

    pub fn get(&self, user: UserId, net: NetworkId) -> f64 {
        self.values[net.0 as usize * self.n_users + user]
    }
}

/// Adapter to drive the formation dynamics from a payoff table.
pub struct TablePayoff<'a>(pub &'a PayoffTable);

impl PayoffFn for TablePayoff<'_> {
    fn payoff(&mut self, user: UserId, g: &AgreementNetwork) -> f64 {
        assert_eq!(g.n_users(), self.0.n_users, "network size mismatch");
        let id = NetworkId::from_network(g).expect("within supernetwork cap");
        self.0.get(user, id)
    }
}

/// The move graph over all networks, in compressed sparse-row form.
#[derive(Clone, Debug)]
pub struct RuleSupernetwork {
    n_users: Option<usize>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl RuleSupernetwork {
    /// Builds the move graph for a payoff table by testing every single-link
    /// toggle against the formation rules with exact comparisons.
    pub fn build(table: &PayoffTable) -> Result<Self> {
        let n_users = table.n_users();
        let slots = edge_slot_count(n_users);
        let n_networks = 1usize << slots;
        let endpoints: Vec<(UserId, UserId)> = (0..slots)
            .map(|s| slot_edge(n_users, s).endpoints())
            .collect();
        let mut offsets = Vec::with_capacity(n_networks + 1);
        let mut targets = Vec::new();
        offsets.push(0u32);
        for raw in 0..n_networks {
            let cur = NetworkId(raw as u32);
            for (slot, &(i, j)) in endpoints.iter().enumerate() {
                let next = cur.toggle(slot);
                let gain_i = table.get(i, next) > table.get(i, cur);
                let gain_j = table.get(j, next) > table.get(j, cur);
                let feasible = if cur.has_slot(slot) {
                    gain_i || gain_j
                } else {
                    gain_i && gain_j
                };
                if feasible {
                    targets.push(next.0);
                }
            }
            offsets.push(targets.len() as u32);
        }
        Ok(Self {
            n_users: Some(n_users),
            offsets,
            targets,
        })
    }

    /// Wraps a hand-built successor structure (for tests and worked
    /// examples); node ids are opaque and need not be network bitmasks.
    pub fn from_successors(successors: Vec<Vec<u32>>) -> Self {
        let n = successors.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0u32);
        for succ in &successors {
            for &t in succ {
                assert!((t as usize) < n, "successor {t} out of range");
                targets.push(t);
            }
            offsets.push(targets.len() as u32);
        }
        Self {
            n_users: None,
            offsets,
            targets,
        }
    }

    /// User count when built from a payoff table.
    pub fn n_users(&self) -> Option<usize> {
        self.n_users
    }

    pub fn n_networks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn successors(&self, net: u32) -> &[u32] {
        let lo = self.offsets[net as usize] as usize;
        let hi = self.offsets[net as usize + 1] as usize;
        &self.targets[lo..hi]
    }

    pub fn out_degree(&self, net: u32) -> usize {
        self.successors(net).len()
    }

    /// Networks with no feasible move, in ascending order.
    pub fn stable_networks(&self) -> Vec<u32> {
        (0..self.n_networks() as u32)
            .filter(|&v| self.out_degree(v) == 0)
            .collect()
    }
}

/// Strongly connected components of the move graph and the acyclic quotient.
#[derive(Clone, Debug)]
pub struct Condensation {
    /// Class index of each network.
    pub class_of: Vec<u32>,
    /// Sorted member networks of each class.
    pub members: Vec<Vec<u32>>,
    /// Distinct successor classes of each class (sorted); verified acyclic.
    pub dag: Vec<Vec<u32>>,
    /// Classes with no outgoing arcs (the basins), ascending.
    pub basins: Vec<u32>,
}

impl Condensation {
    pub fn n_classes(&self) -> usize {
        self.members.len()
    }

    pub fn is_basin(&self, class: u32) -> bool {
        self.dag[class as usize].is_empty()
    }

    /// Members of singleton basins, in ascending order.
    pub fn singleton_basin_networks(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .basins
            .iter()
            .filter(|&&c| self.members[c as usize].len() == 1)
            .map(|&c| self.members[c as usize][0])
            .collect();
        out.sort_unstable();
        out
    }
}

/// Tarjan's algorithm with an explicit stack; the supernetwork can have a
/// million nodes, which would overflow the call stack if done recursively.
pub fn condense(sn: &RuleSupernetwork) -> Condensation {
    let n = sn.n_networks();
    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut class_of = vec![UNSET; n];
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut next_index = 0u32;
    let mut frames: Vec<(u32, u32)> = Vec::new();

    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        frames.push((root, 0));
        while let Some(frame) = frames.last_mut() {
            let v = frame.0 as usize;
            if frame.1 == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(frame.0);
                on_stack[v] = true;
            }
            let succs = sn.successors(frame.0);
            if (frame.1 as usize) < succs.len() {
                let w = succs[frame.1 as usize];
                frame.1 += 1;
                if index[w as usize] == UNSET {
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v] = low[v].min(index[w as usize]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("scc stack underflow");
                        on_stack[w as usize] = false;
                        class_of[w as usize] = members.len() as u32;
                        comp.push(w);
                        if w as usize == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    members.push(comp);
                }
                let low_v = low[v];
                frames.pop();
                if let Some(parent) = frames.last_mut() {
                    let p = parent.0 as usize;
                    low[p] = low[p].min(low_v);
                }
            }
        }
    }

    let n_classes = members.len();
    let mut dag: Vec<Vec<u32>> = vec![Vec::new(); n_classes];
    for v in 0..n as u32 {
        let cv = class_of[v as usize];
        for &w in sn.successors(v) {
            let cw = class_of[w as usize];
            if cw != cv {
                dag[cv as usize].push(cw);
            }
        }
    }
    for succ in &mut dag {
        succ.sort_unstable();
        succ.dedup();
    }

    // The quotient of an SCC partition is acyclic by construction; check it
    // anyway so a bug here can never silently corrupt downstream claims.
    let mut in_degree = vec![0u32; n_classes];
    for succ in &dag {
        for &c in succ {
            in_degree[c as usize] += 1;
        }
    }
    let mut queue: VecDeque<u32> = (0..n_classes as u32)
        .filter(|&c| in_degree[c as usize] == 0)
        .collect();
    let mut seen = 0;
    while let Some(c) = queue.pop_front() {
        seen += 1;
        for &d in &dag[c as usize] {
            in_degree[d as usize] -= 1;
            if in_degree[d as usize] == 0 {
                queue.push_back(d);
            }
        }
    }
    assert_eq!(seen, n_classes, "condensation is not acyclic");

    let basins: Vec<u32> = (0..n_classes as u32)
        .filter(|&c| dag[c as usize].is_empty())
        .collect();
    Condensation {
        class_of,
        members,
        dag,
        basins,
    }
}

/// The pairwise stable networks computed two independent ways.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableSets {
    /// Networks with no feasible move (scanned directly from the rules).
    pub by_rules: Vec<u32>,
    /// Members of singleton basins of the condensation.
    pub by_basins: Vec<u32>,
}

impl StableSets {
    pub fn consistent(&self) -> bool {
        self.by_rules == self.by_basins
    }
}

pub fn pairwise_stable_set(sn: &RuleSupernetwork, cond: &Condensation) -> StableSets {
    StableSets {
        by_rules: sn.stable_networks(),
        by_basins: cond.singleton_basin_networks(),
    }
}

/// Outcome of checking the four structural claims on one supernetwork.
#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub n_networks: usize,
    pub n_classes: usize,
    pub n_basins: usize,
    pub n_singleton_basins: usize,
    pub basins_nonempty: bool,
    pub stable_sets_consistent: bool,
    pub n_stable: usize,
    pub all_basins_singleton: bool,
    pub n_trajectories: usize,
    /// Trajectories that entered a basin within the step cap.
    pub n_absorbed: usize,
    /// Trajectories that ended at a network with no feasible move.
    pub n_settled: usize,
    pub convergence_consistent: bool,
    /// Human-readable counterexamples; empty on a clean pass.
    pub failures: Vec<String>,
}

impl TheoremReport {
    pub fn pass(&self) -> bool {
        self.basins_nonempty
            && self.stable_sets_consistent
            && self.convergence_consistent
            && self.failures.is_empty()
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "supernetwork: {} networks, {} classes, {} basins ({} singleton)",
            self.n_networks, self.n_classes, self.n_basins, self.n_singleton_basins
        )?;
        writeln!(
            f,
            "claim basins-exist: {}",
            if self.basins_nonempty { "ok" } else { "FAILED" }
        )?;
        writeln!(
            f,
            "claim stable-equals-singleton-basins: {} ({} stable networks)",
            if self.stable_sets_consistent {
                "ok"
            } else {
                "FAILED"
            },
            self.n_stable
        )?;
        writeln!(
            f,
            "claim trajectories-absorbed: {} ({}/{} absorbed, {} settled)",
            if self.n_absorbed == self.n_trajectories {
                "ok"
            } else {
                "FAILED"
            },
            self.n_absorbed,
            self.n_trajectories,
            self.n_settled
        )?;
        writeln!(
            f,
            "claim settle-iff-singleton-basins: {}",
            if self.convergence_consistent {
                "ok"
            } else {
                "FAILED"
            }
        )?;
        if self.failures.is_empty() {
            writeln!(f, "failures: none")
        } else {
            writeln!(f, "failures:")?;
            for line in &self.failures {
                writeln!(f, "  - {line}")?;
            }
            Ok(())
        }
    }
}

/// Checks the structural claims by random walks over the move graph.
///
/// Each trajectory starts from a uniformly random network and follows
/// uniformly random feasible moves until it either reaches a network with no
/// moves or exhausts `max_steps`.
pub fn verify_theorem1(
    sn: &RuleSupernetwork,
    cond: &Condensation,
    n_trajectories: usize,
    max_steps: usize,
    rng: &mut RngStream,
) -> TheoremReport {
    let n = sn.n_networks();
    let sets = pairwise_stable_set(sn, cond);
    let singleton_basins = cond
        .basins
        .iter()
        .filter(|&&c| cond.members[c as usize].len() == 1)
        .count();
    let all_singleton = singleton_basins == cond.basins.len();
    let mut failures = Vec::new();

    if !sets.consistent() {
        failures.push(format!(
            "stable sets disagree: rules {:?} vs singleton basins {:?}",
            sets.by_rules, sets.by_basins
        ));
    }
    // Inside a multi-member basin every network keeps at least one feasible
    // move, so the dynamics can never settle there.
    for &c in &cond.basins {
        let mem = &cond.members[c as usize];
        if mem.len() >= 2 {
            for &v in mem {
                if sn.out_degree(v) == 0 {
                    failures.push(format!(
                        "network {v} has no moves but sits in multi-member basin class {c}"
                    ));
                }
            }
        }
    }

    let mut n_absorbed = 0;
    let mut n_settled = 0;
    let mut settled_in_multi = false;
    for t in 0..n_trajectories {
        let mut state = rng.index(n) as u32;
        let start = state;
        let mut entered: Option<u32> = None;
        let mut settled = false;
        let mut steps = 0;
        loop {
            let cls = cond.class_of[state as usize];
            match entered {
                None => {
                    if cond.is_basin(cls) {
                        entered = Some(cls);
                    }
                }
                Some(c0) => {
                    if cls != c0 {
                        failures.push(format!(
                            "trajectory {t} from {start} escaped basin class {c0} to class {cls} at network {state}"
                        ));
                        break;
                    }
                }
            }
            let succs = sn.successors(state);
            if succs.is_empty() {
                settled = true;
                break;
            }
            if steps >= max_steps {
                break;
            }
            steps += 1;
            state = succs[rng.index(succs.len())];
        }
        match entered {
            Some(c) => {
                n_absorbed += 1;
                if settled {
                    n_settled += 1;
                    if cond.members[c as usize].len() >= 2 {
                        settled_in_multi = true;
                        failures.push(format!(
                            "trajectory {t} settled at {state} inside multi-member basin class {c}"
                        ));
                    }
                }
            }
            None => failures.push(format!(
                "trajectory {t} from {start} never entered a basin within {max_steps} steps"
            )),
        }
    }

    let convergence_consistent = if all_singleton {
        n_settled == n_trajectories
    } else {
        !settled_in_multi
    };

    TheoremReport {
        n_networks: n,
        n_classes: cond.n_classes(),
        n_basins: cond.basins.len(),
        n_singleton_basins: singleton_basins,
        basins_nonempty: !cond.basins.is_empty(),
        stable_sets_consistent: sets.consistent(),
        n_stable: sets.by_rules.len(),
        all_basins_singleton: all_singleton,
        n_trajectories,
        n_absorbed,
        n_settled,
        convergence_consistent,
        failures,
    }
}

/// CSV of the condensation: one row per class with its member networks as
/// semicolon-joined bitmask ids.
pub fn write_condensation_csv<W: Write>(cond: &Condensation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "size", "is_basin", "members"])?;
    for (c, mem) in cond.members.iter().enumerate() {
        let joined = mem
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            c.to_string(),
            mem.len().to_string(),
            cond.is_basin(c as u32).to_string(),
            joined,
        ])?;
    }
    w.flush()?;
    Ok(())
}
