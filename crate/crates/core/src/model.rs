//! Users, contact graphs, agreement networks, and scenario generation.
//!
//! A scenario is a fixed population: each user has Weibull access-delay
//! parameters, and a subset of user pairs has Pareto inter-contact
//! parameters (the contact graph, who can physically meet whom). On top of
//! that sits the agreement network, the mutable set of cooperation links the
//! formation dynamics and the simulator operate on. Costs are per-delivery
//! prices: a cellular download costs `cellular`, a D2D handover costs the
//! sender `d2d`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::{ParetoParams, RngStream, WeibullParams};

pub type UserId = usize;

/// One subscriber with their access-delay distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserProfile {
    pub id: UserId,
    pub access: WeibullParams,
}

/// An undirected pair of distinct users, stored with the smaller id first so
/// that `Edge` values compare and hash consistently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: UserId,
    b: UserId,
}

impl Edge {
    /// Panics on a self-loop; loops are a programming error, not data.
    pub fn new(i: UserId, j: UserId) -> Self {
        assert!(i != j, "self-loop edge ({i}, {j})");
        if i < j {
            Self { a: i, b: j }
        } else {
            Self { a: j, b: i }
        }
    }

    /// Endpoints in ascending order.
    pub fn endpoints(&self) -> (UserId, UserId) {
        (self.a, self.b)
    }

    pub fn contains(&self, u: UserId) -> bool {
        self.a == u || self.b == u
    }

    /// The endpoint that is not `u`, if `u` is an endpoint at all.
    pub fn other(&self, u: UserId) -> Option<UserId> {
        if u == self.a {
            Some(self.b)
        } else if u == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Who can meet whom, with the inter-contact distribution of each pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactGraph {
    n_users: usize,
    links: BTreeMap<Edge, ParetoParams>,
}

impl ContactGraph {
    pub fn new(n_users: usize) -> Self {
        Self {
            n_users,
            links: BTreeMap::new(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Registers a contact pair; rejects out-of-range ids and duplicates.
    pub fn insert(&mut self, edge: Edge, params: ParetoParams) -> Result<()> {
        let (a, b) = edge.endpoints();
        if b >= self.n_users {
            return Err(Error::UnknownUser {
                user: b,
                len: self.n_users,
            });
        }
        let _ = a;
        if self.links.contains_key(&edge) {
            return Err(Error::InvalidConfig(format!(
                "duplicate contact pair ({a}, {b})"
            )));
        }
        self.links.insert(edge, params);
        Ok(())
    }

    pub fn get(&self, i: UserId, j: UserId) -> Option<&ParetoParams> {
        if i == j {
            return None;
        }
        self.links.get(&Edge::new(i, j))
    }

    pub fn contains(&self, i: UserId, j: UserId) -> bool {
        self.get(i, j).is_some()
    }

    /// Pairs in ascending edge order.
    pub fn pairs(&self) -> impl Iterator<Item = (Edge, &ParetoParams)> {
        self.links.iter().map(|(e, p)| (*e, p))
    }

    pub fn degree(&self, u: UserId) -> usize {
        self.links.keys().filter(|e| e.contains(u)).count()
    }

    /// Contact partners of `u` in ascending order.
    pub fn neighbors(&self, u: UserId) -> Vec<UserId> {
        self.links.keys().filter_map(|e| e.other(u)).collect()
    }

    /// The agreement network that links every contact pair.
    pub fn full_agreement(&self) -> AgreementNetwork {
        let mut g = AgreementNetwork::empty(self.n_users);
        for (e, _) in self.pairs() {
            g.add(e);
        }
        g
    }
}

/// The mutable cooperation network: a simple undirected graph over the same
/// user set as the contact graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementNetwork {
    n_users: usize,
    edges: BTreeSet<Edge>,
}

impl AgreementNetwork {
    pub fn empty(n_users: usize) -> Self {
        Self {
            n_users,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n_users: usize) -> Self {
        let mut g = Self::empty(n_users);
        for i in 0..n_users {
            for j in (i + 1)..n_users {
                g.add(Edge::new(i, j));
            }
        }
        g
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(n_users: usize, edges: I) -> Result<Self> {
        let mut g = Self::empty(n_users);
        for e in edges {
            let (_, b) = e.endpoints();
            if b >= n_users {
                return Err(Error::UnknownUser {
                    user: b,
                    len: n_users,
                });
            }
            g.add(e);
        }
        Ok(g)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Adds a link; returns false if it was already present. Panics on
    /// out-of-range ids.
    pub fn add(&mut self, edge: Edge) -> bool {
        let (_, b) = edge.endpoints();
        assert!(b < self.n_users, "edge endpoint {b} out of range");
        self.edges.insert(edge)
    }

    /// Removes a link; returns false if it was absent.
    pub fn remove(&mut self, edge: &Edge) -> bool {
        self.edges.remove(edge)
    }

    pub fn contains(&self, edge: &Edge) -> bool {
        self.edges.contains(edge)
    }

    /// Edges in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn degree(&self, u: UserId) -> usize {
        self.edges.iter().filter(|e| e.contains(u)).count()
    }

    /// Agreement partners of `u` in ascending order.
    pub fn neighbors(&self, u: UserId) -> Vec<UserId> {
        self.edges.iter().filter_map(|e| e.other(u)).collect()
    }

    /// All users reachable from `u`, including `u` itself.
    pub fn connected_component(&self, u: UserId) -> BTreeSet<UserId> {
        assert!(u < self.n_users, "user {u} out of range");
        let mut seen = BTreeSet::new();
        let mut frontier = vec![u];
        seen.insert(u);
        while let Some(v) = frontier.pop() {
            for w in self.neighbors(v) {
                if seen.insert(w) {
                    frontier.push(w);
                }
            }
        }
        seen
    }
}

/// Per-delivery prices. A cellular download costs the operator-facing price
/// `cellular`; relaying over D2D costs the sender `d2d`. Offloading only
/// makes economic sense when `d2d < cellular`, but the model does not forbid
/// the opposite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub cellular: f64,
    pub d2d: f64,
}

impl CostModel {
    pub fn new(cellular: f64, d2d: f64) -> Result<Self> {
        let c = Self { cellular, d2d };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cellular > 0.0 && self.cellular.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cellular cost must be positive and finite, got {}",
                self.cellular
            )));
        }
        if !(self.d2d > 0.0 && self.d2d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "d2d cost must be positive and finite, got {}",
                self.d2d
            )));
        }
        if self.d2d >= self.cellular {
            log::warn!(
                "d2d cost {} is not below cellular cost {}; no user can gain from relaying",
                self.d2d,
                self.cellular
            );
        }
        Ok(())
    }

    /// Cellular-to-D2D price ratio.
    pub fn ratio(&self) -> f64 {
        self.cellular / self.d2d
    }
}

/// Recipe for a random population: parameter ranges are sampled uniformly,
/// contact pairs are drawn uniformly among pairs where both endpoints are
/// still below the contact budget `max_contacts`.
///
/// [`ScenarioConfig::default`] is the reference population family used
/// throughout the experiments (20 users, at most 3 contacts each, access
/// shapes in [2, 6], access scales in [15, 45], contact gaps in [10, 15],
/// contact tail exponents in (1, 3], cost ratio 4); config files may
/// override fields selectively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n_users: usize,
    /// Maximum number of contact partners per user.
    pub max_contacts: usize,
    /// Weibull shape range for access delays.
    pub access_shape_range: (f64, f64),
    /// Weibull scale range for access delays.
    pub access_scale_range: (f64, f64),
    /// Pareto minimum-gap range for inter-contact times.
    pub contact_scale_range: (f64, f64),
    /// Pareto tail-exponent range for inter-contact times; the low end must
    /// exceed 1.
    pub contact_shape_range: (f64, f64),
    pub costs: CostModel,
    /// Default master seed for runs driven by this config.
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_users: 20,
            max_contacts: 3,
            access_shape_range: (2.0, 6.0),
            access_scale_range: (15.0, 45.0),
            contact_scale_range: (10.0, 15.0),
            // The tail exponent must exceed 1 for finite mean inter-contact
            // times; the lower end is clipped just above it.
            contact_shape_range: (1.001, 3.0),
            costs: CostModel {
                cellular: 4.0,
                d2d: 1.0,
            },
            master_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 users, got {}",
                self.n_users
            )));
        }
        if self.max_contacts == 0 {
            return Err(Error::InvalidConfig(
                "max_contacts must be at least 1".into(),
            ));
        }
        check_range("access_shape_range", self.access_shape_range, 0.0)?;
        check_range("access_scale_range", self.access_scale_range, 0.0)?;
        check_range("contact_scale_range", self.contact_scale_range, 0.0)?;
        check_range("contact_shape_range", self.contact_shape_range, 1.0)?;
        self.costs.validate()
    }

    /// Draws a population. Access parameters are sampled per user (shape
    /// then scale); contact pairs are then added one at a time, picking
    /// uniformly among pairs whose endpoints are both below `max_contacts`,
    /// until no admissible pair remains. Each pair gets its tail exponent
    /// and then its minimum gap.
    pub fn generate(&self, rng: &mut RngStream) -> Result<Scenario> {
        self.validate()?;
        let users: Vec<UserProfile> = (0..self.n_users)
            .map(|id| {
                let shape = rng.range(self.access_shape_range.0, self.access_shape_range.1);
                let scale = rng.range(self.access_scale_range.0, self.access_scale_range.1);
                Ok(UserProfile {
                    id,
                    access: WeibullParams::new(shape, scale)?,
                })
            })
            .collect::<Result<_>>()?;

        let mut contacts = ContactGraph::new(self.n_users);
        let mut degree = vec![0usize; self.n_users];
        // Users whose contact budget is not yet exhausted, kept sorted.
        let mut open: Vec<UserId> = (0..self.n_users).collect();
        loop {
            if open.len() < 2 {
                break;
            }
            // Rejection sampling is uniform over admissible pairs; when it
            // keeps missing (dense endgame) fall back to exact enumeration
            // over the remaining open users, which is uniform over the same
            // set and detects that none is left.
            let mut edge = None;
            for _ in 0..64 {
                let i = open[rng.index(open.len())];
                let j = open[rng.index(open.len())];
                if i != j && !contacts.contains(i, j) {
                    edge = Some(Edge::new(i, j));
                    break;
                }
            }
            let edge = match edge {
                Some(e) => e,
                None => {
                    let mut candidates = Vec::new();
                    for (pos, &i) in open.iter().enumerate() {
                        for &j in &open[pos + 1..] {
                            if !contacts.contains(i, j) {
                                candidates.push(Edge::new(i, j));
                            }
                        }
                    }
                    if candidates.is_empty() {
                        break;
                    }
                    candidates[rng.index(candidates.len())]
                }
            };
            let shape = rng.range(self.contact_shape_range.0, self.contact_shape_range.1);
            let scale = rng.range(self.contact_scale_range.0, self.contact_scale_range.1);
            contacts.insert(edge, ParetoParams::new(scale, shape)?)?;
            let (a, b) = edge.endpoints();
            for u in [a, b] {
                degree[u] += 1;
                if degree[u] >= self.max_contacts {
                    let pos = open.binary_search(&u).expect("open user present");
                    open.remove(pos);
                }
            }
        }
        Ok(Scenario { users, contacts })
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min_exclusive: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > min_exclusive && hi >= lo) {
        return Err(Error::InvalidConfig(format!(
            "{name} must satisfy {min_exclusive} < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// A realized population: user profiles plus the contact graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub users: Vec<UserProfile>,
    pub contacts: ContactGraph,
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.len() != self.contacts.n_users() {
            return Err(Error::InvalidConfig(format!(
                "{} user profiles but contact graph sized for {}",
                self.users.len(),
                self.contacts.n_users()
            )));
        }
        for (idx, u) in self.users.iter().enumerate() {
            if u.id != idx {
                return Err(Error::InvalidConfig(format!(
                    "user profile at position {idx} has id {}",
                    u.id
                )));
            }
        }
        Ok(())
    }
}

/// Serialized form of a user profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserEntry {
    pub id: UserId,
    pub access_shape: f64,
    pub access_scale: f64,
}

/// Serialized form of a contact pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactEntry {
    pub i: UserId,
    pub j: UserId,
    pub contact_scale: f64,
    pub contact_shape: f64,
}

/// On-disk scenario description: the generation recipe, plus optionally the
/// materialized population so a specific draw can be archived and replayed
/// exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<UserEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contacts: Option<Vec<ContactEntry>>,
}

impl ScenarioFile {
    pub fn from_config(config: ScenarioConfig) -> Self {
        Self {
            scenario: config,
            users: None,
            contacts: None,
        }
    }

    /// Archives a realized population alongside its recipe.
    pub fn with_materialized(config: ScenarioConfig, scenario: &Scenario) -> Self {
        let users = scenario
            .users
            .iter()
            .map(|u| UserEntry {
                id: u.id,
                access_shape: u.access.shape(),
                access_scale: u.access.scale(),
            })
            .collect();
        let contacts = scenario
            .contacts
            .pairs()
            .map(|(e, p)| {
                let (i, j) = e.endpoints();
                ContactEntry {
                    i,
                    j,
                    contact_scale: p.scale(),
                    contact_shape: p.shape(),
                }
            })
            .collect();
        Self {
            scenario: config,
            users: Some(users),
            contacts: Some(contacts),
        }
    }

    /// Validated generation recipe.
    pub fn config(&self) -> Result<ScenarioConfig> {
        self.scenario.validate()?;
        Ok(self.scenario.clone())
    }

    /// Rebuilds the archived population, if one is present. Both the user
    /// list and the contact list must be present together.
    pub fn materialized(&self) -> Result<Option<Scenario>> {
        let (users, contacts) = match (&self.users, &self.contacts) {
            (None, None) => return Ok(None),
            (Some(u), Some(c)) => (u, c),
            _ => {
                return Err(Error::InvalidConfig(
                    "materialized scenario needs both users and contacts".into(),
                ))
            }
        };
        let profiles: Vec<UserProfile> = users
            .iter()
            .map(|u| {
                Ok(UserProfile {
                    id: u.id,
                    access: WeibullParams::new(u.access_shape, u.access_scale)?,
                })
            })
            .collect::<Result<_>>()?;
        let mut graph = ContactGraph::new(profiles.len());
        for c in contacts {
            if c.i == c.j {
                return Err(Error::InvalidConfig(format!(
                    "contact entry with self-loop on user {}",
                    c.i
                )));
            }
            graph.insert(
                Edge::new(c.i, c.j),
                ParetoParams::new(c.contact_scale, c.contact_shape)?,
            )?;
        }
        let scenario = Scenario {
            users: profiles,
            contacts: graph,
        };
        scenario.validate()?;
        Ok(Some(scenario))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            n_users: 20,
            max_contacts: 3,
            access_shape_range: (2.0, 6.0),
            access_scale_range: (15.0, 45.0),
            contact_scale_range: (10.0, 15.0),
            contact_shape_range: (1.001, 3.0),
            costs: CostModel {
                cellular: 4.0,
                d2d: 1.0,
            },
            master_seed: 7,
        }
    }

    #[test]
    fn edge_orders_endpoints() {
        assert_eq!(Edge::new(5, 2), Edge::new(2, 5));
        assert_eq!(Edge::new(5, 2).endpoints(), (2, 5));
        assert_eq!(Edge::new(1, 3).other(3), Some(1));
        assert_eq!(Edge::new(1, 3).other(2), None);
    }

    #[test]
    #[should_panic(expected = "self-loop")]
    fn edge_rejects_loop() {
        let _ = Edge::new(4, 4);
    }

    #[test]
    fn agreement_network_basics() {
        let mut g = AgreementNetwork::empty(4);
        assert!(g.add(Edge::new(0, 1)));
        assert!(!g.add(Edge::new(1, 0)));
        assert!(g.add(Edge::new(1, 2)));
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), vec![0, 2]);
        assert_eq!(g.degree(3), 0);
        assert!(g.remove(&Edge::new(0, 1)));
        assert!(!g.remove(&Edge::new(0, 1)));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(AgreementNetwork::complete(5).edge_count(), 10);
    }

    #[test]
    fn connected_component_splits() {
        let g = AgreementNetwork::from_edges(
            6,
            [Edge::new(0, 1), Edge::new(1, 2), Edge::new(3, 4)],
        )
        .unwrap();
        assert_eq!(
            g.connected_component(0),
            BTreeSet::from([0, 1, 2])
        );
        assert_eq!(g.connected_component(4), BTreeSet::from([3, 4]));
        assert_eq!(g.connected_component(5), BTreeSet::from([5]));
    }

    #[test]
    fn contact_graph_rejects_bad_inserts() {
        let mut g = ContactGraph::new(3);
        let p = ParetoParams::new(10.0, 2.0).unwrap();
        g.insert(Edge::new(0, 1), p).unwrap();
        assert!(g.insert(Edge::new(1, 0), p).is_err());
        assert!(g.insert(Edge::new(1, 3), p).is_err());
        assert!(g.contains(0, 1));
        assert!(!g.contains(0, 2));
        assert!(g.get(1, 1).is_none());
    }

    #[test]
    fn generate_respects_contact_budget() {
        let cfg = small_config();
        let mut rng = RngStream::new(11, "scenario");
        let s = cfg.generate(&mut rng).unwrap();
        s.validate().unwrap();
        assert_eq!(s.n_users(), 20);
        for u in 0..20 {
            assert!(s.contacts.degree(u) <= 3);
        }
        // Saturation: no admissible pair is left unpaired.
        for i in 0..20 {
            for j in (i + 1)..20 {
                if s.contacts.degree(i) < 3 && s.contacts.degree(j) < 3 {
                    assert!(s.contacts.contains(i, j));
                }
            }
        }
        for (_, p) in s.contacts.pairs() {
            assert!(p.shape() > 1.0);
            assert!((10.0..15.0).contains(&p.scale()));
        }
        for u in &s.users {
            assert!((2.0..6.0).contains(&u.access.shape()));
            assert!((15.0..45.0).contains(&u.access.scale()));
        }
    }

    #[test]
    fn generate_two_users_one_pair() {
        let cfg = ScenarioConfig {
            n_users: 2,
            max_contacts: 1,
            ..small_config()
        };
        let s = cfg.generate(&mut RngStream::new(3, "scenario")).unwrap();
        assert_eq!(s.contacts.len(), 1);
        assert!(s.contacts.contains(0, 1));
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = small_config();
        let a = cfg.generate(&mut RngStream::new(5, "scenario")).unwrap();
        let b = cfg.generate(&mut RngStream::new(5, "scenario")).unwrap();
        let c = cfg.generate(&mut RngStream::new(6, "scenario")).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn access_parameter_means_match_ranges() {
        let cfg = ScenarioConfig {
            n_users: 10_000,
            max_contacts: 1,
            ..small_config()
        };
        let s = cfg.generate(&mut RngStream::new(1, "scenario")).unwrap();
        let mean_shape: f64 =
            s.users.iter().map(|u| u.access.shape()).sum::<f64>() / s.n_users() as f64;
        let mean_scale: f64 =
            s.users.iter().map(|u| u.access.scale()).sum::<f64>() / s.n_users() as f64;
        assert!((mean_shape - 4.0).abs() < 0.05, "mean shape {mean_shape}");
        assert!((mean_scale - 30.0).abs() < 0.4, "mean scale {mean_scale}");
    }

    #[test]
    fn config_validation_catches_errors() {
        let mut cfg = small_config();
        cfg.contact_shape_range = (0.9, 3.0);
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.n_users = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.access_scale_range = (45.0, 15.0);
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.costs.d2d = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scenario_file_round_trips() {
        let cfg = small_config();
        let scenario = cfg.generate(&mut RngStream::new(9, "scenario")).unwrap();
        let file = ScenarioFile::with_materialized(cfg.clone(), &scenario);
        let text = file.to_toml_string().unwrap();
        let back = ScenarioFile::from_toml_str(&text).unwrap();
        assert_eq!(file, back);
        assert_eq!(back.config().unwrap(), cfg);
        assert_eq!(back.materialized().unwrap().unwrap(), scenario);
        // Config-only files have no materialized population.
        let bare = ScenarioFile::from_config(cfg);
        let bare_back =
            ScenarioFile::from_toml_str(&bare.to_toml_string().unwrap()).unwrap();
        assert!(bare_back.materialized().unwrap().is_none());
    }

    #[test]
    fn scenario_file_rejects_partial_materialization() {
        let cfg = small_config();
        let scenario = cfg.generate(&mut RngStream::new(9, "scenario")).unwrap();
        let mut file = ScenarioFile::with_materialized(cfg, &scenario);
        file.contacts = None;
        assert!(file.materialized().is_err());
    }
}
