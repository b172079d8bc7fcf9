//! One-hop delivery probabilities and expected payoffs.
//!
//! Fix a recipient `i` and an agreement network. In one content round every
//! user `l` gets the item over cellular at an access delay `a_l`; an
//! agreement neighbor `l` of `i` can instead hand the item to `i` at
//! `a_l + b_l`, where `b_l` is the next inter-contact gap of the pair. The
//! neighbor with the earliest handover time below `a_i` delivers; if no
//! neighbor makes it in time, `i` downloads over cellular at `a_i`. The
//! delivery distribution over sources (neighbors plus `i` itself) is a
//! probability partition.
//!
//! A user's expected payoff nets the cellular spend avoided as a recipient
//! against the relaying cost incurred as a sender:
//! `cellular_price * P(someone delivers to i) - d2d_price * sum_j P(i
//! delivers to j)`.
//!
//! Two independent evaluations are provided: a Monte-Carlo estimator
//! ([`estimate_delivery_probs`]) that works for any neighborhood, and a
//! deterministic tensor-grid quadrature ([`quadrature_delivery_probs`])
//! limited to neighborhoods of one or two users, used as an oracle to
//! cross-check the sampler.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{AgreementNetwork, ContactGraph, CostModel, UserId, UserProfile};
use crate::stochastic::{ParetoParams, RngStream, WeibullParams};

/// Largest neighborhood the quadrature oracle accepts.
pub const QUADRATURE_NEIGHBOR_LIMIT: usize = 2;

/// Where the per-user quadrature grid is truncated: the time by which the
/// access-delay survival drops to 1e-6.
const TAIL_MASS: f64 = 1e-6;

/// Monte-Carlo estimate of the delivery distribution for one recipient.
///
/// Counts are kept as integers so the partition property is exact: the
/// per-source counts always sum to the number of samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryEstimate {
    user: UserId,
    n_samples: u64,
    counts: BTreeMap<UserId, u64>,
}

impl DeliveryEstimate {
    pub fn user(&self) -> UserId {
        self.user
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Samples in which `source` delivered (the recipient itself counts the
    /// cellular fallbacks). Zero for users outside the neighborhood.
    pub fn count(&self, source: UserId) -> u64 {
        self.counts.get(&source).copied().unwrap_or(0)
    }

    pub fn prob(&self, source: UserId) -> f64 {
        self.count(source) as f64 / self.n_samples as f64
    }

    /// Probability that the recipient fell back to cellular.
    pub fn self_prob(&self) -> f64 {
        self.prob(self.user)
    }

    /// Delivery probability per source, keyed by source id; includes the
    /// recipient itself and every agreement neighbor (with probability 0 for
    /// neighbors that can never meet the recipient).
    pub fn probs(&self) -> BTreeMap<UserId, f64> {
        self.counts
            .iter()
            .map(|(&s, &c)| (s, c as f64 / self.n_samples as f64))
            .collect()
    }

    /// Binomial standard error of the probability for `source`.
    pub fn std_error(&self, source: UserId) -> f64 {
        let p = self.prob(source);
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }

    fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn check_inputs(
    user: UserId,
    g: &AgreementNetwork,
    users: &[UserProfile],
    contacts: &ContactGraph,
) -> Result<()> {
    if user >= users.len() {
        return Err(Error::UnknownUser {
            user,
            len: users.len(),
        });
    }
    if g.n_users() != users.len() || contacts.n_users() != users.len() {
        return Err(Error::InvalidConfig(format!(
            "population sizes disagree: {} profiles, agreement network for {}, contact graph for {}",
            users.len(),
            g.n_users(),
            contacts.n_users()
        )));
    }
    Ok(())
}

/// Samples the delivery distribution for `user` under agreement network `g`.
///
/// Each neighbor's access delay and inter-contact gap come from label-derived
/// substreams of `rng` (one per involved user), so estimates for networks
/// sharing neighbors share the same variates: adding a neighbor can only
/// divert samples away from the cellular fallback, never create new ones.
/// Neighbors with no contact parameters are reported with probability zero.
pub fn estimate_delivery_probs(
    user: UserId,
    g: &AgreementNetwork,
    users: &[UserProfile],
    contacts: &ContactGraph,
    n_samples: u64,
    rng: &RngStream,
) -> Result<DeliveryEstimate> {
    check_inputs(user, g, users, contacts)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "n_samples must be positive".into(),
        ));
    }

    struct NeighborDraw {
        id: UserId,
        access: WeibullParams,
        access_rng: RngStream,
        // None when the pair has no contact parameters: delivery impossible.
        contact: Option<(ParetoParams, RngStream)>,
    }

    let mut own_rng = rng.derive(&format!("access/{user}"));
    let own_access = users[user].access;
    let mut neighbors: Vec<NeighborDraw> = g
        .neighbors(user)
        .into_iter()
        .map(|j| NeighborDraw {
            id: j,
            access: users[j].access,
            access_rng: rng.derive(&format!("access/{j}")),
            contact: contacts
                .get(user, j)
                .map(|p| (*p, rng.derive(&format!("meet/{j}")))),
        })
        .collect();

    let mut counts: BTreeMap<UserId, u64> = BTreeMap::new();
    counts.insert(user, 0);
    for n in &neighbors {
        counts.insert(n.id, 0);
    }

    for _ in 0..n_samples {
        let a_i = own_access.sample(&mut own_rng);
        let mut winner = user;
        let mut best = a_i;
        for n in &mut neighbors {
            let a_j = n.access.sample(&mut n.access_rng);
            // The gap is drawn only when the neighbor accesses first; the
            // condition depends only on this pair's own streams, so the draw
            // pattern (and thus every variate) is identical across networks
            // that share the neighbor.
            if a_j < a_i {
                if let Some((pareto, gap_rng)) = &mut n.contact {
                    let t = a_j + pareto.sample(gap_rng);
                    if t < best {
                        best = t;
                        winner = n.id;
                    }
                }
            }
        }
        *counts.get_mut(&winner).expect("winner preset") += 1;
    }

    let est = DeliveryEstimate {
        user,
        n_samples,
        counts,
    };
    debug_assert_eq!(est.total(), n_samples);
    Ok(est)
}

/// Per-user midpoint grid over the access-delay density, truncated where the
/// survival reaches [`TAIL_MASS`].
struct AccessGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    span: f64,
    /// Total grid weight; the remainder up to 1 is off-grid tail mass.
    mass: f64,
}

impl AccessGrid {
    fn build(access: WeibullParams, grid: usize) -> Self {
        let span = access.scale() * (-TAIL_MASS.ln()).powf(1.0 / access.shape());
        let h = span / grid as f64;
        let mut nodes = Vec::with_capacity(grid);
        let mut weights = Vec::with_capacity(grid);
        for c in 0..grid {
            let x = (c as f64 + 0.5) * h;
            nodes.push(x);
            weights.push(access.pdf(x) * h);
        }
        let mass = weights.iter().sum();
        Self {
            nodes,
            weights,
            span,
            mass,
        }
    }
}

/// `W(t) = E_a[survival(t - a)]`: the probability that a neighbor with the
/// given access grid has not yet handed the item over by time `t`, tabulated
/// on an even grid over `[0, span]` for linear interpolation.
struct HandoverSurvival {
    values: Vec<f64>,
    step: f64,
}

impl HandoverSurvival {
    fn build(neighbor: &AccessGrid, pareto: ParetoParams, span: f64, points: usize) -> Self {
        let step = span / (points - 1) as f64;
        let values = (0..points)
            .map(|k| {
                let t = k as f64 * step;
                neighbor
                    .nodes
                    .iter()
                    .zip(&neighbor.weights)
                    .map(|(&a, &w)| w * pareto.survival(t - a))
                    .sum::<f64>()
                    + (1.0 - neighbor.mass)
            })
            .collect();
        Self { values, step }
    }

    fn at(&self, t: f64) -> f64 {
        let pos = (t / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (pos as usize).min(self.values.len() - 2);
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }
}

/// Deterministic delivery probabilities for `user`, for agreement
/// neighborhoods of at most [`QUADRATURE_NEIGHBOR_LIMIT`] users.
///
/// Access delays are discretized on per-user midpoint grids with `grid`
/// cells. The inter-contact gap of the candidate deliverer is integrated in
/// probability space (substituting `q = survival(gap)`), which absorbs the
/// power-law tail exactly; the rival neighbor enters through a tabulated
/// handover-survival curve. Accuracy improves roughly quadratically in
/// `grid`; 400 gives absolute errors well below 1e-2.
pub fn quadrature_delivery_probs(
    user: UserId,
    g: &AgreementNetwork,
    users: &[UserProfile],
    contacts: &ContactGraph,
    grid: usize,
) -> Result<BTreeMap<UserId, f64>> {
    check_inputs(user, g, users, contacts)?;
    if grid < 8 {
        return Err(Error::InvalidParameter(format!(
            "quadrature grid must be at least 8, got {grid}"
        )));
    }
    let neighbors = g.neighbors(user);
    if neighbors.len() > QUADRATURE_NEIGHBOR_LIMIT {
        return Err(Error::NeighborhoodTooLarge {
            size: neighbors.len(),
            limit: QUADRATURE_NEIGHBOR_LIMIT,
        });
    }

    let mut probs: BTreeMap<UserId, f64> = BTreeMap::new();
    for &j in &neighbors {
        probs.insert(j, 0.0);
    }
    let linked: Vec<(UserId, ParetoParams)> = neighbors
        .iter()
        .filter_map(|&j| contacts.get(user, j).map(|p| (j, *p)))
        .collect();

    if linked.is_empty() {
        probs.insert(user, 1.0);
        return Ok(probs);
    }

    let own = AccessGrid::build(users[user].access, grid);
    let grids: Vec<AccessGrid> = linked
        .iter()
        .map(|&(j, _)| AccessGrid::build(users[j].access, grid))
        .collect();

    match linked.as_slice() {
        [(j, pareto)] => {
            let lg = &grids[0];
            let mut p_deliver = 0.0;
            let mut p_self = 0.0;
            for (&b, &wb) in own.nodes.iter().zip(&own.weights) {
                let mut meet = 0.0;
                let mut miss = 0.0;
                for (&a, &wa) in lg.nodes.iter().zip(&lg.weights) {
                    meet += wa * pareto.meet_prob(b - a);
                    miss += wa * pareto.survival(b - a);
                }
                // Mass of the neighbor's access delay beyond its grid span:
                // the neighbor accesses too late to deliver.
                p_deliver += wb * meet;
                p_self += wb * (miss + (1.0 - lg.mass));
            }
            // Recipient's own tail mass: never delivered, cellular either way.
            p_self += 1.0 - own.mass;
            probs.insert(*j, p_deliver);
            probs.insert(user, p_self);
        }
        [first, second] => {
            let survivals: Vec<HandoverSurvival> = [(first, &grids[0]), (second, &grids[1])]
                .into_iter()
                .map(|(&(_, pareto), lg)| {
                    HandoverSurvival::build(lg, pareto, own.span, 4 * grid + 1)
                })
                .collect();

            // Cellular fallback: both handovers still pending at a_i.
            let mut p_self = 0.0;
            for (&b, &wb) in own.nodes.iter().zip(&own.weights) {
                let mut pending = wb;
                for (lg, pareto) in grids.iter().zip([first.1, second.1]) {
                    // Start from the neighbor's off-grid tail mass: accessed
                    // too late, handover certainly pending.
                    let mut s = 1.0 - lg.mass;
                    for (&a, &wa) in lg.nodes.iter().zip(&lg.weights) {
                        s += wa * pareto.survival(b - a);
                    }
                    pending *= s;
                }
                p_self += pending;
            }
            p_self += 1.0 - own.mass;
            probs.insert(user, p_self);

            // Delivery by one neighbor: its handover lands before a_i while
            // the rival's handover is still pending at that instant. The gap
            // integral runs over q = survival(gap); cells of the fixed
            // q-grid enter the running sum as the recipient's deadline b
            // sweeps upward, so the whole double loop is amortized O(grid).
            for (which, &(j, pareto)) in linked.iter().enumerate() {
                let lg = &grids[which];
                let rival = &survivals[1 - which];
                let inv_g = 1.0 / grid as f64;
                let u_at = |q: f64| pareto.scale() * q.powf(-1.0 / pareto.shape());
                let u_cells: Vec<f64> = (0..grid)
                    .map(|c| u_at((c as f64 + 0.5) * inv_g))
                    .collect();

                let mut p_deliver = 0.0;
                for (&a, &wa) in lg.nodes.iter().zip(&lg.weights) {
                    let mut cell_lo = grid;
                    let mut running = 0.0;
                    for (&b, &wb) in own.nodes.iter().zip(&own.weights) {
                        if b - a <= pareto.scale() {
                            continue;
                        }
                        let q_min = (pareto.scale() / (b - a)).powf(pareto.shape());
                        let c0 = ((q_min * grid as f64) as usize).min(grid - 1);
                        while cell_lo > c0 + 1 {
                            cell_lo -= 1;
                            running += inv_g * rival.at(a + u_cells[cell_lo]);
                        }
                        let width = ((c0 + 1) as f64 * inv_g - q_min).max(0.0);
                        let partial = if width > 0.0 {
                            let q_mid = q_min + 0.5 * width;
                            width * rival.at(a + u_at(q_mid))
                        } else {
                            0.0
                        };
                        p_deliver += wa * wb * (running + partial);
                    }
                }
                probs.insert(j, p_deliver);
            }
        }
        _ => unreachable!("guarded above"),
    }
    Ok(probs)
}

/// Expected payoff of `user` under agreement network `g`, estimated by
/// Monte Carlo.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffEstimate {
    pub user: UserId,
    /// Delivery distribution of `user` as a recipient.
    pub delivery: BTreeMap<UserId, f64>,
    /// Expected cellular spend avoided: `cellular * P(delivered by D2D)`.
    pub gain: f64,
    /// Expected relaying spend: `d2d * sum over neighbors j of P(user
    /// delivers to j)`.
    pub cost: f64,
    /// `gain - cost`.
    pub payoff: f64,
    pub n_samples: u64,
    /// Standard error of `payoff`, combining the independent binomial errors
    /// of each delivery probability.
    pub std_error: f64,
}

/// Estimates gain, cost, and net payoff for `user`. One delivery estimate is
/// run per involved recipient (the user and each agreement neighbor), each
/// on its own substream of `rng`.
pub fn estimate_payoff(
    user: UserId,
    g: &AgreementNetwork,
    users: &[UserProfile],
    contacts: &ContactGraph,
    costs: &CostModel,
    n_samples: u64,
    rng: &RngStream,
) -> Result<PayoffEstimate> {
    check_inputs(user, g, users, contacts)?;
    costs.validate()?;
    let own = estimate_delivery_probs(
        user,
        g,
        users,
        contacts,
        n_samples,
        &rng.derive(&format!("recipient/{user}")),
    )?;
    let p_cell = own.self_prob();
    let gain = costs.cellular * (1.0 - p_cell);
    let mut variance = costs.cellular * costs.cellular * p_cell * (1.0 - p_cell)
        / n_samples as f64;

    let mut cost = 0.0;
    for j in g.neighbors(user) {
        let est = estimate_delivery_probs(
            j,
            g,
            users,
            contacts,
            n_samples,
            &rng.derive(&format!("recipient/{j}")),
        )?;
        let p = est.prob(user);
        cost += costs.d2d * p;
        variance += costs.d2d * costs.d2d * p * (1.0 - p) / n_samples as f64;
    }

    Ok(PayoffEstimate {
        user,
        delivery: own.probs(),
        gain,
        cost,
        payoff: gain - cost,
        n_samples,
        std_error: variance.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn uniform_users(params: &[(f64, f64)]) -> Vec<UserProfile> {
        params
            .iter()
            .enumerate()
            .map(|(id, &(k, lam))| UserProfile {
                id,
                access: WeibullParams::new(k, lam).unwrap(),
            })
            .collect()
    }

    fn pair_scenario() -> (Vec<UserProfile>, ContactGraph, AgreementNetwork) {
        let users = uniform_users(&[(4.0, 1.0), (4.0, 100.0)]);
        let mut contacts = ContactGraph::new(2);
        contacts
            .insert(Edge::new(0, 1), ParetoParams::new(1.0, 3.0).unwrap())
            .unwrap();
        let g = AgreementNetwork::from_edges(2, [Edge::new(0, 1)]).unwrap();
        (users, contacts, g)
    }

    #[test]
    fn counts_partition_samples() {
        let (users, contacts, g) = pair_scenario();
        let rng = RngStream::new(5, "probs");
        let est = estimate_delivery_probs(1, &g, &users, &contacts, 10_000, &rng).unwrap();
        assert_eq!(est.count(0) + est.count(1), 10_000);
        assert_eq!(est.n_samples(), 10_000);
        let sum: f64 = est.probs().values().sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn estimates_replay_exactly() {
        let (users, contacts, g) = pair_scenario();
        let rng = RngStream::new(5, "probs");
        let a = estimate_delivery_probs(1, &g, &users, &contacts, 5_000, &rng).unwrap();
        let b = estimate_delivery_probs(1, &g, &users, &contacts, 5_000, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_user_delivers_to_late_user() {
        // User 0 accesses around t=1, user 1 around t=100, and the pair
        // meets in Pareto(1, 3) gaps, so user 0 almost always hands the
        // item over first: user 1 gains, user 0 only pays.
        let (users, contacts, g) = pair_scenario();
        let costs = CostModel::new(4.0, 1.0).unwrap();
        let rng = RngStream::new(5, "payoff");
        let late = estimate_payoff(1, &g, &users, &contacts, &costs, 100_000, &rng).unwrap();
        let early = estimate_payoff(0, &g, &users, &contacts, &costs, 100_000, &rng).unwrap();
        assert!(late.payoff > 0.0, "late user payoff {}", late.payoff);
        assert!(early.payoff < 0.0, "early user payoff {}", early.payoff);
        assert!(late.self_delivery() < 0.05);
        assert!(early.gain < 0.01);
        // The early user's payoff is almost pure relaying cost.
        assert!((early.payoff + early.cost).abs() < 0.01);
    }

    impl PayoffEstimate {
        fn self_delivery(&self) -> f64 {
            self.delivery[&self.user]
        }
    }

    #[test]
    fn no_contact_neighbor_gets_zero() {
        let users = uniform_users(&[(2.0, 10.0), (2.0, 10.0), (2.0, 10.0)]);
        let mut contacts = ContactGraph::new(3);
        contacts
            .insert(Edge::new(0, 1), ParetoParams::new(2.0, 2.0).unwrap())
            .unwrap();
        let g =
            AgreementNetwork::from_edges(3, [Edge::new(0, 1), Edge::new(0, 2)]).unwrap();
        let rng = RngStream::new(8, "probs");
        let est = estimate_delivery_probs(0, &g, &users, &contacts, 20_000, &rng).unwrap();
        assert_eq!(est.count(2), 0);
        assert!(est.prob(1) > 0.0);
        let quad = quadrature_delivery_probs(0, &g, &users, &contacts, 64).unwrap();
        assert_eq!(quad[&2], 0.0);
        assert!(quad[&1] > 0.0);
    }

    #[test]
    fn isolated_user_always_cellular() {
        let users = uniform_users(&[(2.0, 10.0), (2.0, 10.0)]);
        let contacts = ContactGraph::new(2);
        let g = AgreementNetwork::empty(2);
        let rng = RngStream::new(8, "probs");
        let est = estimate_delivery_probs(0, &g, &users, &contacts, 1_000, &rng).unwrap();
        assert_eq!(est.self_prob(), 1.0);
        let quad = quadrature_delivery_probs(0, &g, &users, &contacts, 64).unwrap();
        assert_eq!(quad[&0], 1.0);
    }

    #[test]
    fn adding_neighbors_never_increases_cellular_prob() {
        // Shared label-derived substreams make the comparison exact per
        // sample, not just in expectation.
        let users = uniform_users(&[(3.0, 20.0), (2.0, 15.0), (4.0, 25.0)]);
        let mut contacts = ContactGraph::new(3);
        contacts
            .insert(Edge::new(0, 1), ParetoParams::new(5.0, 2.0).unwrap())
            .unwrap();
        contacts
            .insert(Edge::new(0, 2), ParetoParams::new(8.0, 2.5).unwrap())
            .unwrap();
        let g1 = AgreementNetwork::from_edges(3, [Edge::new(0, 1)]).unwrap();
        let g2 =
            AgreementNetwork::from_edges(3, [Edge::new(0, 1), Edge::new(0, 2)]).unwrap();
        let rng = RngStream::new(21, "mono");
        let e1 = estimate_delivery_probs(0, &g1, &users, &contacts, 50_000, &rng).unwrap();
        let e2 = estimate_delivery_probs(0, &g2, &users, &contacts, 50_000, &rng).unwrap();
        assert!(e2.count(0) <= e1.count(0));
        // Samples delivered in the smaller network stay delivered, possibly
        // by the new neighbor.
        assert!(e1.count(1) <= e2.count(1) + e2.count(2));
    }

    #[test]
    fn quadrature_rejects_large_neighborhoods() {
        let users = uniform_users(&[(2.0, 10.0); 4]);
        let contacts = ContactGraph::new(4);
        let g = AgreementNetwork::from_edges(
            4,
            [Edge::new(0, 1), Edge::new(0, 2), Edge::new(0, 3)],
        )
        .unwrap();
        let err = quadrature_delivery_probs(0, &g, &users, &contacts, 64).unwrap_err();
        assert!(matches!(err, Error::NeighborhoodTooLarge { size: 3, .. }));
    }

    #[test]
    fn quadrature_matches_monte_carlo_one_neighbor() {
        let (users, contacts, g) = pair_scenario();
        let rng = RngStream::new(77, "oracle");
        let est = estimate_delivery_probs(1, &g, &users, &contacts, 200_000, &rng).unwrap();
        let quad = quadrature_delivery_probs(1, &g, &users, &contacts, 400).unwrap();
        let sum: f64 = quad.values().sum();
        assert!((sum - 1.0).abs() < 1e-3, "quadrature sum {sum}");
        for (&s, &q) in &quad {
            let tol = (1e-2f64).max(4.0 * est.std_error(s));
            assert!(
                (est.prob(s) - q).abs() <= tol,
                "source {s}: mc {} vs quad {q}",
                est.prob(s)
            );
        }
    }

    #[test]
    fn quadrature_matches_monte_carlo_two_neighbors() {
        let users = uniform_users(&[(3.0, 30.0), (2.5, 20.0), (5.0, 40.0)]);
        let mut contacts = ContactGraph::new(3);
        contacts
            .insert(Edge::new(0, 1), ParetoParams::new(10.0, 1.8).unwrap())
            .unwrap();
        contacts
            .insert(Edge::new(0, 2), ParetoParams::new(12.0, 2.6).unwrap())
            .unwrap();
        let g =
            AgreementNetwork::from_edges(3, [Edge::new(0, 1), Edge::new(0, 2)]).unwrap();
        let rng = RngStream::new(31, "oracle");
        let est = estimate_delivery_probs(0, &g, &users, &contacts, 400_000, &rng).unwrap();
        let quad = quadrature_delivery_probs(0, &g, &users, &contacts, 400).unwrap();
        let sum: f64 = quad.values().sum();
        assert!((sum - 1.0).abs() < 1e-3, "quadrature sum {sum}");
        for (&s, &q) in &quad {
            let tol = (1e-2f64).max(4.0 * est.std_error(s));
            assert!(
                (est.prob(s) - q).abs() <= tol,
                "source {s}: mc {} vs quad {q}",
                est.prob(s)
            );
        }
    }

    #[test]
    fn payoff_combines_gain_and_cost() {
        let (users, contacts, g) = pair_scenario();
        let costs = CostModel::new(4.0, 1.0).unwrap();
        let rng = RngStream::new(5, "payoff");
        let est = estimate_payoff(1, &g, &users, &contacts, &costs, 10_000, &rng).unwrap();
        assert_eq!(est.payoff, est.gain - est.cost);
        assert!(est.gain >= 0.0 && est.cost >= 0.0);
        // This pair is so lopsided that every sample is delivered, so the
        // binomial error collapses to zero.
        assert!(est.std_error >= 0.0 && est.std_error < 0.1);
        let moderate = uniform_users(&[(3.0, 20.0), (2.0, 15.0)]);
        let mut contacts = ContactGraph::new(2);
        contacts
            .insert(Edge::new(0, 1), ParetoParams::new(5.0, 2.0).unwrap())
            .unwrap();
        let g = AgreementNetwork::from_edges(2, [Edge::new(0, 1)]).unwrap();
        let est =
            estimate_payoff(0, &g, &moderate, &contacts, &costs, 10_000, &rng).unwrap();
        assert!(est.std_error > 0.0 && est.std_error < 0.2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (users, contacts, g) = pair_scenario();
        let rng = RngStream::new(5, "bad");
        assert!(estimate_delivery_probs(9, &g, &users, &contacts, 100, &rng).is_err());
        assert!(estimate_delivery_probs(0, &g, &users, &contacts, 0, &rng).is_err());
        assert!(quadrature_delivery_probs(0, &g, &users, &contacts, 4).is_err());
        let wrong = AgreementNetwork::empty(5);
        assert!(estimate_delivery_probs(0, &wrong, &users, &contacts, 100, &rng).is_err());
    }
}
