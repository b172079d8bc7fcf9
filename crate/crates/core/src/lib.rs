//! Simulation and game-theoretic analysis of device-to-device (D2D) social
//! data offloading.
//!
//! A cellular operator pushes the same content item to a set of subscribers.
//! Each subscriber wants the item by an individual access deadline drawn from
//! a Weibull distribution; pairs of subscribers meet opportunistically with
//! Pareto-distributed inter-contact times. Users who agree to cooperate relay
//! the item over free D2D links when they meet, and anyone still empty-handed
//! at their deadline falls back to a paid cellular download.
//!
//! Which pairs cooperate is decided selfishly. The crate models this as a
//! network formation game: a link is added only when both endpoints expect to
//! gain and cut when either endpoint gains from cutting. The modules build on
//! each other roughly bottom-up:
//!
//! * [`stochastic`]: access-delay and inter-contact distributions plus
//!   seeded, labelled RNG streams for reproducible experiments.
//! * [`model`]: users, contact graphs, agreement networks, cost parameters,
//!   and random scenario generation.
//! * [`payoff`]: one-hop delivery probabilities and expected payoffs, via
//!   Monte Carlo and an independent quadrature oracle.
//! * [`formation`]: myopic link addition/removal dynamics and pairwise
//!   stability.
//! * [`supernetwork`]: exhaustive analysis of the formation rules over all
//!   networks on a small user set, including basins of attraction.
//! * [`simulator`]: the discrete-event round engine and the data-driven
//!   link review that runs on realized transfer counts.
//! * [`harness`]: batch experiments, sweeps, and CSV/SVG artifact output.

pub mod error;
pub mod formation;
pub mod harness;
pub mod model;
pub mod payoff;
pub mod plot;
pub mod simulator;
pub mod stochastic;
pub mod supernetwork;

pub use error::{Error, Result};
pub use model::{
    AgreementNetwork, ContactGraph, CostModel, Edge, Scenario, ScenarioConfig, ScenarioFile,
    UserId, UserProfile,
};
pub use stochastic::{ParetoParams, RngStream, WeibullParams};
