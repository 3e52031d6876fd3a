//! Discrete-event simulation of task-graph schedulers on multi-core clusters.
//!
//! A [`taskgraph::TaskGraph`] is executed on a [`cluster::Cluster`] by
//! [`simulator::run`], with a global scheduler from [`schedulers`] deciding
//! placement and each worker running its own download and start policy
//! ([`worker`]). Transfers share bandwidth according to [`netmodel`].
//! [`graphgen`] builds the benchmark datasets and [`bench`] sweeps
//! configurations into CSV tables.

pub mod bench;
pub mod cluster;
pub mod graphgen;
pub mod netmodel;
pub mod schedulers;
pub mod simulator;
pub mod taskgraph;
pub mod worker;

/// RNG used for every seeded decision.
pub type SimRng = rand_chacha::ChaCha8Rng;
