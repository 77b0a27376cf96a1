//! LEO non-terrestrial-network downlink simulator and resource-allocation
//! workbench.
//!
//! The crate models a small constellation of circular-orbit LEO satellites
//! serving ground users spread over three latitude zones, computes per-link
//! budgets (free-space loss, gaseous and rain attenuation) under nominal and
//! extreme weather, and evaluates power/bandwidth allocation policies against
//! three KPIs: sum rate, Jain fairness, and outage probability.
//!
//! Allocation policies range from classical heuristics (equal split,
//! water-filling, max-min fairness, proportional capacity) to a TD3
//! actor-critic agent whose reward is shaped by a per-episode strategy label
//! obtained from a language-model provider (a deterministic mock by default,
//! or a remote HTTP endpoint).
//!
//! Entry points:
//! - [`config::ScenarioConfig`] gathers every physical and training constant.
//! - [`env::NtnEnv`] is the step/reset environment on a 30 s cadence.
//! - [`agent::Agent`] is the strategy-conditioned TD3 learner.
//! - [`harness`] runs reproducible campaigns and emits CSV metrics.
//!
//! ```
//! use lamdrl::config::ScenarioConfig;
//! use lamdrl::geometry::propagate;
//!
//! let cfg = ScenarioConfig::desk();
//! let sats = propagate(&cfg.constellation, 0.0).unwrap();
//! assert_eq!(sats.len(), cfg.constellation.num_satellites);
//! ```

pub mod agent;
pub mod allocators;
pub mod channel;
pub mod config;
pub mod env;
pub mod geometry;
pub mod harness;
pub mod kpi;
pub mod seeds;
pub mod strategy;

mod error;
pub use error::Error;

#[cfg(doctest)]
mod book;
