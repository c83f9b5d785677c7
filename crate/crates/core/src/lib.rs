//! Two-way (data + ACK) latency in TDD cellular networks.
//!
//! The crate compares coupled access (DUCA, one half-duplex base station
//! serving both directions in alternating slots) with decoupled access
//! (DUDA, a cooperating pair where the near base station receives uplink
//! data and the far one sends the downlink acknowledgement).
//!
//! Layers, bottom-up:
//!
//! * [`params`] physical and frame parameters, unit conversions, validation.
//! * [`latency`] closed-form expected latencies and their gap.
//! * [`quadrature`] adaptive Gauss-Kronrod integration on finite and
//!   semi-infinite domains, plus the interference kernel shared by all
//!   Laplace functionals.
//! * [`coverage`] stochastic-geometry success probabilities for DUDA.
//! * [`deployment`] spatial realizations: PPP sampling, Delaunay
//!   adjacency, randomized pairing, direction and UE assignment.
//! * [`montecarlo`] per-attempt SINR evaluation and latency campaigns.
//! * [`config`], [`sweep`], [`validation`] and [`report`] form the
//!   front end used by the `tddlat` binary.

pub mod config;
pub mod coverage;
pub mod deployment;
pub mod error;
pub mod latency;
pub mod montecarlo;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod stats;
pub mod sweep;
pub mod validation;

pub use config::{parse_config, ConfigBundle, ConfigError};
pub use coverage::{
    dl_success_probability, ul_success_probability, InterfererDensities, Noise,
    SuccessProbabilityResult,
};
pub use deployment::{Deployment, Point, RngStream, Scheme, TypicalMode};
pub use error::{Error, Result};
pub use latency::{latency_duca, latency_duda, latency_gap, LatencyBreakdown};
pub use montecarlo::{run_campaign, CampaignResult, LatencyStats, RedrawPolicy, TrialConfig};
pub use params::{LinkSuccess, SlotTiming, SystemParams};
pub use quadrature::QuadratureSpec;
pub use sweep::{run_sweep, Mode, SweepSpec, SweepVariable};
