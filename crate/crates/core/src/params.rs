//! Physical-layer, geometry and frame parameters.
//!
//! Everything inside the crate is linear: watts, linear SINR thresholds,
//! BS per square metre. dB and dBm only appear at the configuration
//! boundary, through [`dbm_to_watts`] and [`db_to_linear`].
//!
//! Note on naming: the reference parameter table uses `W` for the system
//! bandwidth, while the DUDA latency expression uses `W` for the ACK waiting
//! time. Here they are [`SystemParams::bandwidth`] and [`SlotTiming::w`].

use std::fmt;

use crate::error::{Error, Result};

/// Converts dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// BS density, BS per m².
    pub lambda_b: f64,
    /// Fraction of links active in the downlink direction, in (0, 1).
    pub delta: f64,
    /// Path-loss exponent. Must exceed 2 for the interference integrals to converge.
    pub alpha: f64,
    /// Uplink SINR threshold (linear).
    pub beta_u: f64,
    /// Downlink SINR threshold (linear).
    pub beta_d: f64,
    /// BS transmit power, W.
    pub p_b: f64,
    /// UE transmit power, W.
    pub p_m: f64,
    /// Noise power σ², W.
    pub noise_power: f64,
    /// System bandwidth, Hz.
    pub bandwidth: f64,
}

impl SystemParams {
    /// The reference simulation setting: λ_b = 0.005, δ = 0.5, α = 4,
    /// β_d = −5 dB, β_u = 0 dB, P_b = 40 dBm, P_m = 20 dBm, σ² = −174 dBm
    /// over a 1 Hz band.
    pub fn reference() -> Self {
        Self {
            lambda_b: 0.005,
            delta: 0.5,
            alpha: 4.0,
            beta_u: db_to_linear(0.0),
            beta_d: db_to_linear(-5.0),
            p_b: dbm_to_watts(40.0),
            p_m: dbm_to_watts(20.0),
            noise_power: dbm_to_watts(-174.0),
            bandwidth: 1.0,
        }
    }

    /// P_b / P_m.
    pub fn bs_to_ue_power_ratio(&self) -> f64 {
        self.p_b / self.p_m
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &'static str, msg: &str| {
            if !ok {
                v.push(Violation::new(field, msg));
            }
        };
        check(
            self.lambda_b.is_finite() && self.lambda_b > 0.0,
            "lambda_b",
            "lambda_b must be positive",
        );
        check(
            self.delta > 0.0 && self.delta < 1.0,
            "delta",
            "delta must lie strictly between 0 and 1",
        );
        check(
            self.alpha.is_finite() && self.alpha > 2.0,
            "alpha",
            "alpha must exceed 2 (interference integrals diverge otherwise)",
        );
        check(
            self.beta_u.is_finite() && self.beta_u > 0.0,
            "beta_u",
            "beta_u must be positive",
        );
        check(
            self.beta_d.is_finite() && self.beta_d > 0.0,
            "beta_d",
            "beta_d must be positive",
        );
        check(
            self.p_b.is_finite() && self.p_b > 0.0,
            "p_b",
            "p_b must be positive",
        );
        check(
            self.p_m.is_finite() && self.p_m > 0.0,
            "p_m",
            "p_m must be positive",
        );
        check(
            self.noise_power.is_finite() && self.noise_power >= 0.0,
            "noise_power",
            "noise_power must be non-negative",
        );
        check(
            self.bandwidth.is_finite() && self.bandwidth > 0.0,
            "bandwidth",
            "bandwidth must be positive",
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        into_result(self.violations())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// TDD frame quantities, all in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotTiming {
    /// Downlink slot duration.
    pub t_d: f64,
    /// Uplink slot duration.
    pub t_u: f64,
    /// Uplink data size, 0 < s_u ≤ t_u.
    pub s_u: f64,
    /// Downlink ACK size, 0 < s_d ≤ t_d.
    pub s_d: f64,
    /// DUDA wait for the ACK before retransmitting.
    pub w: f64,
}

/// Default ACK size in slots.
pub const DEFAULT_ACK_SIZE: f64 = 0.5;

impl SlotTiming {
    /// Builds a timing with the ACK wait set to one downlink slot.
    pub fn new(t_d: f64, t_u: f64, s_u: f64, s_d: f64) -> Self {
        Self {
            t_d,
            t_u,
            s_u,
            s_d,
            w: t_d,
        }
    }

    pub fn with_wait(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_data_size(mut self, s_u: f64) -> Self {
        self.s_u = s_u;
        self
    }

    /// One full TDD frame, t_d + t_u.
    pub fn frame(&self) -> f64 {
        self.t_d + self.t_u
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.t_d) {
            v.push(Violation::new("t_d", "t_d must be positive"));
        }
        if !pos(self.t_u) {
            v.push(Violation::new("t_u", "t_u must be positive"));
        }
        if !pos(self.s_u) {
            v.push(Violation::new("s_u", "s_u must be positive"));
        } else if self.s_u > self.t_u {
            v.push(Violation::new("s_u", "s_u must not exceed t_u"));
        }
        if !pos(self.s_d) {
            v.push(Violation::new("s_d", "s_d must be positive"));
        } else if self.s_d > self.t_d {
            v.push(Violation::new("s_d", "s_d must not exceed t_d"));
        }
        if !pos(self.w) {
            v.push(Violation::new("w", "w must be positive"));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        into_result(self.violations())
    }
}

impl Default for SlotTiming {
    fn default() -> Self {
        Self::new(1.0, 1.0, 0.5, DEFAULT_ACK_SIZE)
    }
}

/// Per-attempt success probabilities of the uplink data and downlink ACK.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSuccess {
    pub rho_u: f64,
    pub rho_d: f64,
}

impl LinkSuccess {
    pub fn new(rho_u: f64, rho_d: f64) -> Result<Self> {
        let ok = |p: f64| p > 0.0 && p <= 1.0;
        if !ok(rho_u) || !ok(rho_d) {
            return Err(Error::InvalidArgument(format!(
                "success probabilities must lie in (0, 1], got rho_u = {rho_u}, rho_d = {rho_d}"
            )));
        }
        Ok(Self { rho_u, rho_d })
    }

    /// Splits a target product evenly: (√p, √p).
    pub fn symmetric(product: f64) -> Result<Self> {
        let s = product.sqrt();
        Self::new(s, s)
    }

    pub fn perfect() -> Self {
        Self {
            rho_u: 1.0,
            rho_d: 1.0,
        }
    }

    /// ρ_u ρ_d, the probability that one attempt completes both directions.
    pub fn product(&self) -> f64 {
        self.rho_u * self.rho_d
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: &str) -> Self {
        Self {
            field,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every invariant of both parameter groups. An empty list means valid.
pub fn validate(params: &SystemParams, timing: &SlotTiming) -> Result<(), Vec<Violation>> {
    let mut v = params.violations();
    v.extend(timing.violations());
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn into_result(v: Vec<Violation>) -> Result<()> {
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(v))
    }
}
