//! Closed-form two-way latency for coupled (DUCA) and decoupled (DUDA)
//! access.
//!
//! All quantities are in slots. The expected DUCA latency is the sum of a
//! protocol delay (waiting for an uplink slot), a geometric retransmission
//! delay over whole frames, and the fundamental transmit-plus-ACK time. DUDA
//! has no protocol delay and retransmits after `s_u + w` instead of a frame.
//!
//! [`protocol_delay_expected`] is the closed form used by the DUCA total,
//! and the DUCA − DUDA gap identity depends on it. It is not the mean of the
//! slot timeline it summarizes: the exact uniform-arrival mean is
//! [`protocol_delay_timeline_mean`], and for `t_d = t_u = T` the two differ by
//! `(T − s_u)² / (4T)`. The Monte Carlo samples the timeline itself through
//! [`protocol_delay_sample`].

use crate::error::{Error, Result};
use crate::params::{LinkSuccess, SlotTiming};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub protocol: f64,
    pub retransmission: f64,
    pub fundamental: f64,
    pub total: f64,
}

impl LatencyBreakdown {
    fn new(protocol: f64, retransmission: f64, fundamental: f64) -> Self {
        Self {
            protocol,
            retransmission,
            fundamental,
            total: protocol + retransmission + fundamental,
        }
    }
}

/// Probability that at least one of `n` attempts delivers both data and ACK:
/// `1 − (1 − ρ_u ρ_d)^n`.
pub fn n_shot_success(link: LinkSuccess, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "n_shot_success needs at least one attempt".into(),
        ));
    }
    let miss = 1.0 - link.product();
    Ok(1.0 - miss.powi(n as i32))
}

/// Expected protocol delay as it enters the DUCA total:
/// `[t_d² + (2 t_d + t_u) s_u] / (t_d + t_u) − (t_d + s_u) / 2`.
pub fn protocol_delay_expected(timing: &SlotTiming) -> f64 {
    let SlotTiming { t_d, t_u, s_u, .. } = *timing;
    (t_d * t_d + (2.0 * t_d + t_u) * s_u) / (t_d + t_u) - (t_d + s_u) / 2.0
}

/// Protocol delay of one packet generated `offset` slots after the start of
/// a downlink slot, `offset` in `[0, t_d + t_u)`.
///
/// During the downlink slot the packet waits for the uplink slot. In the
/// uplink slot it goes out at once if it still fits, otherwise it waits for
/// the next frame's uplink slot.
pub fn protocol_delay_sample(timing: &SlotTiming, offset: f64) -> f64 {
    let SlotTiming { t_d, t_u, s_u, .. } = *timing;
    let frame = t_d + t_u;
    if offset <= t_d {
        t_d - offset
    } else if offset <= frame - s_u {
        0.0
    } else {
        frame - offset + t_d
    }
}

/// Mean of [`protocol_delay_sample`] over a uniform arrival offset:
/// `[t_d²/2 + s_u t_d + s_u²/2] / (t_d + t_u)`.
pub fn protocol_delay_timeline_mean(timing: &SlotTiming) -> f64 {
    let SlotTiming { t_d, t_u, s_u, .. } = *timing;
    (0.5 * t_d * t_d + s_u * t_d + 0.5 * s_u * s_u) / (t_d + t_u)
}

/// Expected delay spent on failed attempts, `cycle · (1/(ρ_u ρ_d) − 1)`,
/// with an unbounded geometric number of attempts.
pub fn retransmission_delay(link: LinkSuccess, cycle: f64) -> Result<f64> {
    let p = link.product();
    if p <= 0.0 {
        return Err(Error::ZeroSuccess {
            rho_u: link.rho_u,
            rho_d: link.rho_d,
        });
    }
    if cycle.is_nan() || cycle <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "retransmission cycle must be positive, got {cycle}"
        )));
    }
    Ok(cycle * (1.0 / p - 1.0))
}

/// Expected DUCA latency, term by term.
pub fn latency_duca(timing: &SlotTiming, link: LinkSuccess) -> Result<LatencyBreakdown> {
    let retx = retransmission_delay(link, timing.frame())?;
    Ok(LatencyBreakdown::new(
        protocol_delay_expected(timing),
        retx,
        timing.t_u + timing.s_d,
    ))
}

/// Expected DUDA latency. Failed attempts cost `s_u + w`; there is no
/// protocol delay.
pub fn latency_duda(timing: &SlotTiming, link: LinkSuccess) -> Result<LatencyBreakdown> {
    let retx = retransmission_delay(link, timing.s_u + timing.w)?;
    Ok(LatencyBreakdown::new(0.0, retx, timing.s_u + timing.s_d))
}

/// DUCA − DUDA expected latency.
///
/// With `t_d = t_u` and `w = t_d` this is `(t_u − s_u)/(ρ_u ρ_d) + s_u`.
/// Any other timing falls back to the difference of the two totals.
pub fn latency_gap(timing: &SlotTiming, link: LinkSuccess) -> Result<f64> {
    let p = link.product();
    if p <= 0.0 {
        return Err(Error::ZeroSuccess {
            rho_u: link.rho_u,
            rho_d: link.rho_d,
        });
    }
    if timing.t_d == timing.t_u && timing.w == timing.t_d {
        Ok((timing.t_u - timing.s_u) / p + timing.s_u)
    } else {
        Ok(latency_duca(timing, link)?.total - latency_duda(timing, link)?.total)
    }
}
