//! Two-way transaction simulator.
//!
//! Each trial draws one deployment, then repeats attempts until the uplink
//! data and the downlink ACK both clear their SINR thresholds within the same
//! attempt. Fading is redrawn every attempt on every link; the topology is
//! kept for the whole trial.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::coverage::Noise;
use crate::deployment::{
    Deployment, DeploymentConfig, Direction, RngStream, Scheme, TypicalMode, TypicalPairing,
};
use crate::error::{Error, Result};
use crate::latency::protocol_delay_sample;
use crate::params::{LinkSuccess, SlotTiming, SystemParams};
use crate::report::fmt_sig;

/// One interfering transmitter as seen by a receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub power: f64,
    pub distance: f64,
    pub fading: f64,
}

/// `P g d^−α / (σ² + Σ P_i g_i d_i^−α)`.
pub fn sinr(
    tx_power: f64,
    distance: f64,
    fading: f64,
    interferers: &[Interferer],
    alpha: f64,
    noise_power: f64,
) -> Result<f64> {
    if distance <= 0.0 || interferers.iter().any(|i| i.distance <= 0.0) {
        return Err(Error::InvalidArgument(
            "zero link distance makes the path loss singular".into(),
        ));
    }
    let signal = tx_power * fading * distance.powf(-alpha);
    let interference: f64 = interferers
        .iter()
        .map(|i| i.power * i.fading * i.distance.powf(-alpha))
        .sum();
    Ok(signal / (noise_power + interference))
}

/// What changes between attempts of one trial.
///
/// With a fixed topology the attempt count is geometric only conditionally
/// on the geometry, and its mean is `E[1/p(Φ)]`, which at the reference
/// setting runs into the hundreds with a large censored share. The default
/// redraws the whole network for every transmission, which is the setting
/// the closed-form latencies describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RedrawPolicy {
    /// Fading only.
    FadingOnly,
    /// Fading, plus fresh directions and UE positions of every interfering
    /// cluster.
    FadingAndDirections,
    /// A fresh deployment every attempt, shared by the data and the ACK.
    Redeploy,
    /// A fresh deployment for every transmission: the data and the ACK of
    /// one attempt see independent networks.
    #[default]
    IndependentSnapshots,
}

/// Source of per-link power gains.
pub trait FadingSource {
    fn gain<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64;
}

/// Rayleigh fading: unit-mean exponential power gain.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayleighFading;

impl FadingSource for RayleighFading {
    fn gain<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        Exp1.sample(rng)
    }
}

pub const DEFAULT_MAX_ATTEMPTS: u32 = 1000;
pub const DEFAULT_ITERATIONS: usize = 10_000;
/// Half of the 150 m observation window.
pub const DEFAULT_WINDOW_HALF_WIDTH: f64 = 75.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub params: SystemParams,
    pub timing: SlotTiming,
    pub iterations: usize,
    pub max_attempts: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub redraw: RedrawPolicy,
    pub typical_mode: TypicalMode,
    pub typical_pairing: TypicalPairing,
    pub window_half_width: f64,
    pub noise: Noise,
    /// Bypasses the geometry: every attempt succeeds per direction with
    /// these probabilities, independently.
    pub success_override: Option<LinkSuccess>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::reference(),
            timing: SlotTiming::default(),
            iterations: DEFAULT_ITERATIONS,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            scheme: Scheme::Duda,
            seed: 0,
            redraw: RedrawPolicy::default(),
            typical_mode: TypicalMode::UplinkTypical,
            typical_pairing: TypicalPairing::default(),
            window_half_width: DEFAULT_WINDOW_HALF_WIDTH,
            noise: Noise::Excluded,
            success_override: None,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.timing.validate()?;
        if self.iterations == 0 || self.max_attempts == 0 {
            return Err(Error::InvalidArgument(
                "iterations and max_attempts must be at least 1".into(),
            ));
        }
        if !(self.window_half_width > 0.0) {
            return Err(Error::InvalidArgument(
                "window half width must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn deployment_config(&self) -> DeploymentConfig {
        DeploymentConfig {
            typical_pairing: self.typical_pairing,
            lambda_b: self.params.lambda_b,
            delta: self.params.delta,
            window_half_width: self.window_half_width,
            scheme: self.scheme,
            typical_mode: self.typical_mode,
        }
    }

    fn noise_power(&self) -> f64 {
        match self.noise {
            Noise::Excluded => 0.0,
            Noise::Included => self.params.noise_power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub attempts: u32,
    pub latency: f64,
    pub censored: bool,
    pub first_ul_success: bool,
    pub first_dl_success: bool,
    /// Draws discarded while building the deployment.
    pub resamples: u64,
    /// Arrival time within the frame, in slots.
    pub offset: f64,
}

/// Mean received powers `P d^−α` of the interferers at one receiver.
struct Field {
    signal: f64,
    interferers: Vec<f64>,
}

impl Field {
    fn passes<F: FadingSource, R: Rng + ?Sized>(
        &self,
        beta: f64,
        noise: f64,
        fading: &mut F,
        rng: &mut R,
    ) -> bool {
        let s = self.signal * fading.gain(rng);
        let i: f64 = self.interferers.iter().map(|&m| m * fading.gain(rng)).sum();
        s >= beta * (noise + i)
    }
}

fn fields(dep: &Deployment, params: &SystemParams) -> Result<(Field, Field)> {
    let ul_rx = dep.bs_positions[dep.typical.ul_bs];
    let ue = dep.typical.ue;
    let dl_tx = dep.bs_positions[dep.typical.dl_bs];
    let a = params.alpha;
    let mean = |power: f64, d: f64| -> Result<f64> {
        if d <= 0.0 {
            return Err(Error::InvalidArgument(
                "co-located transmitter and receiver".into(),
            ));
        }
        Ok(power * d.powf(-a))
    };
    let mut ul = Vec::with_capacity(dep.clusters.len());
    let mut dl = Vec::with_capacity(dep.clusters.len());
    for c in &dep.clusters {
        let (pos, power) = match c.direction {
            Direction::Downlink => (dep.bs_positions[c.dl_bs], params.p_b),
            Direction::Uplink => (c.ue, params.p_m),
        };
        ul.push(mean(power, pos.dist(&ul_rx))?);
        dl.push(mean(power, pos.dist(&ue))?);
    }
    Ok((
        Field {
            signal: mean(params.p_m, ue.dist(&ul_rx))?,
            interferers: ul,
        },
        Field {
            signal: mean(params.p_b, dl_tx.dist(&ue))?,
            interferers: dl,
        },
    ))
}

/// Latency of a trial that finished on attempt `attempts`. `offset` is the
/// arrival time within the frame, used by DUCA only.
pub fn trial_latency(scheme: Scheme, timing: &SlotTiming, attempts: u32, offset: f64) -> f64 {
    let retries = f64::from(attempts - 1);
    match scheme {
        Scheme::Duda => retries * (timing.s_u + timing.w) + timing.s_u + timing.s_d,
        Scheme::Duca => {
            protocol_delay_sample(timing, offset)
                + retries * timing.frame()
                + timing.t_u
                + timing.s_d
        }
    }
}

/// Runs attempts on a fixed deployment until both directions succeed.
pub fn run_two_way_trial<R: Rng + ?Sized>(
    deployment: &Deployment,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    run_two_way_trial_with(deployment, config, rng, &mut RayleighFading)
}

/// As [`run_two_way_trial`] with an explicit fading source. Per attempt the
/// gains are consumed in this order: uplink signal, uplink interferers in
/// cluster order, downlink signal, downlink interferers.
pub fn run_two_way_trial_with<R: Rng + ?Sized, F: FadingSource>(
    deployment: &Deployment,
    config: &TrialConfig,
    rng: &mut R,
    fading: &mut F,
) -> Result<TrialOutcome> {
    let p = &config.params;
    let noise = config.noise_power();
    let offset = rng.random_range(0.0..config.timing.frame());
    let mut redrawn;
    let mut dep = deployment;
    let (mut ul, mut dl) = fields(dep, p)?;
    let mut first = (false, false);
    let mut attempts = 0;
    let mut done = false;
    while attempts < config.max_attempts {
        attempts += 1;
        if attempts > 1 && config.redraw == RedrawPolicy::FadingAndDirections {
            redrawn = dep.clone();
            redrawn.assign_directions_and_ues(p.delta, rng)?;
            dep = &redrawn;
            (ul, dl) = fields(dep, p)?;
        }
        let ul_ok = ul.passes(p.beta_u, noise, fading, rng);
        let dl_ok = dl.passes(p.beta_d, noise, fading, rng);
        if attempts == 1 {
            first = (ul_ok, dl_ok);
        }
        if ul_ok && dl_ok {
            done = true;
            break;
        }
    }
    Ok(TrialOutcome {
        attempts,
        latency: trial_latency(config.scheme, &config.timing, attempts, offset),
        censored: !done,
        first_ul_success: first.0,
        first_dl_success: first.1,
        resamples: 0,
        offset,
    })
}

fn run_redeploy_trial<R: Rng + ?Sized>(
    dep_cfg: &DeploymentConfig,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let p = &config.params;
    let noise = config.noise_power();
    let offset = rng.random_range(0.0..config.timing.frame());
    let mut first = (false, false);
    let mut attempts = 0;
    let mut done = false;
    let mut resamples = 0;
    while attempts < config.max_attempts {
        attempts += 1;
        let (dep, r) = Deployment::generate(dep_cfg, rng)?;
        resamples += r;
        let (ul, mut dl) = fields(&dep, p)?;
        let ul_ok = ul.passes(p.beta_u, noise, &mut RayleighFading, rng);
        if config.redraw == RedrawPolicy::IndependentSnapshots {
            let (dep, r) = Deployment::generate(dep_cfg, rng)?;
            resamples += r;
            dl = fields(&dep, p)?.1;
        }
        let dl_ok = dl.passes(p.beta_d, noise, &mut RayleighFading, rng);
        if attempts == 1 {
            first = (ul_ok, dl_ok);
        }
        if ul_ok && dl_ok {
            done = true;
            break;
        }
    }
    Ok(TrialOutcome {
        attempts,
        latency: trial_latency(config.scheme, &config.timing, attempts, offset),
        censored: !done,
        first_ul_success: first.0,
        first_dl_success: first.1,
        resamples,
        offset,
    })
}

/// Attempts with fixed per-direction success probabilities, no geometry.
fn run_bernoulli_trial<R: Rng + ?Sized>(
    link: LinkSuccess,
    config: &TrialConfig,
    rng: &mut R,
) -> TrialOutcome {
    let offset = rng.random_range(0.0..config.timing.frame());
    let mut first = (false, false);
    let mut attempts = 0;
    let mut done = false;
    while attempts < config.max_attempts {
        attempts += 1;
        let ul_ok = rng.random_bool(link.rho_u);
        let dl_ok = rng.random_bool(link.rho_d);
        if attempts == 1 {
            first = (ul_ok, dl_ok);
        }
        if ul_ok && dl_ok {
            done = true;
            break;
        }
    }
    TrialOutcome {
        attempts,
        latency: trial_latency(config.scheme, &config.timing, attempts, offset),
        censored: !done,
        first_ul_success: first.0,
        first_dl_success: first.1,
        resamples: 0,
        offset,
    }
}

/// One trial on its own stream: deployment draw, then attempts.
pub fn run_indexed_trial(config: &TrialConfig, index: u64) -> Result<TrialOutcome> {
    let mut rng = RngStream::new(config.seed, index).rng();
    if let Some(link) = config.success_override {
        return Ok(run_bernoulli_trial(link, config, &mut rng));
    }
    let dep_cfg = config.deployment_config();
    if matches!(
        config.redraw,
        RedrawPolicy::Redeploy | RedrawPolicy::IndependentSnapshots
    ) {
        return run_redeploy_trial(&dep_cfg, config, &mut rng);
    }
    let (dep, resamples) = Deployment::generate(&dep_cfg, &mut rng)?;
    let mut out = run_two_way_trial(&dep, config, &mut rng)?;
    out.resamples = resamples;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub ci95_half_width: f64,
    pub censored_count: usize,
    pub empirical_rho_u: f64,
    pub empirical_rho_d: f64,
    pub mean_attempts: f64,
}

impl LatencyStats {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let n = outcomes.len() as f64;
        let samples: Vec<f64> = outcomes.iter().map(|o| o.latency).collect();
        let mean = samples.iter().sum::<f64>() / n;
        let var = if outcomes.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std_error = (var / n).sqrt();
        let freq =
            |f: fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
        Self {
            mean,
            std_error,
            ci95_half_width: 1.96 * std_error,
            censored_count: outcomes.iter().filter(|o| o.censored).count(),
            empirical_rho_u: freq(|o| o.first_ul_success),
            empirical_rho_d: freq(|o| o.first_dl_success),
            mean_attempts: outcomes.iter().map(|o| f64::from(o.attempts)).sum::<f64>() / n,
            samples,
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored_count as f64 / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub scheme: Scheme,
    pub stats: LatencyStats,
    pub outcomes: Vec<TrialOutcome>,
    /// Deployment draws discarded because the typical BS stayed unpaired.
    pub resamples: u64,
}

impl CampaignResult {
    pub fn resample_rate(&self) -> f64 {
        self.resamples as f64 / self.outcomes.len() as f64
    }

    /// Empirical `P(attempts > k)`.
    pub fn attempts_survival(&self, k: u32) -> f64 {
        self.outcomes.iter().filter(|o| o.attempts > k).count() as f64 / self.outcomes.len() as f64
    }

    /// The same trials under another frame timing. Attempt counts do not
    /// depend on the timing, so only the latencies change.
    pub fn with_timing(&self, timing: &SlotTiming) -> CampaignResult {
        let outcomes: Vec<TrialOutcome> = self
            .outcomes
            .iter()
            .map(|o| TrialOutcome {
                latency: trial_latency(self.scheme, timing, o.attempts, o.offset),
                ..*o
            })
            .collect();
        CampaignResult {
            scheme: self.scheme,
            stats: LatencyStats::from_outcomes(&outcomes),
            outcomes,
            resamples: self.resamples,
        }
    }

    /// One row per trial: `iteration,scheme,attempts,latency,censored`.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("iteration,scheme,attempts,latency,censored\n");
        for (i, o) in self.outcomes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                self.scheme.name(),
                o.attempts,
                fmt_sig(o.latency),
                o.censored
            );
        }
        out
    }
}

/// Runs `iterations` independent trials in parallel. Trial `i` uses stream
/// `i` of the configured seed, so results do not depend on scheduling.
pub fn run_campaign(config: &TrialConfig) -> Result<CampaignResult> {
    config.validate()?;
    let outcomes = (0..config.iterations as u64)
        .into_par_iter()
        .map(|i| run_indexed_trial(config, i))
        .collect::<Result<Vec<_>>>()?;
    let resamples: u64 = outcomes.iter().map(|o| o.resamples).sum();
    if resamples > 10 * config.iterations as u64 {
        return Err(Error::ExcessiveResampling {
            resamples,
            iterations: config.iterations as u64,
        });
    }
    Ok(CampaignResult {
        scheme: config.scheme,
        stats: LatencyStats::from_outcomes(&outcomes),
        outcomes,
        resamples,
    })
}
