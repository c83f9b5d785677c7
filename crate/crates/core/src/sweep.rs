//! Parameter sweeps producing latency tables.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ConfigBundle;
use crate::coverage::{dl_success_probability, ul_success_probability};
use crate::deployment::Scheme;
use crate::error::Result;
use crate::latency::{latency_duca, latency_duda};
use crate::montecarlo::{run_campaign, CampaignResult, TrialConfig};
use crate::params::{db_to_linear, LinkSuccess, SlotTiming, SystemParams};
use crate::report::{fmt_opt, fmt_sig, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SU,
    RhoProduct,
    Delta,
    LambdaB,
    BetaUDb,
    BetaDDb,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::SU => "s_u",
            SweepVariable::RhoProduct => "rho_product",
            SweepVariable::Delta => "delta",
            SweepVariable::LambdaB => "lambda_b",
            SweepVariable::BetaUDb => "beta_u_db",
            SweepVariable::BetaDDb => "beta_d_db",
        }
    }

    /// Only the frame timing changes, so geometry results can be reused.
    fn timing_only(&self) -> bool {
        matches!(self, SweepVariable::SU)
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "s_u" => SweepVariable::SU,
            "rho_product" => SweepVariable::RhoProduct,
            "delta" => SweepVariable::Delta,
            "lambda_b" => SweepVariable::LambdaB,
            "beta_u_db" => SweepVariable::BetaUDb,
            "beta_d_db" => SweepVariable::BetaDDb,
            other => {
                return Err(format!(
                    "unknown sweep variable '{other}' (expected s_u, rho_product, delta, lambda_b, beta_u_db or beta_d_db)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    fn row_modes(&self) -> &'static [RowMode] {
        match self {
            Mode::Analytic => &[RowMode::Analytic],
            Mode::Simulate => &[RowMode::Simulate],
            Mode::Both => &[RowMode::Analytic, RowMode::Simulate],
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "both" => Ok(Mode::Both),
            other => Err(format!(
                "unknown mode '{other}' (expected analytic, simulate or both)"
            )),
        }
    }
}

/// Mode of a single output row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowMode {
    Analytic,
    Simulate,
}

impl RowMode {
    pub fn name(&self) -> &'static str {
        match self {
            RowMode::Analytic => "analytic",
            RowMode::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub schemes: Vec<Scheme>,
    pub mode: Mode,
}

impl SweepSpec {
    /// Parses `VAR:START:STOP:STEPS`.
    pub fn parse_range(
        text: &str,
        schemes: Vec<Scheme>,
        mode: Mode,
    ) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(format!(
                "sweep must look like VAR:START:STOP:STEPS, got '{text}'"
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format!("'{s}' is not a number"))
        };
        Ok(Self {
            variable: parts[0].parse()?,
            start: num(parts[1])?,
            stop: num(parts[2])?,
            steps: parts[3]
                .parse()
                .map_err(|_| format!("'{}' is not a step count", parts[3]))?,
            schemes,
            mode,
        })
    }

    pub fn validate(&self, timing: &SlotTiming) -> std::result::Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err("sweep needs start < stop".into());
        }
        if self.steps < 2 {
            return Err("sweep needs at least 2 steps".into());
        }
        if self.schemes.is_empty() {
            return Err("sweep needs at least one scheme".into());
        }
        let (lo_open, hi, hi_closed, what) = match self.variable {
            SweepVariable::SU => (0.0, timing.t_u, true, "s_u must lie in (0, t_u]"),
            SweepVariable::RhoProduct => (0.0, 1.0, true, "rho_product must lie in (0, 1]"),
            SweepVariable::Delta => (0.0, 1.0, false, "delta must lie in (0, 1)"),
            SweepVariable::LambdaB => (0.0, f64::INFINITY, false, "lambda_b must be positive"),
            SweepVariable::BetaUDb | SweepVariable::BetaDDb => (
                f64::NEG_INFINITY,
                f64::INFINITY,
                false,
                "thresholds must be finite",
            ),
        };
        let ok_hi = if hi_closed {
            self.stop <= hi
        } else {
            self.stop < hi
        };
        if self.start > lo_open && ok_hi {
            Ok(())
        } else {
            Err(what.into())
        }
    }

    /// Evenly spaced points, both ends included.
    pub fn points(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowValues {
    pub latency_mean: f64,
    pub latency_ci95: Option<f64>,
    pub rho_u: f64,
    pub rho_d: f64,
    pub censored_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: &'static str,
    pub value: f64,
    pub scheme: Scheme,
    pub mode: RowMode,
    pub outcome: std::result::Result<RowValues, String>,
    /// `1 − L_DUDA / L_DUCA` on DUDA rows whose DUCA counterpart exists.
    pub reduction: Option<f64>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Simulated campaigns with their sweep value, in row order.
    pub campaigns: Vec<(f64, CampaignResult)>,
}

pub const SWEEP_HEADER: [&str; 12] = [
    "variable",
    "value",
    "scheme",
    "mode",
    "latency_mean",
    "latency_ci95",
    "rho_u",
    "rho_d",
    "censored_fraction",
    "reduction",
    "wall_time_ms",
    "error",
];

impl SweepTable {
    pub fn find(&self, value: f64, scheme: Scheme, mode: RowMode) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.scheme == scheme && r.mode == mode)
    }

    /// Rows in sweep order. Wall time is left empty unless requested, so
    /// that identical runs give identical bytes.
    pub fn to_csv(&self, with_wall_time: bool) -> String {
        let mut t = CsvTable::new(&SWEEP_HEADER);
        for r in &self.rows {
            let (vals, err) = match &r.outcome {
                Ok(v) => (Some(*v), String::new()),
                Err(e) => (None, e.clone()),
            };
            t.push(vec![
                r.variable.to_string(),
                fmt_sig(r.value),
                r.scheme.name().to_string(),
                r.mode.name().to_string(),
                fmt_opt(vals.map(|v| v.latency_mean)),
                fmt_opt(vals.and_then(|v| v.latency_ci95)),
                fmt_opt(vals.map(|v| v.rho_u)),
                fmt_opt(vals.map(|v| v.rho_d)),
                fmt_opt(vals.and_then(|v| v.censored_fraction)),
                fmt_opt(r.reduction),
                if with_wall_time {
                    fmt_sig(r.wall_time_ms)
                } else {
                    String::new()
                },
                err,
            ]);
        }
        t.render()
    }

    fn fill_reductions(&mut self) {
        let duca: Vec<(f64, RowMode, f64)> = self
            .rows
            .iter()
            .filter(|r| r.scheme == Scheme::Duca)
            .filter_map(|r| {
                r.outcome
                    .as_ref()
                    .ok()
                    .map(|v| (r.value, r.mode, v.latency_mean))
            })
            .collect();
        for r in self.rows.iter_mut().filter(|r| r.scheme == Scheme::Duda) {
            if let Ok(v) = &r.outcome {
                r.reduction = duca
                    .iter()
                    .find(|d| d.0 == r.value && d.1 == r.mode)
                    .map(|d| 1.0 - v.latency_mean / d.2);
            }
        }
    }
}

/// Settings at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PointSetting {
    params: SystemParams,
    timing: SlotTiming,
    link: Option<LinkSuccess>,
}

fn apply(variable: SweepVariable, value: f64, bundle: &ConfigBundle) -> Result<PointSetting> {
    let mut s = PointSetting {
        params: bundle.params,
        timing: bundle.timing,
        link: bundle.link_override,
    };
    match variable {
        SweepVariable::SU => s.timing.s_u = value,
        SweepVariable::RhoProduct => s.link = Some(LinkSuccess::symmetric(value)?),
        SweepVariable::Delta => s.params.delta = value,
        SweepVariable::LambdaB => s.params.lambda_b = value,
        SweepVariable::BetaUDb => s.params.beta_u = db_to_linear(value),
        SweepVariable::BetaDDb => s.params.beta_d = db_to_linear(value),
    }
    s.params.validate()?;
    s.timing.validate()?;
    Ok(s)
}

/// Analytic success probabilities, or the override when one is set. Both
/// schemes use the same values.
fn analytic_link(s: &PointSetting, bundle: &ConfigBundle) -> Result<LinkSuccess> {
    if let Some(l) = s.link {
        return Ok(l);
    }
    let noise = bundle.trial.noise;
    let u = ul_success_probability(&s.params, &bundle.quadrature, noise)?;
    let d = dl_success_probability(&s.params, &bundle.quadrature, noise)?;
    LinkSuccess::new(u.value, d.value)
}

fn analytic_row(s: &PointSetting, scheme: Scheme, bundle: &ConfigBundle) -> Result<RowValues> {
    let link = analytic_link(s, bundle)?;
    let total = match scheme {
        Scheme::Duda => latency_duda(&s.timing, link)?.total,
        Scheme::Duca => latency_duca(&s.timing, link)?.total,
    };
    Ok(RowValues {
        latency_mean: total,
        latency_ci95: None,
        rho_u: link.rho_u,
        rho_d: link.rho_d,
        censored_fraction: None,
    })
}

fn trial_config(s: &PointSetting, scheme: Scheme, bundle: &ConfigBundle) -> TrialConfig {
    TrialConfig {
        params: s.params,
        timing: s.timing,
        scheme,
        success_override: s.link,
        ..bundle.trial
    }
}

fn campaign_row(c: &CampaignResult) -> RowValues {
    RowValues {
        latency_mean: c.stats.mean,
        latency_ci95: Some(c.stats.ci95_half_width),
        rho_u: c.stats.empirical_rho_u,
        rho_d: c.stats.empirical_rho_d,
        censored_fraction: Some(c.stats.censored_fraction()),
    }
}

/// Runs every (point, scheme, mode) combination. A failing row records its
/// error and the remaining rows still run.
pub fn run_sweep(spec: &SweepSpec, bundle: &ConfigBundle) -> SweepTable {
    run_points(
        spec.variable,
        &spec.points(),
        &spec.schemes,
        spec.mode,
        bundle,
    )
}

/// The configured operating point only: one row per scheme and mode, with
/// the uplink data size as the reported variable.
pub fn run_point(bundle: &ConfigBundle, schemes: &[Scheme], mode: Mode) -> SweepTable {
    run_points(
        SweepVariable::SU,
        &[bundle.timing.s_u],
        schemes,
        mode,
        bundle,
    )
}

fn run_points(
    variable: SweepVariable,
    points: &[f64],
    schemes: &[Scheme],
    mode: Mode,
    bundle: &ConfigBundle,
) -> SweepTable {
    let settings: Vec<Result<PointSetting>> =
        points.iter().map(|&v| apply(variable, v, bundle)).collect();
    let mut rows = Vec::new();
    let mut campaigns = Vec::new();
    let mut push =
        |value: f64, scheme: Scheme, mode: RowMode, outcome: Result<RowValues>, t0: Instant| {
            rows.push(SweepRow {
                variable: variable.name(),
                value,
                scheme,
                mode,
                outcome: outcome.map_err(|e| e.to_string()),
                reduction: None,
                wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
            })
        };
    for &row_mode in mode.row_modes() {
        match row_mode {
            RowMode::Analytic => {
                // Success probabilities do not depend on the frame timing.
                let links: Vec<Result<LinkSuccess>> = settings
                    .par_iter()
                    .map(|s| {
                        let s = s.as_ref().map_err(Clone::clone)?;
                        analytic_link(s, bundle)
                    })
                    .collect();
                for ((&value, setting), link) in points.iter().zip(&settings).zip(links) {
                    for &scheme in schemes {
                        let t0 = Instant::now();
                        let outcome = setting.clone().and_then(|s| {
                            let pinned = PointSetting {
                                link: Some(link.clone()?),
                                ..s
                            };
                            analytic_row(&pinned, scheme, bundle)
                        });
                        push(value, scheme, row_mode, outcome, t0);
                    }
                }
            }
            RowMode::Simulate => {
                let mut reusable: Vec<Option<CampaignResult>> = vec![None; schemes.len()];
                for (&value, setting) in points.iter().zip(&settings) {
                    for (k, &scheme) in schemes.iter().enumerate() {
                        let t0 = Instant::now();
                        let outcome = setting.clone().and_then(|s| {
                            let c = match &reusable[k] {
                                Some(c) if variable.timing_only() => c.with_timing(&s.timing),
                                _ => run_campaign(&trial_config(&s, scheme, bundle))?,
                            };
                            let row = campaign_row(&c);
                            if variable.timing_only() {
                                reusable[k] = Some(c.clone());
                            }
                            campaigns.push((value, c));
                            Ok(row)
                        });
                        push(value, scheme, row_mode, outcome, t0);
                    }
                }
            }
        }
    }
    let mut table = SweepTable { rows, campaigns };
    table.fill_reductions();
    table
}
