//! Flat `key = value` configuration.
//!
//! One pair per line, `#` starts a comment. Unset keys keep the reference
//! values. Powers are given in dBm and thresholds in dB; everything is
//! converted to linear units here. Later entries override earlier ones,
//! which is how command-line flags are layered over a file.

use std::fmt;

use crate::coverage::Noise;
use crate::deployment::{Scheme, TypicalMode, TypicalPairing};
use crate::montecarlo::{RedrawPolicy, TrialConfig};
use crate::params::{db_to_linear, dbm_to_watts, LinkSuccess, SlotTiming, SystemParams};
use crate::quadrature::QuadratureSpec;
use crate::sweep::{Mode, SweepSpec};

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag(name) => write!(f, "--{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Some(o) => write!(f, "{o}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigBundle {
    pub params: SystemParams,
    pub timing: SlotTiming,
    /// Carries copies of `params` and `timing`.
    pub trial: TrialConfig,
    pub sweep: Option<SweepSpec>,
    pub schemes: Vec<Scheme>,
    pub mode: Mode,
    pub quadrature: QuadratureSpec,
    /// Fixed success probabilities in place of the geometry.
    pub link_override: Option<LinkSuccess>,
}

impl Default for ConfigBundle {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

/// Splits a document into entries, rejecting lines without `=`.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = Origin::Line(i + 1);
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError {
                origin: Some(origin),
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        out.push(Entry {
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            origin,
        });
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ConfigBundle, ConfigError> {
    build(parse_entries(text)?)
}

/// Which field of the parameter structs each key sets, used to point
/// validation failures back at a line.
fn field_key(field: &str) -> &str {
    match field {
        "beta_u" => "beta_u_db",
        "beta_d" => "beta_d_db",
        "p_b" => "p_b_dbm",
        "p_m" => "p_m_dbm",
        "noise_power" => "noise_dbm",
        other => other,
    }
}

/// Applies entries in order over the reference values and validates.
pub fn build(entries: Vec<Entry>) -> Result<ConfigBundle, ConfigError> {
    let mut params = SystemParams::reference();
    let mut timing = SlotTiming::default();
    let mut trial = TrialConfig::default();
    let mut quadrature = QuadratureSpec::default();
    let mut schemes = vec![Scheme::Duda, Scheme::Duca];
    let mut mode = Mode::Analytic;
    let mut sweep: Option<(String, Origin)> = None;
    let mut rho_u: Option<f64> = None;
    let mut rho_d: Option<f64> = None;
    let mut wait_set = false;
    let mut seen: Vec<(String, Origin)> = Vec::new();

    for e in &entries {
        let err = |message: String| ConfigError {
            origin: Some(e.origin.clone()),
            message,
        };
        let num = || -> Result<f64, ConfigError> {
            e.value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("{}: '{}' is not a number", e.key, e.value)))
        };
        let int = || -> Result<u64, ConfigError> {
            e.value.parse::<u64>().map_err(|_| {
                err(format!(
                    "{}: '{}' is not a non-negative integer",
                    e.key, e.value
                ))
            })
        };
        let choice = |options: &[&str]| -> Result<usize, ConfigError> {
            options.iter().position(|o| *o == e.value).ok_or_else(|| {
                err(format!(
                    "{}: '{}' is not one of {}",
                    e.key,
                    e.value,
                    options.join(", ")
                ))
            })
        };
        match e.key.as_str() {
            "lambda_b" => params.lambda_b = num()?,
            "delta" => params.delta = num()?,
            "alpha" => params.alpha = num()?,
            "beta_u_db" => params.beta_u = db_to_linear(num()?),
            "beta_d_db" => params.beta_d = db_to_linear(num()?),
            "p_b_dbm" => params.p_b = dbm_to_watts(num()?),
            "p_m_dbm" => params.p_m = dbm_to_watts(num()?),
            "noise_dbm" => params.noise_power = dbm_to_watts(num()?),
            "bandwidth" => params.bandwidth = num()?,
            "t_d" => timing.t_d = num()?,
            "t_u" => timing.t_u = num()?,
            "s_u" => timing.s_u = num()?,
            "s_d" => timing.s_d = num()?,
            "w" => {
                timing.w = num()?;
                wait_set = true;
            }
            "rho_u" => rho_u = Some(num()?),
            "rho_d" => rho_d = Some(num()?),
            "window" => trial.window_half_width = num()? / 2.0,
            "iterations" => trial.iterations = int()? as usize,
            "max_attempts" => {
                trial.max_attempts =
                    u32::try_from(int()?).map_err(|_| err("max_attempts is too large".into()))?
            }
            "seed" => trial.seed = int()?,
            "scheme" => {
                schemes = match choice(&["duda", "duca", "both"])? {
                    0 => vec![Scheme::Duda],
                    1 => vec![Scheme::Duca],
                    _ => vec![Scheme::Duda, Scheme::Duca],
                }
            }
            "mode" => mode = e.value.parse().map_err(err)?,
            "noise" => {
                trial.noise = [Noise::Included, Noise::Excluded][choice(&["on", "off"])?];
            }
            "redraw" => {
                trial.redraw = [
                    RedrawPolicy::FadingOnly,
                    RedrawPolicy::FadingAndDirections,
                    RedrawPolicy::Redeploy,
                    RedrawPolicy::IndependentSnapshots,
                ][choice(&["fading", "directions", "redeploy", "snapshots"])?];
            }
            "typical_pairing" => {
                trial.typical_pairing = [
                    TypicalPairing::Random,
                    TypicalPairing::UlBsFirst,
                    TypicalPairing::UeNearestTwo,
                ][choice(&["random", "ul_first", "ue_nearest"])?];
            }
            "typical_mode" => {
                trial.typical_mode = [TypicalMode::UplinkTypical, TypicalMode::DownlinkTypical]
                    [choice(&["ul", "dl"])?];
            }
            "sweep" => sweep = Some((e.value.clone(), e.origin.clone())),
            "rel_tol" => quadrature.rel_tol = num()?,
            "abs_tol" => quadrature.abs_tol = num()?,
            "max_subdivisions" => quadrature.max_subdivisions = int()? as usize,
            "tail_cutoff_mass" => quadrature.tail_cutoff_mass = num()?,
            other => return Err(err(format!("unknown key '{other}'"))),
        }
        seen.retain(|(k, _)| *k != e.key);
        seen.push((e.key.clone(), e.origin.clone()));
    }

    let origin_of = |key: &str| seen.iter().find(|(k, _)| k == key).map(|(_, o)| o.clone());
    if !wait_set {
        timing.w = timing.t_d;
    }
    let mut violations = params.violations();
    violations.extend(timing.violations());
    if let Some(v) = violations.first() {
        let key = field_key(v.field);
        let message = violations
            .iter()
            .map(|v| v.message.clone())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ConfigError {
            origin: origin_of(key),
            message,
        });
    }
    let link_override = match (rho_u, rho_d) {
        (None, None) => None,
        (Some(u), Some(d)) => Some(LinkSuccess::new(u, d).map_err(|e| ConfigError {
            origin: origin_of("rho_u"),
            message: e.to_string(),
        })?),
        _ => {
            return Err(ConfigError {
                origin: origin_of("rho_u").or_else(|| origin_of("rho_d")),
                message: "rho_u and rho_d must be given together".into(),
            })
        }
    };
    trial.params = params;
    trial.timing = timing;
    trial.success_override = link_override;
    trial.validate().map_err(|e| ConfigError {
        origin: origin_of("iterations")
            .or_else(|| origin_of("max_attempts"))
            .or_else(|| origin_of("window")),
        message: e.to_string(),
    })?;
    quadrature.validate().map_err(|e| ConfigError {
        origin: origin_of("rel_tol").or_else(|| origin_of("max_subdivisions")),
        message: e.to_string(),
    })?;
    let sweep = match sweep {
        None => None,
        Some((text, origin)) => {
            let cfg_err = |message: String| ConfigError {
                origin: Some(origin.clone()),
                message,
            };
            let spec = SweepSpec::parse_range(&text, schemes.clone(), mode).map_err(cfg_err)?;
            spec.validate(&timing).map_err(cfg_err)?;
            Some(spec)
        }
    };
    Ok(ConfigBundle {
        params,
        timing,
        trial,
        sweep,
        schemes,
        mode,
        quadrature,
        link_override,
    })
}
