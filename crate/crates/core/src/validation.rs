//! Self-checks run by `tddlat validate`.
//!
//! Each check compares a computed quantity against an independent route to
//! the same number and reports the measured deviation next to its
//! threshold. Statistical checks use 1 % significance.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::config::ConfigBundle;
use crate::coverage::{
    dl_success_probability, nearest_distance_cdf, second_nearest_distance_cdf,
    ul_success_probability,
};
use crate::deployment::{sample_ppp, Point, RngStream, Scheme};
use crate::latency::{latency_duca, latency_duda};
use crate::montecarlo::{run_campaign, CampaignResult, TrialConfig};
use crate::params::{LinkSuccess, SlotTiming, SystemParams};
use crate::quadrature::{interference_tail_integral, QuadratureSpec};
use crate::report::{fmt_opt, CsvTable};
use crate::stats::{
    chi_square_geometric, chi_square_poisson, ks_test, mean_and_std_error, TestResult,
};

pub const SIGNIFICANCE: f64 = 0.01;
pub const KERNEL_TUPLES: usize = 10_000;
pub const GAP_POINTS: usize = 10_000;
pub const SPATIAL_SAMPLES: usize = 100_000;
pub const RHO_U_TOLERANCE: f64 = 0.03;
pub const RHO_D_TOLERANCE: f64 = 0.05;

// Streams far above any trial index, so checks never share draws with the
// campaigns.
const KERNEL_STREAM: u64 = 1 << 48;
const GAP_STREAM: u64 = (1 << 48) + 1;
const SPATIAL_STREAM: u64 = 1 << 49;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn judged(name: &str, ok: bool, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured: Some(measured),
            threshold: Some(threshold),
            detail,
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            measured: None,
            threshold: None,
            detail,
        }
    }

    fn skipped(name: &str, detail: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            measured: None,
            threshold: None,
            detail: detail.into(),
        }
    }

    /// A goodness-of-fit result; measured is the p-value.
    fn from_test(name: &str, t: TestResult) -> Self {
        let dof = t.dof.map(|d| format!(" dof={d}")).unwrap_or_default();
        Self {
            name: name.into(),
            status: if t.passes(SIGNIFICANCE) {
                Status::Pass
            } else {
                Status::Fail
            },
            measured: Some(t.p_value),
            threshold: Some(SIGNIFICANCE),
            detail: format!("statistic={:.6}{dof}", t.statistic),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["check", "status", "measured", "threshold", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                c.status.name().into(),
                fmt_opt(c.measured),
                fmt_opt(c.threshold),
                c.detail.clone(),
            ]);
        }
        t.render()
    }
}

/// `∫_a^∞ c x^−4/(1 + c x^−4) x dx = (√c/2) atan(√c/a²)`, `c = κβr⁴`.
pub fn kernel_alpha4_closed_form(kappa: f64, beta: f64, r: f64, a: f64) -> f64 {
    let sqrt_c = (kappa * beta).sqrt() * r * r;
    if a == 0.0 {
        0.25 * PI * sqrt_c
    } else {
        0.5 * sqrt_c * (sqrt_c / (a * a)).atan()
    }
}

/// Worst relative error of the interference kernel against its α = 4
/// closed form over log-uniform tuples spanning six decades each.
pub fn check_kernel_alpha4(
    params: &SystemParams,
    spec: &QuadratureSpec,
    tuples: usize,
    seed: u64,
) -> Check {
    const NAME: &str = "kernel_alpha4_closed_form";
    if params.alpha != 4.0 {
        return Check::skipped(NAME, "closed form exists for alpha = 4 only");
    }
    let mut rng = RngStream::new(seed, KERNEL_STREAM).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..tuples {
        let mut draw = || 10f64.powf(rng.random_range(-3.0..3.0));
        let (k, b, r, a) = (draw(), draw(), draw(), draw());
        match interference_tail_integral(k, b, r, 4.0, a, spec) {
            Ok(i) => {
                let want = kernel_alpha4_closed_form(k, b, r, a);
                worst = worst.max(((i.value - want) / want).abs());
            }
            Err(e) => return Check::failed(NAME, format!("kappa={k} beta={b} r={r} a={a}: {e}")),
        }
    }
    Check::judged(
        NAME,
        worst <= 1e-8,
        worst,
        1e-8,
        format!("{tuples} tuples, worst relative error"),
    )
}

/// DUCA minus DUDA over random symmetric frames against `(t − s_u)/p + s_u`.
pub fn check_gap_grid(points: usize, seed: u64) -> Check {
    const NAME: &str = "latency_gap_positive";
    let mut rng = RngStream::new(seed, GAP_STREAM).rng();
    let mut worst: f64 = 0.0;
    let mut negative = 0usize;
    for _ in 0..points {
        let t = rng.random_range(0.1..10.0);
        let s_u = t - rng.random_range(0.0..t);
        let s_d = t - rng.random_range(0.0..t);
        let p = 1.0 - rng.random_range(0.0..0.99);
        let timing = SlotTiming::new(t, t, s_u, s_d);
        let link = match LinkSuccess::symmetric(p) {
            Ok(l) => l,
            Err(e) => return Check::failed(NAME, e.to_string()),
        };
        let (duca, duda) = match (latency_duca(&timing, link), latency_duda(&timing, link)) {
            (Ok(c), Ok(d)) => (c.total, d.total),
            (Err(e), _) | (_, Err(e)) => return Check::failed(NAME, e.to_string()),
        };
        let gap = duca - duda;
        if !(gap > 0.0) {
            negative += 1;
        }
        let want = (t - s_u) / link.product() + s_u;
        worst = worst.max(((gap - want) / want).abs());
    }
    Check::judged(
        NAME,
        negative == 0 && worst <= 1e-12,
        worst,
        1e-12,
        format!("{points} points, {negative} non-positive gaps, worst relative error"),
    )
}

/// Quadrant counts and origin distances from independent PPP draws.
pub struct SpatialSample {
    pub quadrant_counts: Vec<u64>,
    pub nearest: Vec<f64>,
    pub second_nearest: Vec<f64>,
    pub quadrant_mean: f64,
}

pub fn spatial_sample(lambda: f64, half_width: f64, samples: usize, seed: u64) -> SpatialSample {
    let draws: Vec<(u64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, SPATIAL_STREAM + i).rng();
            let pts = sample_ppp(lambda, half_width, &mut rng);
            let quadrant = pts.iter().filter(|p| p.x >= 0.0 && p.y >= 0.0).count() as u64;
            let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
            for p in &pts {
                let d = p.dist(&Point::ORIGIN);
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            (quadrant, d1, d2)
        })
        .collect();
    SpatialSample {
        quadrant_counts: draws.iter().map(|d| d.0).collect(),
        nearest: draws.iter().map(|d| d.1).collect(),
        second_nearest: draws.iter().map(|d| d.2).collect(),
        quadrant_mean: lambda * half_width * half_width,
    }
}

pub fn check_spatial(
    params: &SystemParams,
    half_width: f64,
    samples: usize,
    seed: u64,
) -> Vec<Check> {
    let lambda = params.lambda_b;
    let s = spatial_sample(lambda, half_width, samples, seed);
    vec![
        Check::from_test(
            "ppp_count_chi_square",
            chi_square_poisson(&s.quadrant_counts, s.quadrant_mean),
        ),
        Check::from_test(
            "nearest_distance_ks",
            ks_test(&s.nearest, |r| nearest_distance_cdf(r, lambda)),
        ),
        Check::from_test(
            "second_nearest_distance_ks",
            ks_test(&s.second_nearest, |d| {
                second_nearest_distance_cdf(d, lambda)
            }),
        ),
    ]
}

/// Analytic success probabilities against first-attempt frequencies of a
/// DUDA campaign.
pub fn check_success_probabilities(analytic: LinkSuccess, duda: &CampaignResult) -> Vec<Check> {
    let s = &duda.stats;
    let du = (analytic.rho_u - s.empirical_rho_u).abs();
    let dd = (analytic.rho_d - s.empirical_rho_d).abs();
    vec![
        Check::judged(
            "rho_u_analytic_vs_simulated",
            du <= RHO_U_TOLERANCE,
            du,
            RHO_U_TOLERANCE,
            format!(
                "analytic={:.6} simulated={:.6}",
                analytic.rho_u, s.empirical_rho_u
            ),
        ),
        Check::judged(
            "rho_d_analytic_vs_simulated",
            dd <= RHO_D_TOLERANCE,
            dd,
            RHO_D_TOLERANCE,
            format!(
                "analytic={:.6} simulated={:.6}",
                analytic.rho_d, s.empirical_rho_d
            ),
        ),
    ]
}

/// Sampled mean latency against the closed form at the campaign's own
/// first-attempt success frequencies. Those frequencies are estimates, so
/// the z-score uses the standard error of the difference: each trial
/// contributes `L − g_u·U − g_d·V`, with `U`, `V` its first-attempt outcomes
/// and `g` the closed form's partial derivatives.
pub fn check_self_consistency(campaign: &CampaignResult, timing: &SlotTiming) -> Check {
    let name = format!("self_consistency_{}", campaign.scheme.name().to_lowercase());
    let s = &campaign.stats;
    let link = match LinkSuccess::new(s.empirical_rho_u, s.empirical_rho_d) {
        Ok(l) => l,
        Err(e) => return Check::failed(&name, e.to_string()),
    };
    let (closed, cycle) = match campaign.scheme {
        Scheme::Duda => (latency_duda(timing, link), timing.s_u + timing.w),
        Scheme::Duca => (latency_duca(timing, link), timing.frame()),
    };
    let closed = match closed {
        Ok(b) => b.total,
        Err(e) => return Check::failed(&name, e.to_string()),
    };
    let (ru, rd) = (link.rho_u, link.rho_d);
    let g_u = -cycle / (ru * ru * rd);
    let g_d = -cycle / (ru * rd * rd);
    let terms: Vec<f64> = campaign
        .outcomes
        .iter()
        .map(|o| {
            o.latency
                - g_u * f64::from(u8::from(o.first_ul_success))
                - g_d * f64::from(u8::from(o.first_dl_success))
        })
        .collect();
    let (_, se) = mean_and_std_error(&terms);
    let z = (s.mean - closed) / se;
    Check::judged(
        &name,
        z.abs() <= 3.0,
        z,
        3.0,
        format!(
            "mean={:.6} closed_form={:.6} std_error={:.6}",
            s.mean, closed, se
        ),
    )
}

/// Attempt counts of a campaign against a geometric law.
pub fn check_geometric_attempts(campaign: &CampaignResult) -> Check {
    let name = format!(
        "geometric_attempts_{}",
        campaign.scheme.name().to_lowercase()
    );
    let attempts: Vec<u64> = campaign
        .outcomes
        .iter()
        .map(|o| u64::from(o.attempts))
        .collect();
    Check::from_test(&name, chi_square_geometric(&attempts))
}

fn campaign_for(
    bundle: &ConfigBundle,
    scheme: Scheme,
) -> std::result::Result<CampaignResult, String> {
    let cfg = TrialConfig {
        scheme,
        ..bundle.trial
    };
    run_campaign(&cfg).map_err(|e| e.to_string())
}

/// The analytic success probabilities of the bundle, or its override.
pub fn analytic_link(bundle: &ConfigBundle) -> crate::Result<LinkSuccess> {
    if let Some(link) = bundle.link_override {
        return Ok(link);
    }
    let u = ul_success_probability(&bundle.params, &bundle.quadrature, bundle.trial.noise)?;
    let d = dl_success_probability(&bundle.params, &bundle.quadrature, bundle.trial.noise)?;
    LinkSuccess::new(u.value, d.value)
}

/// Runs every check under the bundle's parameters and seed.
pub fn run_validation(bundle: &ConfigBundle) -> ValidationReport {
    let seed = bundle.trial.seed;
    let mut checks = vec![
        check_kernel_alpha4(&bundle.params, &bundle.quadrature, KERNEL_TUPLES, seed),
        check_gap_grid(GAP_POINTS, seed),
    ];
    checks.extend(check_spatial(
        &bundle.params,
        bundle.trial.window_half_width,
        SPATIAL_SAMPLES,
        seed,
    ));
    let duda = campaign_for(bundle, Scheme::Duda);
    match (&duda, analytic_link(bundle)) {
        (Ok(c), Ok(link)) => checks.extend(check_success_probabilities(link, c)),
        (Err(e), _) => checks.push(Check::failed("success_probabilities", e.clone())),
        (_, Err(e)) => checks.push(Check::failed("success_probabilities", e.to_string())),
    }
    let duca = campaign_for(bundle, Scheme::Duca);
    for c in [duda, duca] {
        match c {
            Ok(c) => {
                checks.push(check_self_consistency(&c, &bundle.timing));
                checks.push(check_geometric_attempts(&c));
            }
            Err(e) => checks.push(Check::failed("campaign", e)),
        }
    }
    ValidationReport { checks }
}
