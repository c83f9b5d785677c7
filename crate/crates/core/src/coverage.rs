//! Stochastic-geometry success probabilities for decoupled access.
//!
//! Under Rayleigh fading the success probability of a link at distance `r`
//! is the product of the Laplace functionals of the two interference fields
//! (downlink BSs, density `λ_ψ`, and uplink UEs, density `λ_φ`) evaluated
//! at `s = β r^α / P_tx`. Each functional of a PPP beyond an exclusion
//! radius `a` is `exp(−2πλ · K(κ, β, r, α, a))` with `K` the
//! [`interference_tail_integral`]. The success probability is then the
//! expectation of that product over the link-distance law.
//!
//! * Uplink: the UE sends to its nearest BS, so `r` has the nearest-distance
//!   law. The nearest interfering DL-BS sits at the second-nearest distance
//!   `t` (the cooperating partner is silent), so the BS functional is itself
//!   an average over `t`. Interfering UEs lie beyond `r`.
//! * Downlink: the ACK comes from the far BS of the pair, whose distance
//!   follows the second-nearest law (used here normalized). Interfering BSs
//!   lie beyond `r`; interfering UEs have no exclusion zone.
//!
//! Noise is left out by default, matching the interference-limited
//! expressions; [`Noise::Included`] multiplies by `e^{−sσ²}`. At the
//! reference powers that factor differs from 1 by less than 1e-10.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::{interference_tail_integral, try_integrate, Integral, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    #[default]
    Excluded,
    Included,
}

/// Densities of the active interferer fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererDensities {
    /// Downlink-transmitting BSs: `0.5 δ λ_b`.
    pub lambda_psi: f64,
    /// Uplink-transmitting UEs: `0.5 (1 − δ) λ_b`.
    pub lambda_phi: f64,
}

impl InterfererDensities {
    pub fn from_params(params: &SystemParams) -> Self {
        Self {
            lambda_psi: 0.5 * params.delta * params.lambda_b,
            lambda_phi: 0.5 * (1.0 - params.delta) * params.lambda_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProbabilityResult {
    pub value: f64,
    pub quadrature_error: f64,
}

/// Distance from a typical location to the nearest point of a PPP:
/// `2πλ r e^{−πλr²}`.
pub fn nearest_distance_pdf(r: f64, lambda: f64) -> f64 {
    2.0 * PI * lambda * r * (-PI * lambda * r * r).exp()
}

pub fn nearest_distance_cdf(r: f64, lambda: f64) -> f64 {
    -(-PI * lambda * r * r).exp_m1()
}

/// Distance to the second-nearest point: `2(πλ)² d³ e^{−πλd²}`.
pub fn second_nearest_distance_pdf(d: f64, lambda: f64) -> f64 {
    let pl = PI * lambda;
    2.0 * pl * pl * d.powi(3) * (-pl * d * d).exp()
}

pub fn second_nearest_distance_cdf(d: f64, lambda: f64) -> f64 {
    let x = PI * lambda * d * d;
    1.0 - (-x).exp() * (1.0 + x)
}

/// Radius beyond which the nearest-distance law has mass `mass`.
fn nearest_cutoff(lambda: f64, mass: f64) -> f64 {
    (-mass.ln() / (PI * lambda)).sqrt()
}

/// Radius beyond which the second-nearest law has mass `mass`, i.e. the root
/// of `e^{−x}(1 + x) = mass` with `x = πλd²`.
fn second_nearest_cutoff(lambda: f64, mass: f64) -> f64 {
    let target = mass.ln();
    let mut x = -target + (1.0 - target).ln();
    for _ in 0..50 {
        let h = x - (1.0 + x).ln() + target;
        let step = h * (1.0 + x) / x;
        x -= step;
        if step.abs() < 1e-14 * x {
            break;
        }
    }
    (x / (PI * lambda)).sqrt()
}

fn check(params: &SystemParams, spec: &QuadratureSpec) -> Result<()> {
    params.validate()?;
    spec.validate()
}

fn laplace(density: f64, kernel: Integral) -> f64 {
    (-2.0 * PI * density * kernel.value).exp()
}

/// Laplace functional of the downlink-BS field at the typical UL-BS, given
/// the uplink distance `r`. Averages over the distance `t` to the nearest
/// interfering DL-BS, taken as second-nearest distributed in `λ_b`.
pub fn laplace_ul_from_dl_bs(r: f64, params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    check(params, spec)?;
    laplace_ul_from_dl_bs_unchecked(r, params, spec).map(|i| i.value)
}

fn laplace_ul_from_dl_bs_unchecked(
    r: f64,
    params: &SystemParams,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    positive_distance(r)?;
    let dens = InterfererDensities::from_params(params);
    let kappa = params.bs_to_ue_power_ratio();
    let middle = spec.tighter();
    let inner = middle.tighter();
    let upper = second_nearest_cutoff(params.lambda_b, spec.tail_cutoff_mass);
    try_integrate(
        |t| {
            let w = second_nearest_distance_pdf(t, params.lambda_b);
            if w == 0.0 {
                return Ok(0.0);
            }
            let k = interference_tail_integral(kappa, params.beta_u, r, params.alpha, t, &inner)?;
            Ok(w * laplace(dens.lambda_psi, k))
        },
        0.0,
        upper,
        &middle,
    )
}

/// Laplace functional of the uplink-UE field at the typical UL-BS; the
/// interfering UEs lie beyond `r`.
pub fn laplace_ul_from_ul_ue(r: f64, params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    check(params, spec)?;
    positive_distance(r)?;
    let dens = InterfererDensities::from_params(params);
    let k = interference_tail_integral(1.0, params.beta_u, r, params.alpha, r, &spec.tighter())?;
    Ok(laplace(dens.lambda_phi, k))
}

/// Laplace functional of the downlink-BS field at the typical UE; the
/// interfering BSs lie beyond `r`.
pub fn laplace_dl_from_dl_bs(r: f64, params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    check(params, spec)?;
    positive_distance(r)?;
    let dens = InterfererDensities::from_params(params);
    let k = interference_tail_integral(1.0, params.beta_d, r, params.alpha, r, &spec.tighter())?;
    Ok(laplace(dens.lambda_psi, k))
}

/// Laplace functional of the uplink-UE field at the typical UE, with no
/// exclusion zone.
pub fn laplace_dl_from_ul_ue(r: f64, params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    check(params, spec)?;
    positive_distance(r)?;
    let dens = InterfererDensities::from_params(params);
    let kappa = params.p_m / params.p_b;
    let k =
        interference_tail_integral(kappa, params.beta_d, r, params.alpha, 0.0, &spec.tighter())?;
    Ok(laplace(dens.lambda_phi, k))
}

fn positive_distance(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "link distance must be positive, got {r}"
        )))
    }
}

fn noise_factor(noise: Noise, beta: f64, r: f64, alpha: f64, tx_power: f64, sigma2: f64) -> f64 {
    match noise {
        Noise::Excluded => 1.0,
        Noise::Included => (-beta * r.powf(alpha) / tx_power * sigma2).exp(),
    }
}

/// Uplink success probability `ρ_u` of the typical DUDA user.
pub fn ul_success_probability(
    params: &SystemParams,
    spec: &QuadratureSpec,
    noise: Noise,
) -> Result<SuccessProbabilityResult> {
    check(params, spec)?;
    let upper = nearest_cutoff(params.lambda_b, spec.tail_cutoff_mass);
    let i = try_integrate(
        |r| {
            let w = nearest_distance_pdf(r, params.lambda_b);
            if w == 0.0 {
                return Ok(0.0);
            }
            let bs = laplace_ul_from_dl_bs_unchecked(r, params, spec)?.value;
            let ue = laplace_ul_from_ul_ue(r, params, spec)?;
            let n = noise_factor(
                noise,
                params.beta_u,
                r,
                params.alpha,
                params.p_m,
                params.noise_power,
            );
            Ok(w * bs * ue * n)
        },
        0.0,
        upper,
        spec,
    )?;
    Ok(finish(i, spec))
}

/// Downlink (ACK) success probability `ρ_d` of the typical DUDA user.
pub fn dl_success_probability(
    params: &SystemParams,
    spec: &QuadratureSpec,
    noise: Noise,
) -> Result<SuccessProbabilityResult> {
    check(params, spec)?;
    let upper = second_nearest_cutoff(params.lambda_b, spec.tail_cutoff_mass);
    let i = try_integrate(
        |r| {
            let w = second_nearest_distance_pdf(r, params.lambda_b);
            if w == 0.0 {
                return Ok(0.0);
            }
            let bs = laplace_dl_from_dl_bs(r, params, spec)?;
            let ue = laplace_dl_from_ul_ue(r, params, spec)?;
            let n = noise_factor(
                noise,
                params.beta_d,
                r,
                params.alpha,
                params.p_b,
                params.noise_power,
            );
            Ok(w * bs * ue * n)
        },
        0.0,
        upper,
        spec,
    )?;
    Ok(finish(i, spec))
}

fn finish(i: Integral, spec: &QuadratureSpec) -> SuccessProbabilityResult {
    SuccessProbabilityResult {
        value: i.value.clamp(0.0, 1.0),
        // The truncated tail contributes at most its probability mass.
        quadrature_error: i.abs_error + spec.tail_cutoff_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_semi_infinite;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, Poisson};

    fn reference() -> SystemParams {
        SystemParams::reference()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn densities_split_by_delta() {
        let d = InterfererDensities::from_params(&reference());
        assert_eq!(d.lambda_psi, 0.00125);
        assert_eq!(d.lambda_phi, 0.00125);
    }

    #[test]
    fn distance_pdfs() {
        assert_eq!(nearest_distance_pdf(0.0, 0.005), 0.0);
        assert_eq!(second_nearest_distance_pdf(0.0, 0.005), 0.0);
        let s = spec();
        let n1 = integrate_semi_infinite(|r| nearest_distance_pdf(r, 0.005), 0.0, &s).unwrap();
        let n2 =
            integrate_semi_infinite(|r| second_nearest_distance_pdf(r, 0.005), 0.0, &s).unwrap();
        assert!((n1.value - 1.0).abs() < 1e-9);
        assert!((n2.value - 1.0).abs() < 1e-9);
        let mean =
            integrate_semi_infinite(|r| r * nearest_distance_pdf(r, 0.005), 0.0, &s).unwrap();
        assert!((mean.value - 1.0 / (2.0 * 0.005f64.sqrt())).abs() < 1e-7);
        assert!((mean.value - 7.071).abs() < 1e-3);
        // CDF is the integral of the pdf.
        let part =
            crate::quadrature::integrate(|r| second_nearest_distance_pdf(r, 0.005), 0.0, 12.0, &s)
                .unwrap();
        assert!((part.value - second_nearest_distance_cdf(12.0, 0.005)).abs() < 1e-12);
    }

    #[test]
    fn cutoffs_leave_the_requested_mass() {
        for &m in &[1e-7, 1e-12, 1e-15] {
            let r = nearest_cutoff(0.005, m);
            assert!(((-PI * 0.005 * r * r).exp() / m - 1.0).abs() < 1e-9);
            assert!((nearest_distance_cdf(r, 0.005) - (1.0 - m)).abs() < 1e-15);
            let d = second_nearest_cutoff(0.005, m);
            let x = PI * 0.005 * d * d;
            assert!(((-x).exp() * (1.0 + x) / m - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vanishing_threshold_means_certain_success() {
        let p = SystemParams {
            beta_u: 1e-14,
            beta_d: 1e-14,
            ..reference()
        };
        assert!((laplace_ul_from_dl_bs(7.071, &p, &spec()).unwrap() - 1.0).abs() < 1e-8);
        assert!((laplace_ul_from_ul_ue(7.071, &p, &spec()).unwrap() - 1.0).abs() < 1e-8);
        let u = ul_success_probability(&p, &spec(), Noise::Excluded).unwrap();
        let d = dl_success_probability(&p, &spec(), Noise::Excluded).unwrap();
        assert!((u.value - 1.0).abs() < 1e-8);
        assert!((d.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sparse_network_sees_no_bs_interference() {
        // λ_b → 0 with the typical distance fixed: the BS field empties.
        let p = SystemParams {
            lambda_b: 1e-9,
            ..reference()
        };
        assert!((laplace_ul_from_dl_bs(7.071, &p, &spec()).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn ue_field_closed_form_at_alpha_four() {
        let p = reference();
        for &r in &[1.0, 7.071, 20.0] {
            let dens = InterfererDensities::from_params(&p);
            let b = p.beta_u.sqrt();
            let expect =
                (-2.0 * PI * dens.lambda_phi * (r * r * b / 2.0) * (PI / 2.0 - (1.0 / b).atan()))
                    .exp();
            let got = laplace_ul_from_ul_ue(r, &p, &spec()).unwrap();
            assert!((got - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn one_sided_traffic_silences_a_field() {
        let all_dl = SystemParams {
            delta: 1.0 - 1e-12,
            ..reference()
        };
        assert!((laplace_ul_from_ul_ue(7.0, &all_dl, &spec()).unwrap() - 1.0).abs() < 1e-9);
        let all_ul = SystemParams {
            delta: 1e-12,
            ..reference()
        };
        assert!((laplace_ul_from_dl_bs(7.0, &all_ul, &spec()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn laplace_outputs_monotone() {
        let s = spec();
        let base = reference();
        let r = 7.0;
        let fns: [fn(f64, &SystemParams, &QuadratureSpec) -> Result<f64>; 4] = [
            laplace_ul_from_dl_bs,
            laplace_ul_from_ul_ue,
            laplace_dl_from_dl_bs,
            laplace_dl_from_ul_ue,
        ];
        for f in fns {
            let v = f(r, &base, &s).unwrap();
            assert!(v > 0.0 && v <= 1.0);
            let tougher = SystemParams {
                beta_u: base.beta_u * 2.0,
                beta_d: base.beta_d * 2.0,
                ..base
            };
            let denser = SystemParams {
                lambda_b: base.lambda_b * 2.0,
                ..base
            };
            assert!(f(r, &tougher, &s).unwrap() <= v);
            assert!(f(r, &denser, &s).unwrap() <= v);
        }
    }

    #[test]
    fn reference_probabilities() {
        let p = reference();
        let u = ul_success_probability(&p, &spec(), Noise::Excluded).unwrap();
        let d = dl_success_probability(&p, &spec(), Noise::Excluded).unwrap();
        assert!(u.value > 0.0 && u.value < 1.0);
        assert!(d.value > 0.0 && d.value < 1.0);
        assert!(u.quadrature_error < 1e-6 && d.quadrature_error < 1e-6);
        let with_noise = ul_success_probability(&p, &spec(), Noise::Included).unwrap();
        assert!((with_noise.value - u.value).abs() < 1e-10);
        assert!(with_noise.value <= u.value);

        let doubled = SystemParams {
            beta_u: 2.0 * p.beta_u,
            ..p
        };
        assert!(
            ul_success_probability(&doubled, &spec(), Noise::Excluded)
                .unwrap()
                .value
                < u.value
        );
        let quiet_ue = SystemParams { p_m: 1e-12, ..p };
        assert!(
            dl_success_probability(&quiet_ue, &spec(), Noise::Excluded)
                .unwrap()
                .value
                > d.value
        );
        let denser = SystemParams {
            lambda_b: 0.01,
            ..p
        };
        assert!(
            ul_success_probability(&denser, &spec(), Noise::Excluded)
                .unwrap()
                .value
                <= u.value + 1e-9
        );
        assert!(
            dl_success_probability(&denser, &spec(), Noise::Excluded)
                .unwrap()
                .value
                <= d.value + 1e-9
        );
    }

    /// Direct sampling of `E[exp(−s I)]` for a PPP of downlink BSs beyond a
    /// second-nearest-distributed exclusion radius, with Rayleigh fading.
    fn sample_laplace_ul_from_dl_bs(r: f64, p: &SystemParams, n: usize, seed: u64) -> (f64, f64) {
        let dens = InterfererDensities::from_params(p);
        let outer = 1000.0;
        let s = p.beta_u * r.powf(p.alpha) / p.p_m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let e1: f64 = Exp1.sample(&mut rng);
            let e2: f64 = Exp1.sample(&mut rng);
            let t = ((e1 + e2) / (PI * p.lambda_b)).sqrt();
            let area = PI * (outer * outer - t * t);
            let count = Poisson::new(dens.lambda_psi * area)
                .unwrap()
                .sample(&mut rng) as usize;
            let mut interference = 0.0;
            for _ in 0..count {
                let u: f64 = rng.random();
                let x2 = t * t + u * (outer * outer - t * t);
                let g: f64 = Exp1.sample(&mut rng);
                interference += g * p.p_b * x2.powf(-p.alpha / 2.0);
            }
            let v = (-s * interference).exp();
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        (mean, ((sq / n as f64 - mean * mean) / n as f64).sqrt())
    }

    #[test]
    fn dl_bs_functional_matches_field_sampling() {
        let p = reference();
        let r = 7.071;
        let analytic = laplace_ul_from_dl_bs(r, &p, &spec()).unwrap();
        let (mc, se) = sample_laplace_ul_from_dl_bs(r, &p, 100_000, 17);
        assert!(analytic > 0.0 && analytic < 1.0);
        assert!((analytic - mc).abs() < 0.01, "{analytic} vs {mc}");
        assert!(
            (analytic - mc).abs() < 3.0 * se,
            "{analytic} vs {mc} (se {se})"
        );
    }

    #[test]
    fn ue_functional_matches_field_sampling() {
        let p = reference();
        let dens = InterfererDensities::from_params(&p);
        let r: f64 = 7.071;
        let s = p.beta_u * r.powf(p.alpha) / p.p_m;
        let analytic = laplace_ul_from_ul_ue(r, &p, &spec()).unwrap();
        let outer: f64 = 1000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        let pois = Poisson::new(dens.lambda_phi * PI * (outer * outer - r * r)).unwrap();
        for _ in 0..n {
            let count = pois.sample(&mut rng) as usize;
            let mut interference = 0.0;
            for _ in 0..count {
                let u: f64 = rng.random();
                let y2 = r * r + u * (outer * outer - r * r);
                let g: f64 = Exp1.sample(&mut rng);
                interference += g * p.p_m * y2.powf(-p.alpha / 2.0);
            }
            let v = (-s * interference).exp();
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (analytic - mean).abs() < 3.0 * se,
            "{analytic} vs {mean} (se {se})"
        );
    }
}
