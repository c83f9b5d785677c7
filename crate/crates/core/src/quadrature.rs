//! Adaptive Gauss-Kronrod quadrature on finite and semi-infinite domains.
//!
//! The 21-point Kronrod rule with its embedded 10-point Gauss rule gives a
//! value and an error estimate per interval; the interval with the largest
//! estimate is bisected until the global estimate meets
//! `max(abs_tol, rel_tol·|I|)`. Semi-infinite integrals go through
//! `x = a + L·u/(1 − u)` onto `[0, 1)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Probability mass of a distance law left out when an expectation over
    /// that law is cut at a finite radius.
    pub tail_cutoff_mass: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_cutoff_mass: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_subdivisions >= 1
            && self.tail_cutoff_mass > 0.0
            && self.tail_cutoff_mass < 1e-6;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid quadrature spec {self:?}: tolerances must be positive, \
                 max_subdivisions >= 1 and 0 < tail_cutoff_mass < 1e-6"
            )))
        }
    }

    /// Same settings with both tolerances one decade tighter, for inner integrals.
    pub fn tighter(&self) -> Self {
        Self {
            rel_tol: self.rel_tol / 10.0,
            abs_tol: self.abs_tol / 10.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

// Kronrod abscissae; the odd entries are the Gauss-Legendre 10-point nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_553_281_590,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_21<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive integration of a fallible integrand over `[a, b]`.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite bounds required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let first = gauss_kronrod_21(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;

    let tolerance = |v: f64| spec.abs_tol.max(spec.rel_tol * v.abs());
    while total_err > tolerance(total) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                value: total,
                abs_error: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; nothing more to gain.
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod_21(&mut f, worst.a, mid)?;
        let right = gauss_kronrod_21(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    // Re-sum to shed the drift of the incremental updates.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Integral {
        value,
        abs_error,
        subdivisions,
    })
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, spec)
}

/// `∫_a^∞ f(x) dx` through `x = a + scale·u/(1 − u)`. `scale` should be the
/// length over which `f` varies, so the mapped integrand stays smooth.
pub fn try_integrate_semi_infinite_scaled<F>(
    mut f: F,
    a: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "semi-infinite integral needs finite a and positive scale, got a = {a}, scale = {scale}"
        )));
    }
    try_integrate(
        |u| {
            let w = 1.0 - u;
            let x = a + scale * u / w;
            if !x.is_finite() {
                return Ok(0.0);
            }
            let fx = f(x)?;
            if fx == 0.0 {
                Ok(0.0)
            } else {
                Ok(fx * scale / (w * w))
            }
        },
        0.0,
        1.0,
        spec,
    )
}

pub fn integrate_semi_infinite_scaled<F>(
    mut f: F,
    a: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_semi_infinite_scaled(|x| Ok(f(x)), a, scale, spec)
}

/// `∫_a^∞ f(x) dx` with the unit-scale map `x = a + u/(1 − u)`.
pub fn integrate_semi_infinite<F>(f: F, a: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    if a < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lower bound must be non-negative, got {a}"
        )));
    }
    integrate_semi_infinite_scaled(f, a, 1.0, spec)
}

/// Interference kernel shared by every Laplace functional:
///
/// `∫_a^∞ c x^−α / (1 + c x^−α) · x dx`, with `c = κ β r^α`.
///
/// `κ` is the interferer-to-signal power ratio, `β` the SINR threshold, `r`
/// the link distance and `a` the exclusion radius around the receiver.
/// Substituting `x = ℓu` with `ℓ = c^{1/α}` reduces it to
/// `ℓ² ∫_{a/ℓ}^∞ u / (1 + u^α) du`, which is what gets integrated, so the
/// relative tolerance holds across any magnitude of `c`.
pub fn interference_tail_integral(
    kappa: f64,
    beta: f64,
    r: f64,
    alpha: f64,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if alpha.is_nan() || alpha <= 2.0 {
        return Err(Error::InvalidArgument(format!(
            "path-loss exponent must exceed 2 for a finite tail, got {alpha}"
        )));
    }
    if kappa < 0.0 || beta < 0.0 || r < 0.0 || a < 0.0 || a.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "kernel arguments must be non-negative (kappa {kappa}, beta {beta}, r {r}, a {a})"
        )));
    }
    if kappa == 0.0 || beta == 0.0 || r == 0.0 {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let ell = ((kappa.ln() + beta.ln()) / alpha).exp() * r;
    let lower = a / ell;
    let normalized = |u: f64| {
        if u <= 1.0 {
            u / (1.0 + u.powf(alpha))
        } else {
            let inv = u.powf(-alpha);
            u * inv / (1.0 + inv)
        }
    };
    let inner = QuadratureSpec {
        abs_tol: f64::MIN_POSITIVE,
        ..*spec
    };
    let g = integrate_semi_infinite_scaled(normalized, lower, lower.max(1.0), &inner)?;
    let s = ell * ell;
    Ok(Integral {
        value: s * g.value,
        abs_error: s * g.abs_error,
        subdivisions: g.subdivisions,
    })
}
