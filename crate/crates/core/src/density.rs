//! Stable density evaluation: power series with a multi-precision rescue
//! path, Fourier inversion, and the index-duality transform.
//!
//! Both series (the x^k expansion for index > 1 and the x^{-k*index}
//! expansion for index < 1) suffer catastrophic cancellation in the
//! light-tail regimes: partial sums pass through values many orders of
//! magnitude above the result. The evaluator runs a compensated f64 pass
//! first and, when the measured cancellation exceeds what f64 can absorb,
//! re-sums in MPFR at a precision chosen from the measured loss, certifying
//! at least ~18 correct decimal digits before converting back to f64.

use crate::error::{Error, Result};
use crate::params::{dual_params, Parametrization, StableParams};
use crate::quadrature::{integrate, QuadPolicy};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{LN_10, PI};

pub const DEFAULT_SERIES_CAP: usize = 200;
pub const DEFAULT_SERIES_TOL: f64 = 1e-14;

/// Term cap for the internal escalation path; the worst accepted regimes
/// need ~13k terms, everything past this is treated as non-convergent.
const RESCUE_CAP: usize = 60_000;
const MAX_PREC: u32 = 4096;
/// Below this base-10 magnitude a result is flushed to zero: the smallest
/// positive f64 is ~1e-323, so once the saddle-point bound certifies the
/// value is under this level, 0.0 is the correctly rounded f64 result.
const UNDERFLOW_LOG10: f64 = -325.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Quadrature,
    Dual,
}

impl Method {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Method::Series),
            "quad" => Ok(Method::Quadrature),
            "dual" => Ok(Method::Dual),
            other => Err(Error::InvalidParams(format!(
                "unknown method `{other}` (expected series|quad|dual)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityQuery {
    pub x: f64,
    pub params: StableParams,
    pub method: Method,
    pub series_cap: usize,
    pub tol: f64,
}

impl DensityQuery {
    pub fn new(x: f64, params: StableParams, method: Method) -> Self {
        DensityQuery {
            x,
            params,
            method,
            series_cap: DEFAULT_SERIES_CAP,
            tol: DEFAULT_SERIES_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.series_cap == 0 {
            return Err(Error::InvalidParams("series_cap must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams("tol must be > 0".into()));
        }
        if self.method == Method::Dual {
            if self.params.alpha() <= 1.0 {
                return Err(Error::InvalidParams(
                    "dual evaluation requires alpha > 1".into(),
                ));
            }
            if self.x <= 0.0 {
                return Err(Error::InvalidParams(
                    "dual evaluation requires x > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Which expansion is being summed. Both have the shape
/// (1/pi) sum_k (-1)^{k+1} A_k sin(pi k phi) with superexponentially
/// decaying amplitudes A_k.
#[derive(Clone, Copy)]
enum Kind {
    /// A_k = Gamma(1 + k/alpha)/k! x^{k-1}, phi = (eta + alpha)/(2 alpha).
    /// Convergent for index in (1, 2].
    Super,
    /// A_k = Gamma(alpha k + 1)/k! x^{-alpha k - 1}, phi = (eta + alpha)/2.
    /// Convergent for index in (0, 1).
    Sub,
}

fn phase(kind: Kind, alpha: f64, eta: f64) -> f64 {
    match kind {
        Kind::Super => (eta + alpha) / (2.0 * alpha),
        Kind::Sub => (eta + alpha) / 2.0,
    }
}

fn ln_amp(kind: Kind, alpha: f64, lnx: f64, k: f64) -> f64 {
    match kind {
        Kind::Super => ln_gamma(1.0 + k / alpha) - ln_gamma(k + 1.0) + (k - 1.0) * lnx,
        Kind::Sub => ln_gamma(alpha * k + 1.0) - ln_gamma(k + 1.0) - (alpha * k + 1.0) * lnx,
    }
}

struct F64Sum {
    value: f64,
    #[allow(dead_code)]
    terms: usize,
    digits_lost: f64,
}

/// Compensated f64 pass. Returns None on overflow of an individual term,
/// non-convergence within `cap`, or a non-finite accumulation.
fn series_f64(kind: Kind, alpha: f64, eta: f64, x: f64, cap: usize, tol: f64) -> Option<F64Sum> {
    let phi = phase(kind, alpha, eta);
    let lnx = x.ln();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut max_amp = 0.0f64;
    let mut small = 0u32;
    for k in 1..=cap {
        let kf = k as f64;
        let la = ln_amp(kind, alpha, lnx, kf);
        if la > 700.0 {
            return None;
        }
        let amp = la.exp();
        max_amp = max_amp.max(amp);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * amp * (PI * kf * phi).sin();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        // Convergence is tested on the amplitude envelope, not the term:
        // the sine factor has exact zeros on arithmetic progressions of k
        // and a zero term says nothing about the tail.
        if amp <= tol * sum.abs().max(f64::MIN_POSITIVE) {
            small += 1;
            if small >= 2 {
                if !sum.is_finite() {
                    return None;
                }
                let lost = if sum == 0.0 {
                    f64::INFINITY
                } else {
                    (max_amp / sum.abs()).log10().max(0.0)
                };
                return Some(F64Sum { value: sum / PI, terms: k, digits_lost: lost });
            }
        } else {
            small = 0;
        }
    }
    None
}

struct MpfrSum {
    value: Float,
    terms: usize,
    digits_lost: f64,
    converged: bool,
}

fn series_mpfr(kind: Kind, alpha: f64, eta: f64, x: f64, cap: usize, prec: u32) -> MpfrSum {
    let pi = Float::with_val(prec, Constant::Pi);
    let phi = match kind {
        Kind::Super => Float::with_val(prec, eta + alpha) / Float::with_val(prec, 2.0 * alpha),
        Kind::Sub => Float::with_val(prec, eta + alpha) / 2u32,
    };
    let xf = Float::with_val(prec, x);
    // Running power of the argument: x^{k-1} (Super) or x^{-alpha k - 1} (Sub).
    let step = match kind {
        Kind::Super => xf.clone(),
        Kind::Sub => Float::with_val(prec, xf.clone().pow(-alpha)),
    };
    let mut xpow = match kind {
        Kind::Super => Float::with_val(prec, 1.0),
        Kind::Sub => {
            let mut v = step.clone();
            v /= &xf;
            v
        }
    };
    let mut sum = Float::with_val(prec, 0.0);
    let mut max_exp: i64 = i64::MIN;
    let mut small = 0u32;
    let mut terms = 0usize;
    let mut converged = false;
    for k in 1..=cap {
        terms = k;
        // The gamma argument must be formed at working precision: an f64
        // rounding of k/alpha perturbs Gamma by ~1e-13 relative, which the
        // cancellation in the sum amplifies far beyond the final value.
        let garg = match kind {
            Kind::Super => Float::with_val(prec, k as u32) / alpha + 1u32,
            Kind::Sub => Float::with_val(prec, k as u32) * alpha + 1u32,
        };
        let mut amp = garg.gamma();
        amp /= Float::with_val(prec, Float::factorial(k as u32));
        amp *= &xpow;
        let amp_exp = amp.get_exp().map(|e| e as i64).unwrap_or(i64::MIN);
        if amp_exp > max_exp {
            max_exp = amp_exp;
        }
        let angle = Float::with_val(prec, &pi * k as u32) * &phi;
        let mut term = amp * angle.sin();
        if k % 2 == 0 {
            term = -term;
        }
        sum += term;
        xpow *= &step;
        if amp_exp != i64::MIN && amp_exp < max_exp - prec as i64 - 10 {
            small += 1;
            if small >= 2 {
                converged = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    let sum_exp = sum.get_exp().map(|e| e as i64);
    let digits_lost = match sum_exp {
        Some(se) if max_exp > i64::MIN => ((max_exp - se) as f64 * 2f64.ln() / LN_10).max(0.0),
        _ => f64::INFINITY,
    };
    let pi2 = Float::with_val(prec, Constant::Pi);
    MpfrSum { value: sum / pi2, terms, digits_lost, converged }
}

/// Saddle-point bound on log10 of the totally skewed sub-1 density at small
/// argument: ln g(x) ~ -(1-g) g^{g/(1-g)} x^{-g/(1-g)}. The algebraic
/// prefactor is ignored, which is why the flush threshold sits far below
/// the smallest subnormal.
fn sub_skewed_log10_bound(gamma: f64, x: f64) -> f64 {
    let e = gamma / (1.0 - gamma);
    let b = (1.0 - gamma) * gamma.powf(e);
    -b * x.powf(-e) / LN_10
}

fn flush_to_zero(kind: Kind, alpha: f64, eta: f64, x: f64) -> bool {
    match kind {
        Kind::Sub => {
            (eta - alpha).abs() < 1e-9 && sub_skewed_log10_bound(alpha, x) < UNDERFLOW_LOG10
        }
        Kind::Super => {
            // Light right tail of the totally skewed case, bounded through
            // the dual sub-1 form at argument x^{-alpha}.
            (eta - (2.0 - alpha)).abs() < 1e-9
                && x > 1.0
                && alpha < 2.0
                && (-(1.0 + alpha) * x.ln() / LN_10
                    + sub_skewed_log10_bound(1.0 / alpha, x.powf(-alpha)))
                    < UNDERFLOW_LOG10
        }
    }
}

/// Peak of the log-amplitude envelope over k (the envelope is unimodal):
/// an a-priori bound on the cancellation the sum can suffer.
fn peak_ln_amp(kind: Kind, alpha: f64, lnx: f64, cap: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 1..=cap {
        let la = ln_amp(kind, alpha, lnx, k as f64);
        if la > best {
            best = la;
        } else if la < best - 60.0 {
            break;
        }
    }
    best
}

/// Descending expansion of the index > 1 density, summed to its smallest
/// term. The expansion is asymptotic for x -> infinity; the result is
/// accepted only when the truncation term certifies ~13 relative digits.
fn series_asymptotic_f64(alpha: f64, eta: f64, x: f64) -> Option<f64> {
    let phi = phase(Kind::Sub, alpha, eta);
    let lnx = x.ln();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut max_amp = 0.0f64;
    let mut prev_amp = f64::INFINITY;
    // The smallest term sits near k ~ x^{alpha/(alpha-1)}, which reaches
    // tens of thousands close to index 1; f64 summation stays cheap there.
    for k in 1..=60_000usize {
        let kf = k as f64;
        let la = ln_amp(Kind::Sub, alpha, lnx, kf);
        let amp = la.exp();
        if amp >= prev_amp || amp <= 1e-18 * sum.abs() {
            // Smallest term reached (or full convergence within f64).
            if sum != 0.0 && amp <= 1e-13 * sum.abs() && max_amp <= 30.0 * sum.abs() {
                return Some(sum / PI);
            }
            return None;
        }
        prev_amp = amp;
        max_amp = max_amp.max(amp);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * amp * (PI * kf * phi).sin();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    None
}

/// Full evaluation pipeline for one series, unit scale.
fn series_eval(kind: Kind, alpha: f64, eta: f64, x: f64, cap: usize, tol: f64) -> Result<f64> {
    let f64_pass = series_f64(kind, alpha, eta, x, cap, tol);
    if let Some(s) = &f64_pass {
        if s.digits_lost <= 1.5 {
            return Ok(s.value.max(0.0));
        }
    }
    if flush_to_zero(kind, alpha, eta, x) {
        return Ok(0.0);
    }
    // For index > 1 the descending expansion covers the large-argument
    // range where the ascending one cancels catastrophically.
    if matches!(kind, Kind::Super) && x > 1.0 && cap >= RESCUE_CAP {
        if let Some(v) = series_asymptotic_f64(alpha, eta, x) {
            return Ok(v.max(0.0));
        }
    }
    // Bound the cancellation before paying for high-precision passes; when
    // even the maximum precision cannot certify 18 digits, refuse early.
    let worst_digits = match &f64_pass {
        Some(s) if s.digits_lost.is_finite() => s.digits_lost,
        // Envelope peak against the smallest representable magnitude.
        _ => (peak_ln_amp(kind, alpha, x.ln(), cap) + 740.0) / LN_10,
    };
    let mut prec: u32 = (((worst_digits + 25.0) * LN_10 / 2f64.ln()).ceil() as u32).clamp(192, MAX_PREC);
    if (worst_digits + 20.0) * LN_10 / 2f64.ln() > MAX_PREC as f64 {
        return Err(Error::NonConverged(format!(
            "cancellation of ~{worst_digits:.0} digits exceeds the precision budget (x = {x}, alpha = {alpha})"
        )));
    }
    loop {
        let s = series_mpfr(kind, alpha, eta, x, cap, prec);
        if !s.converged {
            return Err(Error::NonConverged(format!(
                "series did not converge within {cap} terms (x = {x}, alpha = {alpha})"
            )));
        }
        let good_digits = prec as f64 * 2f64.ln() / LN_10 - s.digits_lost;
        if good_digits >= 18.0 {
            let v = s.value.to_f64();
            return Ok(v.max(0.0));
        }
        if prec >= MAX_PREC {
            return Err(Error::NonConverged(format!(
                "cancellation of {:.0} digits exceeds the precision budget (x = {x}, alpha = {alpha}, {} terms)",
                s.digits_lost, s.terms
            )));
        }
        let need = ((s.digits_lost + 25.0) * LN_10 / 2f64.ln()).ceil() as u32;
        prec = need.max(prec * 2).min(MAX_PREC);
    }
}

/// Series density at unit scale. For index > 1 this is the convergent
/// ascending expansion, valid for any admissible asymmetry, with negative
/// arguments mapped through p(-x; -eta). For index < 1 only the totally
/// skewed (subordinator) case is exposed; x <= 0 returns 0 there.
pub fn density_series(x: f64, alpha: f64, eta: f64) -> Result<f64> {
    density_series_capped(x, alpha, eta, RESCUE_CAP, DEFAULT_SERIES_TOL)
}

pub fn density_series_capped(x: f64, alpha: f64, eta: f64, cap: usize, tol: f64) -> Result<f64> {
    StableParams::eta(alpha, eta, 1.0)?;
    if alpha == 2.0 {
        // Index 2 admits only eta = 0; closed Gaussian form at scale 2.
        return Ok((-x * x / 4.0).exp() / (2.0 * PI.sqrt()));
    }
    if alpha > 1.0 {
        let (xx, ee) = if x < 0.0 { (-x, -eta) } else { (x, eta) };
        if xx == 0.0 {
            // Single surviving k = 1 term of the expansion.
            let g = ln_gamma(1.0 + 1.0 / alpha).exp();
            return Ok(g * (PI * (eta + alpha) / (2.0 * alpha)).sin() / PI);
        }
        series_eval(Kind::Super, alpha, ee, xx, cap, tol)
    } else {
        if (eta - alpha).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "series for index {alpha} < 1 requires the totally skewed case eta = alpha, got eta = {eta}"
            )));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        // Small-argument cancellation: reroute through the duality map when
        // the f64 pass measures more than 8 digits of loss; the rerouted
        // evaluation shares the precision-escalation backend.
        if let Some(s) = series_f64(Kind::Sub, alpha, eta, x, cap, tol) {
            if s.digits_lost <= 1.5 {
                return Ok(s.value.max(0.0));
            }
            if s.digits_lost > 8.0 {
                let a_sup = 1.0 / alpha;
                let u = x.powf(-alpha);
                let v = series_eval(Kind::Super, a_sup, 2.0 - a_sup, u, cap, tol)?;
                return Ok(x.powf(-alpha * (1.0 + a_sup)) * v);
            }
        }
        series_eval(Kind::Sub, alpha, eta, x, cap, tol)
    }
}

/// Sub-1 density for general admissible asymmetry (internal form used by
/// the duality transform, where the dual asymmetry is usually not skewed).
fn density_sub_general(x: f64, alpha: f64, eta: f64, cap: usize, tol: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain("sub-1 series argument must be > 0".into()));
    }
    series_eval(Kind::Sub, alpha, eta, x, cap, tol)
}

/// Right side of the duality identity: u^{-(1+alpha)} p_{1/alpha}(u^{-alpha})
/// evaluated on the dual (sub-1) law.
pub fn density_dual(u: f64, alpha: f64, eta: f64) -> Result<f64> {
    density_dual_capped(u, alpha, eta, RESCUE_CAP, DEFAULT_SERIES_TOL)
}

pub fn density_dual_capped(u: f64, alpha: f64, eta: f64, cap: usize, tol: f64) -> Result<f64> {
    if u <= 0.0 {
        return Err(Error::Domain(format!("dual evaluation requires u > 0, got {u}")));
    }
    let (a_star, e_star) = dual_params(alpha, eta)?;
    if flush_to_zero(Kind::Super, alpha, eta, u) {
        return Ok(0.0);
    }
    let v = density_sub_general(u.powf(-alpha), a_star, e_star, cap, tol)?;
    Ok(u.powf(-(1.0 + alpha)) * v)
}

/// Fourier inversion of the characteristic function, any parametrization.
pub fn density_quadrature(x: f64, params: &StableParams) -> Result<f64> {
    density_quadrature_with(x, params, &QuadPolicy::with_tol(1e-11))
}

pub fn density_quadrature_with(x: f64, params: &StableParams, policy: &QuadPolicy) -> Result<f64> {
    params.validate()?;
    let p = params.convert(Parametrization::ZolotarevEta)?;
    let (eta, b) = (p.asym(), p.scale());
    let alpha = p.alpha();
    let damp = b * (PI * eta / 2.0).cos();
    // Substitute lam = u^{2/alpha}: the envelope becomes exp(-damp u^2) and
    // the integrand keeps a bounded derivative at the origin for alpha < 1.
    // Truncate where the envelope < 1e-16.
    let po = 2.0 / alpha;
    let u_max = (16.0 * LN_10 / damp).sqrt();
    let f = |u: f64| {
        let lam = u.powf(po);
        let psi = p.characteristic_exponent(lam);
        let im = psi.im - lam * x;
        psi.re.exp() * im.cos() * po * u.powf(po - 1.0)
    };
    let v = integrate(&f, 0.0, u_max, policy)?;
    Ok((v / PI).max(0.0))
}

/// Self-similarity reduction to unit scale: returns the rescaled argument
/// and the rescaled density value given the unit-scale value at it.
pub fn rescale(value_at_unit: f64, x: f64, b: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) {
        return Err(Error::InvalidParams(format!("scale b = {b} must be > 0")));
    }
    let s = b.powf(-1.0 / alpha);
    Ok((s * x, s * value_at_unit))
}

pub fn scaled_arg(x: f64, b: f64, alpha: f64) -> f64 {
    b.powf(-1.0 / alpha) * x
}

/// Density at arbitrary scale via the requested method.
pub fn evaluate(q: &DensityQuery) -> Result<f64> {
    q.validate()?;
    let p = q.params.convert(Parametrization::ZolotarevEta)?;
    let (alpha, eta, b) = (p.alpha(), p.asym(), p.scale());
    match q.method {
        Method::Quadrature => density_quadrature(q.x, &p),
        Method::Series => {
            let s = b.powf(-1.0 / alpha);
            Ok(s * density_series_capped(s * q.x, alpha, eta, q.series_cap, q.tol)?)
        }
        Method::Dual => {
            let s = b.powf(-1.0 / alpha);
            Ok(s * density_dual_capped(s * q.x, alpha, eta, q.series_cap, q.tol)?)
        }
    }
}

/// Tail mass above x > 0 via the termwise-integrated descending expansion.
/// Convergent for index < 1; asymptotic (summed to the smallest term) for
/// index > 1, where x of order 10 already reaches ~1e-13 truncation.
pub fn upper_tail(x: f64, alpha: f64, eta: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain("tail evaluation requires x > 0".into()));
    }
    let phi = (eta + alpha) / 2.0;
    let lnx = x.ln();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut prev_amp = f64::INFINITY;
    for k in 1..=400usize {
        let kf = k as f64;
        let la = ln_gamma(alpha * kf + 1.0) - ln_gamma(kf + 1.0) - alpha * kf * lnx
            - (alpha * kf).ln();
        let amp = la.exp();
        if alpha > 1.0 && amp > prev_amp {
            // Asymptotic regime: stop at the smallest term.
            if amp > 1e-10 {
                return Err(Error::NonConverged(format!(
                    "tail expansion truncation {amp:.2e} too coarse at x = {x}"
                )));
            }
            break;
        }
        prev_amp = amp;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * amp * (PI * kf * phi).sin();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if amp < 1e-17 * sum.abs().max(1e-30) {
            break;
        }
    }
    Ok((sum / PI).max(0.0))
}
