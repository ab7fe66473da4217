//! Stable-law parameters in four interchangeable parametrizations.
//!
//! The asymmetry of a stable law shows up in the literature as θ, η, β or q
//! depending on which integral formula defines the density; all four are in
//! use here. Conversions route through the η form, which is the one the
//! duality transform is stated in. The index α = 1 is excluded throughout.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Relative tolerance for parameter equality checks, with an absolute floor
/// so that scale parameters spanning many orders of magnitude compare sanely.
pub const PARAM_REL_TOL: f64 = 1e-12;
pub const PARAM_ABS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parametrization {
    /// θ/c form: exponent -c|λ|^α [1 + iθ sgn(λ) tan(πα/2)].
    LukacsTheta,
    /// η/b form: exponent -b|λ|^α exp(-iπη/2 · sgn(λ)).
    ZolotarevEta,
    /// β/σ form: exponent -σ^α|λ|^α [1 - iβ sgn(λ) tan(πα/2)].
    SamorodnitskyTaqqu,
    /// q/a form: exponent qa(iλ)^α + (1-q)a(-iλ)^α.
    FellerQ,
}

impl Parametrization {
    pub fn name(self) -> &'static str {
        match self {
            Parametrization::LukacsTheta => "theta",
            Parametrization::ZolotarevEta => "eta",
            Parametrization::SamorodnitskyTaqqu => "beta",
            Parametrization::FellerQ => "q",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Parametrization::LukacsTheta),
            "eta" => Ok(Parametrization::ZolotarevEta),
            "beta" => Ok(Parametrization::SamorodnitskyTaqqu),
            "q" => Ok(Parametrization::FellerQ),
            other => Err(Error::InvalidParams(format!(
                "unknown parametrization `{other}` (expected theta|eta|beta|q)"
            ))),
        }
    }
}

/// A stable law: index, asymmetry and scale under one of the four tags.
/// Immutable once constructed; construction validates all range rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    tag: Parametrization,
    alpha: f64,
    asym: f64,
    scale: f64,
}

/// Range check shared by the constructor and `validate`. Returns the first
/// violated constraint by name, or `Ok(())`.
pub fn check(tag: Parametrization, alpha: f64, asym: f64, scale: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 2.0 {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} outside (0, 2]"
        )));
    }
    if alpha == 1.0 {
        return Err(Error::InvalidParams("alpha = 1 is not supported".into()));
    }
    if !asym.is_finite() || !scale.is_finite() {
        return Err(Error::InvalidParams("non-finite asymmetry or scale".into()));
    }
    match tag {
        Parametrization::LukacsTheta => {
            if asym.abs() > 1.0 {
                return Err(Error::InvalidParams(format!("|theta| = {} > 1", asym.abs())));
            }
            if scale <= 0.0 {
                return Err(Error::InvalidParams(format!("c = {scale} must be > 0")));
            }
        }
        Parametrization::ZolotarevEta => {
            let bound = if alpha < 1.0 { alpha } else { 2.0 - alpha };
            if asym.abs() > bound + 1e-15 {
                return Err(Error::InvalidParams(format!(
                    "|eta| = {} > {bound} (admissible bound for alpha = {alpha})",
                    asym.abs()
                )));
            }
            if scale <= 0.0 {
                return Err(Error::InvalidParams(format!("b = {scale} must be > 0")));
            }
        }
        Parametrization::SamorodnitskyTaqqu => {
            if asym.abs() > 1.0 {
                return Err(Error::InvalidParams(format!("|beta| = {} > 1", asym.abs())));
            }
            if scale <= 0.0 {
                return Err(Error::InvalidParams(format!("sigma = {scale} must be > 0")));
            }
        }
        Parametrization::FellerQ => {
            if !(0.0..=1.0).contains(&asym) {
                return Err(Error::InvalidParams(format!("q = {asym} outside [0, 1]")));
            }
            if alpha > 1.0 && scale <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "a = {scale} must be > 0 for 1 < alpha <= 2"
                )));
            }
            if alpha < 1.0 && scale >= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "a = {scale} must be < 0 for 0 < alpha < 1"
                )));
            }
        }
    }
    Ok(())
}

impl StableParams {
    pub fn new(tag: Parametrization, alpha: f64, asym: f64, scale: f64) -> Result<Self> {
        check(tag, alpha, asym, scale)?;
        Ok(StableParams { tag, alpha, asym, scale })
    }

    /// η-form shorthand.
    pub fn eta(alpha: f64, eta: f64, b: f64) -> Result<Self> {
        Self::new(Parametrization::ZolotarevEta, alpha, eta, b)
    }

    pub fn tag(&self) -> Parametrization {
        self.tag
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn asym(&self) -> f64 {
        self.asym
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn validate(&self) -> Result<()> {
        check(self.tag, self.alpha, self.asym, self.scale)
    }

    /// (η, b) of the same law. All conversions route through this form.
    pub fn as_eta(&self) -> (f64, f64) {
        let a = self.alpha;
        match self.tag {
            Parametrization::ZolotarevEta => (self.asym, self.scale),
            Parametrization::LukacsTheta => theta_to_eta(a, self.asym, self.scale),
            Parametrization::SamorodnitskyTaqqu => {
                // beta = -theta, c = sigma^alpha
                theta_to_eta(a, -self.asym, self.scale.powf(a))
            }
            Parametrization::FellerQ => {
                // beta = 1 - 2q, sigma^alpha = -a cos(pi alpha / 2)
                let beta = 1.0 - 2.0 * self.asym;
                let c = -self.scale * cos_half_pi(a);
                theta_to_eta(a, -beta, c)
            }
        }
    }

    pub fn convert(&self, target: Parametrization) -> Result<StableParams> {
        self.validate()?;
        let a = self.alpha;
        let (eta, b) = self.as_eta();
        let (asym, scale) = match target {
            Parametrization::ZolotarevEta => (eta, b),
            Parametrization::LukacsTheta => {
                let (theta, c) = eta_to_theta(a, eta, b);
                (theta, c)
            }
            Parametrization::SamorodnitskyTaqqu => {
                let (theta, c) = eta_to_theta(a, eta, b);
                (-theta, c.powf(1.0 / a))
            }
            Parametrization::FellerQ => {
                let (theta, c) = eta_to_theta(a, eta, b);
                let beta = -theta;
                ((1.0 - beta) / 2.0, -c / cos_half_pi(a))
            }
        };
        StableParams::new(target, a, asym, scale)
    }

    /// Characteristic exponent ψ(λ) of the tag's integral formula, so that
    /// the characteristic function is exp(ψ(λ)).
    pub fn characteristic_exponent(&self, lambda: f64) -> Complex64 {
        let a = self.alpha;
        let mag = lambda.abs().powf(a);
        let sgn = if lambda >= 0.0 { 1.0 } else { -1.0 };
        match self.tag {
            Parametrization::LukacsTheta => {
                Complex64::new(-self.scale * mag, -self.scale * mag * self.asym * sgn * tan_half_pi(a))
            }
            Parametrization::ZolotarevEta => {
                let phi = -PI * self.asym / 2.0 * sgn;
                -self.scale * mag * Complex64::new(phi.cos(), phi.sin())
            }
            Parametrization::SamorodnitskyTaqqu => {
                let c = self.scale.powf(a);
                Complex64::new(-c * mag, c * mag * self.asym * sgn * tan_half_pi(a))
            }
            Parametrization::FellerQ => {
                // (±iλ)^α = |λ|^α exp(±iαπ/2 sgn λ)
                let q = self.asym;
                let plus = Complex64::from_polar(mag, PI * a / 2.0 * sgn);
                let minus = Complex64::from_polar(mag, -PI * a / 2.0 * sgn);
                self.scale * (q * plus + (1.0 - q) * minus)
            }
        }
    }
}

// tan(πα/2) with the exact zero at α = 2 (the generic evaluation returns
// a stray -2.4e-16 there, which poisons roundtrips through cot).
fn tan_half_pi(alpha: f64) -> f64 {
    if alpha == 2.0 {
        0.0
    } else {
        (PI * alpha / 2.0).tan()
    }
}

fn cos_half_pi(alpha: f64) -> f64 {
    if alpha == 2.0 {
        -1.0
    } else {
        (PI * alpha / 2.0).cos()
    }
}

fn theta_to_eta(alpha: f64, theta: f64, c: f64) -> (f64, f64) {
    if alpha == 2.0 {
        return (0.0, c);
    }
    let eta = 2.0 / PI * (-theta * tan_half_pi(alpha)).atan();
    let b = c / (PI * eta / 2.0).cos();
    (eta, b)
}

fn eta_to_theta(alpha: f64, eta: f64, b: f64) -> (f64, f64) {
    let c = b * (PI * eta / 2.0).cos();
    if alpha == 2.0 {
        return (0.0, c);
    }
    let theta = -1.0 / tan_half_pi(alpha) * (PI * eta / 2.0).tan();
    // Guard round-off at the totally skewed corners.
    (theta.clamp(-1.0, 1.0), c)
}

/// Zolotarev dual of an index-α law: α* = 1/α and η* = (η - 1)/α + 1.
pub fn dual_params(alpha: f64, eta: f64) -> Result<(f64, f64)> {
    if !(1.0 < alpha && alpha <= 2.0) {
        return Err(Error::Domain(format!(
            "dual_params requires 1 < alpha <= 2, got {alpha}"
        )));
    }
    if eta.abs() > 2.0 - alpha + 1e-15 {
        return Err(Error::Domain(format!(
            "|eta| = {} > 2 - alpha = {}",
            eta.abs(),
            2.0 - alpha
        )));
    }
    Ok((1.0 / alpha, (eta - 1.0) / alpha + 1.0))
}

/// Relative comparison with the module's tolerance policy.
pub fn approx_eq(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= PARAM_ABS_FLOOR || diff <= PARAM_REL_TOL * a.abs().max(b.abs())
}
