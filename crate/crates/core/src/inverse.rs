//! Density of the inverse subordinator hitting time, the Mittag-Leffler
//! function, and the Laplace-transform consistency check tying them together.

use crate::density;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadPolicy};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HRoute {
    /// Direct evaluation through the subordinator density and
    /// self-similarity; valid for the full order range (0, 1).
    SelfSimilar,
    /// Through the spectrally negative law of index 1/gamma; requires
    /// gamma >= 1/2 so that the dual index stays <= 2.
    Duality,
}

impl HRoute {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "self-similar" => Ok(HRoute::SelfSimilar),
            "duality" => Ok(HRoute::Duality),
            other => Err(Error::InvalidParams(format!(
                "unknown route `{other}` (expected self-similar|duality)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InverseDensitySpec {
    pub gamma: f64,
    pub b: f64,
    pub t: f64,
    pub route: HRoute,
}

impl InverseDensitySpec {
    pub fn new(gamma: f64, b: f64, t: f64, route: HRoute) -> Result<Self> {
        let s = InverseDensitySpec { gamma, b, t, route };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma = {} outside (0, 1)",
                self.gamma
            )));
        }
        if !(self.b > 0.0) {
            return Err(Error::InvalidParams(format!("b = {} must be > 0", self.b)));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParams(format!("t = {} must be > 0", self.t)));
        }
        if self.route == HRoute::Duality && self.gamma < 0.5 {
            return Err(Error::InvalidParams(format!(
                "duality route requires gamma >= 1/2, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// h(x, t): density at x > 0 of the first passage of the subordinator past
/// level t.
pub fn h_density(x: f64, spec: &InverseDensitySpec) -> Result<f64> {
    spec.validate()?;
    if x <= 0.0 {
        return Err(Error::Domain(format!("h is defined for x > 0, got {x}")));
    }
    let (g, b, t) = (spec.gamma, spec.b, spec.t);
    match spec.route {
        HRoute::SelfSimilar => {
            // h(x,t) = (t/g) x^{-1-1/g} p(t x^{-1/g}; skewed, scale b)
            //        = (t/g) x^{-1-1/g} b^{-1/g} g_unit(b^{-1/g} t x^{-1/g}).
            let arg = b.powf(-1.0 / g) * t * x.powf(-1.0 / g);
            let gval = density::density_series(arg, g, g)?;
            Ok(t / g * x.powf(-1.0 - 1.0 / g) * b.powf(-1.0 / g) * gval)
        }
        HRoute::Duality => {
            if g == 0.5 {
                // Reflection closed form; keeps the most-exercised case
                // free of series noise.
                return Ok(b / (PI * t).sqrt() * (-x * x * b * b / (4.0 * t)).exp());
            }
            let alpha = 1.0 / g;
            // alpha * p_alpha(x; 2 - alpha, b^{-alpha} t) via unit rescale.
            let s = (b.powf(-alpha) * t).powf(-1.0 / alpha);
            let v = density::density_series(s * x, alpha, 2.0 - alpha)?;
            Ok(alpha * s * v)
        }
    }
}

/// Level beyond which h(., t) is treated as zero inside integrals: the
/// saddle-point bound log10 h ~ -(1-g) g^{g/(1-g)} arg^{-g/(1-g)} / ln 10
/// on the underlying subordinator density drops below -22 past this point.
/// h itself stays exact; only quadrature domains are truncated here.
pub fn h_tail_cutoff(spec: &InverseDensitySpec) -> f64 {
    let g = spec.gamma;
    let e = g / (1.0 - g);
    let c = (1.0 - g) * g.powf(e);
    let arg_min = (22.0 * std::f64::consts::LN_10 / c).powf(-(1.0 - g) / g);
    spec.t.powf(g) / (spec.b * arg_min.powf(g))
}

/// Mittag-Leffler function of order beta in (0, 1] on the real line; the
/// ascending series below the cancellation threshold, a non-oscillatory
/// integral representation beyond it.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "Mittag-Leffler order {beta} outside (0, 1]"
        )));
    }
    if beta == 1.0 {
        return Ok(z.exp());
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z > 30.0 {
        return Err(Error::NonConverged(format!(
            "argument {z} outside the supported range (needs z <= 0 or small z > 0)"
        )));
    }
    // For z < 0 the series alternates and cancellation grows with |z| the
    // faster the smaller beta is; bound the loss by the peak term magnitude
    // and fall back to the spectral integral when it exceeds ~5 digits.
    let use_series = if z > 0.0 {
        true
    } else {
        let lnz = z.abs().ln();
        let mut peak = f64::NEG_INFINITY;
        for k in 1..=600 {
            let la = k as f64 * lnz - ln_gamma(1.0 + beta * k as f64);
            if la > peak {
                peak = la;
            } else if la < peak - 5.0 {
                break;
            }
        }
        peak < 12.0
    };
    if use_series {
        let lnz = z.abs().ln();
        let neg = z < 0.0;
        let mut sum = 1.0f64; // k = 0
        let mut comp = 0.0f64;
        let mut small = 0u32;
        for k in 1..=600usize {
            let kf = k as f64;
            let mag = (kf * lnz - ln_gamma(1.0 + beta * kf)).exp();
            let term = if neg && k % 2 == 1 { -mag } else { mag };
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if mag < 1e-17 * sum.abs().max(f64::MIN_POSITIVE) {
                small += 1;
                if small >= 2 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        return Err(Error::NonConverged(format!(
            "Mittag-Leffler series stalled at beta = {beta}, z = {z}"
        )));
    }
    ml_negative_integral(beta, -z)
}

/// E_beta(-x) for x > 0 via the spectral-density integral
///   E_beta(-x) = (x sin(pi beta)/pi) int_0^inf e^{-r} r^{beta-1}
///                / (r^{2 beta} + 2 r^beta x cos(pi beta) + x^2) dr,
/// after w = r^beta, which absorbs the endpoint singularity exactly:
///   = (x sin(pi beta)/(pi beta)) int_0^inf e^{-w^{1/beta}}
///     / (w^2 + 2 w x cos(pi beta) + x^2) dw.
fn ml_negative_integral(beta: f64, x: f64) -> Result<f64> {
    let cpb = (PI * beta).cos();
    let spb = (PI * beta).sin();
    let f = |v: f64| {
        if v >= 1.0 {
            return 0.0;
        }
        let w = v / (1.0 - v);
        let num = (-w.powf(1.0 / beta)).exp();
        let den = w * w + 2.0 * w * x * cpb + x * x;
        num / den / ((1.0 - v) * (1.0 - v))
    };
    let integral = integrate(&f, 0.0, 1.0, &QuadPolicy::with_tol(1e-13))?;
    Ok(x * spb / (PI * beta) * integral)
}

/// Both sides of the Laplace identity for h: the x-transform of h(., t)
/// against the Mittag-Leffler value it must equal.
pub fn laplace_check(spec: &InverseDensitySpec, z: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    if z < 0.0 {
        return Err(Error::Domain(format!("transform variable z = {z} must be >= 0")));
    }
    let x_cut = h_tail_cutoff(spec);
    let f = |v: f64| {
        if v <= 0.0 || v >= 1.0 {
            return 0.0;
        }
        let x = v / (1.0 - v);
        if x > x_cut {
            return 0.0;
        }
        match h_density(x, spec) {
            Ok(h) => (-z * x).exp() * h / ((1.0 - v) * (1.0 - v)),
            Err(_) => f64::NAN,
        }
    };
    let lhs = integrate(&f, 0.0, 1.0, &QuadPolicy::with_tol(1e-9))?;
    if !lhs.is_finite() {
        return Err(Error::QuadratureFail(
            "h evaluation failed inside the transform integral".into(),
        ));
    }
    let rhs = mittag_leffler(spec.gamma, -z * spec.t.powf(spec.gamma) / spec.b)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn spec(gamma: f64, b: f64, t: f64, route: HRoute) -> InverseDensitySpec {
        InverseDensitySpec::new(gamma, b, t, route).unwrap()
    }

    #[test]
    fn half_order_reflection_values() {
        let s = spec(0.5, 1.0, 1.0, HRoute::SelfSimilar);
        let v = h_density(1.0, &s).unwrap();
        assert!((v - 0.4393912894677224).abs() < 1e-12, "{v}");
        // Boundary value 1/sqrt(pi) from the right.
        let v0 = h_density(1e-8, &s).unwrap();
        assert!((v0 - 0.5641895835477563).abs() < 1e-6, "{v0}");
        // Both routes against the closed form.
        let sd = spec(0.5, 1.0, 1.0, HRoute::Duality);
        for x in [0.2, 0.7, 1.5, 2.5] {
            let a = h_density(x, &s).unwrap();
            let b = h_density(x, &sd).unwrap();
            let want = (-x * x / 4.0f64).exp() / PI.sqrt();
            assert!((a - want).abs() < 1e-12, "x={x}: {a} vs {want}");
            assert!((b - want).abs() < 1e-14);
        }
    }

    #[test]
    fn route_agreement() {
        for gamma in [0.6, 0.75, 0.8, 0.9] {
            let ss = spec(gamma, 1.0, 1.0, HRoute::SelfSimilar);
            let du = spec(gamma, 1.0, 1.0, HRoute::Duality);
            for x in [0.2, 0.5, 1.0, 1.5] {
                let a = h_density(x, &ss).unwrap();
                let b = h_density(x, &du).unwrap();
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1e-300),
                    "gamma={gamma} x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn duality_route_rejects_low_order() {
        assert!(InverseDensitySpec::new(0.4, 1.0, 1.0, HRoute::Duality).is_err());
        assert!(InverseDensitySpec::new(0.4, 1.0, 1.0, HRoute::SelfSimilar).is_ok());
    }

    #[test]
    fn h_self_similarity() {
        // h(c^g x, c t) c^g = h(x, t).
        for gamma in [0.6, 0.9] {
            let base = spec(gamma, 1.0, 1.0, HRoute::SelfSimilar);
            for c in [0.5, 2.0, 4.0] {
                let scaled = spec(gamma, 1.0, c, HRoute::SelfSimilar);
                for x in [0.4, 1.0, 1.7] {
                    let lhs = h_density(c_powg(c, gamma) * x, &scaled).unwrap()
                        * c_powg(c, gamma);
                    let rhs = h_density(x, &base).unwrap();
                    assert!(
                        (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300),
                        "gamma={gamma} c={c} x={x}"
                    );
                }
            }
        }
    }

    fn c_powg(c: f64, g: f64) -> f64 {
        c.powf(g)
    }

    #[test]
    fn h_normalization_and_mean() {
        for gamma in [0.5, 0.6, 0.75, 0.9] {
            for t in [0.5, 1.0, 2.0] {
                let s = spec(gamma, 1.0, t, HRoute::SelfSimilar);
                let (mass, _) = laplace_check(&s, 0.0).unwrap();
                assert!((mass - 1.0).abs() < 1e-6, "gamma={gamma} t={t}: {mass}");
                let x_cut = h_tail_cutoff(&s);
                let mean = integrate(
                    &|v: f64| {
                        if v <= 0.0 || v >= 1.0 {
                            return 0.0;
                        }
                        let x = v / (1.0 - v);
                        if x > x_cut {
                            return 0.0;
                        }
                        x * h_density(x, &s).unwrap_or(f64::NAN) / ((1.0 - v) * (1.0 - v))
                    },
                    0.0,
                    1.0,
                    &QuadPolicy::with_tol(1e-9),
                )
                .unwrap();
                let want = t.powf(gamma) / ln_gamma(1.0 + gamma).exp();
                assert!(
                    (mean - want).abs() < 1e-6,
                    "gamma={gamma} t={t}: mean {mean} vs {want}"
                );
            }
        }
    }

    #[test]
    fn ml_anchors() {
        assert_eq!(mittag_leffler(0.7, 0.0).unwrap(), 1.0);
        assert!((mittag_leffler(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        // E_{1/2}(-x) = e^{x^2} erfc(x).
        for x in [0.3, 1.0, 2.0, 3.0, 6.0, 15.0] {
            let v = mittag_leffler(0.5, -x).unwrap();
            let want = (x * x).exp() * erfc(x);
            assert!(
                (v - want).abs() < 1e-10 * want.max(1e-10),
                "x={x}: {v} vs {want}"
            );
        }
        let v = mittag_leffler(0.5, -1.0).unwrap();
        assert!((v - 0.42758357615580706).abs() < 1e-10);
    }

    #[test]
    fn ml_monotone_on_negative_axis() {
        for beta in [0.3, 0.5, 0.75, 0.95] {
            let mut prev = 1.0;
            for i in 1..40 {
                let z = -0.4 * i as f64;
                let v = mittag_leffler(beta, z).unwrap();
                assert!(v < prev && v > 0.0, "beta={beta} z={z}: {v} !< {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn laplace_identity() {
        let s = spec(0.5, 1.0, 1.0, HRoute::SelfSimilar);
        let (lhs, rhs) = laplace_check(&s, 1.0).unwrap();
        assert!((lhs - 0.4275835761558070).abs() < 1e-7, "{lhs}");
        assert!((lhs - rhs).abs() < 1e-6);
        let s = spec(0.75, 1.0, 1.0, HRoute::SelfSimilar);
        let (lhs, rhs) = laplace_check(&s, 0.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}
