//! Adaptive Simpson quadrature with an evaluation budget.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadPolicy {
    /// Absolute error target for the whole interval.
    pub tol: f64,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        QuadPolicy { tol: 1e-10, max_evals: 4_000_000 }
    }
}

impl QuadPolicy {
    pub fn with_tol(tol: f64) -> Self {
        QuadPolicy { tol, ..Default::default() }
    }
}

struct Ctx<'a> {
    f: &'a dyn Fn(f64) -> f64,
    evals: usize,
    max_evals: usize,
}

impl Ctx<'_> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        if self.evals >= self.max_evals {
            return Err(Error::QuadratureFail(format!(
                "evaluation budget {} exhausted",
                self.max_evals
            )));
        }
        self.evals += 1;
        Ok((self.f)(x))
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    ctx: &mut Ctx,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = ctx.eval(lm)?;
    let frm = ctx.eval(rm)?;
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFail(
            "adaptive refinement depth exhausted".into(),
        ));
    }
    let l = adapt(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adapt(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integrate f over [a, b]. The integrand must return finite values; a NaN
/// anywhere poisons the result, which is reported as a failure.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, policy: &QuadPolicy) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut ctx = Ctx { f, evals: 0, max_evals: policy.max_evals };
    // Seed with a few panels so a narrow feature in a wide flat interval is
    // not missed by the first Simpson estimate.
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = ctx.eval(x0)?;
    for i in 0..panels {
        let x1 = if i == panels - 1 { b } else { a + (i + 1) as f64 * h };
        let xm = 0.5 * (x0 + x1);
        let fm = ctx.eval(xm)?;
        let f1 = ctx.eval(x1)?;
        let whole = simpson(f0, fm, f1, x0, x1);
        total += adapt(
            &mut ctx,
            x0,
            x1,
            f0,
            fm,
            f1,
            whole,
            policy.tol / panels as f64,
            48,
        )?;
        x0 = x1;
        f0 = f1;
    }
    if !total.is_finite() {
        return Err(Error::QuadratureFail("non-finite integrand".into()));
    }
    Ok(total)
}
