use crate::{Error, Result};

/// Bracket and stopping rule for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub max_iter: usize,
}

impl RootSpec {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let spec = RootSpec { bracket: (lo, hi), tol: 1e-10, max_iter: 200 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.bracket;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("root bracket must satisfy a < b, got [{a}, {b}]")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("root tolerance must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// Bisection with secant acceleration.
///
/// A secant step is taken only while it stays strictly inside the bracket and
/// the previous step at least halved the bracket; otherwise the midpoint is
/// used, so convergence is never slower than plain bisection.
pub fn find_root<F: Fn(f64) -> f64>(f: F, spec: &RootSpec) -> Result<f64> {
    spec.validate()?;
    let (mut a, mut b) = spec.bracket;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    // Orient so that f(a) < 0 < f(b); the result does not depend on which end was negative.
    if fa > 0.0 {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut last_width = (b - a).abs();
    for _ in 0..spec.max_iter {
        let width = (b - a).abs();
        if width <= spec.tol {
            return Ok(0.5 * (a + b));
        }
        let mid = 0.5 * (a + b);
        let secant = if fa.is_finite() && fb.is_finite() { b - fb * (b - a) / (fb - fa) } else { f64::NAN };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let use_secant = secant.is_finite() && secant > lo && secant < hi && width <= 0.5 * last_width;
        let x = if use_secant { secant } else { mid };
        last_width = width;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(Error::RootNonConvergence { iterations: spec.max_iter, width });
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    let width = (b - a).abs();
    if width <= spec.tol {
        Ok(0.5 * (a + b))
    } else {
        Err(Error::RootNonConvergence { iterations: spec.max_iter, width })
    }
}
