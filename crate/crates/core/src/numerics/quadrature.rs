use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of equal panels the adaptive rule starts from.
const INITIAL_PANELS: usize = 8;

/// Splits every panel takes before its error estimate is trusted; guards
/// against coarse and refined Simpson sums agreeing by accident on sharp fronts.
const FORCED_SPLITS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    #[default]
    AdaptiveSimpson,
    /// Midpoint Riemann sum with `fallback_panels` panels. First order in
    /// practice for the kinked integrands used here, so it is a cross-check only.
    Riemann,
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub fallback_panels: usize,
    #[serde(default)]
    pub method: QuadratureMethod,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_depth: 50,
            fallback_panels: 4096,
            method: QuadratureMethod::AdaptiveSimpson,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32, fallback_panels: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol,
            rel_tol,
            max_depth,
            fallback_panels,
            method: QuadratureMethod::AdaptiveSimpson,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default spec with the two tolerances overridden.
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let d = Self::default();
        Self::new(abs_tol, rel_tol, d.max_depth, d.fallback_panels)
    }

    pub fn riemann(panels: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            fallback_panels: panels,
            method: QuadratureMethod::Riemann,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_depth < 1 {
            return Err(Error::invalid("max_depth must be >= 1"));
        }
        if self.fallback_panels < 64 {
            return Err(Error::invalid(format!(
                "fallback_panels must be >= 64, got {}",
                self.fallback_panels
            )));
        }
        Ok(())
    }
}

/// Result of a quadrature with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Integrate `f` over `[a, b]`. Reversed limits flip the sign; `a == b` gives 0.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_detailed(f, a, b, spec).map(|q| q.value)
}

pub fn integrate_detailed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Quadrature> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    if a > b {
        let q = integrate_detailed(f, b, a, spec)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    match spec.method {
        QuadratureMethod::AdaptiveSimpson => adaptive_simpson(&f, a, b, spec),
        QuadratureMethod::Riemann => {
            let value = integrate_riemann(&f, a, b, spec.fallback_panels);
            if !value.is_finite() {
                return Err(Error::QuadratureNonConvergence { estimate: value, error_bound: f64::INFINITY });
            }
            Ok(Quadrature { value, error_estimate: f64::NAN, evaluations: spec.fallback_panels })
        }
    }
}

/// Midpoint Riemann sum. Never evaluates the endpoints.
pub fn integrate_riemann<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b || panels == 0 {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..panels {
        let y = f(a + (i as f64 + 0.5) * h) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * h
}

struct State {
    error: f64,
    evaluations: usize,
    exhausted: bool,
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64, st: &mut State) -> Result<f64> {
    st.evaluations += 1;
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureNonConvergence { estimate: f64::NAN, error_bound: f64::INFINITY })
    }
}

/// Endpoint values may be removable singularities; nudge inward (open rule).
fn eval_endpoint<F: Fn(f64) -> f64>(f: &F, x: f64, toward: f64, st: &mut State) -> Result<f64> {
    st.evaluations += 1;
    let v = f(x);
    if v.is_finite() {
        return Ok(v);
    }
    for frac in [1e-12, 1e-9, 1e-6] {
        st.evaluations += 1;
        let v = f(x + (toward - x) * frac);
        if v.is_finite() {
            return Ok(v);
        }
    }
    Err(Error::QuadratureNonConvergence { estimate: f64::NAN, error_bound: f64::INFINITY })
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    let mut st = State { error: 0.0, evaluations: 0, exhausted: false };
    let n = INITIAL_PANELS;
    let h = (b - a) / n as f64;
    let xs: Vec<f64> = (0..=2 * n).map(|i| if i == 2 * n { b } else { a + 0.5 * h * i as f64 }).collect();
    let mut fs = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let v = if i == 0 {
            eval_endpoint(f, x, b, &mut st)?
        } else if i == xs.len() - 1 {
            eval_endpoint(f, x, a, &mut st)?
        } else {
            eval(f, x, &mut st)?
        };
        fs.push(v);
    }
    let wholes: Vec<f64> = (0..n)
        .map(|k| h / 6.0 * (fs[2 * k] + 4.0 * fs[2 * k + 1] + fs[2 * k + 2]))
        .collect();
    let rough: f64 = wholes.iter().sum();
    let target = spec.abs_tol.max(spec.rel_tol * rough.abs());
    let panel_tol = target / n as f64;

    let mut total = 0.0;
    let mut comp = 0.0;
    for k in 0..n {
        let part = refine(
            f,
            xs[2 * k],
            fs[2 * k],
            xs[2 * k + 1],
            fs[2 * k + 1],
            xs[2 * k + 2],
            fs[2 * k + 2],
            wholes[k],
            panel_tol,
            spec.max_depth,
            FORCED_SPLITS,
            &mut st,
        )?;
        let y = part - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    if st.exhausted {
        return Err(Error::QuadratureNonConvergence { estimate: total, error_bound: st.error });
    }
    Ok(Quadrature { value: total, error_estimate: st.error, evaluations: st.evaluations })
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    forced: u32,
    st: &mut State,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm, st)?;
    let frm = eval(f, rm, st)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    let unsplittable = lm <= a || lm >= m || rm <= m || rm >= b;
    let converged = forced == 0 && (delta.abs() <= 15.0 * tol || delta.abs() <= roundoff);
    if converged || unsplittable {
        st.error += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth <= 1 {
        st.exhausted = true;
        st.error += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    let next = forced.saturating_sub(1);
    let l = refine(f, a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1, next, st)?;
    let r = refine(f, m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1, next, st)?;
    Ok(l + r)
}
