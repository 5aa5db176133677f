use crate::{Error, Result};

/// Sampled solution of an ODE system, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One classical fourth-order Runge-Kutta step of size `h` (negative `h` steps backward).
pub fn rk4_step<F>(rhs: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let check = |v: Vec<f64>, at: f64| -> Result<Vec<f64>> {
        if v.len() != y.len() {
            return Err(Error::invalid(format!(
                "rhs returned {} components for a {}-dimensional state",
                v.len(),
                y.len()
            )));
        }
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFiniteRhs { at })
        }
    };
    let axpy = |k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(yi, ki)| yi + s * ki).collect() };

    let k1 = check(rhs(t, y), t)?;
    let k2 = check(rhs(t + 0.5 * h, &axpy(&k1, 0.5 * h)), t + 0.5 * h)?;
    let k3 = check(rhs(t + 0.5 * h, &axpy(&k2, 0.5 * h)), t + 0.5 * h)?;
    let k4 = check(rhs(t + h, &axpy(&k3, h)), t + h)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Fixed-step RK4 from `from` to `to` (either direction) in `steps` steps.
pub fn integrate_ode<F>(rhs: F, from: f64, to: f64, initial: &[f64], steps: usize) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if steps < 16 {
        return Err(Error::invalid(format!("integrate_ode needs at least 16 steps, got {steps}")));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::invalid("integration endpoints must be finite"));
    }
    let h = (to - from) / steps as f64;
    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    t.push(from);
    states.push(initial.to_vec());
    for i in 0..steps {
        let ti = from + h * i as f64;
        let next = rk4_step(&rhs, ti, &states[i], h)?;
        t.push(if i + 1 == steps { to } else { from + h * (i + 1) as f64 });
        states.push(next);
    }
    Ok(Trajectory { t, states })
}
