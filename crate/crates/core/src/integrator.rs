//! Fixed-step classical Runge-Kutta integration.
//!
//! Determinism matters more than adaptivity here: sigma-point propagation
//! and ensemble members must reproduce bit-identically from their inputs,
//! and the population dynamics are not stiff at yearly scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{as_f64, is_finite, lit, Real};

/// Fixed-step integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct IntegratorConfig<T> {
    /// Substep size, years.
    pub dt_sub: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self { dt_sub: lit(0.1) }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.dt_sub <= T::zero() {
            return Err(Error::Config("dt_sub must be > 0".into()));
        }
        Ok(())
    }
}

fn check_finite<T: Real>(values: &[T], t: T) -> Result<()> {
    if let Some(index) = values.iter().position(|&v| !is_finite(v)) {
        return Err(Error::NonFinite {
            t: as_f64(t),
            index,
        });
    }
    Ok(())
}

/// One classical fourth-order Runge-Kutta step.
///
/// `f(x, t)` returns the state derivative. Fails if any stage derivative
/// or the updated state contains a non-finite entry.
pub fn rk4_step<T, F>(f: &F, x: &[T], t: T, dt: T) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T], T) -> Result<Vec<T>>,
{
    let n = x.len();
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let sixth = lit::<T>(1.0 / 6.0);

    let k1 = f(x, t)?;
    check_finite(&k1, t)?;

    let mid1: Vec<T> = (0..n).map(|i| x[i] + half * dt * k1[i]).collect();
    let k2 = f(&mid1, t + half * dt)?;
    check_finite(&k2, t)?;

    let mid2: Vec<T> = (0..n).map(|i| x[i] + half * dt * k2[i]).collect();
    let k3 = f(&mid2, t + half * dt)?;
    check_finite(&k3, t)?;

    let end: Vec<T> = (0..n).map(|i| x[i] + dt * k3[i]).collect();
    let k4 = f(&end, t + dt)?;
    check_finite(&k4, t)?;

    let next: Vec<T> = (0..n)
        .map(|i| x[i] + dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect();
    check_finite(&next, t)?;
    Ok(next)
}

/// Integrates from `t0` to `t1` in substeps of `dt_sub`, with a final
/// partial step sized to land exactly on `t1`.
///
/// Substep times are computed as `t0 + k·dt_sub` rather than accumulated,
/// so splitting an interval at an exact substep boundary reproduces the
/// unsplit result bit for bit.
pub fn propagate_interval<T, F>(
    f: &F,
    x: &[T],
    t0: T,
    t1: T,
    config: &IntegratorConfig<T>,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T], T) -> Result<Vec<T>>,
{
    config.validate()?;
    if t1 < t0 {
        return Err(Error::Config(format!(
            "propagation interval runs backwards: t0={} > t1={}",
            as_f64(t0),
            as_f64(t1)
        )));
    }
    let span = t1 - t0;
    let n_full = (span / config.dt_sub).floor();
    let n_full_steps = n_full.to_usize().ok_or_else(|| {
        Error::Config(format!(
            "interval {}..{} spans too many substeps",
            as_f64(t0),
            as_f64(t1)
        ))
    })?;

    let mut state = x.to_vec();
    for k in 0..n_full_steps {
        let t = t0 + lit::<T>(k as f64) * config.dt_sub;
        state = rk4_step(f, &state, t, config.dt_sub)?;
    }
    let t_last = t0 + lit::<T>(n_full_steps as f64) * config.dt_sub;
    let dt_last = t1 - t_last;
    if dt_last > T::zero() {
        state = rk4_step(f, &state, t_last, dt_last)?;
    }
    Ok(state)
}
