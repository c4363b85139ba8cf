//! Scaled unscented Kalman filter over the augmented population state.
//!
//! One filter cycle:
//!
//! 1. sigma points `χ = [x̂, x̂ ± cols of chol((n+λ)P)]`,
//! 2. predict: propagate every point one step through the augmented
//!    dynamics, re-form mean and covariance with the sigma weights, add
//!    the (fixed, diagonal) process noise `Q`,
//! 3. update: map the propagated points through the linear S/D/N
//!    selection, form `P_yy` (plus the floored measurement covariance
//!    `R`) and `P_xy`, take the Kalman gain from a linear solve against
//!    `P_yy`, and apply the standard mean/covariance update,
//! 4. condition: symmetrize, clamp negative eigenvalues to zero, floor
//!    the S/D/N diagonal.
//!
//! With the default spread `a = 0.25` the center covariance weight is
//! negative, so intermediate covariances can be indefinite; step 4 is
//! what keeps the filter entirely in real arithmetic — there is no
//! complex number anywhere in this module by construction.
//!
//! The φ entries of the state are stored in filter units of `phi_scale`
//! (1e-8 by default) so their magnitudes are comparable with the object
//! counts; the trace converts back to physical units.

pub mod io;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::SsemDynamics;
use crate::ensemble::MomentRecord;
use crate::error::{Error, Result};
use crate::integrator::{propagate_interval, IntegratorConfig};
use crate::linalg::{cholesky_lower_psd, clamp_psd, symmetrize};
use crate::scalar::{as_f64, is_finite, lit, Real};
use crate::state::AugmentedState;

/// Filter tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct UkfConfig<T> {
    /// Sigma-point spread parameter `a`, in (0, 1].
    pub a: T,
    /// Secondary scaling parameter κ.
    pub kappa: T,
    /// Prior-knowledge parameter β (2 is optimal for Gaussians).
    pub beta: T,
    /// Process noise as a fraction of the initial state estimate.
    pub q_scale: T,
    /// Initial covariance as a fraction of the initial state estimate.
    pub p0_scale: T,
    /// Minimum measurement variance, objects².
    pub r_floor: T,
    /// Minimum estimate variance for the S/D/N block, objects².
    pub p_floor: T,
    /// Filter step (= measurement cadence), years.
    pub step: T,
    /// Run length, years.
    pub horizon: T,
    /// Filter-unit scale of the φ states; 1.0 stores them unscaled.
    pub phi_scale: T,
    /// Absolute floor for the Q and P₀ diagonal on φ entries, in filter
    /// units; without it a zero φ entry would freeze permanently.
    pub phi_noise_floor: T,
    /// Fraction of trailing steps averaged into the steady-state φ̄.
    pub steady_state_fraction: T,
    /// Diagnostic switch: zero the Kalman-gain rows of the φ states, so
    /// measurements can never move the collision parameters.
    pub phi_frozen: bool,
}

impl<T: Real> Default for UkfConfig<T> {
    fn default() -> Self {
        Self {
            a: lit(0.25),
            kappa: T::zero(),
            beta: lit(2.0),
            q_scale: lit(0.05),
            p0_scale: lit(0.10),
            r_floor: T::one(),
            p_floor: lit(0.1),
            step: T::one(),
            horizon: lit(40.0),
            phi_scale: lit(1e-8),
            phi_noise_floor: lit(1e-12),
            steady_state_fraction: lit(0.5),
            phi_frozen: false,
        }
    }
}

impl<T: Real> UkfConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.a <= T::zero() || self.a > T::one() {
            return Err(Error::Config("spread parameter a must lie in (0, 1]".into()));
        }
        if self.r_floor <= T::zero() || self.p_floor <= T::zero() {
            return Err(Error::Config("r_floor and p_floor must be > 0".into()));
        }
        if self.step <= T::zero() || self.horizon <= T::zero() {
            return Err(Error::Config("step and horizon must be > 0".into()));
        }
        if self.phi_scale <= T::zero() {
            return Err(Error::Config("phi_scale must be > 0".into()));
        }
        if self.steady_state_fraction <= T::zero() || self.steady_state_fraction > T::one() {
            return Err(Error::Config(
                "steady_state_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (as_f64(self.horizon) / as_f64(self.step)).round().max(1.0) as usize
    }
}

/// Sigma-point weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UkfWeights<T> {
    pub mean: Vec<T>,
    pub cov: Vec<T>,
    pub lambda: T,
}

impl<T: Real> UkfWeights<T> {
    pub fn n_points(&self) -> usize {
        self.mean.len()
    }
}

/// Weights for `n_states` dimensions:
/// `λ = a²(n+κ) − n`, `W_m0 = λ/(n+λ)`, `W_c0 = W_m0 + (1 − a² + β)`,
/// `W_mi = W_ci = 1/(2(n+λ))` for the 2n symmetric points.
pub fn weights<T: Real>(n_states: usize, config: &UkfConfig<T>) -> Result<UkfWeights<T>> {
    config.validate()?;
    if n_states < 1 {
        return Err(Error::Config("n_states must be >= 1".into()));
    }
    let n = lit::<T>(n_states as f64);
    let lambda = config.a * config.a * (n + config.kappa) - n;
    let n_lambda = n + lambda;
    if n_lambda <= T::zero() {
        return Err(Error::Config(format!(
            "n_states + lambda = {} must be positive",
            as_f64(n_lambda)
        )));
    }
    let count = 2 * n_states + 1;
    let w_tail = T::one() / (lit::<T>(2.0) * n_lambda);
    let mut mean = vec![w_tail; count];
    let mut cov = vec![w_tail; count];
    mean[0] = lambda / n_lambda;
    cov[0] = mean[0] + (T::one() - config.a * config.a + config.beta);
    Ok(UkfWeights { mean, cov, lambda })
}

/// The 2n+1 sigma points of `(x̂, P)`:
/// `[x̂, x̂ + cols of L, x̂ − cols of L]` with `L Lᵀ = (n+λ)P`.
///
/// `P` must already be conditioned; a factorization failure reports the
/// offending leading minor.
pub fn sigma_points<T: Real>(
    x: &DVector<T>,
    p: &DMatrix<T>,
    lambda: T,
) -> Result<Vec<DVector<T>>> {
    let n = x.len();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Shape {
            what: "covariance for sigma points",
            expected: n,
            got: p.nrows(),
        });
    }
    let scale = lit::<T>(n as f64) + lambda;
    let l = cholesky_lower_psd(&(p * scale))?;
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(x.clone());
    for j in 0..n {
        points.push(x + l.column(j));
    }
    for j in 0..n {
        points.push(x - l.column(j));
    }
    Ok(points)
}

/// State propagation over one filter step.
pub trait ProcessModel<T: Real> {
    fn propagate(&self, x: &DVector<T>, t0: T, t1: T) -> Result<DVector<T>>;
}

/// Measurement extraction from the state.
pub trait MeasurementModel<T: Real> {
    fn dim(&self) -> usize;
    fn measure(&self, x: &DVector<T>) -> DVector<T>;
}

/// Filter mean/covariance at one time.
#[derive(Debug, Clone)]
pub struct FilterState<T> {
    pub x: DVector<T>,
    pub p: DMatrix<T>,
    pub t: T,
}

/// Sigma-point predict: propagates the points of `state` to
/// `state.t + step` and re-forms mean and covariance (plus `Q`).
pub fn predict<T: Real, P: ProcessModel<T>>(
    state: &FilterState<T>,
    weights: &UkfWeights<T>,
    q: &DMatrix<T>,
    process: &P,
    step: T,
) -> Result<FilterState<T>> {
    let n = state.x.len();
    let t1 = state.t + step;
    let points = sigma_points(&state.x, &state.p, weights.lambda)?;
    let mut propagated = Vec::with_capacity(points.len());
    for point in &points {
        propagated.push(process.propagate(point, state.t, t1)?);
    }

    let mut mean = DVector::zeros(n);
    for (w, point) in weights.mean.iter().zip(propagated.iter()) {
        mean.axpy(*w, point, T::one());
    }
    let mut cov = q.clone();
    for (w, point) in weights.cov.iter().zip(propagated.iter()) {
        let d = point - &mean;
        cov.ger(*w, &d, &d, T::one());
    }
    symmetrize(&mut cov);
    Ok(FilterState {
        x: mean,
        p: cov,
        t: t1,
    })
}

/// Outcome of one measurement update.
#[derive(Debug, Clone)]
pub struct UpdateResult<T> {
    pub state: FilterState<T>,
    /// `y − ŷ`.
    pub innovation: DVector<T>,
    /// `sqrt(diag(P_yy))`.
    pub innovation_std: DVector<T>,
    /// Frobenius norm of the Kalman gain.
    pub gain_norm: T,
}

/// Measurement update on a predicted state.
///
/// Sigma points are regenerated from the predicted mean and covariance
/// so the innovation statistics see the process noise added in the
/// predict (reusing the propagated points would drop `Q` from `P_yy`
/// and break the exact linear-Kalman correspondence). `zero_gain_rows`,
/// when given, zeroes those rows of the Kalman gain before it is
/// applied (the φ-freeze diagnostic).
pub fn update<T: Real, M: MeasurementModel<T>>(
    predicted: &FilterState<T>,
    y: &DVector<T>,
    r: &DMatrix<T>,
    weights: &UkfWeights<T>,
    measurement: &M,
    zero_gain_rows: Option<std::ops::Range<usize>>,
) -> Result<UpdateResult<T>> {
    let n = predicted.x.len();
    let m = measurement.dim();
    if y.len() != m || r.nrows() != m || r.ncols() != m {
        return Err(Error::Shape {
            what: "measurement",
            expected: m,
            got: y.len(),
        });
    }
    if y.iter().any(|&v| !is_finite(v)) {
        return Err(Error::Update("measurement contains non-finite values".into()));
    }

    let propagated = sigma_points(&predicted.x, &predicted.p, weights.lambda)?;
    let y_points: Vec<DVector<T>> = propagated.iter().map(|p| measurement.measure(p)).collect();
    let mut y_hat = DVector::zeros(m);
    for (w, yp) in weights.mean.iter().zip(y_points.iter()) {
        y_hat.axpy(*w, yp, T::one());
    }

    let mut pyy = r.clone();
    let mut pxy = DMatrix::zeros(n, m);
    for ((w, yp), xp) in weights.cov.iter().zip(y_points.iter()).zip(propagated.iter()) {
        let dy = yp - &y_hat;
        let dx = xp - &predicted.x;
        pyy.ger(*w, &dy, &dy, T::one());
        pxy.ger(*w, &dx, &dy, T::one());
    }
    symmetrize(&mut pyy);

    // K = P_xy P_yy⁻¹ via a linear solve: P_yy Kᵀ = P_xyᵀ.
    let lu = pyy.clone().lu();
    let kt = lu
        .solve(&pxy.transpose())
        .ok_or_else(|| Error::Update("innovation covariance is singular".into()))?;
    let mut k = kt.transpose();
    if let Some(rows) = zero_gain_rows {
        for row in rows {
            for col in 0..m {
                k[(row, col)] = T::zero();
            }
        }
    }

    let innovation = y - &y_hat;
    let x = &predicted.x + &k * &innovation;
    let mut p = &predicted.p - &k * &pyy * k.transpose();
    symmetrize(&mut p);
    if x.iter().any(|&v| !is_finite(v)) {
        return Err(Error::Update("updated state is non-finite".into()));
    }

    let innovation_std = DVector::from_iterator(m, (0..m).map(|i| pyy[(i, i)].sqrt()));
    let gain_norm = k.norm();
    Ok(UpdateResult {
        state: FilterState {
            x,
            p,
            t: predicted.t,
        },
        innovation,
        innovation_std,
        gain_norm,
    })
}

/// Covariance conditioning: symmetrize, clamp negative eigenvalues to
/// zero, and raise the first `floor_dim` diagonal entries (the S/D/N
/// block) to at least `p_floor`. The output is symmetric, PSD, and
/// all-real by construction.
pub fn condition_covariance<T: Real>(
    p: &DMatrix<T>,
    p_floor: T,
    floor_dim: usize,
) -> Result<DMatrix<T>> {
    let mut out = clamp_psd(p)?;
    for i in 0..floor_dim.min(out.nrows()) {
        if out[(i, i)] < p_floor {
            out[(i, i)] = p_floor;
        }
    }
    Ok(out)
}

/// Shell-interleaved S/D/N selection `[S₁,D₁,N₁,…,S_n,D_n,N_n]` from the
/// species-blocked augmented layout; φ entries never appear.
pub fn measurement_model<T: Real>(x: &AugmentedState<T>) -> Vec<T> {
    let n = x.n_shells();
    let flat = x.as_slice();
    let mut y = Vec::with_capacity(3 * n);
    for i in 0..n {
        y.push(flat[i]);
        y.push(flat[n + i]);
        y.push(flat[2 * n + i]);
    }
    y
}

/// [`MeasurementModel`] form of [`measurement_model`] over raw vectors.
#[derive(Debug, Clone, Copy)]
pub struct SdnSelection {
    pub n_shells: usize,
}

impl<T: Real> MeasurementModel<T> for SdnSelection {
    fn dim(&self) -> usize {
        3 * self.n_shells
    }

    fn measure(&self, x: &DVector<T>) -> DVector<T> {
        let n = self.n_shells;
        DVector::from_fn(3 * n, |row, _| {
            let shell = row / 3;
            let species = row % 3;
            x[species * n + shell]
        })
    }
}

/// Augmented population dynamics as a [`ProcessModel`], with the φ block
/// converted between filter units and physical units around the
/// integration.
#[derive(Debug, Clone)]
pub struct SsemProcess<'a, T> {
    pub dynamics: &'a SsemDynamics<T>,
    pub integrator: IntegratorConfig<T>,
    pub phi_scale: T,
}

impl<T: Real> SsemProcess<'_, T> {
    fn sdn_dim(&self) -> usize {
        3 * self.dynamics.grid.n_shells
    }
}

impl<T: Real> ProcessModel<T> for SsemProcess<'_, T> {
    fn propagate(&self, x: &DVector<T>, t0: T, t1: T) -> Result<DVector<T>> {
        let sdn = self.sdn_dim();
        let mut physical: Vec<T> = x.iter().copied().collect();
        for v in physical.iter_mut().skip(sdn) {
            *v = *v * self.phi_scale;
        }
        let propagated = propagate_interval(
            &|state: &[T], t: T| self.dynamics.rhs_augmented_flat(state, t),
            &physical,
            t0,
            t1,
            &self.integrator,
        )?;
        let mut out = DVector::from_vec(propagated);
        for i in sdn..out.len() {
            out[i] = out[i] / self.phi_scale;
        }
        Ok(out)
    }
}

/// One recorded filter step; estimates and variances are physical units.
#[derive(Debug, Clone)]
pub struct FilterStep<T> {
    pub time: T,
    /// False for predict-only steps (no measurement at this time).
    pub measured: bool,
    pub estimate: Vec<T>,
    pub variance: Vec<T>,
    pub innovation: Option<Vec<T>>,
    pub innovation_std: Option<Vec<T>>,
    pub gain_norm: Option<T>,
    /// `‖P − Pᵀ‖_max` of the conditioned covariance (0 by construction).
    pub cov_symmetry_defect: T,
    /// Smallest eigenvalue of the conditioned covariance, filter units.
    pub cov_min_eigenvalue: T,
}

/// Full filter history.
#[derive(Debug, Clone)]
pub struct FilterTrace<T> {
    pub n_shells: usize,
    pub phi_scale: T,
    pub steps: Vec<FilterStep<T>>,
}

impl<T: Real> FilterTrace<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Steady-state φ̄ per shell and pair (physical units), averaged over
    /// the trailing `fraction` of steps.
    pub fn steady_state_phi_means(&self, fraction: T) -> Vec<[T; 6]> {
        let n = self.n_shells;
        let len = self.steps.len();
        let window = ((as_f64(fraction) * len as f64).ceil() as usize).clamp(1, len.max(1));
        let start = len - window;
        let mut means = vec![[T::zero(); 6]; n];
        if len == 0 {
            return means;
        }
        let inv = T::one() / lit::<T>(window as f64);
        for step in &self.steps[start..] {
            for b in 0..6 {
                for i in 0..n {
                    let idx = (3 + b) * n + i;
                    means[i][b] = means[i][b] + step.estimate[idx] * inv;
                }
            }
        }
        means
    }
}

/// Runs the filter over a moment stream: initializes `P₀` from the
/// scaled initial state, then alternates predict and update for
/// `horizon/step` yearly steps. Steps with no measurement within
/// `step·1e-6` of the step time propagate only and are flagged.
pub fn run_filter<T: Real>(
    x0: &AugmentedState<T>,
    moments: &[MomentRecord<T>],
    dynamics: &SsemDynamics<T>,
    integrator: &IntegratorConfig<T>,
    config: &UkfConfig<T>,
) -> Result<FilterTrace<T>> {
    config.validate()?;
    let n_shells = dynamics.grid.n_shells;
    if x0.n_shells() != n_shells {
        return Err(Error::Shape {
            what: "filter initial state",
            expected: 9 * n_shells,
            got: x0.len(),
        });
    }
    let n = x0.len();
    let sdn = 3 * n_shells;

    // Filter units: φ entries divided by phi_scale.
    let mut x = DVector::from_vec(x0.as_slice().to_vec());
    for i in sdn..n {
        x[i] = x[i] / config.phi_scale;
    }

    let noise_diag = |scale: T| -> DVector<T> {
        DVector::from_fn(n, |i, _| {
            let base = scale * x[i].abs();
            if i >= sdn {
                base.max(config.phi_noise_floor)
            } else {
                base
            }
        })
    };
    let q = DMatrix::from_diagonal(&noise_diag(config.q_scale));
    let p0 = DMatrix::from_diagonal(&noise_diag(config.p0_scale));
    let p0 = condition_covariance(&p0, config.p_floor, sdn)?;

    let w = weights(n, config)?;
    let process = SsemProcess {
        dynamics,
        integrator: *integrator,
        phi_scale: config.phi_scale,
    };
    let selection = SdnSelection { n_shells };

    let mut state = FilterState {
        x,
        p: p0,
        t: T::zero(),
    };
    let tolerance = config.step * lit(1e-6);
    let mut steps = Vec::with_capacity(config.n_steps());

    for k in 1..=config.n_steps() {
        let t_k = lit::<T>(k as f64) * config.step;
        let step_len = t_k - state.t;
        let mut predicted = predict(&state, &w, &q, &process, step_len)?;
        // The negative center weight can leave the predicted covariance
        // indefinite; condition before the update refactorizes it.
        predicted.p = condition_covariance(&predicted.p, config.p_floor, sdn)?;

        let measurement = moments
            .iter()
            .find(|rec| (rec.time - t_k).abs() <= tolerance);
        let (next, innovation, innovation_std, gain_norm) = match measurement {
            Some(rec) => {
                let y = rec.measurement_vector();
                let mut r = rec.measurement_covariance(config.r_floor);
                symmetrize(&mut r);
                let zero_rows = config.phi_frozen.then_some(sdn..n);
                let result = update(&predicted, &y, &r, &w, &selection, zero_rows)?;
                (
                    result.state,
                    Some(result.innovation),
                    Some(result.innovation_std),
                    Some(result.gain_norm),
                )
            }
            None => (predicted, None, None, None),
        };

        let p = condition_covariance(&next.p, config.p_floor, sdn)?;
        state = FilterState {
            x: next.x,
            p,
            t: t_k,
        };

        let mut symmetry_defect = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                symmetry_defect = symmetry_defect.max((state.p[(i, j)] - state.p[(j, i)]).abs());
            }
        }
        let min_eigenvalue = crate::linalg::min_symmetric_eigenvalue(&state.p);

        let mut estimate: Vec<T> = state.x.iter().copied().collect();
        let mut variance: Vec<T> = (0..n).map(|i| state.p[(i, i)]).collect();
        for i in sdn..n {
            estimate[i] = estimate[i] * config.phi_scale;
            variance[i] = variance[i] * config.phi_scale * config.phi_scale;
        }
        steps.push(FilterStep {
            time: t_k,
            measured: measurement.is_some(),
            estimate,
            variance,
            innovation: innovation.map(|v| v.iter().copied().collect()),
            innovation_std: innovation_std.map(|v| v.iter().copied().collect()),
            gain_norm,
            cov_symmetry_defect: symmetry_defect,
            cov_min_eigenvalue: min_eigenvalue,
        });
    }

    Ok(FilterTrace {
        n_shells,
        phi_scale: config.phi_scale,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_symmetric_eigenvalue;
    use approx::assert_relative_eq;

    struct IdentityProcess;

    impl ProcessModel<f64> for IdentityProcess {
        fn propagate(&self, x: &DVector<f64>, _t0: f64, _t1: f64) -> Result<DVector<f64>> {
            Ok(x.clone())
        }
    }

    struct LinearMap(DMatrix<f64>);

    impl ProcessModel<f64> for LinearMap {
        fn propagate(&self, x: &DVector<f64>, _t0: f64, _t1: f64) -> Result<DVector<f64>> {
            Ok(&self.0 * x)
        }
    }

    struct FullObservation(usize);

    impl MeasurementModel<f64> for FullObservation {
        fn dim(&self) -> usize {
            self.0
        }
        fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
    }

    fn config() -> UkfConfig<f64> {
        UkfConfig::default()
    }

    #[test]
    fn weights_for_the_augmented_dimension() {
        let w = weights(324, &config()).unwrap();
        assert_eq!(w.n_points(), 649);
        assert_eq!(w.lambda, -303.75);
        assert_eq!(w.mean[0], -15.0);
        assert_eq!(w.cov[0], -12.0625);
        assert_relative_eq!(w.mean[1], 1.0 / 40.5, max_relative = 1e-15);
        let sum: f64 = w.mean.iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_normalize_across_dimensions() {
        for n in [3usize, 108, 324] {
            let w = weights(n, &config()).unwrap();
            let sum: f64 = w.mean.iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn negative_n_lambda_is_a_configuration_error() {
        let mut cfg = config();
        cfg.kappa = -1000.0;
        assert!(weights(324, &cfg).is_err());
    }

    #[test]
    fn scalar_sigma_points_by_hand() {
        // n = 1, P = 4, λ = −0.75: offsets ±sqrt(0.25·4) = ±1.
        let cfg = config();
        let w = weights(1, &cfg).unwrap();
        assert_eq!(w.lambda, -0.9375);
        let x = DVector::from_vec(vec![0.0]);
        let p = DMatrix::from_vec(1, 1, vec![4.0]);
        let points = sigma_points(&x, &p, -0.75).unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[0][0], 0.0);
        assert_relative_eq!(points[1][0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(points[2][0], -1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_covariance_collapses_sigma_points() {
        let x = DVector::from_vec(vec![2.0, -3.0]);
        let p = DMatrix::zeros(2, 2);
        let points = sigma_points(&x, &p, -1.8).unwrap();
        for pt in points {
            assert_eq!(pt, x);
        }
    }

    #[test]
    fn sigma_mean_reconstructs_state() {
        let cfg = config();
        let w = weights(3, &cfg).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5],
        );
        let points = sigma_points(&x, &p, w.lambda).unwrap();
        let mut mean = DVector::zeros(3);
        for (wi, pt) in w.mean.iter().zip(points.iter()) {
            mean.axpy(*wi, pt, 1.0);
        }
        for i in 0..3 {
            assert_relative_eq!(mean[i], x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn predict_with_identity_dynamics_and_zero_noise_is_identity() {
        let cfg = config();
        let w = weights(2, &cfg).unwrap();
        let state = FilterState {
            x: DVector::from_vec(vec![4.0, -1.0]),
            p: DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]),
            t: 0.0,
        };
        let q = DMatrix::zeros(2, 2);
        let pred = predict(&state, &w, &q, &IdentityProcess, 1.0).unwrap();
        for i in 0..2 {
            assert_relative_eq!(pred.x[i], state.x[i], epsilon = 1e-13);
            for j in 0..2 {
                assert_relative_eq!(pred.p[(i, j)], state.p[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scalar_update_matches_hand_kalman_algebra() {
        // x̂ = 0, P = 1, H = 1, R = 1, y = 2 -> x⁺ = 1, P⁺ = 0.5.
        let cfg = config();
        let w = weights(1, &cfg).unwrap();
        let state = FilterState {
            x: DVector::from_vec(vec![0.0]),
            p: DMatrix::from_vec(1, 1, vec![1.0]),
            t: 1.0,
        };
        let y = DVector::from_vec(vec![2.0]);
        let r = DMatrix::from_vec(1, 1, vec![1.0]);
        let result = update(&state, &y, &r, &w, &FullObservation(1), None).unwrap();
        assert_relative_eq!(result.state.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(result.state.p[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(result.innovation[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(result.innovation_std[0], 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn zero_innovation_keeps_mean_and_shrinks_covariance() {
        let cfg = config();
        let w = weights(2, &cfg).unwrap();
        let state = FilterState {
            x: DVector::from_vec(vec![3.0, -1.0]),
            p: DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            t: 0.0,
        };
        let y = DVector::from_vec(vec![3.0, -1.0]);
        let r = DMatrix::identity(2, 2);
        let result = update(&state, &y, &r, &w, &FullObservation(2), None).unwrap();
        for i in 0..2 {
            assert_relative_eq!(result.state.x[i], state.x[i], epsilon = 1e-12);
        }
        assert!(result.state.p.trace() < state.p.trace());
        assert!(result.gain_norm > 0.0);
    }

    #[test]
    fn conditioning_is_idempotent_on_good_covariances() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
        let out = condition_covariance(&p, 0.1, 2).unwrap();
        for (a, b) in out.iter().zip(p.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditioning_clamps_and_floors() {
        let p = DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 2.0]);
        let out = condition_covariance(&p, 0.1, 2).unwrap();
        assert_relative_eq!(out[(0, 0)], 0.1, epsilon = 1e-12);
        assert_relative_eq!(out[(1, 1)], 2.0, max_relative = 1e-12);
        assert!(min_symmetric_eigenvalue(&out) >= -1e-12);
        let diff = (&out - out.transpose()).norm();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn measurement_selection_interleaves_by_shell() {
        use crate::state::{PhiValues, PopulationState};
        let n = 4;
        let mut pop = PopulationState::zeros(n);
        let mut phis = PhiValues::zeros(n);
        for i in 0..n {
            pop.s[i] = 100.0 + i as f64;
            pop.d[i] = 200.0 + i as f64;
            pop.n[i] = 300.0 + i as f64;
            phis.ss[i] = 7.0;
        }
        let aug = AugmentedState::pack(&pop, &phis).unwrap();
        let y = measurement_model(&aug);
        assert_eq!(y.len(), 12);
        for i in 1..=n {
            assert_eq!(y[3 * (i - 1)], pop.s[i - 1]);
            assert_eq!(y[3 * (i - 1) + 1], pop.d[i - 1]);
            assert_eq!(y[3 * (i - 1) + 2], pop.n[i - 1]);
        }
        // φ blocks never reach the measurement.
        let mut phis2 = phis.clone();
        for v in &mut phis2.ss {
            *v = 1e9;
        }
        let aug2 = AugmentedState::pack(&pop, &phis2).unwrap();
        assert_eq!(y, measurement_model(&aug2));

        // Vector form agrees with the packed form.
        let sel = SdnSelection { n_shells: n };
        let via_vec = sel.measure(&DVector::from_vec(aug.as_slice().to_vec()));
        assert_eq!(y, via_vec.iter().copied().collect::<Vec<_>>());
    }

    #[test]
    fn linear_ukf_matches_textbook_kalman_filter() {
        // 3-state rotation+decay map, fully observed: the UKF must equal
        // the closed-form Kalman recursion to near machine precision.
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.9, 0.2, 0.0, -0.2, 0.9, 0.0, 0.0, 0.0, 0.85],
        );
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.6, 0.8, 1.0]));
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.5, 2.0]));
        let cfg = config();
        let w = weights(3, &cfg).unwrap();
        let process = LinearMap(a.clone());

        let mut ukf = FilterState {
            x: DVector::from_vec(vec![10.0, -5.0, 2.0]),
            p: DMatrix::identity(3, 3) * 4.0,
            t: 0.0,
        };
        let mut kf_x = ukf.x.clone();
        let mut kf_p = ukf.p.clone();

        for k in 0..50 {
            let y = DVector::from_vec(vec![
                (k as f64 * 0.7).sin() * 10.0,
                (k as f64 * 0.3).cos() * 8.0,
                k as f64 * 0.1,
            ]);
            let pred = predict(&ukf, &w, &q, &process, 1.0).unwrap();
            let res = update(&pred, &y, &r, &w, &FullObservation(3), None).unwrap();
            ukf = res.state;

            // Textbook recursion.
            kf_x = &a * kf_x;
            kf_p = &a * &kf_p * a.transpose() + &q;
            let s = &kf_p + &r;
            let gain = &kf_p * s.clone().try_inverse().unwrap();
            kf_x = &kf_x + &gain * (&y - &kf_x);
            kf_p = &kf_p - &gain * &kf_p;

            for i in 0..3 {
                assert_relative_eq!(ukf.x[i], kf_x[i], epsilon = 1e-8);
                for j in 0..3 {
                    assert_relative_eq!(ukf.p[(i, j)], kf_p[(i, j)], epsilon = 1e-8);
                }
            }
        }
    }
}
