//! Synthetic Monte-Carlo ensemble and per-shell moment extraction.
//!
//! Each member starts from a perturbed copy of the nominal initial
//! populations and alternates deterministic collision-free propagation
//! with discrete catastrophic collision events: per interval, shell, and
//! species pair, the event count is Poisson with mean `φ_XY · X · Y · dt`,
//! and every event removes the colliding objects (two for a same-species
//! pair, one of each otherwise) and injects the pair's fragment count
//! into the debris population of that shell.
//!
//! Members are driven by counter-derived RNG streams — member `m` uses
//! the stream `m` of a ChaCha generator seeded with the master seed — so
//! the whole ensemble is a pure function of `(config, seed)` and members
//! can be generated in parallel without changing any result.

pub mod io;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SsemDynamics;
use crate::error::{Error, Result};
use crate::integrator::{propagate_interval, IntegratorConfig};
use crate::params::{PhiPair, Species};
use crate::scalar::{as_f64, is_finite, lit, Real};
use crate::state::PopulationState;

/// How the initial populations are perturbed per member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSampling {
    /// `x = nominal · (1 + init_jitter · z)`, clamped at zero. With
    /// `init_jitter = 0` every member starts exactly at the nominal.
    Gaussian,
    /// Integer counts drawn from `Poisson(nominal)` per shell and species.
    Poisson,
}

/// How discrete collision events are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionSampling {
    Poisson,
}

/// Ensemble generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct EnsembleConfig<T> {
    pub n_members: usize,
    /// Total simulated span, years.
    pub horizon: T,
    /// Output/event-sampling step, years.
    pub step: T,
    /// Master seed; member streams derive from it.
    pub seed: u64,
    /// Relative standard deviation of the Gaussian init perturbation.
    pub init_jitter: T,
    pub init_sampling: InitSampling,
    pub collision_sampling: CollisionSampling,
    /// Whether moment extraction fills the cross-shell covariance blocks.
    pub cross_shell: bool,
}

impl<T: Real> Default for EnsembleConfig<T> {
    fn default() -> Self {
        Self {
            n_members: 4000,
            horizon: lit(40.0),
            step: T::one(),
            seed: 0,
            init_jitter: lit(0.05),
            init_sampling: InitSampling::Gaussian,
            collision_sampling: CollisionSampling::Poisson,
            cross_shell: false,
        }
    }
}

impl<T: Real> EnsembleConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_members < 2 {
            return Err(Error::Config("n_members must be >= 2".into()));
        }
        if self.horizon <= T::zero() || self.step <= T::zero() {
            return Err(Error::Config("horizon and step must be > 0".into()));
        }
        if self.init_jitter < T::zero() {
            return Err(Error::Config("init_jitter must be >= 0".into()));
        }
        Ok(())
    }

    /// The common output time grid `0, step, 2·step, …, horizon`; the
    /// last interval is shortened to land exactly on the horizon.
    pub fn time_grid(&self) -> Vec<T> {
        let mut times = vec![T::zero()];
        let mut k = 1usize;
        loop {
            let t = lit::<T>(k as f64) * self.step;
            if t < self.horizon {
                times.push(t);
                k += 1;
            } else {
                times.push(self.horizon);
                break;
            }
        }
        times
    }
}

/// One member's trajectory on the common time grid.
#[derive(Debug, Clone)]
pub struct MemberTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<PopulationState<T>>,
    /// Total number of discrete collision events sampled.
    pub n_events: u64,
}

/// The full ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleRun<T> {
    pub times: Vec<T>,
    pub members: Vec<MemberTrajectory<T>>,
    pub n_requested: usize,
    /// Members dropped because their state went non-finite.
    pub n_excluded: usize,
}

impl<T: Real> EnsembleRun<T> {
    pub fn n_steps(&self) -> usize {
        self.times.len()
    }

    pub fn n_shells(&self) -> usize {
        self.members
            .first()
            .map(|m| m.states[0].n_shells())
            .unwrap_or(0)
    }

    /// Member values of one species in one shell (1-based) at one time index.
    pub fn sample(&self, species: Species, shell: usize, t_index: usize) -> Vec<T> {
        self.members
            .iter()
            .map(|m| m.states[t_index].species(species)[shell - 1])
            .collect()
    }
}

fn perturb_initial<T: Real>(
    config: &EnsembleConfig<T>,
    nominal: &PopulationState<T>,
    rng: &mut ChaCha12Rng,
) -> Result<PopulationState<T>> {
    let n = nominal.n_shells();
    let mut out = PopulationState::zeros(n);
    for i in 0..n {
        for species in Species::ALL {
            let nominal_value = nominal.species(species)[i];
            let value = match config.init_sampling {
                InitSampling::Gaussian => {
                    if config.init_jitter > T::zero() && nominal_value != T::zero() {
                        let z: f64 = StandardNormal.sample(rng);
                        let factor = T::one() + config.init_jitter * lit(z);
                        (nominal_value * factor).max(T::zero())
                    } else {
                        nominal_value
                    }
                }
                InitSampling::Poisson => {
                    let mean = as_f64(nominal_value);
                    if mean > 0.0 {
                        let draw = Poisson::new(mean)
                            .map_err(|e| Error::Config(format!("poisson init: {e}")))?
                            .sample(rng);
                        lit(draw)
                    } else {
                        T::zero()
                    }
                }
            };
            match species {
                Species::S => out.s[i] = value,
                Species::D => out.d[i] = value,
                Species::N => out.n[i] = value,
            }
        }
    }
    Ok(out)
}

/// Samples the discrete collision events for one interval and applies
/// them in place. Returns the number of events.
fn apply_collision_events<T: Real>(
    dynamics: &SsemDynamics<T>,
    state: &mut PopulationState<T>,
    dt: T,
    rng: &mut ChaCha12Rng,
) -> Result<u64> {
    let mut events = 0u64;
    for i in 0..state.n_shells() {
        for pair in PhiPair::ALL {
            let phi = dynamics.static_phis.pair(pair)[i];
            let (a, b) = pair.species();
            let x = state.species(a)[i];
            let y = state.species(b)[i];
            let rate = as_f64(phi * x * y * dt);
            if !(rate > 0.0) || !rate.is_finite() {
                continue;
            }
            let count = Poisson::new(rate)
                .map_err(|e| Error::Config(format!("poisson events: {e}")))?
                .sample(rng)
                .round() as u64;
            if count == 0 {
                continue;
            }
            events += count;
            let k = lit::<T>(count as f64);
            let fragments = dynamics.fragments.pair(pair) * k;
            if a == b {
                let lost = lit::<T>(2.0) * k;
                let pop = match a {
                    Species::S => &mut state.s[i],
                    Species::D => &mut state.d[i],
                    Species::N => &mut state.n[i],
                };
                *pop = (*pop - lost).max(T::zero());
            } else {
                for sp in [a, b] {
                    let pop = match sp {
                        Species::S => &mut state.s[i],
                        Species::D => &mut state.d[i],
                        Species::N => &mut state.n[i],
                    };
                    *pop = (*pop - k).max(T::zero());
                }
            }
            state.n[i] = state.n[i] + fragments;
        }
    }
    Ok(events)
}

/// Generates one member trajectory, reproducible from
/// `(config.seed, member_seed)`.
pub fn generate_member<T: Real>(
    config: &EnsembleConfig<T>,
    dynamics: &SsemDynamics<T>,
    integrator: &IntegratorConfig<T>,
    nominal_init: &PopulationState<T>,
    member_seed: u64,
) -> Result<MemberTrajectory<T>> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(member_seed);

    let times = config.time_grid();
    let mut state = perturb_initial(config, nominal_init, &mut rng)?;
    if !state.is_finite() {
        return Err(Error::NonFinite { t: 0.0, index: 0 });
    }
    let mut states = Vec::with_capacity(times.len());
    states.push(state.clone());
    let mut n_events = 0u64;

    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let flat = propagate_interval(
            &|x: &[T], t: T| dynamics.rhs_collision_free_flat(x, t),
            &state.to_flat(),
            t0,
            t1,
            integrator,
        )?;
        state = PopulationState::from_flat(&flat, dynamics.grid.n_shells)?;
        let CollisionSampling::Poisson = config.collision_sampling;
        n_events += apply_collision_events(dynamics, &mut state, t1 - t0, &mut rng)?;
        if !state.is_finite() {
            return Err(Error::NonFinite {
                t: as_f64(t1),
                index: 0,
            });
        }
        states.push(state.clone());
    }

    Ok(MemberTrajectory {
        times,
        states,
        n_events,
    })
}

/// Runs the whole ensemble. Members with non-finite states are excluded
/// with a warning; the survivors keep their member order regardless of
/// how many threads generated them.
pub fn run_ensemble<T: Real>(
    config: &EnsembleConfig<T>,
    dynamics: &SsemDynamics<T>,
    integrator: &IntegratorConfig<T>,
    nominal_init: &PopulationState<T>,
    threads: Option<usize>,
) -> Result<EnsembleRun<T>> {
    config.validate()?;
    let run_all = || -> Vec<(u64, Result<MemberTrajectory<T>>)> {
        (0..config.n_members as u64)
            .into_par_iter()
            .map(|m| (m, generate_member(config, dynamics, integrator, nominal_init, m)))
            .collect()
    };
    let results = match threads {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all),
        _ => run_all(),
    };

    let mut members = Vec::with_capacity(config.n_members);
    let mut n_excluded = 0usize;
    for (m, result) in results {
        match result {
            Ok(traj) => members.push(traj),
            Err(err) => {
                n_excluded += 1;
                log::warn!("ensemble member {m} excluded: {err}");
            }
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyData("every ensemble member failed".into()));
    }
    Ok(EnsembleRun {
        times: config.time_grid(),
        members,
        n_requested: config.n_members,
        n_excluded,
    })
}

/// Per-shell means and covariance blocks of the ensemble at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord<T> {
    pub time: T,
    pub n_members: usize,
    /// Per shell: mean `[S, D, N]`.
    pub mean: Vec<[T; 3]>,
    /// Per shell: the 3×3 covariance block, unbiased (divisor n−1).
    pub cov: Vec<[[T; 3]; 3]>,
    /// Full covariance in shell-interleaved order
    /// `[S₁, D₁, N₁, …, S_n, D_n, N_n]`, when cross-shell blocks were
    /// requested.
    pub cross: Option<DMatrix<T>>,
}

impl<T: Real> MomentRecord<T> {
    pub fn n_shells(&self) -> usize {
        self.mean.len()
    }

    /// Measurement vector in shell-interleaved order.
    pub fn measurement_vector(&self) -> DVector<T> {
        let n = self.n_shells();
        let mut y = DVector::zeros(3 * n);
        for i in 0..n {
            for p in 0..3 {
                y[3 * i + p] = self.mean[i][p];
            }
        }
        y
    }

    /// Measurement covariance in shell-interleaved order, diagonal
    /// floored at `r_floor`. Uses the cross-shell matrix when present,
    /// otherwise the block-diagonal assembly.
    pub fn measurement_covariance(&self, r_floor: T) -> DMatrix<T> {
        let n = self.n_shells();
        let mut r = match &self.cross {
            Some(full) => full.clone(),
            None => {
                let mut r = DMatrix::zeros(3 * n, 3 * n);
                for i in 0..n {
                    for p in 0..3 {
                        for q in 0..3 {
                            r[(3 * i + p, 3 * i + q)] = self.cov[i][p][q];
                        }
                    }
                }
                r
            }
        };
        for k in 0..3 * n {
            if r[(k, k)] < r_floor {
                r[(k, k)] = r_floor;
            }
        }
        r
    }
}

/// Unbiased sample mean and covariance over members at one time index.
///
/// Plain two-pass sums in member order, so the result is bit-identical
/// to the textbook formula evaluated in the same order.
pub fn extract_moments<T: Real>(
    members: &[MemberTrajectory<T>],
    t_index: usize,
    cross_shell: bool,
) -> Result<MomentRecord<T>> {
    let n_members = members.len();
    if n_members < 2 {
        return Err(Error::InsufficientData(format!(
            "moment extraction needs >= 2 members, got {n_members}"
        )));
    }
    let n_shells = members[0].states[0].n_shells();
    let time = members[0].times[t_index];
    let count = lit::<T>(n_members as f64);
    let count_m1 = lit::<T>((n_members - 1) as f64);

    let value = |m: &MemberTrajectory<T>, shell: usize, p: usize| -> T {
        let st = &m.states[t_index];
        match p {
            0 => st.s[shell],
            1 => st.d[shell],
            _ => st.n[shell],
        }
    };

    let mut mean = vec![[T::zero(); 3]; n_shells];
    for i in 0..n_shells {
        for p in 0..3 {
            let mut sum = T::zero();
            for m in members {
                sum = sum + value(m, i, p);
            }
            mean[i][p] = sum / count;
        }
    }

    let cov_entry = |i: usize, p: usize, j: usize, q: usize| -> T {
        let mut sum = T::zero();
        for m in members {
            sum = sum + (value(m, i, p) - mean[i][p]) * (value(m, j, q) - mean[j][q]);
        }
        sum / count_m1
    };

    let mut cov = vec![[[T::zero(); 3]; 3]; n_shells];
    for i in 0..n_shells {
        for p in 0..3 {
            for q in p..3 {
                let c = cov_entry(i, p, i, q);
                cov[i][p][q] = c;
                cov[i][q][p] = c;
            }
        }
    }

    let cross = if cross_shell {
        let dim = 3 * n_shells;
        let mut full = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            let (i, p) = (a / 3, a % 3);
            for b in a..dim {
                let (j, q) = (b / 3, b % 3);
                let c = if i == j {
                    cov[i][p][q]
                } else {
                    cov_entry(i, p, j, q)
                };
                full[(a, b)] = c;
                full[(b, a)] = c;
            }
        }
        Some(full)
    } else {
        None
    };

    Ok(MomentRecord {
        time,
        n_members,
        mean,
        cov,
        cross,
    })
}

/// Moments at every time index of the run.
pub fn extract_moment_stream<T: Real>(
    run: &EnsembleRun<T>,
    cross_shell: bool,
) -> Result<Vec<MomentRecord<T>>> {
    (0..run.n_steps())
        .map(|k| extract_moments(&run.members, k, cross_shell))
        .collect()
}

/// Histogram of member populations.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationHistogram<T> {
    /// `n_bins + 1` strictly increasing edges.
    pub edges: Vec<T>,
    pub counts: Vec<u64>,
    /// Set when the sample was constant (min = max) and the single bin
    /// is an arbitrary unit-width interval around it.
    pub degenerate: bool,
    pub species: Species,
    /// 1-based shell, or 0 for histograms not tied to a shell.
    pub shell: usize,
    pub t_index: usize,
}

impl<T: Real> PopulationHistogram<T> {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, b: usize) -> T {
        (self.edges[b] + self.edges[b + 1]) * lit(0.5)
    }

    pub fn bin_width(&self, b: usize) -> T {
        self.edges[b + 1] - self.edges[b]
    }
}

/// Equal-width histogram spanning the sample range.
pub fn histogram_from_sample<T: Real>(
    sample: &[T],
    n_bins: usize,
    species: Species,
    shell: usize,
    t_index: usize,
) -> Result<PopulationHistogram<T>> {
    if sample.is_empty() {
        return Err(Error::EmptyData("histogram of an empty sample".into()));
    }
    if n_bins < 1 {
        return Err(Error::Config("n_bins must be >= 1".into()));
    }
    let mut min = sample[0];
    let mut max = sample[0];
    for &v in sample {
        if !is_finite(v) {
            return Err(Error::Domain("histogram sample contains non-finite values".into()));
        }
        min = min.min(v);
        max = max.max(v);
    }
    if min == max {
        let half = lit::<T>(0.5);
        return Ok(PopulationHistogram {
            edges: vec![min - half, min + half],
            counts: vec![sample.len() as u64],
            degenerate: true,
            species,
            shell,
            t_index,
        });
    }
    let span = max - min;
    let nb = lit::<T>(n_bins as f64);
    let edges: Vec<T> = (0..=n_bins)
        .map(|b| min + span * lit::<T>(b as f64) / nb)
        .collect();
    let mut counts = vec![0u64; n_bins];
    for &v in sample {
        let idx = ((v - min) / span * nb).floor();
        let idx = idx.to_usize().unwrap_or(0).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok(PopulationHistogram {
        edges,
        counts,
        degenerate: false,
        species,
        shell,
        t_index,
    })
}

/// Histogram of one species/shell across members at a time index.
pub fn build_histogram<T: Real>(
    run: &EnsembleRun<T>,
    species: Species,
    shell: usize,
    t_index: usize,
    n_bins: usize,
) -> Result<PopulationHistogram<T>> {
    if run.members.is_empty() {
        return Err(Error::EmptyData("histogram of an empty ensemble".into()));
    }
    let sample = run.sample(species, shell, t_index);
    histogram_from_sample(&sample, n_bins, species, shell, t_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::DensityModel;
    use crate::params::{ModelParams, SpeciesSet};
    use crate::shell::ShellGrid;
    use crate::state::PhiValues;
    use approx::assert_relative_eq;

    fn toy_dynamics(n_shells: usize) -> SsemDynamics<f64> {
        let mut params = ModelParams::<f64>::default();
        params.species = SpeciesSet {
            n: crate::params::SpeciesParams {
                radius: 0.5,
                ..crate::params::SpeciesParams::debris()
            },
            ..SpeciesSet::default()
        };
        SsemDynamics::new(
            params,
            ShellGrid::new(200.0, n_shells, 50.0, 6378.137).unwrap(),
            DensityModel::static_exponential(),
        )
        .unwrap()
    }

    fn toy_init(n_shells: usize) -> PopulationState<f64> {
        let mut init = PopulationState::zeros(n_shells);
        for i in 0..n_shells {
            init.s[i] = 500.0;
            init.d[i] = 200.0;
            init.n[i] = 2000.0;
        }
        init
    }

    fn quiet_config(n_members: usize) -> EnsembleConfig<f64> {
        EnsembleConfig {
            n_members,
            horizon: 4.0,
            step: 1.0,
            seed: 42,
            init_jitter: 0.0,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn zero_noise_members_match_deterministic_propagation() {
        let dynamics = toy_dynamics(3)
            .with_static_phis(PhiValues::zeros(3))
            .unwrap();
        let integ = IntegratorConfig::default();
        let init = toy_init(3);
        let cfg = quiet_config(2);
        let run = run_ensemble(&cfg, &dynamics, &integ, &init, None).unwrap();
        assert_eq!(run.members.len(), 2);
        assert_eq!(run.members[0].n_events, 0);

        let flat = propagate_interval(
            &|x: &[f64], t: f64| dynamics.rhs_collision_free_flat(x, t),
            &init.to_flat(),
            0.0,
            4.0,
            &integ,
        )
        .unwrap();
        // Stepwise vs direct propagation agree on substep boundaries.
        let last = run.members[0].states.last().unwrap().to_flat();
        for (a, b) in last.iter().zip(flat.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        // And both members are identical.
        assert_eq!(
            run.members[0].states.last().unwrap(),
            run.members[1].states.last().unwrap()
        );
    }

    #[test]
    fn same_seed_reproduces_trajectories() {
        let dynamics = toy_dynamics(2);
        let integ = IntegratorConfig::default();
        let init = toy_init(2);
        let mut cfg = quiet_config(2);
        cfg.init_jitter = 0.1;
        let a = generate_member(&cfg, &dynamics, &integ, &init, 7).unwrap();
        let b = generate_member(&cfg, &dynamics, &integ, &init, 7).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.n_events, b.n_events);
        let c = generate_member(&cfg, &dynamics, &integ, &init, 8).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let dynamics = toy_dynamics(2);
        let integ = IntegratorConfig::default();
        let init = toy_init(2);
        let mut cfg = quiet_config(8);
        cfg.init_jitter = 0.05;
        let serial = run_ensemble(&cfg, &dynamics, &integ, &init, Some(1)).unwrap();
        let parallel = run_ensemble(&cfg, &dynamics, &integ, &init, Some(4)).unwrap();
        for (a, b) in serial.members.iter().zip(parallel.members.iter()) {
            assert_eq!(a.states, b.states);
        }
    }

    #[test]
    fn diverging_member_is_excluded_with_count() {
        let dynamics = toy_dynamics(1);
        let integ = IntegratorConfig::default();
        let mut init = PopulationState::zeros(1);
        init.s[0] = 1e308; // quadratic collision terms overflow
        init.d[0] = 1e308;
        init.n[0] = 1e308;
        let cfg = quiet_config(3);
        let err = run_ensemble(&cfg, &dynamics, &integ, &init, None);
        // All members share the same nominal, so all fail.
        assert!(err.is_err());
    }

    #[test]
    fn expected_event_count_matches_quadrature() {
        // One shell, slow dynamics, small rate: the mean sampled event
        // count over many members must match ∫ φ S D dt evaluated on the
        // deterministic collision-free trajectory.
        let mut params = ModelParams::<f64>::default();
        params.tof = 1e9;
        params.pmd = 0.0;
        params.delta = 0.0;
        params.drag_enabled = false;
        let grid = ShellGrid::new(200.0, 1, 50.0, 6378.137).unwrap();
        let mut phis = PhiValues::zeros(1);
        phis.sd[0] = 2e-8;
        let dynamics = SsemDynamics::new(params, grid, DensityModel::static_exponential())
            .unwrap()
            .with_static_phis(phis)
            .unwrap();
        let integ = IntegratorConfig::default();
        let mut init = PopulationState::zeros(1);
        init.s[0] = 10_000.0;
        init.d[0] = 10_000.0;
        let cfg = EnsembleConfig {
            n_members: 1000,
            horizon: 10.0,
            step: 1.0,
            seed: 3,
            init_jitter: 0.0,
            ..EnsembleConfig::default()
        };
        let run = run_ensemble(&cfg, &dynamics, &integ, &init, None).unwrap();

        // Quadrature oracle on the deterministic trajectory: populations
        // are essentially frozen, so the stepwise sum is the integral.
        let expected_per_member: f64 = run.times.windows(2).map(|w| {
            2e-8 * 10_000.0 * 10_000.0 * (w[1] - w[0])
        }).sum();
        let mean_events: f64 =
            run.members.iter().map(|m| m.n_events as f64).sum::<f64>() / 1000.0;
        let std_err = (expected_per_member / 1000.0).sqrt();
        assert!(
            (mean_events - expected_per_member).abs() < 3.0 * std_err,
            "mean {mean_events}, expected {expected_per_member} ± {std_err}"
        );
        // And the events visibly inject fragments into N.
        let final_n = extract_moments(&run.members, run.n_steps() - 1, false).unwrap();
        assert!(final_n.mean[0][2] > 0.0);
    }

    #[test]
    fn subset_mean_close_to_full_mean() {
        let dynamics = toy_dynamics(1);
        let integ = IntegratorConfig { dt_sub: 0.25 };
        let init = toy_init(1);
        let mut cfg = quiet_config(800);
        cfg.init_jitter = 0.05;
        cfg.horizon = 2.0;
        let run = run_ensemble(&cfg, &dynamics, &integ, &init, None).unwrap();
        let t_last = run.n_steps() - 1;
        let full = extract_moments(&run.members, t_last, false).unwrap();
        let subset = extract_moments(&run.members[..250], t_last, false).unwrap();
        for p in 0..3 {
            let sigma = full.cov[0][p][p].sqrt();
            let diff = (subset.mean[0][p] - full.mean[0][p]).abs();
            assert!(
                diff <= 3.0 * sigma / (250.0f64).sqrt(),
                "species {p}: |{}| > 3σ/√250 = {}",
                diff,
                3.0 * sigma / (250.0f64).sqrt()
            );
        }
    }

    #[test]
    fn moments_of_identical_members_have_zero_covariance() {
        let dynamics = toy_dynamics(2)
            .with_static_phis(PhiValues::zeros(2))
            .unwrap();
        let integ = IntegratorConfig::default();
        let init = toy_init(2);
        // Power-of-two member count makes the mean of identical values
        // exact, so the covariance is exactly zero.
        let cfg = quiet_config(4);
        let run = run_ensemble(&cfg, &dynamics, &integ, &init, None).unwrap();
        let rec = extract_moments(&run.members, 2, true).unwrap();
        for i in 0..2 {
            for p in 0..3 {
                assert_relative_eq!(
                    rec.mean[i][p],
                    run.members[0].states[2].species(Species::ALL[p])[i],
                    max_relative = 1e-15
                );
                for q in 0..3 {
                    assert_eq!(rec.cov[i][p][q], 0.0);
                }
            }
        }
    }

    #[test]
    fn two_member_hand_moments() {
        // S = {0, 2} in one shell: mean 1, unbiased variance 2.
        let mk = |s: f64| MemberTrajectory {
            times: vec![0.0],
            states: vec![PopulationState::new(vec![s], vec![0.0], vec![0.0]).unwrap()],
            n_events: 0,
        };
        let members = vec![mk(0.0), mk(2.0)];
        let rec = extract_moments(&members, 0, false).unwrap();
        assert_eq!(rec.mean[0][0], 1.0);
        assert_eq!(rec.cov[0][0][0], 2.0);
        assert!(extract_moments(&members[..1], 0, false).is_err());
    }

    #[test]
    fn assembled_cross_covariance_is_exactly_symmetric() {
        let dynamics = toy_dynamics(3);
        let integ = IntegratorConfig::default();
        let init = toy_init(3);
        let mut cfg = quiet_config(40);
        cfg.init_jitter = 0.1;
        let run = run_ensemble(&cfg, &dynamics, &integ, &init, None).unwrap();
        let rec = extract_moments(&run.members, 1, true).unwrap();
        let r = rec.cross.as_ref().unwrap();
        let rt = r.transpose();
        assert_eq!(r, &rt);
        // Diagonal blocks match the per-shell blocks bit for bit.
        for i in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    assert_eq!(r[(3 * i + p, 3 * i + q)], rec.cov[i][p][q]);
                }
            }
        }
    }

    #[test]
    fn histogram_conserves_counts_and_flags_degenerate() {
        let sample = vec![5.0; 17];
        let h = histogram_from_sample(&sample, 10, Species::N, 1, 0).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.counts, vec![17]);

        let sample: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let h = histogram_from_sample(&sample, 7, Species::N, 1, 0).unwrap();
        assert_eq!(h.total(), 100);
        assert_eq!(h.n_bins(), 7);
        for b in 0..7 {
            assert!(h.edges[b + 1] > h.edges[b]);
        }
    }

    #[test]
    fn late_time_debris_skew_is_positive_with_collisions_on() {
        // Rare large fragment injections put the heavy tail on the right.
        let mut params = ModelParams::<f64>::default();
        params.tof = 1e9;
        params.pmd = 0.0;
        params.delta = 0.0;
        params.drag_enabled = false;
        let grid = ShellGrid::new(200.0, 1, 50.0, 6378.137).unwrap();
        let mut phis = PhiValues::zeros(1);
        phis.dd[0] = 1e-9;
        let dynamics = SsemDynamics::new(params, grid, DensityModel::static_exponential())
            .unwrap()
            .with_static_phis(phis)
            .unwrap();
        let mut init = PopulationState::zeros(1);
        init.s[0] = 100.0;
        init.d[0] = 20_000.0;
        init.n[0] = 1000.0;
        let cfg = EnsembleConfig {
            n_members: 400,
            horizon: 10.0,
            step: 1.0,
            seed: 11,
            init_jitter: 0.0,
            ..EnsembleConfig::default()
        };
        let run = run_ensemble(&cfg, &dynamics, &IntegratorConfig::default(), &init, None).unwrap();
        let sample = run.sample(Species::N, 1, run.n_steps() - 1);
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m3 = sample.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let skew = m3 / var.powf(1.5);
        assert!(skew > 0.0, "expected positive skew, got {skew}");
    }
}
