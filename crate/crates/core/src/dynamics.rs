//! Right-hand sides of the governing population equations.
//!
//! Per shell `i` the three species evolve as
//!
//! ```text
//! Ṡ = λ − S/TOF − α_a φ_SS S² − (δ+α) φ_SD S·D − (δ+α) φ_SN S·N
//! Ḋ = (1−PMD) S/TOF − δ S·D + δ S·N − φ_DD D² − φ_DN D·N + Ḟ_d,D(i+1) − Ḟ_d,D(i)
//! Ṅ = n_SS α_a φ_SS S² + n_SD α φ_SD S·D + n_SN α φ_SN S·N
//!     + n_DD φ_DD D² + n_DN φ_DN D·N + n_NN φ_NN N² + Ḟ_d,N(i+1) − Ḟ_d,N(i)
//! ```
//!
//! where the `n_XY` are fragment counts per collision and the drag fluxes
//! transfer objects downward shell by shell; the flux into the topmost
//! shell is zero and the outflux of shell 1 reenters (leaves the system).
//!
//! The `δ S·D` and `δ S·N` terms of the derelict equation are evaluated
//! literally by default; `ModelParams::delta_terms_include_phi` switches
//! them to the φ-weighted variant `δ φ_SD S·D` / `δ φ_SN S·N`.
//!
//! The augmented form appends the six per-shell φ blocks to the state and
//! holds them constant (φ̇ = 0); the population part then reads φ from
//! the state instead of the static table, which is what lets a filter
//! treat the collision parameters as estimated quantities.

use serde::{Deserialize, Serialize};

use crate::atmosphere::DensityModel;
use crate::error::{Error, Result};
use crate::params::{BreakupParams, ModelParams, PhiForm, PhiPair};
use crate::scalar::{as_f64, lit, Real, SECONDS_PER_YEAR};
use crate::shell::ShellGrid;
use crate::state::{AugmentedState, PhiValues, PopulationState};

/// Pairwise collision parameter for one shell, 1/(objects·year).
///
/// Radii are taken in meters, the shell volume in km^3; the kinetic form
/// is `π v_rel (r_X + r_Y)² / V` per second, converted to per year. The
/// printed form `π v_rel² (r_X − r_Y) / V` is evaluated literally under
/// the same unit convention.
pub fn phi_pair<T: Real>(
    params: &ModelParams<T>,
    r_x_m: T,
    r_y_m: T,
    volume_km3: T,
) -> Result<T> {
    if volume_km3 <= T::zero() {
        return Err(Error::Domain(format!(
            "shell volume must be > 0, got {}",
            as_f64(volume_km3)
        )));
    }
    if r_x_m < T::zero() || r_y_m < T::zero() {
        return Err(Error::Domain("object radii must be >= 0".into()));
    }
    let m_to_km = lit::<T>(1e-3);
    let rx = r_x_m * m_to_km;
    let ry = r_y_m * m_to_km;
    let per_second = match params.phi_form {
        PhiForm::Printed => T::pi() * params.v_rel * params.v_rel * (rx - ry) / volume_km3,
        PhiForm::Kinetic => {
            let sum = rx + ry;
            T::pi() * params.v_rel * sum * sum / volume_km3
        }
    };
    Ok(per_second * lit(SECONDS_PER_YEAR))
}

/// Fragment count for a collision between masses `m1` and `m2` (kg) at
/// characteristic-length cutoff `lc_min` (m):
/// `coefficient · ((m1+m2)/m_ref)^mass_exponent · lc_min^(−lc_exponent)`.
pub fn fragment_count<T: Real>(breakup: &BreakupParams<T>, m1: T, m2: T, lc_min: T) -> Result<T> {
    if m1 <= T::zero() || m2 <= T::zero() {
        return Err(Error::Domain("colliding masses must be > 0".into()));
    }
    if lc_min <= T::zero() {
        return Err(Error::Domain("lc_min must be > 0".into()));
    }
    let mass = (m1 + m2) / breakup.m_ref;
    Ok(breakup.coefficient * mass.powf(breakup.mass_exponent) * lc_min.powf(-breakup.lc_exponent))
}

/// Static per-shell φ values from the configured form and species radii.
pub fn static_phi_values<T: Real>(
    params: &ModelParams<T>,
    grid: &ShellGrid<T>,
) -> Result<PhiValues<T>> {
    let mut phis = PhiValues::zeros(grid.n_shells);
    for i in 1..=grid.n_shells {
        let volume = grid.volume(i)?;
        for pair in PhiPair::ALL {
            let (a, b) = pair.species();
            let value = phi_pair(
                params,
                params.species.get(a).radius,
                params.species.get(b).radius,
                volume,
            )?;
            phis.pair_mut(pair)[i - 1] = value;
        }
    }
    Ok(phis)
}

/// Fragment counts per collision for each species pair, precomputed from
/// the breakup law at its configured cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragmentTable<T> {
    pub ss: T,
    pub sd: T,
    pub sn: T,
    pub dd: T,
    pub dn: T,
    pub nn: T,
}

impl<T: Real> FragmentTable<T> {
    pub fn from_params(params: &ModelParams<T>) -> Result<Self> {
        let b = &params.breakup;
        let m = |p: PhiPair| {
            let (x, y) = p.species();
            fragment_count(
                b,
                params.species.get(x).mass,
                params.species.get(y).mass,
                b.lc_min,
            )
        };
        Ok(Self {
            ss: m(PhiPair::Ss)?,
            sd: m(PhiPair::Sd)?,
            sn: m(PhiPair::Sn)?,
            dd: m(PhiPair::Dd)?,
            dn: m(PhiPair::Dn)?,
            nn: m(PhiPair::Nn)?,
        })
    }

    pub fn pair(&self, pair: PhiPair) -> T {
        match pair {
            PhiPair::Ss => self.ss,
            PhiPair::Sd => self.sd,
            PhiPair::Sn => self.sn,
            PhiPair::Dd => self.dd,
            PhiPair::Dn => self.dn,
            PhiPair::Nn => self.nn,
        }
    }
}

/// Borrowed per-pair φ slices, so the same kernel serves both the static
/// table and φ blocks read out of an augmented state.
#[derive(Debug, Clone, Copy)]
pub struct PhiSlices<'a, T> {
    pub ss: &'a [T],
    pub sd: &'a [T],
    pub sn: &'a [T],
    pub dd: &'a [T],
    pub dn: &'a [T],
    pub nn: &'a [T],
}

impl<'a, T: Real> PhiSlices<'a, T> {
    pub fn from_values(phis: &'a PhiValues<T>) -> Self {
        Self {
            ss: &phis.ss,
            sd: &phis.sd,
            sn: &phis.sn,
            dd: &phis.dd,
            dn: &phis.dn,
            nn: &phis.nn,
        }
    }

    pub fn from_augmented(aug: &'a AugmentedState<T>) -> Self {
        Self {
            ss: aug.phi_block(PhiPair::Ss),
            sd: aug.phi_block(PhiPair::Sd),
            sn: aug.phi_block(PhiPair::Sn),
            dd: aug.phi_block(PhiPair::Dd),
            dn: aug.phi_block(PhiPair::Dn),
            nn: aug.phi_block(PhiPair::Nn),
        }
    }
}

/// The assembled model: parameters, grid, atmosphere, and the precomputed
/// launch rates, fragment counts, and static φ table.
///
/// All methods are pure; the struct is immutable after construction and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct SsemDynamics<T> {
    pub params: ModelParams<T>,
    pub grid: ShellGrid<T>,
    pub atmosphere: DensityModel<T>,
    pub static_phis: PhiValues<T>,
    pub fragments: FragmentTable<T>,
    pub launch: Vec<T>,
}

impl<T: Real> SsemDynamics<T> {
    pub fn new(
        params: ModelParams<T>,
        grid: ShellGrid<T>,
        atmosphere: DensityModel<T>,
    ) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        atmosphere.validate()?;
        let static_phis = static_phi_values(&params, &grid)?;
        let fragments = FragmentTable::from_params(&params)?;
        let launch = params.launch_rates(&grid)?;
        Ok(Self {
            params,
            grid,
            atmosphere,
            static_phis,
            fragments,
            launch,
        })
    }

    /// Replaces the static φ table (used by tests and scenario studies).
    pub fn with_static_phis(mut self, phis: PhiValues<T>) -> Result<Self> {
        if phis.n_shells() != self.grid.n_shells {
            return Err(Error::Shape {
                what: "static phi table",
                expected: self.grid.n_shells,
                got: phis.n_shells(),
            });
        }
        self.static_phis = phis;
        Ok(self)
    }

    fn check_pop_shape(&self, pop: &PopulationState<T>) -> Result<()> {
        if pop.n_shells() != self.grid.n_shells {
            return Err(Error::Shape {
                what: "population state",
                expected: self.grid.n_shells,
                got: pop.n_shells(),
            });
        }
        Ok(())
    }

    /// Shared derivative kernel. `include_collisions` drops every φ term,
    /// which is how the ensemble propagates members between sampled
    /// collision events.
    pub fn sdn_derivative(
        &self,
        s: &[T],
        d: &[T],
        n: &[T],
        phis: &PhiSlices<'_, T>,
        t: T,
        include_collisions: bool,
    ) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
        let n_shells = self.grid.n_shells;
        let p = &self.params;
        let one = T::one();

        // Downward drag fluxes for the uncontrolled species; index k is
        // shell k+1. The flux above the top shell is zero.
        let mut flux_d = vec![T::zero(); n_shells + 1];
        let mut flux_n = vec![T::zero(); n_shells + 1];
        if p.drag_enabled {
            for i in 1..=n_shells {
                flux_d[i - 1] =
                    self.atmosphere
                        .drag_flux(&p.species.d, d[i - 1], &self.grid, i, t)?;
                flux_n[i - 1] =
                    self.atmosphere
                        .drag_flux(&p.species.n, n[i - 1], &self.grid, i, t)?;
            }
        }

        let mut ds = vec![T::zero(); n_shells];
        let mut dd = vec![T::zero(); n_shells];
        let mut dn = vec![T::zero(); n_shells];
        for i in 0..n_shells {
            let (si, di, ni) = (s[i], d[i], n[i]);
            let retire = si / p.tof;

            let mut s_dot = self.launch[i] - retire;
            let mut d_dot = (one - p.pmd) * retire;
            let mut n_dot = T::zero();

            if include_collisions {
                let ss = phis.ss[i] * si * si;
                let sd = phis.sd[i] * si * di;
                let sn = phis.sn[i] * si * ni;
                let dd_t = phis.dd[i] * di * di;
                let dn_t = phis.dn[i] * di * ni;
                let nn = phis.nn[i] * ni * ni;

                s_dot = s_dot - p.alpha_a * ss - (p.delta + p.alpha) * (sd + sn);

                let (disabling_sd, disabling_sn) = if p.delta_terms_include_phi {
                    (p.delta * sd, p.delta * sn)
                } else {
                    (p.delta * si * di, p.delta * si * ni)
                };
                d_dot = d_dot - disabling_sd + disabling_sn - dd_t - dn_t;

                n_dot = self.fragments.ss * p.alpha_a * ss
                    + self.fragments.sd * p.alpha * sd
                    + self.fragments.sn * p.alpha * sn
                    + self.fragments.dd * dd_t
                    + self.fragments.dn * dn_t
                    + self.fragments.nn * nn;
            }

            d_dot = d_dot + flux_d[i + 1] - flux_d[i];
            n_dot = n_dot + flux_n[i + 1] - flux_n[i];

            ds[i] = s_dot;
            dd[i] = d_dot;
            dn[i] = n_dot;
        }
        Ok((ds, dd, dn))
    }

    /// Three-species right-hand side with the static φ table.
    pub fn rhs_three_species(&self, x: &PopulationState<T>, t: T) -> Result<PopulationState<T>> {
        self.check_pop_shape(x)?;
        let phis = PhiSlices::from_values(&self.static_phis);
        let (s, d, n) = self.sdn_derivative(&x.s, &x.d, &x.n, &phis, t, true)?;
        Ok(PopulationState { s, d, n })
    }

    /// Three-species right-hand side with every collision term removed.
    pub fn rhs_collision_free(&self, x: &PopulationState<T>, t: T) -> Result<PopulationState<T>> {
        self.check_pop_shape(x)?;
        let phis = PhiSlices::from_values(&self.static_phis);
        let (s, d, n) = self.sdn_derivative(&x.s, &x.d, &x.n, &phis, t, false)?;
        Ok(PopulationState { s, d, n })
    }

    /// Augmented right-hand side: the population part reads φ from the
    /// state's φ blocks, and every φ̇ entry is zero.
    pub fn rhs_augmented(&self, x: &AugmentedState<T>, t: T) -> Result<AugmentedState<T>> {
        let n_shells = self.grid.n_shells;
        if x.n_shells() != n_shells {
            return Err(Error::Shape {
                what: "augmented state",
                expected: AugmentedState::<T>::BLOCKS * n_shells,
                got: x.len(),
            });
        }
        let pop = x.population_slice();
        let phis = PhiSlices::from_augmented(x);
        let (ds, dd, dn) = self.sdn_derivative(
            &pop[..n_shells],
            &pop[n_shells..2 * n_shells],
            &pop[2 * n_shells..],
            &phis,
            t,
            true,
        )?;
        let mut deriv = Vec::with_capacity(AugmentedState::<T>::BLOCKS * n_shells);
        deriv.extend_from_slice(&ds);
        deriv.extend_from_slice(&dd);
        deriv.extend_from_slice(&dn);
        deriv.resize(AugmentedState::<T>::BLOCKS * n_shells, T::zero());
        AugmentedState::from_vec(deriv, n_shells)
    }

    /// Flat adapter over [`Self::rhs_three_species`] for the integrator.
    pub fn rhs_three_species_flat(&self, flat: &[T], t: T) -> Result<Vec<T>> {
        let pop = PopulationState::from_flat(flat, self.grid.n_shells)?;
        Ok(self.rhs_three_species(&pop, t)?.to_flat())
    }

    /// Flat adapter over [`Self::rhs_collision_free`] for the integrator.
    pub fn rhs_collision_free_flat(&self, flat: &[T], t: T) -> Result<Vec<T>> {
        let pop = PopulationState::from_flat(flat, self.grid.n_shells)?;
        Ok(self.rhs_collision_free(&pop, t)?.to_flat())
    }

    /// Flat adapter over [`Self::rhs_augmented`] for the integrator.
    pub fn rhs_augmented_flat(&self, flat: &[T], t: T) -> Result<Vec<T>> {
        let aug = AugmentedState::from_vec(flat.to_vec(), self.grid.n_shells)?;
        Ok(self.rhs_augmented(&aug, t)?.into_vec())
    }
}
