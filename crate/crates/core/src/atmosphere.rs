//! Atmospheric density and the inter-shell drag flux.
//!
//! Density comes from a piecewise-exponential profile, optionally
//! modulated by a sinusoidal solar-cycle factor. Decay converts density
//! into an altitude loss rate for a circular orbit,
//!
//! ```text
//! ȧ = ρ(h, t) · (C_d A / m) · sqrt(μ a)
//! ```
//!
//! evaluated at shell mid-altitude, and the drag flux out of shell `i`
//! is `pop · ȧ / dh` objects/year. Only uncontrolled species (derelicts
//! and debris) feel drag; active satellites station-keep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SpeciesParams;
use crate::scalar::{as_f64, lit, Real, MU_EARTH_M3_S2, SECONDS_PER_YEAR};
use crate::shell::ShellGrid;

/// One row of the piecewise-exponential density table:
/// ρ(h) = rho0 · exp(−(h − h0)/scale_height) for h in this segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRow<T> {
    /// Segment base altitude, km.
    pub h0: T,
    /// Density at the segment base, kg/m^3.
    pub rho0: T,
    /// Scale height, km.
    pub scale_height: T,
}

/// Sinusoidal solar-cycle modulation of the static profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct SolarCycle<T> {
    /// Cycle period, years.
    pub period: T,
    /// Fractional amplitude in [0, 1).
    pub amplitude: T,
    /// Phase offset, years.
    pub phase: T,
}

impl<T: Real> Default for SolarCycle<T> {
    fn default() -> Self {
        Self {
            period: lit(11.0),
            amplitude: lit(0.6),
            phase: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtmosphereKind {
    /// Time-invariant piecewise-exponential profile.
    StaticExponential,
    /// The same profile times `1 + amplitude·sin(2π(t−phase)/period)`.
    SolarModulated,
}

/// Atmospheric density model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct DensityModel<T> {
    pub kind: AtmosphereKind,
    /// Piecewise segments ordered by increasing `h0`. The last segment
    /// extends upward without bound; altitudes below the first segment
    /// are outside the table span.
    pub table: Vec<DensityRow<T>>,
    #[serde(default)]
    pub solar: SolarCycle<T>,
    /// Cap on the per-shell outflow rate `decay_rate/dh`, 1/years.
    /// Below ~300 km the uncapped rate reaches hundreds per year, which
    /// is reentry within days; a shell draining faster than the cap is
    /// empty within a step either way, and the cap keeps the transport
    /// ODE integrable at 0.1-year substeps.
    #[serde(default = "default_drag_rate_cap")]
    pub drag_rate_cap: f64,
}

fn default_drag_rate_cap() -> f64 {
    10.0
}

impl<T: Real> DensityModel<T> {
    /// Coarse default profile: eight segments spanning 200-2000 km with
    /// scale heights growing from about 40 km to about 270 km. Nothing
    /// downstream depends on the exact numbers; any positive, broadly
    /// decreasing profile behaves the same.
    pub fn default_table() -> Vec<DensityRow<T>> {
        let row = |h0: f64, rho0: f64, scale_height: f64| DensityRow {
            h0: lit(h0),
            rho0: lit(rho0),
            scale_height: lit(scale_height),
        };
        vec![
            row(200.0, 2.5e-10, 40.0),
            row(300.0, 2.0e-11, 50.0),
            row(400.0, 3.0e-12, 60.0),
            row(500.0, 6.0e-13, 70.0),
            row(600.0, 1.5e-13, 90.0),
            row(800.0, 2.0e-14, 120.0),
            row(1000.0, 5.0e-15, 180.0),
            row(1500.0, 5.0e-16, 270.0),
        ]
    }

    pub fn static_exponential() -> Self {
        Self {
            kind: AtmosphereKind::StaticExponential,
            table: Self::default_table(),
            solar: SolarCycle::default(),
            drag_rate_cap: default_drag_rate_cap(),
        }
    }

    pub fn solar_modulated(solar: SolarCycle<T>) -> Self {
        Self {
            kind: AtmosphereKind::SolarModulated,
            table: Self::default_table(),
            solar,
            drag_rate_cap: default_drag_rate_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.table.is_empty() {
            return Err(Error::Config("density table must not be empty".into()));
        }
        for w in self.table.windows(2) {
            if w[1].h0 <= w[0].h0 {
                return Err(Error::Config(
                    "density table rows must have strictly increasing h0".into(),
                ));
            }
        }
        for row in &self.table {
            if row.rho0 <= T::zero() || row.scale_height <= T::zero() {
                return Err(Error::Config(
                    "density table requires rho0 > 0 and scale_height > 0".into(),
                ));
            }
        }
        if self.solar.amplitude < T::zero() || self.solar.amplitude >= T::one() {
            return Err(Error::Config("solar amplitude must lie in [0, 1)".into()));
        }
        if self.kind == AtmosphereKind::SolarModulated && self.solar.period <= T::zero() {
            return Err(Error::Config("solar period must be > 0".into()));
        }
        Ok(())
    }

    /// Density in kg/m^3 at altitude `h` km and time `t` years.
    pub fn density(&self, h: T, t: T) -> Result<T> {
        let first = self.table.first().expect("validated non-empty table");
        if h < first.h0 {
            return Err(Error::Domain(format!(
                "altitude {} km below density table span starting at {} km",
                as_f64(h),
                as_f64(first.h0)
            )));
        }
        let row = self
            .table
            .iter()
            .rev()
            .find(|row| h >= row.h0)
            .expect("h >= first.h0");
        let base = row.rho0 * (-(h - row.h0) / row.scale_height).exp();
        Ok(base * self.solar_factor(t))
    }

    fn solar_factor(&self, t: T) -> T {
        match self.kind {
            AtmosphereKind::StaticExponential => T::one(),
            AtmosphereKind::SolarModulated => {
                let two_pi = lit::<T>(2.0) * T::pi();
                T::one()
                    + self.solar.amplitude
                        * (two_pi * (t - self.solar.phase) / self.solar.period).sin()
            }
        }
    }

    /// Altitude loss rate in km/year for a circular orbit of the given
    /// species at altitude `h` km.
    pub fn decay_rate(&self, species: &SpeciesParams<T>, grid: &ShellGrid<T>, h: T, t: T) -> Result<T> {
        let rho = self.density(h, t)?;
        let a_m = (grid.earth_radius + h) * lit(1000.0);
        let speed_area = (lit::<T>(MU_EARTH_M3_S2) * a_m).sqrt();
        let adot_m_per_s = rho * species.ballistic_factor() * speed_area;
        Ok(adot_m_per_s * lit(SECONDS_PER_YEAR / 1000.0))
    }

    /// Drag flux Ḟ_d^(i) out of shell `i` downward, objects/year, for a
    /// population `pop` of the given species in that shell:
    /// `pop · decay_rate(h_mid)/dh`, with the rate factor capped at
    /// `drag_rate_cap`.
    pub fn drag_flux(
        &self,
        species: &SpeciesParams<T>,
        pop: T,
        grid: &ShellGrid<T>,
        i: usize,
        t: T,
    ) -> Result<T> {
        let h = grid.mid_altitude(i)?;
        let rate = self.decay_rate(species, grid, h, t)? / grid.dh;
        Ok(pop * rate.min(lit(self.drag_rate_cap)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SpeciesSet;
    use approx::assert_relative_eq;

    fn grid() -> ShellGrid<f64> {
        ShellGrid::default()
    }

    #[test]
    fn static_model_is_time_invariant() {
        let model = DensityModel::<f64>::static_exponential();
        for h in [200.0, 450.0, 999.0, 1999.0] {
            assert_eq!(model.density(h, 0.0).unwrap(), model.density(h, 50.0).unwrap());
        }
    }

    #[test]
    fn density_positive_over_grid_span() {
        let model = DensityModel::<f64>::solar_modulated(SolarCycle::default());
        model.validate().unwrap();
        let g = grid();
        let (lo, hi) = g.span();
        let mut h = lo;
        while h <= hi {
            for t in [0.0, 2.75, 5.5, 8.25] {
                assert!(model.density(h, t).unwrap() > 0.0);
            }
            h += 25.0;
        }
    }

    #[test]
    fn zero_amplitude_solar_equals_static() {
        let mut solar = SolarCycle::default();
        solar.amplitude = 0.0;
        let modulated = DensityModel::<f64>::solar_modulated(solar);
        let static_model = DensityModel::<f64>::static_exponential();
        for h in [250.0, 700.0, 1500.0] {
            for t in [0.0, 3.3, 7.9] {
                assert_eq!(
                    modulated.density(h, t).unwrap(),
                    static_model.density(h, t).unwrap()
                );
            }
        }
    }

    #[test]
    fn solar_max_min_ratio_over_one_period() {
        // (1 + 0.5)/(1 − 0.5) = 3.
        let solar = SolarCycle {
            period: 11.0,
            amplitude: 0.5,
            phase: 0.0,
        };
        let model = DensityModel::<f64>::solar_modulated(solar);
        let h = 400.0;
        let mut max = f64::MIN;
        let mut min = f64::MAX;
        for k in 0..=11_000 {
            let t = 11.0 * k as f64 / 11_000.0;
            let rho = model.density(h, t).unwrap();
            max = max.max(rho);
            min = min.min(rho);
        }
        assert_relative_eq!(max / min, 3.0, max_relative = 1e-6);
    }

    #[test]
    fn below_table_span_is_domain_error() {
        let model = DensityModel::<f64>::static_exponential();
        assert!(model.density(150.0, 0.0).is_err());
    }

    #[test]
    fn decay_rate_matches_hand_evaluation() {
        // ρ = 1e-11 kg/m³, C_d·A/m = 0.022 m²/kg, h = 400 km:
        // ȧ = ρ·B·sqrt(μ·a) = 1.14352783e-2 m/s = 360.8699397 km/yr.
        let mut model = DensityModel::<f64>::static_exponential();
        model.table = vec![DensityRow {
            h0: 200.0,
            rho0: 1e-11,
            scale_height: 1e12, // effectively constant density
        }];
        let species = SpeciesSet::<f64>::default().s;
        assert_relative_eq!(species.ballistic_factor(), 0.022, max_relative = 1e-12);
        let rate = model.decay_rate(&species, &grid(), 400.0, 0.0).unwrap();
        // exp(−200/1e12) ≈ 1 − 2e-10; tolerance covers it.
        assert_relative_eq!(rate, 360.86993971661377, max_relative = 1e-6);
    }

    #[test]
    fn decay_rate_scales_linearly_with_area_to_mass() {
        let model = DensityModel::<f64>::static_exponential();
        let g = grid();
        let mut species = SpeciesSet::<f64>::default().d;
        let base = model.decay_rate(&species, &g, 500.0, 0.0).unwrap();
        species.area *= 2.0;
        let doubled = model.decay_rate(&species, &g, 500.0, 0.0).unwrap();
        assert_relative_eq!(doubled, 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn decay_faster_at_low_altitude() {
        let model = DensityModel::<f64>::static_exponential();
        let g = grid();
        let species = SpeciesSet::<f64>::default().n;
        let low = model.decay_rate(&species, &g, 200.0, 0.0).unwrap();
        let high = model.decay_rate(&species, &g, 2000.0, 0.0).unwrap();
        assert!(low > high);
    }

    #[test]
    fn drag_flux_linear_in_population() {
        let model = DensityModel::<f64>::static_exponential();
        let g = grid();
        let species = SpeciesSet::<f64>::default().n;
        assert_eq!(model.drag_flux(&species, 0.0, &g, 3, 0.0).unwrap(), 0.0);
        let one = model.drag_flux(&species, 750.0, &g, 3, 0.0).unwrap();
        let two = model.drag_flux(&species, 1500.0, &g, 3, 0.0).unwrap();
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-12);
    }
}
