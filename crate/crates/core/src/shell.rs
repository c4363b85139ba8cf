//! Altitude-shell discretization of the LEO band.
//!
//! The population model bins LEO into `n_shells` spherical shells of
//! height `dh`, starting at `h_min` above the Earth surface. Shell
//! indices are 1-based throughout, matching the usual shell-number
//! convention in source-sink population models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real, EARTH_RADIUS_KM};

/// Discretization of LEO into altitude shells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct ShellGrid<T> {
    /// Altitude of the bottom of shell 1, km.
    pub h_min: T,
    /// Number of shells.
    pub n_shells: usize,
    /// Shell height, km.
    pub dh: T,
    /// Earth radius, km.
    pub earth_radius: T,
}

impl<T: Real> Default for ShellGrid<T> {
    /// 36 shells of 50 km spanning 200-2000 km.
    fn default() -> Self {
        Self {
            h_min: lit(200.0),
            n_shells: 36,
            dh: lit(50.0),
            earth_radius: lit(EARTH_RADIUS_KM),
        }
    }
}

impl<T: Real> ShellGrid<T> {
    pub fn new(h_min: T, n_shells: usize, dh: T, earth_radius: T) -> Result<Self> {
        let grid = Self {
            h_min,
            n_shells,
            dh,
            earth_radius,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_shells < 1 {
            return Err(Error::Config("n_shells must be >= 1".into()));
        }
        if self.dh <= T::zero() || self.h_min <= T::zero() || self.earth_radius <= T::zero() {
            return Err(Error::Config(
                "shell grid requires dh > 0, h_min > 0, earth_radius > 0".into(),
            ));
        }
        Ok(())
    }

    /// Checks a 1-based shell index.
    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= 1 && i <= self.n_shells {
            Ok(())
        } else {
            Err(Error::ShellIndex {
                index: i,
                n_shells: self.n_shells,
            })
        }
    }

    /// Altitude of the bottom of shell `i`, km.
    pub fn lower_altitude(&self, i: usize) -> Result<T> {
        self.check_index(i)?;
        Ok(self.h_min + lit::<T>((i - 1) as f64) * self.dh)
    }

    /// Altitude of the middle of shell `i`, km.
    pub fn mid_altitude(&self, i: usize) -> Result<T> {
        Ok(self.lower_altitude(i)? + self.dh * lit(0.5))
    }

    /// Altitude span covered by the grid, km.
    pub fn span(&self) -> (T, T) {
        (
            self.h_min,
            self.h_min + lit::<T>(self.n_shells as f64) * self.dh,
        )
    }

    /// Volume of shell `i` in km^3: the spherical shell between radii
    /// `R + h_i` and `R + h_i + dh`.
    pub fn volume(&self, i: usize) -> Result<T> {
        let r_lo = self.earth_radius + self.lower_altitude(i)?;
        let r_hi = r_lo + self.dh;
        let four_thirds_pi = lit::<T>(4.0 / 3.0) * T::pi();
        Ok(four_thirds_pi * (r_hi * r_hi * r_hi - r_lo * r_lo * r_lo))
    }
}
