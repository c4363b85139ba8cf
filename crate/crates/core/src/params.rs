//! Model constants: species properties, interaction probabilities,
//! disposal parameters, launch specification, and breakup-law constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::shell::ShellGrid;

/// Physical properties of one object species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct SpeciesParams<T> {
    /// Mean object radius, m.
    pub radius: T,
    /// Mean object mass, kg.
    pub mass: T,
    /// Mean cross-sectional area, m^2.
    pub area: T,
    /// Drag coefficient, dimensionless.
    pub drag_coeff: T,
    /// Whether the species station-keeps (active satellites do not decay).
    pub is_active: bool,
}

impl<T: Real> SpeciesParams<T> {
    /// Active satellites: 1 m radius, 500 kg, A/m = 0.01 m^2/kg.
    pub fn active_satellite() -> Self {
        Self {
            radius: lit(1.0),
            mass: lit(500.0),
            area: lit(5.0),
            drag_coeff: lit(2.2),
            is_active: true,
        }
    }

    /// Derelict satellites: same body as an active satellite, no control.
    pub fn derelict_satellite() -> Self {
        Self {
            is_active: false,
            ..Self::active_satellite()
        }
    }

    /// Debris fragments: 5 cm radius, 1 kg, A/m = 0.1 m^2/kg.
    pub fn debris() -> Self {
        Self {
            radius: lit(0.05),
            mass: lit(1.0),
            area: lit(0.1),
            drag_coeff: lit(2.2),
            is_active: false,
        }
    }

    /// Ballistic factor C_d * A / m in m^2/kg.
    pub fn ballistic_factor(&self) -> T {
        self.drag_coeff * self.area / self.mass
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.radius <= T::zero()
            || self.mass <= T::zero()
            || self.area <= T::zero()
            || self.drag_coeff <= T::zero()
        {
            return Err(Error::Config(format!(
                "species `{name}` requires radius, mass, area, drag_coeff > 0"
            )));
        }
        Ok(())
    }
}

impl<T: Real> Default for SpeciesParams<T> {
    fn default() -> Self {
        Self::active_satellite()
    }
}

/// The three species of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    /// Active satellites.
    S,
    /// Derelict satellites.
    D,
    /// Debris.
    N,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::S, Species::D, Species::N];

    pub fn label(self) -> &'static str {
        match self {
            Species::S => "s",
            Species::D => "d",
            Species::N => "n",
        }
    }
}

/// Unordered species pair indexing the collision parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiPair {
    Ss,
    Sd,
    Sn,
    Dd,
    Dn,
    Nn,
}

impl PhiPair {
    /// Block order used by the augmented state layout.
    pub const ALL: [PhiPair; 6] = [
        PhiPair::Ss,
        PhiPair::Sd,
        PhiPair::Sn,
        PhiPair::Dd,
        PhiPair::Dn,
        PhiPair::Nn,
    ];

    pub fn species(self) -> (Species, Species) {
        match self {
            PhiPair::Ss => (Species::S, Species::S),
            PhiPair::Sd => (Species::S, Species::D),
            PhiPair::Sn => (Species::S, Species::N),
            PhiPair::Dd => (Species::D, Species::D),
            PhiPair::Dn => (Species::D, Species::N),
            PhiPair::Nn => (Species::N, Species::N),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PhiPair::Ss => "ss",
            PhiPair::Sd => "sd",
            PhiPair::Sn => "sn",
            PhiPair::Dd => "dd",
            PhiPair::Dn => "dn",
            PhiPair::Nn => "nn",
        }
    }
}

/// The three species parameter sets together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct SpeciesSet<T> {
    pub s: SpeciesParams<T>,
    pub d: SpeciesParams<T>,
    pub n: SpeciesParams<T>,
}

impl<T: Real> Default for SpeciesSet<T> {
    fn default() -> Self {
        Self {
            s: SpeciesParams::active_satellite(),
            d: SpeciesParams::derelict_satellite(),
            n: SpeciesParams::debris(),
        }
    }
}

impl<T: Real> SpeciesSet<T> {
    pub fn get(&self, species: Species) -> &SpeciesParams<T> {
        match species {
            Species::S => &self.s,
            Species::D => &self.d,
            Species::N => &self.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.s.validate("s")?;
        self.d.validate("d")?;
        self.n.validate("n")
    }
}

/// Which closed form evaluates the pairwise collision parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiForm {
    /// π v_rel² (r_X − r_Y) / V, evaluated literally. Vanishes for equal
    /// radii and is antisymmetric in the radii; kept for comparison runs.
    Printed,
    /// π v_rel (r_X + r_Y)² / V, the kinetic-gas collision cross-section.
    Kinetic,
}

/// New-launch specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaunchMode<T> {
    /// No new launches.
    Null,
    /// The same rate into every shell, objects/year per shell.
    Constant { rate: T },
    /// A Gaussian profile over shell mid-altitudes, normalized so the
    /// rates sum to `total_rate` objects/year.
    GaussianOverShells { total_rate: T, mu_h: T, sigma_h: T },
}

impl<T> Default for LaunchMode<T> {
    fn default() -> Self {
        LaunchMode::Null
    }
}

/// Constants of the power-law fragment count
/// `coefficient * ((m1+m2)/m_ref)^mass_exponent * lc^(-lc_exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct BreakupParams<T> {
    pub coefficient: T,
    /// Reference mass, kg.
    pub m_ref: T,
    /// Characteristic-length cutoff, m.
    pub lc_min: T,
    pub mass_exponent: T,
    pub lc_exponent: T,
}

impl<T: Real> Default for BreakupParams<T> {
    fn default() -> Self {
        Self {
            coefficient: lit(0.1),
            m_ref: lit(1.0),
            lc_min: lit(0.1),
            mass_exponent: lit(0.75),
            lc_exponent: lit(1.71),
        }
    }
}

/// All scalar constants of the governing equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + serde::Deserialize<'de>"))]
pub struct ModelParams<T> {
    /// Probability that two active objects fail to avoid each other.
    pub alpha_a: T,
    /// Probability that an active object fails to avoid an uncontrolled one.
    pub alpha: T,
    /// Ratio of disabling to lethal debris.
    pub delta: T,
    /// Post-mission disposal success probability.
    pub pmd: T,
    /// Mean active lifetime, years.
    pub tof: T,
    /// Relative collision velocity, km/s.
    pub v_rel: T,
    pub launch: LaunchMode<T>,
    pub breakup: BreakupParams<T>,
    pub phi_form: PhiForm,
    /// When set, the δSD and δSN terms of the derelict equation carry the
    /// corresponding φ factors instead of being evaluated literally.
    pub delta_terms_include_phi: bool,
    /// Master switch for the drag flux terms (scenario studies and
    /// conservation checks turn them off).
    pub drag_enabled: bool,
    pub species: SpeciesSet<T>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            alpha_a: lit(0.01),
            alpha: lit(0.2),
            delta: lit(10.0),
            pmd: lit(0.95),
            tof: lit(5.0),
            v_rel: lit(10.0),
            launch: LaunchMode::Null,
            breakup: BreakupParams::default(),
            phi_form: PhiForm::Kinetic,
            delta_terms_include_phi: false,
            drag_enabled: true,
            species: SpeciesSet::default(),
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: T| v >= T::zero() && v <= T::one();
        if !in_unit(self.alpha_a) || !in_unit(self.alpha) || !in_unit(self.pmd) {
            return Err(Error::Config(
                "alpha_a, alpha, pmd must lie in [0, 1]".into(),
            ));
        }
        if self.tof <= T::zero() || self.v_rel <= T::zero() {
            return Err(Error::Config("tof and v_rel must be > 0".into()));
        }
        if self.delta < T::zero() {
            return Err(Error::Config("delta must be >= 0".into()));
        }
        self.species.validate()
    }

    /// Per-shell launch rates λ^(i), objects/year.
    pub fn launch_rates(&self, grid: &ShellGrid<T>) -> Result<Vec<T>> {
        let n = grid.n_shells;
        match self.launch {
            LaunchMode::Null => Ok(vec![T::zero(); n]),
            LaunchMode::Constant { rate } => Ok(vec![rate; n]),
            LaunchMode::GaussianOverShells {
                total_rate,
                mu_h,
                sigma_h,
            } => {
                if sigma_h <= T::zero() {
                    return Err(Error::Config("launch sigma_h must be > 0".into()));
                }
                let two = lit::<T>(2.0);
                let mut weights = Vec::with_capacity(n);
                for i in 1..=n {
                    let h = grid.mid_altitude(i)?;
                    let z = (h - mu_h) / sigma_h;
                    weights.push((-z * z / two).exp());
                }
                let total: T = weights.iter().copied().fold(T::zero(), |a, b| a + b);
                if total <= T::zero() {
                    return Err(Error::Config(
                        "gaussian launch profile vanishes on every shell".into(),
                    ));
                }
                Ok(weights.into_iter().map(|w| w / total * total_rate).collect())
            }
        }
    }
}
