//! Population and augmented state vectors.
//!
//! The flat augmented layout is species-blocked:
//!
//! ```text
//! [ S_1..n | D_1..n | N_1..n | φSS_1..n | φSD_1..n | φSN_1..n | φDD_1..n | φDN_1..n | φNN_1..n ]
//! ```
//!
//! giving 9·n entries (324 for the 36-shell grid). The first three blocks
//! are the plain three-species state (108 entries for 36 shells).

use crate::error::{Error, Result};
use crate::params::{PhiPair, Species};
use crate::scalar::{is_finite, Real};

/// Per-shell object counts for the three species.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState<T> {
    pub s: Vec<T>,
    pub d: Vec<T>,
    pub n: Vec<T>,
}

impl<T: Real> PopulationState<T> {
    pub fn zeros(n_shells: usize) -> Self {
        Self {
            s: vec![T::zero(); n_shells],
            d: vec![T::zero(); n_shells],
            n: vec![T::zero(); n_shells],
        }
    }

    pub fn new(s: Vec<T>, d: Vec<T>, n: Vec<T>) -> Result<Self> {
        if s.len() != d.len() || s.len() != n.len() {
            return Err(Error::Shape {
                what: "population state",
                expected: s.len(),
                got: d.len().max(n.len()),
            });
        }
        Ok(Self { s, d, n })
    }

    pub fn n_shells(&self) -> usize {
        self.s.len()
    }

    pub fn species(&self, species: Species) -> &[T] {
        match species {
            Species::S => &self.s,
            Species::D => &self.d,
            Species::N => &self.n,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.s.iter().all(|&v| is_finite(v))
            && self.d.iter().all(|&v| is_finite(v))
            && self.n.iter().all(|&v| is_finite(v))
    }

    /// Flattens into the species-blocked layout `[S.., D.., N..]`.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(3 * self.n_shells());
        out.extend_from_slice(&self.s);
        out.extend_from_slice(&self.d);
        out.extend_from_slice(&self.n);
        out
    }

    pub fn from_flat(flat: &[T], n_shells: usize) -> Result<Self> {
        if flat.len() != 3 * n_shells {
            return Err(Error::Shape {
                what: "flat population state",
                expected: 3 * n_shells,
                got: flat.len(),
            });
        }
        Ok(Self {
            s: flat[..n_shells].to_vec(),
            d: flat[n_shells..2 * n_shells].to_vec(),
            n: flat[2 * n_shells..].to_vec(),
        })
    }

    /// Clamps every population to be nonnegative, for reporting.
    pub fn clamped_nonnegative(&self) -> Self {
        let clamp = |v: &[T]| v.iter().map(|&x| x.max(T::zero())).collect();
        Self {
            s: clamp(&self.s),
            d: clamp(&self.d),
            n: clamp(&self.n),
        }
    }
}

/// Per-shell collision parameters for the six species pairs, 1/(objects·year).
#[derive(Debug, Clone, PartialEq)]
pub struct PhiValues<T> {
    pub ss: Vec<T>,
    pub sd: Vec<T>,
    pub sn: Vec<T>,
    pub dd: Vec<T>,
    pub dn: Vec<T>,
    pub nn: Vec<T>,
}

impl<T: Real> PhiValues<T> {
    pub fn zeros(n_shells: usize) -> Self {
        let z = || vec![T::zero(); n_shells];
        Self {
            ss: z(),
            sd: z(),
            sn: z(),
            dd: z(),
            dn: z(),
            nn: z(),
        }
    }

    pub fn n_shells(&self) -> usize {
        self.ss.len()
    }

    pub fn pair(&self, pair: PhiPair) -> &[T] {
        match pair {
            PhiPair::Ss => &self.ss,
            PhiPair::Sd => &self.sd,
            PhiPair::Sn => &self.sn,
            PhiPair::Dd => &self.dd,
            PhiPair::Dn => &self.dn,
            PhiPair::Nn => &self.nn,
        }
    }

    pub fn pair_mut(&mut self, pair: PhiPair) -> &mut Vec<T> {
        match pair {
            PhiPair::Ss => &mut self.ss,
            PhiPair::Sd => &mut self.sd,
            PhiPair::Sn => &mut self.sn,
            PhiPair::Dd => &mut self.dd,
            PhiPair::Dn => &mut self.dn,
            PhiPair::Nn => &mut self.nn,
        }
    }
}

/// Flat augmented state: populations plus the six φ blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState<T> {
    values: Vec<T>,
    n_shells: usize,
}

impl<T: Real> AugmentedState<T> {
    pub const BLOCKS: usize = 9;

    /// Packs populations and φ values into the flat blocked layout.
    pub fn pack(pop: &PopulationState<T>, phis: &PhiValues<T>) -> Result<Self> {
        let n = pop.n_shells();
        if phis.n_shells() != n {
            return Err(Error::Shape {
                what: "phi values",
                expected: n,
                got: phis.n_shells(),
            });
        }
        let mut values = Vec::with_capacity(Self::BLOCKS * n);
        values.extend_from_slice(&pop.s);
        values.extend_from_slice(&pop.d);
        values.extend_from_slice(&pop.n);
        for pair in PhiPair::ALL {
            values.extend_from_slice(phis.pair(pair));
        }
        Ok(Self {
            values,
            n_shells: n,
        })
    }

    pub fn from_vec(values: Vec<T>, n_shells: usize) -> Result<Self> {
        if values.len() != Self::BLOCKS * n_shells {
            return Err(Error::Shape {
                what: "augmented state",
                expected: Self::BLOCKS * n_shells,
                got: values.len(),
            });
        }
        Ok(Self { values, n_shells })
    }

    /// Splits back into populations and φ values.
    pub fn unpack(&self) -> (PopulationState<T>, PhiValues<T>) {
        let n = self.n_shells;
        let block = |b: usize| self.values[b * n..(b + 1) * n].to_vec();
        let pop = PopulationState {
            s: block(0),
            d: block(1),
            n: block(2),
        };
        let phis = PhiValues {
            ss: block(3),
            sd: block(4),
            sn: block(5),
            dd: block(6),
            dn: block(7),
            nn: block(8),
        };
        (pop, phis)
    }

    pub fn n_shells(&self) -> usize {
        self.n_shells
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    /// View of the population part `[S.., D.., N..]`.
    pub fn population_slice(&self) -> &[T] {
        &self.values[..3 * self.n_shells]
    }

    /// View of one φ block.
    pub fn phi_block(&self, pair: PhiPair) -> &[T] {
        let b = 3 + PhiPair::ALL.iter().position(|&p| p == pair).unwrap();
        &self.values[b * self.n_shells..(b + 1) * self.n_shells]
    }
}
