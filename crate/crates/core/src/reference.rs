//! Bundled reference table of steady-state collision-parameter means.
//!
//! The table lists published per-shell φ̄ values (units of 1e-8 per
//! year) from two estimation runs over the 36-shell LEO grid, one under
//! a static exponential atmosphere ("exp" columns) and one under a
//! JB2008 atmosphere ("jb" columns). It is used to validate report
//! formatting and to place model outputs side by side with a known
//! magnitude scale.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::PhiPair;
use crate::scalar::{lit, Real};

const BUNDLED_CSV: &str = include_str!("../data/phi_reference.csv");

/// Which atmosphere column of the table to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceColumn {
    Exponential,
    Jb2008,
}

/// One table row; values in units of 1e-8 per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiReferenceRow {
    pub shell: usize,
    pub ss_exp: f64,
    pub ss_jb: f64,
    pub sd_exp: f64,
    pub sd_jb: f64,
    pub sn_exp: f64,
    pub sn_jb: f64,
    pub dd_exp: f64,
    pub dd_jb: f64,
    pub dn_exp: f64,
    pub dn_jb: f64,
    pub nn_exp: f64,
    pub nn_jb: f64,
}

impl PhiReferenceRow {
    pub fn value(&self, pair: PhiPair, column: ReferenceColumn) -> f64 {
        use ReferenceColumn::*;
        match (pair, column) {
            (PhiPair::Ss, Exponential) => self.ss_exp,
            (PhiPair::Ss, Jb2008) => self.ss_jb,
            (PhiPair::Sd, Exponential) => self.sd_exp,
            (PhiPair::Sd, Jb2008) => self.sd_jb,
            (PhiPair::Sn, Exponential) => self.sn_exp,
            (PhiPair::Sn, Jb2008) => self.sn_jb,
            (PhiPair::Dd, Exponential) => self.dd_exp,
            (PhiPair::Dd, Jb2008) => self.dd_jb,
            (PhiPair::Dn, Exponential) => self.dn_exp,
            (PhiPair::Dn, Jb2008) => self.dn_jb,
            (PhiPair::Nn, Exponential) => self.nn_exp,
            (PhiPair::Nn, Jb2008) => self.nn_jb,
        }
    }
}

/// The parsed reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiReference {
    pub rows: Vec<PhiReferenceRow>,
}

impl PhiReference {
    /// Parses the table bundled with the crate.
    pub fn bundled() -> Result<Self> {
        Self::from_csv(BUNDLED_CSV.as_bytes())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn from_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows: Vec<PhiReferenceRow> = Vec::new();
        for row in reader.deserialize() {
            rows.push(row?);
        }
        let table = Self { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::EmptyData("phi reference table is empty".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.shell != k + 1 {
                return Err(Error::ConfigFile(format!(
                    "phi reference row {} has shell {}, expected {}",
                    k,
                    row.shell,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn row(&self, shell: usize) -> Option<&PhiReferenceRow> {
        self.rows.get(shell.checked_sub(1)?)
    }

    /// Table value in units of 1e-8 per year.
    pub fn value(&self, shell: usize, pair: PhiPair, column: ReferenceColumn) -> Option<f64> {
        Some(self.row(shell)?.value(pair, column))
    }

    /// Table value converted to physical 1/(objects·year).
    pub fn physical<T: Real>(
        &self,
        shell: usize,
        pair: PhiPair,
        column: ReferenceColumn,
    ) -> Option<T> {
        self.value(shell, pair, column)
            .map(|v| lit::<T>(v) * lit::<T>(1e-8))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_parses_and_validates() {
        let table = PhiReference::bundled().unwrap();
        assert_eq!(table.rows.len(), 36);
    }

    #[test]
    fn shell_20_jb_ss_round_trips() {
        let table = PhiReference::bundled().unwrap();
        let v = table
            .value(20, PhiPair::Ss, ReferenceColumn::Jb2008)
            .unwrap();
        assert_eq!(v, 3.97);
        let physical: f64 = table
            .physical(20, PhiPair::Ss, ReferenceColumn::Jb2008)
            .unwrap();
        assert!((physical - 3.97e-8).abs() < 1e-18);
    }

    #[test]
    fn most_magnitudes_sit_at_the_1e8_scale() {
        // The uppermost shell is a known outlier; the bulk of the table
        // lies within a few tens of 1e-8.
        let table = PhiReference::bundled().unwrap();
        for row in &table.rows[..35] {
            for pair in PhiPair::ALL {
                for column in [ReferenceColumn::Exponential, ReferenceColumn::Jb2008] {
                    assert!(row.value(pair, column).abs() < 20.0);
                }
            }
        }
    }

    #[test]
    fn out_of_order_rows_rejected() {
        let csv = "shell,ss_exp,ss_jb,sd_exp,sd_jb,sn_exp,sn_jb,dd_exp,dd_jb,dn_exp,dn_jb,nn_exp,nn_jb\n2,1,1,1,1,1,1,1,1,1,1,1,1\n";
        assert!(PhiReference::from_csv(csv.as_bytes()).is_err());
    }
}
