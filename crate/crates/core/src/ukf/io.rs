//! Filter trace serialization: a per-state CSV plus a JSON summary with
//! the steady-state φ̄ table in units of 1e-8.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::{as_f64, lit, Real};
use crate::ukf::FilterTrace;

/// One row of the φ̄ table, values in units of 1e-8 per year.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiBarRow {
    pub shell: usize,
    pub ss: f64,
    pub sd: f64,
    pub sn: f64,
    pub dd: f64,
    pub dn: f64,
    pub nn: f64,
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSummary {
    pub time: f64,
    pub measured: bool,
    pub innovation_norm: Option<f64>,
    pub gain_norm: Option<f64>,
}

/// JSON-facing filter summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterSummary {
    pub n_shells: usize,
    pub n_steps: usize,
    pub phi_scale: f64,
    /// Unit of the φ̄ table values (fixed "1e-8").
    pub phi_bar_units: String,
    /// Trailing-window fraction the φ̄ means were taken over.
    pub steady_state_fraction: f64,
    pub phi_bar: Vec<PhiBarRow>,
    pub steps: Vec<StepSummary>,
}

impl FilterSummary {
    pub fn from_trace<T: Real>(trace: &FilterTrace<T>, steady_state_fraction: T) -> Self {
        let means = trace.steady_state_phi_means(steady_state_fraction);
        let unit = lit::<T>(1e-8);
        let phi_bar = means
            .iter()
            .enumerate()
            .map(|(i, row)| PhiBarRow {
                shell: i + 1,
                ss: as_f64(row[0] / unit),
                sd: as_f64(row[1] / unit),
                sn: as_f64(row[2] / unit),
                dd: as_f64(row[3] / unit),
                dn: as_f64(row[4] / unit),
                nn: as_f64(row[5] / unit),
            })
            .collect();
        let steps = trace
            .steps
            .iter()
            .map(|s| StepSummary {
                time: as_f64(s.time),
                measured: s.measured,
                innovation_norm: s.innovation.as_ref().map(|v| {
                    as_f64(
                        v.iter()
                            .fold(T::zero(), |acc, &x| acc + x * x)
                            .sqrt(),
                    )
                }),
                gain_norm: s.gain_norm.map(as_f64),
            })
            .collect();
        Self {
            n_shells: trace.n_shells,
            n_steps: trace.len(),
            phi_scale: as_f64(trace.phi_scale),
            phi_bar_units: "1e-8".to_string(),
            steady_state_fraction: as_f64(steady_state_fraction),
            phi_bar,
            steps,
        }
    }
}

/// Writes the trace as `time,state_index,estimate,variance` rows.
pub fn write_trace_csv<T: Real, W: Write>(out: W, trace: &FilterTrace<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "state_index", "estimate", "variance"])?;
    for step in &trace.steps {
        let time = format!("{}", as_f64(step.time));
        for (idx, (est, var)) in step.estimate.iter().zip(step.variance.iter()).enumerate() {
            w.write_record([
                time.as_str(),
                &format!("{idx}"),
                &format!("{}", as_f64(*est)),
                &format!("{}", as_f64(*var)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv_path<T: Real>(path: &Path, trace: &FilterTrace<T>) -> Result<()> {
    write_trace_csv(std::fs::File::create(path)?, trace)
}

/// Writes the φ̄ table alone as CSV in the reference-table layout:
/// `shell,ss,sd,sn,dd,dn,nn` (units of 1e-8).
pub fn write_phi_table_csv<W: Write>(out: W, rows: &[PhiBarRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shell", "ss", "sd", "sn", "dd", "dn", "nn"])?;
    for row in rows {
        w.write_record([
            format!("{}", row.shell),
            format!("{:.2}", row.ss),
            format!("{:.2}", row.sd),
            format!("{:.2}", row.sn),
            format!("{:.2}", row.dd),
            format!("{:.2}", row.dn),
            format!("{:.2}", row.nn),
        ])?;
    }
    w.flush()?;
    Ok(())
}
