//! Moment-stream and member-trajectory serialization.
//!
//! The moment stream is a long-format CSV with columns
//! `time,shell,statistic,value`. Per-shell statistics are
//! `mean_s|mean_d|mean_n|cov_ss|cov_sd|cov_sn|cov_dd|cov_dn|cov_nn`;
//! cross-shell covariance entries (when extracted) use `cov_<pq>_x<j>`
//! for the covariance between species `p` in the row's shell and species
//! `q` in shell `j`; `n_members` rides along once per record with
//! shell 0. Rows are grouped by record in time order, which the reader
//! relies on.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleRun, MemberTrajectory, MomentRecord};
use crate::error::{Error, Result};
use crate::scalar::{as_f64, lit, Real};

const SPECIES: [&str; 3] = ["s", "d", "n"];

/// Machine-readable run description written next to the moment CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_members_requested: usize,
    pub n_members: usize,
    pub n_excluded: usize,
    pub n_shells: usize,
    pub seed: u64,
    pub step: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub cross_shell: bool,
    pub total_events: u64,
}

impl EnsembleSummary {
    pub fn from_run<T: Real>(run: &EnsembleRun<T>, seed: u64, cross_shell: bool) -> Self {
        Self {
            n_members_requested: run.n_requested,
            n_members: run.members.len(),
            n_excluded: run.n_excluded,
            n_shells: run.n_shells(),
            seed,
            step: if run.times.len() > 1 {
                as_f64(run.times[1] - run.times[0])
            } else {
                0.0
            },
            horizon: as_f64(*run.times.last().unwrap_or(&T::zero())),
            times: run.times.iter().map(|&t| as_f64(t)).collect(),
            cross_shell,
            total_events: run.members.iter().map(|m| m.n_events).sum(),
        }
    }
}

/// Writes the moment stream in long format.
pub fn write_moments_csv<T: Real, W: Write>(out: W, records: &[MomentRecord<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "shell", "statistic", "value"])?;
    for rec in records {
        let time = format!("{}", as_f64(rec.time));
        w.write_record([
            time.as_str(),
            "0",
            "n_members",
            &format!("{}", rec.n_members),
        ])?;
        for i in 0..rec.n_shells() {
            let shell = format!("{}", i + 1);
            for (p, name) in SPECIES.iter().enumerate() {
                w.write_record([
                    time.as_str(),
                    shell.as_str(),
                    &format!("mean_{name}"),
                    &format!("{}", as_f64(rec.mean[i][p])),
                ])?;
            }
            for p in 0..3 {
                for q in p..3 {
                    w.write_record([
                        time.as_str(),
                        shell.as_str(),
                        &format!("cov_{}{}", SPECIES[p], SPECIES[q]),
                        &format!("{}", as_f64(rec.cov[i][p][q])),
                    ])?;
                }
            }
            if let Some(cross) = &rec.cross {
                for j in 0..rec.n_shells() {
                    if j == i {
                        continue;
                    }
                    for p in 0..3 {
                        for q in 0..3 {
                            w.write_record([
                                time.as_str(),
                                shell.as_str(),
                                &format!("cov_{}{}_x{}", SPECIES[p], SPECIES[q], j + 1),
                                &format!("{}", as_f64(cross[(3 * i + p, 3 * j + q)])),
                            ])?;
                        }
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_moments_csv_path<T: Real>(path: &Path, records: &[MomentRecord<T>]) -> Result<()> {
    write_moments_csv(std::fs::File::create(path)?, records)
}

fn species_index(tag: &str) -> Result<usize> {
    SPECIES
        .iter()
        .position(|&s| s == tag)
        .ok_or_else(|| Error::ConfigFile(format!("unknown species tag `{tag}`")))
}

/// Reads a moment stream written by [`write_moments_csv`].
pub fn read_moments_csv<T: Real, R: std::io::Read>(input: R) -> Result<Vec<MomentRecord<T>>> {
    #[derive(Deserialize)]
    struct Row {
        time: f64,
        shell: usize,
        statistic: String,
        value: f64,
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut reader = csv::Reader::from_reader(input);
    for row in reader.deserialize() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData("moment stream CSV has no rows".into()));
    }
    let n_shells = rows.iter().map(|r| r.shell).max().unwrap_or(0);
    if n_shells == 0 {
        return Err(Error::ConfigFile("moment stream has no shell rows".into()));
    }

    let mut records: Vec<MomentRecord<T>> = Vec::new();
    for row in rows {
        let new_record = match records.last() {
            None => true,
            Some(last) => as_f64(last.time) != row.time,
        };
        if new_record {
            records.push(MomentRecord {
                time: lit(row.time),
                n_members: 0,
                mean: vec![[T::zero(); 3]; n_shells],
                cov: vec![[[T::zero(); 3]; 3]; n_shells],
                cross: None,
            });
        }
        let rec = records.last_mut().expect("record exists");
        let stat = row.statistic.as_str();
        if stat == "n_members" {
            rec.n_members = row.value as usize;
            continue;
        }
        let i = row.shell.checked_sub(1).ok_or_else(|| {
            Error::ConfigFile(format!("statistic `{stat}` requires a shell >= 1"))
        })?;
        if let Some(tag) = stat.strip_prefix("mean_") {
            rec.mean[i][species_index(tag)?] = lit(row.value);
        } else if let Some(rest) = stat.strip_prefix("cov_") {
            let (pq, cross_shell) = match rest.split_once("_x") {
                Some((pq, j)) => {
                    let j: usize = j
                        .parse()
                        .map_err(|_| Error::ConfigFile(format!("bad cross tag `{stat}`")))?;
                    (pq, Some(j - 1))
                }
                None => (rest, None),
            };
            if pq.len() != 2 {
                return Err(Error::ConfigFile(format!("bad covariance tag `{stat}`")));
            }
            let p = species_index(&pq[..1])?;
            let q = species_index(&pq[1..])?;
            match cross_shell {
                None => {
                    rec.cov[i][p][q] = lit(row.value);
                    rec.cov[i][q][p] = lit(row.value);
                }
                Some(j) => {
                    let cross = rec
                        .cross
                        .get_or_insert_with(|| DMatrix::zeros(3 * n_shells, 3 * n_shells));
                    cross[(3 * i + p, 3 * j + q)] = lit(row.value);
                }
            }
        } else {
            return Err(Error::ConfigFile(format!("unknown statistic `{stat}`")));
        }
    }

    // Copy the diagonal blocks into any cross matrices.
    for rec in &mut records {
        if let Some(cross) = &mut rec.cross {
            for i in 0..n_shells {
                for p in 0..3 {
                    for q in 0..3 {
                        cross[(3 * i + p, 3 * i + q)] = rec.cov[i][p][q];
                    }
                }
            }
        }
    }
    Ok(records)
}

pub fn read_moments_csv_path<T: Real>(path: &Path) -> Result<Vec<MomentRecord<T>>> {
    read_moments_csv(std::fs::File::open(path)?)
}

/// Writes every member trajectory as one long CSV:
/// `member,time,shell,s,d,n`.
pub fn write_members_csv<T: Real, W: Write>(out: W, run: &EnsembleRun<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["member", "time", "shell", "s", "d", "n"])?;
    for (m, member) in run.members.iter().enumerate() {
        for (k, t) in member.times.iter().enumerate() {
            let state = &member.states[k];
            for i in 0..state.n_shells() {
                w.write_record([
                    format!("{m}"),
                    format!("{}", as_f64(*t)),
                    format!("{}", i + 1),
                    format!("{}", as_f64(state.s[i])),
                    format!("{}", as_f64(state.d[i])),
                    format!("{}", as_f64(state.n[i])),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads trajectories written by [`write_members_csv`] back into an
/// ensemble run (event counts are not stored and read back as zero).
pub fn read_members_csv<T: Real, R: std::io::Read>(input: R) -> Result<EnsembleRun<T>> {
    #[derive(Deserialize)]
    struct Row {
        member: usize,
        time: f64,
        shell: usize,
        s: f64,
        d: f64,
        n: f64,
    }

    let mut reader = csv::Reader::from_reader(input);
    let mut rows: Vec<Row> = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData("member CSV has no rows".into()));
    }
    let n_shells = rows.iter().map(|r| r.shell).max().unwrap();
    let n_members = rows.iter().map(|r| r.member).max().unwrap() + 1;
    let mut times_f64: Vec<f64> = Vec::new();
    for r in rows.iter().filter(|r| r.member == 0) {
        if !times_f64.contains(&r.time) {
            times_f64.push(r.time);
        }
    }
    let times: Vec<T> = times_f64.iter().map(|&t| lit(t)).collect();

    let mut members: Vec<MemberTrajectory<T>> = (0..n_members)
        .map(|_| MemberTrajectory {
            times: times.clone(),
            states: vec![crate::state::PopulationState::zeros(n_shells); times.len()],
            n_events: 0,
        })
        .collect();
    for row in rows {
        let k = times_f64
            .iter()
            .position(|&t| t == row.time)
            .ok_or_else(|| Error::ConfigFile(format!("member {}: time {} not on the common grid", row.member, row.time)))?;
        let state = &mut members[row.member].states[k];
        state.s[row.shell - 1] = lit(row.s);
        state.d[row.shell - 1] = lit(row.d);
        state.n[row.shell - 1] = lit(row.n);
    }
    Ok(EnsembleRun {
        times,
        n_requested: members.len(),
        members,
        n_excluded: 0,
    })
}

pub fn read_members_csv_path<T: Real>(path: &Path) -> Result<EnsembleRun<T>> {
    read_members_csv(std::fs::File::open(path)?)
}
