//! Subcommand implementations.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde_json::json;

use ssem::config::{load_config, FileConfig, PropagateMode};
use ssem::dynamics::SsemDynamics;
use ssem::ensemble::io::{
    read_members_csv_path, read_moments_csv_path, write_members_csv, write_moments_csv_path,
    EnsembleSummary,
};
use ssem::ensemble::{extract_moment_stream, run_ensemble, EnsembleRun};
use ssem::error::Error;
use ssem::integrator::propagate_interval;
use ssem::reference::PhiReference;
use ssem::state::{AugmentedState, PopulationState};
use ssem::ukf::io::{write_phi_table_csv, write_trace_csv_path, FilterSummary};
use ssem::ukf::run_filter;

/// Parsed common flags.
pub struct Invocation {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub overrides: Vec<String>,
}

/// Command failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type CmdResult = Result<(), Failure>;

const USAGE: u8 = 2;
const RUNTIME: u8 = 1;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn runtime(err: impl std::fmt::Display) -> Failure {
    Failure {
        code: RUNTIME,
        message: err.to_string(),
    }
}

/// Config-shaped problems are usage errors; everything else is runtime.
fn classify(err: Error) -> Failure {
    match err {
        Error::ConfigFile(_) | Error::Config(_) => usage(err.to_string()),
        other => runtime(other),
    }
}

struct Context {
    config: FileConfig,
    base_dir: PathBuf,
    out: PathBuf,
    seed: u64,
    threads: Option<usize>,
}

fn prepare(invocation: &Invocation) -> Result<Context, Failure> {
    let config = load_config(&invocation.config, &invocation.overrides).map_err(classify)?;
    let base_dir = invocation
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&invocation.out)
        .map_err(|e| runtime(format!("cannot create output directory: {e}")))?;
    let seed = config.seed(invocation.seed);
    let threads = invocation.threads.or(config.run.threads);
    Ok(Context {
        config,
        base_dir,
        out: invocation.out.clone(),
        seed,
        threads,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let file = File::create(path).map_err(runtime)?;
    serde_json::to_writer_pretty(file, value).map_err(runtime)?;
    Ok(())
}

/// Output time grid `0, step, …, horizon` (last interval clipped).
fn time_grid(horizon: f64, step: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut k = 1usize;
    loop {
        let t = k as f64 * step;
        if t < horizon {
            times.push(t);
            k += 1;
        } else {
            times.push(horizon);
            break;
        }
    }
    times
}

pub fn propagate(invocation: Invocation) -> CmdResult {
    let ctx = prepare(&invocation)?;
    let dynamics = ctx.config.dynamics(&ctx.base_dir).map_err(classify)?;
    let init = ctx.config.initial_state(&ctx.base_dir).map_err(classify)?;
    let prop = ctx.config.propagate;
    if prop.horizon < 0.0 || prop.output_step <= 0.0 {
        return Err(usage("propagate horizon must be >= 0 and output_step > 0"));
    }

    let n_shells = dynamics.grid.n_shells;
    let times = if prop.horizon == 0.0 {
        vec![0.0]
    } else {
        time_grid(prop.horizon, prop.output_step)
    };

    let mut state: Vec<f64> = match prop.mode {
        PropagateMode::Species => init.to_flat(),
        PropagateMode::Augmented => {
            AugmentedState::pack(&init, &dynamics.static_phis)
                .map_err(runtime)?
                .into_vec()
        }
    };

    let csv_path = ctx.out.join("trajectory.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    writer
        .write_record(["time", "shell", "s", "d", "n"])
        .map_err(runtime)?;
    let mut write_rows = |t: f64, flat: &[f64]| -> Result<(), Failure> {
        for i in 0..n_shells {
            writer
                .write_record([
                    format!("{t}"),
                    format!("{}", i + 1),
                    format!("{}", flat[i]),
                    format!("{}", flat[n_shells + i]),
                    format!("{}", flat[2 * n_shells + i]),
                ])
                .map_err(runtime)?;
        }
        Ok(())
    };

    write_rows(times[0], &state)?;
    for w in times.windows(2) {
        let rhs = |x: &[f64], t: f64| match prop.mode {
            PropagateMode::Species => dynamics.rhs_three_species_flat(x, t),
            PropagateMode::Augmented => dynamics.rhs_augmented_flat(x, t),
        };
        state = propagate_interval(&rhs, &state, w[0], w[1], &ctx.config.integrator)
            .map_err(runtime)?;
        write_rows(w[1], &state)?;
    }
    writer.flush().map_err(runtime)?;

    write_json(
        &ctx.out.join("propagate_summary.json"),
        &json!({
            "mode": match prop.mode {
                PropagateMode::Species => "species",
                PropagateMode::Augmented => "augmented",
            },
            "horizon": prop.horizon,
            "output_step": prop.output_step,
            "n_shells": n_shells,
            "n_rows": times.len() * n_shells,
            "trajectory_csv": "trajectory.csv",
        }),
    )
}

fn generate_run(ctx: &Context, dynamics: &SsemDynamics<f64>) -> Result<EnsembleRun<f64>, Failure> {
    let init: PopulationState<f64> = ctx.config.initial_state(&ctx.base_dir).map_err(classify)?;
    let mut cfg = ctx.config.ensemble;
    cfg.seed = ctx.seed;
    run_ensemble(&cfg, dynamics, &ctx.config.integrator, &init, ctx.threads).map_err(runtime)
}

pub fn ensemble(invocation: Invocation) -> CmdResult {
    let ctx = prepare(&invocation)?;
    let dynamics = ctx.config.dynamics(&ctx.base_dir).map_err(classify)?;
    let run = generate_run(&ctx, &dynamics)?;
    let records = extract_moment_stream(&run, ctx.config.ensemble.cross_shell).map_err(runtime)?;

    write_moments_csv_path(&ctx.out.join("moments.csv"), &records).map_err(runtime)?;
    let summary = EnsembleSummary::from_run(&run, ctx.seed, ctx.config.ensemble.cross_shell);
    write_json(
        &ctx.out.join("ensemble_summary.json"),
        &serde_json::to_value(&summary).map_err(runtime)?,
    )?;
    if ctx.config.run.write_members {
        let file = File::create(ctx.out.join("members.csv")).map_err(runtime)?;
        write_members_csv(file, &run).map_err(runtime)?;
    }
    Ok(())
}

pub fn fit_index(invocation: Invocation) -> CmdResult {
    let ctx = prepare(&invocation)?;
    let run: EnsembleRun<f64> = match &ctx.config.fit.members_csv {
        Some(path) => {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                ctx.base_dir.join(path)
            };
            if !resolved.exists() {
                return Err(usage(format!(
                    "missing member trajectories: {}",
                    resolved.display()
                )));
            }
            read_members_csv_path(&resolved).map_err(runtime)?
        }
        None => {
            let dynamics = ctx.config.dynamics(&ctx.base_dir).map_err(classify)?;
            generate_run(&ctx, &dynamics)?
        }
    };

    let (reports, summaries) =
        ssem::distfit::fit_index(&run, &ctx.config.fit.families, ctx.config.fit.n_bins)
            .map_err(runtime)?;

    let csv_path = ctx.out.join("fit_index.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    writer
        .write_record(["time", "shell", "species", "family", "param1", "param2", "rmse"])
        .map_err(runtime)?;
    for r in &reports {
        writer
            .write_record([
                format!("{}", r.time),
                format!("{}", r.shell),
                r.species.clone(),
                r.family.clone(),
                format!("{}", r.param1),
                format!("{}", r.param2),
                format!("{}", r.rmse),
            ])
            .map_err(runtime)?;
    }
    writer.flush().map_err(runtime)?;

    write_json(
        &ctx.out.join("rho_summary.json"),
        &json!({
            "n_bins": ctx.config.fit.n_bins,
            "entries": summaries,
            "fit_index_csv": "fit_index.csv",
        }),
    )
}

pub fn filter(invocation: Invocation) -> CmdResult {
    let ctx = prepare(&invocation)?;
    let dynamics = ctx.config.dynamics(&ctx.base_dir).map_err(classify)?;
    let moments_path = ctx.out.join("moments.csv");
    if !moments_path.exists() {
        return Err(usage(format!(
            "missing moment stream: {} (run `ssem ensemble` first)",
            moments_path.display()
        )));
    }
    let moments = read_moments_csv_path::<f64>(&moments_path).map_err(runtime)?;
    let first = moments
        .first()
        .ok_or_else(|| usage("moment stream is empty"))?;
    if first.n_shells() != dynamics.grid.n_shells {
        return Err(usage(format!(
            "moment stream has {} shells but the grid has {}",
            first.n_shells(),
            dynamics.grid.n_shells
        )));
    }

    // Initial state: the ensemble mean at the first record, with the
    // static φ table as the φ prior.
    let mut init = PopulationState::zeros(dynamics.grid.n_shells);
    for i in 0..dynamics.grid.n_shells {
        init.s[i] = first.mean[i][0];
        init.d[i] = first.mean[i][1];
        init.n[i] = first.mean[i][2];
    }
    let x0 = AugmentedState::pack(&init, &dynamics.static_phis).map_err(runtime)?;

    let trace = run_filter(
        &x0,
        &moments,
        &dynamics,
        &ctx.config.integrator,
        &ctx.config.ukf,
    )
    .map_err(runtime)?;

    write_trace_csv_path(&ctx.out.join("filter_trace.csv"), &trace).map_err(runtime)?;
    let summary = FilterSummary::from_trace(&trace, ctx.config.ukf.steady_state_fraction);
    write_json(
        &ctx.out.join("filter_summary.json"),
        &serde_json::to_value(&summary).map_err(runtime)?,
    )
}

pub fn report(invocation: Invocation) -> CmdResult {
    let ctx = prepare(&invocation)?;
    let rho_path = ctx.out.join("rho_summary.json");
    let filter_path = ctx.out.join("filter_summary.json");
    for (path, producer) in [(&rho_path, "fit-index"), (&filter_path, "filter")] {
        if !path.exists() {
            return Err(usage(format!(
                "missing artifact {} (run `ssem {producer}` first)",
                path.display()
            )));
        }
    }
    let rho: serde_json::Value =
        serde_json::from_reader(File::open(&rho_path).map_err(runtime)?).map_err(runtime)?;
    let filter: FilterSummary =
        serde_json::from_reader(File::open(&filter_path).map_err(runtime)?).map_err(runtime)?;
    let reference = PhiReference::bundled().map_err(runtime)?;

    let table_file = File::create(ctx.out.join("phi_table.csv")).map_err(runtime)?;
    write_phi_table_csv(table_file, &filter.phi_bar).map_err(runtime)?;

    write_json(
        &ctx.out.join("report.json"),
        &json!({
            "sources": {
                "rho_summary": "rho_summary.json",
                "filter_summary": "filter_summary.json",
                "phi_table_csv": "phi_table.csv",
            },
            "phi_bar_units": filter.phi_bar_units,
            "phi_bar": filter.phi_bar,
            "reference_phi_bar": reference.rows,
            "rho": rho,
        }),
    )
}
