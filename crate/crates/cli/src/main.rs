//! `ssem` command-line front end.
//!
//! Every subcommand is a pure function of (config file, flags, seed) to
//! files in the output directory; re-running a command overwrites its
//! outputs byte for byte.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error (including
//! config-key problems and missing upstream artifacts).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const CONFIG_KEYS_COMMON: &str = "\
Config sections honored by every command:
  [grid]        h_min, n_shells, dh, earth_radius
  [model]       alpha_a, alpha, delta, pmd, tof, v_rel, phi_form,
                delta_terms_include_phi, drag_enabled
  [model.launch]   mode (null|constant|gaussian_over_shells), rate,
                   total_rate, mu_h, sigma_h
  [model.breakup]  coefficient, m_ref, lc_min, mass_exponent, lc_exponent
  [model.species.{s,d,n}]  radius, mass, area, drag_coeff, is_active
  [atmosphere]  kind (static_exponential|solar_modulated), table_csv,
                table, drag_rate_cap
  [atmosphere.solar]  period, amplitude, phase
  [integrator]  dt_sub
  [initial]     mode (profile|csv), s_total, d_total, n_total, mu_h,
                sigma_h, path
  [run]         seed, threads, write_members";

#[derive(Parser)]
#[command(
    name = "ssem",
    version,
    about = "Multi-shell three-species LEO population model: propagation, \
             Monte-Carlo ensembles, distribution-fit ranking, and unscented \
             Kalman filtering over collision parameters",
    after_help = CONFIG_KEYS_COMMON
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (.toml or .json).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Master seed; overrides [run].seed and [ensemble].seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory (created if absent).
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Thread cap for ensemble generation; overrides [run].threads.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Override one config key, e.g. --set model.pmd=0.9 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the deterministic model and write the trajectory CSV.
    #[command(after_help = "Command-specific config keys:\n  \
        [propagate]  mode (species|augmented), horizon, output_step\n\n\
        Outputs: trajectory.csv, propagate_summary.json")]
    Propagate(CommonArgs),

    /// Generate the Monte-Carlo ensemble and write the moment stream.
    #[command(after_help = "Command-specific config keys:\n  \
        [ensemble]  n_members, horizon, step, seed, init_jitter,\n              \
        init_sampling (gaussian|poisson), collision_sampling (poisson),\n              \
        cross_shell\n\n\
        Outputs: moments.csv, ensemble_summary.json, members.csv (with [run].write_members)")]
    Ensemble(CommonArgs),

    /// Fit Gaussian/Gamma/Rician families and write the RMSE index.
    #[command(name = "fit-index", after_help = "Command-specific config keys:\n  \
        [fit]       n_bins, families, members_csv\n  \
        [ensemble]  (used to regenerate members when members_csv is unset)\n\n\
        Outputs: fit_index.csv, rho_summary.json")]
    FitIndex(CommonArgs),

    /// Run the unscented Kalman filter over a moment stream.
    #[command(after_help = "Command-specific config keys:\n  \
        [ukf]  a, kappa, beta, q_scale, p0_scale, r_floor, p_floor, step,\n         \
        horizon, phi_scale, phi_noise_floor, steady_state_fraction,\n         \
        phi_frozen\n\n\
        Reads:   moments.csv (from `ssem ensemble`)\n\
        Outputs: filter_trace.csv, filter_summary.json")]
    Filter(CommonArgs),

    /// Bundle fit-index and filter outputs into one report.
    #[command(after_help = "Reads:   rho_summary.json and filter_summary.json \
        from the output directory\nOutputs: report.json, phi_table.csv")]
    Report(CommonArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate(args) => commands::propagate(args.into()),
        Command::Ensemble(args) => commands::ensemble(args.into()),
        Command::FitIndex(args) => commands::fit_index(args.into()),
        Command::Filter(args) => commands::filter(args.into()),
        Command::Report(args) => commands::report(args.into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

impl From<&CommonArgs> for commands::Invocation {
    fn from(args: &CommonArgs) -> Self {
        commands::Invocation {
            config: args.config.clone(),
            seed: args.seed,
            out: args.out.clone(),
            threads: args.threads,
            overrides: args.set.clone(),
        }
    }
}
