//! File-based configuration.
//!
//! One JSON or TOML file configures every subsystem. Missing sections
//! fall back to the documented defaults, unknown keys are rejected with
//! the offending name, and dotted `key=value` overrides are applied on
//! top of the merged tree (the key must already exist).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atmosphere::{AtmosphereKind, DensityModel, DensityRow, SolarCycle};
use crate::dynamics::SsemDynamics;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::distfit::FamilyKind;
use crate::integrator::IntegratorConfig;
use crate::params::ModelParams;
use crate::shell::ShellGrid;
use crate::state::PopulationState;
use crate::ukf::UkfConfig;

/// Atmosphere section: model kind, solar parameters, and the density
/// table (inline, from CSV, or the built-in default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtmosphereConfig {
    pub kind: AtmosphereKind,
    pub solar: SolarCycle<f64>,
    /// CSV with columns `h0,rho0,H`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<DensityRow<f64>>>,
    pub drag_rate_cap: f64,
}

impl Default for AtmosphereConfig {
    fn default() -> Self {
        Self {
            kind: AtmosphereKind::StaticExponential,
            solar: SolarCycle::default(),
            table_csv: None,
            table: None,
            drag_rate_cap: 10.0,
        }
    }
}

impl AtmosphereConfig {
    pub fn build(&self, base_dir: &Path) -> Result<DensityModel<f64>> {
        let table = if let Some(rows) = &self.table {
            rows.clone()
        } else if let Some(path) = &self.table_csv {
            load_density_table(&resolve(base_dir, path))?
        } else {
            DensityModel::default_table()
        };
        let model = DensityModel {
            kind: self.kind,
            table,
            solar: self.solar,
            drag_rate_cap: self.drag_rate_cap,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Initial-population section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InitialConfig {
    /// CSV with columns `shell,S,D,N`, header required.
    Csv { path: PathBuf },
    /// Gaussian profile over shell mid-altitudes, scaled to the totals.
    Profile {
        s_total: f64,
        d_total: f64,
        n_total: f64,
        mu_h: f64,
        sigma_h: f64,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Profile {
            s_total: 2000.0,
            d_total: 1500.0,
            n_total: 6000.0,
            mu_h: 800.0,
            sigma_h: 300.0,
        }
    }
}

impl InitialConfig {
    pub fn build(&self, grid: &ShellGrid<f64>, base_dir: &Path) -> Result<PopulationState<f64>> {
        match self {
            InitialConfig::Csv { path } => load_initial_csv(&resolve(base_dir, path), grid),
            InitialConfig::Profile {
                s_total,
                d_total,
                n_total,
                mu_h,
                sigma_h,
            } => {
                if *sigma_h <= 0.0 {
                    return Err(Error::Config("initial profile sigma_h must be > 0".into()));
                }
                let n = grid.n_shells;
                let mut weights = Vec::with_capacity(n);
                for i in 1..=n {
                    let h = grid.mid_altitude(i)?;
                    let z = (h - mu_h) / sigma_h;
                    weights.push((-0.5 * z * z).exp());
                }
                let total: f64 = weights.iter().sum();
                let scaled = |species_total: f64| -> Vec<f64> {
                    weights.iter().map(|w| w / total * species_total).collect()
                };
                PopulationState::new(scaled(*s_total), scaled(*d_total), scaled(*n_total))
            }
        }
    }
}

/// Propagation mode for the `propagate` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagateMode {
    /// Plain three-species state (3·n entries).
    Species,
    /// Augmented state carrying static φ blocks (9·n entries).
    Augmented,
}

/// `propagate` command section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateConfig {
    pub mode: PropagateMode,
    /// Years.
    pub horizon: f64,
    /// Output row cadence, years.
    pub output_step: f64,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        Self {
            mode: PropagateMode::Species,
            horizon: 100.0,
            output_step: 1.0,
        }
    }
}

/// `fit-index` command section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub n_bins: usize,
    pub families: Vec<FamilyKind>,
    /// Optional member-trajectory CSV to fit instead of regenerating
    /// the ensemble (columns `member,time,shell,s,d,n`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members_csv: Option<PathBuf>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_bins: 30,
            families: FamilyKind::ALL.to_vec(),
            members_csv: None,
        }
    }
}

/// Run-level knobs shared by the commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Also write per-member trajectories from the `ensemble` command.
    pub write_members: bool,
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub grid: ShellGrid<f64>,
    pub model: ModelParams<f64>,
    pub atmosphere: AtmosphereConfig,
    pub integrator: IntegratorConfig<f64>,
    pub initial: InitialConfig,
    pub propagate: PropagateConfig,
    pub ensemble: EnsembleConfig<f64>,
    pub fit: FitConfig,
    pub ukf: UkfConfig<f64>,
    pub run: RunSection,
}

impl FileConfig {
    /// Assembles the dynamics context from the grid, model, and
    /// atmosphere sections.
    pub fn dynamics(&self, base_dir: &Path) -> Result<SsemDynamics<f64>> {
        SsemDynamics::new(
            self.model.clone(),
            self.grid,
            self.atmosphere.build(base_dir)?,
        )
    }

    pub fn initial_state(&self, base_dir: &Path) -> Result<PopulationState<f64>> {
        self.initial.build(&self.grid, base_dir)
    }

    /// Master seed: the run section's, unless overridden.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.run.seed).unwrap_or(self.ensemble.seed)
    }
}

fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

/// Loads a density table CSV with columns `h0,rho0,H`.
pub fn load_density_table(path: &Path) -> Result<Vec<DensityRow<f64>>> {
    #[derive(Deserialize)]
    struct Row {
        h0: f64,
        rho0: f64,
        #[serde(rename = "H")]
        scale_height: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        rows.push(DensityRow {
            h0: row.h0,
            rho0: row.rho0,
            scale_height: row.scale_height,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyData(format!(
            "density table {} has no rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// Loads initial populations from a CSV with columns `shell,S,D,N`
/// (header required); every shell of the grid must appear exactly once.
pub fn load_initial_csv(path: &Path, grid: &ShellGrid<f64>) -> Result<PopulationState<f64>> {
    #[derive(Deserialize)]
    struct Row {
        shell: usize,
        #[serde(rename = "S")]
        s: f64,
        #[serde(rename = "D")]
        d: f64,
        #[serde(rename = "N")]
        n: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut state = PopulationState::zeros(grid.n_shells);
    let mut seen = vec![false; grid.n_shells];
    for row in reader.deserialize::<Row>() {
        let row = row?;
        grid.check_index(row.shell)?;
        if seen[row.shell - 1] {
            return Err(Error::ConfigFile(format!(
                "initial populations list shell {} twice",
                row.shell
            )));
        }
        seen[row.shell - 1] = true;
        state.s[row.shell - 1] = row.s;
        state.d[row.shell - 1] = row.d;
        state.n[row.shell - 1] = row.n;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::ConfigFile(format!(
            "initial populations missing shell {}",
            missing + 1
        )));
    }
    Ok(state)
}

/// Deep merge of TOML tables; scalars and arrays are replaced. A table
/// carrying a `mode` tag replaces the old table wholesale, so switching
/// a tagged variant does not inherit stale sibling keys.
fn merge_value(base: &mut toml::Value, incoming: toml::Value) {
    match (base, incoming) {
        (toml::Value::Table(base_table), toml::Value::Table(incoming_table)) => {
            if incoming_table.contains_key("mode") {
                *base_table = incoming_table;
                return;
            }
            for (key, value) in incoming_table {
                match base_table.get_mut(&key) {
                    Some(slot) => merge_value(slot, value),
                    None => {
                        base_table.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Value>(&format!("v = {raw}")) {
        Ok(toml::Value::Table(mut t)) => t.remove("v").expect("key v exists"),
        _ => toml::Value::String(raw.to_string()),
    }
}

/// Applies one `dotted.key=value` override; the key path must already
/// exist in the tree.
fn apply_override(tree: &mut toml::Value, spec: &str) -> Result<()> {
    let (key_path, raw_value) = spec.split_once('=').ok_or_else(|| {
        Error::ConfigFile(format!("override `{spec}` is not of the form key=value"))
    })?;
    let segments: Vec<&str> = key_path.split('.').collect();
    let mut cursor = tree;
    for (depth, segment) in segments.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::ConfigFile(format!(
                "override key `{}` descends into a non-table at `{}`",
                key_path,
                segments[..depth].join(".")
            ))
        })?;
        cursor = table.get_mut(*segment).ok_or_else(|| {
            Error::ConfigFile(format!("unknown config key `{key_path}`"))
        })?;
    }
    if cursor.is_table() {
        return Err(Error::ConfigFile(format!(
            "override key `{key_path}` names a section, not a value"
        )));
    }
    *cursor = parse_override_value(raw_value.trim());
    Ok(())
}

fn parse_file_value(path: &Path, text: &str) -> Result<toml::Value> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(text)
            .map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display()))),
        Some("json") => {
            let json: serde_json::Value = serde_json::from_str(text)?;
            toml::Value::try_from(json)
                .map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display())))
        }
        other => Err(Error::ConfigFile(format!(
            "unsupported config extension {:?} (expected .toml or .json)",
            other.unwrap_or("")
        ))),
    }
}

/// Loads a config file, layering it over the defaults and applying
/// `key=value` overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display())))?;
    let file_value = parse_file_value(path, &text)?;

    let mut tree = toml::Value::try_from(FileConfig::default())
        .map_err(|e| Error::ConfigFile(format!("internal defaults: {e}")))?;
    merge_value(&mut tree, file_value);
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    tree.try_into()
        .map_err(|e| Error::ConfigFile(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{LaunchMode, PhiForm};

    fn write_temp(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("ssem-config-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn defaults_load_from_empty_toml() {
        let path = write_temp("empty.toml", "");
        let cfg = load_config(&path, &[]).unwrap();
        assert_eq!(cfg.grid.n_shells, 36);
        assert_eq!(cfg.model.pmd, 0.95);
        assert_eq!(cfg.ukf.a, 0.25);
        assert_eq!(cfg.fit.n_bins, 30);
    }

    #[test]
    fn toml_sections_override_defaults() {
        let path = write_temp(
            "basic.toml",
            r#"
            [grid]
            n_shells = 8

            [model]
            pmd = 0.9
            phi_form = "printed"

            [model.launch]
            mode = "gaussian_over_shells"
            total_rate = 50.0
            mu_h = 400.0
            sigma_h = 120.0
            "#,
        );
        let cfg = load_config(&path, &[]).unwrap();
        assert_eq!(cfg.grid.n_shells, 8);
        assert_eq!(cfg.model.pmd, 0.9);
        assert_eq!(cfg.model.phi_form, PhiForm::Printed);
        assert!(matches!(
            cfg.model.launch,
            LaunchMode::GaussianOverShells { .. }
        ));
        // Untouched sections keep defaults.
        assert_eq!(cfg.model.tof, 5.0);
    }

    #[test]
    fn json_configs_load_too() {
        let path = write_temp(
            "basic.json",
            r#"{"grid": {"n_shells": 4}, "ukf": {"beta": 3.0}}"#,
        );
        let cfg = load_config(&path, &[]).unwrap();
        assert_eq!(cfg.grid.n_shells, 4);
        assert_eq!(cfg.ukf.beta, 3.0);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let path = write_temp("bad.toml", "[model]\nnot_a_knob = 3\n");
        let err = load_config(&path, &[]).unwrap_err().to_string();
        assert!(err.contains("not_a_knob"), "error was: {err}");
    }

    #[test]
    fn overrides_apply_and_unknown_override_keys_fail() {
        let path = write_temp("ovr.toml", "[model]\npmd = 0.9\n");
        let cfg = load_config(
            &path,
            &["model.pmd=0.5".into(), "grid.n_shells=3".into()],
        )
        .unwrap();
        assert_eq!(cfg.model.pmd, 0.5);
        assert_eq!(cfg.grid.n_shells, 3);

        let err = load_config(&path, &["model.nope=1".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("model.nope"), "error was: {err}");
    }

    #[test]
    fn string_overrides_hit_enums() {
        let path = write_temp("enum.toml", "");
        let cfg = load_config(&path, &["model.phi_form=printed".into()]).unwrap();
        assert_eq!(cfg.model.phi_form, PhiForm::Printed);
    }

    #[test]
    fn initial_profile_sums_to_totals() {
        let cfg = FileConfig::default();
        let state = cfg.initial_state(Path::new(".")).unwrap();
        let sum: f64 = state.s.iter().sum();
        assert!((sum - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn initial_csv_requires_all_shells() {
        let path = write_temp("init.csv", "shell,S,D,N\n1,10,5,100\n2,20,6,200\n");
        let grid = ShellGrid::new(200.0, 2, 50.0, 6378.137).unwrap();
        let state = load_initial_csv(&path, &grid).unwrap();
        assert_eq!(state.s, vec![10.0, 20.0]);
        assert_eq!(state.n, vec![100.0, 200.0]);

        let grid3 = ShellGrid::new(200.0, 3, 50.0, 6378.137).unwrap();
        assert!(load_initial_csv(&path, &grid3).is_err());
    }

    #[test]
    fn density_table_csv_loads() {
        let path = write_temp("atm.csv", "h0,rho0,H\n200,2.5e-10,40\n300,2e-11,50\n");
        let rows = load_density_table(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].scale_height, 50.0);
    }
}
