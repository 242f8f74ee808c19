//! The run-config JSON document shared by every sweep-style subcommand.
//!
//! All config quantities are SI (metres, newtons, seconds); only the output
//! files use micrometres and micronewtons. Devices, styluses and
//! instruments can be given inline or by preset name; named presets are
//! looked up first as `<lowercased-name>.json` in the directory named by
//! `PROBE_STATION_PRESETS`, then among the built-ins compiled into the
//! binary (devices REF-CANTILEVER and REF-STIFF, stylus CONICAL,
//! instruments REFERENCE and IDEAL).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use probe_core::contact::{PlacementSpec, SolverConfig};
use probe_core::instrument::InstrumentModel;
use probe_core::mechanics::{builtin_preset_json, DeviceSpec, StylusSpec};

use crate::error::CliError;

pub const PRESET_PATH_ENV: &str = "PROBE_STATION_PRESETS";
pub const CONFIG_SCHEMA: &str = "run-config v1";

/// Largest grid a config may expand to; catches step sizes that are off by
/// orders of magnitude before they turn into hour-long sweeps.
const MAX_GRID_POINTS: usize = 2_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub device: DeviceField,
    #[serde(default)]
    pub stylus: StylusField,
    #[serde(default)]
    pub placement: PlacementField,
    /// Landing-point offset the virtual instrument applies on top of the
    /// intended placement, m. Used by `measure` only.
    #[serde(default)]
    pub placement_error: f64,
    #[serde(default)]
    pub instrument: InstrumentField,
    pub z_grid: GridSpec,
    #[serde(default)]
    pub seed: u64,
    /// Equilibrium-solver knobs; omit for the defaults.
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    /// Landing positions x_s for `sweep-position`, m from the beam tip.
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DeviceField {
    Named(String),
    Inline(DeviceSpec),
}

impl Default for DeviceField {
    fn default() -> Self {
        DeviceField::Named("REF-CANTILEVER".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum StylusField {
    Named(String),
    Inline(StylusSpec),
}

impl Default for StylusField {
    fn default() -> Self {
        StylusField::Named("CONICAL".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InstrumentField {
    Named(String),
    Inline(InstrumentModel),
}

impl Default for InstrumentField {
    fn default() -> Self {
        InstrumentField::Named("REFERENCE".into())
    }
}

/// Landing point, either absolute (`x_s`, m from the beam tip) or relative
/// to the centre of the mass top surface (`center_offset`, m, positive
/// outboard). Omitting both lands dead centre.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementField {
    pub x_s: Option<f64>,
    pub center_offset: Option<f64>,
}

impl PlacementField {
    pub fn resolve(&self, device: &DeviceSpec) -> Result<PlacementSpec, CliError> {
        match (self.x_s, self.center_offset) {
            (Some(_), Some(_)) => Err(CliError::input(
                "placement: give either x_s or center_offset, not both",
            )),
            (Some(x), None) => Ok(PlacementSpec::new(x)),
            (None, off) => Ok(PlacementSpec::from_center_offset(
                device,
                off.unwrap_or(0.0),
            )),
        }
    }
}

/// Commanded actuator depths: start, start+step, ... up to stop
/// (inclusive when stop lands on the step lattice).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<f64>, CliError> {
        for (name, v) in [
            ("z_grid.start", self.start),
            ("z_grid.stop", self.stop),
            ("z_grid.step", self.step),
        ] {
            if !v.is_finite() {
                return Err(CliError::input(format!("{name}: must be finite, got {v}")));
            }
        }
        if self.step <= 0.0 {
            return Err(CliError::input(format!(
                "z_grid.step: must be > 0 m, got {}",
                self.step
            )));
        }
        if self.stop <= self.start {
            return Err(CliError::input(format!(
                "z_grid.stop: must exceed start = {} m, got {}",
                self.start, self.stop
            )));
        }
        if self.start < 0.0 {
            return Err(CliError::input(format!(
                "z_grid.start: must be >= 0 m, got {}",
                self.start
            )));
        }
        // i*step instead of repeated addition: no drift accumulation, and
        // a hair of slack so stop stays included when (stop-start)/step is
        // a whole number up to rounding.
        let slack = self.step * 1e-9;
        let mut grid = Vec::new();
        for i in 0..=MAX_GRID_POINTS {
            let z = self.start + i as f64 * self.step;
            if z > self.stop + slack {
                break;
            }
            if i == MAX_GRID_POINTS {
                return Err(CliError::input(format!(
                    "z_grid: more than {MAX_GRID_POINTS} points; check step"
                )));
            }
            grid.push(z);
        }
        Ok(grid)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

/// Everything a command needs, with names resolved and numbers validated.
pub struct ResolvedRun {
    pub device: DeviceSpec,
    pub stylus: StylusSpec,
    pub placement: PlacementSpec,
    pub placement_error: f64,
    pub instrument: InstrumentModel,
    pub z_grid: Vec<f64>,
    pub seed: u64,
    pub solver: SolverConfig,
    pub positions: Option<Vec<f64>>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if cfg.schema != CONFIG_SCHEMA {
        return Err(CliError::input(format!(
            "schema: expected \"{CONFIG_SCHEMA}\", got \"{}\"",
            cfg.schema
        )));
    }
    Ok(cfg)
}

/// `$PROBE_STATION_PRESETS/<name-lowercased>.json`, if that file exists.
fn preset_override(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(PRESET_PATH_ENV)?;
    let p = Path::new(&dir).join(format!("{}.json", name.to_lowercase()));
    p.is_file().then_some(p)
}

fn parse_preset<T: serde::de::DeserializeOwned>(
    what: &str,
    name: &str,
    source: &str,
    text: &str,
) -> Result<T, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::input(format!("{what} preset {name} ({source}): {e}")))
}

pub fn resolve_device(field: &DeviceField) -> Result<DeviceSpec, CliError> {
    let device = match field {
        DeviceField::Inline(d) => *d,
        DeviceField::Named(name) => {
            if let Some(path) = preset_override(name) {
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                parse_preset("device", name, &path.display().to_string(), &text)?
            } else if let Some(text) = builtin_preset_json(name) {
                parse_preset("device", name, "builtin", text)?
            } else {
                return Err(CliError::input(format!(
                    "device: unknown preset \"{name}\" \
                     (no {}.json under ${PRESET_PATH_ENV}; builtins are \
                     REF-CANTILEVER and REF-STIFF)",
                    name.to_lowercase()
                )));
            }
        }
    };
    device.validate()?;
    Ok(device)
}

pub fn resolve_stylus(field: &StylusField) -> Result<StylusSpec, CliError> {
    let stylus = match field {
        StylusField::Inline(s) => *s,
        StylusField::Named(name) => {
            if let Some(path) = preset_override(name) {
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                parse_preset("stylus", name, &path.display().to_string(), &text)?
            } else if name == "CONICAL" {
                StylusSpec::conical_reference()
            } else {
                return Err(CliError::input(format!(
                    "stylus: unknown preset \"{name}\" \
                     (no {}.json under ${PRESET_PATH_ENV}; builtin is CONICAL)",
                    name.to_lowercase()
                )));
            }
        }
    };
    stylus.validate()?;
    Ok(stylus)
}

pub fn resolve_instrument(field: &InstrumentField) -> Result<InstrumentModel, CliError> {
    let instrument = match field {
        InstrumentField::Inline(m) => *m,
        InstrumentField::Named(name) => {
            if let Some(path) = preset_override(name) {
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                parse_preset("instrument", name, &path.display().to_string(), &text)?
            } else {
                match name.as_str() {
                    "REFERENCE" => InstrumentModel::reference(),
                    "IDEAL" => InstrumentModel::ideal(),
                    _ => {
                        return Err(CliError::input(format!(
                            "instrument: unknown preset \"{name}\" \
                             (no {}.json under ${PRESET_PATH_ENV}; builtins are \
                             REFERENCE and IDEAL)",
                            name.to_lowercase()
                        )))
                    }
                }
            }
        }
    };
    instrument.validate()?;
    Ok(instrument)
}

pub fn resolve(cfg: &RunConfig) -> Result<ResolvedRun, CliError> {
    let device = resolve_device(&cfg.device)?;
    let stylus = resolve_stylus(&cfg.stylus)?;
    let instrument = resolve_instrument(&cfg.instrument)?;
    let placement = cfg.placement.resolve(&device)?;
    placement.validate(&device)?;
    if !cfg.placement_error.is_finite() {
        return Err(CliError::input(format!(
            "placement_error: must be finite, got {}",
            cfg.placement_error
        )));
    }
    let z_grid = cfg.z_grid.expand()?;
    if let Some(positions) = &cfg.positions {
        for (i, &x) in positions.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 || x > device.mass.length {
                return Err(CliError::input(format!(
                    "positions[{i}]: must lie in (0, mass.length = {} m], got {x}",
                    device.mass.length
                )));
            }
        }
    }
    Ok(ResolvedRun {
        device,
        stylus,
        placement,
        placement_error: cfg.placement_error,
        instrument,
        z_grid,
        seed: cfg.seed,
        solver: cfg.solver.unwrap_or_default(),
        positions: cfg.positions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion_includes_the_stop_on_the_lattice() {
        let g = GridSpec {
            start: 0.0,
            stop: 300e-6,
            step: 2e-6,
        };
        let grid = g.expand().unwrap();
        assert_eq!(grid.len(), 151);
        assert_eq!(grid[0], 0.0);
        assert!((grid[150] - 300e-6).abs() < 1e-18);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn grid_expansion_rejects_bad_fields() {
        let bad = [
            GridSpec { start: 0.0, stop: 1e-5, step: 0.0 },
            GridSpec { start: 0.0, stop: 1e-5, step: -1e-6 },
            GridSpec { start: 1e-5, stop: 1e-5, step: 1e-6 },
            GridSpec { start: -1e-6, stop: 1e-5, step: 1e-6 },
            GridSpec { start: 0.0, stop: f64::NAN, step: 1e-6 },
        ];
        for g in bad {
            assert!(g.expand().is_err(), "{g:?} should be rejected");
        }
    }

    #[test]
    fn named_presets_resolve_and_unknown_names_fail() {
        let d = resolve_device(&DeviceField::Named("REF-CANTILEVER".into())).unwrap();
        assert!((d.nominal_center_stiffness - 10.0).abs() < 1e-9);
        let s = resolve_stylus(&StylusField::Named("CONICAL".into())).unwrap();
        assert!((s.tip_radius - 18e-6).abs() < 1e-18);
        let i = resolve_instrument(&InstrumentField::Named("IDEAL".into())).unwrap();
        assert_eq!(i.load_cell.noise_std_single, 0.0);
        assert!(resolve_device(&DeviceField::Named("NO-SUCH".into())).is_err());
        assert!(resolve_instrument(&InstrumentField::Named("NO-SUCH".into())).is_err());
    }

    #[test]
    fn placement_field_modes_are_exclusive() {
        let d = resolve_device(&DeviceField::Named("REF-CANTILEVER".into())).unwrap();
        let center = PlacementField::default().resolve(&d).unwrap();
        assert!((center.x_s - d.mass.length / 2.0).abs() < 1e-18);
        let off = PlacementField {
            x_s: None,
            center_offset: Some(-50e-6),
        };
        assert!((off.resolve(&d).unwrap().x_s - (d.mass.length / 2.0 - 50e-6)).abs() < 1e-18);
        let abs = PlacementField {
            x_s: Some(1e-3),
            center_offset: None,
        };
        assert_eq!(abs.resolve(&d).unwrap().x_s, 1e-3);
        let both = PlacementField {
            x_s: Some(1e-3),
            center_offset: Some(0.0),
        };
        assert!(both.resolve(&d).is_err());
    }
}
