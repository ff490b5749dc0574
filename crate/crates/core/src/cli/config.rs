//! Run configuration: a flat JSON file, command-line flags and defaults.
//!
//! Every field is optional at each layer. Layers are merged field by field,
//! flags over file over defaults; `TOPO_THERMO_WORKERS` supplies the worker
//! count when neither flags nor the file do.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cli::emit::{Format, DEFAULT_PRECISION};
use crate::lattice::{Boundary, ModelParams};
use crate::polarization::{PolarizationMode, DEFAULT_TAU_MAG};
use crate::spectra::EnsembleKind;
use crate::sweep::{Param, Quantities, SweepAxis};

pub const WORKERS_ENV: &str = "TOPO_THERMO_WORKERS";

pub const DEFAULT_CELLS: usize = 50;
pub const DEFAULT_V: f64 = 0.3;
pub const DEFAULT_W: f64 = 0.5;
pub const DEFAULT_Z: f64 = 0.0;
pub const DEFAULT_TEMPERATURE: f64 = 0.05;
pub const DEFAULT_MODE: PolarizationMode = PolarizationMode::Determinant;
pub const DEFAULT_ENSEMBLE: EnsembleKind = EnsembleKind::Fermi;
pub const DEFAULT_VERBOSITY: u8 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_cells: Option<usize>,
    pub v: Option<f64>,
    pub w: Option<f64>,
    pub z: Option<f64>,
    pub boundary: Option<Boundary>,
    pub temperature: Option<OneOrMany<f64>>,
    pub mode: Option<OneOrMany<PolarizationMode>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub precision: Option<usize>,
    pub workers: Option<usize>,
    pub tau_mag: Option<f64>,
    pub verbosity: Option<u8>,
    pub ensemble: Option<EnsembleKind>,
    /// `name=start:stop:count` or `name=a,b,c`.
    pub axes: Option<Vec<String>>,
    /// Any of `polarization`, `qfi`, `qfi_matrix`, `i_p`, `diagnostics`.
    pub quantities: Option<Vec<String>>,
    pub label: Option<String>,
    pub eigenvectors: Option<bool>,
}

macro_rules! overlay_fields {
    ($high:ident, $low:ident; $($f:ident),*) => {
        RunConfig { $($f: $high.$f.or($low.$f)),* }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Field-wise merge; values in `self` win over `lower`.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        let high = self;
        overlay_fields!(high, lower;
            n_cells, v, w, z, boundary, temperature, mode, out, format, precision, workers,
            tau_mag, verbosity, ensemble, axes, quantities, label, eigenvectors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Polarization,
    Qfi,
    Sweep,
    Figure,
}

/// A configuration with every default applied and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelParams,
    pub temperatures: Vec<f64>,
    pub modes: Vec<PolarizationMode>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub precision: usize,
    pub workers: usize,
    pub tau_mag: f64,
    pub verbosity: u8,
    pub ensemble: EnsembleKind,
    pub axes: Vec<SweepAxis>,
    pub quantities: Quantities,
    pub label: String,
    pub eigenvectors: bool,
}

pub fn parse_axis(text: &str) -> Result<SweepAxis, String> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| format!("axis '{text}' must look like name=start:stop:count or name=a,b,c"))?;
    let param: Param = name.trim().parse()?;
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("axis '{text}': '{}' is not a number", s.trim()))
    };
    let parts: Vec<&str> = values.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("axis '{text}': count must be a positive integer"))?;
            if count == 0 {
                return Err(format!("axis '{text}': count must be a positive integer"));
            }
            Ok(SweepAxis::linspace(param, number(start)?, number(stop)?, count))
        }
        [list] => {
            let values = list.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            Ok(SweepAxis::new(param, values))
        }
        _ => Err(format!("axis '{text}' must look like name=start:stop:count or name=a,b,c")),
    }
}

pub fn parse_quantities(names: &[String], modes: &[PolarizationMode]) -> Result<Quantities, String> {
    let mut q = Quantities::default();
    for name in names {
        match name.as_str() {
            "polarization" => q.polarization = modes.to_vec(),
            "qfi" => {
                q.qfi_matrix = true;
                q.interferometric_power = true;
            }
            "qfi_matrix" => q.qfi_matrix = true,
            "i_p" => q.interferometric_power = true,
            "diagnostics" => q.diagnostics = true,
            other => {
                return Err(format!(
                    "unknown quantity '{other}' (expected polarization|qfi|qfi_matrix|i_p|diagnostics)"
                ))
            }
        }
    }
    Ok(q)
}

fn env_workers(env: Option<&str>) -> Result<Option<usize>, String> {
    match env {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!("{WORKERS_ENV} must be an integer >= 1, got '{s}'")),
        },
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Merges `flags` over `file` over defaults and validates the result for
/// `command`. `env_workers` is the raw value of `TOPO_THERMO_WORKERS`.
pub fn resolve(
    command: Command,
    flags: RunConfig,
    file: RunConfig,
    env_workers_value: Option<&str>,
) -> Result<Resolved, String> {
    let c = flags.over(file);
    let modes_given = c.mode.is_some();

    let model = ModelParams::new(
        c.n_cells.unwrap_or(DEFAULT_CELLS),
        c.v.unwrap_or(DEFAULT_V),
        c.w.unwrap_or(DEFAULT_W),
        c.z.unwrap_or(DEFAULT_Z),
        c.boundary.unwrap_or(Boundary::Periodic),
    );
    model.validate().map_err(|e| e.to_string())?;

    let temperatures = c.temperature.map(|t| t.to_vec()).unwrap_or_else(|| vec![DEFAULT_TEMPERATURE]);
    if temperatures.is_empty() {
        return Err("temperature list is empty".into());
    }
    if let Some(t) = temperatures.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(format!("temperature must be finite and non-negative, got {t}"));
    }

    let mut modes = c.mode.map(|m| m.to_vec()).unwrap_or_else(|| vec![DEFAULT_MODE]);
    if modes.is_empty() {
        return Err("mode list is empty".into());
    }
    let mut unique = Vec::with_capacity(modes.len());
    for m in modes.drain(..) {
        if !unique.contains(&m) {
            unique.push(m);
        }
    }
    let modes = unique;

    let precision = c.precision.unwrap_or(DEFAULT_PRECISION);
    if !(1..=17).contains(&precision) {
        return Err(format!("precision must be between 1 and 17, got {precision}"));
    }

    let env = env_workers(env_workers_value)?;
    let workers = match c.workers.or(env) {
        Some(0) => return Err("workers must be at least 1".into()),
        Some(n) => n,
        None => default_workers(),
    };

    let tau_mag = c.tau_mag.unwrap_or(DEFAULT_TAU_MAG);
    if !(tau_mag.is_finite() && tau_mag >= 0.0) {
        return Err(format!("tau_mag must be finite and non-negative, got {tau_mag}"));
    }

    let ensemble = c.ensemble.unwrap_or(DEFAULT_ENSEMBLE);

    let axes = c
        .axes
        .unwrap_or_default()
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<Vec<_>, _>>()?;
    if command != Command::Sweep && !axes.is_empty() {
        return Err("axes are only accepted by the sweep subcommand".into());
    }

    if command != Command::Sweep && c.quantities.is_some() {
        return Err("quantities are only accepted by the sweep subcommand".into());
    }
    let quantities = match command {
        Command::Polarization => Quantities::polarization(modes.clone()),
        Command::Qfi => {
            if modes_given {
                return Err("polarization modes are not used by the qfi subcommand".into());
            }
            Quantities { diagnostics: true, ..Quantities::qfi() }
        }
        Command::Sweep => {
            let names = c
                .quantities
                .unwrap_or_else(|| vec!["polarization".to_string(), "qfi".to_string()]);
            let q = parse_quantities(&names, &modes)?;
            if modes_given && q.polarization.is_empty() {
                return Err("polarization modes given but polarization is not a requested quantity".into());
            }
            q
        }
        Command::Spectrum | Command::Figure => Quantities::default(),
    };
    Ok(Resolved {
        model,
        temperatures,
        modes,
        out: c.out,
        format: c.format.unwrap_or(Format::Csv),
        precision,
        workers,
        tau_mag,
        verbosity: c.verbosity.unwrap_or(DEFAULT_VERBOSITY),
        ensemble,
        axes,
        quantities,
        label: c.label.unwrap_or_default(),
        eigenvectors: c.eigenvectors.unwrap_or(false),
    })
}
