//! Cartesian parameter sweeps over `(T, v, w, z, N)`.
//!
//! Points are enumerated row-major with axes in declaration order (last axis
//! fastest). Each distinct `(N, v, w, z, boundary)` is diagonalized once and
//! shared by every temperature on it. Work is spread over a fixed-size rayon
//! pool; every point is computed by the same single-threaded code and results
//! are collected by index, so output does not depend on the worker count.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, Axis, Boundary, ModelParams, PositionPhaseOperator};
use crate::polarization::{
    eigenstate_phase, thermal_polarization_determinant, thermal_polarization_literal,
    thermal_polarization_weighted, PolarizationMode, PolarizationResult, DEFAULT_TAU_MAG,
};
use crate::qfi::{interferometric_power, qfi_matrix_with, PauliBasis, QfiMatrix, QfiReport};
use crate::spectra::{
    diagonalize, ensemble_diagnostics, EnsembleDiagnostics, EnsembleKind, Spectrum, ThermalEnsemble,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    T,
    V,
    W,
    Z,
    N,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::T, Param::V, Param::W, Param::Z, Param::N];

    pub fn name(self) -> &'static str {
        match self {
            Param::T => "T",
            Param::V => "v",
            Param::W => "w",
            Param::Z => "z",
            Param::N => "N",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown sweep parameter '{s}' (expected T|v|w|z|N)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(param: Param, values: Vec<f64>) -> Self {
        Self { param, values }
    }

    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(param: Param, start: f64, stop: f64, count: usize) -> Self {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => {
                let last = (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            stop
                        } else {
                            start + (stop - start) * (i as f64 / last)
                        }
                    })
                    .collect()
            }
        };
        Self { param, values }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Quantities {
    pub polarization: Vec<PolarizationMode>,
    pub qfi_matrix: bool,
    pub interferometric_power: bool,
    pub diagnostics: bool,
}

impl Quantities {
    pub fn qfi() -> Self {
        Self { qfi_matrix: true, interferometric_power: true, ..Self::default() }
    }

    pub fn polarization(modes: Vec<PolarizationMode>) -> Self {
        Self { polarization: modes, ..Self::default() }
    }

    fn needs_qfi(&self) -> bool {
        self.qfi_matrix || self.interferometric_power
    }

    fn needs_ensemble(&self) -> bool {
        self.needs_qfi()
            || self.diagnostics
            || self
                .polarization
                .iter()
                .any(|m| matches!(m, PolarizationMode::Literal | PolarizationMode::Weighted))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    /// Values for every parameter that is not an axis.
    pub fixed: Vec<(Param, f64)>,
    pub boundary: Boundary,
    pub quantities: Quantities,
    pub ensemble: EnsembleKind,
    pub tau_mag: f64,
    pub label: String,
}

impl SweepSpec {
    pub fn new(axes: Vec<SweepAxis>, fixed: Vec<(Param, f64)>, quantities: Quantities) -> Self {
        Self {
            axes,
            fixed,
            boundary: Boundary::Periodic,
            quantities,
            ensemble: EnsembleKind::Fermi,
            tau_mag: DEFAULT_TAU_MAG,
            label: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(msg));
        let mut seen: Vec<Param> = Vec::new();
        let declared = self
            .axes
            .iter()
            .map(|a| a.param)
            .chain(self.fixed.iter().map(|(p, _)| *p));
        for p in declared {
            if seen.contains(&p) {
                return bad(format!("parameter {p} given more than once"));
            }
            seen.push(p);
        }
        for p in Param::ALL {
            if !seen.contains(&p) {
                return bad(format!("parameter {p} is neither an axis nor fixed"));
            }
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return bad(format!("axis {} is empty", axis.param));
            }
            if axis.values.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                return bad(format!("axis {} is not strictly ascending", axis.param));
            }
            for &x in &axis.values {
                check_value(axis.param, x)?;
            }
        }
        for &(p, x) in &self.fixed {
            check_value(p, x)?;
        }
        if !(self.tau_mag >= 0.0 && self.tau_mag.is_finite()) {
            return bad(format!("tau_mag must be finite and non-negative, got {}", self.tau_mag));
        }
        if self.ensemble == EnsembleKind::Custom {
            return bad("sweeps need a thermal ensemble (gibbs or fermi)".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter values of grid point `index` (row-major, last axis fastest).
    pub fn point(&self, index: usize) -> GridPoint {
        let mut values: HashMap<Param, f64> = self.fixed.iter().copied().collect();
        let mut rest = index;
        for axis in self.axes.iter().rev() {
            let len = axis.values.len();
            values.insert(axis.param, axis.values[rest % len]);
            rest /= len;
        }
        GridPoint {
            temperature: values[&Param::T],
            model: ModelParams::new(
                values[&Param::N] as usize,
                values[&Param::V],
                values[&Param::W],
                values[&Param::Z],
                self.boundary,
            ),
        }
    }
}

fn check_value(p: Param, x: f64) -> Result<()> {
    let ok = match p {
        Param::T => x.is_finite() && x >= 0.0,
        Param::N => x.is_finite() && x >= 2.0 && x.fract() == 0.0,
        _ => x.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSweep(format!("invalid value {x} for {p}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub temperature: f64,
    pub model: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub index: usize,
    pub temperature: f64,
    pub model: ModelParams,
    pub polarization: Vec<PolarizationResult>,
    pub qfi_matrix: Option<QfiMatrix>,
    pub qfi: Option<QfiReport>,
    pub diagnostics: Option<EnsembleDiagnostics>,
    pub error: Option<String>,
    pub wall_time: Duration,
}

impl ResultRecord {
    fn empty(index: usize, point: GridPoint) -> Self {
        Self {
            index,
            temperature: point.temperature,
            model: point.model,
            polarization: Vec::new(),
            qfi_matrix: None,
            qfi: None,
            diagnostics: None,
            error: None,
            wall_time: Duration::ZERO,
        }
    }

    /// Equality of everything except the timing.
    pub fn same_values(&self, other: &ResultRecord) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
    }

    pub fn value(&self, quantity: Quantity) -> Option<f64> {
        match quantity {
            Quantity::InterferometricPower => self.qfi.map(|r| r.i_p),
            Quantity::MaxEigenvalue => self.qfi.map(|r| r.max_eigenvalue),
            Quantity::Qfi(l, k) => self
                .qfi_matrix
                .or(self.qfi.map(|r| r.matrix))
                .map(|m| m.get(l, k)),
            Quantity::Polarization(mode) => self
                .polarization
                .iter()
                .find(|p| p.mode == mode)
                .map(|p| p.polarization),
            Quantity::Purity => self.diagnostics.map(|d| d.purity),
            Quantity::Entropy => self.diagnostics.map(|d| d.entropy),
        }
    }
}

/// Everything derived from one Hamiltonian, shared across temperatures.
#[derive(Debug)]
pub struct SpectralData {
    pub spectrum: Arc<Spectrum>,
    pub pauli: Option<PauliBasis>,
    pub position: PositionPhaseOperator,
}

impl SpectralData {
    pub fn build(model: &ModelParams, quantities: &Quantities) -> Result<Self> {
        let h = build_hamiltonian(model)?;
        let spectrum = Arc::new(diagonalize(&h)?);
        let pauli = if quantities.needs_qfi() {
            Some(PauliBasis::new(&spectrum)?)
        } else {
            None
        };
        let position = PositionPhaseOperator::new(model.n_cells)?;
        Ok(Self { spectrum, pauli, position })
    }
}

struct PointOptions<'a> {
    quantities: &'a Quantities,
    ensemble: EnsembleKind,
    tau_mag: f64,
}

fn evaluate_with(
    data: &SpectralData,
    temperature: f64,
    opts: &PointOptions<'_>,
    record: &mut ResultRecord,
) -> Result<()> {
    let q = opts.quantities;
    let ensemble = if q.needs_ensemble() {
        Some(ThermalEnsemble::build(opts.ensemble, data.spectrum.clone(), temperature)?)
    } else {
        None
    };

    for &mode in &q.polarization {
        let x = &data.position;
        let result = match (mode, &ensemble) {
            (PolarizationMode::Literal, Some(e)) => thermal_polarization_literal(e, x, opts.tau_mag)?,
            (PolarizationMode::Weighted, Some(e)) => thermal_polarization_weighted(e, x, opts.tau_mag)?,
            (PolarizationMode::Determinant, _) => {
                thermal_polarization_determinant(&data.spectrum, temperature, x, opts.tau_mag)?
            }
            (PolarizationMode::Pure, _) => eigenstate_phase(&data.spectrum, 0, x, opts.tau_mag)?,
            _ => unreachable!("ensemble is built whenever literal/weighted modes are requested"),
        };
        record.polarization.push(result);
    }

    if let Some(e) = &ensemble {
        if q.needs_qfi() {
            let basis = data.pauli.as_ref().expect("Pauli basis built for QFI quantities");
            let matrix = qfi_matrix_with(e, basis)?;
            if q.qfi_matrix {
                record.qfi_matrix = Some(matrix);
            }
            if q.interferometric_power {
                record.qfi = Some(interferometric_power(&matrix)?);
            }
        }
        if q.diagnostics {
            record.diagnostics = Some(ensemble_diagnostics(e));
        }
    }
    Ok(())
}

fn evaluate_point(
    index: usize,
    point: GridPoint,
    data: &std::result::Result<SpectralData, Error>,
    opts: &PointOptions<'_>,
) -> ResultRecord {
    let start = Instant::now();
    let mut record = ResultRecord::empty(index, point);
    let outcome = match data {
        Ok(data) => evaluate_with(data, point.temperature, opts, &mut record),
        Err(e) => Err(e.clone()),
    };
    if let Err(e) = outcome {
        record.polarization.clear();
        record.qfi_matrix = None;
        record.qfi = None;
        record.diagnostics = None;
        record.error = Some(e.to_string());
    }
    record.wall_time = start.elapsed();
    record
}

/// Evaluates one point from scratch, diagonalizing its own Hamiltonian.
pub fn evaluate_single(
    model: &ModelParams,
    temperature: f64,
    quantities: &Quantities,
    ensemble: EnsembleKind,
    tau_mag: f64,
) -> ResultRecord {
    let opts = PointOptions { quantities, ensemble, tau_mag };
    let data = SpectralData::build(model, quantities);
    evaluate_point(0, GridPoint { temperature, model: *model }, &data, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct SpectralKey {
    n_cells: usize,
    v: u64,
    w: u64,
    z: u64,
    boundary: Boundary,
}

impl From<&ModelParams> for SpectralKey {
    fn from(m: &ModelParams) -> Self {
        Self {
            n_cells: m.n_cells,
            v: m.v.to_bits(),
            w: m.w.to_bits(),
            z: m.z.to_bits(),
            boundary: m.boundary,
        }
    }
}

/// Runs every grid point of `spec` on `worker_count` threads. Records come
/// back in grid order; per-point failures are recorded, not raised.
pub fn run_sweep(spec: &SweepSpec, worker_count: usize) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    if worker_count == 0 {
        return Err(Error::InvalidSweep("worker count must be at least 1".into()));
    }
    let points: Vec<GridPoint> = (0..spec.len()).map(|i| spec.point(i)).collect();

    let mut slots: HashMap<SpectralKey, usize> = HashMap::new();
    let mut models: Vec<ModelParams> = Vec::new();
    let point_slot: Vec<usize> = points
        .iter()
        .map(|p| {
            *slots.entry(SpectralKey::from(&p.model)).or_insert_with(|| {
                models.push(p.model);
                models.len() - 1
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count)
        .build()
        .map_err(|e| Error::InvalidSweep(format!("cannot start worker pool: {e}")))?;

    let opts = PointOptions {
        quantities: &spec.quantities,
        ensemble: spec.ensemble,
        tau_mag: spec.tau_mag,
    };
    let records = pool.install(|| {
        let spectra: Vec<std::result::Result<SpectralData, Error>> = models
            .par_iter()
            .map(|m| SpectralData::build(m, &spec.quantities))
            .collect();
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| evaluate_point(i, p, &spectra[point_slot[i]], &opts))
            .collect()
    });
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    InterferometricPower,
    MaxEigenvalue,
    Qfi(Axis, Axis),
    Polarization(PolarizationMode),
    Purity,
    Entropy,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::InterferometricPower => f.write_str("i_p"),
            Quantity::MaxEigenvalue => f.write_str("max_eigenvalue"),
            Quantity::Qfi(l, k) => write!(f, "M_{l:?}{k:?}"),
            Quantity::Polarization(mode) => write!(f, "P[{mode}]"),
            Quantity::Purity => f.write_str("purity"),
            Quantity::Entropy => f.write_str("entropy"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub index: usize,
    pub temperature: f64,
    pub model: ModelParams,
    pub value: f64,
}

/// First record (in record order) attaining the extremum of `quantity`.
/// Records lacking the quantity are skipped.
pub fn locate_extremum(records: &[ResultRecord], quantity: Quantity, objective: Objective) -> Result<Extremum> {
    let mut best: Option<Extremum> = None;
    for (i, r) in records.iter().enumerate() {
        let Some(value) = r.value(quantity) else { continue };
        let better = match (&best, objective) {
            (None, _) => true,
            (Some(b), Objective::Max) => value > b.value,
            (Some(b), Objective::Min) => value < b.value,
        };
        if better {
            best = Some(Extremum { index: i, temperature: r.temperature, model: r.model, value });
        }
    }
    best.ok_or_else(|| Error::QuantityAbsent(quantity.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(t: f64, v: f64, w: f64, z: f64, n: usize) -> Vec<(Param, f64)> {
        vec![(Param::T, t), (Param::V, v), (Param::W, w), (Param::Z, z), (Param::N, n as f64)]
    }

    fn without(mut f: Vec<(Param, f64)>, p: Param) -> Vec<(Param, f64)> {
        f.retain(|(q, _)| *q != p);
        f
    }

    #[test]
    fn ordering_is_row_major() {
        let spec = SweepSpec::new(
            vec![SweepAxis::new(Param::T, vec![0.1]), SweepAxis::new(Param::Z, vec![0.0, 0.5])],
            without(without(fixed(0.0, 0.3, 0.5, 0.0, 6), Param::T), Param::Z),
            Quantities::qfi(),
        );
        let records = run_sweep(&spec, 2).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!((records[0].temperature, records[0].model.z), (0.1, 0.0));
        assert_eq!((records[1].temperature, records[1].model.z), (0.1, 0.5));

        let spec = SweepSpec::new(
            vec![SweepAxis::new(Param::V, vec![0.1, 0.2]), SweepAxis::new(Param::T, vec![0.1, 0.2, 0.3])],
            without(without(fixed(0.0, 0.0, 0.5, 0.0, 4), Param::T), Param::V),
            Quantities::default(),
        );
        let got: Vec<(f64, f64)> = (0..spec.len()).map(|i| (spec.point(i).model.v, spec.point(i).temperature)).collect();
        assert_eq!(
            got,
            vec![(0.1, 0.1), (0.1, 0.2), (0.1, 0.3), (0.2, 0.1), (0.2, 0.2), (0.2, 0.3)]
        );
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let q = Quantities::qfi();
        let missing = SweepSpec::new(vec![], without(fixed(0.1, 0.3, 0.5, 0.0, 4), Param::Z), q.clone());
        assert!(matches!(missing.validate(), Err(Error::InvalidSweep(_))));

        let twice = SweepSpec::new(vec![SweepAxis::new(Param::T, vec![0.1])], fixed(0.1, 0.3, 0.5, 0.0, 4), q.clone());
        assert!(twice.validate().is_err());

        let descending = SweepSpec::new(
            vec![SweepAxis::new(Param::T, vec![0.2, 0.1])],
            without(fixed(0.0, 0.3, 0.5, 0.0, 4), Param::T),
            q.clone(),
        );
        assert!(descending.validate().is_err());

        let negative_t = SweepSpec::new(vec![], fixed(-0.1, 0.3, 0.5, 0.0, 4), q.clone());
        assert!(negative_t.validate().is_err());

        let fractional_n = SweepSpec::new(vec![], fixed(0.1, 0.3, 0.5, 0.0, 4).into_iter().map(|(p, x)| if p == Param::N { (p, 4.5) } else { (p, x) }).collect(), q.clone());
        assert!(fractional_n.validate().is_err());

        let empty_axis = SweepSpec::new(
            vec![SweepAxis::new(Param::T, vec![])],
            without(fixed(0.0, 0.3, 0.5, 0.0, 4), Param::T),
            q.clone(),
        );
        assert!(empty_axis.validate().is_err());

        let ok = SweepSpec::new(vec![], fixed(0.1, 0.3, 0.5, 0.0, 4), q);
        assert!(run_sweep(&ok, 0).is_err());
    }

    #[test]
    fn point_failures_become_flagged_records() {
        // N = 2 periodic puts w and z on the same entry; 1e308 + 1e308 overflows.
        let spec = SweepSpec::new(
            vec![SweepAxis::new(Param::Z, vec![0.1, 1e308])],
            without(fixed(0.1, 0.3, 1e308, 0.0, 2), Param::Z),
            Quantities::qfi(),
        );
        let records = run_sweep(&spec, 2).unwrap();
        assert_eq!(records.len(), 2);
        let failed = &records[1];
        assert!(failed.error.is_some());
        assert!(failed.qfi.is_none() && failed.qfi_matrix.is_none());
    }

    #[test]
    fn extremum_examples() {
        let spec = SweepSpec::new(vec![], fixed(0.1, 0.3, 0.5, 0.0, 4), Quantities::qfi());
        let base = run_sweep(&spec, 1).unwrap().remove(0);
        let with_ip = |x: f64| {
            let mut r = base.clone();
            r.qfi.as_mut().unwrap().i_p = x;
            r
        };
        let records = vec![with_ip(0.2), with_ip(0.6), with_ip(0.4)];
        let e = locate_extremum(&records, Quantity::InterferometricPower, Objective::Max).unwrap();
        assert_eq!((e.index, e.value), (1, 0.6));
        let e = locate_extremum(&records, Quantity::InterferometricPower, Objective::Min).unwrap();
        assert_eq!((e.index, e.value), (0, 0.2));

        let single = vec![with_ip(0.3)];
        let e = locate_extremum(&single, Quantity::InterferometricPower, Objective::Max).unwrap();
        assert_eq!((e.index, e.value), (0, 0.3));

        let ties = vec![with_ip(0.5), with_ip(0.5)];
        assert_eq!(locate_extremum(&ties, Quantity::InterferometricPower, Objective::Max).unwrap().index, 0);

        assert!(matches!(
            locate_extremum(&records, Quantity::Purity, Objective::Max),
            Err(Error::QuantityAbsent(_))
        ));
    }

    #[test]
    fn linspace_hits_endpoints() {
        let a = SweepAxis::linspace(Param::Z, 0.0, 1.0, 101);
        assert_eq!(a.values.len(), 101);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.values[50], 0.5);
        assert_eq!(a.values[100], 1.0);
        assert_eq!(SweepAxis::linspace(Param::T, 0.3, 1.0, 1).values, vec![0.3]);
    }
}
