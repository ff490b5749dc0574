//! Thermal extended Su–Schrieffer–Heeger chain: Resta polarization and
//! optimized quantum Fisher information over temperature and hopping grids.

pub mod cli;
pub mod error;
pub mod lattice;
pub mod polarization;
pub mod qfi;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
pub use lattice::{build_hamiltonian, pauli_observable, Axis, BasisIndex, Boundary, ModelParams, PositionPhaseOperator};
pub use polarization::{PolarizationMode, PolarizationResult};
pub use qfi::{interferometric_power, qfi_matrix, qfi_scalar, QfiMatrix, QfiReport};
pub use spectra::{diagonalize, fermi_ensemble, gibbs_weights, EnsembleKind, Spectrum, ThermalEnsemble};
pub use sweep::{locate_extremum, run_sweep, Objective, Param, Quantities, Quantity, ResultRecord, SweepAxis, SweepSpec};
