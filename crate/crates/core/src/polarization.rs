//! Resta polarization `P = Im ln ⟨X̂⟩ / 2π` for pure states and thermal
//! ensembles.
//!
//! Four readings of the ensemble expectation are exposed:
//!
//! * `Pure`: `⟨ψ|X̂|ψ⟩` for one state.
//! * `Literal`: `Tr[ρ X̂]`. Under periodic boundaries the diagonal of any
//!   `f(H)` is the same in every cell, so this vanishes identically; it is
//!   kept to expose exactly that.
//! * `Weighted`: `Σ_n λ_n γ_n`, the weight-averaged single-state phases.
//! * `Determinant`: the finite-temperature fermionic expectation
//!   `det[(I - F) + F U]` relative to a uniform ionic background, with `F` the
//!   Fermi occupation operator at `μ = 0`. At `T = 0` this is the Slater
//!   determinant of `U` over the filled band and is quantized to `0, ±1/2`.
//!
//! A result whose modulus falls below `tau_mag` is reported as undefined with
//! `P = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{PositionPhaseOperator, C64};
use crate::spectra::{fermi_occupations, Spectrum, ThermalEnsemble};

pub const DEFAULT_TAU_MAG: f64 = 1e-3;

/// Weights at or below this do not enter the weighted mode.
pub const WEIGHTED_MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationMode {
    Literal,
    Weighted,
    Determinant,
    Pure,
}

impl PolarizationMode {
    pub const ALL: [PolarizationMode; 4] = [
        PolarizationMode::Literal,
        PolarizationMode::Weighted,
        PolarizationMode::Determinant,
        PolarizationMode::Pure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolarizationMode::Literal => "literal",
            PolarizationMode::Weighted => "weighted",
            PolarizationMode::Determinant => "determinant",
            PolarizationMode::Pure => "pure",
        }
    }
}

impl fmt::Display for PolarizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolarizationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PolarizationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown polarization mode '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationResult {
    pub expectation: C64,
    pub magnitude: f64,
    /// Principal argument in `(-π, π]`; 0 when undefined.
    pub phase: f64,
    /// `phase / 2π`, in `(-1/2, 1/2]`.
    pub polarization: f64,
    pub defined: bool,
    pub mode: PolarizationMode,
}

impl PolarizationResult {
    fn from_expectation(expectation: C64, magnitude: f64, mode: PolarizationMode, tau_mag: f64) -> Self {
        let defined = magnitude >= tau_mag;
        let phase = if defined { principal_phase(expectation) } else { 0.0 };
        Self {
            expectation,
            magnitude,
            phase,
            polarization: phase / (2.0 * PI),
            defined,
            mode,
        }
    }
}

/// Argument in `(-π, π]`. Imaginary parts below `1e-12·|z|` are roundoff and
/// are dropped, so a real negative `z` maps to `+π`.
pub fn principal_phase(z: C64) -> f64 {
    let im = if z.im.abs() <= 1e-12 * z.norm() { 0.0 } else { z.im };
    let phase = im.atan2(z.re);
    if phase == -PI {
        PI
    } else {
        phase
    }
}

fn check_dim(x: &PositionPhaseOperator, found: usize) -> Result<()> {
    if x.dim() != found {
        return Err(Error::DimensionMismatch { expected: x.dim(), found });
    }
    Ok(())
}

/// `Σ_i |c_i|² U_ii` for a real eigenvector.
fn real_state_expectation(spectrum: &Spectrum, n: usize, x: &PositionPhaseOperator) -> C64 {
    spectrum
        .eigenvectors
        .column(n)
        .iter()
        .zip(&x.diagonal)
        .fold(C64::new(0.0, 0.0), |acc, (c, u)| acc + u * (c * c))
}

pub fn pure_state_phase(state: &DVector<C64>, x: &PositionPhaseOperator, tau_mag: f64) -> Result<PolarizationResult> {
    check_dim(x, state.len())?;
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(norm));
    }
    let expectation = state
        .iter()
        .zip(&x.diagonal)
        .fold(C64::new(0.0, 0.0), |acc, (c, u)| acc + u * c.norm_sqr());
    Ok(PolarizationResult::from_expectation(
        expectation,
        expectation.norm(),
        PolarizationMode::Pure,
        tau_mag,
    ))
}

/// Pure-state phase of eigenvector `n` of a spectrum.
pub fn eigenstate_phase(spectrum: &Spectrum, n: usize, x: &PositionPhaseOperator, tau_mag: f64) -> Result<PolarizationResult> {
    check_dim(x, spectrum.dim())?;
    let expectation = real_state_expectation(spectrum, n, x);
    Ok(PolarizationResult::from_expectation(
        expectation,
        expectation.norm(),
        PolarizationMode::Pure,
        tau_mag,
    ))
}

/// `Tr[ρ X̂] = Σ_n λ_n ⟨ψ_n|X̂|ψ_n⟩`.
pub fn thermal_polarization_literal(
    ensemble: &ThermalEnsemble,
    x: &PositionPhaseOperator,
    tau_mag: f64,
) -> Result<PolarizationResult> {
    let spectrum = &ensemble.spectrum;
    check_dim(x, spectrum.dim())?;
    let expectation = ensemble
        .weights
        .iter()
        .enumerate()
        .fold(C64::new(0.0, 0.0), |acc, (n, &w)| {
            acc + real_state_expectation(spectrum, n, x) * w
        });
    Ok(PolarizationResult::from_expectation(
        expectation,
        expectation.norm(),
        PolarizationMode::Literal,
        tau_mag,
    ))
}

/// `P = Σ_n λ_n γ_n / 2π` over states with `λ_n > 1e-6`. The reported
/// magnitude is the smallest single-state modulus among them; if any of them
/// is below `tau_mag` the result is undefined.
pub fn thermal_polarization_weighted(
    ensemble: &ThermalEnsemble,
    x: &PositionPhaseOperator,
    tau_mag: f64,
) -> Result<PolarizationResult> {
    let spectrum = &ensemble.spectrum;
    check_dim(x, spectrum.dim())?;

    let mut magnitude = f64::INFINITY;
    let mut phase = 0.0;
    for (n, &w) in ensemble.weights.iter().enumerate() {
        if w <= WEIGHTED_MIN_WEIGHT {
            continue;
        }
        let z = real_state_expectation(spectrum, n, x);
        let modulus = z.norm();
        magnitude = magnitude.min(modulus);
        if modulus >= tau_mag {
            phase += w * principal_phase(z);
        }
    }
    if !magnitude.is_finite() {
        magnitude = 0.0;
    }
    let defined = magnitude >= tau_mag;
    let phase = if defined { phase } else { 0.0 };
    Ok(PolarizationResult {
        expectation: C64::from_polar(magnitude, phase),
        magnitude,
        phase,
        polarization: phase / (2.0 * PI),
        defined,
        mode: PolarizationMode::Weighted,
    })
}

/// `exp(-i δ Σ_m m)`: one unit positive charge per cell at position m.
pub fn background_phase(x: &PositionPhaseOperator) -> C64 {
    let n = x.n_cells;
    let sum = n * (n - 1) / 2;
    let standard = 2.0 * PI / n as f64;
    let angle = if x.delta == standard {
        -2.0 * PI * (sum % n) as f64 / n as f64
    } else {
        -x.delta * sum as f64
    };
    C64::from_polar(1.0, angle)
}

/// `det[(I - F) + F U]` times the ionic background phase, with
/// `F = Σ_n f_n |ψ_n⟩⟨ψ_n|` at `μ = 0`. The defined flag compares `|det|`
/// against `tau_mag`.
pub fn thermal_polarization_determinant(
    spectrum: &Spectrum,
    temperature: f64,
    x: &PositionPhaseOperator,
    tau_mag: f64,
) -> Result<PolarizationResult> {
    let dim = spectrum.dim();
    check_dim(x, dim)?;
    let occ = fermi_occupations(spectrum, temperature, 0.0)?;
    let v = &spectrum.eigenvectors;
    let scaled = DMatrix::from_fn(dim, dim, |i, n| v[(i, n)] * occ.occupations[n]);
    let f = scaled * v.transpose();

    // (I - F) + F U = I + F (U - I), U diagonal
    let m = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) + (x.diagonal[j] - C64::new(1.0, 0.0)) * f[(i, j)]
    });
    let expectation = m.lu().determinant() * background_phase(x);
    Ok(PolarizationResult::from_expectation(
        expectation,
        expectation.norm(),
        PolarizationMode::Determinant,
        tau_mag,
    ))
}
