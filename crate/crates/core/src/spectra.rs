//! Dense diagonalization and thermal ensembles in spectral form.
//!
//! Two ensembles are provided over the single-particle space:
//!
//! * [`gibbs_weights`]: `λ_n ∝ exp(-E_n / T)`, the canonical single-particle
//!   Gibbs state.
//! * [`fermi_ensemble`]: `λ_n ∝ f_n`, the normalized one-body density matrix
//!   of the half-filled fermionic thermal state (`μ = 0`).
//!
//! They agree whenever the lowest band is exactly flat and separated, and
//! differ otherwise: the Gibbs state collapses onto the single lowest Bloch
//! state as `T → 0` while the fermionic one stays spread over the filled band.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights below this are flushed to exactly zero.
pub const WEIGHT_FLUSH: f64 = 1e-300;

/// Ascending eigenvalues with the matching orthonormal eigenvectors stored
/// column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, n: usize) -> DVector<f64> {
        self.eigenvectors.column(n).into_owned()
    }

    /// Largest deviation of `VᵀV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `max_n ‖H v_n − E_n v_n‖`.
    pub fn residual(&self, h: &DMatrix<f64>) -> f64 {
        (0..self.dim())
            .map(|n| {
                let v = self.eigenvectors.column(n);
                (h * v - v * self.energies[n]).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn max_asymmetry(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// Energies come out ascending; each eigenvector is signed so that its first
/// component above `1e-10` in magnitude is positive. Identical input bits give
/// identical output bits.
pub fn diagonalize(h: &DMatrix<f64>) -> Result<Spectrum> {
    let (rows, cols) = h.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let asym = max_asymmetry(h);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let n = rows;
    let max_iter = 1000 + 100 * n;
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence(n))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    if eig.eigenvalues.iter().chain(eig.eigenvectors.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence(n));
    }
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        if let Some(lead) = v.iter().find(|c| c.abs() > 1e-10) {
            if *lead < 0.0 {
                v.neg_mut();
            }
        }
        eigenvectors.set_column(col, &v);
    }
    Ok(Spectrum { energies, eigenvectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Canonical single-particle Gibbs weights.
    Gibbs,
    /// Normalized one-body density matrix of the half-filled Fermi sea.
    Fermi,
    /// Weights supplied directly.
    Custom,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Gibbs => "gibbs",
            EnsembleKind::Fermi => "fermi",
            EnsembleKind::Custom => "custom",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gibbs" => Ok(EnsembleKind::Gibbs),
            "fermi" => Ok(EnsembleKind::Fermi),
            other => Err(format!("unknown ensemble '{other}' (expected gibbs|fermi)")),
        }
    }
}

/// Density matrix `ρ = Σ_n λ_n |ψ_n⟩⟨ψ_n|` diagonal in the spectrum's basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    pub kind: EnsembleKind,
    pub temperature: Option<f64>,
    pub weights: Vec<f64>,
    pub spectrum: Arc<Spectrum>,
}

/// The ensemble type consumed by the polarization and QFI kernels.
pub type GibbsEnsemble = ThermalEnsemble;

impl ThermalEnsemble {
    /// Wraps arbitrary spectral weights; they must be non-negative and sum to 1
    /// within `1e-12`.
    pub fn from_weights(spectrum: Arc<Spectrum>, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, spectrum.dim())?;
        Ok(Self { kind: EnsembleKind::Custom, temperature: None, weights, spectrum })
    }

    /// Weight 1 on eigenvector `n`.
    pub fn pure(spectrum: Arc<Spectrum>, n: usize) -> Result<Self> {
        let dim = spectrum.dim();
        if n >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: n });
        }
        let mut weights = vec![0.0; dim];
        weights[n] = 1.0;
        Self::from_weights(spectrum, weights)
    }

    pub fn build(kind: EnsembleKind, spectrum: Arc<Spectrum>, temperature: f64) -> Result<Self> {
        match kind {
            EnsembleKind::Gibbs => gibbs_weights(spectrum, temperature),
            EnsembleKind::Fermi => fermi_ensemble(spectrum, temperature),
            EnsembleKind::Custom => Err(Error::InvalidWeights(
                "custom ensembles need explicit weights".into(),
            )),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Dense `ρ` in the site basis.
    pub fn density_matrix(&self) -> DMatrix<f64> {
        let v = &self.spectrum.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, n| v[(i, n)] * self.weights[n]);
        scaled * v.transpose()
    }
}

fn validate_weights(weights: &[f64], dim: usize) -> Result<()> {
    if weights.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(t))
    }
}

fn normalize_flushed(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidWeights(format!("unnormalizable weights (sum {total})")));
    }
    for w in raw.iter_mut() {
        *w /= total;
        if *w < WEIGHT_FLUSH {
            *w = 0.0;
        }
    }
    Ok(raw)
}

/// Degeneracy window for the `T = 0` ground cluster.
pub fn degeneracy_tolerance(e0: f64) -> f64 {
    1e-9 * e0.abs().max(1.0)
}

/// Canonical weights `λ_n = exp(-(E_n - E_0)/T) / Z`. At `T = 0` the ground
/// cluster `E_n - E_0 ≤ 1e-9·max(1,|E_0|)` is weighted uniformly.
pub fn gibbs_weights(spectrum: Arc<Spectrum>, temperature: f64) -> Result<ThermalEnsemble> {
    check_temperature(temperature)?;
    let energies = &spectrum.energies;
    let e0 = *energies.first().ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
    let raw: Vec<f64> = if temperature == 0.0 {
        let tol = degeneracy_tolerance(e0);
        energies.iter().map(|&e| if e - e0 <= tol { 1.0 } else { 0.0 }).collect()
    } else {
        energies.iter().map(|&e| (-(e - e0) / temperature).exp()).collect()
    };
    let weights = normalize_flushed(raw)?;
    Ok(ThermalEnsemble {
        kind: EnsembleKind::Gibbs,
        temperature: Some(temperature),
        weights,
        spectrum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationVector {
    pub occupations: Vec<f64>,
    pub chemical_potential: f64,
    pub temperature: f64,
}

/// Logistic in `(E - μ)/T`, evaluated without overflow.
pub fn fermi_dirac(energy: f64, mu: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return match energy.partial_cmp(&mu) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    let x = (energy - mu) / temperature;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

pub fn fermi_occupations(spectrum: &Spectrum, temperature: f64, mu: f64) -> Result<OccupationVector> {
    check_temperature(temperature)?;
    if !mu.is_finite() {
        return Err(Error::InvalidWeights(format!("chemical potential {mu}")));
    }
    let occupations = spectrum
        .energies
        .iter()
        .map(|&e| fermi_dirac(e, mu, temperature))
        .collect();
    Ok(OccupationVector { occupations, chemical_potential: mu, temperature })
}

/// `λ_n = f_n / Σ_j f_j` with `μ = 0`.
pub fn fermi_ensemble(spectrum: Arc<Spectrum>, temperature: f64) -> Result<ThermalEnsemble> {
    let occ = fermi_occupations(&spectrum, temperature, 0.0)?;
    let weights = normalize_flushed(occ.occupations)?;
    Ok(ThermalEnsemble {
        kind: EnsembleKind::Fermi,
        temperature: Some(temperature),
        weights,
        spectrum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleDiagnostics {
    pub purity: f64,
    pub entropy: f64,
}

pub fn ensemble_diagnostics(ensemble: &ThermalEnsemble) -> EnsembleDiagnostics {
    diagnostics_of(&ensemble.weights)
}

pub(crate) fn diagnostics_of(weights: &[f64]) -> EnsembleDiagnostics {
    let purity = weights.iter().map(|w| w * w).sum();
    let entropy = -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>();
    EnsembleDiagnostics { purity, entropy: entropy.max(0.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_spectrum(energies: &[f64]) -> Arc<Spectrum> {
        let n = energies.len();
        Arc::new(Spectrum {
            energies: energies.to_vec(),
            eigenvectors: DMatrix::identity(n, n),
        })
    }

    #[test]
    fn two_by_two_closed_forms() {
        let s = diagonalize(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(s.energies, vec![0.0, 0.0]);

        let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        let s = diagonalize(&h).unwrap();
        assert!((s.energies[0] + 0.3).abs() < 1e-15);
        assert!((s.energies[1] - 0.3).abs() < 1e-15);
        assert!(s.orthonormality_error() < 1e-12);
        assert!(s.residual(&h) < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.2, 0.0]);
        assert!(matches!(diagonalize(&h), Err(Error::NotSymmetric(_))));
        let h = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(diagonalize(&h), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn gibbs_limits() {
        let s = diag_spectrum(&[-1.0, 1.0]);
        let hot = gibbs_weights(s.clone(), 1e9).unwrap();
        assert!((hot.weights[0] - 0.5).abs() < 1e-8);
        assert!((hot.weights[1] - 0.5).abs() < 1e-8);

        let e2 = 2.0f64.exp();
        let warm = gibbs_weights(s.clone(), 1.0).unwrap();
        assert!((warm.weights[0] - e2 / (1.0 + e2)).abs() < 1e-15);
        assert!((warm.weights[0] - 0.8807971).abs() < 1e-7);
        assert!((warm.weights[1] - 0.1192029).abs() < 1e-7);

        let cold = gibbs_weights(diag_spectrum(&[-1.0, 0.0, 1.0]), 0.0).unwrap();
        assert_eq!(cold.weights, vec![1.0, 0.0, 0.0]);

        let degenerate = gibbs_weights(diag_spectrum(&[-1.0, -1.0, 1.0]), 0.0).unwrap();
        assert_eq!(degenerate.weights, vec![0.5, 0.5, 0.0]);

        assert!(gibbs_weights(s.clone(), -0.1).is_err());
        assert!(gibbs_weights(s, f64::NAN).is_err());
    }

    #[test]
    fn gibbs_flushes_underflow() {
        let w = gibbs_weights(diag_spectrum(&[0.0, 1.0]), 1e-3).unwrap();
        assert_eq!(w.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn fermi_values() {
        let s = diag_spectrum(&[-1.0, 1.0]);
        let cold = fermi_occupations(&s, 0.0, 0.0).unwrap();
        assert_eq!(cold.occupations, vec![1.0, 0.0]);
        let tiny = fermi_occupations(&s, 1e-6, 0.0).unwrap();
        assert_eq!(tiny.occupations, vec![1.0, 0.0]);

        let zero = diag_spectrum(&[0.0]);
        for t in [0.0, 0.1, 10.0] {
            assert_eq!(fermi_occupations(&zero, t, 0.0).unwrap().occupations, vec![0.5]);
        }

        let warm = fermi_occupations(&s, 1.0, 0.0).unwrap();
        assert!((warm.occupations[0] - 0.7310586).abs() < 1e-7);
        assert!((warm.occupations[1] - 0.2689414).abs() < 1e-7);
        assert!((warm.occupations[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn fermi_ensemble_normalizes_occupations() {
        let s = diag_spectrum(&[-1.0, -0.5, 0.5, 1.0]);
        let e = fermi_ensemble(s, 0.0).unwrap();
        assert_eq!(e.weights, vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(e.kind, EnsembleKind::Fermi);
    }

    #[test]
    fn diagnostics_values() {
        let pure = diagnostics_of(&[1.0, 0.0, 0.0]);
        assert_eq!(pure.purity, 1.0);
        assert_eq!(pure.entropy, 0.0);

        let uniform = diagnostics_of(&[0.25; 4]);
        assert!((uniform.purity - 0.25).abs() < 1e-15);
        assert!((uniform.entropy - 4.0f64.ln()).abs() < 1e-15);

        let two = diagnostics_of(&[0.8807971, 0.1192029]);
        // direct evaluation of Σλ² and -Σλ ln λ
        assert!((two.purity - 0.790_012_862_7).abs() < 1e-9);
        assert!((two.entropy - 0.365_333_811_0).abs() < 1e-9);
    }

    #[test]
    fn from_weights_validates() {
        let s = diag_spectrum(&[0.0, 1.0]);
        assert!(ThermalEnsemble::from_weights(s.clone(), vec![0.5, 0.6]).is_err());
        assert!(ThermalEnsemble::from_weights(s.clone(), vec![1.5, -0.5]).is_err());
        assert!(ThermalEnsemble::from_weights(s.clone(), vec![1.0]).is_err());
        assert!(ThermalEnsemble::pure(s, 2).is_err());
    }
}
