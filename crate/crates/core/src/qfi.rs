//! Quantum Fisher information of a spectral-form density matrix, the 3x3 QFI
//! matrix over the sublattice Pauli generators `I_site ⊗ σ_l`, and its
//! minimum eigenvalue (the interferometric power).
//!
//! Normalization: `F = ½ Σ_{m,n} (λ_m - λ_n)² / (λ_m + λ_n) |⟨n|A|m⟩|²`.
//! With the ½ prefactor the pure-state limit is the plain variance
//! `⟨A²⟩ - ⟨A⟩²`, a quarter of the conventional QFI.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::lattice::{pauli_observable, Axis, C64};
use crate::spectra::{Spectrum, ThermalEnsemble};

/// Pairs with `λ_m + λ_n` below this are skipped. Each skipped pair changes
/// `F` by at most `ε_pair · |A_nm|²`.
pub const EPS_PAIR: f64 = 1e-12;

/// Tolerance for symmetry and PSD checks on the 3x3 matrix.
pub const MATRIX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMatrix {
    pub entries: Matrix3<f64>,
}

impl QfiMatrix {
    pub fn get(&self, l: Axis, k: Axis) -> f64 {
        self.entries[(axis_index(l), axis_index(k))]
    }
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiReport {
    pub matrix: QfiMatrix,
    /// Smallest eigenvalue, clamped at 0.
    pub i_p: f64,
    pub optimal_direction: [f64; 3],
    /// Ascending eigenvalues of the matrix (smallest one clamped).
    pub eigenvalues: [f64; 3],
    pub max_eigenvalue: f64,
}

#[inline]
fn pair_weight(a: f64, b: f64, eps_pair: f64) -> Option<f64> {
    let s = a + b;
    if s < eps_pair || a == b {
        None
    } else {
        let d = a - b;
        Some(d * d / s)
    }
}

fn to_complex(v: &DMatrix<f64>) -> DMatrix<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// `Vᵀ A V` for the spectrum's real eigenvectors.
pub fn to_eigenbasis(spectrum: &Spectrum, a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = spectrum.dim();
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: a.nrows().max(a.ncols()) });
    }
    let v = to_complex(&spectrum.eigenvectors);
    Ok(v.transpose() * (a * &v))
}

fn check_weights(ensemble: &ThermalEnsemble) -> Result<()> {
    if let Some(w) = ensemble.weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("negative weight {w}")));
    }
    if ensemble.weights.len() != ensemble.spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.spectrum.dim(),
            found: ensemble.weights.len(),
        });
    }
    Ok(())
}

/// QFI of the ensemble for a Hermitian generator given in the site basis.
pub fn qfi_scalar(ensemble: &ThermalEnsemble, a: &DMatrix<C64>) -> Result<f64> {
    qfi_scalar_with_cutoff(ensemble, a, EPS_PAIR)
}

/// As [`qfi_scalar`] with an explicit pair cutoff; `0.0` keeps every pair.
pub fn qfi_scalar_with_cutoff(ensemble: &ThermalEnsemble, a: &DMatrix<C64>, eps_pair: f64) -> Result<f64> {
    check_weights(ensemble)?;
    let elements = to_eigenbasis(&ensemble.spectrum, a)?;
    let lambda = &ensemble.weights;
    let dim = lambda.len();
    let mut total = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            if let Some(w) = pair_weight(lambda[m], lambda[n], eps_pair) {
                total += w * elements[(n, m)].norm_sqr();
            }
        }
    }
    Ok(0.5 * total)
}

/// The three Pauli generators expressed in a spectrum's eigenbasis. Depends
/// only on the eigenvectors, so one instance serves every temperature.
#[derive(Debug, Clone)]
pub struct PauliBasis {
    pub elements: [DMatrix<C64>; 3],
}

impl PauliBasis {
    pub fn new(spectrum: &Spectrum) -> Result<Self> {
        let dim = spectrum.dim();
        if !dim.is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: dim + 1, found: dim });
        }
        let n_cells = dim / 2;
        let build = |axis: Axis| -> Result<DMatrix<C64>> {
            let obs = pauli_observable(axis, n_cells)?;
            to_eigenbasis(spectrum, &obs.matrix)
        };
        Ok(Self { elements: [build(Axis::X)?, build(Axis::Y)?, build(Axis::Z)?] })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }
}

pub fn qfi_matrix(ensemble: &ThermalEnsemble) -> Result<QfiMatrix> {
    let basis = PauliBasis::new(&ensemble.spectrum)?;
    qfi_matrix_with(ensemble, &basis)
}

const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// `M_lk = ½ Σ_{m,n} w_mn ⟨n|Σ_l|m⟩⟨m|Σ_k|n⟩` with a precomputed basis.
pub fn qfi_matrix_with(ensemble: &ThermalEnsemble, basis: &PauliBasis) -> Result<QfiMatrix> {
    check_weights(ensemble)?;
    let lambda = &ensemble.weights;
    let dim = lambda.len();
    if basis.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: basis.dim() });
    }
    let [sx, sy, sz] = &basis.elements;
    let s = [sx, sy, sz];

    let mut acc = [C64::new(0.0, 0.0); 6];
    for m in 0..dim {
        for n in 0..dim {
            let Some(w) = pair_weight(lambda[m], lambda[n], EPS_PAIR) else {
                continue;
            };
            let nm = [s[0][(n, m)], s[1][(n, m)], s[2][(n, m)]];
            let mn = [s[0][(m, n)], s[1][(m, n)], s[2][(m, n)]];
            for (slot, &(l, k)) in UPPER.iter().enumerate() {
                acc[slot] += nm[l] * mn[k] * w;
            }
        }
    }

    let residue = acc.iter().map(|c| 0.5 * c.im.abs()).fold(0.0, f64::max);
    if residue > MATRIX_TOL {
        return Err(Error::ImaginaryResidue(residue));
    }
    let mut entries = Matrix3::zeros();
    for (slot, &(l, k)) in UPPER.iter().enumerate() {
        let value = 0.5 * acc[slot].re;
        entries[(l, k)] = value;
        entries[(k, l)] = value;
    }
    Ok(QfiMatrix { entries })
}

/// Minimum eigenvalue of the QFI matrix and its eigenvector. The direction is
/// signed so its first component above `1e-12` in magnitude is positive.
pub fn interferometric_power(matrix: &QfiMatrix) -> Result<QfiReport> {
    let m = matrix.entries;
    let asym = (m - m.transpose()).amax();
    if asym > MATRIX_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut eigenvalues = order.map(|k| eig.eigenvalues[k]);
    if eigenvalues[0] < -MATRIX_TOL {
        return Err(Error::NotPositiveSemidefinite(eigenvalues[0]));
    }
    eigenvalues[0] = eigenvalues[0].max(0.0);

    let mut dir: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    dir /= dir.norm();
    if let Some(lead) = dir.iter().find(|c| c.abs() > 1e-12) {
        if *lead < 0.0 {
            dir.neg_mut();
        }
    }
    Ok(QfiReport {
        matrix: *matrix,
        i_p: eigenvalues[0],
        optimal_direction: [dir[0], dir[1], dir[2]],
        eigenvalues,
        max_eigenvalue: eigenvalues[2],
    })
}

/// Independent QFI estimate from the Bures fidelity between `ρ` and
/// `e^{-iA dθ} ρ e^{iA dθ}`, rescaled to the ½-prefactor normalization:
/// `F ≈ 2 (1 - √Fid) / dθ²`.
///
/// `√Fid = ‖√ρ U √ρ‖₁` (the trace norm), evaluated with an SVD so that
/// rank-deficient states do not lose precision to square roots of roundoff.
pub fn qfi_fidelity_oracle(ensemble: &ThermalEnsemble, a: &DMatrix<C64>, dtheta: f64) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&dtheta) {
        return Err(Error::StepOutOfRange(dtheta));
    }
    check_weights(ensemble)?;
    let dim = ensemble.dim();
    if dim > 64 {
        return Err(Error::OracleTooLarge(dim));
    }
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: a.nrows() });
    }
    let herm = (a - a.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if herm > 1e-12 {
        return Err(Error::NotSymmetric(herm));
    }

    let v = to_complex(&ensemble.spectrum.eigenvectors);
    let sqrt_w = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(ensemble.weights[i].sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sqrt_rho = &v * sqrt_w * v.adjoint();

    let eig = SymmetricEigen::new(a.clone());
    let phases = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::from_polar(1.0, -eig.eigenvalues[i] * dtheta)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();

    let overlap = &sqrt_rho * u * &sqrt_rho;
    let root_fidelity: f64 = overlap.singular_values().iter().sum();
    Ok(2.0 * (1.0 - root_fidelity) / (dtheta * dtheta))
}
