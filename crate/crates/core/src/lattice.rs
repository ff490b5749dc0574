//! Extended SSH chain: parameters, the cell ⊗ sublattice basis, the
//! exponentiated position operator and Pauli observables on the sublattice
//! degree of freedom.
//!
//! Basis ordering is interleaved, `(0,A), (0,B), (1,A), (1,B), ...`, so every
//! sublattice operator is block diagonal with contiguous 2x2 blocks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(format!("unknown boundary '{other}' (expected periodic|open)")),
        }
    }
}

/// One physical system: `n_cells` two-atom cells with intra-cell hopping `v`,
/// inter-cell hopping `w` (B of cell m to A of cell m+1) and second-neighbour
/// hopping `z` (A of cell m to B of cell m+1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_cells: usize,
    pub v: f64,
    pub w: f64,
    pub z: f64,
    pub boundary: Boundary,
}

impl ModelParams {
    pub fn new(n_cells: usize, v: f64, w: f64, z: f64, boundary: Boundary) -> Self {
        Self { n_cells, v, w, z, boundary }
    }

    pub fn periodic(n_cells: usize, v: f64, w: f64, z: f64) -> Self {
        Self::new(n_cells, v, w, z, Boundary::Periodic)
    }

    pub fn open(n_cells: usize, v: f64, w: f64, z: f64) -> Self {
        Self::new(n_cells, v, w, z, Boundary::Open)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::TooFewCells(self.n_cells));
        }
        for (name, value) in [("v", self.v), ("w", self.w), ("z", self.z)] {
            if !value.is_finite() {
                return Err(Error::NonFiniteHopping { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sublattice {
    A,
    B,
}

/// Label `|m, α⟩` of a composite basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub cell: usize,
    pub sublattice: Sublattice,
}

impl BasisIndex {
    pub fn new(cell: usize, sublattice: Sublattice) -> Self {
        Self { cell, sublattice }
    }

    pub fn a(cell: usize) -> Self {
        Self::new(cell, Sublattice::A)
    }

    pub fn b(cell: usize) -> Self {
        Self::new(cell, Sublattice::B)
    }

    pub fn flat(self) -> usize {
        2 * self.cell
            + match self.sublattice {
                Sublattice::A => 0,
                Sublattice::B => 1,
            }
    }

    pub fn from_flat(i: usize) -> Self {
        let sublattice = if i.is_multiple_of(2) { Sublattice::A } else { Sublattice::B };
        Self { cell: i / 2, sublattice }
    }
}

/// Builds the real symmetric `2N x 2N` Hamiltonian.
///
/// Nonzero couplings (plus transposes): `⟨m,A|H|m,B⟩ = v`,
/// `⟨m+1,A|H|m,B⟩ = w`, `⟨m+1,B|H|m,A⟩ = z`. For a periodic chain the last
/// cell couples back to cell 0. Couplings that land on the same entry (only
/// possible for N = 2 periodic) add.
pub fn build_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = params.n_cells;
    let dim = params.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);

    let mut couple = |i: BasisIndex, j: BasisIndex, t: f64| {
        let (i, j) = (i.flat(), j.flat());
        h[(i, j)] += t;
        h[(j, i)] += t;
    };

    for m in 0..n {
        couple(BasisIndex::a(m), BasisIndex::b(m), params.v);
    }
    let bonds = match params.boundary {
        Boundary::Periodic => n,
        Boundary::Open => n - 1,
    };
    for m in 0..bonds {
        let next = (m + 1) % n;
        couple(BasisIndex::a(next), BasisIndex::b(m), params.w);
        couple(BasisIndex::b(next), BasisIndex::a(m), params.z);
    }
    Ok(h)
}

/// Diagonal unitary `exp(i δ x̂)` with `δ = 2π/N`; both atoms of cell m sit
/// at position m.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionPhaseOperator {
    pub n_cells: usize,
    pub delta: f64,
    pub diagonal: Vec<C64>,
}

impl PositionPhaseOperator {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::TooFewCells(n_cells));
        }
        Ok(Self::with_delta(n_cells, 2.0 * PI / n_cells as f64))
    }

    /// Operator with an arbitrary phase step. `delta = 0` gives the identity,
    /// used as a formal small-twist probe.
    pub fn with_delta(n_cells: usize, delta: f64) -> Self {
        let diagonal = (0..n_cells)
            .flat_map(|m| {
                let phase = C64::from_polar(1.0, delta * m as f64);
                [phase, phase]
            })
            .collect();
        Self { n_cells, delta, diagonal }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn entry(&self, index: BasisIndex) -> C64 {
        self.diagonal[index.flat()]
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diagonal))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }
}

/// Generator direction for a Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Axis(Axis),
    Vector([f64; 3]),
}

impl From<Axis> for Direction {
    fn from(axis: Axis) -> Self {
        Direction::Axis(axis)
    }
}

impl From<[f64; 3]> for Direction {
    fn from(n: [f64; 3]) -> Self {
        Direction::Vector(n)
    }
}

/// `n·σ` in the `{A, B}` ordering.
pub fn pauli_block(n: [f64; 3]) -> [[C64; 2]; 2] {
    let [x, y, z] = n;
    [
        [C64::new(z, 0.0), C64::new(x, -y)],
        [C64::new(x, y), C64::new(-z, 0.0)],
    ]
}

/// `I_site ⊗ (n·σ)` as a dense `2N x 2N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub direction: [f64; 3],
    pub n_cells: usize,
    pub matrix: DMatrix<C64>,
}

pub fn pauli_observable(direction: impl Into<Direction>, n_cells: usize) -> Result<Observable> {
    let n = match direction.into() {
        Direction::Axis(axis) => axis.unit(),
        Direction::Vector(n) => {
            let norm = n.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NonUnitDirection(norm));
            }
            n
        }
    };
    let block = pauli_block(n);
    let dim = 2 * n_cells;
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for m in 0..n_cells {
        for (a, row) in block.iter().enumerate() {
            for (b, &value) in row.iter().enumerate() {
                matrix[(2 * m + a, 2 * m + b)] = value;
            }
        }
    }
    Ok(Observable { direction: n, n_cells, matrix })
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(h: &DMatrix<f64>, i: BasisIndex, j: BasisIndex) -> f64 {
        h[(i.flat(), j.flat())]
    }

    #[test]
    fn hamiltonian_entries_match_hand_expansion() {
        let h = build_hamiltonian(&ModelParams::periodic(3, 0.3, 0.5, 0.2)).unwrap();
        assert_eq!(at(&h, BasisIndex::a(1), BasisIndex::b(0)), 0.5);
        assert_eq!(at(&h, BasisIndex::b(1), BasisIndex::a(0)), 0.2);
        assert_eq!(at(&h, BasisIndex::a(0), BasisIndex::b(0)), 0.3);
        // wrap term
        assert_eq!(at(&h, BasisIndex::a(0), BasisIndex::b(2)), 0.5);

        let open = build_hamiltonian(&ModelParams::open(3, 0.3, 0.5, 0.2)).unwrap();
        assert_eq!(at(&open, BasisIndex::a(0), BasisIndex::b(2)), 0.0);
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let h = build_hamiltonian(&ModelParams::periodic(2, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(h, DMatrix::zeros(4, 4));
    }

    #[test]
    fn rejects_short_chains_and_nan() {
        assert_eq!(
            build_hamiltonian(&ModelParams::periodic(1, 0.1, 0.1, 0.1)),
            Err(Error::TooFewCells(1))
        );
        assert!(build_hamiltonian(&ModelParams::periodic(4, f64::NAN, 0.1, 0.1)).is_err());
        assert!(PositionPhaseOperator::new(1).is_err());
    }

    #[test]
    fn simple_ssh_has_no_second_neighbour_entries() {
        let h = build_hamiltonian(&ModelParams::periodic(5, 0.3, 0.5, 0.0)).unwrap();
        for m in 0..5 {
            assert_eq!(at(&h, BasisIndex::b((m + 1) % 5), BasisIndex::a(m)), 0.0);
        }
    }

    #[test]
    fn basis_index_is_a_bijection() {
        for i in 0..20 {
            assert_eq!(BasisIndex::from_flat(i).flat(), i);
        }
        assert_eq!(BasisIndex::b(3).flat(), 7);
    }

    #[test]
    fn position_phase_entries() {
        let x = PositionPhaseOperator::new(4).unwrap();
        let e = x.entry(BasisIndex::a(2));
        assert!((e - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(x.entry(BasisIndex::a(3)), x.entry(BasisIndex::b(3)));

        let x2 = PositionPhaseOperator::new(2).unwrap();
        let expected = [1.0, 1.0, -1.0, -1.0];
        for (got, want) in x2.diagonal.iter().zip(expected) {
            assert!((got - C64::new(want, 0.0)).norm() < 1e-15);
        }

        for n in 2..40 {
            let x = PositionPhaseOperator::new(n).unwrap();
            let product: f64 = x.diagonal.iter().map(|c| c.norm()).product();
            assert!((product - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_blocks() {
        let z = pauli_observable(Axis::Z, 1).unwrap();
        assert_eq!(z.matrix[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z.matrix[(1, 1)], C64::new(-1.0, 0.0));

        let x = pauli_observable(Axis::X, 1).unwrap();
        assert_eq!(x.matrix[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(x.matrix[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(x.matrix[(0, 0)], C64::new(0.0, 0.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = pauli_observable([s, s, 0.0], 1).unwrap();
        assert!((d.matrix[(0, 1)] - C64::new(s, -s)).norm() < 1e-15);
        assert!((d.matrix[(1, 0)] - C64::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_direction() {
        assert!(matches!(
            pauli_observable([1.0, 1.0, 0.0], 3),
            Err(Error::NonUnitDirection(_))
        ));
    }

    #[test]
    fn observables_square_to_identity() {
        let dirs: [[f64; 3]; 4] = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.6, 0.0, 0.8],
            [0.48, 0.6, 0.64],
        ];
        for n in dirs {
            let o = pauli_observable(n, 4).unwrap();
            let sq = &o.matrix * &o.matrix;
            let id = DMatrix::<C64>::identity(8, 8);
            assert!(max_abs(&(sq - id)) < 1e-12);
            assert!(max_abs(&(o.matrix.adjoint() - &o.matrix)) < 1e-15);
        }
    }
}
