//! Grids behind each published figure panel.

use std::fmt;
use std::str::FromStr;

use crate::lattice::Boundary;
use crate::polarization::PolarizationMode;
use crate::sweep::{Param, Quantities, SweepAxis, SweepSpec};

pub const FIGURE_CELLS: usize = 50;
pub const FIGURE_RESOLUTION: usize = 101;
pub const TEMPERATURE_RANGE: (f64, f64) = (0.01, 1.0);
pub const HOPPING_RANGE: (f64, f64) = (0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    F1a,
    F1b,
    F2a,
    F2b,
    F3a,
    F3b,
    F3c,
    F3d,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::F1a,
        FigureId::F1b,
        FigureId::F2a,
        FigureId::F2b,
        FigureId::F3a,
        FigureId::F3b,
        FigureId::F3c,
        FigureId::F3d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::F1a => "1a",
            FigureId::F1b => "1b",
            FigureId::F2a => "2a",
            FigureId::F2b => "2b",
            FigureId::F3a => "3a",
            FigureId::F3b => "3b",
            FigureId::F3c => "3c",
            FigureId::F3d => "3d",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown figure '{s}' (expected 1a|1b|2a|2b|3a|3b|3c|3d)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Polarization,
    Qfi,
}

/// Caption parameters of one panel. `axes` lists the swept parameters,
/// outermost first; every other parameter is taken from `fixed`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureDef {
    pub id: FigureId,
    pub panel: Panel,
    pub axes: [Param; 2],
    pub fixed: Vec<(Param, f64)>,
}

fn fixed(pairs: &[(Param, f64)]) -> Vec<(Param, f64)> {
    let mut all = pairs.to_vec();
    all.push((Param::N, FIGURE_CELLS as f64));
    all
}

pub fn figure_def(id: FigureId) -> FigureDef {
    use Param::*;
    let (panel, axes, pairs): (Panel, [Param; 2], &[(Param, f64)]) = match id {
        FigureId::F1a => (Panel::Polarization, [T, Z], &[(V, 0.3), (W, 0.5)]),
        FigureId::F1b => (Panel::Polarization, [T, Z], &[(V, 0.5), (W, 0.3)]),
        FigureId::F2a => (Panel::Qfi, [V, T], &[(W, 0.5), (Z, 0.0)]),
        FigureId::F2b => (Panel::Qfi, [T, V], &[(W, 0.5), (Z, 0.0)]),
        FigureId::F3a => (Panel::Qfi, [Z, T], &[(V, 0.3), (W, 0.5)]),
        FigureId::F3b => (Panel::Qfi, [T, Z], &[(V, 0.3), (W, 0.5)]),
        FigureId::F3c => (Panel::Qfi, [Z, T], &[(V, 0.5), (W, 0.3)]),
        FigureId::F3d => (Panel::Qfi, [T, Z], &[(V, 0.5), (W, 0.3)]),
    };
    FigureDef { id, panel, axes, fixed: fixed(pairs) }
}

fn axis(param: Param, resolution: usize) -> SweepAxis {
    let (lo, hi) = if param == Param::T { TEMPERATURE_RANGE } else { HOPPING_RANGE };
    SweepAxis::linspace(param, lo, hi, resolution)
}

/// Sweep for a figure panel with `resolution` points per axis.
pub fn figure_spec(id: FigureId, resolution: usize) -> SweepSpec {
    let def = figure_def(id);
    let quantities = match def.panel {
        Panel::Polarization => Quantities::polarization(vec![PolarizationMode::Determinant]),
        Panel::Qfi => Quantities::qfi(),
    };
    let axes = def.axes.iter().map(|&p| axis(p, resolution)).collect();
    let mut spec = SweepSpec::new(axes, def.fixed, quantities);
    spec.boundary = Boundary::Periodic;
    spec.label = format!("figure {id}");
    spec
}
