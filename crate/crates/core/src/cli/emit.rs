//! CSV and JSON emission of sweep records.
//!
//! Both formats carry the same flat columns in a fixed order. Numbers are
//! written in plain decimal notation rounded to a configurable number of
//! significant digits (trailing zeros trimmed); absent values are an empty
//! CSV cell or JSON `null`. A record with several polarization modes expands
//! to one row per mode.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::lattice::Axis;
use crate::sweep::ResultRecord;

pub const COLUMNS: [&str; 23] = [
    "T", "v", "w", "z", "N", "boundary", "mode", "P", "P_defined", "magnitude", "M_xx", "M_xy",
    "M_xz", "M_yy", "M_yz", "M_zz", "i_p", "dir_x", "dir_y", "dir_z", "purity", "entropy", "error",
];

pub const DEFAULT_PRECISION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv|json)")),
        }
    }
}

/// One output line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    #[serde(rename = "T")]
    pub t: f64,
    pub v: f64,
    pub w: f64,
    pub z: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub boundary: String,
    pub mode: Option<String>,
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "P_defined")]
    pub p_defined: Option<bool>,
    pub magnitude: Option<f64>,
    #[serde(rename = "M_xx")]
    pub m_xx: Option<f64>,
    #[serde(rename = "M_xy")]
    pub m_xy: Option<f64>,
    #[serde(rename = "M_xz")]
    pub m_xz: Option<f64>,
    #[serde(rename = "M_yy")]
    pub m_yy: Option<f64>,
    #[serde(rename = "M_yz")]
    pub m_yz: Option<f64>,
    #[serde(rename = "M_zz")]
    pub m_zz: Option<f64>,
    pub i_p: Option<f64>,
    pub dir_x: Option<f64>,
    pub dir_y: Option<f64>,
    pub dir_z: Option<f64>,
    pub purity: Option<f64>,
    pub entropy: Option<f64>,
    pub error: Option<String>,
}

enum Cell<'a> {
    Num(Option<f64>),
    Int(usize),
    Bool(Option<bool>),
    Str(Option<&'a str>),
}

impl Row {
    fn cells(&self) -> [Cell<'_>; 23] {
        use Cell::*;
        [
            Num(Some(self.t)),
            Num(Some(self.v)),
            Num(Some(self.w)),
            Num(Some(self.z)),
            Int(self.n),
            Str(Some(&self.boundary)),
            Str(self.mode.as_deref()),
            Num(self.p),
            Bool(self.p_defined),
            Num(self.magnitude),
            Num(self.m_xx),
            Num(self.m_xy),
            Num(self.m_xz),
            Num(self.m_yy),
            Num(self.m_yz),
            Num(self.m_zz),
            Num(self.i_p),
            Num(self.dir_x),
            Num(self.dir_y),
            Num(self.dir_z),
            Num(self.purity),
            Num(self.entropy),
            Str(self.error.as_deref()),
        ]
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Flattens records into rows, one per polarization mode.
pub fn rows_from_records(records: &[ResultRecord]) -> Vec<Row> {
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let matrix = r.qfi_matrix;
        let entry = |l, k| matrix.and_then(|m| finite(m.get(l, k)));
        let base = Row {
            t: r.temperature,
            v: r.model.v,
            w: r.model.w,
            z: r.model.z,
            n: r.model.n_cells,
            boundary: r.model.boundary.to_string(),
            mode: None,
            p: None,
            p_defined: None,
            magnitude: None,
            m_xx: entry(Axis::X, Axis::X),
            m_xy: entry(Axis::X, Axis::Y),
            m_xz: entry(Axis::X, Axis::Z),
            m_yy: entry(Axis::Y, Axis::Y),
            m_yz: entry(Axis::Y, Axis::Z),
            m_zz: entry(Axis::Z, Axis::Z),
            i_p: r.qfi.and_then(|q| finite(q.i_p)),
            dir_x: r.qfi.and_then(|q| finite(q.optimal_direction[0])),
            dir_y: r.qfi.and_then(|q| finite(q.optimal_direction[1])),
            dir_z: r.qfi.and_then(|q| finite(q.optimal_direction[2])),
            purity: r.diagnostics.and_then(|d| finite(d.purity)),
            entropy: r.diagnostics.and_then(|d| finite(d.entropy)),
            error: r.error.clone(),
        };
        if r.polarization.is_empty() {
            rows.push(base);
        } else {
            for p in &r.polarization {
                let mut row = base.clone();
                row.mode = Some(p.mode.to_string());
                row.p = finite(p.polarization);
                row.p_defined = Some(p.defined);
                row.magnitude = finite(p.magnitude);
                rows.push(row);
            }
        }
    }
    rows
}

/// Plain decimal rendering of `x` rounded to `sig` significant digits.
pub fn format_number(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent in {:e} output");
    let exponent: i64 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let point = exponent + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv(rows: &[Row], precision: usize) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row
            .cells()
            .iter()
            .map(|cell| match cell {
                Cell::Num(Some(x)) => format_number(*x, precision),
                Cell::Int(n) => n.to_string(),
                Cell::Bool(Some(b)) => b.to_string(),
                Cell::Str(Some(s)) => csv_escape(s),
                Cell::Num(None) | Cell::Bool(None) | Cell::Str(None) => String::new(),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_json(rows: &[Row], precision: usize) -> String {
    if rows.is_empty() {
        return "[]\n".into();
    }
    let mut out = String::from("[\n");
    for (i, row) in rows.iter().enumerate() {
        let fields: Vec<String> = COLUMNS
            .iter()
            .zip(row.cells().iter())
            .map(|(name, cell)| {
                let value = match cell {
                    Cell::Num(Some(x)) => format_number(*x, precision),
                    Cell::Int(n) => n.to_string(),
                    Cell::Bool(Some(b)) => b.to_string(),
                    Cell::Str(Some(s)) => serde_json::to_string(s).expect("string serializes"),
                    Cell::Num(None) | Cell::Bool(None) | Cell::Str(None) => "null".into(),
                };
                format!("\"{name}\": {value}")
            })
            .collect();
        out.push_str("  {");
        out.push_str(&fields.join(", "));
        out.push('}');
        if i + 1 < rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

pub fn parse_json(text: &str) -> serde_json::Result<Vec<Row>> {
    serde_json::from_str(text)
}

pub fn render(records: &[ResultRecord], format: Format, precision: usize) -> String {
    let rows = rows_from_records(records);
    match format {
        Format::Csv => write_csv(&rows, precision),
        Format::Json => write_json(&rows, precision),
    }
}

pub fn emit_records(
    records: &[ResultRecord],
    format: Format,
    precision: usize,
    destination: &mut dyn Write,
) -> io::Result<()> {
    destination.write_all(render(records, format, precision).as_bytes())?;
    destination.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;
    use crate::spectra::EnsembleKind;
    use crate::sweep::{evaluate_single, Quantities};
    use crate::PolarizationMode;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0, 12), "0");
        assert_eq!(format_number(-0.0, 12), "0");
        assert_eq!(format_number(0.5, 12), "0.5");
        assert_eq!(format_number(-0.25, 12), "-0.25");
        assert_eq!(format_number(50.0, 12), "50");
        assert_eq!(format_number(1234.5, 3), "1230");
        assert_eq!(format_number(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_number(2.0 / 3.0, 4), "0.6667");
        assert_eq!(format_number(1.5e-7, 12), "0.00000015");
        assert_eq!(format_number(9.99999, 3), "10");
        assert_eq!(format_number(0.01, 12), "0.01");
        assert_eq!(format_number(1e6, 12), "1000000");
    }

    #[test]
    fn empty_records_give_header_only() {
        let csv = render(&[], Format::Csv, 12);
        assert_eq!(csv, format!("{}\n", COLUMNS.join(",")));
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(render(&[], Format::Json, 12), "[]\n");
    }

    #[test]
    fn one_record_two_lines() {
        let model = ModelParams::periodic(4, 0.3, 0.5, 0.2);
        let r = evaluate_single(&model, 0.1, &Quantities::qfi(), EnsembleKind::Fermi, 1e-3);
        let csv = render(std::slice::from_ref(&r), Format::Csv, 12);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with('\n'));
        assert!(!csv.lines().any(|l| l.ends_with(' ')));
        assert_eq!(csv, render(&[r], Format::Csv, 12));
    }

    #[test]
    fn csv_quotes_awkward_strings() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a, b"), "\"a, b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let model = ModelParams::periodic(4, 0.3, 0.5, 0.2);
        let q = Quantities {
            polarization: vec![PolarizationMode::Determinant, PolarizationMode::Literal],
            qfi_matrix: true,
            interferometric_power: true,
            diagnostics: true,
        };
        let records: Vec<_> = [0.05, 0.5]
            .iter()
            .map(|&t| evaluate_single(&model, t, &q, EnsembleKind::Fermi, 1e-3))
            .collect();
        let json = render(&records, Format::Json, 12);
        let rows = parse_json(&json).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(write_json(&rows, 12), json);
    }
}
