//! JSON file formats and CSV writers.
//!
//! Complex numbers are `[re, im]` pairs. Measures are
//! `{"n": 1, "atoms": [{"z": [[1, 0], [0, 0]], "w": 0.5}, ...]}`, sphere
//! measures are `{"atoms": [{"x": [0, 0, 1], "w": 1}]}` and matrices are
//! `{"matrix": [[[re, im], ...], ...]}` in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use measure_balancer_core::{
    AtomicMeasure, CMatrix, CVector, ProjectivePoint, SphereMeasure, TraceRow, C64,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureAtom {
    pub z: Vec<Complex>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub n: usize,
    pub atoms: Vec<MeasureAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereAtom {
    pub x: [f64; 3],
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereFile {
    pub atoms: Vec<SphereAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub matrix: Vec<Vec<Complex>>,
}

pub fn complex(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn vector_json(v: &CVector) -> Vec<Complex> {
    v.iter().map(|z| complex(*z)).collect()
}

pub fn matrix_json(m: &CMatrix) -> Vec<Vec<Complex>> {
    m.row_iter().map(|row| row.iter().map(|z| complex(*z)).collect()).collect()
}

impl MeasureFile {
    pub fn to_measure(&self) -> Result<AtomicMeasure> {
        if self.atoms.is_empty() {
            bail!("measure has no atoms");
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.z.len() != self.n + 1 {
                bail!("atom {i} has {} coordinates, expected {}", atom.z.len(), self.n + 1);
            }
            let coeffs = CVector::from_iterator(atom.z.len(), atom.z.iter().map(|c| C64::new(c[0], c[1])));
            let point = ProjectivePoint::new(coeffs).with_context(|| format!("atom {i}"))?;
            atoms.push((point, atom.w));
        }
        Ok(AtomicMeasure::new(self.n, atoms)?)
    }

    pub fn from_measure(nu: &AtomicMeasure) -> Self {
        MeasureFile {
            n: nu.dim(),
            atoms: nu
                .atoms()
                .iter()
                .map(|a| MeasureAtom { z: vector_json(a.point.coeffs()), w: a.weight })
                .collect(),
        }
    }
}

impl SphereFile {
    pub fn to_measure(&self) -> Result<SphereMeasure> {
        let atoms = self.atoms.iter().map(|a| (Vector3::from(a.x), a.w)).collect();
        Ok(SphereMeasure::new(atoms)?)
    }
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.matrix.len();
        if rows == 0 || self.matrix.iter().any(|r| r.len() != rows) {
            bail!("matrix must be square and nonempty");
        }
        Ok(CMatrix::from_fn(rows, rows, |i, j| {
            let c = self.matrix[i][j];
            C64::new(c[0], c[1])
        }))
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    read_json::<MeasureFile>(path)?.to_measure().with_context(|| format!("invalid measure in {}", path.display()))
}

pub fn read_sphere(path: &Path) -> Result<SphereMeasure> {
    read_json::<SphereFile>(path)?
        .to_measure()
        .with_context(|| format!("invalid sphere measure in {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    read_json::<MatrixFile>(path)?.to_matrix().with_context(|| format!("invalid matrix in {}", path.display()))
}

/// Parses measure JSON text and validates it.
pub fn parse_measure(text: &str) -> Result<AtomicMeasure> {
    serde_json::from_str::<MeasureFile>(text)?.to_measure()
}

/// Canonical JSON for a validated measure: unit coefficient vectors with
/// fixed phase, merged atoms, weights summing to one.
pub fn measure_to_json(nu: &AtomicMeasure) -> String {
    serde_json::to_string_pretty(&MeasureFile::from_measure(nu)).expect("measure files always serialize")
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual", "kempf_ness"])?;
    for row in rows {
        w.write_record([row.iteration.to_string(), sci(row.residual), sci(row.kempf_ness)])?;
    }
    w.flush()?;
    Ok(())
}
