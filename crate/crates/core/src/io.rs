//! Interchange formats: JSON documents for sampled fields and CSV tables
//! for spectra, residuals, and evolution diagnostics.
//!
//! A field document is `{ "m": int, "grid": {"x_min", "x_max", "n",
//! "periodic"}, "samples": [[ [re, im], ... ]] }` with one inner array per
//! grid point holding row-major `[re, im]` entry pairs. CSV floats carry 17
//! significant digits so values round-trip exactly.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::UnitaryFamily;
use crate::grid::Grid;
use crate::lax::SpaceTimeField;
use crate::potential::MatrixPotential;
use crate::spinor::SpinorField;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub periodic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDoc {
    pub m: usize,
    pub grid: GridDoc,
    pub samples: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeDoc {
    pub dt: f64,
    pub t0: f64,
    pub slices: Vec<FieldDoc>,
}

impl From<&Grid> for GridDoc {
    fn from(g: &Grid) -> Self {
        GridDoc {
            x_min: g.x_min,
            x_max: g.x_max,
            n: g.n,
            periodic: g.periodic,
        }
    }
}

impl GridDoc {
    pub fn to_grid(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.n, self.periodic)
    }
}

fn pack_matrix(a: &Array2<C64>) -> Vec<[f64; 2]> {
    a.iter().map(|z| [z.re, z.im]).collect()
}

fn unpack_matrix(entries: &[[f64; 2]], rows: usize, cols: usize) -> Result<Array2<C64>> {
    if entries.len() != rows * cols {
        return Err(Error::domain(format!(
            "expected {} entries per sample, got {}",
            rows * cols,
            entries.len()
        )));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| {
        C64::new(entries[i * cols + j][0], entries[i * cols + j][1])
    }))
}

pub fn potential_to_doc(q: &MatrixPotential) -> FieldDoc {
    FieldDoc {
        m: q.m(),
        grid: q.grid().into(),
        samples: q.samples().iter().map(pack_matrix).collect(),
    }
}

pub fn potential_from_doc(doc: &FieldDoc, allow_asymmetric: bool) -> Result<MatrixPotential> {
    let grid = doc.grid.to_grid()?;
    let m = doc.m;
    let samples = doc
        .samples
        .iter()
        .map(|s| unpack_matrix(s, m, m))
        .collect::<Result<Vec<_>>>()?;
    if allow_asymmetric {
        MatrixPotential::from_samples_asymmetric(grid, m, samples)
    } else {
        MatrixPotential::from_samples(grid, m, samples)
    }
}

pub fn spinor_to_doc(f: &SpinorField) -> FieldDoc {
    FieldDoc {
        m: f.m(),
        grid: f.grid().into(),
        samples: (0..f.grid().n)
            .map(|k| f.value_at(k).iter().map(|z| [z.re, z.im]).collect())
            .collect(),
    }
}

pub fn spinor_from_doc(doc: &FieldDoc) -> Result<SpinorField> {
    let grid = doc.grid.to_grid()?;
    let m = doc.m;
    let mut samples = Array2::zeros((grid.n, 2 * m));
    if doc.samples.len() != grid.n {
        return Err(Error::domain("sample count does not match grid"));
    }
    for (k, entry) in doc.samples.iter().enumerate() {
        if entry.len() != 2 * m {
            return Err(Error::domain("spinor sample length must be 2m"));
        }
        for (j, re_im) in entry.iter().enumerate() {
            samples[[k, j]] = C64::new(re_im[0], re_im[1]);
        }
    }
    SpinorField::from_samples(grid, m, samples)
}

pub fn unitary_family_to_doc(u: &UnitaryFamily) -> FieldDoc {
    FieldDoc {
        m: u.m(),
        grid: u.grid().into(),
        samples: u.samples().iter().map(pack_matrix).collect(),
    }
}

pub fn spacetime_to_doc(f: &SpaceTimeField) -> SpaceTimeDoc {
    SpaceTimeDoc {
        dt: f.dt(),
        t0: f.t0(),
        slices: (0..f.num_slices())
            .map(|j| FieldDoc {
                m: f.m(),
                grid: f.grid().into(),
                samples: f.slice(j).iter().map(pack_matrix).collect(),
            })
            .collect(),
    }
}

pub fn spacetime_from_doc(doc: &SpaceTimeDoc) -> Result<SpaceTimeField> {
    if doc.slices.is_empty() {
        return Err(Error::domain("space-time document has no slices"));
    }
    let grid = doc.slices[0].grid.to_grid()?;
    let m = doc.slices[0].m;
    let slices = doc
        .slices
        .iter()
        .map(|s| {
            s.samples
                .iter()
                .map(|e| unpack_matrix(e, m, m))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(grid, m, doc.t0, doc.dt, slices)
}

/// 17 significant digits; round-trips f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `re,im` rows, one eigenvalue per row, LF endings.
pub fn spectrum_csv(eigenvalues: &[C64]) -> String {
    let mut out = String::from("re,im\n");
    for z in eigenvalues {
        out.push_str(&format_float(z.re));
        out.push(',');
        out.push_str(&format_float(z.im));
        out.push('\n');
    }
    out
}

/// One scalar check per row.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualRow {
    pub fn le(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        ResidualRow {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// For lower bounds (gaps): passes when value >= tolerance.
    pub fn ge(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        ResidualRow {
            name: name.into(),
            value,
            tolerance,
            pass: value >= tolerance,
        }
    }
}

pub fn residuals_csv(rows: &[ResidualRow]) -> String {
    let mut out = String::from("name,value,tolerance,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.name,
            format_float(r.value),
            format_float(r.tolerance),
            r.pass
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub l2_norm: f64,
    pub spectral_drift: Option<f64>,
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,l2_norm,spectral_drift\n");
    for r in rows {
        out.push_str(&format_float(r.t));
        out.push(',');
        out.push_str(&format_float(r.l2_norm));
        out.push(',');
        if let Some(d) = r.spectral_drift {
            out.push_str(&format_float(d));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    #[test]
    fn potential_round_trips_bitwise() {
        let g = Grid::new(-7.0, 9.0, 12, true).unwrap();
        let q = MatrixPotential::sample(
            &PotentialSpec::RandomBandlimited {
                k_max: 2,
                period: 16.0,
                seed: 99,
            },
            &g,
            2,
        )
        .unwrap();
        let doc = potential_to_doc(&q);
        let json = serde_json::to_string(&doc).unwrap();
        let back: FieldDoc = serde_json::from_str(&json).unwrap();
        let q2 = potential_from_doc(&back, false).unwrap();
        assert!(q2.grid().same_as(q.grid()));
        for (a, b) in q.samples().iter().zip(q2.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spinor_round_trips_bitwise() {
        let g = Grid::new(0.0, 1.0, 8, false).unwrap();
        let f = SpinorField::random_bandlimited(g, 3, 2, 5);
        let doc = spinor_to_doc(&f);
        let json = serde_json::to_string(&doc).unwrap();
        let back: FieldDoc = serde_json::from_str(&json).unwrap();
        let f2 = spinor_from_doc(&back).unwrap();
        assert_eq!(f.samples(), f2.samples());
    }

    #[test]
    fn spacetime_round_trips() {
        use crate::lax::SpaceTimeField;
        use ndarray::Array2;
        let g = Grid::new(-2.0, 2.0, 6, true).unwrap();
        let f = SpaceTimeField::sample(g, 1, 0.5, 0.01, 3, |x, t| {
            Array2::from_elem((1, 1), C64::new(x * t, x - t))
        })
        .unwrap();
        let doc = spacetime_to_doc(&f);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SpaceTimeDoc = serde_json::from_str(&json).unwrap();
        let f2 = spacetime_from_doc(&back).unwrap();
        assert_eq!(f2.num_slices(), 3);
        assert_eq!(f2.dt(), 0.01);
        assert_eq!(f2.t0(), 0.5);
        for j in 0..3 {
            for (a, b) in f.slice(j).iter().zip(f2.slice(j)) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn csv_floats_have_17_significant_digits() {
        let s = format_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let parsed: f64 = s.parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn csv_shapes() {
        let spectrum = spectrum_csv(&[C64::new(0.5, -0.25)]);
        let mut lines = spectrum.lines();
        assert_eq!(lines.next(), Some("re,im"));
        assert_eq!(
            lines.next(),
            Some("5.0000000000000000e-1,-2.5000000000000000e-1")
        );

        let rows = vec![ResidualRow::le("factorization", 1e-13, 1e-8)];
        let csv = residuals_csv(&rows);
        assert!(csv.starts_with("name,value,tolerance,pass\n"));
        assert!(csv.contains("factorization,"));
        assert!(csv.trim_end().ends_with("true"));

        let diag = diagnostics_csv(&[DiagnosticsRow {
            t: 0.25,
            l2_norm: 2.0,
            spectral_drift: None,
        }]);
        assert!(diag.contains("2.5000000000000000e-1,2.0000000000000000e0,\n"));
    }
}
