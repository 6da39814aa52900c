use ndarray::{Array1, Array2};
use ndarray_linalg::EigVals;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deriv::DerivativeBackend;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::MatrixPotential;
use crate::spinor::{apply_conjugation_j, inner_product, SpinorField};

/// Norm floor guarding relative residuals of near-zero fields.
pub const NORM_FLOOR: f64 = 1e-300;

/// Dimension cap for dense assembly and eigensolves.
pub const DENSE_DIM_CAP: usize = 4096;

/// Relative tolerance for the positivity gap of the composition.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Which differential expression a dense matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorExpr {
    /// M(Q) = i (d/dx, -Q; -Q*, -d/dx)
    M,
    /// M(-Q)
    MNeg,
    /// N(Q) = i (d/dx, -Q; Q*, d/dx)
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorLabel {
    M,
    MNeg,
    N,
    Composition,
}

/// Dense discretization of a differential expression, acting on stacked
/// sample vectors. Stacking is component-major: entry j*n + k holds
/// component j at grid point k.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: Array2<C64>,
    pub label: OperatorLabel,
    pub m: usize,
    pub grid: Grid,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Stack a spinor field into the component-major vector layout.
pub fn stack_field(f: &SpinorField) -> Array1<C64> {
    let n = f.grid().n;
    let m2 = 2 * f.m();
    let mut v = Array1::zeros(m2 * n);
    for j in 0..m2 {
        for k in 0..n {
            v[j * n + k] = f.samples()[[k, j]];
        }
    }
    v
}

pub fn unstack_field(grid: Grid, m: usize, v: &Array1<C64>) -> Result<SpinorField> {
    let n = grid.n;
    if v.len() != 2 * m * n {
        return Err(Error::domain("stacked vector length mismatch"));
    }
    let mut samples = Array2::zeros((n, 2 * m));
    for j in 0..2 * m {
        for k in 0..n {
            samples[[k, j]] = v[j * n + k];
        }
    }
    SpinorField::from_samples(grid, m, samples)
}

fn check_pair(q: &MatrixPotential, f: &SpinorField) -> Result<()> {
    if !q.grid().same_as(f.grid()) {
        return Err(Error::domain("potential and field grids do not match"));
    }
    if q.m() != f.m() {
        return Err(Error::domain("potential and field block dimensions differ"));
    }
    Ok(())
}

/// Apply M(Q) (or M(-Q) with `negate`):
/// (M F)_1 = i (F1' - Q F2), (M F)_2 = i (-Q* F1 - F2').
pub fn apply_m(
    q: &MatrixPotential,
    f: &SpinorField,
    negate: bool,
    backend: DerivativeBackend,
) -> Result<SpinorField> {
    check_pair(q, f)?;
    let m = q.m();
    let n = q.grid().n;
    let df = backend.derivative_field(f)?;
    let sign = if negate { -1.0 } else { 1.0 };
    let i = C64::new(0.0, 1.0);
    let mut out = Array2::zeros((n, 2 * m));
    for k in 0..n {
        let qk = q.sample_at(k);
        for r in 0..m {
            let mut qf2 = C64::new(0.0, 0.0);
            let mut qsf1 = C64::new(0.0, 0.0);
            for c in 0..m {
                qf2 += qk[[r, c]] * f.samples()[[k, m + c]];
                // (Q*)_{rc} = conj(Q_{cr})
                qsf1 += qk[[c, r]].conj() * f.samples()[[k, c]];
            }
            out[[k, r]] = i * (df.samples()[[k, r]] - sign * qf2);
            out[[k, m + r]] = i * (-sign * qsf1 - df.samples()[[k, m + r]]);
        }
    }
    SpinorField::from_samples(*q.grid(), m, out)
}

/// Apply N(Q): (N F)_1 = i (F1' - Q F2), (N F)_2 = i (Q* F1 + F2').
pub fn apply_n(
    q: &MatrixPotential,
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<SpinorField> {
    check_pair(q, f)?;
    let m = q.m();
    let n = q.grid().n;
    let df = backend.derivative_field(f)?;
    let i = C64::new(0.0, 1.0);
    let mut out = Array2::zeros((n, 2 * m));
    for k in 0..n {
        let qk = q.sample_at(k);
        for r in 0..m {
            let mut qf2 = C64::new(0.0, 0.0);
            let mut qsf1 = C64::new(0.0, 0.0);
            for c in 0..m {
                qf2 += qk[[r, c]] * f.samples()[[k, m + c]];
                qsf1 += qk[[c, r]].conj() * f.samples()[[k, c]];
            }
            out[[k, r]] = i * (df.samples()[[k, r]] - qf2);
            out[[k, m + r]] = i * (qsf1 + df.samples()[[k, m + r]]);
        }
    }
    SpinorField::from_samples(*q.grid(), m, out)
}

/// Assemble the dense matrix of an expression by direct stencil placement.
/// Its action on stacked vectors matches `apply_m`/`apply_n`.
pub fn assemble_dense(
    q: &MatrixPotential,
    expr: OperatorExpr,
    backend: DerivativeBackend,
    allow_nonperiodic: bool,
) -> Result<OperatorMatrix> {
    let grid = *q.grid();
    if !grid.periodic && !allow_nonperiodic {
        return Err(Error::domain(
            "dense assembly expects a periodic grid; pass allow_nonperiodic for \
             truncated-line experiments",
        ));
    }
    let m = q.m();
    let n = grid.n;
    let dim = 2 * m * n;
    if dim > DENSE_DIM_CAP {
        return Err(Error::domain(format!(
            "dense dimension {dim} exceeds the cap {DENSE_DIM_CAP}"
        )));
    }
    let d = backend.derivative_matrix(&grid)?;
    let i = C64::new(0.0, 1.0);
    let mut a: Array2<C64> = Array2::zeros((dim, dim));

    // derivative blocks on the component diagonal
    let (upper_d, lower_d) = match expr {
        OperatorExpr::M | OperatorExpr::MNeg => (i, -i),
        OperatorExpr::N => (i, i),
    };
    for j in 0..m {
        for r in 0..n {
            for c in 0..n {
                let v = d[[r, c]];
                if v != C64::new(0.0, 0.0) {
                    a[[j * n + r, j * n + c]] += upper_d * v;
                    a[[(m + j) * n + r, (m + j) * n + c]] += lower_d * v;
                }
            }
        }
    }

    // multiplication blocks, diagonal in the grid index
    // upper-right coefficient of Q, lower-left coefficient of Q*
    let (ur, ll) = match expr {
        OperatorExpr::M => (-i, -i),
        OperatorExpr::MNeg => (i, i),
        OperatorExpr::N => (-i, i),
    };
    for k in 0..n {
        let qk = q.sample_at(k);
        for r in 0..m {
            for c in 0..m {
                let qrc = qk[[r, c]];
                let qs_rc = qk[[c, r]].conj();
                a[[r * n + k, (m + c) * n + k]] += ur * qrc;
                a[[(m + r) * n + k, c * n + k]] += ll * qs_rc;
            }
        }
    }

    let label = match expr {
        OperatorExpr::M => OperatorLabel::M,
        OperatorExpr::MNeg => OperatorLabel::MNeg,
        OperatorExpr::N => OperatorLabel::N,
    };
    Ok(OperatorMatrix {
        entries: a,
        label,
        m,
        grid,
    })
}

fn field_l2_diff(a: &SpinorField, b: &SpinorField) -> f64 {
    let h = a.grid().spacing();
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples().iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    (h * sum).sqrt()
}

/// Residual of the factorization identity M(-Q) M(Q) = N(Q)^2 on a test
/// field, relative to the field norm.
pub fn factorization_residual(
    q: &MatrixPotential,
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<f64> {
    let mf = apply_m(q, f, false, backend)?;
    let mmf = apply_m(q, &mf, true, backend)?;
    let nf = apply_n(q, f, backend)?;
    let nnf = apply_n(q, &nf, backend)?;
    Ok(field_l2_diff(&mmf, &nnf) / f.norm_l2().max(NORM_FLOOR))
}

/// Residual of the bilinear identity <Ju, M(Q)v> = <J M(Q)u, v> relative to
/// the product of the field norms.
pub fn j_symmetry_residual(
    q: &MatrixPotential,
    u: &SpinorField,
    v: &SpinorField,
    backend: DerivativeBackend,
) -> Result<f64> {
    let mv = apply_m(q, v, false, backend)?;
    let mu = apply_m(q, u, false, backend)?;
    let lhs = inner_product(&apply_conjugation_j(u), &mv)?;
    let rhs = inner_product(&apply_conjugation_j(&mu), v)?;
    let scale = (u.norm_l2() * v.norm_l2()).max(NORM_FLOOR);
    Ok((lhs - rhs).norm() / scale)
}

/// Spectral diagnostics of the composition M(-Q) M(Q).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    /// min over eigenvalues of Re(lambda)
    pub gap: f64,
    /// max over eigenvalues of |lambda|, the norm estimate the gap is
    /// measured against
    pub norm_estimate: f64,
    /// min over eigenvalues of |lambda + 1| (kernel-triviality surrogate)
    pub min_shifted_modulus: f64,
}

impl PositivityReport {
    pub fn passes(&self) -> bool {
        self.gap >= -POSITIVITY_TOL * self.norm_estimate
            && self.min_shifted_modulus >= 1.0 - POSITIVITY_TOL
    }
}

/// Assemble M(-Q) M(Q) and report the positivity gap of its spectrum.
pub fn positivity_gap(q: &MatrixPotential, backend: DerivativeBackend) -> Result<PositivityReport> {
    let m_op = assemble_dense(q, OperatorExpr::M, backend, false)?;
    let mneg_op = assemble_dense(q, OperatorExpr::MNeg, backend, false)?;
    let comp = mneg_op.entries.dot(&m_op.entries);
    let vals: Array1<C64> = comp
        .eigvals()
        .map_err(|e| Error::computation(format!("eigensolve of the composition failed: {e}")))?;
    let gap = vals.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let norm_estimate = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_shifted_modulus = vals
        .iter()
        .map(|z| (z + C64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(PositivityReport {
        gap,
        norm_estimate,
        min_shifted_modulus,
    })
}
