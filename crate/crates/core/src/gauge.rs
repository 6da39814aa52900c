use ndarray::{Array1, Array2};
use ndarray_linalg::Determinant;
use num_complex::Complex64 as C64;

use crate::deriv::DerivativeBackend;
use crate::error::{Error, Result};
use crate::expm::unitary_exp_skew;
use crate::grid::Grid;
use crate::operators::{apply_m, apply_n, NORM_FLOOR};
use crate::potential::MatrixPotential;
use crate::spinor::{BlockInvolutions, SpinorField};

/// Default bound on the accumulated unitarity drift of a computed family.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Sampled family of 2m x 2m unitary matrices solving the gauge initial
/// value problem, anchored at the identity on the grid point nearest 0.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    m: usize,
    grid: Grid,
    samples: Vec<Array2<C64>>,
    anchor_index: usize,
}

impl UnitaryFamily {
    pub fn from_samples(
        grid: Grid,
        m: usize,
        samples: Vec<Array2<C64>>,
        anchor_index: usize,
    ) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::domain("sample count does not match grid"));
        }
        if samples.iter().any(|s| s.dim() != (2 * m, 2 * m)) {
            return Err(Error::domain("family samples must be 2m x 2m"));
        }
        if anchor_index >= grid.n {
            return Err(Error::domain("anchor index out of range"));
        }
        Ok(UnitaryFamily {
            m,
            grid,
            samples,
            anchor_index,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Array2<C64>] {
        &self.samples
    }

    pub fn sample_at(&self, k: usize) -> &Array2<C64> {
        &self.samples[k]
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    /// Pointwise U(x_k) F(x_k).
    pub fn apply_pointwise(&self, f: &SpinorField) -> Result<SpinorField> {
        self.apply_with(f, |u| u.clone())
    }

    /// Pointwise U(x_k)^{-1} F(x_k); the inverse is the conjugate transpose.
    pub fn apply_inverse_pointwise(&self, f: &SpinorField) -> Result<SpinorField> {
        self.apply_with(f, |u| u.t().mapv(|z| z.conj()))
    }

    fn apply_with(
        &self,
        f: &SpinorField,
        prep: impl Fn(&Array2<C64>) -> Array2<C64>,
    ) -> Result<SpinorField> {
        if !self.grid.same_as(f.grid()) || self.m != f.m() {
            return Err(Error::domain("family and field do not match"));
        }
        let n = self.grid.n;
        let dim = 2 * self.m;
        let mut out = Array2::zeros((n, dim));
        for k in 0..n {
            let u = prep(&self.samples[k]);
            let v = f.value_at(k);
            let w: Array1<C64> = u.dot(&v);
            out.row_mut(k).assign(&w);
        }
        SpinorField::from_samples(self.grid, self.m, out)
    }
}

/// Skew-adjoint step generator (0 Q; -Q* 0) at a midpoint value of Q.
fn generator(q_mid: &Array2<C64>) -> Array2<C64> {
    let m = q_mid.nrows();
    let dim = 2 * m;
    let mut a = Array2::zeros((dim, dim));
    for i in 0..m {
        for j in 0..m {
            a[[i, m + j]] = q_mid[[i, j]];
            a[[m + i, j]] = -q_mid[[j, i]].conj();
        }
    }
    a
}

/// Solve the gauge initial value problem U' = (0 Q; -Q* 0) U, U(anchor) = I,
/// sweeping from the anchor in both directions. Each step applies the
/// unitary exponential of the midpoint generator (adjacent samples
/// averaged), so unitarity drift is roundoff only; global order 2.
pub fn compute_gauge_family(q: &MatrixPotential) -> Result<UnitaryFamily> {
    let grid = *q.grid();
    let m = q.m();
    let dim = 2 * m;
    let n = grid.n;
    let h = grid.spacing();
    let anchor = grid.anchor_index();
    let id = Array2::from_diag_elem(dim, C64::new(1.0, 0.0));
    let mut samples = vec![id.clone(); n];

    let step = |k_lo: usize, h_signed: f64, from: &Array2<C64>| -> Result<Array2<C64>> {
        let q_mid = (q.sample_at(k_lo) + q.sample_at(k_lo + 1)) / C64::new(2.0, 0.0);
        let a = generator(&q_mid).mapv(|z| z * h_signed);
        Ok(unitary_exp_skew(&a)?.dot(from))
    };

    for k in anchor..n.saturating_sub(1) {
        let next = step(k, h, &samples[k])?;
        samples[k + 1] = next;
    }
    for k in (0..anchor).rev() {
        let prev = step(k, -h, &samples[k + 1])?;
        samples[k] = prev;
    }

    let family = UnitaryFamily::from_samples(grid, m, samples, anchor)?;
    let dev = unitarity_deviation(&family);
    if dev > UNITARITY_TOL {
        return Err(Error::computation(format!(
            "gauge family lost unitarity: deviation {dev:.3e} exceeds {UNITARITY_TOL:e}"
        )));
    }
    Ok(family)
}

/// max_k || U(x_k)* U(x_k) - I ||_inf (entrywise max modulus).
pub fn unitarity_deviation(u: &UnitaryFamily) -> f64 {
    let dim = 2 * u.m;
    let mut worst: f64 = 0.0;
    for s in &u.samples {
        let prod = s.t().mapv(|z| z.conj()).dot(s);
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((prod[[i, j]] - expect).norm());
            }
        }
    }
    worst
}

/// max_k | |det U(x_k)| - 1 |.
pub fn determinant_deviation(u: &UnitaryFamily) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in &u.samples {
        let d = s
            .det()
            .map_err(|e| Error::computation(format!("determinant failed: {e}")))?;
        worst = worst.max((d.norm() - 1.0).abs());
    }
    Ok(worst)
}

/// V(x_k) = sigma3 U(x_k) sigma3: flips the sign of the off-diagonal blocks.
/// Applying it twice restores the family exactly.
pub fn build_block_flip(u: &UnitaryFamily) -> UnitaryFamily {
    let inv = BlockInvolutions::new(u.m);
    let samples = u
        .samples
        .iter()
        .map(|s| inv.conjugate_by_sigma3(s))
        .collect();
    UnitaryFamily {
        m: u.m,
        grid: u.grid,
        samples,
        anchor_index: u.anchor_index,
    }
}

/// Relative residual of U^{-1} N(Q) [U G] = i G'.
pub fn diagonalization_residual(
    q: &MatrixPotential,
    g: &SpinorField,
    backend: DerivativeBackend,
) -> Result<f64> {
    let u = compute_gauge_family(q)?;
    diagonalization_residual_with(q, g, &u, backend)
}

/// Same residual with a precomputed family.
pub fn diagonalization_residual_with(
    q: &MatrixPotential,
    g: &SpinorField,
    u: &UnitaryFamily,
    backend: DerivativeBackend,
) -> Result<f64> {
    let ug = u.apply_pointwise(g)?;
    let n_ug = apply_n(q, &ug, backend)?;
    let lhs = u.apply_inverse_pointwise(&n_ug)?;
    let dg = backend.derivative_field(g)?;
    let h = g.grid().spacing();
    let i = C64::new(0.0, 1.0);
    let mut sum = 0.0;
    for (a, b) in lhs.samples().iter().zip(dg.samples().iter()) {
        sum += (a - i * b).norm_sqr();
    }
    Ok((h * sum).sqrt() / g.norm_l2().max(NORM_FLOOR))
}

/// Relative residual of V^{-1} M(Q) [U F] = i (F1', -F2')^T with
/// V = sigma3 U sigma3.
pub fn first_order_reduction_residual(
    q: &MatrixPotential,
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<f64> {
    let u = compute_gauge_family(q)?;
    first_order_reduction_residual_with(q, f, &u, backend)
}

pub fn first_order_reduction_residual_with(
    q: &MatrixPotential,
    f: &SpinorField,
    u: &UnitaryFamily,
    backend: DerivativeBackend,
) -> Result<f64> {
    let v = build_block_flip(u);
    let uf = u.apply_pointwise(f)?;
    let muf = apply_m(q, &uf, false, backend)?;
    let lhs = v.apply_inverse_pointwise(&muf)?;
    let df = backend.derivative_field(f)?;
    let m = f.m();
    let h = f.grid().spacing();
    let i = C64::new(0.0, 1.0);
    let mut sum = 0.0;
    for k in 0..f.grid().n {
        for j in 0..m {
            let r1 = lhs.samples()[[k, j]] - i * df.samples()[[k, j]];
            let r2 = lhs.samples()[[k, m + j]] + i * df.samples()[[k, m + j]];
            sum += r1.norm_sqr() + r2.norm_sqr();
        }
    }
    Ok((h * sum).sqrt() / f.norm_l2().max(NORM_FLOOR))
}
