use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Matrix exponential by scaling-and-squaring with a Pade(13,13)
/// approximant (Higham 2005). General complex square matrices.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    if n == 1 {
        let mut r = Array2::zeros((1, 1));
        r[[0, 0]] = a[[0, 0]].exp();
        return r;
    }

    let norm = one_norm(a);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / C64::new((1u64 << s) as f64, 0.0));
    let mut result = pade13(&scaled);
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Eigendecomposition of a Hermitian matrix with H = V diag(vals) V^* and
/// genuine eigenvectors as the columns of V.
///
/// The LAPACK route sees the row-major array as its transpose and therefore
/// diagonalizes conj(H); conjugating the returned vectors restores the
/// stated convention. The unit tests pin this down.
pub fn eigh_columns(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (vals, w): (Array1<f64>, Array2<C64>) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::computation(format!("hermitian eigensolve failed: {e}")))?;
    Ok((vals, w.mapv(|z| z.conj())))
}

/// Exponential of a skew-adjoint matrix through unitary diagonalization of
/// the Hermitian matrix -iA; the factor is unitary to machine precision.
pub fn unitary_exp_skew(a: &Array2<C64>) -> Result<Array2<C64>> {
    let h = a.mapv(|z| C64::new(0.0, -1.0) * z);
    let (vals, vecs) = eigh_columns(&h)?;
    // exp(A) = exp(iH) = V diag(e^{i lambda}) V^*
    let n = a.nrows();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let phase = C64::from_polar(1.0, vals[j]);
        for i in 0..n {
            scaled[[i, j]] *= phase;
        }
    }
    let vdag = vecs.t().mapv(|z| z.conj());
    Ok(scaled.dot(&vdag))
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        let col: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(col);
    }
    worst
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let id = Array2::from_diag_elem(n, C64::new(1.0, 0.0));
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let w1 = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let w2 = w1.dot(&a6) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = a.dot(&w2);
    let z1 = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = z1.dot(&a6) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    // (V - U) X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    solve_dense(&lhs, &rhs)
}

/// Gaussian elimination with partial pivoting; sized for the small matrices
/// this module sees, so no external solver is involved.
fn solve_dense(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let ncols = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[[col, col]].norm();
        for r in col + 1..n {
            let v = lu[[r, col]].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if pivot != col {
            for j in 0..n {
                let tmp = lu[[col, j]];
                lu[[col, j]] = lu[[pivot, j]];
                lu[[pivot, j]] = tmp;
            }
            for j in 0..ncols {
                let tmp = x[[col, j]];
                x[[col, j]] = x[[pivot, j]];
                x[[pivot, j]] = tmp;
            }
        }
        let diag = lu[[col, col]];
        for r in col + 1..n {
            let factor = lu[[r, col]] / diag;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lu[[col, j]];
                lu[[r, j]] -= factor * v;
            }
            for j in 0..ncols {
                let v = x[[col, j]];
                x[[r, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let diag = lu[[col, col]];
        for j in 0..ncols {
            let mut acc = x[[col, j]];
            for r in col + 1..n {
                acc -= lu[[col, r]] * x[[r, j]];
            }
            x[[col, j]] = acc / diag;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z: Array2<C64> = Array2::zeros((3, 3));
        let e = expm(&z);
        let id = Array2::from_diag_elem(3, C64::new(1.0, 0.0));
        assert!(max_abs_diff(&e, &id) < 1e-15);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let theta = 0.7;
        let mut a = Array2::zeros((2, 2));
        a[[0, 1]] = C64::new(theta, 0.0);
        a[[1, 0]] = C64::new(-theta, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-15);
        assert!((e[[0, 1]].re - theta.sin()).abs() < 1e-15);
        assert!((e[[1, 0]].re + theta.sin()).abs() < 1e-15);
        assert!((e[[1, 1]].re - theta.cos()).abs() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let mut a = Array2::zeros((2, 2));
        a[[0, 0]] = C64::new(1.5, -2.0);
        a[[1, 1]] = C64::new(-0.25, 10.0);
        let e = expm(&a);
        assert!((e[[0, 0]] - a[[0, 0]].exp()).norm() < 1e-13 * a[[0, 0]].exp().norm());
        assert!((e[[1, 1]] - a[[1, 1]].exp()).norm() < 1e-13 * a[[1, 1]].exp().norm());
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn scaling_and_squaring_handles_large_norms() {
        // A = theta * J with a norm well above the Pade threshold
        let theta = 50.3;
        let mut a = Array2::zeros((2, 2));
        a[[0, 1]] = C64::new(theta, 0.0);
        a[[1, 0]] = C64::new(-theta, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-12);
        assert!((e[[0, 1]].re - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn eigh_columns_are_right_eigenvectors() {
        let mut h: Array2<C64> = Array2::zeros((3, 3));
        h[[0, 0]] = C64::new(1.0, 0.0);
        h[[1, 1]] = C64::new(-0.5, 0.0);
        h[[2, 2]] = C64::new(2.0, 0.0);
        h[[0, 1]] = C64::new(0.3, 0.7);
        h[[1, 0]] = h[[0, 1]].conj();
        h[[1, 2]] = C64::new(-1.1, 0.2);
        h[[2, 1]] = h[[1, 2]].conj();
        let (vals, vecs) = eigh_columns(&h).unwrap();
        for j in 0..3 {
            let v = vecs.column(j).to_owned();
            let hv = h.dot(&v);
            let resid: f64 = hv
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b * vals[j]).norm())
                .sum();
            assert!(resid < 1e-13, "column {j} residual {resid:e}");
        }
    }

    #[test]
    fn unitary_exp_matches_pade_on_skew_matrices() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for m in [1usize, 2, 3] {
            let dim = 2 * m;
            let mut a: Array2<C64> = Array2::zeros((dim, dim));
            for i in 0..dim {
                for j in i..dim {
                    let z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    if i == j {
                        a[[i, j]] = C64::new(0.0, z.im);
                    } else {
                        a[[i, j]] = z;
                        a[[j, i]] = -z.conj();
                    }
                }
            }
            let via_eigh = unitary_exp_skew(&a).unwrap();
            let via_pade = expm(&a);
            assert!(max_abs_diff(&via_eigh, &via_pade) < 1e-13);
            // unitarity of the eigh route
            let udag = via_eigh.t().mapv(|z| z.conj());
            let prod = udag.dot(&via_eigh);
            let id = Array2::from_diag_elem(dim, C64::new(1.0, 0.0));
            assert!(max_abs_diff(&prod, &id) < 1e-14);
        }
    }
}
