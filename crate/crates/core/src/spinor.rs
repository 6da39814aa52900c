use ndarray::{s, Array2, ArrayView1};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Sampled C^{2m}-valued function F = (F1, F2) on a grid.
///
/// Samples are stored as an (n, 2m) array; entries 0..m-1 of each row form
/// the upper block F1, entries m..2m-1 the lower block F2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    m: usize,
    grid: Grid,
    samples: Array2<C64>,
}

impl SpinorField {
    pub fn from_samples(grid: Grid, m: usize, samples: Array2<C64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("block dimension m must be positive"));
        }
        if samples.dim() != (grid.n, 2 * m) {
            return Err(Error::domain(format!(
                "spinor samples have shape {:?}, expected ({}, {})",
                samples.dim(),
                grid.n,
                2 * m
            )));
        }
        Ok(SpinorField { m, grid, samples })
    }

    pub fn zeros(grid: Grid, m: usize) -> Self {
        SpinorField {
            m,
            grid,
            samples: Array2::zeros((grid.n, 2 * m)),
        }
    }

    /// Single Fourier mode e^{2 pi i k x / L} in one component.
    pub fn fourier_mode(grid: Grid, m: usize, component: usize, mode: i64) -> Result<Self> {
        if component >= 2 * m {
            return Err(Error::domain(format!(
                "component {component} out of range for 2m = {}",
                2 * m
            )));
        }
        let length = grid.length();
        let mut samples = Array2::zeros((grid.n, 2 * m));
        for (k, x) in grid.points().enumerate() {
            samples[[k, component]] =
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * mode as f64 * x / length);
        }
        Ok(SpinorField { m, grid, samples })
    }

    /// Band-limited random field: every component is a trigonometric
    /// polynomial with modes |k| <= k_max and complex Gaussian coefficients.
    pub fn random_bandlimited(grid: Grid, m: usize, k_max: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let length = grid.length();
        let mut samples = Array2::zeros((grid.n, 2 * m));
        for j in 0..2 * m {
            for kk in 0..=2 * k_max {
                let mode = kk as isize - k_max as isize;
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                let c = C64::new(re * scale, im * scale);
                for (k, x) in grid.points().enumerate() {
                    let phase = C64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * mode as f64 * x / length,
                    );
                    samples[[k, j]] += c * phase;
                }
            }
        }
        SpinorField { m, grid, samples }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &Array2<C64> {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut Array2<C64> {
        &mut self.samples
    }

    /// Full 2m-vector at grid point k.
    pub fn value_at(&self, k: usize) -> ArrayView1<'_, C64> {
        self.samples.row(k)
    }

    /// Upper block F1 at grid point k.
    pub fn f1_at(&self, k: usize) -> ArrayView1<'_, C64> {
        self.samples.slice(s![k, ..self.m])
    }

    /// Lower block F2 at grid point k.
    pub fn f2_at(&self, k: usize) -> ArrayView1<'_, C64> {
        self.samples.slice(s![k, self.m..])
    }

    /// Grid-weighted l2 norm, sqrt(h sum_k |F(x_k)|^2).
    pub fn norm_l2(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (self.grid.spacing() * sum).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Grid inner product h sum_k <u(x_k), v(x_k)>, linear in the first slot and
/// antilinear in the second.
pub fn inner_product(u: &SpinorField, v: &SpinorField) -> Result<C64> {
    if !u.grid().same_as(v.grid()) || u.m() != v.m() {
        return Err(Error::domain("inner product requires matching fields"));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in u.samples.iter().zip(v.samples.iter()) {
        acc += a * b.conj();
    }
    Ok(acc * u.grid().spacing())
}

/// The antilinear conjugation: swap the two m-blocks and conjugate entries.
/// Applying it twice restores the field exactly.
pub fn apply_conjugation_j(f: &SpinorField) -> SpinorField {
    let m = f.m;
    let mut out = Array2::zeros(f.samples.dim());
    for k in 0..f.grid.n {
        for j in 0..m {
            out[[k, j]] = f.samples[[k, m + j]].conj();
            out[[k, m + j]] = f.samples[[k, j]].conj();
        }
    }
    SpinorField {
        m,
        grid: f.grid,
        samples: out,
    }
}

/// The Pauli-type block involutions sigma1 (block swap) and sigma3
/// (block sign flip) in C^{2m}.
#[derive(Debug, Clone)]
pub struct BlockInvolutions {
    m: usize,
    sigma1: Array2<C64>,
    sigma3: Array2<C64>,
}

impl BlockInvolutions {
    pub fn new(m: usize) -> Self {
        let dim = 2 * m;
        let mut sigma1 = Array2::zeros((dim, dim));
        let mut sigma3 = Array2::zeros((dim, dim));
        for j in 0..m {
            sigma1[[j, m + j]] = C64::new(1.0, 0.0);
            sigma1[[m + j, j]] = C64::new(1.0, 0.0);
            sigma3[[j, j]] = C64::new(1.0, 0.0);
            sigma3[[m + j, m + j]] = C64::new(-1.0, 0.0);
        }
        BlockInvolutions { m, sigma1, sigma3 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma1(&self) -> &Array2<C64> {
        &self.sigma1
    }

    pub fn sigma3(&self) -> &Array2<C64> {
        &self.sigma3
    }

    /// sigma3 A sigma3: flips the sign of the off-diagonal m x m blocks.
    pub fn conjugate_by_sigma3(&self, a: &Array2<C64>) -> Array2<C64> {
        let m = self.m;
        Array2::from_shape_fn(a.dim(), |(i, j)| {
            let sign = if (i < m) != (j < m) { -1.0 } else { 1.0 };
            a[[i, j]] * sign
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Grid {
        Grid::new(0.0, 1.0, 4, true).unwrap()
    }

    #[test]
    fn conjugation_swaps_and_conjugates() {
        let g = small_grid();
        let mut samples = Array2::zeros((4, 2));
        for k in 0..4 {
            samples[[k, 0]] = C64::new(1.0 + k as f64, 2.0);
            samples[[k, 1]] = C64::new(-3.0, 0.5 * k as f64);
        }
        let f = SpinorField::from_samples(g, 1, samples.clone()).unwrap();
        let jf = apply_conjugation_j(&f);
        for k in 0..4 {
            assert_eq!(jf.samples()[[k, 0]], samples[[k, 1]].conj());
            assert_eq!(jf.samples()[[k, 1]], samples[[k, 0]].conj());
        }
    }

    #[test]
    fn conjugation_fixed_point() {
        let g = small_grid();
        let mut samples = Array2::zeros((4, 2));
        for k in 0..4 {
            let a = C64::new(0.3 * k as f64, -1.25);
            samples[[k, 0]] = a;
            samples[[k, 1]] = a.conj();
        }
        let f = SpinorField::from_samples(g, 1, samples).unwrap();
        let jf = apply_conjugation_j(&f);
        assert_eq!(jf, f);
    }

    #[test]
    fn conjugation_is_involution_bitwise() {
        let g = Grid::new(-5.0, 5.0, 16, true).unwrap();
        for m in 1..=3 {
            let f = SpinorField::random_bandlimited(g, m, 3, 42 + m as u64);
            let jjf = apply_conjugation_j(&apply_conjugation_j(&f));
            assert_eq!(jjf, f);
        }
    }

    #[test]
    fn involutions_square_to_identity() {
        for m in 1..=3 {
            let inv = BlockInvolutions::new(m);
            let dim = 2 * m;
            let id = Array2::from_shape_fn((dim, dim), |(i, j)| {
                C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            });
            assert_eq!(inv.sigma1().dot(inv.sigma1()), id);
            assert_eq!(inv.sigma3().dot(inv.sigma3()), id);
        }
    }

    #[test]
    fn fourier_mode_and_norm() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 16, true).unwrap();
        let f = SpinorField::fourier_mode(g, 1, 0, 3).unwrap();
        // |e^{3ix}| = 1 pointwise; norm^2 = h * n = L
        let expected = (2.0 * std::f64::consts::PI).sqrt();
        assert!((f.norm_l2() - expected).abs() < 1e-12);
    }
}
