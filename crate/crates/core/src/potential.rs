use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Scalar profile used by the `column` potential shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarShape {
    Sech { amplitude: f64 },
    Constant { re: f64, im: f64 },
}

impl ScalarShape {
    fn eval(&self, x: f64) -> C64 {
        match self {
            ScalarShape::Sech { amplitude } => C64::new(amplitude * sech(amplitude * x), 0.0),
            ScalarShape::Constant { re, im } => C64::new(*re, *im),
        }
    }
}

/// Deterministic generators for the sampled matrix potential Q(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// Q = 0.
    Zero,
    /// Constant matrix, row-major `[re, im]` entries; must be symmetric
    /// unless `allow_asymmetric` is set.
    Constant {
        matrix: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        allow_asymmetric: bool,
    },
    /// Diagonal matrix with entries a_j sech(a_j x).
    Sech { amplitudes: Vec<f64> },
    /// Band-limited random field Q(x) = sum_{|k|<=K} C_k e^{2 pi i k x / L}
    /// with each C_k complex Gaussian, symmetrized as (C_k + C_k^T)/2.
    RandomBandlimited { k_max: usize, period: f64, seed: u64 },
    /// First column holds the given scalar shapes, remaining columns are zero.
    /// Not symmetric for m >= 2, so it must be requested with
    /// `allow_asymmetric`, which marks the result as outside the symmetry
    /// hypothesis.
    Column {
        shapes: Vec<ScalarShape>,
        #[serde(default)]
        allow_asymmetric: bool,
    },
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Sampled m x m complex matrix field on a grid.
///
/// The transposition symmetry Q(x) = Q(x)^T is enforced at construction;
/// fields built through an `allow_asymmetric` path are marked as sitting
/// outside that hypothesis.
#[derive(Debug, Clone)]
pub struct MatrixPotential {
    m: usize,
    grid: Grid,
    samples: Vec<Array2<C64>>,
    symmetric: bool,
}

impl MatrixPotential {
    /// Build from explicit samples, enforcing exact symmetry of every sample.
    pub fn from_samples(grid: Grid, m: usize, samples: Vec<Array2<C64>>) -> Result<Self> {
        Self::check_shapes(&grid, m, &samples)?;
        let asym = max_asymmetry_of(&samples);
        if asym > 0.0 {
            return Err(Error::domain(format!(
                "potential samples are not symmetric (max |Q - Q^T| = {asym:.3e}); \
                 use an allow_asymmetric constructor to bypass the symmetry hypothesis"
            )));
        }
        Ok(MatrixPotential {
            m,
            grid,
            samples,
            symmetric: true,
        })
    }

    /// Build from explicit samples without the symmetry check. The result is
    /// marked symmetric only when the data happens to be exactly symmetric.
    pub fn from_samples_asymmetric(grid: Grid, m: usize, samples: Vec<Array2<C64>>) -> Result<Self> {
        Self::check_shapes(&grid, m, &samples)?;
        let symmetric = max_asymmetry_of(&samples) == 0.0;
        Ok(MatrixPotential {
            m,
            grid,
            samples,
            symmetric,
        })
    }

    fn check_shapes(grid: &Grid, m: usize, samples: &[Array2<C64>]) -> Result<()> {
        if m == 0 {
            return Err(Error::domain("block dimension m must be positive"));
        }
        if samples.len() != grid.n {
            return Err(Error::domain(format!(
                "expected {} samples, got {}",
                grid.n,
                samples.len()
            )));
        }
        for s in samples {
            if s.dim() != (m, m) {
                return Err(Error::domain(format!(
                    "sample has shape {:?}, expected ({m}, {m})",
                    s.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn sample(spec: &PotentialSpec, grid: &Grid, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("block dimension m must be positive"));
        }
        match spec {
            PotentialSpec::Zero => {
                let samples = vec![Array2::zeros((m, m)); grid.n];
                Self::from_samples(*grid, m, samples)
            }
            PotentialSpec::Constant {
                matrix,
                allow_asymmetric,
            } => {
                let c = parse_matrix(matrix, m)?;
                let samples = vec![c; grid.n];
                if *allow_asymmetric {
                    Self::from_samples_asymmetric(*grid, m, samples)
                } else {
                    Self::from_samples(*grid, m, samples).map_err(|_| {
                        Error::domain(
                            "constant potential matrix is not symmetric; \
                             pass allow_asymmetric to construct it anyway",
                        )
                    })
                }
            }
            PotentialSpec::Sech { amplitudes } => {
                if amplitudes.len() != m {
                    return Err(Error::domain(format!(
                        "sech shape needs {m} amplitudes, got {}",
                        amplitudes.len()
                    )));
                }
                let samples = grid
                    .points()
                    .map(|x| {
                        Array2::from_shape_fn((m, m), |(i, j)| {
                            if i == j {
                                let a = amplitudes[i];
                                C64::new(a * sech(a * x), 0.0)
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        })
                    })
                    .collect();
                Self::from_samples(*grid, m, samples)
            }
            PotentialSpec::RandomBandlimited { k_max, period, seed } => {
                let coeffs = bandlimited_coefficients(m, *k_max, *seed);
                let samples = grid
                    .points()
                    .map(|x| {
                        let mut q = Array2::zeros((m, m));
                        for (idx, c) in coeffs.iter().enumerate() {
                            let k = idx as isize - *k_max as isize;
                            let phase =
                                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * x / period);
                            q = q + c * phase;
                        }
                        q
                    })
                    .collect();
                Self::from_samples(*grid, m, samples)
            }
            PotentialSpec::Column {
                shapes,
                allow_asymmetric,
            } => {
                if shapes.len() != m {
                    return Err(Error::domain(format!(
                        "column shape needs {m} scalar entries, got {}",
                        shapes.len()
                    )));
                }
                if m >= 2 && !*allow_asymmetric {
                    return Err(Error::domain(
                        "column potential is not symmetric for m >= 2; \
                         pass allow_asymmetric to construct it anyway",
                    ));
                }
                let samples = grid
                    .points()
                    .map(|x| {
                        Array2::from_shape_fn((m, m), |(i, j)| {
                            if j == 0 {
                                shapes[i].eval(x)
                            } else {
                                C64::new(0.0, 0.0)
                            }
                        })
                    })
                    .collect();
                Self::from_samples_asymmetric(*grid, m, samples)
            }
        }
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

    /// Whether the field was built under the symmetry hypothesis Q = Q^T.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry_of(&self.samples)
    }

    /// Largest entry magnitude over all samples.
    pub fn max_abs(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Entry magnitude at the two ends of the sampling window.
    pub fn edge_magnitude(&self) -> f64 {
        let first = self.samples.first().map(matrix_max_abs).unwrap_or(0.0);
        let last = self.samples.last().map(matrix_max_abs).unwrap_or(0.0);
        first.max(last)
    }

    pub fn map_samples(&self, f: impl Fn(&Array2<C64>) -> Array2<C64>) -> Vec<Array2<C64>> {
        self.samples.iter().map(f).collect()
    }
}

fn matrix_max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_asymmetry_of(samples: &[Array2<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for s in samples {
        let (m, _) = s.dim();
        for i in 0..m {
            for j in (i + 1)..m {
                let d = (s[[i, j]] - s[[j, i]]).norm();
                worst = worst.max(d);
            }
        }
    }
    worst
}

fn parse_matrix(rows: &[Vec<[f64; 2]>], m: usize) -> Result<Array2<C64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::domain(format!(
            "constant matrix must be {m} x {m} of [re, im] pairs"
        )));
    }
    Ok(Array2::from_shape_fn((m, m), |(i, j)| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Symmetrized Fourier coefficients C_{-K}..C_{K}, fixed draw order so the
/// field is reproducible from the seed alone.
fn bandlimited_coefficients(m: usize, k_max: usize, seed: u64) -> Vec<Array2<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..2 * k_max + 1)
        .map(|_| {
            let raw = Array2::from_shape_fn((m, m), |_| {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                C64::new(re * scale, im * scale)
            });
            (&raw + &raw.t()) / C64::new(2.0, 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(-20.0, 20.0, n, false).unwrap()
    }

    #[test]
    fn zero_potential() {
        let q = MatrixPotential::sample(&PotentialSpec::Zero, &grid(16), 2).unwrap();
        assert!(q.max_abs() == 0.0);
        assert!(q.is_symmetric());
    }

    #[test]
    fn sech_values() {
        let g = Grid::new(-20.0, 20.0, 41, false).unwrap();
        let q = MatrixPotential::sample(
            &PotentialSpec::Sech {
                amplitudes: vec![1.0],
            },
            &g,
            1,
        )
        .unwrap();
        // center point is x = 0
        assert_eq!(q.sample_at(20)[[0, 0]], C64::new(1.0, 0.0));
        let edge = q.sample_at(0)[[0, 0]].re;
        assert!((edge - 4.122307244877828e-9).abs() < 1e-15, "edge = {edge:e}");
    }

    #[test]
    fn random_bandlimited_symmetric_and_reproducible() {
        let g = grid(32);
        let spec = PotentialSpec::RandomBandlimited {
            k_max: 3,
            period: 40.0,
            seed: 7,
        };
        let q1 = MatrixPotential::sample(&spec, &g, 2).unwrap();
        let q2 = MatrixPotential::sample(&spec, &g, 2).unwrap();
        assert_eq!(q1.max_asymmetry(), 0.0);
        for (a, b) in q1.samples().iter().zip(q2.samples()) {
            assert_eq!(a, b);
        }
        // a different seed must give a different field
        let q3 = MatrixPotential::sample(
            &PotentialSpec::RandomBandlimited {
                k_max: 3,
                period: 40.0,
                seed: 8,
            },
            &g,
            2,
        )
        .unwrap();
        assert!(q3.sample_at(0) != q1.sample_at(0));
    }

    #[test]
    fn asymmetric_constant_rejected_without_flag() {
        let g = grid(8);
        let matrix = vec![
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 0.0]],
        ];
        let spec = PotentialSpec::Constant {
            matrix: matrix.clone(),
            allow_asymmetric: false,
        };
        assert!(MatrixPotential::sample(&spec, &g, 2).is_err());
        let spec = PotentialSpec::Constant {
            matrix,
            allow_asymmetric: true,
        };
        let q = MatrixPotential::sample(&spec, &g, 2).unwrap();
        assert!(!q.is_symmetric());
    }

    #[test]
    fn column_needs_flag_for_m2() {
        let g = grid(8);
        let shapes = vec![
            ScalarShape::Sech { amplitude: 1.0 },
            ScalarShape::Sech { amplitude: 0.5 },
        ];
        let spec = PotentialSpec::Column {
            shapes: shapes.clone(),
            allow_asymmetric: false,
        };
        assert!(MatrixPotential::sample(&spec, &g, 2).is_err());
        let spec = PotentialSpec::Column {
            shapes,
            allow_asymmetric: true,
        };
        let q = MatrixPotential::sample(&spec, &g, 2).unwrap();
        assert!(!q.is_symmetric());
        assert_eq!(q.sample_at(0)[[0, 1]], C64::new(0.0, 0.0));
    }

    #[test]
    fn column_m1_is_fine_without_flag() {
        let g = grid(8);
        let spec = PotentialSpec::Column {
            shapes: vec![ScalarShape::Sech { amplitude: 1.0 }],
            allow_asymmetric: false,
        };
        let q = MatrixPotential::sample(&spec, &g, 1).unwrap();
        assert!(q.is_symmetric());
    }
}
