use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spinor::SpinorField;

/// How d/dx is realized on sampled data.
///
/// `Spectral` differentiates through the FFT and is exact on band-limited
/// periodic data (the Nyquist mode of even grids is mapped to zero, the
/// trigonometric-interpolation convention). `Central2` is the second-order
/// centered stencil, wrapping on periodic grids and falling back to one-sided
/// second-order stencils at the ends of line grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeBackend {
    Spectral,
    Central2,
}

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

pub fn fft_forward(buf: &mut [C64]) {
    plan(buf.len(), false).process(buf);
}

/// Unnormalized inverse; callers divide by n.
pub fn fft_inverse(buf: &mut [C64]) {
    plan(buf.len(), true).process(buf);
}

/// Signed integer frequency of FFT bin j for length n.
pub fn bin_frequency(j: usize, n: usize) -> i64 {
    if j <= (n - 1) / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Angular wavenumbers 2 pi f_j / L per FFT bin, with the full signed value
/// at the Nyquist bin of even grids. Used for even symbols like k^2.
pub fn wavenumbers_full(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    (0..n)
        .map(|j| {
            if n % 2 == 0 && j == n / 2 {
                scale * (n as f64 / 2.0)
            } else {
                scale * bin_frequency(j, n) as f64
            }
        })
        .collect()
}

/// Wavenumbers for first derivatives: the Nyquist bin of even grids is
/// zeroed so the differentiation matrix stays real and antisymmetric.
pub fn wavenumbers_derivative(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    (0..n)
        .map(|j| {
            if n % 2 == 0 && j == n / 2 {
                0.0
            } else {
                scale * bin_frequency(j, n) as f64
            }
        })
        .collect()
}

impl DerivativeBackend {
    pub fn requires_periodic(&self) -> bool {
        matches!(self, DerivativeBackend::Spectral)
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.requires_periodic() && !grid.periodic {
            return Err(Error::domain(
                "spectral differentiation requires a periodic grid",
            ));
        }
        Ok(())
    }

    /// Differentiate one sampled component.
    pub fn derivative(&self, grid: &Grid, data: ArrayView1<'_, C64>) -> Result<Array1<C64>> {
        self.check_grid(grid)?;
        if data.len() != grid.n {
            return Err(Error::domain("data length does not match grid"));
        }
        match self {
            DerivativeBackend::Spectral => Ok(spectral_derivative(grid, data)),
            DerivativeBackend::Central2 => Ok(central2_derivative(grid, data)),
        }
    }

    /// Componentwise derivative of a spinor field.
    pub fn derivative_field(&self, f: &SpinorField) -> Result<SpinorField> {
        let grid = *f.grid();
        let mut out = Array2::zeros(f.samples().dim());
        for j in 0..2 * f.m() {
            let col = self.derivative(&grid, f.samples().column(j))?;
            out.column_mut(j).assign(&col);
        }
        SpinorField::from_samples(grid, f.m(), out)
    }

    /// Entrywise derivative of a sequence of matrix samples.
    pub fn derivative_matrix_samples(
        &self,
        grid: &Grid,
        samples: &[Array2<C64>],
    ) -> Result<Vec<Array2<C64>>> {
        self.check_grid(grid)?;
        if samples.len() != grid.n {
            return Err(Error::domain("sample count does not match grid"));
        }
        let (rows, cols) = samples[0].dim();
        let mut out = vec![Array2::zeros((rows, cols)); grid.n];
        let mut buf = Array1::zeros(grid.n);
        for i in 0..rows {
            for j in 0..cols {
                for k in 0..grid.n {
                    buf[k] = samples[k][[i, j]];
                }
                let d = self.derivative(grid, buf.view())?;
                for k in 0..grid.n {
                    out[k][[i, j]] = d[k];
                }
            }
        }
        Ok(out)
    }

    /// Dense n x n differentiation matrix acting on sampled scalars.
    pub fn derivative_matrix(&self, grid: &Grid) -> Result<Array2<C64>> {
        self.check_grid(grid)?;
        match self {
            DerivativeBackend::Spectral => Ok(spectral_matrix(grid)),
            DerivativeBackend::Central2 => Ok(central2_matrix(grid)),
        }
    }
}

fn spectral_derivative(grid: &Grid, data: ArrayView1<'_, C64>) -> Array1<C64> {
    let n = grid.n;
    let mut buf: Vec<C64> = data.to_vec();
    fft_forward(&mut buf);
    let ks = wavenumbers_derivative(grid);
    for (v, k) in buf.iter_mut().zip(ks.iter()) {
        *v *= C64::new(0.0, *k);
    }
    fft_inverse(&mut buf);
    let scale = 1.0 / n as f64;
    Array1::from_iter(buf.into_iter().map(|z| z * scale))
}

fn central2_derivative(grid: &Grid, data: ArrayView1<'_, C64>) -> Array1<C64> {
    let n = grid.n;
    let inv2h = 1.0 / (2.0 * grid.spacing());
    let mut out = Array1::zeros(n);
    for k in 1..n - 1 {
        out[k] = (data[k + 1] - data[k - 1]) * inv2h;
    }
    if grid.periodic {
        out[0] = (data[1] - data[n - 1]) * inv2h;
        out[n - 1] = (data[0] - data[n - 2]) * inv2h;
    } else {
        out[0] = (-data[2] + data[1] * 4.0 - data[0] * 3.0) * inv2h;
        out[n - 1] = (data[n - 1] * 3.0 - data[n - 2] * 4.0 + data[n - 3]) * inv2h;
    }
    out
}

/// Closed-form periodic spectral differentiation matrix. Exactly
/// antisymmetric; agrees with the FFT route to roundoff.
fn spectral_matrix(grid: &Grid) -> Array2<C64> {
    let n = grid.n;
    let scale = std::f64::consts::PI / grid.length();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            let d = i as i64 - j as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let angle = std::f64::consts::PI * d as f64 / n as f64;
            let v = if n % 2 == 0 {
                sign * scale / angle.tan()
            } else {
                sign * scale / angle.sin()
            };
            C64::new(v, 0.0)
        }
    })
}

fn central2_matrix(grid: &Grid) -> Array2<C64> {
    let n = grid.n;
    let inv2h = 1.0 / (2.0 * grid.spacing());
    let mut d = Array2::zeros((n, n));
    for k in 1..n - 1 {
        d[[k, k + 1]] = C64::new(inv2h, 0.0);
        d[[k, k - 1]] = C64::new(-inv2h, 0.0);
    }
    if grid.periodic {
        d[[0, 1]] = C64::new(inv2h, 0.0);
        d[[0, n - 1]] = C64::new(-inv2h, 0.0);
        d[[n - 1, 0]] = C64::new(inv2h, 0.0);
        d[[n - 1, n - 2]] = C64::new(-inv2h, 0.0);
    } else {
        d[[0, 0]] = C64::new(-3.0 * inv2h, 0.0);
        d[[0, 1]] = C64::new(4.0 * inv2h, 0.0);
        d[[0, 2]] = C64::new(-inv2h, 0.0);
        d[[n - 1, n - 1]] = C64::new(3.0 * inv2h, 0.0);
        d[[n - 1, n - 2]] = C64::new(-4.0 * inv2h, 0.0);
        d[[n - 1, n - 3]] = C64::new(inv2h, 0.0);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_grid(n: usize) -> Grid {
        Grid::new(0.0, 2.0 * std::f64::consts::PI, n, true).unwrap()
    }

    #[test]
    fn spectral_exact_on_modes() {
        let g = periodic_grid(32);
        for mode in [-5i64, 0, 1, 7] {
            let data = Array1::from_iter(
                g.points()
                    .map(|x| C64::from_polar(1.0, mode as f64 * x)),
            );
            let d = DerivativeBackend::Spectral.derivative(&g, data.view()).unwrap();
            for (k, x) in g.points().enumerate() {
                let expect = C64::new(0.0, mode as f64) * C64::from_polar(1.0, mode as f64 * x);
                assert!((d[k] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constants_differentiate_to_zero() {
        let g = periodic_grid(16);
        let data = Array1::from_elem(16, C64::new(3.5, -1.25));
        for backend in [DerivativeBackend::Spectral, DerivativeBackend::Central2] {
            let d = backend.derivative(&g, data.view()).unwrap();
            let worst = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12 * data[0].norm());
        }
        let line = Grid::new(-1.0, 1.0, 16, false).unwrap();
        let d = DerivativeBackend::Central2.derivative(&line, data.view()).unwrap();
        let worst = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12 * data[0].norm());
    }

    #[test]
    fn spectral_rejects_line_grid() {
        let g = Grid::new(0.0, 1.0, 8, false).unwrap();
        let data = Array1::zeros(8);
        assert!(DerivativeBackend::Spectral.derivative(&g, data.view()).is_err());
    }

    #[test]
    fn central2_second_order_on_line() {
        // f(x) = sin(x): one-sided and centered stencils are both order 2
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&n| {
                let g = Grid::new(-1.0, 1.0, n, false).unwrap();
                let data = Array1::from_iter(g.points().map(|x| C64::new(x.sin(), 0.0)));
                let d = DerivativeBackend::Central2.derivative(&g, data.view()).unwrap();
                g.points()
                    .enumerate()
                    .map(|(k, x)| (d[k].re - x.cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.4 && ratio < 4.6, "ratio = {ratio}");
    }

    #[test]
    fn matrix_route_agrees_with_fft_route() {
        for n in [16usize, 17] {
            let g = Grid::new(-3.0, 5.0, n, true).unwrap();
            let data = Array1::from_iter(
                g.points().map(|x| {
                    let t = 2.0 * std::f64::consts::PI * x / g.length();
                    C64::new((2.0 * t).cos(), (3.0 * t).sin() - 0.4)
                }),
            );
            let backend = DerivativeBackend::Spectral;
            let via_fft = backend.derivative(&g, data.view()).unwrap();
            let dm = backend.derivative_matrix(&g).unwrap();
            let via_matrix = dm.dot(&data);
            let scale = via_fft.iter().map(|z| z.norm()).fold(1e-300, f64::max);
            for k in 0..n {
                assert!(
                    (via_fft[k] - via_matrix[k]).norm() < 1e-11 * scale,
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn spectral_matrix_exactly_antisymmetric() {
        let g = Grid::new(0.0, 4.0, 24, true).unwrap();
        let d = DerivativeBackend::Spectral.derivative_matrix(&g).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert_eq!(d[[i, j]], -d[[j, i]]);
            }
        }
    }
}
