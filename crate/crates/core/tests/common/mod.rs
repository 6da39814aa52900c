//! Shared constructions for the integration suites.

use diraclax_core::expm::expm;
use diraclax_core::{Grid, MatrixPotential};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Commuting-family potential Q(x) = f(x) Q0 with f real, zero-mean, and
/// band-limited. The gauge solution is exp((Phi(x) - Phi(x0)) A0) in closed
/// form, and the family is exactly periodic over the grid length.
pub struct CommutingFamily {
    pub potential: MatrixPotential,
    grid: Grid,
    q0: Array2<C64>,
    amp: f64,
}

impl CommutingFamily {
    pub fn new(grid: Grid, m: usize, amp: f64) -> Self {
        let q0 = match m {
            1 => Array2::from_elem((1, 1), C64::new(0.8, 0.4)),
            2 => {
                let mut a = Array2::zeros((2, 2));
                a[[0, 0]] = C64::new(0.5, 0.2);
                a[[0, 1]] = C64::new(0.3, -0.4);
                a[[1, 0]] = a[[0, 1]];
                a[[1, 1]] = C64::new(-0.6, 0.1);
                a
            }
            _ => panic!("commuting family built for m in {{1, 2}}"),
        };
        let samples = grid
            .points()
            .map(|x| &q0 * C64::new(Self::f(&grid, amp, x), 0.0))
            .collect();
        let potential = MatrixPotential::from_samples(grid, m, samples).unwrap();
        CommutingFamily {
            potential,
            grid,
            q0,
            amp,
        }
    }

    fn f(grid: &Grid, amp: f64, x: f64) -> f64 {
        let u = 2.0 * std::f64::consts::PI * x / grid.length();
        amp * (u.cos() + 0.5 * (2.0 * u).sin())
    }

    fn phi(&self, x: f64) -> f64 {
        let u = 2.0 * std::f64::consts::PI * x / self.grid.length();
        let c = self.grid.length() / (2.0 * std::f64::consts::PI);
        self.amp * c * (u.sin() - 0.25 * (2.0 * u).cos())
    }

    fn generator(&self) -> Array2<C64> {
        let m = self.q0.nrows();
        let mut a = Array2::zeros((2 * m, 2 * m));
        for i in 0..m {
            for j in 0..m {
                a[[i, m + j]] = self.q0[[i, j]];
                a[[m + i, j]] = -self.q0[[j, i]].conj();
            }
        }
        a
    }

    /// Closed-form gauge family (scaling-and-squaring oracle).
    pub fn exact_family(&self) -> Vec<Array2<C64>> {
        let anchor = self.grid.anchor_index();
        let x0 = self.grid.point(anchor);
        let gen = self.generator();
        self.grid
            .points()
            .map(|x| expm(&gen.mapv(|z| z * C64::new(self.phi(x) - self.phi(x0), 0.0))))
            .collect()
    }
}

/// Amplitude-A width-1 profile A sech(x), the Satsuma-Yajima family with
/// the eigenvalue ladder i (A - k - 1/2).
pub fn amp_sech_potential(grid: Grid, a: f64) -> MatrixPotential {
    let samples = grid
        .points()
        .map(|x| Array2::from_elem((1, 1), C64::new(a / x.cosh(), 0.0)))
        .collect();
    MatrixPotential::from_samples(grid, 1, samples).unwrap()
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
