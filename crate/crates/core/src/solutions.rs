//! Closed-form solutions of the focusing matrix NLS equation
//! Q_t = (i/2) Q_xx + i Q Q* Q, used as oracles by tests and experiments.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::grid::Grid;
use crate::lax::{reduce, AknsPair, PairKind, SpaceTimeField};

/// Plane-wave frequency: substituting a e^{i(kappa x - omega t)} fixes
/// omega = kappa^2 / 2 - a^2.
pub fn plane_wave_omega(amplitude: f64, kappa: f64) -> f64 {
    kappa * kappa / 2.0 - amplitude * amplitude
}

/// Scalar plane wave a e^{i(kappa x - omega t)} on [0, 2 pi) with integer
/// mode; exact for every t.
pub fn plane_wave_value(amplitude: f64, mode: i64, length: f64, x: f64, t: f64) -> C64 {
    let kappa = 2.0 * std::f64::consts::PI * mode as f64 / length;
    let omega = plane_wave_omega(amplitude, kappa);
    C64::from_polar(amplitude, kappa * x - omega * t)
}

/// Scalar soliton A sech(A x) e^{i A^2 t / 2}.
pub fn soliton_value(amplitude: f64, x: f64, t: f64) -> C64 {
    C64::from_polar(
        amplitude / (amplitude * x).cosh(),
        amplitude * amplitude * t / 2.0,
    )
}

/// Space-time sampling of the plane wave with its focusing reduction.
/// Returns the pair and the spatial grid (period 2 pi).
pub fn focusing_plane_wave_pair(
    amplitude: f64,
    mode: i64,
    n: usize,
    dt: f64,
    num_slices: usize,
) -> (AknsPair, Grid) {
    let grid = Grid::new(0.0, 2.0 * std::f64::consts::PI, n, true).unwrap();
    let length = grid.length();
    let q = SpaceTimeField::sample(grid, 1, 0.0, dt, num_slices, |x, t| {
        Array2::from_elem((1, 1), plane_wave_value(amplitude, mode, length, x, t))
    })
    .unwrap();
    (reduce(PairKind::Focusing, q), grid)
}

/// Space-time sampling of the soliton on the periodic window [-20, 20),
/// starting at time t0.
pub fn focusing_soliton_pair(
    amplitude: f64,
    n: usize,
    dt: f64,
    num_slices: usize,
    t0: f64,
) -> AknsPair {
    let grid = Grid::new(-20.0, 20.0, n, true).unwrap();
    let q = SpaceTimeField::sample(grid, 1, t0, dt, num_slices, |x, t| {
        Array2::from_elem((1, 1), soliton_value(amplitude, x, t))
    })
    .unwrap();
    reduce(PairKind::Focusing, q)
}

/// Negative control: the soliton profile with twice the correct phase
/// speed, which solves no equation of the hierarchy.
pub fn focusing_soliton_pair_broken(
    amplitude: f64,
    n: usize,
    dt: f64,
    num_slices: usize,
) -> AknsPair {
    let grid = Grid::new(-20.0, 20.0, n, true).unwrap();
    let q = SpaceTimeField::sample(grid, 1, 0.0, dt, num_slices, |x, t| {
        Array2::from_elem(
            (1, 1),
            C64::from_polar(
                amplitude / (amplitude * x).cosh(),
                amplitude * amplitude * t,
            ),
        )
    })
    .unwrap();
    reduce(PairKind::Focusing, q)
}

/// Initial soliton profile as a potential on a periodic grid.
pub fn soliton_potential(amplitude: f64, grid: &Grid) -> crate::potential::MatrixPotential {
    let samples = grid
        .points()
        .map(|x| Array2::from_elem((1, 1), soliton_value(amplitude, x, 0.0)))
        .collect();
    crate::potential::MatrixPotential::from_samples(*grid, 1, samples).unwrap()
}
