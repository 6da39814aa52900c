use crate::error::{Error, Result};

/// Uniform 1-D sampling of an interval.
///
/// Periodic grids place `n` points on `[x_min, x_max)` with spacing
/// `(x_max - x_min) / n`; the right endpoint is identified with the left.
/// Non-periodic grids include both endpoints, spacing
/// `(x_max - x_min) / (n - 1)`.
///
/// For interchange, grids travel as the `io::GridDoc` document so the
/// derived spacing is always rebuilt through the constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub periodic: bool,
    h: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::domain(format!(
                "grid requires x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 4 {
            return Err(Error::domain(format!("grid requires n >= 4, got {n}")));
        }
        let span = x_max - x_min;
        let h = if periodic {
            span / n as f64
        } else {
            span / (n - 1) as f64
        };
        Ok(Grid {
            x_min,
            x_max,
            n,
            periodic,
            h,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Total length covered by the sampling (the period for periodic grids).
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.point(k))
    }

    /// Index of the sample nearest 0, or 0 when the origin lies outside the grid.
    pub fn anchor_index(&self) -> usize {
        if self.x_min > 0.0 || self.x_max < 0.0 {
            return 0;
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for k in 0..self.n {
            let d = self.point(k).abs();
            if d < best_dist {
                best_dist = d;
                best = k;
            }
        }
        best
    }

    /// Grids are compatible when every defining field agrees exactly.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.n == other.n
            && self.periodic == other.periodic
    }
}
