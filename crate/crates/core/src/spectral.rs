use ndarray::{Array1, Array2};
use ndarray_linalg::EigVals;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::grid::Grid;
use crate::operators::{OperatorMatrix, DENSE_DIM_CAP};
use crate::potential::MatrixPotential;

/// Required decay of |q| at the window ends for the shooting problem.
pub const SHOOTING_DECAY_TOL: f64 = 1e-6;

/// Secant tolerance on |a(z)| when polishing roots.
pub const SECANT_TOL: f64 = 1e-10;

const SECANT_MAX_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Dense,
    Shooting,
}

/// A multiset of spectral-parameter values with provenance metadata.
#[derive(Debug, Clone)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<C64>,
    pub provenance: Provenance,
    pub m: usize,
    pub grid: Grid,
    /// Shooting candidates dropped for non-convergence.
    pub dropped_candidates: usize,
}

/// Rectangle in the upper half plane scanned for discrete eigenvalues.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// All eigenvalues of a dense assembled operator, unordered.
pub fn dense_spectrum(a: &OperatorMatrix) -> Result<SpectrumSample> {
    if a.dim() > DENSE_DIM_CAP {
        return Err(Error::domain(format!(
            "matrix dimension {} exceeds the dense cap {DENSE_DIM_CAP}",
            a.dim()
        )));
    }
    let vals: Array1<C64> = a
        .entries
        .eigvals()
        .map_err(|e| Error::computation(format!("dense eigensolve failed: {e}")))?;
    Ok(SpectrumSample {
        eigenvalues: vals.to_vec(),
        provenance: Provenance::Dense,
        m: a.m,
        grid: a.grid,
        dropped_candidates: 0,
    })
}

/// Transfer-matrix evaluation of the transmission-denominator coefficient
/// a(z) for the m = 1 spectral problem
/// F1' = -i z F1 + q F2, F2' = i z F2 - conj(q) F1.
///
/// The left solution is normalized to (e^{-izx}, 0) asymptotics; a(z) is
/// read off the right end. Steps use the midpoint-exponential stepper with
/// a scaling-and-squaring exponential on the z-dependent generator.
struct ShootingSystem {
    q_mid: Vec<C64>,
    h: f64,
    width: f64,
}

impl ShootingSystem {
    fn new(q: &MatrixPotential) -> Result<Self> {
        if q.m() != 1 {
            return Err(Error::domain("shooting requires a scalar potential (m = 1)"));
        }
        if q.edge_magnitude() > SHOOTING_DECAY_TOL {
            return Err(Error::domain(format!(
                "potential does not decay at the window ends (|q| = {:.3e} > {:.0e})",
                q.edge_magnitude(),
                SHOOTING_DECAY_TOL
            )));
        }
        let grid = q.grid();
        let n = grid.n;
        let q_mid: Vec<C64> = (0..n - 1)
            .map(|k| (q.sample_at(k)[[0, 0]] + q.sample_at(k + 1)[[0, 0]]) * 0.5)
            .collect();
        Ok(ShootingSystem {
            q_mid,
            h: grid.spacing(),
            width: grid.point(n - 1) - grid.point(0),
        })
    }

    /// Coarse copy for the lattice scan: every stride-th sample, so the box
    /// sweep stays cheap while root polishing keeps the full resolution.
    fn decimate(q: &MatrixPotential, target_steps: usize) -> Result<Self> {
        let grid = q.grid();
        let n = grid.n;
        let stride = ((n - 1) / target_steps).max(1);
        let idx: Vec<usize> = (0..n).step_by(stride).collect();
        let h = grid.spacing() * stride as f64;
        let q_mid: Vec<C64> = idx
            .windows(2)
            .map(|w| (q.sample_at(w[0])[[0, 0]] + q.sample_at(w[1])[[0, 0]]) * 0.5)
            .collect();
        let width = (idx[idx.len() - 1] - idx[0]) as f64 * grid.spacing();
        Ok(ShootingSystem { q_mid, h, width })
    }

    fn a_of_z(&self, z: C64) -> C64 {
        let mut y1 = C64::new(1.0, 0.0);
        let mut y2 = C64::new(0.0, 0.0);
        let iz = C64::new(0.0, 1.0) * z;
        let mut gen: Array2<C64> = Array2::zeros((2, 2));
        for q in &self.q_mid {
            gen[[0, 0]] = -iz * self.h;
            gen[[0, 1]] = q * self.h;
            gen[[1, 0]] = -q.conj() * self.h;
            gen[[1, 1]] = iz * self.h;
            let step = expm(&gen);
            let ny1 = step[[0, 0]] * y1 + step[[0, 1]] * y2;
            let ny2 = step[[1, 0]] * y1 + step[[1, 1]] * y2;
            y1 = ny1;
            y2 = ny2;
        }
        y1 * (C64::new(0.0, 1.0) * z * self.width).exp()
    }
}

/// Locate discrete eigenvalues of the m = 1 line problem inside a search
/// box: scan a coarse lattice for phase windings of a(z), then polish each
/// candidate with a secant iteration on a(z) = 0.
pub fn shooting_discrete_eigenvalues(
    q: &MatrixPotential,
    search_box: SearchBox,
    grid_density: usize,
) -> Result<SpectrumSample> {
    if search_box.im_min <= 0.0 {
        return Err(Error::domain("search box must lie in the open upper half plane"));
    }
    if !(search_box.re_min < search_box.re_max && search_box.im_min < search_box.im_max) {
        return Err(Error::domain("degenerate search box"));
    }
    if grid_density < 2 {
        return Err(Error::domain("grid density must be at least 2"));
    }
    let sys = ShootingSystem::new(q)?;
    let scan_sys = ShootingSystem::decimate(q, 2048)?;
    if search_box.im_max * sys.width > 600.0 {
        return Err(Error::domain(
            "search box too tall for the sampling window (exponential overflow)",
        ));
    }

    // lattice of a(z) values
    let nr = grid_density;
    let ni = grid_density;
    let dre = (search_box.re_max - search_box.re_min) / nr as f64;
    let dim = (search_box.im_max - search_box.im_min) / ni as f64;
    let mut values = vec![C64::new(0.0, 0.0); (nr + 1) * (ni + 1)];
    for j in 0..=ni {
        for i in 0..=nr {
            let z = C64::new(
                search_box.re_min + i as f64 * dre,
                search_box.im_min + j as f64 * dim,
            );
            values[j * (nr + 1) + i] = scan_sys.a_of_z(z);
        }
    }

    // plaquettes with nonzero winding of arg a(z) hold candidates
    let mut candidates = Vec::new();
    for j in 0..ni {
        for i in 0..nr {
            let corners = [
                values[j * (nr + 1) + i],
                values[j * (nr + 1) + i + 1],
                values[(j + 1) * (nr + 1) + i + 1],
                values[(j + 1) * (nr + 1) + i],
            ];
            let mut winding = 0.0;
            let mut degenerate = false;
            for c in 0..4 {
                let a = corners[c];
                let b = corners[(c + 1) % 4];
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    degenerate = true;
                    break;
                }
                winding += (b / a).arg();
            }
            let center = C64::new(
                search_box.re_min + (i as f64 + 0.5) * dre,
                search_box.im_min + (j as f64 + 0.5) * dim,
            );
            if degenerate || winding.abs() > std::f64::consts::PI {
                candidates.push(center);
            }
        }
    }

    // secant polish
    let mut roots: Vec<C64> = Vec::new();
    let mut dropped = 0usize;
    let span = (dre * dre + dim * dim).sqrt();
    for center in candidates {
        match polish_root(&sys, center, span) {
            Some(root) => {
                if !roots.iter().any(|r| (r - root).norm() < 1e-7) {
                    roots.push(root);
                }
            }
            None => dropped += 1,
        }
    }
    roots.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));

    Ok(SpectrumSample {
        eigenvalues: roots,
        provenance: Provenance::Shooting,
        m: 1,
        grid: *q.grid(),
        dropped_candidates: dropped,
    })
}

fn polish_root(sys: &ShootingSystem, center: C64, span: f64) -> Option<C64> {
    let mut z0 = center;
    let mut z1 = center + C64::new(0.1 * span, 0.05 * span);
    let mut a0 = sys.a_of_z(z0);
    let mut a1 = sys.a_of_z(z1);
    for _ in 0..SECANT_MAX_STEPS {
        if a1.norm() < SECANT_TOL {
            return Some(z1);
        }
        let denom = a1 - a0;
        if denom.norm() == 0.0 {
            return None;
        }
        let z2 = z1 - a1 * (z1 - z0) / denom;
        if !z2.re.is_finite() || !z2.im.is_finite() {
            return None;
        }
        // runaway iterations are dropped
        if (z2 - center).norm() > 20.0 * span + 1.0 {
            return None;
        }
        z0 = z1;
        a0 = a1;
        z1 = z2;
        a1 = sys.a_of_z(z1);
    }
    if a1.norm() < SECANT_TOL {
        Some(z1)
    } else {
        None
    }
}

/// Outcome of greedily matching two filtered spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    /// max over matched pairwise distances and unmatched |Im z| contributions
    pub distance: f64,
    /// true when a filtered side was empty
    pub empty: bool,
    pub matched_pairs: usize,
}

/// Greedy minimal-cost matching between the top_k (by |Im z|, descending)
/// eigenvalues of two samples after region filtering. Unmatched elements
/// contribute their |Im z|.
pub fn spectrum_matching_distance(
    s1: &SpectrumSample,
    s2: &SpectrumSample,
    top_k: usize,
    region: impl Fn(C64) -> bool,
) -> MatchReport {
    let select = |s: &SpectrumSample| -> Vec<C64> {
        let mut v: Vec<C64> = s.eigenvalues.iter().copied().filter(|z| region(*z)).collect();
        v.sort_by(|a, b| {
            b.im.abs()
                .total_cmp(&a.im.abs())
                .then(a.re.total_cmp(&b.re))
                .then(a.im.total_cmp(&b.im))
        });
        v.truncate(top_k);
        v
    };
    let mut left = select(s1);
    let mut right = select(s2);
    let empty = left.is_empty() || right.is_empty();

    let mut distance: f64 = 0.0;
    let mut matched_pairs = 0usize;
    while !left.is_empty() && !right.is_empty() {
        let mut best = (0usize, 0usize, f64::INFINITY);
        for (i, a) in left.iter().enumerate() {
            for (j, b) in right.iter().enumerate() {
                let d = (a - b).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        distance = distance.max(best.2);
        left.swap_remove(best.0);
        right.swap_remove(best.1);
        matched_pairs += 1;
    }
    for z in left.iter().chain(right.iter()) {
        distance = distance.max(z.im.abs());
    }
    MatchReport {
        distance,
        empty,
        matched_pairs,
    }
}
