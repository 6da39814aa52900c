use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deriv::DerivativeBackend;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::NORM_FLOOR;
use crate::potential::MatrixPotential;
use crate::spinor::SpinorField;

/// m x m matrix field sampled over space and a uniform time lattice.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    m: usize,
    grid: Grid,
    t0: f64,
    dt: f64,
    slices: Vec<Vec<Array2<C64>>>,
}

impl SpaceTimeField {
    pub fn new(
        grid: Grid,
        m: usize,
        t0: f64,
        dt: f64,
        slices: Vec<Vec<Array2<C64>>>,
    ) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::domain("space-time field needs at least one slice"));
        }
        if dt <= 0.0 {
            return Err(Error::domain("time spacing must be positive"));
        }
        for s in &slices {
            if s.len() != grid.n || s.iter().any(|a| a.dim() != (m, m)) {
                return Err(Error::domain("slice shape does not match grid and m"));
            }
        }
        Ok(SpaceTimeField {
            m,
            grid,
            t0,
            dt,
            slices,
        })
    }

    /// Sample a closure Q(x, t) over the space-time lattice.
    pub fn sample(
        grid: Grid,
        m: usize,
        t0: f64,
        dt: f64,
        num_slices: usize,
        f: impl Fn(f64, f64) -> Array2<C64>,
    ) -> Result<Self> {
        let slices = (0..num_slices)
            .map(|j| {
                let t = t0 + j as f64 * dt;
                grid.points().map(|x| f(x, t)).collect()
            })
            .collect();
        Self::new(grid, m, t0, dt, slices)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn time_at(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn slice(&self, j: usize) -> &[Array2<C64>] {
        &self.slices[j]
    }

    /// One slice viewed as a potential (tolerating asymmetric data, since
    /// the AKNS system does not assume the symmetry hypothesis).
    pub fn slice_potential(&self, j: usize) -> Result<MatrixPotential> {
        MatrixPotential::from_samples_asymmetric(self.grid, self.m, self.slices[j].clone())
    }

    /// Centered time derivative at interior slice j.
    fn time_derivative(&self, j: usize) -> Result<Vec<Array2<C64>>> {
        if j == 0 || j + 1 >= self.slices.len() {
            return Err(Error::domain("time derivative needs an interior slice"));
        }
        let inv = 1.0 / (2.0 * self.dt);
        Ok((0..self.grid.n)
            .map(|k| (&self.slices[j + 1][k] - &self.slices[j - 1][k]) * C64::new(inv, 0.0))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Focusing,
    Defocusing,
}

/// The coupled pair (P, Q) of the matrix AKNS system over space-time.
#[derive(Debug, Clone)]
pub struct AknsPair {
    pub q: SpaceTimeField,
    pub p: SpaceTimeField,
}

impl AknsPair {
    pub fn new(q: SpaceTimeField, p: SpaceTimeField) -> Result<Self> {
        if !q.grid.same_as(&p.grid)
            || q.m != p.m
            || q.slices.len() != p.slices.len()
            || q.dt != p.dt
            || q.t0 != p.t0
        {
            return Err(Error::domain("P and Q fields do not share a lattice"));
        }
        Ok(AknsPair { q, p })
    }

    pub fn m(&self) -> usize {
        self.q.m
    }

    pub fn grid(&self) -> &Grid {
        &self.q.grid
    }

    pub fn num_slices(&self) -> usize {
        self.q.num_slices()
    }

    /// max over space-time of the reduction defect: ||P + Q*|| for focusing,
    /// ||P - Q*|| for defocusing.
    pub fn reduction_defect(&self, kind: PairKind) -> f64 {
        let sign = match kind {
            PairKind::Focusing => 1.0,
            PairKind::Defocusing => -1.0,
        };
        let mut worst: f64 = 0.0;
        for (qs, ps) in self.q.slices.iter().zip(self.p.slices.iter()) {
            for (qk, pk) in qs.iter().zip(ps.iter()) {
                let adj = qk.t().mapv(|z| z.conj());
                for (a, b) in pk.iter().zip(adj.iter()) {
                    worst = worst.max((a + b * sign).norm());
                }
            }
        }
        worst
    }
}

/// Build the focusing (P = -Q*) or defocusing (P = Q*) reduction of Q.
pub fn reduce(kind: PairKind, q: SpaceTimeField) -> AknsPair {
    let sign = match kind {
        PairKind::Focusing => C64::new(-1.0, 0.0),
        PairKind::Defocusing => C64::new(1.0, 0.0),
    };
    let p_slices: Vec<Vec<Array2<C64>>> = q
        .slices
        .iter()
        .map(|s| s.iter().map(|a| a.t().mapv(|z| z.conj() * sign)).collect())
        .collect();
    let p = SpaceTimeField {
        m: q.m,
        grid: q.grid,
        t0: q.t0,
        dt: q.dt,
        slices: p_slices,
    };
    AknsPair { q, p }
}

fn max_norm(samples: &[Array2<C64>]) -> f64 {
    samples
        .iter()
        .flat_map(|a| a.iter().map(|z| z.norm()))
        .fold(0.0, f64::max)
}

/// Residuals (max ||R_Q||, max ||R_P||) of the AKNS system
/// R_Q = Q_t - (i/2) Q_xx + i Q P Q, R_P = P_t + (i/2) P_xx - i P Q P,
/// evaluated at interior time slices.
pub fn akns_residual(pair: &AknsPair, backend: DerivativeBackend) -> Result<(f64, f64)> {
    if pair.num_slices() < 3 {
        return Err(Error::domain("AKNS residual needs at least 3 time slices"));
    }
    let grid = &pair.q.grid;
    let i = C64::new(0.0, 1.0);
    let half_i = C64::new(0.0, 0.5);
    let mut worst_q: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for j in 1..pair.num_slices() - 1 {
        let q = pair.q.slice(j);
        let p = pair.p.slice(j);
        let qt = pair.q.time_derivative(j)?;
        let pt = pair.p.time_derivative(j)?;
        let qx = backend.derivative_matrix_samples(grid, q)?;
        let qxx = backend.derivative_matrix_samples(grid, &qx)?;
        let px = backend.derivative_matrix_samples(grid, p)?;
        let pxx = backend.derivative_matrix_samples(grid, &px)?;
        let rq: Vec<Array2<C64>> = (0..grid.n)
            .map(|k| {
                let qpq = q[k].dot(&p[k]).dot(&q[k]);
                &qt[k] - &(&qxx[k] * half_i) + &(qpq * i)
            })
            .collect();
        let rp: Vec<Array2<C64>> = (0..grid.n)
            .map(|k| {
                let pqp = p[k].dot(&q[k]).dot(&p[k]);
                &pt[k] + &(&pxx[k] * half_i) - &(pqp * i)
            })
            .collect();
        worst_q = worst_q.max(max_norm(&rq));
        worst_p = worst_p.max(max_norm(&rp));
    }
    Ok((worst_q, worst_p))
}

fn check_field(pair: &AknsPair, f: &SpinorField) -> Result<()> {
    if !pair.grid().same_as(f.grid()) || pair.m() != f.m() {
        return Err(Error::domain("field does not match the pair lattice"));
    }
    Ok(())
}

/// Apply the general first-order expression M(P, Q):
/// (M F)_1 = i (F1' - Q F2), (M F)_2 = i (P F1 - F2').
pub fn apply_m_general(
    q: &[Array2<C64>],
    p: &[Array2<C64>],
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<SpinorField> {
    let grid = *f.grid();
    let m = f.m();
    let df = backend.derivative_field(f)?;
    let i = C64::new(0.0, 1.0);
    let mut out = Array2::zeros((grid.n, 2 * m));
    for k in 0..grid.n {
        for r in 0..m {
            let mut qf2 = C64::new(0.0, 0.0);
            let mut pf1 = C64::new(0.0, 0.0);
            for c in 0..m {
                qf2 += q[k][[r, c]] * f.samples()[[k, m + c]];
                pf1 += p[k][[r, c]] * f.samples()[[k, c]];
            }
            out[[k, r]] = i * (df.samples()[[k, r]] - qf2);
            out[[k, m + r]] = i * (pf1 - df.samples()[[k, m + r]]);
        }
    }
    SpinorField::from_samples(grid, m, out)
}

/// Apply the second-order expression L(P, Q) at one time slice:
/// (L F)_1 = i (F1'' - (1/2) Q P F1 - Q F2' - (1/2) Q_x F2)
/// (L F)_2 = i (P F1' + (1/2) P_x F1 - F2'' + (1/2) P Q F2).
///
/// The sign of the (1/2) P_x term is the unique choice for which
/// dM/dt - [L, M] reduces to the coupling i(-R_Q F2; R_P F1) in the AKNS
/// residuals, making the Lax equation equivalent to the AKNS system; see
/// the coupling test below.
pub fn apply_lax_l(
    pair: &AknsPair,
    t_index: usize,
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<SpinorField> {
    check_field(pair, f)?;
    if t_index >= pair.num_slices() {
        return Err(Error::domain("time index out of range"));
    }
    let grid = *f.grid();
    let m = f.m();
    let q = pair.q.slice(t_index);
    let p = pair.p.slice(t_index);
    let qx = backend.derivative_matrix_samples(&grid, q)?;
    let px = backend.derivative_matrix_samples(&grid, p)?;
    let df = backend.derivative_field(f)?;
    let ddf = backend.derivative_field(&df)?;
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    let mut out = Array2::zeros((grid.n, 2 * m));
    for k in 0..grid.n {
        let qp = q[k].dot(&p[k]);
        let pq = p[k].dot(&q[k]);
        for r in 0..m {
            let mut acc1 = ddf.samples()[[k, r]];
            let mut acc2 = -ddf.samples()[[k, m + r]];
            for c in 0..m {
                acc1 -= half * qp[[r, c]] * f.samples()[[k, c]];
                acc1 -= q[k][[r, c]] * df.samples()[[k, m + c]];
                acc1 -= half * qx[k][[r, c]] * f.samples()[[k, m + c]];
                acc2 += p[k][[r, c]] * df.samples()[[k, c]];
                acc2 += half * px[k][[r, c]] * f.samples()[[k, c]];
                acc2 += half * pq[[r, c]] * f.samples()[[k, m + c]];
            }
            out[[k, r]] = i * acc1;
            out[[k, m + r]] = i * acc2;
        }
    }
    SpinorField::from_samples(grid, m, out)
}

/// Relative residual of the Lax equation dM/dt = [L, M] on a test field at
/// the middle time slice; the commutator is evaluated as L(M F) - M(L F).
pub fn lax_equation_residual(
    pair: &AknsPair,
    f: &SpinorField,
    backend: DerivativeBackend,
) -> Result<f64> {
    check_field(pair, f)?;
    if pair.num_slices() < 3 {
        return Err(Error::domain("Lax residual needs at least 3 time slices"));
    }
    let j = pair.num_slices() / 2;
    let grid = *f.grid();
    let m = f.m();
    let q = pair.q.slice(j);
    let p = pair.p.slice(j);
    let qt = pair.q.time_derivative(j)?;
    let pt = pair.p.time_derivative(j)?;

    // dM/dt F = i (-Q_t F2 ; P_t F1)
    let i = C64::new(0.0, 1.0);
    let mut mt_f = Array2::zeros((grid.n, 2 * m));
    for k in 0..grid.n {
        for r in 0..m {
            let mut qtf2 = C64::new(0.0, 0.0);
            let mut ptf1 = C64::new(0.0, 0.0);
            for c in 0..m {
                qtf2 += qt[k][[r, c]] * f.samples()[[k, m + c]];
                ptf1 += pt[k][[r, c]] * f.samples()[[k, c]];
            }
            mt_f[[k, r]] = -i * qtf2;
            mt_f[[k, m + r]] = i * ptf1;
        }
    }

    let mf = apply_m_general(q, p, f, backend)?;
    let lmf = apply_lax_l(pair, j, &mf, backend)?;
    let lf = apply_lax_l(pair, j, f, backend)?;
    let mlf = apply_m_general(q, p, &lf, backend)?;

    let h = grid.spacing();
    let mut sum = 0.0;
    for k in 0..grid.n {
        for c in 0..2 * m {
            let commutator = lmf.samples()[[k, c]] - mlf.samples()[[k, c]];
            sum += (mt_f[[k, c]] - commutator).norm_sqr();
        }
    }
    Ok((h * sum).sqrt() / f.norm_l2().max(NORM_FLOOR))
}

fn zero_curvature_u(z: C64, q: &Array2<C64>, p: &Array2<C64>) -> Array2<C64> {
    let m = q.nrows();
    let iz = C64::new(0.0, 1.0) * z;
    let mut u = Array2::zeros((2 * m, 2 * m));
    for r in 0..m {
        u[[r, r]] = -iz;
        u[[m + r, m + r]] = iz;
        for c in 0..m {
            u[[r, m + c]] = q[[r, c]];
            u[[m + r, c]] = p[[r, c]];
        }
    }
    u
}

fn zero_curvature_v(
    z: C64,
    q: &Array2<C64>,
    p: &Array2<C64>,
    qx: &Array2<C64>,
    px: &Array2<C64>,
) -> Array2<C64> {
    let m = q.nrows();
    let i = C64::new(0.0, 1.0);
    let iz2 = i * z * z;
    let half_i = C64::new(0.0, 0.5);
    let qp = q.dot(p);
    let pq = p.dot(q);
    let mut v = Array2::zeros((2 * m, 2 * m));
    for r in 0..m {
        for c in 0..m {
            let delta = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            v[[r, c]] = -iz2 * delta - half_i * qp[[r, c]];
            v[[r, m + c]] = z * q[[r, c]] + half_i * qx[[r, c]];
            v[[m + r, c]] = z * p[[r, c]] - half_i * px[[r, c]];
            v[[m + r, m + c]] = iz2 * delta + half_i * pq[[r, c]];
        }
    }
    v
}

/// max over interior space-time points of || U_t - V_x + [U, V] ||_inf for
/// the zero-curvature matrices at spectral parameter z.
pub fn zero_curvature_residual(
    pair: &AknsPair,
    z: C64,
    backend: DerivativeBackend,
) -> Result<f64> {
    if pair.num_slices() < 3 {
        return Err(Error::domain("zero-curvature residual needs at least 3 slices"));
    }
    let grid = pair.grid();
    let n = grid.n;
    let nt = pair.num_slices();

    // U samples per slice
    let build_u = |j: usize| -> Vec<Array2<C64>> {
        (0..n)
            .map(|k| zero_curvature_u(z, &pair.q.slice(j)[k], &pair.p.slice(j)[k]))
            .collect()
    };
    // V samples per slice (needs Q_x, P_x first)
    let build_v = |j: usize| -> Result<Vec<Array2<C64>>> {
        let qx = backend.derivative_matrix_samples(grid, pair.q.slice(j))?;
        let px = backend.derivative_matrix_samples(grid, pair.p.slice(j))?;
        Ok((0..n)
            .map(|k| {
                zero_curvature_v(
                    z,
                    &pair.q.slice(j)[k],
                    &pair.p.slice(j)[k],
                    &qx[k],
                    &px[k],
                )
            })
            .collect())
    };

    let inv2dt = C64::new(1.0 / (2.0 * pair.q.dt), 0.0);
    let mut worst: f64 = 0.0;
    let mut u_prev = build_u(0);
    let mut u_curr = build_u(1);
    for j in 1..nt - 1 {
        let u_next = build_u(j + 1);
        let v_curr = build_v(j)?;
        let vx = backend.derivative_matrix_samples(grid, &v_curr)?;
        for k in 0..n {
            let ut = (&u_next[k] - &u_prev[k]) * inv2dt;
            let commutator = u_curr[k].dot(&v_curr[k]) - v_curr[k].dot(&u_curr[k]);
            let resid = &ut - &vx[k] + &commutator;
            worst = worst.max(resid.iter().map(|w| w.norm()).fold(0.0, f64::max));
        }
        u_prev = u_curr;
        u_curr = u_next;
    }
    Ok(worst)
}

/// The fixed probe set {0, 1, -1, i, -i}: the zero-curvature equation must
/// hold for every z, so any finite probe is a necessary condition only.
pub fn probe_set() -> [C64; 5] {
    [
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -1.0),
    ]
}
