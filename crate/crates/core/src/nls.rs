use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::deriv::{fft_forward, fft_inverse, wavenumbers_full, DerivativeBackend};
use crate::error::{Error, Result};
use crate::expm::eigh_columns;
use crate::operators::{assemble_dense, OperatorExpr};
use crate::potential::MatrixPotential;
use crate::spectral::{dense_spectrum, spectrum_matching_distance, SpectrumSample};

/// Which cubic sign the nonlinear substep integrates. `Defocusing` exists
/// only as the negative control of the isospectrality experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowSign {
    Focusing,
    Defocusing,
}

/// One point of an evolution trajectory.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    pub q: MatrixPotential,
    pub l2_norm: f64,
    pub step_count: usize,
}

impl EvolutionState {
    pub fn initial(q: MatrixPotential) -> Self {
        let l2 = conserved_l2(&q);
        EvolutionState {
            t: 0.0,
            q,
            l2_norm: l2,
            step_count: 0,
        }
    }
}

/// h sum_k trace(Q Q*), the grid form of the squared L^2 norm.
pub fn conserved_l2(q: &MatrixPotential) -> f64 {
    let h = q.grid().spacing();
    let sum: f64 = q
        .samples()
        .iter()
        .flat_map(|s| s.iter().map(|z| z.norm_sqr()))
        .sum();
    h * sum
}

/// Advance the dispersive part Q_t = (i/2) Q_xx exactly over a time tau:
/// every spatial mode k multiplies by e^{-i k^2 tau / 2}.
pub fn linear_step(state: &EvolutionState, tau: f64) -> Result<EvolutionState> {
    let grid = *state.q.grid();
    if !grid.periodic {
        return Err(Error::domain("the split-step scheme needs a periodic grid"));
    }
    let m = state.q.m();
    let n = grid.n;
    let ks = wavenumbers_full(&grid);
    let phases: Vec<C64> = ks
        .iter()
        .map(|k| C64::from_polar(1.0, -k * k * tau / 2.0))
        .collect();
    let mut samples = state.q.samples().to_vec();
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                buf[k] = samples[k][[i, j]];
            }
            fft_forward(&mut buf);
            for (v, p) in buf.iter_mut().zip(phases.iter()) {
                *v *= p;
            }
            fft_inverse(&mut buf);
            let scale = 1.0 / n as f64;
            for k in 0..n {
                samples[k][[i, j]] = buf[k] * scale;
            }
        }
    }
    let q = MatrixPotential::from_samples_asymmetric(grid, m, samples)?;
    Ok(EvolutionState {
        t: state.t,
        q,
        l2_norm: state.l2_norm,
        step_count: state.step_count,
    })
}

/// Half linear step, the bracket of the Strang composition.
pub fn linear_half_step(state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
    linear_step(state, dt / 2.0)
}

/// Advance the cubic part exactly over dt. Along this sub-flow H = Q Q* is
/// constant, so Q(t + dt) = exp(+- i dt H) Q(t) pointwise with a Hermitian
/// matrix exponential (scalar phase for m = 1).
pub fn nonlinear_step(state: &EvolutionState, dt: f64, sign: FlowSign) -> Result<EvolutionState> {
    let m = state.q.m();
    let s = match sign {
        FlowSign::Focusing => 1.0,
        FlowSign::Defocusing => -1.0,
    };
    let samples: Vec<Array2<C64>> = if m == 1 {
        state
            .q
            .samples()
            .iter()
            .map(|qk| {
                let q = qk[[0, 0]];
                Array2::from_elem((1, 1), q * C64::from_polar(1.0, s * dt * q.norm_sqr()))
            })
            .collect()
    } else {
        let mut out = Vec::with_capacity(state.q.grid().n);
        for qk in state.q.samples() {
            let h = qk.dot(&qk.t().mapv(|z| z.conj()));
            let (vals, vecs) = eigh_columns(&h)?;
            // exp(i s dt H) = V diag(e^{i s dt lambda}) V^*
            let mut scaled = vecs.clone();
            for j in 0..m {
                let phase = C64::from_polar(1.0, s * dt * vals[j]);
                for i in 0..m {
                    scaled[[i, j]] *= phase;
                }
            }
            let vdag = vecs.t().mapv(|z| z.conj());
            out.push(scaled.dot(&vdag).dot(qk));
        }
        out
    };
    let q = MatrixPotential::from_samples_asymmetric(*state.q.grid(), m, samples)?;
    Ok(EvolutionState {
        t: state.t,
        q,
        l2_norm: state.l2_norm,
        step_count: state.step_count,
    })
}

/// A trajectory, possibly cut short when non-finite values appeared.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub states: Vec<EvolutionState>,
    /// Index of the step at which the evolution halted, if it did.
    pub failed_at_step: Option<usize>,
}

fn is_finite(q: &MatrixPotential) -> bool {
    q.samples()
        .iter()
        .all(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Strang evolution of the focusing matrix NLS equation
/// Q_t = (i/2) Q_xx + i Q Q* Q: half linear step, full nonlinear step, half
/// linear step per dt; global order 2, with both substeps norm-preserving.
pub fn evolve(
    q0: MatrixPotential,
    dt: f64,
    steps: usize,
    sign: FlowSign,
) -> Result<EvolveOutcome> {
    if dt <= 0.0 {
        return Err(Error::domain("dt must be positive"));
    }
    if !q0.grid().periodic {
        return Err(Error::domain("the split-step scheme needs a periodic grid"));
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(EvolutionState::initial(q0));
    for j in 0..steps {
        let current = states.last().unwrap();
        let a = linear_half_step(current, dt)?;
        let b = nonlinear_step(&a, dt, sign)?;
        let c = linear_half_step(&b, dt)?;
        if !is_finite(&c.q) {
            return Ok(EvolveOutcome {
                states,
                failed_at_step: Some(j),
            });
        }
        let l2 = conserved_l2(&c.q);
        states.push(EvolutionState {
            t: (j + 1) as f64 * dt,
            q: c.q,
            l2_norm: l2,
            step_count: j + 1,
        });
    }
    Ok(EvolveOutcome {
        states,
        failed_at_step: None,
    })
}

/// Spectrum drift at one snapshot of the isospectrality experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotDrift {
    pub t: f64,
    pub l2_norm: f64,
    pub drift: f64,
    pub filtered_count: usize,
    pub empty: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsospectralityReport {
    pub snapshots: Vec<SnapshotDrift>,
    pub max_drift: f64,
    pub any_empty: bool,
}

/// Evolve Q, assemble M(Q(t)) at every snapshot, and measure the matching
/// distance of the filtered spectrum (Im z > region_min_im) against t = 0.
#[allow(clippy::too_many_arguments)]
pub fn isospectrality_experiment(
    q0: MatrixPotential,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
    backend: DerivativeBackend,
    sign: FlowSign,
    region_min_im: f64,
    top_k: usize,
) -> Result<IsospectralityReport> {
    if snapshot_every == 0 {
        return Err(Error::domain("snapshot_every must be positive"));
    }
    let spectrum_of = |q: &MatrixPotential| -> Result<SpectrumSample> {
        let op = assemble_dense(q, OperatorExpr::M, backend, false)?;
        dense_spectrum(&op)
    };
    let reference = spectrum_of(&q0)?;
    let outcome = evolve(q0, dt, steps, sign)?;
    if let Some(step) = outcome.failed_at_step {
        return Err(Error::computation(format!(
            "evolution produced non-finite values at step {step}"
        )));
    }
    let mut snapshots = Vec::new();
    let mut max_drift: f64 = 0.0;
    let mut any_empty = false;
    for state in outcome.states.iter().step_by(snapshot_every) {
        let sample = if state.step_count == 0 {
            reference.clone()
        } else {
            spectrum_of(&state.q)?
        };
        let report =
            spectrum_matching_distance(&reference, &sample, top_k, |z| z.im > region_min_im);
        max_drift = max_drift.max(report.distance);
        any_empty |= report.empty;
        snapshots.push(SnapshotDrift {
            t: state.t,
            l2_norm: state.l2_norm,
            drift: report.distance,
            filtered_count: report.matched_pairs,
            empty: report.empty,
        });
    }
    Ok(IsospectralityReport {
        snapshots,
        max_drift,
        any_empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::PotentialSpec;
    use crate::solutions;

    fn plane_wave_potential(a: f64, mode: i64, grid: &Grid) -> MatrixPotential {
        let samples = grid
            .points()
            .map(|x| {
                Array2::from_elem(
                    (1, 1),
                    solutions::plane_wave_value(a, mode, grid.length(), x, 0.0),
                )
            })
            .collect();
        MatrixPotential::from_samples(*grid, 1, samples).unwrap()
    }

    #[test]
    fn linear_step_is_identity_on_constants() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 32, true).unwrap();
        let q = MatrixPotential::sample(
            &PotentialSpec::Constant {
                matrix: vec![vec![[0.7, -0.2]]],
                allow_asymmetric: false,
            },
            &g,
            1,
        )
        .unwrap();
        let state = EvolutionState::initial(q);
        let next = linear_half_step(&state, 0.02).unwrap();
        for (a, b) in state.q.samples().iter().zip(next.q.samples()) {
            assert!((a[[0, 0]] - b[[0, 0]]).norm() < 1e-14);
        }
    }

    #[test]
    fn linear_step_rotates_single_mode() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 64, true).unwrap();
        let mode = 3i64;
        let q = plane_wave_potential(0.5, mode, &g);
        let state = EvolutionState::initial(q);
        let dt = 0.01;
        let next = linear_half_step(&state, dt).unwrap();
        let kappa = mode as f64;
        let phase = C64::from_polar(1.0, -kappa * kappa * dt / 4.0);
        for (a, b) in state.q.samples().iter().zip(next.q.samples()) {
            assert!((a[[0, 0]] * phase - b[[0, 0]]).norm() < 1e-13);
            assert!((a[[0, 0]].norm() - b[[0, 0]].norm()).abs() < 1e-14);
        }
        // exactly norm-preserving
        assert!(
            (conserved_l2(&next.q) - conserved_l2(&state.q)).abs()
                <= 1e-14 * conserved_l2(&state.q)
        );
    }

    #[test]
    fn nonlinear_step_scalar_phase() {
        let g = Grid::new(-5.0, 5.0, 16, true).unwrap();
        let q = MatrixPotential::sample(
            &PotentialSpec::Sech {
                amplitudes: vec![1.2],
            },
            &g,
            1,
        )
        .unwrap();
        let state = EvolutionState::initial(q);
        let dt = 0.05;
        let next = nonlinear_step(&state, dt, FlowSign::Focusing).unwrap();
        for (a, b) in state.q.samples().iter().zip(next.q.samples()) {
            let qv = a[[0, 0]];
            let expect = qv * C64::from_polar(1.0, dt * qv.norm_sqr());
            assert!((b[[0, 0]] - expect).norm() < 1e-15);
            assert!((b[[0, 0]].norm() - qv.norm()).abs() < 1e-15);
        }
        // zero potential is a fixed point
        let z = MatrixPotential::sample(&PotentialSpec::Zero, &g, 1).unwrap();
        let zs = nonlinear_step(&EvolutionState::initial(z), dt, FlowSign::Focusing).unwrap();
        assert_eq!(zs.q.max_abs(), 0.0);
    }

    #[test]
    fn nonlinear_step_diagonal_m2_matches_scalar_phases() {
        let g = Grid::new(-5.0, 5.0, 8, true).unwrap();
        let q = MatrixPotential::sample(
            &PotentialSpec::Sech {
                amplitudes: vec![1.0, 0.6],
            },
            &g,
            2,
        )
        .unwrap();
        let state = EvolutionState::initial(q);
        let dt = 0.04;
        let next = nonlinear_step(&state, dt, FlowSign::Focusing).unwrap();
        for (a, b) in state.q.samples().iter().zip(next.q.samples()) {
            for j in 0..2 {
                let qv = a[[j, j]];
                let expect = qv * C64::from_polar(1.0, dt * qv.norm_sqr());
                assert!((b[[j, j]] - expect).norm() < 1e-13);
            }
            assert!(b[[0, 1]].norm() < 1e-15);
        }
    }

    #[test]
    fn nonlinear_step_matches_fine_rk4_on_full_matrices() {
        // high-resolution explicit integration of Q' = i Q Q* Q at one point
        let g = Grid::new(-1.0, 1.0, 4, true).unwrap();
        let q0 = Array2::from_shape_fn((2, 2), |(i, j)| {
            C64::new(0.4 + 0.3 * (i + j) as f64, 0.2 - 0.1 * (i as f64 - j as f64))
        });
        // symmetrize
        let q0 = (&q0 + &q0.t()) / C64::new(2.0, 0.0);
        let samples = vec![q0.clone(); 4];
        let q = MatrixPotential::from_samples(g, 2, samples).unwrap();
        let dt = 0.3;
        let stepped = nonlinear_step(&EvolutionState::initial(q), dt, FlowSign::Focusing).unwrap();

        let rhs = |q: &Array2<C64>| -> Array2<C64> {
            let h = q.dot(&q.t().mapv(|z| z.conj()));
            h.dot(q).mapv(|z| z * C64::new(0.0, 1.0))
        };
        let mut y = q0;
        let nsub = 3000;
        let tau = dt / nsub as f64;
        for _ in 0..nsub {
            let k1 = rhs(&y);
            let k2 = rhs(&(&y + &(&k1 * (tau / 2.0))));
            let k3 = rhs(&(&y + &(&k2 * (tau / 2.0))));
            let k4 = rhs(&(&y + &(&k3 * tau)));
            y = &y + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (tau / 6.0));
        }
        let got = stepped.q.sample_at(0);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (got[[i, j]] - y[[i, j]]).norm() < 1e-10,
                    "entry ({i},{j}): {:?} vs {:?}",
                    got[[i, j]],
                    y[[i, j]]
                );
            }
        }
    }

    #[test]
    fn plane_wave_evolution_is_exact_to_roundoff() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 256, true).unwrap();
        let a = 1.0;
        let mode = 1i64;
        let q0 = plane_wave_potential(a, mode, &g);
        let dt = 1e-3;
        let steps = 1000;
        let outcome = evolve(q0, dt, steps, FlowSign::Focusing).unwrap();
        assert!(outcome.failed_at_step.is_none());
        let last = outcome.states.last().unwrap();
        let mut worst: f64 = 0.0;
        for (k, x) in g.points().enumerate() {
            let expect = solutions::plane_wave_value(a, mode, g.length(), x, last.t);
            worst = worst.max((last.q.sample_at(k)[[0, 0]] - expect).norm());
        }
        assert!(worst <= 1e-6, "worst = {worst:e}");
    }

    #[test]
    fn soliton_evolution_matches_closed_form() {
        let g = Grid::new(-20.0, 20.0, 1024, true).unwrap();
        let q0 = solutions::soliton_potential(1.0, &g);
        let dt = 1e-3;
        let outcome = evolve(q0, dt, 1000, FlowSign::Focusing).unwrap();
        let last = outcome.states.last().unwrap();
        let mut worst: f64 = 0.0;
        for (k, x) in g.points().enumerate() {
            let expect = solutions::soliton_value(1.0, x, last.t);
            worst = worst.max((last.q.sample_at(k)[[0, 0]] - expect).norm());
        }
        assert!(worst <= 1e-5, "worst = {worst:e}");
    }

    #[test]
    fn order_two_in_dt_on_the_soliton() {
        let g = Grid::new(-20.0, 20.0, 512, true).unwrap();
        let t_final = 0.5;
        let err_at = |dt: f64| -> f64 {
            let steps = (t_final / dt).round() as usize;
            let q0 = solutions::soliton_potential(1.0, &g);
            let outcome = evolve(q0, dt, steps, FlowSign::Focusing).unwrap();
            let last = outcome.states.last().unwrap();
            let mut worst: f64 = 0.0;
            for (k, x) in g.points().enumerate() {
                let expect = solutions::soliton_value(1.0, x, last.t);
                worst = worst.max((last.q.sample_at(k)[[0, 0]] - expect).norm());
            }
            worst
        };
        let e1 = err_at(4e-3);
        let e2 = err_at(2e-3);
        let ratio = e1 / e2;
        assert!(
            ratio > 3.5 && ratio < 4.5,
            "e1 = {e1:e}, e2 = {e2:e}, ratio = {ratio}"
        );
    }

    #[test]
    fn l2_norm_examples_and_conservation() {
        let g = Grid::new(0.0, 4.0, 64, true).unwrap();
        let z = MatrixPotential::sample(&PotentialSpec::Zero, &g, 1).unwrap();
        assert_eq!(conserved_l2(&z), 0.0);
        let one = MatrixPotential::sample(
            &PotentialSpec::Constant {
                matrix: vec![vec![[1.0, 0.0]]],
                allow_asymmetric: false,
            },
            &g,
            1,
        )
        .unwrap();
        assert!((conserved_l2(&one) - 4.0).abs() < 1e-12);

        let g = Grid::new(-20.0, 20.0, 256, true).unwrap();
        let q0 = solutions::soliton_potential(1.0, &g);
        let before = conserved_l2(&q0);
        let outcome = evolve(q0, 1e-3, 1000, FlowSign::Focusing).unwrap();
        let worst_drift = outcome
            .states
            .iter()
            .map(|s| (s.l2_norm - before).abs() / before)
            .fold(0.0, f64::max);
        assert!(worst_drift <= 1e-12, "drift = {worst_drift:e}");
    }

    #[test]
    fn symmetry_is_preserved_on_random_symmetric_data() {
        let g = Grid::new(-10.0, 10.0, 64, true).unwrap();
        let q0 = MatrixPotential::sample(
            &PotentialSpec::RandomBandlimited {
                k_max: 2,
                period: 20.0,
                seed: 77,
            },
            &g,
            2,
        )
        .unwrap();
        let scale = q0.max_abs();
        let outcome = evolve(q0, 1e-2, 200, FlowSign::Focusing).unwrap();
        assert!(outcome.failed_at_step.is_none());
        for s in &outcome.states {
            assert!(
                s.q.max_asymmetry() <= 1e-12 * scale,
                "asymmetry {:e} at t = {}",
                s.q.max_asymmetry(),
                s.t
            );
        }
    }

    #[test]
    fn isospectrality_of_zero_potential_reports_emptiness() {
        // free operator has a real spectrum, so the Im > 0.1 filter leaves
        // nothing: drift 0 with the emptiness flag raised
        let g = Grid::new(-10.0, 10.0, 64, true).unwrap();
        let q0 = MatrixPotential::sample(&PotentialSpec::Zero, &g, 1).unwrap();
        let rep = isospectrality_experiment(
            q0,
            1e-3,
            20,
            10,
            DerivativeBackend::Spectral,
            FlowSign::Focusing,
            0.1,
            8,
        )
        .unwrap();
        assert_eq!(rep.max_drift, 0.0);
        assert!(rep.any_empty);
    }

    #[test]
    fn non_finite_values_halt_the_evolution() {
        let g = Grid::new(0.0, 2.0 * std::f64::consts::PI, 32, true).unwrap();
        let q0 = plane_wave_potential(1.0, 1, &g);
        let outcome = evolve(q0, f64::INFINITY, 3, FlowSign::Focusing).unwrap();
        assert_eq!(outcome.failed_at_step, Some(0));
        assert_eq!(outcome.states.len(), 1);
    }
}
