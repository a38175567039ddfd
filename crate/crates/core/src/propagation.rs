//! Piecewise-constant unitary evolution and exact analytic gradients of the
//! state-transfer fidelity with respect to the phase controls.
//!
//! Propagators come from Hermitian eigendecomposition — at these dimensions
//! (≤ ~25) that is cheaper and more accurate than iterative exponentials, and
//! the eigenbasis is reused for the exact derivative of each step propagator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::hamiltonian::{build_control, build_drift, control_phase_derivative, SystemParams};
use crate::hilbert::DickeVector;

/// Piecewise-constant control waveform: `phases[k]` holds for the k-th step
/// of duration `dt`, for a total run time of `phases.len() * dt`. An empty
/// phase list is the "no pulse" waveform reported when a target is already
/// reached by the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlWaveform {
    pub phases: Vec<f64>,
    pub dt: f64,
}

impl ControlWaveform {
    pub fn new(phases: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("step duration must be > 0, got {dt}")));
        }
        Ok(Self { phases, dt })
    }

    pub fn steps(&self) -> usize {
        self.phases.len()
    }

    pub fn total_time(&self) -> f64 {
        self.phases.len() as f64 * self.dt
    }
}

const HERMITICITY_TOL: f64 = 1e-9;

/// Eigendecomposition of a Hermitian matrix, validating Hermiticity first.
/// Returns real eigenvalues and the unitary of eigenvectors (as columns),
/// both in the solver's order.
pub(crate) fn hermitian_eigen(h: &DMatrix<C64>) -> Result<(DVector<f64>, DMatrix<C64>)> {
    if h.nrows() != h.ncols() {
        return Err(invalid(format!("matrix is {}x{}, not square", h.nrows(), h.ncols())));
    }
    let asym = (h - h.adjoint()).map(|x| x.norm()).max();
    if asym > HERMITICITY_TOL {
        return Err(invalid(format!(
            "matrix is not Hermitian: max asymmetry {asym:e}"
        )));
    }
    // symmetrize to suppress roundoff asymmetry before factorizing
    let sym = (h + h.adjoint()).map(|x| x * 0.5);
    let eig = SymmetricEigen::new(sym);
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// exp(−i·H·dt) for Hermitian H.
pub fn step_propagator(h: &DMatrix<C64>, dt: f64) -> Result<DMatrix<C64>> {
    let (energies, vectors) = hermitian_eigen(h)?;
    let phases = DVector::from_iterator(
        energies.len(),
        energies.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
    );
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let p = phases[j];
        for x in col.iter_mut() {
            *x *= p;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// One decomposed control step: the Hamiltonian eigensystem at a given phase.
struct StepEigen {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl StepEigen {
    fn build(drift: &DMatrix<C64>, params: &SystemParams, phase: f64) -> Result<Self> {
        let h = drift + build_control(params, phase)?;
        let (energies, vectors) = hermitian_eigen(&h)?;
        Ok(Self { energies, vectors })
    }

    /// Apply exp(−i H dt) to a state.
    fn propagate(&self, psi: &DVector<C64>, dt: f64) -> DVector<C64> {
        let mut coeffs = self.vectors.adjoint() * psi;
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * dt);
        }
        &self.vectors * coeffs
    }

    /// Apply exp(+i H dt) (the adjoint propagator) to a state.
    fn propagate_adjoint(&self, psi: &DVector<C64>, dt: f64) -> DVector<C64> {
        let mut coeffs = self.vectors.adjoint() * psi;
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, e * dt);
        }
        &self.vectors * coeffs
    }
}

/// sin(x)/x with the small-argument series.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Evolve `psi0` under the drift plus the phase-stepped microwave control.
pub fn evolve(
    waveform: &ControlWaveform,
    params: &SystemParams,
    psi0: &DickeVector,
) -> Result<DickeVector> {
    let trajectory = evolve_trajectory(waveform, params, psi0)?;
    Ok(trajectory.into_iter().last().unwrap())
}

/// Evolve and record the state at every step boundary (s+1 states, the first
/// being `psi0` itself).
pub fn evolve_trajectory(
    waveform: &ControlWaveform,
    params: &SystemParams,
    psi0: &DickeVector,
) -> Result<Vec<DickeVector>> {
    if psi0.n_atoms() != params.n_atoms {
        return Err(mismatch(format!(
            "state has N = {}, params have N = {}",
            psi0.n_atoms(),
            params.n_atoms
        )));
    }
    let drift = build_drift(params)?;
    let mut states = Vec::with_capacity(waveform.steps() + 1);
    let mut psi = psi0.amplitudes().clone();
    states.push(psi0.clone());
    for &phase in &waveform.phases {
        let step = StepEigen::build(&drift, params, phase)?;
        psi = step.propagate(&psi, waveform.dt);
        states.push(DickeVector::new(psi.clone(), params.n_atoms)?);
    }
    Ok(states)
}

/// Transfer fidelity F = |⟨target|U(φ⃗)|ψ₀⟩|² and its exact gradient
/// ∂F/∂φ_k.
///
/// Each step propagator's derivative is evaluated in the step Hamiltonian's
/// eigenbasis: with A = V†(∂H/∂φ)V the derivative is V(A∘G)V†, where
/// G_ij = −i·dt·e^{−i(λ_i+λ_j)dt/2}·sinc((λ_i−λ_j)dt/2) — exact for any step
/// duration, degenerate eigenvalues included. Gradients are assembled from
/// forward-propagated states and backward-propagated costates.
pub fn fidelity_and_gradient(
    waveform: &ControlWaveform,
    params: &SystemParams,
    psi0: &DickeVector,
    target: &DickeVector,
) -> Result<(f64, Vec<f64>)> {
    if psi0.n_atoms() != params.n_atoms || target.n_atoms() != params.n_atoms {
        return Err(mismatch(format!(
            "states have N = {}/{}, params have N = {}",
            psi0.n_atoms(),
            target.n_atoms(),
            params.n_atoms
        )));
    }
    let s = waveform.steps();
    let dt = waveform.dt;
    let drift = build_drift(params)?;

    let steps: Vec<StepEigen> = waveform
        .phases
        .iter()
        .map(|&phase| StepEigen::build(&drift, params, phase))
        .collect::<Result<Vec<_>>>()?;

    // forward[k] = U_{k}···U_1 |ψ₀⟩ (forward[0] = ψ₀)
    let mut forward = Vec::with_capacity(s + 1);
    forward.push(psi0.amplitudes().clone());
    for step in &steps {
        let next = step.propagate(forward.last().unwrap(), dt);
        forward.push(next);
    }

    // costate[k] = (U_s···U_{k+1})†|target⟩ (costate[s] = target)
    let mut costate = vec![DVector::<C64>::zeros(0); s + 1];
    costate[s] = target.amplitudes().clone();
    for k in (0..s).rev() {
        costate[k] = steps[k].propagate_adjoint(&costate[k + 1], dt);
    }

    let overlap = target.amplitudes().dotc(&forward[s]);
    let fid = overlap.norm_sqr();
    if !fid.is_finite() {
        return Err(Error::Internal(format!(
            "non-finite fidelity {fid} (overlap {overlap})"
        )));
    }

    let mut gradient = Vec::with_capacity(s);
    for (k, step) in steps.iter().enumerate() {
        let d_h = control_phase_derivative(params, waveform.phases[k])?;
        let a_mat = step.vectors.adjoint() * d_h * &step.vectors;
        let a = step.vectors.adjoint() * &forward[k];
        let b = step.vectors.adjoint() * &costate[k + 1];

        // dο/dφ_k = b†(A∘G)a
        let dim = a.len();
        let mut d_overlap = C64::new(0.0, 0.0);
        for i in 0..dim {
            let li = step.energies[i];
            for j in 0..dim {
                let lj = step.energies[j];
                let g = C64::from_polar(dt * sinc((li - lj) * dt / 2.0), -(li + lj) * dt / 2.0)
                    * C64::new(0.0, -1.0);
                d_overlap += b[i].conj() * a_mat[(i, j)] * g * a[j];
            }
        }
        gradient.push(2.0 * (overlap.conj() * d_overlap).re);
    }
    Ok((fid, gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_dim, dicke_state, fidelity, spin_coherent_state};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
        let raw = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&raw + raw.adjoint()).map(|x| x * 0.5)
    }

    fn random_waveform(steps: usize, dt: f64, rng: &mut impl Rng) -> ControlWaveform {
        let phases = (0..steps).map(|_| (rng.random::<f64>() - 0.5) * 2.0 * PI).collect();
        ControlWaveform::new(phases, dt).unwrap()
    }

    fn random_params(n_atoms: usize, rng: &mut impl Rng) -> SystemParams {
        SystemParams::from_mhz(
            n_atoms,
            0.5 + 5.0 * rng.random::<f64>(),
            (rng.random::<f64>() - 0.5) * 10.0,
            (rng.random::<f64>() - 0.5) * 10.0,
            (rng.random::<f64>() - 0.5) * 4.0,
        )
        .unwrap()
    }

    #[test]
    fn propagator_of_zero_is_identity() {
        let h = DMatrix::<C64>::zeros(5, 5);
        let u = step_propagator(&h, 0.7).unwrap();
        assert!((u - DMatrix::<C64>::identity(5, 5)).map(|x| x.norm()).max() < 1e-12);
    }

    #[test]
    fn propagator_of_diagonal_is_phases() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-2.5, 0.0),
            C64::new(0.3, 0.0),
        ]));
        let u = step_propagator(&h, 0.4).unwrap();
        for (k, &e) in [1.0f64, -2.5, 0.3].iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -e * 0.4)).norm() < 1e-12);
        }
    }

    #[test]
    fn propagator_unitary_for_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let dim = rng.random_range(2..10);
            let h = random_hermitian(dim, &mut rng);
            let u = step_propagator(&h, 1.3).unwrap();
            let dev = (u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim))
                .map(|x| x.norm())
                .max();
            assert!(dev < 1e-10, "unitarity deviation {dev:e}");
        }
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let mut h = DMatrix::<C64>::zeros(3, 3);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(step_propagator(&h, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn evolve_trivial_when_all_drives_off() {
        let p = SystemParams::new(3, 0.0, 2.0 * PI * 4.0, 0.0, 0.0).unwrap();
        let psi0 = spin_coherent_state(3, 1.0, 0.4).unwrap();
        let wf = ControlWaveform::new(vec![0.3, -1.2, 2.0], 0.05).unwrap();
        let out = evolve(&wf, &p, &psi0).unwrap();
        // ground amplitudes pick up no relative phase; state unchanged up to
        // a global phase (here exactly, since the ground block is untouched)
        assert_abs_diff_eq!(fidelity(&out, &psi0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_pi_pulse_single_atom() {
        // Ω_r = 0, Δ_μw = 0, φ ≡ 0: H = (Ω_μw/2)J_x rotates the ground qubit
        // by (Ω_μw/2)T, so a π-pulse |g,0⟩ → −i|g,1⟩ takes T = 2π/Ω_μw
        let omega_uw = 2.0 * PI * 1.0;
        let p = SystemParams::new(1, 0.0, 0.0, omega_uw, 0.0).unwrap();
        let wf = ControlWaveform::new(vec![0.0; 4], 2.0 * PI / omega_uw / 4.0).unwrap();
        let out = evolve(&wf, &p, &dicke_state(1, 0).unwrap()).unwrap();
        let expect = dicke_state(1, 1).unwrap();
        assert_abs_diff_eq!(fidelity(&out, &expect).unwrap(), 1.0, epsilon = 1e-10);
        let amp = out.amplitude(crate::hilbert::BasisLabel::ground(1)).unwrap();
        assert!((amp - C64::new(0.0, -1.0)).norm() < 1e-10, "got {amp}");
    }

    #[test]
    fn evolve_preserves_norm_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_params(3, &mut rng);
            let wf = random_waveform(6, 0.08, &mut rng);
            let psi0 = spin_coherent_state(3, 1.2, -0.3).unwrap();
            let full = evolve(&wf, &p, &psi0).unwrap();
            assert_abs_diff_eq!(full.norm(), 1.0, epsilon = 1e-10);

            // composition: first 4 steps then last 2
            let head = ControlWaveform::new(wf.phases[..4].to_vec(), wf.dt).unwrap();
            let tail = ControlWaveform::new(wf.phases[4..].to_vec(), wf.dt).unwrap();
            let mid = evolve(&head, &p, &psi0).unwrap();
            let comp = evolve(&tail, &p, &mid).unwrap();
            let dev = (comp.amplitudes() - full.amplitudes()).norm();
            assert!(dev < 1e-10, "composition deviation {dev:e}");
        }
    }

    #[test]
    fn phase_periodicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_params(2, &mut rng);
        let wf = random_waveform(5, 0.1, &mut rng);
        let shifted = ControlWaveform::new(
            wf.phases.iter().map(|x| x + 2.0 * PI).collect(),
            wf.dt,
        )
        .unwrap();
        let psi0 = dicke_state(2, 0).unwrap();
        let a = evolve(&wf, &p, &psi0).unwrap();
        let b = evolve(&shifted, &p, &psi0).unwrap();
        assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn trajectory_has_step_boundaries() {
        let p = SystemParams::from_mhz(2, 5.0, 2.5, 3.0, 1.0).unwrap();
        let wf = ControlWaveform::new(vec![0.1, 0.2, 0.3], 0.05).unwrap();
        let psi0 = dicke_state(2, 0).unwrap();
        let traj = evolve_trajectory(&wf, &p, &psi0).unwrap();
        assert_eq!(traj.len(), 4);
        assert_eq!(traj[0].amplitudes(), psi0.amplitudes());
        for state in &traj {
            assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_zero_without_microwave() {
        let p = SystemParams::from_mhz(3, 5.0, 2.5, 0.0, 1.0).unwrap();
        let wf = ControlWaveform::new(vec![0.4, -0.9], 0.2).unwrap();
        let psi0 = dicke_state(3, 0).unwrap();
        let target = spin_coherent_state(3, 0.7, 0.0).unwrap();
        let (_, grad) = fidelity_and_gradient(&wf, &p, &psi0, &target).unwrap();
        for g in grad {
            assert_abs_diff_eq!(g, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = 1e-6;
        for trial in 0..50 {
            let n_atoms = 4;
            let p = random_params(n_atoms, &mut rng);
            let steps = rng.random_range(2..6);
            let wf = random_waveform(steps, 0.02 + 0.08 * rng.random::<f64>(), &mut rng);
            let psi0 = dicke_state(n_atoms, 0).unwrap();
            let target = {
                let raw = DVector::from_fn(basis_dim(n_atoms), |_, _| {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                DickeVector::new(raw, n_atoms).unwrap().normalized().unwrap()
            };
            let (_, grad) = fidelity_and_gradient(&wf, &p, &psi0, &target).unwrap();
            for k in 0..steps {
                let mut plus = wf.clone();
                plus.phases[k] += h;
                let mut minus = wf.clone();
                minus.phases[k] -= h;
                let fp = fidelity(&evolve(&plus, &p, &psi0).unwrap(), &target).unwrap();
                let fm = fidelity(&evolve(&minus, &p, &psi0).unwrap(), &target).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (grad[k] - fd).abs() < 1e-6,
                    "trial {trial} step {k}: analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn sinc_small_argument() {
        assert_abs_diff_eq!(sinc(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(1e-5), 1.0 - 1e-10 / 6.0, epsilon = 1e-16);
        assert_abs_diff_eq!(sinc(0.5), 0.5f64.sin() / 0.5, epsilon = 1e-15);
    }
}
