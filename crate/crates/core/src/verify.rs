//! Independent correctness oracles.
//!
//! Three routes that bypass the symmetric-model code paths they check:
//! a numerical Lie-closure rank test for controllability, a brute-force
//! tensor-product simulation of N three-level atoms under a hard blockade
//! projector, and the analytic one-axis-twisting evolution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::hamiltonian::SystemParams;
use crate::hilbert::{basis_dim, binomial, BasisLabel, DickeVector, Manifold};
use crate::propagation::{hermitian_eigen, ControlWaveform};

/// Result of the Lie-closure controllability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieClosureReport {
    /// Dimension of the real Lie algebra generated by the inputs.
    pub dimension_found: usize,
    /// d²−1, the dimension of su(d).
    pub dimension_full: usize,
    /// Number of commutator generations that contributed new directions.
    pub depth_reached: usize,
    /// True iff the generators span all of su(d).
    pub is_controllable: bool,
}

const HERMITICITY_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-9;

fn real_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Project `m` against the orthonormal `basis` (twice, for numerical
/// stability) and return the residual.
fn orthogonal_residual(mut m: DMatrix<C64>, basis: &[DMatrix<C64>]) -> DMatrix<C64> {
    for _ in 0..2 {
        for b in basis {
            let coeff = real_inner(b, &m);
            m -= b.map(|x| x * coeff);
        }
    }
    m
}

/// Dimension of the real Lie algebra generated by a set of Hermitian control
/// Hamiltonians, computed by repeated commutator generations in the space of
/// traceless anti-Hermitian matrices (Hilbert-Schmidt orthonormalization,
/// rank tolerance 1e−9 relative to each candidate's norm). The system is
/// controllable on SU(d) iff the closure reaches dimension d²−1.
pub fn lie_closure_dimension(generators: &[DMatrix<C64>]) -> Result<LieClosureReport> {
    if generators.is_empty() {
        return Err(invalid("need at least one generator"));
    }
    let dim = generators[0].nrows();
    if dim < 2 {
        return Err(invalid("generators must act on dimension >= 2"));
    }
    for (k, g) in generators.iter().enumerate() {
        if g.nrows() != dim || g.ncols() != dim {
            return Err(mismatch(format!(
                "generator {k} is {}x{}, expected {dim}x{dim}",
                g.nrows(),
                g.ncols()
            )));
        }
        let asym = (g - g.adjoint()).map(|x| x.norm()).max();
        if asym > HERMITICITY_TOL {
            return Err(invalid(format!(
                "generator {k} is not Hermitian: max asymmetry {asym:e}"
            )));
        }
    }

    let dimension_full = dim * dim - 1;
    let identity_share = 1.0 / dim as f64;
    let mut basis: Vec<DMatrix<C64>> = Vec::new();

    // seed with traceless parts of i·generators
    for g in generators {
        let trace = g.diagonal().sum();
        let traceless = g - DMatrix::<C64>::identity(dim, dim).map(|x| x * (trace * identity_share));
        let candidate = traceless.map(|x| x * C64::new(0.0, 1.0));
        let scale = candidate.map(|x| x.norm_sqr()).sum().sqrt();
        if scale < 1e-14 {
            continue;
        }
        let residual = orthogonal_residual(candidate, &basis);
        let norm = residual.map(|x| x.norm_sqr()).sum().sqrt();
        if norm > RANK_TOL * scale {
            basis.push(residual.map(|x| x / norm));
        }
    }

    let mut depth_reached = 0usize;
    let mut previous_start = 0usize;
    while basis.len() < dimension_full {
        let generation_start = basis.len();
        let mut added = false;
        // commutators where at least one operand joined in the last generation
        for i in 0..generation_start {
            let j_lo = previous_start.max(i + 1);
            for j in j_lo..generation_start {
                let commutator = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let scale = commutator.map(|x| x.norm_sqr()).sum().sqrt();
                if scale < 1e-14 {
                    continue;
                }
                let residual = orthogonal_residual(commutator, &basis);
                let norm = residual.map(|x| x.norm_sqr()).sum().sqrt();
                if norm > RANK_TOL * scale {
                    basis.push(residual.map(|x| x / norm));
                    added = true;
                    if basis.len() == dimension_full {
                        break;
                    }
                }
            }
            if basis.len() == dimension_full {
                break;
            }
        }
        if !added {
            break;
        }
        depth_reached += 1;
        previous_start = generation_start;
    }

    let dimension_found = basis.len();
    Ok(LieClosureReport {
        dimension_found,
        dimension_full,
        depth_reached,
        is_controllable: dimension_found == dimension_full,
    })
}

// ---------------------------------------------------------------------------
// brute-force tensor-product blockade simulation
// ---------------------------------------------------------------------------

/// Largest atom count simulated in the full 3^N space.
pub const MAX_FULL_SPACE_ATOMS: usize = 4;

const SYMMETRY_TOL: f64 = 1e-10;

fn full_dim(n_atoms: usize) -> usize {
    3usize.pow(n_atoms as u32)
}

fn digit(index: usize, atom: usize) -> usize {
    (index / 3usize.pow(atom as u32)) % 3
}

fn rydberg_count(index: usize, n_atoms: usize) -> usize {
    (0..n_atoms).filter(|&a| digit(index, a) == 2).count()
}

fn check_atom_count(n_atoms: usize) -> Result<()> {
    if n_atoms < 1 || n_atoms > MAX_FULL_SPACE_ATOMS {
        return Err(invalid(format!(
            "full-space oracle supports 1..={MAX_FULL_SPACE_ATOMS} atoms, got {n_atoms}"
        )));
    }
    Ok(())
}

/// Isometry from the 2N+1 symmetric basis into the 3^N product space.
/// Column order matches [`crate::hilbert::basis_index`]; single-atom states
/// are |0⟩, |1⟩, |r⟩ with atom k occupying the 3^k digit.
pub fn symmetric_isometry(n_atoms: usize) -> Result<DMatrix<C64>> {
    check_atom_count(n_atoms)?;
    let rows = full_dim(n_atoms);
    let mut s = DMatrix::<C64>::zeros(rows, basis_dim(n_atoms));

    for index in 0..rows {
        let mut ones = 0usize;
        let mut rydbergs = 0usize;
        for atom in 0..n_atoms {
            match digit(index, atom) {
                1 => ones += 1,
                2 => rydbergs += 1,
                _ => {}
            }
        }
        match rydbergs {
            0 => {
                let col = ones; // |g,n⟩ block
                let weight = 1.0 / binomial(n_atoms, ones).sqrt();
                s[(index, col)] = C64::new(weight, 0.0);
            }
            1 => {
                let col = n_atoms + 1 + ones; // |e,n⟩ block
                let weight =
                    1.0 / (n_atoms as f64 * binomial(n_atoms - 1, ones)).sqrt();
                s[(index, col)] = C64::new(weight, 0.0);
            }
            _ => {} // outside the blockaded sector
        }
    }
    Ok(s)
}

/// Embed a symmetric state into the 3^N product space.
pub fn embed_symmetric(state: &DickeVector) -> Result<DVector<C64>> {
    let s = symmetric_isometry(state.n_atoms())?;
    Ok(s * state.amplitudes())
}

/// Full-space Hamiltonian for one phase step: a sum of identical single-atom
/// Hamiltonians (microwave on |0⟩↔|1⟩ with phase φ, laser on |1⟩↔|r⟩,
/// detunings per the rotating-frame convention), then projected onto the
/// ≤1-Rydberg subspace to impose a perfect blockade.
pub fn blockaded_hamiltonian(params: &SystemParams, phase: f64) -> Result<DMatrix<C64>> {
    check_atom_count(params.n_atoms)?;
    params.validate()?;
    let n_atoms = params.n_atoms;
    let dim = full_dim(n_atoms);
    let mut h = DMatrix::<C64>::zeros(dim, dim);

    // J_k = Σ_i σ_k/2 and the control carries Ω_μw/2, so each atom sees
    // (Ω_μw/4)(cos φ σ_x + sin φ σ_y) with ⟨1|·|0⟩ = (Ω_μw/4) e^{−iφ}
    let uw = params.omega_uw / 4.0;
    let uw_raise = C64::new(uw * phase.cos(), -uw * phase.sin());
    let laser = C64::new(params.omega_r / 2.0, 0.0);

    for index in 0..dim {
        let mut diag = 0.0;
        for atom in 0..n_atoms {
            let scale = 3usize.pow(atom as u32);
            match digit(index, atom) {
                0 => {
                    // |0⟩ → |1⟩ costs one microwave excitation
                    let to = index + scale;
                    h[(to, index)] += uw_raise;
                    h[(index, to)] += uw_raise.conj();
                }
                1 => {
                    diag += -params.delta_uw;
                    // |1⟩ → |r⟩ under the laser
                    let to = index + scale;
                    h[(to, index)] += laser;
                    h[(index, to)] += laser;
                }
                2 => diag += -params.delta_uw - params.delta_r,
                _ => unreachable!(),
            }
        }
        h[(index, index)] += C64::new(diag, 0.0);
    }

    // hard blockade: remove every coupling into or out of ≥2-Rydberg states
    for index in 0..dim {
        if rydberg_count(index, n_atoms) >= 2 {
            for k in 0..dim {
                h[(index, k)] = C64::new(0.0, 0.0);
                h[(k, index)] = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(h)
}

fn check_symmetric(psi: &DVector<C64>, isometry: &DMatrix<C64>, what: &str) -> Result<()> {
    let projected = isometry * (isometry.adjoint() * psi);
    let residual = (psi - projected).norm();
    if residual > SYMMETRY_TOL {
        return Err(invalid(format!(
            "{what} is not in the symmetric blockaded subspace: residual {residual:e}"
        )));
    }
    Ok(())
}

/// Evolve a full-space state through the waveform, returning the state after
/// every step (index 0 is the initial state).
pub fn full_space_trajectory(
    waveform: &ControlWaveform,
    params: &SystemParams,
    initial_full: &DVector<C64>,
) -> Result<Vec<DVector<C64>>> {
    check_atom_count(params.n_atoms)?;
    let dim = full_dim(params.n_atoms);
    if initial_full.len() != dim {
        return Err(mismatch(format!(
            "initial state has length {}, expected {dim}",
            initial_full.len()
        )));
    }
    let isometry = symmetric_isometry(params.n_atoms)?;
    check_symmetric(initial_full, &isometry, "initial state")?;

    let mut states = vec![initial_full.clone()];
    for &phase in &waveform.phases {
        let h = blockaded_hamiltonian(params, phase)?;
        let (energies, vectors) = hermitian_eigen(&h)?;
        let mut coeffs = vectors.adjoint() * states.last().unwrap();
        for (c, &e) in coeffs.iter_mut().zip(energies.iter()) {
            *c *= C64::from_polar(1.0, -e * waveform.dt);
        }
        states.push(&vectors * coeffs);
    }
    Ok(states)
}

/// Brute-force oracle: evolve N three-level atoms in the full 3^N space under
/// the blockaded sum of single-atom Hamiltonians, then project the result
/// back onto the symmetric Dicke basis. The projection residual must stay
/// below 1e−10; agreement with [`crate::propagation::evolve`] validates the
/// Jaynes-Cummings mapping of the symmetric model.
pub fn full_space_evolve(
    waveform: &ControlWaveform,
    params: &SystemParams,
    initial_full: &DVector<C64>,
) -> Result<DickeVector> {
    let states = full_space_trajectory(waveform, params, initial_full)?;
    let final_full = states.last().unwrap();
    let isometry = symmetric_isometry(params.n_atoms)?;
    let reduced = isometry.adjoint() * final_full;
    let residual = (final_full - &isometry * &reduced).norm();
    if residual > SYMMETRY_TOL {
        return Err(Error::Internal(format!(
            "evolution left the symmetric subspace: residual {residual:e}"
        )));
    }
    DickeVector::new(reduced, params.n_atoms)
}

// ---------------------------------------------------------------------------
// one-axis twisting
// ---------------------------------------------------------------------------

/// Analytic one-axis-twisting evolution exp(−i(κT/2)J_z²) on the ground
/// manifold (diagonal phases on J_z eigenvalues n − N/2). Linear J_z terms
/// are dropped, so comparisons against dynamical evolution should be made
/// modulo a ground-manifold z-rotation; see [`max_fidelity_over_z_rotation`].
pub fn oat_evolve(
    n_atoms: usize,
    kappa: f64,
    total_time: f64,
    psi0: &DickeVector,
) -> Result<DickeVector> {
    if psi0.n_atoms() != n_atoms {
        return Err(mismatch(format!(
            "state has N = {}, expected {n_atoms}",
            psi0.n_atoms()
        )));
    }
    if psi0.excited_population() > 1e-12 {
        return Err(invalid(format!(
            "one-axis twisting needs a ground-manifold state; excited population {:e}",
            psi0.excited_population()
        )));
    }
    let half_n = n_atoms as f64 / 2.0;
    let mut out = DickeVector::zero(n_atoms);
    for n in 0..=n_atoms {
        let label = BasisLabel::ground(n);
        let m = n as f64 - half_n;
        let phase = -(kappa * total_time / 2.0) * m * m;
        let amp = psi0.amplitude(label)? * C64::from_polar(1.0, phase);
        out.set_amplitude(label, amp)?;
    }
    Ok(out)
}

/// max over θ of |⟨a| e^{−iθJ_z} |b⟩|².
///
/// The overlap is a trigonometric polynomial in θ with half-integer
/// frequencies (period 4π); a dense scan plus parabolic refinement finds the
/// maximum to well below 1e−6.
pub fn max_fidelity_over_z_rotation(a: &DickeVector, b: &DickeVector) -> Result<f64> {
    if a.n_atoms() != b.n_atoms() {
        return Err(mismatch(format!(
            "atom counts differ: {} vs {}",
            a.n_atoms(),
            b.n_atoms()
        )));
    }
    let n_atoms = a.n_atoms();
    let half_n = n_atoms as f64 / 2.0;
    let half_e = (n_atoms as f64 - 1.0) / 2.0;

    // collect (m, conj(a_i)·b_i) pairs; overlap(θ) = Σ w e^{−iθm}
    let mut terms: Vec<(f64, C64)> = Vec::with_capacity(a.dim());
    for (i, (x, y)) in a
        .amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .enumerate()
    {
        let label = crate::hilbert::basis_label(i, n_atoms)?;
        let m = match label.manifold {
            Manifold::Ground => label.n as f64 - half_n,
            Manifold::Excited => label.n as f64 - half_e,
        };
        terms.push((m, x.conj() * y));
    }
    let overlap_sq = |theta: f64| -> f64 {
        terms
            .iter()
            .map(|&(m, w)| w * C64::from_polar(1.0, -theta * m))
            .sum::<C64>()
            .norm_sqr()
    };

    let samples = 8192;
    let period = 4.0 * std::f64::consts::PI;
    let mut best_theta = 0.0;
    let mut best = f64::MIN;
    for k in 0..samples {
        let theta = period * k as f64 / samples as f64;
        let f = overlap_sq(theta);
        if f > best {
            best = f;
            best_theta = theta;
        }
    }
    // parabolic refinement around the best sample
    let mut lo = best_theta - period / samples as f64;
    let mut hi = best_theta + period / samples as f64;
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if overlap_sq(m1) < overlap_sq(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    Ok(best.max(overlap_sq(0.5 * (lo + hi))))
}
