//! Drift and control Hamiltonians in the doubly-rotating frame, the dressed
//! (Jaynes-Cummings ladder) eigenbasis, and derived physical quantities.
//!
//! Frame convention: every hyperfine excitation rotates at the microwave
//! frequency and the Rydberg excitation at the laser frequency, so `|g,n⟩`
//! carries diagonal energy −nΔ_μw and `|e,n⟩` carries −(n+1)Δ_μw − Δ_r. The
//! hyperfine splitting, absolute optical energies, and the −ω_μw(J_z+N/2)
//! term of the microwave Hamiltonian are all absorbed by this choice; only
//! detunings and Rabi frequencies remain in the numerics.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::hilbert::{
    basis_dim, basis_index, basis_labels, collective_spin, BasisLabel, DickeVector, Manifold,
    SpinAxis,
};
use crate::propagation::hermitian_eigen;

/// Physical parameters of one control problem. All frequencies are angular,
/// in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of atoms N.
    pub n_atoms: usize,
    /// Rydberg laser Rabi frequency Ω_r ≥ 0.
    pub omega_r: f64,
    /// Rydberg laser detuning Δ_r (any sign).
    pub delta_r: f64,
    /// Microwave Rabi frequency Ω_μw (any sign).
    pub omega_uw: f64,
    /// Microwave detuning Δ_μw (any sign).
    pub delta_uw: f64,
}

impl SystemParams {
    pub fn new(
        n_atoms: usize,
        omega_r: f64,
        delta_r: f64,
        omega_uw: f64,
        delta_uw: f64,
    ) -> Result<Self> {
        let p = Self { n_atoms, omega_r, delta_r, omega_uw, delta_uw };
        p.validate()?;
        Ok(p)
    }

    /// Build from ordinary (non-angular) frequencies in MHz, the convention
    /// used in configuration files.
    pub fn from_mhz(
        n_atoms: usize,
        omega_r_mhz: f64,
        delta_r_mhz: f64,
        omega_uw_mhz: f64,
        delta_uw_mhz: f64,
    ) -> Result<Self> {
        Self::new(
            n_atoms,
            TAU * omega_r_mhz,
            TAU * delta_r_mhz,
            TAU * omega_uw_mhz,
            TAU * delta_uw_mhz,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(invalid(format!("n_atoms must be >= 1, got {}", self.n_atoms)));
        }
        if !(self.omega_r >= 0.0) {
            return Err(invalid(format!(
                "omega_r must be finite and >= 0, got {}",
                self.omega_r
            )));
        }
        for (name, v) in [
            ("delta_r", self.delta_r),
            ("omega_uw", self.omega_uw),
            ("delta_uw", self.delta_uw),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        basis_dim(self.n_atoms)
    }
}

/// Drift Hamiltonian
/// H₀ = −Δ_μw·N_exc − Δ_r·P_e + Σ_{n=1..N} (√n Ω_r/2)(|g,n⟩⟨e,n−1| + h.c.),
/// where N_exc counts total excitations (n on |g,n⟩, n+1 on |e,n⟩) and P_e
/// projects onto the excited manifold.
pub fn build_drift(params: &SystemParams) -> Result<DMatrix<C64>> {
    params.validate()?;
    let n_atoms = params.n_atoms;
    let dim = basis_dim(n_atoms);
    let mut h = DMatrix::<C64>::zeros(dim, dim);

    for n in 0..=n_atoms {
        let i = basis_index(BasisLabel::ground(n), n_atoms)?;
        h[(i, i)] = C64::new(-params.delta_uw * n as f64, 0.0);
    }
    for n in 0..n_atoms {
        let i = basis_index(BasisLabel::excited(n), n_atoms)?;
        h[(i, i)] = C64::new(-params.delta_uw * (n + 1) as f64 - params.delta_r, 0.0);
    }
    // laser coupling |g,n⟩ ↔ |e,n−1⟩ with collectively enhanced √n Ω_r/2
    for n in 1..=n_atoms {
        let g = basis_index(BasisLabel::ground(n), n_atoms)?;
        let e = basis_index(BasisLabel::excited(n - 1), n_atoms)?;
        let coupling = C64::new((n as f64).sqrt() * params.omega_r / 2.0, 0.0);
        h[(g, e)] = coupling;
        h[(e, g)] = coupling;
    }
    Ok(h)
}

/// Microwave control Hamiltonian (Ω_μw/2)(cos φ J_x + sin φ J_y).
pub fn build_control(params: &SystemParams, phase: f64) -> Result<DMatrix<C64>> {
    params.validate()?;
    let jx = collective_spin(params.n_atoms, SpinAxis::X)?;
    let jy = collective_spin(params.n_atoms, SpinAxis::Y)?;
    let half = params.omega_uw / 2.0;
    Ok(jx.map(|x| x * (half * phase.cos())) + jy.map(|y| y * (half * phase.sin())))
}

/// ∂H_c/∂φ = (Ω_μw/2)(−sin φ J_x + cos φ J_y).
pub fn control_phase_derivative(params: &SystemParams, phase: f64) -> Result<DMatrix<C64>> {
    params.validate()?;
    let jx = collective_spin(params.n_atoms, SpinAxis::X)?;
    let jy = collective_spin(params.n_atoms, SpinAxis::Y)?;
    let half = params.omega_uw / 2.0;
    Ok(jx.map(|x| x * (-half * phase.sin())) + jy.map(|y| y * (half * phase.cos())))
}

/// Eigenbasis of the dressed drift Hamiltonian with manifold labels.
///
/// Columns of `transform` are dressed eigenvectors; `labels[j]` names the bare
/// state adiabatically connected to column j. Each column's global phase is
/// fixed so its largest-modulus component is real positive.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    transform: DMatrix<C64>,
    energies: DVector<f64>,
    labels: Vec<BasisLabel>,
    n_atoms: usize,
}

impl DressedBasis {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Unitary whose columns are the dressed eigenvectors.
    pub fn transform(&self) -> &DMatrix<C64> {
        &self.transform
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn labels(&self) -> &[BasisLabel] {
        &self.labels
    }

    /// Column index of the dressed state with the given bare label.
    pub fn index_of(&self, label: BasisLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| invalid(format!("no dressed state labeled {label:?}")))
    }

    /// Energy of the dressed state adiabatically connected to `label`.
    pub fn energy_of(&self, label: BasisLabel) -> Result<f64> {
        Ok(self.energies[self.index_of(label)?])
    }

    /// Dressed eigenvector for `label`, as a state in the bare basis.
    pub fn state(&self, label: BasisLabel) -> Result<DickeVector> {
        let j = self.index_of(label)?;
        DickeVector::new(self.transform.column(j).into_owned(), self.n_atoms)
    }

    /// Coefficients of `state` in the dressed basis (ordered by dressed
    /// column, i.e. by `labels`).
    pub fn to_dressed(&self, state: &DickeVector) -> Result<DVector<C64>> {
        if state.n_atoms() != self.n_atoms {
            return Err(mismatch(format!(
                "state has N = {}, dressed basis has N = {}",
                state.n_atoms(),
                self.n_atoms
            )));
        }
        Ok(self.transform.adjoint() * state.amplitudes())
    }

    /// Population of `state` in the dressed-excited manifold.
    pub fn excited_population(&self, state: &DickeVector) -> Result<f64> {
        let coeffs = self.to_dressed(state)?;
        Ok(self
            .labels
            .iter()
            .zip(coeffs.iter())
            .filter(|(l, _)| l.manifold == Manifold::Excited)
            .map(|(_, c)| c.norm_sqr())
            .sum())
    }
}

/// Diagonalize the drift Hamiltonian and label each dressed eigenvector by
/// maximum modulus overlap with the bare basis, ties broken by ascending
/// energy. Errors if the assignment is degenerate (max overlap below 1/√2
/// with two bare candidates within 1e−9 of each other).
pub fn dressed_basis(params: &SystemParams) -> Result<DressedBasis> {
    let h = build_drift(params)?;
    let (energies, vectors) = hermitian_eigen(&h)?;
    let dim = energies.len();

    // sort columns by ascending energy for a deterministic tie-break order
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));

    let bare = basis_labels(params.n_atoms);
    let mut assigned: Vec<Option<usize>> = vec![None; dim]; // bare index -> column
    let mut labels_by_col: Vec<Option<BasisLabel>> = vec![None; dim];

    for &col in &order {
        let column = vectors.column(col);
        let mut best: Option<(usize, f64)> = None;
        let mut second = 0.0_f64;
        for (bare_idx, amp) in column.iter().enumerate() {
            if assigned[bare_idx].is_some() {
                continue;
            }
            let overlap = amp.norm();
            match best {
                Some((_, b)) if overlap <= b => {
                    if overlap > second {
                        second = overlap;
                    }
                }
                Some((_, b)) => {
                    second = b;
                    best = Some((bare_idx, overlap));
                }
                None => best = Some((bare_idx, overlap)),
            }
        }
        let (bare_idx, overlap) = best.ok_or_else(|| {
            Error::Internal("no unassigned bare state left for a dressed column".into())
        })?;
        if overlap < std::f64::consts::FRAC_1_SQRT_2 && (overlap - second).abs() < 1e-9 {
            return Err(Error::LabelingAmbiguity(format!(
                "dressed column at energy {} overlaps two bare states equally ({overlap:.6})",
                energies[col]
            )));
        }
        assigned[bare_idx] = Some(col);
        labels_by_col[col] = Some(bare[bare_idx]);
    }

    // fix each column's global phase: largest-modulus component real positive
    let mut transform = vectors;
    for j in 0..dim {
        let col = transform.column(j);
        let (imax, amax) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, a)| (i, *a))
            .unwrap();
        if amax.norm() > 0.0 {
            let phase = amax / amax.norm();
            let correction = phase.conj();
            for x in transform.column_mut(j).iter_mut() {
                *x *= correction;
            }
            let _ = imax;
        }
    }

    let labels = labels_by_col
        .into_iter()
        .map(|l| l.ok_or_else(|| Error::Internal("unlabeled dressed column".into())))
        .collect::<Result<Vec<_>>>()?;

    Ok(DressedBasis {
        transform,
        energies,
        labels,
        n_atoms: params.n_atoms,
    })
}

/// Exact dressed-ladder nonlinearity κ = E_g̃(2) − 2E_g̃(1) + E_g̃(0),
/// evaluated at Δ_μw = 0. The endpoint term keeps the second difference
/// invariant under diagonal frame shifts.
pub fn kappa_exact(params: &SystemParams) -> Result<f64> {
    if params.n_atoms < 2 {
        return Err(invalid(format!(
            "kappa needs N >= 2 ground excitations, got N = {}",
            params.n_atoms
        )));
    }
    let mut p = *params;
    p.delta_uw = 0.0;
    let basis = dressed_basis(&p)?;
    let e0 = basis.energy_of(BasisLabel::ground(0))?;
    let e1 = basis.energy_of(BasisLabel::ground(1))?;
    let e2 = basis.energy_of(BasisLabel::ground(2))?;
    Ok(e2 - 2.0 * e1 + e0)
}

/// Weak-dressing approximation κ ≈ −Ω_r⁴/(8Δ_r³).
pub fn kappa_weak(params: &SystemParams) -> Result<f64> {
    if params.delta_r == 0.0 {
        return Err(Error::Singularity(
            "weak-dressing kappa diverges at delta_r = 0".into(),
        ));
    }
    Ok(-params.omega_r.powi(4) / (8.0 * params.delta_r.powi(3)))
}

/// Blockade radius r_B = (|C6/ħ|/Ω_r)^{1/6} in μm, with C6/h given in
/// GHz·μm⁶ and Ω_r angular in rad/μs.
pub fn blockade_radius(c6_over_h_ghz_um6: f64, omega_r: f64) -> Result<f64> {
    if omega_r <= 0.0 {
        return Err(invalid(format!("omega_r must be > 0, got {omega_r}")));
    }
    if c6_over_h_ghz_um6 == 0.0 {
        return Err(invalid("c6 must be nonzero"));
    }
    // C6/ħ = 2π·(C6/h); 1 GHz = 10³ MHz, and rad/μs = 2π·MHz
    let c6_over_hbar = TAU * c6_over_h_ghz_um6.abs() * 1e3; // rad·μm⁶/μs
    Ok((c6_over_hbar / omega_r).powf(1.0 / 6.0))
}

/// Dressed-ground leakage parameter √N·Ω_r·Ω_μw²/|Δ_r|³. Dressed-ground
/// control is reliable only when this is ≪ 1.
pub fn adiabaticity_parameter(params: &SystemParams) -> Result<f64> {
    if params.delta_r == 0.0 {
        return Err(Error::Singularity(
            "adiabaticity parameter diverges at delta_r = 0".into(),
        ));
    }
    Ok((params.n_atoms as f64).sqrt() * params.omega_r * params.omega_uw.powi(2)
        / params.delta_r.abs().powi(3))
}

/// Target state Σ_n c_n |g̃,n⟩ built from dressed-ground coefficients
/// (length N+1, unit norm within 1e−9).
pub fn dressed_target(params: &SystemParams, coeffs: &[C64]) -> Result<DickeVector> {
    if coeffs.len() != params.n_atoms + 1 {
        return Err(mismatch(format!(
            "expected {} dressed-ground coefficients, got {}",
            params.n_atoms + 1,
            coeffs.len()
        )));
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid(format!(
            "coefficients must be normalized within 1e-9, got norm {norm}"
        )));
    }
    let basis = dressed_basis(params)?;
    let mut amplitudes = DVector::<C64>::zeros(params.dim());
    for (n, c) in coeffs.iter().enumerate() {
        let j = basis.index_of(BasisLabel::ground(n))?;
        amplitudes += basis.transform().column(j).map(|x| x * c);
    }
    DickeVector::new(amplitudes, params.n_atoms)
}

/// Closed-form dressed energies of the n-th Jaynes-Cummings doublet at
/// Δ_μw = 0: E± = −Δ_r/2 ± sign(Δ_r)·√(nΩ_r² + Δ_r²)/2, with the plus branch
/// adiabatically connected to |g,n⟩.
pub fn jc_doublet_energies(params: &SystemParams, n: usize) -> Result<(f64, f64)> {
    if n < 1 || n > params.n_atoms {
        return Err(invalid(format!(
            "doublet index must lie in 1..=N, got {n} for N = {}",
            params.n_atoms
        )));
    }
    let sign = if params.delta_r >= 0.0 { 1.0 } else { -1.0 };
    let rabi = (n as f64 * params.omega_r.powi(2) + params.delta_r.powi(2)).sqrt();
    let center = -params.delta_r / 2.0;
    Ok((center + sign * rabi / 2.0, center - sign * rabi / 2.0))
}
