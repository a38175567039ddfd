//! Symmetric (Dicke) Hilbert space for a blockaded ensemble of `N` three-level
//! atoms: basis indexing, canonical states, and collective spin operators.
//!
//! The space splits into a ground manifold `|g,n⟩` (n atoms in the upper qubit
//! state, none in the Rydberg state, 0 ≤ n ≤ N) and an excited manifold
//! `|e,n⟩` (n atoms in the upper qubit state plus one shared Rydberg
//! excitation, 0 ≤ n ≤ N−1), for a total dimension of 2N+1. The ground block
//! carries a spin J = N/2 representation, the excited block J = (N−1)/2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};

/// Which manifold a symmetric basis state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    /// No Rydberg excitation.
    Ground,
    /// Exactly one (shared) Rydberg excitation.
    Excited,
}

/// Label of one symmetric basis state: manifold plus the number of atoms in
/// the upper qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub manifold: Manifold,
    pub n: usize,
}

impl BasisLabel {
    pub fn ground(n: usize) -> Self {
        Self { manifold: Manifold::Ground, n }
    }

    pub fn excited(n: usize) -> Self {
        Self { manifold: Manifold::Excited, n }
    }

    /// True if the label addresses a valid state for an `n_atoms` ensemble.
    pub fn is_valid(&self, n_atoms: usize) -> bool {
        match self.manifold {
            Manifold::Ground => n_atoms >= 1 && self.n <= n_atoms,
            Manifold::Excited => n_atoms >= 1 && self.n < n_atoms,
        }
    }
}

/// Total symmetric-space dimension, 2N+1.
pub fn basis_dim(n_atoms: usize) -> usize {
    2 * n_atoms + 1
}

/// Flat index of a basis label: ground block first (ascending n), then the
/// excited block (ascending n).
pub fn basis_index(label: BasisLabel, n_atoms: usize) -> Result<usize> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    if !label.is_valid(n_atoms) {
        return Err(invalid(format!(
            "label {label:?} out of range for N = {n_atoms}"
        )));
    }
    Ok(match label.manifold {
        Manifold::Ground => label.n,
        Manifold::Excited => n_atoms + 1 + label.n,
    })
}

/// Inverse of [`basis_index`].
pub fn basis_label(index: usize, n_atoms: usize) -> Result<BasisLabel> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    if index >= basis_dim(n_atoms) {
        return Err(invalid(format!(
            "index {index} out of range for dimension {}",
            basis_dim(n_atoms)
        )));
    }
    Ok(if index <= n_atoms {
        BasisLabel::ground(index)
    } else {
        BasisLabel::excited(index - n_atoms - 1)
    })
}

/// All basis labels in index order.
pub fn basis_labels(n_atoms: usize) -> Vec<BasisLabel> {
    let mut labels = Vec::with_capacity(basis_dim(n_atoms));
    for n in 0..=n_atoms {
        labels.push(BasisLabel::ground(n));
    }
    for n in 0..n_atoms {
        labels.push(BasisLabel::excited(n));
    }
    labels
}

/// Pure state of the symmetric ensemble: complex amplitudes over the 2N+1
/// basis states in [`basis_index`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeVector {
    amplitudes: DVector<C64>,
    n_atoms: usize,
}

impl DickeVector {
    /// Wrap an amplitude vector. The length must equal 2N+1; the norm is not
    /// constrained here.
    pub fn new(amplitudes: DVector<C64>, n_atoms: usize) -> Result<Self> {
        if n_atoms < 1 {
            return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
        }
        if amplitudes.len() != basis_dim(n_atoms) {
            return Err(mismatch(format!(
                "amplitude vector has length {}, expected {} for N = {n_atoms}",
                amplitudes.len(),
                basis_dim(n_atoms)
            )));
        }
        Ok(Self { amplitudes, n_atoms })
    }

    pub fn zero(n_atoms: usize) -> Self {
        Self {
            amplitudes: DVector::zeros(basis_dim(n_atoms)),
            n_atoms,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: BasisLabel) -> Result<C64> {
        Ok(self.amplitudes[basis_index(label, self.n_atoms)?])
    }

    pub fn set_amplitude(&mut self, label: BasisLabel, value: C64) -> Result<()> {
        let idx = basis_index(label, self.n_atoms)?;
        self.amplitudes[idx] = value;
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Rescale to unit norm. Errors on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        Ok(Self {
            amplitudes: self.amplitudes.map(|a| a / n),
            n_atoms: self.n_atoms,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.n_atoms != other.n_atoms {
            return Err(mismatch(format!(
                "atom counts differ: {} vs {}",
                self.n_atoms, other.n_atoms
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Total population in the excited (Rydberg) manifold.
    pub fn excited_population(&self) -> f64 {
        self.amplitudes
            .iter()
            .skip(self.n_atoms + 1)
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Apply a matrix in the symmetric basis.
    pub fn apply(&self, op: &DMatrix<C64>) -> Result<Self> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(mismatch(format!(
                "operator is {}x{}, state has dimension {}",
                op.nrows(),
                op.ncols(),
                self.dim()
            )));
        }
        Ok(Self {
            amplitudes: op * &self.amplitudes,
            n_atoms: self.n_atoms,
        })
    }
}

/// |g,n⟩: the Dicke state with n atoms in the upper qubit state.
pub fn dicke_state(n_atoms: usize, n: usize) -> Result<DickeVector> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    if n > n_atoms {
        return Err(invalid(format!("n = {n} exceeds N = {n_atoms}")));
    }
    let mut v = DickeVector::zero(n_atoms);
    v.set_amplitude(BasisLabel::ground(n), C64::new(1.0, 0.0))?;
    Ok(v)
}

/// Spin coherent state in the ground manifold,
/// c_n = √C(N,n) cos(θ/2)^{N−n} (e^{iφ} sin(θ/2))^n.
pub fn spin_coherent_state(n_atoms: usize, theta: f64, phi: f64) -> Result<DickeVector> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    let mut v = DickeVector::zero(n_atoms);
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let phase = C64::from_polar(1.0, phi);
    for n in 0..=n_atoms {
        let amp = binomial(n_atoms, n).sqrt()
            * c.powi((n_atoms - n) as i32)
            * s.powi(n as i32);
        v.set_amplitude(BasisLabel::ground(n), phase.powu(n as u32) * amp)?;
    }
    Ok(v)
}

/// Polar cat state (|g,0⟩ + e^{iφ}|g,N⟩)/√2.
pub fn cat_state(n_atoms: usize, relative_phase: f64) -> Result<DickeVector> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    let mut v = DickeVector::zero(n_atoms);
    let w = std::f64::consts::FRAC_1_SQRT_2;
    v.set_amplitude(BasisLabel::ground(0), C64::new(w, 0.0))?;
    v.set_amplitude(
        BasisLabel::ground(n_atoms),
        C64::from_polar(w, relative_phase),
    )?;
    Ok(v)
}

/// Coefficients of a ground-manifold target, length N+1, in ascending n.
pub fn ground_coefficients(state: &DickeVector) -> Vec<C64> {
    state
        .amplitudes()
        .iter()
        .take(state.n_atoms() + 1)
        .copied()
        .collect()
}

/// Collective spin axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

/// Collective spin operator on the full 2N+1 space: block-diagonal with a
/// spin J = N/2 representation on the ground manifold and J = (N−1)/2 on the
/// excited manifold. The microwave drives these blocks without touching the
/// Rydberg excitation.
pub fn collective_spin(n_atoms: usize, axis: SpinAxis) -> Result<DMatrix<C64>> {
    if n_atoms < 1 {
        return Err(invalid(format!("n_atoms must be >= 1, got {n_atoms}")));
    }
    let dim = basis_dim(n_atoms);
    let mut m = DMatrix::<C64>::zeros(dim, dim);

    // (offset into the flat basis, number of qubits forming the block);
    // N = 1 leaves a 1x1 spin-0 excited block, which every axis maps to zero
    let blocks = [(0usize, n_atoms), (n_atoms + 1, n_atoms - 1)];
    for &(offset, n_qubits) in &blocks {
        let half_n = n_qubits as f64 / 2.0;
        match axis {
            SpinAxis::Z => {
                for n in 0..=n_qubits {
                    m[(offset + n, offset + n)] = C64::new(n as f64 - half_n, 0.0);
                }
            }
            SpinAxis::X | SpinAxis::Y => {
                for n in 0..n_qubits {
                    // ⟨n+1|J₊|n⟩ on a spin n_qubits/2 ladder, J_x = (J₊+J₋)/2
                    // and J_y = (J₊−J₋)/2i
                    let elem = (((n + 1) * (n_qubits - n)) as f64).sqrt() / 2.0;
                    let (raise, lower) = match axis {
                        SpinAxis::X => (C64::new(elem, 0.0), C64::new(elem, 0.0)),
                        SpinAxis::Y => (C64::new(0.0, -elem), C64::new(0.0, elem)),
                        SpinAxis::Z => unreachable!(),
                    };
                    m[(offset + n + 1, offset + n)] = raise;
                    m[(offset + n, offset + n + 1)] = lower;
                }
            }
        }
    }
    Ok(m)
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &DickeVector, b: &DickeVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Binomial coefficient as f64 (exact for the atom counts used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
