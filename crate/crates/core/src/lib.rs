//! Quantum optimal control of a Rydberg-blockaded symmetric atomic ensemble.
//!
//! A blockaded ensemble of `N` three-level atoms driven by a uniform Rydberg
//! laser and a phase-modulated microwave is isomorphic to a finite
//! Jaynes-Cummings system on the 2N+1 dimensional symmetric (Dicke) subspace.
//! This crate builds that model and synthesizes piecewise-constant microwave
//! phase waveforms which steer the ensemble into arbitrary superpositions of
//! ground Dicke states:
//!
//! - [`hilbert`]: basis indexing, canonical states, collective spin operators;
//! - [`hamiltonian`]: drift/control Hamiltonians in the doubly-rotating frame,
//!   the dressed (Jaynes-Cummings ladder) eigenbasis, and derived quantities
//!   (nonlinearity κ, blockade radius, adiabaticity parameter);
//! - [`propagation`]: piecewise-constant unitary evolution and exact analytic
//!   fidelity gradients with respect to the phase controls;
//! - [`grape`]: gradient-ascent waveform search with random restarts, plus
//!   landscape sweeps over detuning and run time;
//! - [`verify`]: independent oracles — a numerical Lie-closure controllability
//!   test, a brute-force tensor-product blockade simulation, and the
//!   one-axis-twisting analytic evolution.
//!
//! All frequencies are angular (rad/μs); durations are in μs. Conversion from
//! ordinary MHz happens once at configuration boundaries.

pub mod error;
pub mod grape;
pub mod hamiltonian;
pub mod hilbert;
pub mod propagation;
pub mod verify;

pub use error::{Error, Result};
pub use grape::{
    optimize, optimize_dressed_ground, speed_limit_estimate, sweep_landscape, LandscapeCell,
    LandscapeSweep, LeakageReport, OptimizationResult, OptimizeOptions, Regime,
};
pub use hamiltonian::{
    adiabaticity_parameter, blockade_radius, build_control, build_drift, dressed_basis,
    dressed_target, kappa_exact, kappa_weak, DressedBasis, SystemParams,
};
pub use hilbert::{
    basis_dim, basis_index, basis_label, basis_labels, cat_state, collective_spin, dicke_state,
    fidelity, spin_coherent_state, BasisLabel, DickeVector, Manifold, SpinAxis,
};
pub use propagation::{evolve, evolve_trajectory, fidelity_and_gradient, step_propagator, ControlWaveform};
pub use verify::{
    embed_symmetric, full_space_evolve, lie_closure_dimension, oat_evolve, symmetric_isometry,
    LieClosureReport,
};
