//! Constrained spin-1 PXP chains.
//!
//! The crate builds constrained configuration spaces ([`basis`]), projected
//! Hamiltonians and conserved operators ([`hamiltonian`]), symmetry sectors
//! and the particle-hole operator ([`symmetry`]), Krylov fragments and
//! inert-state counts ([`fragmentation`]), spectra and eigenstate observables
//! ([`spectral`]), the forward scattering approximation ([`fsa`]), and quench
//! dynamics from the Neel-like `|Z2>` state ([`dynamics`]).
//!
//! ```
//! use spin1_pxp::{build_hamiltonian, Boundary, ConstrainedBasis, ConstraintSet, StateSpace};
//!
//! let basis = ConstrainedBasis::enumerate(ConstraintSet::model_iii(), 2, Boundary::Open).unwrap();
//! assert_eq!(basis.dim(), 7);
//! let h = build_hamiltonian(&basis);
//! assert!(h.symmetry_defect() == 0.0);
//! ```

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod fragmentation;
pub mod fsa;
pub mod hamiltonian;
pub mod spectral;
pub mod symmetry;

pub use basis::{
    count_dimension, Boundary, ConstrainedBasis, ConstraintSet, Preset, Spin, SpinConfig, StateSpace,
};
pub use error::{Error, Result};
pub use hamiltonian::{build_hamiltonian, SparseOperator};

/// Caps the threads used by dense eigensolvers; `0` uses every available core
/// and `1` runs sequentially. Results do not depend on the setting beyond
/// rounding.
pub fn set_workers(workers: usize) {
    let par = if workers == 1 { faer::Par::Seq } else { faer::Par::rayon(workers) };
    faer::set_global_parallelism(par);
}
