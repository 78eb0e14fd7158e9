//! Screw dislocations in antiplane shear: Green's functions and Robin
//! functions of planar domains, renormalized energies and Peach–Koehler
//! forces, the dislocation gradient flow with collision events, and the
//! core-radius energies of dislocations under a prescribed boundary datum
//! together with their limit functionals and minimizers.

// Negated float comparisons are used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fourier;
pub mod geometry;
pub mod quadrature;
pub mod green;
pub mod energy;
pub mod dynamics;
pub mod dirichlet;
pub mod minimize;
