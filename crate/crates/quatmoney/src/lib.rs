//! Quantum money on quaternion algebras, simulated classically at desk scale.
//!
//! The pipeline: build the definite quaternion algebra H_N ramified at a
//! prime N and infinity, construct an N-extremal maximal order, enumerate
//! the left ideal class set through canonical (d,a,b) encodings, assemble
//! the normalized Brandt matrices T(p), diagonalize them jointly on the
//! invariant hyperplane, and run the mint/verify/lightning protocols on the
//! resulting eigenstates.

pub mod error;
pub mod rational;
pub mod quat;
pub mod linalg;
pub mod lattice;
pub mod orders;
pub mod modmat;
pub mod encoding;
pub mod brandt;
pub mod spectral;
pub mod protocol;
pub mod cache;

pub use error::{Error, Result};
pub use quat::{AlgebraParams, Quaternion};
