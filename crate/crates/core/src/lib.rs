//! Trace-based exact repair of node failures in Reed-Muller coded storage.
//!
//! Layers, bottom up:
//! - [`galois`]: the field tower `F_q ⊂ F_{q^t}`, trace, dual and kernel bases.
//! - [`rmcode`]: Reed-Muller codes, duality checks and an erasure-decoding oracle.
//! - [`repair`]: recovery polynomials and the one-, two- and ℓ-erasure schemes.
//! - [`dss`]: a simulated cluster that fails nodes and repairs them.

pub mod cli;
pub mod dss;
pub mod galois;
pub mod linalg;
pub mod repair;
pub mod rmcode;
pub mod verify;

pub use galois::{FieldError, FieldTower, SubSymbol, Symbol};
pub use rmcode::{CodeError, CodeParams, Codeword, MultiPoly, RMCode};
