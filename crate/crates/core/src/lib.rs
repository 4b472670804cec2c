//! Topological degrees of maps between odd spheres via Toeplitz index formulas.
//!
//! The crate evaluates index and degree integrals on S^{2n-1} = ∂B_n ⊂ ℂⁿ
//! by Monte-Carlo and product quadrature, and checks them against
//! finite-rank Hardy space oracles and exact Clifford algebra identities.
//!
//! Modules:
//! - [`clifford_rep`]: spin representation, the symbol `u` and its relatives.
//! - [`geometry`]: sphere points, sampling, the chart, test maps.
//! - [`kernels`]: Szegő kernel, Levi polynomial, mollification, mixed norms.
//! - [`hardy_index`]: truncated Toeplitz matrices and the index oracle.
//! - [`cocycle_degree`]: the index and degree integrals themselves.

pub mod clifford_rep;
pub mod cocycle_degree;
pub mod error;
pub mod geometry;
pub mod hardy_index;
pub mod kernels;
pub mod linalg;
pub mod mc;
pub mod seed;
pub mod symbol;

pub use error::{Error, Result};
pub use geometry::{SampleSet, SpherePoint, TestMap};
pub use mc::McEstimate;
pub use symbol::SymbolMap;

/// Complex double, used everywhere.
pub type C64 = num_complex::Complex64;
