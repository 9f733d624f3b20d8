//! Numerical laboratory for the bi-Laplacian with Wentzell boundary
//! conditions on `L^2(Omega) x L^2(Gamma, beta^-1 dS)`.
//!
//! The crate discretises the quadratic form with P1 elements in a mixed
//! fashion, computes the spectral decomposition of the resulting
//! self-adjoint operator, evaluates the semigroup `exp(-t A)` by spectral
//! expansion and cross-checks everything against a semi-analytic 1D oracle.

pub mod coefficients;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod fem;
pub mod gamma_limit;
pub mod geometry;
pub mod oracle;
pub mod quadrature;
pub mod spectral;

pub use coefficients::{validate_hypothesis, FieldSpec, ProblemData};
pub use error::{Error, Result};
pub use geometry::Mesh;
pub use spectral::{DiscreteWentzellOperator, KernelClass, ProductFunction, SpectralDecomposition};
