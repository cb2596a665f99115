//! Finite-dimensional cyclic compressions of scaled-unitary operators.
//!
//! Starting from an operator `A` with `A*A = AA* = r I` and a cyclic vector
//! `phi`, the crate builds the spaces `H_N` spanned by `A^i (A*)^j phi`, a
//! normal completion `A_N` on each of them, and the weighted eigenvalue
//! measures `mu_N`. On top of that sit box-grid measure estimates, the
//! coefficient embedding with its three norms, generalized distributions and
//! kernel propagators.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

pub mod compression;
pub mod distributions;
pub mod embedding;
pub mod error;
pub mod kernelprop;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod scalar;
pub mod selfadjoint;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type Model = models::OperatorModel<f64>;
pub type Poly = models::Polynomial<f64>;
pub type Compression = compression::CompressionSpaces<f64>;
pub type Spectral = compression::SpectralData<f64>;
pub type Atoms = measure::AtomicMeasure<f64>;
pub type Grid = measure::BoxGrid<f64>;
pub type Masses = measure::BoxMasses<f64>;
pub type HnVec = embedding::HnVector<f64>;
pub type Kernel = kernelprop::KernelFunction<f64>;
pub type Operator = kernelprop::ApproxOperator<f64>;
