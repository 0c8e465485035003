//! Dense complex linear algebra kernel: tensor products, partial trace,
//! Hermitian eigendecomposition, norms, Haar-random unitaries.

mod eig;
mod haar;
mod matrix;

pub use eig::{eig_hermitian, trace_norm, HermitianEigensystem};
pub use haar::{complete_unitary, haar_unitary, qr};
pub use matrix::{partial_trace, tensor, tensor_pow, tensor_vec, ComplexMatrix, SubsystemShape};
