//! Dense complex linear algebra: Hermitian spectra, pseudo powers, norms,
//! partial traces and vectorization.

mod matrix;
mod spectral;
mod tensor;

pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
pub use spectral::{
    hermitian_eig, operator_norm, positive_projection, psd_tolerance, pseudo_power,
    singular_values, trace_norm, HermitianOperator, SpectralDecomposition,
};
pub use tensor::{
    double_ket, from_double_ket, kron, partial_trace, partial_transpose, permute_factors,
    permute_vector, TensorFactorization,
};
