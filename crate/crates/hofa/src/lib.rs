//! Spectral quadratic Fourier analysis on finite abelian groups.
//!
//! The library is organized around a few objects:
//!
//! * [`group`] — finite abelian groups `Z = Z_{N1} × … × Z_{Nd}`, complex
//!   functions on them with the normalized (averaged) inner product
//!   `⟨f,g⟩ = E_x f(x)·conj(g(x))`, and the normalized Fourier transform
//!   `f̂(χ) = E_x f(x)·conj(χ(x))`.
//! * [`zmatrix`] — dense kernels `M ∈ ℂ^{Z×Z}` viewed as integral operators
//!   `Mf(x) = E_y M(x,y) f(y)`, their diagonal decomposition
//!   `𝔇_{M,t}(z) = M(z+t, z)`, and the L², MA and DU^k matrix norms.
//! * [`fourier_ops`] — shift/conjugation invariant operators on functions,
//!   the soft-threshold denoiser `K_ε`, and the diagonal-wise lift of an
//!   invariant operator to kernels.
//! * [`gowers`] — Gowers uniformity norms `U^k`, Gowers inner products, and
//!   polynomial phase fixtures.
//! * [`spectral`] — normalized Hermitian eigendecomposition plus a toolkit:
//!   thresholded spectra, pseudoeigenvector residuals, eigenvalue clusters,
//!   subspace aperture, quantitative Gram–Schmidt, nearest unitary.
//! * [`characters`] — certificates of Fourier structure and of (weak)
//!   quadratic characters.
//! * [`algorithms`] — the U³-regularization and quadratic character
//!   decomposition procedures built from the pieces above.

pub mod algorithms;
pub mod characters;
pub mod fourier_ops;
pub mod gowers;
pub mod group;
pub mod spectral;
pub mod util;
pub mod zmatrix;

use thiserror::Error;

pub type C64 = num_complex::Complex64;

#[derive(Debug, Error)]
pub enum HofaError {
    #[error("invalid group specification: {0}")]
    BadGroupSpec(String),
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("matrix is not self-adjoint: max asymmetry {0:.3e}")]
    NotSelfAdjoint(f64),
    #[error("numerical consistency failure: {0}")]
    Numerical(String),
    #[error("no qualifying eigenvalue: {0}")]
    NoQualifyingEigenvalue(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HofaError>;
