//! Symbol algebra: coefficient matrices, sphere spectral data, and the
//! compatibility matrix polynomial restoring ellipticity.

pub mod compat;
pub mod poly;
pub mod spectral;
pub mod system;

pub use compat::{
    build_q, certify, char_poly_coeffs, check_l_ellipticity, divergence_pair_symbol,
    verify_exact_sequence, EllipticityReport, ExactSequenceReport, SymbolCertification,
};
pub use poly::{MultiPoly, PolyMatrix};
pub use spectral::{spectral_data, SpectralOptions, SpeedSample, SymbolSpectralData};
pub use system::{maxwell, SymmetricSystem};

#[derive(Debug, thiserror::Error)]
pub enum SymbolError {
    #[error("spatial dimension must be odd and at least 3, got {n}")]
    BadDimension { n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient matrix {index} is not exactly symmetric")]
    NotSymmetric { index: usize },
    #[error("failed to parse system description: {0}")]
    Parse(String),
    #[error("kernel dimension varies over the sphere: {d0_first} at {omega_first} vs {d0_second} at {omega_second}")]
    ConstantRankViolation {
        d0_first: usize,
        omega_first: String,
        d0_second: usize,
        omega_second: String,
    },
    #[error("symbol vanishes identically at sample {omega}")]
    DegenerateSymbol { omega: String },
    #[error("characteristic-coefficient interpolation failed: {detail}")]
    InterpolationFailure { detail: String },
    #[error("compatibility identity residual {residual:.3e} exceeds 1e-9 of scale {scale:.3e}")]
    CayleyHamiltonResidual { residual: f64, scale: f64 },
    #[error("kernel/range comparison failed at xi = {xi}: {detail}")]
    ExactSequenceFailure { xi: String, detail: String },
}
