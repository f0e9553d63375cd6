//! Decaying eigenvalues of the exterior sphere problem, semi-analytically:
//! per-(degree, polarization) dispersion relations, complex root search by
//! the argument principle, and independent eigenfield verification.

pub mod dispersion;
pub mod hankel;
pub mod roots;
pub mod verify;

pub use dispersion::{dispersion_derivative, dispersion_residual, ModeProblem, Polarization};
pub use hankel::{hankel_elem, modified_radial};
pub use roots::{find_roots, winding_number, Region, RootOptions};
pub use verify::{eigenfield, verify_eigenpair, ComplexEigenpair, ProfileDescriptor, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum AdsError {
    #[error("radial kernel undefined at zero argument")]
    HankelDomain,
    #[error("invalid mode problem: {detail}")]
    InvalidMode { detail: String },
    #[error("invalid search region: {detail}")]
    RegionInvalid { detail: String },
    #[error("contour passes too close to a zero (after {attempts} perturbed retries)")]
    ContourThroughZero { attempts: u32 },
    #[error("root search failed to converge: {detail}")]
    NonConvergence { detail: String },
    #[error("rate {lambda} does not decay (Re >= 0); growing rates contradict contraction")]
    RateNotDecaying { lambda: crate::Cplx },
}
