//! Numerical spectral laboratory for dissipative Maxwell-type systems on
//! exterior domains.
//!
//! The crate is organized around one physical setup — a symmetric hyperbolic
//! system outside a smooth obstacle with an energy-absorbing boundary
//! condition — and provides:
//!
//! * [`symbol`]: symbol algebra for the coefficient matrices: spectral data
//!   on the unit sphere, the compatibility matrix polynomial with
//!   `Ker Q = Range A`, and ellipticity diagnostics of the augmented symbol.
//! * [`ads`]: semi-analytic eigenvalues of the exterior Maxwell generator on
//!   the unit sphere (decaying modes with `Re λ < 0`), found from scalar
//!   dispersion relations per harmonic degree and polarization.
//! * [`generator`]: finite-dimensional approximation of the generator on a
//!   truncated radial shell with a sponge absorber, plus eigensolves,
//!   resolvent solves, kernel witnesses and a coercivity diagnostic.
//! * [`semigroup`]: time-domain contraction-semigroup evolution with energy
//!   and boundary-flux accounting.
//! * [`perturb`]: contour spectral projectors and eigenvalue continuation
//!   under boundary/coefficient perturbations.
//! * [`fredholm`]: finite-dimensional analytic operator families — Schur
//!   reduction at a singular basepoint, classification of the singular set
//!   and Laurent data of the inverse.
//!
//! Shared numerical kernels (banded/low-rank complex solvers, Hessenberg QR
//! eigenvalues, sphere sampling and quadrature, spherical harmonics) live in
//! [`linalg`] and [`sphere`].

pub mod ads;
pub mod fredholm;
pub mod generator;
pub mod linalg;
pub mod perturb;
pub mod semigroup;
pub mod sphere;
pub mod symbol;

/// Scalar used throughout the crate.
pub type Real = f64;
/// Complex scalar used throughout the crate.
pub type Cplx = num_complex::Complex<f64>;
