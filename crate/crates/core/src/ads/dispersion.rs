//! Scalar dispersion relations for the exterior sphere eigenproblem.
//!
//! Separating the eigen-system `lambda E = curl B`, `lambda B = -curl E`
//! outside the ball `r = a` in vector spherical harmonics reduces each
//! `(l, polarization)` family to one scalar condition. With the decaying
//! radial factor `e(r) = h_l(k r)`, `k = -i lambda` (so `e^{ikr} = e^{lambda
//! r}` is square-integrable for `Re lambda < 0`), the scaled radial fields
//! for the transverse-electric family are
//!
//! ```text
//! e(r) = r h_l(kr),   b(r) = (r h_l(kr))' / lambda,
//! ```
//!
//! and the impedance boundary relation `b(a) = (1 + eps) e(a)` (the
//! tangential-trace form of `(1+eps) E_tan = nu x B_tan` with `nu` the
//! normal pointing from the obstacle into the exterior — the orientation for
//! which the boundary space is energy-dissipating; see the energy-flux
//! tests) gives
//!
//! ```text
//! F_TE(lambda) = K_l(y) + y K_l'(y) + (1+eps) y K_l(y),  y = -lambda a,
//! ```
//!
//! written in the real-coefficient kernel `K_l` so that `F(conj lambda) =
//! conj F(lambda)` exactly. The transverse-magnetic family swaps the roles
//! of E and B, which inverts the impedance:
//!
//! ```text
//! F_TM(lambda) = (1+eps)(K_l(y) + y K_l'(y)) + y K_l(y).
//! ```

use super::hankel::modified_radial;
use super::AdsError;
use crate::Cplx;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    /// electric field purely tangential to spheres
    Te,
    /// magnetic field purely tangential to spheres
    Tm,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::Te => write!(f, "TE"),
            Polarization::Tm => write!(f, "TM"),
        }
    }
}

/// One separated exterior eigenproblem: harmonic degree, polarization,
/// boundary dissipation strength, obstacle radius.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModeProblem {
    pub l: u32,
    pub polarization: Polarization,
    pub epsilon: f64,
    pub radius: f64,
}

impl ModeProblem {
    pub fn new(l: u32, polarization: Polarization, epsilon: f64, radius: f64) -> Result<Self, AdsError> {
        if l < 1 {
            return Err(AdsError::InvalidMode {
                detail: "harmonic degree must be at least 1 (l = 0 carries no transverse field)".into(),
            });
        }
        if epsilon <= 0.0 {
            return Err(AdsError::InvalidMode {
                detail: "dissipation parameter must be strictly positive".into(),
            });
        }
        if radius <= 0.0 {
            return Err(AdsError::InvalidMode {
                detail: "radius must be positive".into(),
            });
        }
        Ok(ModeProblem {
            l,
            polarization,
            epsilon,
            radius,
        })
    }

    pub fn unit_sphere(l: u32, polarization: Polarization, epsilon: f64) -> Result<Self, AdsError> {
        Self::new(l, polarization, epsilon, 1.0)
    }
}

/// The scalar transcendental function whose zeros in `Re lambda < 0` are the
/// decaying eigenvalues of the mode family. Analytic there; `lambda = 0` is
/// excluded.
pub fn dispersion_residual(mode: &ModeProblem, lambda: Cplx) -> Result<Cplx, AdsError> {
    if lambda.norm() == 0.0 {
        return Err(AdsError::HankelDomain);
    }
    let y = -lambda * mode.radius;
    let (k, dk) = modified_radial(mode.l, y)?;
    let eta = 1.0 + mode.epsilon;
    Ok(match mode.polarization {
        Polarization::Te => k + y * dk + y * k * eta,
        Polarization::Tm => (k + y * dk) * eta + y * k,
    })
}

/// Central-difference derivative of the dispersion residual.
pub fn dispersion_derivative(mode: &ModeProblem, lambda: Cplx) -> Result<Cplx, AdsError> {
    let h = 1e-6 * lambda.norm().max(1.0);
    let fp = dispersion_residual(mode, lambda + Cplx::new(h, 0.0))?;
    let fm = dispersion_residual(mode, lambda - Cplx::new(h, 0.0))?;
    Ok((fp - fm) / (2.0 * h))
}

/// The dispersion residual times the entire nonvanishing factor
/// `y^{l+1} e^y` (y = -lambda a): a polynomial in `y` of degree `l + 1`
/// with real coefficients.
///
/// Same zeros as [`dispersion_residual`] away from `lambda = 0`, but without
/// the flat exponential envelope that defeats Newton steps taken far from a
/// root. The searcher works on this form; packaged results are always
/// re-verified against the unscaled residual.
pub fn scaled_dispersion(mode: &ModeProblem, lambda: Cplx) -> Cplx {
    let y = -lambda * mode.radius;
    let l = mode.l as i64;
    // c_m = (l+m)!/(m!(l-m)! 2^m)
    let mut c = vec![1.0f64];
    for m in 0..l {
        let prev = *c.last().unwrap();
        c.push(prev * ((l + m + 1) as f64) * ((l - m) as f64) / (2.0 * (m + 1) as f64));
    }
    // S = sum c_m y^{l-m},  E = sum (m+1) c_m y^{l-m}
    let mut s = Cplx::new(0.0, 0.0);
    let mut e = Cplx::new(0.0, 0.0);
    for (m, &cm) in c.iter().enumerate() {
        let pw = y.powu((l as usize - m) as u32);
        s += pw * cm;
        e += pw * cm * (m as f64 + 1.0);
    }
    let eta = 1.0 + mode.epsilon;
    match mode.polarization {
        Polarization::Te => s - y * s - e + y * s * eta,
        Polarization::Tm => (s - y * s - e) * eta + y * s,
    }
}
