//! Independent verification of computed eigenpairs.
//!
//! The eigenfield is assembled as a Cartesian function from the closed-form
//! radial profile and vector harmonics, then checked by finite differences:
//! the second-order equation `curl curl E + lambda^2 E = 0`, the tangential
//! boundary relation, a sampled divergence, and L2 tail decay. None of the
//! checks reuses the radial mode equations.

use super::dispersion::{ModeProblem, Polarization};
use super::hankel::hankel_elem;
use super::AdsError;
use crate::sphere::{frame, real_ylm, tangent_basis};
use crate::Cplx;
use serde::Serialize;

/// Closed-form radial data of an eigenfield: wavenumber and the scalar
/// profiles multiplying the three vector-harmonic components.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileDescriptor {
    /// k = -i lambda, so the radial factor e^{ikr} = e^{lambda r} decays
    pub k: Cplx,
    /// coefficient of h_l(kr) on the rotational tangential harmonic
    pub transverse: Cplx,
    /// coefficient of (h_l(kr) + kr h_l'(kr))/(lambda r) on the gradient harmonic
    pub gradient: Cplx,
    /// coefficient of sqrt(l(l+1)) h_l(kr)/(lambda r) on the radial harmonic
    pub radial: Cplx,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexEigenpair {
    pub lambda: Cplx,
    pub mode: ModeProblem,
    pub profile: ProfileDescriptor,
    pub pde_residual: f64,
    pub bc_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pde_residual: f64,
    pub bc_residual: f64,
    pub div_residual: f64,
    /// successive shell-energy ratios; all below 1 for a decaying field
    pub decay_ratios: Vec<f64>,
    pub decay_converges: bool,
}

/// Evaluate (E, B) at a Cartesian point for mode order m = 0 (the dispersion
/// relation is independent of m; verification uses the axisymmetric member).
pub fn eigenfield(mode: &ModeProblem, lambda: Cplx, x: &[f64; 3]) -> (Vec<Cplx>, Vec<Cplx>) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    let k = -Cplx::new(0.0, 1.0) * lambda;
    let l = mode.l;
    let shat = ((l * (l + 1)) as f64).sqrt();
    let (h, dh) = hankel_elem(l, k * r).expect("r > 0");
    let e_prof = h;
    let g_prof = (h + k * r * dh) / (lambda * r);
    let r_prof = h * shat / (lambda * r);

    let tb = tangent_basis(l, 0, theta, phi);
    let (er, _, _) = frame(theta, phi);
    let y = real_ylm(l, 0, theta, phi).0;

    let mk3 = |c_phi: Cplx, c_psi: Cplx, c_rad: Cplx| -> Vec<Cplx> {
        (0..3)
            .map(|i| c_phi * tb.phi_v[i] + c_psi * tb.psi[i] + c_rad * (y * er[i]))
            .collect()
    };
    match mode.polarization {
        Polarization::Te => {
            let e = mk3(e_prof, Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0));
            let b = mk3(Cplx::new(0.0, 0.0), g_prof, r_prof);
            (e, b)
        }
        Polarization::Tm => {
            let e = mk3(Cplx::new(0.0, 0.0), -g_prof, -r_prof);
            let b = mk3(e_prof, Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0));
            (e, b)
        }
    }
}

/// 4th-order central difference of a vector field component.
fn partial(
    f: &dyn Fn(&[f64; 3]) -> Vec<Cplx>,
    x: &[f64; 3],
    dir: usize,
    comp: usize,
    h: f64,
) -> Cplx {
    let mut xp = *x;
    let mut xm = *x;
    let mut xp2 = *x;
    let mut xm2 = *x;
    xp[dir] += h;
    xm[dir] -= h;
    xp2[dir] += 2.0 * h;
    xm2[dir] -= 2.0 * h;
    (-f(&xp2)[comp] + f(&xp)[comp] * 8.0 - f(&xm)[comp] * 8.0 + f(&xm2)[comp]) / (12.0 * h)
}

fn fd_curl(f: &dyn Fn(&[f64; 3]) -> Vec<Cplx>, x: &[f64; 3], h: f64) -> Vec<Cplx> {
    vec![
        partial(f, x, 1, 2, h) - partial(f, x, 2, 1, h),
        partial(f, x, 2, 0, h) - partial(f, x, 0, 2, h),
        partial(f, x, 0, 1, h) - partial(f, x, 1, 0, h),
    ]
}

fn fd_div(f: &dyn Fn(&[f64; 3]) -> Vec<Cplx>, x: &[f64; 3], h: f64) -> Cplx {
    partial(f, x, 0, 0, h) + partial(f, x, 1, 1, h) + partial(f, x, 2, 2, h)
}

/// Build the eigenpair for a candidate rate and verify it.
///
/// Rejects `Re lambda >= 0` at the precondition: growing rates contradict
/// the contraction property and are never packaged as results.
pub fn verify_eigenpair(
    mode: &ModeProblem,
    lambda: Cplx,
) -> Result<(ComplexEigenpair, VerifyReport), AdsError> {
    if lambda.re >= 0.0 {
        return Err(AdsError::RateNotDecaying { lambda });
    }
    let a = mode.radius;
    let k = -Cplx::new(0.0, 1.0) * lambda;
    let sign = match mode.polarization {
        Polarization::Te => 1.0,
        Polarization::Tm => -1.0,
    };
    let profile = ProfileDescriptor {
        k,
        transverse: Cplx::new(1.0, 0.0),
        gradient: Cplx::new(sign, 0.0),
        radial: Cplx::new(sign, 0.0),
    };

    let e_field = |x: &[f64; 3]| eigenfield(mode, lambda, x).0;
    let b_field = |x: &[f64; 3]| eigenfield(mode, lambda, x).1;

    // PDE residual: curl curl E + lambda^2 E by nested finite differences on
    // log-spaced radii and a few angles, relative to the field scale there
    let mut pde_res: f64 = 0.0;
    let angles: [(f64, f64); 3] = [(0.7, 0.4), (1.3, 2.2), (2.3, 4.4)];
    for j in 0..8 {
        let r = a * (10.0f64).powf(j as f64 / 7.0);
        for &(th, ph) in &angles {
            let x = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()];
            let h = 1e-3 * r.min(2.0 * a);
            let inner = |p: &[f64; 3]| fd_curl(&e_field, p, h);
            let cc = fd_curl(&inner, &x, h);
            let e = e_field(&x);
            let scale = e.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
            let res: f64 = (0..3)
                .map(|i| (cc[i] + lambda * lambda * e[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            pde_res = pde_res.max(res / (scale * lambda.norm_sqr().max(1.0)));
        }
    }

    // boundary residual: (1+eps) E_tan - nu x B_tan at r = a, with nu the
    // obstacle-outward unit normal
    let mut bc_res: f64 = 0.0;
    let mut bc_scale: f64 = 1e-300;
    for it in 0..6 {
        for ip in 0..7 {
            let th = 0.3 + 2.5 * it as f64 / 5.0;
            let ph = 2.0 * std::f64::consts::PI * ip as f64 / 7.0;
            let nu = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            let x = [a * nu[0], a * nu[1], a * nu[2]];
            let e = e_field(&x);
            let b = b_field(&x);
            let edotn: Cplx = (0..3).map(|i| e[i] * nu[i]).sum();
            let e_tan: Vec<Cplx> = (0..3).map(|i| e[i] - edotn * nu[i]).collect();
            let bdotn: Cplx = (0..3).map(|i| b[i] * nu[i]).sum();
            let b_tan: Vec<Cplx> = (0..3).map(|i| b[i] - bdotn * nu[i]).collect();
            let nxb = [
                nu[1] * b_tan[2] - nu[2] * b_tan[1],
                nu[2] * b_tan[0] - nu[0] * b_tan[2],
                nu[0] * b_tan[1] - nu[1] * b_tan[0],
            ];
            let res: f64 = (0..3)
                .map(|i| (e_tan[i] * (1.0 + mode.epsilon) - nxb[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            bc_res = bc_res.max(res);
            bc_scale = bc_scale.max(e_tan.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }
    bc_res /= bc_scale;

    // sampled divergence of E, relative to |E| per unit length
    let mut div_res: f64 = 0.0;
    for j in 0..5 {
        let r = a * (1.1 + j as f64);
        let x = [r * 0.36, -r * 0.48, r * 0.8];
        let d = fd_div(&e_field, &x, 1e-3 * r).norm();
        let e = e_field(&x);
        let scale = e.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        div_res = div_res.max(d / (scale / a));
    }

    // shell decay: L2 energies over dyadic shells via radial quadrature
    let (gl_x, gl_w) = crate::sphere::gauss_legendre(24);
    let shell_energy = |r0: f64, r1: f64| -> f64 {
        let mid = 0.5 * (r0 + r1);
        let half = 0.5 * (r1 - r0);
        gl_x.iter()
            .zip(&gl_w)
            .map(|(&t, &w)| {
                let r = mid + half * t;
                let (h, dh) = hankel_elem(mode.l, k * r).expect("r > 0");
                let shat = ((mode.l * (mode.l + 1)) as f64).sqrt();
                let e = r * h.norm();
                let g = (h + k * r * dh).norm() / lambda.norm();
                let c = shat * h.norm() / lambda.norm();
                w * half * (e * e + g * g + c * c)
            })
            .sum()
    };
    let mut decay_ratios = Vec::new();
    let mut prev = shell_energy(a, 2.0 * a);
    for s in 1..5 {
        let cur = shell_energy(a * (1 << s) as f64, a * (1 << (s + 1)) as f64);
        decay_ratios.push(cur / prev.max(1e-300));
        prev = cur;
    }
    let decay_converges = decay_ratios.iter().all(|r| *r < 1.0);

    let pair = ComplexEigenpair {
        lambda,
        mode: *mode,
        profile,
        pde_residual: pde_res,
        bc_residual: bc_res,
    };
    Ok((
        pair,
        VerifyReport {
            pde_residual: pde_res,
            bc_residual: bc_res,
            div_residual: div_res,
            decay_ratios,
            decay_converges,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_mode() -> (ModeProblem, Cplx) {
        (
            ModeProblem::unit_sphere(1, Polarization::Te, 1.0).unwrap(),
            Cplx::new(-(5.0f64.sqrt() - 1.0) / 2.0, 0.0),
        )
    }

    #[test]
    fn true_root_passes_residual_gates() {
        let (mode, lambda) = golden_mode();
        let (_, rep) = verify_eigenpair(&mode, lambda).unwrap();
        assert!(rep.pde_residual < 1e-8, "pde {}", rep.pde_residual);
        assert!(rep.bc_residual < 1e-10, "bc {}", rep.bc_residual);
        assert!(rep.div_residual < 1e-8, "div {}", rep.div_residual);
        assert!(rep.decay_converges);
    }

    #[test]
    fn perturbed_rate_spikes_boundary_residual() {
        let (mode, lambda) = golden_mode();
        let (_, good) = verify_eigenpair(&mode, lambda).unwrap();
        let (_, bad) = verify_eigenpair(&mode, lambda + Cplx::new(1e-3, 0.0)).unwrap();
        assert!(
            bad.bc_residual > 1e3 * good.bc_residual.max(1e-14),
            "good {} bad {}",
            good.bc_residual,
            bad.bc_residual
        );
    }

    #[test]
    fn growing_rate_rejected() {
        let (mode, _) = golden_mode();
        assert!(verify_eigenpair(&mode, Cplx::new(0.5, 1.0)).is_err());
    }

    #[test]
    fn tm_field_satisfies_pde_too() {
        // TM l=2 at an arbitrary decaying rate is not an eigenfield, but the
        // assembled field still satisfies curl curl E = -lambda^2 E away from
        // the boundary (it is a Maxwell solution by construction); only the
        // boundary residual distinguishes eigenvalues
        let mode = ModeProblem::unit_sphere(2, Polarization::Tm, 1.0).unwrap();
        let lambda = Cplx::new(-0.9, 1.4);
        let (_, rep) = verify_eigenpair(&mode, lambda).unwrap();
        assert!(rep.pde_residual < 1e-8, "pde {}", rep.pde_residual);
        assert!(rep.div_residual < 1e-8);
    }
}
