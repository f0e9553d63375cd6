//! Spherical Hankel functions of the first kind at complex argument, via the
//! exact elementary closed form
//!
//! ```text
//! h_l(x) = (-i)^{l+1} (e^{ix}/x) sum_{m=0}^{l} i^m (l+m)! / (m! (l-m)! (2x)^m)
//! ```
//!
//! together with the decaying modified variant `K_l(y) = e^{-y}/y *
//! sum_m c_m y^{-m}` with all-real coefficients, related by
//! `h_l(iy) = (-i)^{l+2} K_l(y)`. The real-coefficient form keeps dispersion
//! relations exactly conjugation-equivariant.

use super::AdsError;
use crate::Cplx;

/// Coefficients `c_m = (l+m)! / (m! (l-m)! 2^m)`.
fn poly_coeffs(l: u32) -> Vec<f64> {
    let l = l as i64;
    let mut c = vec![1.0f64];
    for m in 0..l {
        let prev = *c.last().unwrap();
        c.push(prev * ((l + m + 1) as f64) * ((l - m) as f64) / (2.0 * (m + 1) as f64));
    }
    c
}

/// First-kind spherical Hankel value and derivative at `x != 0`.
pub fn hankel_elem(l: u32, x: Cplx) -> Result<(Cplx, Cplx), AdsError> {
    if x.norm() == 0.0 {
        return Err(AdsError::HankelDomain);
    }
    let h = hankel_value(l, x);
    let dh = if l == 0 {
        -hankel_value(1, x)
    } else {
        hankel_value(l - 1, x) - h * ((l + 1) as f64) / x
    };
    Ok((h, dh))
}

fn hankel_value(l: u32, x: Cplx) -> Cplx {
    let i = Cplx::new(0.0, 1.0);
    let pref = (-i).powu(l + 1) * (i * x).exp() / x;
    let mut sum = Cplx::new(0.0, 0.0);
    let mut ipow = Cplx::new(1.0, 0.0);
    let mut xpow = Cplx::new(1.0, 0.0);
    for c in poly_coeffs(l) {
        // c already carries the 2^{-m} of the (2x)^{-m} factor
        sum += ipow * c / xpow;
        ipow *= i;
        xpow *= x;
    }
    pref * sum
}

/// Decaying radial kernel `K_l(y)` and derivative, real-coefficient in `y`.
///
/// `K_l(y) = e^{-y} sum_m c_m y^{-m-1}`; for `y` on the positive real axis
/// this is real and positive, and `K_l(conj y) = conj K_l(y)` exactly.
pub fn modified_radial(l: u32, y: Cplx) -> Result<(Cplx, Cplx), AdsError> {
    if y.norm() == 0.0 {
        return Err(AdsError::HankelDomain);
    }
    let e = (-y).exp();
    let mut val = Cplx::new(0.0, 0.0);
    let mut der = Cplx::new(0.0, 0.0);
    let mut ypow = y.inv();
    for (m, c) in poly_coeffs(l).into_iter().enumerate() {
        val += ypow * c;
        der += ypow / y * (c * (m as f64 + 1.0));
        ypow /= y;
    }
    Ok((e * val, -e * (val + der)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h0_at_i_is_minus_inverse_e() {
        let (h, _) = hankel_elem(0, Cplx::new(0.0, 1.0)).unwrap();
        assert!((h - Cplx::new(-(1.0f64.exp()).recip(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn h1_matches_explicit_form_on_real_axis() {
        for &x in &[0.3f64, 1.0, 2.7, 9.4] {
            let z = Cplx::new(x, 0.0);
            let (h, _) = hankel_elem(1, z).unwrap();
            let explicit = -(Cplx::new(0.0, 1.0) * z).exp() * (z + Cplx::new(0.0, 1.0)) / (z * z);
            assert!((h - explicit).norm() < 1e-14 * explicit.norm());
        }
    }

    #[test]
    fn satisfies_spherical_bessel_equation() {
        // x^2 h'' + 2x h' + (x^2 - l(l+1)) h = 0, with h'' from the
        // recurrence-differentiated identity h_l'' = d/dx (h_{l-1} - (l+1)/x h_l)
        for l in 0..=5u32 {
            for &x in &[
                Cplx::new(0.9, 0.4),
                Cplx::new(-1.3, 2.0),
                Cplx::new(3.0, -0.7),
                Cplx::new(0.2, 1.5),
            ] {
                let (h, dh) = hankel_elem(l, x).unwrap();
                let ddh = if l == 0 {
                    let (h1, dh1) = hankel_elem(1, x).unwrap();
                    let _ = h1;
                    -dh1
                } else {
                    let (_, dhm1) = hankel_elem(l - 1, x).unwrap();
                    dhm1 + h * ((l + 1) as f64) / (x * x) - dh * ((l + 1) as f64) / x
                };
                let res = x * x * ddh + x * dh * 2.0 + (x * x - Cplx::new((l * (l + 1)) as f64, 0.0)) * h;
                let scale = (x * x * ddh).norm().max((x * x * h).norm()).max(1e-300);
                assert!(res.norm() < 1e-12 * scale, "l={l} x={x} res={}", res.norm() / scale);
            }
        }
    }

    #[test]
    fn modified_radial_consistent_with_hankel() {
        // h_l(i y) = (-i)^{l+2} K_l(y)
        let i = Cplx::new(0.0, 1.0);
        for l in 0..=4u32 {
            for &y in &[Cplx::new(0.8, 0.0), Cplx::new(1.4, -2.2), Cplx::new(0.3, 5.0)] {
                let (h, dh) = hankel_elem(l, i * y).unwrap();
                let (k, dk) = modified_radial(l, y).unwrap();
                let pref = (-i).powu(l + 2);
                assert!((h - pref * k).norm() < 1e-12 * k.norm().max(1e-12), "value l={l}");
                // d/dy h_l(iy) = i h_l'(iy)
                assert!((dh * i - pref * dk).norm() < 1e-12 * dk.norm().max(1e-12), "deriv l={l}");
            }
        }
    }

    #[test]
    fn zero_argument_is_domain_error() {
        assert!(hankel_elem(2, Cplx::new(0.0, 0.0)).is_err());
    }
}
