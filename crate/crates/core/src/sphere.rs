//! Unit-sphere sampling, quadrature, and real (vector) spherical harmonics.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Quasi-uniform Fibonacci lattice on S^2.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Unit-sphere samples in dimension `dim`.
///
/// For `dim == 3` this is the Fibonacci lattice, optionally augmented with
/// the coordinate axes `±e_j` ("full sampling": rank drops concentrated on
/// coordinate cones are then hit exactly). Higher dimensions fall back to
/// seeded normalized Gaussians.
pub fn unit_samples(dim: usize, count: usize, include_axes: bool, seed: u64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(count + if include_axes { 2 * dim } else { 0 });
    if dim == 3 {
        for p in fibonacci_sphere(count) {
            out.push(DVector::from_row_slice(&p));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < count {
            let v = DVector::from_fn(dim, |_, _| {
                // Box-Muller
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            });
            let n = v.norm();
            if n > 1e-8 {
                out.push(v / n);
            }
        }
    }
    if include_axes {
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut v = DVector::zeros(dim);
                v[j] = s;
                out.push(v);
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recursion
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // ascending
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    (
        idx.iter().map(|&i| nodes[i]).collect(),
        idx.iter().map(|&i| weights[i]).collect(),
    )
}

/// Product quadrature on S^2: Gauss-Legendre in cos(theta), trapezoid in phi.
/// Exact for spherical polynomials of degree up to roughly `2*nt - 1`.
pub struct SphereQuadrature {
    /// (theta, phi, weight), weights summing to 4*pi
    pub points: Vec<(f64, f64, f64)>,
}

impl SphereQuadrature {
    pub fn new(nt: usize, np: usize) -> Self {
        let (xs, ws) = gauss_legendre(nt);
        let mut points = Vec::with_capacity(nt * np);
        for (x, w) in xs.iter().zip(ws.iter()) {
            let theta = x.acos();
            for k in 0..np {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / np as f64;
                points.push((theta, phi, w * 2.0 * std::f64::consts::PI / np as f64));
            }
        }
        SphereQuadrature { points }
    }
}

/// Normalized associated Legendre values and theta-derivatives,
/// `P[l][m]` for 0 <= m <= l <= lmax, with the 1/sqrt(4 pi) normalization
/// making the real spherical harmonics orthonormal.
fn legendre_normalized(lmax: usize, theta: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let x = theta.cos();
    let s = theta.sin();
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    let mut dp = vec![vec![0.0; lmax + 1]; lmax + 1];
    p[0][0] = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    dp[0][0] = 0.0;
    for m in 1..=lmax {
        let c = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        p[m][m] = c * s * p[m - 1][m - 1];
        dp[m][m] = c * (x * p[m - 1][m - 1] + s * dp[m - 1][m - 1]);
    }
    for m in 0..lmax {
        let l = m + 1;
        let c = (2 * l + 1) as f64 / (2 * l - 1) as f64;
        let a = ((4 * l * l - 1) as f64 / ((l * l - m * m) as f64)).sqrt();
        let _ = c;
        p[l][m] = a * x * p[l - 1][m];
        dp[l][m] = a * (-s * p[l - 1][m] + x * dp[l - 1][m]);
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let a = ((4 * l * l - 1) as f64 / ((l * l - m * m) as f64)).sqrt();
            let b = (((l - 1) * (l - 1) - m * m) as f64 / (4 * (l - 1) * (l - 1) - 1) as f64).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
            dp[l][m] = a * (-s * p[l - 1][m] + x * dp[l - 1][m] - b * dp[l - 2][m]);
        }
    }
    (p, dp)
}

/// Real orthonormal spherical harmonic Y_{l m}(theta, phi) together with its
/// angular derivatives (dY/dtheta, dY/dphi).
pub fn real_ylm(l: u32, m: i32, theta: f64, phi: f64) -> (f64, f64, f64) {
    let lu = l as usize;
    let ma = m.unsigned_abs() as usize;
    assert!(ma <= lu);
    let (p, dp) = legendre_normalized(lu, theta);
    let sqrt2 = std::f64::consts::SQRT_2;
    if m == 0 {
        (p[lu][0], dp[lu][0], 0.0)
    } else if m > 0 {
        let c = (ma as f64 * phi).cos();
        let s = (ma as f64 * phi).sin();
        (
            sqrt2 * p[lu][ma] * c,
            sqrt2 * dp[lu][ma] * c,
            -sqrt2 * p[lu][ma] * ma as f64 * s,
        )
    } else {
        let c = (ma as f64 * phi).cos();
        let s = (ma as f64 * phi).sin();
        (
            sqrt2 * p[lu][ma] * s,
            sqrt2 * dp[lu][ma] * s,
            sqrt2 * p[lu][ma] * ma as f64 * c,
        )
    }
}

/// Orthonormal frame vectors at (theta, phi): radial, theta, phi directions.
pub fn frame(theta: f64, phi: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    (
        [st * cp, st * sp, ct],
        [ct * cp, ct * sp, -st],
        [-sp, cp, 0.0],
    )
}

/// Tangential vector harmonics at a point: `psi` is the normalized gradient
/// harmonic, `phi_v` its 90-degree rotation about the radial direction, and
/// `y` the scalar harmonic value.
pub struct TangentBasis {
    pub y: f64,
    pub psi: [f64; 3],
    pub phi_v: [f64; 3],
}

pub fn tangent_basis(l: u32, m: i32, theta: f64, phi: f64) -> TangentBasis {
    assert!(l >= 1);
    let (y, dyt, dyp) = real_ylm(l, m, theta, phi);
    let (_, et, ep) = frame(theta, phi);
    let s = theta.sin();
    let ssq = (l * (l + 1)) as f64;
    let inv = 1.0 / ssq.sqrt();
    // psi = (dY/dtheta e_theta + dY/dphi / sin(theta) e_phi) / sqrt(l(l+1))
    let a = dyt * inv;
    let b = dyp / s * inv;
    let psi = [
        a * et[0] + b * ep[0],
        a * et[1] + b * ep[1],
        a * et[2] + b * ep[2],
    ];
    // phi_v = r_hat x psi = dY/dtheta e_phi - dY/dphi / sin e_theta
    let phi_v = [
        a * ep[0] - b * et[0],
        a * ep[1] - b * et[1],
        a * ep[2] - b * et[2],
    ];
    TangentBasis { y, psi, phi_v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit() {
        for p in fibonacci_sphere(257) {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        // integral of x^k over [-1,1]
        for k in 0..=15usize {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let expect = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - expect).abs() < 1e-13, "k={k} got {got}");
        }
    }

    #[test]
    fn spherical_harmonics_orthonormal() {
        let quad = SphereQuadrature::new(12, 25);
        let modes: Vec<(u32, i32)> = (0..=4u32)
            .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
            .collect();
        for (i, &(l1, m1)) in modes.iter().enumerate() {
            for &(l2, m2) in modes.iter().skip(i) {
                let s: f64 = quad
                    .points
                    .iter()
                    .map(|&(t, p, w)| real_ylm(l1, m1, t, p).0 * real_ylm(l2, m2, t, p).0 * w)
                    .sum();
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!(
                    (s - expect).abs() < 1e-10,
                    "({l1},{m1})x({l2},{m2}) -> {s}"
                );
            }
        }
    }

    #[test]
    fn tangent_harmonics_orthonormal_and_orthogonal() {
        let quad = SphereQuadrature::new(14, 29);
        let modes: Vec<(u32, i32)> = (1..=3u32)
            .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
            .collect();
        let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        for &(l1, m1) in &modes {
            for &(l2, m2) in &modes {
                let (mut pp, mut ff, mut pf) = (0.0, 0.0, 0.0);
                for &(t, p, w) in &quad.points {
                    let b1 = tangent_basis(l1, m1, t, p);
                    let b2 = tangent_basis(l2, m2, t, p);
                    pp += dot(&b1.psi, &b2.psi) * w;
                    ff += dot(&b1.phi_v, &b2.phi_v) * w;
                    pf += dot(&b1.psi, &b2.phi_v) * w;
                }
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!((pp - expect).abs() < 1e-9, "psi ({l1},{m1})({l2},{m2}) {pp}");
                assert!((ff - expect).abs() < 1e-9, "phi ({l1},{m1})({l2},{m2}) {ff}");
                assert!(pf.abs() < 1e-9, "cross ({l1},{m1})({l2},{m2}) {pf}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for &(l, m) in &[(1u32, 0i32), (2, 1), (3, -2), (4, 4)] {
            for &(t, p) in &[(0.7, 1.1), (1.9, 4.0), (2.6, 0.3)] {
                let (_, dyt, dyp) = real_ylm(l, m, t, p);
                let num_t = (real_ylm(l, m, t + h, p).0 - real_ylm(l, m, t - h, p).0) / (2.0 * h);
                let num_p = (real_ylm(l, m, t, p + h).0 - real_ylm(l, m, t, p - h).0) / (2.0 * h);
                assert!((dyt - num_t).abs() < 1e-7, "dtheta l={l} m={m}");
                assert!((dyp - num_p).abs() < 1e-7, "dphi l={l} m={m}");
            }
        }
    }
}
