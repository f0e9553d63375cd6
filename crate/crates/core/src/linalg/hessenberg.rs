//! Complex eigenvalues via Hessenberg reduction and the shifted QR iteration.
//!
//! Small dense problems only (Arnoldi projections, companion matrices,
//! contour-projector compressions). Single complex Wilkinson shift with
//! Givens rotations; deflation on negligible subdiagonals.

use crate::Cplx;
use nalgebra::{DMatrix, DVector};

/// 2x2 unitary that maps (a, b) to (r, 0).
///
/// Returns rows ((ca, cb), (-b, a))/rho so that the first row conjugated is
/// applied from the left.
fn givens(a: Cplx, b: Cplx) -> (Cplx, Cplx, f64) {
    let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a, b, rho)
}

/// Apply G^H from the left to rows (i, i+1) over columns `cols`.
fn apply_left(h: &mut DMatrix<Cplx>, i: usize, g: (Cplx, Cplx, f64), cols: std::ops::Range<usize>) {
    let (a, b, rho) = g;
    if rho == 0.0 {
        return;
    }
    for j in cols {
        let x = h[(i, j)];
        let y = h[(i + 1, j)];
        h[(i, j)] = (a.conj() * x + b.conj() * y) / rho;
        h[(i + 1, j)] = (-b * x + a * y) / rho;
    }
}

/// Apply G from the right to columns (i, i+1) over rows `rows`.
fn apply_right(h: &mut DMatrix<Cplx>, i: usize, g: (Cplx, Cplx, f64), rows: std::ops::Range<usize>) {
    let (a, b, rho) = g;
    if rho == 0.0 {
        return;
    }
    for r in rows {
        let x = h[(r, i)];
        let y = h[(r, i + 1)];
        h[(r, i)] = (x * a + y * b) / rho;
        h[(r, i + 1)] = (-x * b.conj() + y * a.conj()) / rho;
    }
}

fn wilkinson_shift(h: &DMatrix<Cplx>, hi: usize) -> Cplx {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr2 = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let e1 = tr2 + disc;
    let e2 = tr2 - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Eigenvalues of an upper Hessenberg complex matrix, in no particular order.
///
/// Panics if the iteration fails to deflate within the iteration budget,
/// which for shifted QR on Hessenberg matrices indicates corrupted input
/// (NaNs or similar).
pub fn hessenberg_eigenvalues(h0: &DMatrix<Cplx>) -> Vec<Cplx> {
    let n = h0.nrows();
    assert_eq!(n, h0.ncols());
    if n == 0 {
        return Vec::new();
    }
    let mut h = h0.clone();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters_at_hi = 0usize;
    let budget = 60 * n + 200;
    let mut total = 0usize;

    loop {
        // deflate tiny subdiagonals
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= f64::EPSILON * s {
                h[(lo, lo - 1)] = Cplx::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs.push(h[(hi, hi)]);
            if hi == 0 {
                break;
            }
            hi -= 1;
            iters_at_hi = 0;
            continue;
        }
        if lo + 1 == hi && h[(hi, hi - 1)].norm() <= f64::EPSILON * (h[(lo, lo)].norm() + h[(hi, hi)].norm()).max(1.0) {
            // handled by the deflation loop next round
        }

        total += 1;
        iters_at_hi += 1;
        assert!(total < budget, "QR iteration failed to converge");

        let mut mu = wilkinson_shift(&h, hi);
        if iters_at_hi % 12 == 0 {
            // exceptional shift to break rare cycles
            mu = h[(hi, hi)] + Cplx::new(h[(hi, hi - 1)].norm(), h[(hi, hi - 1)].norm());
        }

        // explicit shifted QR sweep on the active block [lo..=hi]
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let g = givens(h[(i, i)], h[(i + 1, i)]);
            apply_left(&mut h, i, g, i..hi + 1);
            h[(i + 1, i)] = Cplx::new(0.0, 0.0);
            rots.push(g);
        }
        for (i, g) in (lo..hi).zip(rots) {
            let top = lo;
            apply_right(&mut h, i, g, top..(i + 2).min(hi + 1));
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    eigs
}

/// Reduce a dense complex matrix to upper Hessenberg form by Householder
/// similarity and return its eigenvalues.
pub fn eigenvalues(m: &DMatrix<Cplx>) -> Vec<Cplx> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n <= 1 {
        return m.iter().take(n).copied().collect();
    }
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal
        let mut x = DVector::<Cplx>::zeros(n - k - 1);
        for i in 0..n - k - 1 {
            x[i] = h[(k + 1 + i, k)];
        }
        let alpha = x.norm();
        if alpha <= 1e-300 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Cplx::new(1.0, 0.0)
        };
        let mut v = x.clone();
        v[0] += phase * alpha;
        let vn = v.norm();
        if vn <= 1e-300 {
            continue;
        }
        let v = v / Cplx::new(vn, 0.0);
        // H := (I - 2vv^H) H (I - 2vv^H) on the trailing block
        for j in 0..n {
            let mut dot = Cplx::new(0.0, 0.0);
            for i in 0..v.len() {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..v.len() {
                let t = v[i] * dot * 2.0;
                h[(k + 1 + i, j)] -= t;
            }
        }
        for r in 0..n {
            let mut dot = Cplx::new(0.0, 0.0);
            for i in 0..v.len() {
                dot += h[(r, k + 1 + i)] * v[i];
            }
            for i in 0..v.len() {
                let t = dot * v[i].conj() * 2.0;
                h[(r, k + 1 + i)] -= t;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Cplx::new(0.0, 0.0);
        }
    }
    hessenberg_eigenvalues(&h)
}

/// Roots of the polynomial `c_0 + c_1 z + ... + c_d z^d` via the Frobenius
/// companion matrix. Leading coefficients below `1e-14 * max|c|` are trimmed.
pub fn polynomial_roots(coeffs: &[Cplx]) -> Vec<Cplx> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut c: Vec<Cplx> = coeffs.to_vec();
    while let Some(last) = c.last() {
        if last.norm() <= 1e-14 * scale && c.len() > 1 {
            c.pop();
        } else {
            break;
        }
    }
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let mut h = DMatrix::<Cplx>::zeros(d, d);
    for j in 0..d {
        h[(0, j)] = -c[d - 1 - j] / lead;
    }
    for i in 1..d {
        h[(i, i - 1)] = Cplx::new(1.0, 0.0);
    }
    hessenberg_eigenvalues(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sorted_by_re(mut v: Vec<Cplx>) -> Vec<Cplx> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn diagonal_matrix_eigenvalues() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Cplx::new(1.0, 0.0),
            Cplx::new(-2.0, 3.0),
            Cplx::new(0.5, -0.5),
        ]));
        let eigs = sorted_by_re(eigenvalues(&m));
        let expect = sorted_by_re(vec![
            Cplx::new(1.0, 0.0),
            Cplx::new(-2.0, 3.0),
            Cplx::new(0.5, -0.5),
        ]);
        for (a, b) in eigs.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn companion_roots_of_known_polynomial() {
        // (z-1)(z-2)(z+3i) = z^3 + (-3+3i) z^2 + (2-9i) z + 6i
        let coeffs = vec![
            Cplx::new(0.0, 6.0),
            Cplx::new(2.0, -9.0),
            Cplx::new(-3.0, 3.0),
            Cplx::new(1.0, 0.0),
        ];
        let roots = sorted_by_re(polynomial_roots(&coeffs));
        let expect = sorted_by_re(vec![
            Cplx::new(1.0, 0.0),
            Cplx::new(2.0, 0.0),
            Cplx::new(0.0, -3.0),
        ]);
        for (a, b) in roots.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-10);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_matrix_trace_and_det_match() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 5, 9, 17] {
            let m = DMatrix::from_fn(n, n, |_, _| {
                Cplx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let eigs = eigenvalues(&m);
            assert_eq!(eigs.len(), n);
            let tr: Cplx = (0..n).map(|i| m[(i, i)]).sum();
            let es: Cplx = eigs.iter().sum();
            assert_abs_diff_eq!(tr.re, es.re, epsilon = 1e-9 * (n as f64));
            assert_abs_diff_eq!(tr.im, es.im, epsilon = 1e-9 * (n as f64));
            let det = m.clone().lu().determinant();
            let prod: Cplx = eigs.iter().product();
            assert_abs_diff_eq!(det.norm(), prod.norm(), epsilon = 1e-8 * det.norm().max(1.0));
        }
    }
}
