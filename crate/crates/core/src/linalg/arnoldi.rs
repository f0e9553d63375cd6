//! Shift-invert Arnoldi eigensolver driven by a user-supplied resolvent apply.

use super::hessenberg::hessenberg_eigenvalues;
use crate::Cplx;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub struct RitzPair {
    pub value: Cplx,
    pub vector: DVector<Cplx>,
    /// relative residual of the original operator, ||A v - lambda v|| / ||v||
    pub residual: f64,
}

/// Eigenvalues of A nearest `sigma` via Arnoldi on `op = (A - sigma I)^{-1}`.
///
/// `apply_op` must implement the resolvent apply, `apply_a` the original
/// operator (used only for true residuals). Deterministic for a fixed seed.
pub fn eigs_shift_invert(
    n: usize,
    sigma: Cplx,
    count: usize,
    subspace: usize,
    seed: u64,
    apply_op: &dyn Fn(&DVector<Cplx>) -> DVector<Cplx>,
    apply_a: &dyn Fn(&DVector<Cplx>) -> DVector<Cplx>,
) -> Vec<RitzPair> {
    let m = subspace.min(n).max(count + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v0 = DVector::from_fn(n, |_, _| Cplx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    v0 /= Cplx::new(v0.norm(), 0.0);

    let mut vs: Vec<DVector<Cplx>> = vec![v0];
    let mut h = DMatrix::<Cplx>::zeros(m + 1, m);
    let mut mdim = m;
    for k in 0..m {
        let mut w = apply_op(&vs[k]);
        // modified Gram-Schmidt with one reorthogonalization pass
        for _ in 0..2 {
            for (i, vi) in vs.iter().enumerate() {
                let c = vi.dotc(&w);
                h[(i, k)] += c;
                w.axpy(-c, vi, Cplx::new(1.0, 0.0));
            }
        }
        let nw = w.norm();
        h[(k + 1, k)] = Cplx::new(nw, 0.0);
        if nw < 1e-13 {
            mdim = k + 1;
            break;
        }
        vs.push(w / Cplx::new(nw, 0.0));
    }

    let hm = h.view((0, 0), (mdim, mdim)).into_owned();
    let thetas = hessenberg_eigenvalues(&hm);
    // largest |theta| are the eigenvalues of A nearest sigma
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&a, &b| thetas[b].norm().partial_cmp(&thetas[a].norm()).unwrap());

    let mut out = Vec::new();
    for &idx in order.iter() {
        if out.len() >= count {
            break;
        }
        let theta = thetas[idx];
        if theta.norm() < 1e-300 {
            continue;
        }
        // Ritz vector by inverse iteration on the small Hessenberg block
        let y = hess_eigvec(&hm, theta);
        let mut v = DVector::<Cplx>::zeros(n);
        for (i, vi) in vs.iter().take(mdim).enumerate() {
            v.axpy(y[i], vi, Cplx::new(1.0, 0.0));
        }
        let nv = v.norm();
        if nv < 1e-300 {
            continue;
        }
        v /= Cplx::new(nv, 0.0);
        let lambda = sigma + theta.inv();
        let av = apply_a(&v);
        let res = (&av - &v * lambda).norm();
        out.push(RitzPair {
            value: lambda,
            vector: v,
            residual: res,
        });
    }
    out
}

/// Eigenvector of a small Hessenberg matrix for a computed eigenvalue, by
/// two steps of inverse iteration with a jittered shift.
fn hess_eigvec(hm: &DMatrix<Cplx>, theta: Cplx) -> DVector<Cplx> {
    let mdim = hm.nrows();
    let jitter = 1e-12 * (theta.norm() + 1.0);
    let shifted = hm - DMatrix::identity(mdim, mdim) * (theta + Cplx::new(jitter, jitter));
    let lu = shifted.lu();
    let mut y = DVector::from_element(mdim, Cplx::new(1.0, 0.0));
    for _ in 0..3 {
        if let Some(sol) = lu.solve(&y) {
            let nrm = sol.norm();
            if nrm > 1e-300 && nrm.is_finite() {
                y = sol / Cplx::new(nrm, 0.0);
            } else {
                break;
            }
        } else {
            break;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_eigenvalues_of_diagonal_operator() {
        let n = 50;
        let diag: Vec<Cplx> = (0..n)
            .map(|i| Cplx::new(-(i as f64) * 0.1 - 0.3, (i as f64) * 0.05))
            .collect();
        let sigma = Cplx::new(-0.8, 0.2);
        let apply_a = |v: &DVector<Cplx>| DVector::from_fn(n, |i, _| diag[i] * v[i]);
        let apply_op = |v: &DVector<Cplx>| DVector::from_fn(n, |i, _| v[i] / (diag[i] - sigma));
        let pairs = eigs_shift_invert(n, sigma, 3, 30, 42, &apply_op, &apply_a);
        assert_eq!(pairs.len(), 3);
        for p in &pairs {
            assert!(p.residual < 1e-9, "residual {}", p.residual);
            // the reported value must be one of the true eigenvalues
            let best = diag.iter().map(|d| (d - p.value).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "value off by {}", best);
        }
        // nearest to sigma must be among them
        let mut nearest = diag.clone();
        nearest.sort_by(|a, b| (a - sigma).norm().partial_cmp(&(b - sigma).norm()).unwrap());
        let found_nearest = pairs.iter().any(|p| (p.value - nearest[0]).norm() < 1e-9);
        assert!(found_nearest);
    }
}
