//! Dense and structured linear-algebra kernels shared by the solver modules.

pub mod arnoldi;
pub mod banded;
pub mod hessenberg;
pub mod sparse;
pub mod woodbury;

use crate::Cplx;
use nalgebra::DMatrix;

/// Orthonormal basis of the columns of `m` via modified Gram-Schmidt with
/// reorthogonalization. Columns with residual norm below `tol` (relative to
/// the original column norm) are dropped.
pub fn orthonormalize(m: &DMatrix<Cplx>, tol: f64) -> DMatrix<Cplx> {
    let n = m.nrows();
    let mut basis: Vec<nalgebra::DVector<Cplx>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let orig = v.norm();
        if orig == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&v);
                v.axpy(-c, q, Cplx::new(1.0, 0.0));
            }
        }
        let nrm = v.norm();
        if nrm > tol * orig {
            basis.push(v / Cplx::new(nrm, 0.0));
        }
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal bases of equal dimension.
///
/// Computed through the sine, `||(I - U U^H) V||_2`, which stays accurate
/// down to machine precision for nearly coincident subspaces (the cosine
/// formulation bottoms out at sqrt(eps)).
pub fn max_principal_angle(u: &DMatrix<Cplx>, v: &DMatrix<Cplx>) -> f64 {
    assert_eq!(u.ncols(), v.ncols(), "subspace dimensions differ");
    if u.ncols() == 0 {
        return 0.0;
    }
    let proj = v - u * (u.adjoint() * v);
    let svd = proj.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    smax.clamp(0.0, 1.0).asin()
}
