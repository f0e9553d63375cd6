//! Shift-invert eigensolves against the assembled generator.

use super::assemble::DiscreteGenerator;
use super::GeneratorError;
use crate::linalg::arnoldi::eigs_shift_invert;
use crate::linalg::woodbury::WoodburyLu;
use crate::Cplx;
use nalgebra::DVector;

#[derive(Clone, Copy, Debug)]
pub struct EigsOptions {
    pub residual_tol: f64,
    pub subspace: usize,
    pub max_starts: usize,
    pub seed: u64,
}

impl Default for EigsOptions {
    fn default() -> Self {
        EigsOptions {
            residual_tol: 1e-8,
            subspace: 60,
            max_starts: 6,
            seed: 1,
        }
    }
}

/// Eigenvalues of the generator nearest `target`, with eigenvectors and true
/// residuals. Degenerate eigenvalues are resolved by restarting the Krylov
/// iteration with fresh start vectors and keeping directions independent of
/// what was already found.
pub fn eigs_near(
    gen: &DiscreteGenerator,
    target: Cplx,
    count: usize,
    opts: &EigsOptions,
) -> Result<Vec<(Cplx, DVector<Cplx>, f64)>, GeneratorError> {
    if target.re >= 0.0 {
        return Err(GeneratorError::Unsupported {
            detail: "eigensolve targets live in the open left half-plane".into(),
        });
    }
    let mut shift = target;
    let mut factor = None;
    for attempt in 0..3 {
        match WoodburyLu::factor(&gen.layout, &gen.triplets, shift) {
            Ok(f) => {
                factor = Some(f);
                break;
            }
            Err(e) => {
                if attempt == 2 {
                    return Err(GeneratorError::FactorizationSingular {
                        detail: format!("target {target}: {e}"),
                    });
                }
                // jitter away from an exact eigenvalue collision
                let j = 1e-7 * target.norm().max(1.0) * (attempt + 1) as f64;
                shift = target + Cplx::new(j, j);
            }
        }
    }
    let factor = factor.unwrap();

    let apply_op = |v: &DVector<Cplx>| factor.solve(v);
    let apply_a = |v: &DVector<Cplx>| gen.apply(v);

    let mut accepted: Vec<(Cplx, DVector<Cplx>, f64)> = Vec::new();
    for start in 0..opts.max_starts {
        if accepted.len() >= count {
            break;
        }
        let pairs = eigs_shift_invert(
            gen.dim(),
            shift,
            count + 2,
            opts.subspace,
            opts.seed + start as u64 * 1000,
            &apply_op,
            &apply_a,
        );
        for p in pairs {
            if accepted.len() >= count {
                break;
            }
            if p.residual > opts.residual_tol {
                continue;
            }
            if p.value.re > 1e-8 {
                return Err(GeneratorError::EigenvalueNotDecaying { lambda: p.value });
            }
            // keep only directions independent of what we already hold
            let mut v = p.vector.clone();
            for (_, q, _) in &accepted {
                let c = q.dotc(&v);
                v.axpy(-c, q, Cplx::new(1.0, 0.0));
            }
            if v.norm() > 0.05 {
                let vn = v.norm();
                accepted.push((p.value, v / Cplx::new(vn, 0.0), p.residual));
            }
        }
    }
    if accepted.is_empty() {
        return Err(GeneratorError::NoConvergence {
            detail: format!("no eigenpair met the residual tolerance near {target}"),
        });
    }
    accepted.sort_by(|a, b| {
        (a.0 - target)
            .norm()
            .partial_cmp(&(b.0 - target).norm())
            .unwrap()
    });
    Ok(accepted)
}
