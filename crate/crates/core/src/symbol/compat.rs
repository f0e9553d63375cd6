//! Compatibility matrix polynomial and ellipticity diagnostics.
//!
//! From the characteristic factorization `det(zI - A(xi)) = sum_j c_j(xi)
//! z^{j + d0}` the matrix polynomial `Q(xi) = sum_j c_j(xi) A(xi)^j`
//! satisfies `Ker Q(xi) = Range A(xi)` for `xi != 0` and `Q A^{d0} = 0`
//! identically. The augmented symbol `(tau I - A)^{4d} + Q^2` is elliptic
//! away from the characteristic speeds.

use super::poly::{MultiPoly, PolyMatrix};
use super::spectral::SymbolSpectralData;
use super::system::SymmetricSystem;
use super::SymbolError;
use crate::Cplx;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

fn monomials(nvars: usize, degree: usize) -> Vec<Vec<u16>> {
    fn rec(nvars: usize, degree: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if prefix.len() == nvars - 1 {
            prefix.push(degree as u16);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for d in 0..=degree {
            prefix.push(d as u16);
            rec(nvars, degree - d, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, degree, &mut Vec::new(), &mut out);
    out
}

/// Coefficients (low to high) of `prod_i (z - mu_i)`.
fn poly_from_roots(mu: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; mu.len() + 1];
    c[0] = 1.0;
    for (k, &m) in mu.iter().enumerate() {
        let mut next = vec![0.0; mu.len() + 1];
        for j in 0..=k {
            next[j] -= m * c[j];
            next[j + 1] += c[j];
        }
        c = next;
    }
    c
}

/// Recover the polynomials `c_0(xi) .. c_{2d}(xi)` by interpolation of
/// numerically computed characteristic polynomials on random unit vectors.
pub fn char_poly_coeffs(
    sys: &SymmetricSystem,
    data: &SymbolSpectralData,
) -> Result<Vec<MultiPoly>, SymbolError> {
    let d0 = data.d0;
    let td = 2 * data.d;
    let n = sys.n;
    let max_basis = monomials(n, td).len();

    // deterministic integer lattice nodes: well-conditioned Vandermonde and
    // exact recovery of small-integer coefficient polynomials
    let mut lattice: Vec<DVector<f64>> = Vec::new();
    let side = 5i64; // coordinates in {-2,...,2}
    let total = side.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut v = DVector::zeros(n);
        for k in 0..n {
            v[k] = ((c % side) - side / 2) as f64;
            c /= side;
        }
        if v.norm() > 0.0 {
            lattice.push(v);
        }
    }
    // interleave holdout points through the lattice
    let mut fit_nodes = Vec::new();
    let mut holdout_nodes = Vec::new();
    for (k, v) in lattice.into_iter().enumerate() {
        if k % 7 == 3 {
            holdout_nodes.push(v);
        } else {
            fit_nodes.push(v);
        }
    }
    assert!(
        fit_nodes.len() >= 2 * max_basis,
        "lattice too small for degree {td} in {n} variables"
    );
    let n_fit = fit_nodes.len();
    let nodes: Vec<DVector<f64>> = fit_nodes.into_iter().chain(holdout_nodes).collect();

    // characteristic coefficients at every node
    let mut coeff_samples: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
    for xi in &nodes {
        let a = sys.eval_symbol(xi).expect("dims");
        let se = a.symmetric_eigen();
        let mu: Vec<f64> = se.eigenvalues.iter().copied().collect();
        let c = poly_from_roots(&mu);
        coeff_samples.push(c);
    }
    let scale = coeff_samples
        .iter()
        .flat_map(|c| c.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(1.0);

    // powers below d0 must vanish identically under constant rank
    for (s, c) in coeff_samples.iter().enumerate() {
        for k in 0..d0 {
            if c[k].abs() > 1e-9 * scale {
                return Err(SymbolError::InterpolationFailure {
                    detail: format!(
                        "characteristic coefficient of z^{k} is {:.3e} at node {s}; kernel dimension assumption violated",
                        c[k]
                    ),
                });
            }
        }
    }

    let mut out = Vec::with_capacity(td + 1);
    for j in 0..=td {
        let degree = td - j;
        let basis = monomials(n, degree);
        let mut v = DMatrix::zeros(n_fit, basis.len());
        let mut rhs = DVector::zeros(n_fit);
        for (row, xi) in nodes.iter().take(n_fit).enumerate() {
            for (col, e) in basis.iter().enumerate() {
                let mut t = 1.0;
                for (x, &p) in xi.iter().zip(e.iter()) {
                    for _ in 0..p {
                        t *= x;
                    }
                }
                v[(row, col)] = t;
            }
            rhs[row] = coeff_samples[row][j + d0];
        }
        let svd = v.svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| SymbolError::InterpolationFailure { detail: e.to_string() })?;
        let poly = MultiPoly::from_terms(
            n,
            basis
                .iter()
                .cloned()
                .zip(sol.iter().copied())
                .filter(|(_, c)| c.abs() > 1e-12 * scale),
        );
        // held-out validation
        for (row, xi) in nodes.iter().enumerate().skip(n_fit) {
            let want = coeff_samples[row][j + d0];
            let got = poly.eval(xi.as_slice());
            if (want - got).abs() > 1e-10 * scale {
                return Err(SymbolError::InterpolationFailure {
                    detail: format!(
                        "held-out residual {:.3e} for coefficient {j} (degree {degree})",
                        (want - got).abs()
                    ),
                });
            }
        }
        out.push(poly);
    }
    Ok(out)
}

/// Assemble `Q(xi) = sum_j c_j(xi) A(xi)^j` by exact polynomial-matrix
/// arithmetic and verify `Q A^{d0} = 0` coefficientwise.
pub fn build_q(
    sys: &SymmetricSystem,
    coeffs: &[MultiPoly],
    data: &SymbolSpectralData,
) -> Result<PolyMatrix, SymbolError> {
    let a = sys.symbol_matrix();
    let mut powers = vec![PolyMatrix::identity(sys.n, sys.r)];
    for k in 1..coeffs.len() {
        let prev = powers[k - 1].clone();
        powers.push(prev.matmul(&a));
    }
    let mut q = PolyMatrix::zeros(sys.n, sys.r, sys.r);
    for (j, c) in coeffs.iter().enumerate() {
        q = q.add(&powers[j].scale_poly(c));
    }
    // cancellation dust is meaningless below the assembly scale; dropping it
    // makes a construction that degenerates to zero exactly zero
    let assembly_scale = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c.max_abs_coeff() * powers[j].max_abs_coeff().max(1.0))
        .fold(0.0, f64::max);
    q.prune_abs(1e-10 * assembly_scale);
    // Cayley-Hamilton identity: Q(xi) A(xi)^{d0} vanishes as a polynomial
    let mut check = q.clone();
    for _ in 0..data.d0 {
        check = check.matmul(&a);
    }
    let residual = check.max_abs_coeff();
    let scale = q.max_abs_coeff().max(1.0);
    if residual > 1e-9 * scale {
        return Err(SymbolError::CayleyHamiltonResidual { residual, scale });
    }
    Ok(q)
}

/// The divergence-type first-order compatibility symbol for a 6-component
/// field split into two 3-vectors: `Q(xi)(E, B) = (<xi, E>, <xi, B>)`.
pub fn divergence_pair_symbol() -> PolyMatrix {
    let mut q = PolyMatrix::zeros(3, 2, 6);
    for j in 0..3 {
        *q.at_mut(0, j) = MultiPoly::var(3, j);
        *q.at_mut(1, 3 + j) = MultiPoly::var(3, j);
    }
    q
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactSequenceReport {
    pub samples_checked: usize,
    pub max_principal_angle: f64,
    pub kernel_dim: usize,
    pub range_dim: usize,
}

/// At each nonzero sample, compare `Ker Q(xi)` with `Range A(xi)`:
/// orthonormal bases via SVD, then the largest principal angle.
pub fn verify_exact_sequence(
    sys: &SymmetricSystem,
    q: &PolyMatrix,
    xis: &[DVector<f64>],
    angle_tol: f64,
) -> Result<ExactSequenceReport, SymbolError> {
    let mut max_angle: f64 = 0.0;
    let mut dims = None;
    for xi in xis {
        let norm = xi.norm();
        assert!(norm > 0.0, "exact-sequence samples must be nonzero");
        let a = sys.eval_symbol(xi).expect("dims");
        let qm = q.eval(xi.as_slice());

        // ranks from singular values (backward stable); subspace bases from
        // the symmetric eigensolver, whose eigenvectors are far more accurate
        // for the well-separated zero clusters arising here
        let svd_a = a.clone().svd(false, false);
        let smax_a = svd_a.singular_values.iter().fold(0.0f64, |x, &s| x.max(s));
        let rank_a = svd_a
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-9 * smax_a.max(1e-300))
            .count();
        let ea = a.symmetric_eigen();
        let mut order_a: Vec<usize> = (0..sys.r).collect();
        order_a.sort_by(|&p, &qq| {
            ea.eigenvalues[qq]
                .abs()
                .partial_cmp(&ea.eigenvalues[p].abs())
                .unwrap()
        });
        let mut range = DMatrix::zeros(sys.r, rank_a);
        for (c, &i) in order_a.iter().take(rank_a).enumerate() {
            range.set_column(c, &ea.eigenvectors.column(i));
        }

        let svd_q = qm.clone().svd(false, false);
        let smax_q = svd_q.singular_values.iter().fold(0.0f64, |x, &s| x.max(s));
        let rank_q = if smax_q == 0.0 {
            0
        } else {
            svd_q
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-9 * smax_q)
                .count()
        };
        let gram = qm.transpose() * &qm;
        let eg = gram.symmetric_eigen();
        let mut order_q: Vec<usize> = (0..sys.r).collect();
        order_q.sort_by(|&p, &qq| {
            eg.eigenvalues[p]
                .abs()
                .partial_cmp(&eg.eigenvalues[qq].abs())
                .unwrap()
        });
        let mut kernel = DMatrix::zeros(sys.r, sys.r - rank_q);
        for (c, &i) in order_q.iter().take(sys.r - rank_q).enumerate() {
            kernel.set_column(c, &eg.eigenvectors.column(i));
        }

        if kernel.ncols() != range.ncols() {
            return Err(SymbolError::ExactSequenceFailure {
                xi: format!("{:?}", xi.as_slice()),
                detail: format!(
                    "dim Ker Q = {} but rank A = {}",
                    kernel.ncols(),
                    range.ncols()
                ),
            });
        }
        dims = Some((kernel.ncols(), range.ncols()));

        let to_c = |m: &DMatrix<f64>| m.map(|x| Cplx::new(x, 0.0));
        let angle = crate::linalg::max_principal_angle(&to_c(&kernel), &to_c(&range));
        max_angle = max_angle.max(angle);
        if angle > angle_tol {
            return Err(SymbolError::ExactSequenceFailure {
                xi: format!("{:?}", xi.as_slice()),
                detail: format!("principal angle {angle:.3e} exceeds {angle_tol:.1e}"),
            });
        }
    }
    let (kernel_dim, range_dim) = dims.unwrap_or((0, 0));
    Ok(ExactSequenceReport {
        samples_checked: xis.len(),
        max_principal_angle: max_angle,
        kernel_dim,
        range_dim,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub min_sv_at_tau0: f64,
    pub per_tau: Vec<(f64, f64)>,
    pub speed_bound_ok: bool,
    pub flagged_taus: Vec<f64>,
}

fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Sample the augmented symbol `l(tau, xi) = (tau I - A(xi))^{4d} + Q(xi)^2`
/// on unit `xi` and report its smallest singular values per `tau`.
///
/// Real `tau` with `|tau| < v_min (1 - margin)` must be non-characteristic;
/// taus on which a singular sample is found are flagged.
pub fn check_l_ellipticity(
    sys: &SymmetricSystem,
    q: &PolyMatrix,
    data: &SymbolSpectralData,
    tau_grid: &[f64],
    xis: &[DVector<f64>],
    margin: f64,
) -> EllipticityReport {
    assert_eq!(q.rows, sys.r, "augmented symbol needs the square Q");
    assert_eq!(q.cols, sys.r);
    let p4d = 4 * data.d;
    let mut per_tau = Vec::with_capacity(tau_grid.len() + 1);
    let mut flagged = Vec::new();
    let mut min0 = f64::INFINITY;
    let mut taus: Vec<f64> = vec![0.0];
    taus.extend_from_slice(tau_grid);
    for (k, &tau) in taus.iter().enumerate() {
        let mut min_sv = f64::INFINITY;
        let mut scale: f64 = 0.0;
        for xi in xis {
            let a = sys.eval_symbol(xi).expect("dims");
            let qm = q.eval(xi.as_slice());
            let shifted = DMatrix::identity(sys.r, sys.r) * tau - &a;
            let l = matrix_power(&shifted, p4d) + &qm * &qm;
            let svd = l.svd(false, false);
            let smin = svd.singular_values.iter().fold(f64::INFINITY, |x, &s| x.min(s));
            let smax = svd.singular_values.iter().fold(0.0f64, |x, &s| x.max(s));
            min_sv = min_sv.min(smin);
            scale = scale.max(smax);
        }
        if k == 0 {
            min0 = min_sv;
        } else {
            per_tau.push((tau, min_sv));
            if min_sv <= 1e-10 * scale.max(1.0) {
                flagged.push(tau);
            }
        }
    }
    let speed_bound_ok = flagged
        .iter()
        .all(|t| t.abs() >= data.v_min * (1.0 - margin) - 1e-12);
    EllipticityReport {
        min_sv_at_tau0: min0,
        per_tau,
        speed_bound_ok,
        flagged_taus: flagged,
    }
}

/// Full certification pipeline for one system: spectral data, compatibility
/// polynomial, exact sequence on random unit samples, ellipticity scan.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolCertification {
    pub d0: usize,
    pub d: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub rank_certified: bool,
    pub exact_sequence_max_angle: f64,
    pub ellipticity_min_sv: f64,
    pub q_total_degree: usize,
}

pub fn certify(
    sys: &SymmetricSystem,
    opts: &super::spectral::SpectralOptions,
    exact_sequence_samples: usize,
) -> Result<SymbolCertification, SymbolError> {
    let data = super::spectral::spectral_data(sys, opts)?;
    let coeffs = char_poly_coeffs(sys, &data)?;
    let q = build_q(sys, &coeffs, &data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xabcd);
    let xis: Vec<DVector<f64>> = (0..exact_sequence_samples)
        .map(|_| {
            let v = DVector::from_fn(sys.n, |_, _| {
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            });
            let n = v.norm();
            v / n
        })
        .collect();
    let seq = verify_exact_sequence(sys, &q, &xis, 1e-8)?;
    let tau_grid: Vec<f64> = (1..20).map(|k| k as f64 * data.v_min / 20.0).collect();
    let ell = check_l_ellipticity(sys, &q, &data, &tau_grid, &xis[..xis.len().min(32)], 1e-9);
    Ok(SymbolCertification {
        d0: data.d0,
        d: data.d,
        v_min: data.v_min,
        v_max: data.v_max,
        rank_certified: true,
        exact_sequence_max_angle: seq.max_principal_angle,
        ellipticity_min_sv: ell.min_sv_at_tau0,
        q_total_degree: q.total_degree(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::spectral::{spectral_data, SpectralOptions};
    use crate::symbol::system::{maxwell, synthetic_elliptic, synthetic_rank4};

    fn maxwell_setup() -> (SymmetricSystem, SymbolSpectralData, Vec<MultiPoly>) {
        let sys = maxwell();
        let data = spectral_data(&sys, &SpectralOptions { samples: 200, ..Default::default() }).unwrap();
        let coeffs = char_poly_coeffs(&sys, &data).unwrap();
        (sys, data, coeffs)
    }

    #[test]
    fn maxwell_characteristic_coefficients() {
        let (_, _, coeffs) = maxwell_setup();
        assert_eq!(coeffs.len(), 5);
        let xi = [0.3, -0.4, 1.2];
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        // det(zI - A) = z^2 (z^2 - |xi|^2)^2: c = (|xi|^4, 0, -2|xi|^2, 0, 1)
        assert!((coeffs[0].eval(&xi) - n2 * n2).abs() < 1e-9);
        assert!(coeffs[1].eval(&xi).abs() < 1e-9);
        assert!((coeffs[2].eval(&xi) + 2.0 * n2).abs() < 1e-9);
        assert!(coeffs[3].eval(&xi).abs() < 1e-9);
        assert!((coeffs[4].eval(&xi) - 1.0).abs() < 1e-9);
        // odd coefficients vanish as polynomials, c4 is the constant 1
        assert!(coeffs[1].is_zero() || coeffs[1].max_abs_coeff() < 1e-9);
        assert!(coeffs[3].is_zero() || coeffs[3].max_abs_coeff() < 1e-9);
        assert_eq!(coeffs[4].total_degree(), 0);
    }

    #[test]
    fn maxwell_q_matches_closed_form() {
        let (sys, data, coeffs) = maxwell_setup();
        let q = build_q(&sys, &coeffs, &data).unwrap();
        assert_eq!(q.total_degree(), 4);
        let xi = DVector::from_vec(vec![0.7, 0.1, -0.5]);
        let a = sys.eval_symbol(&xi).unwrap();
        let n2 = xi.norm_squared();
        let inner = &a * &a - DMatrix::identity(6, 6) * n2;
        let closed = &inner * &inner;
        let got = q.eval(xi.as_slice());
        assert!((got - closed).norm() < 1e-9);
    }

    #[test]
    fn exact_sequence_certifies_built_and_divergence_q() {
        let (sys, data, coeffs) = maxwell_setup();
        let q = build_q(&sys, &coeffs, &data).unwrap();
        let xis: Vec<DVector<f64>> = crate::sphere::fibonacci_sphere(100)
            .iter()
            .map(|p| DVector::from_row_slice(p))
            .collect();
        let rep = verify_exact_sequence(&sys, &q, &xis, 1e-8).unwrap();
        assert!(rep.max_principal_angle < 1e-10, "angle {}", rep.max_principal_angle);
        assert_eq!(rep.kernel_dim, 4);

        let qdiv = divergence_pair_symbol();
        let rep2 = verify_exact_sequence(&sys, &qdiv, &xis, 1e-8).unwrap();
        assert!(rep2.max_principal_angle < 1e-10);
        assert_eq!(rep2.kernel_dim, 4);
    }

    #[test]
    fn identity_q_fails_exact_sequence() {
        let sys = maxwell();
        let q = PolyMatrix::identity(3, 6);
        let xis = vec![DVector::from_vec(vec![1.0, 0.0, 0.0])];
        assert!(verify_exact_sequence(&sys, &q, &xis, 1e-8).is_err());
    }

    #[test]
    fn ellipticity_reports_unit_floor_and_characteristic_speed() {
        let (sys, data, coeffs) = maxwell_setup();
        let q = build_q(&sys, &coeffs, &data).unwrap();
        let xis: Vec<DVector<f64>> = crate::sphere::fibonacci_sphere(64)
            .iter()
            .map(|p| DVector::from_row_slice(p))
            .collect();
        let rep = check_l_ellipticity(&sys, &q, &data, &[0.5, 1.0], &xis, 0.0);
        assert!((rep.min_sv_at_tau0 - 1.0).abs() < 1e-8, "min sv {}", rep.min_sv_at_tau0);
        // tau = 0.5 below the slowest speed: not characteristic
        assert!(!rep.flagged_taus.contains(&0.5));
        // tau = 1.0 is characteristic along aligned xi
        assert!(rep.flagged_taus.contains(&1.0));
        assert!(rep.speed_bound_ok);
    }

    #[test]
    fn elliptic_system_q_degenerates_to_zero() {
        // full-rank symbol: the construction yields Q = 0 by Cayley-Hamilton
        // and the sequence is trivially exact (kernel = range = everything)
        let sys = synthetic_elliptic(None, 1.0);
        let data = spectral_data(&sys, &SpectralOptions { samples: 100, ..Default::default() }).unwrap();
        assert_eq!(data.d0, 0);
        let coeffs = char_poly_coeffs(&sys, &data).unwrap();
        let q = build_q(&sys, &coeffs, &data).unwrap();
        assert!(q.max_abs_coeff() < 1e-9);
        let xis = vec![DVector::from_vec(vec![0.6, -0.8, 0.0])];
        let rep = verify_exact_sequence(&sys, &q, &xis, 1e-8).unwrap();
        assert_eq!(rep.kernel_dim, 4);
        assert_eq!(rep.range_dim, 4);
    }

    #[test]
    fn brute_force_kernel_range_agreement_on_synthetic_systems() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..4 {
            let g = DMatrix::from_fn(6, 6, |_, _| rng.gen::<f64>() - 0.5);
            let o = g.qr().q();
            let speed = 0.5 + rng.gen::<f64>();
            let sys = synthetic_rank4(Some(&o), speed);
            let data = spectral_data(&sys, &SpectralOptions { samples: 120, ..Default::default() }).unwrap();
            assert_eq!(data.d0, 2, "trial {trial}");
            let coeffs = char_poly_coeffs(&sys, &data).unwrap();
            let q = build_q(&sys, &coeffs, &data).unwrap();
            let xis: Vec<DVector<f64>> = (0..50)
                .map(|_| {
                    let v = DVector::from_fn(3, |_, _| rng.gen::<f64>() - 0.5);
                    let n = v.norm();
                    v / n
                })
                .collect();
            let rep = verify_exact_sequence(&sys, &q, &xis, 1e-8).unwrap();
            assert!(rep.max_principal_angle < 1e-8);
            assert_eq!(rep.kernel_dim, 4);
        }
    }
}
