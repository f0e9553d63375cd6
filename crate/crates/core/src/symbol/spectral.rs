//! Spectral data of the symbol on the unit sphere: kernel dimension,
//! propagation speeds, eigenbases.

use super::system::SymmetricSystem;
use super::SymbolError;
use crate::sphere::unit_samples;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    pub samples: usize,
    /// augment the lattice with the coordinate axes (detects rank drops on
    /// coordinate cones exactly)
    pub include_axes: bool,
    /// relative threshold classifying an eigenvalue as zero, scaled by the
    /// largest |eigenvalue| over all samples
    pub rank_rel_tol: f64,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            samples: 1000,
            include_axes: true,
            rank_rel_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Eigendata of `A(-omega)` at one sphere sample: positive eigenvalues in
/// decreasing order and the full eigenbasis (columns ordered to match the
/// full eigenvalue list, ascending).
#[derive(Clone, Debug)]
pub struct SpeedSample {
    pub omega: DVector<f64>,
    pub speeds: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub basis: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct SymbolSpectralData {
    pub d0: usize,
    pub d: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub samples: Vec<SpeedSample>,
}

/// Certify constant kernel dimension by dense sampling and extract speeds.
pub fn spectral_data(
    sys: &SymmetricSystem,
    opts: &SpectralOptions,
) -> Result<SymbolSpectralData, SymbolError> {
    assert!(opts.samples >= 1, "need at least one sample");
    let omegas = unit_samples(sys.n, opts.samples, opts.include_axes, opts.seed);

    struct Raw {
        omega: DVector<f64>,
        eigenvalues: Vec<f64>,
        basis: DMatrix<f64>,
    }
    let raws: Vec<Raw> = omegas
        .par_iter()
        .map(|w| {
            let a = sys.eval_symbol(&(-w)).expect("dimension checked");
            let se = a.symmetric_eigen();
            let mut idx: Vec<usize> = (0..sys.r).collect();
            idx.sort_by(|&p, &q| se.eigenvalues[p].partial_cmp(&se.eigenvalues[q]).unwrap());
            let eigenvalues: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
            let mut basis = DMatrix::zeros(sys.r, sys.r);
            for (c, &i) in idx.iter().enumerate() {
                basis.set_column(c, &se.eigenvectors.column(i));
            }
            Raw {
                omega: w.clone(),
                eigenvalues,
                basis,
            }
        })
        .collect();

    let global_max = raws
        .iter()
        .flat_map(|r| r.eigenvalues.iter().map(|e| e.abs()))
        .fold(0.0, f64::max);
    if global_max == 0.0 {
        return Err(SymbolError::DegenerateSymbol {
            omega: format!("{:?}", raws[0].omega.as_slice()),
        });
    }
    let tol = opts.rank_rel_tol * global_max;

    let kernel_counts: Vec<usize> = raws
        .iter()
        .map(|r| r.eigenvalues.iter().filter(|e| e.abs() < tol).count())
        .collect();
    let d0 = kernel_counts[0];
    if let Some(bad) = kernel_counts.iter().position(|&c| c != d0) {
        return Err(SymbolError::ConstantRankViolation {
            d0_first: d0,
            omega_first: format!("{:?}", raws[0].omega.as_slice()),
            d0_second: kernel_counts[bad],
            omega_second: format!("{:?}", raws[bad].omega.as_slice()),
        });
    }
    if d0 == sys.r {
        return Err(SymbolError::DegenerateSymbol {
            omega: format!("{:?}", raws[0].omega.as_slice()),
        });
    }
    if (sys.r - d0) % 2 != 0 {
        // cannot happen for a certified constant-rank symbol on a connected
        // sphere, but guard against tolerance misclassification
        return Err(SymbolError::ConstantRankViolation {
            d0_first: d0,
            omega_first: "odd rank".into(),
            d0_second: sys.r - d0,
            omega_second: "signature imbalance".into(),
        });
    }
    let d = (sys.r - d0) / 2;

    let mut v_min = f64::INFINITY;
    let mut v_max: f64 = 0.0;
    let samples: Vec<SpeedSample> = raws
        .into_iter()
        .map(|r| {
            let mut speeds: Vec<f64> = r
                .eigenvalues
                .iter()
                .copied()
                .filter(|e| *e >= tol)
                .collect();
            speeds.sort_by(|a, b| b.partial_cmp(a).unwrap());
            SpeedSample {
                omega: r.omega,
                speeds,
                eigenvalues: r.eigenvalues,
                basis: r.basis,
            }
        })
        .collect();
    for s in &samples {
        if s.speeds.len() != d {
            return Err(SymbolError::ConstantRankViolation {
                d0_first: d0,
                omega_first: "positive/negative eigenvalue imbalance".into(),
                d0_second: sys.r - 2 * s.speeds.len(),
                omega_second: format!("{:?}", s.omega.as_slice()),
            });
        }
        v_min = v_min.min(s.speeds[d - 1]);
        v_max = v_max.max(s.speeds[0]);
    }

    Ok(SymbolSpectralData {
        d0,
        d,
        v_min,
        v_max,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::system::{embedded_one_dimensional, maxwell, synthetic_elliptic};

    #[test]
    fn maxwell_speeds_are_unit() {
        let data = spectral_data(&maxwell(), &SpectralOptions::default()).unwrap();
        assert_eq!(data.d0, 2);
        assert_eq!(data.d, 2);
        assert!((data.v_min - 1.0).abs() < 1e-10, "v_min {}", data.v_min);
        assert!((data.v_max - 1.0).abs() < 1e-10, "v_max {}", data.v_max);
        for s in &data.samples {
            assert_eq!(s.speeds.len(), 2);
            assert!(s.speeds[0] >= s.speeds[1]);
        }
    }

    #[test]
    fn scaled_system_scales_speeds() {
        let c = 2.5;
        let data = spectral_data(&maxwell().scaled(c), &SpectralOptions::default()).unwrap();
        assert!((data.v_min - c).abs() < 1e-9);
        assert!((data.v_max - c).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_system_fails_with_axis_samples() {
        let sys = embedded_one_dimensional();
        let err = spectral_data(&sys, &SpectralOptions::default()).unwrap_err();
        match err {
            SymbolError::ConstantRankViolation { .. } => {}
            other => panic!("expected rank violation, got {other}"),
        }
        // without the axes the lattice misses the degenerate cone xi_1 = 0
        // only for lattices that avoid it; the certification is honest about
        // being sampling-based
        let opts = SpectralOptions {
            include_axes: false,
            samples: 500,
            ..Default::default()
        };
        let res = spectral_data(&sys, &opts);
        assert!(res.is_ok(), "Fibonacci lattice avoids xi_1 = 0 exactly");
    }

    #[test]
    fn elliptic_system_has_empty_kernel() {
        let data = spectral_data(&synthetic_elliptic(None, 1.0), &SpectralOptions::default()).unwrap();
        assert_eq!(data.d0, 0);
        assert_eq!(data.d, 2);
        assert!((data.v_min - 1.0).abs() < 1e-10);
    }
}
