//! First-order symmetric systems given by their coefficient matrices.

use super::poly::{MultiPoly, PolyMatrix};
use super::SymbolError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A symmetric hyperbolic system in `n` space dimensions with `r` unknowns,
/// defined by `n` real symmetric `r x r` coefficient matrices.
#[derive(Clone, Debug)]
pub struct SymmetricSystem {
    pub n: usize,
    pub r: usize,
    mats: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    n: usize,
    r: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
}

impl SymmetricSystem {
    /// Validates exact symmetry of every coefficient matrix and the dimension
    /// conventions (`n` odd, at least 3).
    pub fn new(n: usize, r: usize, mats: Vec<DMatrix<f64>>) -> Result<Self, SymbolError> {
        if n < 3 || n % 2 == 0 {
            return Err(SymbolError::BadDimension { n });
        }
        if mats.len() != n {
            return Err(SymbolError::DimensionMismatch {
                expected: n,
                got: mats.len(),
            });
        }
        for (j, m) in mats.iter().enumerate() {
            if m.nrows() != r || m.ncols() != r {
                return Err(SymbolError::DimensionMismatch {
                    expected: r,
                    got: m.nrows().max(m.ncols()),
                });
            }
            for a in 0..r {
                for b in 0..a {
                    if m[(a, b)] != m[(b, a)] {
                        return Err(SymbolError::NotSymmetric { index: j });
                    }
                }
            }
        }
        Ok(SymmetricSystem { n, r, mats })
    }

    pub fn coefficient(&self, j: usize) -> &DMatrix<f64> {
        &self.mats[j]
    }

    /// The symbol `A(xi) = sum_j A_j xi_j`.
    pub fn eval_symbol(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>, SymbolError> {
        if xi.len() != self.n {
            return Err(SymbolError::DimensionMismatch {
                expected: self.n,
                got: xi.len(),
            });
        }
        let mut m = DMatrix::zeros(self.r, self.r);
        for (j, a) in self.mats.iter().enumerate() {
            m += a * xi[j];
        }
        Ok(m)
    }

    /// The symbol as a degree-1 polynomial matrix in `xi`.
    pub fn symbol_matrix(&self) -> PolyMatrix {
        let mut out = PolyMatrix::zeros(self.n, self.r, self.r);
        for (j, a) in self.mats.iter().enumerate() {
            let xj = MultiPoly::var(self.n, j);
            for p in 0..self.r {
                for q in 0..self.r {
                    if a[(p, q)] != 0.0 {
                        *out.at_mut(p, q) = out.at(p, q).add(&xj.scale(a[(p, q)]));
                    }
                }
            }
        }
        out
    }

    /// All coefficient matrices multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        SymmetricSystem {
            n: self.n,
            r: self.r,
            mats: self.mats.iter().map(|m| m * c).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SymbolError> {
        let f: SystemFile =
            serde_json::from_str(text).map_err(|e| SymbolError::Parse(e.to_string()))?;
        let mats = f
            .a
            .iter()
            .map(|rows| {
                DMatrix::from_fn(f.r, f.r, |i, j| rows.get(i).and_then(|r| r.get(j)).copied().unwrap_or(f64::NAN))
            })
            .collect();
        Self::new(f.n, f.r, mats)
    }

    pub fn to_json(&self) -> String {
        let f = SystemFile {
            n: self.n,
            r: self.r,
            a: self
                .mats
                .iter()
                .map(|m| {
                    (0..self.r)
                        .map(|i| (0..self.r).map(|j| m[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("serialize system")
    }
}

/// The exterior Maxwell system: unknowns (E, B) in R^3, with
/// `A(xi)(E, B) = (xi x B, -xi x E)`.
pub fn maxwell() -> SymmetricSystem {
    let cross = |j: usize| -> DMatrix<f64> {
        let mut x = DMatrix::zeros(3, 3);
        let e = [
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0],
            [0.0, 1.0, 0.0],
        ];
        // cross-product matrix of e_j: (e_j x v) = C_j v
        match j {
            0 => {
                x.copy_from(&DMatrix::from_row_slice(3, 3, &e.concat()));
            }
            1 => {
                x.copy_from(&DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
                ));
            }
            _ => {
                x.copy_from(&DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                ));
            }
        }
        x
    };
    let mats = (0..3)
        .map(|j| {
            let c = cross(j);
            let mut a = DMatrix::zeros(6, 6);
            // (E, B) -> (e_j x B, -e_j x E): top-right block C_j, bottom-left -C_j
            a.view_mut((0, 3), (3, 3)).copy_from(&c);
            a.view_mut((3, 0), (3, 3)).copy_from(&(-&c));
            a
        })
        .collect();
    SymmetricSystem::new(3, 6, mats).expect("Maxwell coefficients are symmetric")
}

/// Anticommuting symmetric 4x4 family: `D(xi) = xi_1 a1 + xi_2 a2 + xi_3 a3`
/// with `D(xi)^2 = |xi|^2 I`, so the symbol is invertible for all `xi != 0`
/// (full-rank case, empty kernel).
pub fn dirac_block() -> [DMatrix<f64>; 3] {
    let a1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ],
    );
    let a2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0,
        ],
    );
    // sigma_y (x) sigma_y: real symmetric, anticommutes with the other two
    let a3 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0,
        ],
    );
    [a1, a2, a3]
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    // conjugation in floating point loses exact symmetry; restore it
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Full-rank synthetic system (r = 4, empty symbol kernel), optionally
/// conjugated by an orthogonal matrix and scaled.
pub fn synthetic_elliptic(conjugate: Option<&DMatrix<f64>>, speed: f64) -> SymmetricSystem {
    let blocks = dirac_block();
    let mats = blocks
        .iter()
        .map(|b| match conjugate {
            Some(o) => symmetrize(o.transpose() * b * o * speed),
            None => b * speed,
        })
        .collect();
    SymmetricSystem::new(3, 4, mats).expect("symmetric by construction")
}

/// Constant-rank synthetic system with a 2-dimensional kernel: the 4x4
/// anticommuting block padded by two zero rows/columns, conjugated by an
/// orthogonal matrix so the kernel is a known but nontrivial subspace.
pub fn synthetic_rank4(conjugate: Option<&DMatrix<f64>>, speed: f64) -> SymmetricSystem {
    let blocks = dirac_block();
    let mats = blocks
        .iter()
        .map(|b| {
            let mut a = DMatrix::zeros(6, 6);
            a.view_mut((0, 0), (4, 4)).copy_from(b);
            match conjugate {
                Some(o) => symmetrize(o.transpose() * a * o * speed),
                None => a * speed,
            }
        })
        .collect();
    SymmetricSystem::new(3, 6, mats).expect("symmetric by construction")
}

/// Degenerate test system: `A(xi) = diag(xi_1, -xi_1, 0)`-style with rank
/// dropping on the cone `xi_1 = 0`.
pub fn embedded_one_dimensional() -> SymmetricSystem {
    let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
    let z = DMatrix::zeros(3, 3);
    SymmetricSystem::new(3, 3, vec![a1, z.clone(), z]).expect("diagonal is symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwell_symbol_is_symmetric_and_linear() {
        let m = maxwell();
        let xi = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let a = m.eval_symbol(&xi).unwrap();
        assert!((a.clone() - a.transpose()).norm() == 0.0);
        let a2 = m.eval_symbol(&(2.0 * &xi)).unwrap();
        assert!((a2 - 2.0 * &a).norm() < 1e-14);
        assert!(m.eval_symbol(&DVector::zeros(3)).unwrap().norm() == 0.0);
    }

    #[test]
    fn maxwell_e1_action_matches_cross_products() {
        // A(e1)(E, B) = (e1 x B, -e1 x E)
        let m = maxwell();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let a = m.eval_symbol(&e1).unwrap();
        let eb = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.4, 0.5, 0.6]); // E=0, B=(0.4,0.5,0.6)
        let out = &a * &eb;
        // e1 x B = (0*0.6-0*0.5, 0*0.4-1*0.6, 1*0.5-0*0.4) = (0, -0.6, 0.5)
        assert!((out[0] - 0.0).abs() < 1e-15);
        assert!((out[1] + 0.6).abs() < 1e-15);
        assert!((out[2] - 0.5).abs() < 1e-15);
        assert!(out.rows(3, 3).norm() < 1e-15);
    }

    #[test]
    fn dirac_block_anticommutes() {
        let b = dirac_block();
        for i in 0..3 {
            for j in 0..3 {
                let s = &b[i] * &b[j] + &b[j] * &b[i];
                let expect = if i == j { DMatrix::identity(4, 4) * 2.0 } else { DMatrix::zeros(4, 4) };
                assert!((s - expect).norm() < 1e-14, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let m = maxwell();
        let text = m.to_json();
        let back = SymmetricSystem::from_json(&text).unwrap();
        for j in 0..3 {
            assert_eq!(m.coefficient(j), back.coefficient(j));
        }
    }

    #[test]
    fn rejects_asymmetric_and_even_dimension() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(SymmetricSystem::new(3, 2, vec![bad.clone(), bad.clone(), bad.clone()]).is_err());
        let id = DMatrix::identity(2, 2);
        assert!(SymmetricSystem::new(4, 2, vec![id.clone(), id.clone(), id.clone(), id.clone()]).is_err());
    }
}
