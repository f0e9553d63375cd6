//! Minimal complex CSR matrix: triplet assembly, matvec, adjoint matvec,
//! coordinate export.

use crate::Cplx;
use nalgebra::DVector;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<Cplx>,
}

impl CsrMatrix {
    /// Build from triplets; duplicate entries are summed, exact zeros kept.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Cplx)]) -> Self {
        let mut sorted: Vec<(usize, usize, Cplx)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, Cplx)> = Vec::with_capacity(sorted.len());
        for &(i, j, v) in &sorted {
            assert!(i < n && j < n, "triplet ({i},{j}) out of range");
            if let Some(last) = merged.last_mut() {
                if last.0 == i && last.1 == j {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((i, j, v));
        }
        let mut indptr = vec![0usize; n + 1];
        for &(i, _, _) in &merged {
            indptr[i + 1] += 1;
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            n,
            indptr,
            indices: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &DVector<Cplx>) -> DVector<Cplx> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut s = Cplx::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
        y
    }

    /// y = A^H x
    pub fn mul_adjoint_vec(&self, x: &DVector<Cplx>) -> DVector<Cplx> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let xi = x[i];
            if xi.re == 0.0 && xi.im == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k].conj() * xi;
            }
        }
        y
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Rows of the matrix in `(row, col, re, im)` coordinate text lines.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.push_str(&format!(
                    "{} {} {:.17e} {:.17e}\n",
                    i, self.indices[k], self.values[k].re, self.values[k].im
                ));
            }
        }
        out
    }
}
