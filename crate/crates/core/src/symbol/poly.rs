//! Sparse multivariate polynomials and matrices thereof.
//!
//! Exponent-map representation with exact integer exponents and floating
//! coefficients. Products prune coefficients below a relative drop tolerance
//! so that roundoff dust does not accumulate through repeated matrix powers.

use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Relative coefficient drop tolerance applied after products.
pub const DROP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, f64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        let mut e = vec![0u16; nvars];
        e[j] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u16>, f64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            if c != 0.0 {
                *p.terms.entry(e).or_insert(0.0) += c;
            }
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, &c| a.max(c.abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        if s == 0.0 {
            out.terms.clear();
        } else {
            for c in out.terms.values_mut() {
                *c *= s;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.prune(DROP_TOL);
        out
    }

    /// Drop coefficients with magnitude below `rel_tol * max_abs_coeff`.
    pub fn prune(&mut self, rel_tol: f64) {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = rel_tol * m;
        self.terms.retain(|_, c| c.abs() > cut);
    }

    /// Drop coefficients with magnitude below an absolute cutoff.
    pub fn prune_abs(&mut self, cut: f64) {
        self.terms.retain(|_, c| c.abs() > cut);
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = *c;
                for (xi, &ei) in x.iter().zip(e.iter()) {
                    for _ in 0..ei {
                        t *= xi;
                    }
                }
                t
            })
            .sum()
    }
}

/// Matrix with multivariate-polynomial entries (row-major).
#[derive(Clone, Debug)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    nvars: usize,
    entries: Vec<MultiPoly>,
}

impl PolyMatrix {
    pub fn zeros(nvars: usize, rows: usize, cols: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            nvars,
            entries: vec![MultiPoly::zero(nvars); rows * cols],
        }
    }

    pub fn identity(nvars: usize, n: usize) -> Self {
        let mut m = Self::zeros(nvars, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = MultiPoly::constant(nvars, 1.0);
        }
        m
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn at(&self, i: usize, j: usize) -> &MultiPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut MultiPoly {
        &mut self.entries[i * self.cols + j]
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a = a.add(b);
        }
        out
    }

    pub fn scale_poly(&self, p: &MultiPoly) -> Self {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            *e = e.mul(p);
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.nvars, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = MultiPoly::zero(self.nvars);
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).eval(x))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
    }

    pub fn total_degree(&self) -> usize {
        self.entries.iter().map(|p| p.total_degree()).max().unwrap_or(0)
    }

    pub fn prune_abs(&mut self, cut: f64) {
        for e in self.entries.iter_mut() {
            e.prune_abs(cut);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_arithmetic_basics() {
        // (x0 + 2 x1)^2 = x0^2 + 4 x0 x1 + 4 x1^2
        let p = MultiPoly::var(2, 0).add(&MultiPoly::var(2, 1).scale(2.0));
        let q = p.mul(&p);
        assert_eq!(q.total_degree(), 2);
        assert_eq!(q.num_terms(), 3);
        assert!((q.eval(&[1.5, -0.5]) - (1.5 - 1.0f64).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn matrix_power_cayley_hamilton_2x2() {
        // M = [[0, x], [x, 0]] satisfies M^2 = x^2 I
        let x = MultiPoly::var(1, 0);
        let mut m = PolyMatrix::zeros(1, 2, 2);
        *m.at_mut(0, 1) = x.clone();
        *m.at_mut(1, 0) = x.clone();
        let m2 = m.matmul(&m);
        let x2 = x.mul(&x);
        assert_eq!(m2.at(0, 0), &x2);
        assert!(m2.at(0, 1).is_zero());
    }

    #[test]
    fn prune_drops_roundoff_dust() {
        let mut p = MultiPoly::from_terms(1, vec![(vec![0], 1.0), (vec![1], 1e-15)]);
        p.prune(1e-12);
        assert_eq!(p.num_terms(), 1);
    }
}
