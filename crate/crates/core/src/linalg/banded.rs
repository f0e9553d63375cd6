//! Complex banded LU factorization with partial pivoting.
//!
//! LAPACK-style band storage: entry (i, j) lives at band row `kl + ku + i - j`
//! of column j; the extra `kl` rows absorb pivoting fill-in.

use crate::Cplx;
use nalgebra::DVector;

#[derive(Clone, Debug)]
pub struct BandedMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// column-major, ldab = 2*kl + ku + 1
    data: Vec<Cplx>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![Cplx::new(0.0, 0.0); ldab * n],
        }
    }

    #[inline]
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        (j as isize - i as isize) <= self.ku as isize && (i as isize - j as isize) <= self.kl as isize
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx {
        debug_assert!(self.in_band(i, j));
        self.data[j * self.ldab() + (self.kl + self.ku + i - j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx) {
        debug_assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let ldab = self.ldab();
        self.data[j * ldab + (self.kl + self.ku + i - j)] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Cplx) {
        let ldab = self.ldab();
        self.data[j * ldab + (self.kl + self.ku + i - j)] += v;
    }

    /// In-place LU with partial pivoting. Returns the pivot sequence or the
    /// column index where an exactly singular pivot was found.
    pub fn factor(mut self) -> Result<BandedLu, usize> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let ldab = self.ldab();
        let kv = kl + ku; // effective upper bandwidth after pivoting
        let mut ipiv = vec![0usize; n];

        for j in 0..n {
            // pivot search in column j, rows j..=min(j+kl, n-1)
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut pmax = self.data[j * ldab + (kv + j - j)].norm();
            for i in j + 1..=last {
                let v = self.data[j * ldab + (kv + i - j)].norm();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            ipiv[j] = p;
            if pmax == 0.0 {
                return Err(j);
            }
            // swap rows j and p across columns j..=min(j+kv, n-1)
            if p != j {
                let cend = (j + kv).min(n - 1);
                for c in j..=cend {
                    let a = c * ldab + (kv + j - c);
                    let b = c * ldab + (kv + p - c);
                    self.data.swap(a, b);
                }
            }
            // eliminate
            let piv = self.data[j * ldab + kv];
            for i in j + 1..=last {
                let idx = j * ldab + (kv + i - j);
                let l = self.data[idx] / piv;
                self.data[idx] = l;
                let cend = (j + kv).min(n - 1);
                for c in j + 1..=cend {
                    let up = self.data[c * ldab + (kv + j - c)];
                    if up.re != 0.0 || up.im != 0.0 {
                        let t = l * up;
                        self.data[c * ldab + (kv + i - c)] -= t;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            data: self.data,
            ipiv,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Cplx>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Cplx]) {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = 2 * self.kl + self.ku + 1;
        // forward: apply pivots and L
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj.re != 0.0 || bj.im != 0.0 {
                let last = (j + kl).min(n - 1);
                for i in j + 1..=last {
                    let l = self.data[j * ldab + (kv + i - j)];
                    b[i] -= l * bj;
                }
            }
        }
        // backward: U x = y
        for j in (0..n).rev() {
            let mut s = b[j];
            let cend = (j + kv).min(n - 1);
            for c in j + 1..=cend {
                s -= self.data[c * ldab + (kv + j - c)] * b[c];
            }
            b[j] = s / self.data[j * ldab + kv];
        }
    }

    pub fn solve(&self, b: &DVector<Cplx>) -> DVector<Cplx> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    /// Magnitude of the smallest pivot, a cheap singularity indicator.
    pub fn min_pivot(&self) -> f64 {
        let kv = self.kl + self.ku;
        let ldab = 2 * self.kl + self.ku + 1;
        (0..self.n)
            .map(|j| self.data[j * ldab + kv].norm())
            .fold(f64::INFINITY, f64::min)
    }
}
