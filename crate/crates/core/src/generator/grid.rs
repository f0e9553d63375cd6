//! Mapped radial grids with summation-by-parts difference operators.
//!
//! Nodes cluster at the obstacle boundary through an exponential map; the
//! first-derivative operator satisfies the exact summation-by-parts identity
//! `H D + D^T H = diag(-1, 0, ..., 0, 1)` on the mapped grid, which is what
//! every discrete energy statement in this crate rests on.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SbpOrder {
    /// second-order interior, first-order boundary closure
    Second,
    /// fourth-order interior, second-order boundary closure
    Fourth,
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    /// quadrature weights for integrals in dr (diagonal norm)
    pub weights: Vec<f64>,
    /// rows of the first-derivative operator: (column, coefficient) pairs
    pub d_rows: Vec<Vec<(usize, f64)>>,
    pub order: SbpOrder,
}

impl RadialGrid {
    /// Exponentially mapped grid on [a, r_max] with `n` nodes, clustering at
    /// the obstacle boundary for `stretch > 0`.
    pub fn mapped(a: f64, r_max: f64, n: usize, stretch: f64, order: SbpOrder) -> Self {
        assert!(n >= 16, "grid needs at least 16 nodes");
        let h = 1.0 / (n - 1) as f64;
        let map = |s: f64| -> f64 {
            if stretch.abs() < 1e-12 {
                a + (r_max - a) * s
            } else {
                a + (r_max - a) * ((stretch * s).exp_m1()) / stretch.exp_m1()
            }
        };
        let dmap = |s: f64| -> f64 {
            if stretch.abs() < 1e-12 {
                r_max - a
            } else {
                (r_max - a) * stretch * (stretch * s).exp() / stretch.exp_m1()
            }
        };
        let nodes: Vec<f64> = (0..n).map(|i| map(i as f64 * h)).collect();
        let rp: Vec<f64> = (0..n).map(|i| dmap(i as f64 * h)).collect();

        let (htilde, qrows) = sbp_coefficients(n, order);
        let weights: Vec<f64> = (0..n).map(|i| htilde[i] * h * rp[i]).collect();
        // D_r = diag(1/r') H_s^{-1} Q with H_s = h * diag(htilde)
        let d_rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                qrows[i]
                    .iter()
                    .map(|&(j, q)| (j, q / (htilde[i] * h * rp[i])))
                    .collect()
            })
            .collect();
        RadialGrid {
            nodes,
            weights,
            d_rows,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply_d(&self, f: &[f64]) -> Vec<f64> {
        self.d_rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * f[j]).sum())
            .collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Diagonal-norm SBP first-derivative coefficients on a unit-spaced grid:
/// returns (htilde, rows of Q) with `Q + Q^T = diag(-1, 0,...,0, 1)`.
fn sbp_coefficients(n: usize, order: SbpOrder) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
    match order {
        SbpOrder::Second => {
            let mut htilde = vec![1.0; n];
            htilde[0] = 0.5;
            htilde[n - 1] = 0.5;
            let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
            for i in 0..n {
                if i == 0 {
                    rows.push(vec![(0, -0.5), (1, 0.5)]);
                } else if i == n - 1 {
                    rows.push(vec![(n - 2, -0.5), (n - 1, 0.5)]);
                } else {
                    rows.push(vec![(i - 1, -0.5), (i + 1, 0.5)]);
                }
            }
            (htilde, rows)
        }
        SbpOrder::Fourth => {
            assert!(n >= 12, "fourth-order closure needs at least 12 nodes");
            let mut htilde = vec![1.0; n];
            let hb = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
            for (i, &v) in hb.iter().enumerate() {
                htilde[i] = v;
                htilde[n - 1 - i] = v;
            }
            // boundary block of Q (rows 0..4, columns 0..6)
            let qb: [&[(usize, f64)]; 4] = [
                &[(0, -0.5), (1, 59.0 / 96.0), (2, -1.0 / 12.0), (3, -1.0 / 32.0)],
                &[(0, -59.0 / 96.0), (2, 59.0 / 96.0)],
                &[(0, 1.0 / 12.0), (1, -59.0 / 96.0), (3, 59.0 / 96.0), (4, -1.0 / 12.0)],
                &[(0, 1.0 / 32.0), (2, -59.0 / 96.0), (4, 2.0 / 3.0), (5, -1.0 / 12.0)],
            ];
            let interior: [(i64, f64); 4] = [(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)];
            let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
            for i in 0..n {
                if i < 4 {
                    rows.push(qb[i].to_vec());
                } else if i >= n - 4 {
                    // mirror with antisymmetry: Q[n-1-i][n-1-j] = -Q[i][j]
                    let mi = n - 1 - i;
                    rows.push(
                        qb[mi]
                            .iter()
                            .map(|&(j, q)| (n - 1 - j, -q))
                            .collect(),
                    );
                } else {
                    rows.push(
                        interior
                            .iter()
                            .map(|&(o, q)| ((i as i64 + o) as usize, q))
                            .collect(),
                    );
                }
            }
            (htilde, rows)
        }
    }
}

/// Sponge absorbing layer: zero inside `start`, polynomial ramp to
/// `strength` at the outer edge.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AbsorberSpec {
    pub start: f64,
    pub strength: f64,
    pub power: u32,
}

impl AbsorberSpec {
    pub fn profile(&self, r: f64, r_max: f64) -> f64 {
        if r <= self.start || self.strength == 0.0 {
            0.0
        } else {
            let t = ((r - self.start) / (r_max - self.start)).clamp(0.0, 1.0);
            self.strength * t.powi(self.power as i32)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_sbp_identity(grid: &RadialGrid) {
        // H D + D^T H = diag(-1, 0, ..., 0, 1) entrywise
        let n = grid.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for &(j, c) in &grid.d_rows[i] {
                m[i][j] += grid.weights[i] * c;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let s = m[i][j] + m[j][i];
                let expect = if i == 0 && j == 0 {
                    -1.0
                } else if i == n - 1 && j == n - 1 {
                    1.0
                } else {
                    0.0
                };
                assert!(
                    (s - expect).abs() < 1e-13,
                    "SBP identity fails at ({i},{j}): {s}"
                );
            }
        }
    }

    #[test]
    fn sbp_identity_holds_on_mapped_grids() {
        for order in [SbpOrder::Second, SbpOrder::Fourth] {
            let grid = RadialGrid::mapped(1.0, 30.0, 48, 2.5, order);
            check_sbp_identity(&grid);
        }
    }

    #[test]
    fn derivative_is_exact_on_low_polynomials() {
        let grid = RadialGrid::mapped(1.0, 5.0, 40, 0.0, SbpOrder::Fourth);
        // uniform map: exactness on r and r^2 everywhere (boundary closure
        // is 2nd order), r^3, r^4 in the interior
        let f: Vec<f64> = grid.nodes.iter().map(|r| 3.0 * r * r - r + 2.0).collect();
        let df = grid.apply_d(&f);
        for (i, r) in grid.nodes.iter().enumerate() {
            assert!(
                (df[i] - (6.0 * r - 1.0)).abs() < 1e-10,
                "node {i}: {} vs {}",
                df[i],
                6.0 * r - 1.0
            );
        }
    }

    #[test]
    fn mapped_derivative_converges_at_order() {
        // smooth function on a stretched grid: error drops at >= 2nd order
        let f = |r: f64| (0.7 * r).sin() + 1.0 / r;
        let fp = |r: f64| 0.7 * (0.7 * r).cos() - 1.0 / (r * r);
        let mut errs = Vec::new();
        for n in [60usize, 120, 240] {
            let grid = RadialGrid::mapped(1.0, 10.0, n, 2.0, SbpOrder::Fourth);
            let vals: Vec<f64> = grid.nodes.iter().map(|&r| f(r)).collect();
            let d = grid.apply_d(&vals);
            let err = grid
                .nodes
                .iter()
                .zip(&d)
                .map(|(&r, &g)| (g - fp(r)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.9 && order2 > 1.9, "orders {order1} {order2}");
    }

    #[test]
    fn quadrature_weights_integrate_linears() {
        let grid = RadialGrid::mapped(1.0, 4.0, 80, 1.5, SbpOrder::Fourth);
        let total: f64 = grid.weights.iter().sum();
        assert!((total - 3.0).abs() < 1e-6, "sum {total}");
    }

    #[test]
    fn absorber_profile_is_zero_before_start_and_monotone() {
        let abs = AbsorberSpec {
            start: 20.0,
            strength: 2.0,
            power: 3,
        };
        assert_eq!(abs.profile(10.0, 30.0), 0.0);
        assert_eq!(abs.profile(20.0, 30.0), 0.0);
        let mut prev = 0.0;
        for k in 0..=10 {
            let r = 20.0 + k as f64;
            let s = abs.profile(r, 30.0);
            assert!(s >= prev);
            prev = s;
        }
        assert!((abs.profile(30.0, 30.0) - 2.0).abs() < 1e-14);
    }
}
