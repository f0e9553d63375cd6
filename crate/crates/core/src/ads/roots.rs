//! Argument-principle root search for dispersion relations.
//!
//! Winding numbers on rectangle boundaries via adaptive trapezoid quadrature
//! of F'/F (derivative by central differences), cross-checked against phase
//! tracking; recursive bisection isolates single zeros, Newton polishes them.

use super::dispersion::{dispersion_residual, scaled_dispersion, ModeProblem};
use super::verify::{verify_eigenpair, ComplexEigenpair};
use super::AdsError;
use crate::Cplx;

#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Region {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Result<Self, AdsError> {
        if !(re0 < re1 && im0 < im1) {
            return Err(AdsError::RegionInvalid {
                detail: "region must have positive area".into(),
            });
        }
        if re1 >= 0.0 {
            return Err(AdsError::RegionInvalid {
                detail: "region closure must lie in the open left half-plane".into(),
            });
        }
        Ok(Region { re0, re1, im0, im1 })
    }

    /// Default search window per mode family.
    pub fn default_window() -> Region {
        Region {
            re0: -5.0,
            re1: -1e-3,
            im0: -20.0,
            im1: 20.0,
        }
    }

    fn corners(&self) -> [Cplx; 4] {
        [
            Cplx::new(self.re0, self.im0),
            Cplx::new(self.re1, self.im0),
            Cplx::new(self.re1, self.im1),
            Cplx::new(self.re0, self.im1),
        ]
    }

    pub fn contains(&self, z: Cplx, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }

    pub fn is_conjugation_symmetric(&self) -> bool {
        (self.im0 + self.im1).abs() < 1e-12 * (self.im1 - self.im0).max(1.0)
    }

    fn grown(&self, factor: f64) -> Region {
        let dr = (self.re1 - self.re0) * factor;
        let di = (self.im1 - self.im0) * factor;
        Region {
            re0: self.re0 - dr,
            re1: (self.re1 + dr).min(-1e-6),
            im0: self.im0 - di,
            im1: self.im1 + di,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub max_depth: u32,
    pub contour_retries: u32,
    /// relative floor for |F| on contours, in units of the contour median
    pub contour_floor: f64,
    pub newton_max_iter: u32,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            max_depth: 48,
            contour_retries: 5,
            contour_floor: 1e-9,
            newton_max_iter: 80,
        }
    }
}

/// Winding number of F around the region boundary.
///
/// Adaptive sampling refines every boundary interval whose phase increment
/// exceeds pi/2, then the trapezoid quadrature of F'/F over the samples must
/// agree with the tracked phase total.
pub fn winding_number(
    mode: &ModeProblem,
    region: &Region,
    opts: &RootOptions,
) -> Result<i64, AdsError> {
    let corners = region.corners();
    // initial parameterization: 24 samples per edge
    let mut pts: Vec<Cplx> = Vec::new();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for k in 0..24 {
            pts.push(a + (b - a) * (k as f64 / 24.0));
        }
    }
    pts.push(corners[0]);

    let f = |z: Cplx| scaled_dispersion(mode, z);
    let mut vals: Vec<Cplx> = pts.iter().map(|&z| f(z)).collect();

    // refine until all phase increments are below pi/2
    for _round in 0..24 {
        let mut refined = false;
        let mut new_pts = Vec::with_capacity(pts.len() * 2);
        let mut new_vals = Vec::with_capacity(pts.len() * 2);
        for i in 0..pts.len() - 1 {
            new_pts.push(pts[i]);
            new_vals.push(vals[i]);
            let dphase = (vals[i + 1] / vals[i]).arg().abs();
            if dphase > std::f64::consts::FRAC_PI_2 && (pts[i + 1] - pts[i]).norm() > 1e-13 {
                let mid = (pts[i] + pts[i + 1]) * 0.5;
                new_pts.push(mid);
                new_vals.push(f(mid));
                refined = true;
            }
        }
        new_pts.push(*pts.last().unwrap());
        new_vals.push(*vals.last().unwrap());
        pts = new_pts;
        vals = new_vals;
        if !refined {
            break;
        }
    }

    // contour-through-zero guard: |F| scale collapse at any sample
    let scale = {
        let mut mags: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mags[mags.len() / 2].max(1e-300)
    };
    if vals.iter().any(|v| v.norm() < opts.contour_floor * scale) {
        return Err(AdsError::ContourThroughZero { attempts: 0 });
    }

    // phase total
    let mut phase = 0.0;
    for i in 0..vals.len() - 1 {
        phase += (vals[i + 1] / vals[i]).arg();
    }
    let w_phase = phase / (2.0 * std::f64::consts::PI);

    // trapezoid quadrature of F'/F, refined dyadically until it agrees with
    // the tracked phase; persistent disagreement means a zero is sitting on
    // or next to the contour
    let logd = |z: Cplx| -> Cplx {
        let h = 1e-6 * z.norm().max(1.0);
        let fp = f(z + Cplx::new(h, 0.0));
        let fm = f(z - Cplx::new(h, 0.0));
        let fip = f(z + Cplx::new(0.0, h));
        let fim = f(z - Cplx::new(0.0, h));
        // Cauchy-Riemann average of the two central differences
        let dre = (fp - fm) / (2.0 * h);
        let dim = (fip - fim) / (Cplx::new(0.0, 2.0 * h));
        (dre + dim) * 0.5 / f(z)
    };
    let w = w_phase.round();
    if (w_phase - w).abs() > 0.05 {
        return Err(AdsError::ContourThroughZero { attempts: 0 });
    }
    for _round in 0..7 {
        let mut quad = Cplx::new(0.0, 0.0);
        let lds: Vec<Cplx> = pts.iter().map(|&z| logd(z)).collect();
        for i in 0..pts.len() - 1 {
            quad += (lds[i] + lds[i + 1]) * 0.5 * (pts[i + 1] - pts[i]);
        }
        let w_quad = (quad / Cplx::new(0.0, 2.0 * std::f64::consts::PI)).re;
        if (w_quad - w).abs() <= 0.25 {
            return Ok(w as i64);
        }
        // double the sampling
        let mut new_pts = Vec::with_capacity(pts.len() * 2);
        for i in 0..pts.len() - 1 {
            new_pts.push(pts[i]);
            new_pts.push((pts[i] + pts[i + 1]) * 0.5);
        }
        new_pts.push(*pts.last().unwrap());
        pts = new_pts;
    }
    Err(AdsError::ContourThroughZero { attempts: 0 })
}

fn winding_with_retries(
    mode: &ModeProblem,
    region: &Region,
    opts: &RootOptions,
) -> Result<(i64, Region), AdsError> {
    let mut r = *region;
    for attempt in 0..=opts.contour_retries {
        match winding_number(mode, &r, opts) {
            Ok(w) => return Ok((w, r)),
            Err(AdsError::ContourThroughZero { .. }) => {
                r = r.grown(1.7e-3 * (attempt + 1) as f64);
            }
            Err(e) => return Err(e),
        }
    }
    Err(AdsError::ContourThroughZero {
        attempts: opts.contour_retries,
    })
}

fn newton_polish(mode: &ModeProblem, start: Cplx, opts: &RootOptions) -> Option<Cplx> {
    let f = |z: Cplx| scaled_dispersion(mode, z);
    let mut z = start;
    for _ in 0..opts.newton_max_iter {
        let fz = f(z);
        let h = 1e-7 * z.norm().max(1.0);
        let dz = (f(z + Cplx::new(h, 0.0)) - f(z - Cplx::new(h, 0.0))) / (2.0 * h);
        if dz.norm() == 0.0 {
            return None;
        }
        let step = fz / dz;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() || (z - start).norm() > 1e3 {
            return None;
        }
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            // convergence gate on the unscaled residual: |F| below 1e-12 of
            // the local scale |F'| max(1, |lambda|)
            let fu = dispersion_residual(mode, z).ok()?;
            let hu = 1e-6 * z.norm().max(1.0);
            let du = (dispersion_residual(mode, z + Cplx::new(hu, 0.0)).ok()?
                - dispersion_residual(mode, z - Cplx::new(hu, 0.0)).ok()?)
                / (2.0 * hu);
            let local_scale = du.norm() * z.norm().max(1.0);
            if fu.norm() <= 1e-12 * local_scale.max(1e-300) {
                return Some(z);
            }
        }
    }
    None
}

/// All decaying eigenvalues of one mode family inside the region.
///
/// The returned pairs carry verified residuals; the multiset is closed under
/// conjugation when the region is conjugation-symmetric, and the count
/// matches the region's total winding number.
pub fn find_roots(
    mode: &ModeProblem,
    region: &Region,
    opts: &RootOptions,
) -> Result<Vec<ComplexEigenpair>, AdsError> {
    let (total, outer) = winding_with_retries(mode, region, opts)?;
    if total < 0 {
        return Err(AdsError::NonConvergence {
            detail: format!("negative winding {total}: F is analytic, contour estimate corrupt"),
        });
    }
    let mut roots: Vec<Cplx> = Vec::new();
    let mut stack: Vec<(Region, i64, u32)> = vec![(outer, total, 0)];
    while let Some((cell, w, depth)) = stack.pop() {
        if w == 0 {
            continue;
        }
        let diam = (cell.re1 - cell.re0).max(cell.im1 - cell.im0);
        if w == 1 && diam < 0.05 {
            // cell small enough for a locally convergent Newton
            let center = Cplx::new((cell.re0 + cell.re1) / 2.0, (cell.im0 + cell.im1) / 2.0);
            match newton_polish(mode, center, opts) {
                Some(z) if cell.contains(z, 2.0 * diam) => {
                    roots.push(z);
                    continue;
                }
                _ if depth < opts.max_depth => { /* fall through to a split */ }
                _ => {
                    return Err(AdsError::NonConvergence {
                        detail: format!("Newton failed in cell around {center}"),
                    })
                }
            }
        }
        if depth >= opts.max_depth {
            return Err(AdsError::NonConvergence {
                detail: format!("bisection depth limit with winding {w} in cell"),
            });
        }
        // split the longer side; nudge the cut if a child contour hits a zero
        let horizontal = (cell.re1 - cell.re0) >= (cell.im1 - cell.im0);
        let mut cut_frac = 0.5;
        let mut done = false;
        for _ in 0..4 {
            let (c1, c2) = if horizontal {
                let cut = cell.re0 + (cell.re1 - cell.re0) * cut_frac;
                (
                    Region { re1: cut, ..cell },
                    Region { re0: cut, ..cell },
                )
            } else {
                let cut = cell.im0 + (cell.im1 - cell.im0) * cut_frac;
                (
                    Region { im1: cut, ..cell },
                    Region { im0: cut, ..cell },
                )
            };
            let w1 = match winding_number(mode, &c1, opts) {
                Ok(w1) => w1,
                Err(AdsError::ContourThroughZero { .. }) => {
                    cut_frac += 0.037;
                    continue;
                }
                Err(e) => return Err(e),
            };
            stack.push((c1, w1, depth + 1));
            stack.push((c2, w - w1, depth + 1));
            done = true;
            break;
        }
        if !done {
            return Err(AdsError::ContourThroughZero {
                attempts: opts.contour_retries,
            });
        }
    }

    // dedupe
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut unique: Vec<Cplx> = Vec::new();
    for z in roots {
        if unique.iter().all(|u| (u - z).norm() > 1e-9) {
            unique.push(z);
        }
    }
    // conjugate closure on symmetric regions (real dispersion coefficients)
    if region.is_conjugation_symmetric() {
        let mut extra = Vec::new();
        for &z in &unique {
            if z.im.abs() > 1e-9 && unique.iter().all(|u| (u - z.conj()).norm() > 1e-9) {
                let zc = newton_polish(mode, z.conj(), opts).ok_or(AdsError::NonConvergence {
                    detail: format!("conjugate partner of {z} did not converge"),
                })?;
                extra.push(zc);
            }
        }
        unique.extend(extra);
    }
    if unique.len() as i64 != total {
        return Err(AdsError::NonConvergence {
            detail: format!(
                "found {} distinct roots but region winding is {total}",
                unique.len()
            ),
        });
    }
    for z in &unique {
        if z.re >= 0.0 {
            return Err(AdsError::RateNotDecaying { lambda: *z });
        }
    }
    unique
        .into_iter()
        .map(|z| verify_eigenpair(mode, z).map(|(pair, _)| pair))
        .collect()
}
