//! Assembly of the truncated exterior-shell generator.
//!
//! Each spherical-harmonic mode `(l, m, polarization)` reduces to a 3-field
//! first-order radial system in the scaled variables `(w+, w-, q)`, where
//! `w±` are the outgoing/incoming characteristic combinations of the
//! tangential traces and `q` the radial field component:
//!
//! ```text
//! d/dt w+ = +D w+ - kappa q          kappa = sqrt(l(l+1)) / (sqrt(2) r)
//! d/dt w- = -D w- - s kappa q        s = +1 (TE), -1 (TM)
//! d/dt q  = kappa w+ + s kappa w-
//! ```
//!
//! Boundary conditions enter as simultaneous-approximation terms on the
//! inflow characteristics. For the dissipative impedance relation the
//! penalty makes the symmetric part of the generator negative semidefinite
//! for every state (not only on solutions); the conservative reflecting
//! variant uses paired half-weight penalties that cancel the
//! summation-by-parts boundary terms exactly, leaving a skew matrix.
//! Angle-dependent impedance and first-order surface perturbations couple
//! the modes only through the boundary relation; the cross-mode entries are
//! confined to the penalty rows.

use super::grid::{AbsorberSpec, RadialGrid, SbpOrder};
use super::GeneratorError;
use crate::ads::hankel::hankel_elem;
use crate::ads::Polarization;
use crate::linalg::sparse::CsrMatrix;
use crate::linalg::woodbury::BlockLayout;
use crate::sphere::{real_ylm, tangent_basis, SphereQuadrature};
use crate::Cplx;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EpsilonSpec {
    Constant(f64),
    /// base + sum of real-spherical-harmonic terms (l, m, coefficient)
    Harmonic { base: f64, terms: Vec<(u32, i32, f64)> },
}

impl EpsilonSpec {
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        match self {
            EpsilonSpec::Constant(e) => *e,
            EpsilonSpec::Harmonic { base, terms } => {
                base + terms
                    .iter()
                    .map(|&(l, m, c)| c * real_ylm(l, m, theta, phi).0)
                    .sum::<f64>()
            }
        }
    }

    fn max_degree(&self) -> u32 {
        match self {
            EpsilonSpec::Constant(_) => 0,
            EpsilonSpec::Harmonic { terms, .. } => terms.iter().map(|t| t.0).max().unwrap_or(0),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, EpsilonSpec::Constant(_))
            || matches!(self, EpsilonSpec::Harmonic { terms, .. } if terms.is_empty())
    }

    fn base(&self) -> f64 {
        match self {
            EpsilonSpec::Constant(e) => *e,
            EpsilonSpec::Harmonic { base, .. } => *base,
        }
    }
}

/// Surface perturbation `r(theta, phi) = radius (1 + delta s)` with `s` a
/// real-harmonic sum; handled to first order in `delta` by transferring the
/// boundary relation to the reference sphere (radial Taylor step plus normal
/// tilt).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub delta: f64,
    pub harmonics: Vec<(u32, i32, f64)>,
}

impl ShapeSpec {
    fn eval(&self, theta: f64, phi: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|&(l, m, c)| c * real_ylm(l, m, theta, phi).0)
            .sum()
    }

    /// `a grad_t s` and its rotation `x_hat x (a grad_t s)` at a point.
    fn grad(&self, theta: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
        let mut g = [0.0; 3];
        let mut gr = [0.0; 3];
        for &(l, m, c) in &self.harmonics {
            let tb = tangent_basis(l, m, theta, phi);
            let shat = ((l * (l + 1)) as f64).sqrt();
            for i in 0..3 {
                g[i] += c * shat * tb.psi[i];
                gr[i] += c * shat * tb.phi_v[i];
            }
        }
        (g, gr)
    }

    fn max_degree(&self) -> u32 {
        self.harmonics.iter().map(|t| t.0).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcKind {
    /// impedance relation with strictly positive dissipation
    Dissipative,
    /// energy-neutral reflecting wall (structure checks)
    ConservativeReflecting,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub radius: f64,
    pub epsilon: EpsilonSpec,
    pub shape: Option<ShapeSpec>,
    pub bc: BcKind,
    /// multiplies all coefficient matrices (wave speed)
    pub coefficient_scale: f64,
}

impl ProblemSpec {
    pub fn dissipative_sphere(epsilon: f64) -> Self {
        ProblemSpec {
            radius: 1.0,
            epsilon: EpsilonSpec::Constant(epsilon),
            shape: None,
            bc: BcKind::Dissipative,
            coefficient_scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Resolution {
    pub l_max: u32,
    pub n_r: usize,
    pub r_max: f64,
    pub absorber: AbsorberSpec,
    pub order: SbpOrder,
    /// exponential clustering strength of the radial map
    pub stretch: f64,
    /// include the purely radial (l = 0) sector, which the generator
    /// annihilates; useful for kernel-witness demonstrations
    pub include_l0: bool,
}

impl Resolution {
    pub fn reference(n_r: usize, r_max: f64, l_max: u32) -> Self {
        Resolution {
            l_max,
            n_r,
            r_max,
            absorber: AbsorberSpec {
                start: 0.8 * r_max,
                strength: 2.0,
                power: 3,
            },
            order: SbpOrder::Fourth,
            stretch: 2.0,
            include_l0: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModeIndex {
    pub l: u32,
    pub m: i32,
    pub pol: Polarization,
}

#[derive(Clone, Copy)]
pub enum Field {
    WPlus = 0,
    WMinus = 1,
    Q = 2,
}

pub struct DiscreteGenerator {
    pub modes: Vec<ModeIndex>,
    pub grid: RadialGrid,
    pub problem: ProblemSpec,
    pub resolution: Resolution,
    pub layout: BlockLayout,
    /// scaled triplets (Euclidean inner product = discrete L2)
    pub triplets: Vec<(usize, usize, Cplx)>,
    pub csr: CsrMatrix,
    pub sqrt_h: Vec<f64>,
    pub sigma: Vec<f64>,
    pub meta_hash: u64,
}

impl DiscreteGenerator {
    pub fn dim(&self) -> usize {
        self.layout.n()
    }

    pub fn mode_offset(&self, k: usize) -> usize {
        self.layout.offsets[k]
    }

    pub fn state_index(&self, mode: usize, field: Field, node: usize) -> usize {
        self.layout.offsets[mode] + 3 * node + field as usize
    }

    pub fn apply(&self, v: &DVector<Cplx>) -> DVector<Cplx> {
        self.csr.mul_vec(v)
    }

    /// discrete L2 energy of a scaled state
    pub fn energy(&self, v: &DVector<Cplx>) -> f64 {
        let n = v.norm();
        n * n
    }

    /// `2 Re <G v, v>` split into boundary-condition and absorber parts.
    pub fn dissipation_split(&self, v: &DVector<Cplx>) -> (f64, f64) {
        let gv = self.apply(v);
        let total = 2.0 * gv.dotc(v).re;
        let absorber: f64 = -2.0
            * self
                .sigma
                .iter()
                .zip(v.iter())
                .map(|(s, x)| s * x.norm_sqr())
                .sum::<f64>();
        (total - absorber, absorber)
    }

    /// Largest eigenvalue of the symmetric part, by shifted power iteration.
    /// Nonpositive (up to roundoff) for every dissipative assembly.
    pub fn max_symmetric_eigenvalue(&self, iters: usize) -> f64 {
        use rand::prelude::*;
        let n = self.dim();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut v = DVector::from_fn(n, |_, _| Cplx::new(rng.gen::<f64>() - 0.5, 0.0));
        v /= Cplx::new(v.norm(), 0.0);
        let shift = self.csr.norm_inf() + 1.0;
        let mut lam = 0.0;
        for _ in 0..iters {
            let sym = (self.csr.mul_vec(&v) + self.csr.mul_adjoint_vec(&v)) * Cplx::new(0.5, 0.0);
            let w = sym + &v * Cplx::new(shift, 0.0);
            let nw = w.norm();
            if nw == 0.0 {
                break;
            }
            let wn = w / Cplx::new(nw, 0.0);
            lam = nw;
            v = wn;
        }
        // Rayleigh quotient polish
        let sym = (self.csr.mul_vec(&v) + self.csr.mul_adjoint_vec(&v)) * Cplx::new(0.5, 0.0);
        let rq = sym.dotc(&v).re;
        let _ = lam;
        rq
    }

    /// Sample the closed-form decaying eigenfield of one transverse mode on
    /// the grid (scaled state).
    pub fn sample_eigenmode(&self, mode_idx: usize, lambda: Cplx) -> DVector<Cplx> {
        let mode = self.modes[mode_idx];
        let k = -Cplx::new(0.0, 1.0) * lambda;
        let shat = ((mode.l * (mode.l + 1)) as f64).sqrt();
        let n = self.grid.len();
        let mut v = DVector::zeros(self.dim());
        let sq2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            let r = self.grid.nodes[i];
            let (h, dh) = hankel_elem(mode.l, k * r).expect("r > 0");
            let (e_like, b_like, q_like) = match mode.pol {
                Polarization::Te => {
                    let e = h * r;
                    let b = (h + k * r * dh) / lambda;
                    let c = h * shat / lambda;
                    (e, b, c)
                }
                Polarization::Tm => {
                    let beta = h * r;
                    let alpha = -(h + k * r * dh) / lambda;
                    let gamma = -h * shat / lambda;
                    // w± = (alpha -+ beta)/sqrt2: present as (e_like ± b_like)
                    (alpha, -beta, gamma)
                }
            };
            let sh = self.sqrt_h[self.state_index(mode_idx, Field::WPlus, i)];
            v[self.state_index(mode_idx, Field::WPlus, i)] = (e_like + b_like) / sq2 * sh;
            v[self.state_index(mode_idx, Field::WMinus, i)] = (e_like - b_like) / sq2 * sh;
            v[self.state_index(mode_idx, Field::Q, i)] = q_like * sh;
        }
        v
    }

    pub fn export_coordinate_text(&self) -> String {
        self.csr.to_coordinate_text()
    }
}

fn fnv_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Resolved boundary-trace relation in the general (mode-coupled) case:
/// `w-(0)_k = sum over state entries of rows[k]` (no w-(0) columns remain).
struct TraceRelation {
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn assemble(
    problem: &ProblemSpec,
    res: &Resolution,
) -> Result<DiscreteGenerator, GeneratorError> {
    if res.l_max < 1 {
        return Err(GeneratorError::Resolution {
            detail: "l_max must be at least 1".into(),
        });
    }
    if res.n_r < 16 {
        return Err(GeneratorError::Resolution {
            detail: "n_r must be at least 16".into(),
        });
    }
    if !(res.r_max > res.absorber.start && res.absorber.start > problem.radius) {
        return Err(GeneratorError::Resolution {
            detail: format!(
                "need r_max > absorber.start > radius, got {} / {} / {}",
                res.r_max, res.absorber.start, problem.radius
            ),
        });
    }
    if res.absorber.strength < 0.0 {
        return Err(GeneratorError::UnstableAbsorber {
            detail: "negative absorber strength amplifies".into(),
        });
    }
    if problem.bc == BcKind::ConservativeReflecting
        && (!problem.epsilon.is_constant() || problem.shape.as_ref().map(|s| s.delta != 0.0).unwrap_or(false))
    {
        return Err(GeneratorError::Unsupported {
            detail: "conservative reflecting variant supports only the unperturbed sphere".into(),
        });
    }

    let grid = RadialGrid::mapped(problem.radius, res.r_max, res.n_r, res.stretch, res.order);
    let n = grid.len();
    let speed = problem.coefficient_scale;

    let mut modes = Vec::new();
    for l in 1..=res.l_max {
        for m in -(l as i32)..=(l as i32) {
            for pol in [Polarization::Te, Polarization::Tm] {
                modes.push(ModeIndex { l, m, pol });
            }
        }
    }
    let n_modes = modes.len();

    let mut offsets: Vec<usize> = (0..=n_modes).map(|k| k * 3 * n).collect();
    let mut bands = vec![(11usize, 11usize); n_modes];
    if res.include_l0 {
        offsets.push(offsets[n_modes] + 2 * n);
        bands.push((0, 0));
    }
    let layout = BlockLayout { offsets, bands };

    let sigma_of = |r: f64| res.absorber.profile(r, res.r_max);

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let idx = |k: usize, f: usize, i: usize| layout.offsets[k] + 3 * i + f;

    for (k, mode) in modes.iter().enumerate() {
        let shat = ((mode.l * (mode.l + 1)) as f64).sqrt();
        let s_pol = match mode.pol {
            Polarization::Te => 1.0,
            Polarization::Tm => -1.0,
        };
        for i in 0..n {
            let r = grid.nodes[i];
            let kap = shat / (std::f64::consts::SQRT_2 * r) * speed;
            let sg = sigma_of(r);
            // transport
            for &(j, c) in &grid.d_rows[i] {
                trips.push((idx(k, 0, i), idx(k, 0, j), c * speed));
                trips.push((idx(k, 1, i), idx(k, 1, j), -c * speed));
            }
            // coupling to the radial field
            trips.push((idx(k, 0, i), idx(k, 2, i), -kap));
            trips.push((idx(k, 1, i), idx(k, 2, i), -s_pol * kap));
            trips.push((idx(k, 2, i), idx(k, 0, i), kap));
            trips.push((idx(k, 2, i), idx(k, 1, i), s_pol * kap));
            // absorber
            if sg != 0.0 {
                for f in 0..3 {
                    trips.push((idx(k, f, i), idx(k, f, i), -sg));
                }
            }
        }
    }

    // boundary conditions
    let h0 = grid.weights[0];
    let hn = grid.weights[n - 1];
    let delta_active = problem
        .shape
        .as_ref()
        .map(|s| s.delta != 0.0 && !s.harmonics.is_empty())
        .unwrap_or(false);
    match problem.bc {
        BcKind::ConservativeReflecting => {
            // paired half-weight penalties, exactly energy neutral
            for k in 0..n_modes {
                let rho = -1.0; // tangential-electric trace pinned to zero
                // inner: rows on w-(0) and w+(0)
                trips.push((idx(k, 1, 0), idx(k, 1, 0), -0.5 * speed / h0));
                trips.push((idx(k, 1, 0), idx(k, 0, 0), 0.5 * rho * speed / h0));
                trips.push((idx(k, 0, 0), idx(k, 0, 0), 0.5 * speed / h0));
                trips.push((idx(k, 0, 0), idx(k, 1, 0), -0.5 * rho * speed / h0));
                // outer: rows on w+(n-1) and w-(n-1)
                trips.push((idx(k, 0, n - 1), idx(k, 0, n - 1), -0.5 * speed / hn));
                trips.push((idx(k, 0, n - 1), idx(k, 1, n - 1), 0.5 * rho * speed / hn));
                trips.push((idx(k, 1, n - 1), idx(k, 1, n - 1), 0.5 * speed / hn));
                trips.push((idx(k, 1, n - 1), idx(k, 0, n - 1), -0.5 * rho * speed / hn));
            }
        }
        BcKind::Dissipative => {
            // outer absorbing wall: kill the incoming characteristic
            for k in 0..n_modes {
                trips.push((idx(k, 0, n - 1), idx(k, 0, n - 1), -speed / hn));
            }
            if problem.epsilon.is_constant() && !delta_active {
                // uniform impedance: per-mode scalar reflection
                let eps = problem.epsilon.base();
                if eps <= 0.0 {
                    return Err(GeneratorError::Unsupported {
                        detail: "dissipative condition needs epsilon > 0".into(),
                    });
                }
                let rho = -eps / (2.0 + eps);
                for k in 0..n_modes {
                    trips.push((idx(k, 1, 0), idx(k, 1, 0), -speed / h0));
                    trips.push((idx(k, 1, 0), idx(k, 0, 0), rho * speed / h0));
                }
            } else {
                // SAT: d/dt w-(0)_k += -(speed/h0) (w-(0)_k - T_k(state))
                let rel = boundary_trace_relation(problem, res, &grid, &modes, &layout)?;
                for k in 0..n_modes {
                    trips.push((idx(k, 1, 0), idx(k, 1, 0), -speed / h0));
                    for &(col, c) in &rel.rows[k] {
                        trips.push((idx(k, 1, 0), col, c * speed / h0));
                    }
                }
            }
        }
    }

    // l = 0 sector: the generator annihilates purely radial fields; only the
    // absorber acts there
    if res.include_l0 {
        let off = layout.offsets[n_modes];
        for i in 0..n {
            let sg = sigma_of(grid.nodes[i]);
            if sg != 0.0 {
                trips.push((off + 2 * i, off + 2 * i, -sg));
                trips.push((off + 2 * i + 1, off + 2 * i + 1, -sg));
            }
        }
    }

    // scale to the Euclidean representation and build CSR + metadata hash
    let dim = layout.n();
    let mut sqrt_h = vec![0.0; dim];
    let mut sigma = vec![0.0; dim];
    for k in 0..n_modes {
        for i in 0..n {
            for f in 0..3 {
                let s = idx(k, f, i);
                sqrt_h[s] = grid.weights[i].sqrt();
                sigma[s] = sigma_of(grid.nodes[i]);
            }
        }
    }
    if res.include_l0 {
        let off = layout.offsets[n_modes];
        for i in 0..n {
            for f in 0..2 {
                sqrt_h[off + 2 * i + f] = grid.weights[i].sqrt();
                sigma[off + 2 * i + f] = sigma_of(grid.nodes[i]);
            }
        }
    }

    let scaled: Vec<(usize, usize, Cplx)> = trips
        .iter()
        .map(|&(i, j, v)| (i, j, Cplx::new(v * sqrt_h[i] / sqrt_h[j], 0.0)))
        .collect();
    let csr = CsrMatrix::from_triplets(dim, &scaled);

    let mut bytes = Vec::with_capacity(csr.nnz() * 20);
    bytes.extend_from_slice(&(dim as u64).to_le_bytes());
    for i in 0..dim {
        for kk in csr.indptr[i]..csr.indptr[i + 1] {
            bytes.extend_from_slice(&(i as u64).to_le_bytes());
            bytes.extend_from_slice(&(csr.indices[kk] as u64).to_le_bytes());
            bytes.extend_from_slice(&csr.values[kk].re.to_le_bytes());
        }
    }
    let meta_hash = fnv_hash(&bytes);

    Ok(DiscreteGenerator {
        modes,
        grid,
        problem: problem.clone(),
        resolution: *res,
        layout,
        triplets: scaled,
        csr,
        sqrt_h,
        sigma,
        meta_hash,
    })
}

/// Quadrature assembly of the mode-coupled boundary relation
/// `w-(0) = M_minus^{-1} * (rest)`, to first order in the surface
/// perturbation. Columns are state indices in unscaled variables.
fn boundary_trace_relation(
    problem: &ProblemSpec,
    _res: &Resolution,
    grid: &RadialGrid,
    modes: &[ModeIndex],
    layout: &BlockLayout,
) -> Result<TraceRelation, GeneratorError> {
    let a = problem.radius;
    let n_modes = modes.len();
    let l_max = modes.iter().map(|m| m.l).max().unwrap();
    let shape_deg = problem.shape.as_ref().map(|s| s.max_degree()).unwrap_or(0);
    let eps_deg = problem.epsilon.max_degree();
    let gdeg = (2 * l_max + shape_deg.max(eps_deg) + 4) as usize;
    let quad = SphereQuadrature::new(gdeg, 2 * gdeg + 1);
    let sq2 = std::f64::consts::SQRT_2;
    let idx = |k: usize, f: usize, i: usize| layout.offsets[k] + 3 * i + f;

    let delta = problem.shape.as_ref().map(|s| s.delta).unwrap_or(0.0);

    // per-point accumulation of the projected boundary equation
    // row k: <P_k, (1+eps)[E_t + delta a s dE_t + delta E_r gradS/a]
    //              - [x^B_t + delta a s x^dB_t + delta B_r gradS_rot/a]> = 0
    // with E_t = sum tE_j T_j, x^B_t = sum vB_j T_j, and the radial traces
    // carried by Y_j.
    let mut c_te = DMatrix::<f64>::zeros(n_modes, n_modes);
    let mut c_vb = DMatrix::<f64>::zeros(n_modes, n_modes);
    let mut c_dte = DMatrix::<f64>::zeros(n_modes, n_modes);
    let mut c_dvb = DMatrix::<f64>::zeros(n_modes, n_modes);
    let mut c_tr = DMatrix::<f64>::zeros(n_modes, n_modes);

    for &(theta, phi, w) in &quad.points {
        let eps = problem.epsilon.eval(theta, phi);
        let (s_val, grad_s, grad_s_rot) = match &problem.shape {
            Some(sh) if delta != 0.0 => {
                let (g, gr) = sh.grad(theta, phi);
                (sh.eval(theta, phi), g, gr)
            }
            _ => (0.0, [0.0; 3], [0.0; 3]),
        };
        // basis vectors for every mode at this point
        let bases: Vec<([f64; 3], f64)> = modes
            .iter()
            .map(|mo| {
                let tb = tangent_basis(mo.l, mo.m, theta, phi);
                let t = match mo.pol {
                    Polarization::Te => tb.phi_v,
                    Polarization::Tm => tb.psi,
                };
                (t, tb.y)
            })
            .collect();
        let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        for k in 0..n_modes {
            let pk = &bases[k].0;
            for j in 0..n_modes {
                let tj = &bases[j].0;
                let yj = bases[j].1;
                let pt = dot(pk, tj);
                c_te[(k, j)] += w * (1.0 + eps) * pt;
                c_vb[(k, j)] -= w * pt;
                if delta != 0.0 {
                    c_dte[(k, j)] += w * (1.0 + eps) * delta * a * s_val * pt;
                    c_dvb[(k, j)] -= w * delta * a * s_val * pt;
                    // radial-trace tilt terms: E_r rides on TM modes, B_r on TE
                    match modes[j].pol {
                        Polarization::Tm => {
                            c_tr[(k, j)] += w * (1.0 + eps) * delta / a * dot(pk, &grad_s) * yj;
                        }
                        Polarization::Te => {
                            c_tr[(k, j)] -= w * delta / a * dot(pk, &grad_s_rot) * yj;
                        }
                    }
                }
            }
        }
    }

    // expand group coefficients into state functionals; collect the w-(0)
    // columns into m_minus, everything else into rest
    let mut m_minus = DMatrix::<f64>::zeros(n_modes, n_modes);
    let mut rest: Vec<std::collections::BTreeMap<usize, f64>> =
        vec![std::collections::BTreeMap::new(); n_modes];

    let add = |row: usize,
                   col: usize,
                   v: f64,
                   m_minus: &mut DMatrix<f64>,
                   rest: &mut Vec<std::collections::BTreeMap<usize, f64>>,
                   modes_len: usize| {
        if v == 0.0 {
            return;
        }
        // is col a w-(0) slot of some mode?
        for j in 0..modes_len {
            if col == layout.offsets[j] + 1 {
                m_minus[(row, j)] += v;
                return;
            }
        }
        *rest[row].entry(col).or_insert(0.0) += v;
    };

    for k in 0..n_modes {
        for j in 0..n_modes {
            // tE_j = (w+(0) + w-(0)) / (sqrt2 a)
            let c = c_te[(k, j)] / (sq2 * a);
            add(k, idx(j, 0, 0), c, &mut m_minus, &mut rest, n_modes);
            add(k, idx(j, 1, 0), c, &mut m_minus, &mut rest, n_modes);
            // vB_j = (w+(0) - w-(0)) / (sqrt2 a)
            let c = c_vb[(k, j)] / (sq2 * a);
            add(k, idx(j, 0, 0), c, &mut m_minus, &mut rest, n_modes);
            add(k, idx(j, 1, 0), -c, &mut m_minus, &mut rest, n_modes);
            // radial trace q(0)/a
            let c = c_tr[(k, j)] / a;
            add(k, idx(j, 2, 0), c, &mut m_minus, &mut rest, n_modes);
            // derivative traces: d/dr (w±(r)-combination / r) at the wall
            let cde = c_dte[(k, j)];
            let cdb = c_dvb[(k, j)];
            if cde != 0.0 || cdb != 0.0 {
                for &(q, dcoef) in &grid.d_rows[0] {
                    let c1 = (cde + cdb) / (sq2 * a) * dcoef;
                    let c2 = (cde - cdb) / (sq2 * a) * dcoef;
                    add(k, idx(j, 0, q), c1, &mut m_minus, &mut rest, n_modes);
                    add(k, idx(j, 1, q), c2, &mut m_minus, &mut rest, n_modes);
                }
                let c1 = -(cde + cdb) / (sq2 * a * a);
                let c2 = -(cde - cdb) / (sq2 * a * a);
                add(k, idx(j, 0, 0), c1, &mut m_minus, &mut rest, n_modes);
                add(k, idx(j, 1, 0), c2, &mut m_minus, &mut rest, n_modes);
            }
        }
    }

    // w-(0) = -M_minus^{-1} Rest
    let lu = m_minus.clone().lu();
    let inv = lu.try_inverse().ok_or(GeneratorError::Unsupported {
        detail: "boundary trace relation is singular; perturbation too large for the first-order model".into(),
    })?;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_modes];
    for k in 0..n_modes {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for j in 0..n_modes {
            let w = -inv[(k, j)];
            if w == 0.0 {
                continue;
            }
            for (&col, &v) in &rest[j] {
                *acc.entry(col).or_insert(0.0) += w * v;
            }
        }
        rows[k] = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
    }
    Ok(TraceRelation { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_res() -> Resolution {
        Resolution {
            l_max: 1,
            n_r: 48,
            r_max: 10.0,
            absorber: AbsorberSpec {
                start: 8.0,
                strength: 2.0,
                power: 3,
            },
            order: SbpOrder::Fourth,
            stretch: 1.5,
            include_l0: false,
        }
    }

    #[test]
    fn block_diagonal_for_unperturbed_sphere() {
        let gen = assemble(&ProblemSpec::dissipative_sphere(1.0), &small_res()).unwrap();
        // no entry may couple different mode blocks
        for &(i, j, _) in &gen.triplets {
            assert_eq!(gen.layout.block_of(i), gen.layout.block_of(j));
        }
        assert_eq!(gen.modes.len(), 6); // l=1: 3 m-values x 2 polarizations
    }

    #[test]
    fn dissipative_symmetric_part_is_negative() {
        let gen = assemble(&ProblemSpec::dissipative_sphere(1.0), &small_res()).unwrap();
        let lam = gen.max_symmetric_eigenvalue(400);
        assert!(lam <= 1e-10 * gen.csr.norm_inf(), "lambda_max(sym) = {lam}");
    }

    #[test]
    fn conservative_variant_is_skew() {
        let mut res = small_res();
        res.absorber.strength = 0.0;
        let problem = ProblemSpec {
            bc: BcKind::ConservativeReflecting,
            ..ProblemSpec::dissipative_sphere(1.0)
        };
        let gen = assemble(&problem, &res).unwrap();
        // max |(G + G^T) entry| relative to |G|
        let mut sym: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        let mut scale: f64 = 0.0;
        for &(i, j, v) in &gen.triplets {
            *sym.entry((i, j)).or_insert(0.0) += v.re;
            *sym.entry((j, i)).or_insert(0.0) += v.re;
            scale = scale.max(v.re.abs());
        }
        let worst = sym.values().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(worst < 1e-10 * scale, "skewness violation {worst} at scale {scale}");
    }

    #[test]
    fn delta_zero_reproduces_unperturbed_assembly_hash() {
        let base = assemble(&ProblemSpec::dissipative_sphere(1.0), &small_res()).unwrap();
        let with_zero_shape = ProblemSpec {
            shape: Some(ShapeSpec {
                delta: 0.0,
                harmonics: vec![(2, 0, 1.0)],
            }),
            ..ProblemSpec::dissipative_sphere(1.0)
        };
        let gen2 = assemble(&with_zero_shape, &small_res()).unwrap();
        assert_eq!(base.meta_hash, gen2.meta_hash);
    }

    #[test]
    fn resolution_validation() {
        let mut res = small_res();
        res.n_r = 8;
        assert!(assemble(&ProblemSpec::dissipative_sphere(1.0), &res).is_err());
        let mut res = small_res();
        res.absorber.start = 0.5;
        assert!(assemble(&ProblemSpec::dissipative_sphere(1.0), &res).is_err());
        let mut res = small_res();
        res.absorber.strength = -1.0;
        assert!(matches!(
            assemble(&ProblemSpec::dissipative_sphere(1.0), &res),
            Err(GeneratorError::UnstableAbsorber { .. })
        ));
    }

    #[test]
    fn coupled_assembly_matches_uniform_at_consistency() {
        // harmonic epsilon with zero coefficients must reproduce the scalar
        // reflection entries up to quadrature roundoff
        let uniform = assemble(&ProblemSpec::dissipative_sphere(1.0), &small_res()).unwrap();
        let coupled = assemble(
            &ProblemSpec {
                epsilon: EpsilonSpec::Harmonic {
                    base: 1.0,
                    terms: vec![(2, 0, 0.0)],
                },
                ..ProblemSpec::dissipative_sphere(1.0)
            },
            &small_res(),
        )
        .unwrap();
        let to_map = |g: &DiscreteGenerator| {
            let mut m: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
            for &(i, j, v) in &g.triplets {
                *m.entry((i, j)).or_insert(0.0) += v.re;
            }
            m
        };
        let a = to_map(&uniform);
        let b = to_map(&coupled);
        for (k, va) in &a {
            let vb = b.get(k).copied().unwrap_or(0.0);
            assert!(
                (va - vb).abs() < 1e-11 * va.abs().max(1.0),
                "entry {k:?}: {va} vs {vb}"
            );
        }
    }
}
