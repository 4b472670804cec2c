//! Finite-rank Hardy space truncations on S¹ and S³, Toeplitz matrices by
//! quadrature, a Fredholm index oracle, trace-product checks and singular
//! values of commutators [P, a].

use crate::error::{Error, Result};
use crate::geometry::{sample_sphere, SpherePoint};
use crate::linalg::{factorial, fit_line, gauss_legendre, identity, matrix_power, min_singular_value, trace, CMat};
use crate::mc::Moments;
use crate::seed;
use crate::symbol::SymbolMap;
use crate::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest caps accepted by [`build_basis`].
pub const MAX_CAP_N1: usize = 60;
pub const MAX_CAP_N2: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedBasis {
    pub n: usize,
    pub cap: usize,
    /// Multi-indices ordered by total degree, so every smaller cap is a prefix.
    pub monomials: Vec<Vec<u32>>,
    pub norms2: Vec<f64>,
}

/// ∫|z^α|² dV = α!(n−1)!/(n−1+|α|)! on S^{2n-1}.
pub fn monomial_norm2(alpha: &[u32]) -> f64 {
    let n = alpha.len() as u32;
    let deg: u32 = alpha.iter().sum();
    let num: f64 = alpha.iter().map(|&a| factorial(a)).product::<f64>() * factorial(n - 1);
    num / factorial(n - 1 + deg)
}

fn enumerate_monomials(n: usize, cap: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=cap as u32 {
        if n == 1 {
            out.push(vec![d]);
        } else {
            for a in (0..=d).rev() {
                out.push(vec![a, d - a]);
            }
        }
    }
    out
}

fn basis_unchecked(n: usize, cap: usize) -> TruncatedBasis {
    let monomials = enumerate_monomials(n, cap);
    let norms2 = monomials.iter().map(|a| monomial_norm2(a)).collect();
    TruncatedBasis {
        n,
        cap,
        monomials,
        norms2,
    }
}

/// Holomorphic monomials z^α with |α| ≤ D on S¹ (n = 1) or S³ (n = 2).
pub fn build_basis(n: usize, cap: usize) -> Result<TruncatedBasis> {
    match n {
        1 if cap <= MAX_CAP_N1 => Ok(basis_unchecked(1, cap)),
        2 if cap <= MAX_CAP_N2 => Ok(basis_unchecked(2, cap)),
        1 | 2 => Err(Error::Size(format!("cap {cap} too large for n = {n}"))),
        _ => Err(Error::Unsupported(format!("truncated bases exist for n = 1, 2 only, got {n}"))),
    }
}

impl TruncatedBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Number of basis monomials of degree ≤ d.
    pub fn prefix_len(&self, d: usize) -> usize {
        match self.n {
            1 => d + 1,
            _ => (d + 1) * (d + 2) / 2,
        }
    }

    pub fn eval_monomial(&self, i: usize, z: &SpherePoint) -> C64 {
        self.monomials[i]
            .iter()
            .zip(&z.z)
            .map(|(&a, zj)| zj.powu(a))
            .product()
    }

    /// Monte-Carlo Gram entry ∫ z^α z̄^β dV with its standard error.
    pub fn monte_carlo_gram(&self, i: usize, j: usize, samples: usize, seed_: u64) -> Result<(C64, f64)> {
        let s = sample_sphere(self.n, samples, seed::derive(seed_, "gram", 0))?;
        let mut m = Moments::default();
        for z in &s.points {
            m.push(self.eval_monomial(i, z) * self.eval_monomial(j, z).conj());
        }
        Ok((m.mean(), m.stderr()))
    }
}

/// Quadrature resolution for Toeplitz entries.
///
/// On S¹ the symbol is sampled on `phi_nodes` equispaced angles. On S³ the
/// coordinates are z₁ = sin θ e^{iφ₁}, z₂ = cos θ e^{iφ₂} with
/// dV = 2 sin θ cos θ dθ dφ₁ dφ₂ / (4π²); Gauss-Legendre in θ and a 2-D FFT
/// in (φ₁, φ₂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    /// When set, the matrix is recomputed at half resolution and the maximal
    /// entry difference must stay below this value.
    pub check_tolerance: Option<f64>,
}

impl Quadrature {
    /// Resolution adequate for monomials up to `cap`.
    pub fn for_cap(n: usize, cap: usize) -> Self {
        if n == 1 {
            Quadrature {
                theta_nodes: 0,
                phi_nodes: (8 * cap + 64).next_power_of_two().max(4096),
                check_tolerance: None,
            }
        } else {
            Quadrature {
                theta_nodes: 2 * cap + 48,
                phi_nodes: (4 * cap + 16).next_power_of_two(),
                check_tolerance: None,
            }
        }
    }

    fn halved(&self) -> Self {
        Quadrature {
            theta_nodes: (self.theta_nodes / 2).max(8),
            phi_nodes: (self.phi_nodes / 2).max(8),
            check_tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzMatrix {
    pub symbol: String,
    pub n: usize,
    /// Cap of the row (output) space and of the column (input) space.
    pub row_cap: usize,
    pub col_cap: usize,
    /// Matrix size N of the symbol; entry ((α,r),(β,c)) sits at
    /// (α_index·N + r, β_index·N + c).
    pub block: usize,
    pub matrix: CMat,
}

/// Fourier coefficients of every matrix entry of the symbol:
/// coefficient k of entry (r,c) at θ-node q.
struct SymbolSpectrum {
    n: usize,
    size: usize,
    phi: usize,
    theta: Vec<f64>,
    theta_w: Vec<f64>,
    /// [q][r*size+c][k-grid flattened]
    coef: Vec<Vec<Vec<C64>>>,
}

impl SymbolSpectrum {
    fn compute(a: &dyn SymbolMap, q: &Quadrature) -> Result<Self> {
        let n = a.n();
        let size = a.size();
        let p = q.phi_nodes;
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(p);
        let (theta, theta_w) = if n == 1 {
            (vec![0.0], vec![1.0])
        } else {
            gauss_legendre(q.theta_nodes, 0.0, PI / 2.0)
        };
        let coef: Vec<Vec<Vec<C64>>> = theta
            .par_iter()
            .map(|&t| {
                let npts = if n == 1 { p } else { p * p };
                let mut grids = vec![vec![C64::new(0.0, 0.0); npts]; size * size];
                for idx in 0..npts {
                    let z = if n == 1 {
                        SpherePoint {
                            z: vec![C64::from_polar(1.0, 2.0 * PI * idx as f64 / p as f64)],
                        }
                    } else {
                        let (i1, i2) = (idx / p, idx % p);
                        SpherePoint {
                            z: vec![
                                C64::from_polar(t.sin(), 2.0 * PI * i1 as f64 / p as f64),
                                C64::from_polar(t.cos(), 2.0 * PI * i2 as f64 / p as f64),
                            ],
                        }
                    };
                    let m = a.eval(&z);
                    for r in 0..size {
                        for c in 0..size {
                            grids[r * size + c][idx] = m[(r, c)];
                        }
                    }
                }
                let scale = 1.0 / npts as f64;
                for g in grids.iter_mut() {
                    if n == 1 {
                        fft.process(g);
                    } else {
                        // rows (φ₂ index contiguous), then columns
                        for row in g.chunks_mut(p) {
                            fft.process(row);
                        }
                        let mut col = vec![C64::new(0.0, 0.0); p];
                        for j in 0..p {
                            for i in 0..p {
                                col[i] = g[i * p + j];
                            }
                            fft.process(&mut col);
                            for i in 0..p {
                                g[i * p + j] = col[i];
                            }
                        }
                    }
                    for v in g.iter_mut() {
                        *v *= scale;
                    }
                }
                grids
            })
            .collect();
        if coef.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature { achieved: f64::INFINITY });
        }
        Ok(SymbolSpectrum {
            n,
            size,
            phi: p,
            theta,
            theta_w,
            coef,
        })
    }

    fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.phi as i64) as usize
    }

    /// ⟨a z^β e_c, z^α e_r⟩ / (‖z^α‖‖z^β‖).
    fn entry(&self, alpha: &[u32], beta: &[u32], r: usize, c: usize, norm: f64) -> C64 {
        let rc = r * self.size + c;
        if self.n == 1 {
            let k = alpha[0] as i64 - beta[0] as i64;
            return self.coef[0][rc][self.wrap(k)];
        }
        let k1 = self.wrap(alpha[0] as i64 - beta[0] as i64);
        let k2 = self.wrap(alpha[1] as i64 - beta[1] as i64);
        let e1 = (alpha[0] + beta[0]) as i32;
        let e2 = (alpha[1] + beta[1]) as i32;
        let mut s = C64::new(0.0, 0.0);
        for (q, (&t, &w)) in self.theta.iter().zip(&self.theta_w).enumerate() {
            let (st, ct) = t.sin_cos();
            let radial = 2.0 * st * ct * st.powi(e1) * ct.powi(e2);
            s += self.coef[q][rc][k1 * self.phi + k2] * (w * radial);
        }
        s / norm
    }
}

fn assemble(
    spec: &SymbolSpectrum,
    label: String,
    rows: &TruncatedBasis,
    row_cap: usize,
    col_cap: usize,
) -> ToeplitzMatrix {
    let nb = spec.size;
    let nr = rows.prefix_len(row_cap);
    let nc = rows.prefix_len(col_cap);
    let mut m = CMat::zeros(nr * nb, nc * nb);
    let cols: Vec<Vec<C64>> = (0..nc)
        .into_par_iter()
        .map(|j| {
            let mut col = Vec::with_capacity(nr * nb * nb);
            for i in 0..nr {
                let norm = (rows.norms2[i] * rows.norms2[j]).sqrt();
                for r in 0..nb {
                    for c in 0..nb {
                        col.push(spec.entry(&rows.monomials[i], &rows.monomials[j], r, c, norm));
                    }
                }
            }
            col
        })
        .collect();
    for (j, col) in cols.iter().enumerate() {
        let mut it = col.iter();
        for i in 0..nr {
            for r in 0..nb {
                for c in 0..nb {
                    m[(i * nb + r, j * nb + c)] = *it.next().unwrap();
                }
            }
        }
    }
    ToeplitzMatrix {
        symbol: label,
        n: spec.n,
        row_cap,
        col_cap,
        block: nb,
        matrix: m,
    }
}

/// Rectangular Toeplitz block: rows up to `row_cap`, columns up to `col_cap`.
/// Caps are not bounded by [`MAX_CAP_N1`]/[`MAX_CAP_N2`] here, so that
/// intermediate spaces can be enlarged.
pub fn toeplitz_block(a: &dyn SymbolMap, row_cap: usize, col_cap: usize, q: &Quadrature) -> Result<ToeplitzMatrix> {
    let n = a.n();
    if n != 1 && n != 2 {
        return Err(Error::Unsupported(format!("Toeplitz matrices for n = 1, 2 only, got {n}")));
    }
    let big = basis_unchecked(n, row_cap.max(col_cap));
    let spec = SymbolSpectrum::compute(a, q)?;
    let t = assemble(&spec, a.label(), &big, row_cap, col_cap);
    if let Some(tol) = q.check_tolerance {
        let coarse = SymbolSpectrum::compute(a, &q.halved())?;
        let tc = assemble(&coarse, a.label(), &big, row_cap, col_cap);
        let achieved = (&t.matrix - &tc.matrix).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if achieved > tol {
            return Err(Error::Quadrature { achieved });
        }
    }
    Ok(t)
}

/// Square Toeplitz matrix on the given basis.
pub fn toeplitz_matrix(a: &dyn SymbolMap, basis: &TruncatedBasis, q: &Quadrature) -> Result<ToeplitzMatrix> {
    if a.n() != basis.n {
        return Err(Error::Domain("symbol and basis live on different spheres".into()));
    }
    toeplitz_block(a, basis.cap, basis.cap, q)
}

/// The Toeplitz matrix of the pointwise inverse a⁻¹.
struct Inverse<'a>(&'a dyn SymbolMap);

impl SymbolMap for Inverse<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn size(&self) -> usize {
        self.0.size()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        self.0.eval_inv(z)
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        self.0.eval(z)
    }
    fn holder(&self) -> f64 {
        self.0.holder()
    }
    fn label(&self) -> String {
        format!("({})^-1", self.0.label())
    }
}

/// Options of the truncated index oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexOracleOptions {
    /// Caps, increasing; the top three decide.
    pub caps: Vec<usize>,
    /// Intermediate space cap is cap + extra.
    pub extra: usize,
    /// Power m in tr(1 − T(a⁻¹)T(a))^m − tr(1 − T(a)T(a⁻¹))^m.
    pub power: u32,
    pub tolerance: f64,
    pub margin: f64,
    pub quadrature: Option<Quadrature>,
}

impl IndexOracleOptions {
    pub fn for_n(n: usize) -> Self {
        IndexOracleOptions {
            caps: if n == 1 { vec![20, 40, 60] } else { vec![6, 10, 14] },
            extra: if n == 1 { 64 } else { 8 },
            power: 4,
            tolerance: 0.2,
            margin: 0.05,
            quadrature: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexOracleReport {
    pub index: i64,
    /// (cap, real part, imaginary part) for each cap.
    pub values: Vec<(usize, f64, f64)>,
    /// Largest |value − index| over the top three caps.
    pub spread: f64,
}

/// Smallest singular value of a(z) over seeded uniform samples.
pub fn invertibility_margin(a: &dyn SymbolMap, samples: usize, seed_: u64) -> Result<f64> {
    let s = sample_sphere(a.n(), samples, seed::derive(seed_, "margin", 0))?;
    Ok(s
        .points
        .par_iter()
        .map(|z| min_singular_value(&a.eval(z)))
        .reduce(|| f64::INFINITY, f64::min))
}

/// Index of T(a) from the finite-rank trace formula, stabilized across caps.
pub fn fredholm_index_truncated(a: &dyn SymbolMap, opts: &IndexOracleOptions) -> Result<IndexOracleReport> {
    if opts.caps.len() < 3 {
        return Err(Error::Domain("need at least three caps".into()));
    }
    if opts.caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("caps must increase".into()));
    }
    // With no intermediate room both products are square compressions and
    // the two traces cancel identically, whatever the index.
    if opts.extra == 0 {
        return Err(Error::Domain("intermediate cap must exceed the row cap (extra > 0)".into()));
    }
    let margin = invertibility_margin(a, 2000, 0x1d)?;
    if !(margin > opts.margin) {
        return Err(Error::Precondition(format!(
            "symbol not invertible with margin {}: min singular value {margin:.3e}",
            opts.margin
        )));
    }
    let top = *opts.caps.last().unwrap();
    let mid = top + opts.extra;
    let q = opts.quadrature.unwrap_or_else(|| Quadrature::for_cap(a.n(), mid));
    let inv = Inverse(a);
    let ta = toeplitz_block(a, mid, mid, &q)?;
    let tinv = toeplitz_block(&inv, mid, mid, &q)?;
    let nb = a.size();
    let basis = basis_unchecked(a.n(), mid);
    let values = opts
        .caps
        .iter()
        .map(|&d| {
            let r = basis.prefix_len(d) * nb;
            let k = basis.prefix_len(d + opts.extra) * nb;
            let x = identity(r) - tinv.matrix.view((0, 0), (r, k)) * ta.matrix.view((0, 0), (k, r));
            let y = identity(r) - ta.matrix.view((0, 0), (r, k)) * tinv.matrix.view((0, 0), (k, r));
            let v = trace(&matrix_power(&x, opts.power)) - trace(&matrix_power(&y, opts.power));
            (d, v.re, v.im)
        })
        .collect::<Vec<_>>();
    let last3 = &values[values.len() - 3..];
    let index = last3[2].1.round();
    let spread = last3.iter().map(|v| (v.1 - index).abs()).fold(0.0, f64::max);
    if !(spread < opts.tolerance) {
        return Err(Error::Inconclusive(format!(
            "truncated index did not stabilize: {}",
            values
                .iter()
                .map(|(d, re, _)| format!("D={d}: {re:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    Ok(IndexOracleReport {
        index: index as i64,
        values,
        spread,
    })
}

/// Kernel on S¹ as a function of two angles, integrated against dθ/2π.
pub type CircleKernel<'a> = &'a (dyn Fn(f64, f64) -> C64 + Sync);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceProductReport {
    /// tr(K₁⋯K_m) from Fourier-Galerkin matrices.
    pub matrix_side: C64,
    /// ∫ ∏ k_j(x_j, x_{j+1}) by the product trapezoid rule.
    pub integral_side: C64,
    /// Optional Monte-Carlo value of the integral and its standard error.
    pub monte_carlo: Option<(C64, f64)>,
    pub relative_difference: f64,
}

/// Matrix of the integral operator in the Fourier basis |j| ≤ modes.
pub fn fourier_matrix(k: CircleKernel, modes: usize, grid: usize) -> CMat {
    let g = grid.max(4 * modes + 4).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(g);
    let inv = planner.plan_fft_inverse(g);
    let h = |i: usize| 2.0 * PI * i as f64 / g as f64;
    // ⟨K e_c, e_r⟩ = ∫∫ k(x,y) e^{icy} e^{−irx} dx dy/(2π)²
    let mut rows: Vec<Vec<C64>> = (0..g).map(|a| (0..g).map(|b| k(h(a), h(b))).collect()).collect();
    for row in rows.iter_mut() {
        inv.process(row); // Σ_y k(x,y) e^{+icy}
    }
    let size = 2 * modes + 1;
    let wrap = |j: i64| j.rem_euclid(g as i64) as usize;
    let mut out = CMat::zeros(size, size);
    let mut col = vec![C64::new(0.0, 0.0); g];
    for (ci, c) in (-(modes as i64)..=modes as i64).enumerate() {
        for a in 0..g {
            col[a] = rows[a][wrap(c)];
        }
        fwd.process(&mut col);
        for (ri, r) in (-(modes as i64)..=modes as i64).enumerate() {
            out[(ri, ci)] = col[wrap(r)] / (g * g) as f64;
        }
    }
    out
}

/// tr ∏ (K_j / G) on a G-point grid.
pub fn trace_product_grid(kernels: &[CircleKernel], grid: usize) -> C64 {
    grid_trace_and_bound(kernels, grid).0
}

/// Grid trace together with ∏‖K_j‖_F, an upper bound on its modulus.
fn grid_trace_and_bound(kernels: &[CircleKernel], grid: usize) -> (C64, f64) {
    let h = |i: usize| 2.0 * PI * i as f64 / grid as f64;
    let mats: Vec<CMat> = kernels
        .iter()
        .map(|k| DMatrix::from_fn(grid, grid, |a, b| k(h(a), h(b)) / grid as f64))
        .collect();
    let bound = mats.iter().map(|m| m.norm()).product();
    let mut p = mats[0].clone();
    for m in &mats[1..] {
        p = p * m;
    }
    (trace(&p), bound)
}

/// Monte-Carlo estimate of ∫ ∏ k_j(x_j, x_{j+1}) dx/(2π)^m.
pub fn trace_product_mc(kernels: &[CircleKernel], samples: usize, seed_: u64) -> (C64, f64) {
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(seed_, "trace-mc", c as u64);
            let mut m = Moments::default();
            let mut x = vec![0.0; kernels.len()];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                for xi in x.iter_mut() {
                    *xi = 2.0 * PI * rng.gen::<f64>();
                }
                let mut v = C64::new(1.0, 0.0);
                for (j, k) in kernels.iter().enumerate() {
                    v *= k(x[j], x[(j + 1) % x.len()]);
                }
                m.push(v);
            }
            m
        })
        .collect();
    let mut all = Moments::default();
    for p in &parts {
        all.merge(p);
    }
    (all.mean(), all.stderr())
}

/// Both sides of tr(K₁⋯K_m) = ∫∏k_j(x_j,x_{j+1}) on S¹.
pub fn trace_product_integral(
    kernels: &[CircleKernel],
    modes: usize,
    grid: usize,
    mc_samples: Option<(usize, u64)>,
) -> Result<TraceProductReport> {
    if kernels.is_empty() {
        return Err(Error::Domain("need at least one kernel".into()));
    }
    let mats: Vec<CMat> = kernels.iter().map(|k| fourier_matrix(*k, modes, 2 * grid)).collect();
    let mut p = mats[0].clone();
    for m in &mats[1..] {
        p = p * m;
    }
    let matrix_side = trace(&p);
    let coarse = trace_product_grid(kernels, grid / 2);
    let (integral_side, bound) = grid_trace_and_bound(kernels, grid);
    // a trace that vanishes is compared on the scale of the kernels themselves
    let scale = integral_side.norm().max(1e-12 * bound).max(1e-300);
    if (integral_side - coarse).norm() / scale > 0.05 || !integral_side.is_finite() {
        return Err(Error::Estimation(format!(
            "product quadrature does not settle under refinement: {coarse} vs {integral_side}"
        )));
    }
    let monte_carlo = mc_samples.map(|(s, sd)| trace_product_mc(kernels, s, sd));
    Ok(TraceProductReport {
        matrix_side,
        integral_side,
        monte_carlo,
        relative_difference: (matrix_side - integral_side).norm() / scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularValueReport {
    pub alpha: f64,
    pub values: Vec<f64>,
    /// Slope of log s_j against log j over the fit window.
    pub slope: f64,
    pub fit_window: (usize, usize),
    /// Number of singular values above the relative noise floor.
    pub numerical_rank: usize,
    /// (p, partial sums at rank/8, rank/4, rank/2, rank).
    pub partial_sums: Vec<(f64, Vec<f64>)>,
    /// Per p: whether the last doubling adds less than 1% to the sum.
    pub flattens: Vec<(f64, bool)>,
}

/// Relative floor below which singular values count as zero.
pub const RANK_FLOOR: f64 = 1e-10;

fn singular_report(alpha: f64, mut s: Vec<f64>, ps: &[f64]) -> Result<SingularValueReport> {
    s.sort_by(|a, b| b.total_cmp(a));
    let s1 = s.first().copied().unwrap_or(0.0);
    let numerical_rank = if s1 == 0.0 {
        0
    } else {
        s.iter().filter(|v| **v > RANK_FLOOR * s1).count()
    };
    let (slope, fit_window) = if numerical_rank >= 8 {
        let lo = 2;
        let hi = numerical_rank;
        let xs: Vec<f64> = (lo..=hi).map(|j| (j as f64).ln()).collect();
        let ys: Vec<f64> = (lo..=hi).map(|j| s[j - 1].ln()).collect();
        (fit_line(&xs, &ys).0, (lo, hi))
    } else if numerical_rank == 0 {
        (f64::NEG_INFINITY, (0, 0))
    } else {
        // finite rank: the tail is identically zero
        (f64::NEG_INFINITY, (1, numerical_rank))
    };
    let len = s.len();
    let marks = [len / 8, len / 4, len / 2, len];
    let partial_sums: Vec<(f64, Vec<f64>)> = ps
        .iter()
        .map(|&p| {
            let sums = marks
                .iter()
                .map(|&m| s[..m].iter().map(|v| v.powf(p)).sum::<f64>())
                .collect();
            (p, sums)
        })
        .collect();
    let flattens = partial_sums
        .iter()
        .map(|(p, v)| (*p, v[3] == 0.0 || (v[3] - v[2]) / v[3] < 0.01))
        .collect();
    Ok(SingularValueReport {
        alpha,
        values: s,
        slope,
        fit_window,
        numerical_rank,
        partial_sums,
        flattens,
    })
}

/// Singular values of [P, a] on S¹ for a scalar symbol sampled on a uniform
/// grid, with P the projection onto non-negative Fourier modes.
pub fn commutator_singular_values_circle(a: &dyn SymbolMap, grid: usize, ps: &[f64]) -> Result<SingularValueReport> {
    if a.n() != 1 || a.size() != 1 {
        return Err(Error::Unsupported("circle commutators need a scalar symbol on S¹".into()));
    }
    if grid < 256 || grid % 2 != 0 {
        return Err(Error::Size(format!("grid {grid} below rank 256")));
    }
    // Hankel entries reach frequency ±grid, so sample at 2·grid to keep
    // the two halves of the spectrum from aliasing into each other.
    let nodes = 2 * grid;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nodes);
    let mut c: Vec<C64> = (0..nodes)
        .map(|i| {
            let z = SpherePoint {
                z: vec![C64::from_polar(1.0, 2.0 * PI * i as f64 / nodes as f64)],
            };
            a.eval(&z)[(0, 0)]
        })
        .collect();
    fft.process(&mut c);
    for v in c.iter_mut() {
        *v /= nodes as f64;
    }
    let half = grid / 2;
    let coef = |k: i64| c[k.rem_euclid(nodes as i64) as usize];
    // PaQ: rows j ≥ 0, columns −1, −2, …; QaP: rows −1, −2, …, columns k ≥ 0
    let upper = CMat::from_fn(half, half, |j, k| coef(j as i64 + k as i64 + 1));
    let lower = CMat::from_fn(half, half, |j, k| coef(-(j as i64) - 1 - k as i64));
    let real = c.iter().all(|v| v.im.abs() < 1e-14 * (1.0 + v.re.abs()));
    let svd = |m: &CMat| -> Vec<f64> {
        if real {
            let r = m.map(|v| v.re);
            r.singular_values().iter().copied().collect()
        } else {
            m.clone().singular_values().iter().copied().collect()
        }
    };
    let (mut s, s2) = rayon::join(|| svd(&upper), || svd(&lower));
    s.extend(s2);
    singular_report(a.holder(), s, ps)
}

/// Singular values of the Hankel parts of [P, a] on S³, from
/// H_a*H_a = T(|a|²) − T(ā)T(a) on the monomials of degree ≤ cap (the
/// intermediate space enlarged by `extra`), for a scalar symbol.
pub fn commutator_singular_values_sphere(
    a: &dyn SymbolMap,
    cap: usize,
    extra: usize,
    ps: &[f64],
) -> Result<SingularValueReport> {
    if a.n() != 2 || a.size() != 1 {
        return Err(Error::Unsupported("sphere commutators need a scalar symbol on S³".into()));
    }
    if cap < MAX_CAP_N2 {
        return Err(Error::Size(format!("cap {cap} too small for a stable fit (need ≥ {MAX_CAP_N2})")));
    }
    struct Abs2<'a>(&'a dyn SymbolMap);
    impl SymbolMap for Abs2<'_> {
        fn n(&self) -> usize {
            2
        }
        fn size(&self) -> usize {
            1
        }
        fn eval(&self, z: &SpherePoint) -> CMat {
            CMat::from_element(1, 1, C64::new(self.0.eval(z)[(0, 0)].norm_sqr(), 0.0))
        }
        fn label(&self) -> String {
            "|a|^2".into()
        }
    }
    struct Conj<'a>(&'a dyn SymbolMap);
    impl SymbolMap for Conj<'_> {
        fn n(&self) -> usize {
            2
        }
        fn size(&self) -> usize {
            1
        }
        fn eval(&self, z: &SpherePoint) -> CMat {
            self.0.eval(z).map(|v| v.conj())
        }
        fn label(&self) -> String {
            "conj a".into()
        }
    }
    let mid = cap + extra;
    let q = Quadrature::for_cap(2, mid);
    let basis = basis_unchecked(2, mid);
    let d = basis.prefix_len(cap);
    let k = basis.prefix_len(mid);
    let t_abs = toeplitz_block(&Abs2(a), cap, cap, &q)?.matrix;
    let t_a = toeplitz_block(a, mid, mid, &q)?.matrix;
    let t_conj = toeplitz_block(&Conj(a), mid, mid, &q)?.matrix;
    let mut s = Vec::with_capacity(2 * d);
    for (x, y) in [(&t_conj, &t_a), (&t_a, &t_conj)] {
        let h = &t_abs - x.view((0, 0), (d, k)) * y.view((0, 0), (k, d));
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        s.extend(h.symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()));
    }
    singular_report(a.holder(), s, ps)
}
