//! Complex Clifford generators on S_V = Λ*ℂⁿ, the spin representation on
//! E_n, and the symbols u, ũ, g, g̃.
//!
//! Generators act on all of S_V (dimension 2ⁿ, basis ordered by degree and
//! then lexicographically): e_{j,+} = √2·(wedge with e_j) and
//! e_{j,−} = −√2·(contraction with e_j). Single generators exchange the even
//! and odd parts, so only even products are restricted to E_n, which is the
//! even part for n even and the odd part for n odd.

use crate::error::{Error, Result};
use crate::geometry::{Chart, SpherePoint, UNIT_TOL};
use crate::linalg::{identity, CMat};
use crate::symbol::{Differentiable, SymbolMap};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const MAX_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Operator on E_n.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordOp {
    pub n: usize,
    pub matrix: CMat,
}

impl CliffordOp {
    pub fn new(n: usize, matrix: CMat) -> Result<Self> {
        let d = 1usize << (n - 1);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Size(format!(
                "E_{n} operators are {d}x{d}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(CliffordOp { n, matrix })
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub n: usize,
    /// Basis of S_V as bitmasks (bit j-1 set when e_j is present).
    pub basis: Vec<u32>,
    pub e_plus: Vec<CMat>,
    pub e_minus: Vec<CMat>,
    /// Positions of the E_n basis vectors inside `basis`.
    pub e_index: Vec<usize>,
    /// u(x) = Σ_i x_i u_basis[i] over the 2n real coordinates, on E_n.
    pub u_basis: Vec<CMat>,
}

fn basis_order(n: usize) -> Vec<u32> {
    let mut b: Vec<u32> = (0..(1u32 << n)).collect();
    b.sort_by_key(|&s| {
        let elems: Vec<u32> = (0..n as u32).filter(|j| s & (1 << j) != 0).collect();
        (s.count_ones(), elems)
    });
    b
}

pub fn build_generators(n: usize) -> Result<GeneratorSet> {
    if n == 0 || n > MAX_N {
        return Err(Error::Size(format!("n = {n} outside 1..={MAX_N}")));
    }
    let basis = basis_order(n);
    let dim = basis.len();
    let pos = |s: u32| basis.iter().position(|&b| b == s).unwrap();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut e_plus = Vec::with_capacity(n);
    let mut e_minus = Vec::with_capacity(n);
    for j in 0..n {
        let bit = 1u32 << j;
        let mut cre = CMat::zeros(dim, dim);
        let mut ann = CMat::zeros(dim, dim);
        for (col, &s) in basis.iter().enumerate() {
            let sign = if (s & (bit - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            if s & bit == 0 {
                cre[(pos(s | bit), col)] = C64::new(sqrt2 * sign, 0.0);
            } else {
                ann[(pos(s & !bit), col)] = C64::new(-sqrt2 * sign, 0.0);
            }
        }
        e_plus.push(cre);
        e_minus.push(ann);
    }
    let parity = (n % 2) as u32;
    let e_index: Vec<usize> = basis
        .iter()
        .enumerate()
        .filter(|(_, s)| s.count_ones() % 2 == parity)
        .map(|(i, _)| i)
        .collect();
    let mut g = GeneratorSet {
        n,
        basis,
        e_plus,
        e_minus,
        e_index,
        u_basis: Vec::new(),
    };
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    let lead = (&g.e_plus[0] + &g.e_minus[0]) * half;
    let mut u_basis = Vec::with_capacity(2 * n);
    for j in 0..n {
        let re = &lead * (&g.e_plus[j] + &g.e_minus[j]);
        let im = &lead * (&g.e_plus[j] * i - &g.e_minus[j] * i);
        u_basis.push(g.restrict_matrix(&re));
        u_basis.push(g.restrict_matrix(&im));
    }
    g.u_basis = u_basis;
    Ok(g)
}

impl GeneratorSet {
    pub fn dim_e(&self) -> usize {
        self.e_index.len()
    }

    pub fn generator(&self, j: usize, s: Sign) -> &CMat {
        match s {
            Sign::Plus => &self.e_plus[j],
            Sign::Minus => &self.e_minus[j],
        }
    }

    /// E_n block of an operator on S_V.
    pub fn restrict_matrix(&self, m: &CMat) -> CMat {
        let d = self.dim_e();
        CMat::from_fn(d, d, |r, c| m[(self.e_index[r], self.e_index[c])])
    }

    /// Restriction of an even product of generators to E_n.
    pub fn even_product(&self, word: &[(usize, Sign)]) -> Result<CliffordOp> {
        if word.len() % 2 != 0 {
            return Err(Error::Domain(
                "odd products do not preserve E_n".into(),
            ));
        }
        let mut m = identity(self.basis.len());
        for &(j, s) in word {
            m = m * self.generator(j, s);
        }
        CliffordOp::new(self.n, self.restrict_matrix(&m))
    }

    /// u at any real vector x ∈ ℝ^{2n} (real-linear, no unit check).
    pub fn u_matrix(&self, x: &[f64]) -> CMat {
        let d = self.dim_e();
        let mut m = CMat::zeros(d, d);
        for (xi, b) in x.iter().zip(&self.u_basis) {
            if *xi != 0.0 {
                m += b * C64::new(*xi, 0.0);
            }
        }
        m
    }
}

fn check_unit(z: &SpherePoint, n: usize) -> Result<()> {
    if z.n() != n {
        return Err(Error::Domain(format!("point in C^{}, generators for n = {n}", z.n())));
    }
    let r = crate::geometry::norm(&z.z);
    if (r - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!("|z| = {r} is not 1")));
    }
    Ok(())
}

/// u(z) = ½(e_{1,+} + e_{1,−})(z₊ + z̄₋) on E_n.
pub fn symbol_u(gens: &GeneratorSet, z: &SpherePoint) -> Result<CliffordOp> {
    check_unit(z, gens.n)?;
    CliffordOp::new(gens.n, gens.u_matrix(&z.to_real()))
}

/// q(U) = U e₁, the first column.
pub fn q_of(u: &CliffordOp) -> Vec<C64> {
    u.matrix.column(0).iter().copied().collect()
}

/// ι(z) = (−z₁ or −z̄₁, z₂, …, z_n, 0, …, 0) in ℂ^{2^{n-1}}.
pub fn iota(z: &SpherePoint) -> Vec<C64> {
    let n = z.n();
    let mut out = vec![C64::new(0.0, 0.0); 1 << (n - 1)];
    out[0] = if n % 2 == 0 { -z.z[0] } else { -z.z[0].conj() };
    out[1..n].copy_from_slice(&z.z[1..n]);
    out
}

/// Below this argument e^{−4/x²} is under 1e−48 and treated as 0.
pub const XI0_CLAMP: f64 = 0.19;

/// ξ₀(x) = e^{−4/x²}, ξ₀(0) = 0.
pub fn xi0(x: f64) -> f64 {
    if x.abs() < XI0_CLAMP {
        0.0
    } else {
        (-4.0 / (x * x)).exp()
    }
}

/// ξ₀'(x) = 8/x³ · e^{−4/x²}.
pub fn xi0_prime(x: f64) -> f64 {
    if x.abs() < XI0_CLAMP {
        0.0
    } else {
        8.0 / (x * x * x) * (-4.0 / (x * x)).exp()
    }
}

/// ξ_t(x) = e^{−4(1−t)/x²}, the homotopy parameter family (ξ₁ ≡ 1, ξ₀ = ξ₀).
pub fn xi_t(x: f64, t: f64) -> f64 {
    if t >= 1.0 {
        return 1.0;
    }
    let e = 4.0 * (1.0 - t) / (x * x);
    if !e.is_finite() || e > 745.0 {
        0.0
    } else {
        (-e).exp()
    }
}

/// ξ(z) = ξ₀(|1−ℜz₁|)·z + (ξ₀(|1−ℜz₁|) − 1, 0, …, 0).
pub fn cutoff_xi(z: &SpherePoint) -> Vec<C64> {
    let s = xi0((1.0 - z.z[0].re).abs());
    let mut out: Vec<C64> = z.z.iter().map(|c| c * s).collect();
    out[0] += s - 1.0;
    out
}

/// ũ(z) = ξ₀(|1−ℜz₁|)(u(z) − 1) + 1.
pub fn symbol_u_tilde(gens: &GeneratorSet, z: &SpherePoint) -> Result<CliffordOp> {
    check_unit(z, gens.n)?;
    let s = xi0((1.0 - z.z[0].re).abs());
    CliffordOp::new(gens.n, blend(gens, &z.to_real(), s))
}

/// w(z,t) = ξ_t(|1−ℜz₁|)(u(z) − 1) + 1; w(·,1) = u and w(·,0) = ũ.
pub fn homotopy_w(gens: &GeneratorSet, z: &SpherePoint, t: f64) -> Result<CliffordOp> {
    check_unit(z, gens.n)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    let s = xi_t((1.0 - z.z[0].re).abs(), t);
    CliffordOp::new(gens.n, blend(gens, &z.to_real(), s))
}

fn blend(gens: &GeneratorSet, x: &[f64], s: f64) -> CMat {
    let d = gens.dim_e();
    let id = identity(d);
    if s == 0.0 {
        return id;
    }
    (gens.u_matrix(x) - &id) * C64::new(s, 0.0) + id
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GVariant {
    /// g = u ∘ ν̃ (equal to u(e1) = −I off the chart).
    Lipschitz,
    /// g̃ = ũ ∘ ν̃ (equal to I off the chart).
    Smooth,
}

pub fn symbol_g(
    gens: &GeneratorSet,
    chart: &Chart,
    y: &SpherePoint,
    variant: GVariant,
) -> Result<CliffordOp> {
    check_unit(y, gens.n)?;
    let p = chart.nu_tilde(y);
    match variant {
        GVariant::Lipschitz => symbol_u(gens, &p),
        GVariant::Smooth => symbol_u_tilde(gens, &p),
    }
}

/// Enumerates Γ_l^±: sign words of length 2l−1 with exactly l entries `s`.
pub fn gamma_set(l: usize, s: Sign) -> Vec<Vec<Sign>> {
    let len = 2 * l - 1;
    (0u32..(1 << len))
        .filter(|m| m.count_ones() as usize == l)
        .map(|m| {
            (0..len)
                .map(|i| if m & (1 << i) != 0 { s } else { other(s) })
                .collect()
        })
        .collect()
}

fn other(s: Sign) -> Sign {
    match s {
        Sign::Plus => Sign::Minus,
        Sign::Minus => Sign::Plus,
    }
}

/// Coefficient tensor of tr(z₊ α_k): the entry for (j, m_1, …, m_{2l−1}) is
/// tr_E(e_{j,+} e_{m_1,k_1} ⋯ e_{m_{2l−1},k_{2l−1}}), i.e. the coefficient of
/// z_j dw_{m_1} ⊗ ⋯ ⊗ dw_{m_{2l−1}} with dw = dz or dz̄ according to k.
pub fn z_plus_alpha_coefficients(gens: &GeneratorSet, k: &[Sign]) -> Vec<(Vec<usize>, C64)> {
    let n = gens.n;
    let len = k.len() + 1;
    let total = n.pow(len as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut idx = Vec::with_capacity(len);
        let mut c = code;
        for _ in 0..len {
            idx.push(c % n);
            c /= n;
        }
        let mut word = vec![(idx[0], Sign::Plus)];
        word.extend(idx[1..].iter().zip(k).map(|(&m, &s)| (m, s)));
        let t = gens
            .even_product(&word)
            .map(|op| crate::linalg::trace(&op.matrix))
            .unwrap_or_default();
        if t.norm() > 1e-12 {
            out.push((idx, t));
        }
    }
    out
}

/// The spin symbol u as a [`SymbolMap`].
#[derive(Clone, Debug)]
pub struct SpinSymbol {
    pub gens: Arc<GeneratorSet>,
}

impl SpinSymbol {
    pub fn new(n: usize) -> Result<Self> {
        Ok(SpinSymbol {
            gens: Arc::new(build_generators(n)?),
        })
    }
}

impl SymbolMap for SpinSymbol {
    fn n(&self) -> usize {
        self.gens.n
    }
    fn size(&self) -> usize {
        self.gens.dim_e()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        self.gens.u_matrix(&z.to_real())
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        self.eval(z).adjoint()
    }
    fn label(&self) -> String {
        format!("u(n={})", self.gens.n)
    }
}

impl Differentiable for SpinSymbol {
    fn differential(&self, _: &SpherePoint, v: &[f64]) -> CMat {
        self.gens.u_matrix(v)
    }
}

/// ũ as a [`SymbolMap`].
#[derive(Clone, Debug)]
pub struct SpinSymbolTilde {
    pub gens: Arc<GeneratorSet>,
}

impl SymbolMap for SpinSymbolTilde {
    fn n(&self) -> usize {
        self.gens.n
    }
    fn size(&self) -> usize {
        self.gens.dim_e()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        let s = xi0((1.0 - z.z[0].re).abs());
        blend(&self.gens, &z.to_real(), s)
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        // ũ*ũ = |ξ|² I
        let xi = cutoff_xi(z);
        let r2: f64 = xi.iter().map(|c| c.norm_sqr()).sum();
        self.eval(z).adjoint() / C64::new(r2, 0.0)
    }
    fn label(&self) -> String {
        format!("u~(n={})", self.gens.n)
    }
}

impl Differentiable for SpinSymbolTilde {
    fn differential(&self, z: &SpherePoint, v: &[f64]) -> CMat {
        let x = (1.0 - z.z[0].re).abs();
        let s = xi0(x);
        let ds = -xi0_prime(x) * v[0];
        let d = self.gens.dim_e();
        let mut m = CMat::zeros(d, d);
        if ds != 0.0 {
            m += (self.gens.u_matrix(&z.to_real()) - identity(d)) * C64::new(ds, 0.0);
        }
        if s != 0.0 {
            m += self.gens.u_matrix(v) * C64::new(s, 0.0);
        }
        m
    }
}

/// g or g̃ on Y = S^{2n-1} through the chart.
#[derive(Clone, Debug)]
pub struct ChartSymbol {
    pub gens: Arc<GeneratorSet>,
    pub chart: Chart,
    pub variant: GVariant,
}

impl SymbolMap for ChartSymbol {
    fn n(&self) -> usize {
        self.gens.n
    }
    fn size(&self) -> usize {
        self.gens.dim_e()
    }
    fn eval(&self, y: &SpherePoint) -> CMat {
        let p = self.chart.nu_tilde(y);
        match self.variant {
            GVariant::Lipschitz => self.gens.u_matrix(&p.to_real()),
            GVariant::Smooth => SpinSymbolTilde {
                gens: self.gens.clone(),
            }
            .eval(&p),
        }
    }
    fn eval_inv(&self, y: &SpherePoint) -> CMat {
        let p = self.chart.nu_tilde(y);
        match self.variant {
            GVariant::Lipschitz => self.gens.u_matrix(&p.to_real()).adjoint(),
            GVariant::Smooth => SpinSymbolTilde {
                gens: self.gens.clone(),
            }
            .eval_inv(&p),
        }
    }
    fn label(&self) -> String {
        match self.variant {
            GVariant::Lipschitz => format!("g(n={})", self.gens.n),
            GVariant::Smooth => format!("g~(n={})", self.gens.n),
        }
    }
}

impl Differentiable for ChartSymbol {
    fn differential(&self, y: &SpherePoint, v: &[f64]) -> CMat {
        let p = self.chart.nu_tilde(y);
        let w = self.chart.dnu_tilde(y, v);
        match self.variant {
            GVariant::Lipschitz => self.gens.u_matrix(&w),
            GVariant::Smooth => SpinSymbolTilde {
                gens: self.gens.clone(),
            }
            .differential(&p, &w),
        }
    }
}

/// The homotopy w(·, t) as a [`SymbolMap`].
#[derive(Clone, Debug)]
pub struct HomotopySymbol {
    pub gens: Arc<GeneratorSet>,
    pub t: f64,
}

impl SymbolMap for HomotopySymbol {
    fn n(&self) -> usize {
        self.gens.n
    }
    fn size(&self) -> usize {
        self.gens.dim_e()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        let s = xi_t((1.0 - z.z[0].re).abs(), self.t);
        blend(&self.gens, &z.to_real(), s)
    }
    fn label(&self) -> String {
        format!("w(t={})", self.t)
    }
}
