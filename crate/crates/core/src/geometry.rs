//! Sphere points, uniform sampling, the chart of Y = S^{2n-1}, and the test
//! map corpus.
//!
//! ℝ^{2n} is identified with ℂⁿ by z_j = x_{2j-1} + i x_{2j}.

use crate::error::{Error, Result};
use crate::linalg::fit_line;
use crate::seed;
use crate::C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const UNIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub z: Vec<C64>,
}

impl SpherePoint {
    pub fn new(z: Vec<C64>) -> Result<Self> {
        let r = norm(&z);
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("|z| = {r} is not 1")));
        }
        Ok(SpherePoint { z })
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn normalized(z: Vec<C64>) -> Self {
        let r = norm(&z);
        SpherePoint {
            z: z.into_iter().map(|c| c / r).collect(),
        }
    }

    pub fn from_real(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::Domain("odd number of real coordinates".into()));
        }
        Self::new(real_to_complex(x))
    }

    /// `e1 = (1, 0, ..., 0)`.
    pub fn north(n: usize) -> Self {
        let mut z = vec![C64::new(0.0, 0.0); n];
        z[0] = C64::new(1.0, 0.0);
        SpherePoint { z }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn to_real(&self) -> Vec<f64> {
        complex_to_real(&self.z)
    }

    /// Hermitian pairing ⟨z,w⟩ = Σ z_j w̄_j.
    pub fn inner(&self, w: &SpherePoint) -> C64 {
        inner(&self.z, &w.z)
    }

    pub fn dist(&self, w: &SpherePoint) -> f64 {
        self.z
            .iter()
            .zip(&w.z)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn neg(&self) -> SpherePoint {
        SpherePoint {
            z: self.z.iter().map(|c| -c).collect(),
        }
    }
}

pub fn inner(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn complex_to_real(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Uniform point on S^{2n-1} from a normalized Gaussian vector.
pub fn uniform_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpherePoint {
    loop {
        let z: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let r = norm(&z);
        if r > 1e-300 {
            return SpherePoint {
                z: z.into_iter().map(|c| c / r).collect(),
            };
        }
    }
}

/// Uniform unit vector orthogonal (over ℂ) to `z`, living in the complex
/// orthocomplement. Requires n ≥ 2.
pub fn uniform_orthogonal<R: Rng + ?Sized>(rng: &mut R, z: &[C64]) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..z.len())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let c = inner(&v, z);
        for (vj, zj) in v.iter_mut().zip(z) {
            *vj -= c * zj;
        }
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<SpherePoint>,
    pub seed: u64,
    pub n: usize,
    pub count: usize,
}

/// Points per independently seeded chunk. Fixed so the output does not
/// depend on how many workers rayon uses.
pub const SAMPLE_CHUNK: usize = 4096;

pub fn sample_sphere(n: usize, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<SpherePoint>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(seed, "sphere", c as u64);
            let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
            (0..len).map(|_| uniform_point(&mut rng, n)).collect()
        })
        .collect();
    Ok(SampleSet {
        points: parts.into_iter().flatten().collect(),
        seed,
        n,
        count,
    })
}

/// τ(y) = (2|y|²−1, 2√(1−|y|²) y) from the closed ball in ℝ^{2n-1} to S^{2n-1}.
pub fn stereographic_tau(y: &[f64]) -> Result<SpherePoint> {
    if y.len() % 2 == 0 {
        return Err(Error::Domain("ball point must have 2n-1 coordinates".into()));
    }
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("|y| = {} exceeds 1", r2.sqrt())));
    }
    let s = 2.0 * (1.0 - r2).max(0.0).sqrt();
    let mut x = Vec::with_capacity(y.len() + 1);
    x.push(2.0 * r2 - 1.0);
    x.extend(y.iter().map(|v| s * v));
    Ok(SpherePoint {
        z: real_to_complex(&x),
    })
}

/// Chart of Y = S^{2n-1}: the complement U of the closed cap of angular
/// radius `cap` around e1, with center −e1.
///
/// For y ∈ U at angle θ from −e1 and unit tangent direction ω there,
/// ν(y) = sin(λθ/2)·ω with λ = π/(π − cap), so τ(ν(y)) is the geodesic
/// dilation of θ by λ. The extension ν̃ sends the cap to e1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub cap: f64,
}

impl Default for Chart {
    fn default() -> Self {
        Chart { cap: 0.3 }
    }
}

impl Chart {
    pub fn new(cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap < PI) {
            return Err(Error::Domain(format!("cap radius {cap} not in (0, pi)")));
        }
        Ok(Chart { cap })
    }

    pub fn lambda(&self) -> f64 {
        PI / (PI - self.cap)
    }

    /// Angle from −e1.
    pub fn angle(x: &[f64]) -> f64 {
        (-x[0]).clamp(-1.0, 1.0).acos()
    }

    pub fn contains(&self, y: &SpherePoint) -> bool {
        Self::angle(&y.to_real()) < PI - self.cap
    }

    /// sin(λθ)/sinθ, smooth at θ = 0.
    fn rho(&self, theta: f64) -> f64 {
        let l = self.lambda();
        if theta < 1e-4 {
            l * (1.0 - (l * l - 1.0) * theta * theta / 6.0)
        } else {
            (l * theta).sin() / theta.sin()
        }
    }

    /// ρ'(θ)/sinθ, smooth at θ = 0.
    fn rho_prime_over_sin(&self, theta: f64) -> f64 {
        let l = self.lambda();
        if theta < 1e-4 {
            -l * (l * l - 1.0) / 3.0
        } else {
            let s = theta.sin();
            (l * (l * theta).cos() * s - (l * theta).sin() * theta.cos()) / (s * s * s)
        }
    }

    /// ν(y) in the open unit ball of ℝ^{2n-1}, or `None` outside U.
    pub fn nu(&self, y: &SpherePoint) -> Option<Vec<f64>> {
        let x = y.to_real();
        let theta = Self::angle(&x);
        if theta >= PI - self.cap {
            return None;
        }
        let l = self.lambda();
        // ω = x_rest / sinθ; sin(λθ/2)/sinθ written stably near 0
        let f = if theta < 1e-4 {
            0.5 * l
        } else {
            (0.5 * l * theta).sin() / theta.sin()
        };
        Some(x[1..].iter().map(|v| f * v).collect())
    }

    /// ν̃(y) = τ(ν(y)) on U and e1 on the cap.
    pub fn nu_tilde(&self, y: &SpherePoint) -> SpherePoint {
        let x = y.to_real();
        let theta = Self::angle(&x);
        if theta >= PI - self.cap {
            return SpherePoint::north(y.n());
        }
        let l = self.lambda();
        let r = self.rho(theta);
        let mut out = Vec::with_capacity(x.len());
        out.push(-(l * theta).cos());
        out.extend(x[1..].iter().map(|v| r * v));
        SpherePoint::normalized(real_to_complex(&out))
    }

    /// Differential of ν̃ at y applied to a tangent vector v (real coords).
    pub fn dnu_tilde(&self, y: &SpherePoint, v: &[f64]) -> Vec<f64> {
        let x = y.to_real();
        let theta = Self::angle(&x);
        if theta >= PI - self.cap {
            return vec![0.0; x.len()];
        }
        let l = self.lambda();
        let r = self.rho(theta);
        let rp = self.rho_prime_over_sin(theta);
        let v1 = v[0];
        let mut out = Vec::with_capacity(x.len());
        out.push(l * r * v1);
        for j in 1..x.len() {
            out.push(rp * v1 * x[j] + r * v[j]);
        }
        out
    }
}

/// Test maps with known degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TestMap {
    /// S¹ → S¹, z ↦ z^m.
    Power { m: i32 },
    /// S¹ → S¹, e^{iθ} ↦ e^{i(mθ + λ W_α(θ))} with W_α(θ) = Σ_{j≤J} 2^{−αj} cos(2^j θ).
    WeierstrassPower { m: i32, alpha: f64, lambda: f64, depth: u32 },
    /// S³ → S³, unit quaternion q ↦ q^m with (z1, z2) ↔ z1 + z2 j.
    QuaternionPower { m: i32 },
    /// y ↦ ν̃(f(y)).
    ChartPullback { chart: Chart, inner: Box<TestMap> },
    /// z ↦ f(Rz) for a unitary R given row-major.
    Rotated { rotation: Vec<C64>, inner: Box<TestMap> },
    /// Constant map.
    Constant { value: SpherePoint },
}

impl TestMap {
    pub fn weierstrass(m: i32, alpha: f64, lambda: f64) -> Self {
        TestMap::WeierstrassPower {
            m,
            alpha,
            lambda,
            depth: 20,
        }
    }

    /// Complex dimension of the domain sphere, when fixed by the family.
    pub fn dim(&self) -> Option<usize> {
        match self {
            TestMap::Power { .. } | TestMap::WeierstrassPower { .. } => Some(1),
            TestMap::QuaternionPower { .. } => Some(2),
            TestMap::ChartPullback { inner, .. } => inner.dim(),
            TestMap::Rotated { rotation, .. } => Some((rotation.len() as f64).sqrt() as usize),
            TestMap::Constant { value } => Some(value.n()),
        }
    }

    /// Known true degree.
    pub fn degree(&self) -> i64 {
        match self {
            TestMap::Power { m } | TestMap::WeierstrassPower { m, .. } => *m as i64,
            TestMap::QuaternionPower { m } => *m as i64,
            TestMap::ChartPullback { inner, .. } | TestMap::Rotated { inner, .. } => inner.degree(),
            TestMap::Constant { .. } => 0,
        }
    }

    /// Hölder exponent of the family.
    pub fn holder(&self) -> f64 {
        match self {
            TestMap::WeierstrassPower { alpha, lambda, .. } if *lambda != 0.0 => *alpha,
            TestMap::ChartPullback { inner, .. } | TestMap::Rotated { inner, .. } => inner.holder(),
            _ => 1.0,
        }
    }

    pub fn evaluate(&self, z: &SpherePoint) -> Result<SpherePoint> {
        if let Some(d) = self.dim() {
            if d != z.n() {
                return Err(Error::Domain(format!(
                    "map expects points in C^{d}, got C^{}",
                    z.n()
                )));
            }
        }
        Ok(match self {
            TestMap::Power { m } => SpherePoint {
                z: vec![int_pow(z.z[0], *m)],
            },
            TestMap::WeierstrassPower {
                m,
                alpha,
                lambda,
                depth,
            } => {
                let theta = z.z[0].arg();
                let phase = *m as f64 * theta + lambda * weierstrass(theta, *alpha, *depth);
                SpherePoint {
                    z: vec![C64::from_polar(1.0, phase)],
                }
            }
            TestMap::QuaternionPower { m } => {
                let q = [z.z[0], z.z[1]];
                SpherePoint::normalized(quat_pow(q, *m).to_vec())
            }
            TestMap::ChartPullback { chart, inner } => chart.nu_tilde(&inner.evaluate(z)?),
            TestMap::Rotated { rotation, inner } => {
                let n = z.n();
                let rz: Vec<C64> = (0..n)
                    .map(|i| (0..n).map(|j| rotation[i * n + j] * z.z[j]).sum())
                    .collect();
                inner.evaluate(&SpherePoint::normalized(rz))?
            }
            TestMap::Constant { value } => value.clone(),
        })
    }
}

fn int_pow(z: C64, m: i32) -> C64 {
    if m >= 0 {
        z.powu(m as u32)
    } else {
        z.conj().powu((-m) as u32)
    }
}

pub fn weierstrass(theta: f64, alpha: f64, depth: u32) -> f64 {
    (0..=depth)
        .map(|j| 2f64.powf(-alpha * j as f64) * (2f64.powi(j as i32) * theta).cos())
        .sum()
}

/// Quaternion product with (a + b j)(c + d j) = (ac − b d̄) + (ad + b c̄) j.
pub fn quat_mul(p: [C64; 2], q: [C64; 2]) -> [C64; 2] {
    [
        p[0] * q[0] - p[1] * q[1].conj(),
        p[0] * q[1] + p[1] * q[0].conj(),
    ]
}

pub fn quat_pow(q: [C64; 2], m: i32) -> [C64; 2] {
    let base = if m < 0 { [q[0].conj(), -q[1]] } else { q };
    let mut r = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    for _ in 0..m.unsigned_abs() {
        r = quat_mul(r, base);
    }
    r
}

/// Random unitary matrix (row-major) from the QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let g = nalgebra::DMatrix::<C64>::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            out.push(q[(i, j)] * phase);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// Fitted exponent, `f64::INFINITY` when every difference vanishes.
    pub alpha: f64,
    pub residual: f64,
    /// (representative distance, sup of |f(z)−f(w)|) per populated bin.
    pub bins: Vec<(f64, f64)>,
}

/// Fits α̂ as the slope of log sup|f(z)−f(w)| against log|z−w| over dyadic
/// distance bins. Each base point of `pairs` is paired with one partner at
/// every requested geodesic scale.
pub fn estimate_holder_exponent(
    f: &TestMap,
    pairs: &SampleSet,
    scales: &[f64],
) -> Result<HolderEstimate> {
    if pairs.count < 10_000 {
        return Err(Error::Estimation(format!(
            "need at least 1e4 pairs, got {}",
            pairs.count
        )));
    }
    let bins_raw: Vec<Vec<(f64, f64)>> = pairs
        .points
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut rng = seed::stream(pairs.seed, "holder-partner", i as u64);
            let fz = f.evaluate(z).ok();
            scales
                .iter()
                .filter_map(|&s| {
                    let w = geodesic_partner(&mut rng, z, s);
                    let fw = f.evaluate(&w).ok()?;
                    Some((z.dist(&w), fz.as_ref()?.dist(&fw)))
                })
                .collect()
        })
        .collect();
    let mut bins: std::collections::BTreeMap<i32, (f64, f64)> = Default::default();
    for (d, df) in bins_raw.into_iter().flatten() {
        if d <= 0.0 {
            continue;
        }
        let key = d.log2().floor() as i32;
        let e = bins.entry(key).or_insert((0.0, 0.0));
        e.0 = e.0.max(d);
        e.1 = e.1.max(df);
    }
    let bins: Vec<(f64, f64)> = bins.into_values().collect();
    if bins.len() < 3 {
        return Err(Error::Estimation("fewer than three distance bins".into()));
    }
    if bins.iter().all(|b| b.1 == 0.0) {
        return Ok(HolderEstimate {
            alpha: f64::INFINITY,
            residual: 0.0,
            bins,
        });
    }
    if bins.iter().any(|b| b.1 == 0.0) {
        return Err(Error::Estimation("degenerate bin with zero oscillation".into()));
    }
    let xs: Vec<f64> = bins.iter().map(|b| b.0.ln()).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.1.ln()).collect();
    let (slope, _, residual) = fit_line(&xs, &ys);
    Ok(HolderEstimate {
        alpha: slope,
        residual,
        bins,
    })
}

/// Point at geodesic distance `s` from z in a uniformly random direction.
fn geodesic_partner<R: Rng + ?Sized>(rng: &mut R, z: &SpherePoint, s: f64) -> SpherePoint {
    let x = z.to_real();
    let mut v: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    let c: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
    for (vj, xj) in v.iter_mut().zip(&x) {
        *vj -= c * xj;
    }
    let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let w: Vec<f64> = x
        .iter()
        .zip(&v)
        .map(|(a, b)| s.cos() * a + s.sin() * b / r)
        .collect();
    SpherePoint::normalized(real_to_complex(&w))
}
