//! Reproducing kernels on the circle and the unit ball, the Levi polynomial,
//! mollification with extrapolation, and mixed (p′,p)-norm estimation.
//!
//! Kernels are taken with respect to the normalized measure (∫dV = 1):
//! C(z,w) = (1 − ⟨z,w⟩ + ε)^{−n}.

use crate::error::{Error, Result};
use crate::geometry::{uniform_orthogonal, uniform_point, SpherePoint};
use crate::linalg::{factorial, fit_line};
use crate::seed;
use crate::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Szego,
    HenkinRamirez,
    CauchyCircle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub n: usize,
    pub kind: KernelKind,
    pub eps: f64,
}

impl KernelSpec {
    pub fn new(n: usize, kind: KernelKind, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::Domain(format!("mollifier eps = {eps} must be >= 0")));
        }
        if n == 0 || (kind == KernelKind::CauchyCircle && n != 1) {
            return Err(Error::Domain(format!("kernel kind {kind:?} with n = {n}")));
        }
        Ok(KernelSpec { n, kind, eps })
    }

    pub fn szego(n: usize, eps: f64) -> Self {
        KernelSpec {
            n,
            kind: KernelKind::Szego,
            eps,
        }
    }

    /// Evaluates whichever kernel the spec names.
    pub fn eval(&self, z: &SpherePoint, w: &SpherePoint) -> Result<C64> {
        match self.kind {
            KernelKind::HenkinRamirez => hr_kernel(self, z, w),
            _ => szego_kernel(self, z, w),
        }
    }
}

/// Φ(w,z) = Σ w̄_j(w_j − z_j) = 1 − ⟨z,w⟩ on the sphere.
pub fn levi_phi(w: &SpherePoint, z: &SpherePoint) -> C64 {
    w.z.iter()
        .zip(&z.z)
        .map(|(wj, zj)| wj.conj() * (wj - zj))
        .sum()
}

/// Mollified kernel value from the pairing ⟨z,w⟩, no checks.
#[inline]
pub fn szego_from_pairing(n: usize, eps: f64, zw: C64) -> C64 {
    let d = C64::new(1.0 + eps - zw.re, -zw.im);
    match n {
        1 => d.inv(),
        2 => (d * d).inv(),
        _ => d.powi(n as i32).inv(),
    }
}

/// Szegő kernel with respect to the normalized measure.
pub fn szego_kernel(spec: &KernelSpec, z: &SpherePoint, w: &SpherePoint) -> Result<C64> {
    if spec.kind == KernelKind::HenkinRamirez {
        return Err(Error::Domain("use hr_kernel for the Henkin-Ramirez kind".into()));
    }
    if z.n() != spec.n || w.n() != spec.n {
        return Err(Error::Domain("point dimension does not match kernel".into()));
    }
    let zw = z.inner(w);
    if spec.eps == 0.0 && (C64::new(1.0, 0.0) - zw).norm() < 1e-300 {
        return Err(Error::Singular);
    }
    Ok(szego_from_pairing(spec.n, spec.eps, zw))
}

/// (n−1)!/(2πⁿ), the factor relating the normalized kernel to the kernel for
/// unnormalized surface measure.
pub fn surface_constant(n: usize) -> f64 {
    factorial(n as u32 - 1) / (2.0 * PI.powi(n as i32))
}

/// Szegő kernel with respect to unnormalized surface measure.
pub fn szego_kernel_surface(spec: &KernelSpec, z: &SpherePoint, w: &SpherePoint) -> Result<C64> {
    Ok(szego_kernel(spec, z, w)? * surface_constant(spec.n))
}

/// Henkin-Ramírez kernel; on the ball it coincides with the Szegő kernel.
pub fn hr_kernel(spec: &KernelSpec, z: &SpherePoint, w: &SpherePoint) -> Result<C64> {
    let s = KernelSpec {
        kind: KernelKind::Szego,
        ..*spec
    };
    szego_kernel(&s, z, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationModel {
    /// Richardson in powers ε, ε², ε³, …
    Polynomial,
    /// Basis 1, ε, ε·ln ε, ε², ε²·ln ε, …
    LogAugmented,
}

/// Mollification schedule with its extrapolation model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps: Vec<f64>,
    pub model: ExtrapolationModel,
}

pub const DEFAULT_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

impl Schedule {
    /// Default schedule; the mollified index integrals on S^{2n-1} carry an
    /// ε·ln ε term for n ≥ 2.
    pub fn default_for(n: usize) -> Self {
        Schedule {
            eps: DEFAULT_EPS.to_vec(),
            model: if n >= 2 {
                ExtrapolationModel::LogAugmented
            } else {
                ExtrapolationModel::Polynomial
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Domain("eps schedule must be nonempty and positive".into()));
        }
        let mut s = self.eps.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        if s.len() != self.eps.len() {
            return Err(Error::Domain("eps schedule has repeated values".into()));
        }
        Ok(())
    }

    fn basis(&self, e: f64, i: usize) -> f64 {
        match self.model {
            ExtrapolationModel::Polynomial => e.powi(i as i32),
            ExtrapolationModel::LogAugmented => {
                if i == 0 {
                    1.0
                } else {
                    let p = (i + 1) / 2;
                    let log = i % 2 == 0;
                    e.powi(p as i32) * if log { e.ln() } else { 1.0 }
                }
            }
        }
    }

    /// Linear weights w with Σ w_i I(ε_i) the extrapolated value at ε = 0.
    pub fn weights(&self) -> Vec<f64> {
        weights_for(self, &self.eps)
    }

    pub fn extrapolate(&self, values: &[C64]) -> C64 {
        self.weights().iter().zip(values).map(|(w, v)| v * *w).sum()
    }

    /// Difference between the full extrapolation and the one that drops the
    /// coarsest ε; a deterministic error indicator.
    pub fn extrapolation_spread(&self, values: &[C64]) -> f64 {
        if self.eps.len() < 2 {
            return f64::INFINITY;
        }
        let (i0, _) = self
            .eps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let rest: Vec<f64> = self
            .eps
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != i0)
            .map(|(_, e)| *e)
            .collect();
        let w = weights_for(self, &rest);
        let reduced: C64 = values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != i0)
            .map(|(_, v)| *v)
            .zip(&w)
            .map(|(v, w)| v * *w)
            .sum();
        (self.extrapolate(values) - reduced).norm()
    }
}

fn weights_for(s: &Schedule, eps: &[f64]) -> Vec<f64> {
    let m = eps.len();
    let a = DMatrix::from_fn(m, m, |r, c| s.basis(eps[r], c));
    let inv = a.try_inverse().expect("distinct eps give an invertible system");
    (0..m).map(|i| inv[(0, i)]).collect()
}

/// Density of c = ⟨x,y⟩ for x uniform on S^{2n-1}, n ≥ 2, on the unit disc.
pub fn pairing_density(n: usize, c: C64) -> f64 {
    (n as f64 - 1.0) / PI * (1.0 - c.norm_sqr()).max(0.0).powi(n as i32 - 2)
}

/// x on the sphere with ⟨x,y⟩ = c.
pub fn point_with_pairing<R: Rng + ?Sized>(rng: &mut R, y: &SpherePoint, c: C64) -> SpherePoint {
    if y.n() == 1 {
        return SpherePoint {
            z: vec![c * y.z[0]],
        };
    }
    let v = uniform_orthogonal(rng, &y.z);
    let s = (1.0 - c.norm_sqr()).max(0.0).sqrt();
    SpherePoint::normalized(y.z.iter().zip(&v).map(|(a, b)| c * a + b * s).collect())
}

/// One importance sample inside the dyadic shell 2^{−j} ≤ |1−⟨x,y⟩| < 2^{1−j}:
/// returns the pairing c and the weight (mass density ratio), weight 0 for
/// proposals outside the admissible region.
pub fn shell_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, j: u32) -> (C64, f64) {
    let b = 2f64.powi(1 - j as i32);
    let a = 0.5 * b;
    if n == 1 {
        let tlo = 2.0 * (0.5 * a).min(1.0).asin();
        let thi = 2.0 * (0.5 * b).min(1.0).asin();
        let t = tlo + (thi - tlo) * rng.gen::<f64>();
        let t = if rng.gen::<bool>() { t } else { -t };
        return (C64::from_polar(1.0, t), (thi - tlo) / PI);
    }
    let rho = (a * a + (b * b - a * a) * rng.gen::<f64>()).sqrt();
    let psi = PI * (rng.gen::<f64>() - 0.5);
    if rho >= 2.0 * psi.cos() {
        return (C64::new(0.0, 0.0), 0.0);
    }
    let c = C64::new(1.0, 0.0) - C64::from_polar(rho, psi);
    let area = 0.5 * PI * (b * b - a * a);
    (c, pairing_density(n, c) * area)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Finite,
    Divergent,
    Undetermined,
}

/// Refinement levels for mixed norms: dyadic shells 0..shells around the
/// diagonal, each estimated with `samples_per_shell` importance samples
/// spread over `outer_points` base points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormResolution {
    pub shells: u32,
    pub samples_per_shell: usize,
    pub outer_points: usize,
    pub seed: u64,
}

impl Default for MixedNormResolution {
    fn default() -> Self {
        MixedNormResolution {
            shells: 40,
            samples_per_shell: 40_000,
            outer_points: 16,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedNormReport {
    pub p: f64,
    pub p_prime: f64,
    pub norm_k: f64,
    pub norm_k_adjoint: f64,
    pub schatten_bound: f64,
    pub resolution: MixedNormResolution,
    /// Per-shell contributions to ∫|k|^{p′}dx (averaged over base points).
    pub shell_contributions: Vec<f64>,
    /// Fitted slope of ln(shell contribution) per shell over the finest half.
    pub refinement_slope: f64,
    pub slope_stderr: f64,
    pub trend: Trend,
}

struct ShellStats {
    inner_per_point: Vec<f64>,
    shells: Vec<f64>,
}

fn shell_integrals<K>(k: &K, n: usize, q: f64, res: &MixedNormResolution, label: &str) -> ShellStats
where
    K: Fn(&SpherePoint, &SpherePoint) -> f64 + Sync,
{
    let per_point = res.samples_per_shell.div_ceil(res.outer_points).max(1);
    let rows: Vec<Vec<f64>> = (0..res.outer_points)
        .into_par_iter()
        .map(|o| {
            let mut rng = seed::stream(res.seed, label, o as u64);
            let y = uniform_point(&mut rng, n);
            (0..=res.shells)
                .map(|j| {
                    let mut s = 0.0;
                    for _ in 0..per_point {
                        let (c, w) = shell_sample(&mut rng, n, j);
                        if w > 0.0 {
                            let x = point_with_pairing(&mut rng, &y, c);
                            s += w * k(&x, &y).powf(q);
                        }
                    }
                    s / per_point as f64
                })
                .collect()
        })
        .collect();
    let shells: Vec<f64> = (0..=res.shells as usize)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect();
    ShellStats {
        inner_per_point: rows.iter().map(|r| r.iter().sum()).collect(),
        shells,
    }
}

/// Estimates ‖k‖_{p′,p} = (∫(∫|k(x,y)|^{p′}dx)^{p/p′}dy)^{1/p} and the same for
/// k*(x,y) = k(y,x)‾, with a divergence trend from the shell contributions.
/// `k` returns |k(x,y)|.
pub fn mixed_norm<K>(k: &K, n: usize, p: f64, res: &MixedNormResolution) -> Result<MixedNormReport>
where
    K: Fn(&SpherePoint, &SpherePoint) -> f64 + Sync,
{
    if !(p > 2.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 2")));
    }
    if res.shells < 4 || res.outer_points == 0 {
        return Err(Error::Domain("resolution too coarse".into()));
    }
    let pp = p / (p - 1.0);
    let norm_of = |st: &ShellStats| {
        let m = st.inner_per_point.iter().map(|v| v.powf(p / pp)).sum::<f64>()
            / st.inner_per_point.len() as f64;
        m.powf(1.0 / p)
    };
    let fwd = shell_integrals(k, n, pp, res, "mixed-norm");
    let adj = shell_integrals(&|x: &SpherePoint, y: &SpherePoint| k(y, x), n, pp, res, "mixed-norm-adj");
    let half = res.shells as usize / 2;
    let xs: Vec<f64> = (half..=res.shells as usize).map(|j| j as f64).collect();
    let ys: Vec<f64> = fwd.shells[half..].iter().map(|v| v.max(1e-300).ln()).collect();
    let (slope, _, rms) = fit_line(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let se = rms * (xs.len() as f64 / (xs.len() as f64 - 2.0).max(1.0)).sqrt() / sxx.sqrt();
    let trend = if slope + 3.0 * se < 0.0 {
        Trend::Finite
    } else if slope - 3.0 * se >= 0.0 {
        Trend::Divergent
    } else {
        Trend::Undetermined
    };
    let nk = norm_of(&fwd);
    let na = norm_of(&adj);
    Ok(MixedNormReport {
        p,
        p_prime: pp,
        norm_k: nk,
        norm_k_adjoint: na,
        schatten_bound: (nk * na).sqrt(),
        resolution: *res,
        shell_contributions: fwd.shells,
        refinement_slope: slope,
        slope_stderr: se,
        trend,
    })
}

/// The model kernel k_α(z,w) = |Φ(w,z)|^{−n+α/2}, which dominates
/// (a(z) − a(w))·C(z,w) for a ∈ C^α.
pub fn k_alpha(n: usize, alpha: f64) -> impl Fn(&SpherePoint, &SpherePoint) -> f64 + Sync {
    move |x: &SpherePoint, y: &SpherePoint| levi_phi(y, x).norm().powf(-(n as f64) + 0.5 * alpha)
}

/// ∫|Φ(w,z)|^{−s} dV(w) for a fixed z, truncated at the given number of
/// dyadic shells, with a Monte-Carlo standard error.
pub fn phi_power_integral(n: usize, s: f64, shells: u32, samples_per_shell: usize, seed_: u64) -> (f64, f64) {
    let mut rng = seed::stream(seed_, "phi-integral", 0);
    let y = SpherePoint::north(n);
    let mut total = 0.0;
    let mut var = 0.0;
    for j in 0..=shells {
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..samples_per_shell {
            let (c, w) = shell_sample(&mut rng, n, j);
            let v = if w > 0.0 {
                let x = point_with_pairing(&mut rng, &y, c);
                w * levi_phi(&x, &y).norm().powf(-s)
            } else {
                0.0
            };
            acc += v;
            acc2 += v * v;
        }
        let m = acc / samples_per_shell as f64;
        total += m;
        var += (acc2 / samples_per_shell as f64 - m * m) / samples_per_shell as f64;
    }
    (total, var.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_weights_for_default_schedule() {
        let s = Schedule::default_for(1);
        let w = s.weights();
        let expect = [-1.0 / 21.0, 2.0 / 3.0, -8.0 / 3.0, 64.0 / 21.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_augmented_weights_are_exact_on_basis() {
        let s = Schedule::default_for(2);
        let w = s.weights();
        for (a, b) in w.iter().zip([-1.0 / 3.0, 8.0 / 3.0, -20.0 / 3.0, 16.0 / 3.0]) {
            assert!((a - b).abs() < 1e-10, "{w:?}");
        }
        let f = |e: f64| 2.0 + 0.3 * e - 1.1 * e * e.ln() + 0.7 * e * e;
        let vals: Vec<C64> = s.eps.iter().map(|e| C64::new(f(*e), 0.0)).collect();
        assert!((s.extrapolate(&vals).re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shell_masses_sum_to_one() {
        for n in 1..=3 {
            let mut rng = seed::stream(9, "shell", n as u64);
            let mut total = 0.0;
            for j in 0..30 {
                let m = 20_000;
                total += (0..m).map(|_| shell_sample(&mut rng, n, j).1).sum::<f64>() / m as f64;
            }
            assert!((total - 1.0).abs() < 0.01, "n={n} total={total}");
        }
    }
}
