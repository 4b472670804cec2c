//! Monte-Carlo results and the near-diagonal proposal used for the singular
//! multi-integrals.

use crate::geometry::SpherePoint;
use crate::kernels::{point_with_pairing, ExtrapolationModel};
use crate::C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: C64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub eps_schedule: Vec<f64>,
    pub extrapolated: bool,
    pub model: Option<ExtrapolationModel>,
    /// Value at each ε of the schedule, before extrapolation.
    pub per_eps: Vec<C64>,
    pub per_eps_stderr: Vec<f64>,
    /// Tuples dropped by the diagonal exclusion.
    pub excluded: u64,
}

/// Outcome of the rounding contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Resolved(i64),
    Unresolved,
}

impl Resolution {
    pub fn value(&self) -> Option<i64> {
        match self {
            Resolution::Resolved(k) => Some(*k),
            Resolution::Unresolved => None,
        }
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolution::Resolved(k) => write!(f, "{k}"),
            Resolution::Unresolved => write!(f, "UNRESOLVED"),
        }
    }
}

/// |estimate − nearest integer| < max(3σ, 0.15).
pub fn resolve(value: f64, stderr: f64) -> Resolution {
    if !value.is_finite() || !stderr.is_finite() {
        return Resolution::Unresolved;
    }
    let r = value.round();
    if (value - r).abs() < (3.0 * stderr).max(0.15) {
        Resolution::Resolved(r as i64)
    } else {
        Resolution::Unresolved
    }
}

impl McEstimate {
    pub fn resolve(&self) -> Resolution {
        resolve(self.value.re, self.stderr)
    }

    /// |Im| within 4σ.
    pub fn imaginary_within_noise(&self) -> bool {
        self.value.im.abs() <= 4.0 * self.stderr.max(1e-12)
    }
}

/// Running first and second moments with a deterministic merge.
#[derive(Clone, Debug, Default)]
pub struct Moments {
    pub count: u64,
    pub sum: C64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: C64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v.norm_sqr();
    }

    pub fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> C64 {
        self.sum / self.count.max(1) as f64
    }

    /// Standard error of the mean of the complex samples.
    pub fn stderr(&self) -> f64 {
        let n = self.count.max(2) as f64;
        let m = self.mean();
        ((self.sum_sq / n - m.norm_sqr()).max(0.0) / (n - 1.0)).sqrt()
    }
}

/// Proposal q(w | z) ∝ |1 − ⟨z,w⟩|^{−γ} with respect to normalized dV.
#[derive(Clone, Copy, Debug)]
pub struct NearDiagonal {
    pub n: usize,
    pub gamma: f64,
    norm: f64,
}

impl NearDiagonal {
    /// Requires γ < n (and γ < 2 for the disc sampler).
    pub fn new(n: usize, gamma: f64) -> Self {
        assert!(gamma >= 0.0 && gamma < n as f64 && gamma < 2.0);
        let nf = n as f64;
        // ∫|1 − ⟨z,w⟩|^{−γ} dV(w) = Γ(n)Γ(n−γ)/Γ(n−γ/2)²
        let norm = gamma_fn(nf) * gamma_fn(nf - gamma) / gamma_fn(nf - 0.5 * gamma).powi(2);
        NearDiagonal { n, gamma, norm }
    }

    pub fn density_from_pairing(&self, c: C64) -> f64 {
        (C64::new(1.0, 0.0) - c).norm().powf(-self.gamma) / self.norm
    }

    pub fn density(&self, z: &SpherePoint, w: &SpherePoint) -> f64 {
        self.density_from_pairing(w.inner(z))
    }

    /// Draws c = ⟨w,z⟩ from its proposal law.
    pub fn sample_pairing<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let g = self.gamma;
        if self.n == 1 {
            // proposal ∝ |t|^{−γ} on [−π,π], corrected to |2 sin(t/2)|^{−γ}
            let bound = (PI / 2.0).powf(g);
            loop {
                let t = PI * rng.gen::<f64>().powf(1.0 / (1.0 - g));
                let ratio = (t / (2.0 * (0.5 * t).sin())).powf(g) / bound;
                if rng.gen::<f64>() < ratio {
                    let t = if rng.gen::<bool>() { t } else { -t };
                    return C64::from_polar(1.0, t);
                }
            }
        }
        loop {
            // c = 1 − ρe^{iψ}, density ∝ ρ^{1−γ} on {ρ < 2cosψ}
            let psi = PI * (rng.gen::<f64>() - 0.5);
            if rng.gen::<f64>() >= psi.cos().powf(2.0 - g) {
                continue;
            }
            let rho = 2.0 * psi.cos() * rng.gen::<f64>().powf(1.0 / (2.0 - g));
            let c = C64::new(1.0, 0.0) - C64::from_polar(rho, psi);
            if self.n > 2 && rng.gen::<f64>() >= (1.0 - c.norm_sqr()).max(0.0).powi(self.n as i32 - 2) {
                continue;
            }
            return c;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, z: &SpherePoint) -> SpherePoint {
        let c = self.sample_pairing(rng);
        point_with_pairing(rng, z, c)
    }
}

fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_point;
    use crate::seed;

    #[test]
    fn resolution_contract() {
        assert_eq!(resolve(0.9, 0.01), Resolution::Resolved(1));
        assert_eq!(resolve(0.8, 0.01), Resolution::Unresolved);
        assert_eq!(resolve(0.6, 0.2), Resolution::Resolved(1));
        assert_eq!(resolve(f64::NAN, 0.1), Resolution::Unresolved);
    }

    #[test]
    fn proposal_density_is_normalized() {
        // E_uniform[q(w|z)] = 1
        for (n, g) in [(1, 0.5), (2, 1.5), (2, 1.2), (3, 1.5)] {
            let q = NearDiagonal::new(n, g);
            let mut rng = seed::stream(11, "q", n as u64);
            let z = uniform_point(&mut rng, n);
            // importance estimate E_q[1/q] = ∫dV = 1
            let m = 200_000;
            let s: f64 = (0..m)
                .map(|_| 1.0 / q.density(&z, &q.sample(&mut rng, &z)))
                .sum::<f64>()
                / m as f64;
            assert!((s - 1.0).abs() < 0.02, "n={n} g={g} s={s}");
        }
    }
}
