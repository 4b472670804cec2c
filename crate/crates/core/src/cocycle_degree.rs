//! Index and degree integrals: the S¹ formula, the Hölder index integral on
//! S^{2n-1}, the Chern–Simons pairing, the order parity, the trace expansion
//! of ∏(1 − u(z_{i−1})*u(z_i)) and the degree integral through f̃.
//!
//! Orientation: S^{2n-1} is oriented by the complex volume form, which is
//! (−1)^{n+1} times the outward-normal orientation. With this choice
//! ∫cs[u] = (−1)ⁿ. Outward-oriented values are available through
//! [`cs_orientation`].

use crate::clifford_rep::GeneratorSet;
use crate::error::{Error, Result};
use crate::geometry::{uniform_point, Chart, SampleSet, SpherePoint, TestMap, SAMPLE_CHUNK};
use crate::hardy_index::invertibility_margin;
use crate::kernels::{szego_from_pairing, ExtrapolationModel, KernelKind, Schedule};
use crate::linalg::{identity, matrix_power, trace, CMat};
use crate::mc::{McEstimate, Moments, NearDiagonal};
use crate::seed;
use crate::symbol::{Differentiable, SymbolMap};
use crate::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// A permutation of {1, …, m}, stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    pub images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::Domain(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// From the one-based image list σ(1), …, σ(m).
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::Domain("one-based images start at 1".into()));
        }
        Self::new(images.iter().map(|i| i - 1).collect())
    }

    pub fn identity(m: usize) -> Self {
        Permutation {
            images: (0..m).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.images.len()
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.m()];
        let mut cycles = 0;
        for s in 0..self.m() {
            if !seen[s] {
                cycles += 1;
                let mut i = s;
                while !seen[i] {
                    seen[i] = true;
                    i = self.images[i];
                }
            }
        }
        cycles
    }

    pub fn sign(&self) -> i32 {
        if (self.m() - self.cycle_count()) % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// All permutations of {0..m} with their signs, in lexicographic order.
pub fn permutations_with_sign(m: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, i32)>) {
        let m = used.len();
        if prefix.len() == m {
            let s = Permutation {
                images: prefix.clone(),
            }
            .sign();
            out.push((prefix.clone(), s));
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Order parity ε_l(σ) ∈ {−1, 0, 1} of the prefix σ(1), …, σ(2l).
///
/// Zero when some prefix element has neither cyclic neighbour in the prefix
/// (or when the prefix admits no cover by cyclically adjacent pairs);
/// otherwise (−1)^t, with t the least number of arbitrary transpositions that
/// turn the prefix sequence into (j₁, j₁+1, j₂, j₂+1, …) over all such covers
/// and pair orders.
pub fn order_parity(sigma: &Permutation, l: usize, m: usize) -> i32 {
    assert!(2 * l <= m && sigma.m() == m, "order parity needs 2l <= m");
    if l == 0 {
        return 1;
    }
    let prefix = &sigma.images[..2 * l];
    let mut in_set = vec![false; m];
    for &i in prefix {
        in_set[i] = true;
    }
    let next = |i: usize| (i + 1) % m;
    let prev = |i: usize| (i + m - 1) % m;
    if prefix.iter().any(|&i| !in_set[next(i)] && !in_set[prev(i)]) {
        return 0;
    }
    // covers by ordered pairs (j, j+1)
    fn covers(remaining: &mut Vec<usize>, m: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some(&first) = remaining.iter().min() else {
            out.push(cur.clone());
            return;
        };
        // for m = 2 both orientations of {0, 1} are cyclically adjacent
        let candidates = [(first, (first + 1) % m), ((first + m - 1) % m, first)];
        for (ci, &pair) in candidates.iter().enumerate() {
            let partner = if pair.0 == first { pair.1 } else { pair.0 };
            if ci == 1 && candidates[0] == pair {
                continue;
            }
            if remaining.contains(&partner) {
                let saved = remaining.clone();
                remaining.retain(|&x| x != first);
                remaining.retain(|&x| x != partner);
                cur.push(pair);
                covers(remaining, m, cur, out);
                cur.pop();
                *remaining = saved;
            }
        }
    }
    let mut all = Vec::new();
    covers(&mut prefix.to_vec(), m, &mut Vec::new(), &mut all);
    let mut best: Option<usize> = None;
    for cover in &all {
        for (order, _) in permutations_with_sign(cover.len()) {
            let target: Vec<usize> = order.iter().flat_map(|&i| [cover[i].0, cover[i].1]).collect();
            // permutation taking prefix positions to target positions
            let images: Vec<usize> = prefix
                .iter()
                .map(|v| target.iter().position(|t| t == v).unwrap())
                .collect();
            let p = Permutation { images };
            let t = p.m() - p.cycle_count();
            best = Some(best.map_or(t, |b| b.min(t)));
        }
    }
    match best {
        None => 0,
        Some(t) if t % 2 == 0 => 1,
        Some(_) => -1,
    }
}

/// d_k and c_k of the cyclic cocycle normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingConstants {
    pub k: usize,
    pub d_k: C64,
    pub c_k: C64,
}

impl PairingConstants {
    pub fn new(k: usize) -> Self {
        let sqrt_2i = C64::new(1.0, 1.0);
        let g = gamma((2 * k + 3) as f64 / 2.0);
        let p = 2f64.powi(2 * k as i32 + 1);
        PairingConstants {
            k,
            d_k: C64::new(1.0 / p, 0.0) / sqrt_2i / g,
            c_k: -sqrt_2i * p * g,
        }
    }

    pub fn product(&self) -> C64 {
        self.d_k * self.c_k
    }
}

/// How the trace expansion is summed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// Explicit enumeration of the pair matchings of each string.
    Matchings,
    /// Pfaffians of the pairing matrices; same sums, polynomial cost.
    Pfaffian,
    /// Matchings with every matching counted with sign +1. Wrong on purpose,
    /// used to check that the oracle comparison notices.
    MatchingsSignFlipped,
}

type MatchingList = Vec<(Vec<(usize, usize)>, f64)>;

/// Perfect matchings of {0, …, 2r−1} with their Pfaffian signs.
pub fn matchings(r: usize) -> &'static MatchingList {
    static CACHE: OnceLock<Vec<OnceLock<MatchingList>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=8).map(|_| OnceLock::new()).collect());
    assert!(r < cache.len(), "matchings beyond r = 8 are not tabulated");
    cache[r].get_or_init(|| {
        fn rec(elems: &[usize]) -> MatchingList {
            if elems.is_empty() {
                return vec![(Vec::new(), 1.0)];
            }
            let first = elems[0];
            let mut out = Vec::new();
            for (idx, &j) in elems[1..].iter().enumerate() {
                let s = if idx % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<usize> = elems[1..].iter().copied().filter(|&x| x != j).collect();
                for (mut mm, t) in rec(&rest) {
                    mm.insert(0, (first, j));
                    out.push((mm, s * t));
                }
            }
            out
        }
        rec(&(0..2 * r).collect::<Vec<_>>())
    })
}

/// Pfaffian of an antisymmetric matrix by Gaussian elimination with pivoting.
pub fn pfaffian(a: &mut CMat) -> C64 {
    let len = a.nrows();
    assert!(len <= STACK_SLOTS, "Pfaffians are limited to {STACK_SLOTS} rows");
    let mut flat: Vec<C64> = (0..len * len).map(|i| a[(i / len, i % len)]).collect();
    pfaffian_flat(&mut flat, len, len)
}

/// Pfaffian of the leading len×len block of a row-major matrix with the
/// given stride; the block is overwritten.
fn pfaffian_flat(a: &mut [C64], len: usize, stride: usize) -> C64 {
    let zero = C64::new(0.0, 0.0);
    if len % 2 == 1 {
        return zero;
    }
    let at = |i: usize, j: usize| i * stride + j;
    let mut pf = C64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < len {
        let mut kp = k + 1;
        let mut best = a[at(k, k + 1)].norm_sqr();
        for j in k + 2..len {
            let v = a[at(k, j)].norm_sqr();
            if v > best {
                best = v;
                kp = j;
            }
        }
        if kp != k + 1 {
            for c in 0..len {
                a.swap(at(k + 1, c), at(kp, c));
            }
            for r in 0..len {
                a.swap(at(r, k + 1), at(r, kp));
            }
            pf = -pf;
        }
        let piv = a[at(k, k + 1)];
        if best == 0.0 {
            return zero;
        }
        pf *= piv;
        let inv = piv.inv();
        let mut tau = [zero; STACK_SLOTS];
        let mut col = [zero; STACK_SLOTS];
        for i in k + 2..len {
            tau[i] = a[at(k, i)] * inv;
            col[i] = a[at(i, k + 1)];
        }
        // the block stays antisymmetric, so only the upper part is updated
        for i in k + 2..len {
            let (ti, ci) = (tau[i], col[i]);
            for j in i + 1..len {
                let v = a[at(i, j)] + ti * col[j] - ci * tau[j];
                a[at(i, j)] = v;
                a[at(j, i)] = -v;
            }
        }
        k += 2;
    }
    pf
}

/// Largest string handled on the stack by the Pfaffian path.
const STACK_SLOTS: usize = 16;

/// tr_E of b(y₁)b(y₂)⋯b(y_{2r}) from the Gram matrix of the points, where
/// `slots` lists the point index of each y_a.
fn string_trace(n: usize, slots: &[usize], gram: &CMat, method: Expansion) -> C64 {
    let r = slots.len() / 2;
    let a = |x: usize, y: usize| gram[(slots[x], slots[y])];
    let sgn_r = if r % 2 == 0 { 1.0 } else { -1.0 };
    let (sum1, summ1) = match method {
        Expansion::Pfaffian => {
            let len = 2 * r;
            assert!(len <= STACK_SLOTS, "string too long for the Pfaffian path");
            let mut g = [[C64::new(0.0, 0.0); STACK_SLOTS]; STACK_SLOTS];
            for x in 0..len {
                for y in 0..len {
                    g[x][y] = a(x, y);
                }
            }
            let mut buf = [C64::new(0.0, 0.0); STACK_SLOTS * STACK_SLOTS];
            let fill = |buf: &mut [C64], f: &dyn Fn(usize, usize) -> C64| {
                for x in 0..len {
                    buf[x * STACK_SLOTS + x] = C64::new(0.0, 0.0);
                    for y in x + 1..len {
                        let v = f(x, y);
                        buf[x * STACK_SLOTS + y] = v;
                        buf[y * STACK_SLOTS + x] = -v;
                    }
                }
            };
            fill(&mut buf, &|x, y| g[x][y] + g[y][x]);
            let s1 = pfaffian_flat(&mut buf, len, STACK_SLOTS);
            let sm1 = if r >= n {
                // coefficient of t^{r−n} in Pf(B + tA) by a DFT over r+1 roots of unity
                let d = r - n;
                let pts = r + 1;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..pts {
                    let t = C64::from_polar(1.0, 2.0 * PI * j as f64 / pts as f64);
                    fill(&mut buf, &|x, y| g[y][x] - g[x][y] + t * g[x][y]);
                    acc += pfaffian_flat(&mut buf, len, STACK_SLOTS) * t.powu(d as u32).conj();
                }
                acc / pts as f64
            } else {
                C64::new(0.0, 0.0)
            };
            (s1, sm1)
        }
        Expansion::Matchings | Expansion::MatchingsSignFlipped => {
            let flip = method == Expansion::MatchingsSignFlipped;
            let mut s1 = C64::new(0.0, 0.0);
            let mut sm1 = C64::new(0.0, 0.0);
            let mut poly = vec![C64::new(0.0, 0.0); r + 1];
            for (pairs, sign) in matchings(r) {
                let sign = if flip { 1.0 } else { *sign };
                let mut p1 = C64::new(sign, 0.0);
                for &(x, y) in pairs {
                    p1 *= a(x, y) + a(y, x);
                }
                s1 += p1;
                if r >= n {
                    poly.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
                    poly[0] = C64::new(sign, 0.0);
                    for (deg, &(x, y)) in pairs.iter().enumerate() {
                        let av = a(x, y);
                        let bv = a(y, x) - av;
                        for e in (0..=deg + 1).rev() {
                            let lower = if e > 0 { poly[e - 1] * av } else { C64::new(0.0, 0.0) };
                            poly[e] = poly[e] * bv + lower;
                        }
                    }
                    sm1 += poly[r - n];
                }
            }
            (s1, sm1)
        }
    };
    let p1 = sum1 * (sgn_r * 2f64.powi(n as i32 - r as i32));
    let pm1 = summ1 * sgn_r;
    let sgn_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    (p1 + pm1 * sgn_n) * 0.5
}

/// tr_E ∏_i (1 − u(y_{i−1})*u(y_i)) from the pairings ⟨y_p, y_q⟩ only.
///
/// With b(y) the odd Clifford element for which 1 − u(z)*u(w) = 1 + b(z)b(w),
/// the product expands over subsets I of the factors (kept in cyclic order)
/// into traces of strings b(y_{i−1})b(y_i)⋯. A string of 2r vectors has
/// tr_E = ½P(1) + ½(−1)ⁿP(−1), where
/// P(1) = (−1)^r 2^{n−r} Σ_π sgn π ∏(⟨y_a,y_b⟩ + ⟨y_b,y_a⟩) and
/// P(−1) = (−1)^r Σ_π sgn π Σ_{S⊆π, |S|=r−n} ∏_S ⟨y_a,y_b⟩ ∏_{π∖S}(⟨y_b,y_a⟩ − ⟨y_a,y_b⟩),
/// π running over perfect matchings with pairs a < b.
pub fn expansion_trace(n: usize, gram: &CMat, method: Expansion) -> C64 {
    let m = gram.nrows();
    let mut total = C64::new(2f64.powi(n as i32 - 1), 0.0);
    let mut slots = Vec::with_capacity(2 * m);
    for mask in 1u32..(1 << m) {
        slots.clear();
        for i in 0..m {
            if mask & (1 << i) != 0 {
                slots.push((i + m - 1) % m);
                slots.push(i);
            }
        }
        total += string_trace(n, &slots, gram, method);
    }
    total
}

pub fn gram_matrix(points: &[SpherePoint]) -> CMat {
    let m = points.len();
    CMat::from_fn(m, m, |p, q| points[p].inner(&points[q]))
}

/// tr ∏_i (1 − a(z_{i−1})⁻¹a(z_i)) from symbol values and inverses.
pub fn direct_trace(values: &[CMat], inverses: &[CMat]) -> C64 {
    let m = values.len();
    let d = values[0].nrows();
    let id = identity(d);
    let mut p = id.clone();
    for i in 0..m {
        p = p * (&id - &inverses[(i + m - 1) % m] * &values[i]);
    }
    trace(&p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NschReport {
    pub left: C64,
    pub right: C64,
    pub difference: f64,
}

/// Both sides of the trace expansion for u at the given points.
pub fn nsch_trace(points: &[SpherePoint], gens: &GeneratorSet, method: Expansion) -> Result<NschReport> {
    let m = points.len();
    if m < 3 || m % 2 == 0 {
        return Err(Error::Domain(format!("need 2k+1 points with k >= 1, got {m}")));
    }
    if gens.n > 3 {
        return Err(Error::Unsupported("direct side is limited to n <= 3".into()));
    }
    for p in points {
        crate::clifford_rep::symbol_u(gens, p)?;
    }
    let us: Vec<CMat> = points.iter().map(|p| gens.u_matrix(&p.to_real())).collect();
    let adj: Vec<CMat> = us.iter().map(|u| u.adjoint()).collect();
    let left = direct_trace(&us, &adj);
    let right = expansion_trace(gens.n, &gram_matrix(points), method);
    Ok(NschReport {
        left,
        right,
        difference: (left - right).norm(),
    })
}

/// f̃(z₀, …, z_{2k}): the trace expansion evaluated at the chart images
/// ν̃(f(z_j)); equal to tr ∏(1 − g(f(z_{j−1}))*g(f(z_j))).
pub fn f_tilde(f: &TestMap, chart: &Chart, points: &[SpherePoint]) -> Result<C64> {
    let ys = points
        .iter()
        .map(|z| Ok(chart.nu_tilde(&f.evaluate(z)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(expansion_trace(f.dim().unwrap_or(1), &gram_matrix(&ys), Expansion::Pfaffian))
}

/// Sign relating the chosen (complex volume form) orientation of S^{2n-1}
/// to the outward one.
pub fn cs_orientation(n: usize) -> f64 {
    if n % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Positively oriented (outward) orthonormal frame of T_x S^{2n-1}.
pub fn tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut cols: Vec<Vec<f64>> = vec![x.to_vec()];
    let mut e = 0;
    while cols.len() < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        e += 1;
        for c in &cols {
            let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(vi, ci)| *vi -= dot * ci);
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-6 {
            v.iter_mut().for_each(|a| *a /= nv);
            cols.push(v);
        }
    }
    let det = DMatrix::from_fn(d, d, |r, c| cols[c][r]).determinant();
    if det < 0.0 {
        for a in cols[d - 1].iter_mut() {
            *a = -*a;
        }
    }
    cols.remove(0);
    cols
}

/// Top-degree Chern–Simons density of a symbol at z, as a multiple of the
/// normalized volume form, in the outward orientation:
/// 2/((2i)ⁿ(2n−1)!) Σ_σ sgn σ tr(A_{σ1}⋯A_{σ(2n−1)}), A_j = a⁻¹da(t_j).
pub fn cs_density_outward(symbol: &dyn Differentiable, z: &SpherePoint) -> C64 {
    let n = symbol.n();
    let frame = tangent_frame(&z.to_real());
    let ainv = symbol.eval_inv(z);
    let mats: Vec<CMat> = frame.iter().map(|t| &ainv * symbol.differential(z, t)).collect();
    let perms = perms_cached(2 * n - 1);
    let mut s = C64::new(0.0, 0.0);
    for (p, sign) in perms {
        let mut prod = mats[p[0]].clone();
        for &i in &p[1..] {
            prod *= &mats[i];
        }
        s += trace(&prod) * *sign as f64;
    }
    let fact: f64 = (1..=(2 * n - 1) as u32).map(f64::from).product();
    s * 2.0 / (C64::new(0.0, 2.0).powu(n as u32) * fact)
}

fn perms_cached(m: usize) -> &'static Vec<(Vec<usize>, i32)> {
    static CACHE: OnceLock<Vec<OnceLock<Vec<(Vec<usize>, i32)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=11).map(|_| OnceLock::new()).collect());
    cache[m].get_or_init(|| permutations_with_sign(m))
}

fn cs_estimate(moments: Moments, samples: u64, seed_: u64) -> McEstimate {
    McEstimate {
        value: moments.mean(),
        stderr: moments.stderr(),
        samples,
        seed: seed_,
        eps_schedule: Vec::new(),
        extrapolated: false,
        model: None,
        per_eps: Vec::new(),
        per_eps_stderr: Vec::new(),
        excluded: 0,
    }
}

fn cs_sample(symbol: &dyn Differentiable, z: &SpherePoint, antithetic: bool) -> C64 {
    let s = cs_orientation(symbol.n());
    if antithetic {
        (cs_density_outward(symbol, z) + cs_density_outward(symbol, &z.neg())) * (0.5 * s)
    } else {
        cs_density_outward(symbol, z) * s
    }
}

/// ∫ cs_{2n−1}[symbol] dV over the given samples (complex orientation),
/// antithetic in z ↦ −z.
pub fn chern_simons_pairing(symbol: &dyn Differentiable, mc: &SampleSet) -> Result<McEstimate> {
    if mc.n != symbol.n() {
        return Err(Error::Domain("samples and symbol live on different spheres".into()));
    }
    let parts: Vec<Moments> = mc
        .points
        .par_chunks(SAMPLE_CHUNK)
        .map(|chunk| {
            let mut m = Moments::default();
            for z in chunk {
                m.push(cs_sample(symbol, z, true));
            }
            m
        })
        .collect();
    let mut all = Moments::default();
    parts.iter().for_each(|p| all.merge(p));
    Ok(cs_estimate(all, mc.count as u64, mc.seed))
}

/// Same as [`chern_simons_pairing`] on `sample_sphere(n, count, seed)`, but
/// generating the points chunk by chunk instead of storing them.
pub fn chern_simons_pairing_seeded(symbol: &dyn Differentiable, count: usize, seed_: u64) -> Result<McEstimate> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let n = symbol.n();
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(seed_, "sphere", c as u64);
            let mut m = Moments::default();
            for _ in 0..SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK) {
                let z = uniform_point(&mut rng, n);
                m.push(cs_sample(symbol, &z, true));
            }
            m
        })
        .collect();
    let mut all = Moments::default();
    parts.iter().for_each(|p| all.merge(p));
    Ok(cs_estimate(all, count as u64, seed_))
}

/// Degree of a map S¹ → S¹ from
/// deg f = −∫ ∏_j (1 − f̄(z_{j−1})f(z_j)) C_ε(z_{j−1}, z_j) dV,
/// by the product trapezoid rule on `grid` nodes per circle (the trace of
/// the (2k+1)-th power of the kernel matrix), extrapolated in ε. The
/// reported standard error is the extrapolation spread.
pub fn degree_circle(f: &TestMap, k: usize, grid: usize, schedule: &Schedule) -> Result<McEstimate> {
    if f.dim() != Some(1) {
        return Err(Error::Domain("degree_circle needs a map S^1 -> S^1".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let alpha = f.holder();
    if !(alpha * (2 * k + 1) as f64 > 1.0) {
        return Err(Error::Precondition(format!(
            "alpha (2k+1) = {} <= 1: the integral need not converge",
            alpha * (2 * k + 1) as f64
        )));
    }
    if grid < 8 {
        return Err(Error::Size("grid must have at least 8 nodes".into()));
    }
    schedule.validate()?;
    let zs: Vec<C64> = (0..grid)
        .map(|i| C64::from_polar(1.0, 2.0 * PI * i as f64 / grid as f64))
        .collect();
    let fs = zs
        .iter()
        .map(|z| Ok(f.evaluate(&SpherePoint { z: vec![*z] })?.z[0]))
        .collect::<Result<Vec<_>>>()?;
    let per_eps: Vec<C64> = schedule
        .eps
        .par_iter()
        .map(|&e| {
            let kmat = CMat::from_fn(grid, grid, |p, q| {
                (C64::new(1.0, 0.0) - fs[p].conj() * fs[q]) * szego_from_pairing(1, e, zs[p] * zs[q].conj())
                    / grid as f64
            });
            -trace(&matrix_power(&kmat, 2 * k as u32 + 1))
        })
        .collect();
    let value = schedule.extrapolate(&per_eps);
    let spread = schedule.extrapolation_spread(&per_eps);
    Ok(McEstimate {
        value,
        stderr: spread,
        samples: grid as u64,
        seed: 0,
        eps_schedule: schedule.eps.clone(),
        extrapolated: true,
        model: Some(schedule.model),
        per_eps_stderr: vec![0.0; per_eps.len()],
        per_eps,
        excluded: 0,
    })
}

/// Monte-Carlo settings for the (2k+1)-fold integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub schedule: Schedule,
    /// Exponent of the near-diagonal proposal; default n − α/2.
    pub gamma: Option<f64>,
    /// Tuples with min pairwise |z_i − z_j| below this are dropped.
    pub min_separation: f64,
}

impl McConfig {
    pub fn new(n: usize, samples: u64, seed_: u64) -> Self {
        McConfig {
            samples,
            seed: seed_,
            schedule: Schedule::default_for(n),
            gamma: None,
            min_separation: 1e-6,
        }
    }

    fn proposal(&self, n: usize, alpha: f64) -> Result<NearDiagonal> {
        let g = self.gamma.unwrap_or(n as f64 - 0.5 * alpha);
        let max = (n as f64).min(2.0);
        if !(g >= 0.0 && g < max) {
            return Err(Error::Domain(format!("proposal exponent {g} outside [0, {max})")));
        }
        Ok(NearDiagonal::new(n, g))
    }
}

/// Tuples per independently seeded stratum.
pub const TUPLE_CHUNK: u64 = 8192;

struct ChainAccumulator {
    combined: Vec<Moments>,
    per_eps: Vec<Vec<Moments>>,
    excluded: u64,
}

/// Generic estimator for ∫ F_o(z₀..z_{m−1}) ∏ C_ε(z_{j−1}, z_j) dV^m, o over
/// `outputs` integrands sharing the tuples. Returns one estimate per output.
fn chain_estimate<F>(
    n: usize,
    m: usize,
    outputs: usize,
    alpha: f64,
    cfg: &McConfig,
    label: &str,
    integrand: F,
) -> Result<Vec<McEstimate>>
where
    F: Fn(&[SpherePoint], &mut [C64]) + Sync,
{
    cfg.schedule.validate()?;
    if cfg.samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let q = cfg.proposal(n, alpha)?;
    let weights = cfg.schedule.weights();
    let ne = cfg.schedule.eps.len();
    let chunks = cfg.samples.div_ceil(TUPLE_CHUNK);
    let parts: Vec<ChainAccumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::stream(cfg.seed, label, c);
            let mut acc = ChainAccumulator {
                combined: vec![Moments::default(); outputs],
                per_eps: vec![vec![Moments::default(); ne]; outputs],
                excluded: 0,
            };
            let mut pts: Vec<SpherePoint> = Vec::with_capacity(m);
            let mut f = vec![C64::new(0.0, 0.0); outputs];
            let mut kern = vec![C64::new(0.0, 0.0); ne];
            let len = TUPLE_CHUNK.min(cfg.samples - c * TUPLE_CHUNK);
            for _ in 0..len {
                pts.clear();
                pts.push(uniform_point(&mut rng, n));
                let mut density = 1.0;
                for j in 1..m - 1 {
                    let z = q.sample(&mut rng, &pts[j - 1]);
                    density *= q.density(&pts[j - 1], &z);
                    pts.push(z);
                }
                let anchor = if rand::Rng::gen::<bool>(&mut rng) { m - 2 } else { 0 };
                let last = q.sample(&mut rng, &pts[anchor]);
                density *= 0.5 * (q.density(&pts[m - 2], &last) + q.density(&pts[0], &last));
                pts.push(last);
                let mut min_sep = f64::INFINITY;
                for a in 0..m {
                    for b in a + 1..m {
                        min_sep = min_sep.min(pts[a].dist(&pts[b]));
                    }
                }
                if !(min_sep >= cfg.min_separation) || !(density > 0.0) || !density.is_finite() {
                    acc.excluded += 1;
                    for o in 0..outputs {
                        acc.combined[o].push(C64::new(0.0, 0.0));
                        acc.per_eps[o].iter_mut().for_each(|mm| mm.push(C64::new(0.0, 0.0)));
                    }
                    continue;
                }
                let w = 1.0 / density;
                for (e, &eps) in cfg.schedule.eps.iter().enumerate() {
                    let mut prod = C64::new(w, 0.0);
                    for j in 0..m {
                        prod *= szego_from_pairing(n, eps, pts[(j + m - 1) % m].inner(&pts[j]));
                    }
                    kern[e] = prod;
                }
                integrand(&pts, &mut f);
                for o in 0..outputs {
                    let mut comb = C64::new(0.0, 0.0);
                    for e in 0..ne {
                        let v = f[o] * kern[e];
                        acc.per_eps[o][e].push(v);
                        comb += v * weights[e];
                    }
                    acc.combined[o].push(comb);
                }
            }
            acc
        })
        .collect();
    let mut total = ChainAccumulator {
        combined: vec![Moments::default(); outputs],
        per_eps: vec![vec![Moments::default(); ne]; outputs],
        excluded: 0,
    };
    for p in &parts {
        total.excluded += p.excluded;
        for o in 0..outputs {
            total.combined[o].merge(&p.combined[o]);
            for e in 0..ne {
                total.per_eps[o][e].merge(&p.per_eps[o][e]);
            }
        }
    }
    Ok((0..outputs)
        .map(|o| McEstimate {
            value: total.combined[o].mean(),
            stderr: total.combined[o].stderr(),
            samples: cfg.samples,
            seed: cfg.seed,
            eps_schedule: cfg.schedule.eps.clone(),
            extrapolated: true,
            model: Some(cfg.schedule.model),
            per_eps: total.per_eps[o].iter().map(|mm| mm.mean()).collect(),
            per_eps_stderr: total.per_eps[o].iter().map(|mm| mm.stderr()).collect(),
            excluded: total.excluded,
        })
        .collect())
}

fn check_k(n: usize, k: usize, alpha: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !((2 * k + 1) as f64 > 2.0 * n as f64 / alpha) {
        return Err(Error::Precondition(format!(
            "2k+1 = {} must exceed 2n/alpha = {:.3}",
            2 * k + 1,
            2.0 * n as f64 / alpha
        )));
    }
    Ok(())
}

/// ind T(a) = ∫ tr ∏_j (1 − a(z_{j−1})⁻¹a(z_j)) C(z_{j−1}, z_j) dV^{2k+1},
/// mollified by the schedule's ε and extrapolated to ε = 0.
pub fn index_integral(a: &dyn SymbolMap, k: usize, kernel: KernelKind, cfg: &McConfig) -> Result<McEstimate> {
    let n = a.n();
    if kernel == KernelKind::CauchyCircle && n != 1 {
        return Err(Error::Domain("the Cauchy kernel lives on S^1".into()));
    }
    let alpha = a.holder();
    check_k(n, k, alpha)?;
    let margin = invertibility_margin(a, 2000, seed::derive(cfg.seed, "margin", 0))?;
    if !(margin > 0.05) {
        return Err(Error::Precondition(format!(
            "symbol not invertible with margin 0.05: min singular value {margin:.3e}"
        )));
    }
    let m = 2 * k + 1;
    let est = chain_estimate(n, m, 1, alpha, cfg, "index-chain", |pts, out| {
        let vals: Vec<CMat> = pts.iter().map(|z| a.eval(z)).collect();
        let invs: Vec<CMat> = pts.iter().map(|z| a.eval_inv(z)).collect();
        out[0] = direct_trace(&vals, &invs);
    })?;
    Ok(est.into_iter().next().unwrap())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeEstimate {
    /// Through the index integral of g∘f.
    pub via_index: McEstimate,
    /// Through the f̃ expansion, on the same tuples.
    pub via_f_tilde: McEstimate,
}

/// deg f = ∫ f̃(z₀, …, z_{2k}) ∏ C(z_{j−1}, z_j) dV = ind T(g∘f) for a map
/// f: S^{2n-1} → S^{2n-1}, g = u∘ν̃ with the chart.
pub fn degree_integral(
    f: &TestMap,
    gens: &GeneratorSet,
    chart: &Chart,
    k: usize,
    kernel: KernelKind,
    cfg: &McConfig,
) -> Result<DegreeEstimate> {
    let n = f.dim().ok_or_else(|| Error::Domain("map dimension unknown".into()))?;
    if n != gens.n {
        return Err(Error::Domain("generators and map disagree on n".into()));
    }
    if kernel == KernelKind::CauchyCircle && n != 1 {
        return Err(Error::Domain("the Cauchy kernel lives on S^1".into()));
    }
    let alpha = f.holder();
    check_k(n, k, alpha)?;
    // f must be defined on the sphere
    f.evaluate(&SpherePoint::north(n))?;
    let m = 2 * k + 1;
    let est = chain_estimate(n, m, 2, alpha, cfg, "degree-chain", |pts, out| {
        let ys: Vec<SpherePoint> = pts
            .iter()
            .map(|z| chart.nu_tilde(&f.evaluate(z).expect("checked map")))
            .collect();
        let vals: Vec<CMat> = ys.iter().map(|y| gens.u_matrix(&y.to_real())).collect();
        let invs: Vec<CMat> = vals.iter().map(|v| v.adjoint()).collect();
        out[0] = direct_trace(&vals, &invs);
        out[1] = expansion_trace(n, &gram_matrix(&ys), Expansion::Pfaffian);
    })?;
    let mut it = est.into_iter();
    Ok(DegreeEstimate {
        via_index: it.next().unwrap(),
        via_f_tilde: it.next().unwrap(),
    })
}

/// Extrapolation model in use for a sphere dimension (re-exported for
/// reports).
pub fn default_model(n: usize) -> ExtrapolationModel {
    Schedule::default_for(n).model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford_rep::{build_generators, SpinSymbol};
    use crate::symbol::PowerSymbol;

    #[test]
    fn pairing_constants_cancel() {
        for k in 0..=5 {
            let p = PairingConstants::new(k).product();
            assert!((p + 1.0).norm() < 1e-12, "k={k}: {p}");
        }
    }

    #[test]
    fn order_parity_examples() {
        let id = Permutation::identity(4);
        assert_eq!(order_parity(&id, 1, 4), 1);
        let s = Permutation::from_one_based(&[1, 3, 2, 4]).unwrap();
        assert_eq!(order_parity(&s, 1, 4), 0);
        let s = Permutation::from_one_based(&[2, 1, 3, 4]).unwrap();
        assert_eq!(order_parity(&s, 2, 4), -1);
    }

    #[test]
    fn pfaffian_matches_matchings() {
        let mut rng = seed::stream(3, "pf", 0);
        for r in 1..=4 {
            let len = 2 * r;
            let mut a = CMat::zeros(len, len);
            for x in 0..len {
                for y in x + 1..len {
                    let v = C64::new(rand::Rng::gen::<f64>(&mut rng) - 0.5, rand::Rng::gen::<f64>(&mut rng));
                    a[(x, y)] = v;
                    a[(y, x)] = -v;
                }
            }
            let direct: C64 = matchings(r)
                .iter()
                .map(|(pairs, s)| pairs.iter().map(|&(x, y)| a[(x, y)]).product::<C64>() * *s)
                .sum();
            let pf = pfaffian(&mut a.clone());
            assert!((pf - direct).norm() < 1e-12, "r={r}");
        }
        assert_eq!(matchings(3).len(), 15);
    }

    #[test]
    fn expansion_matches_direct_trace() {
        for n in 1..=3 {
            let gens = build_generators(n).unwrap();
            let mut rng = seed::stream(5, "nsch", n as u64);
            for m in [3, 5] {
                let pts: Vec<SpherePoint> = (0..m).map(|_| uniform_point(&mut rng, n)).collect();
                for method in [Expansion::Matchings, Expansion::Pfaffian] {
                    let r = nsch_trace(&pts, &gens, method).unwrap();
                    assert!(r.difference < 1e-10, "n={n} m={m} {method:?}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn cs_density_of_u_is_constant() {
        for n in 1..=3 {
            let u = SpinSymbol::new(n).unwrap();
            let mut rng = seed::stream(9, "cs", n as u64);
            for _ in 0..5 {
                let z = uniform_point(&mut rng, n);
                let v = cs_density_outward(&u, &z) * cs_orientation(n);
                let want = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((v - want).norm() < 1e-10, "n={n}: {v}");
            }
        }
    }

    #[test]
    fn circle_degree_of_z() {
        let f = TestMap::Power { m: 1 };
        let e = degree_circle(&f, 1, 200, &Schedule::default_for(1)).unwrap();
        assert!((e.value.re - 1.0).abs() < 0.01, "{e:?}");
    }

    #[test]
    fn index_of_z_small_run() {
        let cfg = McConfig::new(1, 40_000, 4);
        let e = index_integral(&PowerSymbol { m: 1 }, 1, KernelKind::CauchyCircle, &cfg).unwrap();
        assert!((e.value.re + 1.0).abs() < 4.0 * e.stderr + 0.02, "{e:?}");
    }
}
