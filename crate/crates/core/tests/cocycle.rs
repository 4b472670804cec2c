use num_complex::Complex64 as C64;
use sphere_degree::clifford_rep::*;
use sphere_degree::cocycle_degree::*;
use sphere_degree::geometry::*;
use sphere_degree::kernels::*;
use sphere_degree::linalg::{identity, CMat};
use sphere_degree::mc::Resolution;
use sphere_degree::seed;
use sphere_degree::symbol::*;
use sphere_degree::Error;
use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

fn inversions(p: &[usize]) -> usize {
    (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count()
}

#[test]
fn permutation_signs_match_inversion_parity() {
    for m in 1..=6 {
        let all = permutations_with_sign(m);
        assert_eq!(all.len(), (1..=m).product::<usize>());
        for (p, s) in all {
            let want = if inversions(&p) % 2 == 0 { 1 } else { -1 };
            assert_eq!(s, want);
            assert_eq!(Permutation::new(p).unwrap().sign(), want);
        }
    }
    assert!(Permutation::new(vec![0, 0, 1]).is_err());
}

/// Breadth-first search over arbitrary transpositions of the prefix for the
/// nearest sequence of the form (j₁, j₁+1, j₂, j₂+1, …) mod m.
fn parity_oracle(prefix: &[usize], m: usize) -> i32 {
    let is_target = |s: &[usize]| s.chunks(2).all(|p| p[1] == (p[0] + 1) % m);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(prefix.to_vec());
    queue.push_back((prefix.to_vec(), 0usize));
    while let Some((s, d)) = queue.pop_front() {
        if is_target(&s) {
            return if d % 2 == 0 { 1 } else { -1 };
        }
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let mut t = s.clone();
                t.swap(i, j);
                if seen.insert(t.clone()) {
                    queue.push_back((t, d + 1));
                }
            }
        }
    }
    0
}

#[test]
fn order_parity_examples() {
    let id = Permutation::identity(4);
    assert_eq!(order_parity(&id, 1, 4), 1);
    let p = Permutation::from_one_based(&[1, 3, 2, 4]).unwrap();
    assert_eq!(order_parity(&p, 1, 4), 0);
    let p = Permutation::from_one_based(&[2, 1, 3, 4]).unwrap();
    assert_eq!(order_parity(&p, 2, 4), -1);
}

#[test]
fn order_parity_matches_transposition_search() {
    for m in 2..=6 {
        for (images, _) in permutations_with_sign(m) {
            let p = Permutation::new(images.clone()).unwrap();
            for l in 1..=m / 2 {
                assert_eq!(
                    order_parity(&p, l, m),
                    parity_oracle(&images[..2 * l], m),
                    "m={m} l={l} {images:?}"
                );
            }
        }
    }
}

#[test]
fn matchings_and_pfaffians() {
    for r in 1..=5 {
        let want: usize = (1..=r).map(|i| 2 * i - 1).product();
        assert_eq!(matchings(r).len(), want);
    }
    let mut rng = seed::stream(1, "pf", 0);
    use rand::Rng;
    for size in [2, 4, 6, 8] {
        let mut a = CMat::zeros(size, size);
        for i in 0..size {
            for j in i + 1..size {
                let v = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        let det = a.determinant();
        let pf = pfaffian(&mut a.clone());
        assert!((pf * pf - det).norm() < 1e-12, "size {size}");
        // matchings sum
        let sum: C64 = matchings(size / 2)
            .iter()
            .map(|(pairs, s)| pairs.iter().map(|&(i, j)| a[(i, j)]).product::<C64>() * *s)
            .sum();
        assert!((sum - pf).norm() < 1e-12);
    }
}

#[test]
fn nsch_equal_points_vanish() {
    let g = build_generators(2).unwrap();
    let z = SpherePoint::normalized(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.9)]);
    for m in [3, 5] {
        let pts = vec![z.clone(); m];
        for method in [Expansion::Matchings, Expansion::Pfaffian] {
            let r = nsch_trace(&pts, &g, method).unwrap();
            assert!(r.left.norm() < 1e-13 && r.right.norm() < 1e-12);
        }
    }
}

#[test]
fn nsch_agrees_with_direct_trace() {
    let mut rng = seed::stream(2, "nsch", 0);
    for n in 1..=3 {
        let g = build_generators(n).unwrap();
        for m in [3, 5, 7] {
            for _ in 0..20 {
                let pts: Vec<SpherePoint> = (0..m).map(|_| uniform_point(&mut rng, n)).collect();
                for method in [Expansion::Matchings, Expansion::Pfaffian] {
                    let r = nsch_trace(&pts, &g, method).unwrap();
                    assert!(r.difference < 1e-9, "n={n} m={m} {method:?} {}", r.difference);
                }
            }
        }
    }
}

#[test]
fn nsch_scalar_case_closed_form() {
    let g = build_generators(1).unwrap();
    let mut rng = seed::stream(3, "scalar", 0);
    for _ in 0..50 {
        let pts: Vec<SpherePoint> = (0..5).map(|_| uniform_point(&mut rng, 1)).collect();
        // u = −z̄, so 1 − u(z_{i−1})* u(z_i) = 1 − z_{i−1} z̄_i
        let want: C64 = (0..5).map(|i| C64::new(1.0, 0.0) - pts[(i + 4) % 5].z[0] * pts[i].z[0].conj()).product();
        let r = nsch_trace(&pts, &g, Expansion::Matchings).unwrap();
        assert!((r.left - want).norm() < 1e-12 && (r.right - want).norm() < 1e-12);
    }
}

#[test]
fn sign_flipped_expansion_is_caught() {
    let g = build_generators(2).unwrap();
    let mut rng = seed::stream(4, "flip", 0);
    let worst = (0..20)
        .map(|_| {
            let pts: Vec<SpherePoint> = (0..5).map(|_| uniform_point(&mut rng, 2)).collect();
            nsch_trace(&pts, &g, Expansion::MatchingsSignFlipped).unwrap().difference
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-3);
}

#[test]
fn nsch_rejects_bad_arguments() {
    let g = build_generators(2).unwrap();
    let p = SpherePoint::north(2);
    assert!(nsch_trace(&[p.clone(), p.clone()], &g, Expansion::Pfaffian).is_err());
    let g4 = build_generators(4).unwrap();
    let q = SpherePoint::north(4);
    assert!(matches!(nsch_trace(&[q.clone(), q.clone(), q], &g4, Expansion::Pfaffian), Err(Error::Unsupported(_))));
}

#[test]
fn f_tilde_matches_direct_trace() {
    let g = build_generators(2).unwrap();
    let chart = Chart::default();
    let mut rng = seed::stream(5, "ftilde", 0);
    for f in [TestMap::QuaternionPower { m: 1 }, TestMap::QuaternionPower { m: 2 }, TestMap::QuaternionPower { m: -1 }] {
        for m in [3, 5] {
            for _ in 0..20 {
                let pts: Vec<SpherePoint> = (0..m).map(|_| uniform_point(&mut rng, 2)).collect();
                let vals: Vec<CMat> = pts
                    .iter()
                    .map(|z| symbol_g(&g, &chart, &f.evaluate(z).unwrap(), GVariant::Lipschitz).unwrap().matrix)
                    .collect();
                let invs: Vec<CMat> = vals.iter().map(|v| v.adjoint()).collect();
                let direct = direct_trace(&vals, &invs);
                let ft = f_tilde(&f, &chart, &pts).unwrap();
                assert!((ft - direct).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn f_tilde_vanishes_off_chart() {
    let chart = Chart::default();
    let f = TestMap::Constant {
        value: SpherePoint::north(2),
    };
    let mut rng = seed::stream(6, "off-chart", 0);
    let pts: Vec<SpherePoint> = (0..5).map(|_| uniform_point(&mut rng, 2)).collect();
    assert!(f_tilde(&f, &chart, &pts).unwrap().norm() < 1e-12);
}

#[test]
fn pairing_constants_cancel() {
    for k in 0..=8 {
        assert!((PairingConstants::new(k).product() + 1.0).norm() < 1e-12);
    }
}

#[test]
fn evencre_vanishing_pattern() {
    let g = build_generators(2).unwrap();
    for l in 1..=2 {
        let words: Vec<Vec<Sign>> = (0u32..(1 << (2 * l - 1)))
            .map(|mask| (0..2 * l - 1).map(|i| if mask & (1 << i) != 0 { Sign::Plus } else { Sign::Minus }).collect())
            .collect();
        let gamma_minus = gamma_set(l, Sign::Minus);
        for k in words {
            let coeffs = z_plus_alpha_coefficients(&g, &k);
            if !gamma_minus.contains(&k) {
                assert!(coeffs.is_empty(), "l={l} {k:?}");
            }
        }
    }
}

#[test]
fn evencre_l1_values_from_matrices() {
    // tr_E(e_{j,+} e_{m,−}) = −2^{n−1} δ_{jm} for n ≥ 2
    for n in 2..=4 {
        let g = build_generators(n).unwrap();
        let c = z_plus_alpha_coefficients(&g, &[Sign::Minus]);
        assert_eq!(c.len(), n);
        for (idx, v) in c {
            assert_eq!(idx[0], idx[1]);
            assert!((v + 2f64.powi(n as i32 - 1)).norm() < 1e-12);
        }
    }
}

/// Closed-form coefficient (−1)ⁿ2^{n−1}·l! at l = 1. The matrices give
/// −2^{n−1} instead, so this stays ignored.
#[test]
#[ignore]
fn evencre_l1_literal_coefficient() {
    let g = build_generators(2).unwrap();
    for (_, v) in z_plus_alpha_coefficients(&g, &[Sign::Minus]) {
        assert!((v - 2.0).norm() < 1e-12);
    }
}

#[test]
fn cs_pairing_of_u() {
    let u1 = SpinSymbol::new(1).unwrap();
    let e = chern_simons_pairing_seeded(&u1, 10_000, 1).unwrap();
    assert!((e.value.re + 1.0).abs() < 1e-9);
    let u2 = SpinSymbol::new(2).unwrap();
    let e = chern_simons_pairing_seeded(&u2, 100_000, 1).unwrap();
    assert!((e.value.re - 1.0).abs() < 4.0 * e.stderr.max(1e-9));
    assert!(e.imaginary_within_noise());
    let set = sample_sphere(2, 100_000, 1).unwrap();
    assert_eq!(chern_simons_pairing(&u2, &set).unwrap().value, e.value);
}

fn g_tilde() -> ChartSymbol {
    ChartSymbol {
        gens: Arc::new(build_generators(2).unwrap()),
        chart: Chart::default(),
        variant: GVariant::Smooth,
    }
}

#[test]
fn cs_pairing_of_g_tilde_is_zero() {
    let e = chern_simons_pairing_seeded(&g_tilde(), 200_000, 7).unwrap();
    assert!(e.value.norm() < 4.0 * e.stderr + 1e-9, "{} {}", e.value, e.stderr);
}

/// Expected ∫cs[g̃] = (−1)ⁿ. Cannot hold: ũ has degree 0 (see README).
#[test]
#[ignore]
fn cs_pairing_of_g_tilde_literal() {
    let e = chern_simons_pairing_seeded(&g_tilde(), 1_000_000, 7).unwrap();
    assert!((e.value.re - 1.0).abs() < 3.0 * e.stderr);
}

#[test]
fn degree_circle_examples() {
    let s = Schedule::default_for(1);
    let e = degree_circle(&TestMap::Power { m: 1 }, 1, 200, &s).unwrap();
    assert!((e.value.re - 1.0).abs() < 1e-2);
    let e = degree_circle(&TestMap::Power { m: 2 }, 1, 200, &s).unwrap();
    assert_eq!(e.resolve(), Resolution::Resolved(2));
    let e = degree_circle(&TestMap::weierstrass(1, 0.6, 0.5), 1, 200, &s).unwrap();
    assert_eq!(e.resolve(), Resolution::Resolved(1));
    assert!(matches!(
        degree_circle(&TestMap::weierstrass(1, 0.3, 0.5), 1, 200, &s),
        Err(Error::Precondition(_))
    ));
    assert!(degree_circle(&TestMap::QuaternionPower { m: 1 }, 1, 200, &s).is_err());
}

#[test]
fn index_integral_examples() {
    let e = index_integral(&PowerSymbol { m: 1 }, 1, KernelKind::CauchyCircle, &McConfig::new(1, 100_000, 2)).unwrap();
    assert_eq!(e.resolve(), Resolution::Resolved(-1));
    let c = ConstantSymbol {
        n: 2,
        value: identity(2) * C64::new(0.0, 2.0),
    };
    let e = index_integral(&c, 2, KernelKind::Szego, &McConfig::new(2, 10_000, 2)).unwrap();
    assert!(e.value.norm() < 1e-12 && e.stderr < 1e-12);
    assert!(matches!(
        index_integral(&PowerSymbol { m: 1 }, 0, KernelKind::CauchyCircle, &McConfig::new(1, 10, 2)),
        Err(Error::Precondition(_)) | Err(Error::Domain(_))
    ));
    let h = HolderModel { n: 1, alpha: 0.5 };
    assert!(matches!(
        index_integral(&h, 2, KernelKind::CauchyCircle, &McConfig::new(1, 10, 2)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn index_integral_is_reproducible_across_thread_counts() {
    let u = SpinSymbol::new(2).unwrap();
    let cfg = McConfig::new(2, 20_000, 9);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| index_integral(&u, 2, KernelKind::Szego, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
    assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn degree_integral_identity_small_run() {
    let g = build_generators(2).unwrap();
    let d = degree_integral(
        &TestMap::QuaternionPower { m: 1 },
        &g,
        &Chart::default(),
        2,
        KernelKind::Szego,
        &McConfig::new(2, 100_000, 3),
    )
    .unwrap();
    for e in [&d.via_index, &d.via_f_tilde] {
        assert!((e.value.re - 1.0).abs() < 4.0 * e.stderr, "{} {}", e.value, e.stderr);
    }
    assert!((d.via_index.value - d.via_f_tilde.value).norm() < 1e-6);
}

#[test]
fn homotopy_indices_at_t_0_half_1() {
    let gens = Arc::new(build_generators(2).unwrap());
    let opts = sphere_degree::hardy_index::IndexOracleOptions::for_n(2);
    let idx = |t: f64| {
        let w = HomotopySymbol { gens: gens.clone(), t };
        sphere_degree::hardy_index::fredholm_index_truncated(&w, &opts).unwrap().index
    };
    assert_eq!((idx(0.0), idx(0.5), idx(1.0)), (0, 0, 1));
}

/// Index invariance along w(·, t). Fails: t < 1 gives 0 and t = 1 gives 1.
#[test]
#[ignore]
fn homotopy_invariance_literal() {
    let gens = Arc::new(build_generators(2).unwrap());
    let opts = sphere_degree::hardy_index::IndexOracleOptions::for_n(2);
    let idx = |t: f64| {
        let w = HomotopySymbol { gens: gens.clone(), t };
        sphere_degree::hardy_index::fredholm_index_truncated(&w, &opts).unwrap().index
    };
    assert_eq!(idx(0.0), idx(1.0));
}
