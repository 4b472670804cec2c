//! verify-suite: the invariant battery with measured margins.

use anyhow::Result;
use sphere_degree::C64;
use sphere_degree::clifford_rep::{build_generators, iota, q_of, symbol_u, Sign, SpinSymbol};
use sphere_degree::cocycle_degree::{nsch_trace, Expansion, PairingConstants};
use sphere_degree::geometry::{uniform_point, SpherePoint, TestMap};
use sphere_degree::hardy_index::{commutator_singular_values_circle, trace_product_integral, CircleKernel, IndexOracleOptions};
use sphere_degree::linalg::{identity, max_abs};
use sphere_degree::seed;
use sphere_degree::symbol::{CircleMapSymbol, HolderModel, PowerSymbol, SymbolMap, TrigPolynomial};

use crate::commands::oracle;
use crate::config::Params;
use crate::record::{CheckRecord, Record, Status};

fn generator_relations() -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let g = build_generators(n)?;
        let id = identity(1 << n);
        for j in 0..n {
            for m in 0..n {
                for (s, t) in [(Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Minus), (Sign::Plus, Sign::Minus)] {
                    let (a, b) = (g.generator(j, s), g.generator(m, t));
                    let want = if j == m && s != t { -2.0 } else { 0.0 };
                    worst = worst.max(max_abs(&(a * b + b * a - &id * C64::new(want, 0.0))));
                }
            }
        }
    }
    Ok(CheckRecord::bound("generator anticommutators, n <= 4", worst, 1e-12, String::new()))
}

fn q_of_u() -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let g = build_generators(n)?;
        let mut rng = seed::stream(1, "suite-q", n as u64);
        for _ in 0..1000 {
            let z = uniform_point(&mut rng, n);
            let q = q_of(&symbol_u(&g, &z)?);
            let err = q.iter().zip(&iota(&z)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    Ok(CheckRecord::bound("q(u(z)) = iota(z), 3000 points", worst, 1e-10, String::new()))
}

fn nsch(method: Expansion) -> Result<CheckRecord> {
    let g = build_generators(2)?;
    let mut rng = seed::stream(2, "suite-nsch", 0);
    let mut worst: f64 = 0.0;
    for i in 0..400 {
        let m = if i % 2 == 0 { 3 } else { 5 };
        let pts: Vec<SpherePoint> = (0..m).map(|_| uniform_point(&mut rng, 2)).collect();
        worst = worst.max(nsch_trace(&pts, &g, method)?.difference);
    }
    Ok(CheckRecord::bound(
        "trace expansion vs direct trace, 400 tuples",
        worst,
        1e-9,
        format!("expansion {method:?}"),
    ))
}

fn pairing_constants() -> CheckRecord {
    let worst = (0..=5)
        .map(|k| (PairingConstants::new(k).product() + 1.0).norm())
        .fold(0.0, f64::max);
    CheckRecord::bound("d_k c_k = -1, k <= 5", worst, 1e-12, String::new())
}

fn trace_product() -> Result<CheckRecord> {
    let k = |x: f64, y: f64| (C64::new(1.1, 0.0) - C64::from_polar(1.0, x - y)).inv();
    let ks: [CircleKernel; 3] = [&k, &k, &k];
    let r = trace_product_integral(&ks, 200, 512, None)?;
    Ok(CheckRecord::bound(
        "trace product, 3 mollified Szego kernels",
        r.relative_difference,
        0.01,
        format!("matrix {} integral {}", r.matrix_side, r.integral_side),
    ))
}

fn schatten() -> Result<Vec<CheckRecord>> {
    let r = commutator_singular_values_circle(&HolderModel { n: 1, alpha: 0.5 }, 2048, &[])?;
    let slope = CheckRecord::bound("circle commutator slope, alpha = 1/2", r.slope, -0.25 + 0.1, String::new());
    let terms: Vec<(i32, C64)> = (-3..=3).map(|j| (j, C64::new(1.0, 0.2 * j as f64))).collect();
    let t = commutator_singular_values_circle(&TrigPolynomial { terms }, 512, &[])?;
    let rank = CheckRecord {
        label: "trig polynomial commutator rank = 2d".into(),
        status: if t.numerical_rank == 6 { Status::Pass } else { Status::Fail },
        measured: t.numerical_rank as f64,
        threshold: 6.0,
        detail: String::new(),
    };
    Ok(vec![slope, rank])
}

fn index_checks(tiny: bool) -> Result<Vec<CheckRecord>> {
    let cases: Vec<(Box<dyn SymbolMap>, i64)> = vec![
        (Box::new(PowerSymbol { m: 3 }), -3),
        (
            Box::new(CircleMapSymbol {
                map: TestMap::weierstrass(2, 0.6, 0.5),
            }),
            -2,
        ),
        (Box::new(SpinSymbol::new(2)?), 1),
    ];
    let mut out = Vec::new();
    for (a, want) in cases {
        let mut opts = IndexOracleOptions::for_n(a.n());
        if tiny {
            opts.caps = vec![2, 3, 4];
        }
        let o = oracle(a.as_ref(), &opts)?;
        let status = match o.index.parse::<i64>() {
            Ok(i) if i == want => Status::Pass,
            Ok(_) => Status::Fail,
            Err(_) => Status::Inconclusive,
        };
        out.push(CheckRecord {
            label: format!("truncated index of {}", a.label()),
            status,
            measured: o.index.parse().unwrap_or(f64::NAN),
            threshold: want as f64,
            detail: format!("caps {:?}: {}", opts.caps, o.detail),
        });
    }
    Ok(out)
}

pub fn verify_suite(p: &Params, rec: &mut Record) -> Result<()> {
    let method = if p.mutation.as_deref() == Some("sign-flip") {
        Expansion::MatchingsSignFlipped
    } else {
        Expansion::Matchings
    };
    rec.checks.push(generator_relations()?);
    rec.checks.push(q_of_u()?);
    rec.checks.push(nsch(method)?);
    rec.checks.push(pairing_constants());
    rec.checks.push(trace_product()?);
    rec.checks.extend(schatten()?);
    rec.checks.extend(index_checks(p.tiny_basis.unwrap_or(false))?);
    Ok(())
}
