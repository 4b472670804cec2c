//! The estimation subcommands.

use anyhow::{anyhow, bail, Result};
use sphere_degree::C64;
use sphere_degree::clifford_rep::{build_generators, ChartSymbol, GVariant, HomotopySymbol, SpinSymbol, SpinSymbolTilde};
use sphere_degree::cocycle_degree::{chern_simons_pairing_seeded, degree_circle, degree_integral, index_integral, McConfig};
use sphere_degree::geometry::{Chart, TestMap};
use sphere_degree::hardy_index::{
    commutator_singular_values_circle, commutator_singular_values_sphere, fredholm_index_truncated, trace_product_integral,
    CircleKernel, IndexOracleOptions,
};
use sphere_degree::kernels::{KernelKind, Schedule};
use sphere_degree::symbol::{CircleMapSymbol, Differentiable, HolderModel, PowerSymbol, SymbolMap, TrigPolynomial};
use sphere_degree::Error;
use std::sync::Arc;

use crate::config::Params;
use crate::record::{CheckRecord, EstimateRecord, OracleRecord, Record, Status};

pub const DEFAULT_SEED: u64 = 1;

fn seed(p: &Params) -> u64 {
    p.seed.unwrap_or(DEFAULT_SEED)
}

fn schedule(p: &Params, n: usize) -> Schedule {
    let mut s = Schedule::default_for(n);
    if let Some(e) = &p.eps {
        s.eps = e.clone();
    }
    s
}

fn mc_config(p: &Params, n: usize, default_samples: u64) -> McConfig {
    let mut c = McConfig::new(n, p.samples.unwrap_or(default_samples), seed(p));
    c.schedule = schedule(p, n);
    c
}

/// Smallest k with 2k+1 > bound.
fn min_k(bound: f64) -> usize {
    (1..).find(|k| (2 * k + 1) as f64 > bound).unwrap()
}

pub fn test_map(p: &Params) -> Result<TestMap> {
    let m = p.m.unwrap_or(1);
    Ok(match p.family.as_deref().unwrap_or("power") {
        "power" => TestMap::Power { m },
        "weierstrass" => TestMap::weierstrass(m, p.alpha.unwrap_or(0.6), p.lambda.unwrap_or(0.5)),
        "quaternion-power" => TestMap::QuaternionPower { m },
        "identity" => match p.n.unwrap_or(2) {
            1 => TestMap::Power { m: 1 },
            2 => TestMap::QuaternionPower { m: 1 },
            n => bail!("family: identity is available for n = 1, 2, got n = {n}"),
        },
        other => bail!("family: unknown map family {other}"),
    })
}

fn gens(n: usize) -> Result<Arc<sphere_degree::clifford_rep::GeneratorSet>> {
    Ok(Arc::new(build_generators(n)?))
}

pub fn symbol(p: &Params) -> Result<Box<dyn SymbolMap>> {
    let n = p.n.unwrap_or(2);
    let m = p.m.unwrap_or(1);
    Ok(match p.symbol.as_deref().unwrap_or("u") {
        "u" => Box::new(SpinSymbol { gens: gens(n)? }),
        "u-tilde" => Box::new(SpinSymbolTilde { gens: gens(n)? }),
        "g" => Box::new(ChartSymbol {
            gens: gens(n)?,
            chart: Chart::default(),
            variant: GVariant::Lipschitz,
        }),
        "g-tilde" => Box::new(ChartSymbol {
            gens: gens(n)?,
            chart: Chart::default(),
            variant: GVariant::Smooth,
        }),
        "homotopy" => Box::new(HomotopySymbol {
            gens: gens(n)?,
            t: p.t.unwrap_or(1.0),
        }),
        "power" => Box::new(PowerSymbol { m }),
        "weierstrass" => Box::new(CircleMapSymbol {
            map: TestMap::weierstrass(m, p.alpha.unwrap_or(0.6), p.lambda.unwrap_or(0.5)),
        }),
        "holder" => Box::new(HolderModel {
            n,
            alpha: p.alpha.unwrap_or(0.5),
        }),
        "trig" => {
            let d = p.degree.unwrap_or(3);
            Box::new(TrigPolynomial {
                terms: (-d..=d).map(|j| (j, C64::new(1.0 + 0.1 * j as f64, 0.3 * j as f64))).collect(),
            })
        }
        other => bail!("symbol: unknown symbol {other}"),
    })
}

fn differentiable(p: &Params) -> Result<Box<dyn Differentiable>> {
    let n = p.n.unwrap_or(2);
    Ok(match p.symbol.as_deref().unwrap_or("u") {
        "u" => Box::new(SpinSymbol { gens: gens(n)? }),
        "u-tilde" => Box::new(SpinSymbolTilde { gens: gens(n)? }),
        "g" => Box::new(ChartSymbol {
            gens: gens(n)?,
            chart: Chart::default(),
            variant: GVariant::Lipschitz,
        }),
        "g-tilde" => Box::new(ChartSymbol {
            gens: gens(n)?,
            chart: Chart::default(),
            variant: GVariant::Smooth,
        }),
        other => return Err(Error::Unsupported(format!("symbol: no closed-form differential for {other}")).into()),
    })
}

pub fn cs_check(p: &Params, rec: &mut Record) -> Result<()> {
    let s = differentiable(p)?;
    let count = p.samples.unwrap_or(1_000_000) as usize;
    let e = chern_simons_pairing_seeded(s.as_ref(), count, seed(p))?;
    let r = EstimateRecord::from_mc(&format!("cs[{}]", s.label()), &e);
    rec.resolved = Some(r.resolved.clone());
    rec.estimates.push(r);
    Ok(())
}

fn oracle_options(p: &Params, n: usize) -> IndexOracleOptions {
    let mut o = IndexOracleOptions::for_n(n);
    if let Some(c) = &p.caps {
        o.caps = c.clone();
    }
    if let Some(e) = p.extra {
        o.extra = e;
    }
    o
}

/// Runs the truncated oracle; an inconclusive sequence is a result, not an error.
pub fn oracle(a: &dyn SymbolMap, opts: &IndexOracleOptions) -> Result<OracleRecord> {
    match fredholm_index_truncated(a, opts) {
        Ok(r) => Ok(OracleRecord {
            index: r.index.to_string(),
            values: r.values,
            detail: format!("spread {:.3e}", r.spread),
        }),
        Err(Error::Inconclusive(msg)) => Ok(OracleRecord {
            index: "INCONCLUSIVE".into(),
            values: Vec::new(),
            detail: msg,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn index(p: &Params, rec: &mut Record) -> Result<()> {
    let a = symbol(p)?;
    let n = a.n();
    let k = p.k.unwrap_or_else(|| min_k(2.0 * n as f64 / a.holder()));
    let kind = if n == 1 { KernelKind::CauchyCircle } else { KernelKind::Szego };
    let default_samples = if n == 1 { 200_000 } else { 1_000_000 };
    let e = index_integral(a.as_ref(), k, kind, &mc_config(p, n, default_samples))?;
    let r = EstimateRecord::from_mc(&format!("index[{}] k={k}", a.label()), &e);
    rec.resolved = Some(r.resolved.clone());
    rec.estimates.push(r);
    if p.oracle.unwrap_or(n <= 2) {
        let o = oracle(a.as_ref(), &oracle_options(p, n))?;
        let agree = o.index == rec.resolved.clone().unwrap_or_default();
        rec.checks.push(CheckRecord {
            label: "integral agrees with oracle".into(),
            status: if o.index == "INCONCLUSIVE" {
                Status::Inconclusive
            } else if agree {
                Status::Pass
            } else {
                Status::Fail
            },
            measured: e.value.re,
            threshold: o.index.parse().unwrap_or(f64::NAN),
            detail: o.detail.clone(),
        });
        rec.oracle = Some(o);
    }
    Ok(())
}

pub fn degree(p: &Params, rec: &mut Record) -> Result<()> {
    let mut q = p.clone();
    if q.family.is_none() {
        q.family = Some("quaternion-power".into());
    }
    let f = test_map(&q)?;
    let n = f.dim().ok_or_else(|| anyhow!("family: map dimension unknown"))?;
    if let Some(pn) = p.n {
        if pn != n {
            bail!("n: {pn} does not match the map family (n = {n})");
        }
    }
    let k = p.k.unwrap_or_else(|| min_k(2.0 * n as f64 / f.holder()));
    let g = build_generators(n)?;
    let kind = if n == 1 { KernelKind::CauchyCircle } else { KernelKind::Szego };
    let d = degree_integral(&f, &g, &Chart::default(), k, kind, &mc_config(p, n, 1_000_000))?;
    let a = EstimateRecord::from_mc("degree via index of g∘f", &d.via_index);
    let b = EstimateRecord::from_mc("degree via f~ expansion", &d.via_f_tilde);
    rec.resolved = Some(if a.resolved == b.resolved { a.resolved.clone() } else { "UNRESOLVED".into() });
    rec.estimates.push(a);
    rec.estimates.push(b);
    Ok(())
}

pub fn degree_circle_cmd(p: &Params, rec: &mut Record) -> Result<()> {
    let f = test_map(p)?;
    if f.dim() != Some(1) {
        bail!("family: degree-circle needs a map S^1 -> S^1");
    }
    let k = p.k.unwrap_or_else(|| min_k(1.0 / f.holder()));
    let e = degree_circle(&f, k, p.grid.unwrap_or(200), &schedule(p, 1))?;
    let r = EstimateRecord::from_mc(&format!("degree-circle k={k}"), &e);
    rec.resolved = Some(r.resolved.clone());
    rec.estimates.push(r);
    Ok(())
}

pub fn schatten(p: &Params, rec: &mut Record) -> Result<()> {
    let mut q = p.clone();
    if q.symbol.is_none() {
        q.symbol = Some("holder".into());
    }
    let n = q.n.unwrap_or(1);
    q.n = Some(n);
    let a = symbol(&q)?;
    let alpha = a.holder();
    let pc = 2.0 * n as f64 / alpha;
    let ps = [1.25 * pc, 0.5 * pc];
    let r = match n {
        1 => commutator_singular_values_circle(a.as_ref(), p.grid.unwrap_or(2048), &ps)?,
        2 => commutator_singular_values_sphere(a.as_ref(), p.cap.unwrap_or(14), p.extra.unwrap_or(26), &ps)?,
        _ => bail!("n: schatten runs on S^1 or S^3"),
    };
    let detail = format!(
        "rank {}, fit window {:?}, flattens {:?}",
        r.numerical_rank, r.fit_window, r.flattens
    );
    if q.symbol.as_deref() == Some("trig") {
        let d = p.degree.unwrap_or(3);
        let want = 2 * d.unsigned_abs() as usize;
        rec.checks.push(CheckRecord {
            label: "commutator rank equals 2d".into(),
            status: if r.numerical_rank == want { Status::Pass } else { Status::Fail },
            measured: r.numerical_rank as f64,
            threshold: want as f64,
            detail,
        });
    } else {
        rec.checks
            .push(CheckRecord::bound("singular value slope", r.slope, -alpha / (2.0 * n as f64) + 0.1, detail));
    }
    Ok(())
}

pub fn trace_check(p: &Params, rec: &mut Record) -> Result<()> {
    let m = p.kernels.unwrap_or(3);
    if m == 0 {
        bail!("kernels: need at least one");
    }
    let eps = p.eps.as_ref().and_then(|e| e.first().copied()).unwrap_or(0.1);
    let k = move |x: f64, y: f64| (C64::new(1.0 + eps, 0.0) - C64::from_polar(1.0, x - y)).inv();
    let ks: Vec<CircleKernel> = (0..m).map(|_| &k as CircleKernel).collect();
    let samples = p.samples.unwrap_or(1_000_000) as usize;
    let r = trace_product_integral(&ks, p.modes.unwrap_or(200), p.grid.unwrap_or(512), Some((samples, seed(p))))?;
    let (mc, se) = r.monte_carlo.unwrap();
    rec.checks.push(CheckRecord::bound(
        "matrix side vs product quadrature (relative)",
        r.relative_difference,
        0.01,
        format!("matrix {} integral {} monte-carlo {mc} +- {se:.3e}", r.matrix_side, r.integral_side),
    ));
    Ok(())
}
