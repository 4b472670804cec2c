//! Matrix-valued symbols on S^{2n-1}.

use crate::error::{Error, Result};
use crate::geometry::{SpherePoint, TestMap};
use crate::linalg::{identity, CMat};
use crate::C64;
use std::sync::Arc;

/// Evaluatable map ∂Ω → GL_N(ℂ).
pub trait SymbolMap: Send + Sync {
    /// Complex dimension n of the sphere S^{2n-1}.
    fn n(&self) -> usize;
    /// Matrix size N.
    fn size(&self) -> usize;
    fn eval(&self, z: &SpherePoint) -> CMat;
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        self.eval(z)
            .try_inverse()
            .unwrap_or_else(|| CMat::from_element(self.size(), self.size(), C64::new(f64::NAN, 0.0)))
    }
    /// Hölder exponent (1 for Lipschitz symbols).
    fn holder(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String;
}

/// Symbols with a closed-form differential, as needed by the Chern-Simons
/// pairing. `v` is a tangent vector in real coordinates.
pub trait Differentiable: SymbolMap {
    fn differential(&self, z: &SpherePoint, v: &[f64]) -> CMat;
}

impl<T: SymbolMap + ?Sized> SymbolMap for Arc<T> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn size(&self) -> usize {
        (**self).size()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        (**self).eval(z)
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        (**self).eval_inv(z)
    }
    fn holder(&self) -> f64 {
        (**self).holder()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

fn scalar(c: C64) -> CMat {
    CMat::from_element(1, 1, c)
}

/// z ↦ z^m on S¹ (negative m means z̄^{|m|}).
#[derive(Clone, Debug)]
pub struct PowerSymbol {
    pub m: i32,
}

impl SymbolMap for PowerSymbol {
    fn n(&self) -> usize {
        1
    }
    fn size(&self) -> usize {
        1
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        let w = z.z[0];
        scalar(if self.m >= 0 {
            w.powu(self.m as u32)
        } else {
            w.conj().powu(self.m.unsigned_abs())
        })
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        let v = self.eval(z)[(0, 0)];
        scalar(v.conj() / v.norm_sqr())
    }
    fn label(&self) -> String {
        format!("z^{}", self.m)
    }
}

/// A scalar symbol on S¹ given by a test map S¹ → S¹.
#[derive(Clone, Debug)]
pub struct CircleMapSymbol {
    pub map: TestMap,
}

impl SymbolMap for CircleMapSymbol {
    fn n(&self) -> usize {
        1
    }
    fn size(&self) -> usize {
        1
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        scalar(self.map.evaluate(z).map(|p| p.z[0]).unwrap_or(C64::new(f64::NAN, 0.0)))
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        let v = self.eval(z)[(0, 0)];
        scalar(v.conj() / v.norm_sqr())
    }
    fn holder(&self) -> f64 {
        self.map.holder()
    }
    fn label(&self) -> String {
        format!("{:?}", self.map)
    }
}

/// Trigonometric polynomial Σ c_k e^{ikθ} on S¹.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    pub terms: Vec<(i32, C64)>,
}

impl TrigPolynomial {
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0)
    }
}

impl SymbolMap for TrigPolynomial {
    fn n(&self) -> usize {
        1
    }
    fn size(&self) -> usize {
        1
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        let w = z.z[0];
        scalar(
            self.terms
                .iter()
                .map(|(k, c)| {
                    c * if *k >= 0 {
                        w.powu(*k as u32)
                    } else {
                        w.conj().powu(k.unsigned_abs())
                    }
                })
                .sum(),
        )
    }
    fn label(&self) -> String {
        format!("trig(deg {})", self.degree())
    }
}

/// Model Hölder symbol |1 − z₁|^α on S^{2n-1}; on S¹ this is |e^{iθ} − 1|^α.
#[derive(Clone, Debug)]
pub struct HolderModel {
    pub n: usize,
    pub alpha: f64,
}

impl SymbolMap for HolderModel {
    fn n(&self) -> usize {
        self.n
    }
    fn size(&self) -> usize {
        1
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        scalar(C64::new((C64::new(1.0, 0.0) - z.z[0]).norm().powf(self.alpha), 0.0))
    }
    fn holder(&self) -> f64 {
        self.alpha
    }
    fn label(&self) -> String {
        format!("|1-z1|^{}", self.alpha)
    }
}

/// Constant invertible matrix.
#[derive(Clone, Debug)]
pub struct ConstantSymbol {
    pub n: usize,
    pub value: CMat,
}

impl SymbolMap for ConstantSymbol {
    fn n(&self) -> usize {
        self.n
    }
    fn size(&self) -> usize {
        self.value.nrows()
    }
    fn eval(&self, _: &SpherePoint) -> CMat {
        self.value.clone()
    }
    fn label(&self) -> String {
        "constant".into()
    }
}

/// Pointwise product a·b of two symbols of equal size.
pub struct ProductSymbol<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: SymbolMap, B: SymbolMap> SymbolMap for ProductSymbol<A, B> {
    fn n(&self) -> usize {
        self.a.n()
    }
    fn size(&self) -> usize {
        self.a.size()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        self.a.eval(z) * self.b.eval(z)
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        self.b.eval_inv(z) * self.a.eval_inv(z)
    }
    fn holder(&self) -> f64 {
        self.a.holder().min(self.b.holder())
    }
    fn label(&self) -> String {
        format!("({})*({})", self.a.label(), self.b.label())
    }
}

/// a ∘ f for a test map f between spheres of the same dimension.
pub struct Composed<A> {
    pub symbol: A,
    pub map: TestMap,
}

impl<A: SymbolMap> Composed<A> {
    pub fn new(symbol: A, map: TestMap) -> Result<Self> {
        if let Some(d) = map.dim() {
            if d != symbol.n() {
                return Err(Error::Domain(format!(
                    "map on C^{d} composed with symbol on C^{}",
                    symbol.n()
                )));
            }
        }
        Ok(Composed { symbol, map })
    }

    fn inner(&self, z: &SpherePoint) -> SpherePoint {
        self.map.evaluate(z).expect("dimension checked at construction")
    }
}

impl<A: SymbolMap> SymbolMap for Composed<A> {
    fn n(&self) -> usize {
        self.symbol.n()
    }
    fn size(&self) -> usize {
        self.symbol.size()
    }
    fn eval(&self, z: &SpherePoint) -> CMat {
        self.symbol.eval(&self.inner(z))
    }
    fn eval_inv(&self, z: &SpherePoint) -> CMat {
        self.symbol.eval_inv(&self.inner(z))
    }
    fn holder(&self) -> f64 {
        self.symbol.holder() * self.map.holder()
    }
    fn label(&self) -> String {
        format!("{} o {:?}", self.symbol.label(), self.map)
    }
}

/// The identity symbol of size N.
pub fn identity_symbol(n: usize, size: usize) -> ConstantSymbol {
    ConstantSymbol {
        n,
        value: identity(size),
    }
}
