//! Finite real sequences, their tensor products, and reference norms.
//!
//! A [`FiniteSequence`] is an element of `c00`: finitely many stored
//! coordinates followed by implicit zeros. Symmetric norms only see the
//! multiset of absolute values, so most operations go through
//! [`canonical`], which sorts `|x|` non-increasingly and trims the zeros.
//!
//! Reference norms come in two flavours: the multiplicative `ℓ_p` family
//! ([`LpNorm`]) and the Ky Fan top-`k` sums ([`KyFanNorm`]), which are
//! symmetric but fail `‖x ⊗ y‖ = ‖x‖·‖y‖` once `k ≥ 2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A finitely supported real sequence.
///
/// Equality ignores trailing zeros: `(1, 2)` and `(1, 2, 0, 0)` are the
/// same element of `c00`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteSequence {
    coords: Vec<f64>,
}

impl FiniteSequence {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// The sequence `1ⁿ`: `n` ones followed by zeros.
    pub fn ones(n: usize) -> Self {
        Self {
            coords: vec![1.0; n],
        }
    }

    pub fn zero() -> Self {
        Self { coords: Vec::new() }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Number of stored coordinates, trailing zeros included.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of nonzero coordinates.
    pub fn support_size(&self) -> usize {
        self.coords.iter().filter(|c| **c != 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0.0)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.coords.iter().map(|c| c.abs()).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coords.iter().map(|v| c * v).collect())
    }

    /// Coordinatewise sum, padding the shorter operand with zeros.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let get = |s: &Self, i: usize| s.coords.get(i).copied().unwrap_or(0.0);
        Self::new((0..n).map(|i| get(self, i) + get(other, i)).collect())
    }

    /// Append `extra` zeros to the stored coordinates.
    pub fn padded(&self, extra: usize) -> Self {
        let mut coords = self.coords.clone();
        coords.resize(self.len() + extra, 0.0);
        Self::new(coords)
    }

    fn significant(&self) -> &[f64] {
        let end = self
            .coords
            .iter()
            .rposition(|c| *c != 0.0)
            .map_or(0, |i| i + 1);
        &self.coords[..end]
    }
}

impl PartialEq for FiniteSequence {
    fn eq(&self, other: &Self) -> bool {
        self.significant() == other.significant()
    }
}

impl From<Vec<f64>> for FiniteSequence {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

impl fmt::Display for FiniteSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// An exponent `p ∈ [1, ∞]`.
///
/// Serializes as a JSON number, or the string `"inf"` for `p = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// A finite exponent; rejects `p < 1`, NaN and infinities.
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `p` as a float, `f64::INFINITY` for `p = ∞`.
    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Exponent::Infinity),
            _ => {
                let p: f64 = s.parse().map_err(|_| Error::InvalidParameter {
                    name: "p",
                    reason: format!("`{s}` is neither a number nor \"inf\""),
                })?;
                Exponent::finite(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number >= 1 or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Exponent::finite(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExponentVisitor)
    }
}

/// `|x|` sorted non-increasingly with zeros trimmed.
pub fn canonical(x: &FiniteSequence) -> FiniteSequence {
    let mut coords: Vec<f64> = x
        .coords
        .iter()
        .map(|c| c.abs())
        .filter(|c| *c != 0.0)
        .collect();
    coords.sort_by(|a, b| b.total_cmp(a));
    FiniteSequence::new(coords)
}

/// Canonical form of the doubly indexed sequence `(x_i y_j)`.
pub fn tensor(x: &FiniteSequence, y: &FiniteSequence) -> FiniteSequence {
    let products = x
        .coords
        .iter()
        .flat_map(|a| y.coords.iter().map(move |b| a * b))
        .collect();
    canonical(&FiniteSequence::new(products))
}

/// The `n`-fold tensor power, fully expanded. Size grows as `kⁿ`.
pub fn tensor_power(x: &FiniteSequence, n: usize) -> FiniteSequence {
    let mut acc = FiniteSequence::new(vec![1.0]);
    for _ in 0..n {
        acc = tensor(&acc, x);
    }
    acc
}

/// The `ℓ_p` norm.
///
/// Terms are summed over `|x|` in ascending order. Every sequence is
/// summed in the same canonical order, so `lp_norm(canonical(x)) ==
/// lp_norm(x)` bit for bit and coordinatewise domination `0 ≤ a ≤ b`
/// carries over to the computed values.
pub fn lp_norm(x: &FiniteSequence, p: Exponent) -> f64 {
    let mut mags: Vec<f64> = x
        .coords
        .iter()
        .map(|c| c.abs())
        .filter(|c| *c != 0.0)
        .collect();
    if mags.is_empty() {
        return 0.0;
    }
    mags.sort_by(f64::total_cmp);
    let p = match p {
        Exponent::Infinity => return *mags.last().unwrap(),
        Exponent::Finite(p) => p,
    };
    let direct = power_sum(&mags, p, 1.0);
    if direct.is_finite() && direct > 0.0 {
        return root(direct, p);
    }
    // overflow or underflow: rescale by the largest magnitude
    let max = *mags.last().unwrap();
    max * root(power_sum(&mags, p, max), p)
}

fn power_sum(mags: &[f64], p: f64, scale: f64) -> f64 {
    if p == 1.0 {
        mags.iter().map(|m| m / scale).sum()
    } else if p == 2.0 {
        mags.iter().map(|m| (m / scale) * (m / scale)).sum()
    } else {
        mags.iter().map(|m| (m / scale).powf(p)).sum()
    }
}

fn root(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    }
}

/// Sum of the `k` largest absolute values.
pub fn kyfan_norm(x: &FiniteSequence, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "Ky Fan norms need k >= 1".into(),
        });
    }
    Ok(canonical(x).coords.iter().take(k).sum())
}

/// An opaque evaluator `FiniteSequence → [0, ∞)`.
///
/// Nothing is assumed about an oracle beyond returning a number; the
/// [`characterize`](crate::characterize) procedure checks the norm axioms
/// by sampling.
pub trait NormOracle {
    fn label(&self) -> String;
    fn eval(&self, x: &FiniteSequence) -> f64;
}

impl<T: NormOracle + ?Sized> NormOracle for &T {
    fn label(&self) -> String {
        (**self).label()
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        (**self).eval(x)
    }
}

impl<T: NormOracle + ?Sized> NormOracle for Box<T> {
    fn label(&self) -> String {
        (**self).label()
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        (**self).eval(x)
    }
}

impl<T: NormOracle + ?Sized> NormOracle for Arc<T> {
    fn label(&self) -> String {
        (**self).label()
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        (**self).eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpNorm(pub Exponent);

impl NormOracle for LpNorm {
    fn label(&self) -> String {
        format!("lp:{}", self.0)
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        lp_norm(x, self.0)
    }
}

/// Ky Fan `k`-norm. `k` is validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KyFanNorm {
    k: usize,
}

impl KyFanNorm {
    pub fn new(k: usize) -> Result<Self> {
        kyfan_norm(&FiniteSequence::zero(), k)?;
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl NormOracle for KyFanNorm {
    fn label(&self) -> String {
        format!("kyfan:{}", self.k)
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        canonical(x).coords.iter().take(self.k).sum()
    }
}

/// `c·‖·‖` for an inner oracle.
pub struct ScaledNorm<O> {
    pub factor: f64,
    pub inner: O,
}

impl<O: NormOracle> NormOracle for ScaledNorm<O> {
    fn label(&self) -> String {
        format!("{}*{}", self.factor, self.inner.label())
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        self.factor * self.inner.eval(x)
    }
}

/// An oracle backed by a closure.
pub struct FnOracle<F> {
    label: String,
    f: F,
}

impl<F: Fn(&FiniteSequence) -> f64> FnOracle<F> {
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F: Fn(&FiniteSequence) -> f64> NormOracle for FnOracle<F> {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, x: &FiniteSequence) -> f64 {
        (self.f)(x)
    }
}
