//! Exact value statistics of tensor powers.
//!
//! The coordinates of `x^{⊗n}` are all products `x_{i_1}⋯x_{i_n}`; in log
//! domain they are sums of `n` draws from the atoms `ln x_i`. A
//! [`LogAtomMeasure`] keeps those sums as `(logv, count)` pairs with
//! arbitrary-precision counts, so `N(x^{⊗n}, a)`, the number of
//! coordinates `≥ a`, is available exactly without writing out `kⁿ`
//! numbers.
//!
//! ```text
//! from_sequence((4,2,2,1)) = [(0, 1), (ln 2, 2), (ln 4, 1)]
//! power([(0,1),(ln 2,1)], n) = [(j·ln 2, C(n, j)) : 0 ≤ j ≤ n]
//! ```

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::seqcore::{canonical, FiniteSequence};
use crate::{Error, Result};

/// Default guard on the projected number of atoms of a power.
pub const DEFAULT_MAX_ATOMS: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_MAX_ATOMS`].
pub const MAX_ATOMS_ENV: &str = "NORMFORGE_MAX_ATOMS";

const MERGE_REL_TOL: f64 = 1e-12;
const THRESHOLD_REL_SLACK: f64 = 1e-9;

/// The active atom guard: `NORMFORGE_MAX_ATOMS` if set and parseable,
/// otherwise [`DEFAULT_MAX_ATOMS`].
pub fn atom_limit() -> u64 {
    std::env::var(MAX_ATOMS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_ATOMS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogAtom {
    pub logv: f64,
    pub count: BigUint,
}

/// Multiset of log-values with exact multiplicities, sorted by `logv`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAtomMeasure {
    atoms: Vec<LogAtom>,
}

impl LogAtomMeasure {
    /// Build from explicit atoms; sorts and merges near-equal log-values
    /// and drops zero counts.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, BigUint)>) -> Self {
        let atoms = atoms
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(logv, count)| LogAtom { logv, count })
            .collect();
        Self {
            atoms: merge_atoms(atoms),
        }
    }

    /// One atom per distinct positive value of `canonical(x)`, weighted by
    /// its multiplicity.
    pub fn from_sequence(x: &FiniteSequence) -> Result<Self> {
        let c = canonical(x);
        if c.is_empty() {
            return Err(Error::ZeroSequence);
        }
        let mut atoms: Vec<LogAtom> = Vec::new();
        // canonical is non-increasing; equal values are adjacent
        for &v in c.coords().iter().rev() {
            match atoms.last_mut() {
                Some(last) if last.logv == v.ln() => last.count += 1u32,
                _ => atoms.push(LogAtom {
                    logv: v.ln(),
                    count: BigUint::one(),
                }),
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[LogAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> BigUint {
        self.atoms.iter().map(|a| &a.count).sum()
    }

    /// Additive convolution: the measure of `x ⊗ y` from those of `x` and `y`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for b in &other.atoms {
            for a in &self.atoms {
                out.push(LogAtom {
                    logv: a.logv + b.logv,
                    count: &a.count * &b.count,
                });
            }
        }
        Self {
            atoms: merge_atoms(out),
        }
    }

    /// `n`-fold self-convolution, i.e. the measure of `x^{⊗n}`.
    ///
    /// Refuses inputs whose projected atom count `C(n+k−1, k−1)` exceeds
    /// [`atom_limit`].
    pub fn power(&self, n: usize) -> Result<Self> {
        self.power_with_limit(n, atom_limit())
    }

    pub fn power_with_limit(&self, n: usize, limit: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "tensor powers need n >= 1".into(),
            });
        }
        let projected = projected_atoms(n, self.len());
        if projected > limit as f64 {
            return Err(Error::AtomLimit { projected, limit });
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.step(self);
        }
        Ok(acc)
    }

    /// One convolution with a (small) base measure. Each base atom shifts
    /// the sorted accumulator, so the concatenation is a handful of sorted
    /// runs and the merge sort is close to linear.
    fn step(&self, base: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() * base.len());
        for b in &base.atoms {
            let unit = b.count.is_one();
            out.extend(self.atoms.iter().map(|a| LogAtom {
                logv: a.logv + b.logv,
                count: if unit {
                    a.count.clone()
                } else {
                    &a.count * &b.count
                },
            }));
        }
        Self {
            atoms: merge_atoms(out),
        }
    }

    /// Total count of atoms with `logv ≥ threshold_log − slack`, slack
    /// `1e-9·max(1, |threshold_log|)`.
    pub fn count_geq(&self, threshold_log: f64) -> BigUint {
        let cut = threshold_log - THRESHOLD_REL_SLACK * threshold_log.abs().max(1.0);
        let start = self.atoms.partition_point(|a| a.logv < cut);
        self.atoms[start..].iter().map(|a| &a.count).sum()
    }
}

/// Measure of the `n`-th tensor power of `x`.
pub fn power_of_sequence(x: &FiniteSequence, n: usize) -> Result<LogAtomMeasure> {
    LogAtomMeasure::from_sequence(x)?.power(n)
}

/// `C(n+k−1, k−1)`, the number of multisets of size `n` from `k` atoms.
pub fn projected_atoms(n: usize, k: usize) -> f64 {
    (1..k).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

fn merge_atoms(mut atoms: Vec<LogAtom>) -> Vec<LogAtom> {
    atoms.sort_by(|a, b| a.logv.total_cmp(&b.logv));
    let mut merged: Vec<LogAtom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.last_mut() {
            Some(last)
                if atom.logv - last.logv < MERGE_REL_TOL * last.logv.abs().max(1.0) =>
            {
                last.count += atom.count;
            }
            _ => merged.push(atom),
        }
    }
    merged
}

/// Natural log of a big count from its bit length and leading 64 bits.
/// Returns `−∞` for zero.
pub fn ln_count(count: &BigUint) -> f64 {
    if count.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = count.bits();
    if bits <= 64 {
        return (count.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (count >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `(1/n)·ln N(x^{⊗n}, e^{tn})`, or `−∞` when no coordinate qualifies.
pub fn empirical_rate(x: &FiniteSequence, t: f64, n: usize) -> Result<f64> {
    let m = power_of_sequence(x, n)?;
    Ok(rate_from_count(&m.count_geq(t * n as f64), n))
}

pub(crate) fn rate_from_count(count: &BigUint, n: usize) -> f64 {
    ln_count(count) / n as f64
}

impl Serialize for LogAtomMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.atoms.len()))?;
        for a in &self.atoms {
            seq.serialize_element(&(a.logv, a.count.to_str_radix(10)))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for LogAtomMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MeasureVisitor;

        impl<'de> Visitor<'de> for MeasureVisitor {
            type Value = LogAtomMeasure;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of [logv, \"count\"] pairs")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<LogAtomMeasure, A::Error> {
                let mut atoms = Vec::new();
                while let Some((logv, count)) = seq.next_element::<(f64, String)>()? {
                    let count = BigUint::parse_bytes(count.as_bytes(), 10)
                        .ok_or_else(|| de::Error::custom(format!("bad count `{count}`")))?;
                    atoms.push((logv, count));
                }
                Ok(LogAtomMeasure::from_atoms(atoms))
            }
        }

        deserializer.deserialize_seq(MeasureVisitor)
    }
}
