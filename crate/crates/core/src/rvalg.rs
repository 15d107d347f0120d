//! Simple random variables with exact rational values and probabilities.
//!
//! Only distributions are represented; the sample space never is. An
//! independent product `XY` is the distribution of products of independent
//! draws, which is the random-variable counterpart of the tensor product of
//! sequences. A variable whose probabilities share the denominator `n` is
//! the uniform distribution on the coordinates of an `n`-slot sequence
//! ([`embed`]), and through that bridge `L_p` norms and `ℓ_p` norms agree
//! up to the factor `‖B_n‖_{L_p} = n^{−1/p}`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::characterize::{characterize, CharacterizeConfig, Verdict};
use crate::seqcore::{Exponent, FiniteSequence, NormOracle};
use crate::{Error, Result};

/// Largest number of slots [`embed`] will produce.
pub const MAX_EMBED_SLOTS: u64 = 1_000_000;
const PADDING_REL_TOL: f64 = 1e-12;

/// A finitely supported distribution on the rationals.
///
/// Atoms are sorted by value, values are distinct, probabilities are
/// positive and sum to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimpleRV {
    atoms: Vec<(BigRational, BigRational)>,
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl SimpleRV {
    /// Build from `(value, probability)` pairs. Equal values are merged,
    /// zero probabilities dropped.
    pub fn new(atoms: impl IntoIterator<Item = (BigRational, BigRational)>) -> Result<Self> {
        let mut merged: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for (v, p) in atoms {
            if p.is_negative() {
                return Err(Error::InvalidParameter {
                    name: "probability",
                    reason: format!("negative probability {p}"),
                });
            }
            *merged.entry(v).or_insert_with(BigRational::zero) += p;
        }
        let atoms: Vec<_> = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let total: BigRational = atoms.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(Error::NotNormalized(total.to_string()));
        }
        Ok(Self { atoms })
    }

    /// Convenience constructor from `(value_num, value_den, prob_num, prob_den)`.
    pub fn from_ratios(atoms: &[(i64, i64, i64, i64)]) -> Result<Self> {
        for (_, vd, _, pd) in atoms {
            if *vd == 0 || *pd == 0 {
                return Err(Error::InvalidParameter {
                    name: "denominator",
                    reason: "zero denominator".into(),
                });
            }
        }
        Self::new(
            atoms
                .iter()
                .map(|&(vn, vd, pn, pd)| (ratio(vn, vd), ratio(pn, pd))),
        )
    }

    /// The point mass `δ_v`.
    pub fn point(v: BigRational) -> Self {
        Self {
            atoms: vec![(v, BigRational::one())],
        }
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    /// Distribution of `|X|`.
    pub fn abs(&self) -> Self {
        Self::new(self.atoms.iter().map(|(v, p)| (v.abs(), p.clone())))
            .expect("absolute values keep total mass")
    }

    /// Least common denominator of the probabilities.
    pub fn common_denominator(&self) -> BigInt {
        self.atoms
            .iter()
            .fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()))
    }
}

impl fmt::Display for SimpleRV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({p})δ[{v}]")?;
        }
        Ok(())
    }
}

/// The Bernoulli variable with `P(1) = 1/n`, `P(0) = 1 − 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BernoulliRV {
    n: u64,
}

impl BernoulliRV {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "Bernoulli parameter 1/n needs n >= 1".into(),
            });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn to_rv(&self) -> SimpleRV {
        let hit = BigRational::new(BigInt::one(), BigInt::from(self.n));
        SimpleRV::new([
            (BigRational::one(), hit.clone()),
            (BigRational::zero(), BigRational::one() - hit),
        ])
        .expect("Bernoulli probabilities sum to one")
    }
}

/// `B_n` as a [`SimpleRV`].
pub fn bernoulli(n: u64) -> Result<SimpleRV> {
    Ok(BernoulliRV::new(n)?.to_rv())
}

pub fn same_distribution(x: &SimpleRV, y: &SimpleRV) -> bool {
    x.atoms == y.atoms
}

/// Distribution of `XY` for independent `X`, `Y`.
pub fn independent_product(x: &SimpleRV, y: &SimpleRV) -> SimpleRV {
    SimpleRV::new(
        x.atoms
            .iter()
            .flat_map(|(vx, px)| y.atoms.iter().map(move |(vy, py)| (vx * vy, px * py))),
    )
    .expect("product of distributions is a distribution")
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `‖X‖_{L_p} = (E|X|^p)^{1/p}`, or `max |X|` for `p = ∞`.
///
/// The moment is computed on the distribution of `|X|`, exactly in
/// rationals for integer `p`, so `X` and `|X|` give bit-identical norms.
pub fn lp_norm_rv(x: &SimpleRV, p: Exponent) -> f64 {
    let abs = x.abs();
    let p = match p {
        Exponent::Infinity => return abs.atoms.last().map_or(0.0, |(v, _)| to_f64(v)),
        Exponent::Finite(p) => p,
    };
    let moment = if p.fract() == 0.0 && p <= 64.0 {
        let k = p as usize;
        let exact: BigRational = abs
            .atoms
            .iter()
            .map(|(v, prob)| num_traits::pow(v.clone(), k) * prob)
            .sum();
        to_f64(&exact)
    } else {
        abs.atoms
            .iter()
            .map(|(v, prob)| to_f64(prob) * to_f64(v).powf(p))
            .sum()
    };
    if p == 1.0 {
        moment
    } else if p == 2.0 {
        moment.sqrt()
    } else {
        moment.powf(1.0 / p)
    }
}

/// The `n`-slot sequence whose uniform coordinate distribution is `X`,
/// with `n` the common denominator of the probabilities. Coordinates are
/// listed in non-increasing order of value.
pub fn embed(x: &SimpleRV) -> Result<(FiniteSequence, u64)> {
    let lcm = x.common_denominator();
    let n = match lcm.to_u64() {
        Some(n) if n <= MAX_EMBED_SLOTS => n,
        _ => {
            return Err(Error::EmbeddingTooLarge {
                lcm: lcm.to_string(),
                limit: MAX_EMBED_SLOTS,
            })
        }
    };
    let mut coords = Vec::with_capacity(n as usize);
    for (v, p) in x.atoms.iter().rev() {
        let slots = (p * BigRational::from_integer(lcm.clone()))
            .to_integer()
            .to_usize()
            .expect("slot count fits the embedding");
        coords.extend(std::iter::repeat_n(to_f64(v), slots));
    }
    Ok((FiniteSequence::new(coords), n))
}

/// Distribution of the `n`-slot embedding of `X` padded with zeros to `m`
/// slots: `(1/m)(δ_{x_1} + … + δ_{x_n} + (m − n)δ_0)`.
pub fn padded(x: &SimpleRV, n: u64, m: u64) -> Result<SimpleRV> {
    if m < n || n == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("padding needs m >= n >= 1 (got n={n}, m={m})"),
        });
    }
    let shrink = BigRational::new(BigInt::from(n), BigInt::from(m));
    let zero_mass = BigRational::new(BigInt::from(m - n), BigInt::from(m));
    SimpleRV::new(
        x.atoms
            .iter()
            .map(|(v, p)| (v.clone(), p * &shrink))
            .chain(std::iter::once((BigRational::zero(), zero_mass))),
    )
}

/// Both sides of `‖X‖·‖B_m‖ = ‖X′‖·‖B_n‖`, where `X′` is `X` re-embedded
/// with `m − n` extra zero slots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaddingCheck {
    pub n: u64,
    pub m: u64,
    /// `X·B_m` and `X′·B_n` have exactly the same distribution.
    pub products_agree: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// The same identity with `‖X‖ := ‖x‖·‖B_n‖` induced by a sequence norm.
    pub induced_lhs: f64,
    pub induced_rhs: f64,
}

impl PaddingCheck {
    pub fn rel_defect(&self) -> f64 {
        let a = (self.lhs - self.rhs).abs() / self.lhs.abs().max(f64::MIN_POSITIVE);
        let b = (self.induced_lhs - self.induced_rhs).abs()
            / self.induced_lhs.abs().max(f64::MIN_POSITIVE);
        let c = (self.lhs - self.induced_lhs).abs() / self.lhs.abs().max(f64::MIN_POSITIVE);
        a.max(b).max(c)
    }

    pub fn holds(&self) -> bool {
        self.products_agree && self.rel_defect() <= PADDING_REL_TOL
    }
}

/// An `L_p` norm on simple random variables induced by a sequence norm that
/// passed [`characterize`] as `ℓ_p`.
pub struct InducedRvNorm<O> {
    oracle: O,
    p: Exponent,
}

impl<O: NormOracle> InducedRvNorm<O> {
    pub fn new(oracle: O, config: &CharacterizeConfig) -> Result<Self> {
        let report = characterize(&oracle, config)?;
        match (report.verdict, report.p_estimate) {
            (Verdict::ConsistentLp, Some(p)) => Ok(Self { oracle, p }),
            (verdict, _) => Err(Error::NotLp {
                label: oracle.label(),
                verdict: verdict.to_string(),
            }),
        }
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    /// `‖X‖ := |||x|||·‖B_n‖` for the embedding `(x, n)` of `X`.
    pub fn induced(&self, x: &SimpleRV) -> Result<f64> {
        let (seq, n) = embed(x)?;
        Ok(self.oracle.eval(&seq) * lp_norm_rv(&bernoulli(n)?, self.p))
    }

    pub fn padding_check(&self, x: &SimpleRV, m: u64) -> Result<PaddingCheck> {
        let (seq, n) = embed(x)?;
        let x_pad = padded(x, n, m)?;
        let (b_n, b_m) = (bernoulli(n)?, bernoulli(m)?);
        let products_agree = same_distribution(
            &independent_product(x, &b_m),
            &independent_product(&x_pad, &b_n),
        );
        let (norm_bn, norm_bm) = (lp_norm_rv(&b_n, self.p), lp_norm_rv(&b_m, self.p));
        let induced_x = self.oracle.eval(&seq) * norm_bn;
        let induced_x_pad = self.oracle.eval(&seq.padded((m - n) as usize)) * norm_bm;
        Ok(PaddingCheck {
            n,
            m,
            products_agree,
            lhs: lp_norm_rv(x, self.p) * norm_bm,
            rhs: lp_norm_rv(&x_pad, self.p) * norm_bn,
            induced_lhs: induced_x * norm_bm,
            induced_rhs: induced_x_pad * norm_bn,
        })
    }

    /// `‖X‖_{L_p}`, after confirming the padding identity with `m = 2n`.
    pub fn eval(&self, x: &SimpleRV) -> Result<f64> {
        let (_, n) = embed(x)?;
        let check = self.padding_check(x, 2 * n)?;
        if !check.holds() {
            return Err(Error::PaddingMismatch {
                lhs: check.lhs,
                rhs: check.rhs,
            });
        }
        Ok(lp_norm_rv(x, self.p))
    }
}

/// `‖X‖` induced by `sequence_norm`, which must characterize as `ℓ_p`.
pub fn triple_norm<O: NormOracle>(x: &SimpleRV, sequence_norm: O) -> Result<f64> {
    InducedRvNorm::new(sequence_norm, &CharacterizeConfig::default())?.eval(x)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Small(i64),
    Big(String),
}

impl IntRepr {
    fn from_big(v: &BigInt) -> Self {
        match v.to_i64() {
            Some(s) => IntRepr::Small(s),
            None => IntRepr::Big(v.to_string()),
        }
    }

    fn to_big(&self) -> std::result::Result<BigInt, String> {
        match self {
            IntRepr::Small(v) => Ok(BigInt::from(*v)),
            IntRepr::Big(s) => s.parse().map_err(|_| format!("bad integer `{s}`")),
        }
    }
}

impl Serialize for SimpleRV {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.atoms.len()))?;
        for (v, p) in &self.atoms {
            seq.serialize_element(&[
                IntRepr::from_big(v.numer()),
                IntRepr::from_big(v.denom()),
                IntRepr::from_big(p.numer()),
                IntRepr::from_big(p.denom()),
            ])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for SimpleRV {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: Vec<[IntRepr; 4]> = Vec::deserialize(deserializer)?;
        let mut atoms = Vec::with_capacity(raw.len());
        for [vn, vd, pn, pd] in &raw {
            let (vn, vd, pn, pd) = (
                vn.to_big().map_err(D::Error::custom)?,
                vd.to_big().map_err(D::Error::custom)?,
                pn.to_big().map_err(D::Error::custom)?,
                pd.to_big().map_err(D::Error::custom)?,
            );
            if vd.is_zero() || pd.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            atoms.push((BigRational::new(vn, vd), BigRational::new(pn, pd)));
        }
        SimpleRV::new(atoms).map_err(D::Error::custom)
    }
}
