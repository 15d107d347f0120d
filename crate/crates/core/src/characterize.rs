//! Deciding whether a norm oracle is an `ℓ_p` norm.
//!
//! A permutation-invariant multiplicative norm is `‖·‖_p`, and the exponent
//! can be read off `u_n = ‖1ⁿ‖ = n^{1/p}`. [`characterize`] runs that
//! argument as a bounded, seeded search for counterexamples:
//!
//! 1. norm axioms: positivity, homogeneity, triangle inequality, and
//!    invariance under permutations and sign changes;
//! 2. the exponent from `u_2`, then the power law `u_n = n^α` for `n ≤ 64`;
//! 3. agreement with `‖·‖_p` on random sequences;
//! 4. `‖x ⊗ y‖ = ‖x‖·‖y‖` on random pairs.
//!
//! The first failing check decides the verdict and carries a witness pair
//! that [`reproduce_defect`] re-evaluates from scratch. A `consistent_lp`
//! verdict is a statement about the sampled cases only.
//!
//! Random entries are multiples of `1/8` in `[−2, 2]`, so products and sums
//! of samples are exact in binary floating point and any defect belongs to
//! the oracle.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::seqcore::{lp_norm, tensor, Exponent, FiniteSequence, NormOracle};
use crate::{Error, Result};

/// Largest `n` for which `‖1ⁿ‖ = n^α` is checked.
pub const POWER_LAW_N_MAX: usize = 64;
/// Default relative tolerance of every check.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const ALPHA_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentLp,
    ViolatesPermutationInvariance,
    ViolatesMultiplicativity,
    ViolatesPowerLaw,
    ViolatesNormAxiom,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        !matches!(self, Verdict::ConsistentLp)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::ConsistentLp => "consistent_lp",
            Verdict::ViolatesPermutationInvariance => "violates_permutation_invariance",
            Verdict::ViolatesMultiplicativity => "violates_multiplicativity",
            Verdict::ViolatesPowerLaw => "violates_power_law",
            Verdict::ViolatesNormAxiom => "violates_norm_axiom",
        };
        f.write_str(s)
    }
}

/// The individual check a witness fails, which fixes how its defect is
/// recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `x = 0 ⇒ ‖x‖ = 0`, otherwise `‖x‖` finite and positive. Witness `(x, x)`.
    Positivity,
    /// `‖c·x‖ = |c|·‖x‖`. Witness `(x, c·x)`.
    Homogeneity,
    /// `‖x + y‖ ≤ ‖x‖ + ‖y‖`. Witness `(x, y)`.
    TriangleInequality,
    /// `‖x‖ = ‖y‖` for `y` a signed permutation of `x`. Witness `(x, y)`.
    PermutationInvariance,
    /// `‖1ⁿ‖ = n^α` with `α = log₂ ‖1²‖`. Witness `(1², 1ⁿ)`.
    PowerLaw,
    /// `‖x‖ = ‖x‖_p` with `p = 1/log₂ ‖y‖`. Witness `(x, 1²)`.
    ///
    /// Only reported when no direct multiplicativity witness turns up. An
    /// oracle that is a norm must then fail multiplicativity somewhere; one
    /// that only looked like a norm on the samples may instead break an
    /// axiom off-sample.
    Agreement,
    /// `‖x ⊗ y‖ = ‖x‖·‖y‖`. Witness `(x, y)`.
    Multiplicativity,
}

impl Check {
    pub fn verdict(&self) -> Verdict {
        match self {
            Check::Positivity | Check::Homogeneity | Check::TriangleInequality => {
                Verdict::ViolatesNormAxiom
            }
            Check::PermutationInvariance => Verdict::ViolatesPermutationInvariance,
            Check::PowerLaw => Verdict::ViolatesPowerLaw,
            // a symmetric norm obeying the power law but differing from
            // ℓ_p cannot be multiplicative
            Check::Agreement | Check::Multiplicativity => Verdict::ViolatesMultiplicativity,
        }
    }
}

/// A failed check with its witness pair and measured defect.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: Check,
    pub witness: (FiniteSequence, FiniteSequence),
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeConfig {
    pub seed: u64,
    pub samples: usize,
    pub dim_max: usize,
    pub tolerance: f64,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 500,
            dim_max: 6,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl CharacterizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "need at least one sample".into(),
            });
        }
        if self.dim_max < 2 {
            return Err(Error::InvalidParameter {
                name: "dim_max",
                reason: "need dim_max >= 2".into(),
            });
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: "must be a positive number".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterizationReport {
    pub oracle: String,
    pub verdict: Verdict,
    pub check: Option<Check>,
    pub p_estimate: Option<Exponent>,
    #[serde(serialize_with = "serialize_defect")]
    pub max_defect: f64,
    pub witness: Option<(FiniteSequence, FiniteSequence)>,
    pub samples_tested: usize,
    pub seed: u64,
    pub tolerance: f64,
}

fn serialize_defect<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    nan_to_inf((a - b).abs() / b)
}

/// `|‖x⊗y‖ − ‖x‖·‖y‖| / (‖x‖·‖y‖)`.
pub fn multiplicativity_defect<O: NormOracle + ?Sized>(
    oracle: &O,
    x: &FiniteSequence,
    y: &FiniteSequence,
) -> Result<f64> {
    let (nx, ny) = (oracle.eval(x), oracle.eval(y));
    for v in [nx, ny] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveNorm {
                label: oracle.label(),
                value: v,
            });
        }
    }
    Ok(relative_gap(oracle.eval(&tensor(x, y)), nx * ny))
}

/// `α = log₂ u_2`, snapped to zero below `1e-12`, and the matching exponent.
fn exponent_from_u2(u2: f64) -> (f64, Exponent) {
    let alpha = u2.ln() / std::f64::consts::LN_2;
    if alpha.abs() <= ALPHA_ZERO_TOL {
        (0.0, Exponent::Infinity)
    } else {
        (alpha, Exponent::Finite(1.0 / alpha))
    }
}

/// Re-evaluate the defect a witness exhibits for `check`.
pub fn reproduce_defect<O: NormOracle + ?Sized>(
    oracle: &O,
    check: Check,
    witness: &(FiniteSequence, FiniteSequence),
) -> f64 {
    let (x, y) = witness;
    match check {
        Check::Positivity => {
            let v = oracle.eval(x);
            if x.is_zero() {
                nan_to_inf(v.abs())
            } else if v > 0.0 && v.is_finite() {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Check::Homogeneity => {
            let c = x
                .coords()
                .iter()
                .zip(y.coords())
                .find(|(a, _)| **a != 0.0)
                .map_or(0.0, |(a, b)| b / a);
            relative_gap(oracle.eval(y), c.abs() * oracle.eval(x))
        }
        Check::TriangleInequality => {
            let (a, b) = (oracle.eval(x), oracle.eval(y));
            nan_to_inf(((oracle.eval(&x.add(y)) - a - b) / (a + b)).max(0.0))
        }
        Check::PermutationInvariance => {
            let (a, b) = (oracle.eval(x), oracle.eval(y));
            nan_to_inf((a - b).abs() / a.max(b))
        }
        Check::PowerLaw => {
            let (alpha, _) = exponent_from_u2(oracle.eval(x));
            let target = (y.len() as f64).powf(alpha);
            relative_gap(oracle.eval(y), target)
        }
        Check::Agreement => {
            let (_, p) = exponent_from_u2(oracle.eval(y));
            relative_gap(oracle.eval(x), lp_norm(x, p))
        }
        Check::Multiplicativity => {
            multiplicativity_defect(oracle, x, y).unwrap_or(f64::INFINITY)
        }
    }
}

/// Read `p` off `u_2 = ‖(1,1)‖` and check `u_n = n^{1/p}` for `n ≤ 64`
/// with the default tolerance `1e-9`.
pub fn extract_p<O: NormOracle + ?Sized>(oracle: &O) -> std::result::Result<Exponent, Violation> {
    extract_p_with_tolerance(oracle, DEFAULT_TOLERANCE).map(|(p, _)| p)
}

/// As [`extract_p`], also returning the largest power-law defect seen.
pub fn extract_p_with_tolerance<O: NormOracle + ?Sized>(
    oracle: &O,
    tolerance: f64,
) -> std::result::Result<(Exponent, f64), Violation> {
    let mut u = Vec::with_capacity(POWER_LAW_N_MAX);
    for n in 1..=POWER_LAW_N_MAX {
        let ones = FiniteSequence::ones(n);
        let v = oracle.eval(&ones);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Violation {
                check: Check::Positivity,
                witness: (ones.clone(), ones),
                defect: f64::INFINITY,
            });
        }
        u.push(v);
    }
    let (alpha, _) = exponent_from_u2(u[1]);

    let (worst_n, worst) = u
        .iter()
        .enumerate()
        .map(|(i, un)| (i + 1, relative_gap(*un, ((i + 1) as f64).powf(alpha))))
        .fold((1, 0.0f64), |best, cur| if cur.1 > best.1 { cur } else { best });
    if worst > tolerance {
        return Err(Violation {
            check: Check::PowerLaw,
            witness: (FiniteSequence::ones(2), FiniteSequence::ones(worst_n)),
            defect: worst,
        });
    }

    // p ≥ 1 comes from the triangle inequality on disjoint blocks of ones
    let triangle_witness = if alpha > 1.0 {
        Some((
            FiniteSequence::new(vec![1.0]),
            FiniteSequence::new(vec![0.0, 1.0]),
        ))
    } else if alpha < 0.0 {
        Some((
            FiniteSequence::new(vec![0.5, 0.5]),
            FiniteSequence::new(vec![0.5, -0.5]),
        ))
    } else {
        None
    };
    if let Some(witness) = triangle_witness {
        let defect = reproduce_defect(oracle, Check::TriangleInequality, &witness);
        if defect > tolerance {
            return Err(Violation {
                check: Check::TriangleInequality,
                witness,
                defect,
            });
        }
    }
    let p = if alpha <= ALPHA_ZERO_TOL {
        Exponent::Infinity
    } else {
        Exponent::Finite(1.0 / alpha.min(1.0))
    };
    Ok((p, worst))
}

struct Sampler {
    rng: ChaCha8Rng,
    dim_max: usize,
}

impl Sampler {
    fn entry(&mut self) -> f64 {
        f64::from(self.rng.random_range(-16i32..=16)) / 8.0
    }

    fn nonzero_scalar(&mut self) -> f64 {
        loop {
            let c = self.entry();
            if c != 0.0 {
                return c;
            }
        }
    }

    fn sequence(&mut self) -> FiniteSequence {
        loop {
            let dim = self.rng.random_range(1..=self.dim_max);
            let x = FiniteSequence::new((0..dim).map(|_| self.entry()).collect());
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// Shuffle, flip signs, and pad with up to two zeros.
    fn signed_permutation(&mut self, x: &FiniteSequence) -> FiniteSequence {
        let extra = self.rng.random_range(0..=2);
        let mut coords = x.padded(extra).into_coords();
        coords.shuffle(&mut self.rng);
        for c in coords.iter_mut() {
            if self.rng.random_bool(0.5) {
                *c = -*c;
            }
        }
        FiniteSequence::new(coords)
    }
}

struct Run<'a, O: ?Sized> {
    oracle: &'a O,
    tolerance: f64,
    max_defect: f64,
    samples_tested: usize,
}

impl<O: NormOracle + ?Sized> Run<'_, O> {
    fn check(
        &mut self,
        check: Check,
        witness: (FiniteSequence, FiniteSequence),
    ) -> std::result::Result<(), Violation> {
        let defect = reproduce_defect(self.oracle, check, &witness);
        if defect > self.tolerance {
            Err(Violation {
                check,
                witness,
                defect,
            })
        } else {
            self.max_defect = self.max_defect.max(defect);
            Ok(())
        }
    }
}

/// Classify `oracle` as `ℓ_p` (on the sampled cases) or return the first
/// violation found.
pub fn characterize<O: NormOracle + ?Sized>(
    oracle: &O,
    config: &CharacterizeConfig,
) -> Result<CharacterizationReport> {
    config.validate()?;
    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        dim_max: config.dim_max,
    };
    let mut run = Run {
        oracle,
        tolerance: config.tolerance,
        max_defect: 0.0,
        samples_tested: 0,
    };
    let outcome = run_checks(&mut run, &mut sampler, config.samples);
    let report = match outcome {
        Ok(p) => CharacterizationReport {
            oracle: oracle.label(),
            verdict: Verdict::ConsistentLp,
            check: None,
            p_estimate: Some(p),
            max_defect: run.max_defect,
            witness: None,
            samples_tested: run.samples_tested,
            seed: config.seed,
            tolerance: config.tolerance,
        },
        Err(v) => CharacterizationReport {
            oracle: oracle.label(),
            verdict: v.check.verdict(),
            check: Some(v.check),
            p_estimate: None,
            max_defect: v.defect,
            witness: Some(v.witness),
            samples_tested: run.samples_tested,
            seed: config.seed,
            tolerance: config.tolerance,
        },
    };
    Ok(report)
}

fn run_checks<O: NormOracle + ?Sized>(
    run: &mut Run<'_, O>,
    sampler: &mut Sampler,
    samples: usize,
) -> std::result::Result<Exponent, Violation> {
    let zero = FiniteSequence::zero();
    run.check(Check::Positivity, (zero.clone(), zero))?;

    for _ in 0..samples {
        run.samples_tested += 1;
        let x = sampler.sequence();
        run.check(Check::Positivity, (x.clone(), x.clone()))?;
        let c = sampler.nonzero_scalar();
        run.check(Check::Homogeneity, (x.clone(), x.scale(c)))?;
        let y = sampler.sequence();
        run.check(Check::TriangleInequality, (x.clone(), y))?;
        let z = sampler.signed_permutation(&x);
        run.check(Check::PermutationInvariance, (x.clone(), z))?;
        run.check(Check::PermutationInvariance, (x.clone(), x.abs()))?;
    }

    let (p, power_defect) = extract_p_with_tolerance(run.oracle, run.tolerance)?;
    run.max_defect = run.max_defect.max(power_defect);

    let ones2 = FiniteSequence::ones(2);
    for _ in 0..samples {
        run.samples_tested += 1;
        let x = sampler.sequence();
        if let Err(v) = run.check(Check::Agreement, (x.clone(), ones2.clone())) {
            // prefer a direct multiplicativity witness when one is at hand
            for other in [x.clone(), ones2.clone(), FiniteSequence::ones(3)] {
                run.check(Check::Multiplicativity, (x.clone(), other))?;
            }
            return Err(v);
        }
    }

    for _ in 0..samples {
        run.samples_tested += 1;
        let x = sampler.sequence();
        let y = sampler.sequence();
        run.check(Check::Multiplicativity, (x, y))?;
    }
    Ok(p)
}
