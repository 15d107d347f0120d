//! The log-moment function of a sequence and its Legendre–Fenchel conjugate.
//!
//! For a sequence with positive coordinates `x_1, …, x_k`:
//!
//! ```text
//! Λ(λ)  = ln Σ_i x_i^λ
//! Λ'(λ) = Σ_i ln x_i · x_i^λ / Σ_i x_i^λ           (tilted mean of ln x_i)
//! Λ*(t) = sup_λ { λt − Λ(λ) }                       (+∞ outside [t_min, t_max])
//! ```
//!
//! `Λ*` governs the exponential decay of `N(x^{⊗n}, e^{tn})`. The conjugate
//! is evaluated by case analysis at the ends of its domain and by bisection
//! on the strictly increasing `Λ'` in the interior.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::seqcore::{canonical, FiniteSequence};
use crate::{Error, Result};

/// An extended real in `ℝ ∪ {+∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(*v),
            Extended::PlusInfinity => None,
        }
    }

    /// As an IEEE float, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
            (Extended::Finite(_), Extended::PlusInfinity) => Some(Ordering::Less),
            (Extended::PlusInfinity, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::PlusInfinity, Extended::PlusInfinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PlusInfinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => serializer.serialize_f64(*v),
            Extended::PlusInfinity => serializer.serialize_str("inf"),
        }
    }
}

/// `Λ_x` and `Λ*_x` for a fixed sequence `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    /// `(ln value, multiplicity)`, strictly increasing in `ln value`.
    log_values: Vec<(f64, u64)>,
    k: u64,
    t_min: f64,
    t_max: f64,
    t_mean: f64,
}

const BISECTION_WIDTH: f64 = 1e-13;
const MAX_BISECTIONS: usize = 400;

impl RateFunction {
    pub fn from_sequence(x: &FiniteSequence) -> Result<Self> {
        let c = canonical(x);
        if c.is_empty() {
            return Err(Error::ZeroSequence);
        }
        let mut log_values: Vec<(f64, u64)> = Vec::new();
        for &v in c.coords().iter().rev() {
            let lv = v.ln();
            match log_values.last_mut() {
                Some((last, m)) if *last == lv => *m += 1,
                _ => log_values.push((lv, 1)),
            }
        }
        Ok(Self::from_log_values(log_values))
    }

    fn from_log_values(log_values: Vec<(f64, u64)>) -> Self {
        let k: u64 = log_values.iter().map(|(_, m)| m).sum();
        let t_min = log_values[0].0;
        let t_max = log_values[log_values.len() - 1].0;
        let t_mean = if log_values.len() == 1 {
            t_min
        } else {
            let s: f64 = log_values.iter().map(|(l, m)| *m as f64 * l).sum();
            (s / k as f64).clamp(t_min, t_max)
        };
        Self {
            log_values,
            k,
            t_min,
            t_max,
            t_mean,
        }
    }

    pub fn log_values(&self) -> &[(f64, u64)] {
        &self.log_values
    }

    /// Number of positive coordinates, with multiplicity.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Log of the geometric mean of the positive coordinates.
    pub fn t_mean(&self) -> f64 {
        self.t_mean
    }

    pub fn is_degenerate(&self) -> bool {
        self.log_values.len() == 1
    }

    fn shift(&self, lambda: f64) -> f64 {
        // the exponent λ·logv is maximised at one of the two ends
        (lambda * self.t_min).max(lambda * self.t_max)
    }

    /// `Λ(λ) = ln Σ m_i e^{λ logv_i}`.
    pub fn lambda(&self, lambda: f64) -> f64 {
        let s = self.shift(lambda);
        let sum: f64 = self
            .log_values
            .iter()
            .map(|(l, m)| *m as f64 * (lambda * l - s).exp())
            .sum();
        sum.ln() + s
    }

    /// `Λ'(λ)`, the mean of `logv` under weights `m_i e^{λ logv_i}`.
    pub fn lambda_prime(&self, lambda: f64) -> f64 {
        let s = self.shift(lambda);
        let (num, den) = self
            .log_values
            .iter()
            .fold((0.0, 0.0), |(num, den), (l, m)| {
                let w = *m as f64 * (lambda * l - s).exp();
                (num + w * l, den + w)
            });
        (num / den).clamp(self.t_min, self.t_max)
    }

    fn multiplicity_at(&self, idx: usize) -> u64 {
        self.log_values[idx].1
    }

    /// `Λ*(t) = sup_λ λt − Λ(λ)`.
    pub fn conjugate(&self, t: f64) -> Extended {
        let ln_k = (self.k as f64).ln();
        if t.is_nan() || t < self.t_min || t > self.t_max {
            return Extended::PlusInfinity;
        }
        if self.is_degenerate() {
            // t_min == t == t_max
            return Extended::Finite(-ln_k);
        }
        if t == self.t_min {
            return Extended::Finite(-(self.multiplicity_at(0) as f64).ln() + 0.0);
        }
        if t == self.t_max {
            let last = self.log_values.len() - 1;
            return Extended::Finite(-(self.multiplicity_at(last) as f64).ln() + 0.0);
        }
        if t == self.t_mean {
            return Extended::Finite(-ln_k);
        }
        let lambda = self.solve_tilt(t);
        let value = lambda * t - self.lambda(lambda);
        // λ = 0 is always a candidate of the supremum
        Extended::Finite(value.max(-self.lambda(0.0)))
    }

    /// The tilt `λ` with `Λ'(λ) = t`, for `t` strictly inside `(t_min, t_max)`.
    ///
    /// Brackets by doubling from `[−1, 1]`, capped at `|λ| ≤ 700/range`, then
    /// bisects to width `1e-13`.
    pub fn solve_tilt(&self, t: f64) -> f64 {
        let cap = 700.0 / (self.t_max - self.t_min);
        let (mut lo, mut hi) = (-1.0f64.min(cap), 1.0f64.min(cap));
        while self.lambda_prime(hi) < t && hi < cap {
            lo = hi;
            hi = (2.0 * hi).min(cap);
        }
        while self.lambda_prime(lo) > t && lo > -cap {
            hi = lo;
            lo = (2.0 * lo).max(-cap);
        }
        for _ in 0..MAX_BISECTIONS {
            if hi - lo <= BISECTION_WIDTH {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.lambda_prime(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `‖x‖_p = exp(Λ(p)/p)` for finite `p > 0`.
    pub fn lp_norm_via_lambda(&self, p: f64) -> f64 {
        (self.lambda(p) / p).exp()
    }
}

/// Largest gap `|Λ(λ) − max_t (λt − Λ*(t))|` over the λ-grid, with the inner
/// maximum taken over `t_grid`. Points of `t_grid` where `Λ*` is infinite
/// are skipped.
pub fn fenchel_moreau_check(rf: &RateFunction, lambda_grid: &[f64], t_grid: &[f64]) -> Result<f64> {
    if lambda_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "lambda and t grids must be non-empty".into(),
        });
    }
    let conj: Vec<(f64, f64)> = t_grid
        .iter()
        .filter_map(|&t| rf.conjugate(t).finite().map(|c| (t, c)))
        .collect();
    if conj.is_empty() {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "no grid point lies in the domain of the conjugate".into(),
        });
    }
    let dev = lambda_grid
        .iter()
        .map(|&lambda| {
            let inner = conj
                .iter()
                .map(|(t, c)| lambda * t - c)
                .fold(f64::NEG_INFINITY, f64::max);
            (rf.lambda(lambda) - inner).abs()
        })
        .fold(0.0, f64::max);
    Ok(dev)
}

/// `count` points spread uniformly over `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn rf(v: &[f64]) -> RateFunction {
        RateFunction::from_sequence(&FiniteSequence::new(v.to_vec())).unwrap()
    }

    #[test]
    fn summary_statistics() {
        let r = rf(&[2.0, 1.0]);
        assert_eq!(r.k(), 2);
        assert_eq!(r.t_min(), 0.0);
        assert_eq!(r.t_max(), LN_2);
        assert!((r.t_mean() - LN_2 / 2.0).abs() < 1e-16);
        let c = rf(&[3.0, 3.0, 3.0]);
        assert!(c.is_degenerate());
        assert_eq!(c.t_mean(), 3f64.ln());
        assert_eq!(c.t_min(), c.t_max());
        assert!(RateFunction::from_sequence(&FiniteSequence::zero()).is_err());
    }

    #[test]
    fn lambda_examples() {
        let ones = rf(&[1.0, 1.0]);
        for l in [-30.0, -1.0, 0.0, 2.5, 100.0] {
            assert_eq!(ones.lambda(l), LN_2);
        }
        assert!((rf(&[2.0, 1.0]).lambda(2.0) - 5f64.ln()).abs() < 1e-15);
        let r = rf(&[5.0, 0.3, 2.0, 2.0, 7.5]);
        assert_eq!(r.lambda(0.0), 5f64.ln());
        // large tilts do not overflow
        assert!((rf(&[2.0, 1.0]).lambda(2000.0) - 2000.0 * LN_2).abs() < 1e-9);
    }

    #[test]
    fn lambda_prime_examples() {
        let r = rf(&[2.0, 1.0]);
        assert!((r.lambda_prime(0.0) - LN_2 / 2.0).abs() < 1e-16);
        assert!((r.lambda_prime(50.0) - LN_2).abs() < 1e-10);
        assert!(r.lambda_prime(-50.0).abs() < 1e-10);
        let c = rf(&[4.0, 4.0]);
        for l in [-3.0, 0.0, 7.0] {
            assert_eq!(c.lambda_prime(l), 4f64.ln());
        }
    }

    #[test]
    fn conjugate_case_analysis() {
        let r = rf(&[2.0, 1.0]);
        assert_eq!(r.conjugate(LN_2 / 2.0), Extended::Finite(-LN_2));
        assert_eq!(r.conjugate(LN_2), Extended::Finite(0.0));
        assert_eq!(r.conjugate(0.0), Extended::Finite(0.0));
        assert_eq!(r.conjugate(LN_2 + 0.1), Extended::PlusInfinity);
        assert_eq!(r.conjugate(-0.1), Extended::PlusInfinity);
        // multiplicity at the top end
        let m = rf(&[3.0, 3.0, 1.0]);
        assert_eq!(m.conjugate(3f64.ln()), Extended::Finite(-(2f64.ln())));
        assert_eq!(m.conjugate(0.0), Extended::Finite(0.0));
    }

    #[test]
    fn conjugate_degenerate() {
        let c = rf(&[2.0, 2.0, 2.0]);
        assert_eq!(c.conjugate(LN_2), Extended::Finite(-(3f64.ln())));
        assert_eq!(c.conjugate(LN_2 + 1e-12), Extended::PlusInfinity);
        assert_eq!(c.conjugate(0.0), Extended::PlusInfinity);
    }

    #[test]
    fn conjugate_is_bounded_below_by_minus_ln_k() {
        let r = rf(&[3.0, 2.0, 1.0]);
        let floor = -(3f64.ln());
        for t in uniform_grid(-0.5, 1.6, 500) {
            let c = r.conjugate(t);
            assert!(c >= Extended::Finite(floor), "t={t} c={c}");
        }
    }

    #[test]
    fn solve_tilt_hits_target() {
        let r = rf(&[2.0, 1.0]);
        let lambda = r.solve_tilt(0.5);
        assert!((r.lambda_prime(lambda) - 0.5).abs() < 1e-12);
        // closed form: 2^λ/(1+2^λ) · ln 2 = t
        let q = 0.5 / LN_2;
        let want = (q / (1.0 - q)).log2();
        assert!((lambda - want).abs() < 1e-10);
    }

    #[test]
    fn fenchel_moreau_trivial_case() {
        let r = rf(&[1.0, 1.0]);
        let dev = fenchel_moreau_check(&r, &[-2.0, 0.0, 3.0], &[0.0]).unwrap();
        assert!(dev < 1e-15);
        assert!(fenchel_moreau_check(&r, &[], &[0.0]).is_err());
        assert!(fenchel_moreau_check(&r, &[0.0], &[5.0]).is_err());
    }

    #[test]
    fn extended_ordering_and_display() {
        assert!(Extended::Finite(1e300) < Extended::PlusInfinity);
        assert_eq!(Extended::PlusInfinity.to_string(), "inf");
        assert_eq!(serde_json::to_string(&Extended::PlusInfinity).unwrap(), "\"inf\"");
        assert_eq!(Extended::Finite(-0.5).to_f64(), -0.5);
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(0.0, LN_2, 2001);
        assert_eq!(g.len(), 2001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2000], LN_2);
        assert_eq!(uniform_grid(1.0, 2.0, 1), vec![1.0]);
    }
}
