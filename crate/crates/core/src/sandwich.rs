//! Finite-`n` bounds pinning `‖x‖_p` from both sides.
//!
//! For any multiplicative symmetric norm, and in particular for `‖·‖_p`
//! itself, every `n ≥ 1` gives
//!
//! ```text
//! lower(t)  = e^t · N(x^{⊗n}, e^{tn})^{1/(np)}
//! upper     = d^{1/n} · max_{1≤i≤d} e^{t_i} · N(x^{⊗n}, e^{t_{i−1} n})^{1/(np)}
//! lower(t) ≤ ‖x‖_p ≤ upper
//! ```
//!
//! where `t_0 < t_1 < … < t_d` is a staircase from the log of the smallest
//! coordinate through the log geometric mean up to `ln ‖x‖_∞`. Both sides
//! converge to `‖x‖_p` as `n → ∞` and the staircase is refined.

use num_bigint::BigUint;
use serde::Serialize;

use crate::rate_function::{uniform_grid, RateFunction};
use crate::seqcore::FiniteSequence;
use crate::tensor_stats::{ln_count, LogAtomMeasure};
use crate::{Error, Result};

/// Log-domain thresholds `t_0 < t_1 < … < t_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseGrid {
    thresholds: Vec<f64>,
    epsilon: f64,
}

impl StaircaseGrid {
    /// `t_0, …, t_d`; always `d + 1` entries.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn d(&self) -> usize {
        self.thresholds.len() - 1
    }

    /// Largest gap `t_i − t_{i−1}` for `2 ≤ i ≤ d`; zero when `d = 1`.
    pub fn max_upper_spacing(&self) -> f64 {
        self.thresholds[1..]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn check_p(p: f64) -> Result<f64> {
    if p.is_finite() && p >= 1.0 {
        Ok(p)
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Staircase with `t_0 = ln min x_i`, `t_1 = ` log geometric mean,
/// `t_d = ln max x_i`, and `ceil((t_d − t_1)/ε)` uniform steps from `t_1`
/// to `t_d`.
pub fn build_grid(x: &FiniteSequence, epsilon: f64) -> Result<StaircaseGrid> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be a positive number (got {epsilon})"),
        });
    }
    let rf = RateFunction::from_sequence(x)?;
    let (t0, t1, td) = (rf.t_min(), rf.t_mean(), rf.t_max());
    if rf.is_degenerate() {
        return Ok(StaircaseGrid {
            thresholds: vec![t0, td],
            epsilon,
        });
    }
    let intervals = ((td - t1) / epsilon).ceil().max(1.0) as usize;
    let mut thresholds = Vec::with_capacity(intervals + 2);
    thresholds.push(t0);
    thresholds.extend(uniform_grid(t1, td, intervals + 1));
    Ok(StaircaseGrid {
        thresholds,
        epsilon,
    })
}

/// Exact counts `N(x^{⊗n}, ·)` for one `(x, n)`, shared across thresholds.
#[derive(Debug, Clone)]
pub struct PowerCounts {
    x: FiniteSequence,
    n: usize,
    rf: RateFunction,
    measure: LogAtomMeasure,
}

impl PowerCounts {
    pub fn new(x: &FiniteSequence, n: usize) -> Result<Self> {
        let rf = RateFunction::from_sequence(x)?;
        let measure = LogAtomMeasure::from_sequence(x)?.power(n)?;
        Ok(Self {
            x: x.clone(),
            n,
            rf,
            measure,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate_function(&self) -> &RateFunction {
        &self.rf
    }

    pub fn measure(&self) -> &LogAtomMeasure {
        &self.measure
    }

    /// `N(x^{⊗n}, e^{tn})`.
    pub fn count_at(&self, t: f64) -> BigUint {
        self.measure.count_geq(t * self.n as f64)
    }

    /// `N^{1/(np)}` evaluated in log domain.
    fn count_root(&self, count: &BigUint, p: f64) -> f64 {
        (ln_count(count) / (self.n as f64 * p)).exp()
    }

    /// `e^t · N(x^{⊗n}, e^{tn})^{1/(np)}`; zero when no coordinate reaches
    /// the threshold.
    pub fn lower_bound(&self, p: f64, t: f64) -> Result<f64> {
        let p = check_p(p)?;
        let count = self.count_at(t);
        Ok(t.exp() * self.count_root(&count, p))
    }

    /// Best [`lower_bound`](Self::lower_bound) over `grid_size` uniform
    /// points on `[t_mean, t_max]`.
    pub fn best_lower_bound(&self, p: f64, grid_size: usize) -> Result<f64> {
        let p = check_p(p)?;
        if grid_size == 0 {
            return Err(Error::InvalidParameter {
                name: "t_grid_size",
                reason: "need at least one grid point".into(),
            });
        }
        uniform_grid(self.rf.t_mean(), self.rf.t_max(), grid_size)
            .into_iter()
            .map(|t| self.lower_bound(p, t))
            .try_fold(0.0f64, |best, b| b.map(|b| best.max(b)))
    }

    /// `d^{1/n} · max_{1≤i≤d} e^{t_i} N(x^{⊗n}, e^{t_{i−1} n})^{1/(np)}`.
    pub fn upper_bound(&self, p: f64, grid: &StaircaseGrid) -> Result<f64> {
        let p = check_p(p)?;
        let ts = grid.thresholds();
        let best = ts
            .windows(2)
            .map(|w| w[1].exp() * self.count_root(&self.count_at(w[0]), p))
            .fold(0.0f64, f64::max);
        let d = grid.d() as f64;
        Ok((d.ln() / self.n as f64).exp() * best)
    }

    pub fn sequence(&self) -> &FiniteSequence {
        &self.x
    }
}

pub fn lower_bound(x: &FiniteSequence, p: f64, t: f64, n: usize) -> Result<f64> {
    check_p(p)?;
    PowerCounts::new(x, n)?.lower_bound(p, t)
}

pub fn best_lower_bound(x: &FiniteSequence, p: f64, n: usize, t_grid_size: usize) -> Result<f64> {
    check_p(p)?;
    PowerCounts::new(x, n)?.best_lower_bound(p, t_grid_size)
}

pub fn upper_bound(x: &FiniteSequence, p: f64, grid: &StaircaseGrid, n: usize) -> Result<f64> {
    check_p(p)?;
    PowerCounts::new(x, n)?.upper_bound(p, grid)
}

/// `e^{t_1}·k^{1/p}`: the `i = 1` staircase term in the limit, which never
/// exceeds `‖x‖_p` by the AM–GM inequality.
pub fn geometric_mean_term(x: &FiniteSequence, p: f64) -> Result<f64> {
    let p = check_p(p)?;
    let rf = RateFunction::from_sequence(x)?;
    Ok(rf.t_mean().exp() * (rf.k() as f64).powf(1.0 / p))
}
