//! Table builders for each subcommand. Every builder is deterministic in its
//! arguments and returns the rows together with a flag telling whether a
//! mathematical check failed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use normforge::characterize::CharacterizationReport;
use normforge::rate_function::RateFunction;
use normforge::rvalg::{bernoulli, independent_product, lp_norm_rv, same_distribution};
use normforge::sandwich::{build_grid, PowerCounts};
use normforge::schatten::{kron, random_orthogonal, schatten_norm, singular_values, Matrix};
use normforge::seqcore::{lp_norm, Exponent, FiniteSequence};
use normforge::tensor_stats::{ln_count, power_of_sequence};

use crate::output::Num;

/// Largest dimension accepted by `schatten-check`.
pub const MAX_MATRIX_DIM: usize = 6;
/// Largest `n` accepted by `rv-check`.
pub const MAX_RV_N: u64 = 50;
/// Defect allowed in `schatten-check` rows.
pub const SCHATTEN_TOL: f64 = 1e-9;
/// Relative error allowed in `rv-check` rows.
pub const RV_TOL: f64 = 1e-12;

#[derive(Debug, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub t: Num,
    pub empirical_rate: Num,
    pub neg_conjugate: Num,
    /// `ln_k` when `e^t` is at most the geometric mean, else `conjugate`.
    pub branch: &'static str,
    /// Distance from the limit predicted by the branch.
    pub abs_error: Num,
}

fn abs_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

pub fn rate(x: &FiniteSequence, ts: &[f64], ns: &[usize]) -> normforge::Result<Vec<RateRow>> {
    let rf = RateFunction::from_sequence(x)?;
    let ln_k = (rf.k() as f64).ln();
    let mut rows = Vec::with_capacity(ts.len() * ns.len());
    for &n in ns {
        let measure = power_of_sequence(x, n)?;
        for &t in ts {
            let empirical = ln_count(&measure.count_geq(t * n as f64)) / n as f64;
            let neg_conj = -rf.conjugate(t).to_f64();
            let (branch, limit) = if t <= rf.t_mean() {
                ("ln_k", ln_k)
            } else {
                ("conjugate", neg_conj)
            };
            rows.push(RateRow {
                n,
                t: Num(t),
                empirical_rate: Num(empirical),
                neg_conjugate: Num(neg_conj),
                branch,
                abs_error: Num(abs_diff(empirical, limit)),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct SandwichRow {
    pub n: usize,
    pub epsilon: Num,
    pub best_lower: Num,
    pub upper: Num,
    pub lp_reference: Num,
    pub ratio_upper_lower: Num,
}

pub fn sandwich(
    x: &FiniteSequence,
    p: f64,
    epsilon: f64,
    t_grid_size: usize,
    ns: &[usize],
) -> normforge::Result<(Vec<SandwichRow>, bool)> {
    let grid = build_grid(x, epsilon)?;
    let reference = lp_norm(x, Exponent::finite(p)?);
    let mut violated = false;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let pc = PowerCounts::new(x, n)?;
        let lower = pc.best_lower_bound(p, t_grid_size)?;
        let upper = pc.upper_bound(p, &grid)?;
        violated |= !(lower <= reference && reference <= upper);
        rows.push(SandwichRow {
            n,
            epsilon: Num(epsilon),
            best_lower: Num(lower),
            upper: Num(upper),
            lp_reference: Num(reference),
            ratio_upper_lower: Num(upper / lower),
        });
    }
    Ok((rows, violated))
}

/// Flat view of a characterization report for CSV output.
#[derive(Debug, Serialize)]
pub struct CharacterizeRow {
    pub oracle: String,
    pub verdict: String,
    pub check: String,
    pub p_estimate: String,
    pub max_defect: Num,
    pub witness_x: String,
    pub witness_y: String,
    pub samples_tested: usize,
    pub seed: u64,
}

impl From<&CharacterizationReport> for CharacterizeRow {
    fn from(r: &CharacterizationReport) -> Self {
        let (wx, wy) = r
            .witness
            .as_ref()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .unwrap_or_default();
        Self {
            oracle: r.oracle.clone(),
            verdict: r.verdict.to_string(),
            check: r
                .check
                .map(|c| {
                    serde_json::to_value(c)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default()
                })
                .unwrap_or_default(),
            p_estimate: r.p_estimate.map(|p| p.to_string()).unwrap_or_default(),
            max_defect: Num(r.max_defect),
            witness_x: wx,
            witness_y: wy,
            samples_tested: r.samples_tested,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixKind {
    /// Gaussian entries, Haar-like orthogonal `U`, `V`.
    Random,
    /// Rectangular identities, signed permutations for `U`, `V`.
    Identity,
    /// Diagonal with entries in multiples of 1/8, signed permutations.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Serialize)]
pub struct SchattenRow {
    pub trial: usize,
    pub p: Exponent,
    pub defect_multiplicativity: Num,
    pub defect_unitary_invariance: Num,
    pub max_spectrum_mismatch: Num,
}

fn signed_permutation(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut entries = vec![0.0; n * n];
    for (i, &j) in perm.iter().enumerate() {
        entries[i * n + j] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    Matrix::new(n, n, entries).expect("permutation matrix is valid")
}

fn rectangular_diag(shape: Shape, diag: impl Fn(usize) -> f64) -> Matrix {
    let mut entries = vec![0.0; shape.rows * shape.cols];
    for i in 0..shape.rows.min(shape.cols) {
        entries[i * shape.cols + i] = diag(i);
    }
    Matrix::new(shape.rows, shape.cols, entries).expect("diagonal matrix is valid")
}

fn sample_matrix(kind: MatrixKind, shape: Shape, rng: &mut ChaCha8Rng) -> normforge::Result<Matrix> {
    match kind {
        MatrixKind::Random => Matrix::random_gaussian(shape.rows, shape.cols, rng),
        MatrixKind::Identity => Ok(rectangular_diag(shape, |_| 1.0)),
        MatrixKind::Diagonal => {
            let d: Vec<f64> = (0..shape.rows.min(shape.cols))
                .map(|_| {
                    let v = f64::from(rng.random_range(1..=32u32)) / 8.0;
                    if rng.random_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            Ok(rectangular_diag(shape, |i| d[i]))
        }
    }
}

fn sample_orthogonal(kind: MatrixKind, n: usize, rng: &mut ChaCha8Rng) -> normforge::Result<Matrix> {
    match kind {
        MatrixKind::Random => random_orthogonal(n, rng),
        MatrixKind::Identity | MatrixKind::Diagonal => Ok(signed_permutation(n, rng)),
    }
}

fn spectrum_mismatch(a: &Matrix, b: &Matrix, ab: &Matrix) -> f64 {
    let (sa, sb) = (singular_values(a), singular_values(b));
    let mut outer: Vec<f64> = sa
        .values()
        .iter()
        .flat_map(|x| sb.values().iter().map(move |y| x * y))
        .collect();
    outer.sort_by(|x, y| y.total_cmp(x));
    let sab = singular_values(ab);
    outer.resize(sab.values().len().max(outer.len()), 0.0);
    sab.values()
        .iter()
        .zip(&outer)
        .map(|(x, y)| abs_diff(*x, *y))
        .fold(0.0, f64::max)
}

pub fn schatten_check(
    shapes: (Shape, Shape),
    ps: &[Exponent],
    trials: usize,
    kind: MatrixKind,
    seed: u64,
) -> normforge::Result<(Vec<SchattenRow>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sa, sb) = shapes;
    let mut rows = Vec::with_capacity(trials * ps.len());
    let mut violated = false;
    for trial in 1..=trials {
        let a = sample_matrix(kind, sa, &mut rng)?;
        let b = sample_matrix(kind, sb, &mut rng)?;
        let u = sample_orthogonal(kind, sa.rows, &mut rng)?;
        let v = sample_orthogonal(kind, sa.cols, &mut rng)?;
        let ab = kron(&a, &b)?;
        let uav = u.matmul(&a)?.matmul(&v)?;
        let mismatch = spectrum_mismatch(&a, &b, &ab);
        for &p in ps {
            let (na, nb, nab) = (
                schatten_norm(&a, p)?,
                schatten_norm(&b, p)?,
                schatten_norm(&ab, p)?,
            );
            let prod = na * nb;
            let mult = if prod == 0.0 {
                abs_diff(nab, 0.0)
            } else {
                abs_diff(nab, prod) / prod
            };
            let unit = abs_diff(schatten_norm(&uav, p)?, na);
            violated |= !(mult <= SCHATTEN_TOL && unit <= SCHATTEN_TOL && mismatch <= SCHATTEN_TOL);
            rows.push(SchattenRow {
                trial,
                p,
                defect_multiplicativity: Num(mult),
                defect_unitary_invariance: Num(unit),
                max_spectrum_mismatch: Num(mismatch),
            });
        }
    }
    Ok((rows, violated))
}

#[derive(Debug, Serialize)]
pub struct RvRow {
    pub n: u64,
    pub m: u64,
    pub p: Exponent,
    /// `B_n·B_m` and `B_{nm}` have the same distribution.
    pub semigroup_exact: bool,
    /// `‖B_n·B_m‖_{L_p}` computed from the product distribution.
    pub norm_product: Num,
    /// `(nm)^{−1/p}`.
    pub expected: Num,
    pub rel_error: Num,
}

pub fn rv_check(n_max: u64, ps: &[Exponent]) -> normforge::Result<(Vec<RvRow>, bool)> {
    let mut rows = Vec::new();
    let mut violated = false;
    for n in 1..=n_max {
        let bn = bernoulli(n)?;
        for m in 1..=n_max {
            let prod = independent_product(&bn, &bernoulli(m)?);
            let exact = same_distribution(&prod, &bernoulli(n * m)?);
            for &p in ps {
                let got = lp_norm_rv(&prod, p);
                let expected = ((n * m) as f64).powf(-p.reciprocal());
                let rel = abs_diff(got, expected) / expected;
                violated |= !(exact && rel <= RV_TOL);
                rows.push(RvRow {
                    n,
                    m,
                    p,
                    semigroup_exact: exact,
                    norm_product: Num(got),
                    expected: Num(expected),
                    rel_error: Num(rel),
                });
            }
        }
    }
    Ok((rows, violated))
}
