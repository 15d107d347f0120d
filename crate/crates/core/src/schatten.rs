//! Singular values, Kronecker products and Schatten norms of real matrices.
//!
//! A unitarily invariant matrix norm is a symmetric sequence norm applied to
//! the singular spectrum:
//!
//! ```text
//! N(A) = g(s(A)),     ‖A‖_p = ‖s(A)‖_p = (Tr |A|^p)^{1/p}
//! s(A ⊗ B) = sorted { s_i(A)·s_j(B) }
//! ```
//!
//! so multiplicativity on Kronecker products reduces to multiplicativity of
//! `g` on tensor products of sequences. Singular values come from one-sided
//! Jacobi rotations, which are deterministic and accurate to a small multiple
//! of machine precision relative to `‖A‖_2` at the sizes handled here.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seqcore::{lp_norm, Exponent, FiniteSequence, NormOracle};
use crate::{Error, Result};

/// Largest allowed `rows·cols`.
pub const MAX_ENTRIES: usize = 1_000_000;
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.entries)
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Shape {
            rows,
            cols,
            reason: "dimensions must be positive",
        });
    }
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_ENTRIES => Ok(()),
        _ => Err(Error::Shape {
            rows,
            cols,
            reason: "more than 10^6 entries",
        }),
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::Shape {
                rows,
                cols,
                reason: "entry count does not match rows*cols",
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape {
                rows,
                cols,
                reason: "entries must be finite",
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
    }

    /// Square diagonal matrix; the empty diagonal gives the 1×1 zero matrix.
    pub fn diag(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Self::zeros(1, 1);
        }
        let mut m = Self::zeros(d.len(), d.len())?;
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape {
                rows: d.len(),
                cols: d.len(),
                reason: "entries must be finite",
            });
        }
        Ok(m)
    }

    /// Matrix with independent standard normal entries.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        check_shape(rows, cols)?;
        let entries = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            rows: self.cols,
            cols: self.rows,
            entries: vec![0.0; self.entries.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                rows: other.rows,
                cols: other.cols,
                reason: "inner dimensions differ",
            });
        }
        let mut out = Self::zeros(self.rows, other.cols)?;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        lp_norm(
            &FiniteSequence::new(self.entries.clone()),
            Exponent::Finite(2.0),
        )
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Singular values in non-increasing order, `min(rows, cols)` of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_sequence(&self) -> FiniteSequence {
        FiniteSequence::new(self.values.clone())
    }
}

/// Column-major one-sided Jacobi on a tall matrix. Returns the column norms
/// after orthogonalization together with the accumulated rotations `V`
/// (column `j` of `V` is `v[j]`).
fn one_sided_jacobi(a: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    debug_assert!(a.rows >= a.cols);
    let n = a.cols;
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..a.rows).map(|i| a.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = cols[i].iter().map(|x| x * x).sum();
                let beta: f64 = cols[j].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = cols
        .iter()
        .map(|col| lp_norm(&FiniteSequence::new(col.clone()), Exponent::Finite(2.0)))
        .collect();
    (sigma, v)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

fn sorted_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

pub fn singular_values(a: &Matrix) -> SingularSpectrum {
    let (sigma, _) = if a.rows >= a.cols {
        one_sided_jacobi(a)
    } else {
        one_sided_jacobi(&a.transpose())
    };
    let values = sorted_desc(&sigma).into_iter().map(|k| sigma[k]).collect();
    SingularSpectrum { values }
}

/// Singular values with right singular vectors, for `rows >= cols`.
/// Pair `k` satisfies `AᵀA v_k = σ_k² v_k`.
pub fn svd_right(a: &Matrix) -> Result<Vec<(f64, Vec<f64>)>> {
    if a.rows < a.cols {
        return Err(Error::Shape {
            rows: a.rows,
            cols: a.cols,
            reason: "right singular vectors need rows >= cols",
        });
    }
    let (sigma, v) = one_sided_jacobi(a);
    Ok(sorted_desc(&sigma)
        .into_iter()
        .map(|k| (sigma[k], v[k].clone()))
        .collect())
}

/// Kronecker product, `(rA·rB) × (cA·cB)`.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let rows = a.rows.saturating_mul(b.rows);
    let cols = a.cols.saturating_mul(b.cols);
    let mut out = Matrix::zeros(rows, cols)?;
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let x = a.get(ia, ja);
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out.set(ia * b.rows + ib, ja * b.cols + jb, x * b.get(ib, jb));
                }
            }
        }
    }
    Ok(out)
}

/// `‖A‖_p = ‖s(A)‖_p`; `p = ∞` is the operator norm.
pub fn schatten_norm(a: &Matrix, p: Exponent) -> Result<f64> {
    if let Exponent::Finite(v) = p {
        if v.is_nan() || v < 1.0 {
            return Err(Error::InvalidExponent(v));
        }
    }
    Ok(lp_norm(&singular_values(a).to_sequence(), p))
}

/// A symmetric sequence norm applied to the singular spectrum.
pub fn gauge_norm<O: NormOracle + ?Sized>(a: &Matrix, oracle: &O) -> f64 {
    oracle.eval(&singular_values(a).to_sequence())
}

/// Haar-like random orthogonal matrix from Gram–Schmidt on a Gaussian
/// matrix (two passes for orthogonality to working precision).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matrix> {
    check_shape(n, n)?;
    loop {
        let g = Matrix::random_gaussian(n, n, rng)?;
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut col: Vec<f64> = (0..n).map(|i| g.get(i, j)).collect();
            for _ in 0..2 {
                for prev in &q {
                    let dot: f64 = prev.iter().zip(&col).map(|(a, b)| a * b).sum();
                    for (c, p) in col.iter_mut().zip(prev) {
                        *c -= dot * p;
                    }
                }
            }
            let norm = col.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            col.iter_mut().for_each(|c| *c /= norm);
            q.push(col);
        }
        if ok {
            let mut m = Matrix::zeros(n, n)?;
            for (j, col) in q.iter().enumerate() {
                for (i, &v) in col.iter().enumerate() {
                    m.set(i, j, v);
                }
            }
            return Ok(m);
        }
    }
}

/// Sequence oracle `x ↦ ‖diag(x)‖_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchattenDiag(pub Exponent);

impl NormOracle for SchattenDiag {
    fn label(&self) -> String {
        format!("schatten-diag:{}", self.0)
    }

    fn eval(&self, x: &FiniteSequence) -> f64 {
        match Matrix::diag(x.coords()) {
            Ok(m) => lp_norm(&singular_values(&m).to_sequence(), self.0),
            Err(_) => f64::NAN,
        }
    }
}
