//! Small dense linear-algebra helpers: tolerant ranks and exact rational elimination.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Relative tolerance below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Largest singular value, 0 for an empty matrix.
pub fn spectral_scale(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Numerical rank with threshold `tol * scale`.
pub fn rank_scaled(m: &DMatrix<f64>, tol: f64, scale: f64) -> usize {
    if m.is_empty() || scale == 0.0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().filter(|&&s| s > tol * scale).count()
}

/// Numerical rank relative to the matrix's own largest singular value.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    rank_scaled(m, tol, spectral_scale(m))
}

/// Determinant; the empty matrix has determinant 1.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        1.0
    } else {
        m.clone().lu().determinant()
    }
}

/// Columns kept by a left-to-right scan that retains each column raising the rank.
pub fn independent_columns(m: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let scale = spectral_scale(m);
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..m.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        if rank_scaled(&m.select_columns(&trial), tol, scale) == trial.len() {
            kept = trial;
        }
    }
    kept
}

pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

pub fn to_rational_matrix(m: &DMatrix<f64>) -> Vec<Vec<BigRational>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| to_rational(m[(i, j)])).collect()).collect()
}

/// Row echelon form in place; returns the rank and the sign flips' parity.
fn eliminate(a: &mut [Vec<BigRational>]) -> (usize, bool) {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    let mut flipped = false;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        if p != r {
            a.swap(p, r);
            flipped = !flipped;
        }
        let pivot = a[r][c].clone();
        for i in r + 1..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &pivot;
            for k in c..cols {
                let t = &f * &a[r][k];
                a[i][k] -= t;
            }
        }
        r += 1;
    }
    (r, flipped)
}

pub fn exact_rank(m: &[Vec<BigRational>]) -> usize {
    eliminate(&mut m.to_vec()).0
}

/// Exact determinant of a square matrix.
pub fn exact_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "square matrix");
    let mut a = m.to_vec();
    let (r, flipped) = eliminate(&mut a);
    if r < n {
        return BigRational::zero();
    }
    let mut d = BigRational::one();
    for (i, row) in a.iter().enumerate() {
        d *= &row[i];
    }
    if flipped {
        -d
    } else {
        d
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

pub fn exact_max_abs(m: &[Vec<BigRational>]) -> BigRational {
    m.iter().flatten().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
}
