//! Dense linear-algebra helpers.
//!
//! Linear solves stay generic over the scalar. Spectral diagnostics (singular
//! values, eigenvalues) go through `nalgebra` in `f64`; they only feed
//! rank reports and horizon defaults.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use thiserror::Error;

use crate::Scalar;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve<F: Scalar>(a: &Array2<F>, b: &Array2<F>) -> Result<Array2<F>, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if b.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "rhs has {} rows, matrix has {n}",
            b.nrows()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = max_abs(a.view());
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, lu[[r, col]].abs()))
            .fold((col, F::zero()), |acc, v| if v.1 > acc.1 { v } else { acc });
        if best <= F::epsilon() * scale * F::from_count(n) || best == F::zero() {
            return Err(LinalgError::Singular);
        }
        if piv != col {
            for c in 0..n {
                lu.swap([piv, c], [col, c]);
            }
            for c in 0..x.ncols() {
                x.swap([piv, c], [col, c]);
            }
        }
        let d = lu[[col, col]];
        for r in col + 1..n {
            let f = lu[[r, col]] / d;
            if f == F::zero() {
                continue;
            }
            for c in col..n {
                let v = lu[[col, c]];
                lu[[r, c]] -= f * v;
            }
            for c in 0..x.ncols() {
                let v = x[[col, c]];
                x[[r, c]] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[[col, col]];
        for c in 0..x.ncols() {
            let mut s = x[[col, c]];
            for k in col + 1..n {
                s -= lu[[col, k]] * x[[k, c]];
            }
            x[[col, c]] = s / d;
        }
    }
    Ok(x)
}

/// Largest absolute entry; this is also the l1 -> l_inf induced norm.
pub fn max_abs<F: Scalar>(m: ArrayView2<F>) -> F {
    m.iter().fold(F::zero(), |acc, v| acc.max(v.abs()))
}

/// l_inf induced norm (max absolute row sum).
pub fn inf_norm<F: Scalar>(m: ArrayView2<F>) -> F {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<F>())
        .fold(F::zero(), F::max)
}

/// l1 induced norm (max absolute column sum).
pub fn one_norm<F: Scalar>(m: ArrayView2<F>) -> F {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<F>())
        .fold(F::zero(), F::max)
}

fn to_dmatrix<F: Scalar>(m: ArrayView2<F>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]].as_f64())
}

/// Singular values in descending order.
pub fn singular_values<F: Scalar>(m: ArrayView2<F>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_dmatrix(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with singular values `<= rel_tol * sigma_max` treated as zero.
pub fn rank<F: Scalar>(m: ArrayView2<F>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Eigenvalues as `(re, im)` pairs.
pub fn eigenvalues<F: Scalar>(m: ArrayView2<F>) -> Result<Vec<(f64, f64)>, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    Ok(to_dmatrix(m)
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa<F: Scalar>(m: ArrayView2<F>) -> Result<Option<f64>, LinalgError> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, _)| re)
        .max_by(f64::total_cmp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solve_small_system() {
        let a = array![[0.0, 2.0], [1.0, 1.0]];
        let b = array![[4.0], [3.0]];
        let x: Array2<f64> = solve(&a, &b).unwrap();
        assert!((x[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((x[[1, 0]] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_rejects_singular_and_nonsquare() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert_eq!(solve(&a, &array![[1.0], [1.0]]).unwrap_err(), LinalgError::Singular);
        let r = array![[1.0, 2.0]];
        assert!(matches!(solve(&r, &array![[1.0]]), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn norms() {
        let m = array![[1.0, -3.0], [2.0, 0.0]];
        assert_eq!(max_abs(m.view()), 3.0);
        assert_eq!(inf_norm(m.view()), 4.0);
        assert_eq!(one_norm(m.view()), 3.0);
    }

    #[test]
    fn rank_and_spectrum() {
        let m = array![[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]];
        assert_eq!(rank(m.view(), RANK_REL_TOL), 1);
        let d = array![[-1.0, 0.0], [0.0, -3.0]];
        assert_eq!(spectral_abscissa(d.view()).unwrap(), Some(-1.0));
        let rot = array![[0.0, -1.0], [1.0, 0.0]];
        let ev = eigenvalues(rot.view()).unwrap();
        assert!(ev.iter().all(|(re, im)| re.abs() < 1e-12 && (im.abs() - 1.0).abs() < 1e-12));
    }
}
