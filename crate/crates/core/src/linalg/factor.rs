use nalgebra::DVector;

use super::{sym_eig, Matrix};
use crate::error::{Error, Result};

/// Rank-revealing factor `W ~ F^T F` of a symmetric PSD matrix.
///
/// Eigenvalues within `rank_tol * max|lambda|` of zero are dropped; an
/// eigenvalue below `-rank_tol * max|lambda|` makes the input indefinite.
/// `F` has one row per retained eigenvalue.
pub fn psd_factor(w: &Matrix, rank_tol: f64) -> Result<(Matrix, usize)> {
    let n = super::check_square(w, "W")?;
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), 0));
    }
    let (vals, vecs) = sym_eig(w);
    let lmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lmax == 0.0 {
        return Ok((Matrix::zeros(0, n), 0));
    }
    let cut = rank_tol * lmax;
    if vals[0] < -cut {
        return Err(Error::Indefinite { min_eig: vals[0] });
    }
    let keep: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > cut).collect();
    let rank = keep.len();
    let f = Matrix::from_fn(rank, n, |r, c| vals[keep[r]].sqrt() * vecs[(c, keep[r])]);
    Ok((f, rank))
}

/// Symmetric square root of an SPD matrix.
pub fn spd_sqrt(a: &Matrix) -> Result<Matrix> {
    spd_power(a, 0.5)
}

/// Symmetric inverse square root of an SPD matrix.
pub fn spd_inv_sqrt(a: &Matrix) -> Result<Matrix> {
    spd_power(a, -0.5)
}

fn spd_power(a: &Matrix, p: f64) -> Result<Matrix> {
    let n = super::check_square(a, "matrix")?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let (vals, vecs) = sym_eig(a);
    if vals[0] <= 0.0 {
        return Err(Error::Indefinite { min_eig: vals[0] });
    }
    let d = DVector::from_iterator(n, vals.iter().map(|v| v.powf(p)));
    Ok(&vecs * Matrix::from_diagonal(&d) * vecs.transpose())
}
