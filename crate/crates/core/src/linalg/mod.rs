//! Dense kernels: Schur forms, matrix equations, Riccati solver, PSD factors.
//!
//! The real Schur form comes from nalgebra. Everything downstream works on
//! the complex triangular form obtained from it, which keeps the
//! Bartels-Stewart and Hammarling recursions free of 2x2 block cases.

mod equations;
mod factor;
mod riccati;
mod schur;

pub use equations::{
    lyapunov_factor, lyapunov_schur, solve_lyapunov, solve_sylvester, sylvester_schur, LyapunovSide,
};
pub(crate) use equations::hammarling_triangular;
pub(crate) use schur::upper_shifted_solve as schur_upper_solve;
pub use factor::{psd_factor, spd_inv_sqrt, spd_sqrt};
pub use riccati::{solve_are_extremal, solve_are_extremal_affine, AreSolution};
pub use schur::{eig, schur_real, svd, Eigen, Op, SchurForm, Svd};

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex<f64>>;
pub type C64 = Complex<f64>;

/// Tolerances used by the dense solvers.
#[derive(Clone, Debug)]
pub struct LinalgConfig {
    /// Eigenvalues with real part above `-stab_tol` count as unstable.
    pub stab_tol: f64,
    /// Relative asymmetry accepted for symmetric inputs.
    pub sym_tol: f64,
    /// Smallest admissible |lambda_i(A) + mu_j(B)| in Sylvester solves,
    /// relative to max(1, ||A|| + ||B||).
    pub sylvester_margin: f64,
    /// Distance to the imaginary axis (relative to ||H||) below which a
    /// Hamiltonian eigenvalue is considered on the axis.
    pub hamiltonian_axis_tol: f64,
    /// Relative eigenvalue cutoff of `psd_factor`.
    pub rank_tol: f64,
    /// Eigenvalues below `-indefinite_tol` flag a solution as not PD.
    pub indefinite_tol: f64,
    /// Newton refinement sweeps after the invariant-subspace ARE solve.
    pub are_refinement_steps: usize,
}

impl Default for LinalgConfig {
    fn default() -> Self {
        LinalgConfig {
            stab_tol: 1e-10,
            sym_tol: 1e-10,
            sylvester_margin: 1e-12,
            hamiltonian_axis_tol: 1e-10,
            rank_tol: 1e-10,
            indefinite_tol: 1e-10,
            are_refinement_steps: 3,
        }
    }
}

/// Symmetric solution of a matrix equation with its recomputed residual.
#[derive(Clone, Debug)]
pub struct SymmetricSolution {
    pub x: Matrix,
    /// Frobenius norm of the defining equation's residual.
    pub residual_norm: f64,
}

pub fn sym(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn skew(a: &Matrix) -> Matrix {
    (a - a.transpose()) * 0.5
}

/// Spectral norm.
pub fn norm2(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

pub fn cnorm2(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Eigen-decomposition of a symmetric matrix with ascending eigenvalues.
pub fn sym_eig(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let se = SymmetricEigen::new(sym(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = Matrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Smallest eigenvalue of the symmetric part of `a` (`+inf` when empty).
pub fn min_sym_eig(a: &Matrix) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    SymmetricEigen::new(sym(a)).eigenvalues.min()
}

/// Largest eigenvalue of the symmetric part of `a` (`-inf` when empty).
pub fn max_sym_eig(a: &Matrix) -> f64 {
    if a.is_empty() {
        return f64::NEG_INFINITY;
    }
    SymmetricEigen::new(sym(a)).eigenvalues.max()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_herm_eig(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.min()
}

pub fn to_complex(a: &Matrix) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

pub fn real_part(a: &CMatrix) -> Matrix {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMatrix) -> Matrix {
    a.map(|z| z.im)
}

/// Relative asymmetry ||A - A^T||_F / max(||A||_F, tiny).
pub fn asymmetry(a: &Matrix) -> f64 {
    let nrm = a.norm();
    if nrm == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / nrm
}

pub(crate) fn check_square(a: &Matrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

pub(crate) fn check_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{what} has non-finite entries")))
    }
}

/// Orthonormal basis of the column space (thin QR), failing when a column
/// is numerically dependent on the previous ones.
pub fn orthonormalize(a: &Matrix, tol: f64) -> Result<Matrix> {
    let (n, k) = a.shape();
    if k == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    if k > n {
        return Err(Error::RankDeficientBasis);
    }
    // Two passes of modified Gram-Schmidt.
    let scale = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut q = a.clone();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let d = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-d, &qi, 1.0);
            }
        }
        let nrm = q.column(j).norm();
        if nrm <= tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficientBasis);
        }
        q.column_mut(j).scale_mut(1.0 / nrm);
    }
    Ok(q)
}

/// Solve `A X = B` by LU; `None` when `A` is numerically singular.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    if a.nrows() == 0 {
        return Some(Matrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let dmax = u.diagonal().amax();
    let dmin = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if dmax == 0.0 || dmin <= 1e-14 * dmax {
        return None;
    }
    lu.solve(b)
}

/// Complex counterpart of [`lu_solve`].
pub fn clu_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    if a.nrows() == 0 {
        return Some(CMatrix::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let dmax = u.diagonal().iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let dmin = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.norm()));
    if dmax == 0.0 || dmin <= 1e-14 * dmax {
        return None;
    }
    lu.solve(b)
}

/// Inverse of a square matrix; `None` when numerically singular.
pub fn inverse(a: &Matrix) -> Option<Matrix> {
    lu_solve(a, &Matrix::identity(a.nrows(), a.nrows()))
}

/// Block diagonal concatenation.
pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (n1, m1) = a.shape();
    let (n2, m2) = b.shape();
    let mut out = Matrix::zeros(n1 + n2, m1 + m2);
    out.view_mut((0, 0), (n1, m1)).copy_from(a);
    out.view_mut((n1, m1), (n2, m2)).copy_from(b);
    out
}

/// `[a b]`
pub fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// `[a; b]`
pub fn vcat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}
