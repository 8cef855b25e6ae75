use nalgebra::linalg::Schur;

use super::{to_complex, CMatrix, Matrix, C64};
use crate::error::{Error, Result};

/// Which operator a Schur form stands for: `A` itself or `A^T`.
///
/// For real `A = Z T Z^H`, `A^T = Z T^H Z^H`, so the transpose never needs
/// its own decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

/// Real Schur form `A = Q T Q^T` with `T` quasi-upper-triangular.
pub fn schur_real(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = super::check_square(a, "A")?;
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(0, 0)));
    }
    super::check_finite(a, "A")?;
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or_else(|| Error::NoConvergence("real Schur iteration cap reached".into()))?;
    Ok(schur.unpack())
}

/// Complex Schur form `A = Z T Z^H` of a real matrix, `T` upper triangular.
#[derive(Clone, Debug)]
pub struct SchurForm {
    z: CMatrix,
    t: CMatrix,
}

impl SchurForm {
    pub fn new(a: &Matrix) -> Result<Self> {
        let (q, t) = schur_real(a)?;
        let (z, t) = real_to_complex_schur(&q, &t)?;
        Ok(SchurForm { z, t })
    }

    /// Schur form of `blkdiag(A1, A2)` from the forms of its blocks.
    pub fn block_diag(s1: &SchurForm, s2: &SchurForm) -> SchurForm {
        let (n1, n2) = (s1.dim(), s2.dim());
        let mut z = CMatrix::zeros(n1 + n2, n1 + n2);
        let mut t = CMatrix::zeros(n1 + n2, n1 + n2);
        z.view_mut((0, 0), (n1, n1)).copy_from(&s1.z);
        z.view_mut((n1, n1), (n2, n2)).copy_from(&s2.z);
        t.view_mut((0, 0), (n1, n1)).copy_from(&s1.t);
        t.view_mut((n1, n1), (n2, n2)).copy_from(&s2.t);
        SchurForm { z, t }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Largest real part of the spectrum (`-inf` for the empty matrix).
    pub fn spectral_abscissa(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.t[(i, i)].re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Schur form of `A^T` with an upper triangular factor.
    pub fn transposed(&self) -> SchurForm {
        // A^T = Z T^H Z^H; reversing the basis order turns T^H upper triangular.
        let n = self.dim();
        let t = CMatrix::from_fn(n, n, |i, j| self.t[(n - 1 - j, n - 1 - i)].conj());
        let z = CMatrix::from_fn(n, n, |i, j| self.z[(i, n - 1 - j)]);
        SchurForm { z, t }
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.z * &self.t * self.z.adjoint()
    }

    /// `(s I - op(A))^{-1} rhs`.
    pub fn solve_shifted(&self, op: Op, s: C64, rhs: &CMatrix) -> Result<CMatrix> {
        let mut y = self.z.adjoint() * rhs;
        let n = self.dim();
        let scale = self.scale();
        for j in 0..y.ncols() {
            let data = &mut y.as_mut_slice()[j * n..(j + 1) * n];
            let ok = match op {
                Op::N => upper_shifted_solve(&self.t, -s, data, scale * 1e-14),
                Op::T => upper_adjoint_shifted_solve(&self.t, -s, data, scale * 1e-14),
            };
            if !ok {
                return Err(Error::SingularShift { re: s.re, im: s.im });
            }
        }
        y.neg_mut();
        Ok(&self.z * y)
    }

    /// Max-abs entry of `T`, used to scale pivot thresholds.
    pub(crate) fn scale(&self) -> f64 {
        self.t.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE)
    }

    /// Move all eigenvalues satisfying `select` to the leading block.
    /// Returns how many were selected.
    pub fn reorder<F: Fn(C64) -> bool>(&mut self, select: F) -> usize {
        let n = self.dim();
        let mut head = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                let mut k = j;
                while k > head {
                    swap_adjacent(&mut self.t, &mut self.z, k - 1);
                    k -= 1;
                }
                head += 1;
            }
        }
        head
    }

    /// Right eigenvectors of `T`, unit-normalized columns.
    fn triangular_eigenvectors(&self) -> CMatrix {
        let n = self.dim();
        let small = self.scale() * f64::EPSILON;
        let mut x = CMatrix::zeros(n, n);
        for k in 0..n {
            let lam = self.t[(k, k)];
            x[(k, k)] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut acc = C64::new(0.0, 0.0);
                for j in (i + 1)..=k {
                    acc += self.t[(i, j)] * x[(j, k)];
                }
                let mut d = self.t[(i, i)] - lam;
                if d.norm() < small {
                    d = C64::new(small, 0.0);
                }
                x[(i, k)] = -acc / d;
            }
            let nrm = x.column(k).norm();
            x.column_mut(k).unscale_mut(nrm);
        }
        x
    }
}

/// Convert a real Schur pair (Q, T) to complex triangular form.
fn real_to_complex_schur(q: &Matrix, t: &Matrix) -> Result<(CMatrix, CMatrix)> {
    let n = t.nrows();
    let mut z = to_complex(q);
    let mut tc = to_complex(t);
    let tnorm = t.amax().max(f64::MIN_POSITIVE);
    let mut k = 0;
    while k + 1 < n {
        if tc[(k + 1, k)].norm() == 0.0 {
            k += 1;
            continue;
        }
        let (a, b, c, d) = (tc[(k, k)], tc[(k, k + 1)], tc[(k + 1, k)], tc[(k + 1, k + 1)]);
        let half = (a - d) * 0.5;
        let lam = (a + d) * 0.5 + (half * half + b * c).sqrt();
        let x1 = [b, lam - a];
        let x2 = [lam - d, c];
        let n1 = (x1[0].norm_sqr() + x1[1].norm_sqr()).sqrt();
        let n2 = (x2[0].norm_sqr() + x2[1].norm_sqr()).sqrt();
        let (v, nv) = if n1 >= n2 { (x1, n1) } else { (x2, n2) };
        if nv > 0.0 {
            apply_rotation(&mut tc, &mut z, k, v[0] / nv, v[1] / nv);
        }
        tc[(k + 1, k)] = C64::new(0.0, 0.0);
        k += 2;
    }
    for i in 0..n.saturating_sub(1) {
        if tc[(i + 1, i)].norm() > 1e-12 * tnorm {
            return Err(Error::NoConvergence(
                "Schur form is not quasi-triangular".into(),
            ));
        }
        tc[(i + 1, i)] = C64::new(0.0, 0.0);
    }
    Ok((z, tc))
}

/// Apply the unitary `G = [[x1, -conj(x2)], [x2, conj(x1)]]` to rows/cols
/// `k, k+1`: `T <- G^H T G`, `Z <- Z G`.
fn apply_rotation(t: &mut CMatrix, z: &mut CMatrix, k: usize, x1: C64, x2: C64) {
    let n = t.nrows();
    // rows: [r_k; r_k1] <- G^H [r_k; r_k1]
    for j in k..n {
        let p = t[(k, j)];
        let q = t[(k + 1, j)];
        t[(k, j)] = x1.conj() * p + x2.conj() * q;
        t[(k + 1, j)] = -x2 * p + x1 * q;
    }
    // columns: [c_k c_k1] <- [c_k c_k1] G
    for i in 0..(k + 2).min(n) {
        let p = t[(i, k)];
        let q = t[(i, k + 1)];
        t[(i, k)] = p * x1 + q * x2;
        t[(i, k + 1)] = -p * x2.conj() + q * x1.conj();
    }
    for i in 0..z.nrows() {
        let p = z[(i, k)];
        let q = z[(i, k + 1)];
        z[(i, k)] = p * x1 + q * x2;
        z[(i, k + 1)] = -p * x2.conj() + q * x1.conj();
    }
}

/// Swap the diagonal entries at `k` and `k+1` of an upper triangular `T`.
fn swap_adjacent(t: &mut CMatrix, z: &mut CMatrix, k: usize) {
    let a = t[(k, k)];
    let c = t[(k + 1, k + 1)];
    let b = t[(k, k + 1)];
    // Eigenvector of the 2x2 block for eigenvalue c.
    let x1 = b;
    let x2 = c - a;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    apply_rotation(t, z, k, x1 / nrm, x2 / nrm);
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    t[(k, k)] = c;
    t[(k + 1, k + 1)] = a;
}

/// In place `(T + mu I) y = rhs`, T upper triangular.
pub(crate) fn upper_shifted_solve(t: &CMatrix, mu: C64, y: &mut [C64], tiny: f64) -> bool {
    let n = t.nrows();
    let ts = t.as_slice();
    for j in (0..n).rev() {
        let d = ts[j + j * n] + mu;
        if d.norm() <= tiny {
            return false;
        }
        let yj = y[j] / d;
        y[j] = yj;
        let col = &ts[j * n..j * n + j];
        for (yi, tij) in y[..j].iter_mut().zip(col) {
            *yi -= *tij * yj;
        }
    }
    true
}

/// In place `(T^H + mu I) y = rhs`, T upper triangular.
pub(crate) fn upper_adjoint_shifted_solve(t: &CMatrix, mu: C64, y: &mut [C64], tiny: f64) -> bool {
    let n = t.nrows();
    let ts = t.as_slice();
    for j in 0..n {
        let col = &ts[j * n..j * n + j];
        let mut acc = y[j];
        for (yi, tij) in y[..j].iter().zip(col) {
            acc -= tij.conj() * *yi;
        }
        let d = ts[j + j * n].conj() + mu;
        if d.norm() <= tiny {
            return false;
        }
        y[j] = acc / d;
    }
    true
}

/// In place `(T22^T + mu I) y = rhs` for the trailing block of `T`
/// starting at `off` (plain transpose, no conjugation).
pub(crate) fn trailing_transpose_shifted_solve(
    t: &CMatrix,
    off: usize,
    mu: C64,
    y: &mut [C64],
    tiny: f64,
) -> bool {
    let n = t.nrows();
    let m = n - off;
    debug_assert_eq!(y.len(), m);
    let ts = t.as_slice();
    for j in 0..m {
        let cj = (off + j) * n + off;
        let col = &ts[cj..cj + j];
        let mut acc = y[j];
        for (yi, tij) in y[..j].iter().zip(col) {
            acc -= *tij * *yi;
        }
        let d = ts[cj + j] + mu;
        if d.norm() <= tiny {
            return false;
        }
        y[j] = acc / d;
    }
    true
}

/// Eigen-decomposition `A = X diag(values) X^{-1}` with `left^H right = I`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub right: CMatrix,
    pub left: CMatrix,
    /// 2-norm condition number of the right eigenvector matrix.
    pub condition: f64,
}

/// Eigenvalues with right/left eigenvectors, via the complex Schur form.
pub fn eig(a: &Matrix) -> Result<Eigen> {
    let sf = SchurForm::new(a)?;
    let n = sf.dim();
    let values = sf.eigenvalues();
    if n == 0 {
        return Ok(Eigen {
            values,
            right: CMatrix::zeros(0, 0),
            left: CMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    let mut right = sf.z() * sf.triangular_eigenvectors();
    for mut c in right.column_iter_mut() {
        let nrm = c.norm();
        c.unscale_mut(nrm);
    }
    let sv = right.clone().svd(false, false).singular_values;
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    let inv = right
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveSpectrum { cond: f64::INFINITY })?;
    Ok(Eigen {
        values,
        right,
        left: inv.adjoint(),
        condition,
    })
}

/// Thin singular value decomposition `A = U diag(sigma) V^T`, descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(m, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(n, 0),
        });
    }
    let s = nalgebra::linalg::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("SVD".into()))?;
    let u = s.u.expect("requested U");
    let vt = s.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| s.singular_values[j].total_cmp(&s.singular_values[i]));
    Ok(Svd {
        u: Matrix::from_fn(m, k, |r, c| u[(r, idx[c])]),
        sigma: idx.iter().map(|&i| s.singular_values[i]).collect(),
        v: Matrix::from_fn(n, k, |r, c| vt[(idx[c], r)]),
    })
}
