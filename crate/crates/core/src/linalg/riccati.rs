use super::equations::sylvester_schur;
use super::schur::{Op, SchurForm};
use super::{
    asymmetry, check_square, clu_solve, max_sym_eig, min_sym_eig, norm2, real_part, sym, CMatrix,
    LinalgConfig, Matrix, SymmetricSolution,
};
use crate::error::{Error, Result};

/// Both extremal solutions of the positive-real Riccati equation.
#[derive(Clone, Debug)]
pub struct AreSolution {
    pub x_min: SymmetricSolution,
    pub x_max: SymmetricSolution,
    /// `X_min` has an eigenvalue below `-indefinite_tol`.
    pub min_not_pd: bool,
    pub max_not_pd: bool,
    /// The two candidates were ordered by definiteness of their difference.
    /// When false the labels fall back to subspace origin.
    pub ordered: bool,
    /// `X_min` came from the stable invariant subspace.
    pub min_from_stable_subspace: bool,
}

struct Problem<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    c: &'a Matrix,
    rinv: Matrix,
    f: Option<&'a Matrix>,
}

impl Problem<'_> {
    /// `A^T X + X A - F + (C^T - X B) R^{-1} (C - B^T X)`
    fn residual(&self, x: &Matrix) -> Matrix {
        let k = self.c - self.b.transpose() * x;
        let r = self.a.transpose() * x + x * self.a + k.transpose() * &self.rinv * &k;
        match self.f {
            Some(f) => r - f,
            None => r,
        }
    }

    fn closed_loop(&self, x: &Matrix) -> Matrix {
        self.a - self.b * &self.rinv * (self.c - self.b.transpose() * x)
    }
}

/// Solve `-A^T X - X A - (C^T - X B) R^{-1} (C - B^T X) = 0` for its
/// minimal and maximal symmetric solutions.
///
/// Candidates come from the stable and antistable invariant subspaces of
/// the Hamiltonian matrix, get a few Newton steps of refinement, and are
/// labeled min/max by the definiteness of their difference.
pub fn solve_are_extremal(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    r: &Matrix,
    cfg: &LinalgConfig,
) -> Result<AreSolution> {
    solve_are_extremal_affine(a, b, c, r, None, cfg)
}

/// [`solve_are_extremal`] with a symmetric constant term:
/// `-A^T X - X A + F - (C^T - X B) R^{-1} (C - B^T X) = 0`.
pub fn solve_are_extremal_affine(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    r: &Matrix,
    f: Option<&Matrix>,
    cfg: &LinalgConfig,
) -> Result<AreSolution> {
    let n = check_square(a, "A")?;
    let m = check_square(r, "R")?;
    if b.shape() != (n, m) || c.shape() != (m, n) {
        return Err(Error::dims(format!(
            "ARE data: A {n}x{n}, B {:?}, C {:?}, R {m}x{m}",
            b.shape(),
            c.shape()
        )));
    }
    let asym = asymmetry(r);
    if asym > cfg.sym_tol {
        return Err(Error::NonSymmetric { asym });
    }
    let rinv = sym(&sym(r)
        .cholesky()
        .ok_or(Error::Indefinite {
            min_eig: min_sym_eig(r),
        })?
        .inverse());
    if f.is_some_and(|f| f.shape() != (n, n)) {
        return Err(Error::dims("ARE constant term must be n x n"));
    }
    let prob = Problem { a, b, c, rinv, f };
    if n == 0 {
        let empty = SymmetricSolution {
            x: Matrix::zeros(0, 0),
            residual_norm: 0.0,
        };
        return Ok(AreSolution {
            x_min: empty.clone(),
            x_max: empty,
            min_not_pd: false,
            max_not_pd: false,
            ordered: true,
            min_from_stable_subspace: true,
        });
    }

    let (x_s, x_a) = hamiltonian_candidates(&prob, cfg)?;
    let x_s = refine(&prob, x_s, true, cfg);
    let x_a = refine(&prob, x_a, false, cfg);

    let d = &x_a - &x_s;
    let scale = norm2(&x_s).max(norm2(&x_a)).max(f64::MIN_POSITIVE);
    let tol = 1e-8 * scale;
    let (lo, hi) = (min_sym_eig(&d), max_sym_eig(&d));
    let (xmin, xmax, ordered, from_stable) = if lo >= -tol {
        (x_s, x_a, true, true)
    } else if hi <= tol {
        (x_a, x_s, true, false)
    } else {
        log::warn!("extremal ARE candidates are not ordered (eigenvalues of difference in [{lo:e}, {hi:e}])");
        (x_s, x_a, false, true)
    };
    let pack = |x: Matrix| {
        let residual_norm = prob.residual(&x).norm();
        SymmetricSolution { x, residual_norm }
    };
    let min_not_pd = min_sym_eig(&xmin) < -cfg.indefinite_tol;
    let max_not_pd = min_sym_eig(&xmax) < -cfg.indefinite_tol;
    Ok(AreSolution {
        x_min: pack(xmin),
        x_max: pack(xmax),
        min_not_pd,
        max_not_pd,
        ordered,
        min_from_stable_subspace: from_stable,
    })
}

/// Stable and antistable candidates from the `2n x 2n` Hamiltonian matrix
/// `[[K, B R^{-1} B^T], [F - C^T R^{-1} C, -K^T]]`, `K = A - B R^{-1} C`.
fn hamiltonian_candidates(prob: &Problem, cfg: &LinalgConfig) -> Result<(Matrix, Matrix)> {
    let (a, b, c) = (prob.a, prob.b, prob.c);
    let n = a.nrows();
    let f = a - b * &prob.rinv * c;
    let g = b * &prob.rinv * b.transpose();
    let mut h = c.transpose() * &prob.rinv * c;
    if let Some(fc) = prob.f {
        h -= fc;
    }
    let mut ham = Matrix::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(&f);
    ham.view_mut((0, n), (n, n)).copy_from(&g);
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&h));
    ham.view_mut((n, n), (n, n)).copy_from(&(-f.transpose()));

    let schur = SchurForm::new(&ham)?;
    let hscale = ham.norm().max(f64::MIN_POSITIVE);
    let near_axis = schur
        .eigenvalues()
        .iter()
        .filter(|z| z.re.abs() <= cfg.hamiltonian_axis_tol * hscale)
        .count();
    if near_axis > 0 {
        log::debug!("Hamiltonian has {near_axis} eigenvalues near the imaginary axis");
    }
    let extract = |stable: bool| -> Result<Matrix> {
        let mut s = schur.clone();
        let k = if stable {
            s.reorder(|z| z.re < 0.0)
        } else {
            s.reorder(|z| z.re > 0.0)
        };
        if k != n {
            return Err(Error::NoHamiltonianSplit(format!(
                "{k} of {} eigenvalues on the requested side of the axis ({near_axis} near it)",
                2 * n
            )));
        }
        graph_solution(s.z(), n)
    };
    Ok((extract(true)?, extract(false)?))
}

/// `X = U2 U1^{-1}` from the leading `n` columns of `z`.
fn graph_solution(z: &CMatrix, n: usize) -> Result<Matrix> {
    let u1: CMatrix = z.view((0, 0), (n, n)).clone_owned();
    let u2: CMatrix = z.view((n, 0), (n, n)).clone_owned();
    // X U1 = U2  <=>  U1^T X^T = U2^T
    let xt = clu_solve(&u1.transpose(), &u2.transpose()).ok_or_else(|| {
        Error::NoHamiltonianSplit("invariant subspace is not a graph subspace".into())
    })?;
    Ok(sym(&real_part(&xt.transpose())))
}

/// Newton steps `A_cl^T D + D A_cl = -Ric(X)`, kept only while they reduce
/// the residual.
fn refine(prob: &Problem, mut x: Matrix, stable: bool, cfg: &LinalgConfig) -> Matrix {
    let mut res = prob.residual(&x).norm();
    for _ in 0..cfg.are_refinement_steps {
        if res == 0.0 {
            break;
        }
        let acl = prob.closed_loop(&x);
        let Ok(s) = SchurForm::new(&acl) else { break };
        let ok = if stable {
            s.spectral_abscissa() < 0.0
        } else {
            s.eigenvalues().iter().all(|z| z.re > 0.0)
        };
        if !ok {
            break;
        }
        let rhs = prob.residual(&x);
        let Ok(delta) = sylvester_schur(&s, Op::T, &s, Op::N, &rhs, cfg) else {
            break;
        };
        let cand = sym(&(&x + delta));
        let cres = prob.residual(&cand).norm();
        if !(cres < res) {
            break;
        }
        x = cand;
        res = cres;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_quadratic_oracle() {
        // -2(-1)X - (1 - X)^2 / 2 = 0  <=>  X^2 - 6X + 1 = 0
        let s = solve_are_extremal(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(2.0), &LinalgConfig::default()).unwrap();
        let r2 = 2f64.sqrt();
        assert!((s.x_min.x[(0, 0)] - (3.0 - 2.0 * r2)).abs() < 1e-13);
        assert!((s.x_max.x[(0, 0)] - (3.0 + 2.0 * r2)).abs() < 1e-13);
        assert!(s.ordered && !s.min_not_pd && !s.max_not_pd);
    }

    #[test]
    fn constant_term_shifts_roots() {
        // 2X + 1 - (1 - X)^2 / 2 = 0  <=>  X^2 - 6X - 1 = 0
        let f = scalar(1.0);
        let s = solve_are_extremal_affine(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(2.0), Some(&f), &LinalgConfig::default()).unwrap();
        let r10 = 10f64.sqrt();
        assert!((s.x_min.x[(0, 0)] - (3.0 - r10)).abs() < 1e-13);
        assert!((s.x_max.x[(0, 0)] - (3.0 + r10)).abs() < 1e-13);
        assert!(s.min_not_pd);
    }

    #[test]
    fn scalar_zero_output() {
        // 2X - X^2/2 = 0
        let s = solve_are_extremal(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &scalar(2.0), &LinalgConfig::default()).unwrap();
        assert!(s.x_min.x[(0, 0)].abs() < 1e-14);
        assert!((s.x_max.x[(0, 0)] - 4.0).abs() < 1e-13);
        assert!(s.x_min.residual_norm < 1e-13 && s.x_max.residual_norm < 1e-12);
    }
}
