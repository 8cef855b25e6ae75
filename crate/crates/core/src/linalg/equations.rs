
use super::schur::{
    trailing_transpose_shifted_solve, upper_adjoint_shifted_solve, upper_shifted_solve, Op,
    SchurForm,
};
use super::{
    asymmetry, check_square, min_sym_eig, real_part, sym, to_complex, CMatrix, LinalgConfig,
    Matrix, SymmetricSolution, C64,
};
use crate::error::{Error, Result};

/// Solve `op_a(T1) Y + Y op_b(T2) + C = 0` for upper triangular `T1, T2`.
fn triangular_sylvester(
    t1: &CMatrix,
    opa: Op,
    t2: &CMatrix,
    opb: Op,
    c: &CMatrix,
    tiny: f64,
) -> Result<CMatrix> {
    let n1 = t1.nrows();
    let n2 = t2.nrows();
    let mut y = CMatrix::zeros(n1, n2);
    let order: Vec<usize> = match opb {
        Op::N => (0..n2).collect(),
        Op::T => (0..n2).rev().collect(),
    };
    let mut rhs = vec![C64::new(0.0, 0.0); n1];
    for &j in &order {
        for (r, cij) in rhs.iter_mut().zip(c.column(j).iter()) {
            *r = -*cij;
        }
        let ys = y.as_slice();
        let (mu, coupled): (C64, Vec<(usize, C64)>) = match opb {
            Op::N => (
                t2[(j, j)],
                (0..j).map(|k| (k, t2[(k, j)])).collect(),
            ),
            Op::T => (
                t2[(j, j)].conj(),
                ((j + 1)..n2).map(|k| (k, t2[(j, k)].conj())).collect(),
            ),
        };
        for (k, w) in coupled {
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let yk = &ys[k * n1..(k + 1) * n1];
            for (r, v) in rhs.iter_mut().zip(yk) {
                *r -= *v * w;
            }
        }
        let ok = match opa {
            Op::N => upper_shifted_solve(t1, mu, &mut rhs, tiny),
            Op::T => upper_adjoint_shifted_solve(t1, mu, &mut rhs, tiny),
        };
        if !ok {
            return Err(Error::SpectraOverlap {
                margin: spectral_margin(t1, opa, t2, opb),
            });
        }
        y.column_mut(j).copy_from_slice(&rhs);
    }
    Ok(y)
}

fn spectral_margin(t1: &CMatrix, opa: Op, t2: &CMatrix, opb: Op) -> f64 {
    let eig = |t: &CMatrix, op: Op| -> Vec<C64> {
        (0..t.nrows())
            .map(|i| if op == Op::T { t[(i, i)].conj() } else { t[(i, i)] })
            .collect()
    };
    let e1 = eig(t1, opa);
    let e2 = eig(t2, opb);
    e1.iter()
        .flat_map(|a| e2.iter().map(move |b| (a + b).norm()))
        .fold(f64::INFINITY, f64::min)
}

/// Solve `op_a(A) X + X op_b(B) + C = 0` using precomputed Schur forms.
pub fn sylvester_schur(
    sa: &SchurForm,
    opa: Op,
    sb: &SchurForm,
    opb: Op,
    c: &Matrix,
    cfg: &LinalgConfig,
) -> Result<Matrix> {
    if c.nrows() != sa.dim() || c.ncols() != sb.dim() {
        return Err(Error::dims(format!(
            "Sylvester right-hand side is {}x{}, expected {}x{}",
            c.nrows(),
            c.ncols(),
            sa.dim(),
            sb.dim()
        )));
    }
    if sa.dim() == 0 || sb.dim() == 0 {
        return Ok(Matrix::zeros(c.nrows(), c.ncols()));
    }
    let tiny = cfg.sylvester_margin * (sa.scale() + sb.scale()).max(1.0);
    let chat = sa.z().adjoint() * to_complex(c) * sb.z();
    let y = triangular_sylvester(sa.t(), opa, sb.t(), opb, &chat, tiny)?;
    Ok(real_part(&(sa.z() * y * sb.z().adjoint())))
}

/// Solve `A Z + Z B + C = 0` by Bartels-Stewart.
pub fn solve_sylvester(a: &Matrix, b: &Matrix, c: &Matrix, cfg: &LinalgConfig) -> Result<Matrix> {
    check_square(a, "A")?;
    check_square(b, "B")?;
    let sa = SchurForm::new(a)?;
    let sb = SchurForm::new(b)?;
    sylvester_schur(&sa, Op::N, &sb, Op::N, c, cfg)
}

/// Which Lyapunov equation a Schur form of `A` is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LyapunovSide {
    /// `A^T X + X A + W = 0`
    Observability,
    /// `A X + X A^T + W = 0`
    Controllability,
}

/// Lyapunov solve with a precomputed Schur form; no stability or PSD checks
/// beyond unique solvability. The result is symmetrized.
pub fn lyapunov_schur(
    s: &SchurForm,
    side: LyapunovSide,
    w: &Matrix,
    cfg: &LinalgConfig,
) -> Result<Matrix> {
    let x = match side {
        LyapunovSide::Observability => sylvester_schur(s, Op::T, s, Op::N, w, cfg)?,
        LyapunovSide::Controllability => sylvester_schur(s, Op::N, s, Op::T, w, cfg)?,
    };
    Ok(sym(&x))
}

/// Solve `A^T X + X A + W = 0` for stable `A` and symmetric PSD `W`.
pub fn solve_lyapunov(a: &Matrix, w: &Matrix, cfg: &LinalgConfig) -> Result<SymmetricSolution> {
    let n = check_square(a, "A")?;
    if w.shape() != (n, n) {
        return Err(Error::dims("W must match A"));
    }
    let asym = asymmetry(w);
    if asym > cfg.sym_tol {
        return Err(Error::NonSymmetric { asym });
    }
    let wmin = min_sym_eig(w);
    let wscale = w.norm();
    if n > 0 && wmin < -cfg.indefinite_tol * wscale.max(1.0) {
        return Err(Error::Indefinite { min_eig: wmin });
    }
    let s = SchurForm::new(a)?;
    let abscissa = s.spectral_abscissa();
    if n > 0 && abscissa >= -cfg.stab_tol {
        return Err(Error::NotStable { max_real: abscissa });
    }
    let x = lyapunov_schur(&s, LyapunovSide::Observability, w, cfg)?;
    let residual_norm = (a.transpose() * &x + &x * a + w).norm();
    Ok(SymmetricSolution { x, residual_norm })
}

/// Hammarling's method: upper triangular `R` with `X = R^T R` solving
/// `A^T X + X A + C^T C = 0` for stable `A`, given the Schur form of `A`.
///
/// Use `s.transposed()` and `B^T` for the controllability Gramian.
pub fn lyapunov_factor(s: &SchurForm, c: &Matrix) -> Result<Matrix> {
    let n = s.dim();
    if c.ncols() != n {
        return Err(Error::dims("C must have as many columns as A"));
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let u = hammarling_triangular(s, &(to_complex(c) * s.z()))?;
    // X = (U Z^H)^H (U Z^H); the real factor comes from QR of [Re F; Im F].
    let f = &u * s.z().adjoint();
    let mut stacked = Matrix::zeros(2 * n, n);
    for jc in 0..n {
        for i in 0..n {
            stacked[(i, jc)] = f[(i, jc)].re;
            stacked[(n + i, jc)] = f[(i, jc)].im;
        }
    }
    Ok(stacked.qr().r())
}

/// Triangular `U` with `T^H Y + Y T + C^H C = 0`, `Y = U^H U`, where `T` is
/// the triangular factor of `s` and `cz` is `C` already in Schur coordinates.
pub(crate) fn hammarling_triangular(s: &SchurForm, cz: &CMatrix) -> Result<CMatrix> {
    let n = s.dim();
    let abscissa = s.spectral_abscissa();
    if n > 0 && abscissa >= 0.0 {
        return Err(Error::NotStable { max_real: abscissa });
    }
    let t = s.t();
    let tiny = s.scale() * 1e-300;
    let zero = C64::new(0.0, 0.0);

    // Current factor of the right-hand side, upper trapezoidal, rows x m.
    let mut rc: CMatrix = if cz.nrows() == 0 || n == 0 {
        CMatrix::zeros(0, n)
    } else {
        cz.clone().qr().r()
    };
    let mut u = CMatrix::zeros(n, n);

    for j in 0..n {
        let m = n - j;
        if rc.nrows() == 0 {
            break;
        }
        let t11 = t[(j, j)];
        let sigma = (-2.0 * t11.re).sqrt();
        let r11 = rc[(0, 0)];
        let a11 = r11.norm();
        let u11 = a11 / sigma;
        u[(j, j)] = C64::new(u11, 0.0);
        if m == 1 {
            break;
        }
        let r12: Vec<C64> = (1..m).map(|k| rc[(0, k)]).collect();
        let mut rhat = r12.clone();
        if a11 > 0.0 {
            let phase = r11 / a11;
            // u12 (T22 + conj(t11) I) = -(conj(phase) sigma r12 + u11 t12)
            let mut u12: Vec<C64> = (1..m)
                .map(|k| -(phase.conj() * sigma * r12[k - 1] + t[(j, j + k)] * u11))
                .collect();
            if !trailing_transpose_shifted_solve(t, j + 1, t11.conj(), &mut u12, tiny) {
                return Err(Error::NotStable { max_real: abscissa });
            }
            for k in 0..m - 1 {
                u[(j, j + 1 + k)] = u12[k];
                rhat[k] = r12[k] - phase * sigma * u12[k];
            }
        }
        // New factor [rhat; rc[1.., 1..]], brought back to trapezoidal form.
        let rows = rc.nrows();
        let mut next = CMatrix::zeros(rows, m - 1);
        for k in 0..m - 1 {
            next[(0, k)] = rhat[k];
        }
        for i in 1..rows {
            for k in 0..m - 1 {
                next[(i, k)] = rc[(i, k + 1)];
            }
        }
        for i in 0..(rows - 1).min(m - 1) {
            let x = next[(i, i)];
            let y = next[(i + 1, i)];
            if y == zero {
                continue;
            }
            let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if x == zero {
                (0.0, y.conj() / y.norm())
            } else {
                let ax = x.norm();
                (ax / rho, (x / ax) * y.conj() / rho)
            };
            for k in i..m - 1 {
                let p = next[(i, k)];
                let q = next[(i + 1, k)];
                next[(i, k)] = p * cs + sn * q;
                next[(i + 1, k)] = -sn.conj() * p + q * cs;
            }
            next[(i + 1, i)] = zero;
        }
        let keep = rows.min(m - 1);
        rc = next.rows(0, keep).clone_owned();
    }
    Ok(u)
}
