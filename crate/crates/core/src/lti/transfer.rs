use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::{clu_solve, to_complex, CMatrix, SchurForm, C64};

/// `G(s) = C (sE - A)^{-1} B + D` by a dense LU solve.
pub fn transfer_eval(sys: &StateSpace, s: C64) -> Result<CMatrix> {
    let d = to_complex(sys.d());
    if sys.n() == 0 {
        return Ok(d);
    }
    let x = resolvent_apply(sys, s, &to_complex(sys.b()))?;
    Ok(to_complex(sys.c()) * x + d)
}

/// `G'(s) = -C (sE - A)^{-1} E (sE - A)^{-1} B`.
pub fn transfer_derivative(sys: &StateSpace, s: C64) -> Result<CMatrix> {
    if sys.n() == 0 {
        return Ok(CMatrix::zeros(sys.outputs(), sys.inputs()));
    }
    let x = resolvent_apply(sys, s, &to_complex(sys.b()))?;
    let ex = match sys.e() {
        Some(e) => to_complex(e) * x,
        None => x,
    };
    let y = resolvent_apply(sys, s, &ex)?;
    Ok(-(to_complex(sys.c()) * y))
}

fn resolvent_apply(sys: &StateSpace, s: C64, rhs: &CMatrix) -> Result<CMatrix> {
    let n = sys.n();
    let e = match sys.e() {
        Some(e) => to_complex(e),
        None => CMatrix::identity(n, n),
    };
    let m = e * s - to_complex(sys.a());
    clu_solve(&m, rhs).ok_or(Error::SingularShift { re: s.re, im: s.im })
}

/// Popov function `G(iw) + G(-iw)^T` on the imaginary axis.
///
/// For real systems `G(-iw)^T = G(iw)^H`, so the result is exactly Hermitian.
pub fn popov_eval(sys: &StateSpace, omega: f64) -> Result<CMatrix> {
    let g = transfer_eval(sys, C64::new(0.0, omega))?;
    Ok(&g + g.adjoint())
}

/// Transfer function evaluator with a cached Schur form: `O(n^2)` per point
/// after an `O(n^3)` setup.
#[derive(Clone, Debug)]
pub struct FrequencyResponse {
    schur: SchurForm,
    /// `Z^H B`
    bz: CMatrix,
    /// `C Z`
    cz: CMatrix,
    d: CMatrix,
    tiny: f64,
}

impl FrequencyResponse {
    pub fn new(sys: &StateSpace) -> Result<Self> {
        let sys = sys.to_standard()?;
        let schur = SchurForm::new(sys.a())?;
        Ok(Self::with_schur(&sys, schur))
    }

    /// Reuse an existing Schur form of `sys.a()` (standard-form systems only).
    pub fn with_schur(sys: &StateSpace, schur: SchurForm) -> Self {
        let bz = schur.z().adjoint() * to_complex(sys.b());
        let cz = to_complex(sys.c()) * schur.z();
        let tiny = 1e-14 * schur.scale();
        FrequencyResponse {
            schur,
            bz,
            cz,
            d: to_complex(sys.d()),
            tiny,
        }
    }

    pub fn schur(&self) -> &SchurForm {
        &self.schur
    }

    pub fn eval(&self, s: C64) -> Result<CMatrix> {
        if self.schur.dim() == 0 {
            return Ok(self.d.clone());
        }
        // Z is folded into bz and cz, so only the triangular solve remains.
        let y = self.triangular_resolvent(s, &self.bz)?;
        Ok(&self.cz * y + &self.d)
    }

    pub fn eval_derivative(&self, s: C64) -> Result<CMatrix> {
        if self.schur.dim() == 0 {
            return Ok(CMatrix::zeros(self.d.nrows(), self.d.ncols()));
        }
        let y = self.triangular_resolvent(s, &self.bz)?;
        let y2 = self.triangular_resolvent(s, &y)?;
        Ok(-(&self.cz * y2))
    }

    pub fn popov(&self, omega: f64) -> Result<CMatrix> {
        let g = self.eval(C64::new(0.0, omega))?;
        Ok(&g + g.adjoint())
    }

    fn triangular_resolvent(&self, s: C64, rhs: &CMatrix) -> Result<CMatrix> {
        let t = self.schur.t();
        let n = t.nrows();
        let mut y = rhs.clone();
        let tiny = self.tiny;
        for j in 0..y.ncols() {
            let data = &mut y.as_mut_slice()[j * n..(j + 1) * n];
            if !crate::linalg::schur_upper_solve(t, -s, data, tiny) {
                return Err(Error::SingularShift { re: s.re, im: s.im });
            }
        }
        y.neg_mut();
        Ok(y)
    }
}
