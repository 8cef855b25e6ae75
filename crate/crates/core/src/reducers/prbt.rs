use super::{projection_rom, ReductionResult};
use crate::error::{Error, Result};
use crate::kyp::{dual_solution, solve_kyp_extremal, Which};
use crate::linalg::{svd, sym_eig, Matrix};
use crate::lti::StateSpace;

/// Positive-real balanced truncation.
///
/// Balances `X_min` against `Y_min = X_max^{-1}` (the minimal solution of
/// the dual Lur'e equations) and truncates to order `r`.
pub fn prbt(sys: &StateSpace, r: usize) -> Result<ReductionResult> {
    let sys = sys.to_standard()?;
    let n = sys.n();
    if r == 0 || r > n {
        return Err(Error::InvalidConfig(format!("reduced order must be in 1..={n}, got {r}")));
    }
    let ext = solve_kyp_extremal(&sys, None, Which::Both)?;
    let (xmin, xmax) = (ext.min.expect("requested"), ext.max.expect("requested"));
    let ymin = dual_solution(&xmax)?;
    let lx = sqrt_factor(&xmin.x);
    let ly = sqrt_factor(&ymin.x);
    let f = svd(&(&ly * lx.transpose()))?;
    if !(f.sigma[r - 1] > 0.0) {
        return Err(Error::RankDeficientBasis);
    }
    let scale = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        r,
        f.sigma[..r].iter().map(|s| 1.0 / s.sqrt()),
    ));
    let v = ly.transpose() * f.u.columns(0, r) * &scale;
    let w = lx.transpose() * f.v.columns(0, r) * &scale;
    let rom = projection_rom(&sys, &v, &w)?;
    Ok(ReductionResult {
        rom,
        v: Some(v),
        w: Some(w),
        iterations: 0,
        converged: true,
        history: Vec::new(),
        interpolation: None,
        ph: None,
        h2_error: None,
    })
}

/// `L` with `X = L^T L` from the symmetric eigendecomposition (negative
/// roundoff eigenvalues clipped).
fn sqrt_factor(x: &Matrix) -> Matrix {
    let (ev, u) = sym_eig(x);
    let mut l = u.transpose();
    for (i, lam) in ev.iter().enumerate() {
        l.row_mut(i).scale_mut(lam.max(0.0).sqrt());
    }
    l
}
