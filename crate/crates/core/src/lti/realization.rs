use super::{gramian_factors, gramians, PhRepresentation, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{svd, sym_eig, Matrix};

/// Square-root balanced truncation of order `r`.
#[derive(Clone, Debug)]
pub struct BalancedTruncation {
    pub rom: StateSpace,
    /// All Hankel singular values of the input system, descending.
    pub hsv: Vec<f64>,
    /// Projection pair with `W^T V = I_r`.
    pub v: Matrix,
    pub w: Matrix,
    /// `2 * sum of the discarded Hankel values` (H-infinity error bound).
    pub error_bound: f64,
}

pub fn balanced_truncation(sys: &StateSpace, r: usize) -> Result<BalancedTruncation> {
    let sys = sys.to_standard()?;
    let n = sys.n();
    if r > n {
        return Err(Error::InvalidConfig(format!("order {r} exceeds state dimension {n}")));
    }
    let (rc, ro) = gramian_factors(&sys)?;
    let f = svd(&(&ro * rc.transpose()))?;
    let mut hsv = f.sigma.clone();
    hsv.resize(n, 0.0);
    if r > 0 && !(hsv[r - 1] > f64::MIN_POSITIVE) {
        return Err(Error::RankDeficientBasis);
    }
    let scale = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        r,
        hsv[..r].iter().map(|s| 1.0 / s.sqrt()),
    ));
    let w = ro.transpose() * f.u.columns(0, r) * &scale;
    let v = rc.transpose() * f.v.columns(0, r) * &scale;
    let rom = StateSpace::new(
        w.transpose() * sys.a() * &v,
        w.transpose() * sys.b(),
        sys.c() * &v,
        sys.d().clone(),
    )?;
    let error_bound = 2.0 * hsv[r..].iter().sum::<f64>();
    Ok(BalancedTruncation {
        rom,
        hsv,
        v,
        w,
        error_bound,
    })
}

/// Balanced truncation dropping every Hankel value `<= trunc_tol * sigma_1`.
pub fn minimal_realization(sys: &StateSpace, trunc_tol: f64) -> Result<StateSpace> {
    let hsv = super::hankel_singular_values(sys)?;
    let s1 = hsv.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return Ok(StateSpace::static_gain(sys.d().clone()));
    }
    let r = hsv.iter().take_while(|&&s| s > trunc_tol * s1).count();
    if r == sys.n() && sys.e().is_none() {
        return Ok(sys.clone());
    }
    Ok(balanced_truncation(sys, r)?.rom)
}

/// Numerical ranks of the controllability and observability Gramians:
/// eigenvalues above `tol * lambda_max` count.
pub fn minimality_rank(sys: &StateSpace, tol: f64) -> Result<(usize, usize)> {
    let (p, q) = gramians(sys)?;
    let rank = |x: &Matrix| {
        let (ev, _) = sym_eig(x);
        let top = ev.last().copied().unwrap_or(0.0);
        if top <= 0.0 {
            0
        } else {
            ev.iter().filter(|&&l| l > tol * top).count()
        }
    };
    Ok((rank(&p.x), rank(&q.x)))
}

/// Structure-preserving minimal realization of a pH model.
///
/// Coordinates are first changed so that `Q = I` (`x_hat = L^T x` with
/// `Q = L L^T`). In these coordinates every orthogonal Galerkin projection
/// keeps the pH form. The state is projected onto the dominant directions
/// of the controllability Gramian and then of the observability Gramian,
/// each time dropping eigen-directions with Gramian eigenvalue
/// `<= tol * lambda_max`. The result has `Q = I`.
pub fn ph_minimal_realization(ph: &PhRepresentation, tol: f64) -> Result<PhRepresentation> {
    ph.validate(1e-8)?;
    let l = ph
        .q
        .clone()
        .cholesky()
        .ok_or(Error::XNotPd {
            min_eig: crate::linalg::min_sym_eig(&ph.q),
        })?
        .l();
    let n = ph.dim();
    let mut cur = PhRepresentation {
        j: l.transpose() * &ph.j * &l,
        r: l.transpose() * &ph.r * &l,
        q: Matrix::identity(n, n),
        g: l.transpose() * &ph.g,
        p: l.transpose() * &ph.p,
        s: ph.s.clone(),
        n: ph.n.clone(),
    };
    for controllability in [true, false] {
        let sys = cur.to_state_space()?;
        let (rc, ro) = gramian_factors(&sys)?;
        // P = Rc^T Rc: dominant directions are left singular vectors of Rc^T.
        let f = svd(&if controllability { rc } else { ro }.transpose())?;
        let s1 = f.sigma.first().copied().unwrap_or(0.0);
        let k = f.sigma.iter().take_while(|&&s| s * s > tol * s1 * s1).count();
        let v = f.u.columns(0, k).into_owned();
        cur = galerkin(&cur, &v);
    }
    Ok(cur)
}

/// Orthogonal projection of a `Q = I` pH model onto `Ran(V)`, `V^T V = I`.
fn galerkin(ph: &PhRepresentation, v: &Matrix) -> PhRepresentation {
    let k = v.ncols();
    let mut j = v.transpose() * &ph.j * v;
    j = crate::linalg::skew(&j);
    let r = crate::linalg::sym(&(v.transpose() * &ph.r * v));
    PhRepresentation {
        j,
        r,
        q: Matrix::identity(k, k),
        g: v.transpose() * &ph.g,
        p: v.transpose() * &ph.p,
        s: ph.s.clone(),
        n: ph.n.clone(),
    }
}
