//! KYP inequality: extremal solutions, Lur'e factors and certification.
//!
//! Sign convention: a solution `(X, L, M)` of the Lur'e equations satisfies
//! `W(X) = [L M]^T [L M]`, i.e. `-A^T X - X A = L^T L`,
//! `C^T - X B = L^T M` and `D + D^T = M^T M`.

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, hcat, min_sym_eig, norm2, psd_factor, solve_are_extremal_affine, spd_inv_sqrt, spd_sqrt,
    skew, sym, svd, sym_eig, vcat, LinalgConfig, Matrix, SchurForm, C64,
};
use crate::lti::{FrequencyGrid, FrequencyResponse, PhRepresentation, StateSpace};

/// Which KYP solution a certificate represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolutionKind {
    Min,
    Max,
    /// Supplied by the caller, e.g. the Hamiltonian `Q` of a pH model.
    Provided,
}

impl std::fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolutionKind::Min => "min",
            SolutionKind::Max => "max",
            SolutionKind::Provided => "q",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Min,
    Max,
    Both,
}

/// A solution `(X, L, M)` of the (possibly regularized) Lur'e equations.
#[derive(Clone, Debug)]
pub struct KypSolution {
    pub x: Matrix,
    pub l: Matrix,
    pub m: Matrix,
    /// Regularization added to `D + D^T`; `M^T M = D + D^T + epsilon I`.
    pub epsilon: f64,
    pub kind: SolutionKind,
}

impl KypSolution {
    /// Number of rows of `[L M]`.
    pub fn rank(&self) -> usize {
        self.l.nrows()
    }
}

/// `W(X) = [[-A^T X - X A, C^T - X B], [C - B^T X, D + D^T]]`.
///
/// Systems with a mass matrix are converted to standard form first.
pub fn kyp_residual(sys: &StateSpace, x: &Matrix) -> Result<Matrix> {
    let sys = sys.to_standard()?;
    let n = sys.n();
    if x.shape() != (n, n) {
        return Err(Error::dims(format!("X is {:?}, system has {n} states", x.shape())));
    }
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    if c.nrows() != b.ncols() {
        return Err(Error::dims("KYP matrix needs a square system"));
    }
    let m = b.ncols();
    let mut w = Matrix::zeros(n + m, n + m);
    w.view_mut((0, 0), (n, n))
        .copy_from(&(-(a.transpose() * x) - x * a));
    let off = c.transpose() - x * b;
    w.view_mut((0, n), (n, m)).copy_from(&off);
    w.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
    w.view_mut((n, n), (m, m)).copy_from(&(d + d.transpose()));
    Ok(sym(&w))
}

/// Regularization used when `epsilon` is not given: zero when `D + D^T`
/// is safely nonsingular, `1e-12 * max(1, ||D + D^T||_2)` otherwise.
pub fn default_epsilon(sys: &StateSpace) -> f64 {
    let dd = sys.d() + sys.d().transpose();
    let nrm = norm2(&dd);
    if dd.nrows() > 0 && min_sym_eig(&dd) > 1e-8 * nrm.max(1.0) {
        0.0
    } else {
        1e-12 * nrm.max(1.0)
    }
}

/// Extremal solutions returned by [`solve_kyp_extremal`].
#[derive(Clone, Debug)]
pub struct ExtremalSolutions {
    pub min: Option<KypSolution>,
    pub max: Option<KypSolution>,
    /// ARE residual norms `(min, max)` after refinement.
    pub are_residuals: (f64, f64),
    /// Diagnostic only: the zeros of the spectral factor of `X_min`
    /// (eigenvalues of `A - B R^{-1} (C - B^T X_min)`) lie in the closed
    /// left half-plane.
    pub min_zeros_in_closed_lhp: bool,
}

/// Extremal KYP solutions.
///
/// When `D + D^T` is nonsingular this solves the ARE with `R = D + D^T +
/// epsilon I` and returns `L = R^{-1/2} (C - B^T X)`, `M = R^{1/2}` (`k = m`).
///
/// Singular parts are deflated first. When `D + D^T = 0` and `CB` is
/// symmetric positive definite, every Lur'e solution satisfies `X B = C^T`
/// and `M = 0`, which leaves a Lur'e problem of order `n - m`. A Popov zero
/// at `s = 0` shows up as a kernel of the deflated state matrix, on which
/// `X` is again fixed. `epsilon` only regularizes the final ARE.
/// Regularizing the original ARE instead scales its Hamiltonian by
/// `1/epsilon`, which destroys the eigenvalue split for realistic `epsilon`.
///
/// `epsilon = None` applies [`default_epsilon`].
pub fn solve_kyp_extremal(
    sys: &StateSpace,
    epsilon: Option<f64>,
    which: Which,
) -> Result<ExtremalSolutions> {
    solve_kyp_extremal_with(sys, epsilon, which, &LinalgConfig::default())
}

pub fn solve_kyp_extremal_with(
    sys: &StateSpace,
    epsilon: Option<f64>,
    which: Which,
    cfg: &LinalgConfig,
) -> Result<ExtremalSolutions> {
    let sys = sys.to_standard()?;
    let eps = epsilon.unwrap_or_else(|| default_epsilon(&sys));
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {eps}")));
    }
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let m = b.ncols();
    if c.nrows() != m {
        return Err(Error::dims("KYP solve needs a square system"));
    }
    let dd = sym(&(d + d.transpose()));
    if eps == 0.0 && min_sym_eig(&dd) < 1e-14 * sys.scale() {
        return Err(Error::SingularFeedthrough);
    }
    let f = Matrix::zeros(a.nrows(), a.nrows());
    let lure = Lure { a, b, c, r: &dd, f: &f };
    let sol = extremal_lure(&lure, eps, cfg, 0)?;
    if sol.deflations > 0 {
        log::debug!("{} deflation step(s) before the ARE", sol.deflations);
    }
    let make = |x: &Matrix, l: &Matrix, m: &Matrix, kind| KypSolution {
        x: x.clone(),
        l: l.clone(),
        m: m.clone(),
        epsilon: eps,
        kind,
    };
    Ok(ExtremalSolutions {
        min: matches!(which, Which::Min | Which::Both)
            .then(|| make(&sol.x_min, &sol.l_min, &sol.m_min, SolutionKind::Min)),
        max: matches!(which, Which::Max | Which::Both)
            .then(|| make(&sol.x_max, &sol.l_max, &sol.m_max, SolutionKind::Max)),
        are_residuals: sol.are_residuals,
        min_zeros_in_closed_lhp: sol.zeros_ok,
    })
}

/// Lur'e problem `W = [[-A^T X - X A + F, C^T - X B], [C - B^T X, R]]`.
struct Lure<'a> {
    a: &'a Matrix,
    b: &'a Matrix,
    c: &'a Matrix,
    r: &'a Matrix,
    f: &'a Matrix,
}

impl Lure<'_> {
    fn scale(&self) -> f64 {
        [self.a.norm(), self.b.norm(), self.c.norm(), self.f.norm(), 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

struct LureSolutions {
    x_min: Matrix,
    x_max: Matrix,
    l_min: Matrix,
    l_max: Matrix,
    m_min: Matrix,
    m_max: Matrix,
    are_residuals: (f64, f64),
    zeros_ok: bool,
    deflations: usize,
}

fn extremal_lure(p: &Lure, eps: f64, cfg: &LinalgConfig, depth: usize) -> Result<LureSolutions> {
    let n = p.a.nrows();
    let m = p.b.ncols();
    if n >= m && m > 0 && p.r.norm() <= 1e-12 * p.scale() {
        if let Some(sol) = deflate_infinity(p, eps, cfg, depth)? {
            return Ok(sol);
        }
    }
    if n > 0 {
        if let Some(sol) = deflate_kernel(p, eps, cfg, depth)? {
            return Ok(sol);
        }
    }
    let r = p.r + Matrix::identity(m, m) * eps;
    if min_sym_eig(&r) <= 0.0 {
        return Err(Error::SingularFeedthrough);
    }
    let f = (p.f.norm() > 0.0).then_some(p.f);
    let are = solve_are_extremal_affine(p.a, p.b, p.c, &r, f, cfg)?;
    if !are.ordered {
        log::warn!("extremal ARE candidates are not ordered; labels follow subspace origin");
    }
    let rhalf = spd_sqrt(&r)?;
    let rinvhalf = spd_inv_sqrt(&r)?;
    let lf = |x: &Matrix| &rinvhalf * (p.c - p.b.transpose() * x);
    let zeros_ok = if n == 0 {
        true
    } else {
        let k = p.a - p.b * (&rinvhalf * lf(&are.x_min.x));
        let tol = 1e-8 * k.norm().max(1.0);
        SchurForm::new(&k)?.eigenvalues().iter().all(|z| z.re <= tol)
    };
    Ok(LureSolutions {
        l_min: lf(&are.x_min.x),
        l_max: lf(&are.x_max.x),
        x_min: are.x_min.x,
        x_max: are.x_max.x,
        m_min: rhalf.clone(),
        m_max: rhalf,
        are_residuals: (are.x_min.residual_norm, are.x_max.residual_norm),
        zeros_ok,
        deflations: depth,
    })
}

/// `R = 0`: every solution has `X B = C^T` and `M = 0`. With `K = CB`
/// symmetric positive definite and `Ran N = ker C`, the coordinates
/// `x = B xi + N eta` give `X = diag(K, Y)` where `Y` solves a Lur'e problem
/// of order `n - m` with input `xi`. `None` when not applicable.
fn deflate_infinity(
    p: &Lure,
    eps: f64,
    cfg: &LinalgConfig,
    depth: usize,
) -> Result<Option<LureSolutions>> {
    let (a, b, c) = (p.a, p.b, p.c);
    let n = a.nrows();
    let m = b.ncols();
    let k = c * b;
    if crate::linalg::asymmetry(&k) > 1e-8 {
        return Ok(None);
    }
    let k = sym(&k);
    let Some(kc) = k.clone().cholesky() else {
        return Ok(None);
    };
    // ker C from the eigenvectors of C^T C with the n - m smallest eigenvalues
    let (ev, vecs) = sym_eig(&(c.transpose() * c));
    if n > m && ev[n - m] <= 1e-12 * ev[n - 1] {
        return Ok(None);
    }
    let nb = vecs.columns(0, n - m).into_owned();
    let kinv_c = kc.solve(c);
    let tinv = vcat(
        &kinv_c,
        &(nb.transpose() * (Matrix::identity(n, n) - b * &kinv_c)),
    );
    let t = hcat(b, &nb);
    let ah = &tinv * a * &t;
    let fh = sym(&(t.transpose() * p.f * &t));
    let blk = |x: &Matrix, r0, c0, nr, nc| x.view((r0, c0), (nr, nc)).into_owned();
    let a11 = blk(&ah, 0, 0, m, m);
    let a12 = blk(&ah, 0, m, m, n - m);
    let a21 = blk(&ah, m, 0, n - m, m);
    let a22 = blk(&ah, m, m, n - m, n - m);
    let r = sym(&(blk(&fh, 0, 0, m, m) - &k * &a11 - a11.transpose() * &k));
    let c2 = blk(&fh, 0, m, m, n - m) - &k * &a12;
    let f2 = blk(&fh, m, m, n - m, n - m);
    let sub = Lure {
        a: &a22,
        b: &a21,
        c: &c2,
        r: &r,
        f: &f2,
    };
    let sub = extremal_lure(&sub, eps, cfg, depth + 1)?;
    let lift_x = |y: &Matrix| sym(&(tinv.transpose() * block_diag(&k, y) * &tinv));
    let lift_l = |m: &Matrix, l: &Matrix| hcat(m, l) * &tinv;
    Ok(Some(LureSolutions {
        x_min: lift_x(&sub.x_min),
        x_max: lift_x(&sub.x_max),
        l_min: lift_l(&sub.m_min, &sub.l_min),
        l_max: lift_l(&sub.m_max, &sub.l_max),
        m_min: Matrix::zeros(sub.m_min.nrows(), m),
        m_max: Matrix::zeros(sub.m_max.nrows(), m),
        are_residuals: sub.are_residuals,
        zeros_ok: sub.zeros_ok,
        deflations: sub.deflations,
    }))
}

/// Singular `A` with `F ker(A) = 0` (a Popov zero at `s = 0`): every
/// solution has `A^T X V = 0` and `B^T X V = C V` on `V = ker A`, which fixes
/// `X V` when `B^T ker(A^T)` has full column rank. The rest is a Lur'e
/// problem on the orthogonal complement of `V`. `None` when not applicable.
fn deflate_kernel(
    p: &Lure,
    eps: f64,
    cfg: &LinalgConfig,
    depth: usize,
) -> Result<Option<LureSolutions>> {
    let (a, b, c) = (p.a, p.b, p.c);
    let n = a.nrows();
    let scale = p.scale();
    let f = svd(a)?;
    let q = f.sigma.iter().filter(|&&s| s <= 1e-10 * scale).count();
    if q == 0 || q > b.ncols() {
        return Ok(None);
    }
    let k = n - q;
    // T2 = [V, N'] orthogonal, U = ker A^T
    let t2 = hcat(&f.v.columns(k, q).into_owned(), &f.v.columns(0, k).into_owned());
    let u = f.u.columns(k, q).into_owned();
    let fh = sym(&(t2.transpose() * p.f * &t2));
    if fh.columns(0, q).norm() > 1e-10 * scale {
        return Ok(None);
    }
    let btu = b.transpose() * &u;
    let g = svd(&btu)?;
    if g.sigma.last().is_none_or(|&s| s <= 1e-10 * scale) {
        return Ok(None);
    }
    let cv = c * t2.columns(0, q);
    let z = &g.v * Matrix::from_diagonal(&nalgebra::DVector::from_iterator(q, g.sigma.iter().map(|s| 1.0 / s))) * g.u.transpose() * &cv;
    let mismatch = (&btu * &z - &cv).norm();
    if mismatch > 1e-8 * scale {
        log::warn!("kernel deflation: X V is inconsistent (residual {mismatch:e})");
    }
    let xv = t2.transpose() * &u * &z;
    let y11 = sym(&xv.rows(0, q).into_owned());
    let y21 = xv.rows(q, k).into_owned();
    let ah = t2.transpose() * a * &t2;
    let bh = t2.transpose() * b;
    let ch = c * &t2;
    let a12 = ah.view((0, q), (q, k)).into_owned();
    let a22 = ah.view((q, q), (k, k)).into_owned();
    let b1 = bh.rows(0, q).into_owned();
    let b2 = bh.rows(q, k).into_owned();
    let c2 = ch.columns(q, k) - b1.transpose() * y21.transpose();
    let f2 = sym(&(fh.view((q, q), (k, k)) - a12.transpose() * y21.transpose() - &y21 * &a12));
    let sub = Lure {
        a: &a22,
        b: &b2,
        c: &c2,
        r: p.r,
        f: &f2,
    };
    let sub = extremal_lure(&sub, eps, cfg, depth + 1)?;
    let lift_x = |y22: &Matrix| {
        let top = hcat(&y11, &y21.transpose());
        let bot = hcat(&y21, y22);
        sym(&(&t2 * vcat(&top, &bot) * t2.transpose()))
    };
    let lift_l = |l: &Matrix| hcat(&Matrix::zeros(l.nrows(), q), l) * t2.transpose();
    Ok(Some(LureSolutions {
        x_min: lift_x(&sub.x_min),
        x_max: lift_x(&sub.x_max),
        l_min: lift_l(&sub.l_min),
        l_max: lift_l(&sub.l_max),
        m_min: sub.m_min,
        m_max: sub.m_max,
        are_residuals: sub.are_residuals,
        zeros_ok: sub.zeros_ok,
        deflations: sub.deflations,
    }))
}

/// `[L M] = psd_factor(W(X))`, split after the first `n` columns.
pub fn lure_factors_from_x(
    sys: &StateSpace,
    x: &Matrix,
    rank_tol: f64,
) -> Result<(Matrix, Matrix, usize)> {
    let n = sys.n();
    let w = kyp_residual(sys, x)?;
    let (f, rank) = psd_factor(&w, rank_tol)?;
    let l = f.columns(0, n).into_owned();
    let m = f.columns(n, f.ncols() - n).into_owned();
    Ok((l, m, rank))
}

/// Certificate for a user-provided solution (e.g. `X = Q` of a pH model).
pub fn provided_solution(sys: &StateSpace, x: &Matrix, rank_tol: f64) -> Result<KypSolution> {
    let (l, m, _) = lure_factors_from_x(sys, x, rank_tol)?;
    Ok(KypSolution {
        x: sym(x),
        l,
        m,
        epsilon: 0.0,
        kind: SolutionKind::Provided,
    })
}

/// Diagnostics of [`verify_kyp`].
#[derive(Clone, Debug)]
pub struct KypReport {
    /// `lambda_min(W(X))`
    pub min_eig: f64,
    pub x_min_eig: f64,
    /// `max(1, ||W(X)||_F)`
    pub scale: f64,
    /// `||A^T X + X A + L^T L||_F`
    pub lure_state: f64,
    /// `||C^T - X B - L^T M||_F`
    pub lure_coupling: f64,
    /// `||D + D^T - M^T M||_F`
    pub lure_feedthrough: f64,
    /// Largest `||H(iw)^H H(iw) - Phi(iw)||_2 / max(1, ||Phi(iw)||_2)` over
    /// 20 logarithmic frequencies in `[1e-3, 1e3]`.
    pub popov_deviation: f64,
}

impl KypReport {
    /// `W(X) >= -1e-8 scale`, `X > 0`, and
    /// `||W(X) - [L M]^T [L M]||_F <= 1e-8 ||W(X)||_F + 10 epsilon`.
    pub fn certified(&self, epsilon: f64) -> bool {
        let combined = (self.lure_state.powi(2)
            + 2.0 * self.lure_coupling.powi(2)
            + self.lure_feedthrough.powi(2))
        .sqrt();
        self.min_eig >= -1e-8 * self.scale
            && self.x_min_eig > 0.0
            && combined <= 1e-8 * self.scale + 10.0 * epsilon * self.scale
    }
}

pub fn verify_kyp(sys: &StateSpace, sol: &KypSolution) -> Result<KypReport> {
    let sys = sys.to_standard()?;
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let x = &sol.x;
    let w = kyp_residual(&sys, x)?;
    let (l, m) = (&sol.l, &sol.m);
    let lure_state = (a.transpose() * x + x * a + l.transpose() * l).norm();
    let lure_coupling = (c.transpose() - x * b - l.transpose() * m).norm();
    let lure_feedthrough = (d + d.transpose() - m.transpose() * m).norm();

    let h = StateSpace::new(a.clone(), b.clone(), l.clone(), m.clone())?;
    let fh = FrequencyResponse::new(&h)?;
    let fg = FrequencyResponse::new(&sys)?;
    let grid = FrequencyGrid::logarithmic(1e-3, 1e3, 20)?;
    let mut dev = 0.0f64;
    for &om in grid.points() {
        let s = C64::new(0.0, om);
        let (Ok(hv), Ok(phi)) = (fh.eval(s), fg.popov(om)) else {
            continue;
        };
        let diff = hv.adjoint() * &hv - &phi;
        dev = dev.max(crate::linalg::cnorm2(&diff) / crate::linalg::cnorm2(&phi).max(1.0));
    }
    Ok(KypReport {
        min_eig: min_sym_eig(&w),
        x_min_eig: min_sym_eig(x),
        scale: w.norm().max(1.0),
        lure_state,
        lure_coupling,
        lure_feedthrough,
        popov_deviation: dev,
    })
}

/// Solution of the dual Lur'e equations `-A Y - Y A^T = L_d L_d^T`,
/// `Y C^T - B = L_d M_d^T`, `D + D^T = M_d M_d^T` from a primal one:
/// `(Y, L_d, M_d) = (X^{-1}, X^{-1} L^T, M^T)`. Returned in primal form for
/// the transposed system `(A^T, C^T, B^T, D^T)`, i.e. with `l = -L_d^T`,
/// `m = M_d^T`. Minimal and maximal solutions swap roles.
pub fn dual_solution(sol: &KypSolution) -> Result<KypSolution> {
    let chol = sym(&sol.x).cholesky().ok_or(Error::XNotPd {
        min_eig: min_sym_eig(&sol.x),
    })?;
    let y = sym(&chol.inverse());
    // B - Y C^T = -L_d M_d^T, so the primal-form factors are (-L_d^T, M).
    let ld = &y * sol.l.transpose();
    Ok(KypSolution {
        l: -ld.transpose(),
        m: sol.m.clone(),
        x: y,
        epsilon: sol.epsilon,
        kind: match sol.kind {
            SolutionKind::Min => SolutionKind::Max,
            SolutionKind::Max => SolutionKind::Min,
            SolutionKind::Provided => SolutionKind::Provided,
        },
    })
}

/// `(A^T, C^T, B^T, D^T)`, realizing `G(s)^T`.
pub fn transposed_system(sys: &StateSpace) -> Result<StateSpace> {
    let s = sys.to_standard()?;
    StateSpace::new(
        s.a().transpose(),
        s.c().transpose(),
        s.b().transpose(),
        s.d().transpose(),
    )
}

/// pH representation built from the Lur'e factors of `sol`, in the
/// coordinates `x_hat = T x` with `X = T^T T` (so `Q = I`).
///
/// `J = Skew(T A T^{-1})` and the dissipation is taken from the factors,
/// `[[R, P], [P^T, S]] = [L T^{-1}, M]^T [L T^{-1}, M] / 2`, which is
/// positive semidefinite by construction. `-Sym(T A T^{-1})` would be the
/// same matrix up to the Lur'e residual, but it loses definiteness when `X`
/// is ill-conditioned. The realization differs from `sys` by the Lur'e
/// residual transformed with `T`.
pub fn ph_from_lure(sys: &StateSpace, sol: &KypSolution) -> Result<PhRepresentation> {
    let sys = sys.to_standard()?;
    let n = sys.n();
    if sol.x.shape() != (n, n) || sol.l.ncols() != n {
        return Err(Error::dims("KYP solution does not match the system"));
    }
    let t = sym(&sol.x)
        .cholesky()
        .ok_or(Error::XNotPd {
            min_eig: min_sym_eig(&sol.x),
        })?
        .l()
        .transpose();
    let tinv = t
        .clone()
        .solve_upper_triangular(&Matrix::identity(n, n))
        .ok_or(Error::XNotPd {
            min_eig: min_sym_eig(&sol.x),
        })?;
    let lt = &sol.l * &tinv;
    let p = lt.transpose() * &sol.m * 0.5;
    PhRepresentation::new(
        skew(&(&t * sys.a() * &tinv)),
        sym(&(lt.transpose() * &lt * 0.5)),
        Matrix::identity(n, n),
        &t * sys.b() + &p,
        p,
        sym(&(sol.m.transpose() * &sol.m * 0.5)),
        skew(sys.d()),
    )
}
