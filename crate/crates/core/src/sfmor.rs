//! Passivity-preserving reduction through a spectral factor of the Popov
//! function.
//!
//! A certified KYP solution `(X, L, M)` of `G` gives the spectral factor
//! `H = (A, B, L, M)` with `H^T(-s) H(s) = Phi(s)`. Any stable reduced model
//! `(A~, B~, L~, M~)` of `H` is turned back into a passive model of `G`:
//! `D~ = M~^T M~ / 2 + Skew(D)`, `A~^T X~ + X~ A~ + L~^T L~ = 0`,
//! `C~ = B~^T X~ + M~^T L~`.

use crate::error::{Error, Result};
use crate::kyp::{kyp_residual, solve_kyp_extremal, transposed_system, verify_kyp, KypSolution, Which};
use crate::linalg::{
    min_sym_eig, skew, solve_lyapunov, solve_sylvester, sym, LinalgConfig, Matrix, SymmetricSolution,
};
use crate::lti::{
    balanced_truncation, dual_system, h2_error, hankel_singular_values, hinf_norm, is_passive_sampled,
    FrequencyGrid, PhRepresentation, StateSpace,
};
use crate::par::Execution;
use crate::reducers::{irka, projection_rom, ReducerConfig, ReductionResult};

/// The auxiliary system `(A, B, L, M)` of a KYP solution.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    pub system: StateSpace,
    pub source: KypSolution,
}

/// Builds `(A, B, L, M)` after checking the certificate of `sol`.
pub fn build_spectral_factor(sys: &StateSpace, sol: &KypSolution) -> Result<SpectralFactor> {
    let sys = sys.to_standard()?;
    let rep = verify_kyp(&sys, sol)?;
    if !rep.certified(sol.epsilon) {
        return Err(Error::UncertifiedSolution(format!(
            "lambda_min(W) = {:e}, lambda_min(X) = {:e}, Lur'e residuals {:e}/{:e}/{:e} at scale {:e}",
            rep.min_eig, rep.x_min_eig, rep.lure_state, rep.lure_coupling, rep.lure_feedthrough, rep.scale
        )));
    }
    let system = StateSpace::new(sys.a().clone(), sys.b().clone(), sol.l.clone(), sol.m.clone())?;
    Ok(SpectralFactor {
        system,
        source: sol.clone(),
    })
}

/// Reduces the spectral factor. Implementations must keep the feedthrough
/// and return a stable model.
pub trait InnerReducer: Sync {
    fn name(&self) -> &'static str;
    fn reduce(&self, spectral: &StateSpace, r: usize) -> Result<ReductionResult>;
}

/// IRKA on the spectral factor.
#[derive(Clone, Debug, Default)]
pub struct IrkaInner(pub ReducerConfig);

impl InnerReducer for IrkaInner {
    fn name(&self) -> &'static str {
        "irka"
    }

    fn reduce(&self, spectral: &StateSpace, r: usize) -> Result<ReductionResult> {
        irka(spectral, r, &self.0)
    }
}

/// Fixed Petrov-Galerkin projection `(W^T A V, W^T B, L V, M)`.
#[derive(Clone, Debug)]
pub struct ProjectionInner {
    pub v: Matrix,
    pub w: Matrix,
}

impl InnerReducer for ProjectionInner {
    fn name(&self) -> &'static str {
        "projection"
    }

    fn reduce(&self, spectral: &StateSpace, r: usize) -> Result<ReductionResult> {
        if self.v.ncols() != r {
            return Err(Error::dims(format!("projection has {} columns, order {r}", self.v.ncols())));
        }
        let rom = projection_rom(spectral, &self.v, &self.w)?;
        Ok(plain_result(rom, Some(self.v.clone()), Some(self.w.clone())))
    }
}

/// Square-root balanced truncation of the spectral factor.
#[derive(Clone, Copy, Debug, Default)]
pub struct BalancedInner;

impl InnerReducer for BalancedInner {
    fn name(&self) -> &'static str {
        "bt"
    }

    fn reduce(&self, spectral: &StateSpace, r: usize) -> Result<ReductionResult> {
        let bt = balanced_truncation(spectral, r)?;
        Ok(plain_result(bt.rom, Some(bt.v), Some(bt.w)))
    }
}

fn plain_result(rom: StateSpace, v: Option<Matrix>, w: Option<Matrix>) -> ReductionResult {
    ReductionResult {
        rom,
        v,
        w,
        iterations: 0,
        converged: true,
        history: Vec::new(),
        interpolation: None,
        ph: None,
        h2_error: None,
    }
}

/// Output of [`reduce_passive`].
#[derive(Clone, Debug)]
pub struct PassiveRomBundle {
    /// `(A~, B~, C~, D~)`
    pub rom: StateSpace,
    /// `(A~, B~, L~, M~)`
    pub rom_spectral: StateSpace,
    /// Solution of `A~^T X~ + X~ A~ + L~^T L~ = 0`.
    pub x_tilde: SymmetricSolution,
    /// `B^T (W X~ - X V)` when the inner reducer projects.
    pub correction: Option<Matrix>,
    /// pH form in coordinates where `X~ = I` (only when `X~ > 0`).
    pub ph: Option<PhRepresentation>,
    /// Right-hand side of the H2 bound, when computed.
    pub bound: Option<f64>,
    /// `lambda_min(W~(X~))` and its scale `max(1, ||W~(X~)||_F)`.
    pub kyp_min_eig: f64,
    pub kyp_scale: f64,
    pub inner: ReductionResult,
}

impl PassiveRomBundle {
    pub fn order(&self) -> usize {
        self.rom.n()
    }
}

/// Reduces `sys` to order `r` through the spectral factor of `sol`.
pub fn reduce_passive(
    sys: &StateSpace,
    sol: &KypSolution,
    r: usize,
    inner: &dyn InnerReducer,
) -> Result<PassiveRomBundle> {
    let sys = sys.to_standard()?;
    let factor = build_spectral_factor(&sys, sol)?;
    let red = inner.reduce(&factor.system, r)?;
    if !red.rom.is_stable()? {
        return Err(Error::InnerRomUnstable);
    }
    let gap = (red.rom.d() - &sol.m).norm();
    let (rom, x_tilde) = passive_rom_from_factor(&red.rom, sys.d())?;

    // With M~ = M the symmetric part of D is reproduced up to the
    // regularization of the certificate.
    let d_gap = (sym(rom.d()) - sym(sys.d())).norm();
    if gap <= 1e-12 * sol.m.norm().max(1.0) && d_gap > 1e-10 * sys.d().norm().max(1.0) + sol.epsilon {
        return Err(Error::FeedthroughMismatch { gap: d_gap });
    }

    let w = kyp_residual(&rom, &x_tilde.x)?;
    let kyp_scale = w.norm().max(1.0);
    let kyp_min_eig = min_sym_eig(&w);
    if kyp_min_eig < -1e-10 * kyp_scale {
        return Err(Error::NotPsd { min_eig: kyp_min_eig });
    }

    let correction = match (&red.v, &red.w) {
        (Some(v), Some(wm)) => Some(correction_term(&sys, sol, v, wm, &x_tilde.x)?),
        _ => None,
    };
    let ph = ph_realize(&rom, &x_tilde.x).ok();
    Ok(PassiveRomBundle {
        rom,
        rom_spectral: red.rom.clone(),
        x_tilde,
        correction,
        ph,
        bound: None,
        kyp_min_eig,
        kyp_scale,
        inner: red,
    })
}

/// Turns a stable reduced spectral factor `(A~, B~, L~, M~)` into the
/// passive model `(A~, B~, B~^T X~ + M~^T L~, M~^T M~ / 2 + Skew(D))`.
pub fn passive_rom_from_factor(rom_spectral: &StateSpace, d: &Matrix) -> Result<(StateSpace, SymmetricSolution)> {
    let (a, b, l, m) = (rom_spectral.a(), rom_spectral.b(), rom_spectral.c(), rom_spectral.d());
    if d.shape() != (m.ncols(), m.ncols()) {
        return Err(Error::dims(format!(
            "D is {:?}, spectral factor has {} inputs",
            d.shape(),
            m.ncols()
        )));
    }
    if rom_spectral.n() > 0 && !rom_spectral.is_stable()? {
        return Err(Error::InnerRomUnstable);
    }
    let x = solve_lyapunov(a, &(l.transpose() * l), &LinalgConfig::default())?;
    let c = b.transpose() * &x.x + m.transpose() * l;
    let dt = m.transpose() * m * 0.5 + skew(d);
    let rom = StateSpace::new(a.clone(), b.clone(), c, dt)?;
    Ok((rom, x))
}

/// `B^T (W X~ - X V)`; with a projection ROM, `C~ = C V + correction`.
pub fn correction_term(sys: &StateSpace, sol: &KypSolution, v: &Matrix, w: &Matrix, x_tilde: &Matrix) -> Result<Matrix> {
    let n = sys.n();
    if v.nrows() != n || w.shape() != v.shape() || x_tilde.shape() != (v.ncols(), v.ncols()) {
        return Err(Error::dims("projection data does not match the system"));
    }
    let b = sys.to_standard()?.b().clone();
    Ok(b.transpose() * (w * x_tilde - &sol.x * v))
}

/// Same as [`correction_term`] but taking the bases from a reduction result.
pub fn correction_from(sys: &StateSpace, sol: &KypSolution, red: &ReductionResult, x_tilde: &Matrix) -> Result<Matrix> {
    match (&red.v, &red.w) {
        (Some(v), Some(w)) => correction_term(sys, sol, v, w, x_tilde),
        _ => Err(Error::NoProjectionData),
    }
}

/// Solves `A^T Z + Z A~ + L^T L~ = 0` and returns
/// `||B~^T X~ - B^T Z||_F / max(||B~^T X~||_F, ||B^T Z||_F)`.
pub fn wilson_check(spectral: &StateSpace, rom_spectral: &StateSpace, x_tilde: &Matrix) -> Result<f64> {
    let cfg = LinalgConfig::default();
    let (a, b, l) = (spectral.a(), spectral.b(), spectral.c());
    let (ar, br, lr) = (rom_spectral.a(), rom_spectral.b(), rom_spectral.c());
    let z = solve_sylvester(&a.transpose(), ar, &(l.transpose() * lr), &cfg)?;
    let lhs = br.transpose() * x_tilde;
    let rhs = b.transpose() * z;
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

/// Components of the spectral-factor H2 bound.
#[derive(Clone, Copy, Debug)]
pub struct H2Bound {
    /// `(||H||_inf + ||H~||_inf) / sqrt(2)`
    pub c: f64,
    /// `||H - H~||_H2`
    pub spectral_error: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `||G - G~||_H2 <= c(H, H~) ||H - H~||_H2`, evaluated for the given
/// error of `G`.
pub fn h2_bound(h: &StateSpace, h_tilde: &StateSpace, g_err_h2: f64) -> Result<H2Bound> {
    let gap = (h.d() - h_tilde.d()).norm();
    if gap > 1e-10 * h.d().norm().max(1.0) {
        return Err(Error::FeedthroughMismatch { gap });
    }
    let c = (hinf_norm(h, 1e-8)? + hinf_norm(h_tilde, 1e-8)?) / std::f64::consts::SQRT_2;
    let spectral_error = h2_error(h, h_tilde)?;
    let rhs = c * spectral_error;
    Ok(H2Bound {
        c,
        spectral_error,
        rhs,
        holds: g_err_h2 <= rhs * (1.0 + 1e-8),
    })
}

/// pH realization of a bundle's ROM in coordinates where `X~ = I`.
pub fn ph_realize_rom(bundle: &PassiveRomBundle) -> Result<PhRepresentation> {
    ph_realize(&bundle.rom, &bundle.x_tilde.x)
}

fn ph_realize(rom: &StateSpace, x_tilde: &Matrix) -> Result<PhRepresentation> {
    let r = rom.n();
    // X~ = T^T T with T = chol^T.
    let chol = sym(x_tilde).cholesky().ok_or(Error::XNotPd {
        min_eig: min_sym_eig(x_tilde),
    })?;
    let t = chol.l().transpose();
    let tinv = t
        .clone()
        .solve_upper_triangular(&Matrix::identity(r, r))
        .ok_or(Error::XNotPd {
            min_eig: min_sym_eig(x_tilde),
        })?;
    let at = &t * rom.a() * &tinv;
    let bt = &t * rom.b();
    let ct = rom.c() * &tinv;
    let transformed = StateSpace::new(at.clone(), bt.clone(), ct.clone(), rom.d().clone())?;
    let w = kyp_residual(&transformed, &Matrix::identity(r, r))?;
    let lmin = min_sym_eig(&w);
    if lmin < -1e-8 * w.norm().max(1.0) {
        return Err(Error::NotPsd { min_eig: lmin });
    }
    Ok(PhRepresentation {
        j: skew(&at),
        r: -sym(&at),
        q: Matrix::identity(r, r),
        g: (ct.transpose() + &bt) * 0.5,
        p: (ct.transpose() - &bt) * 0.5,
        s: sym(rom.d()),
        n: skew(rom.d()),
    })
}

/// Hankel singular values of the spectral factors of several solutions.
#[derive(Clone, Debug)]
pub struct HankelOrdering {
    /// `sigmas[j][k]` is `sigma_k` of the spectral factor of solution `j`.
    pub sigmas: Vec<Vec<f64>>,
    /// Index of the reference solution (the first minimal one, else 0).
    pub reference: usize,
    /// `max over k and j of sigma_k(ref) - sigma_k(j)`, relative to the
    /// largest `sigma_1`.
    pub worst_violation: f64,
    /// `worst_violation <= 1e-7`.
    pub holds: bool,
}

/// Checks that the spectral factor of the minimal solution has the
/// smallest Hankel singular values.
pub fn hankel_ordering_check(sys: &StateSpace, sols: &[KypSolution], exec: Execution) -> Result<HankelOrdering> {
    if sols.is_empty() {
        return Err(Error::InvalidConfig("no KYP solutions given".into()));
    }
    let sys = sys.to_standard()?;
    let sigmas = crate::par::map(exec, sols, |sol| {
        let f = build_spectral_factor(&sys, sol)?;
        hankel_singular_values(&f.system)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reference = sols
        .iter()
        .position(|s| s.kind == crate::kyp::SolutionKind::Min)
        .unwrap_or(0);
    let s1 = sigmas.iter().filter_map(|s| s.first().copied()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut worst = f64::NEG_INFINITY;
    for (j, s) in sigmas.iter().enumerate() {
        if j == reference {
            continue;
        }
        for (a, b) in sigmas[reference].iter().zip(s) {
            worst = worst.max((a - b) / s1);
        }
    }
    if sigmas.len() == 1 {
        worst = 0.0;
    }
    Ok(HankelOrdering {
        sigmas,
        reference,
        worst_violation: worst,
        holds: worst <= 1e-7,
    })
}

/// Dual-route reduction.
///
/// The dual `(-A^T, -C^T, B^T, D^T)` realizes `G(-s)^T` and is antistable,
/// so it cannot be fed to a reducer directly. Reduction goes through the
/// transposed system `(A^T, C^T, B^T, D^T)`, which has the same Popov
/// function up to transposition: the spectral factor of its extremal
/// solution `which` is reduced and the ROM transposed back. `rom_spectral`
/// and `x_tilde` of the result refer to the transposed ROM; `rom` is in the
/// original input/output orientation and its dual is passive.
pub fn reduce_passive_dual(
    sys: &StateSpace,
    r: usize,
    which: Which,
    inner: &dyn InnerReducer,
) -> Result<PassiveRomBundle> {
    let sys = sys.to_standard()?;
    let dual = dual_system(&sys);
    let grid = FrequencyGrid::logarithmic(1e-3, 1e3, 200)?;
    let rep = is_passive_sampled(&dual, &grid, Execution::Sequential)?;
    if !rep.passive {
        return Err(Error::DualNotPassive {
            margin: rep.worst_margin,
        });
    }
    if which == Which::Both {
        return Err(Error::InvalidConfig("pick one extremal solution".into()));
    }
    let st = transposed_system(&sys)?;
    let ext = solve_kyp_extremal(&st, None, which)?;
    let sol = ext.min.or(ext.max).expect("requested");
    let mut bundle = reduce_passive(&st, &sol, r, inner)?;
    bundle.rom = transposed_system(&bundle.rom)?;
    bundle.correction = None;
    bundle.ph = None;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kyp::provided_solution;
    use crate::linalg::C64;
    use crate::lti::{minimality_rank, transfer_eval};

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    fn scalar() -> StateSpace {
        StateSpace::new(m(1, 1, &[-1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0])).unwrap()
    }

    fn example_factor() -> StateSpace {
        let s2 = 2f64.sqrt();
        StateSpace::new(
            m(2, 2, &[-1.0, 0.0, 2.0, -2.0]),
            m(2, 1, &[1.0, 0.0]),
            m(2, 2, &[s2, -s2, 0.0, s2]),
            m(2, 1, &[0.0, 0.0]),
        )
        .unwrap()
    }

    fn three_state() -> StateSpace {
        let a = m(3, 3, &[-1.0, 0.5, 0.0, -0.5, -2.0, 1.0, 0.0, -1.0, -3.0]);
        let b = m(3, 1, &[1.0, 0.0, 1.0]);
        StateSpace::new(a, b.clone(), b.transpose(), m(1, 1, &[0.2])).unwrap()
    }

    #[test]
    fn scalar_spectral_factor() {
        let ext = solve_kyp_extremal(&scalar(), None, Which::Min).unwrap();
        let f = build_spectral_factor(&scalar(), ext.min.as_ref().unwrap()).unwrap();
        assert!((f.system.c()[(0, 0)].abs() - (2.0 - 2f64.sqrt())).abs() < 1e-10);
        assert!((f.system.d()[(0, 0)].abs() - 2f64.sqrt()).abs() < 1e-10);
        for w in [0.0, 1.0, 10.0] {
            let h = transfer_eval(&f.system, C64::new(0.0, w)).unwrap();
            let g = transfer_eval(&scalar(), C64::new(0.0, w)).unwrap();
            let phi = g[(0, 0)] + g[(0, 0)].conj();
            assert!((h[(0, 0)].norm_sqr() - phi.re).abs() < 1e-10);
        }
    }

    #[test]
    fn uncertified_solution_is_rejected() {
        let mut sol = solve_kyp_extremal(&scalar(), None, Which::Min).unwrap().min.unwrap();
        sol.l[(0, 0)] += 0.1;
        assert!(matches!(build_spectral_factor(&scalar(), &sol), Err(Error::UncertifiedSolution(_))));
    }

    #[test]
    fn example_reduced_factor() {
        let (rom, x) = passive_rom_from_factor(&example_factor(), &m(1, 1, &[0.0])).unwrap();
        assert!((&x.x - Matrix::identity(2, 2)).amax() < 1e-12);
        assert!((rom.c() - m(1, 2, &[1.0, 0.0])).amax() < 1e-12);
        assert_eq!(rom.d()[(0, 0)], 0.0);
        let (_, obs) = minimality_rank(&rom, 1e-10).unwrap();
        assert_eq!(obs, 1);
        let ph = ph_realize(&rom, &x.x).unwrap();
        assert!((&ph.j - skew(rom.a())).amax() < 1e-12);
        assert!((&ph.r + sym(rom.a())).amax() < 1e-12);
    }

    #[test]
    fn full_order_identity_round_trip() {
        let sys = three_state();
        let ext = solve_kyp_extremal(&sys, None, Which::Both).unwrap();
        for sol in [ext.min.unwrap(), ext.max.unwrap()] {
            let id = Matrix::identity(3, 3);
            let inner = ProjectionInner { v: id.clone(), w: id };
            let b = reduce_passive(&sys, &sol, 3, &inner).unwrap();
            assert!((b.rom.c() - sys.c()).norm() < 1e-8 * sys.c().norm());
            assert!((b.rom.d() - sys.d()).norm() < 1e-8);
            assert!(b.correction.unwrap().norm() < 1e-8);
            let wres = wilson_check(&b.inner.rom, &b.rom_spectral, &b.x_tilde.x).unwrap();
            assert!(wres < 1e-10, "{wres}");
        }
    }

    #[test]
    fn invariant_subspace_correction_is_wilson_gap() {
        // span(e1, e2) is A-invariant, so Z = X V and the correction equals
        // B~^T X~ - B^T Z.
        let a = m(3, 3, &[-1.0, 0.3, 0.2, -0.3, -2.0, 0.1, 0.0, 0.0, -4.0]);
        let b = m(3, 1, &[1.0, 0.5, 1.0]);
        let sys = StateSpace::new(a.clone(), b.clone(), b.transpose(), m(1, 1, &[0.5])).unwrap();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let v = m(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let inner = ProjectionInner { v: v.clone(), w: v.clone() };
        let bd = reduce_passive(&sys, &sol, 2, &inner).unwrap();
        let z = solve_sylvester(
            &a.transpose(),
            bd.rom_spectral.a(),
            &(sol.l.transpose() * bd.rom_spectral.c()),
            &LinalgConfig::default(),
        )
        .unwrap();
        assert!((&z - &sol.x * &v).norm() < 1e-10);
        let gap = bd.rom_spectral.b().transpose() * &bd.x_tilde.x - b.transpose() * z;
        assert!((bd.correction.as_ref().unwrap() - gap).norm() < 1e-10);
        assert!((bd.rom.c() - sys.c() * &v - bd.correction.unwrap()).norm() < 1e-10);
    }

    #[test]
    fn decoupled_subsystem_has_no_correction() {
        let s1 = three_state();
        let s2 = StateSpace::new(m(1, 1, &[-5.0]), m(1, 1, &[2.0]), m(1, 1, &[2.0]), m(1, 1, &[0.3])).unwrap();
        let sys = s1.direct_sum(&s2).unwrap();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let v = Matrix::identity(4, 3);
        let inner = ProjectionInner { v: v.clone(), w: v.clone() };
        let bd = reduce_passive(&sys, &sol, 3, &inner).unwrap();
        assert!(bd.correction.unwrap().norm() < 1e-10);
        assert!((bd.rom.c() - sys.c() * &v).norm() < 1e-10);
    }

    #[test]
    fn irka_inner_is_passive_and_bounded() {
        let sys = three_state();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let inner = IrkaInner(ReducerConfig {
            exec: Execution::Sequential,
            ..Default::default()
        });
        let b = reduce_passive(&sys, &sol, 2, &inner).unwrap();
        assert!(b.rom.is_stable().unwrap());
        assert!(b.kyp_min_eig >= -1e-10 * b.kyp_scale);
        let grid = FrequencyGrid::logarithmic(1e-3, 1e3, 200).unwrap();
        assert!(is_passive_sampled(&b.rom, &grid, Execution::Sequential).unwrap().passive);
        let g_err = h2_error(&sys, &b.rom).unwrap();
        let f = build_spectral_factor(&sys, &sol).unwrap();
        let bound = h2_bound(&f.system, &b.rom_spectral, g_err).unwrap();
        assert!(bound.holds, "{g_err} > {}", bound.rhs);
        if b.inner.converged {
            let wres = wilson_check(&f.system, &b.rom_spectral, &b.x_tilde.x).unwrap();
            assert!(wres < 1e-4, "{wres}");
        }
        let ph = ph_realize_rom(&b).unwrap();
        assert!(ph.check().is_valid(1e-8));
        let back = ph.to_state_space().unwrap();
        let s = C64::new(1.0, 1.0);
        let d = transfer_eval(&back, s).unwrap() - transfer_eval(&b.rom, s).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn equal_factors_bound_trivially() {
        let sys = three_state();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let f = build_spectral_factor(&sys, &sol).unwrap();
        let bound = h2_bound(&f.system, &f.system, 0.0).unwrap();
        assert!(bound.holds && bound.spectral_error < 1e-12);
        let other = f.system.with_feedthrough(f.system.d() * 2.0).unwrap();
        assert!(matches!(h2_bound(&f.system, &other, 0.0), Err(Error::FeedthroughMismatch { .. })));
    }

    #[test]
    fn non_optimal_projection_fails_wilson() {
        let sys = three_state();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let v = m(3, 1, &[0.0, 1.0, 0.0]);
        let inner = ProjectionInner { v: v.clone(), w: v };
        let b = reduce_passive(&sys, &sol, 1, &inner).unwrap();
        let f = build_spectral_factor(&sys, &sol).unwrap();
        let wres = wilson_check(&f.system, &b.rom_spectral, &b.x_tilde.x).unwrap();
        assert!(wres > 1e-2, "{wres}");
    }

    #[test]
    fn scalar_ordering() {
        let ext = solve_kyp_extremal(&scalar(), None, Which::Both).unwrap();
        let (lo, hi) = (ext.min.unwrap(), ext.max.unwrap());
        let t = hankel_ordering_check(&scalar(), &[lo.clone(), hi.clone()], Execution::Sequential).unwrap();
        assert!(t.holds);
        // sigma_1 = sqrt(P Q_H) with P = 1/2 and Q_H = l^2 / 2.
        for (j, sol) in [lo.clone(), hi].iter().enumerate() {
            let expect = 0.5 * sol.l[(0, 0)].abs();
            assert!((t.sigmas[j][0] - expect).abs() < 1e-12);
        }
        let same = hankel_ordering_check(&scalar(), &[lo.clone(), lo], Execution::Sequential).unwrap();
        assert!(same.worst_violation.abs() < 1e-14);
    }

    #[test]
    fn provided_solution_factor() {
        // pH system with Q = I: X = I solves the KYP inequality.
        let j = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let r = m(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let b = m(2, 1, &[1.0, 1.0]);
        let sys = StateSpace::new(&j - &r, b.clone(), b.transpose(), m(1, 1, &[0.0])).unwrap();
        let sol = provided_solution(&sys, &Matrix::identity(2, 2), 1e-12).unwrap();
        let f = build_spectral_factor(&sys, &sol).unwrap();
        let w = kyp_residual(&sys, &sol.x).unwrap();
        let lm = crate::linalg::hcat(f.system.c(), f.system.d());
        assert!((lm.transpose() * lm - w).norm() < 1e-12);
    }

    #[test]
    fn dual_route_matches_primal_on_symmetric_system() {
        let a = m(3, 3, &[-2.0, 0.5, 0.0, 0.5, -1.5, 0.3, 0.0, 0.3, -1.0]);
        let b = m(3, 1, &[1.0, 0.2, 0.5]);
        let sys = StateSpace::new(a, b.clone(), b.transpose(), m(1, 1, &[0.1])).unwrap();
        let sol = solve_kyp_extremal(&sys, None, Which::Min).unwrap().min.unwrap();
        let bt = BalancedInner;
        let p = reduce_passive(&sys, &sol, 2, &bt).unwrap();
        let d = reduce_passive_dual(&sys, 2, Which::Min, &bt).unwrap();
        for w in [0.1, 1.0, 10.0] {
            let s = C64::new(0.0, w);
            let e = transfer_eval(&p.rom, s).unwrap() - transfer_eval(&d.rom, s).unwrap();
            assert!(e.norm() < 1e-8, "{}", e.norm());
        }
        let grid = FrequencyGrid::logarithmic(1e-3, 1e3, 100).unwrap();
        assert!(is_passive_sampled(&dual_system(&d.rom), &grid, Execution::Sequential).unwrap().passive);
    }
}
