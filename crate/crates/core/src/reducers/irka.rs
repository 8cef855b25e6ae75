use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    biorthogonalize, canonical_terms, pole_residue, point_change, projection_rom, right_basis,
    tangential_basis_with, CVector, InterpolationData, ReducerConfig, ReductionResult,
};
use crate::error::{Error, Result};
use crate::linalg::{eig, orthonormalize, skew, sym, to_complex, Matrix, SchurForm, C64};
use crate::lti::{H2Distance, PhRepresentation, StateSpace};
use crate::par;

/// Iterative rational Krylov algorithm (two-sided, tangential).
///
/// Each restart starts from random biorthogonal bases, mirrors the poles of
/// the projected model and iterates `s_i <- -lambda_i`. Intermediate
/// iterates may be unstable; an unstable final model triggers a fresh
/// random start, up to `stability_retry` times.
/// The restart with the smallest H2 error is returned. Hitting `max_iters`
/// is not an error: the last iterate comes back with `converged = false`.
pub fn irka(sys: &StateSpace, r: usize, cfg: &ReducerConfig) -> Result<ReductionResult> {
    cfg.validate()?;
    let sys = sys.to_standard()?;
    check_order(sys.n(), r)?;
    let schur = SchurForm::new(sys.a())?;
    if !(schur.spectral_abscissa() < 0.0) {
        return Err(Error::NotStable {
            max_real: schur.spectral_abscissa(),
        });
    }
    let h2 = H2Distance::new(&sys)?;
    best_of_restarts(cfg, &h2, |rng| irka_attempt(&sys, &schur, r, cfg, rng))
}

/// pH-IRKA: one-sided tangential projection `V` with
/// `W = Q V (V^T Q V)^{-1}`, which keeps the port-Hamiltonian form.
///
/// New points and directions come from the eigenvalues and unit-norm left
/// eigenvectors `y_i` of the reduced state matrix, `b_i^T = y_i^H (G~ - P~)`.
pub fn ph_irka(ph: &PhRepresentation, r: usize, cfg: &ReducerConfig) -> Result<ReductionResult> {
    cfg.validate()?;
    ph.validate(1e-8)?;
    check_order(ph.dim(), r)?;
    let sys = ph.to_state_space()?;
    let schur = SchurForm::new(sys.a())?;
    if !(schur.spectral_abscissa() < 0.0) {
        return Err(Error::NotStable {
            max_real: schur.spectral_abscissa(),
        });
    }
    let h2 = H2Distance::new(&sys)?;
    best_of_restarts(cfg, &h2, |rng| ph_irka_attempt(ph, &sys, &schur, r, cfg, rng))
}

/// Reduced pH model `(W^T J W, W^T R W, V^T Q V, W^T G, W^T P, S, N)` with
/// `W = Q V (V^T Q V)^{-1}`; returns the model and `W`.
pub fn ph_projection(ph: &PhRepresentation, v: &Matrix) -> Result<(PhRepresentation, Matrix)> {
    if v.nrows() != ph.dim() {
        return Err(Error::dims("basis does not match the pH state dimension"));
    }
    let qv = &ph.q * v;
    let qr = sym(&(v.transpose() * &qv));
    let chol = qr.clone().cholesky().ok_or(Error::RankDeficientBasis)?;
    let w = qv * chol.inverse();
    let red = PhRepresentation {
        j: skew(&(w.transpose() * &ph.j * &w)),
        r: sym(&(w.transpose() * &ph.r * &w)),
        q: qr,
        g: w.transpose() * &ph.g,
        p: w.transpose() * &ph.p,
        s: ph.s.clone(),
        n: ph.n.clone(),
    };
    Ok((red, w))
}

fn check_order(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::InvalidConfig(format!("reduced order must be in 1..={n}, got {r}")));
    }
    Ok(())
}

/// Errors after which a fresh random start is worth trying.
fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotStable { .. }
            | Error::RankDeficientBasis
            | Error::SingularShift { .. }
            | Error::DefectiveSpectrum { .. }
            | Error::NotBiorthogonal { .. }
            | Error::XNotPd { .. }
    )
}

fn best_of_restarts<F>(cfg: &ReducerConfig, h2: &H2Distance, attempt: F) -> Result<ReductionResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ReductionResult> + Sync + Send,
{
    let runs = par::map_range(cfg.exec, cfg.restarts, |k| -> Result<ReductionResult> {
        let tries = cfg.stability_retry + 1;
        let mut last = None;
        for t in 0..tries {
            let seed = cfg
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((k as u64) << 32 | t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match attempt(&mut rng) {
                Ok(mut res) => {
                    res.h2_error = Some(h2.distance(&res.rom)?);
                    return Ok(res);
                }
                Err(e) if retryable(&e) => {
                    log::debug!("restart {k}, attempt {t}: {e}");
                    last = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        log::warn!("restart {k}: no stable iterate ({})", last.map(|e| e.to_string()).unwrap_or_default());
        Err(Error::NoStableRom { attempts: tries })
    });
    let mut best: Option<ReductionResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(res) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| res.h2_error.unwrap_or(f64::INFINITY) < b.h2_error.unwrap_or(f64::INFINITY));
                if better {
                    best = Some(res);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::NoStableRom { attempts: 0 }))
}

fn random_matrix(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, r, |_, _| StandardNormal.sample(rng))
}

/// Points of an arbitrary start model, reflected into the right half-plane.
fn initial_points(mut interp: InterpolationData) -> InterpolationData {
    for s in interp.points.iter_mut() {
        s.re = s.re.abs();
    }
    interp
}

fn is_stable(rom: &StateSpace) -> Result<()> {
    let a = rom.spectral_abscissa()?;
    if a < 0.0 {
        Ok(())
    } else {
        Err(Error::NotStable { max_real: a })
    }
}

fn irka_attempt(
    sys: &StateSpace,
    schur: &SchurForm,
    r: usize,
    cfg: &ReducerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ReductionResult> {
    let n = sys.n();
    let v0 = orthonormalize(&random_matrix(n, r, rng), 1e-10)?;
    let w0 = biorthogonalize(&v0, &orthonormalize(&random_matrix(n, r, rng), 1e-10)?)?;
    let rom0 = projection_rom(sys, &v0, &w0)?;
    let mut interp = initial_points(pole_residue(&rom0)?.mirrored()?);
    let mut history = Vec::new();
    let mut converged = false;
    let mut last = None;
    for _ in 0..cfg.max_iters {
        let (v, w) = tangential_basis_with(sys, schur, &interp)?;
        let rom = projection_rom(sys, &v, &w)?;
        let next = pole_residue(&rom)?.mirrored()?;
        let change = point_change(&interp.points, &next.points);
        history.push(change);
        last = Some((rom, v, w, std::mem::replace(&mut interp, next)));
        if change < cfg.conv_tol {
            converged = true;
            break;
        }
    }
    let (rom, v, w, used) = last.expect("max_iters > 0");
    is_stable(&rom)?;
    if !converged {
        log::warn!("IRKA stopped after {} iterations without convergence", history.len());
    }
    Ok(ReductionResult {
        rom,
        v: Some(v),
        w: Some(w),
        iterations: history.len(),
        converged,
        history,
        interpolation: Some(used),
        ph: None,
        h2_error: None,
    })
}

/// `(-lambda_i, b_i)` from the reduced pH model, `b_i^T = y_i^H B~` with unit
/// left eigenvectors; left directions are the matching `c_i = C~ x_i`.
fn ph_points(red: &PhRepresentation) -> Result<InterpolationData> {
    let sys = red.to_state_space()?;
    let e = eig(sys.a())?;
    if !(e.condition < super::EIGVEC_COND_LIMIT) {
        return Err(Error::DefectiveSpectrum { cond: e.condition });
    }
    let bc = to_complex(sys.b());
    let cc = to_complex(sys.c());
    let terms = (0..e.values.len())
        .map(|i| {
            let y = e.left.column(i);
            let y = y / C64::new(y.norm(), 0.0);
            let row = y.adjoint() * &bc;
            let b = CVector::from_iterator(row.len(), row.iter().copied());
            let col = &cc * e.right.column(i);
            let c = CVector::from_iterator(col.len(), col.iter().copied());
            (-e.values[i], b, c)
        })
        .collect();
    let (points, b, c) = canonical_terms(terms, e.condition)?;
    InterpolationData::new(points, b, c)
}

fn ph_irka_attempt(
    ph: &PhRepresentation,
    sys: &StateSpace,
    schur: &SchurForm,
    r: usize,
    cfg: &ReducerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ReductionResult> {
    let v0 = orthonormalize(&random_matrix(ph.dim(), r, rng), 1e-10)?;
    let (red0, _) = ph_projection(ph, &v0)?;
    let mut interp = initial_points(ph_points(&red0)?);
    let mut history = Vec::new();
    let mut converged = false;
    let mut last = None;
    for _ in 0..cfg.max_iters {
        let v = right_basis(sys, schur, &interp)?;
        let (red, w) = ph_projection(ph, &v)?;
        let rom = red.to_state_space()?;
        let next = ph_points(&red)?;
        let change = point_change(&interp.points, &next.points);
        history.push(change);
        last = Some((red, rom, v, w, std::mem::replace(&mut interp, next)));
        if change < cfg.conv_tol {
            converged = true;
            break;
        }
    }
    let (red, rom, v, w, used) = last.expect("max_iters > 0");
    is_stable(&rom)?;
    if !converged {
        log::warn!("pH-IRKA stopped after {} iterations without convergence", history.len());
    }
    Ok(ReductionResult {
        rom,
        v: Some(v),
        w: Some(w),
        iterations: history.len(),
        converged,
        history,
        interpolation: Some(used),
        ph: Some(red),
        h2_error: None,
    })
}
