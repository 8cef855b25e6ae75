use super::{FrequencyGrid, FrequencyResponse, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{
    cnorm2, hammarling_triangular, lyapunov_factor, lyapunov_schur, norm2, svd, to_complex,
    LinalgConfig, LyapunovSide, Matrix, SchurForm, SymmetricSolution, C64,
};
use crate::par::{self, Execution};

/// Above this state dimension `hinf_norm` switches from Hamiltonian
/// iterations to a refined frequency sweep.
pub const HINF_DENSE_LIMIT: usize = 250;

fn stable_schur(sys: &StateSpace, cfg: &LinalgConfig) -> Result<(StateSpace, SchurForm)> {
    let sys = sys.to_standard()?;
    let s = SchurForm::new(sys.a())?;
    let abscissa = s.spectral_abscissa();
    if sys.n() > 0 && abscissa >= -cfg.stab_tol {
        return Err(Error::NotStable { max_real: abscissa });
    }
    Ok((sys, s))
}

/// Controllability and observability Gramians by Bartels-Stewart.
pub fn gramians(sys: &StateSpace) -> Result<(SymmetricSolution, SymmetricSolution)> {
    let cfg = LinalgConfig::default();
    let (sys, s) = stable_schur(sys, &cfg)?;
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let bb = b * b.transpose();
    let cc = c.transpose() * c;
    let p = lyapunov_schur(&s, LyapunovSide::Controllability, &bb, &cfg)?;
    let q = lyapunov_schur(&s, LyapunovSide::Observability, &cc, &cfg)?;
    let rp = (a * &p + &p * a.transpose() + bb).norm();
    let rq = (a.transpose() * &q + &q * a + cc).norm();
    Ok((
        SymmetricSolution {
            x: p,
            residual_norm: rp,
        },
        SymmetricSolution {
            x: q,
            residual_norm: rq,
        },
    ))
}

/// Triangular Gramian factors `(Rc, Ro)` with `P = Rc^T Rc`, `Q = Ro^T Ro`.
pub fn gramian_factors(sys: &StateSpace) -> Result<(Matrix, Matrix)> {
    let (sys, s) = stable_schur(sys, &LinalgConfig::default())?;
    let rc = lyapunov_factor(&s.transposed(), &sys.b().transpose())?;
    let ro = lyapunov_factor(&s, sys.c())?;
    Ok((rc, ro))
}

/// Hankel singular values, descending, length `n`.
pub fn hankel_singular_values(sys: &StateSpace) -> Result<Vec<f64>> {
    let n = sys.n();
    let (rc, ro) = gramian_factors(sys)?;
    let mut sigma = svd(&(ro * rc.transpose()))?.sigma;
    sigma.resize(n, 0.0);
    Ok(sigma)
}

/// H2 norm of the strictly proper part, `||U Z^H B||_F` where `U^H U` is
/// the observability Gramian in Schur coordinates.
fn h2_strictly_proper(s: &SchurForm, b: &Matrix, c: &Matrix) -> Result<f64> {
    if s.dim() == 0 {
        return Ok(0.0);
    }
    let u = hammarling_triangular(s, &(to_complex(c) * s.z()))?;
    Ok((u * (s.z().adjoint() * to_complex(b))).norm())
}

/// H2 norm (`1/(2 pi)` convention) of a strictly proper stable system.
pub fn h2_norm(sys: &StateSpace) -> Result<f64> {
    let feed = sys.d().norm();
    if feed > 1e-14 * sys.scale() {
        return Err(Error::Infinite { feedthrough: feed });
    }
    H2Distance::new(sys)?.norm()
}

/// `||G1 - G2||_H2` of the strictly proper parts. Feedthrough terms are
/// ignored; compare them separately when they matter.
pub fn h2_error(g1: &StateSpace, g2: &StateSpace) -> Result<f64> {
    H2Distance::new(g1)?.distance(g2)
}

/// H2 distances from one fixed (possibly large) system, reusing its Schur
/// form for every comparison.
///
/// The error norm is computed from a Hammarling factor of the error
/// system's Gramian, so small errors are not lost to cancellation the way
/// they are in `tr(C P C^T) - 2 tr(...) + ...` formulas.
#[derive(Clone, Debug)]
pub struct H2Distance {
    sys: StateSpace,
    schur: SchurForm,
}

impl H2Distance {
    pub fn new(sys: &StateSpace) -> Result<Self> {
        let (sys, schur) = stable_schur(sys, &LinalgConfig::default())?;
        Ok(H2Distance { sys, schur })
    }

    pub fn system(&self) -> &StateSpace {
        &self.sys
    }

    pub fn schur(&self) -> &SchurForm {
        &self.schur
    }

    pub fn norm(&self) -> Result<f64> {
        h2_strictly_proper(&self.schur, self.sys.b(), self.sys.c())
    }

    pub fn distance(&self, other: &StateSpace) -> Result<f64> {
        let (other, so) = stable_schur(other, &LinalgConfig::default())?;
        if other.inputs() != self.sys.inputs() || other.outputs() != self.sys.outputs() {
            return Err(Error::dims("systems have different input/output sizes"));
        }
        let s = SchurForm::block_diag(&self.schur, &so);
        let b = crate::linalg::vcat(self.sys.b(), other.b());
        let c = crate::linalg::hcat(self.sys.c(), &(-other.c()));
        h2_strictly_proper(&s, &b, &c)
    }
}

fn sigma_max(g: &crate::linalg::CMatrix) -> f64 {
    cnorm2(g)
}

/// Largest `sigma_max(G(iw))` over a grid; poles on the grid are skipped.
fn grid_peak(fr: &FrequencyResponse, points: &[f64], exec: Execution) -> (f64, f64) {
    let vals = par::map(exec, points, |&w| {
        fr.eval(C64::new(0.0, w)).map(|g| sigma_max(&g)).unwrap_or(0.0)
    });
    vals.iter()
        .zip(points)
        .fold((0.0, 0.0), |(m, wm), (&v, &w)| if v > m { (v, w) } else { (m, wm) })
}

/// H-infinity norm within relative tolerance `rel_tol`.
///
/// Small systems: a frequency sweep gives a lower bound, then the
/// imaginary-axis eigenvalues of the Hamiltonian at `gamma = (1 + rel_tol)
/// lb` either certify `gamma` as an upper bound or supply crossing
/// frequencies whose midpoints raise the lower bound. The returned value
/// is the certified upper bound. Above [`HINF_DENSE_LIMIT`] states the
/// refined sweep of [`hinf_norm_sampled`] is returned instead.
pub fn hinf_norm(sys: &StateSpace, rel_tol: f64) -> Result<f64> {
    let (sys, s) = stable_schur(sys, &LinalgConfig::default())?;
    let dnorm = norm2(sys.d());
    if sys.n() == 0 {
        return Ok(dnorm);
    }
    let fr = FrequencyResponse::with_schur(&sys, s);
    if sys.n() > HINF_DENSE_LIMIT {
        return Ok(sampled_peak(&fr, &FrequencyGrid::default(), Execution::default()));
    }
    let mut pts = vec![0.0];
    pts.extend_from_slice(FrequencyGrid::default().points());
    let (peak, _) = grid_peak(&fr, &pts, Execution::default());
    let mut lb = peak.max(dnorm);
    if lb == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..100 {
        let gamma = (1.0 + rel_tol) * lb;
        let freqs = imaginary_crossings(&sys, gamma)?;
        if freqs.is_empty() {
            return Ok(gamma);
        }
        let mut cands = freqs.clone();
        cands.extend(freqs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let (next, _) = grid_peak(&fr, &cands, Execution::Sequential);
        if next <= lb {
            log::debug!("hinf iteration stagnated at lb = {lb:e}");
            return Ok(gamma);
        }
        lb = next;
    }
    Err(Error::NoConvergence("H-infinity iteration".into()))
}

/// Nonnegative frequencies `w` with `gamma` a singular value of `G(iw)`.
fn imaginary_crossings(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let n = sys.n();
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let (p, m) = d.shape();
    let g2 = gamma * gamma;
    let r = d.transpose() * d - Matrix::identity(m, m) * g2;
    let s = d * d.transpose() - Matrix::identity(p, p) * g2;
    let rinv = crate::linalg::inverse(&r).ok_or(Error::SingularShift { re: 0.0, im: 0.0 })?;
    let sinv = crate::linalg::inverse(&s).ok_or(Error::SingularShift { re: 0.0, im: 0.0 })?;
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n))
        .copy_from(&(a - b * &rinv * d.transpose() * c));
    h.view_mut((0, n), (n, n))
        .copy_from(&(-(b * &rinv * b.transpose()) * gamma));
    h.view_mut((n, 0), (n, n))
        .copy_from(&(c.transpose() * &sinv * c * gamma));
    h.view_mut((n, n), (n, n))
        .copy_from(&(-a.transpose() + c.transpose() * d * &rinv * b.transpose()));
    let tol = 1e-8 * h.norm().max(1.0);
    let mut w: Vec<f64> = SchurForm::new(&h)?
        .eigenvalues()
        .into_iter()
        .filter(|z| z.re.abs() <= tol && z.im >= 0.0)
        .map(|z| z.im)
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(w)
}

/// Frequency-sweep estimate of the H-infinity norm: grid maximum (plus
/// `w = 0` and `w = inf`) refined by golden-section search around the best
/// grid points. A lower bound, not a certificate.
pub fn hinf_norm_sampled(sys: &StateSpace, grid: &FrequencyGrid) -> Result<f64> {
    let (sys, s) = stable_schur(sys, &LinalgConfig::default())?;
    if sys.n() == 0 {
        return Ok(norm2(sys.d()));
    }
    let fr = FrequencyResponse::with_schur(&sys, s);
    Ok(sampled_peak(&fr, grid, Execution::default()))
}

fn sampled_peak(fr: &FrequencyResponse, grid: &FrequencyGrid, exec: Execution) -> f64 {
    let pts = grid.points();
    let vals = par::map(exec, pts, |&w| {
        fr.eval(C64::new(0.0, w)).map(|g| sigma_max(&g)).unwrap_or(0.0)
    });
    let at = |w: f64| fr.eval(C64::new(0.0, w)).map(|g| sigma_max(&g)).unwrap_or(0.0);
    let mut best = vals.iter().cloned().fold(at(0.0), f64::max);
    best = best.max(cnorm2(&fr.eval(C64::new(0.0, 1e12)).unwrap_or_else(|_| {
        crate::linalg::CMatrix::zeros(0, 0)
    })));
    // Local maxima in descending order.
    let mut peaks: Vec<usize> = (0..pts.len())
        .filter(|&i| {
            (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == pts.len() || vals[i] >= vals[i + 1])
        })
        .collect();
    peaks.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    peaks.truncate(3);
    let refined = par::map(exec, &peaks, |&i| {
        let lo = pts[i.saturating_sub(1)];
        let hi = pts[(i + 1).min(pts.len() - 1)];
        golden_max(|w| at(w), lo, hi, 60)
    });
    refined.into_iter().fold(best, f64::max)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> f64 {
    let log = lo > 0.0;
    let (mut a, mut b) = if log { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let map = |x: f64| if log { x.exp() } else { x };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(map(x1));
    let mut f2 = f(map(x2));
    let mut best = f1.max(f2);
    for _ in 0..iters {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(map(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(map(x2));
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// Outcome of a sampled positive-realness check.
#[derive(Clone, Debug)]
pub struct PassivityReport {
    pub passive: bool,
    /// `min over the grid of lambda_min(Phi(iw))`.
    pub worst_margin: f64,
    pub worst_frequency: f64,
    /// `max(1, max over the grid of ||Phi(iw)||_2)`.
    pub scale: f64,
    /// Grid frequencies skipped because `iw` is (numerically) a pole.
    pub skipped: Vec<f64>,
}

/// Sampled Popov check: passive when `worst_margin >= -1e-8 * scale`.
/// Necessary, not sufficient.
pub fn is_passive_sampled(
    sys: &StateSpace,
    grid: &FrequencyGrid,
    exec: Execution,
) -> Result<PassivityReport> {
    let sys = sys.to_standard()?;
    let fr = FrequencyResponse::new(&sys)?;
    let pts = grid.points();
    let evals = par::map(exec, pts, |&w| {
        fr.popov(w).ok().map(|phi| {
            let h = (&phi + phi.adjoint()) * C64::new(0.5, 0.0);
            let ev = nalgebra::SymmetricEigen::new(h).eigenvalues;
            (ev.min(), ev.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        })
    });
    let mut worst = f64::INFINITY;
    let mut worst_w = f64::NAN;
    let mut scale = 1.0f64;
    let mut skipped = Vec::new();
    for (e, &w) in evals.iter().zip(pts) {
        match e {
            Some((lo, nrm)) => {
                scale = scale.max(*nrm);
                if *lo < worst {
                    worst = *lo;
                    worst_w = w;
                }
            }
            None => skipped.push(w),
        }
    }
    Ok(PassivityReport {
        passive: worst >= -1e-8 * scale,
        worst_margin: worst,
        worst_frequency: worst_w,
        scale,
        skipped,
    })
}
