//! Bounded-real (contractive) systems, reduced through the Moebius map
//! `G = (I - Gb)^{-1} (I + Gb)` onto a positive-real system.

use crate::error::{Error, Result};
use crate::kyp::{solve_kyp_extremal, Which};
use crate::linalg::{inverse, min_herm_eig, CMatrix, Matrix, C64};
use crate::lti::{h2_error, hinf_norm, FrequencyGrid, FrequencyResponse, StateSpace};
use crate::par::{self, Execution};
use crate::reducers::ReducerConfig;
use crate::sfmor::{reduce_passive, IrkaInner, PassiveRomBundle};

/// Largest accepted condition number of `I - D` (resp. `I + D`).
const FEEDTHROUGH_COND_LIMIT: f64 = 1e12;

/// A system with `Psi(iw) = I - G(iw)^H G(iw) >= 0` on the sampling grid.
#[derive(Clone, Debug)]
pub struct BoundedRealSystem {
    system: StateSpace,
}

impl BoundedRealSystem {
    /// Checks the sampled bounded-real margin on the default grid
    /// (200 logarithmic points in `[1e-3, 1e3]` plus `w = 0`).
    pub fn new(system: StateSpace) -> Result<Self> {
        let margin = bounded_real_margin(&system, &default_grid(), Execution::Sequential)?;
        if margin < -1e-8 {
            return Err(Error::NotPsd { min_eig: margin });
        }
        Ok(BoundedRealSystem { system })
    }

    pub fn system(&self) -> &StateSpace {
        &self.system
    }

    pub fn into_inner(self) -> StateSpace {
        self.system
    }
}

fn default_grid() -> FrequencyGrid {
    let mut pts = vec![0.0];
    pts.extend_from_slice(FrequencyGrid::logarithmic(1e-3, 1e3, 200).expect("valid grid").points());
    FrequencyGrid::from_points(pts).expect("valid grid")
}

/// `min over the grid of lambda_min(I - G(iw)^H G(iw))`.
pub fn bounded_real_margin(sys: &StateSpace, grid: &FrequencyGrid, exec: Execution) -> Result<f64> {
    let sys = sys.to_standard()?;
    let fr = FrequencyResponse::new(&sys)?;
    let m = sys.inputs();
    let vals = par::map(exec, grid.points(), |&w| {
        fr.eval(C64::new(0.0, w)).map(|g| {
            let psi = CMatrix::identity(sys.outputs().max(m), m) - g.adjoint() * &g;
            min_herm_eig(&psi)
        })
    });
    let mut worst = f64::INFINITY;
    for v in vals {
        worst = worst.min(v?);
    }
    Ok(worst)
}

fn checked_inverse(d: &Matrix) -> Result<Matrix> {
    let sv = d.clone().svd(false, false).singular_values;
    let (hi, lo) = (sv.max(), sv.min());
    if d.nrows() > 0 && !(lo > 0.0 && hi / lo < FEEDTHROUGH_COND_LIMIT) {
        return Err(Error::FeedthroughSingular);
    }
    inverse(d).ok_or(Error::FeedthroughSingular)
}

fn square_io(sys: &StateSpace) -> Result<usize> {
    let m = sys.inputs();
    if sys.outputs() != m {
        return Err(Error::dims("Moebius map needs as many outputs as inputs"));
    }
    Ok(m)
}

/// `(A + B D1^{-1} C, B D1^{-1}, 2 D1^{-1} C, 2 D1^{-1} - I)` with
/// `D1 = I - D`, realizing `(I - Gb)^{-1} (I + Gb)`.
///
/// Fails with `FeedthroughSingular` when `I - D` is (nearly) singular or
/// `I - Gb(iw)` is singular on the default grid.
pub fn moebius_to_positive_real(br: &BoundedRealSystem) -> Result<StateSpace> {
    let s = br.system.to_standard()?;
    let m = square_io(&s)?;
    let d1inv = checked_inverse(&(Matrix::identity(m, m) - s.d()))?;
    let fr = FrequencyResponse::new(&s)?;
    for &w in default_grid().points() {
        if let Ok(g) = fr.eval(C64::new(0.0, w)) {
            let sv = (CMatrix::identity(m, m) - g).svd(false, false).singular_values;
            if sv.min() <= 1e-12 * sv.max().max(1.0) {
                return Err(Error::FeedthroughSingular);
            }
        }
    }
    let bd = s.b() * &d1inv;
    StateSpace::new(
        s.a() + &bd * s.c(),
        bd,
        &d1inv * s.c() * 2.0,
        &d1inv * 2.0 - Matrix::identity(m, m),
    )
}

/// `(A - B D2^{-1} C, B D2^{-1}, 2 D2^{-1} C, I - 2 D2^{-1})` with
/// `D2 = I + D`, realizing `(G - I)(G + I)^{-1}`. No contractivity check
/// beyond what the caller does.
pub fn moebius_inverse(pr: &StateSpace) -> Result<BoundedRealSystem> {
    let s = pr.to_standard()?;
    let m = square_io(&s)?;
    let d2inv = checked_inverse(&(Matrix::identity(m, m) + s.d()))?;
    let bd = s.b() * &d2inv;
    let system = StateSpace::new(
        s.a() - &bd * s.c(),
        bd,
        &d2inv * s.c() * 2.0,
        Matrix::identity(m, m) - &d2inv * 2.0,
    )?;
    Ok(BoundedRealSystem { system })
}

/// Result of [`reduce_contractive`].
#[derive(Clone, Debug)]
pub struct ContractiveRom {
    pub rom: BoundedRealSystem,
    /// `||I - Gb^||_inf ||G - G^||_H2 ||I - Gb||_inf / 2`; infinite when the
    /// positive-real error has a feedthrough part.
    pub bound: f64,
    /// `||Gb - Gb^||_H2`
    pub error: f64,
    /// `||G - G^||_H2` of the positive-real pair.
    pub pr_error: f64,
    /// Largest relative deviation from
    /// `Gb - Gb^ = (I - Gb^)(G - G^)(I - Gb) / 2` over 10 sample points.
    pub identity_residual: f64,
    /// Sampled bounded-real margin of the ROM.
    pub margin: f64,
    pub passive: PassiveRomBundle,
}

/// Moebius map, spectral-factor reduction with `X_min` and IRKA, inverse
/// Moebius map.
pub fn reduce_contractive(br: &BoundedRealSystem, r: usize, cfg: &ReducerConfig) -> Result<ContractiveRom> {
    let g = moebius_to_positive_real(br)?;
    let sol = solve_kyp_extremal(&g, None, Which::Min)?.min.expect("requested");
    let bundle = reduce_passive(&g, &sol, r, &IrkaInner(cfg.clone()))?;
    let g_hat = &bundle.rom;
    let rom = moebius_inverse(g_hat)?;
    let margin = bounded_real_margin(rom.system(), &default_grid(), cfg.exec)?;
    if margin < -1e-8 {
        return Err(Error::NotPsd { min_eig: margin });
    }

    let gb = br.system.to_standard()?;
    let m = gb.inputs();
    let error = h2_error(&gb, rom.system())?;
    let pr_error = h2_error(&g, g_hat)?;
    let finite = (g.d() - g_hat.d()).norm() <= 1e-10 * g.d().norm().max(1.0);
    let bound = if finite {
        let ident = StateSpace::static_gain(Matrix::identity(m, m));
        let left = hinf_norm(&ident.difference(rom.system())?, 1e-8)?;
        let right = hinf_norm(&ident.difference(&gb)?, 1e-8)?;
        0.5 * left * pr_error * right
    } else {
        f64::INFINITY
    };

    let identity_residual = error_identity_residual(&gb, rom.system(), &g, g_hat)?;
    Ok(ContractiveRom {
        rom,
        bound,
        error,
        pr_error,
        identity_residual,
        margin,
        passive: bundle,
    })
}

/// Checks `Gb - Gb^ = (I - Gb^)(G - G^)(I - Gb) / 2` at 10 points of the
/// imaginary axis and returns the worst relative deviation.
pub fn error_identity_residual(gb: &StateSpace, gb_hat: &StateSpace, g: &StateSpace, g_hat: &StateSpace) -> Result<f64> {
    let m = gb.inputs();
    let id = CMatrix::identity(m, m);
    let f = [gb, gb_hat, g, g_hat]
        .iter()
        .map(|s| FrequencyResponse::new(s))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for w in FrequencyGrid::logarithmic(1e-2, 1e2, 10)?.points() {
        let s = C64::new(0.0, *w);
        let v = f.iter().map(|x| x.eval(s)).collect::<Result<Vec<_>>>()?;
        let lhs = &v[0] - &v[1];
        let rhs = (&id - &v[1]) * (&v[2] - &v[3]) * (&id - &v[0]) * C64::new(0.5, 0.0);
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}
