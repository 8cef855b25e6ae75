//! Projection-based reference reducers: IRKA, pH-IRKA and positive-real
//! balanced truncation, plus the interpolation machinery they share.

mod irka;
mod prbt;

pub use irka::{irka, ph_irka, ph_projection};
pub use prbt::prbt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{eig, orthonormalize, to_complex, CMatrix, Matrix, Op, SchurForm, C64};
use crate::lti::{transfer_eval, FrequencyResponse, PhRepresentation, StateSpace};
use crate::par::Execution;

pub type CVector = DVector<C64>;

/// Tangential interpolation data `(s_i, r_i, l_i)`, closed under complex
/// conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationData {
    pub points: Vec<C64>,
    pub right_dirs: Vec<CVector>,
    pub left_dirs: Vec<CVector>,
}

impl InterpolationData {
    pub fn new(points: Vec<C64>, right_dirs: Vec<CVector>, left_dirs: Vec<CVector>) -> Result<Self> {
        let d = InterpolationData {
            points,
            right_dirs,
            left_dirs,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let r = self.points.len();
        if self.right_dirs.len() != r || self.left_dirs.len() != r {
            return Err(Error::dims("one right and one left direction per point"));
        }
        for (i, s) in self.points.iter().enumerate() {
            if s.im == 0.0 {
                continue;
            }
            let tol = 1e-10 * s.norm();
            let partner = self.points.iter().enumerate().any(|(j, t)| {
                j != i
                    && (t - s.conj()).norm() <= tol
                    && (&self.right_dirs[j] - self.right_dirs[i].conjugate()).norm()
                        <= 1e-10 * self.right_dirs[i].norm().max(f64::MIN_POSITIVE)
            });
            if !partner {
                return Err(Error::InvalidConfig(format!(
                    "interpolation point {s} has no conjugate partner"
                )));
            }
        }
        Ok(())
    }
}

/// Settings shared by the iterative reducers.
#[derive(Clone, Debug)]
pub struct ReducerConfig {
    pub max_iters: usize,
    /// Relative change of the sorted interpolation points that counts as
    /// converged.
    pub conv_tol: f64,
    /// Independent random initializations; the best by H2 error is kept.
    pub restarts: usize,
    pub seed: u64,
    /// Fresh random restarts allowed when an iterate is unstable.
    pub stability_retry: usize,
    pub exec: Execution,
}

impl Default for ReducerConfig {
    fn default() -> Self {
        ReducerConfig {
            max_iters: 200,
            conv_tol: 1e-6,
            restarts: 3,
            seed: 0,
            stability_retry: 10,
            exec: Execution::default(),
        }
    }
}

impl ReducerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("max_iters and restarts must be positive".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidConfig("conv_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Output of a reducer.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub rom: StateSpace,
    pub v: Option<Matrix>,
    pub w: Option<Matrix>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative interpolation point change per iteration.
    pub history: Vec<f64>,
    /// Data the final ROM interpolates at (iterative reducers only).
    pub interpolation: Option<InterpolationData>,
    /// pH form of the ROM (pH-IRKA only).
    pub ph: Option<PhRepresentation>,
    /// H2 distance to the input system, when computed.
    pub h2_error: Option<f64>,
}

/// `(W^T A V, W^T B, C V, D)`.
pub fn projection_rom(sys: &StateSpace, v: &Matrix, w: &Matrix) -> Result<StateSpace> {
    let sys = sys.to_standard()?;
    let n = sys.n();
    if v.nrows() != n || w.shape() != v.shape() {
        return Err(Error::dims(format!(
            "projection bases {:?} and {:?} for {n} states",
            v.shape(),
            w.shape()
        )));
    }
    let r = v.ncols();
    let defect = (w.transpose() * v - Matrix::identity(r, r)).norm();
    if !(defect <= 1e-8) {
        return Err(Error::NotBiorthogonal { defect });
    }
    StateSpace::new(
        w.transpose() * sys.a() * v,
        w.transpose() * sys.b(),
        sys.c() * v,
        sys.d().clone(),
    )
}

/// Real bases with `(s_i I - A)^{-1} B r_i` in `Ran(V)` and
/// `(s_i I - A)^{-T} C^T l_i` in `Ran(W)`, normalized to `W^T V = I`.
pub fn tangential_basis(sys: &StateSpace, interp: &InterpolationData) -> Result<(Matrix, Matrix)> {
    let sys = sys.to_standard()?;
    let schur = SchurForm::new(sys.a())?;
    tangential_basis_with(&sys, &schur, interp)
}

pub(crate) fn tangential_basis_with(
    sys: &StateSpace,
    schur: &SchurForm,
    interp: &InterpolationData,
) -> Result<(Matrix, Matrix)> {
    interp.validate()?;
    let v = right_basis(sys, schur, interp)?;
    let bc = to_complex(&sys.c().transpose());
    let w = realified_basis(interp, |i, s| {
        schur.solve_shifted(Op::T, s, &(&bc * column(&interp.left_dirs[i])))
    })?;
    Ok((v.clone(), biorthogonalize(&v, &w)?))
}

/// Orthonormal real basis of the right tangential directions.
pub(crate) fn right_basis(sys: &StateSpace, schur: &SchurForm, interp: &InterpolationData) -> Result<Matrix> {
    let bc = to_complex(sys.b());
    realified_basis(interp, |i, s| {
        schur.solve_shifted(Op::N, s, &(&bc * column(&interp.right_dirs[i])))
    })
}

fn column(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Realify (real points give one column, a conjugate pair gives
/// `[Re v, Im v]`) and orthonormalize.
fn realified_basis<F>(interp: &InterpolationData, solve: F) -> Result<Matrix>
where
    F: Fn(usize, C64) -> Result<CMatrix>,
{
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(interp.len());
    for (i, &s) in interp.points.iter().enumerate() {
        if s.im < 0.0 {
            continue;
        }
        let v = solve(i, s)?;
        let v = v.column(0);
        let re = v.map(|z| z.re);
        let im = v.map(|z| z.im);
        if s.im == 0.0 {
            // Real point: v is real up to the phase of the direction.
            cols.push(if re.norm() >= im.norm() { re } else { im });
        } else {
            cols.push(re);
            cols.push(im);
        }
    }
    if cols.len() != interp.len() {
        return Err(Error::RankDeficientBasis);
    }
    let raw = Matrix::from_columns(&cols);
    let mut scaled = raw.clone();
    for mut c in scaled.column_iter_mut() {
        let nrm = c.norm();
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::RankDeficientBasis);
        }
        c.unscale_mut(nrm);
    }
    let q = orthonormalize(&scaled, 1e-10)?;
    // Every defining vector must lie in the span.
    let resid = (&scaled - &q * (q.transpose() * &scaled)).norm();
    if resid > 1e-8 * (cols.len() as f64).sqrt() {
        return Err(Error::RankDeficientBasis);
    }
    Ok(q)
}

/// `W (V^T W)^{-1}`, so that the result satisfies `W^T V = I`.
pub(crate) fn biorthogonalize(v: &Matrix, w: &Matrix) -> Result<Matrix> {
    let m = v.transpose() * w;
    let svals = m.clone().svd(false, false).singular_values;
    if svals.len() > 0 && !(svals.min() > 1e-12 * svals.max()) {
        return Err(Error::RankDeficientBasis);
    }
    let minv = m.try_inverse().ok_or(Error::RankDeficientBasis)?;
    Ok(w * minv)
}

/// Pole-residue form `G~(s) = sum_i c_i b_i^T / (s - lambda_i) + D`.
#[derive(Clone, Debug)]
pub struct PoleResidue {
    pub poles: Vec<C64>,
    /// Input directions `b_i` (length m).
    pub b: Vec<CVector>,
    /// Output directions `c_i` (length p).
    pub c: Vec<CVector>,
}

impl PoleResidue {
    pub fn eval(&self, s: C64, d: &Matrix) -> CMatrix {
        let mut g = to_complex(d);
        for ((l, b), c) in self.poles.iter().zip(&self.b).zip(&self.c) {
            g += c * b.transpose() / (s - l);
        }
        g
    }

    /// Interpolation data `(-lambda_i, b_i, c_i)` of the IRKA update.
    pub fn mirrored(&self) -> Result<InterpolationData> {
        InterpolationData::new(
            self.poles.iter().map(|l| -l).collect(),
            self.b.clone(),
            self.c.clone(),
        )
    }
}

const EIGVEC_COND_LIMIT: f64 = 1e8;

pub fn pole_residue(rom: &StateSpace) -> Result<PoleResidue> {
    let rom = rom.to_standard()?;
    let e = eig(rom.a())?;
    if !(e.condition < EIGVEC_COND_LIMIT) {
        return Err(Error::DefectiveSpectrum { cond: e.condition });
    }
    let bc = to_complex(rom.b());
    let cc = to_complex(rom.c());
    let terms: Vec<(C64, CVector, CVector)> = (0..e.values.len())
        .map(|i| {
            let x = e.right.column(i);
            let y = e.left.column(i);
            let row = y.adjoint() * &bc;
            let b = CVector::from_iterator(row.len(), row.iter().copied());
            let col = &cc * x;
            let c = CVector::from_iterator(col.len(), col.iter().copied());
            (e.values[i], b, c)
        })
        .collect();
    let (poles, b, c) = canonical_terms(terms, e.condition)?;
    let pr = PoleResidue { poles, b, c };
    check_expansion(&rom, &pr)?;
    Ok(pr)
}

/// Make real poles exactly real with real directions and pair complex poles
/// with exact conjugates.
fn canonical_terms(
    terms: Vec<(C64, CVector, CVector)>,
    cond: f64,
) -> Result<(Vec<C64>, Vec<CVector>, Vec<CVector>)> {
    let scale = terms.iter().map(|t| t.0.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut out = Vec::with_capacity(terms.len());
    let mut upper = Vec::new();
    let mut lower = 0;
    for (l, mut b, mut c) in terms {
        if l.im.abs() <= tol {
            // b c^T is real: rotate the phase out of b and move it to c.
            let bk = b
                .iter()
                .copied()
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap_or(C64::new(1.0, 0.0));
            let ph = if bk.norm() > 0.0 { bk / bk.norm() } else { C64::new(1.0, 0.0) };
            b *= ph.conj();
            c *= ph;
            out.push((
                C64::new(l.re, 0.0),
                b.map(|z| C64::new(z.re, 0.0)),
                c.map(|z| C64::new(z.re, 0.0)),
            ));
        } else if l.im > 0.0 {
            upper.push((l, b, c));
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return Err(Error::DefectiveSpectrum { cond });
    }
    for (l, b, c) in upper {
        out.push((l.conj(), b.conjugate(), c.conjugate()));
        out.push((l, b, c));
    }
    out.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    let mut poles = Vec::with_capacity(out.len());
    let mut bs = Vec::with_capacity(out.len());
    let mut cs = Vec::with_capacity(out.len());
    for (l, b, c) in out {
        poles.push(l);
        bs.push(b);
        cs.push(c);
    }
    Ok((poles, bs, cs))
}

fn check_expansion(rom: &StateSpace, pr: &PoleResidue) -> Result<()> {
    let samples = [
        C64::new(1.0, 1.0),
        C64::new(0.5, 2.0),
        C64::new(10.0, 0.0),
        C64::new(0.1, 0.3),
        C64::new(3.0, 30.0),
    ];
    for s in samples {
        let Ok(g) = transfer_eval(rom, s) else { continue };
        let approx = pr.eval(s, rom.d());
        let scale: f64 = pr
            .poles
            .iter()
            .zip(&pr.b)
            .zip(&pr.c)
            .map(|((l, b), c)| b.norm() * c.norm() / (s - l).norm())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        let err = (g - approx).norm() / scale;
        if !(err <= 1e-8) {
            return Err(Error::DefectiveSpectrum { cond: err });
        }
    }
    Ok(())
}

/// Interpolation residuals at each point of `interp`.
#[derive(Clone, Debug)]
pub struct InterpolationReport {
    /// `||(G - G~)(s_i) r_i||`
    pub right: Vec<f64>,
    /// `||l_i^T (G - G~)(s_i)||`
    pub left: Vec<f64>,
    /// `|l_i^T (G' - G~')(s_i) r_i|`
    pub hermite: Vec<f64>,
    /// Matching magnitudes of the full-order terms, for relative checks.
    pub right_scale: Vec<f64>,
    pub left_scale: Vec<f64>,
    pub hermite_scale: Vec<f64>,
}

impl InterpolationReport {
    /// Largest residual relative to its scale.
    pub fn max_relative(&self) -> f64 {
        let rel = |v: &[f64], s: &[f64]| {
            v.iter()
                .zip(s)
                .map(|(x, y)| x / y.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        rel(&self.right, &self.right_scale)
            .max(rel(&self.left, &self.left_scale))
            .max(rel(&self.hermite, &self.hermite_scale))
    }

    pub fn passes(&self, rel: f64) -> bool {
        self.max_relative() <= rel
    }
}

pub fn verify_interpolation(
    fom: &StateSpace,
    rom: &StateSpace,
    interp: &InterpolationData,
) -> Result<InterpolationReport> {
    let f = FrequencyResponse::new(fom)?;
    let g = FrequencyResponse::new(rom)?;
    let mut rep = InterpolationReport {
        right: vec![],
        left: vec![],
        hermite: vec![],
        right_scale: vec![],
        left_scale: vec![],
        hermite_scale: vec![],
    };
    for ((&s, r), l) in interp.points.iter().zip(&interp.right_dirs).zip(&interp.left_dirs) {
        let gf = f.eval(s)?;
        let gr = g.eval(s)?;
        let df = f.eval_derivative(s)?;
        let dr = g.eval_derivative(s)?;
        let diff = &gf - &gr;
        let ddiff = &df - &dr;
        let (rn, ln) = (r.norm(), l.norm());
        rep.right.push((&diff * r).norm());
        rep.left.push((l.transpose() * &diff).norm());
        rep.hermite.push((l.transpose() * &ddiff * r)[(0, 0)].norm());
        rep.right_scale.push(crate::linalg::cnorm2(&gf) * rn);
        rep.left_scale.push(crate::linalg::cnorm2(&gf) * ln);
        rep.hermite_scale.push(crate::linalg::cnorm2(&df) * rn * ln);
    }
    Ok(rep)
}

/// Relative change of interpolation points sorted lexicographically.
pub(crate) fn point_change(old: &[C64], new: &[C64]) -> f64 {
    let sorted = |v: &[C64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    };
    let (a, b) = (sorted(old), sorted(new));
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::transfer_derivative;

    fn m(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    fn cv(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn three_state() -> StateSpace {
        StateSpace::new(
            m(3, 3, &[-1.0, 0.5, 0.0, -0.5, -2.0, 1.0, 0.0, -1.0, -3.0]),
            m(3, 1, &[1.0, 0.0, 1.0]),
            m(1, 3, &[1.0, 1.0, 0.0]),
            m(1, 1, &[0.5]),
        )
        .unwrap()
    }

    #[test]
    fn identity_projection_is_exact() {
        let sys = three_state();
        let i = Matrix::identity(3, 3);
        assert_eq!(projection_rom(&sys, &i, &i).unwrap(), sys);
    }

    #[test]
    fn orthogonal_full_basis_is_similarity() {
        let sys = three_state();
        let q = orthonormalize(&m(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]), 1e-12).unwrap();
        let rom = projection_rom(&sys, &q, &q).unwrap();
        for s in [C64::new(0.0, 1.0), C64::new(2.0, -1.0), C64::new(0.1, 7.0)] {
            let d = transfer_eval(&sys, s).unwrap() - transfer_eval(&rom, s).unwrap();
            assert!(d.norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_biorthogonal() {
        let sys = three_state();
        let v = m(3, 1, &[1.0, 0.0, 0.0]);
        let w = m(3, 1, &[2.0, 0.0, 0.0]);
        assert!(matches!(projection_rom(&sys, &v, &w), Err(Error::NotBiorthogonal { .. })));
    }

    #[test]
    fn single_point_gives_hermite_interpolation() {
        let sys = three_state();
        let s = C64::new(0.7, 0.0);
        let interp = InterpolationData::new(vec![s], vec![cv(&[1.0])], vec![cv(&[1.0])]).unwrap();
        let (v, w) = tangential_basis(&sys, &interp).unwrap();
        assert_eq!(v.ncols(), 1);
        let rom = projection_rom(&sys, &v, &w).unwrap();
        let g = transfer_eval(&sys, s).unwrap();
        let gr = transfer_eval(&rom, s).unwrap();
        assert!((g - gr).norm() < 1e-12);
        let d = transfer_derivative(&sys, s).unwrap();
        let dr = transfer_derivative(&rom, s).unwrap();
        assert!((d - dr).norm() < 1e-12);
        let rep = verify_interpolation(&sys, &rom, &interp).unwrap();
        assert!(rep.passes(1e-10), "{rep:?}");
    }

    #[test]
    fn conjugate_pair_gives_real_basis() {
        let sys = three_state();
        let s = C64::new(0.5, 1.5);
        let interp =
            InterpolationData::new(vec![s, s.conj()], vec![cv(&[1.0]); 2], vec![cv(&[1.0]); 2]).unwrap();
        let (v, w) = tangential_basis(&sys, &interp).unwrap();
        assert_eq!(v.ncols(), 2);
        assert!((w.transpose() * &v - Matrix::identity(2, 2)).norm() < 1e-12);
        let rom = projection_rom(&sys, &v, &w).unwrap();
        assert!(verify_interpolation(&sys, &rom, &interp).unwrap().passes(1e-10));
    }

    #[test]
    fn missing_conjugate_is_rejected() {
        let r = InterpolationData::new(vec![C64::new(1.0, 1.0)], vec![cv(&[1.0])], vec![cv(&[1.0])]);
        assert!(r.is_err());
    }

    #[test]
    fn point_on_pole_fails() {
        let sys = StateSpace::strictly_proper(m(1, 1, &[-2.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0])).unwrap();
        let interp =
            InterpolationData::new(vec![C64::new(-2.0, 0.0)], vec![cv(&[1.0])], vec![cv(&[1.0])]).unwrap();
        assert!(tangential_basis(&sys, &interp).is_err());
    }

    #[test]
    fn scalar_pole_residue() {
        let rom = StateSpace::new(m(1, 1, &[-2.0]), m(1, 1, &[1.0]), m(1, 1, &[3.0]), m(1, 1, &[0.0])).unwrap();
        let pr = pole_residue(&rom).unwrap();
        assert_eq!(pr.poles, vec![C64::new(-2.0, 0.0)]);
        let res = pr.c[0][0] * pr.b[0][0];
        assert!((res - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_residues() {
        let rom = StateSpace::strictly_proper(
            m(2, 2, &[-1.0, 0.0, 0.0, -3.0]),
            m(2, 1, &[2.0, 5.0]),
            m(1, 2, &[7.0, 11.0]),
        )
        .unwrap();
        let pr = pole_residue(&rom).unwrap();
        let res: Vec<f64> = (0..2).map(|i| (pr.c[i][0] * pr.b[i][0]).re).collect();
        assert!((res[0] - 55.0).abs() < 1e-12 && (res[1] - 14.0).abs() < 1e-12, "{res:?}");
        assert_eq!(pr.poles[0], C64::new(-3.0, 0.0));
    }

    #[test]
    fn complex_pair_is_conjugate_closed() {
        let rom = StateSpace::strictly_proper(
            m(2, 2, &[-1.0, 2.0, -2.0, -1.0]),
            m(2, 1, &[1.0, 0.0]),
            m(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        let interp = pole_residue(&rom).unwrap().mirrored().unwrap();
        assert_eq!(interp.points[0], interp.points[1].conj());
    }

    #[test]
    fn defective_spectrum_is_flagged() {
        let rom = StateSpace::strictly_proper(
            m(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(pole_residue(&rom), Err(Error::DefectiveSpectrum { .. })));
    }

    #[test]
    fn perturbed_rom_violates_interpolation() {
        let sys = three_state();
        let s = C64::new(0.7, 0.0);
        let interp = InterpolationData::new(vec![s], vec![cv(&[1.0])], vec![cv(&[1.0])]).unwrap();
        let (v, w) = tangential_basis(&sys, &interp).unwrap();
        let rom = projection_rom(&sys, &v, &w).unwrap();
        let bad = rom.with_output(rom.c() * 1.01, rom.d().clone()).unwrap();
        assert!(!verify_interpolation(&sys, &bad, &interp).unwrap().passes(1e-6));
    }
}
