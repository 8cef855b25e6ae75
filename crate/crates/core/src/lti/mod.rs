//! LTI system model: transfer and Popov functions, Gramians, norms,
//! realizations and port-Hamiltonian representations.

mod norms;
mod ph;
mod realization;
mod transfer;

pub use norms::{
    gramian_factors, gramians, h2_error, h2_norm, hankel_singular_values, hinf_norm,
    hinf_norm_sampled, is_passive_sampled, H2Distance, PassivityReport, HINF_DENSE_LIMIT,
};
pub use ph::{dual_system, generalized_to_standard, ph_from_solution, PhCheck, PhRepresentation};
pub use realization::{
    balanced_truncation, minimal_realization, minimality_rank, ph_minimal_realization,
    BalancedTruncation,
};
pub use transfer::{popov_eval, transfer_derivative, transfer_eval, FrequencyResponse};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, hcat, vcat, Matrix, SchurForm};

/// State-space system `E x' = A x + B u`, `y = C x + D u`; `E = I` when absent.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
    e: Option<Matrix>,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::dims(format!("B has {} rows, A is {n}x{n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::dims(format!("C has {} columns, A is {n}x{n}", c.ncols())));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::dims(format!(
                "D is {:?}, expected {}x{}",
                d.shape(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            crate::linalg::check_finite(m, name)?;
        }
        Ok(StateSpace { a, b, c, d, e: None })
    }

    /// Generalized system with SPD mass matrix `E`.
    pub fn with_mass(a: Matrix, b: Matrix, c: Matrix, d: Matrix, e: Matrix) -> Result<Self> {
        let mut sys = StateSpace::new(a, b, c, d)?;
        let n = sys.n();
        if e.shape() != (n, n) {
            return Err(Error::dims("E must match A"));
        }
        if crate::linalg::asymmetry(&e) > 1e-12 || e.clone().cholesky().is_none() {
            return Err(Error::ESingular);
        }
        sys.e = Some(e);
        Ok(sys)
    }

    pub fn strictly_proper(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let d = Matrix::zeros(c.nrows(), b.ncols());
        StateSpace::new(a, b, c, d)
    }

    /// Static gain `y = D u` without states.
    pub fn static_gain(d: Matrix) -> Self {
        let (p, m) = d.shape();
        StateSpace {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, m),
            c: Matrix::zeros(p, 0),
            d,
            e: None,
        }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }
    pub fn e(&self) -> Option<&Matrix> {
        self.e.as_ref()
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Same state matrices with a different output map.
    pub fn with_output(&self, c: Matrix, d: Matrix) -> Result<Self> {
        let mut s = StateSpace::new(self.a.clone(), self.b.clone(), c, d)?;
        s.e = self.e.clone();
        Ok(s)
    }

    pub fn with_feedthrough(&self, d: Matrix) -> Result<Self> {
        self.with_output(self.c.clone(), d)
    }

    /// Standard-form copy; systems with `E` are converted with `z = E x`.
    pub fn to_standard(&self) -> Result<StateSpace> {
        match self.e {
            None => Ok(self.clone()),
            Some(_) => Ok(generalized_to_standard(self)?.0),
        }
    }

    /// Poles (eigenvalues of `E^{-1} A`).
    pub fn poles(&self) -> Result<Vec<crate::linalg::C64>> {
        let s = self.to_standard()?;
        Ok(SchurForm::new(&s.a)?.eigenvalues())
    }

    /// Largest real part of the poles.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self
            .poles()?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.n() == 0 || self.spectral_abscissa()? < 0.0)
    }

    /// State transformation `x = T^{-1} x_new`: `(T A T^{-1}, T B, C T^{-1}, D)`.
    pub fn transform(&self, t: &Matrix, tinv: &Matrix) -> Result<StateSpace> {
        let s = self.to_standard()?;
        StateSpace::new(t * &s.a * tinv, t * &s.b, &s.c * tinv, s.d.clone())
    }

    /// Parallel connection with shared input and subtracted outputs,
    /// realizing `G_self - G_other`.
    pub fn difference(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::dims("systems have different input/output sizes"));
        }
        let s1 = self.to_standard()?;
        let s2 = other.to_standard()?;
        StateSpace::new(
            block_diag(&s1.a, &s2.a),
            vcat(&s1.b, &s2.b),
            hcat(&s1.c, &(-&s2.c)),
            &s1.d - &s2.d,
        )
    }

    /// Block-diagonal direct sum (inputs and outputs stacked).
    pub fn direct_sum(&self, other: &StateSpace) -> Result<StateSpace> {
        let s1 = self.to_standard()?;
        let s2 = other.to_standard()?;
        StateSpace::new(
            block_diag(&s1.a, &s2.a),
            block_diag(&s1.b, &s2.b),
            block_diag(&s1.c, &s2.c),
            block_diag(&s1.d, &s2.d),
        )
    }

    /// `max(1, ||A||_F, ||B||_F, ||C||_F, ||D||_F)`, for relative tolerances.
    pub fn scale(&self) -> f64 {
        [self.a.norm(), self.b.norm(), self.c.norm(), self.d.norm(), 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Frequency sampling of the imaginary axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
    Custom,
}

impl FrequencyGrid {
    pub fn logarithmic(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite() && count >= 2) {
            return Err(Error::InvalidConfig(format!(
                "bad logarithmic grid [{lo}, {hi}] with {count} points"
            )));
        }
        let (l0, l1) = (lo.log10(), hi.log10());
        let points = (0..count)
            .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (count - 1) as f64))
            .collect();
        Ok(FrequencyGrid {
            points,
            spacing: Spacing::Logarithmic,
        })
    }

    pub fn linear(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi > lo && hi.is_finite() && count >= 2) {
            return Err(Error::InvalidConfig(format!(
                "bad linear grid [{lo}, {hi}] with {count} points"
            )));
        }
        let points = (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
        Ok(FrequencyGrid {
            points,
            spacing: Spacing::Linear,
        })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty()
            || points.iter().any(|w| !w.is_finite())
            || points.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidConfig(
                "grid points must be finite and strictly increasing".into(),
            ));
        }
        Ok(FrequencyGrid {
            points,
            spacing: Spacing::Custom,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
}

impl Default for FrequencyGrid {
    /// 400 logarithmically spaced points on `[1e-4, 1e4]` rad/s.
    fn default() -> Self {
        FrequencyGrid::logarithmic(1e-4, 1e4, 400).expect("valid default grid")
    }
}
