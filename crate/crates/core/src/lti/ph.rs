use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, hcat, min_sym_eig, skew, sym, vcat, Matrix};

/// Port-Hamiltonian representation
/// `A = (J - R) Q`, `B = G - P`, `C = (G + P)^T Q`, `D = S + N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhRepresentation {
    pub j: Matrix,
    pub r: Matrix,
    pub q: Matrix,
    pub g: Matrix,
    pub p: Matrix,
    pub s: Matrix,
    pub n: Matrix,
}

/// Structural diagnostics of a [`PhRepresentation`].
#[derive(Clone, Debug)]
pub struct PhCheck {
    /// `||J + J^T||_F / scale`
    pub j_skew: f64,
    /// `||N + N^T||_F / scale`
    pub n_skew: f64,
    /// Relative asymmetry of the dissipation block and of `Q`.
    pub dissipation_asym: f64,
    pub q_asym: f64,
    /// `lambda_min([[R, P], [P^T, S]])`
    pub dissipation_min_eig: f64,
    pub q_min_eig: f64,
    /// `max(1, ||J||_F, ||[[R, P], [P^T, S]]||_F)`
    pub scale: f64,
}

impl PhCheck {
    /// All pH matrix properties hold with relative tolerance `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.j_skew <= tol
            && self.n_skew <= tol
            && self.dissipation_asym <= tol
            && self.q_asym <= tol
            && self.dissipation_min_eig >= -tol * self.scale
            && self.q_min_eig > 0.0
    }
}

impl PhRepresentation {
    /// Validated constructor (tolerance `1e-10`).
    pub fn new(
        j: Matrix,
        r: Matrix,
        q: Matrix,
        g: Matrix,
        p: Matrix,
        s: Matrix,
        n: Matrix,
    ) -> Result<Self> {
        let ph = PhRepresentation { j, r, q, g, p, s, n };
        ph.check_dims()?;
        ph.validate(1e-10)?;
        Ok(ph)
    }

    fn check_dims(&self) -> Result<()> {
        let nx = self.j.nrows();
        let m = self.g.ncols();
        let sq = |a: &Matrix, k: usize| a.shape() == (k, k);
        if !(sq(&self.j, nx) && sq(&self.r, nx) && sq(&self.q, nx))
            || self.g.nrows() != nx
            || self.p.shape() != (nx, m)
            || !(sq(&self.s, m) && sq(&self.n, m))
        {
            return Err(Error::dims("inconsistent pH block sizes"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.g.ncols()
    }

    /// `[[R, P], [P^T, S]]`
    pub fn dissipation(&self) -> Matrix {
        vcat(
            &hcat(&self.r, &self.p),
            &hcat(&self.p.transpose(), &self.s),
        )
    }

    pub fn check(&self) -> PhCheck {
        let w = self.dissipation();
        let scale = [1.0, self.j.norm(), w.norm()].into_iter().fold(0.0, f64::max);
        PhCheck {
            j_skew: (&self.j + self.j.transpose()).norm() / scale,
            n_skew: (&self.n + self.n.transpose()).norm() / scale,
            dissipation_asym: asymmetry(&w),
            q_asym: asymmetry(&self.q),
            dissipation_min_eig: min_sym_eig(&w),
            q_min_eig: if self.q.is_empty() {
                f64::INFINITY
            } else if self.q.clone().cholesky().is_some() {
                min_sym_eig(&self.q)
            } else {
                min_sym_eig(&self.q).min(0.0)
            },
            scale,
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_dims()?;
        let c = self.check();
        if c.j_skew > tol || c.n_skew > tol {
            return Err(Error::NonSymmetric {
                asym: c.j_skew.max(c.n_skew),
            });
        }
        if c.dissipation_asym > tol || c.q_asym > tol {
            return Err(Error::NonSymmetric {
                asym: c.dissipation_asym.max(c.q_asym),
            });
        }
        if c.dissipation_min_eig < -tol * c.scale {
            return Err(Error::NotPsd {
                min_eig: c.dissipation_min_eig,
            });
        }
        if c.q_min_eig <= 0.0 {
            return Err(Error::XNotPd {
                min_eig: c.q_min_eig,
            });
        }
        Ok(())
    }

    pub fn to_state_space(&self) -> Result<StateSpace> {
        StateSpace::new(
            (&self.j - &self.r) * &self.q,
            &self.g - &self.p,
            (&self.g + &self.p).transpose() * &self.q,
            &self.s + &self.n,
        )
    }
}

/// pH representation from a KYP solution `X` (`Q := X`).
pub fn ph_from_solution(sys: &StateSpace, x: &Matrix) -> Result<PhRepresentation> {
    let sys = sys.to_standard()?;
    let w = crate::kyp::kyp_residual(&sys, x)?;
    let scale = w.norm().max(1.0);
    let lmin = min_sym_eig(&w);
    if lmin < -1e-8 * scale {
        return Err(Error::NotPsd { min_eig: lmin });
    }
    let chol = sym(x).cholesky().ok_or(Error::XNotPd {
        min_eig: min_sym_eig(x),
    })?;
    let xinv = chol.inverse();
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let ax = a * &xinv;
    let xc = &xinv * c.transpose();
    Ok(PhRepresentation {
        j: skew(&ax),
        r: -sym(&ax),
        q: sym(x),
        g: (&xc + b) * 0.5,
        p: (&xc - b) * 0.5,
        s: sym(d),
        n: skew(d),
    })
}

/// Convert `E x' = A x + B u` to standard form with `z = E x`:
/// `(A E^{-1}, B, C E^{-1}, D)`. Also returns `Q = E^{-1}`, the Hamiltonian
/// weight that a pH model `E x' = (J - R) x + ...` carries in `z`.
pub fn generalized_to_standard(sys: &StateSpace) -> Result<(StateSpace, Matrix)> {
    let n = sys.n();
    let Some(e) = sys.e() else {
        return Ok((sys.clone(), Matrix::identity(n, n)));
    };
    let chol = e.clone().cholesky().ok_or(Error::ESingular)?;
    let einv = sym(&chol.inverse());
    let std = StateSpace::new(
        sys.a() * &einv,
        sys.b().clone(),
        sys.c() * &einv,
        sys.d().clone(),
    )?;
    Ok((std, einv))
}

/// Dual system `(-A^T, -C^T, B^T, D^T)` (mass matrix kept), with transfer
/// function `G(-s)^T`.
pub fn dual_system(sys: &StateSpace) -> StateSpace {
    let d = StateSpace::new(
        -sys.a().transpose(),
        -sys.c().transpose(),
        sys.b().transpose(),
        sys.d().transpose(),
    )
    .expect("dual of a valid system is valid");
    match sys.e() {
        Some(e) => StateSpace::with_mass(
            d.a().clone(),
            d.b().clone(),
            d.c().clone(),
            d.d().clone(),
            e.clone(),
        )
        .expect("mass matrix already validated"),
        None => d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::transfer_eval;
    use crate::linalg::C64;

    fn m1(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_ph_from_unit_solution() {
        let sys = StateSpace::new(m1(-1.0), m1(1.0), m1(1.0), m1(1.0)).unwrap();
        let ph = ph_from_solution(&sys, &m1(1.0)).unwrap();
        assert_eq!(ph.j, m1(0.0));
        assert_eq!(ph.r, m1(1.0));
        assert_eq!(ph.q, m1(1.0));
        assert_eq!(ph.g, m1(1.0));
        assert_eq!(ph.p, m1(0.0));
        assert_eq!(ph.s, m1(1.0));
        assert_eq!(ph.n, m1(0.0));
        assert!(ph.check().is_valid(1e-12));
    }

    #[test]
    fn extremal_solution_gives_valid_ph() {
        let sys = StateSpace::new(m1(-1.0), m1(1.0), m1(1.0), m1(1.0)).unwrap();
        let xmin = 3.0 - 8f64.sqrt();
        let ph = ph_from_solution(&sys, &m1(xmin)).unwrap();
        let c = ph.check();
        assert!(c.is_valid(1e-10), "{c:?}");
        // singular dissipation block: the minimal solution sits on the boundary
        assert!(c.dissipation_min_eig.abs() < 1e-12);
        let back = ph.to_state_space().unwrap();
        assert!((back.a() - sys.a()).norm() < 1e-14 && (back.c() - sys.c()).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_kyp_solution() {
        let sys = StateSpace::new(m1(-1.0), m1(1.0), m1(1.0), m1(1.0)).unwrap();
        assert!(matches!(ph_from_solution(&sys, &m1(10.0)), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn dual_is_involution() {
        let sys = StateSpace::new(m1(-1.0), m1(1.0), m1(1.0), m1(1.0)).unwrap();
        let d = dual_system(&sys);
        assert_eq!(d.a(), &m1(1.0));
        assert_eq!(d.b(), &m1(-1.0));
        // (A, -B, -C, D): same transfer function
        let dd = dual_system(&d);
        for w in [0.0, 0.3, 2.0, 7.0, 50.0] {
            let s = C64::new(0.1, w);
            assert!((transfer_eval(&dd, s).unwrap() - transfer_eval(&sys, s).unwrap()).norm() < 1e-14);
        }
        for w in [0.0, 0.5, 3.0] {
            let s = C64::new(0.0, w);
            let gd = transfer_eval(&d, s).unwrap();
            let g = transfer_eval(&sys, -s).unwrap().transpose();
            assert!((gd - g).norm() < 1e-14);
        }
    }

    #[test]
    fn generalized_conversion_preserves_transfer() {
        let sys = StateSpace::with_mass(m1(-1.0), m1(1.0), m1(1.0), m1(0.0), m1(2.0)).unwrap();
        let (std, q) = generalized_to_standard(&sys).unwrap();
        assert!((std.a()[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((std.c()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((q[(0, 0)] - 0.5).abs() < 1e-15);
        let s = C64::new(1.0, 0.0);
        let g1 = transfer_eval(&sys, s).unwrap();
        let g2 = transfer_eval(&std, s).unwrap();
        assert!((g1 - g2).norm() < 1e-15);
    }
}
