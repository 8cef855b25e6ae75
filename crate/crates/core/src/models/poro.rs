use crate::error::{Error, Result};
use crate::linalg::{asymmetry, min_sym_eig, sym, Matrix};
use crate::lti::{generalized_to_standard, PhRepresentation, StateSpace};

/// Biot poroelasticity on the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct PoroConfig {
    /// Subintervals per side of the uniform mesh.
    pub mesh_divisions: usize,
    pub mu: f64,
    pub lambda: f64,
    pub rho: f64,
    pub alpha: f64,
    /// `1 / M`
    pub inv_m: f64,
    /// `kappa / nu`
    pub kappa_over_nu: f64,
    /// Artificial damping.
    pub eta: f64,
}

impl Default for PoroConfig {
    fn default() -> Self {
        PoroConfig {
            mesh_divisions: 15,
            mu: 12.0,
            lambda: 6.0,
            rho: 1e-3,
            alpha: 0.79,
            inv_m: 7.80e3,
            kappa_over_nu: 633.33,
            eta: 1e-3,
        }
    }
}

impl PoroConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mesh_divisions < 2 {
            return Err(Error::InvalidConfig(format!(
                "mesh_divisions must be at least 2, got {}",
                self.mesh_divisions
            )));
        }
        for (v, name) in [
            (self.mu, "mu"),
            (self.rho, "rho"),
            (self.alpha, "alpha"),
            (self.inv_m, "inv_m"),
            (self.kappa_over_nu, "kappa_over_nu"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be nonnegative, got {}", self.eta)));
        }
        Ok(())
    }

    /// `5 (N - 1)^2` for `N` mesh divisions.
    pub fn state_dim(&self) -> usize {
        5 * (self.mesh_divisions - 1).pow(2)
    }
}

/// The assembled poroelastic model.
#[derive(Clone, Debug)]
pub struct PoroModel {
    /// `E x' = (J - R - eta I) x + B v`, `y = B^T x`.
    pub system: StateSpace,
    pub e: Matrix,
    pub j: Matrix,
    /// Dissipation without the artificial damping.
    pub r: Matrix,
    /// pH form in `z = E x`: `(J, R + eta I, E^{-1}, B, 0, 0, 0)`.
    pub ph: PhRepresentation,
    /// Finite element blocks, interior degrees of freedom only.
    pub blocks: PoroBlocks,
}

#[derive(Clone, Debug)]
pub struct PoroBlocks {
    pub m_u: Matrix,
    pub k_u: Matrix,
    pub m_p: Matrix,
    pub k_p: Matrix,
    /// `D_ij = int psi_i div phi_j`
    pub d: Matrix,
    pub b_f: Matrix,
    pub b_g: Matrix,
}

/// P1 assembly on a uniform mesh of right triangles (each square cut along
/// the same diagonal) with homogeneous Dirichlet conditions for all fields.
///
/// States are `[w; u; p]` (velocity, displacement, pressure); vector fields
/// store all x-components before all y-components. The force input acts in
/// the y-direction, the injection input on the pressure equation; both are
/// spatially constant.
pub fn generate_poro(cfg: &PoroConfig) -> Result<PoroModel> {
    cfg.validate()?;
    let blocks = assemble(cfg);
    let nu = blocks.m_u.nrows();
    let np = blocks.m_p.nrows();
    let n = 2 * nu + np;
    let (iw, iu, ip) = (0, nu, 2 * nu);

    let mut e = Matrix::zeros(n, n);
    e.view_mut((iw, iw), (nu, nu)).copy_from(&(&blocks.m_u * cfg.rho));
    e.view_mut((iu, iu), (nu, nu)).copy_from(&blocks.k_u);
    e.view_mut((ip, ip), (np, np)).copy_from(&(&blocks.m_p * cfg.inv_m));

    let mut j = Matrix::zeros(n, n);
    j.view_mut((iw, iu), (nu, nu)).copy_from(&(-&blocks.k_u));
    j.view_mut((iu, iw), (nu, nu)).copy_from(&blocks.k_u);
    j.view_mut((iw, ip), (nu, np)).copy_from(&(blocks.d.transpose() * cfg.alpha));
    j.view_mut((ip, iw), (np, nu)).copy_from(&(&blocks.d * -cfg.alpha));

    let mut r = Matrix::zeros(n, n);
    r.view_mut((ip, ip), (np, np)).copy_from(&(&blocks.k_p * cfg.kappa_over_nu));

    let mut b = Matrix::zeros(n, 2);
    b.view_mut((iw, 0), (nu, 1)).copy_from(&blocks.b_f);
    b.view_mut((ip, 1), (np, 1)).copy_from(&blocks.b_g);

    // Self-certification of the structural properties.
    for (mat, name) in [(&blocks.m_u, "M_u"), (&blocks.k_u, "K_u"), (&blocks.m_p, "M_p"), (&e, "E")] {
        if asymmetry(mat) > 1e-12 || mat.clone().cholesky().is_none() {
            return Err(Error::InvalidConfig(format!("assembled {name} is not SPD")));
        }
    }
    if (&j + j.transpose()).norm() > 0.0 {
        return Err(Error::NonSymmetric { asym: (&j + j.transpose()).norm() });
    }
    let rmin = min_sym_eig(&r);
    if rmin < -1e-10 * r.norm().max(1.0) {
        return Err(Error::NotPsd { min_eig: rmin });
    }

    let damped = &j - &r - Matrix::identity(n, n) * cfg.eta;
    let system = StateSpace::with_mass(damped, b.clone(), b.transpose(), Matrix::zeros(2, 2), e.clone())?;
    let (_, q) = generalized_to_standard(&system)?;
    let ph = PhRepresentation::new(
        j.clone(),
        &r + Matrix::identity(n, n) * cfg.eta,
        sym(&q),
        b,
        Matrix::zeros(n, 2),
        Matrix::zeros(2, 2),
        Matrix::zeros(2, 2),
    )?;
    Ok(PoroModel {
        system,
        e,
        j,
        r,
        ph,
        blocks,
    })
}

fn assemble(cfg: &PoroConfig) -> PoroBlocks {
    let nd = cfg.mesh_divisions;
    let h = 1.0 / nd as f64;
    let ni = nd - 1;
    let np = ni * ni;
    let nu = 2 * np;
    // interior index of grid node (i, j), if any
    let idx = |i: usize, j: usize| -> Option<usize> {
        (i > 0 && j > 0 && i < nd && j < nd).then(|| (j - 1) * ni + (i - 1))
    };
    let mut m_p = Matrix::zeros(np, np);
    let mut k_p = Matrix::zeros(np, np);
    let mut k_u = Matrix::zeros(nu, nu);
    let mut d = Matrix::zeros(np, nu);
    let mut load = Matrix::zeros(np, 1);
    let area = 0.5 * h * h;
    let local_mass = |a: usize, b: usize| area / 12.0 * if a == b { 2.0 } else { 1.0 };

    for cj in 0..nd {
        for ci in 0..nd {
            let tris = [
                [(ci, cj), (ci + 1, cj), (ci + 1, cj + 1)],
                [(ci, cj), (ci + 1, cj + 1), (ci, cj + 1)],
            ];
            for tri in tris {
                let xy = tri.map(|(i, j)| (i as f64 * h, j as f64 * h));
                let det = (xy[1].0 - xy[0].0) * (xy[2].1 - xy[0].1) - (xy[2].0 - xy[0].0) * (xy[1].1 - xy[0].1);
                // gradients of the barycentric coordinates
                let grad = [
                    ((xy[1].1 - xy[2].1) / det, (xy[2].0 - xy[1].0) / det),
                    ((xy[2].1 - xy[0].1) / det, (xy[0].0 - xy[2].0) / det),
                    ((xy[0].1 - xy[1].1) / det, (xy[1].0 - xy[0].0) / det),
                ];
                let dofs = tri.map(|(i, j)| idx(i, j));
                for a in 0..3 {
                    let Some(ga) = dofs[a] else { continue };
                    load[(ga, 0)] += area / 3.0;
                    let da = [grad[a].0, grad[a].1];
                    for b in 0..3 {
                        let db = [grad[b].0, grad[b].1];
                        let Some(gb) = dofs[b] else { continue };
                        m_p[(ga, gb)] += local_mass(a, b);
                        let dot = da[0] * db[0] + da[1] * db[1];
                        k_p[(ga, gb)] += area * dot;
                        for c in 0..2 {
                            for e in 0..2 {
                                let delta = if c == e { dot } else { 0.0 };
                                k_u[(c * np + ga, e * np + gb)] +=
                                    area * (cfg.mu * (delta + da[e] * db[c]) + cfg.lambda * da[c] * db[e]);
                            }
                            // pressure test function a against velocity basis b
                            d[(ga, c * np + gb)] += area / 3.0 * db[c];
                        }
                    }
                }
            }
        }
    }
    let mut m_u = Matrix::zeros(nu, nu);
    m_u.view_mut((0, 0), (np, np)).copy_from(&m_p);
    m_u.view_mut((np, np), (np, np)).copy_from(&m_p);
    let mut b_f = Matrix::zeros(nu, 1);
    b_f.view_mut((np, 0), (np, 1)).copy_from(&load);
    PoroBlocks {
        m_u,
        k_u: sym(&k_u),
        m_p,
        k_p: sym(&k_p),
        d,
        b_f,
        b_g: load,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kyp::kyp_residual;
    use crate::linalg::{eig, inverse};

    fn small(eta: f64) -> PoroModel {
        generate_poro(&PoroConfig {
            mesh_divisions: 4,
            eta,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn dimension_formula() {
        let m = small(1e-3);
        assert_eq!(m.system.n(), PoroConfig { mesh_divisions: 4, ..Default::default() }.state_dim());
        assert_eq!(PoroConfig::default().state_dim(), 980);
    }

    #[test]
    fn structure_of_tiny_model() {
        let m = generate_poro(&PoroConfig { mesh_divisions: 3, ..Default::default() }).unwrap();
        assert!(m.ph.check().is_valid(1e-10));
        assert_eq!((&m.j + m.j.transpose()).norm(), 0.0);
        assert!(min_sym_eig(&m.r) >= -1e-12);
    }

    fn blocks(mu: f64, lambda: f64) -> PoroBlocks {
        assemble(&PoroConfig {
            mesh_divisions: 4,
            mu,
            lambda,
            ..Default::default()
        })
    }

    #[test]
    fn laplacian_is_five_point_stencil() {
        let b = blocks(1.0, 1.0);
        let ni: usize = 3;
        for a in 0..9 {
            for c in 0..9 {
                let (ia, ja, ic, jc) = (a % ni, a / ni, c % ni, c / ni);
                let dist = ia.abs_diff(ic) + ja.abs_diff(jc);
                let want = match dist {
                    0 => 4.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert!((b.k_p[(a, c)] - want).abs() < 1e-12, "({a},{c})");
            }
        }
    }

    #[test]
    fn mass_and_load_integrals() {
        let b = blocks(1.0, 1.0);
        let h2 = 1.0 / 16.0;
        // every interior hat integrates to h^2
        assert!(b.b_g.iter().all(|v| (v - h2).abs() < 1e-15));
        // the centre node has only interior neighbours: its row sums to h^2
        assert!((b.m_p.row(4).sum() - h2).abs() < 1e-15);
        assert_eq!(b.b_f.rows(0, 9).amax(), 0.0);
    }

    #[test]
    fn divergence_blocks_are_skew() {
        // int psi d_c phi = -int d_c psi phi for fields vanishing on the boundary
        let b = blocks(1.0, 1.0);
        for c in 0..2 {
            let dc = b.d.columns(9 * c, 9).into_owned();
            assert!((&dc + dc.transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn elasticity_splits_into_lame_parts() {
        let k1 = blocks(1.0, 0.0).k_u;
        let k2 = blocks(0.0, 1.0).k_u;
        let kp = blocks(1.0, 0.0).k_p;
        let blk = |k: &Matrix, c: usize, e: usize| k.view((9 * c, 9 * e), (9, 9)).into_owned();
        // div-div part: sum of diagonal blocks is the Laplacian
        assert!((blk(&k2, 0, 0) + blk(&k2, 1, 1) - &kp).amax() < 1e-12);
        // 2 eps:eps part: diagonal blocks are Laplacian + d_c d_c
        assert!((blk(&k1, 0, 0) + blk(&k1, 1, 1) - &kp * 3.0).amax() < 1e-12);
        assert!((blk(&k1, 0, 1) - blk(&k2, 1, 0)).amax() < 1e-12);
        let full = blocks(12.0, 6.0).k_u;
        assert!((&full - (&k1 * 12.0 + &k2 * 6.0)).amax() < 1e-10);
    }

    #[test]
    fn passive_after_conversion() {
        let m = small(1e-3);
        let (std, q) = generalized_to_standard(&m.system).unwrap();
        let w = kyp_residual(&std, &q).unwrap();
        assert!(min_sym_eig(&w) >= -1e-8 * w.norm().max(1.0));
    }

    #[test]
    fn damping_shifts_spectrum_left() {
        let undamped = small(0.0);
        let damped = small(1e-1);
        let abscissa = |m: &PoroModel| {
            let einv = inverse(&m.e).unwrap();
            let a = &einv * m.system.a();
            let ev = eig(&a).unwrap().values;
            let close = ev.iter().filter(|z| z.re.abs() < 1e-6 * z.norm().max(1.0) && z.im.abs() > 0.0).count();
            (ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max), close)
        };
        let (a0, c0) = abscissa(&undamped);
        let (a1, _) = abscissa(&damped);
        assert!(c0 > 0, "undamped model should have near-imaginary pairs");
        assert!(a1 < a0);
    }
}
