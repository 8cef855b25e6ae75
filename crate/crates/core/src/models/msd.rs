use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lti::PhRepresentation;

/// Mass-spring-damper chain parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MsdConfig {
    /// State dimension, `2 x` the number of masses.
    pub n: usize,
    pub masses: f64,
    pub stiffness: f64,
    pub damping: f64,
    /// Forces act on the first `inputs` masses.
    pub inputs: usize,
}

impl Default for MsdConfig {
    fn default() -> Self {
        MsdConfig {
            n: 1000,
            masses: 4.0,
            stiffness: 4.0,
            damping: 1.0,
            inputs: 2,
        }
    }
}

impl MsdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidConfig(format!("MSD state dimension must be even and positive, got {}", self.n)));
        }
        for (v, name) in [(self.masses, "mass"), (self.stiffness, "stiffness"), (self.damping, "damping")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.inputs == 0 || self.inputs > self.n / 2 {
            return Err(Error::InvalidConfig(format!("{} inputs for {} masses", self.inputs, self.n / 2)));
        }
        Ok(())
    }
}

/// Chain of `n/2` masses in energy coordinates `[q_1, p_1, q_2, p_2, ...]`.
///
/// Spring `i` joins mass `i` to mass `i+1` (the last one to the wall), so
/// `q_i' = v_i - v_{i+1}`. Every mass has a damper to ground. Inputs are
/// forces on the first masses and outputs `C = B^T Q` their velocities.
pub fn generate_msd(cfg: &MsdConfig) -> Result<PhRepresentation> {
    cfg.validate()?;
    let n = cfg.n;
    let cells = n / 2;
    let (q, p) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    let mut j = Matrix::zeros(n, n);
    let mut r = Matrix::zeros(n, n);
    let mut qm = Matrix::zeros(n, n);
    for i in 0..cells {
        j[(q(i), p(i))] = 1.0;
        j[(p(i), q(i))] = -1.0;
        if i + 1 < cells {
            j[(q(i), p(i + 1))] = -1.0;
            j[(p(i + 1), q(i))] = 1.0;
        }
        r[(p(i), p(i))] = cfg.damping;
        qm[(q(i), q(i))] = cfg.stiffness;
        qm[(p(i), p(i))] = 1.0 / cfg.masses;
    }
    let mut g = Matrix::zeros(n, cfg.inputs);
    for k in 0..cfg.inputs {
        g[(p(k), k)] = 1.0;
    }
    let m = cfg.inputs;
    PhRepresentation::new(
        j,
        r,
        qm,
        g,
        Matrix::zeros(n, m),
        Matrix::zeros(m, m),
        Matrix::zeros(m, m),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{is_passive_sampled, FrequencyGrid};
    use crate::par::Execution;

    #[test]
    fn single_cell() {
        let ph = generate_msd(&MsdConfig { n: 2, inputs: 1, ..Default::default() }).unwrap();
        assert_eq!(ph.dim(), 2);
        let sys = ph.to_state_space().unwrap();
        assert!(sys.is_stable().unwrap());
        let rep = is_passive_sampled(&sys, &FrequencyGrid::default(), Execution::Sequential).unwrap();
        assert!(rep.passive && rep.worst_margin >= -1e-8 * rep.scale);
    }

    #[test]
    fn structure_any_size() {
        for n in [4, 10, 40] {
            let ph = generate_msd(&MsdConfig { n, ..Default::default() }).unwrap();
            assert!(ph.check().is_valid(1e-14));
            let sys = ph.to_state_space().unwrap();
            assert!((sys.c() - sys.b().transpose() * &ph.q).norm() == 0.0);
        }
    }

    #[test]
    fn rejects_odd_dimension() {
        assert!(matches!(
            generate_msd(&MsdConfig { n: 3, ..Default::default() }),
            Err(Error::InvalidConfig(_))
        ));
    }
}
