//! Loading, preprocessing and single reduction runs shared by the commands.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use pamor::kyp::{ph_from_lure, provided_solution, solve_kyp_extremal, KypSolution, Which};
use pamor::lti::{
    h2_error, hinf_norm, is_passive_sampled, minimal_realization, ph_minimal_realization,
    FrequencyGrid, H2Distance, PhRepresentation, StateSpace,
};
use pamor::models::{generate_msd, generate_poro, read_manifest, ModelManifest, MsdConfig, PoroConfig, Role};
use pamor::par::Execution;
use pamor::reducers::{irka, ph_irka, prbt, ReducerConfig};
use pamor::sfmor::{build_spectral_factor, h2_bound, reduce_passive, IrkaInner};
use pamor::{Error, Result};

use crate::args::{Kind, Method, ModelArgs, SolverArgs};

/// A full-order model as loaded.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    /// Standard-form realization.
    pub fom: StateSpace,
    pub ph: Option<PhRepresentation>,
    pub manifest: ModelManifest,
}

impl Model {
    pub fn from_manifest(manifest: ModelManifest) -> Result<Self> {
        let ph = manifest.ph().transpose()?;
        let fom = manifest.state_space()?.to_standard()?;
        Ok(Model {
            name: manifest.name.clone(),
            fom,
            ph,
            manifest,
        })
    }
}

pub fn msd_manifest(cfg: &MsdConfig, name: &str) -> Result<ModelManifest> {
    let ph = generate_msd(cfg)?;
    let mut man = ModelManifest::new(name)
        .with_param("generator", "msd")
        .with_param("n", cfg.n)
        .with_param("masses", cfg.masses)
        .with_param("stiffness", cfg.stiffness)
        .with_param("damping", cfg.damping)
        .with_param("inputs", cfg.inputs);
    man.insert_ph(&ph);
    Ok(man)
}

/// `A, B, C, D, E` of the generalized system plus `J, R, G`, where `R`
/// includes the artificial damping.
pub fn poro_manifest(cfg: &PoroConfig, name: &str) -> Result<ModelManifest> {
    let m = generate_poro(cfg)?;
    let mut man = ModelManifest::from_state_space(name, &m.system)
        .with_param("generator", "poro")
        .with_param("mesh_divisions", cfg.mesh_divisions)
        .with_param("mu", cfg.mu)
        .with_param("lambda", cfg.lambda)
        .with_param("rho", cfg.rho)
        .with_param("alpha", cfg.alpha)
        .with_param("inv_m", cfg.inv_m)
        .with_param("kappa_over_nu", cfg.kappa_over_nu)
        .with_param("eta", cfg.eta);
    man.matrices.insert(Role::J, m.ph.j);
    man.matrices.insert(Role::R, m.ph.r);
    man.matrices.insert(Role::G, m.ph.g);
    Ok(man)
}

pub fn load_model(args: &ModelArgs) -> Result<Model> {
    let manifest = match args.model.as_str() {
        "msd" => {
            let cfg = MsdConfig {
                n: args.n.unwrap_or(MsdConfig::default().n),
                ..Default::default()
            };
            msd_manifest(&cfg, &format!("msd{}", cfg.n))?
        }
        "poro" => {
            let cfg = PoroConfig {
                mesh_divisions: args.mesh.unwrap_or(PoroConfig::default().mesh_divisions),
                ..Default::default()
            };
            poro_manifest(&cfg, &format!("poro{}", cfg.mesh_divisions))?
        }
        path => {
            let mut man = read_manifest(Path::new(path))?;
            if man.name.is_empty() {
                man.name = Path::new(path)
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("model")
                    .to_string();
            }
            man
        }
    };
    Model::from_manifest(manifest)
}

/// A model with its minimal realization and cached reference data.
pub struct Prepared {
    pub model: Model,
    /// Minimal realization every reducer works on.
    pub base: StateSpace,
    /// Structure-preserving minimal realization (`Q = I`), for pH models.
    pub base_ph: Option<PhRepresentation>,
    pub fom_h2: H2Distance,
    pub fom_h2_norm: f64,
    /// `||G_fom - G_base||_H2`.
    pub truncation_error: f64,
    /// `||G_base||_inf`, the reference for relative H-infinity errors.
    pub base_hinf_norm: f64,
    pub epsilon: Option<f64>,
    pub exec: Execution,
    solutions: Mutex<HashMap<Kind, KypSolution>>,
}

pub fn prepare(model: Model, args: &ModelArgs, exec: Execution) -> Result<Prepared> {
    let (base, base_ph) = match &model.ph {
        Some(ph) => {
            let m = ph_minimal_realization(ph, args.min_tol)?;
            (m.to_state_space()?, Some(m))
        }
        None => (minimal_realization(&model.fom, args.min_tol)?, None),
    };
    log::info!("{}: {} states, minimal realization {}", model.name, model.fom.n(), base.n());
    let fom_h2 = H2Distance::new(&model.fom)?;
    let fom_h2_norm = fom_h2.norm()?;
    let truncation_error = fom_h2.distance(&base)?;
    let base_hinf_norm = hinf_norm(&base, 1e-8)?;
    Ok(Prepared {
        model,
        base,
        base_ph,
        fom_h2,
        fom_h2_norm,
        truncation_error,
        base_hinf_norm,
        epsilon: args.epsilon,
        exec,
        solutions: Mutex::new(HashMap::new()),
    })
}

impl Prepared {
    /// KYP solution of the minimal realization, computed once per kind.
    pub fn solution(&self, kind: Kind) -> Result<KypSolution> {
        if let Some(s) = self.solutions.lock().unwrap().get(&kind) {
            return Ok(s.clone());
        }
        let sol = match kind {
            Kind::Min | Kind::Max => {
                let which = if kind == Kind::Min { Which::Min } else { Which::Max };
                let ext = solve_kyp_extremal(&self.base, self.epsilon, which)?;
                ext.min.or(ext.max).expect("requested")
            }
            Kind::Q => {
                let ph = self.base_ph.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("solution kind q needs a model with a pH representation".into())
                })?;
                provided_solution(&self.base, &ph.q, 1e-10)?
            }
        };
        self.solutions.lock().unwrap().insert(kind, sol.clone());
        Ok(sol)
    }

    pub fn reducer_config(&self, solver: &SolverArgs) -> ReducerConfig {
        ReducerConfig {
            max_iters: solver.max_iters,
            conv_tol: solver.conv_tol,
            restarts: solver.restarts,
            seed: solver.seed,
            exec: self.exec,
            ..Default::default()
        }
    }
}

/// One reduction request.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub method: Method,
    pub kind: Option<Kind>,
    pub r: usize,
    pub cfg: ReducerConfig,
}

/// Diagnostics of one run; a CSV row.
#[derive(Clone, Debug, Default)]
pub struct RunRecord {
    pub r: usize,
    pub method: String,
    pub solution_kind: String,
    /// Absolute H2 error against the full-order model.
    pub h2_error: Option<f64>,
    pub h2_error_rel: Option<f64>,
    /// Absolute H-infinity error against the minimal realization.
    pub hinf_error: Option<f64>,
    pub hinf_error_rel: Option<f64>,
    /// `c(H, H~) ||H - H~||_H2` (spectral-factor runs with `M~ = M`).
    pub h2_bound_rhs: Option<f64>,
    /// The bound compared against the error w.r.t. the minimal realization.
    pub bound_holds: Option<bool>,
    pub stable: Option<bool>,
    /// Sampled positive-realness check.
    pub passive: Option<bool>,
    pub passivity_margin: Option<f64>,
    pub wall_time_s: f64,
    pub status: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "r",
    "method",
    "solution_kind",
    "h2_error",
    "hinf_error",
    "h2_bound_rhs",
    "wall_time_s",
    "h2_error_rel",
    "hinf_error_rel",
    "bound_holds",
    "stable",
    "passive",
    "passivity_margin",
    "status",
];

impl RunRecord {
    pub fn failed(spec: &RunSpec, err: &Error) -> Self {
        RunRecord {
            r: spec.r,
            method: spec.method.name().into(),
            solution_kind: kind_label(spec),
            status: format!("error: {err}"),
            ..Default::default()
        }
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        let b = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.r.to_string(),
            self.method.clone(),
            self.solution_kind.clone(),
            f(self.h2_error),
            f(self.hinf_error),
            f(self.h2_bound_rhs),
            format!("{:.3}", self.wall_time_s),
            f(self.h2_error_rel),
            f(self.hinf_error_rel),
            b(self.bound_holds),
            b(self.stable),
            b(self.passive),
            f(self.passivity_margin),
            self.status.clone(),
        ]
    }
}

pub fn kind_label(spec: &RunSpec) -> String {
    match (spec.method.uses_kind(), spec.kind) {
        (true, Some(k)) => k.name().into(),
        _ => "-".into(),
    }
}

pub struct RunOutcome {
    pub rom: StateSpace,
    pub ph: Option<PhRepresentation>,
    pub record: RunRecord,
}

fn required_kind(spec: &RunSpec) -> Result<Kind> {
    spec.kind.ok_or_else(|| {
        Error::InvalidConfig(format!("method {} needs a solution kind", spec.method.name()))
    })
}

pub fn passivity_grid() -> FrequencyGrid {
    FrequencyGrid::logarithmic(1e-4, 1e4, 400).expect("valid grid")
}

/// Runs one reduction of `prep.base` and measures it.
pub fn run(prep: &Prepared, spec: &RunSpec) -> Result<RunOutcome> {
    let n = prep.base.n();
    if spec.r == 0 || spec.r > n {
        return Err(Error::InvalidConfig(format!(
            "reduced order must be in 1..={n} (minimal realization), got {}",
            spec.r
        )));
    }
    let t0 = Instant::now();
    let mut bound_input = None;
    let (rom, ph) = match spec.method {
        Method::SpectralFactor => {
            let sol = prep.solution(required_kind(spec)?)?;
            let b = reduce_passive(&prep.base, &sol, spec.r, &IrkaInner(spec.cfg.clone()))?;
            bound_input = Some((sol, b.rom_spectral.clone()));
            (b.rom, b.ph)
        }
        Method::PhIrka => {
            let ph = match required_kind(spec)? {
                Kind::Q => prep.base_ph.clone().ok_or_else(|| {
                    Error::InvalidConfig("solution kind q needs a model with a pH representation".into())
                })?,
                k => ph_from_lure(&prep.base, &prep.solution(k)?)?,
            };
            let red = ph_irka(&ph, spec.r, &spec.cfg)?;
            (red.rom, red.ph)
        }
        Method::Irka => (irka(&prep.base, spec.r, &spec.cfg)?.rom, None),
        Method::Prbt => (prbt(&prep.base, spec.r)?.rom, None),
    };
    let wall_time_s = t0.elapsed().as_secs_f64();

    let stable = rom.is_stable()?;
    let mut rec = RunRecord {
        r: spec.r,
        method: spec.method.name().into(),
        solution_kind: kind_label(spec),
        stable: Some(stable),
        wall_time_s,
        status: "ok".into(),
        ..Default::default()
    };
    if stable {
        let e = prep.fom_h2.distance(&rom)?;
        rec.h2_error = Some(e);
        rec.h2_error_rel = Some(e / prep.fom_h2_norm);
        let hinf = hinf_norm(&prep.base.difference(&rom)?, 1e-6)?;
        rec.hinf_error = Some(hinf);
        rec.hinf_error_rel = Some(hinf / prep.base_hinf_norm);
    }
    let rep = is_passive_sampled(&rom, &passivity_grid(), prep.exec)?;
    rec.passive = Some(stable && rep.passive);
    rec.passivity_margin = Some(rep.worst_margin);
    if let (Some((sol, rom_spectral)), true) = (bound_input, stable) {
        let spectral = build_spectral_factor(&prep.base, &sol)?.system;
        let g_err = h2_error(&prep.base, &rom)?;
        match h2_bound(&spectral, &rom_spectral, g_err) {
            Ok(b) => {
                rec.h2_bound_rhs = Some(b.rhs);
                rec.bound_holds = Some(b.holds);
            }
            Err(Error::FeedthroughMismatch { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(RunOutcome { rom, ph, record: rec })
}

/// ROM manifest: state space plus the pH roles when available.
pub fn rom_manifest(name: &str, out: &RunOutcome, params: &BTreeMap<String, String>) -> ModelManifest {
    let mut man = ModelManifest::from_state_space(name, &out.rom);
    man.params = params.clone();
    if let Some(ph) = &out.ph {
        man.insert_ph(ph);
    }
    man
}
