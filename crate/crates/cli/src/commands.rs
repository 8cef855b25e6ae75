use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pamor::kyp::{provided_solution, solve_kyp_extremal, verify_kyp, KypSolution, Which};
use pamor::lti::{hankel_singular_values, is_passive_sampled};
use pamor::models::{write_csv, write_manifest, write_svg_plot, MsdConfig, Plot, PoroConfig, Series};
use pamor::par::{self, Execution};
use pamor::sfmor::hankel_ordering_check;
use pamor::Error;

use crate::args::{
    parse_methods, parse_orders, AnalyzeArgs, GenerateModel, Kind, Method, ReduceArgs, SweepArgs,
};
use crate::pipeline::{
    kind_label, load_model, msd_manifest, passivity_grid, poro_manifest, prepare, rom_manifest, run, RunRecord,
    RunSpec, CSV_HEADER,
};
use crate::CliError;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn generate(model: &GenerateModel, out_dir: &Path) -> Result<PathBuf, CliError> {
    let man = match model {
        GenerateModel::Msd {
            n,
            masses,
            stiffness,
            damping,
            inputs,
            name,
        } => {
            let cfg = MsdConfig {
                n: *n,
                masses: *masses,
                stiffness: *stiffness,
                damping: *damping,
                inputs: *inputs,
            };
            msd_manifest(&cfg, name.as_deref().unwrap_or(&format!("msd{n}")))?
        }
        GenerateModel::Poro {
            mesh,
            mu,
            lambda,
            rho,
            alpha,
            inv_m,
            kappa_over_nu,
            eta,
            name,
        } => {
            let d = PoroConfig::default();
            let cfg = PoroConfig {
                mesh_divisions: *mesh,
                mu: mu.unwrap_or(d.mu),
                lambda: lambda.unwrap_or(d.lambda),
                rho: rho.unwrap_or(d.rho),
                alpha: alpha.unwrap_or(d.alpha),
                inv_m: inv_m.unwrap_or(d.inv_m),
                kappa_over_nu: kappa_over_nu.unwrap_or(d.kappa_over_nu),
                eta: eta.unwrap_or(d.eta),
            };
            poro_manifest(&cfg, name.as_deref().unwrap_or(&format!("poro{mesh}")))?
        }
    };
    ensure_dir(out_dir)?;
    let path = out_dir.join(format!("{}.manifest", man.name));
    write_manifest(&man, &path)?;
    let (n, m) = man
        .get(pamor::models::Role::G)
        .or(man.get(pamor::models::Role::B))
        .map(|g| g.shape())
        .unwrap_or_default();
    println!("wrote {} ({} states, {} inputs, {} matrices)", path.display(), n, m, man.matrices.len());
    if let Some(ph) = man.ph().transpose()? {
        let c = ph.check();
        println!(
            "structure: J skew {:.1e}, N skew {:.1e}, min eig [[R,P],[P^T,S]] {:.3e}, min eig Q {:.3e}",
            c.j_skew, c.n_skew, c.dissipation_min_eig, c.q_min_eig
        );
    }
    Ok(path)
}

fn spec_for(method: Method, kind: Option<Kind>, r: usize, cfg: &pamor::reducers::ReducerConfig) -> RunSpec {
    RunSpec {
        method,
        kind,
        r,
        cfg: cfg.clone(),
    }
}

pub fn reduce(args: &ReduceArgs, out_dir: &Path, exec: Execution) -> Result<RunRecord, CliError> {
    if args.method.uses_kind() && args.kind.is_none() {
        return Err(CliError::Usage(format!("--kind is required for {}", args.method.name())));
    }
    if !args.method.uses_kind() && args.kind.is_some() {
        log::warn!("{} ignores --kind", args.method.name());
    }
    let prep = prepare(load_model(&args.model)?, &args.model, exec)?;
    if args.r == 0 || args.r > prep.base.n() {
        return Err(CliError::Usage(format!(
            "-r must be in 1..={} (order of the minimal realization)",
            prep.base.n()
        )));
    }
    let cfg = prep.reducer_config(&args.solver);
    let spec = spec_for(args.method, args.kind, args.r, &cfg);
    let out = run(&prep, &spec)?;
    let rec = &out.record;

    ensure_dir(out_dir)?;
    let stem = format!("{}_{}_{}_r{}", prep.model.name, args.method.name(), kind_label(&spec), args.r)
        .replace("_-_", "_");
    let mut params = BTreeMap::new();
    params.insert("source".to_string(), prep.model.name.clone());
    params.insert("method".to_string(), args.method.name().to_string());
    params.insert("solution_kind".to_string(), kind_label(&spec));
    params.insert("seed".to_string(), args.solver.seed.to_string());
    write_manifest(&rom_manifest(&stem, &out, &params), &out_dir.join(format!("{stem}.manifest")))?;
    write_csv(&CSV_HEADER, &[rec.csv_row()], &out_dir.join(format!("{stem}.csv")))?;

    let g = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
    println!(
        "{}: n = {} (minimal {}, truncation H2 error {:.3e}), r = {}",
        prep.model.name,
        prep.model.fom.n(),
        prep.base.n(),
        prep.truncation_error,
        args.r
    );
    println!("method {} kind {}", rec.method, rec.solution_kind);
    println!("H2 error   abs {}  rel {}", g(rec.h2_error), g(rec.h2_error_rel));
    println!("Hinf error abs {}  rel {}", g(rec.hinf_error), g(rec.hinf_error_rel));
    if let Some(rhs) = rec.h2_bound_rhs {
        println!("H2 bound   rhs {rhs:.4e} holds {}", rec.bound_holds.unwrap_or(false));
    }
    println!(
        "stable {} passive {} (sampled margin {})",
        rec.stable.unwrap_or(false),
        rec.passive.unwrap_or(false),
        g(rec.passivity_margin)
    );
    println!("wrote {}", out_dir.join(format!("{stem}.manifest")).display());
    Ok(out.record)
}

/// Runs the sweep grid; failed runs become rows with an error status.
pub fn sweep_records(args: &SweepArgs, exec: Execution) -> Result<(String, Vec<RunRecord>), CliError> {
    let orders = parse_orders(&args.r).map_err(CliError::Usage)?;
    let methods = parse_methods(&args.methods).map_err(CliError::Usage)?;
    if args.kinds.is_empty() {
        return Err(CliError::Usage("no solution kinds given".into()));
    }
    let prep = prepare(load_model(&args.model)?, &args.model, exec)?;
    let cfg = prep.reducer_config(&args.solver);
    let mut jobs = Vec::new();
    for &r in &orders {
        for &m in &methods {
            if m.uses_kind() {
                for &k in &args.kinds {
                    jobs.push(spec_for(m, Some(k), r, &cfg));
                }
            } else {
                jobs.push(spec_for(m, None, r, &cfg));
            }
        }
    }
    // solve the needed KYP problems once, up front
    for &k in &args.kinds {
        if methods.iter().any(|m| m.uses_kind()) {
            if let Err(e) = prep.solution(k) {
                log::warn!("solution kind {}: {e}", k.name());
            }
        }
    }
    log::info!("{} runs on a {}-state model", jobs.len(), prep.base.n());
    let work = || {
        par::map(exec, &jobs, |spec| match run(&prep, spec) {
            Ok(out) => out.record,
            Err(e) => {
                log::warn!("r = {} {} {}: {e}", spec.r, spec.method.name(), kind_label(spec));
                RunRecord::failed(spec, &e)
            }
        })
    };
    let records = match args.jobs {
        Some(j) => with_pool(j, work)?,
        None => work(),
    };
    Ok((prep.model.name.clone(), records))
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_pool<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    Ok(f())
}

pub fn sweep(args: &SweepArgs, out_dir: &Path, exec: Execution) -> Result<Vec<RunRecord>, CliError> {
    let (name, records) = sweep_records(args, exec)?;
    ensure_dir(out_dir)?;
    let csv_path = out_dir.join(format!("{name}_sweep.csv"));
    let rows: Vec<Vec<String>> = records.iter().map(RunRecord::csv_row).collect();
    write_csv(&CSV_HEADER, &rows, &csv_path)?;

    let mut curves: BTreeMap<(String, String), Series> = BTreeMap::new();
    for rec in &records {
        let y = if args.relative { rec.h2_error_rel } else { rec.h2_error };
        let key = (rec.method.clone(), rec.solution_kind.clone());
        let label = match rec.solution_kind.as_str() {
            "-" => rec.method.clone(),
            k => format!("{} ({k})", rec.method),
        };
        let s = curves.entry(key).or_insert_with(|| Series {
            label,
            x: Vec::new(),
            y: Vec::new(),
        });
        s.x.push(rec.r as f64);
        s.y.push(y.unwrap_or(f64::NAN));
    }
    let plot = Plot {
        title: format!("{name}: H2 error"),
        x_label: "reduced order r".into(),
        y_label: if args.relative { "relative H2 error" } else { "H2 error" }.into(),
        log_y: true,
        series: curves.into_values().collect(),
    };
    let svg_path = out_dir.join(format!("{name}_sweep.svg"));
    write_svg_plot(&plot, &svg_path)?;
    let failed = records.iter().filter(|r| r.status != "ok").count();
    println!(
        "{} runs ({} failed); wrote {} and {}",
        records.len(),
        failed,
        csv_path.display(),
        svg_path.display()
    );
    Ok(records)
}

/// Outcome of `analyze`.
#[derive(Debug)]
pub struct Analysis {
    pub passive: bool,
    pub certified: Vec<(Kind, bool)>,
    /// Hankel values of the model and of the spectral factors, per kind.
    pub model_hsv: Vec<f64>,
    pub factor_hsv: Vec<(Kind, Vec<f64>)>,
    pub ordering_holds: Option<bool>,
}

pub fn analyze(args: &AnalyzeArgs, out_dir: &Path, exec: Execution) -> Result<Analysis, CliError> {
    let prep = prepare(load_model(&args.model)?, &args.model, exec)?;
    let name = prep.model.name.clone();
    let rep = is_passive_sampled(&prep.base, &passivity_grid(), exec)?;
    println!(
        "{name}: n = {} (minimal {}), sampled Popov margin {:.3e} at w = {:.3e} -> {}",
        prep.model.fom.n(),
        prep.base.n(),
        rep.worst_margin,
        rep.worst_frequency,
        if rep.passive { "passive" } else { "NOT passive" }
    );

    let mut sols: Vec<(Kind, KypSolution)> = Vec::new();
    let mut failures = Vec::new();
    match solve_kyp_extremal(&prep.base, prep.epsilon, Which::Both) {
        Ok(ext) => {
            sols.push((Kind::Min, ext.min.expect("requested")));
            sols.push((Kind::Max, ext.max.expect("requested")));
        }
        Err(e) => failures.push(format!("extremal KYP solutions: {e}")),
    }
    if let Some(ph) = &prep.base_ph {
        match provided_solution(&prep.base, &ph.q, 1e-10) {
            Ok(s) => sols.push((Kind::Q, s)),
            Err(e) => failures.push(format!("Q: {e}")),
        }
    }
    let mut certified = Vec::new();
    for (k, sol) in &sols {
        let r = verify_kyp(&prep.base, sol)?;
        let ok = r.certified(sol.epsilon);
        println!(
            "X_{:<3} certified {ok}: lambda_min(W) {:.3e}, lambda_min(X) {:.3e}, Lur'e residuals {:.1e} {:.1e} {:.1e} (scale {:.1e}), rank {}",
            k.name(),
            r.min_eig,
            r.x_min_eig,
            r.lure_state,
            r.lure_coupling,
            r.lure_feedthrough,
            r.scale,
            sol.rank()
        );
        if !ok {
            failures.push(format!("X_{} is not certified", k.name()));
        }
        certified.push((*k, ok));
    }

    let model_hsv = hankel_singular_values(&prep.base)?;
    let mut factor_hsv = Vec::new();
    let mut ordering_holds = None;
    let good: Vec<(Kind, KypSolution)> = sols
        .iter()
        .zip(&certified)
        .filter(|(_, (_, ok))| *ok)
        .map(|(s, _)| s.clone())
        .collect();
    if !good.is_empty() {
        let only: Vec<KypSolution> = good.iter().map(|(_, s)| s.clone()).collect();
        let ord = hankel_ordering_check(&prep.base, &only, exec)?;
        if good.iter().any(|(k, _)| *k == Kind::Min) && good.len() > 1 {
            println!(
                "Hankel ordering (min below the others): {} (worst violation {:.2e} relative to sigma_1)",
                ord.holds, ord.worst_violation
            );
            ordering_holds = Some(ord.holds);
        }
        factor_hsv = good.iter().map(|(k, _)| *k).zip(ord.sigmas).collect();
    }

    ensure_dir(out_dir)?;
    let len = model_hsv.len();
    let mut header = vec!["k".to_string(), "model".to_string()];
    header.extend(factor_hsv.iter().map(|(k, _)| format!("factor_{}", k.name())));
    let rows: Vec<Vec<String>> = (0..len)
        .map(|i| {
            let mut row = vec![(i + 1).to_string(), format!("{:.6e}", model_hsv[i])];
            row.extend(factor_hsv.iter().map(|(_, s)| s.get(i).map(|v| format!("{v:.6e}")).unwrap_or_default()));
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_path = out_dir.join(format!("{name}_hankel.csv"));
    write_csv(&header_refs, &rows, &csv_path)?;
    let ks: Vec<f64> = (1..=len).map(|k| k as f64).collect();
    let mut series = vec![Series {
        label: "model".into(),
        x: ks.clone(),
        y: model_hsv.clone(),
    }];
    for (k, s) in &factor_hsv {
        series.push(Series {
            label: format!("factor, X = {}", k.name()),
            x: (1..=s.len()).map(|k| k as f64).collect(),
            y: s.clone(),
        });
    }
    let svg_path = out_dir.join(format!("{name}_hankel.svg"));
    write_svg_plot(
        &Plot {
            title: format!("{name}: Hankel singular values"),
            x_label: "k".into(),
            y_label: "sigma_k".into(),
            log_y: true,
            series,
        },
        &svg_path,
    )?;
    println!("wrote {} and {}", csv_path.display(), svg_path.display());

    if !rep.passive {
        failures.push(format!("sampled Popov margin {:.3e}", rep.worst_margin));
    }
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!("certification failed: {}", failures.join("; "))));
    }
    Ok(Analysis {
        passive: rep.passive,
        certified,
        model_hsv,
        factor_hsv,
        ordering_holds,
    })
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
