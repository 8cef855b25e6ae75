use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "pamor", version, about = "Passivity-preserving model-order reduction")]
pub struct Cli {
    /// Directory for manifests, CSV tables and plots.
    #[arg(long, global = true, env = "PAMOR_OUT_DIR", default_value = "pamor-out")]
    pub out_dir: PathBuf,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a benchmark model to disk.
    Generate {
        #[command(subcommand)]
        model: GenerateModel,
    },
    /// Reduce a model once and report errors against the full model.
    Reduce(ReduceArgs),
    /// Run a grid of reductions and write a CSV table and an SVG plot.
    Sweep(SweepArgs),
    /// Hankel values of the spectral factors and KYP certificates.
    Analyze(AnalyzeArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenerateModel {
    /// Mass-spring-damper chain.
    Msd {
        /// State dimension (even).
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 4.0)]
        masses: f64,
        #[arg(long, default_value_t = 4.0)]
        stiffness: f64,
        #[arg(long, default_value_t = 1.0)]
        damping: f64,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long)]
        name: Option<String>,
    },
    /// Biot poroelasticity on the unit square with artificial damping.
    Poro {
        /// Mesh divisions per side.
        #[arg(long, default_value_t = 15)]
        mesh: usize,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        inv_m: Option<f64>,
        #[arg(long)]
        kappa_over_nu: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        name: Option<String>,
    },
}

/// Where the model comes from.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// `msd`, `poro`, or the path of a manifest.
    #[arg(long, short)]
    pub model: String,
    /// State dimension for `--model msd`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mesh divisions for `--model poro`.
    #[arg(long)]
    pub mesh: Option<usize>,
    /// Relative Gramian tolerance of the minimal realization applied before
    /// reduction.
    #[arg(long, default_value_t = 1e-12)]
    pub min_tol: f64,
    /// Regularization of D + D^T in the KYP solver (default: automatic).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random IRKA initializations; the best is kept.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub conv_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum Method {
    SpectralFactor,
    Irka,
    PhIrka,
    Prbt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SpectralFactor, Method::Irka, Method::PhIrka, Method::Prbt];

    pub fn name(self) -> &'static str {
        match self {
            Method::SpectralFactor => "spectral-factor",
            Method::Irka => "irka",
            Method::PhIrka => "ph-irka",
            Method::Prbt => "prbt",
        }
    }

    pub fn uses_kind(self) -> bool {
        matches!(self, Method::SpectralFactor | Method::PhIrka)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum Kind {
    Min,
    Max,
    Q,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Min => "min",
            Kind::Max => "max",
            Kind::Q => "q",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    /// KYP solution defining the energy (spectral-factor and ph-irka).
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Reduced order.
    #[arg(short, long)]
    pub r: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated methods, or `all`.
    #[arg(long, default_value = "all")]
    pub methods: String,
    /// Solution kinds for the methods that need one.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "min")]
    pub kinds: Vec<Kind>,
    /// Orders as `start:step:end`, a comma list, or a single value.
    #[arg(short, long, default_value = "2:2:20")]
    pub r: String,
    /// Worker threads for concurrent runs (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Plot relative instead of absolute H2 errors.
    #[arg(long)]
    pub relative: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

/// Parses `start:step:end`, `a,b,c` or `r`.
pub fn parse_orders(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("cannot parse order range '{s}'");
    let out: Vec<usize> = if s.contains(':') {
        let parts: Vec<usize> = s
            .split(':')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, step, end] = parts[..] else {
            return Err(bad());
        };
        if step == 0 {
            return Err(format!("order range '{s}' has step 0"));
        }
        (start..=end).step_by(step).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(format!("order range '{s}' is empty"));
    }
    if out.contains(&0) {
        return Err("reduced orders must be positive".into());
    }
    Ok(out)
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>, String> {
    if s.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut out = Vec::new();
    for t in s.split(',') {
        let m = Method::from_str(t.trim(), true).map_err(|_| format!("unknown method '{}'", t.trim()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no methods given".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_ranges() {
        assert_eq!(parse_orders("2:2:20").unwrap().len(), 10);
        assert_eq!(parse_orders("4, 8,16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_orders("7").unwrap(), vec![7]);
        assert!(parse_orders("10:2:4").is_err());
        assert!(parse_orders("1:0:4").is_err());
        assert!(parse_orders("0").is_err());
        assert!(parse_orders("a:b").is_err());
    }

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("all").unwrap().len(), 4);
        assert_eq!(parse_methods("irka,ph-irka,irka").unwrap(), vec![Method::Irka, Method::PhIrka]);
        assert!(parse_methods("svd").is_err());
    }

    #[test]
    fn cli_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
