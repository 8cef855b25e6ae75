//! Benchmark generators and model/result serialization.

mod io;
mod msd;
mod poro;

pub use io::{
    read_manifest, read_matrix_market, render_svg, write_csv, write_manifest, write_matrix_market,
    write_svg_plot, ModelManifest, Plot, Role, Series, MANIFEST_FORMAT,
};
pub use msd::{generate_msd, MsdConfig};
pub use poro::{generate_poro, PoroBlocks, PoroConfig, PoroModel};
