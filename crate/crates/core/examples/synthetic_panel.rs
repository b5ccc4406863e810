//! Writes the synthetic 128-series monthly panel in FRED-MD layout.
//!
//! Usage: `cargo run -p diffuse-core --example synthetic_panel -- OUT.csv`

use diffuse_core::ingest::serialize_fred_csv;
use diffuse_core::simulation::{synthetic_macro_panel, SyntheticMacroConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).ok_or("usage: synthetic_panel OUT.csv")?;
    let panel = synthetic_macro_panel(&SyntheticMacroConfig::default())?;
    std::fs::write(&out, serialize_fred_csv(&panel)?)?;
    Ok(())
}
