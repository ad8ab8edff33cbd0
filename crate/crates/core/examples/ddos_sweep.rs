//! Sweeps the flooding game over the bundled grid and prints the per-type
//! findings. Pass a path to write the full CSV.

use std::time::Instant;

use pvccs::cases::{ddos_params, ddos_sweep};
use pvccs::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ddos_params();
    let start = Instant::now();
    let sweep = ddos_sweep(&params, &SolverConfig::default())?;
    print!("{}", sweep.summary(&params));
    println!("{} grid points in {:.2?}", sweep.rows.len(), start.elapsed());
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, sweep.to_csv())?;
        println!("wrote {path}");
    }
    Ok(())
}
