//! Rebuild one reference grid at reduced replication and print it as CSV.
//!
//! ```text
//! cargo run --release --example reproduce_table -- tab88 500
//! ```

use mhomog::sim::{reproduce_table, RunOptions, TableId, TableOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let id: TableId = args.next().as_deref().unwrap_or("trv2").parse()?;
    let reps = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let art = reproduce_table(
        id,
        TableOptions {
            reps,
            seed: 42,
            run: RunOptions::default(),
        },
    )?;
    art.write_csv(std::io::stdout().lock())?;
    eprintln!("{} cells in {:.1}s", art.sidecar.cells.len(), art.sidecar.wall_seconds);
    Ok(())
}
