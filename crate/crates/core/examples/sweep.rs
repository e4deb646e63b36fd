//! Runs a small δ-XOR sweep through the experiment harness and writes
//! results, checkpoints and plots to a directory.
//!
//! Usage: cargo run --release --example sweep [out_dir]

use std::path::PathBuf;

use repgeo::harness::{run, Coord, Experiment, ExperimentConfig};

fn main() -> repgeo::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    let mut cfg = ExperimentConfig::preset(Experiment::Fig2Delta { deltas: vec![0.0, 0.5, 1.0] }, (0..3).collect());
    cfg.train = cfg.train.map(|t| repgeo::net::TrainConfig { epochs: 500, ..t });
    let outcome = run(&cfg, &out, 1, 0)?;
    for delta in [0.0, 0.5, 1.0] {
        for act in ["tanh", "relu"] {
            if let Some(row) = outcome.table.find(act, "target_alignment", &[("delta", Coord::Num(delta))]) {
                println!("delta {delta:.1} {act:<5} target alignment {:.3} ± {:.3}", row.mean, row.std);
            }
        }
    }
    println!("{} files written under {}", outcome.written.len(), out.display());
    Ok(())
}
