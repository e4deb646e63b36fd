//! Trains Tanh and ReLU networks on the four-cluster task and prints the
//! geometry of their hidden layers, averaged over seeds.
//!
//! Usage: cargo run --release --example train_and_report [seeds]

use repgeo::geometry::{full_report, ReportOptions};
use repgeo::harness::{small_net_training, SMALL_NET_WIDTH};
use repgeo::linalg::Rng;
use repgeo::net::{init_network, train, ActivationKind, ReadoutMode, TrainConfig};
use repgeo::tasks::{unstructured_task, DEFAULT_INPUT_DIM};

fn main() -> repgeo::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let opts = ReportOptions::default();
    println!("activation  target  input  PS     CCGP   trained  untrained  epochs");
    for kind in [ActivationKind::Tanh, ActivationKind::Relu] {
        let mut sums = [0.0; 7];
        for seed in 0..seeds {
            let rng = Rng::new(seed);
            let task = unstructured_task(4, DEFAULT_INPUT_DIM, &mut rng.child(0))?;
            let mut net = init_network(&task, &[SMALL_NET_WIDTH], kind, ReadoutMode::FrozenDiscrete, &mut rng.child(1))?;
            let cfg = TrainConfig { seed: rng.child(2).seed(), ..small_net_training() };
            let summary = train(&mut net, &task, &cfg, None)?;
            let r = full_report(&net, &task, 0, &mut rng.child(3), &opts)?;
            let row = [
                r.target_alignment,
                r.input_alignment,
                r.mean_parallelism().unwrap_or(f64::NAN),
                r.mean_ccgp().unwrap_or(f64::NAN),
                r.trained_decoding.unwrap_or(f64::NAN),
                r.untrained_decoding.unwrap_or(f64::NAN),
                summary.epochs as f64,
            ];
            sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        let m: Vec<f64> = sums.iter().map(|s| s / seeds as f64).collect();
        println!(
            "{:<11} {:.3}   {:.3}  {:.3}  {:.3}  {:.3}    {:.3}      {:.0}",
            kind.label(), m[0], m[1], m[2], m[3], m[4], m[5], m[6]
        );
    }
    Ok(())
}
