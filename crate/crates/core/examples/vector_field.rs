//! Expected weight-update field of one hidden neuron on the four-cluster task,
//! compared against a Monte-Carlo estimate from actual backprop, followed by
//! the fraction of trained neurons whose weights ended up on the inter-class
//! axis.
//!
//! Usage: cargo run --release --example vector_field

use repgeo::dynamics::{classify_regions, field_plane, simulated_update, vector_field, GridSpec};
use repgeo::harness::{small_net_training, SMALL_NET_WIDTH};
use repgeo::linalg::{cosine, Rng};
use repgeo::net::{expected_update, init_network, train, uniform_errors, ActivationKind, ReadoutMode, TrainConfig};
use repgeo::tasks::{class_axes, unstructured_task, DEFAULT_INPUT_DIM};

fn main() -> repgeo::Result<()> {
    let rng = Rng::new(11);
    let task = unstructured_task(4, DEFAULT_INPUT_DIM, &mut rng.child(0))?;
    let axes = class_axes(&task)?;
    let grid = GridSpec { points: 9, ..GridSpec::default() };
    for kind in [ActivationKind::Tanh, ActivationKind::Relu, ActivationKind::Linear] {
        let field = vector_field(&task, &axes, kind, 1.0, &grid, 0.25)?;
        let intra = field.vectors.iter().map(|v| v[1].abs()).fold(0.0, f64::max);
        let inter = field.vectors.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
        println!("{:<7} largest inter component {inter:.4}, largest intra component {intra:.4}", kind.label());
    }

    // Check one point of the field against sampled backprop updates.
    let (_, u, v) = field_plane(&axes, 1.0)?;
    let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.8 * a + 0.6 * b).collect();
    let eps = uniform_errors(&task, 1.0, 0.25);
    let expected = expected_update(&w, 0.0, ActivationKind::Tanh, 1.0, &task, Some(&eps))?;
    let sampled = simulated_update(&task, &w, ActivationKind::Tanh, 1.0, 4000, &mut rng.child(1))?;
    println!("cosine(expected, sampled) = {:.4}", cosine(&expected, &sampled).unwrap_or(f64::NAN));

    for kind in [ActivationKind::Tanh, ActivationKind::Relu] {
        let mut net = init_network(&task, &[SMALL_NET_WIDTH], kind, ReadoutMode::FrozenDiscrete, &mut rng.child(2))?;
        let initial = net.first_layer().weights.clone();
        let cfg = TrainConfig { seed: rng.child(3).seed(), ..small_net_training() };
        train(&mut net, &task, &cfg, None)?;
        let signs: Vec<f64> = (0..SMALL_NET_WIDTH).map(|j| net.readout_column(j)[0]).collect();
        let regions = classify_regions(&initial, &net.first_layer().weights, &axes, &signs)?;
        let labels: Vec<String> = regions.iter().map(|r| r.final_region.to_string()).collect();
        println!("{:<7} final regions: {}", kind.label(), labels.join(" "));
    }
    Ok(())
}
