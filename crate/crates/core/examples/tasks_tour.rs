//! Prints a summary of every task family: cluster count, outputs, and the
//! alignment between the cluster geometry and the labels.
//!
//! Usage: cargo run --release --example tasks_tour

use repgeo::kernels::cka;
use repgeo::linalg::Rng;
use repgeo::tasks::{
    aligned_task, class_axes, delta_xor_task, easy_task, hard_task, two_output_task, unstructured_task, TaskSpec,
    DEFAULT_INPUT_DIM,
};

fn describe(name: &str, task: &TaskSpec) -> repgeo::Result<()> {
    let alignment = cka(&task.center_kernel().normalized()?, &task.label_kernel().normalized()?)?;
    let axes = class_axes(task).ok();
    let note = match axes {
        Some(a) if a.degenerate => "degenerate inter-class axis",
        Some(_) => "",
        None => "multi-output",
    };
    println!(
        "{name:<18} P={:<3} k={} input-label alignment {alignment:.3} {note}",
        task.n_clusters(),
        task.n_outputs()
    );
    Ok(())
}

fn main() -> repgeo::Result<()> {
    let n = DEFAULT_INPUT_DIM;
    let rng = Rng::new(3);
    describe("unstructured", &unstructured_task(4, n, &mut rng.child(0))?)?;
    for delta in [0.0, 0.5, 1.0] {
        describe(&format!("delta xor {delta}"), &delta_xor_task(delta, n, &mut rng.child(1))?)?;
    }
    describe("two outputs", &two_output_task(n, &mut rng.child(2))?)?;
    describe("aligned c=0.3", &aligned_task(32, 5, 0.3, n, true, &mut rng.child(3))?)?;
    describe("easy", &easy_task(n, &mut rng.child(4))?)?;
    describe("hard", &hard_task(n, &mut rng.child(5))?)?;
    Ok(())
}
