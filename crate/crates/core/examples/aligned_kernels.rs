//! Builds input kernels with a prescribed alignment to a random label kernel
//! and prints their alignment and effective dimensionality.
//!
//! Usage: cargo run --release --example aligned_kernels [clusters] [outputs]

use repgeo::kernels::{cka, embed_kernel, gram_from_features, line_kernel, max_dim_kernel, participation_ratio, sample_aligned_kernel};
use repgeo::linalg::Rng;
use repgeo::tasks::random_balanced_labels;

fn main() -> repgeo::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let p = args.next().flatten().unwrap_or(8);
    let k = args.next().flatten().unwrap_or(2);
    let mut rng = Rng::new(7);
    let labels = random_balanced_labels(p, k, &mut rng)?;
    let k_y = gram_from_features(&labels).normalized()?;
    let k_max = max_dim_kernel(&k_y, p)?;
    println!("P = {p}, k = {k}; K_max participation ratio {:.3}", participation_ratio(&k_max)?);
    println!("target   line: cka    p.r.   sampled: cka    p.r.   embedded cka");
    for c in [0.0, 0.3, 0.6, 0.9] {
        let line = line_kernel(&k_y, &k_max, c)?;
        let sampled = sample_aligned_kernel(&k_y, c, p, &mut rng)?;
        // Realize the sampled kernel as points in 100 dimensions and re-measure.
        let x = embed_kernel(&sampled, 100, &mut rng)?;
        let k_x = gram_from_features(&x).normalized()?;
        println!(
            "{c:.1}            {:.4}  {:.3}           {:.4}  {:.3}   {:.4}",
            cka(&line, &k_y)?,
            participation_ratio(&line)?,
            cka(&sampled, &k_y)?,
            participation_ratio(&sampled)?,
            cka(&k_x, &k_y)?
        );
    }
    Ok(())
}
