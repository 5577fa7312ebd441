//! Soft-sampling: validation losses become task probabilities through a
//! softmax, and tasks are drawn from them with replacement.
//!
//! ```text
//! cargo run --release --example soft_sampling
//! ```

use metasets::meta::{sample_task_indices, update_probabilities};
use metasets::rng::seeded;

fn main() -> metasets::Result<()> {
    let tasks = ["density", "dropping", "occlusion"];
    let losses = [1.13, 1.20, 1.26];
    let p = update_probabilities(&losses)?;
    println!("task        loss   probability");
    for ((name, l), p) in tasks.iter().zip(losses).zip(&p) {
        println!("{name:<10}  {l:.2}   {p:.4}");
    }

    let shifted: Vec<f64> = losses.iter().map(|l| l + 5.0).collect();
    let drift = update_probabilities(&shifted)?
        .iter()
        .zip(&p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("\nadding 5 to every loss moves p by at most {drift:.1e}");

    let draws = 30_000;
    let mut counts = [0usize; 3];
    let mut rng = seeded(0);
    for _ in 0..draws / 4 {
        for t in sample_task_indices(&p, 4, &mut rng)? {
            counts[t] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    println!("\nempirical frequencies over {total} draws (K = 4 per step):");
    for (name, c) in tasks.iter().zip(counts) {
        println!("  {name:<10} {:.4}", c as f64 / total as f64);
    }

    let spread = update_probabilities(&[0.3, 0.6, 2.5])?;
    println!("\na clearly harder task dominates: {spread:.3?}");
    Ok(())
}
