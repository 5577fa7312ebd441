//! Meta-training on the synthetic benchmark next to its ablations: plain
//! training, augmentation without meta-learning, frozen uniform task
//! sampling and statically pre-transformed data. Accuracy is reported on
//! clean test clouds and on the held-out target domain.
//!
//! ```text
//! cargo run --release --example meta_training -- [seeds] [epochs]
//! ```
//!
//! Each seed trains five models; with the default settings one seed takes a
//! few minutes on a single core.

use metasets::benchmark::Benchmark;
use metasets::meta::TrainMode;

fn main() -> metasets::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut bench = Benchmark::desk();
    if let Some(epochs) = args.next().and_then(|s| s.parse().ok()) {
        bench.train.max_epochs = epochs;
    }
    let held_out: Vec<String> = bench.held_out.iter().map(|t| t.to_string()).collect();
    println!("target domain: {}", held_out.join(" then "));

    let mut totals = vec![0.0; TrainMode::ALL.len()];
    for seed in 0..seeds {
        let data = bench.prepare(seed)?;
        let tasks: Vec<String> = data.task_set.transforms().iter().map(|t| t.to_string()).collect();
        println!("\nseed {seed}: {} train / {} val clouds, tasks {}", data.train.len(), data.val.len(), tasks.join(", "));
        println!("  {:<18} {:>7} {:>7} {:>9}", "mode", "clean", "target", "s/epoch");
        for (slot, &mode) in TrainMode::ALL.iter().enumerate() {
            let r = bench.run(&data, mode, seed)?;
            totals[slot] += r.target_accuracy;
            println!(
                "  {:<18} {:>7.1} {:>7.1} {:>9.2}",
                mode.to_string(),
                100.0 * r.clean_accuracy,
                100.0 * r.target_accuracy,
                r.mean_epoch_seconds
            );
            if mode == TrainMode::Metasets {
                let p = &r.outcome.task_set.probabilities();
                println!("    final task probabilities {p:.3?}");
            }
        }
    }
    println!("\nmean target accuracy over {seeds} seed(s)");
    for (mode, total) in TrainMode::ALL.iter().zip(totals) {
        println!("  {:<18} {:>6.1}", mode.to_string(), 100.0 * total / seeds as f64);
    }
    Ok(())
}
