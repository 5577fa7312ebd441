//! How a classifier trained on clean clouds degrades as ever larger local
//! regions are dropped, and how much of it retraining on clouds with 60% of
//! their points dropped recovers.
//!
//! ```text
//! cargo run --release --example geometry_overfitting -- [seeds]
//! ```

use metasets::benchmark::{dropping_sweep, Benchmark};
use metasets::geometry::TransformSpec;
use metasets::meta::{TaskSet, TrainMode};

const PERCENTS: [f64; 6] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0];

fn main() -> metasets::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let bench = Benchmark::desk();
    let dropping_tasks = TaskSet::new(vec![TransformSpec::dropping(60.0)?])?;

    println!("seed  clean   {}  retrained@60", PERCENTS.map(|x| format!("x={x:<4}")).join(" "));
    for seed in 0..seeds {
        let mut data = bench.prepare(seed)?;
        let plain = bench.run(&data, TrainMode::None, seed)?;
        let curve = dropping_sweep(&plain.outcome.params, &data.clean, &PERCENTS, seed)?;

        data.task_set = dropping_tasks.clone();
        let retrained = bench.run(&data, TrainMode::Augment, seed)?;
        let recovered = dropping_sweep(&retrained.outcome.params, &data.clean, &[60.0], seed)?[0];

        let cells: Vec<String> = curve.iter().map(|a| format!("{:>6.1}", 100.0 * a)).collect();
        println!(
            "{seed:>4}  {:>5.1}   {}  {:>6.1}",
            100.0 * plain.clean_accuracy,
            cells.join(" "),
            100.0 * recovered
        );
    }
    Ok(())
}
