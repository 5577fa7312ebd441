//! Compares the hand-derived gradient of the batch loss with central finite
//! differences on every parameter of a small network.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use metasets::geometry::PointCloud;
use metasets::nn::{init_params_seeded, loss_and_grad, loss_batch, Architecture};
use metasets::rng::seeded;
use rand::Rng;

fn main() -> metasets::Result<()> {
    let arch = Architecture {
        point_widths: vec![16, 32, 64],
        head_widths: vec![32],
        classes: 3,
    };
    let params = init_params_seeded(&arch, 7)?;
    let mut rng = seeded(8);
    let batch: Vec<PointCloud> = (0..3)
        .map(|label| {
            let points = (0..5)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            PointCloud::new(points, label)
        })
        .collect();

    let (loss, grads) = loss_and_grad(&params, &batch)?;
    println!("{} parameters, loss {loss:.6}", params.len());

    let h = 1e-5;
    let mut worst = (0.0f64, 0usize);
    let mut zero = 0usize;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.values_mut()[i] += h;
        let mut minus = params.clone();
        minus.values_mut()[i] -= h;
        let fd = (loss_batch(&plus, &batch)? - loss_batch(&minus, &batch)?) / (2.0 * h);
        let analytic = grads.values()[i];
        if analytic == 0.0 {
            zero += 1;
        }
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    println!("exactly-zero gradient entries (inactive units): {zero}");
    println!("worst relative error {:.3e} at parameter {}", worst.0, worst.1);
    Ok(())
}
