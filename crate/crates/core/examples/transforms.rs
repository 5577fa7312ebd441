//! The three point-set transforms on a synthetic shape, including the two
//! limits of self-occlusion: a grid wider than the cloud keeps one point and
//! a grid finer than every in-plane gap keeps them all.
//!
//! ```text
//! cargo run --release --example transforms -- [output-dir]
//! ```
//!
//! With an output directory, every transformed cloud is also written in the
//! plain-text cloud format for plotting.

use std::path::PathBuf;

use metasets::data::{sample_instance, ShapeFamily, ShapeKind};
use metasets::geometry::{
    apply_transform, normalize_unit_ball, sample_unit_sphere, transform_density, transform_dropping,
    transform_occlusion, write_cloud, TransformSpec, PointCloud,
};
use metasets::meta::{FIXED_GATES, FIXED_GRIDS, FIXED_PERCENTS};
use metasets::rng::seeded;

fn main() -> metasets::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    let mut rng = seeded(42);
    let torus = ShapeFamily::defaults()
        .into_iter()
        .find(|f| f.kind == ShapeKind::Torus)
        .expect("torus is a default family");
    let cloud = normalize_unit_ball(&sample_instance(&torus, 2048, 0, &mut rng))?;
    println!("torus with {} points, max norm {:.6}", cloud.len(), cloud.max_norm());

    let save = |name: &str, c: &PointCloud| -> metasets::Result<()> {
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir).map_err(|e| metasets::Error::io(dir, e))?;
            write_cloud(&dir.join(format!("{name}.pts")), c)?;
        }
        Ok(())
    };
    save("original", &cloud)?;

    println!("\nnon-uniform density (one anchor, varying gate)");
    let anchor = sample_unit_sphere(&mut rng);
    for g in FIXED_GATES {
        let mean: f64 = (0..50)
            .map(|s| transform_density(&cloud, &anchor, g, &mut seeded(s)).map(|c| c.len() as f64))
            .sum::<metasets::Result<f64>>()?
            / 50.0;
        println!("  g = {g:<4} mean survivors over 50 draws: {mean:7.1}");
        save(&format!("density_g{g}"), &transform_density(&cloud, &anchor, g, &mut seeded(0))?)?;
    }

    println!("\ndropping (nearest x% around a random point)");
    for x in FIXED_PERCENTS {
        let kept = transform_dropping(&cloud, 0, x)?;
        println!("  x = {x:>2}%  {} -> {} points", cloud.len(), kept.len());
        save(&format!("dropping_x{x}"), &kept)?;
    }

    println!("\nself-occlusion (view along a random direction)");
    let view = sample_unit_sphere(&mut rng);
    for w in FIXED_GRIDS.into_iter().chain([0.1, 0.3, 3.0]) {
        let kept = transform_occlusion(&cloud, &view, w)?;
        println!("  W = {w:<5}  {} -> {} points", cloud.len(), kept.len());
        save(&format!("occlusion_w{w}"), &kept)?;
    }
    let fine = transform_occlusion(&cloud, &view, 1e-9)?;
    println!("  W = 1e-9   {} -> {} points", cloud.len(), fine.len());

    println!("\ndynamic parameters: the same spec gives a different cloud per draw");
    let spec = TransformSpec::occlusion(0.1)?;
    for s in 0..3 {
        let c = apply_transform(&spec, &cloud, &mut seeded(s))?;
        println!("  {spec} draw {s}: {} points", c.len());
    }
    Ok(())
}
