//! Point clouds, unit-ball normalization and the three geometry-shifting
//! transforms used to build meta-tasks.

mod format;
mod transform;

use rand_distr::{Distribution, UnitSphere};

use crate::error::{Error, Result};

pub use format::{parse_cloud, read_cloud, render_cloud, write_cloud};
pub use transform::{
    apply_transform, plane_basis, round_half_up_count, transform_density, transform_dropping,
    transform_occlusion, TransformKind, TransformSpec, DENSITY_RETRIES,
};

pub type Point3 = [f64; 3];

/// An ordered set of 3-D points with a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub label: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, label: usize) -> Self {
        Self { points, label }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points whose flag is set, preserving order.
    pub(crate) fn retain_mask(&self, keep: &[bool]) -> PointCloud {
        let points = self
            .points
            .iter()
            .zip(keep)
            .filter_map(|(p, &k)| k.then_some(*p))
            .collect();
        PointCloud::new(points, self.label)
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(norm).fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Centers the cloud on its centroid and scales it so the farthest point
/// lies on the unit sphere. Point order is preserved.
pub fn normalize_unit_ball(cloud: &PointCloud) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("cannot normalize an empty point cloud".into()));
    }
    let n = cloud.len() as f64;
    let mut centroid = [0.0; 3];
    for p in &cloud.points {
        for (c, v) in centroid.iter_mut().zip(p) {
            *c += v;
        }
    }
    for c in centroid.iter_mut() {
        *c /= n;
    }
    let centered: Vec<Point3> = cloud.points.iter().map(|p| sub(p, &centroid)).collect();
    let scale = centered.iter().map(norm).fold(0.0, f64::max);
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::Degenerate(format!(
            "{} points have zero spread around their centroid",
            cloud.len()
        )));
    }
    let points = centered
        .into_iter()
        .map(|p| [p[0] / scale, p[1] / scale, p[2] / scale])
        .collect();
    Ok(PointCloud::new(points, cloud.label))
}

/// A direction drawn uniformly from the unit sphere.
pub fn sample_unit_sphere<R: rand::Rng + ?Sized>(rng: &mut R) -> Point3 {
    let v: [f64; 3] = UnitSphere.sample(rng);
    // Marsaglia's construction is exact only up to rounding.
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Uniform index in `0..n`.
pub(crate) fn sample_index<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = seeded(seed);
        let points = (0..n)
            .map(|_| {
                [
                    rng.random_range(-3.0..5.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..2.0),
                ]
            })
            .collect();
        PointCloud::new(points, 0)
    }

    #[test]
    fn normalize_symmetric_pair() {
        let cloud = PointCloud::new(vec![[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]], 1);
        let out = normalize_unit_ball(&cloud).unwrap();
        assert_eq!(out.points, vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert_eq!(out.label, 1);
    }

    #[test]
    fn normalize_rejects_empty_and_degenerate() {
        let empty = PointCloud::new(vec![], 0);
        assert!(matches!(normalize_unit_ball(&empty), Err(Error::InvalidInput(_))));
        let single = PointCloud::new(vec![[0.0, 0.0, 0.0]], 0);
        assert!(matches!(normalize_unit_ball(&single), Err(Error::Degenerate(_))));
        let same = PointCloud::new(vec![[1.5, -2.0, 0.25]; 4], 0);
        assert!(matches!(normalize_unit_ball(&same), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normalized_max_norm_is_one_and_idempotent() {
        for seed in 0..20 {
            let cloud = random_cloud(seed, 100);
            let once = normalize_unit_ball(&cloud).unwrap();
            assert!((once.max_norm() - 1.0).abs() < 1e-9);
            assert!(once.points.iter().all(|p| norm(p) <= 1.0 + 1e-12));
            let twice = normalize_unit_ball(&once).unwrap();
            for (a, b) in once.points.iter().zip(&twice.points) {
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn unit_sphere_draws_have_unit_norm_and_zero_mean() {
        let mut rng = seeded(11);
        let draws = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..draws {
            let v = sample_unit_sphere(&mut rng);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
            for k in 0..3 {
                mean[k] += v[k];
            }
        }
        for m in mean {
            assert!((m / draws as f64).abs() < 0.02, "coordinate mean {m}");
        }
    }

    #[test]
    fn unit_sphere_is_deterministic_per_seed() {
        let a = sample_unit_sphere(&mut seeded(5));
        let b = sample_unit_sphere(&mut seeded(5));
        assert_eq!(a, b);
    }
}
