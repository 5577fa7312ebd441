//! Area-uniform surface sampling of simple parametric solids.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

pub(crate) const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sphere,
    Cube,
    Cylinder,
    Cone,
    Torus,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Sphere,
        ShapeKind::Cube,
        ShapeKind::Cylinder,
        ShapeKind::Cone,
        ShapeKind::Torus,
    ];
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Cube => "cube",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Cone => "cone",
            ShapeKind::Torus => "torus",
        })
    }
}

/// A class of shapes: the generator plus the range its per-instance aspect
/// parameter is drawn from.
///
/// The aspect parameter means: box side ratios (two independent draws),
/// cylinder and cone height over radius, torus tube radius over ring radius.
/// Spheres ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFamily {
    pub kind: ShapeKind,
    pub aspect: (f64, f64),
}

impl ShapeFamily {
    pub fn new(kind: ShapeKind, aspect: (f64, f64)) -> Result<Self> {
        let family = Self { kind, aspect };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.aspect;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{} aspect range ({lo}, {hi}) must be positive and ordered",
                self.kind
            )));
        }
        if self.kind == ShapeKind::Torus && hi >= 1.0 {
            return Err(Error::InvalidInput("torus tube ratio must stay below 1".into()));
        }
        Ok(())
    }

    /// The five default classes.
    pub fn defaults() -> Vec<ShapeFamily> {
        vec![
            ShapeFamily { kind: ShapeKind::Sphere, aspect: (1.0, 1.0) },
            ShapeFamily { kind: ShapeKind::Cube, aspect: (0.75, 1.25) },
            ShapeFamily { kind: ShapeKind::Cylinder, aspect: (1.5, 2.5) },
            ShapeFamily { kind: ShapeKind::Cone, aspect: (1.2, 2.2) },
            ShapeFamily { kind: ShapeKind::Torus, aspect: (0.25, 0.45) },
        ]
    }

    /// The first `count` default classes.
    pub fn first(count: usize) -> Result<Vec<ShapeFamily>> {
        let all = Self::defaults();
        if !(2..=all.len()).contains(&count) {
            return Err(Error::InvalidInput(format!(
                "class count must be between 2 and {}, got {count}",
                all.len()
            )));
        }
        Ok(all[..count].to_vec())
    }
}

fn uniform_on_box<R: Rng + ?Sized>(half: [f64; 3], rng: &mut R) -> Point3 {
    let areas = [half[1] * half[2], half[0] * half[2], half[0] * half[1]];
    let total: f64 = areas.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    let mut axis = 2;
    for (k, a) in areas.iter().enumerate() {
        if pick < *a {
            axis = k;
            break;
        }
        pick -= a;
    }
    let mut p = [0.0; 3];
    for k in 0..3 {
        p[k] = if k == axis {
            if rng.random::<bool>() { half[k] } else { -half[k] }
        } else {
            rng.random_range(-half[k]..=half[k])
        };
    }
    p
}

fn uniform_on_cylinder<R: Rng + ?Sized>(height: f64, rng: &mut R) -> Point3 {
    let side = 2.0 * PI * height;
    let caps = 2.0 * PI;
    let phi = rng.random_range(0.0..2.0 * PI);
    if rng.random::<f64>() * (side + caps) < side {
        [phi.cos(), phi.sin(), rng.random_range(-height / 2.0..=height / 2.0)]
    } else {
        let r = rng.random::<f64>().sqrt();
        let z = if rng.random::<bool>() { height / 2.0 } else { -height / 2.0 };
        [r * phi.cos(), r * phi.sin(), z]
    }
}

fn uniform_on_cone<R: Rng + ?Sized>(height: f64, rng: &mut R) -> Point3 {
    let side = PI * (1.0 + height * height).sqrt();
    let base = PI;
    let phi = rng.random_range(0.0..2.0 * PI);
    // Centered so the bounding box is symmetric along the axis.
    let z0 = -height / 2.0;
    if rng.random::<f64>() * (side + base) < side {
        // Lateral area density grows linearly with distance from the apex.
        let t = rng.random::<f64>().sqrt();
        [t * phi.cos(), t * phi.sin(), z0 + height * (1.0 - t)]
    } else {
        let r = rng.random::<f64>().sqrt();
        [r * phi.cos(), r * phi.sin(), z0]
    }
}

fn uniform_on_torus<R: Rng + ?Sized>(tube: f64, rng: &mut R) -> Point3 {
    loop {
        let theta = rng.random_range(0.0..2.0 * PI);
        let phi = rng.random_range(0.0..2.0 * PI);
        let ring = 1.0 + tube * phi.cos();
        if rng.random::<f64>() * (1.0 + tube) <= ring {
            return [ring * theta.cos(), ring * theta.sin(), tube * phi.sin()];
        }
    }
}

fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    crate::geometry::sample_unit_sphere(rng)
}

/// `count` area-uniform samples of the canonical (unrotated, centered)
/// surface. `aspect` holds the instance's shape parameters.
pub fn sample_surface<R: Rng + ?Sized>(
    kind: ShapeKind,
    aspect: [f64; 2],
    count: usize,
    rng: &mut R,
) -> Vec<Point3> {
    (0..count)
        .map(|_| match kind {
            ShapeKind::Sphere => uniform_on_sphere(rng),
            ShapeKind::Cube => uniform_on_box([1.0, aspect[0], aspect[1]], rng),
            ShapeKind::Cylinder => uniform_on_cylinder(aspect[0], rng),
            ShapeKind::Cone => uniform_on_cone(aspect[0], rng),
            ShapeKind::Torus => uniform_on_torus(aspect[0], rng),
        })
        .collect()
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    let mut q = [0.0f64; 4];
    loop {
        for v in q.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-9 {
            for v in q.iter_mut() {
                *v /= n;
            }
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// One randomly proportioned and rotated instance, centered on the origin
/// but not normalized.
pub fn sample_instance<R: Rng + ?Sized>(
    family: &ShapeFamily,
    count: usize,
    label: usize,
    rng: &mut R,
) -> PointCloud {
    let (lo, hi) = family.aspect;
    let aspect = [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
    let rot = random_rotation(rng);
    let points = sample_surface(family.kind, aspect, count, rng)
        .into_iter()
        .map(|p| {
            [
                rot[0][0] * p[0] + rot[0][1] * p[1] + rot[0][2] * p[2],
                rot[1][0] * p[0] + rot[1][1] * p[1] + rot[1][2] * p[2],
                rot[2][0] * p[0] + rot[2][1] * p[1] + rot[2][2] * p[2],
            ]
        })
        .collect();
    PointCloud::new(points, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;
    use crate::rng::seeded;

    #[test]
    fn sphere_instances_lie_on_the_unit_sphere() {
        let mut rng = seeded(0);
        let family = ShapeFamily::defaults()[0];
        for _ in 0..10 {
            let cloud = sample_instance(&family, 256, 0, &mut rng);
            assert!(cloud.points.iter().all(|p| (norm(p) - 1.0).abs() < 1e-6));
        }
    }

    #[test]
    fn surfaces_satisfy_their_implicit_equations() {
        let mut rng = seeded(1);
        for p in sample_surface(ShapeKind::Torus, [0.3, 0.0], 500, &mut rng) {
            let ring = (p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0;
            assert!((ring * ring + p[2] * p[2] - 0.09).abs() < 1e-9);
        }
        for p in sample_surface(ShapeKind::Cylinder, [2.0, 0.0], 500, &mut rng) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 1e-9 || (p[2].abs() - 1.0).abs() < 1e-12);
        }
        for p in sample_surface(ShapeKind::Cube, [0.8, 1.2], 500, &mut rng) {
            let on_face = (p[0].abs() - 1.0).abs() < 1e-12
                || (p[1].abs() - 0.8).abs() < 1e-12
                || (p[2].abs() - 1.2).abs() < 1e-12;
            assert!(on_face);
        }
        for p in sample_surface(ShapeKind::Cone, [2.0, 0.0], 500, &mut rng) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let on_side = (r - (1.0 - p[2]) / 2.0).abs() < 1e-9;
            let on_base = (p[2] + 1.0).abs() < 1e-12 && r <= 1.0;
            assert!(on_side || on_base, "{p:?}");
        }
    }

    #[test]
    fn cylinder_side_fraction_matches_area() {
        let mut rng = seeded(2);
        let h = 2.0;
        let pts = sample_surface(ShapeKind::Cylinder, [h, 0.0], 20_000, &mut rng);
        let side = pts.iter().filter(|p| p[2].abs() < h / 2.0).count() as f64 / 20_000.0;
        let expected = (2.0 * PI * h) / (2.0 * PI * h + 2.0 * PI);
        assert!((side - expected).abs() < 0.015, "{side} vs {expected}");
    }

    #[test]
    fn family_validation() {
        assert!(ShapeFamily::new(ShapeKind::Cube, (0.0, 1.0)).is_err());
        assert!(ShapeFamily::new(ShapeKind::Cube, (2.0, 1.0)).is_err());
        assert!(ShapeFamily::new(ShapeKind::Torus, (0.5, 1.5)).is_err());
        assert!(ShapeFamily::first(1).is_err());
        assert!(ShapeFamily::first(6).is_err());
        assert_eq!(ShapeFamily::first(3).unwrap().len(), 3);
    }
}
