use std::collections::HashMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{cross, dot, norm, sample_index, sample_unit_sphere, sub, Point3, PointCloud};
use crate::error::{Error, Result};

/// Attempts made by [`apply_transform`] before a density transform that keeps
/// emptying the cloud falls back to the identity.
pub const DENSITY_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Identity,
    Density,
    Dropping,
    Occlusion,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Identity => "identity",
            TransformKind::Density => "density",
            TransformKind::Dropping => "dropping",
            TransformKind::Occlusion => "occlusion",
        })
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(TransformKind::Identity),
            "density" => Ok(TransformKind::Density),
            "dropping" => Ok(TransformKind::Dropping),
            "occlusion" => Ok(TransformKind::Occlusion),
            other => Err(Error::InvalidInput(format!("unknown transform kind `{other}`"))),
        }
    }
}

/// A transform with its static parameter. The dynamic parameter (anchor
/// position, anchor point, or viewing direction) is not stored; it is drawn
/// every time the transform is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransformSpec {
    Identity,
    /// Distance-proportional dropping from an anchor on the unit sphere,
    /// scaled by the gate `g > 1`.
    Density { gate: f64 },
    /// Removal of the `percent`% points nearest a randomly chosen point.
    Dropping { percent: f64 },
    /// Parallel projection along a random direction keeping the nearest
    /// point in every grid cell of side `grid`.
    Occlusion { grid: f64 },
}

impl TransformSpec {
    pub fn density(gate: f64) -> Result<Self> {
        let spec = TransformSpec::Density { gate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dropping(percent: f64) -> Result<Self> {
        let spec = TransformSpec::Dropping { percent };
        spec.validate()?;
        Ok(spec)
    }

    pub fn occlusion(grid: f64) -> Result<Self> {
        let spec = TransformSpec::Occlusion { grid };
        spec.validate()?;
        Ok(spec)
    }

    pub fn new(kind: TransformKind, param: f64) -> Result<Self> {
        match kind {
            TransformKind::Identity => Ok(TransformSpec::Identity),
            TransformKind::Density => Self::density(param),
            TransformKind::Dropping => Self::dropping(param),
            TransformKind::Occlusion => Self::occlusion(param),
        }
    }

    pub fn kind(&self) -> TransformKind {
        match self {
            TransformSpec::Identity => TransformKind::Identity,
            TransformSpec::Density { .. } => TransformKind::Density,
            TransformSpec::Dropping { .. } => TransformKind::Dropping,
            TransformSpec::Occlusion { .. } => TransformKind::Occlusion,
        }
    }

    /// The static parameter, or `None` for the identity.
    pub fn param(&self) -> Option<f64> {
        match *self {
            TransformSpec::Identity => None,
            TransformSpec::Density { gate } => Some(gate),
            TransformSpec::Dropping { percent } => Some(percent),
            TransformSpec::Occlusion { grid } => Some(grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TransformSpec::Identity => Ok(()),
            TransformSpec::Density { gate } => check_gate(gate),
            TransformSpec::Dropping { percent } => check_percent(percent),
            TransformSpec::Occlusion { grid } => check_grid(grid),
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::Identity => write!(f, "identity"),
            TransformSpec::Density { gate } => write!(f, "density(g={gate})"),
            TransformSpec::Dropping { percent } => write!(f, "dropping(x={percent}%)"),
            TransformSpec::Occlusion { grid } => write!(f, "occlusion(W={grid})"),
        }
    }
}

fn check_gate(g: f64) -> Result<()> {
    if g.is_finite() && g > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gate must be > 1, got {g}")))
    }
}

fn check_percent(x: f64) -> Result<()> {
    if x > 0.0 && x < 100.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "drop ratio must lie in (0, 100) percent, got {x}"
        )))
    }
}

fn check_grid(w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid size must be > 0, got {w}")))
    }
}

/// Non-uniform density: every point is dropped independently with
/// probability `min(1, g * r)` where `r` is its min-max normalized distance
/// to `anchor`. Exactly one uniform variate is consumed per point.
pub fn transform_density<R: rand::Rng + ?Sized>(
    cloud: &PointCloud,
    anchor: &Point3,
    gate: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    check_gate(gate)?;
    if cloud.is_empty() {
        return Err(Error::InvalidInput("density transform of an empty cloud".into()));
    }
    let dists: Vec<f64> = cloud.points.iter().map(|p| norm(&sub(p, anchor))).collect();
    let (lo, hi) = dists
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let span = hi - lo;
    let keep: Vec<bool> = dists
        .iter()
        .map(|&d| {
            let rate = if span > 0.0 { (d - lo) / span } else { 0.0 };
            let drop_prob = (gate * rate).min(1.0);
            let u: f64 = rng.random();
            u >= drop_prob
        })
        .collect();
    let out = cloud.retain_mask(&keep);
    if out.is_empty() {
        return Err(Error::EmptyOutput);
    }
    Ok(out)
}

/// Number of points removed by a `percent`% drop of `n` points, rounding
/// halves up.
pub fn round_half_up_count(n: usize, percent: f64) -> usize {
    (n as f64 * percent / 100.0 + 0.5).floor() as usize
}

/// Removes the `round(n * x / 100)` points nearest to `points[anchor_index]`
/// (the anchor itself included). Ties go to the lower index.
pub fn transform_dropping(
    cloud: &PointCloud,
    anchor_index: usize,
    percent: f64,
) -> Result<PointCloud> {
    check_percent(percent)?;
    let n = cloud.len();
    if anchor_index >= n {
        return Err(Error::InvalidInput(format!(
            "anchor index {anchor_index} out of range for {n} points"
        )));
    }
    let m = round_half_up_count(n, percent);
    if m >= n {
        return Err(Error::InvalidParameter(format!(
            "dropping {percent}% of {n} points would remove all of them"
        )));
    }
    let anchor = cloud.points[anchor_index];
    let dist2: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| {
            let d = sub(p, &anchor);
            dot(&d, &d)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist2[a].total_cmp(&dist2[b]).then(a.cmp(&b)));
    let mut keep = vec![true; n];
    for &i in &order[..m] {
        keep[i] = false;
    }
    Ok(cloud.retain_mask(&keep))
}

/// Orthonormal frame `(u, w, v)` for projecting along `v`.
pub fn plane_basis(v: &Point3) -> (Point3, Point3) {
    // Seed with the coordinate axis least aligned with v.
    let abs = [v[0].abs(), v[1].abs(), v[2].abs()];
    let axis = if abs[0] <= abs[1] && abs[0] <= abs[2] {
        0
    } else if abs[1] <= abs[2] {
        1
    } else {
        2
    };
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let proj = dot(&e, v);
    let u = [e[0] - proj * v[0], e[1] - proj * v[1], e[2] - proj * v[2]];
    let un = norm(&u);
    let u = [u[0] / un, u[1] / un, u[2] / un];
    let w = cross(v, &u);
    (u, w)
}

/// Self-occlusion by parallel projection along `v` onto a grid of cell size
/// `grid`. Cells are anchored at the minimum in-plane coordinates of the
/// cloud; within each cell only the point of least depth `p . v` survives.
///
/// The offset of the projection plane along `v` changes neither cell
/// membership nor depth order, so no plane is materialized.
pub fn transform_occlusion(cloud: &PointCloud, v: &Point3, grid: f64) -> Result<PointCloud> {
    check_grid(grid)?;
    if (norm(v) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "viewing direction must be a unit vector, |v| = {}",
            norm(v)
        )));
    }
    if cloud.is_empty() {
        return Err(Error::InvalidInput("occlusion of an empty cloud".into()));
    }
    let (u, w) = plane_basis(v);
    let coords: Vec<(f64, f64, f64)> = cloud
        .points
        .iter()
        .map(|p| (dot(p, &u), dot(p, &w), dot(p, v)))
        .collect();
    let (a0, b0) = coords
        .iter()
        .fold((f64::INFINITY, f64::INFINITY), |(a0, b0), &(a, b, _)| (a0.min(a), b0.min(b)));

    let mut best: HashMap<(i64, i64), usize> = HashMap::new();
    for (i, &(a, b, depth)) in coords.iter().enumerate() {
        let cell = (
            ((a - a0) / grid).floor() as i64,
            ((b - b0) / grid).floor() as i64,
        );
        best.entry(cell)
            .and_modify(|j| {
                if depth < coords[*j].2 {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep = vec![false; cloud.len()];
    for &i in best.values() {
        keep[i] = true;
    }
    Ok(cloud.retain_mask(&keep))
}

/// Applies `spec` with freshly drawn dynamic parameters.
///
/// Density transforms that empty the cloud are redrawn up to
/// [`DENSITY_RETRIES`] times; after that the input is returned unchanged.
pub fn apply_transform<R: rand::Rng + ?Sized>(
    spec: &TransformSpec,
    cloud: &PointCloud,
    rng: &mut R,
) -> Result<PointCloud> {
    spec.validate()?;
    if cloud.is_empty() {
        return Err(Error::InvalidInput("cannot transform an empty cloud".into()));
    }
    match *spec {
        TransformSpec::Identity => Ok(cloud.clone()),
        TransformSpec::Density { gate } => {
            for _ in 0..DENSITY_RETRIES {
                let anchor = sample_unit_sphere(rng);
                match transform_density(cloud, &anchor, gate, rng) {
                    Err(Error::EmptyOutput) => continue,
                    other => return other,
                }
            }
            warn!("density transform (g={gate}) kept emptying a {}-point cloud; using it unchanged", cloud.len());
            Ok(cloud.clone())
        }
        TransformSpec::Dropping { percent } => {
            let anchor = sample_index(rng, cloud.len());
            transform_dropping(cloud, anchor, percent)
        }
        TransformSpec::Occlusion { grid } => {
            let v = sample_unit_sphere(rng);
            transform_occlusion(cloud, &v, grid)
        }
    }
}
