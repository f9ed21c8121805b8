//! Depth back-projection, per-object centroids and inter-object distances.
//!
//! Camera frame: +x right, +y down, +z forward. A pixel `(u, v)` with depth
//! `z` maps to `((u - cx) z / fx, (v - cy) z / fy, z)`.

mod bbox;
mod mask;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use bbox::{bbox_area, bbox_iou, scale_bbox, to_global, BBox, DegenerateBox};
pub use mask::{Mask, Rle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("only {0} valid points under the mask")]
    TooFewPoints(usize),
    #[error("need at least two objects")]
    TooFewObjects,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("depth values must be finite and non-negative")]
    InvalidDepth,
    #[error("malformed run-length encoding")]
    InvalidRle,
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        let k = Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.check()?;
        Ok(k)
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidIntrinsics("principal point outside the image"));
        }
        Ok(())
    }

    /// Square pixels, principal point at the image center, given horizontal FOV.
    pub fn from_hfov(width: usize, height: usize, hfov_deg: f64) -> Result<Self, GeometryError> {
        if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
            return Err(GeometryError::InvalidIntrinsics("field of view must be in (0, 180)"));
        }
        let f = (width as f64 / 2.0) / libm::tan(hfov_deg.to_radians() / 2.0);
        Intrinsics::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    /// Default calibration: 60° horizontal FOV.
    pub fn default_for(width: usize, height: usize) -> Result<Self, GeometryError> {
        Intrinsics::from_hfov(width, height, 60.0)
    }
}

/// Row-major metric depth, `0` marks invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self, GeometryError> {
        if values.len() != width * height {
            return Err(GeometryError::DimensionMismatch {
                expected: (width, height),
                got: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GeometryError::InvalidDepth);
        }
        Ok(DepthMap { width, height, values })
    }

    pub fn constant(width: usize, height: usize, depth: f32) -> Self {
        DepthMap {
            width,
            height,
            values: vec![depth; width * height],
        }
    }

    /// Multiply every value by `scale` (relative depth → meters).
    pub fn scaled(mut self, scale: f32) -> Result<Self, GeometryError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeometryError::InvalidDepth);
        }
        self.values.iter_mut().for_each(|v| *v *= scale);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.values[v * self.width + u]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }
}

/// Back-projected points, remembering which pixel each came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    width: usize,
    height: usize,
    points: Vec<Point3>,
    /// Per pixel: index into `points`, or `u32::MAX` for invalid depth.
    index: Vec<u32>,
}

impl PointCloud {
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_at(&self, u: usize, v: usize) -> Option<Point3> {
        if u >= self.width || v >= self.height {
            return None;
        }
        let i = self.index[v * self.width + u];
        (i != u32::MAX).then(|| self.points[i as usize])
    }
}

pub fn backproject(d: &DepthMap, k: &Intrinsics) -> Result<PointCloud, GeometryError> {
    if (d.width, d.height) != (k.width, k.height) {
        return Err(GeometryError::DimensionMismatch {
            expected: (k.width, k.height),
            got: (d.width, d.height),
        });
    }
    let mut points = Vec::new();
    let mut index = vec![u32::MAX; d.width * d.height];
    for v in 0..d.height {
        for u in 0..d.width {
            let z = f64::from(d.get(u, v));
            if z <= 0.0 {
                continue;
            }
            index[v * d.width + u] = points.len() as u32;
            points.push(Point3 {
                x: (u as f64 - k.cx) * z / k.fx,
                y: (v as f64 - k.cy) * z / k.fy,
                z,
            });
        }
    }
    Ok(PointCloud {
        width: d.width,
        height: d.height,
        points,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CentroidOptions {
    /// Minimum valid points under the (eroded) mask.
    pub min_points: usize,
    /// Erosion passes applied to the mask to drop boundary depth bleed.
    pub erode: usize,
}

impl Default for CentroidOptions {
    fn default() -> Self {
        CentroidOptions {
            min_points: 10,
            erode: 1,
        }
    }
}

/// Mean of the masked 3D points.
pub fn object_centroid(cloud: &PointCloud, m: &Mask, opts: CentroidOptions) -> Result<Point3, GeometryError> {
    if (m.width(), m.height()) != (cloud.width, cloud.height) {
        return Err(GeometryError::DimensionMismatch {
            expected: (cloud.width, cloud.height),
            got: (m.width(), m.height()),
        });
    }
    let eroded;
    let m = if opts.erode > 0 {
        eroded = m.eroded(opts.erode);
        &eroded
    } else {
        m
    };
    let (mut sx, mut sy, mut sz, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (u, v) in m.pixels() {
        if let Some(p) = cloud.point_at(u, v) {
            sx += p.x;
            sy += p.y;
            sz += p.z;
            n += 1;
        }
    }
    if n == 0 || n < opts.min_points {
        return Err(GeometryError::TooFewPoints(n));
    }
    let n = n as f64;
    Ok(Point3::new(sx / n, sy / n, sz / n))
}

pub fn pair_distance(a: &Point3, b: &Point3) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    /// `meters[i][j]`, symmetric with a zero diagonal.
    pub meters: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.meters[i][j])
    }
}

pub fn distance_matrix(objects: &[(String, Point3)]) -> Result<DistanceMatrix, GeometryError> {
    if objects.len() < 2 {
        return Err(GeometryError::TooFewObjects);
    }
    let n = objects.len();
    let mut meters = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = pair_distance(&objects[i].1, &objects[j].1);
            meters[i][j] = d;
            meters[j][i] = d;
        }
    }
    Ok(DistanceMatrix {
        labels: objects.iter().map(|(l, _)| l.clone()).collect(),
        meters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> (DepthMap, Intrinsics) {
        (
            DepthMap::constant(100, 100, 2.0),
            Intrinsics::new(50.0, 50.0, 50.0, 50.0, 100, 100).unwrap(),
        )
    }

    const SINGLE: CentroidOptions = CentroidOptions {
        min_points: 1,
        erode: 0,
    };

    fn pixel_mask(u: usize, v: usize) -> Mask {
        let mut m = Mask::empty(100, 100);
        m.set(u, v, true);
        m
    }

    #[test]
    fn pinhole_pixel() {
        let (d, k) = plane();
        let cloud = backproject(&d, &k).unwrap();
        assert_eq!(cloud.point_at(25, 50), Some(Point3::new(-1.0, 0.0, 2.0)));
        assert_eq!(cloud.point_at(50, 50), Some(Point3::new(0.0, 0.0, 2.0)));
        assert!(cloud.points().iter().all(|p| p.z == 2.0));
    }

    #[test]
    fn zero_depth_skipped() {
        let d = DepthMap::constant(4, 3, 0.0);
        let k = Intrinsics::new(2.0, 2.0, 2.0, 1.5, 4, 3).unwrap();
        assert!(backproject(&d, &k).unwrap().is_empty());
        let k_bad = Intrinsics::new(2.0, 2.0, 2.0, 1.5, 5, 3).unwrap();
        assert!(matches!(backproject(&d, &k_bad), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn single_pixel_centroid() {
        let (d, k) = plane();
        let cloud = backproject(&d, &k).unwrap();
        let c = object_centroid(&cloud, &pixel_mask(25, 50), SINGLE).unwrap();
        assert_eq!(c, Point3::new(-1.0, 0.0, 2.0));
        // Default options reject a one-pixel mask.
        assert!(matches!(
            object_centroid(&cloud, &pixel_mask(25, 50), CentroidOptions::default()),
            Err(GeometryError::TooFewPoints(0))
        ));
    }

    #[test]
    fn symmetric_mask_on_principal_ray() {
        let (d, k) = plane();
        let cloud = backproject(&d, &k).unwrap();
        let m = Mask::from_bbox(100, 100, &BBox::new(40.0, 40.0, 61.0, 61.0).unwrap());
        let c = object_centroid(&cloud, &m, CentroidOptions::default()).unwrap();
        assert!(c.x.abs() < 1e-12 && c.y.abs() < 1e-12);
        assert_eq!(c.z, 2.0);
    }

    #[test]
    fn invalid_only_mask() {
        let d = DepthMap::constant(100, 100, 0.0);
        let k = Intrinsics::new(50.0, 50.0, 50.0, 50.0, 100, 100).unwrap();
        let cloud = backproject(&d, &k).unwrap();
        assert_eq!(
            object_centroid(&cloud, &pixel_mask(10, 10), SINGLE),
            Err(GeometryError::TooFewPoints(0))
        );
    }

    #[test]
    fn distances() {
        assert_eq!(pair_distance(&Point3::new(-1., 0., 2.), &Point3::new(1., 0., 2.)), 2.0);
        assert_eq!(pair_distance(&Point3::new(0., 0., 2.), &Point3::new(3., 4., 2.)), 5.0);
        let p = Point3::new(0.3, -0.1, 1.7);
        assert_eq!(pair_distance(&p, &p), 0.0);
        let m = distance_matrix(&[("a".into(), Point3::new(-1., 0., 2.)), ("b".into(), Point3::new(1., 0., 2.))])
            .unwrap();
        assert_eq!(m.meters, [[0.0, 2.0], [2.0, 0.0]]);
        assert_eq!(m.get("b", "a"), Some(2.0));
        assert_eq!(distance_matrix(&[("a".into(), p)]), Err(GeometryError::TooFewObjects));
    }

    #[test]
    fn default_intrinsics() {
        let k = Intrinsics::default_for(640, 480).unwrap();
        assert_eq!((k.cx, k.cy), (320.0, 240.0));
        // tan(30°) = 1/sqrt(3)
        assert!((k.fx - 320.0 * 3f64.sqrt()).abs() < 1e-9);
        assert!(Intrinsics::new(0.0, 1.0, 0.0, 0.0, 2, 2).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 2.0, 0.0, 2, 2).is_err());
    }

    #[test]
    fn depth_validation_and_scale() {
        assert_eq!(DepthMap::new(2, 1, vec![1.0, -1.0]), Err(GeometryError::InvalidDepth));
        assert!(DepthMap::new(2, 2, vec![1.0]).is_err());
        let d = DepthMap::new(2, 1, vec![1.0, 0.5]).unwrap().scaled(2.0).unwrap();
        assert_eq!(d.values(), [2.0, 1.0]);
    }
}
