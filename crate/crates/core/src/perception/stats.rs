use serde::{Deserialize, Serialize};

use super::PerceptionResult;
use crate::geometry::bbox_area;
use crate::metrics::MetricsError;

/// Before/after summary of the container refinement rounds. "Before" is the
/// whole-image pass alone; areas are pooled over objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionStats {
    pub images: usize,
    pub mean_objects_before: f64,
    pub mean_objects_after: f64,
    pub mean_objects_added: f64,
    pub mean_bbox_area_before: f64,
    pub mean_bbox_area_after: f64,
    /// Mean area of objects found inside container crops, if any.
    pub mean_new_object_area: Option<f64>,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

pub fn perception_stats(results: &[PerceptionResult]) -> Result<PerceptionStats, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let (mut n_before, mut n_after, mut n_new) = (0usize, 0usize, 0usize);
    let (mut a_before, mut a_after, mut a_new) = (0.0, 0.0, 0.0);
    for r in results {
        for o in &r.objects {
            let area = bbox_area(&o.bbox);
            n_after += 1;
            a_after += area;
            if o.depth_level <= 1 {
                n_before += 1;
                a_before += area;
            } else {
                n_new += 1;
                a_new += area;
            }
        }
    }
    let images = results.len();
    Ok(PerceptionStats {
        images,
        mean_objects_before: n_before as f64 / images as f64,
        mean_objects_after: n_after as f64 / images as f64,
        mean_objects_added: n_new as f64 / images as f64,
        mean_bbox_area_before: mean(a_before, n_before).unwrap_or(0.0),
        mean_bbox_area_after: mean(a_after, n_after).unwrap_or(0.0),
        mean_new_object_area: mean(a_new, n_new),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::perception::{DetectedObject, ImageInfo};
    use alloc::vec;
    use alloc::vec::Vec;

    fn obj(level: u32, side: f64) -> DetectedObject {
        DetectedObject {
            label: "x".into(),
            container: false,
            bbox: BBox::new(0.0, 0.0, side, side).unwrap(),
            score: 0.9,
            depth_level: level,
            parent_container: None,
        }
    }

    fn result(objects: Vec<DetectedObject>) -> PerceptionResult {
        PerceptionResult {
            image: ImageInfo {
                image: "i".into(),
                width: 100,
                height: 100,
            },
            objects,
            trace: vec![],
            iterations: vec![],
        }
    }

    #[test]
    fn before_after() {
        let s = perception_stats(&[
            result(vec![obj(1, 10.0), obj(2, 2.0)]),
            result(vec![obj(1, 20.0)]),
        ])
        .unwrap();
        assert_eq!(s.mean_objects_before, 1.0);
        assert_eq!(s.mean_objects_after, 1.5);
        assert_eq!(s.mean_bbox_area_before, 250.0);
        assert_eq!(s.mean_bbox_area_after, 168.0);
        assert_eq!(s.mean_new_object_area, Some(4.0));
    }

    #[test]
    fn empty_batch() {
        assert_eq!(perception_stats(&[]), Err(MetricsError::EmptyBatch));
    }
}
