use hscene_core::geometry::{
    backproject, bbox_iou, distance_matrix, object_centroid, scale_bbox, to_global, BBox, CentroidOptions, DepthMap,
    Intrinsics, Mask, Point3,
};
use proptest::prelude::*;

fn pixel_mask(w: usize, h: usize, u: usize, v: usize) -> Mask {
    let mut m = Mask::empty(w, h);
    m.set(u, v, true);
    m
}

#[test]
fn constant_plane_two_pixels() {
    let d = DepthMap::constant(101, 101, 2.0);
    let k = Intrinsics::new(50.0, 50.0, 50.0, 50.0, 101, 101).unwrap();
    let cloud = backproject(&d, &k).unwrap();
    let single = CentroidOptions { min_points: 1, erode: 0 };
    let a = object_centroid(&cloud, &pixel_mask(101, 101, 25, 50), single).unwrap();
    let b = object_centroid(&cloud, &pixel_mask(101, 101, 75, 50), single).unwrap();
    assert!((a.x + 1.0).abs() < 1e-12 && a.y.abs() < 1e-12 && (a.z - 2.0).abs() < 1e-12);
    let m = distance_matrix(&[("a".into(), a), ("b".into(), b)]).unwrap();
    assert!((m.get("a", "b").unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn default_options_reject_tiny_masks() {
    let d = DepthMap::constant(20, 20, 1.0);
    let k = Intrinsics::default_for(20, 20).unwrap();
    let cloud = backproject(&d, &k).unwrap();
    assert!(object_centroid(&cloud, &pixel_mask(20, 20, 5, 5), CentroidOptions::default()).is_err());
}

#[test]
fn scale_box_about_center() {
    let b = BBox::new(40.0, 40.0, 60.0, 60.0).unwrap();
    let s = scale_bbox(&b, 1.5, 100.0, 100.0);
    assert_eq!((s.x0, s.y0, s.x1, s.y1), (35.0, 35.0, 65.0, 65.0));
    let edge = scale_bbox(&BBox::new(0.0, 0.0, 40.0, 40.0).unwrap(), 1.5, 50.0, 50.0);
    assert_eq!((edge.x0, edge.y0, edge.x1, edge.y1), (0.0, 0.0, 50.0, 50.0));
}

fn point() -> impl Strategy<Value = Point3> {
    (-10.0..10.0f64, -10.0..10.0f64, 0.1..20.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matrix_symmetric_with_triangle_inequality(pts in proptest::collection::vec(point(), 2..8)) {
        let objects: Vec<(String, Point3)> = pts.iter().enumerate().map(|(i, p)| (format!("o{i}"), *p)).collect();
        let m = distance_matrix(&objects).unwrap();
        let n = pts.len();
        for i in 0..n {
            prop_assert_eq!(m.meters[i][i], 0.0);
            for j in 0..n {
                prop_assert_eq!(m.meters[i][j], m.meters[j][i]);
                prop_assert!(m.meters[i][j] >= 0.0);
                for k in 0..n {
                    prop_assert!(m.meters[i][k] <= m.meters[i][j] + m.meters[j][k] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn iou_bounds_and_symmetry(
        a in (0.0..50.0f64, 0.0..50.0f64, 1.0..50.0f64, 1.0..50.0f64),
        b in (0.0..50.0f64, 0.0..50.0f64, 1.0..50.0f64, 1.0..50.0f64),
    ) {
        let a = BBox::new(a.0, a.1, a.0 + a.2, a.1 + a.3).unwrap();
        let b = BBox::new(b.0, b.1, b.0 + b.2, b.1 + b.3).unwrap();
        let v = bbox_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, bbox_iou(&b, &a));
        prop_assert!((bbox_iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_box_stays_in_image(
        x in 0.0..90.0f64, y in 0.0..90.0f64, w in 1.0..10.0f64, h in 1.0..10.0f64, s in 1.0..3.0f64,
    ) {
        let b = BBox::new(x, y, x + w, y + h).unwrap();
        let c = scale_bbox(&b, s, 100.0, 100.0);
        prop_assert!(c.x0 >= 0.0 && c.y0 >= 0.0 && c.x1 <= 100.0 && c.y1 <= 100.0);
        prop_assert!(c.contains_box(&b));
        let g = to_global(&BBox::new(0.0, 0.0, c.width(), c.height()).unwrap(), (c.x0, c.y0));
        prop_assert!((g.x1 - c.x1).abs() < 1e-9 && (g.y1 - c.y1).abs() < 1e-9);
    }

    #[test]
    fn rle_round_trip(bits in proptest::collection::vec(any::<bool>(), 12 * 9)) {
        let mut m = Mask::empty(12, 9);
        for (i, on) in bits.iter().enumerate() {
            m.set(i % 12, i / 12, *on);
        }
        let back = Mask::from_rle(&m.to_rle()).unwrap();
        prop_assert_eq!(back, m);
    }
}
