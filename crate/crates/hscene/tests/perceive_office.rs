mod common;

use std::time::Instant;

use hscene::backends::{serve_mock, HttpPerception};
use hscene_core::geometry::{scale_bbox, BBox};
use hscene_core::perception::{perceive, FilterDecision, ImageInfo, PerceptionConfig, PerceptionResult, TraceEvent};

fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
    BBox::new(x0, y0, x1, y1).unwrap()
}

fn office_image() -> ImageInfo {
    ImageInfo {
        image: "sha256:office".into(),
        width: 640,
        height: 480,
    }
}

fn run_office() -> (PerceptionResult, usize, Vec<String>) {
    let mock = serve_mock(common::office_script(), "127.0.0.1:0").unwrap();
    let client = common::client(&mock.url());
    let result = perceive(&office_image(), &PerceptionConfig::default(), &mut HttpPerception { client: &client }).unwrap();
    (result, mock.remaining(), mock.unmatched())
}

fn decisions(r: &PerceptionResult) -> Vec<(u32, String, FilterDecision)> {
    r.trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Filter {
                iteration,
                label,
                decision,
            } => Some((*iteration, label.clone(), decision.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn office_decision_sequence() {
    let start = Instant::now();
    let (r, remaining, unmatched) = run_office();
    assert_eq!(remaining, 0, "every scripted reply used");
    assert!(unmatched.is_empty());

    let d = decisions(&r);
    let labels: Vec<&str> = d.iter().map(|(_, l, _)| l.as_str()).collect();
    assert_eq!(
        labels,
        [
            "wooden office desk",
            "black office chair",
            "small potted plant",
            "round wall clock",
            "tall wooden bookshelf",
            "stack of books",
            "silver laptop computer",
            "white coffee mug",
            "small desk lamp",
            "stack of books",
            "blue ceramic vase",
        ]
    );
    match &d[0].2 {
        FilterDecision::AutoSelected { gap } => assert!((gap - 0.30).abs() < 1e-9),
        other => panic!("desk: {other:?}"),
    }
    match &d[1].2 {
        FilterDecision::Selected { gap, color } => {
            assert!((gap - 0.05).abs() < 1e-9);
            assert_eq!(color, "green");
        }
        other => panic!("chair: {other:?}"),
    }
    assert_eq!(d[2].2, FilterDecision::BelowThreshold { max_score: 0.25 });
    assert_eq!(d[3].2, FilterDecision::Single { score: 0.45 });
    assert_eq!(d[8].2, FilterDecision::BelowThreshold { max_score: 0.2 });
    assert!(matches!(d[7].2, FilterDecision::AutoSelected { gap } if (gap - 0.25).abs() < 1e-9));

    let crops: Vec<(String, BBox, BBox)> = r
        .trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Crop {
                container,
                container_box,
                crop,
                iteration: 2,
            } => Some((container.clone(), *container_box, *crop)),
            _ => None,
        })
        .collect();
    assert_eq!(crops.len(), 2);
    assert_eq!(crops[0], ("wooden office desk".into(), bb(20.0, 250.0, 320.0, 460.0), bb(0.0, 197.5, 395.0, 480.0)));
    assert_eq!(crops[1].2, bb(395.0, 0.0, 640.0, 360.0));
    for (_, container, crop) in &crops {
        assert_eq!(*crop, scale_bbox(container, 1.5, 640.0, 480.0));
    }

    let merged: Vec<f64> = r
        .trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Merged { iou, .. } => Some(*iou),
            _ => None,
        })
        .collect();
    assert_eq!(merged.len(), 1);
    assert!((merged[0] - 0.8).abs() < 1e-9);

    let phase1 = r.objects.iter().filter(|o| o.depth_level == 1).count();
    let subs: Vec<_> = r.objects.iter().filter(|o| o.depth_level == 2).collect();
    assert_eq!(phase1, 5);
    assert_eq!(subs.len(), 3);
    assert_eq!(r.objects.len(), phase1 + subs.len());
    let laptop = subs.iter().find(|o| o.label == "silver laptop computer").unwrap();
    assert_eq!(laptop.bbox, bb(100.0, 217.5, 200.0, 287.5));
    assert_eq!(laptop.parent_container.as_deref(), Some("wooden office desk"));
    let chair = r.objects.iter().find(|o| o.label == "black office chair").unwrap();
    assert_eq!(chair.bbox, bb(200.0, 330.0, 290.0, 470.0));

    assert!(start.elapsed().as_secs_f64() < 2.0);
}

#[test]
fn office_run_is_reproducible() {
    let (a, _, _) = run_office();
    let (b, _, _) = run_office();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn zero_depth_skips_containers() {
    let mock = serve_mock(common::office_script(), "127.0.0.1:0").unwrap();
    let client = common::client(&mock.url());
    let cfg = PerceptionConfig {
        max_depth: 0,
        ..PerceptionConfig::default()
    };
    let r = perceive(&office_image(), &cfg, &mut HttpPerception { client: &client }).unwrap();
    assert_eq!(r.objects.len(), 5);
    assert!(!r.trace.iter().any(|e| matches!(e, TraceEvent::Crop { .. })));
}

#[test]
fn backend_failure_keeps_partial_result() {
    let mut script = common::office_script();
    // drop the shelf's sub-object reply: its request goes unmatched
    script.rules.remove(5);
    let mock = serve_mock(script, "127.0.0.1:0").unwrap();
    let client = common::client(&mock.url());
    let err = perceive(&office_image(), &PerceptionConfig::default(), &mut HttpPerception { client: &client }).unwrap_err();
    assert!(err.to_string().contains("UnmatchedRequest"), "{err}");
    assert_eq!(err.partial.objects.len(), 7);
    assert_eq!(mock.unmatched().len(), 1);
}
