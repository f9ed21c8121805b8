//! Iterative object perception.
//!
//! A run is a sequential state machine over a [`PerceptionBackend`]:
//!
//! 1. `describe` the whole image into objects with container flags, `detect`
//!    every label at once and keep one box per object via
//!    [`filter_and_update`]. Objects without a surviving box are dropped.
//! 2. For up to `max_depth` rounds, crop around every container found in the
//!    previous round (box scaled by `crop_scale`), ask for the sub-objects on
//!    or inside it, detect them within the crop, filter, map back to image
//!    coordinates and merge. A new object that overlaps an existing object of
//!    the same label by more than `dedup_iou` is treated as a re-detection.
//!
//! Every backend call and decision is appended to the trace, so a run against
//! a scripted backend is bit-reproducible.

mod stats;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{bbox_iou, scale_bbox, to_global, BBox};
use crate::scenegraph::{suffix_duplicates, ROOT_LABELS};

pub use stats::{perception_stats, PerceptionStats};

/// Colors offered to the select prompt, in assignment order.
pub const SELECT_PALETTE: [&str; 8] = [
    "red", "green", "blue", "yellow", "purple", "cyan", "orange", "magenta",
];

/// Slack for the top-two gap comparison so that a gap equal to the
/// threshold (up to float noise) takes the select path.
const GAP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Minimum detector score for a candidate box (0.3).
    pub min_score: f64,
    /// Top-two score gap above which the best box is taken without asking (0.15).
    pub min_gap: f64,
    /// Container crop scale factor (1.5).
    pub crop_scale: f64,
    /// Container refinement rounds.
    pub max_depth: u32,
    /// Same-label overlap above which a sub-object is a duplicate.
    pub dedup_iou: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            min_score: 0.3,
            min_gap: 0.15,
            crop_scale: 1.5,
            max_depth: 2,
            dedup_iou: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid perception config: {0}")]
pub struct ConfigError(pub &'static str);

impl PerceptionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.min_score > 0.0 && self.min_score < 1.0) {
            return Err(ConfigError("min_score must be in (0, 1)"));
        }
        if !(self.min_gap >= 0.0 && self.min_gap < 1.0) {
            return Err(ConfigError("min_gap must be in [0, 1)"));
        }
        if self.crop_scale.is_nan() || self.crop_scale < 1.0 {
            return Err(ConfigError("crop_scale must be >= 1"));
        }
        if self.max_depth < 1 {
            return Err(ConfigError("max_depth must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.dedup_iou) {
            return Err(ConfigError("dedup_iou must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Reference to the input image plus its pixel size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub image: String,
    pub width: u32,
    pub height: u32,
}

impl ImageInfo {
    fn dims(&self) -> (f64, f64) {
        (f64::from(self.width), f64::from(self.height))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDescription {
    pub description: String,
    #[serde(default)]
    pub container: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoredBox {
    pub color: String,
    pub bbox: BBox,
    pub score: f64,
}

/// Model services used by a perception run. Boxes returned by `detect` for a
/// crop are in crop-local coordinates.
pub trait PerceptionBackend {
    type Error;

    fn describe(&mut self, image: &ImageInfo) -> Result<Vec<ObjectDescription>, Self::Error>;

    fn subobjects(
        &mut self,
        image: &ImageInfo,
        crop: &BBox,
        container: &str,
    ) -> Result<Vec<ObjectDescription>, Self::Error>;

    /// One candidate list per label, in label order.
    fn detect(
        &mut self,
        image: &ImageInfo,
        crop: Option<&BBox>,
        labels: &[String],
    ) -> Result<Vec<Vec<Candidate>>, Self::Error>;

    /// Color of the box that best matches `description`.
    fn select(
        &mut self,
        image: &ImageInfo,
        crop: Option<&BBox>,
        description: &str,
        candidates: &[ColoredBox],
    ) -> Result<String, Self::Error>;
}

/// How [`filter_and_update`] reached its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterDecision {
    NoCandidates,
    BelowThreshold { max_score: f64 },
    Single { score: f64 },
    AutoSelected { gap: f64 },
    Selected { gap: f64, color: String },
    /// The select backend answered a color that was not offered; the top box is used.
    SelectFallback { gap: f64, color: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub chosen: Option<Candidate>,
    pub decision: FilterDecision,
}

/// Pick at most one box for an object from its detector candidates.
///
/// `select` is only invoked when at least two candidates pass `min_score`
/// and the top two are within `min_gap` of each other.
pub fn filter_and_update<E>(
    candidates: &[Candidate],
    cfg: &PerceptionConfig,
    select: impl FnOnce(&[ColoredBox]) -> Result<String, E>,
) -> Result<FilterOutcome, E> {
    let Some(max_score) = candidates.iter().map(|c| c.score).reduce(f64::max) else {
        return Ok(FilterOutcome {
            chosen: None,
            decision: FilterDecision::NoCandidates,
        });
    };
    if max_score < cfg.min_score {
        return Ok(FilterOutcome {
            chosen: None,
            decision: FilterDecision::BelowThreshold { max_score },
        });
    }
    let mut kept: Vec<Candidate> = candidates.iter().copied().filter(|c| c.score >= cfg.min_score).collect();
    kept.sort_by(|a, b| b.score.total_cmp(&a.score));
    let top = kept[0];
    if kept.len() == 1 {
        return Ok(FilterOutcome {
            chosen: Some(top),
            decision: FilterDecision::Single { score: top.score },
        });
    }
    let gap = top.score - kept[1].score;
    if gap > cfg.min_gap + GAP_EPSILON {
        return Ok(FilterOutcome {
            chosen: Some(top),
            decision: FilterDecision::AutoSelected { gap },
        });
    }
    let offered: Vec<ColoredBox> = kept
        .iter()
        .zip(SELECT_PALETTE)
        .map(|(c, color)| ColoredBox {
            color: color.to_string(),
            bbox: c.bbox,
            score: c.score,
        })
        .collect();
    let answer = select(&offered)?;
    let normalized = answer.trim().to_ascii_lowercase();
    Ok(match offered.iter().find(|b| b.color == normalized) {
        Some(b) => FilterOutcome {
            chosen: Some(Candidate {
                bbox: b.bbox,
                score: b.score,
            }),
            decision: FilterDecision::Selected { gap, color: normalized },
        },
        None => FilterOutcome {
            chosen: Some(top),
            decision: FilterDecision::SelectFallback { gap, color: answer },
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub label: String,
    pub container: bool,
    /// Image coordinates.
    pub bbox: BBox,
    pub score: f64,
    /// 1 for the whole-image pass, 2.. for container rounds.
    pub depth_level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_container: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Describe {
        objects: Vec<ObjectDescription>,
    },
    Detect {
        crop: Option<BBox>,
        labels: Vec<String>,
        candidates: Vec<usize>,
    },
    Filter {
        iteration: u32,
        label: String,
        decision: FilterDecision,
    },
    Crop {
        iteration: u32,
        container: String,
        container_box: BBox,
        crop: BBox,
    },
    Subobjects {
        container: String,
        objects: Vec<ObjectDescription>,
    },
    Accepted {
        iteration: u32,
        label: String,
        bbox: BBox,
    },
    OutsideCrop {
        label: String,
    },
    Merged {
        label: String,
        iou: f64,
    },
    Relabeled {
        from: String,
        to: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCount {
    pub iteration: u32,
    pub described: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionResult {
    pub image: ImageInfo,
    pub objects: Vec<DetectedObject>,
    pub trace: Vec<TraceEvent>,
    pub iterations: Vec<IterationCount>,
}

/// A backend failure; `partial` holds everything decided before it.
#[derive(Debug, Clone)]
pub struct PerceptionError<E> {
    pub source: E,
    pub partial: PerceptionResult,
}

impl<E: fmt::Display> fmt::Display for PerceptionError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "backend failure after {} trace events: {}",
            self.partial.trace.len(),
            self.source
        )
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for PerceptionError<E> {}

struct Working {
    label: String,
    container: bool,
    bbox: BBox,
    score: f64,
    depth_level: u32,
    parent: Option<usize>,
}

struct Run<'a, B: PerceptionBackend> {
    image: &'a ImageInfo,
    cfg: &'a PerceptionConfig,
    backend: &'a mut B,
    objects: Vec<Working>,
    trace: Vec<TraceEvent>,
    iterations: Vec<IterationCount>,
}

/// Run the two-phase perception loop on one image.
pub fn perceive<B: PerceptionBackend>(
    image: &ImageInfo,
    cfg: &PerceptionConfig,
    backend: &mut B,
) -> Result<PerceptionResult, PerceptionError<B::Error>> {
    let mut run = Run {
        image,
        cfg,
        backend,
        objects: Vec::new(),
        trace: Vec::new(),
        iterations: Vec::new(),
    };
    match run.execute() {
        Ok(()) => Ok(run.finish()),
        Err(source) => Err(PerceptionError {
            source,
            partial: run.finish(),
        }),
    }
}

impl<B: PerceptionBackend> Run<'_, B> {
    fn execute(&mut self) -> Result<(), B::Error> {
        let described = self.backend.describe(self.image)?;
        self.trace.push(TraceEvent::Describe {
            objects: described.clone(),
        });
        let mut frontier = self.detect_and_filter(1, None, None, &described)?;

        for iteration in 2..=self.cfg.max_depth + 1 {
            let mut next = Vec::new();
            for parent in frontier {
                if !self.objects[parent].container {
                    continue;
                }
                let (w, h) = self.image.dims();
                let container_box = self.objects[parent].bbox;
                let crop = scale_bbox(&container_box, self.cfg.crop_scale, w, h);
                let container = self.objects[parent].label.clone();
                self.trace.push(TraceEvent::Crop {
                    iteration,
                    container: container.clone(),
                    container_box,
                    crop,
                });
                let subs = self.backend.subobjects(self.image, &crop, &container)?;
                self.trace.push(TraceEvent::Subobjects {
                    container,
                    objects: subs.clone(),
                });
                if subs.is_empty() {
                    continue;
                }
                next.extend(self.detect_and_filter(iteration, Some(crop), Some(parent), &subs)?);
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(())
    }

    /// Detect `described` (inside `crop` when given), filter each object and
    /// merge survivors. Returns indices of newly added objects.
    fn detect_and_filter(
        &mut self,
        iteration: u32,
        crop: Option<BBox>,
        parent: Option<usize>,
        described: &[ObjectDescription],
    ) -> Result<Vec<usize>, B::Error> {
        let labels: Vec<String> = described.iter().map(|o| o.description.trim().to_string()).collect();
        let mut per_label = self.backend.detect(self.image, crop.as_ref(), &labels)?;
        per_label.resize_with(labels.len(), Vec::new);
        self.trace.push(TraceEvent::Detect {
            crop,
            labels: labels.clone(),
            candidates: per_label.iter().map(Vec::len).collect(),
        });

        let mut added = Vec::new();
        for ((object, label), candidates) in described.iter().zip(&labels).zip(&per_label) {
            let backend = &mut *self.backend;
            let image = self.image;
            let outcome = filter_and_update(candidates, self.cfg, |offered| {
                backend.select(image, crop.as_ref(), label, offered)
            })?;
            self.trace.push(TraceEvent::Filter {
                iteration,
                label: label.clone(),
                decision: outcome.decision,
            });
            let Some(chosen) = outcome.chosen else {
                continue;
            };
            let bbox = match crop {
                None => chosen.bbox.clamp(self.image.dims().0, self.image.dims().1),
                Some(c) => chosen
                    .bbox
                    .clamp(c.width(), c.height())
                    .map(|b| to_global(&b, (c.x0, c.y0))),
            };
            let Some(bbox) = bbox else {
                self.trace.push(TraceEvent::OutsideCrop { label: label.clone() });
                continue;
            };
            if crop.is_some() {
                let dup = self
                    .objects
                    .iter()
                    .filter(|o| o.label == *label)
                    .map(|o| bbox_iou(&o.bbox, &bbox))
                    .find(|iou| *iou > self.cfg.dedup_iou);
                if let Some(iou) = dup {
                    self.trace.push(TraceEvent::Merged {
                        label: label.clone(),
                        iou,
                    });
                    continue;
                }
            }
            self.trace.push(TraceEvent::Accepted {
                iteration,
                label: label.clone(),
                bbox,
            });
            added.push(self.objects.len());
            self.objects.push(Working {
                label: label.clone(),
                container: object.container,
                bbox,
                score: chosen.score,
                depth_level: iteration,
                parent,
            });
        }
        self.iterations.push(IterationCount {
            iteration,
            described: described.len(),
            accepted: added.len(),
        });
        Ok(added)
    }

    fn finish(mut self) -> PerceptionResult {
        let mut labels: Vec<String> = self.objects.iter().map(|o| o.label.clone()).collect();
        suffix_duplicates(&mut labels, &ROOT_LABELS);
        for (o, new) in self.objects.iter().zip(&labels) {
            if o.label != *new {
                self.trace.push(TraceEvent::Relabeled {
                    from: o.label.clone(),
                    to: new.clone(),
                });
            }
        }
        // Fold per-container rounds into one count per iteration.
        let mut iterations: Vec<IterationCount> = Vec::new();
        for c in self.iterations {
            match iterations.iter_mut().find(|i| i.iteration == c.iteration) {
                Some(i) => {
                    i.described += c.described;
                    i.accepted += c.accepted;
                }
                None => iterations.push(c),
            }
        }
        let objects = self
            .objects
            .iter()
            .zip(&labels)
            .map(|(o, label)| DetectedObject {
                label: label.clone(),
                container: o.container,
                bbox: o.bbox,
                score: o.score,
                depth_level: o.depth_level,
                parent_container: o.parent.map(|p| labels[p].clone()),
            })
            .collect();
        PerceptionResult {
            image: self.image.clone(),
            objects,
            trace: self.trace,
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn cands(scores: &[f64]) -> Vec<Candidate> {
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| Candidate {
                bbox: bb(i as f64 * 10.0, 0.0, i as f64 * 10.0 + 5.0, 5.0),
                score: *s,
            })
            .collect()
    }

    fn no_select(_: &[ColoredBox]) -> Result<String, ()> {
        panic!("select must not be called")
    }

    #[test]
    fn clear_winner_skips_select() {
        let out = filter_and_update(&cands(&[0.6, 0.9]), &PerceptionConfig::default(), no_select).unwrap();
        assert_eq!(out.chosen.unwrap().score, 0.9);
        assert!(matches!(out.decision, FilterDecision::AutoSelected { gap } if (gap - 0.3).abs() < 1e-12));
    }

    #[test]
    fn below_threshold_discarded() {
        let out = filter_and_update(&cands(&[0.25]), &PerceptionConfig::default(), no_select).unwrap();
        assert_eq!(out.chosen, None);
        assert_eq!(out.decision, FilterDecision::BelowThreshold { max_score: 0.25 });
        let out = filter_and_update(&[], &PerceptionConfig::default(), no_select).unwrap();
        assert_eq!(out.decision, FilterDecision::NoCandidates);
    }

    #[test]
    fn close_scores_consult_select() {
        let mut offered = Vec::new();
        let out = filter_and_update(&cands(&[0.45, 0.50, 0.1]), &PerceptionConfig::default(), |o| {
            offered = o.to_vec();
            Ok::<_, ()>("Green".into())
        })
        .unwrap();
        // Only the two boxes above 0.3 are offered, best first.
        assert_eq!(offered.len(), 2);
        assert_eq!((offered[0].color.as_str(), offered[0].score), ("red", 0.50));
        assert_eq!((offered[1].color.as_str(), offered[1].score), ("green", 0.45));
        assert_eq!(out.chosen.unwrap().score, 0.45);
        assert!(matches!(out.decision, FilterDecision::Selected { ref color, .. } if color == "green"));
    }

    #[test]
    fn gap_equal_to_threshold_selects() {
        let mut called = false;
        filter_and_update(&cands(&[0.45, 0.30]), &PerceptionConfig::default(), |_| {
            called = true;
            Ok::<_, ()>("red".into())
        })
        .unwrap();
        assert!(called);
    }

    #[test]
    fn unknown_color_falls_back_to_top() {
        let out = filter_and_update(&cands(&[0.5, 0.45]), &PerceptionConfig::default(), |_| {
            Ok::<_, ()>("teal".into())
        })
        .unwrap();
        assert_eq!(out.chosen.unwrap().score, 0.5);
        assert!(matches!(out.decision, FilterDecision::SelectFallback { .. }));
    }

    #[test]
    fn single_survivor_skips_select() {
        let out = filter_and_update(&cands(&[0.2, 0.31]), &PerceptionConfig::default(), no_select).unwrap();
        assert_eq!(out.decision, FilterDecision::Single { score: 0.31 });
    }

    #[test]
    fn config_validation() {
        assert!(PerceptionConfig::default().validate().is_ok());
        let bad = PerceptionConfig {
            crop_scale: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PerceptionConfig {
            max_depth: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    /// Backend answering from fixed tables, for loop-level tests.
    struct Table {
        describe: Vec<ObjectDescription>,
        subs: Vec<(String, Vec<ObjectDescription>)>,
        detect: Vec<(String, Vec<Candidate>)>,
        calls: Vec<&'static str>,
    }

    impl PerceptionBackend for Table {
        type Error = &'static str;
        fn describe(&mut self, _: &ImageInfo) -> Result<Vec<ObjectDescription>, Self::Error> {
            self.calls.push("describe");
            Ok(self.describe.clone())
        }
        fn subobjects(&mut self, _: &ImageInfo, _: &BBox, c: &str) -> Result<Vec<ObjectDescription>, Self::Error> {
            self.calls.push("subobjects");
            Ok(self.subs.iter().find(|(k, _)| k == c).map(|(_, v)| v.clone()).unwrap_or_default())
        }
        fn detect(&mut self, _: &ImageInfo, _: Option<&BBox>, labels: &[String]) -> Result<Vec<Vec<Candidate>>, Self::Error> {
            self.calls.push("detect");
            Ok(labels
                .iter()
                .map(|l| self.detect.iter().find(|(k, _)| k == l).map(|(_, v)| v.clone()).unwrap_or_default())
                .collect())
        }
        fn select(&mut self, _: &ImageInfo, _: Option<&BBox>, _: &str, _: &[ColoredBox]) -> Result<String, Self::Error> {
            self.calls.push("select");
            Err("select unavailable")
        }
    }

    fn obj(d: &str, container: bool) -> ObjectDescription {
        ObjectDescription {
            description: d.into(),
            container,
        }
    }

    fn image() -> ImageInfo {
        ImageInfo {
            image: "sha256:00".into(),
            width: 100,
            height: 100,
        }
    }

    #[test]
    fn no_containers_means_no_second_phase() {
        let mut b = Table {
            describe: vec![obj("chair", false)],
            subs: vec![],
            detect: vec![("chair".into(), vec![Candidate { bbox: bb(1., 1., 9., 9.), score: 0.8 }])],
            calls: vec![],
        };
        let r = perceive(&image(), &PerceptionConfig::default(), &mut b).unwrap();
        assert_eq!(b.calls, ["describe", "detect"]);
        assert_eq!(r.objects.len(), 1);
        assert_eq!(r.objects[0].depth_level, 1);
    }

    #[test]
    fn duplicates_merged_and_labels_suffixed() {
        let mut b = Table {
            describe: vec![obj("shelf", true), obj("book", false), obj("book", false)],
            subs: vec![("shelf".into(), vec![obj("book", false), obj("vase", false)])],
            detect: vec![
                ("shelf".into(), vec![Candidate { bbox: bb(20., 20., 60., 60.), score: 0.9 }]),
                // Same local box in both passes. The shelf crop is (10,10)-(70,70), so
                // the crop detection clamps and lands on (20,20)-(70,70): IoU 0.69.
                ("book".into(), vec![Candidate { bbox: bb(10., 10., 70., 70.), score: 0.7 }]),
                ("vase".into(), vec![Candidate { bbox: bb(40., 5., 45., 15.), score: 0.6 }]),
            ],
            calls: vec![],
        };
        let r = perceive(&image(), &PerceptionConfig::default(), &mut b).unwrap();
        let labels: Vec<_> = r.objects.iter().map(|o| o.label.as_str()).collect();
        // Phase 1 keeps both books (same box); the crop re-detection of "book" merges.
        assert_eq!(labels, ["shelf", "book_0", "book_1", "vase"]);
        assert!(r.trace.iter().any(|e| matches!(e, TraceEvent::Merged { label, .. } if label == "book")));
        let vase = &r.objects[3];
        assert_eq!(vase.bbox, bb(50., 15., 55., 25.));
        assert_eq!(vase.parent_container.as_deref(), Some("shelf"));
        assert_eq!(vase.depth_level, 2);
    }

    #[test]
    fn backend_failure_keeps_partial_trace() {
        let mut b = Table {
            describe: vec![obj("lamp", false)],
            subs: vec![],
            detect: vec![(
                "lamp".into(),
                vec![
                    Candidate { bbox: bb(1., 1., 5., 5.), score: 0.5 },
                    Candidate { bbox: bb(6., 1., 9., 5.), score: 0.45 },
                ],
            )],
            calls: vec![],
        };
        let err = perceive(&image(), &PerceptionConfig::default(), &mut b).unwrap_err();
        assert_eq!(err.source, "select unavailable");
        assert_eq!(err.partial.trace.len(), 2);
        assert!(err.partial.objects.is_empty());
    }
}
