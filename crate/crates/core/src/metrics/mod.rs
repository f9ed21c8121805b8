//! Four-perspective scene-graph evaluation and distance-answer scoring.
//!
//! Each perspective reduces a graph to a set of hashable units and compares
//! ground truth against prediction with set counts:
//!
//! | perspective | unit |
//! |---|---|
//! | PRA | [`RelationTriple`] |
//! | OWA | [`ObjectRelationUnit`](crate::scenegraph::ObjectRelationUnit) |
//! | LWA | [`LayerUnit`](crate::scenegraph::LayerUnit) |
//! | NDA | node label |

mod distance;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::scenegraph::{extract_json_block, parse_graph, RelationTriple, SceneGraph};

pub use distance::{
    error_stats, eval_distance_batch, eval_distance_predictions, pair_answers, parse_distance_answer,
    parse_distance_answers, BandAccuracy, DistanceBand, DistanceReport, ErrorStats, ThresholdFraction,
    ABS_ERROR_LINES, REL_ERROR_LINES,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("ground-truth distance must be positive, got {0}")]
    NonPositiveGroundTruth(f64),
    #[error("invalid band [{0}, {1}]: need 0 < low <= 100 <= high")]
    InvalidBand(f64, f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        MetricCounts { tp, fp, fn_ }
    }

    pub fn scores(self) -> Scores {
        scores_from_counts(self)
    }
}

impl Add for MetricCounts {
    type Output = MetricCounts;
    fn add(self, o: MetricCounts) -> MetricCounts {
        MetricCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for MetricCounts {
    fn add_assign(&mut self, o: MetricCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub iou: f64,
}

impl Scores {
    pub const ZERO: Scores = Scores {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        iou: 0.0,
    };
    pub const PERFECT: Scores = Scores {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
        iou: 1.0,
    };
}

/// `tp = |gt ∩ pred|`, `fp = |pred \ gt|`, `fn = |gt \ pred|`.
pub fn set_counts<T: Ord>(gt: impl IntoIterator<Item = T>, pred: impl IntoIterator<Item = T>) -> MetricCounts {
    let gt: BTreeSet<T> = gt.into_iter().collect();
    let pred: BTreeSet<T> = pred.into_iter().collect();
    let tp = gt.intersection(&pred).count();
    MetricCounts::new(tp, pred.len() - tp, gt.len() - tp)
}

/// Precision, recall, F1 and IoU. Empty-vs-empty (all counts zero) scores
/// 1.0; any other zero denominator scores 0.0.
pub fn scores_from_counts(c: MetricCounts) -> Scores {
    if c.tp == 0 && c.fp == 0 && c.fn_ == 0 {
        return Scores::PERFECT;
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
        iou: ratio(c.tp, c.tp + c.fp + c.fn_),
    }
}

/// Counts for the four perspectives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerspectiveCounts {
    pub pra: MetricCounts,
    pub owa: MetricCounts,
    pub lwa: MetricCounts,
    pub nda: MetricCounts,
}

impl PerspectiveCounts {
    pub fn between(gt: &SceneGraph, pred: &SceneGraph) -> Self {
        PerspectiveCounts {
            pra: set_counts(gt.to_pairwise(), pred.to_pairwise()),
            owa: set_counts(gt.to_objectwise(), pred.to_objectwise()),
            lwa: set_counts(gt.layers(), pred.layers()),
            nda: set_counts(gt.nodes(), pred.nodes()),
        }
    }

    /// Counts for a prediction that could not be loaded: everything missed.
    pub fn all_missed(gt: &SceneGraph) -> Self {
        PerspectiveCounts {
            pra: MetricCounts::new(0, 0, gt.to_pairwise().len()),
            owa: MetricCounts::new(0, 0, gt.node_count()),
            lwa: MetricCounts::new(0, 0, gt.layers().len()),
            nda: MetricCounts::new(0, 0, gt.node_count()),
        }
    }

    pub fn scores(&self) -> PerspectiveScores {
        PerspectiveScores {
            pra: self.pra.scores(),
            owa: self.owa.scores(),
            lwa: self.lwa.scores(),
            nda: self.nda.scores(),
        }
    }
}

impl Add for PerspectiveCounts {
    type Output = PerspectiveCounts;
    fn add(self, o: Self) -> Self {
        PerspectiveCounts {
            pra: self.pra + o.pra,
            owa: self.owa + o.owa,
            lwa: self.lwa + o.lwa,
            nda: self.nda + o.nda,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveScores {
    pub pra: Scores,
    pub owa: Scores,
    pub lwa: Scores,
    pub nda: Scores,
}

impl PerspectiveScores {
    pub const ZERO: PerspectiveScores = PerspectiveScores {
        pra: Scores::ZERO,
        owa: Scores::ZERO,
        lwa: Scores::ZERO,
        nda: Scores::ZERO,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEvalReport {
    pub json_parsed: bool,
    pub pra: Scores,
    pub owa: Scores,
    pub lwa: Scores,
    pub nda: Scores,
    pub counts: PerspectiveCounts,
}

impl GraphEvalReport {
    pub fn scores(&self) -> PerspectiveScores {
        PerspectiveScores {
            pra: self.pra,
            owa: self.owa,
            lwa: self.lwa,
            nda: self.nda,
        }
    }
}

/// Score one model output against a ground-truth graph. Outputs without a
/// loadable graph score zero everywhere.
pub fn eval_graph(gt: &SceneGraph, pred_text: &str) -> GraphEvalReport {
    let pred = extract_json_block(pred_text).and_then(|block| parse_graph(&block).ok());
    let (json_parsed, counts, scores) = match pred {
        Some(pred) => {
            let counts = PerspectiveCounts::between(gt, &pred);
            (true, counts, counts.scores())
        }
        None => (false, PerspectiveCounts::all_missed(gt), PerspectiveScores::ZERO),
    };
    GraphEvalReport {
        json_parsed,
        pra: scores.pra,
        owa: scores.owa,
        lwa: scores.lwa,
        nda: scores.nda,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBatchReport {
    pub samples: usize,
    pub parsed: usize,
    /// Parsed fraction × 100.
    pub json_pct: f64,
    /// Scores of the pooled counts.
    pub micro: PerspectiveScores,
    /// Mean of per-sample scores.
    #[serde(rename = "macro")]
    pub macro_avg: PerspectiveScores,
    pub pooled: PerspectiveCounts,
}

/// Order- and partition-independent accumulator behind [`eval_graph_batch`].
#[derive(Debug, Clone, Default)]
pub struct GraphBatch {
    samples: usize,
    parsed: usize,
    pooled: PerspectiveCounts,
    score_sums: [[f64; 4]; 4],
}

impl GraphBatch {
    pub fn push(&mut self, report: &GraphEvalReport) {
        self.samples += 1;
        self.parsed += usize::from(report.json_parsed);
        self.pooled = self.pooled + report.counts;
        for (sum, s) in self.score_sums.iter_mut().zip([report.pra, report.owa, report.lwa, report.nda]) {
            for (acc, v) in sum.iter_mut().zip([s.precision, s.recall, s.f1, s.iou]) {
                *acc += v;
            }
        }
    }

    pub fn merge(&mut self, other: &GraphBatch) {
        self.samples += other.samples;
        self.parsed += other.parsed;
        self.pooled = self.pooled + other.pooled;
        for (a, b) in self.score_sums.iter_mut().zip(other.score_sums.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += *y;
            }
        }
    }

    pub fn finish(&self) -> Result<GraphBatchReport, MetricsError> {
        if self.samples == 0 {
            return Err(MetricsError::EmptyBatch);
        }
        let n = self.samples as f64;
        let mean = |i: usize| {
            let s = &self.score_sums[i];
            Scores {
                precision: s[0] / n,
                recall: s[1] / n,
                f1: s[2] / n,
                iou: s[3] / n,
            }
        };
        Ok(GraphBatchReport {
            samples: self.samples,
            parsed: self.parsed,
            json_pct: self.parsed as f64 / n * 100.0,
            micro: self.pooled.scores(),
            macro_avg: PerspectiveScores {
                pra: mean(0),
                owa: mean(1),
                lwa: mean(2),
                nda: mean(3),
            },
            pooled: self.pooled,
        })
    }
}

pub fn eval_graph_batch<'a, I>(samples: I) -> Result<GraphBatchReport, MetricsError>
where
    I: IntoIterator<Item = (&'a SceneGraph, &'a str)>,
{
    let mut batch = GraphBatch::default();
    for (gt, pred) in samples {
        batch.push(&eval_graph(gt, pred));
    }
    batch.finish()
}

/// Triples that appear in exactly one of the two graphs: `(only_in_a, only_in_b)`.
pub fn triple_diff(a: &SceneGraph, b: &SceneGraph) -> (Vec<RelationTriple>, Vec<RelationTriple>) {
    let ta: BTreeSet<_> = a.to_pairwise().into_iter().collect();
    let tb: BTreeSet<_> = b.to_pairwise().into_iter().collect();
    (
        ta.difference(&tb).cloned().collect(),
        tb.difference(&ta).cloned().collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegraph::{fixtures::TOY, serialize_graph};

    #[test]
    fn worked_example_counts() {
        let c = set_counts(["a", "b", "c", "d"], ["b", "c", "d", "e", "f"]);
        assert_eq!(c, MetricCounts::new(3, 2, 1));
        assert_eq!(set_counts(["x"], ["x"]), MetricCounts::new(1, 0, 0));
        assert_eq!(set_counts(["a", "b"], ["c", "d", "e"]), MetricCounts::new(0, 3, 2));
    }

    #[test]
    fn worked_example_scores() {
        let s = scores_from_counts(MetricCounts::new(3, 2, 1));
        assert_eq!(s.precision, 0.6);
        assert_eq!(s.recall, 0.75);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.iou, 0.5);
    }

    #[test]
    fn degenerate_scores() {
        assert_eq!(scores_from_counts(MetricCounts::default()), Scores::PERFECT);
        assert_eq!(scores_from_counts(MetricCounts::new(0, 5, 0)), Scores::ZERO);
        assert_eq!(scores_from_counts(MetricCounts::new(0, 0, 4)), Scores::ZERO);
    }

    #[test]
    fn identity_prediction_is_perfect() {
        let g = parse_graph(TOY).unwrap();
        let r = eval_graph(&g, &serialize_graph(&g));
        assert!(r.json_parsed);
        assert_eq!(r.scores(), PerspectiveScores {
            pra: Scores::PERFECT,
            owa: Scores::PERFECT,
            lwa: Scores::PERFECT,
            nda: Scores::PERFECT,
        });
    }

    #[test]
    fn unparsed_prediction_scores_zero() {
        let g = parse_graph(TOY).unwrap();
        let r = eval_graph(&g, "no json here");
        assert!(!r.json_parsed);
        assert_eq!(r.scores(), PerspectiveScores::ZERO);
        assert_eq!(r.counts.pra, MetricCounts::new(0, 0, 7));
        // Empty ground truth still scores zero when nothing loads.
        let r = eval_graph(&SceneGraph::empty(), "nothing");
        assert_eq!(r.scores(), PerspectiveScores::ZERO);
    }

    #[test]
    fn batch_json_pct_and_pooling() {
        let g = parse_graph(TOY).unwrap();
        let good = serialize_graph(&g);
        let report = eval_graph_batch([(&g, good.as_str()), (&g, "sorry")]).unwrap();
        assert_eq!(report.json_pct, 50.0);
        assert_eq!(report.pooled.pra, MetricCounts::new(7, 0, 7));
        assert_eq!(report.micro.pra.recall, 0.5);
        assert_eq!(report.macro_avg.pra.f1, 0.5);
        assert_eq!(
            eval_graph_batch(core::iter::empty::<(&SceneGraph, &str)>()),
            Err(MetricsError::EmptyBatch)
        );
    }

    #[test]
    fn batch_merge_is_partition_independent() {
        let g = parse_graph(TOY).unwrap();
        let texts = [serialize_graph(&g), "x".into(), serialize_graph(&SceneGraph::empty())];
        let reports: Vec<_> = texts.iter().map(|t| eval_graph(&g, t)).collect();
        let mut whole = GraphBatch::default();
        reports.iter().for_each(|r| whole.push(r));
        let mut left = GraphBatch::default();
        let mut right = GraphBatch::default();
        left.push(&reports[2]);
        right.push(&reports[0]);
        right.push(&reports[1]);
        left.merge(&right);
        let a = whole.finish().unwrap();
        let b = left.finish().unwrap();
        assert_eq!(a.pooled, b.pooled);
        assert_eq!(a.micro, b.micro);
        assert!((a.macro_avg.nda.f1 - b.macro_avg.nda.f1).abs() < 1e-12);
    }
}
