//! SceneVQA record generation, image/vocabulary filters and dataset statistics.

mod cot;
mod distance;
mod filter;
pub mod prompts;
mod stats;
mod templates;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scenegraph::{extract_json_block, parse_graph, serialize_graph, SceneGraph};

pub use cot::{cot_sentences, gen_graph_cot, EMPTY_SCENE_SENTENCE};
pub use distance::{format_meters, gen_distance_qa, DistancePlan};
pub use filter::{
    filter_scene_image, filter_vocabulary, DropReason, DroppedLabel, FilterRuleSet, ImageVerdict, VocabularyFilter,
};
pub use stats::{dataset_stats, source_of, DatasetStats, SourceCounts};
pub use templates::{fill_template, TemplateBank, PLACEHOLDERS, TEMPLATES_PER_ARITY};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VqaError {
    #[error("need at least {needed} objects, have {got}")]
    TooFewObjects { needed: usize, got: usize },
    #[error("no distance for pair ({0}, {1})")]
    UnknownPair(String, String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("missing score for prompt {0:?}")]
    MissingPromptScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Graph,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Generated,
    Corrected,
    Approved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePair {
    pub a: String,
    pub b: String,
    pub meters: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    Graph(SceneGraph),
    Distances(Vec<DistancePair>),
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub image: String,
    pub task: Task,
    pub question: String,
    pub answer: String,
    pub payload: Payload,
    #[serde(default)]
    pub provenance: Provenance,
}

impl QARecord {
    /// Graph recovered from the answer text (not from the payload).
    pub fn answer_graph(&self) -> Option<SceneGraph> {
        parse_graph(&extract_json_block(&self.answer)?).ok()
    }
}

/// Graph question for `g`'s objects; answer = reasoning paragraph, blank line, canonical JSON.
pub fn gen_graph_qa(g: &SceneGraph, image: &str) -> QARecord {
    QARecord {
        id: format!("{image}#graph"),
        image: String::from(image),
        task: Task::Graph,
        question: prompts::graph_question(&g.object_labels()),
        answer: format!("{}\n\n{}", gen_graph_cot(g), serialize_graph(g)),
        payload: Payload::Graph(g.clone()),
        provenance: Provenance::Generated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegraph::fixtures::TOY;

    #[test]
    fn toy_graph_record() {
        let g = parse_graph(TOY).unwrap();
        let r = gen_graph_qa(&g, "sun/0001.jpg");
        assert!(r
            .question
            .contains("objects (art frame, bookshelf_0, desk, mug, toothbrush holder, notebook, chair) marked"));
        assert_eq!(r.answer_graph().unwrap(), g);
        assert!(r.answer.starts_with("The art frame is hanging on the wall."));
        let json = serde_json::to_string(&r).unwrap();
        let back: QARecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_graph_record() {
        let r = gen_graph_qa(&SceneGraph::empty(), "x");
        let (_, json) = r.answer.split_once("\n\n").unwrap();
        assert_eq!(json, "{\n    \"ceiling\": {},\n    \"wall\": {},\n    \"floor\": {}\n}");
        assert!(r.question.contains("objects () marked"));
    }
}
