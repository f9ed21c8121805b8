//! Model backends over HTTP: wire protocol, retrying client, scripted mock
//! server, and the adapter that lets the perception loop run against them.

mod client;
pub mod mock;
mod parse;
pub mod prompts;
pub mod protocol;

use serde_json::Value;

use hscene_core::geometry::{BBox, DepthMap, Rle};
use hscene_core::perception::{Candidate, ColoredBox, ImageInfo, ObjectDescription, PerceptionBackend};
use hscene_core::SceneGraph;

pub use client::{BackendClient, RetryPolicy, REQUEST_ID_HEADER};
pub use mock::{fingerprint, serve_mock, MockRule, MockScript, MockServer, TranscriptEntry};
pub use parse::parse_model_object_json;
pub use protocol::Endpoint;

use protocol::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("backend refused: {0}")]
    BackendRefusal(String),
    #[error("unparseable model output: {0}")]
    Unparseable(String),
}

/// Typed calls for each endpoint.
impl BackendClient {
    pub fn describe(&self, image: &str) -> Result<Vec<ObjectDescription>, BackendError> {
        let req = DescribeRequest {
            image: image.to_string(),
            system: prompts::SYSTEM_PROMPT.to_string(),
            prompt: prompts::OBJECT_PROMPT.to_string(),
        };
        Ok(DescribeResponse::from_value(Endpoint::Describe, self.call(Endpoint::Describe, &req)?)?.objects)
    }

    pub fn subobjects(&self, image: &str, crop: &BBox, container: &str) -> Result<Vec<ObjectDescription>, BackendError> {
        let req = SubobjectsRequest {
            image: image.to_string(),
            crop: *crop,
            container: container.to_string(),
            system: prompts::SYSTEM_PROMPT.to_string(),
            prompt: prompts::subobject_prompt(container),
        };
        let reply = self.call(Endpoint::Subobjects, &req)?;
        Ok(DescribeResponse::from_value(Endpoint::Subobjects, reply)?.objects)
    }

    pub fn detect(&self, image: &str, crop: Option<&BBox>, labels: &[String]) -> Result<Vec<Vec<Candidate>>, BackendError> {
        let req = DetectRequest {
            image: image.to_string(),
            crop: crop.copied(),
            labels: labels.to_vec(),
        };
        Ok(DetectResponse::from_value(self.call(Endpoint::Detect, &req)?, labels.len())?.candidates)
    }

    pub fn select(
        &self,
        image: &str,
        crop: Option<&BBox>,
        description: &str,
        boxes: &[ColoredBox],
    ) -> Result<SelectResponse, BackendError> {
        let colors: Vec<&str> = boxes.iter().map(|b| b.color.as_str()).collect();
        let req = SelectRequest {
            image: image.to_string(),
            crop: crop.copied(),
            description: description.to_string(),
            boxes: boxes.to_vec(),
            system: prompts::SYSTEM_PROMPT.to_string(),
            prompt: prompts::select_prompt(&colors, description),
        };
        SelectResponse::from_value(self.call(Endpoint::Select, &req)?)
    }

    pub fn segment(&self, image: &str, boxes: &[BBox]) -> Result<Vec<Rle>, BackendError> {
        let req = SegmentRequest {
            image: image.to_string(),
            boxes: boxes.to_vec(),
        };
        Ok(SegmentResponse::from_value(self.call(Endpoint::Segment, &req)?, boxes.len())?.masks)
    }

    pub fn depth(&self, image: &str) -> Result<DepthMap, BackendError> {
        let req = DepthRequest {
            image: image.to_string(),
        };
        DepthResponse::from_value(self.call(Endpoint::Depth, &req)?)
    }

    /// Scores in prompt order.
    pub fn clipscore(&self, image: &str, prompts: &[String]) -> Result<Vec<f64>, BackendError> {
        let req = ClipscoreRequest {
            image: image.to_string(),
            prompts: prompts.to_vec(),
        };
        Ok(ClipscoreResponse::from_value(self.call(Endpoint::Clipscore, &req)?, prompts.len())?.scores)
    }

    /// Optional rewording of a templated reasoning paragraph.
    pub fn cot(&self, graph: &SceneGraph, draft: &str) -> Result<String, BackendError> {
        let req = CotRequest {
            graph: graph.clone(),
            draft: draft.to_string(),
        };
        let v: Value = self.call(Endpoint::Cot, &req)?;
        serde_json::from_value::<CotResponse>(v)
            .map(|r| r.text)
            .map_err(|e| BackendError::SchemaViolation(format!("cot: {e}")))
    }
}

/// Runs the perception loop against HTTP backends.
pub struct HttpPerception<'a> {
    pub client: &'a BackendClient,
}

impl PerceptionBackend for HttpPerception<'_> {
    type Error = BackendError;

    fn describe(&mut self, image: &ImageInfo) -> Result<Vec<ObjectDescription>, BackendError> {
        self.client.describe(&image.image)
    }

    fn subobjects(&mut self, image: &ImageInfo, crop: &BBox, container: &str) -> Result<Vec<ObjectDescription>, BackendError> {
        self.client.subobjects(&image.image, crop, container)
    }

    fn detect(
        &mut self,
        image: &ImageInfo,
        crop: Option<&BBox>,
        labels: &[String],
    ) -> Result<Vec<Vec<Candidate>>, BackendError> {
        self.client.detect(&image.image, crop, labels)
    }

    fn select(
        &mut self,
        image: &ImageInfo,
        crop: Option<&BBox>,
        description: &str,
        candidates: &[ColoredBox],
    ) -> Result<String, BackendError> {
        Ok(self.client.select(&image.image, crop, description, candidates)?.color)
    }
}
