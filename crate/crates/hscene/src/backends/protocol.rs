//! Wire types. Every endpoint is `POST /v1/<name>` with a JSON body.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use hscene_core::geometry::{BBox, DepthMap, Rle};
use hscene_core::perception::{Candidate, ColoredBox, ObjectDescription};
use hscene_core::scenegraph::extract_json_block;
use hscene_core::SceneGraph;

use super::parse::parse_model_object_json;
use super::BackendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Describe,
    Subobjects,
    Select,
    Detect,
    Segment,
    Depth,
    Clipscore,
    Cot,
}

impl Endpoint {
    pub const ALL: [Endpoint; 8] = [
        Endpoint::Describe,
        Endpoint::Subobjects,
        Endpoint::Select,
        Endpoint::Detect,
        Endpoint::Segment,
        Endpoint::Depth,
        Endpoint::Clipscore,
        Endpoint::Cot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::Describe => "describe",
            Endpoint::Subobjects => "subobjects",
            Endpoint::Select => "select",
            Endpoint::Detect => "detect",
            Endpoint::Segment => "segment",
            Endpoint::Depth => "depth",
            Endpoint::Clipscore => "clipscore",
            Endpoint::Cot => "cot",
        }
    }

    pub fn path(self) -> String {
        format!("/v1/{}", self.as_str())
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Endpoint {
    type Err = BackendError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Endpoint::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| BackendError::SchemaViolation(format!("unknown endpoint `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeRequest {
    pub image: String,
    pub system: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubobjectsRequest {
    pub image: String,
    pub crop: BBox,
    pub container: String,
    pub system: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<BBox>,
    pub labels: Vec<String>,
}

/// The adapter draws `boxes` onto the (cropped) image before prompting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectRequest {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<BBox>,
    pub description: String,
    pub boxes: Vec<ColoredBox>,
    pub system: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub image: String,
    pub boxes: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRequest {
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipscoreRequest {
    pub image: String,
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotRequest {
    pub graph: SceneGraph,
    pub draft: String,
}

/// Objects either structured or as raw model text in the `objectK` format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeResponse {
    pub objects: Vec<ObjectDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    /// One list per requested label, boxes in request (crop) coordinates.
    pub candidates: Vec<Vec<Candidate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectResponse {
    pub color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub masks: Vec<Rle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthResponse {
    pub width: usize,
    pub height: usize,
    /// Row-major meters.
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipscoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotResponse {
    pub text: String,
}

fn decode<T: DeserializeOwned>(endpoint: Endpoint, v: Value) -> Result<T, BackendError> {
    serde_json::from_value(v).map_err(|e| BackendError::SchemaViolation(format!("{endpoint}: {e}")))
}

fn raw_text(v: &Value) -> Option<&str> {
    v.as_object()
        .filter(|m| m.len() == 1)
        .and_then(|m| m.get("text"))
        .and_then(Value::as_str)
}

impl DescribeResponse {
    pub fn from_value(endpoint: Endpoint, v: Value) -> Result<Self, BackendError> {
        let r = match raw_text(&v) {
            Some(text) => DescribeResponse {
                objects: parse_model_object_json(text)?,
            },
            None => decode(endpoint, v)?,
        };
        if let Some(o) = r.objects.iter().find(|o| o.description.trim().is_empty()) {
            return Err(BackendError::SchemaViolation(format!("{endpoint}: empty description in {o:?}")));
        }
        Ok(r)
    }
}

impl DetectResponse {
    pub fn from_value(v: Value, labels: usize) -> Result<Self, BackendError> {
        let r: DetectResponse = decode(Endpoint::Detect, v)?;
        if r.candidates.len() != labels {
            return Err(BackendError::SchemaViolation(format!(
                "detect: {} candidate lists for {labels} labels",
                r.candidates.len()
            )));
        }
        if let Some(c) = r.candidates.iter().flatten().find(|c| !(0.0..=1.0).contains(&c.score)) {
            return Err(BackendError::SchemaViolation(format!("detect: score {} outside [0, 1]", c.score)));
        }
        Ok(r)
    }
}

impl SelectResponse {
    pub fn from_value(v: Value) -> Result<Self, BackendError> {
        match raw_text(&v) {
            Some(text) => {
                let block = extract_json_block(text)
                    .ok_or_else(|| BackendError::Unparseable(format!("select: no JSON in {text:?}")))?;
                decode(Endpoint::Select, serde_json::from_str(&block).map_err(|e| BackendError::Unparseable(e.to_string()))?)
            }
            None => decode(Endpoint::Select, v),
        }
    }
}

impl SegmentResponse {
    pub fn from_value(v: Value, boxes: usize) -> Result<Self, BackendError> {
        let r: SegmentResponse = decode(Endpoint::Segment, v)?;
        if r.masks.len() != boxes {
            return Err(BackendError::SchemaViolation(format!(
                "segment: {} masks for {boxes} boxes",
                r.masks.len()
            )));
        }
        Ok(r)
    }
}

impl DepthResponse {
    pub fn from_value(v: Value) -> Result<DepthMap, BackendError> {
        let r: DepthResponse = decode(Endpoint::Depth, v)?;
        DepthMap::new(r.width, r.height, r.values).map_err(|e| BackendError::SchemaViolation(format!("depth: {e}")))
    }
}

impl ClipscoreResponse {
    pub fn from_value(v: Value, prompts: usize) -> Result<Self, BackendError> {
        let r: ClipscoreResponse = decode(Endpoint::Clipscore, v)?;
        if r.scores.len() != prompts {
            return Err(BackendError::SchemaViolation(format!(
                "clipscore: {} scores for {prompts} prompts",
                r.scores.len()
            )));
        }
        Ok(r)
    }
}
