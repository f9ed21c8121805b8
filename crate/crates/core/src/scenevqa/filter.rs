//! Scene-image and object-vocabulary filters.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::prompts::{SCENE_NEGATIVE_PROMPTS, SCENE_POSITIVE_PROMPT};
use super::VqaError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ImageVerdict {
    Keep,
    /// `reason` is the highest-scoring negative prompt.
    Drop { reason: String },
}

/// Keep an image iff the positive prompt scores strictly above every negative.
/// `scores` pairs prompt text with its image-text score.
pub fn filter_scene_image(scores: &[(String, f64)]) -> Result<ImageVerdict, VqaError> {
    let score_of = |prompt: &str| {
        scores
            .iter()
            .find(|(p, _)| p == prompt)
            .map(|(_, s)| *s)
            .ok_or_else(|| VqaError::MissingPromptScore(prompt.to_string()))
    };
    let positive = score_of(SCENE_POSITIVE_PROMPT)?;
    let mut worst: Option<(&str, f64)> = None;
    for prompt in SCENE_NEGATIVE_PROMPTS {
        let s = score_of(prompt)?;
        if worst.is_none_or(|(_, w)| s > w) {
            worst = Some((prompt, s));
        }
    }
    let (prompt, max_negative) = worst.expect("negative prompt list is non-empty");
    Ok(if positive > max_negative {
        ImageVerdict::Keep
    } else {
        ImageVerdict::Drop {
            reason: prompt.to_string(),
        }
    })
}

/// Vocabulary blocklists. Terms match whole trailing words of a label, so
/// "paneling" drops "wood paneling" while "mountain" keeps "mountain bike".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRuleSet {
    pub structure_terms: Vec<String>,
    pub outdoor_terms: Vec<String>,
    pub human_terms: Vec<String>,
    pub non_entity_terms: Vec<String>,
    pub english_only: bool,
    pub garbled_heuristic: bool,
}

fn owned(terms: &[&str]) -> Vec<String> {
    terms.iter().map(|t| t.to_string()).collect()
}

impl Default for FilterRuleSet {
    fn default() -> Self {
        FilterRuleSet {
            structure_terms: owned(&[
                "floor", "wall", "ceiling", "paneling", "panelling", "wainscoting", "baseboard", "skirting board",
                "molding", "moulding", "crown molding", "trim", "flooring", "floorboard", "floorboards", "floor tile",
                "wall tile", "ceiling tile", "drywall", "plaster", "ceiling beam", "wallpaper", "tile",
            ]),
            outdoor_terms: owned(&[
                "mountain", "mountains", "sky", "cloud", "clouds", "ocean", "sea", "beach", "river", "lake", "forest",
                "street", "road", "sidewalk", "highway", "skyscraper", "hill", "hills", "field", "lawn", "sun",
                "volcano", "desert", "waterfall",
            ]),
            human_terms: owned(&[
                "adult", "person", "people", "man", "men", "woman", "women", "child", "children", "kid", "kids", "boy",
                "girl", "baby", "human", "lady", "gentleman", "crowd", "teenager", "toddler",
            ]),
            non_entity_terms: owned(&[
                "window view", "view", "scene", "room", "reflection", "shadow", "background", "interior", "space",
                "corner", "area", "sunlight", "darkness", "daylight",
            ]),
            english_only: true,
            garbled_heuristic: true,
        }
    }
}

impl FilterRuleSet {
    /// Lowercase, whitespace-collapse and dedupe every list (first occurrence wins).
    pub fn normalized(mut self) -> Self {
        for list in [
            &mut self.structure_terms,
            &mut self.outdoor_terms,
            &mut self.human_terms,
            &mut self.non_entity_terms,
        ] {
            let mut out: Vec<String> = Vec::with_capacity(list.len());
            for t in list.drain(..) {
                let t = normalize(&t);
                if !t.is_empty() && !out.contains(&t) {
                    out.push(t);
                }
            }
            *list = out;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "term", rename_all = "snake_case")]
pub enum DropReason {
    Empty,
    Structure(String),
    Garbled,
    NonEnglish,
    Outdoor(String),
    Human(String),
    NonEntity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLabel {
    pub label: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyFilter {
    pub kept: Vec<String>,
    pub dropped: Vec<DroppedLabel>,
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drop a trailing `_<digits>` instance suffix.
fn base_label(label: &str) -> &str {
    match label.rsplit_once('_') {
        Some((base, k)) if !base.is_empty() && !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => base,
        _ => label,
    }
}

fn ends_with_term(words: &[&str], term: &str) -> bool {
    let tw: Vec<&str> = term.split(' ').collect();
    words.len() >= tw.len() && words[words.len() - tw.len()..] == tw[..]
}

fn find_term<'a>(words: &[&str], terms: &'a [String]) -> Option<&'a String> {
    terms.iter().find(|t| ends_with_term(words, t))
}

fn is_garbled(label: &str) -> bool {
    if label.chars().any(|c| c.is_control() || c == '\u{fffd}') {
        return true;
    }
    let visible: Vec<char> = label.chars().filter(|c| !c.is_whitespace()).collect();
    let other = visible.iter().filter(|c| !c.is_alphabetic()).count();
    other * 10 > visible.len() * 3
}

/// First rule a label trips, checked in the order structure, garbled,
/// non-English, outdoor, human, non-entity.
fn drop_reason(label: &str, rules: &FilterRuleSet) -> Option<DropReason> {
    let text = normalize(base_label(label.trim()));
    if text.is_empty() {
        return Some(DropReason::Empty);
    }
    let words: Vec<&str> = text.split(' ').collect();
    if let Some(t) = find_term(&words, &rules.structure_terms) {
        return Some(DropReason::Structure(t.clone()));
    }
    if rules.garbled_heuristic && is_garbled(&text) {
        return Some(DropReason::Garbled);
    }
    if rules.english_only && text.chars().any(|c| c.is_alphabetic() && !c.is_ascii_alphabetic()) {
        return Some(DropReason::NonEnglish);
    }
    if let Some(t) = find_term(&words, &rules.outdoor_terms) {
        return Some(DropReason::Outdoor(t.clone()));
    }
    if let Some(t) = find_term(&words, &rules.human_terms) {
        return Some(DropReason::Human(t.clone()));
    }
    if let Some(t) = find_term(&words, &rules.non_entity_terms) {
        return Some(DropReason::NonEntity(t.clone()));
    }
    None
}

/// Split `labels` into kept and dropped, preserving input order.
pub fn filter_vocabulary<S: AsRef<str>>(labels: &[S], rules: &FilterRuleSet) -> VocabularyFilter {
    let rules = rules.clone().normalized();
    let mut out = VocabularyFilter::default();
    for label in labels {
        let label = label.as_ref();
        match drop_reason(label, &rules) {
            None => out.kept.push(label.to_string()),
            Some(reason) => out.dropped.push(DroppedLabel {
                label: label.to_string(),
                reason,
            }),
        }
    }
    out
}
