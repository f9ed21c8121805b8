use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::VqaError;

pub const TEMPLATES_PER_ARITY: usize = 15;

/// Placeholders in order; a template asking for `n` distances uses the first `2n`.
pub const PLACEHOLDERS: [&str; 6] = ["[A]", "[B]", "[C]", "[D]", "[E]", "[F]"];

const SINGLE: [&str; TEMPLATES_PER_ARITY] = [
    "What's the distance from [A] to [B]?",
    "Can you calculate the length between [A] and [B]?",
    "Could you find out how far [A] is from [B]?",
    "Tell me how much space is between [A] and [B].",
    "Can you estimate the distance from [A] to [B]?",
    "What's the measurement of the distance between [A] and [B]?",
    "Do you know how many meters are between [A] and [B]?",
    "Can you tell the distance between [A] and [B]?",
    "How many steps would it take to get from [A] to [B]?",
    "Please measure the space between [A] and [B].",
    "How far would I need to walk to get from [A] to [B]?",
    "Please calculate the distance of [A] from [B].",
    "How many feet are between [A] and [B]?",
    "Could you provide an estimate of the distance from [A] to [B]?",
    "Can you measure how far [A] is from [B]?",
];

const DUAL: [&str; TEMPLATES_PER_ARITY] = [
    "Can you determine the distance from [A] to [B] and also from [C] to [D]?",
    "What is the measurement of the space separating [A] and [B], and also [C] and [D]?",
    "Could you calculate the lengths between [A] and [B], and between [C] and [D]?",
    "Please provide the distances from [A] to [B] and from [C] to [D].",
    "How far apart are [A] and [B], and what about the distance between [C] and [D]?",
    "Can you estimate how many meters separate [A] from [B] and [C] from [D]?",
    "Tell me the distance between [A] and [B], and also calculate it for [C] and [D].",
    "Could you measure the space from [A] to [B] and compare it with the distance from [C] to [D]?",
    "What's the length from [A] to [B] and from [C] to [D]?",
    "How many steps would it take to walk from [A] to [B] and from [C] to [D]?",
    "Please estimate the distance between [A] and [B], and also between [C] and [D].",
    "Can you tell me how much space separates [A] from [B], and the same for [C] and [D]?",
    "How many feet are there between [A] and [B], and also between [C] and [D]?",
    "Could you inform me about the distances from [A] to [B] and from [C] to [D]?",
    "What are the measurements of the distances between [A] and [B], and [C] and [D]?",
];

const TRIPLE: [&str; TEMPLATES_PER_ARITY] = [
    "Can you determine the distance from [A] to [B], and also from [C] to [D], and from [E] to [F]?",
    "Please calculate the lengths between [A] and [B], [C] and [D], and [E] and [F].",
    "How far is it from [A] to [B], and could you also tell me the distance between [C] and [D], and [E] and [F]?",
    "Could you measure the spaces between [A] and [B], [C] and [D], and [E] and [F]?",
    "What are the distances from [A] to [B], from [C] to [D], and from [E] to [F]?",
    "I need to know how many meters separate [A] and [B], [C] and [D], and [E] and [F]. Can you help?",
    "Can you provide the measurements of the distances between [A] and [B], [C] and [D], and [E] and [F]?",
    "How many steps would it take to walk from [A] to [B], from [C] to [D], and from [E] to [F]?",
    "Please inform me about the distance from [A] to [B], the distance from [C] to [D], and the distance from [E] to [F].",
    "Can you estimate how far [A] is from [B], how far [C] is from [D], and how far [E] is from [F]?",
    "What is the length from [A] to [B], from [C] to [D], and from [E] to [F]?",
    "Could you tell me how much space separates [A] and [B], [C] and [D], and [E] and [F]?",
    "How many feet are there between [A] and [B], between [C] and [D], and between [E] and [F]?",
    "Could you provide an estimate of the distances from [A] to [B], from [C] to [D], and from [E] to [F]?",
    "Please measure how far [A] is from [B], how far [C] is from [D], and how far [E] is from [F].",
];

/// DistanceVQA question templates: 15 each for one, two and three object pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateBank {
    pub single: Vec<String>,
    pub dual: Vec<String>,
    pub triple: Vec<String>,
}

impl Default for TemplateBank {
    fn default() -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        TemplateBank {
            single: own(&SINGLE),
            dual: own(&DUAL),
            triple: own(&TRIPLE),
        }
    }
}

impl TemplateBank {
    /// Templates for `pairs` object pairs (1..=3).
    pub fn for_pairs(&self, pairs: usize) -> &[String] {
        match pairs {
            1 => &self.single,
            2 => &self.dual,
            3 => &self.triple,
            _ => &[],
        }
    }

    pub fn len(&self) -> usize {
        self.single.len() + self.dual.len() + self.triple.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 15 templates per arity; each uses exactly its own placeholders, once each.
    pub fn validate(&self) -> Result<(), VqaError> {
        for pairs in 1..=3 {
            let list = self.for_pairs(pairs);
            if list.len() != TEMPLATES_PER_ARITY {
                return Err(VqaError::InvalidTemplate(format!(
                    "{pairs}-pair list has {} templates, expected {TEMPLATES_PER_ARITY}",
                    list.len()
                )));
            }
            for t in list {
                check_placeholders(t, pairs)?;
            }
        }
        Ok(())
    }
}

fn check_placeholders(t: &str, pairs: usize) -> Result<(), VqaError> {
    for (i, p) in PLACEHOLDERS.iter().enumerate() {
        let want = usize::from(i < 2 * pairs);
        if t.matches(p).count() != want {
            return Err(VqaError::InvalidTemplate(format!("`{t}`: expected {p} {want} time(s)")));
        }
    }
    Ok(())
}

/// Substitute `labels[i]` for the i-th placeholder.
pub fn fill_template(template: &str, labels: &[&str]) -> String {
    let mut out = template.to_string();
    for (p, l) in PLACEHOLDERS.iter().zip(labels) {
        out = out.replace(p, l);
    }
    out
}
