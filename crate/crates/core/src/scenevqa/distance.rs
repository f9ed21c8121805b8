use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::templates::{fill_template, TemplateBank};
use super::{DistancePair, Payload, Provenance, QARecord, Task, VqaError};
use crate::geometry::DistanceMatrix;

/// How many questions of each size to generate for one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistancePlan {
    pub single: usize,
    pub dual: usize,
    pub triple: usize,
}

impl Default for DistancePlan {
    fn default() -> Self {
        DistancePlan {
            single: 1,
            dual: 1,
            triple: 1,
        }
    }
}

/// One decimal, half away from zero, with an "m" suffix: 2.10 → "2.1m".
///
/// A tiny bias makes decimal halves such as 2.05 (stored just below the
/// half) round up as written.
pub fn format_meters(m: f64) -> String {
    let tenths = libm::floor(m.abs() * 10.0 + 0.5 + 1e-9) as u64;
    let sign = if m < 0.0 && tenths > 0 { "-" } else { "" };
    format!("{sign}{}.{}m", tenths / 10, tenths % 10)
}

/// Seeded DistanceVQA records for one image.
///
/// Record `k` draws from its own ChaCha stream (`seed`, stream `k`), so any
/// record can be regenerated alone. Objects within a question are distinct;
/// answers list the distances in question order, comma separated.
pub fn gen_distance_qa(
    image: &str,
    objects: &[String],
    d: &DistanceMatrix,
    bank: &TemplateBank,
    seed: u64,
    plan: DistancePlan,
) -> Result<Vec<QARecord>, VqaError> {
    let jobs: Vec<usize> = [(1, plan.single), (2, plan.dual), (3, plan.triple)]
        .into_iter()
        .flat_map(|(pairs, n)| core::iter::repeat_n(pairs, n))
        .collect();
    if let Some(max_pairs) = jobs.iter().max() {
        let needed = 2 * max_pairs;
        if objects.len() < needed {
            return Err(VqaError::TooFewObjects {
                needed,
                got: objects.len(),
            });
        }
    }

    let mut out = Vec::with_capacity(jobs.len());
    for (k, pairs) in jobs.into_iter().enumerate() {
        let templates = bank.for_pairs(pairs);
        if templates.is_empty() {
            return Err(VqaError::InvalidTemplate(format!("no {pairs}-pair templates")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let template = &templates[rng.random_range(0..templates.len())];
        let picked: Vec<&str> = index::sample(&mut rng, objects.len(), 2 * pairs)
            .into_iter()
            .map(|i| objects[i].as_str())
            .collect();

        let mut payload = Vec::with_capacity(pairs);
        for pair in picked.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            let meters = d
                .get(a, b)
                .ok_or_else(|| VqaError::UnknownPair(String::from(a), String::from(b)))?;
            payload.push(DistancePair {
                a: String::from(a),
                b: String::from(b),
                meters,
            });
        }
        let answer: Vec<String> = payload.iter().map(|p| format_meters(p.meters)).collect();
        out.push(QARecord {
            id: format!("{image}#distance-{k}"),
            image: String::from(image),
            task: Task::Distance,
            question: fill_template(template, &picked),
            answer: answer.join(", "),
            payload: Payload::Distances(payload),
            provenance: Provenance::Generated,
        });
    }
    Ok(out)
}
