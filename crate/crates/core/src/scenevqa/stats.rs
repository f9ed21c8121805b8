use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{Payload, Provenance, QARecord, Task};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub graph: usize,
    pub distance: usize,
}

impl SourceCounts {
    fn bump(&mut self, task: Task) {
        match task {
            Task::Graph => self.graph += 1,
            Task::Distance => self.distance += 1,
        }
    }
}

/// Table-shaped dataset summary: one row per source plus totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    pub totals: SourceCounts,
    pub by_source: BTreeMap<String, SourceCounts>,
    pub by_provenance: BTreeMap<Provenance, usize>,
    /// Distinct object categories (instance suffixes `_k` removed).
    pub distinct_labels: usize,
    /// Mean non-root nodes per graph record.
    pub mean_objects_per_graph: Option<f64>,
}

/// Source tag = image reference up to the first `/` or `:`.
pub fn source_of(image: &str) -> &str {
    match image.find(['/', ':']) {
        Some(i) if i > 0 => &image[..i],
        _ => "unknown",
    }
}

fn category(label: &str) -> &str {
    match label.rsplit_once('_') {
        Some((base, k)) if !base.is_empty() && !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => base,
        _ => label,
    }
}

pub fn dataset_stats(records: &[QARecord]) -> DatasetStats {
    let mut s = DatasetStats {
        records: records.len(),
        ..DatasetStats::default()
    };
    let mut labels: BTreeSet<&str> = BTreeSet::new();
    let (mut graphs, mut graph_objects) = (0usize, 0usize);
    for r in records {
        s.totals.bump(r.task);
        s.by_source.entry(String::from(source_of(&r.image))).or_default().bump(r.task);
        *s.by_provenance.entry(r.provenance).or_default() += 1;
        match &r.payload {
            Payload::Graph(g) => {
                let objects = g.object_labels();
                graphs += 1;
                graph_objects += objects.len();
                labels.extend(objects.into_iter().map(category));
            }
            Payload::Distances(pairs) => {
                for p in pairs {
                    labels.insert(category(&p.a));
                    labels.insert(category(&p.b));
                }
            }
        }
    }
    s.distinct_labels = labels.len();
    s.mean_objects_per_graph = (graphs > 0).then(|| graph_objects as f64 / graphs as f64);
    s
}
