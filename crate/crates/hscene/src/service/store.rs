//! File-backed scene store.
//!
//! Layout under the store root:
//!
//! ```text
//! scenes/<scene-id>.jsonl   append-only event log, replayed on open
//! blobs/<sha256 hex>        image bytes
//! ```
//!
//! Writes to one scene are serialized by that scene's mutex and become
//! durable (flushed and synced) before the call returns.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use hscene_core::scenegraph::{validate, EditError, EditOp, Warning};
use hscene_core::scenevqa::{gen_graph_qa, Provenance, QARecord};
use hscene_core::SceneGraph;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown scene {0}")]
    UnknownScene(String),
    #[error("stale base revision; latest is {latest:?}")]
    StaleBase { latest: Option<String> },
    #[error(transparent)]
    InvalidEdit(#[from] EditError),
    #[error("image already pending as {scene_id}")]
    DuplicateImage { scene_id: String },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("cannot approve: {0}")]
    NotApprovable(String),
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pending,
    InReview,
    Approved,
}

impl std::str::FromStr for Status {
    type Err = ServiceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(Status::Pending),
            "in_review" => Ok(Status::InReview),
            "approved" => Ok(Status::Approved),
            other => Err(ServiceError::Invalid(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    Model,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub revision_id: String,
    pub author: Author,
    pub graph: SceneGraph,
    /// Milliseconds since the Unix epoch.
    pub at: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<EditOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub image: String,
    pub objects: Vec<String>,
    pub status: Status,
    pub revisions: Vec<Revision>,
    /// Revision that export uses.
    pub approved_revision: Option<String>,
}

impl SceneRecord {
    pub fn latest(&self) -> Option<&Revision> {
        self.revisions.last()
    }

    fn revision(&self, id: &str) -> Option<&Revision> {
        self.revisions.iter().find(|r| r.revision_id == id)
    }

    pub fn summary(&self) -> SceneSummary {
        SceneSummary {
            scene_id: self.scene_id.clone(),
            image: self.image.clone(),
            status: self.status,
            revision_count: self.revisions.len(),
            object_count: self
                .latest()
                .map_or(self.objects.len(), |r| r.graph.object_labels().len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub image: String,
    pub status: Status,
    pub revision_count: usize,
    pub object_count: usize,
}

/// One log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created {
        scene_id: String,
        image: String,
        objects: Vec<String>,
        at: u64,
    },
    Revised(Box<Revision>),
    Status {
        status: Status,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        approved_revision: Option<String>,
        #[serde(default)]
        accept_as_is: bool,
        at: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    /// Must name the latest revision (`None` only while the scene has none).
    pub base_revision: Option<String>,
    pub ops: Vec<EditOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionOutcome {
    pub revision_id: String,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Approval {
    /// Approve without any human edit.
    #[serde(default)]
    pub accept_as_is: bool,
    /// Optional guard: fail with `StaleBase` unless this is the latest revision.
    #[serde(default)]
    pub revision: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewScene {
    pub image: String,
    #[serde(default)]
    pub objects: Vec<String>,
    #[serde(default)]
    pub proposal: Option<SceneGraph>,
}

struct Scene {
    record: SceneRecord,
    log: PathBuf,
}

impl Scene {
    fn append(&mut self, event: &Event) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(event).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.log)?;
        f.write_all(&line)?;
        f.sync_data()?;
        apply(&mut self.record, event.clone());
        Ok(())
    }
}

fn apply(record: &mut SceneRecord, event: Event) {
    match event {
        Event::Created { .. } => {}
        Event::Revised(r) => record.revisions.push(*r),
        Event::Status {
            status,
            approved_revision,
            ..
        } => {
            record.status = status;
            if approved_revision.is_some() {
                record.approved_revision = approved_revision;
            }
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub struct Store {
    root: PathBuf,
    scenes: RwLock<BTreeMap<String, Arc<Mutex<Scene>>>>,
    /// Serializes scene creation so duplicate checks and id allocation are atomic.
    create: Mutex<u64>,
}

const ID_WIDTH: usize = 6;

impl Store {
    /// Open (or create) a store, replaying every scene log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, ServiceError> {
        let root = root.into();
        fs::create_dir_all(root.join("scenes"))?;
        fs::create_dir_all(root.join("blobs"))?;
        let mut scenes = BTreeMap::new();
        let mut next = 1u64;
        let mut entries: Vec<PathBuf> = fs::read_dir(root.join("scenes"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        entries.sort();
        for path in entries {
            let record = replay(&path)?;
            if let Some(n) = record.scene_id.strip_prefix("scene-").and_then(|n| n.parse::<u64>().ok()) {
                next = next.max(n + 1);
            }
            scenes.insert(
                record.scene_id.clone(),
                Arc::new(Mutex::new(Scene { record, log: path })),
            );
        }
        Ok(Store {
            root,
            scenes: RwLock::new(scenes),
            create: Mutex::new(next),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn scene(&self, id: &str) -> Result<Arc<Mutex<Scene>>, ServiceError> {
        self.scenes
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownScene(id.to_string()))
    }

    fn all(&self) -> Vec<Arc<Mutex<Scene>>> {
        self.scenes.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect()
    }

    /// Store image bytes by content; returns `sha256:<hex>`.
    pub fn put_blob(&self, bytes: &[u8]) -> Result<String, ServiceError> {
        let reference = crate::io::content_ref(bytes);
        let path = self.root.join("blobs").join(reference.trim_start_matches("sha256:"));
        if !path.exists() {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(reference)
    }

    pub fn enqueue(&self, new: NewScene) -> Result<String, ServiceError> {
        if new.image.trim().is_empty() {
            return Err(ServiceError::Invalid("image reference is empty".into()));
        }
        if new.proposal.is_none() && new.objects.is_empty() {
            return Err(ServiceError::Invalid("need an object list or a proposal".into()));
        }
        let mut next = self.create.lock().unwrap_or_else(|e| e.into_inner());
        for s in self.all() {
            let s = s.lock().unwrap_or_else(|e| e.into_inner());
            if s.record.image == new.image && s.record.status == Status::Pending {
                return Err(ServiceError::DuplicateImage {
                    scene_id: s.record.scene_id.clone(),
                });
            }
        }
        let scene_id = format!("scene-{:0width$}", *next, width = ID_WIDTH);
        let objects = if new.objects.is_empty() {
            new.proposal
                .as_ref()
                .map(|g| g.object_labels().into_iter().map(str::to_string).collect())
                .unwrap_or_default()
        } else {
            new.objects
        };
        let mut scene = Scene {
            record: SceneRecord {
                scene_id: scene_id.clone(),
                image: new.image.clone(),
                objects: objects.clone(),
                status: Status::Pending,
                revisions: Vec::new(),
                approved_revision: None,
            },
            log: self.root.join("scenes").join(format!("{scene_id}.jsonl")),
        };
        scene.append(&Event::Created {
            scene_id: scene_id.clone(),
            image: new.image,
            objects,
            at: now_ms(),
        })?;
        if let Some(graph) = new.proposal {
            scene.append(&Event::Revised(Box::new(Revision {
                revision_id: "r0".into(),
                author: Author::Model,
                graph,
                at: now_ms(),
                ops: Vec::new(),
            })))?;
        }
        *next += 1;
        self.scenes
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(scene_id.clone(), Arc::new(Mutex::new(scene)));
        Ok(scene_id)
    }

    pub fn get(&self, id: &str) -> Result<SceneRecord, ServiceError> {
        let s = self.scene(id)?;
        let s = s.lock().unwrap_or_else(|e| e.into_inner());
        Ok(s.record.clone())
    }

    /// Apply `c` on top of the latest revision as a new human revision.
    pub fn apply_correction(&self, id: &str, c: &Correction) -> Result<CorrectionOutcome, ServiceError> {
        let s = self.scene(id)?;
        let mut s = s.lock().unwrap_or_else(|e| e.into_inner());
        let latest = s.record.latest().map(|r| r.revision_id.clone());
        if c.base_revision != latest {
            return Err(ServiceError::StaleBase { latest });
        }
        if c.ops.is_empty() {
            return Err(ServiceError::Invalid("correction has no operations".into()));
        }
        let base = s.record.latest().map_or_else(SceneGraph::empty, |r| r.graph.clone());
        let graph = base.apply_edits(&c.ops)?;
        let warnings = validate(&graph).warnings;
        let revision_id = format!("r{}", s.record.revisions.len());
        s.append(&Event::Revised(Box::new(Revision {
            revision_id: revision_id.clone(),
            author: Author::Human,
            graph,
            at: now_ms(),
            ops: c.ops.clone(),
        })))?;
        if s.record.status == Status::Pending {
            s.append(&Event::Status {
                status: Status::InReview,
                approved_revision: None,
                accept_as_is: false,
                at: now_ms(),
            })?;
        }
        Ok(CorrectionOutcome { revision_id, warnings })
    }

    /// Mark the latest revision approved. Needs a human revision or `accept_as_is`.
    pub fn approve(&self, id: &str, a: &Approval) -> Result<SceneRecord, ServiceError> {
        let s = self.scene(id)?;
        let mut s = s.lock().unwrap_or_else(|e| e.into_inner());
        let Some(latest) = s.record.latest().map(|r| r.revision_id.clone()) else {
            return Err(ServiceError::NotApprovable("scene has no revision".into()));
        };
        if let Some(want) = &a.revision {
            if *want != latest {
                return Err(ServiceError::StaleBase { latest: Some(latest) });
            }
        }
        let reviewed = s.record.revisions.iter().any(|r| r.author == Author::Human);
        if !reviewed && !a.accept_as_is {
            return Err(ServiceError::NotApprovable(
                "no human revision; pass accept_as_is to approve the proposal".into(),
            ));
        }
        if s.record.status == Status::Pending {
            s.append(&Event::Status {
                status: Status::InReview,
                approved_revision: None,
                accept_as_is: false,
                at: now_ms(),
            })?;
        }
        s.append(&Event::Status {
            status: Status::Approved,
            approved_revision: Some(latest),
            accept_as_is: a.accept_as_is,
            at: now_ms(),
        })?;
        Ok(s.record.clone())
    }

    /// Summaries in scene-id order, `per_page` at a time (page 0 first).
    pub fn queue(&self, status: Option<Status>, page: usize, per_page: usize) -> Vec<SceneSummary> {
        self.all()
            .into_iter()
            .map(|s| s.lock().unwrap_or_else(|e| e.into_inner()).record.summary())
            .filter(|s| status.is_none_or(|want| s.status == want))
            .skip(page.saturating_mul(per_page))
            .take(per_page)
            .collect()
    }

    /// Graph records for every approved scene, from its approved revision, in scene-id order.
    pub fn export(&self) -> Vec<QARecord> {
        let mut out = Vec::new();
        for s in self.all() {
            let s = s.lock().unwrap_or_else(|e| e.into_inner());
            let r = &s.record;
            let Some(rev) = r.approved_revision.as_deref().and_then(|id| r.revision(id)) else {
                continue;
            };
            let mut qa = gen_graph_qa(&rev.graph, &r.image);
            qa.id = format!("{}#{}", r.scene_id, rev.revision_id);
            qa.provenance = Provenance::Approved;
            out.push(qa);
        }
        out
    }
}

fn replay(path: &Path) -> Result<SceneRecord, ServiceError> {
    let corrupt = |reason: String| ServiceError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let mut record: Option<SceneRecord> = None;
    let lines = BufReader::new(File::open(path)?).lines();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = match serde_json::from_str(&line) {
            Ok(e) => e,
            // A torn final line from a crash mid-append is ignored.
            Err(e) if e.is_eof() => break,
            Err(e) => return Err(corrupt(format!("line {}: {e}", i + 1))),
        };
        match (&mut record, event) {
            (
                None,
                Event::Created {
                    scene_id,
                    image,
                    objects,
                    ..
                },
            ) => {
                record = Some(SceneRecord {
                    scene_id,
                    image,
                    objects,
                    status: Status::Pending,
                    revisions: Vec::new(),
                    approved_revision: None,
                })
            }
            (None, _) => return Err(corrupt("log does not start with a created event".into())),
            (Some(_), Event::Created { .. }) => return Err(corrupt(format!("line {}: second created event", i + 1))),
            (Some(r), e) => apply(r, e),
        }
    }
    record.ok_or_else(|| corrupt("empty log".into()))
}
