//! Task store behind the annotation service.
//!
//! A task moves `unlabeled -> labeled -> in_review(k) -> approved`, or to
//! `filtered` when the labeler drops the frame. A reject sends the task
//! back to `labeled` and clears its approvals. Every mutation is persisted
//! to `tasks.json` in the store directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotationRecord, FilterReason, Review, ReviewStatus};
use crate::domain::AbnormalityLabel;
use crate::error::{Error, Result};

pub const TASKS_FILE: &str = "tasks.json";
pub const FRAMES_FILE: &str = "frames.jsonl";
pub const REPAIRS_FILE: &str = "repairs.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TaskState {
    Unlabeled,
    Labeled,
    InReview { round: u32 },
    Approved,
    Filtered,
}

impl TaskState {
    pub fn name(&self) -> &'static str {
        match self {
            TaskState::Unlabeled => "unlabeled",
            TaskState::Labeled => "labeled",
            TaskState::InReview { .. } => "in_review",
            TaskState::Approved => "approved",
            TaskState::Filtered => "filtered",
        }
    }

    fn reviewable(&self) -> bool {
        matches!(self, TaskState::Labeled | TaskState::InReview { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Approve,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub reviewer: String,
    pub expires_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub frame_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(flatten)]
    pub state: TaskState,
    pub labels: Vec<AbnormalityLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_reason: Option<FilterReason>,
    /// Review submissions so far, approvals and rejections alike.
    pub round: u32,
    pub approvals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lease: Option<Lease>,
}

impl Task {
    fn new(task_id: String, frame_id: String, image: Option<String>) -> Self {
        Self {
            task_id,
            frame_id,
            image,
            state: TaskState::Unlabeled,
            labels: Vec::new(),
            filter_reason: None,
            round: 0,
            approvals: Vec::new(),
            lease: None,
        }
    }

    fn leased_to_other(&self, reviewer: &str, now_ms: u64) -> bool {
        self.lease
            .as_ref()
            .is_some_and(|l| l.reviewer != reviewer && l.expires_at_ms > now_ms)
    }

    pub fn record(&self) -> AnnotationRecord {
        AnnotationRecord {
            frame_id: self.frame_id.clone(),
            labels: self.labels.clone(),
            filter_reason: self.filter_reason,
            review: Review {
                round: self.round.max(1),
                reviewer_ids: self.approvals.clone(),
                status: match self.state {
                    TaskState::Approved => ReviewStatus::Approved,
                    TaskState::Filtered => ReviewStatus::Rejected,
                    _ => ReviewStatus::Pending,
                },
            },
        }
    }
}

/// Failures the service maps to 404 / 409 / 422.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("unknown {what} `{id}`")]
    NotFound { what: &'static str, id: String },
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("persisting task store: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairVerdict {
    pub reviewer: String,
    pub verdict: Verdict,
}

/// An original/repaired pair awaiting side-by-side review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairItem {
    pub repair_id: String,
    pub original: String,
    pub repaired: String,
    #[serde(default)]
    pub verdicts: Vec<RepairVerdict>,
}

#[derive(Debug, Deserialize)]
struct FrameSeed {
    frame_id: String,
    #[serde(default)]
    image: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Persisted {
    tasks: Vec<Task>,
    #[serde(default)]
    repairs: Vec<RepairItem>,
}

pub struct TaskStore {
    dir: Option<PathBuf>,
    tasks: Vec<Task>,
    index: BTreeMap<String, usize>,
    repairs: Vec<RepairItem>,
    required_approvals: usize,
    lease_ms: u64,
}

impl TaskStore {
    pub const DEFAULT_LEASE_MS: u64 = 10 * 60 * 1000;

    /// In-memory store seeded with one task per frame id.
    pub fn in_memory(frames: &[(&str, Option<&str>)], required_approvals: usize) -> Self {
        let tasks = frames
            .iter()
            .enumerate()
            .map(|(i, (f, img))| {
                Task::new(
                    format!("t{:05}", i + 1),
                    (*f).to_owned(),
                    img.map(ToOwned::to_owned),
                )
            })
            .collect();
        Self::from_parts(None, tasks, Vec::new(), required_approvals)
    }

    /// Opens `dir`, resuming from `tasks.json` or seeding from
    /// `frames.jsonl`. `repairs.json` is read if present.
    pub fn open(dir: &Path, required_approvals: usize) -> Result<Self> {
        if required_approvals == 0 {
            return Err(Error::Config(
                "required_approvals must be at least 1".into(),
            ));
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tasks_path = dir.join(TASKS_FILE);
        let mut persisted: Persisted = if tasks_path.exists() {
            let text =
                std::fs::read_to_string(&tasks_path).map_err(|e| Error::io(&tasks_path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::json(tasks_path.display().to_string(), e))?
        } else {
            let frames_path = dir.join(FRAMES_FILE);
            let mut tasks = Vec::new();
            if frames_path.exists() {
                let text = std::fs::read_to_string(&frames_path)
                    .map_err(|e| Error::io(&frames_path, e))?;
                for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
                    let seed: FrameSeed = serde_json::from_str(line).map_err(|e| {
                        Error::json(format!("{} line {}", frames_path.display(), i + 1), e)
                    })?;
                    tasks.push(Task::new(
                        format!("t{:05}", i + 1),
                        seed.frame_id,
                        seed.image,
                    ));
                }
            }
            Persisted {
                tasks,
                repairs: Vec::new(),
            }
        };
        let repairs_path = dir.join(REPAIRS_FILE);
        if persisted.repairs.is_empty() && repairs_path.exists() {
            let text =
                std::fs::read_to_string(&repairs_path).map_err(|e| Error::io(&repairs_path, e))?;
            persisted.repairs = serde_json::from_str(&text)
                .map_err(|e| Error::json(repairs_path.display().to_string(), e))?;
        }
        let store = Self::from_parts(
            Some(dir.to_owned()),
            persisted.tasks,
            persisted.repairs,
            required_approvals,
        );
        store.persist().map_err(|e| Error::Data(e.to_string()))?;
        Ok(store)
    }

    fn from_parts(
        dir: Option<PathBuf>,
        tasks: Vec<Task>,
        repairs: Vec<RepairItem>,
        required_approvals: usize,
    ) -> Self {
        let index = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.task_id.clone(), i))
            .collect();
        Self {
            dir,
            tasks,
            index,
            repairs,
            required_approvals: required_approvals.max(1),
            lease_ms: Self::DEFAULT_LEASE_MS,
        }
    }

    pub fn with_lease_ms(mut self, ms: u64) -> Self {
        self.lease_ms = ms;
        self
    }

    pub fn required_approvals(&self) -> usize {
        self.required_approvals
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: &str) -> Result<&Task, TaskError> {
        self.index
            .get(id)
            .map(|&i| &self.tasks[i])
            .ok_or_else(|| TaskError::NotFound {
                what: "task",
                id: id.to_owned(),
            })
    }

    fn task_mut(&mut self, id: &str) -> Result<&mut Task, TaskError> {
        let i = *self.index.get(id).ok_or_else(|| TaskError::NotFound {
            what: "task",
            id: id.to_owned(),
        })?;
        Ok(&mut self.tasks[i])
    }

    fn persist(&self) -> Result<(), TaskError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let body = Persisted {
            tasks: self.tasks.clone(),
            repairs: self.repairs.clone(),
        };
        let text =
            serde_json::to_string_pretty(&body).map_err(|e| TaskError::Storage(e.to_string()))?;
        let tmp = dir.join(format!("{TASKS_FILE}.tmp"));
        std::fs::write(&tmp, text)
            .and_then(|()| std::fs::rename(&tmp, dir.join(TASKS_FILE)))
            .map_err(|e| TaskError::Storage(e.to_string()))
    }

    /// Leases the oldest task the reviewer can act on: unlabeled tasks to
    /// label, or reviewable tasks they have not yet approved.
    pub fn next(&mut self, reviewer: &str, now_ms: u64) -> Result<Option<Task>, TaskError> {
        if reviewer.trim().is_empty() {
            return Err(TaskError::Invalid("reviewer id must be non-empty".into()));
        }
        let lease_ms = self.lease_ms;
        let pick = self.tasks.iter().position(|t| {
            let actionable = match t.state {
                TaskState::Unlabeled => true,
                s if s.reviewable() => !t.approvals.iter().any(|a| a == reviewer),
                _ => false,
            };
            actionable && !t.leased_to_other(reviewer, now_ms)
        });
        let Some(i) = pick else { return Ok(None) };
        self.tasks[i].lease = Some(Lease {
            reviewer: reviewer.to_owned(),
            expires_at_ms: now_ms + lease_ms,
        });
        let task = self.tasks[i].clone();
        self.persist()?;
        Ok(Some(task))
    }

    /// Labels (or relabels) a task. A filter reason excludes labels.
    pub fn label(
        &mut self,
        id: &str,
        labels: Vec<AbnormalityLabel>,
        filter_reason: Option<FilterReason>,
    ) -> Result<Task, TaskError> {
        if filter_reason.is_some() && !labels.is_empty() {
            return Err(TaskError::Invalid(
                "a filtered frame cannot carry labels".into(),
            ));
        }
        let task = self.task_mut(id)?;
        if !matches!(task.state, TaskState::Unlabeled | TaskState::Labeled) {
            return Err(TaskError::Conflict(format!(
                "cannot label task `{id}` in state {}",
                task.state.name()
            )));
        }
        let mut labels = labels;
        labels.sort();
        task.labels = labels;
        task.filter_reason = filter_reason;
        task.approvals.clear();
        task.lease = None;
        task.state = if filter_reason.is_some() {
            TaskState::Filtered
        } else {
            TaskState::Labeled
        };
        let out = task.clone();
        self.persist()?;
        Ok(out)
    }

    pub fn review(
        &mut self,
        id: &str,
        reviewer: &str,
        verdict: Verdict,
    ) -> Result<Task, TaskError> {
        if reviewer.trim().is_empty() {
            return Err(TaskError::Invalid("reviewer id must be non-empty".into()));
        }
        let required = self.required_approvals;
        let task = self.task_mut(id)?;
        if !task.state.reviewable() {
            return Err(TaskError::Conflict(format!(
                "cannot review task `{id}` in state {}",
                task.state.name()
            )));
        }
        if task.approvals.iter().any(|a| a == reviewer) {
            return Err(TaskError::Conflict(format!(
                "reviewer `{reviewer}` already approved task `{id}`"
            )));
        }
        task.round += 1;
        task.lease = None;
        match verdict {
            Verdict::Approve => {
                task.approvals.push(reviewer.to_owned());
                task.state = if task.approvals.len() >= required {
                    TaskState::Approved
                } else {
                    TaskState::InReview { round: task.round }
                };
            }
            Verdict::Reject => {
                task.approvals.clear();
                task.state = TaskState::Labeled;
            }
        }
        let out = task.clone();
        self.persist()?;
        Ok(out)
    }

    /// Approved tasks as annotation records, in task order.
    pub fn export(&self) -> Vec<AnnotationRecord> {
        self.tasks
            .iter()
            .filter(|t| t.state == TaskState::Approved)
            .map(Task::record)
            .collect()
    }

    pub fn export_jsonl(&self) -> String {
        self.export()
            .iter()
            .map(|r| serde_json::to_string(r).expect("annotation records serialize") + "\n")
            .collect()
    }

    pub fn repair(&self, id: &str) -> Result<&RepairItem, TaskError> {
        self.repairs
            .iter()
            .find(|r| r.repair_id == id)
            .ok_or_else(|| TaskError::NotFound {
                what: "repair",
                id: id.to_owned(),
            })
    }

    pub fn repair_verdict(
        &mut self,
        id: &str,
        reviewer: &str,
        verdict: Verdict,
    ) -> Result<RepairItem, TaskError> {
        if reviewer.trim().is_empty() {
            return Err(TaskError::Invalid("reviewer id must be non-empty".into()));
        }
        let item = self
            .repairs
            .iter_mut()
            .find(|r| r.repair_id == id)
            .ok_or_else(|| TaskError::NotFound {
                what: "repair",
                id: id.to_owned(),
            })?;
        if item.verdicts.iter().any(|v| v.reviewer == reviewer) {
            return Err(TaskError::Conflict(format!(
                "reviewer `{reviewer}` already judged repair `{id}`"
            )));
        }
        item.verdicts.push(RepairVerdict {
            reviewer: reviewer.to_owned(),
            verdict,
        });
        let out = item.clone();
        self.persist()?;
        Ok(out)
    }
}
