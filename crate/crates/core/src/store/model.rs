use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::classify::{classify_path, Classification};
use crate::error::{Error, Result};

pub type Timestamp = DateTime<Utc>;

/// Highest sprint number in the course layout the toolkit targets.
pub const MAX_SPRINT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    ProductOwner,
    ScrumMaster,
    Developer,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::ProductOwner, Role::ScrumMaster, Role::Developer];

    pub fn short(self) -> &'static str {
        match self {
            Role::ProductOwner => "PO",
            Role::ScrumMaster => "SM",
            Role::Developer => "Dev",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Role::ProductOwner => "ProductOwner",
            Role::ScrumMaster => "ScrumMaster",
            Role::Developer => "Developer",
        };
        f.write_str(name)
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "po" | "productowner" => Ok(Role::ProductOwner),
            "sm" | "scrummaster" => Ok(Role::ScrumMaster),
            "dev" | "developer" => Ok(Role::Developer),
            _ => Err(Error::Validation(format!("unknown Scrum role {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Developer {
    pub id: String,
    pub team_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SprintWindow {
    pub team_id: String,
    pub sprint_id: u32,
    pub start: Timestamp,
    pub review_meeting: Timestamp,
}

impl SprintWindow {
    /// Closed interval `[start, review_meeting]`.
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.review_meeting
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FileChangeRecord")]
pub struct FileChange {
    pub path: String,
    pub lines_added: u64,
    pub lines_deleted: u64,
    #[serde(skip_serializing)]
    pub classification: Classification,
}

#[derive(Deserialize)]
struct FileChangeRecord {
    path: String,
    lines_added: u64,
    lines_deleted: u64,
}

impl TryFrom<FileChangeRecord> for FileChange {
    type Error = Error;

    fn try_from(r: FileChangeRecord) -> Result<Self> {
        FileChange::new(r.path, r.lines_added, r.lines_deleted)
    }
}

impl FileChange {
    pub fn new(path: impl Into<String>, lines_added: u64, lines_deleted: u64) -> Result<Self> {
        let path = path.into();
        let classification = classify_path(&path)?;
        Ok(FileChange {
            path,
            lines_added,
            lines_deleted,
            classification,
        })
    }

    /// Added plus deleted lines; a modified line counts once in each.
    pub fn churn(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub sha: String,
    pub author_id: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub message: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_merge: bool,
    #[serde(default)]
    pub changes: Vec<FileChange>,
}

impl Commit {
    pub fn churn(&self) -> u64 {
        self.changes.iter().map(FileChange::churn).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusChange {
    pub status: IssueStatus,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    #[serde(default)]
    pub labels: BTreeSet<String>,
    #[serde(default)]
    pub assignees: BTreeSet<String>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub status_history: Vec<StatusChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CommentKind {
    /// Inline comment attached to a diff hunk.
    Review,
    #[default]
    Conversation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PRCommentRecord {
    pub id: u64,
    pub pr_number: u64,
    pub author_id: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub kind: CommentKind,
    #[serde(default)]
    pub body: String,
}

/// Unvalidated collections, the input to [`ProjectDataset::new`].
#[derive(Debug, Clone, Default)]
pub struct DatasetParts {
    pub developers: Vec<Developer>,
    pub sprint_windows: Vec<SprintWindow>,
    pub commits: Vec<Commit>,
    pub issues: Vec<IssueRecord>,
    pub pr_comments: Vec<PRCommentRecord>,
}

/// Validated, immutable store of development artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectDataset {
    developers: Vec<Developer>,
    teams: Vec<String>,
    sprint_windows: Vec<SprintWindow>,
    commits: Vec<Commit>,
    issues: Vec<IssueRecord>,
    pr_comments: Vec<PRCommentRecord>,
    developer_index: BTreeMap<String, usize>,
}

impl ProjectDataset {
    pub fn new(parts: DatasetParts) -> Result<Self> {
        let DatasetParts {
            mut developers,
            mut sprint_windows,
            mut commits,
            mut issues,
            mut pr_comments,
        } = parts;

        developers.sort_by(|a, b| a.id.cmp(&b.id));
        for dev in &developers {
            if dev.id.is_empty() || dev.team_id.is_empty() {
                return Err(Error::Validation(
                    "developer id and team id must be non-empty".into(),
                ));
            }
        }
        if let Some(w) = developers.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Validation(format!(
                "duplicate developer id {:?}",
                w[0].id
            )));
        }
        let developer_index: BTreeMap<String, usize> = developers
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        let teams: Vec<String> = developers
            .iter()
            .map(|d| d.team_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        validate_windows(&mut sprint_windows)?;

        commits.sort_by(|a, b| (a.timestamp, &a.sha).cmp(&(b.timestamp, &b.sha)));
        let mut shas = BTreeSet::new();
        for c in &commits {
            if !shas.insert(c.sha.as_str()) {
                return Err(Error::Validation(format!("duplicate commit sha {}", c.sha)));
            }
            if !developer_index.contains_key(&c.author_id) {
                return Err(Error::Referential(format!(
                    "commit {} is authored by unknown developer {:?}",
                    c.sha, c.author_id
                )));
            }
        }

        for issue in &mut issues {
            if issue.number == 0 {
                return Err(Error::Validation("issue numbers must be positive".into()));
            }
            if let Some(a) = issue
                .assignees
                .iter()
                .find(|a| !developer_index.contains_key(*a))
            {
                return Err(Error::Referential(format!(
                    "issue #{} is assigned to unknown developer {a:?}",
                    issue.number
                )));
            }
            if issue
                .status_history
                .windows(2)
                .any(|w| w[0].timestamp > w[1].timestamp)
            {
                return Err(Error::Validation(format!(
                    "issue #{} has an unordered status history",
                    issue.number
                )));
            }
        }
        issues.sort_by(|a, b| {
            let ta = a.status_history.first().map(|s| s.timestamp);
            let tb = b.status_history.first().map(|s| s.timestamp);
            (ta, a.number).cmp(&(tb, b.number))
        });
        let mut numbers = BTreeSet::new();
        for issue in &issues {
            if !numbers.insert(issue.number) {
                return Err(Error::Validation(format!(
                    "duplicate issue number #{}",
                    issue.number
                )));
            }
        }

        for c in &pr_comments {
            if !developer_index.contains_key(&c.author_id) {
                return Err(Error::Referential(format!(
                    "comment {} on PR #{} is authored by unknown developer {:?}",
                    c.id, c.pr_number, c.author_id
                )));
            }
        }
        pr_comments.sort_by(|a, b| (a.timestamp, a.id).cmp(&(b.timestamp, b.id)));
        if let Some(w) = pr_comments
            .windows(2)
            .find(|w| w[0].id == w[1].id && w[0].timestamp == w[1].timestamp)
        {
            return Err(Error::Validation(format!("duplicate comment id {}", w[0].id)));
        }

        Ok(ProjectDataset {
            developers,
            teams,
            sprint_windows,
            commits,
            issues,
            pr_comments,
            developer_index,
        })
    }

    pub fn into_parts(self) -> DatasetParts {
        DatasetParts {
            developers: self.developers,
            sprint_windows: self.sprint_windows,
            commits: self.commits,
            issues: self.issues,
            pr_comments: self.pr_comments,
        }
    }

    pub fn developers(&self) -> &[Developer] {
        &self.developers
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn sprint_windows(&self) -> &[SprintWindow] {
        &self.sprint_windows
    }

    pub fn commits(&self) -> &[Commit] {
        &self.commits
    }

    pub fn issues(&self) -> &[IssueRecord] {
        &self.issues
    }

    pub fn pr_comments(&self) -> &[PRCommentRecord] {
        &self.pr_comments
    }

    pub fn developer(&self, id: &str) -> Option<&Developer> {
        self.developer_index.get(id).map(|&i| &self.developers[i])
    }

    pub fn team_members<'a>(&'a self, team_id: &'a str) -> impl Iterator<Item = &'a Developer> {
        self.developers.iter().filter(move |d| d.team_id == team_id)
    }

    pub fn window(&self, team_id: &str, sprint_id: u32) -> Option<&SprintWindow> {
        self.sprint_windows
            .iter()
            .find(|w| w.team_id == team_id && w.sprint_id == sprint_id)
    }

    pub fn windows_for_team<'a>(
        &'a self,
        team_id: &'a str,
    ) -> impl Iterator<Item = &'a SprintWindow> {
        self.sprint_windows
            .iter()
            .filter(move |w| w.team_id == team_id)
    }

    /// Replace the sprint windows, e.g. from a separate window config file.
    pub fn with_windows(self, windows: Vec<SprintWindow>) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.sprint_windows = windows;
        ProjectDataset::new(parts)
    }

    /// Re-run path classification under custom directory rules.
    pub fn reclassify(mut self, rules: &super::classify::PathRules) -> Result<Self> {
        for commit in &mut self.commits {
            for change in &mut commit.changes {
                change.classification = rules.classify(&change.path)?;
            }
        }
        Ok(self)
    }
}

fn validate_windows(windows: &mut [SprintWindow]) -> Result<()> {
    windows.sort_by(|a, b| (&a.team_id, a.sprint_id).cmp(&(&b.team_id, b.sprint_id)));
    for w in windows.iter() {
        if !(1..=MAX_SPRINT).contains(&w.sprint_id) {
            return Err(Error::Validation(format!(
                "sprint id {} of team {:?} is outside 1..={MAX_SPRINT}",
                w.sprint_id, w.team_id
            )));
        }
        if w.start >= w.review_meeting {
            return Err(Error::Validation(format!(
                "sprint {} of team {:?} starts at or after its review meeting",
                w.sprint_id, w.team_id
            )));
        }
    }
    for pair in windows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.team_id != b.team_id {
            continue;
        }
        if a.sprint_id == b.sprint_id {
            return Err(Error::Validation(format!(
                "duplicate window for team {:?} sprint {}",
                a.team_id, a.sprint_id
            )));
        }
        if b.start <= a.review_meeting {
            return Err(Error::Validation(format!(
                "sprint windows {} and {} of team {:?} overlap or are out of order",
                a.sprint_id, b.sprint_id, a.team_id
            )));
        }
    }
    Ok(())
}
