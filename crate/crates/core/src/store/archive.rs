//! Newline-delimited JSON archives, one file per entity.
//!
//! Layout of an archive directory:
//!
//! | file                   | record                                  | required |
//! |------------------------|-----------------------------------------|----------|
//! | `developers.jsonl`     | [`Developer`](super::Developer)         | yes      |
//! | `commits.jsonl`        | [`Commit`](super::Commit), changes inline | yes    |
//! | `issues.jsonl`         | [`IssueRecord`](super::IssueRecord)     | no       |
//! | `pr_comments.jsonl`    | [`PRCommentRecord`](super::PRCommentRecord) | no   |
//! | `sprint_windows.jsonl` | [`SprintWindow`]                        | no       |
//!
//! Timestamps are RFC 3339 with an explicit offset and are normalized to UTC
//! on load.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::model::{DatasetParts, Developer, ProjectDataset, SprintWindow};
use crate::error::{Error, Result};

pub const DEVELOPERS_FILE: &str = "developers.jsonl";
pub const COMMITS_FILE: &str = "commits.jsonl";
pub const ISSUES_FILE: &str = "issues.jsonl";
pub const PR_COMMENTS_FILE: &str = "pr_comments.jsonl";
pub const SPRINT_WINDOWS_FILE: &str = "sprint_windows.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivePaths {
    pub developers: PathBuf,
    pub commits: PathBuf,
    pub issues: Option<PathBuf>,
    pub pr_comments: Option<PathBuf>,
    pub sprint_windows: Option<PathBuf>,
}

impl ArchivePaths {
    /// Standard file names inside `dir`; optional files are picked up only if present.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let optional = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        ArchivePaths {
            developers: dir.join(DEVELOPERS_FILE),
            commits: dir.join(COMMITS_FILE),
            issues: optional(ISSUES_FILE),
            pr_comments: optional(PR_COMMENTS_FILE),
            sprint_windows: optional(SPRINT_WINDOWS_FILE),
        }
    }
}

pub fn load_archive(paths: &ArchivePaths) -> Result<ProjectDataset> {
    let parts = DatasetParts {
        developers: read_jsonl(&paths.developers)?,
        commits: read_jsonl(&paths.commits)?,
        issues: read_optional(paths.issues.as_deref())?,
        pr_comments: read_optional(paths.pr_comments.as_deref())?,
        sprint_windows: read_optional(paths.sprint_windows.as_deref())?,
    };
    ProjectDataset::new(parts)
}

/// Load an archive directory, optionally replacing its windows with a window config file.
pub fn load_archive_dir(dir: impl AsRef<Path>, windows: Option<&Path>) -> Result<ProjectDataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut paths = ArchivePaths::in_dir(dir);
    if windows.is_some() {
        paths.sprint_windows = None;
    }
    let dataset = load_archive(&paths)?;
    match windows {
        Some(p) => dataset.with_windows(load_windows(p)?),
        None => Ok(dataset),
    }
}

/// Window config: a JSON array of windows, or one window object per line.
pub fn load_windows(path: &Path) -> Result<Vec<SprintWindow>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| Error::parse(display(path), e.line(), e))
    } else {
        parse_jsonl(&text, &display(path))
    }
}

/// Developer roster in the `developers.jsonl` format.
pub fn load_roster(path: &Path) -> Result<Vec<Developer>> {
    read_jsonl(path)
}

pub fn write_windows(path: &Path, windows: &[SprintWindow]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(windows)
        .map_err(|e| Error::Validation(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Write `dataset` to `dir` in the layout [`load_archive`] reads.
pub fn write_archive(dataset: &ProjectDataset, dir: impl AsRef<Path>) -> Result<ArchivePaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(DEVELOPERS_FILE), dataset.developers())?;
    write_jsonl(&dir.join(COMMITS_FILE), dataset.commits())?;
    write_jsonl(&dir.join(ISSUES_FILE), dataset.issues())?;
    write_jsonl(&dir.join(PR_COMMENTS_FILE), dataset.pr_comments())?;
    write_jsonl(&dir.join(SPRINT_WINDOWS_FILE), dataset.sprint_windows())?;
    Ok(ArchivePaths::in_dir(dir))
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Validation(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_optional<T: DeserializeOwned>(path: Option<&Path>) -> Result<Vec<T>> {
    path.map_or_else(|| Ok(Vec::new()), read_jsonl)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    parse_jsonl(&text, &display(path))
}

fn parse_jsonl<T: DeserializeOwned>(text: &str, name: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(name, i + 1, e)))
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}
