//! The six per-developer, per-sprint practice measures.
//!
//! | id  | value                                                         | no commits |
//! |-----|---------------------------------------------------------------|------------|
//! | RTA | test churn / application churn ("other" files ignored)         | missing    |
//! | UFE | distinct paths touched                                         | 0          |
//! | LMC | share of commits in the 12 h before the review meeting         | missing    |
//! | ALC | mean added + deleted lines per commit                          | missing    |
//! | UUS | distinct `#n` issue references in commit messages              | 0          |
//! | PRC | pull-request comments (review and conversation)                | 0          |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io;
use std::path::Path;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{
    slice_sprint_with, Classification, ProjectDataset, SliceOptions, SprintSlice, SprintWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasureId {
    #[serde(rename = "RTA")]
    Rta,
    #[serde(rename = "UFE")]
    Ufe,
    #[serde(rename = "LMC")]
    Lmc,
    #[serde(rename = "ALC")]
    Alc,
    #[serde(rename = "UUS")]
    Uus,
    #[serde(rename = "PRC")]
    Prc,
}

impl MeasureId {
    /// Canonical column order.
    pub const ALL: [MeasureId; 6] = [
        MeasureId::Rta,
        MeasureId::Ufe,
        MeasureId::Lmc,
        MeasureId::Alc,
        MeasureId::Uus,
        MeasureId::Prc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureId::Rta => "RTA",
            MeasureId::Ufe => "UFE",
            MeasureId::Lmc => "LMC",
            MeasureId::Alc => "ALC",
            MeasureId::Uus => "UUS",
            MeasureId::Prc => "PRC",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            MeasureId::Rta => "Ratio of line changes in test code to line changes in application code",
            MeasureId::Ufe => "Unique files edited",
            MeasureId::Lmc => "Share of last-minute commits before the sprint review",
            MeasureId::Alc => "Average line changes per commit",
            MeasureId::Uus => "Unique user stories referenced in commit messages",
            MeasureId::Prc => "Pull request comments",
        }
    }

    /// UFE, UUS and PRC are counts and never missing.
    pub fn is_count(self) -> bool {
        matches!(self, MeasureId::Ufe | MeasureId::Uus | MeasureId::Prc)
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Validation(format!("unknown measure {s:?}")))
    }
}

/// One measure for one developer in one sprint. `value` is `None` when missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub developer_id: String,
    pub team_id: String,
    pub sprint_id: u32,
    pub measure: MeasureId,
    pub value: Option<f64>,
}

impl MeasurementRecord {
    pub fn missing(&self) -> bool {
        self.value.is_none()
    }
}

pub const LAST_MINUTE_HOURS: i64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureOptions {
    pub slice: SliceOptions,
    pub last_minute: Duration,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            slice: SliceOptions::default(),
            last_minute: Duration::hours(LAST_MINUTE_HOURS),
        }
    }
}

/// Test churn over application churn for the commits in `slice`.
pub fn rta(slice: &SprintSlice<'_>) -> Option<f64> {
    if slice.commits.is_empty() {
        return None;
    }
    let (mut test, mut app) = (0u64, 0u64);
    for change in slice.commits.iter().flat_map(|c| &c.changes) {
        match change.classification {
            Classification::Test => test += change.churn(),
            Classification::Application => app += change.churn(),
            Classification::Other => {}
        }
    }
    (app > 0).then(|| test as f64 / app as f64)
}

pub fn ufe(slice: &SprintSlice<'_>) -> u64 {
    slice
        .commits
        .iter()
        .flat_map(|c| &c.changes)
        .map(|ch| ch.path.as_str())
        .collect::<BTreeSet<_>>()
        .len() as u64
}

/// Share of the slice's commits in `[review - 12h, review]`.
pub fn lmc(slice: &SprintSlice<'_>, window: &SprintWindow) -> Option<f64> {
    lmc_within(slice, window, Duration::hours(LAST_MINUTE_HOURS))
}

pub fn lmc_within(slice: &SprintSlice<'_>, window: &SprintWindow, span: Duration) -> Option<f64> {
    let in_window: Vec<_> = slice
        .commits
        .iter()
        .filter(|c| window.contains(c.timestamp))
        .collect();
    if in_window.is_empty() {
        return None;
    }
    let cutoff = window.review_meeting - span;
    let late = in_window
        .iter()
        .filter(|c| c.timestamp >= cutoff && c.timestamp <= window.review_meeting)
        .count();
    Some(late as f64 / in_window.len() as f64)
}

pub fn alc(slice: &SprintSlice<'_>) -> Option<f64> {
    if slice.commits.is_empty() {
        return None;
    }
    let total: u64 = slice.commits.iter().map(|c| c.churn()).sum();
    Some(total as f64 / slice.commits.len() as f64)
}

/// Issue numbers referenced as `#123` in a commit message.
///
/// A reference is `#` followed by digits, not preceded by a word character or
/// `/` (which excludes `owner/repo#12`) and not followed by a word character.
pub fn parse_story_refs(message: &str) -> BTreeSet<u64> {
    let bytes = message.as_bytes();
    let is_word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut refs = BTreeSet::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'#' {
            i += 1;
            continue;
        }
        let start = i + 1;
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let left_ok = i == 0 || !(is_word(bytes[i - 1]) || bytes[i - 1] == b'/');
        let right_ok = end == bytes.len() || !is_word(bytes[end]);
        if end > start && left_ok && right_ok {
            if let Ok(n) = message[start..end].parse() {
                refs.insert(n);
            }
        }
        i = end.max(start);
    }
    refs
}

pub fn uus(slice: &SprintSlice<'_>) -> u64 {
    slice
        .commits
        .iter()
        .flat_map(|c| parse_story_refs(&c.message))
        .collect::<BTreeSet<_>>()
        .len() as u64
}

pub fn prc(slice: &SprintSlice<'_>) -> u64 {
    slice
        .comments
        .iter()
        .filter(|c| slice.window.contains(c.timestamp))
        .count() as u64
}

/// All six measures for one developer's slice.
pub fn measure_slice(slice: &SprintSlice<'_>, options: &MeasureOptions) -> [(MeasureId, Option<f64>); 6] {
    [
        (MeasureId::Rta, rta(slice)),
        (MeasureId::Ufe, Some(ufe(slice) as f64)),
        (MeasureId::Lmc, lmc_within(slice, slice.window, options.last_minute)),
        (MeasureId::Alc, alc(slice)),
        (MeasureId::Uus, Some(uus(slice) as f64)),
        (MeasureId::Prc, Some(prc(slice) as f64)),
    ]
}

pub fn compute_all(dataset: &ProjectDataset) -> Result<Vec<MeasurementRecord>> {
    compute_all_with(dataset, &MeasureOptions::default())
}

/// One record per (developer, sprint window of the developer's team, measure),
/// ordered by team, sprint, developer id and measure.
pub fn compute_all_with(
    dataset: &ProjectDataset,
    options: &MeasureOptions,
) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::new();
    for window in dataset.sprint_windows() {
        let team = &window.team_id;
        let slice = slice_sprint_with(dataset, team, window.sprint_id, options.slice)?;
        for dev in dataset.team_members(team) {
            let own = slice.for_developer(&dev.id);
            for (measure, value) in measure_slice(&own, options) {
                records.push(MeasurementRecord {
                    developer_id: dev.id.clone(),
                    team_id: team.clone(),
                    sprint_id: window.sprint_id,
                    measure,
                    value,
                });
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    team: String,
    developer: String,
    sprint: u32,
    measure: String,
    value: Option<f64>,
    missing: bool,
}

pub fn write_measurements(path: &Path, records: &[MeasurementRecord]) -> Result<()> {
    let file = File::create(path)?;
    write_measurements_to(file, records)
}

pub fn write_measurements_to<W: io::Write>(writer: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(Row {
            team: r.team_id.clone(),
            developer: r.developer_id.clone(),
            sprint: r.sprint_id,
            measure: r.measure.as_str().to_string(),
            value: r.value,
            missing: r.missing(),
        })
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measurements(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_measurements_from(file, &path.display().to_string())
}

/// Parse a measurement table, validating value ranges and key uniqueness.
pub fn read_measurements_from<R: io::Read>(reader: R, name: &str) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(name, line, e))?;
        let bad = |msg: String| Error::parse(name, line, msg);
        let measure: MeasureId = row.measure.parse().map_err(|e: Error| bad(e.to_string()))?;
        if row.missing != row.value.is_none() {
            return Err(bad("`missing` must be true exactly when `value` is blank".into()));
        }
        if let Some(v) = row.value {
            if !v.is_finite() || v < 0.0 {
                return Err(bad(format!("{measure} value {v} must be finite and non-negative")));
            }
            if measure == MeasureId::Lmc && v > 1.0 {
                return Err(bad(format!("LMC value {v} is outside [0, 1]")));
            }
            if measure.is_count() && v.fract() != 0.0 {
                return Err(bad(format!("{measure} value {v} must be an integer")));
            }
        }
        let key = (row.developer.clone(), row.sprint, measure);
        if seen.insert(key, line).is_some() {
            return Err(bad(format!(
                "duplicate record for developer {:?} sprint {} measure {measure}",
                row.developer, row.sprint
            )));
        }
        out.push(MeasurementRecord {
            developer_id: row.developer,
            team_id: row.team,
            sprint_id: row.sprint,
            measure,
            value: row.value,
        });
    }
    Ok(out)
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}
