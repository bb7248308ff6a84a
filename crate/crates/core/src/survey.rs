//! Likert survey responses to the nine claims and their descriptive statistics.
//!
//! Ratings use the coding 1 = strongly agree ... 5 = strongly disagree.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{Role, MAX_SPRINT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
    Q9,
}

impl QuestionId {
    pub const ALL: [QuestionId; 9] = [
        QuestionId::Q1,
        QuestionId::Q2,
        QuestionId::Q3,
        QuestionId::Q4,
        QuestionId::Q5,
        QuestionId::Q6,
        QuestionId::Q7,
        QuestionId::Q8,
        QuestionId::Q9,
    ];

    /// Claims about practices, as opposed to the value claim Q9.
    pub const PRACTICES: [QuestionId; 8] = [
        QuestionId::Q1,
        QuestionId::Q2,
        QuestionId::Q3,
        QuestionId::Q4,
        QuestionId::Q5,
        QuestionId::Q6,
        QuestionId::Q7,
        QuestionId::Q8,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<QuestionId> {
        QuestionId::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn label(self) -> &'static str {
        ["Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7", "Q8", "Q9"][self as usize]
    }

    pub fn claim(self) -> &'static str {
        match self {
            QuestionId::Q1 => "I wrote code using a test-driven approach",
            QuestionId::Q2 => "I practiced collective code ownership",
            QuestionId::Q3 => "The user stories of the sprint were too large",
            QuestionId::Q4 => "There were duplicates of user stories",
            QuestionId::Q5 => "I started implementing only shortly before the deadline",
            QuestionId::Q6 => "We followed the \"check in early, check in often\" principle",
            QuestionId::Q7 => "I worked on too many user stories simultaneously",
            QuestionId::Q8 => "We conducted useful code reviews",
            QuestionId::Q9 => "Our team has successfully implemented the agile values",
        }
    }
}

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for QuestionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        t.strip_prefix(['Q', 'q'])
            .and_then(|n| n.parse().ok())
            .and_then(QuestionId::from_number)
            .ok_or_else(|| Error::Validation(format!("unknown question {s:?}")))
    }
}

/// One rating by one respondent for one question in one sprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    pub developer_id: String,
    pub team_id: String,
    pub role: Role,
    pub sprint_id: u32,
    pub question: QuestionId,
    /// 1..=5, `None` when the respondent skipped the question.
    pub rating: Option<u8>,
}

pub const LIKERT_LABELS: [&str; 5] = [
    "strongly agree",
    "agree",
    "neutral",
    "disagree",
    "strongly disagree",
];

/// Agreement label to rating: strongly agree = 1 ... strongly disagree = 5.
pub fn encode_likert(label: &str) -> Result<u8> {
    let norm = label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase();
    LIKERT_LABELS
        .iter()
        .position(|l| *l == norm)
        .map(|i| i as u8 + 1)
        .ok_or_else(|| Error::Validation(format!("unknown agreement label {label:?}")))
}

pub fn decode_likert(rating: u8) -> Option<&'static str> {
    LIKERT_LABELS.get(usize::from(rating).checked_sub(1)?).copied()
}

const BASE_COLUMNS: [&str; 4] = ["team", "developer", "role", "sprint"];

pub fn load_survey(path: &Path) -> Result<Vec<LikertResponse>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    load_survey_from(file, &path.display().to_string())
}

/// Parse the survey table: `team,developer,role,sprint,q1..q9`, one row per
/// respondent and sprint. Cells hold 1..5, an agreement label, or nothing.
pub fn load_survey_from<R: io::Read>(reader: R, name: &str) -> Result<Vec<LikertResponse>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(name, 1, e))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let col = |want: &str| {
        headers
            .iter()
            .position(|h| h == want)
            .ok_or_else(|| Error::parse(name, 1, format!("missing column {want:?}")))
    };
    let base: Vec<usize> = BASE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let questions: Vec<usize> = QuestionId::ALL
        .iter()
        .map(|q| col(&q.label().to_ascii_lowercase()))
        .collect::<Result<_>>()?;

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(name, line, e))?;
        let cell = |c: usize| record.get(c).unwrap_or("");
        let invalid = |msg: String| Error::Validation(format!("{name}:{line}: {msg}"));
        let (team, developer) = (cell(base[0]), cell(base[1]));
        if team.is_empty() || developer.is_empty() {
            return Err(Error::parse(name, line, "team and developer must be non-empty"));
        }
        let role: Role = cell(base[2])
            .parse()
            .map_err(|e: Error| Error::parse(name, line, e))?;
        let sprint: u32 = cell(base[3])
            .parse()
            .map_err(|_| Error::parse(name, line, format!("bad sprint {:?}", cell(base[3]))))?;
        if !(1..=MAX_SPRINT).contains(&sprint) {
            return Err(invalid(format!("sprint {sprint} is outside 1..={MAX_SPRINT}")));
        }
        if !seen.insert((developer.to_string(), sprint)) {
            return Err(invalid(format!(
                "duplicate response for developer {developer:?} sprint {sprint}"
            )));
        }
        for (q, &c) in QuestionId::ALL.iter().zip(&questions) {
            let raw = cell(c);
            let rating = if raw.is_empty() {
                None
            } else if let Ok(n) = raw.parse::<i64>() {
                if !(1..=5).contains(&n) {
                    return Err(invalid(format!("{q} rating {n} is outside 1..5")));
                }
                Some(n as u8)
            } else {
                Some(encode_likert(raw).map_err(|e| invalid(format!("{q}: {e}")))?)
            };
            out.push(LikertResponse {
                developer_id: developer.to_string(),
                team_id: team.to_string(),
                role,
                sprint_id: sprint,
                question: *q,
                rating,
            });
        }
    }
    Ok(out)
}

pub fn write_survey(path: &Path, responses: &[LikertResponse]) -> Result<()> {
    write_survey_to(File::create(path)?, responses)
}

/// Write responses back as one row per (developer, sprint), sorted by team,
/// developer and sprint.
pub fn write_survey_to<W: io::Write>(writer: W, responses: &[LikertResponse]) -> Result<()> {
    use std::collections::BTreeMap;
    type Key<'a> = (&'a str, &'a str, u32);
    let mut rows: BTreeMap<Key<'_>, (Role, [Option<u8>; 9])> = BTreeMap::new();
    for r in responses {
        let entry = rows
            .entry((&r.team_id, &r.developer_id, r.sprint_id))
            .or_insert((r.role, [None; 9]));
        entry.1[r.question as usize] = r.rating;
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(QuestionId::ALL.iter().map(|q| q.label().to_ascii_lowercase()));
    w.write_record(&header).map_err(csv_io)?;
    for ((team, dev, sprint), (role, ratings)) in rows {
        let mut rec = vec![team.to_string(), dev.to_string(), role.short().to_string(), sprint.to_string()];
        rec.extend(ratings.iter().map(|r| r.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Ratings (present or missing) for one question, in input order.
pub fn question_ratings(responses: &[LikertResponse], question: QuestionId) -> Vec<Option<f64>> {
    responses
        .iter()
        .filter(|r| r.question == question)
        .map(|r| r.rating.map(f64::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub valid: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub stdev: Option<f64>,
    pub variance: Option<f64>,
    /// Adjusted Fisher-Pearson (G1); absent for n < 3 or constant samples.
    pub skewness: Option<f64>,
    pub stderr_skewness: Option<f64>,
}

/// Descriptives over a column where `None` marks a missing value.
pub fn descriptive_stats(values: &[Option<f64>]) -> DescriptiveStats {
    let valid: Vec<f64> = values.iter().flatten().copied().collect();
    describe(&valid, values.len() - valid.len())
}

pub fn describe(valid: &[f64], missing: usize) -> DescriptiveStats {
    let n = valid.len();
    let nf = n as f64;
    let mut stats = DescriptiveStats {
        valid: n,
        missing,
        mean: None,
        median: None,
        stdev: None,
        variance: None,
        skewness: None,
        stderr_skewness: None,
    };
    if n == 0 {
        return stats;
    }
    let mean = valid.iter().sum::<f64>() / nf;
    let mut sorted = valid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    stats.mean = Some(mean);
    stats.median = Some(median);
    if n >= 2 {
        let m2: f64 = valid.iter().map(|x| (x - mean).powi(2)).sum();
        let variance = m2 / (nf - 1.0);
        stats.variance = Some(variance);
        stats.stdev = Some(variance.sqrt());
    }
    if n >= 3 {
        stats.stderr_skewness = Some(stderr_skewness(n));
        let m2 = valid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m3 = valid.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
        if m2 > 1e-12 * mean.abs().max(1.0).powi(2) {
            let g1 = m3 / m2.powf(1.5);
            stats.skewness = Some(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0));
        }
    }
    stats
}

/// Standard error of G1: `sqrt(6n(n-1) / ((n-2)(n+1)(n+3)))`, for n >= 3.
pub fn stderr_skewness(n: usize) -> f64 {
    let n = n as f64;
    (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
}
