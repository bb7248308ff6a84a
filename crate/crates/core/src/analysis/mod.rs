//! Research-question analyses over survey responses and measurements, and the
//! report that collects them.
//!
//! ```text
//! survey ──┬─ survey_descriptives       (Table II)
//!          ├─ rq1 perception change      (Table III, Friedman + Wilcoxon)
//!          ├─ rq2 value associations     (Table IV, Kendall tau vs Q9)
//!          ├─ rq3 role effects           (Table V, Kruskal-Wallis + Dunn)
//!          └─ rq4 team agreement         (Table VI, Krippendorff alpha)
//! measurements ─ measurement_descriptives (Table VII)
//! survey x measurements ─ rq6            (Table VIII, Kendall tau)
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measurements::{MeasureId, MeasurementRecord};
use crate::stats::{PairwiseResult, StatTestResult};
use crate::survey::{DescriptiveStats, LikertResponse, QuestionId};

mod report;
mod rq;

pub use report::{
    format_p, load_report, render_markdown, render_tables, stars, write_report, Table,
    REPORT_JSON, REPORT_MD, STAR_FOOTNOTE,
};
pub use rq::{
    associate, measurement_descriptives, rq1_perception_change, rq2_value_associations,
    rq3_role_effects, rq4_team_agreement, rq6_survey_measurement_associations,
    survey_descriptives,
};

/// Whether repeated-measures tests pool all teams or run per team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    #[default]
    Pooled,
    PerTeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgreementGrouping {
    #[default]
    Team,
    Role,
}

/// What counts as one rated unit for inter-rater agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgreementUnits {
    /// Each (question, sprint) cell is a unit.
    #[default]
    QuestionSprint,
    /// Each question is a unit rated by the respondent's median over sprints.
    QuestionMedian,
}

/// Survey question and measure pairs correlated in rq6.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingPlan {
    pub pairs: Vec<(QuestionId, MeasureId)>,
}

impl Default for PairingPlan {
    fn default() -> Self {
        PairingPlan {
            pairs: vec![
                (QuestionId::Q1, MeasureId::Rta),
                (QuestionId::Q2, MeasureId::Ufe),
                (QuestionId::Q5, MeasureId::Lmc),
                (QuestionId::Q6, MeasureId::Alc),
                (QuestionId::Q7, MeasureId::Uus),
                (QuestionId::Q8, MeasureId::Prc),
            ],
        }
    }
}

impl PairingPlan {
    /// Parse one pair per line, `Q1,RTA` or `Q1 - RTA`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split([',', '-', '\t', ' ']).filter(|s| !s.is_empty());
            let (Some(q), Some(m), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse("plan", i + 1, format!("expected `Qn,MEASURE`, got {line:?}")));
            };
            let q: QuestionId = q.parse().map_err(|e: Error| Error::parse("plan", i + 1, e))?;
            let m: MeasureId = m.parse().map_err(|e: Error| Error::parse("plan", i + 1, e))?;
            pairs.push((q, m));
        }
        if pairs.is_empty() {
            return Err(Error::Validation("pairing plan lists no pairs".into()));
        }
        Ok(PairingPlan { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        PairingPlan::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub pooling: Pooling,
    /// Drop product owners from the agreement analysis.
    pub exclude_pos: bool,
    pub agreement_grouping: AgreementGrouping,
    pub agreement_units: AgreementUnits,
    pub plan: PairingPlan,
    /// Omnibus level that gates post hoc comparisons.
    pub significance: f64,
    pub histogram_bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            pooling: Pooling::Pooled,
            exclude_pos: false,
            agreement_grouping: AgreementGrouping::Team,
            agreement_units: AgreementUnits::QuestionSprint,
            plan: PairingPlan::default(),
            significance: 0.05,
            histogram_bins: 10,
        }
    }
}

impl AnalysisConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Outcome of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum Cell<T> {
    Computed(T),
    /// Preconditions not met (too few blocks, roles, raters ...).
    NotTestable(String),
    /// Statistic undefined on this data, e.g. a fully tied column.
    Undefined(String),
}

impl<T> Cell<T> {
    pub fn computed(&self) -> Option<&T> {
        match self {
            Cell::Computed(t) => Some(t),
            _ => None,
        }
    }

    pub fn note(&self) -> Option<&str> {
        match self {
            Cell::Computed(_) => None,
            Cell::NotTestable(s) | Cell::Undefined(s) => Some(s),
        }
    }
}

impl Cell<StatTestResult> {
    pub fn p(&self) -> Option<f64> {
        self.computed().and_then(|r| r.p_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDescriptives {
    pub question: QuestionId,
    pub stats: DescriptiveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintComparison {
    pub sprint_a: u32,
    pub sprint_b: u32,
    pub result: StatTestResult,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionChange {
    /// `"all"` when pooled, otherwise the team id.
    pub group: String,
    pub question: QuestionId,
    pub sprints: Vec<u32>,
    /// Respondents with a rating in every sprint.
    pub blocks: usize,
    pub omnibus: Cell<StatTestResult>,
    pub post_hoc: Vec<SprintComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub label: String,
    pub left: String,
    pub right: String,
    pub n: usize,
    pub result: Cell<StatTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleCount {
    pub role: String,
    pub valid: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleEffect {
    pub question: QuestionId,
    pub roles_tested: Vec<String>,
    pub counts: Vec<RoleCount>,
    pub omnibus: Cell<StatTestResult>,
    pub post_hoc: Vec<PairwiseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAgreement {
    pub group: String,
    pub exclude_pos: bool,
    pub raters: usize,
    pub units: usize,
    pub alpha: Cell<StatTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDescriptives {
    pub measure: MeasureId,
    pub stats: DescriptiveStats,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub dataset_id: String,
    pub config_hash: String,
    pub timestamp: String,
    pub generator: String,
    pub survey_responses: usize,
    pub measurement_records: usize,
    /// (developer, sprint) keys present in both survey and measurements.
    pub joined_keys: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metadata: ReportMetadata,
    pub config: AnalysisConfig,
    pub survey_descriptives: Vec<QuestionDescriptives>,
    pub perception_change: Vec<PerceptionChange>,
    pub value_associations: Vec<Association>,
    pub role_effects: Vec<RoleEffect>,
    pub team_agreement: Vec<GroupAgreement>,
    pub measurement_descriptives: Vec<MeasureDescriptives>,
    pub survey_measurement_associations: Vec<Association>,
}

pub const DEFAULT_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

/// Run every analysis. `timestamp` only lands in the metadata; pass a fixed
/// value for reproducible output.
pub fn run_analysis(
    survey: &[LikertResponse],
    measurements: Option<&[MeasurementRecord]>,
    config: &AnalysisConfig,
    timestamp: Option<&str>,
) -> Result<AnalysisReport> {
    if survey.is_empty() {
        return Err(Error::Validation("survey contains no responses".into()));
    }
    let (measurement_descriptives, survey_measurement_associations, joined_keys) =
        match measurements {
            Some(m) => {
                let (assoc, joined) = rq6_survey_measurement_associations(survey, m, &config.plan)?;
                (measurement_descriptives(m, config.histogram_bins), assoc, joined)
            }
            None => (Vec::new(), Vec::new(), 0),
        };
    let mut team_agreement = rq4_team_agreement(survey, config, config.exclude_pos);
    let other_scope = rq4_team_agreement(survey, config, !config.exclude_pos);
    team_agreement.extend(other_scope);

    Ok(AnalysisReport {
        metadata: ReportMetadata {
            dataset_id: dataset_id(survey, measurements.unwrap_or(&[])),
            config_hash: config.hash(),
            timestamp: timestamp.unwrap_or(DEFAULT_TIMESTAMP).to_string(),
            generator: concat!("sprintscope ", env!("CARGO_PKG_VERSION")).to_string(),
            survey_responses: survey.len(),
            measurement_records: measurements.map_or(0, <[_]>::len),
            joined_keys,
        },
        config: config.clone(),
        survey_descriptives: survey_descriptives(survey),
        perception_change: rq1_perception_change(survey, config),
        value_associations: rq2_value_associations(survey),
        role_effects: rq3_role_effects(survey, config),
        team_agreement,
        measurement_descriptives,
        survey_measurement_associations,
    })
}

/// Content hash of the inputs, independent of their order.
pub fn dataset_id(survey: &[LikertResponse], measurements: &[MeasurementRecord]) -> String {
    let mut lines = BTreeSet::new();
    for r in survey {
        lines.insert(format!(
            "s|{}|{}|{}|{}|{}|{:?}",
            r.team_id, r.developer_id, r.role.short(), r.sprint_id, r.question, r.rating
        ));
    }
    for m in measurements {
        lines.insert(format!(
            "m|{}|{}|{}|{}|{:?}",
            m.team_id, m.developer_id, m.sprint_id, m.measure, m.value
        ));
    }
    let mut h = Sha256::new();
    for l in &lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())[..16].to_string()
}
