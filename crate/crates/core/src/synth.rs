//! Synthetic survey and repository data with injectable effects.
//!
//! Every (developer, sprint) gets a standard normal latent per measure, and
//! the commits, issue references and comments are built so that each measure
//! is a non-decreasing function of its latent. Ratings come from latent normal
//! scores cut at ±0.4 and ±1.2 into 1..5, shifted by role and sprint offsets
//! and optionally correlated with measure latents or with each other.
//!
//! A positive coupling strength means agreement goes with more of the
//! measure: since 1 = strongly agree, Kendall's tau on raw ratings is then
//! negative.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::measurements::MeasureId;
use crate::store::{
    write_archive, write_windows, Commit, CommentKind, DatasetParts, Developer, FileChange,
    IssueRecord, IssueStatus, PRCommentRecord, ProjectDataset, Role, SprintWindow, StatusChange,
    Timestamp, MAX_SPRINT,
};
use crate::survey::{write_survey, LikertResponse, QuestionId};

pub const SURVEY_FILE: &str = "survey.csv";
/// Standalone copy of the sprint windows, usable with `--windows`.
pub const WINDOWS_FILE: &str = "windows.json";

/// Latent cut points separating ratings 1|2|3|4|5.
pub const CUTS: [f64; 4] = [-1.2, -0.4, 0.4, 1.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleShift {
    pub question: QuestionId,
    pub role: Role,
    /// Added to the latent score; positive moves towards disagreement.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintShift {
    pub question: QuestionId,
    pub sprint: u32,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub question: QuestionId,
    pub measure: MeasureId,
    pub strength: f64,
}

/// Correlation between a practice claim's latent and the Q9 latent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCoupling {
    pub question: QuestionId,
    pub strength: f64,
}

/// Distribution parameters of the development data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseRates {
    /// Probability that a developer makes no commit in a sprint, per role
    /// (PO, SM, Dev).
    pub idle: [f64; 3],
    /// Mean number of commits beyond the first in an active sprint.
    pub extra_commits: f64,
    pub churn_log_mean: f64,
    pub churn_log_sd: f64,
    pub test_ratio_log_mean: f64,
    pub test_ratio_log_sd: f64,
    pub files_log_mean: f64,
    pub files_log_sd: f64,
    pub stories_log_mean: f64,
    pub stories_log_sd: f64,
    pub comments_log_mean: f64,
    pub comments_log_sd: f64,
    /// Shift of the probit controlling the share of last-minute commits.
    pub late_shift: f64,
}

impl Default for BaseRates {
    fn default() -> Self {
        BaseRates {
            idle: [0.6, 0.2, 0.08],
            extra_commits: 5.0,
            churn_log_mean: 3.3,
            churn_log_sd: 0.8,
            test_ratio_log_mean: -0.7,
            test_ratio_log_sd: 1.0,
            files_log_mean: 2.2,
            files_log_sd: 0.7,
            stories_log_mean: 0.4,
            stories_log_sd: 0.7,
            comments_log_mean: 1.0,
            comments_log_sd: 1.2,
            late_shift: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectConfig {
    pub seed: u64,
    pub teams: usize,
    pub devs_per_team: usize,
    pub sprints: u32,
    pub role_shift: Vec<RoleShift>,
    pub sprint_shift: Vec<SprintShift>,
    pub coupling: Vec<Coupling>,
    pub value_coupling: Vec<ValueCoupling>,
    /// Chance that any rating is left blank.
    pub missing_rate: f64,
    /// Chance that a product owner leaves a development-practice claim blank.
    pub po_practice_missing_rate: f64,
    /// Standard deviation of a per-respondent, per-question offset.
    pub subject_sd: f64,
    pub base_rates: BaseRates,
    pub sprint_days: i64,
}

impl Default for EffectConfig {
    fn default() -> Self {
        EffectConfig {
            seed: 0,
            teams: 6,
            devs_per_team: 7,
            sprints: 4,
            role_shift: Vec::new(),
            sprint_shift: Vec::new(),
            coupling: Vec::new(),
            value_coupling: Vec::new(),
            missing_rate: 0.1,
            po_practice_missing_rate: 0.5,
            subject_sd: 0.0,
            base_rates: BaseRates::default(),
            sprint_days: 14,
        }
    }
}

/// Claims a product owner is less likely to answer.
const PO_SKIPPED: [QuestionId; 6] = [
    QuestionId::Q1,
    QuestionId::Q2,
    QuestionId::Q5,
    QuestionId::Q6,
    QuestionId::Q7,
    QuestionId::Q8,
];

impl EffectConfig {
    /// No effects: exchangeable survey answers independent of the measures.
    pub fn null(seed: u64) -> Self {
        EffectConfig {
            seed,
            ..EffectConfig::default()
        }
    }

    pub fn with_role_shift(mut self, question: QuestionId, role: Role, offset: f64) -> Self {
        self.role_shift.push(RoleShift { question, role, offset });
        self
    }

    pub fn with_sprint_shift(mut self, question: QuestionId, sprint: u32, offset: f64) -> Self {
        self.sprint_shift.push(SprintShift { question, sprint, offset });
        self
    }

    pub fn with_coupling(mut self, question: QuestionId, measure: MeasureId, strength: f64) -> Self {
        self.coupling.push(Coupling { question, measure, strength });
        self
    }

    pub fn with_value_coupling(mut self, question: QuestionId, strength: f64) -> Self {
        self.value_coupling.push(ValueCoupling { question, strength });
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.teams == 0 || self.devs_per_team == 0 {
            return bad("synthetic data needs at least one team and one developer".into());
        }
        if !(1..=MAX_SPRINT).contains(&self.sprints) {
            return bad(format!("sprints must be in 1..={MAX_SPRINT}"));
        }
        if self.sprint_days < 2 {
            return bad("sprints must last at least 2 days".into());
        }
        let probs = [self.missing_rate, self.po_practice_missing_rate]
            .into_iter()
            .chain(self.base_rates.idle);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} is outside [0, 1]"));
            }
        }
        let offsets = self
            .role_shift
            .iter()
            .map(|s| s.offset)
            .chain(self.sprint_shift.iter().map(|s| s.offset));
        for o in offsets {
            if !o.is_finite() || o.abs() > 4.0 {
                return bad(format!("offset {o} must be finite and within ±4"));
            }
        }
        if let Some(s) = self.sprint_shift.iter().find(|s| !(1..=self.sprints).contains(&s.sprint)) {
            return bad(format!("sprint shift targets sprint {} of {}", s.sprint, self.sprints));
        }
        if !(self.subject_sd.is_finite() && self.subject_sd >= 0.0) {
            return bad("subject_sd must be non-negative".into());
        }
        let mut load: BTreeMap<QuestionId, f64> = BTreeMap::new();
        for c in &self.coupling {
            if !(-1.0..=1.0).contains(&c.strength) {
                return bad(format!("coupling strength {} is outside [-1, 1]", c.strength));
            }
            *load.entry(c.question).or_default() += c.strength * c.strength;
        }
        let mut value_load = 0.0;
        for v in &self.value_coupling {
            if !(-1.0..=1.0).contains(&v.strength) {
                return bad(format!("value coupling strength {} is outside [-1, 1]", v.strength));
            }
            if v.question == QuestionId::Q9 {
                return bad("Q9 cannot be coupled with itself".into());
            }
            value_load += v.strength * v.strength;
        }
        if value_load > 0.0 {
            if load.contains_key(&QuestionId::Q9) {
                return bad("Q9 cannot have both measure and value couplings".into());
            }
            load.insert(QuestionId::Q9, value_load);
        }
        if let Some((q, l)) = load.iter().find(|(_, l)| **l > 1.0 + 1e-12) {
            return bad(format!("squared coupling strengths for {q} sum to {l:.3} > 1"));
        }
        Ok(())
    }
}

/// Generated artifacts, survey and the ids used.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: ProjectDataset,
    pub survey: Vec<LikertResponse>,
}

impl SyntheticData {
    /// Write the archive files plus [`WINDOWS_FILE`] and [`SURVEY_FILE`].
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_archive(&self.dataset, dir)?;
        write_windows(&dir.join(WINDOWS_FILE), self.dataset.sprint_windows())?;
        write_survey(&dir.join(SURVEY_FILE), &self.survey)
    }
}

fn rating_from_latent(z: f64) -> u8 {
    1 + CUTS.iter().filter(|c| z > **c).count() as u8
}

fn short_sha(parts: &str) -> String {
    hex::encode(Sha256::digest(parts.as_bytes()))[..40].to_string()
}

pub fn generate(config: &EffectConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::standard();
    let rates = &config.base_rates;
    let extra = Poisson::new(rates.extra_commits.max(1e-9))
        .map_err(|e| Error::Validation(format!("extra_commits: {e}")))?;
    let epoch: Timestamp = Utc.with_ymd_and_hms(2024, 4, 8, 8, 0, 0).unwrap();

    let mut parts = DatasetParts::default();
    let mut survey = Vec::new();
    let mut comment_id = 0u64;
    let mut issues: BTreeMap<u64, IssueRecord> = BTreeMap::new();

    for t in 1..=config.teams {
        let team = t.to_string();
        let devs: Vec<Developer> = (1..=config.devs_per_team)
            .map(|d| Developer {
                id: format!("t{t}-m{d}"),
                team_id: team.clone(),
                role: match d {
                    1 => Role::ProductOwner,
                    2 => Role::ScrumMaster,
                    _ => Role::Developer,
                },
            })
            .collect();
        let windows: Vec<SprintWindow> = (1..=config.sprints)
            .map(|s| {
                let start = epoch + Duration::days(config.sprint_days * i64::from(s - 1));
                SprintWindow {
                    team_id: team.clone(),
                    sprint_id: s,
                    start,
                    review_meeting: start + Duration::days(config.sprint_days - 1) + Duration::hours(6),
                }
            })
            .collect();
        let subject: Vec<[f64; 9]> = devs
            .iter()
            .map(|_| {
                let mut p = [0.0; 9];
                for v in &mut p {
                    *v = config.subject_sd * rng.sample::<f64, _>(StandardNormal);
                }
                p
            })
            .collect();

        for s in 1..=config.sprints {
            let window = windows[s as usize - 1].clone();
            for (di, dev) in devs.iter().enumerate() {
                let mut u = [0.0f64; 6];
                for v in &mut u {
                    *v = rng.sample(StandardNormal);
                }
                let latent_of = |m: MeasureId| u[MeasureId::ALL.iter().position(|x| *x == m).unwrap()];

                // Survey answers.
                let mut base = [0.0f64; 9];
                for q in QuestionId::ALL {
                    let e: f64 = rng.sample(StandardNormal);
                    let couplings: Vec<&Coupling> =
                        config.coupling.iter().filter(|c| c.question == q).collect();
                    let load: f64 = couplings.iter().map(|c| c.strength * c.strength).sum();
                    let signal: f64 = couplings.iter().map(|c| -c.strength * latent_of(c.measure)).sum();
                    base[q as usize] = signal + (1.0 - load).max(0.0).sqrt() * e;
                }
                if !config.value_coupling.is_empty() {
                    let load: f64 = config.value_coupling.iter().map(|v| v.strength * v.strength).sum();
                    let e: f64 = rng.sample(StandardNormal);
                    let signal: f64 = config
                        .value_coupling
                        .iter()
                        .map(|v| v.strength * base[v.question as usize])
                        .sum();
                    base[QuestionId::Q9 as usize] = signal + (1.0 - load).max(0.0).sqrt() * e;
                }
                for q in QuestionId::ALL {
                    let shift: f64 = config
                        .role_shift
                        .iter()
                        .filter(|r| r.question == q && r.role == dev.role)
                        .map(|r| r.offset)
                        .chain(
                            config
                                .sprint_shift
                                .iter()
                                .filter(|r| r.question == q && r.sprint == s)
                                .map(|r| r.offset),
                        )
                        .sum();
                    let z = base[q as usize] + shift + subject[di][q as usize];
                    let skip = if dev.role == Role::ProductOwner && PO_SKIPPED.contains(&q) {
                        config.po_practice_missing_rate
                    } else {
                        config.missing_rate
                    };
                    let missing = rng.random::<f64>() < skip;
                    survey.push(LikertResponse {
                        developer_id: dev.id.clone(),
                        team_id: team.clone(),
                        role: dev.role,
                        sprint_id: s,
                        question: q,
                        rating: (!missing).then(|| rating_from_latent(z)),
                    });
                }

                // Development artifacts.
                let role_idx = Role::ALL.iter().position(|r| *r == dev.role).unwrap();
                let idle = rng.random::<f64>() < rates.idle[role_idx];
                let k = 1 + extra.sample(&mut rng) as usize;
                let ln = |mean: f64, sd: f64, m: MeasureId| (mean + sd * latent_of(m)).exp();

                let n_comments = ln(rates.comments_log_mean, rates.comments_log_sd, MeasureId::Prc).floor() as usize;
                for _ in 0..n_comments {
                    comment_id += 1;
                    let at = random_time(&mut rng, window.start + Duration::hours(1), window.review_meeting - Duration::minutes(5));
                    parts.pr_comments.push(PRCommentRecord {
                        id: comment_id,
                        pr_number: (t as u64) * 1000 + 500 + rng.random_range(1..=6),
                        author_id: dev.id.clone(),
                        timestamp: at,
                        kind: if comment_id % 3 == 0 { CommentKind::Review } else { CommentKind::Conversation },
                        body: format!("Comment {comment_id}"),
                    });
                }
                if idle {
                    continue;
                }

                let total = (k as f64 * ln(rates.churn_log_mean, rates.churn_log_sd, MeasureId::Alc)).round().max(1.0) as u64;
                let ratio = ln(rates.test_ratio_log_mean, rates.test_ratio_log_sd, MeasureId::Rta);
                let app = ((total as f64 / (1.0 + ratio)).round() as u64).clamp(1, total);
                let test = total - app;
                let mut files = ln(rates.files_log_mean, rates.files_log_sd, MeasureId::Ufe).round().max(1.0) as usize;
                let test_files = if test > 0 { (files / 3).max(1) } else { 0 };
                files = files.max(test_files + 1);
                let app_files = files - test_files;
                let stories = (ln(rates.stories_log_mean, rates.stories_log_sd, MeasureId::Uus).floor() as u64).saturating_sub(1);
                let late_share = normal.cdf(rates.late_shift + latent_of(MeasureId::Lmc));
                let late = (k as f64 * late_share).round() as usize;

                let mut paths: Vec<(String, bool)> = (1..=app_files)
                    .map(|j| (format!("app/models/t{t}_m{}_{j}.rb", di + 1), false))
                    .collect();
                paths.extend((1..=test_files).map(|j| (format!("spec/models/t{t}_m{}_{j}_spec.rb", di + 1), true)));
                // Each commit touches at least one file and every file is touched once.
                let entries = files.max(k);
                let touch: Vec<(usize, usize)> = (0..entries).map(|i| (i % k, i % files)).collect();
                let n_test_entries = touch.iter().filter(|(_, f)| paths[*f].1).count() as u64;
                let n_app_entries = touch.len() as u64 - n_test_entries;
                let (mut test_i, mut app_i) = (0u64, 0u64);
                let mut changes: Vec<Vec<FileChange>> = vec![Vec::new(); k];
                for (c, f) in touch {
                    let churn = if paths[f].1 {
                        test_i += 1;
                        share(test, n_test_entries, test_i - 1)
                    } else {
                        app_i += 1;
                        share(app, n_app_entries, app_i - 1)
                    };
                    let added = churn - churn / 3;
                    changes[c].push(FileChange::new(paths[f].0.clone(), added, churn - added)?);
                }

                let refs: Vec<u64> = (1..=stories).map(|j| (t as u64) * 1000 + u64::from(s) * 100 + j).collect();
                for n in &refs {
                    issues.entry(*n).or_insert_with(|| IssueRecord {
                        number: *n,
                        labels: BTreeSet::from([format!("Team {t}")]),
                        assignees: BTreeSet::from([dev.id.clone()]),
                        title: format!("User story {n}"),
                        body: String::new(),
                        status_history: vec![
                            StatusChange { status: IssueStatus::Open, timestamp: window.start },
                            StatusChange {
                                status: IssueStatus::Closed,
                                timestamp: window.review_meeting - Duration::hours(1),
                            },
                        ],
                    });
                }
                for (i, ch) in changes.into_iter().enumerate() {
                    let at = if i < late {
                        random_time(&mut rng, window.review_meeting - Duration::hours(11), window.review_meeting - Duration::minutes(5))
                    } else {
                        random_time(&mut rng, window.start + Duration::hours(1), window.review_meeting - Duration::hours(13))
                    };
                    let mentioned: Vec<String> = refs
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| j % k == i)
                        .map(|(_, n)| format!("#{n}"))
                        .collect();
                    let message = if mentioned.is_empty() {
                        format!("Work in progress ({})", i + 1)
                    } else {
                        format!("Implement story; fixes {}", mentioned.join(", "))
                    };
                    parts.commits.push(Commit {
                        sha: short_sha(&format!("{}:{}:{}:{}", config.seed, dev.id, s, i)),
                        author_id: dev.id.clone(),
                        timestamp: at,
                        message,
                        is_merge: false,
                        changes: ch,
                    });
                }
            }
        }
        parts.developers.extend(devs);
        parts.sprint_windows.extend(windows);
    }
    parts.issues = issues.into_values().collect();
    let dataset = ProjectDataset::new(parts)?;
    Ok(SyntheticData { dataset, survey })
}

/// The `i`-th of `n` near-equal integer parts of `total`.
fn share(total: u64, n: u64, i: u64) -> u64 {
    total / n + u64::from(i < total % n)
}

fn random_time(rng: &mut ChaCha8Rng, from: Timestamp, to: Timestamp) -> Timestamp {
    let span = (to - from).num_seconds().max(0);
    from + Duration::seconds(rng.random_range(0..=span))
}

/// Write the generated data into `dir` (archive files, windows, survey).
pub fn generate_to(config: &EffectConfig, dir: &Path) -> Result<SyntheticData> {
    let data = generate(config)?;
    data.write(dir)?;
    Ok(data)
}
