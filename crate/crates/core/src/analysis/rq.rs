use std::collections::{BTreeMap, BTreeSet};

use super::{
    AgreementGrouping, AgreementUnits, AnalysisConfig, Association, Cell, GroupAgreement,
    Histogram, MeasureDescriptives, PairingPlan, PerceptionChange, Pooling, QuestionDescriptives,
    RoleCount, RoleEffect, SprintComparison,
};
use crate::error::{Error, Result};
use crate::measurements::{MeasureId, MeasurementRecord};
use crate::stats::{
    bonferroni, dunn_test, friedman_test, kendall_tau, krippendorff_alpha, kruskal_wallis,
    wilcoxon_signed_rank, StatTestResult, StatsError,
};
use crate::store::Role;
use crate::survey::{describe, descriptive_stats, question_ratings, LikertResponse, QuestionId};

/// One survey row: a respondent's nine answers in one sprint.
#[derive(Debug, Clone)]
struct SurveyRow<'a> {
    team: &'a str,
    role: Role,
    ratings: [Option<u8>; 9],
}

type Key<'a> = (&'a str, u32);

fn index(survey: &[LikertResponse]) -> BTreeMap<Key<'_>, SurveyRow<'_>> {
    let mut rows: BTreeMap<Key<'_>, SurveyRow<'_>> = BTreeMap::new();
    for r in survey {
        let row = rows
            .entry((r.developer_id.as_str(), r.sprint_id))
            .or_insert_with(|| SurveyRow {
                team: &r.team_id,
                role: r.role,
                ratings: [None; 9],
            });
        row.ratings[r.question as usize] = r.rating;
    }
    rows
}

fn cell_from(result: std::result::Result<StatTestResult, StatsError>) -> Cell<StatTestResult> {
    match result {
        Ok(r) => Cell::Computed(r),
        Err(StatsError::Undefined(m)) => Cell::Undefined(m),
        Err(e) => Cell::NotTestable(e.to_string()),
    }
}

pub fn survey_descriptives(survey: &[LikertResponse]) -> Vec<QuestionDescriptives> {
    QuestionId::ALL
        .iter()
        .map(|&q| QuestionDescriptives {
            question: q,
            stats: descriptive_stats(&question_ratings(survey, q)),
        })
        .collect()
}

/// Friedman test per question with sprints as treatments and respondents with
/// a complete sprint series as blocks; Wilcoxon post hoc over all sprint pairs
/// when the omnibus test is significant.
pub fn rq1_perception_change(
    survey: &[LikertResponse],
    config: &AnalysisConfig,
) -> Vec<PerceptionChange> {
    let rows = index(survey);
    let groups: Vec<Option<&str>> = match config.pooling {
        Pooling::Pooled => vec![None],
        Pooling::PerTeam => rows
            .values()
            .map(|r| r.team)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(Some)
            .collect(),
    };
    let mut out = Vec::new();
    for group in groups {
        let in_group = |r: &SurveyRow<'_>| group.is_none_or(|g| r.team == g);
        let sprints: Vec<u32> = rows
            .iter()
            .filter(|(_, r)| in_group(r))
            .map(|((_, s), _)| *s)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let developers: BTreeSet<&str> = rows
            .iter()
            .filter(|(_, r)| in_group(r))
            .map(|((d, _), _)| *d)
            .collect();
        for q in QuestionId::ALL {
            let blocks: Vec<Vec<f64>> = developers
                .iter()
                .filter_map(|d| {
                    sprints
                        .iter()
                        .map(|s| {
                            rows.get(&(*d, *s))
                                .and_then(|r| r.ratings[q as usize])
                                .map(f64::from)
                        })
                        .collect::<Option<Vec<f64>>>()
                })
                .collect();
            let omnibus = if sprints.len() < 2 {
                Cell::NotTestable(format!("responses span {} sprint(s)", sprints.len()))
            } else if blocks.len() < 2 {
                Cell::NotTestable(format!(
                    "{} respondent(s) answered in every sprint",
                    blocks.len()
                ))
            } else {
                cell_from(friedman_test(&blocks))
            };
            let gated = omnibus.p().is_some_and(|p| p < config.significance);
            let post_hoc = if gated {
                sprint_pairs(&sprints, &blocks)
            } else {
                Vec::new()
            };
            out.push(PerceptionChange {
                group: group.unwrap_or("all").to_string(),
                question: q,
                sprints: sprints.clone(),
                blocks: blocks.len(),
                omnibus,
                post_hoc,
            });
        }
    }
    out
}

fn sprint_pairs(sprints: &[u32], blocks: &[Vec<f64>]) -> Vec<SprintComparison> {
    let mut tests = Vec::new();
    for a in 0..sprints.len() {
        for b in a + 1..sprints.len() {
            let d: Vec<f64> = blocks.iter().map(|row| row[a] - row[b]).collect();
            if let Ok(r) = wilcoxon_signed_rank(&d) {
                tests.push((sprints[a], sprints[b], r));
            }
        }
    }
    let m = sprints.len() * (sprints.len() - 1) / 2;
    let raw: Vec<f64> = tests.iter().map(|t| t.2.p()).collect();
    tests
        .into_iter()
        .zip(bonferroni(&raw, m))
        .map(|((sprint_a, sprint_b, result), p_adjusted)| SprintComparison {
            sprint_a,
            sprint_b,
            result,
            p_adjusted,
        })
        .collect()
}

/// Kendall's tau between two questions over respondent-sprint rows where both
/// were answered.
pub fn associate(survey: &[LikertResponse], a: QuestionId, b: QuestionId) -> Association {
    let rows = index(survey);
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .values()
        .filter_map(|r| Some((f64::from(r.ratings[a as usize]?), f64::from(r.ratings[b as usize]?))))
        .unzip();
    Association {
        label: format!("{a} to {b}"),
        left: a.to_string(),
        right: b.to_string(),
        n: x.len(),
        result: cell_from(kendall_tau(&x, &y)),
    }
}

pub fn rq2_value_associations(survey: &[LikertResponse]) -> Vec<Association> {
    QuestionId::PRACTICES
        .iter()
        .map(|&q| associate(survey, q, QuestionId::Q9))
        .collect()
}

/// Kruskal-Wallis across roles per question, Dunn post hoc when significant.
/// Roles without a single answer to the question are left out.
pub fn rq3_role_effects(survey: &[LikertResponse], config: &AnalysisConfig) -> Vec<RoleEffect> {
    let mut out = Vec::new();
    for q in QuestionId::ALL {
        let mut valid: BTreeMap<Role, Vec<f64>> = BTreeMap::new();
        let mut missing: BTreeMap<Role, usize> = BTreeMap::new();
        for r in survey.iter().filter(|r| r.question == q) {
            match r.rating {
                Some(v) => valid.entry(r.role).or_default().push(f64::from(v)),
                None => *missing.entry(r.role).or_default() += 1,
            }
        }
        let counts = Role::ALL
            .iter()
            .map(|role| RoleCount {
                role: role.short().to_string(),
                valid: valid.get(role).map_or(0, Vec::len),
                missing: missing.get(role).copied().unwrap_or(0),
            })
            .collect();
        let tested: Vec<Role> = Role::ALL
            .into_iter()
            .filter(|r| valid.get(r).is_some_and(|v| !v.is_empty()))
            .collect();
        let labels: Vec<&str> = tested.iter().map(|r| r.short()).collect();
        let groups: Vec<&[f64]> = tested.iter().map(|r| valid[r].as_slice()).collect();
        let omnibus = if groups.len() < 2 {
            Cell::NotTestable(format!("{} role(s) answered", groups.len()))
        } else {
            cell_from(kruskal_wallis(&groups))
        };
        let post_hoc = if omnibus.p().is_some_and(|p| p < config.significance) {
            dunn_test(&labels, &groups).unwrap_or_default()
        } else {
            Vec::new()
        };
        out.push(RoleEffect {
            question: q,
            roles_tested: labels.iter().map(|s| s.to_string()).collect(),
            counts,
            omnibus,
            post_hoc,
        });
    }
    out
}

/// Krippendorff's alpha per team (or per role), with respondents as raters.
pub fn rq4_team_agreement(
    survey: &[LikertResponse],
    config: &AnalysisConfig,
    exclude_pos: bool,
) -> Vec<GroupAgreement> {
    let rows = index(survey);
    let group_of = |r: &SurveyRow<'_>| -> String {
        match config.agreement_grouping {
            AgreementGrouping::Team => r.team.to_string(),
            AgreementGrouping::Role => r.role.short().to_string(),
        }
    };
    let mut groups: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for ((dev, _), r) in &rows {
        if exclude_pos && r.role == Role::ProductOwner && config.agreement_grouping == AgreementGrouping::Role {
            continue;
        }
        let entry = groups.entry(group_of(r)).or_default();
        if !(exclude_pos && r.role == Role::ProductOwner) {
            entry.insert(dev);
        }
    }
    let sprints: BTreeSet<u32> = rows.keys().map(|(_, s)| *s).collect();

    let mut out = Vec::new();
    for (group, raters) in groups {
        let raters: Vec<&str> = raters.into_iter().collect();
        let rating = |dev: &str, s: u32, q: QuestionId| {
            rows.get(&(dev, s))
                .and_then(|r| r.ratings[q as usize])
                .map(f64::from)
        };
        let units: Vec<Vec<Option<f64>>> = match config.agreement_units {
            AgreementUnits::QuestionSprint => QuestionId::ALL
                .iter()
                .flat_map(|&q| sprints.iter().map(move |&s| (q, s)))
                .map(|(q, s)| raters.iter().map(|d| rating(d, s, q)).collect())
                .collect(),
            AgreementUnits::QuestionMedian => QuestionId::ALL
                .iter()
                .map(|&q| {
                    raters
                        .iter()
                        .map(|d| {
                            let v: Vec<f64> = sprints.iter().filter_map(|&s| rating(d, s, q)).collect();
                            describe(&v, 0).median
                        })
                        .collect()
                })
                .collect(),
        };
        let pairable_units = units
            .iter()
            .filter(|u| u.iter().flatten().count() >= 2)
            .count();
        let alpha = if raters.len() < 2 {
            Cell::NotTestable(format!("{} rater(s)", raters.len()))
        } else if pairable_units < 2 {
            Cell::NotTestable(format!("{pairable_units} unit(s) with two or more ratings"))
        } else {
            cell_from(krippendorff_alpha(&units))
        };
        out.push(GroupAgreement {
            group,
            exclude_pos,
            raters: raters.len(),
            units: pairable_units,
            alpha,
        });
    }
    out
}

/// Kendall's tau between survey answers and measurements joined on
/// (developer, sprint). Returns the associations and the number of joined keys.
pub fn rq6_survey_measurement_associations(
    survey: &[LikertResponse],
    measurements: &[MeasurementRecord],
    plan: &PairingPlan,
) -> Result<(Vec<Association>, usize)> {
    let rows = index(survey);
    let mut values: BTreeMap<Key<'_>, BTreeMap<MeasureId, Option<f64>>> = BTreeMap::new();
    for m in measurements {
        values
            .entry((m.developer_id.as_str(), m.sprint_id))
            .or_default()
            .insert(m.measure, m.value);
    }
    let joined: Vec<Key<'_>> = rows.keys().filter(|k| values.contains_key(*k)).copied().collect();
    if joined.is_empty() {
        let sample = |keys: Vec<&Key<'_>>| {
            keys.iter()
                .take(3)
                .map(|(d, s)| format!("({d}, {s})"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(Error::Validation(format!(
            "survey and measurements share no (developer, sprint) keys; survey has {} [{}], measurements have {} [{}]",
            rows.len(),
            sample(rows.keys().collect()),
            values.len(),
            sample(values.keys().collect()),
        )));
    }
    let associations = plan
        .pairs
        .iter()
        .map(|&(q, m)| {
            let (x, y): (Vec<f64>, Vec<f64>) = joined
                .iter()
                .filter_map(|k| {
                    let rating = rows[k].ratings[q as usize]?;
                    let value = (*values[k].get(&m)?)?;
                    Some((f64::from(rating), value))
                })
                .unzip();
            Association {
                label: format!("{q} - {m}"),
                left: q.to_string(),
                right: m.to_string(),
                n: x.len(),
                result: cell_from(kendall_tau(&x, &y)),
            }
        })
        .collect();
    Ok((associations, joined.len()))
}

/// Descriptives and histogram per measure, in the canonical measure order.
pub fn measurement_descriptives(
    measurements: &[MeasurementRecord],
    bins: usize,
) -> Vec<MeasureDescriptives> {
    MeasureId::ALL
        .iter()
        .map(|&m| {
            let all: Vec<Option<f64>> = measurements
                .iter()
                .filter(|r| r.measure == m)
                .map(|r| r.value)
                .collect();
            let valid: Vec<f64> = all.iter().flatten().copied().collect();
            MeasureDescriptives {
                measure: m,
                stats: descriptive_stats(&all),
                histogram: histogram(&valid, bins.max(1)),
            }
        })
        .collect()
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    let Some(lo) = values.iter().copied().reduce(f64::min) else {
        return Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        };
    };
    let hi = values.iter().copied().fold(lo, f64::max);
    if hi == lo {
        return Histogram {
            edges: vec![lo, hi],
            counts: vec![values.len()],
        };
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { edges, counts }
}
