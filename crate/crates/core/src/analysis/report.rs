use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AgreementGrouping, AnalysisReport, Association, Cell, Pooling};
use crate::error::{Error, Result};
use crate::measurements::MeasureId;
use crate::stats::StatTestResult;
use crate::survey::{DescriptiveStats, QuestionId};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const STAR_FOOTNOTE: &str = "* p<.05, ** p<.01, *** p<.001";

/// One rendered table. `csv_rows` are appended only in the tabular export.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub csv_rows: Vec<Vec<String>>,
    pub starred: bool,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Three decimals, or one-digit scientific notation below 0.001 (`1.4e-7`).
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        format!("{p:.1e}")
    } else {
        fixed(p, 3)
    }
}

fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| fixed(v, digits))
}

fn p_cell(cell: &Cell<StatTestResult>) -> String {
    match cell.p() {
        Some(p) => format!("{}{}", format_p(p), stars(p)),
        None => "-".into(),
    }
}

fn stat_cell(cell: &Cell<StatTestResult>) -> String {
    opt(cell.computed().map(|r| r.statistic), 3)
}

fn z_cell(cell: &Cell<StatTestResult>) -> String {
    opt(cell.computed().and_then(|r| r.get("z")), 3)
}

fn strings<const N: usize>(v: [&str; N]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn descriptive_rows(
    cols: &[&DescriptiveStats],
    count_digits: Option<usize>,
    labels: &[&str],
) -> Vec<Vec<String>> {
    let count = |n: usize| match count_digits {
        Some(d) => fixed(n as f64, d),
        None => n.to_string(),
    };
    labels
        .iter()
        .map(|&label| {
            let mut row = vec![label.to_string()];
            row.extend(cols.iter().map(|s| match label {
                "Valid" => count(s.valid),
                "Missing" => count(s.missing),
                "Mean" => opt(s.mean, 1),
                "Median" => opt(s.median, 1),
                "Stdev" => opt(s.stdev, 1),
                "Variance" => opt(s.variance, 1),
                "Skewness" => opt(s.skewness, 1),
                _ => opt(s.stderr_skewness, 1),
            }));
            row
        })
        .collect()
}

fn association_rows(assoc: &[Association]) -> Vec<Vec<String>> {
    assoc
        .iter()
        .map(|a| vec![a.label.clone(), stat_cell(&a.result), z_cell(&a.result), p_cell(&a.result)])
        .collect()
}

/// The seven report tables.
pub fn render_tables(report: &AnalysisReport) -> Vec<Table> {
    let mut tables = Vec::new();

    let mut header = vec![String::new()];
    header.extend(report.survey_descriptives.iter().map(|d| d.question.to_string()));
    let cols: Vec<&DescriptiveStats> = report.survey_descriptives.iter().map(|d| &d.stats).collect();
    tables.push(Table {
        file: "table2_survey_descriptives.csv",
        title: "Table II. Descriptive statistics of responses to survey questions".into(),
        header,
        rows: descriptive_rows(
            &cols,
            None,
            &["Valid", "Missing", "Mean", "Median", "Stdev", "Skewness", "StderrSkew"],
        ),
        csv_rows: descriptive_rows(&cols, None, &["Variance"]),
        starred: false,
    });

    let per_team = report.config.pooling == Pooling::PerTeam;
    let mut header = strings(["Question", "χ²", "p-value"]);
    if per_team {
        header.insert(0, "Team".into());
    }
    tables.push(Table {
        file: "table3_perception_change.csv",
        title: "Table III. Friedman rank sum χ² and significance of changes in responses over the sprints".into(),
        header,
        rows: report
            .perception_change
            .iter()
            .map(|pc| {
                let mut row = vec![pc.question.to_string(), stat_cell(&pc.omnibus), p_cell(&pc.omnibus)];
                if per_team {
                    row.insert(0, pc.group.clone());
                }
                row
            })
            .collect(),
        csv_rows: Vec::new(),
        starred: true,
    });

    tables.push(Table {
        file: "table4_value_associations.csv",
        title: "Table IV. Kendall's τ, Z and significance of relationships between agile practices and agile values".into(),
        header: strings(["Relationship", "τ", "Z", "p-value"]),
        rows: association_rows(&report.value_associations),
        csv_rows: Vec::new(),
        starred: true,
    });

    tables.push(Table {
        file: "table5_role_effects.csv",
        title: "Table V. Kruskal-Wallis rank sum χ² and significance of role effects on responses".into(),
        header: strings(["Question", "χ²", "p-value"]),
        rows: report
            .role_effects
            .iter()
            .map(|r| vec![r.question.to_string(), stat_cell(&r.omnibus), p_cell(&r.omnibus)])
            .collect(),
        csv_rows: Vec::new(),
        starred: true,
    });

    let groups: Vec<_> = report
        .team_agreement
        .iter()
        .filter(|g| g.exclude_pos == report.config.exclude_pos)
        .collect();
    let first = match report.config.agreement_grouping {
        AgreementGrouping::Team => "Team",
        AgreementGrouping::Role => "Role",
    };
    let mut header = vec![first.to_string()];
    header.extend(groups.iter().map(|g| g.group.clone()));
    let mut row = vec!["α".to_string()];
    row.extend(groups.iter().map(|g| stat_cell(&g.alpha)));
    tables.push(Table {
        file: "table6_team_agreement.csv",
        title: "Table VI. Krippendorff's α as inter-rater agreement on the survey responses".into(),
        header,
        rows: vec![row],
        csv_rows: Vec::new(),
        starred: false,
    });

    let mut header = vec![String::new()];
    header.extend(MeasureId::ALL.iter().map(|m| m.to_string()));
    let cols: Vec<&DescriptiveStats> = report.measurement_descriptives.iter().map(|d| &d.stats).collect();
    let rows = if cols.is_empty() {
        Vec::new()
    } else {
        let mut rows = descriptive_rows(
            &cols,
            Some(1),
            &["Valid", "Missing", "Mean", "Median", "Stdev", "Variance", "Skewness", "StderrSkew"],
        );
        rows[7][0] = "Std. Error Skewness".into();
        rows
    };
    tables.push(Table {
        file: "table7_measurement_descriptives.csv",
        title: "Table VII. Descriptive statistics of development data measures".into(),
        header,
        rows,
        csv_rows: Vec::new(),
        starred: false,
    });

    tables.push(Table {
        file: "table8_survey_measurement_associations.csv",
        title: "Table VIII. Relationships between survey questions and development data measures".into(),
        header: strings(["Relationship", "Kendall's-τ", "Z", "p-value"]),
        rows: association_rows(&report.survey_measurement_associations),
        csv_rows: Vec::new(),
        starred: true,
    });
    tables
}

/// Post hoc comparisons, role response counts and histograms.
fn supplementary_tables(report: &AnalysisReport) -> Vec<Table> {
    let mut wilcoxon = Vec::new();
    for pc in &report.perception_change {
        for c in &pc.post_hoc {
            wilcoxon.push(vec![
                pc.group.clone(),
                pc.question.to_string(),
                format!("{} vs {}", c.sprint_a, c.sprint_b),
                c.result.n.to_string(),
                fixed(c.result.statistic, 1),
                opt(c.result.get("z"), 3),
                format_p(c.result.p()),
                format!("{}{}", format_p(c.p_adjusted), stars(c.p_adjusted)),
            ]);
        }
    }
    let mut dunn = Vec::new();
    for r in &report.role_effects {
        for p in &r.post_hoc {
            dunn.push(vec![
                r.question.to_string(),
                format!("{} vs {}", p.group_a, p.group_b),
                fixed(p.z, 3),
                format_p(p.p_unadjusted),
                format!("{}{}", format_p(p.p_adjusted), stars(p.p_adjusted)),
            ]);
        }
    }
    let mut counts = Vec::new();
    for r in &report.role_effects {
        for c in &r.counts {
            counts.push(vec![r.question.to_string(), c.role.clone(), c.valid.to_string(), c.missing.to_string()]);
        }
    }
    let mut hist = Vec::new();
    for m in &report.measurement_descriptives {
        for (i, n) in m.histogram.counts.iter().enumerate() {
            hist.push(vec![
                m.measure.to_string(),
                i.to_string(),
                m.histogram.edges[i].to_string(),
                m.histogram.edges[i + 1].to_string(),
                n.to_string(),
            ]);
        }
    }
    let mut agreement = Vec::new();
    for g in &report.team_agreement {
        agreement.push(vec![
            g.group.clone(),
            if g.exclude_pos { "excluding POs" } else { "all roles" }.to_string(),
            g.raters.to_string(),
            g.units.to_string(),
            stat_cell(&g.alpha),
            g.alpha.note().unwrap_or("").to_string(),
        ]);
    }
    let table = |file, title: &str, header, rows, starred| Table {
        file,
        title: title.into(),
        header,
        rows,
        csv_rows: Vec::new(),
        starred,
    };
    vec![
        table(
            "posthoc_wilcoxon.csv",
            "Post hoc Wilcoxon signed rank tests between sprints (Bonferroni)",
            strings(["Group", "Question", "Sprints", "n", "W+", "Z", "p", "p adjusted"]),
            wilcoxon,
            true,
        ),
        table(
            "posthoc_dunn.csv",
            "Post hoc Dunn tests between roles (Bonferroni)",
            strings(["Question", "Roles", "Z", "p", "p adjusted"]),
            dunn,
            true,
        ),
        table(
            "role_response_counts.csv",
            "Valid and missing responses per role",
            strings(["Question", "Role", "Valid", "Missing"]),
            counts,
            false,
        ),
        table(
            "team_agreement_scopes.csv",
            "Krippendorff's α per group and scope",
            strings(["Group", "Scope", "Raters", "Units", "α", "Note"]),
            agreement,
            false,
        ),
        table(
            "measurement_histograms.csv",
            "Histogram bins of development data measures",
            strings(["Measure", "Bin", "Lower", "Upper", "Count"]),
            hist,
            false,
        ),
    ]
}

fn markdown_table(out: &mut String, t: &Table) {
    let _ = writeln!(out, "## {}\n", t.title);
    if t.rows.is_empty() {
        out.push_str("No data.\n\n");
        return;
    }
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(&t.header));
    let align: Vec<String> = t
        .header
        .iter()
        .enumerate()
        .map(|(i, _)| if i == 0 { ":---".into() } else { "---:".into() })
        .collect();
    out.push_str(&line(&align));
    for row in &t.rows {
        out.push_str(&line(row));
    }
    out.push('\n');
    if t.starred {
        let _ = writeln!(out, "`{STAR_FOOTNOTE}`\n");
    }
}

pub fn render_markdown(report: &AnalysisReport) -> String {
    let m = &report.metadata;
    let mut out = String::from("# Agile practice analysis report\n\n");
    let _ = writeln!(out, "- Dataset: `{}`", m.dataset_id);
    let _ = writeln!(out, "- Config hash: `{}`", m.config_hash);
    let _ = writeln!(out, "- Generated: {} by {}", m.timestamp, m.generator);
    let _ = writeln!(
        out,
        "- Survey responses: {}; measurement records: {}; joined (developer, sprint) keys: {}\n",
        m.survey_responses, m.measurement_records, m.joined_keys
    );
    out.push_str("Ratings: 1 = strongly agree ... 5 = strongly disagree.\n\n");
    for q in QuestionId::ALL {
        let _ = writeln!(out, "- {q}: {}", q.claim());
    }
    out.push('\n');
    for t in render_tables(report) {
        markdown_table(&mut out, &t);
    }
    out.push_str("# Supplementary tables\n\n");
    for t in supplementary_tables(report) {
        if t.file != "measurement_histograms.csv" {
            markdown_table(&mut out, &t);
        }
    }
    out
}

fn write_csv(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&t.header).map_err(io)?;
    for row in t.rows.iter().chain(&t.csv_rows) {
        w.write_record(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Write one CSV per table, `report.json` and `report.md` into `dir`.
pub fn write_report(report: &AnalysisReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in render_tables(report).iter().chain(&supplementary_tables(report)) {
        write_csv(&dir.join(t.file), t)?;
    }
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.into()))?;
    fs::write(dir.join(REPORT_JSON), json + "\n")?;
    fs::write(dir.join(REPORT_MD), render_markdown(report))?;
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<AnalysisReport> {
    let path = dir.join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.clone()),
        _ => Error::Io(e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.0498), "0.050");
        assert_eq!(format_p(0.001), "0.001");
        assert_eq!(format_p(1.4e-7), "1.4e-7");
        assert_eq!(format_p(1.649e-4), "1.6e-4");
        assert_eq!(stars(0.04), "*");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.0001), "***");
        assert_eq!(stars(0.05), "");
    }

    #[test]
    fn negative_zero_is_plain() {
        assert_eq!(fixed(-0.0001, 3), "0.000");
        assert_eq!(fixed(-0.04, 1), "0.0");
        assert_eq!(fixed(-0.36, 3), "-0.360");
    }
}
