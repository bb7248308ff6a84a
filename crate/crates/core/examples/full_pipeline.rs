//! Synthetic archive and survey through measurement, analysis and report.
//!
//! `cargo run --example full_pipeline -- [out-dir]`

use std::path::PathBuf;

use sprintscope::analysis::{render_markdown, run_analysis, write_report, AnalysisConfig, Pooling};
use sprintscope::measurements::{compute_all, write_measurements};
use sprintscope::store::{load_archive_dir, Role};
use sprintscope::survey::{load_survey, QuestionId};
use sprintscope::synth::{generate_to, EffectConfig, SURVEY_FILE};

fn main() -> sprintscope::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sprintscope-pipeline"));
    let data_dir = out.join("data");
    let report_dir = out.join("report");

    let config = EffectConfig::null(7).with_role_shift(QuestionId::Q7, Role::ProductOwner, 1.5);
    generate_to(&config, &data_dir)?;

    let dataset = load_archive_dir(&data_dir, None)?;
    let measurements = compute_all(&dataset)?;
    write_measurements(&out.join("measurements.csv"), &measurements)?;
    let survey = load_survey(&data_dir.join(SURVEY_FILE))?;

    let analysis = AnalysisConfig {
        pooling: Pooling::Pooled,
        ..AnalysisConfig::default()
    };
    let report = run_analysis(&survey, Some(&measurements), &analysis, None)?;
    write_report(&report, &report_dir)?;

    println!("{}", render_markdown(&report).lines().take(40).collect::<Vec<_>>().join("\n"));
    println!("...\nfull report in {}", report_dir.display());
    Ok(())
}
