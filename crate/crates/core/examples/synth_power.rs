//! Detection rates of injected effects over many synthetic seeds.
//!
//! `cargo run --release --example synth_power -- [seeds]`

use sprintscope::analysis::{run_analysis, AnalysisConfig};
use sprintscope::measurements::{compute_all, MeasureId};
use sprintscope::store::Role;
use sprintscope::survey::QuestionId;
use sprintscope::synth::{generate, EffectConfig};

fn rate(name: &str, seeds: u64, make: impl Fn(u64) -> EffectConfig, pick: impl Fn(&sprintscope::analysis::AnalysisReport) -> Option<f64>) {
    let mut hits = 0;
    for seed in 0..seeds {
        let data = generate(&make(seed)).expect("valid config");
        let m = compute_all(&data.dataset).expect("measures");
        let report = run_analysis(&data.survey, Some(&m), &AnalysisConfig::default(), None).expect("analysis");
        if pick(&report).is_some_and(|p| p < 0.05) {
            hits += 1;
        }
    }
    println!("{name:<28} {hits:>4}/{seeds} significant at 0.05");
}

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let rq3_q7 = |r: &sprintscope::analysis::AnalysisReport| r.role_effects[6].omnibus.p();
    let rq6_q1 = |r: &sprintscope::analysis::AnalysisReport| r.survey_measurement_associations[0].result.p();
    let rq1_q4 = |r: &sprintscope::analysis::AnalysisReport| r.perception_change[3].omnibus.p();

    rate("null: Q7 role effect", seeds, EffectConfig::null, rq3_q7);
    rate("PO shift on Q7", seeds, |s| EffectConfig::null(s).with_role_shift(QuestionId::Q7, Role::ProductOwner, 1.5), rq3_q7);
    rate("null: Q1 - RTA", seeds, EffectConfig::null, rq6_q1);
    rate("Q1 - RTA coupling 0.5", seeds, |s| EffectConfig::null(s).with_coupling(QuestionId::Q1, MeasureId::Rta, 0.5), rq6_q1);
    rate("null: Q4 over sprints", seeds, EffectConfig::null, rq1_q4);
    rate("sprint 1 shift on Q4", seeds, |s| EffectConfig::null(s).with_sprint_shift(QuestionId::Q4, 1, 1.0), rq1_q4);
}
