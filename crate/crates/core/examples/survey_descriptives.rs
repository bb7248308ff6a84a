//! Per-question descriptives of a Likert survey CSV.
//!
//! `cargo run --example survey_descriptives -- [survey.csv]`

use std::path::PathBuf;

use sprintscope::survey::{decode_likert, descriptive_stats, load_survey, question_ratings, QuestionId};

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn main() -> sprintscope::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_team/survey.csv")
    });
    let survey = load_survey(&path)?;
    println!("{} responses from {}", survey.len(), path.display());
    println!("{:<4} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7}  modal label", "Q", "valid", "missing", "mean", "median", "sd", "skew");
    for q in QuestionId::ALL {
        let ratings = question_ratings(&survey, q);
        let d = descriptive_stats(&ratings);
        let mut counts = [0usize; 5];
        for r in ratings.iter().flatten() {
            counts[*r as usize - 1] += 1;
        }
        let modal = (0..5)
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .filter(|&i| counts[i] > 0)
            .and_then(|i| decode_likert(i as u8 + 1))
            .unwrap_or("-");
        println!(
            "{:<4} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7}  {modal}",
            q.to_string(),
            d.valid,
            d.missing,
            fmt(d.mean),
            fmt(d.median),
            fmt(d.stdev),
            fmt(d.skewness)
        );
    }
    Ok(())
}
