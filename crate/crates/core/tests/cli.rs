mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{fixture, forge_routes, serve, TOKEN};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sprintscope"));
    c.env_remove("FORGE_TOKEN")
        .env_remove("FORGE_API_BASE")
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn measure_one_team_fixture_gives_36_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m.csv");
    let before = snapshot(&fixture("one_team"));
    let o = run(&["measure", "--archives", s(&fixture("one_team")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "team,developer,sprint,measure,value,missing");
    assert_eq!(text.lines().count(), 1 + 36);
    assert_eq!(snapshot(&fixture("one_team")), before, "inputs must not change");
}

#[test]
fn measure_with_window_file_and_merge_exclusion() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture("two_team");
    let with = tmp.path().join("with.csv");
    let without = tmp.path().join("without.csv");
    let windows = dir.join("windows.json");
    assert_eq!(code(&run(&["measure", "--archives", s(&dir), "--windows", s(&windows), "--out", s(&with)])), 0);
    assert_eq!(
        code(&run(&["measure", "--archives", s(&dir), "--out", s(&without), "--exclude-merges"])),
        0
    );
    let with = fs::read_to_string(with).unwrap();
    let without = fs::read_to_string(without).unwrap();
    assert_eq!(with.lines().count(), 73);
    // a3's merge commit in sprint 2 carries the last-minute #8 reference and 3 lines of churn.
    assert!(with.contains("alpha,a3,2,ALC,11.0,false"));
    assert!(without.contains("alpha,a3,2,ALC,13.666666666666666,false"));
}

#[test]
fn missing_inputs_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let nowhere = tmp.path().join("nope");
    let o = run(&["measure", "--archives", s(&nowhere), "--out", s(&tmp.path().join("m.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
    let o = run(&["analyze", "--survey", s(&nowhere), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let o = run(&["synth", "--config", s(&nowhere), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let o = run(&["report", "--out", s(&nowhere)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["measure"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let tmp = tempfile::tempdir().unwrap();
    let survey = fixture("two_team").join("survey.csv");
    let o = run(&["analyze", "--survey", s(&survey), "--pooling", "sometimes", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let o = run(&["ingest", "--repo", "not-a-slug", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn empty_survey_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let survey = tmp.path().join("empty.csv");
    fs::write(&survey, "team,developer,role,sprint,q1,q2,q3,q4,q5,q6,q7,q8,q9\n").unwrap();
    let o = run(&["analyze", "--survey", s(&survey), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(code(&o), 3);
    assert!(!tmp.path().join("r").exists());
}

#[test]
fn invalid_inputs_are_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let survey = fixture("two_team").join("survey.csv");
    let m = tmp.path().join("m.csv");
    fs::write(&m, "team,developer,sprint,measure,value,missing\nalpha,a1,1,UFE,-1,false\n").unwrap();
    let o = run(&["analyze", "--survey", s(&survey), "--measurements", s(&m), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));

    let bad_survey = tmp.path().join("s.csv");
    fs::write(&bad_survey, "team,developer,role,sprint,q1,q2,q3,q4,q5,q6,q7,q8,q9\nA,d1,Dev,1,7,,,,,,,,\n").unwrap();
    assert_eq!(code(&run(&["analyze", "--survey", s(&bad_survey), "--out", s(tmp.path())])), 3);

    let cfg = tmp.path().join("synth.json");
    fs::write(&cfg, r#"{"teams": 0}"#).unwrap();
    assert_eq!(code(&run(&["synth", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))])), 3);

    // Survey keys that share nothing with the measurements.
    let m = tmp.path().join("m2.csv");
    fs::write(&m, "team,developer,sprint,measure,value,missing\nzeta,z1,1,UFE,1,false\n").unwrap();
    let o = run(&["analyze", "--survey", s(&survey), "--measurements", s(&m), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn ingest_without_token_is_a_transport_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["ingest", "--repo", "org/proj", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FORGE_TOKEN"));
}

#[test]
fn ingest_measure_analyze_against_local_forge() {
    let forge = serve(forge_routes);
    let tmp = tempfile::tempdir().unwrap();
    let archive = tmp.path().join("archive");
    let windows = tmp.path().join("windows.json");
    fs::write(
        &windows,
        r#"[{"team_id":"unassigned","sprint_id":1,"start":"2024-04-01T00:00:00Z","review_meeting":"2024-04-12T09:00:00Z"}]"#,
    )
    .unwrap();
    let o = bin()
        .env("FORGE_TOKEN", TOKEN)
        .env("FORGE_API_BASE", &forge.base)
        .args(["ingest", "--repo", "org/proj", "--windows", s(&windows), "--out", s(&archive)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(archive.join("commits.jsonl").exists());

    let o = bin()
        .env("FORGE_TOKEN", "wrong")
        .env("FORGE_API_BASE", &forge.base)
        .args(["ingest", "--repo", "org/proj", "--out", s(&tmp.path().join("other"))])
        .output()
        .unwrap();
    assert_eq!(code(&o), 4);

    let m = tmp.path().join("m.csv");
    assert_eq!(code(&run(&["measure", "--archives", s(&archive), "--out", s(&m)])), 0);
    let text = fs::read_to_string(&m).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 6);
    assert!(text.contains("unassigned,alice,1,RTA,0.5,false"));
    assert!(text.contains("unassigned,bob,1,LMC,1.0,false"));

    let survey = tmp.path().join("survey.csv");
    fs::write(
        &survey,
        "team,developer,role,sprint,q1,q2,q3,q4,q5,q6,q7,q8,q9\n\
         unassigned,alice,Dev,1,2,2,3,3,4,2,3,2,2\n\
         unassigned,bob,Dev,1,4,3,3,2,1,3,3,3,3\n",
    )
    .unwrap();
    let report = tmp.path().join("report");
    let o = run(&["analyze", "--survey", s(&survey), "--measurements", s(&m), "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["joined_keys"], 2);
}

#[test]
fn analyze_fixture_with_options_and_rerender() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture("two_team");
    let plan = tmp.path().join("plan.txt");
    fs::write(&plan, "# custom pairs\nQ1,RTA\nQ9 - PRC\n").unwrap();
    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"agreement_grouping": "role", "histogram_bins": 4}"#).unwrap();
    let out = tmp.path().join("report");
    let o = run(&[
        "analyze",
        "--survey", s(&dir.join("survey.csv")),
        "--archives", s(&dir),
        "--plan", s(&plan),
        "--config", s(&config),
        "--pooling", "per-team",
        "--exclude-pos",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t3 = fs::read_to_string(out.join("table3_perception_change.csv")).unwrap();
    assert!(t3.starts_with("Team,Question,χ²,p-value\n"));
    assert_eq!(t3.lines().count(), 1 + 2 * 9);
    let t6 = fs::read_to_string(out.join("table6_team_agreement.csv")).unwrap();
    assert!(t6.starts_with("Role,"));
    assert!(!t6.lines().next().unwrap().contains("PO"));
    let t8 = fs::read_to_string(out.join("table8_survey_measurement_associations.csv")).unwrap();
    let labels: Vec<&str> = t8.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["Q1 - RTA", "Q9 - PRC"]);
    let hist = fs::read_to_string(out.join("measurement_histograms.csv")).unwrap();
    assert_eq!(hist.lines().filter(|l| l.starts_with("RTA,")).count(), 4);

    let md = fs::read(out.join("report.md")).unwrap();
    fs::remove_file(out.join("report.md")).unwrap();
    assert_eq!(code(&run(&["report", "--out", s(&out)])), 0);
    assert_eq!(fs::read(out.join("report.md")).unwrap(), md);
}

#[test]
fn report_timestamp_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let survey = fixture("two_team").join("survey.csv");
    let read_ts = |dir: &Path| -> String {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        v["metadata"]["timestamp"].as_str().unwrap().to_string()
    };
    let a = tmp.path().join("a");
    assert_eq!(code(&run(&["analyze", "--survey", s(&survey), "--out", s(&a)])), 0);
    assert_eq!(read_ts(&a), "1970-01-01T00:00:00Z");

    let b = tmp.path().join("b");
    let o = bin()
        .env("SOURCE_DATE_EPOCH", "1717200000")
        .args(["analyze", "--survey", s(&survey), "--out", s(&b)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(read_ts(&b), "2024-06-01T00:00:00Z");

    let c = tmp.path().join("c");
    let o = run(&["analyze", "--survey", s(&survey), "--timestamp", "2024-07-01T12:00:00+02:00", "--out", s(&c)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_ts(&c), "2024-07-01T10:00:00Z");

    let o = run(&["analyze", "--survey", s(&survey), "--timestamp", "yesterday", "--out", s(&c)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn synth_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("effects.json");
    fs::write(
        &cfg,
        r#"{"teams": 2, "devs_per_team": 4, "sprints": 3,
            "role_shift": [{"question": "Q7", "role": "ProductOwner", "offset": 1.0}],
            "coupling": [{"question": "Q1", "measure": "RTA", "strength": 0.5}]}"#,
    )
    .unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, seed) in dirs.iter().zip(["5", "5", "6"]) {
        let o = run(&["synth", "--config", s(&cfg), "--seed", seed, "--out", s(dir)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(snapshot(&dirs[0]), snapshot(&dirs[1]));
    assert_ne!(snapshot(&dirs[0]), snapshot(&dirs[2]));
    let survey = fs::read_to_string(dirs[0].join("survey.csv")).unwrap();
    assert_eq!(survey.lines().count(), 1 + 2 * 4 * 3);
    for f in ["developers.jsonl", "commits.jsonl", "issues.jsonl", "pr_comments.jsonl", "sprint_windows.jsonl", "windows.json"] {
        assert!(dirs[0].join(f).exists(), "{f}");
    }
}
