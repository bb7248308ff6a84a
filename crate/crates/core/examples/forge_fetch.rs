//! Fetch a repository archive through the forge client with canned responses,
//! then write it as an archive directory.
//!
//! `cargo run --example forge_fetch -- [out-dir]`

use serde_json::json;
use sprintscope::store::forge::ok_json;
use sprintscope::store::{CannedTransport, FetchRequest, ForgeClient, ForgeConfig, RepoSlug, SystemClock};

fn main() -> sprintscope::Result<()> {
    let base = "https://forge.example/repos/acme/shop";
    let transport = CannedTransport::new()
        .route(format!("{base}/commits?per_page=100"), vec![ok_json(json!([{"sha": "abc"}]), None)])
        .route(
            format!("{base}/commits/abc"),
            vec![ok_json(
                json!({
                    "sha": "abc",
                    "author": {"login": "dana"},
                    "commit": {"message": "Checkout totals #12", "committer": {"date": "2024-05-02T15:00:00Z"}},
                    "parents": [{"sha": "p0"}],
                    "files": [
                        {"filename": "src/cart.py", "additions": 20, "deletions": 4},
                        {"filename": "tests/test_cart.py", "additions": 12, "deletions": 0}
                    ]
                }),
                None,
            )],
        )
        .route(format!("{base}/pulls?state=all&per_page=100"), vec![ok_json(json!([]), None)])
        .route(
            format!("{base}/issues?state=all&per_page=100"),
            vec![ok_json(
                json!([{"number": 12, "title": "As a shopper I see totals", "labels": [],
                        "assignees": [{"login": "dana"}], "created_at": "2024-04-29T09:00:00Z"}]),
                None,
            )],
        )
        .route(format!("{base}/pulls/comments?per_page=100"), vec![ok_json(json!([]), None)])
        .route(format!("{base}/issues/comments?per_page=100"), vec![ok_json(json!([]), None)]);

    let config = ForgeConfig {
        api_base: "https://forge.example".into(),
        ..ForgeConfig::default()
    };
    let mut client = ForgeClient::new(transport, SystemClock, "example-token", config);
    let repo: RepoSlug = "acme/shop".parse()?;
    let archive = client.fetch(&repo, &FetchRequest::default())?;
    for c in &archive.commits {
        println!("{} by {} at {}: churn {}", c.sha, c.author_id, c.timestamp, c.churn());
    }
    println!("{} issue(s), {} developer(s)", archive.issues.len(), archive.developers.len());

    if let Some(out) = std::env::args().nth(1) {
        archive.write(&out)?;
        println!("archive written to {out}");
    }
    Ok(())
}
