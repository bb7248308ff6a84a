//! Compute the six sprint measures for an archive directory and print them as a grid.
//!
//! `cargo run --example measure_fixture -- [archive-dir]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use sprintscope::measurements::{compute_all, MeasureId};
use sprintscope::store::load_archive_dir;

fn main() -> sprintscope::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_team")
    });
    let dataset = load_archive_dir(&dir, None)?;
    let records = compute_all(&dataset)?;

    let mut grid: BTreeMap<(String, String, u32), BTreeMap<MeasureId, Option<f64>>> = BTreeMap::new();
    for r in &records {
        grid.entry((r.team_id.clone(), r.developer_id.clone(), r.sprint_id))
            .or_default()
            .insert(r.measure, r.value);
    }

    print!("{:<8} {:<10} {:>6}", "team", "developer", "sprint");
    for m in MeasureId::ALL {
        print!(" {:>8}", m.to_string());
    }
    println!();
    for ((team, dev, sprint), values) in &grid {
        print!("{team:<8} {dev:<10} {sprint:>6}");
        for m in MeasureId::ALL {
            match values.get(&m).copied().flatten() {
                Some(v) => print!(" {v:>8.3}"),
                None => print!(" {:>8}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
