//! The statistics kernel on small hand-made samples.
//!
//! `cargo run --example nonparametric_tests`

use sprintscope::stats::{
    dunn_test, friedman_test, friedman_test_with, kendall_tau, krippendorff_alpha, kruskal_wallis,
    wilcoxon_paired, PMethod, StatsResult,
};

fn main() -> StatsResult<()> {
    // Five respondents rating the same question in three sprints.
    let blocks = vec![
        vec![2.0, 3.0, 4.0],
        vec![1.0, 2.0, 2.0],
        vec![3.0, 3.0, 5.0],
        vec![2.0, 4.0, 4.0],
        vec![1.0, 1.0, 3.0],
    ];
    let asym = friedman_test(&blocks)?;
    let exact = friedman_test_with(&blocks, PMethod::Exact)?;
    println!("Friedman       chi2 = {:.3}, df = {:?}, p = {:.4} (exact p = {:.4})", asym.statistic, asym.df, asym.p(), exact.p());

    let first: Vec<f64> = blocks.iter().map(|b| b[0]).collect();
    let last: Vec<f64> = blocks.iter().map(|b| b[2]).collect();
    let w = wilcoxon_paired(&first, &last)?;
    println!("Wilcoxon       W = {:.1}, p = {:.4}", w.statistic, w.p());

    let po = [4.0, 5.0, 4.0, 3.0];
    let sm = [2.0, 3.0, 3.0];
    let dev = [1.0, 2.0, 2.0, 1.0, 3.0, 2.0];
    let groups: Vec<&[f64]> = vec![&po, &sm, &dev];
    let kw = kruskal_wallis(&groups)?;
    println!("Kruskal-Wallis H = {:.3}, df = {:?}, p = {:.4}", kw.statistic, kw.df, kw.p());
    for pair in dunn_test(&["PO", "SM", "Dev"], &groups)? {
        println!("  Dunn {}-{}: z = {:+.3}, adjusted p = {:.4}", pair.group_a, pair.group_b, pair.z, pair.p_adjusted);
    }

    let agreement = [1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0, 5.0];
    let test_ratio = [0.9, 0.7, 0.8, 0.5, 0.3, 0.4, 0.1, 0.2];
    let tau = kendall_tau(&agreement, &test_ratio)?;
    println!("Kendall        tau-b = {:+.3}, p = {:.4}", tau.statistic, tau.p());

    // Three raters, four units, one missing rating.
    let units = vec![
        vec![Some(1.0), Some(1.0), Some(2.0)],
        vec![Some(3.0), Some(3.0), None],
        vec![Some(4.0), Some(5.0), Some(4.0)],
        vec![Some(2.0), Some(2.0), Some(2.0)],
    ];
    let alpha = krippendorff_alpha(&units)?;
    println!("Krippendorff   alpha (ordinal) = {:.3}", alpha.statistic);
    Ok(())
}
