use std::collections::HashMap;

use super::ranks::{midranks, tie_cubes};
use super::{chi_square_sf, Method, PMethod, StatTestResult, StatsError, StatsResult};

const MAX_EXACT_STATES: usize = 2_000_000;

/// Friedman rank sum test with the asymptotic chi-square p-value.
///
/// `blocks` is an n×k matrix: one row per subject, one column per treatment.
/// Rows must be complete; drop incomplete subjects before calling.
pub fn friedman_test(blocks: &[Vec<f64>]) -> StatsResult<StatTestResult> {
    friedman_test_with(blocks, PMethod::Asymptotic)
}

pub fn friedman_test_with(blocks: &[Vec<f64>], method: PMethod) -> StatsResult<StatTestResult> {
    let n = blocks.len();
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "Friedman test needs at least 2 blocks, got {n}"
        )));
    }
    let k = blocks[0].len();
    if k < 2 {
        return Err(StatsError::InsufficientData(format!(
            "Friedman test needs at least 2 treatments, got {k}"
        )));
    }
    if blocks.iter().any(|b| b.len() != k) {
        return Err(StatsError::InsufficientData(
            "Friedman blocks must all have the same number of treatments".into(),
        ));
    }

    // Doubled midranks are integers, which keeps the exact comparison exact.
    let mut doubled = Vec::with_capacity(n);
    let mut ties = 0.0;
    for block in blocks {
        let r = midranks(block)?;
        ties += tie_cubes(block);
        doubled.push(r.iter().map(|x| (2.0 * x).round() as i64).collect::<Vec<_>>());
    }
    let mut col = vec![0i64; k];
    for d in &doubled {
        for (c, v) in col.iter_mut().zip(d) {
            *c += v;
        }
    }

    let (nf, kf) = (n as f64, k as f64);
    let denom = nf * kf * (kf + 1.0) - ties / (kf - 1.0);
    let df = (k - 1) as u32;
    let base = StatTestResult::new(Method::Friedman, 0.0, n * k)
        .with_df(df)
        .extra("blocks", nf)
        .extra("treatments", kf);
    if denom <= 1e-9 {
        return Ok(base.with_p(1.0).extra("degenerate", 1.0));
    }
    let centre = nf * (kf + 1.0) / 2.0;
    let ss: f64 = col
        .iter()
        .map(|&c| {
            let r = c as f64 / 2.0 - centre;
            r * r
        })
        .sum();
    let statistic = 12.0 * ss / denom;
    let p_asym = chi_square_sf(statistic, df);

    let mut result = StatTestResult {
        statistic,
        ..base
    };
    for (j, c) in col.iter().enumerate() {
        result = result.extra(&format!("rank_sum_{}", j + 1), *c as f64 / 2.0);
    }
    Ok(match method {
        PMethod::Asymptotic => result.with_p(p_asym),
        PMethod::Exact => {
            let observed: i64 = col.iter().map(|c| c * c).sum();
            let p = exact_upper_tail(&doubled, observed)?;
            result.with_p(p).extra("p_asymptotic", p_asym)
        }
    })
}

/// P(sum of squared column sums >= observed) under independent uniform
/// within-block permutations, by convolving blocks. States are kept as sorted
/// column-sum vectors since the statistic is symmetric in treatments.
fn exact_upper_tail(doubled: &[Vec<i64>], observed: i64) -> StatsResult<f64> {
    let k = doubled[0].len();
    let mut states: HashMap<Vec<i64>, f64> = HashMap::from([(vec![0; k], 1.0)]);
    for block in doubled {
        let perms = distinct_permutations(block);
        let mut next: HashMap<Vec<i64>, f64> = HashMap::with_capacity(states.len() * perms.len());
        for (state, &count) in &states {
            for p in &perms {
                let mut s: Vec<i64> = state.iter().zip(p).map(|(a, b)| a + b).collect();
                s.sort_unstable();
                *next.entry(s).or_insert(0.0) += count;
            }
        }
        if next.len() > MAX_EXACT_STATES {
            return Err(StatsError::TooLarge(format!(
                "{} Friedman states",
                next.len()
            )));
        }
        states = next;
    }
    let total: f64 = states.values().sum();
    let tail: f64 = states
        .iter()
        .filter(|(s, _)| s.iter().map(|c| c * c).sum::<i64>() >= observed)
        .map(|(_, c)| c)
        .sum();
    Ok(tail / total)
}

/// Distinct orderings of `v`; each has the same multiplicity among all k! orderings.
fn distinct_permutations(v: &[i64]) -> Vec<Vec<i64>> {
    let mut cur = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

fn next_permutation(v: &mut [i64]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
