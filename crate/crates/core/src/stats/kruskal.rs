use super::ranks::{midranks, tie_cubes};
use super::{
    bonferroni, chi_square_sf, normal_two_sided, Method, PMethod, PairwiseResult,
    StatTestResult, StatsError, StatsResult,
};

const MAX_EXACT_ASSIGNMENTS: f64 = 5e6;

/// Kruskal-Wallis H test with tie correction and asymptotic chi-square p.
pub fn kruskal_wallis(groups: &[&[f64]]) -> StatsResult<StatTestResult> {
    kruskal_wallis_with(groups, PMethod::Asymptotic)
}

pub fn kruskal_wallis_with(groups: &[&[f64]], method: PMethod) -> StatsResult<StatTestResult> {
    let pooled = pooled_ranks(groups)?;
    let big_n = pooled.values.len() as f64;
    let df = (groups.len() - 1) as u32;
    let correction = 1.0 - tie_cubes(&pooled.values) / (big_n.powi(3) - big_n);
    let base = StatTestResult::new(Method::KruskalWallis, 0.0, pooled.values.len())
        .with_df(df)
        .extra("groups", groups.len() as f64);
    if correction <= 1e-12 {
        return Ok(base.with_p(1.0).extra("degenerate", 1.0));
    }
    let weighted = weighted_square_sum(&pooled.rank_sums, &pooled.sizes);
    let h_raw = 12.0 / (big_n * (big_n + 1.0)) * weighted - 3.0 * (big_n + 1.0);
    let h = (h_raw / correction).max(0.0);
    let p_asym = chi_square_sf(h, df);
    let result = StatTestResult {
        statistic: h,
        ..base
    }
    .extra("h_uncorrected", h_raw.max(0.0))
    .extra("tie_correction", correction);
    Ok(match method {
        PMethod::Asymptotic => result.with_p(p_asym),
        PMethod::Exact => {
            let p = exact_upper_tail(&pooled.ranks, &pooled.sizes, weighted)?;
            result.with_p(p).extra("p_asymptotic", p_asym)
        }
    })
}

/// Dunn's pairwise rank-mean comparisons with Bonferroni adjustment over all pairs.
///
/// `z` is positive when the first group of a pair has the higher mean rank.
pub fn dunn_test<S: AsRef<str>>(labels: &[S], groups: &[&[f64]]) -> StatsResult<Vec<PairwiseResult>> {
    if labels.len() != groups.len() {
        return Err(StatsError::InsufficientData(
            "one label per group is required".into(),
        ));
    }
    let pooled = pooled_ranks(groups)?;
    let big_n = pooled.values.len() as f64;
    let variance = big_n * (big_n + 1.0) / 12.0 - tie_cubes(&pooled.values) / (12.0 * (big_n - 1.0));
    let means: Vec<f64> = pooled
        .rank_sums
        .iter()
        .zip(&pooled.sizes)
        .map(|(r, n)| r / *n as f64)
        .collect();

    let mut pairs = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let se = (variance * (1.0 / pooled.sizes[i] as f64 + 1.0 / pooled.sizes[j] as f64))
                .max(0.0)
                .sqrt();
            let z = if se > 0.0 { (means[i] - means[j]) / se } else { 0.0 };
            pairs.push((i, j, z, if se > 0.0 { normal_two_sided(z) } else { 1.0 }));
        }
    }
    let raw: Vec<f64> = pairs.iter().map(|p| p.3).collect();
    let adjusted = bonferroni(&raw, pairs.len());
    Ok(pairs
        .into_iter()
        .zip(adjusted)
        .map(|((i, j, z, p), adj)| PairwiseResult {
            group_a: labels[i].as_ref().to_string(),
            group_b: labels[j].as_ref().to_string(),
            z,
            p_unadjusted: p,
            p_adjusted: adj,
        })
        .collect())
}

struct Pooled {
    values: Vec<f64>,
    ranks: Vec<f64>,
    sizes: Vec<usize>,
    rank_sums: Vec<f64>,
}

fn pooled_ranks(groups: &[&[f64]]) -> StatsResult<Pooled> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "rank sum comparison needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::InsufficientData(format!("group {} is empty", i + 1)));
    }
    let values: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let ranks = midranks(&values)?;
    let sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut rank_sums = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for &n in &sizes {
        rank_sums.push(ranks[offset..offset + n].iter().sum());
        offset += n;
    }
    Ok(Pooled {
        values,
        ranks,
        sizes,
        rank_sums,
    })
}

fn weighted_square_sum(rank_sums: &[f64], sizes: &[usize]) -> f64 {
    rank_sums
        .iter()
        .zip(sizes)
        .map(|(r, n)| r * r / *n as f64)
        .sum()
}

/// Enumerate every distinct assignment of the pooled ranks to groups of the
/// observed sizes; H is increasing in `sum R_i^2 / n_i` for fixed ties.
fn exact_upper_tail(ranks: &[f64], sizes: &[usize], observed: f64) -> StatsResult<f64> {
    let total = multinomial(sizes);
    if total > MAX_EXACT_ASSIGNMENTS {
        return Err(StatsError::TooLarge(format!("{total:.0} group assignments")));
    }
    struct Walk<'a> {
        ranks: &'a [f64],
        sizes: &'a [usize],
        remaining: Vec<usize>,
        sums: Vec<f64>,
        threshold: f64,
        hits: u64,
        leaves: u64,
    }
    fn go(w: &mut Walk<'_>, pos: usize) {
        if pos == w.ranks.len() {
            w.leaves += 1;
            if weighted_square_sum(&w.sums, w.sizes) >= w.threshold {
                w.hits += 1;
            }
            return;
        }
        for g in 0..w.sizes.len() {
            if w.remaining[g] == 0 {
                continue;
            }
            w.remaining[g] -= 1;
            w.sums[g] += w.ranks[pos];
            go(w, pos + 1);
            w.sums[g] -= w.ranks[pos];
            w.remaining[g] += 1;
        }
    }
    let mut walk = Walk {
        ranks,
        sizes,
        remaining: sizes.to_vec(),
        sums: vec![0.0; sizes.len()],
        threshold: observed - 1e-9 * observed.abs().max(1.0),
        hits: 0,
        leaves: 0,
    };
    go(&mut walk, 0);
    Ok(walk.hits as f64 / walk.leaves as f64)
}

fn multinomial(sizes: &[usize]) -> f64 {
    let ln_fact = |n: usize| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    let n: usize = sizes.iter().sum();
    (ln_fact(n) - sizes.iter().map(|&s| ln_fact(s)).sum::<f64>()).exp()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn two_pairs() {
        let r = kruskal_wallis(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 2.4, epsilon = 1e-12);
        assert_eq!(r.df, Some(1));
        assert_abs_diff_eq!(r.p(), 0.121335, epsilon = 1e-6);
    }

    #[test]
    fn exact_two_pairs() {
        // 6 assignments; only {1,2}|{3,4} and {3,4}|{1,2} reach H = 2.4
        let r = kruskal_wallis_with(&[&[1.0, 2.0], &[3.0, 4.0]], PMethod::Exact).unwrap();
        assert_abs_diff_eq!(r.p(), 2.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_groups() {
        let r = kruskal_wallis(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_pool_is_degenerate() {
        let r = kruskal_wallis(&[&[2.0, 2.0], &[2.0]]).unwrap();
        assert_eq!((r.statistic, r.p()), (0.0, 1.0));
    }

    #[test]
    fn needs_two_nonempty_groups() {
        assert!(kruskal_wallis(&[&[1.0, 2.0]]).is_err());
        assert!(kruskal_wallis(&[&[1.0], &[]]).is_err());
        assert!(dunn_test(&["a", "b"], &[&[1.0], &[]]).is_err());
    }

    #[test]
    fn dunn_symmetry() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = dunn_test(&["x", "y"], &[&a, &a]).unwrap();
        assert_eq!(r.len(), 1);
        assert_abs_diff_eq!(r[0].z, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].p_adjusted, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dunn_antisymmetry() {
        let a = [1.0, 2.0, 2.0, 5.0];
        let b = [3.0, 4.0, 6.0, 6.0, 7.0];
        let ab = dunn_test(&["a", "b"], &[&a, &b]).unwrap();
        let ba = dunn_test(&["b", "a"], &[&b, &a]).unwrap();
        assert_abs_diff_eq!(ab[0].z, -ba[0].z, epsilon = 1e-12);
        assert_abs_diff_eq!(ab[0].p_adjusted, ba[0].p_adjusted, epsilon = 1e-12);
    }

    #[test]
    fn dunn_hand_value() {
        // N = 6, no ties: var = 6*7/12 = 3.5; mean ranks 2 and 5, n = 3 each
        let r = dunn_test(&["lo", "hi"], &[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let z = (2.0 - 5.0) / (3.5f64 * (2.0 / 3.0)).sqrt();
        assert_abs_diff_eq!(r[0].z, z, epsilon = 1e-12);
        assert!(r[0].p_adjusted >= r[0].p_unadjusted);
    }

    #[test]
    fn dunn_bonferroni_over_three_pairs() {
        let g: [&[f64]; 3] = [&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]];
        let r = dunn_test(&["a", "b", "c"], &g).unwrap();
        assert_eq!(r.len(), 3);
        for p in &r {
            assert_abs_diff_eq!(p.p_adjusted, (3.0 * p.p_unadjusted).min(1.0), epsilon = 1e-15);
        }
    }
}
