use serde::{Deserialize, Serialize};

use super::{Method, StatTestResult, StatsError, StatsResult};

/// Difference function used to weigh disagreements between two values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifferenceMetric {
    Nominal,
    #[default]
    Ordinal,
    Interval,
}

/// Krippendorff's alpha with the ordinal metric.
///
/// Each unit is the list of ratings it received, `None` for raters that did not
/// rate it. Units with fewer than two ratings carry no pairable values and are
/// skipped.
pub fn krippendorff_alpha(units: &[Vec<Option<f64>>]) -> StatsResult<StatTestResult> {
    krippendorff_alpha_with(units, DifferenceMetric::Ordinal)
}

pub fn krippendorff_alpha_with(
    units: &[Vec<Option<f64>>],
    metric: DifferenceMetric,
) -> StatsResult<StatTestResult> {
    let rated: Vec<Vec<f64>> = units
        .iter()
        .map(|u| u.iter().flatten().copied().collect::<Vec<f64>>())
        .filter(|u| u.len() >= 2)
        .collect();
    if rated.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let mut values: Vec<f64> = rated.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let index = |v: f64| values.partition_point(|x| *x < v);

    let m = values.len();
    let mut coincidence = vec![vec![0.0f64; m]; m];
    for unit in &rated {
        let w = 1.0 / (unit.len() - 1) as f64;
        for (i, &a) in unit.iter().enumerate() {
            for (j, &b) in unit.iter().enumerate() {
                if i != j {
                    coincidence[index(a)][index(b)] += w;
                }
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if n < 2.0 {
        return Err(StatsError::Undefined(format!(
            "alpha needs at least 2 pairable values, got {n}"
        )));
    }

    let delta = |c: usize, k: usize| -> f64 {
        if c == k {
            return 0.0;
        }
        match metric {
            DifferenceMetric::Nominal => 1.0,
            DifferenceMetric::Interval => (values[c] - values[k]).powi(2),
            DifferenceMetric::Ordinal => {
                let (lo, hi) = (c.min(k), c.max(k));
                let span: f64 = marginals[lo..=hi].iter().sum();
                (span - (marginals[lo] + marginals[hi]) / 2.0).powi(2)
            }
        }
    };

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..m {
        for k in 0..m {
            let d = delta(c, k);
            observed += coincidence[c][k] * d;
            expected += marginals[c] * marginals[k] * d;
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    let alpha = if d_e <= 0.0 { 1.0 } else { 1.0 - d_o / d_e };

    Ok(
        StatTestResult::new(Method::KrippendorffAlpha, alpha, n.round() as usize)
            .extra("alpha", alpha)
            .extra("d_o", d_o)
            .extra("d_e", d_e)
            .extra("pairable", n)
            .extra("units", rated.len() as f64),
    )
}
