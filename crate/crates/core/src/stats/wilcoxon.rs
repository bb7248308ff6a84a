use super::ranks::{midranks, tie_cubes};
use super::{
    check_finite, normal_two_sided, Method, PMethod, StatTestResult, StatsError, StatsResult,
};

/// Largest number of non-zero differences for which the default p-value is exact.
pub const EXACT_MAX_N: usize = 20;
const EXACT_HARD_LIMIT: usize = 1000;

/// Two-sided signed rank test on paired differences.
///
/// Zero differences are dropped. With at most [`EXACT_MAX_N`] remaining the
/// p-value comes from the exact (conditional on ties) sign-flip distribution,
/// otherwise from the normal approximation with continuity correction and
/// tie-corrected variance. The statistic is W+, the rank sum of positive
/// differences.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> StatsResult<StatTestResult> {
    let effective = differences.iter().filter(|d| **d != 0.0).count();
    let method = if effective <= EXACT_MAX_N {
        PMethod::Exact
    } else {
        PMethod::Asymptotic
    };
    wilcoxon_signed_rank_with(differences, method)
}

pub fn wilcoxon_paired(x: &[f64], y: &[f64]) -> StatsResult<StatTestResult> {
    if x.len() != y.len() {
        return Err(StatsError::InsufficientData(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    wilcoxon_signed_rank(&d)
}

pub fn wilcoxon_signed_rank_with(
    differences: &[f64],
    method: PMethod,
) -> StatsResult<StatTestResult> {
    if differences.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_finite(differences)?;
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    let zeros = (differences.len() - n) as f64;
    if n == 0 {
        return Ok(StatTestResult::new(Method::WilcoxonSignedRank, 0.0, 0)
            .with_p(1.0)
            .extra("w_plus", 0.0)
            .extra("w_minus", 0.0)
            .extra("z", 0.0)
            .extra("zeros", zeros)
            .extra("degenerate", 1.0));
    }

    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs)?;
    let w_plus: f64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, d)| **d > 0.0)
        .fold(0.0, |acc, (r, _)| acc + r);
    let nf = n as f64;
    let total = nf * (nf + 1.0) / 2.0;
    let w_minus = total - w_plus;

    let mean = total / 2.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_cubes(&abs) / 48.0;
    let diff = w_plus - mean;
    let z = if var > 0.0 {
        (diff.abs() - 0.5).max(0.0).copysign(diff) / var.sqrt()
    } else {
        0.0
    };

    let result = StatTestResult::new(Method::WilcoxonSignedRank, w_plus, n)
        .extra("w_plus", w_plus)
        .extra("w_minus", w_minus)
        .extra("z", z)
        .extra("zeros", zeros);
    Ok(match method {
        PMethod::Asymptotic => {
            let p = if var > 0.0 { normal_two_sided(z) } else { 1.0 };
            result.with_p(p).extra("exact", 0.0)
        }
        PMethod::Exact => {
            if n > EXACT_HARD_LIMIT {
                return Err(StatsError::TooLarge(format!("{n} signed ranks")));
            }
            let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
            let observed = (2.0 * w_plus).round() as usize;
            result.with_p(exact_two_sided(&doubled, observed)).extra("exact", 1.0)
        }
    })
}

/// Two-sided p of the sign-flip distribution of the positive rank sum.
fn exact_two_sided(doubled: &[usize], observed: usize) -> f64 {
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &a in doubled {
        reach += a;
        for s in (a..=reach).rev() {
            counts[s] += counts[s - a];
        }
    }
    let total: f64 = counts.iter().sum();
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / total;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}
