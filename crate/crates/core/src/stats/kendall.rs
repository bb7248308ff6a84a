use std::cmp::Ordering;

use super::ranks::tie_group_sizes;
use super::{check_finite, normal_two_sided, Method, StatTestResult, StatsError, StatsResult};

/// Pair classification counts for two paired samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including those also tied in y).
    pub tied_x: u64,
    /// Pairs tied in y (including those also tied in x).
    pub tied_y: u64,
    pub tied_both: u64,
}

impl PairCounts {
    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) / 2
    }
}

/// Concordant/discordant/tied pair counts in O(n log n) (Knight's method).
pub fn pair_counts(x: &[f64], y: &[f64]) -> StatsResult<PairCounts> {
    if x.len() != y.len() {
        return Err(StatsError::InsufficientData(format!(
            "samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let choose2 = |t: u64| t * t.saturating_sub(1) / 2;
    let mut tied_x = 0;
    let mut tied_both = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        tied_x += choose2((j - i) as u64);
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[order[b]] == y[order[a]] {
                b += 1;
            }
            tied_both += choose2((b - a) as u64);
            a = b;
        }
        i = j;
    }

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let discordant = count_inversions(&mut ys);
    let tied_y = tie_group_sizes(&ys)
        .into_iter()
        .map(|t| choose2(t as u64))
        .sum();

    let total = choose2(n as u64);
    let concordant = total + tied_both - tied_x - tied_y - discordant;
    Ok(PairCounts {
        n,
        concordant,
        discordant,
        tied_x,
        tied_y,
        tied_both,
    })
}

/// Merge sort `v` in place, returning the number of strict inversions.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i].total_cmp(&v[j]) == Ordering::Greater {
            merged.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    inv
}

/// Kendall's tau-b with the tie-corrected normal approximation for S = C - D.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> StatsResult<StatTestResult> {
    let counts = pair_counts(x, y)?;
    let n = counts.n;
    if n < 2 {
        return Err(StatsError::InsufficientData(format!(
            "Kendall's tau needs at least 2 complete pairs, got {n}"
        )));
    }
    let n0 = counts.total_pairs() as f64;
    let (n1, n2) = (counts.tied_x as f64, counts.tied_y as f64);
    if n0 - n1 <= 0.0 || n0 - n2 <= 0.0 {
        return Err(StatsError::Undefined(
            "association undefined: a variable is fully tied".into(),
        ));
    }
    let s = counts.concordant as f64 - counts.discordant as f64;
    let tau = s / ((n0 - n1) * (n0 - n2)).sqrt();

    let tx = tie_group_sizes(x);
    let ty = tie_group_sizes(y);
    let sum = |t: &[usize], f: fn(f64) -> f64| t.iter().map(|&v| f(v as f64)).sum::<f64>();
    let nf = n as f64;
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(&tx, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(&ty, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum(&tx, |t| t * (t - 1.0)) * sum(&ty, |t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
    let v2 = if n > 2 {
        sum(&tx, |t| t * (t - 1.0) * (t - 2.0)) * sum(&ty, |t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
    } else {
        0.0
    };
    let var = (v0 - vt - vu) / 18.0 + v1 + v2;
    let z = if var > 0.0 { s / var.sqrt() } else { 0.0 };
    let p = if var > 0.0 { normal_two_sided(z) } else { 1.0 };

    Ok(StatTestResult::new(Method::KendallTau, tau, n)
        .with_p(p)
        .extra("tau", tau)
        .extra("z", z)
        .extra("s", s)
        .extra("concordant", counts.concordant as f64)
        .extra("discordant", counts.discordant as f64))
}

/// Kendall's tau over pairs where both values are present.
pub fn kendall_tau_pairwise(x: &[Option<f64>], y: &[Option<f64>]) -> StatsResult<StatTestResult> {
    if x.len() != y.len() {
        return Err(StatsError::InsufficientData(format!(
            "samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let (a, b): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    kendall_tau(&a, &b)
}
