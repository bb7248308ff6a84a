//! Nonparametric statistics kernel.
//!
//! All rank tests share [`midranks`] for tie handling. Tests with a
//! chi-square or normal reference distribution report asymptotic p-values by
//! default; Friedman, Kruskal-Wallis and Wilcoxon can also compute the exact
//! permutation distribution for small samples ([`PMethod::Exact`]).
//!
//! Fully tied inputs produce a "no effect" result (statistic 0, p = 1, or
//! alpha = 1) rather than an error so that batch analyses over many survey
//! questions keep going.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

mod friedman;
mod kendall;
mod krippendorff;
mod kruskal;
mod ranks;
mod wilcoxon;

pub use friedman::{friedman_test, friedman_test_with};
pub use kendall::{kendall_tau, kendall_tau_pairwise, pair_counts, PairCounts};
pub use krippendorff::{krippendorff_alpha, krippendorff_alpha_with, DifferenceMetric};
pub use kruskal::{dunn_test, kruskal_wallis, kruskal_wallis_with};
pub use ranks::{midranks, tie_group_sizes};
pub use wilcoxon::{wilcoxon_paired, wilcoxon_signed_rank, wilcoxon_signed_rank_with, EXACT_MAX_N};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("statistic undefined: {0}")]
    Undefined(String),
    #[error("exact distribution too large to enumerate: {0}")]
    TooLarge(String),
}

pub type StatsResult<T> = Result<T, StatsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Friedman,
    WilcoxonSignedRank,
    KruskalWallis,
    Dunn,
    KendallTau,
    KrippendorffAlpha,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Friedman => "Friedman rank sum",
            Method::WilcoxonSignedRank => "Wilcoxon signed rank",
            Method::KruskalWallis => "Kruskal-Wallis rank sum",
            Method::Dunn => "Dunn",
            Method::KendallTau => "Kendall tau-b",
            Method::KrippendorffAlpha => "Krippendorff alpha",
        };
        f.write_str(s)
    }
}

/// How a p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PMethod {
    #[default]
    Asymptotic,
    /// Full permutation distribution; fails with [`StatsError::TooLarge`] if infeasible.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub method: Method,
    pub statistic: f64,
    /// Present exactly when the reference distribution is chi-square.
    pub df: Option<u32>,
    /// Absent for Krippendorff's alpha.
    pub p_value: Option<f64>,
    /// Observations that entered the computation.
    pub n: usize,
    pub extras: BTreeMap<String, f64>,
}

impl StatTestResult {
    pub(crate) fn new(method: Method, statistic: f64, n: usize) -> Self {
        StatTestResult {
            method,
            statistic,
            df: None,
            p_value: None,
            n,
            extras: BTreeMap::new(),
        }
    }

    pub(crate) fn with_df(mut self, df: u32) -> Self {
        self.df = Some(df);
        self
    }

    pub(crate) fn with_p(mut self, p: f64) -> Self {
        self.p_value = Some(p.clamp(0.0, 1.0));
        self
    }

    pub(crate) fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }

    pub fn p(&self) -> f64 {
        self.p_value.unwrap_or(1.0)
    }

    pub fn is_significant(&self, level: f64) -> bool {
        self.p_value.is_some_and(|p| p < level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub group_a: String,
    pub group_b: String,
    pub z: f64,
    pub p_unadjusted: f64,
    pub p_adjusted: f64,
}

/// Bonferroni adjustment: `min(1, m * p)` for each input.
pub fn bonferroni(p_values: &[f64], m: usize) -> Vec<f64> {
    let m = m.max(1) as f64;
    p_values.iter().map(|p| (p * m).min(1.0)).collect()
}

pub(crate) fn chi_square_sf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64)
        .map(|d| d.sf(x))
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0)
}

pub(crate) fn normal_two_sided(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

pub(crate) fn check_finite(values: &[f64]) -> StatsResult<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
