//! Statistical engine: rank correlation, one-way ANOVA with Tukey HSD, and
//! hierarchical OLS regression with forward stepwise entry.

use thiserror::Error;

pub mod anova;
pub mod correlation;
pub mod distributions;
pub mod quadrature;
pub mod regression;

pub use anova::{
    one_way_anova, tukey_hsd, AnovaResult, GroupSummary, PairwiseComparison, TukeyResult,
};
pub use correlation::{rank_average_ties, spearman, spearman_pairwise, SpearmanResult};
pub use distributions::{f_sf, student_t_sf, studentized_range_critical, studentized_range_sf};
pub use regression::{
    hierarchical_regression, ols, stepwise_select, Coefficient, DeltaStats, HlrResult, OlsFit,
    StepwiseEntry, Variable,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} complete observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("'{0}' has no variance")]
    ConstantInput(String),
    #[error("at least 2 groups are required, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("within-group variance is zero")]
    ZeroWithinVariance,
    #[error("design matrix is rank deficient: collinear columns {}", .0.join(", "))]
    RankDeficient(Vec<String>),
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation with divisor `n`.
pub(crate) fn population_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Standard deviation with divisor `n - 1`; `None` for fewer than 2 values.
pub(crate) fn sample_sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    Some((values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt())
}

/// Significance marker: `**` below `alpha / 5`, `*` below `alpha`.
pub fn stars(p: f64, alpha: f64) -> &'static str {
    if p < alpha / 5.0 {
        "**"
    } else if p < alpha {
        "*"
    } else {
        ""
    }
}
