//! One-way ANOVA and Tukey–Kramer HSD post-hoc comparisons.

use serde::Serialize;

use super::distributions::{f_sf, studentized_range_critical, studentized_range_sf};
use super::{mean, sample_sd, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for single-observation groups.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ms_between: f64,
    pub ms_within: f64,
    pub groups: Vec<GroupSummary>,
}

pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    if let Some(empty) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(StatsError::EmptyGroup(empty));
    }
    if groups
        .iter()
        .flat_map(|g| g.as_ref())
        .any(|v| !v.is_finite())
    {
        return Err(StatsError::InvalidParameter(
            "non-finite value in ANOVA input".into(),
        ));
    }
    let total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if total <= k {
        return Err(StatsError::TooFewObservations {
            needed: k + 1,
            got: total,
        });
    }

    let summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            GroupSummary {
                n: g.len(),
                mean: mean(g),
                sd: sample_sd(g),
            }
        })
        .collect();
    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / total as f64;
    let ss_between: f64 = summaries
        .iter()
        .map(|s| s.n as f64 * (s.mean - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&summaries)
        .map(|(g, s)| g.as_ref().iter().map(|v| (v - s.mean).powi(2)).sum::<f64>())
        .sum();
    let scale = groups
        .iter()
        .flat_map(|g| g.as_ref())
        .map(|v| (v - grand).powi(2))
        .sum::<f64>();
    if ss_within <= 1e-24 * scale.max(f64::MIN_POSITIVE) || ss_within == 0.0 {
        return Err(StatsError::ZeroWithinVariance);
    }

    let df_between = k - 1;
    let df_within = total - k;
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let f_stat = ms_between / ms_within;
    let p_value = f_sf(f_stat, df_between as f64, df_within as f64)?;
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value,
        ss_between,
        ss_within,
        ms_between,
        ms_within,
        groups: summaries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub group_a: usize,
    pub group_b: usize,
    /// `mean_a - mean_b`.
    pub mean_diff: f64,
    pub q_stat: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyResult {
    pub alpha: f64,
    pub k: usize,
    pub df_within: usize,
    pub ms_within: f64,
    /// Studentized-range critical value at `alpha`.
    pub q_critical: f64,
    pub comparisons: Vec<PairwiseComparison>,
}

/// All-pairs Tukey–Kramer comparisons using the pooled within-group variance.
pub fn tukey_hsd<G: AsRef<[f64]>>(groups: &[G], alpha: f64) -> Result<TukeyResult, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let anova = one_way_anova(groups)?;
    tukey_from_anova(&anova, alpha)
}

pub fn tukey_from_anova(anova: &AnovaResult, alpha: f64) -> Result<TukeyResult, StatsError> {
    let k = anova.groups.len();
    let df = anova.df_within as f64;
    let mut comparisons = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            let (ga, gb) = (&anova.groups[a], &anova.groups[b]);
            let mean_diff = ga.mean - gb.mean;
            let se = (anova.ms_within / 2.0 * (1.0 / ga.n as f64 + 1.0 / gb.n as f64)).sqrt();
            let q_stat = mean_diff.abs() / se;
            let p_adjusted = studentized_range_sf(q_stat, k, df)?;
            comparisons.push(PairwiseComparison {
                group_a: a,
                group_b: b,
                mean_diff,
                q_stat,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
    Ok(TukeyResult {
        alpha,
        k,
        df_within: anova.df_within,
        ms_within: anova.ms_within,
        q_critical: studentized_range_critical(alpha, k, df)?,
        comparisons,
    })
}
