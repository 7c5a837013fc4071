//! Spearman rank correlation with average-rank tie handling.

use serde::Serialize;

use super::distributions::student_t_sf;
use super::StatsError;

pub const MIN_PAIRS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub n: usize,
    pub df: usize,
    pub t_stat: f64,
    pub p_two_sided: f64,
    /// One-sided p in the direction of the observed correlation.
    pub p_one_sided: f64,
}

impl SpearmanResult {
    /// One-sided p for a hypothesised sign (`true` = positive association).
    pub fn p_one_sided_for(&self, positive: bool) -> f64 {
        if (self.rho >= 0.0) == positive {
            self.p_one_sided
        } else {
            1.0 - self.p_one_sided
        }
    }
}

/// Ranks 1..n; tied values share the mean of the positions they occupy.
pub fn rank_average_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their average
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < MIN_PAIRS {
        return Err(StatsError::TooFewObservations {
            needed: MIN_PAIRS,
            got: n,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidParameter(
            "non-finite value in correlation input".into(),
        ));
    }
    let (rx, ry) = (rank_average_ties(x), rank_average_ties(y));
    let rho = pearson(&rx, &ry).ok_or_else(|| {
        let which = if rx.iter().all(|&r| r == rx[0]) {
            "x"
        } else {
            "y"
        };
        StatsError::ConstantInput(which.into())
    })?;
    let df = n - 2;
    let t_stat = if rho.abs() >= 1.0 {
        rho.signum() * f64::INFINITY
    } else {
        rho * (df as f64 / (1.0 - rho * rho)).sqrt()
    };
    let upper = student_t_sf(t_stat.abs(), df as f64)?;
    Ok(SpearmanResult {
        rho,
        n,
        df,
        t_stat,
        p_two_sided: (2.0 * upper).min(1.0),
        p_one_sided: upper,
    })
}

/// Spearman over the pairs where both values are present.
pub fn spearman_pairwise(
    x: &[Option<f64>],
    y: &[Option<f64>],
) -> Result<SpearmanResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    spearman(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank_average_ties(&[10.0, 20.0, 30.0]), [1.0, 2.0, 3.0]);
        assert_eq!(rank_average_ties(&[5.0, 5.0]), [1.5, 1.5]);
        assert_eq!(
            rank_average_ties(&[3.0, 1.0, 3.0, 2.0]),
            [3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn perfect_monotone() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = spearman(&x, &x).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.p_two_sided, 0.0);
        let down: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        assert_eq!(spearman(&x, &down).unwrap().rho, -1.0);
    }

    #[test]
    fn moderate_correlation_p_values() {
        // rho = 0.22 with 62 pairs, computed through the t route
        let rho: f64 = 0.22;
        let t = rho * (60.0 / (1.0 - rho * rho)).sqrt();
        assert!((t - 1.7469122462117812).abs() < 1e-12);
        let one = student_t_sf(t, 60.0).unwrap();
        assert!((one - 0.042884839071108245).abs() < 1e-10);
        assert!((2.0 * one - 0.08576967814221649).abs() < 1e-10);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::TooFewObservations { needed: 4, got: 3 })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0, 3.0, 4.0]),
            Err(StatsError::ConstantInput(_))
        ));
        assert!(spearman(&[1.0; 4], &[1.0; 5]).is_err());
    }

    #[test]
    fn pairwise_deletion() {
        let x = [Some(1.0), None, Some(3.0), Some(4.0), Some(5.0), Some(2.0)];
        let y = [Some(2.0), Some(9.0), None, Some(8.0), Some(10.0), Some(4.0)];
        let r = spearman_pairwise(&x, &y).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.rho, 1.0);
    }

    #[test]
    fn one_sided_direction() {
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!(r.rho > 0.0);
        assert!((r.p_one_sided - r.p_two_sided / 2.0).abs() < 1e-15);
        assert_eq!(r.p_one_sided_for(true), r.p_one_sided);
        assert!((r.p_one_sided_for(false) - (1.0 - r.p_one_sided)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_maps(
            pairs in prop::collection::vec((-50i32..50, -50i32..50), 5..40),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let Ok(base) = spearman(&x, &y) else { return Ok(()); };
            let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            let gy: Vec<f64> = y.iter().map(|v| (v / 10.0).exp()).collect();
            let mapped = spearman(&fx, &gy).unwrap();
            prop_assert!((base.rho - mapped.rho).abs() < 1e-12);
            prop_assert!(base.rho.abs() <= 1.0);
            prop_assert!((0.0..=1.0).contains(&base.p_two_sided));
        }
    }
}
