//! Ordinary least squares, two-block hierarchical regression and forward
//! stepwise entry.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::distributions::{f_sf, student_t_sf};
use super::{population_sd, StatsError};

/// Relative residual norm below which a column counts as a linear combination
/// of the columns before it.
const COLLINEAR_TOL: f64 = 1e-9;

/// A named column with possibly missing values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn complete(name: impl Into<String>, values: &[f64]) -> Self {
        Self::new(name, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub b: f64,
    /// Standardized coefficient; absent for the intercept.
    pub beta: Option<f64>,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub n: usize,
    pub intercept: Coefficient,
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Overall F test; absent for an intercept-only model.
    pub f_stat: Option<f64>,
    pub f_p: Option<f64>,
    pub df_model: usize,
    pub df_resid: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// Names the first column that is (numerically) a linear combination of the
/// intercept and earlier columns, together with the columns it depends on.
fn check_rank(predictors: &[(&str, &[f64])]) -> Result<(), StatsError> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for (j, (name, col)) in predictors.iter().enumerate() {
        let c = centered(col);
        let scale = norm(col).max(f64::MIN_POSITIVE);
        let mut r = c.clone();
        for q in &basis {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let rn = norm(&r);
        if rn <= COLLINEAR_TOL * scale {
            let mut involved = culprits(&c, predictors, &kept);
            if involved.is_empty() {
                involved.push("(intercept)".to_string());
            }
            involved.push((*name).to_string());
            return Err(StatsError::RankDeficient(involved));
        }
        basis.push(r.iter().map(|x| x / rn).collect());
        kept.push(j);
    }
    Ok(())
}

/// Earlier columns with a non-negligible weight when `target` is regressed on them.
fn culprits(target: &[f64], predictors: &[(&str, &[f64])], kept: &[usize]) -> Vec<String> {
    if kept.is_empty() || norm(target) == 0.0 {
        return Vec::new();
    }
    let cols: Vec<Vec<f64>> = kept.iter().map(|&k| centered(predictors[k].1)).collect();
    let x = DMatrix::from_fn(target.len(), cols.len(), |i, j| cols[j][i]);
    let qr = x.qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(target);
    let Some(w) = qr.r().solve_upper_triangular(&qty) else {
        return Vec::new();
    };
    let tn = norm(target);
    kept.iter()
        .zip(&cols)
        .zip(w.iter())
        .filter(|((_, c), wk)| (**wk * norm(c)).abs() > 1e-6 * tn)
        .map(|((&k, _), _)| predictors[k].0.to_string())
        .collect()
}

/// Least-squares fit of `y` on an intercept plus `predictors`.
pub fn ols(y: &[f64], predictors: &[(&str, &[f64])]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    let p = predictors.len();
    for (_, col) in predictors {
        if col.len() != n {
            return Err(StatsError::LengthMismatch(n, col.len()));
        }
    }
    if n < p + 2 {
        return Err(StatsError::TooFewObservations {
            needed: p + 2,
            got: n,
        });
    }
    if y.iter()
        .chain(predictors.iter().flat_map(|(_, c)| c.iter()))
        .any(|v| !v.is_finite())
    {
        return Err(StatsError::InvalidParameter(
            "non-finite value in regression input".into(),
        ));
    }
    let sd_y = population_sd(y);
    if sd_y == 0.0 {
        return Err(StatsError::ConstantInput("dependent variable".into()));
    }
    check_rank(predictors)?;

    let x = DMatrix::from_fn(
        n,
        p + 1,
        |i, j| if j == 0 { 1.0 } else { predictors[j - 1].1[i] },
    );
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let coef = r.solve_upper_triangular(&qty).ok_or_else(|| {
        StatsError::RankDeficient(predictors.iter().map(|(n, _)| n.to_string()).collect())
    })?;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(p + 1, p + 1))
        .ok_or_else(|| {
            StatsError::RankDeficient(predictors.iter().map(|(n, _)| n.to_string()).collect())
        })?;
    let xtx_inv = &rinv * rinv.transpose();

    let fitted = &x * &coef;
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let my = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let df_resid = n - p - 1;
    let sigma2 = sse / df_resid as f64;
    let r_squared = (1.0 - sse / sst).clamp(0.0, 1.0);
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df_resid as f64;

    let make = |j: usize, name: &str, beta: Option<f64>| -> Result<Coefficient, StatsError> {
        let b = coef[j];
        let se = (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt();
        let t = if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        let p = (2.0 * student_t_sf(t.abs(), df_resid as f64)?).min(1.0);
        Ok(Coefficient {
            name: name.to_string(),
            b,
            beta,
            se,
            t,
            p,
        })
    };
    let intercept = make(0, "(intercept)", None)?;
    let coefficients = predictors
        .iter()
        .enumerate()
        .map(|(k, (name, col))| {
            let beta = Some(coef[k + 1] * population_sd(col) / sd_y);
            make(k + 1, name, beta)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (f_stat, f_p) = if p == 0 {
        (None, None)
    } else {
        let f = if sse == 0.0 {
            f64::INFINITY
        } else {
            (r_squared / p as f64) / ((1.0 - r_squared) / df_resid as f64)
        };
        (Some(f), Some(f_sf(f, p as f64, df_resid as f64)?))
    };

    Ok(OlsFit {
        n,
        intercept,
        coefficients,
        r_squared,
        adj_r_squared,
        f_stat,
        f_p,
        df_model: p,
        df_resid,
        residuals,
    })
}

/// Row indices where every listed variable is present.
pub fn complete_rows(vars: &[&Variable]) -> Result<Vec<usize>, StatsError> {
    let n = vars.first().map_or(0, |v| v.len());
    if let Some(bad) = vars.iter().find(|v| v.len() != n) {
        return Err(StatsError::LengthMismatch(n, bad.len()));
    }
    Ok((0..n)
        .filter(|&i| vars.iter().all(|v| v.values[i].is_some()))
        .collect())
}

/// Fits `y` on `predictors` using the given rows only.
pub fn ols_rows(
    y: &Variable,
    predictors: &[&Variable],
    rows: &[usize],
) -> Result<OlsFit, StatsError> {
    let pick = |v: &Variable| -> Vec<f64> {
        rows.iter()
            .map(|&i| v.values[i].unwrap_or(f64::NAN))
            .collect()
    };
    let yv = pick(y);
    let cols: Vec<Vec<f64>> = predictors.iter().map(|v| pick(v)).collect();
    let named: Vec<(&str, &[f64])> = predictors
        .iter()
        .zip(&cols)
        .map(|(v, c)| (v.name.as_str(), c.as_slice()))
        .collect();
    ols(&yv, &named)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaStats {
    pub r_squared: f64,
    /// F for the R² change; absent when the second block is empty.
    pub f: Option<f64>,
    pub df1: usize,
    pub df2: usize,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HlrResult {
    pub n_used: usize,
    pub m1: OlsFit,
    pub m2: OlsFit,
    pub delta: DeltaStats,
}

/// Fits `y ~ block1` and `y ~ block1 + block2` on the same listwise-complete rows.
pub fn hierarchical_regression(
    y: &Variable,
    block1: &[Variable],
    block2: &[Variable],
) -> Result<HlrResult, StatsError> {
    let mut all: Vec<&Variable> = vec![y];
    all.extend(block1);
    all.extend(block2);
    let rows = complete_rows(&all)?;
    let first: Vec<&Variable> = block1.iter().collect();
    let both: Vec<&Variable> = block1.iter().chain(block2).collect();
    let m1 = ols_rows(y, &first, &rows)?;
    let m2 = ols_rows(y, &both, &rows)?;

    let df1 = block2.len();
    let df2 = m2.df_resid;
    let dr2 = (m2.r_squared - m1.r_squared).max(0.0);
    let (f, p) = if df1 == 0 {
        (None, None)
    } else {
        let f = if m2.r_squared >= 1.0 {
            f64::INFINITY
        } else {
            (dr2 / df1 as f64) / ((1.0 - m2.r_squared) / df2 as f64)
        };
        (Some(f), Some(f_sf(f, df1 as f64, df2 as f64)?))
    };
    Ok(HlrResult {
        n_used: rows.len(),
        m1,
        m2,
        delta: DeltaStats {
            r_squared: dr2,
            f,
            df1,
            df2,
            p,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseEntry {
    pub name: String,
    /// p of the entering coefficient at the step it entered.
    pub p_value: f64,
}

/// Forward selection: at each step the remaining candidate with the smallest
/// coefficient p (given `base` and the already selected ones) enters, as long
/// as that p is below `entry_p`. Ties go to the earlier candidate. Candidates
/// whose model cannot be fitted at a step are passed over for that step.
pub fn stepwise_select(
    y: &Variable,
    candidates: &[Variable],
    base: &[Variable],
    entry_p: f64,
) -> Result<Vec<StepwiseEntry>, StatsError> {
    if !(entry_p > 0.0 && entry_p <= 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "entry p must lie in (0, 1], got {entry_p}"
        )));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut entries = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (c, cand) in candidates.iter().enumerate() {
            if selected.contains(&c) {
                continue;
            }
            let mut preds: Vec<&Variable> = base.iter().collect();
            preds.extend(selected.iter().map(|&s| &candidates[s]));
            preds.push(cand);
            let mut all = vec![y];
            all.extend(&preds);
            let rows = complete_rows(&all)?;
            let fit = match ols_rows(y, &preds, &rows) {
                Ok(fit) => fit,
                Err(StatsError::LengthMismatch(a, b)) => {
                    return Err(StatsError::LengthMismatch(a, b))
                }
                Err(e) => {
                    log::debug!("stepwise: skipping {} ({e})", cand.name);
                    continue;
                }
            };
            let p = fit.coefficients.last().map_or(1.0, |c| c.p);
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some((c, p));
            }
        }
        match best {
            Some((c, p)) if p < entry_p => {
                selected.push(c);
                entries.push(StepwiseEntry {
                    name: candidates[c].name.clone(),
                    p_value: p,
                });
            }
            _ => break,
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wave(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (i as f64 * a + b).sin() * 3.0 + i as f64 * 0.1)
            .collect()
    }

    #[test]
    fn simple_regression_closed_form() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 4.1, 5.9, 8.2, 9.8];
        let fit = ols(&y, &[("x", &x)]).unwrap();
        // Sxy = 19.7, Sxx = 10
        let slope = 1.97;
        let icpt = 6.0 - slope * 3.0;
        assert!((fit.coefficients[0].b - slope).abs() < 1e-12);
        assert!((fit.intercept.b - icpt).abs() < 1e-12);
        let sse: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - icpt - slope * a).powi(2))
            .sum();
        let se = (sse / 3.0 / 10.0).sqrt();
        assert!((fit.coefficients[0].se - se).abs() < 1e-12);
        assert_eq!((fit.df_model, fit.df_resid), (1, 3));
        // with one predictor, beta is the Pearson correlation and F = t^2
        let r = fit.r_squared.sqrt();
        assert!((fit.coefficients[0].beta.unwrap() - r).abs() < 1e-12);
        let t = fit.coefficients[0].t;
        assert!((fit.f_stat.unwrap() - t * t).abs() < 1e-8 * t * t);
        assert!((fit.f_p.unwrap() - fit.coefficients[0].p).abs() < 1e-12);
    }

    #[test]
    fn intercept_only_model() {
        let fit = ols(&[1.0, 2.0, 6.0], &[]).unwrap();
        assert!((fit.intercept.b - 3.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 0.0);
        assert_eq!(fit.f_stat, None);
    }

    #[test]
    fn collinearity_is_named() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 7.0];
        let b = [2.0, 1.0, 0.0, 3.0, 1.0, 2.0];
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - y + 1.0).collect();
        let y = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        let err = ols(&y, &[("a", &a), ("b", &b), ("c", &c)]).unwrap_err();
        assert_eq!(
            err,
            StatsError::RankDeficient(vec!["a".into(), "b".into(), "c".into()])
        );
        let k = [4.0; 6];
        let err = ols(&y, &[("a", &a), ("k", &k)]).unwrap_err();
        assert_eq!(
            err,
            StatsError::RankDeficient(vec!["(intercept)".into(), "k".into()])
        );
    }

    #[test]
    fn regression_errors() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            ols(&[1.0, 2.0, 3.0], &[("x", &x), ("x2", &[1.0, 4.0, 9.0])]),
            Err(StatsError::TooFewObservations { needed: 4, got: 3 })
        ));
        assert!(matches!(
            ols(&[2.0; 3], &[("x", &x)]),
            Err(StatsError::ConstantInput(_))
        ));
        assert!(ols(&[1.0, 2.0], &[("x", &x)]).is_err());
    }

    #[test]
    fn hlr_with_empty_second_block() {
        let n = 12;
        let y = Variable::complete("y", &wave(n, 0.7, 0.1));
        let a = Variable::complete("a", &wave(n, 1.3, 0.5));
        let r = hierarchical_regression(&y, &[a], &[]).unwrap();
        assert_eq!(r.m1, r.m2);
        assert_eq!(r.delta.r_squared, 0.0);
        assert_eq!(r.delta.f, None);
        assert_eq!(r.delta.df1, 0);
    }

    #[test]
    fn hlr_delta_f_matches_partial_t() {
        // adding one predictor: delta F equals the square of its t in M2
        let n = 15;
        let y = Variable::complete("y", &wave(n, 0.7, 0.1));
        let a = Variable::complete("a", &wave(n, 1.3, 0.5));
        let b = Variable::complete("b", &wave(n, 2.1, 0.9));
        let r = hierarchical_regression(&y, &[a], &[b]).unwrap();
        let t = r.m2.coefficient("b").unwrap().t;
        assert!((r.delta.f.unwrap() - t * t).abs() < 1e-8 * (t * t).max(1.0));
        assert!((r.delta.p.unwrap() - r.m2.coefficient("b").unwrap().p).abs() < 1e-10);
        assert_eq!((r.delta.df1, r.delta.df2), (1, 12));
    }

    #[test]
    fn hlr_listwise_deletion() {
        let mut yv: Vec<Option<f64>> = wave(10, 0.7, 0.1).into_iter().map(Some).collect();
        yv[2] = None;
        let mut bv: Vec<Option<f64>> = wave(10, 2.1, 0.9).into_iter().map(Some).collect();
        bv[7] = None;
        let y = Variable::new("y", yv);
        let a = Variable::complete("a", &wave(10, 1.3, 0.5));
        let b = Variable::new("b", bv);
        let r = hierarchical_regression(&y, &[a], &[b]).unwrap();
        assert_eq!(r.n_used, 8);
        assert_eq!(r.m1.n, 8);
    }

    #[test]
    fn stepwise_picks_the_real_signal() {
        let n = 30;
        let s1 = wave(n, 0.9, 0.2);
        let s2 = wave(n, 1.7, 1.1);
        let noise = wave(n, 2.9, 0.4);
        let y: Vec<f64> = (0..n)
            .map(|i| 3.0 * s1[i] - 2.0 * s2[i] + 0.3 * (i as f64 * 5.3).cos())
            .collect();
        let cands = [
            Variable::complete("noise", &noise),
            Variable::complete("s2", &s2),
            Variable::complete("s1", &s1),
        ];
        let picked = stepwise_select(&Variable::complete("y", &y), &cands, &[], 0.05).unwrap();
        let names: Vec<&str> = picked.iter().map(|e| e.name.as_str()).collect();
        assert!(names.starts_with(&["s1", "s2"]) || names.starts_with(&["s2", "s1"]));
        assert!(picked.iter().all(|e| e.p_value < 0.05));
    }

    #[test]
    fn stepwise_tie_goes_to_first() {
        let n = 10;
        let x = wave(n, 0.8, 0.3);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + (i as f64).cos())
            .collect();
        let cands = [
            Variable::complete("first", &x),
            Variable::complete("second", &x),
        ];
        let picked = stepwise_select(&Variable::complete("y", &y), &cands, &[], 0.5).unwrap();
        assert_eq!(picked[0].name, "first");
        // the duplicate cannot enter once its twin is in
        assert_eq!(picked.len(), 1);
    }

    #[test]
    fn stepwise_matches_exhaustive_first_step() {
        // the first entrant must be the candidate whose single-predictor model
        // has the smallest slope p, found by brute force over all candidates
        let n = 25;
        let y = wave(n, 0.45, 0.0);
        let cands: Vec<Variable> = (0..6)
            .map(|k| Variable::complete(format!("c{k}"), &wave(n, 0.4 + 0.37 * k as f64, k as f64)))
            .collect();
        let mut best = (String::new(), f64::INFINITY);
        for c in &cands {
            let vals: Vec<f64> = c.values.iter().map(|v| v.unwrap()).collect();
            let p = ols(&y, &[(&c.name, &vals)]).unwrap().coefficients[0].p;
            if p < best.1 {
                best = (c.name.clone(), p);
            }
        }
        let picked = stepwise_select(&Variable::complete("y", &y), &cands, &[], 1.0).unwrap();
        assert_eq!(picked[0].name, best.0);
        assert!((picked[0].p_value - best.1).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn residuals_are_orthogonal(
            rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 6..30),
        ) {
            let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let Ok(fit) = ols(&y, &[("a", &a), ("b", &b)]) else { return Ok(()); };
            let scale = 1.0 + y.iter().map(|v| v * v).sum::<f64>();
            prop_assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8 * scale);
            for col in [&a, &b] {
                let dot: f64 = fit.residuals.iter().zip(col.iter()).map(|(e, x)| e * x).sum();
                prop_assert!(dot.abs() < 1e-7 * scale);
            }
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }

        #[test]
        fn beta_survives_affine_rescaling(
            rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 8..30),
            scale in 0.1f64..50.0,
            shift in -100.0f64..100.0,
        ) {
            let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let Ok(fit) = ols(&y, &[("a", &a), ("b", &b)]) else { return Ok(()); };
            if fit.coefficients.iter().any(|c| c.se < 1e-6) { return Ok(()); }
            let a2: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
            let fit2 = ols(&y, &[("a", &a2), ("b", &b)]).unwrap();
            let (b1, b2) = (fit.coefficients[0].beta.unwrap(), fit2.coefficients[0].beta.unwrap());
            prop_assert!((b1 - b2).abs() < 1e-7);
            prop_assert!((fit.coefficients[0].b - fit2.coefficients[0].b * scale).abs()
                < 1e-7 * fit.coefficients[0].b.abs().max(1.0));
            prop_assert!((fit.coefficients[0].p - fit2.coefficients[0].p).abs() < 1e-7);
            prop_assert!((fit.r_squared - fit2.r_squared).abs() < 1e-9);
        }
    }
}
