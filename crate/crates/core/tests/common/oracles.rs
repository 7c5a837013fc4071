//! Deliberately naive reference implementations, written without touching the
//! library's numerical code paths.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (k, c) in C.iter().enumerate().skip(1) {
        a += c / (x + k as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `∫_lo^hi t^(a-1) (1-t)^(b-1) dt` by tanh-sinh quadrature, with endpoint
/// distances computed directly so that endpoint singularities stay accurate.
fn beta_integral(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let f = |u: f64| -> f64 {
        let v = 0.5 * PI * u.sinh();
        let d_lo = half * 2.0 / (1.0 + (-2.0 * v).exp());
        let d_hi = half * 2.0 / (1.0 + (2.0 * v).exp());
        let t = lo + d_lo;
        let one_minus_t = if hi == 1.0 { d_hi } else { 1.0 - t };
        let t_eff = if lo == 0.0 { d_lo } else { t };
        if t_eff <= 0.0 || one_minus_t <= 0.0 {
            return 0.0;
        }
        let dt = half * 0.5 * PI * u.cosh() / v.cosh().powi(2);
        ((a - 1.0) * t_eff.ln() + (b - 1.0) * one_minus_t.ln()).exp() * dt
    };
    let mut previous = f64::NAN;
    let mut step = 0.5;
    let mut total = 0.0;
    for level in 0..12 {
        let mut sum = 0.0;
        let limit = 6.0;
        if level == 0 {
            let mut u = -limit;
            while u <= limit + 1e-12 {
                sum += f(u);
                u += step;
            }
            total = sum * step;
        } else {
            // only the new midpoints
            let mut u = -limit + step;
            while u < limit {
                sum += f(u);
                u += 2.0 * step;
            }
            total = 0.5 * total + sum * step;
        }
        if (total - previous).abs() <= 1e-15 * total.abs() {
            break;
        }
        previous = total;
        step *= 0.5;
    }
    total
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_b = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    // integrate over the shorter side for accuracy
    if x < 0.5 {
        beta_integral(a, b, 0.0, x) / ln_b.exp()
    } else {
        1.0 - beta_integral(a, b, x, 1.0) / ln_b.exp()
    }
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
}

pub fn f_upper(f: f64, d1: f64, d2: f64) -> f64 {
    incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))
}

/// Rank by counting: 1 + (values below) + half of (other values equal).
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let below = x.iter().filter(|&&v| v < xi).count() as f64;
            let ties = x
                .iter()
                .enumerate()
                .filter(|&(j, &v)| j != i && v == xi)
                .count() as f64;
            1.0 + below + 0.5 * ties
        })
        .collect()
}

pub struct SpearmanOracle {
    pub rho: f64,
    pub t: f64,
    pub p_two: f64,
}

pub fn spearman(x: &[f64], y: &[f64]) -> SpearmanOracle {
    let (rx, ry) = (ranks_by_counting(x), ranks_by_counting(y));
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (rx.iter().sum(), ry.iter().sum());
    let sxx: f64 = rx.iter().map(|v| v * v).sum();
    let syy: f64 = ry.iter().map(|v| v * v).sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let rho = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    let df = n - 2.0;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    SpearmanOracle {
        rho,
        t,
        p_two: t_two_sided(t, df),
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        cols.push(solve(a.to_vec(), e));
    }
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

pub struct OlsOracle {
    /// Intercept first.
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub r_squared: f64,
    pub f: f64,
    pub f_p: f64,
    pub df_resid: f64,
}

/// Normal-equations least squares with an intercept.
pub fn ols(y: &[f64], columns: &[Vec<f64>]) -> OlsOracle {
    let n = y.len();
    let p = columns.len() + 1;
    let row = |i: usize| -> Vec<f64> {
        std::iter::once(1.0)
            .chain(columns.iter().map(|c| c[i]))
            .collect()
    };
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let r = row(i);
        for a in 0..p {
            xty[a] += r[a] * y[i];
            for b in 0..p {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    let coef = solve(xtx.clone(), xty);
    let inv = invert(&xtx);
    let sse: f64 = (0..n)
        .map(|i| {
            let fit: f64 = row(i).iter().zip(&coef).map(|(x, b)| x * b).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let df_resid = (n - p) as f64;
    let s2 = sse / df_resid;
    let r_squared = 1.0 - sse / sst;
    let k = (p - 1) as f64;
    let f = (r_squared / k) / ((1.0 - r_squared) / df_resid);
    OlsOracle {
        se: (0..p).map(|j| (s2 * inv[j][j]).sqrt()).collect(),
        coef,
        r_squared,
        f,
        f_p: f_upper(f, k, df_resid),
        df_resid,
    }
}

/// One-way ANOVA as a regression on group dummies.
pub fn anova_f(groups: &[Vec<f64>]) -> (f64, f64) {
    let y: Vec<f64> = groups.iter().flatten().copied().collect();
    let dummies: Vec<Vec<f64>> = (1..groups.len())
        .map(|g| {
            groups
                .iter()
                .enumerate()
                .flat_map(|(h, members)| {
                    std::iter::repeat_n(if h == g { 1.0 } else { 0.0 }, members.len())
                })
                .collect()
        })
        .collect();
    let fit = ols(&y, &dummies);
    (fit.f, fit.f_p)
}

/// Convergence summaries by listing every interval pair and sorting.
/// Returns (max, min, absmax, absmin) as (value, i, j).
#[allow(clippy::type_complexity)]
pub fn convergence_by_enumeration(
    series: &[f64],
) -> (
    Option<(f64, usize, usize)>,
    Option<(f64, usize, usize)>,
    (f64, usize, usize),
    (f64, usize, usize),
) {
    let mut pairs = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            pairs.push((series[i] - series[j], i, j));
        }
    }
    let order = |a: &(f64, usize, usize), b: &(f64, usize, usize)| (a.1, a.2).cmp(&(b.1, b.2));
    let positive: Vec<_> = pairs.iter().copied().filter(|p| p.0 > 0.0).collect();
    let mut by_desc = positive.clone();
    by_desc.sort_by(|a, b| b.0.total_cmp(&a.0).then(order(a, b)));
    let mut by_asc = positive;
    by_asc.sort_by(|a, b| a.0.total_cmp(&b.0).then(order(a, b)));
    let mut abs_desc: Vec<_> = pairs.iter().map(|p| (p.0.abs(), p.1, p.2)).collect();
    abs_desc.sort_by(|a, b| b.0.total_cmp(&a.0).then(order(a, b)));
    let mut abs_asc = abs_desc.clone();
    abs_asc.sort_by(|a, b| a.0.total_cmp(&b.0).then(order(a, b)));
    (
        by_desc.first().copied(),
        by_asc.first().copied(),
        abs_desc[0],
        abs_asc[0],
    )
}
