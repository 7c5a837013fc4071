//! Executes analysis specs against the team table.

use serde::Serialize;

use super::spec::{AnalysisSpec, Block};
use super::table::TeamTable;
use super::PipelineError;
use crate::entrainment::MEASURE_NAMES;
use crate::outcomes::OUTCOME_NAMES;
use crate::stats::{
    self, hierarchical_regression, one_way_anova, spearman_pairwise, stars, stepwise_select,
    HlrResult, OlsFit, StatsError, StepwiseEntry, Variable,
};

/// Characteristics entered together in the first block of the outcome models.
pub const HLR_CHARACTERISTICS: [&str; 5] = [
    "age_sd",
    "ethnic_blau",
    "gender_blau",
    "female_pct",
    "team_size",
];
pub const CORRELATE_WITH: [&str; 3] = ["gender_blau", "ethnic_blau", "age_sd"];
pub const ANOVA_GROUPINGS: [&str; 2] = ["female_pct", "team_size"];

pub fn p_display(p: f64) -> String {
    format!("{p:.3}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub x: String,
    pub y: String,
    pub n_used: usize,
    pub rho: f64,
    pub df: usize,
    pub t: f64,
    pub p_two_sided: f64,
    pub p_two_sided_display: String,
    pub stars_two_sided: &'static str,
    pub p_one_sided: f64,
    pub p_one_sided_display: String,
    pub stars_one_sided: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TukeyRow {
    pub group_a: String,
    pub group_b: String,
    pub mean_diff: f64,
    pub q: f64,
    pub p_adjusted: f64,
    pub p_display: String,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaReport {
    pub dv: String,
    pub grouping: String,
    pub n_used: usize,
    pub groups: Vec<GroupReport>,
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub p_display: String,
    pub stars: &'static str,
    pub q_critical: f64,
    pub tukey: Vec<TukeyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermReport {
    pub name: String,
    pub b: f64,
    pub beta: Option<f64>,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub p_display: String,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub predictors: Vec<String>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f: Option<f64>,
    pub df_model: usize,
    pub df_resid: usize,
    pub p: Option<f64>,
    pub p_display: Option<String>,
    pub stars: &'static str,
    pub intercept: TermReport,
    pub terms: Vec<TermReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub r_squared: f64,
    pub f: Option<f64>,
    pub df1: usize,
    pub df2: usize,
    pub p: Option<f64>,
    pub p_display: Option<String>,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HlrReport {
    pub dv: String,
    pub n_used: usize,
    /// Variables entered by forward selection, with their entry p.
    pub stepwise: Vec<StepwiseEntry>,
    pub m1: ModelReport,
    pub m2: ModelReport,
    pub delta: DeltaReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipNotice {
    pub n_used: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum AnalysisBody {
    Correlation(CorrelationReport),
    Anova(AnovaReport),
    Hlr(Box<HlrReport>),
    Skipped(SkipNotice),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRecord {
    pub id: String,
    pub kind: &'static str,
    pub spec: String,
    #[serde(flatten)]
    pub body: AnalysisBody,
}

impl AnalysisRecord {
    pub fn is_skipped(&self) -> bool {
        matches!(self.body, AnalysisBody::Skipped(_))
    }
}

/// The fixed replication battery, in output order.
pub fn replication_battery() -> Vec<AnalysisSpec> {
    let mut specs = Vec::new();
    for m in MEASURE_NAMES {
        for c in CORRELATE_WITH {
            specs.push(AnalysisSpec::Correlate {
                x: m.into(),
                y: c.into(),
            });
        }
    }
    for m in MEASURE_NAMES {
        for g in ANOVA_GROUPINGS {
            specs.push(AnalysisSpec::Anova {
                dv: m.into(),
                grouping: g.into(),
            });
        }
    }
    for dv in OUTCOME_NAMES {
        specs.push(AnalysisSpec::Hlr {
            dv: dv.into(),
            block1: Block::fixed(HLR_CHARACTERISTICS),
            block2: Block::stepwise(MEASURE_NAMES),
        });
    }
    specs
}

/// Flipped models for every outcome whose forward model selected at least one
/// entrainment measure.
pub fn flipped_followups(records: &[AnalysisRecord], specs: &[AnalysisSpec]) -> Vec<AnalysisSpec> {
    records
        .iter()
        .zip(specs)
        .filter_map(|(rec, spec)| match (&rec.body, spec) {
            (AnalysisBody::Hlr(h), AnalysisSpec::Hlr { dv, block1, block2 })
                if block2.stepwise && !h.stepwise.is_empty() =>
            {
                Some(AnalysisSpec::HlrFlipped {
                    dv: dv.clone(),
                    characteristics: block1.variables.clone(),
                    entrainment: block2.variables.clone(),
                })
            }
            _ => None,
        })
        .collect()
}

/// Fails on names that are not columns of the team table.
pub fn check_variables(specs: &[AnalysisSpec]) -> Result<(), PipelineError> {
    for spec in specs {
        if let Some(v) = spec
            .variables()
            .into_iter()
            .find(|v| !TeamTable::has_column(v))
        {
            return Err(PipelineError::Validation(format!(
                "analysis '{spec}': unknown variable '{v}'"
            )));
        }
    }
    Ok(())
}

fn term(c: &stats::Coefficient, alpha: f64) -> TermReport {
    TermReport {
        name: c.name.clone(),
        b: c.b,
        beta: c.beta,
        se: c.se,
        t: c.t,
        p: c.p,
        p_display: p_display(c.p),
        stars: stars(c.p, alpha),
    }
}

fn model(fit: &OlsFit, alpha: f64) -> ModelReport {
    ModelReport {
        predictors: fit.coefficients.iter().map(|c| c.name.clone()).collect(),
        r_squared: fit.r_squared,
        adj_r_squared: fit.adj_r_squared,
        f: fit.f_stat,
        df_model: fit.df_model,
        df_resid: fit.df_resid,
        p: fit.f_p,
        p_display: fit.f_p.map(p_display),
        stars: fit.f_p.map_or("", |p| stars(p, alpha)),
        intercept: term(&fit.intercept, alpha),
        terms: fit.coefficients.iter().map(|c| term(c, alpha)).collect(),
    }
}

fn hlr_report(dv: &str, r: &HlrResult, stepwise: Vec<StepwiseEntry>, alpha: f64) -> HlrReport {
    HlrReport {
        dv: dv.to_string(),
        n_used: r.n_used,
        stepwise,
        m1: model(&r.m1, alpha),
        m2: model(&r.m2, alpha),
        delta: DeltaReport {
            r_squared: r.delta.r_squared,
            f: r.delta.f,
            df1: r.delta.df1,
            df2: r.delta.df2,
            p: r.delta.p,
            p_display: r.delta.p.map(p_display),
            stars: r.delta.p.map_or("", |p| stars(p, alpha)),
        },
    }
}

/// Why an analysis could not be computed from the available data.
struct Skip {
    n_used: usize,
    reason: String,
}

impl Skip {
    fn new(n_used: usize, reason: impl Into<String>) -> Self {
        Self {
            n_used,
            reason: reason.into(),
        }
    }

    fn stats(n_used: usize, e: StatsError) -> Self {
        Self::new(n_used, e.to_string())
    }
}

fn var(table: &TeamTable, name: &str) -> Variable {
    table
        .variable(name)
        .expect("variables are checked before analyses run")
}

fn complete_count(vars: &[&Variable]) -> usize {
    stats::regression::complete_rows(vars).map_or(0, |r| r.len())
}

fn correlate(table: &TeamTable, x: &str, y: &str, alpha: f64) -> Result<AnalysisBody, Skip> {
    let (vx, vy) = (var(table, x), var(table, y));
    let n_used = complete_count(&[&vx, &vy]);
    let r = spearman_pairwise(&vx.values, &vy.values).map_err(|e| Skip::stats(n_used, e))?;
    Ok(AnalysisBody::Correlation(CorrelationReport {
        x: x.into(),
        y: y.into(),
        n_used: r.n,
        rho: r.rho,
        df: r.df,
        t: r.t_stat,
        p_two_sided: r.p_two_sided,
        p_two_sided_display: p_display(r.p_two_sided),
        stars_two_sided: stars(r.p_two_sided, alpha),
        p_one_sided: r.p_one_sided,
        p_one_sided_display: p_display(r.p_one_sided),
        stars_one_sided: stars(r.p_one_sided, alpha),
    }))
}

fn anova(table: &TeamTable, dv: &str, grouping: &str, alpha: f64) -> Result<AnalysisBody, Skip> {
    let values = var(table, dv).values;
    let labels = table.grouping(grouping).expect("checked");
    let mut groups: Vec<(f64, String, Vec<f64>)> = Vec::new();
    for (v, g) in values.iter().zip(&labels) {
        let (Some(v), Some((key, label))) = (v, g) else {
            continue;
        };
        match groups.iter_mut().find(|(_, l, _)| l == label) {
            Some((_, _, members)) => members.push(*v),
            None => groups.push((*key, label.clone(), vec![*v])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_used = groups.iter().map(|g| g.2.len()).sum();
    let data: Vec<&[f64]> = groups.iter().map(|g| g.2.as_slice()).collect();
    let fit = one_way_anova(&data).map_err(|e| Skip::stats(n_used, e))?;
    let tukey = stats::anova::tukey_from_anova(&fit, alpha).map_err(|e| Skip::stats(n_used, e))?;
    let label = |k: usize| groups[k].1.clone();
    Ok(AnalysisBody::Anova(AnovaReport {
        dv: dv.into(),
        grouping: grouping.into(),
        n_used,
        groups: fit
            .groups
            .iter()
            .enumerate()
            .map(|(k, g)| GroupReport {
                label: label(k),
                n: g.n,
                mean: g.mean,
                sd: g.sd,
            })
            .collect(),
        f: fit.f_stat,
        df_between: fit.df_between,
        df_within: fit.df_within,
        p: fit.p_value,
        p_display: p_display(fit.p_value),
        stars: stars(fit.p_value, alpha),
        q_critical: tukey.q_critical,
        tukey: tukey
            .comparisons
            .iter()
            .map(|c| TukeyRow {
                group_a: label(c.group_a),
                group_b: label(c.group_b),
                mean_diff: c.mean_diff,
                q: c.q_stat,
                p_adjusted: c.p_adjusted,
                p_display: p_display(c.p_adjusted),
                significant: c.significant,
            })
            .collect(),
    }))
}

/// Resolves a block to concrete variables, running forward selection when asked.
fn resolve_block(
    y: &Variable,
    block: &Block,
    base: &[Variable],
    table: &TeamTable,
    entry_p: f64,
) -> Result<(Vec<Variable>, Vec<StepwiseEntry>), Skip> {
    let vars: Vec<Variable> = block.variables.iter().map(|v| var(table, v)).collect();
    if !block.stepwise {
        return Ok((vars, Vec::new()));
    }
    let entries = stepwise_select(y, &vars, base, entry_p).map_err(|e| Skip::stats(0, e))?;
    let chosen = entries.iter().map(|e| var(table, &e.name)).collect();
    Ok((chosen, entries))
}

fn run_hlr(
    table: &TeamTable,
    dv: &str,
    block1: &Block,
    block2: &Block,
    entry_p: f64,
) -> Result<(HlrResult, Vec<StepwiseEntry>), Skip> {
    let y = var(table, dv);
    let (b1, mut entries) = resolve_block(&y, block1, &[], table, entry_p)?;
    if b1.is_empty() {
        return Err(Skip::new(
            0,
            "forward selection entered nothing into the first block",
        ));
    }
    let (b2, more) = resolve_block(&y, block2, &b1, table, entry_p)?;
    entries.extend(more);
    let mut used: Vec<&Variable> = vec![&y];
    used.extend(&b1);
    used.extend(&b2);
    let n_used = complete_count(&used);
    let r = hierarchical_regression(&y, &b1, &b2).map_err(|e| Skip::stats(n_used, e))?;
    Ok((r, entries))
}

fn hlr_flipped(
    table: &TeamTable,
    dv: &str,
    characteristics: &[String],
    entrainment: &[String],
    alpha: f64,
    entry_p: f64,
) -> Result<AnalysisBody, Skip> {
    let forward_b1 = Block::fixed(characteristics.iter().cloned());
    let forward_b2 = Block::stepwise(entrainment.iter().cloned());
    let (forward, selected) = run_hlr(table, dv, &forward_b1, &forward_b2, entry_p)?;
    if selected.is_empty() {
        return Err(Skip::new(
            forward.n_used,
            "forward model selected no entrainment variable",
        ));
    }
    let significant: Vec<String> = forward
        .m2
        .coefficients
        .iter()
        .filter(|c| characteristics.contains(&c.name) && c.p < alpha)
        .map(|c| c.name.clone())
        .collect();
    let (r, entries) = run_hlr(
        table,
        dv,
        &Block::stepwise(entrainment.iter().cloned()),
        &Block::fixed(significant),
        entry_p,
    )?;
    Ok(AnalysisBody::Hlr(Box::new(hlr_report(
        dv, &r, entries, alpha,
    ))))
}

/// Runs one analysis. Data too thin for the requested test yields a skip
/// notice rather than an error.
pub fn run_analysis(
    table: &TeamTable,
    spec: &AnalysisSpec,
    id: String,
    alpha: f64,
    entry_p: f64,
) -> AnalysisRecord {
    let body = match spec {
        AnalysisSpec::Correlate { x, y } => correlate(table, x, y, alpha),
        AnalysisSpec::Anova { dv, grouping } => anova(table, dv, grouping, alpha),
        AnalysisSpec::Hlr { dv, block1, block2 } => run_hlr(table, dv, block1, block2, entry_p)
            .map(|(r, entries)| AnalysisBody::Hlr(Box::new(hlr_report(dv, &r, entries, alpha)))),
        AnalysisSpec::HlrFlipped {
            dv,
            characteristics,
            entrainment,
        } => hlr_flipped(table, dv, characteristics, entrainment, alpha, entry_p),
    };
    AnalysisRecord {
        id,
        kind: spec.kind(),
        spec: spec.to_string(),
        body: body.unwrap_or_else(|skip| {
            AnalysisBody::Skipped(SkipNotice {
                n_used: skip.n_used,
                reason: skip.reason,
            })
        }),
    }
}
