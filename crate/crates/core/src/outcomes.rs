//! Post-game survey scales and the four perceived team outcomes.
//!
//! Individual scale scores are averaged per team. Cohesion, satisfaction,
//! potency and shared cognition are z-scored across teams and averaged into a
//! single team-processes composite; the three conflict scales stay separate.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const SCALE_NAMES: [&str; 7] = [
    "cohesion",
    "satisfaction",
    "potency",
    "shared_cognition",
    "task_conflict",
    "process_conflict",
    "relationship_conflict",
];

/// Indices into [`SCALE_NAMES`] of the scales pooled into team processes.
pub const PROCESS_SCALES: [usize; 4] = [0, 1, 2, 3];

pub const OUTCOME_NAMES: [&str; 4] = [
    "team_processes",
    "task_conflict",
    "process_conflict",
    "relationship_conflict",
];

/// Reliability below which the composite is still built but flagged.
pub const ALPHA_WARNING: f64 = 0.7;

#[derive(Debug, Error)]
pub enum OutcomeError {
    #[error("no survey responses")]
    NoResponses,
    #[error("reliability needs at least 2 items and 2 observations")]
    TooFewItems,
    #[error("total score variance is zero")]
    ZeroTotalVariance,
    #[error("scale {0} has zero variance across teams")]
    ZeroVariance(usize),
    #[error("z-scoring needs at least 2 teams")]
    TooFewTeams,
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for ScaleBounds {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyResponse {
    pub speaker_id: String,
    pub team_id: String,
    /// Scale scores in [`SCALE_NAMES`] order.
    pub scores: [f64; 7],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeamOutcomes {
    pub team_processes: f64,
    pub task_conflict: f64,
    pub process_conflict: f64,
    pub relationship_conflict: f64,
}

impl TeamOutcomes {
    pub fn values(&self) -> [f64; 4] {
        [
            self.team_processes,
            self.task_conflict,
            self.process_conflict,
            self.relationship_conflict,
        ]
    }
}

/// Per-team outcomes plus the reliability of the process composite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSet {
    pub teams: BTreeMap<String, TeamOutcomes>,
    pub process_alpha: f64,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values.iter().copied());
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

/// Mean of each scale per team.
pub fn team_scale_means(
    responses: &[SurveyResponse],
) -> Result<BTreeMap<String, [f64; 7]>, OutcomeError> {
    if responses.is_empty() {
        return Err(OutcomeError::NoResponses);
    }
    let mut by_team: BTreeMap<&str, Vec<&SurveyResponse>> = BTreeMap::new();
    for r in responses {
        by_team.entry(&r.team_id).or_default().push(r);
    }
    Ok(by_team
        .into_iter()
        .map(|(team, rows)| {
            let means = std::array::from_fn(|k| mean(rows.iter().map(|r| r.scores[k])));
            (team.to_string(), means)
        })
        .collect())
}

/// Cronbach's alpha of an observation × item matrix, using population
/// variances.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64, OutcomeError> {
    let k = items.first().map_or(0, Vec::len);
    if items.len() < 2 || k < 2 || items.iter().any(|row| row.len() != k) {
        return Err(OutcomeError::TooFewItems);
    }
    let item_var: f64 = (0..k)
        .map(|c| population_variance(&items.iter().map(|row| row[c]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = items.iter().map(|row| row.iter().sum()).collect();
    let total_var = population_variance(&totals);
    if total_var <= 0.0 {
        return Err(OutcomeError::ZeroTotalVariance);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// Z-scores each column across rows (population SD).
pub fn zscore_columns(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OutcomeError> {
    if rows.len() < 2 {
        return Err(OutcomeError::TooFewTeams);
    }
    let k = rows[0].len();
    let mut out = vec![vec![0.0; k]; rows.len()];
    for c in 0..k {
        let column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let m = mean(column.iter().copied());
        let sd = population_variance(&column).sqrt();
        if sd <= f64::EPSILON * m.abs().max(1.0) {
            return Err(OutcomeError::ZeroVariance(c));
        }
        for (r, v) in column.iter().enumerate() {
            out[r][c] = (v - m) / sd;
        }
    }
    Ok(out)
}

/// Average of the per-scale z-scores for each row.
pub fn zscore_composite(scales: &[Vec<f64>]) -> Result<Vec<f64>, OutcomeError> {
    Ok(zscore_columns(scales)?
        .into_iter()
        .map(|z| mean(z.iter().copied()))
        .collect())
}

/// Builds the four outcome variables for every surveyed team.
pub fn build_outcomes(responses: &[SurveyResponse]) -> Result<OutcomeSet, OutcomeError> {
    let means = team_scale_means(responses)?;
    let process: Vec<Vec<f64>> = means
        .values()
        .map(|m| PROCESS_SCALES.iter().map(|&k| m[k]).collect())
        .collect();
    let process_alpha = cronbach_alpha(&zscore_columns(&process)?)?;
    if process_alpha < ALPHA_WARNING {
        log::warn!(
            "team-process scales have low reliability (alpha = {process_alpha:.3}); composite built anyway"
        );
    }
    let composite = zscore_composite(&process)?;
    let teams = means
        .into_iter()
        .zip(composite)
        .map(|((team, m), team_processes)| {
            (
                team,
                TeamOutcomes {
                    team_processes,
                    task_conflict: m[4],
                    process_conflict: m[5],
                    relationship_conflict: m[6],
                },
            )
        })
        .collect();
    Ok(OutcomeSet {
        teams,
        process_alpha,
    })
}

fn row_err(row: u64, message: impl Into<String>) -> OutcomeError {
    OutcomeError::Row {
        row,
        message: message.into(),
    }
}

pub fn parse_survey<R: Read>(
    source: R,
    bounds: ScaleBounds,
) -> Result<Vec<SurveyResponse>, OutcomeError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| OutcomeError::MissingColumn(name.to_string()))
    };
    let speaker_col = column("speaker_id")?;
    let team_col = column("team_id")?;
    let scale_cols = SCALE_NAMES.map(column);
    let mut scale_index = [0usize; 7];
    for (slot, col) in scale_index.iter_mut().zip(scale_cols) {
        *slot = col?;
    }

    let mut responses = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let mut scores = [0.0; 7];
        for (k, &col) in scale_index.iter().enumerate() {
            let value: f64 = field(col).parse().map_err(|_| {
                row_err(
                    row,
                    format!("invalid {} score '{}'", SCALE_NAMES[k], field(col)),
                )
            })?;
            if !(bounds.min..=bounds.max).contains(&value) {
                return Err(row_err(
                    row,
                    format!(
                        "{} score {value} outside [{}, {}]",
                        SCALE_NAMES[k], bounds.min, bounds.max
                    ),
                ));
            }
            scores[k] = value;
        }
        if field(team_col).is_empty() {
            return Err(row_err(row, "team_id must be nonempty"));
        }
        responses.push(SurveyResponse {
            speaker_id: field(speaker_col).to_string(),
            team_id: field(team_col).to_string(),
            scores,
        });
    }
    Ok(responses)
}

pub fn read_survey(
    path: impl AsRef<Path>,
    bounds: ScaleBounds,
) -> Result<Vec<SurveyResponse>, OutcomeError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| OutcomeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_survey(std::io::BufReader::new(file), bounds)
}
