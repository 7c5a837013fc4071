//! Team differences over function-word profiles and interval-pair convergence.
//!
//! A team's difference in one interval is the mean, over all ordered speaker
//! pairs, of the summed per-category differences between the two speakers'
//! profiles. Convergence between intervals `i < j` is `TDiff_i - TDiff_j`;
//! positive values mean the team grew more alike. Each game is summarised by
//! the largest and smallest positive convergence and the largest and smallest
//! absolute change, for both the raw and the frequency-weighted differences.

use serde::Serialize;
use thiserror::Error;

use crate::lexicon::{CategoryProfile, Lexicon};
use crate::transcript::{
    segment_intervals, GameSession, Interjections, IntervalGrid, TranscriptError,
};

pub const DEFAULT_INTERVALS: usize = 10;

/// Column names of the eight team measures, in [`ConvergenceMeasures::values`] order.
pub const MEASURE_NAMES: [&str; 8] = [
    "unw_max",
    "unw_min",
    "unw_absmax",
    "unw_absmin",
    "w_max",
    "w_min",
    "w_absmax",
    "w_absmin",
];

#[derive(Debug, Error)]
pub enum EntrainmentError {
    #[error("category percentages must be nonnegative, got {0} and {1}")]
    NegativePercentage(f64, f64),
    #[error("profiles disagree on category count ({0} vs {1})")]
    CategoryMismatch(usize, usize),
    #[error("team difference needs at least 2 speakers, got {0}")]
    TooFewSpeakers(usize),
    #[error("expected {expected} unordered pair differences for a team of {team_size}, got {got}")]
    PairCount {
        team_size: usize,
        expected: usize,
        got: usize,
    },
    #[error("convergence needs at least 2 intervals, got {0}")]
    TooFewIntervals(usize),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Unweighted,
    Weighted,
}

/// Frequency-normalised difference of one category: `|a - b| / (a + b)`, or 0
/// when both are 0.
pub fn kdiff(k_i: f64, k_j: f64) -> Result<f64, EntrainmentError> {
    if k_i < 0.0 || k_j < 0.0 || k_i.is_nan() || k_j.is_nan() {
        return Err(EntrainmentError::NegativePercentage(k_i, k_j));
    }
    let total = k_i + k_j;
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((k_i - k_j).abs() / total)
}

fn check_aligned(p_i: &CategoryProfile, p_j: &CategoryProfile) -> Result<(), EntrainmentError> {
    if p_i.len() != p_j.len() {
        return Err(EntrainmentError::CategoryMismatch(p_i.len(), p_j.len()));
    }
    Ok(())
}

pub fn pair_diff_unweighted(
    p_i: &CategoryProfile,
    p_j: &CategoryProfile,
) -> Result<f64, EntrainmentError> {
    check_aligned(p_i, p_j)?;
    Ok(p_i
        .percentages
        .iter()
        .zip(&p_j.percentages)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

pub fn pair_diff_weighted(
    p_i: &CategoryProfile,
    p_j: &CategoryProfile,
) -> Result<f64, EntrainmentError> {
    check_aligned(p_i, p_j)?;
    p_i.percentages
        .iter()
        .zip(&p_j.percentages)
        .map(|(&a, &b)| kdiff(a, b))
        .sum()
}

pub fn pair_diff(
    p_i: &CategoryProfile,
    p_j: &CategoryProfile,
    weighting: Weighting,
) -> Result<f64, EntrainmentError> {
    match weighting {
        Weighting::Unweighted => pair_diff_unweighted(p_i, p_j),
        Weighting::Weighted => pair_diff_weighted(p_i, p_j),
    }
}

/// Team difference: the pair difference summed over all ordered speaker pairs
/// `i != j`, divided by `s(s - 1)`.
pub fn team_diff(
    profiles: &[CategoryProfile],
    weighting: Weighting,
) -> Result<f64, EntrainmentError> {
    let s = profiles.len();
    if s < 2 {
        return Err(EntrainmentError::TooFewSpeakers(s));
    }
    let mut total = 0.0;
    for (i, p_i) in profiles.iter().enumerate() {
        for (j, p_j) in profiles.iter().enumerate() {
            if i != j {
                total += pair_diff(p_i, p_j, weighting)?;
            }
        }
    }
    Ok(total / (s * (s - 1)) as f64)
}

/// Team difference from already computed unordered pair differences.
pub fn team_diff_from_pairs(pair_diffs: &[f64], team_size: usize) -> Result<f64, EntrainmentError> {
    if team_size < 2 {
        return Err(EntrainmentError::TooFewSpeakers(team_size));
    }
    let expected = team_size * (team_size - 1) / 2;
    if pair_diffs.len() != expected {
        return Err(EntrainmentError::PairCount {
            team_size,
            expected,
            got: pair_diffs.len(),
        });
    }
    // each unordered pair appears twice among the ordered pairs
    Ok(2.0 * pair_diffs.iter().sum::<f64>() / (team_size * (team_size - 1)) as f64)
}

/// Per-interval team differences of one game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamDifferenceSeries {
    pub unweighted: Vec<f64>,
    pub weighted: Vec<f64>,
    pub team_size: usize,
}

impl TeamDifferenceSeries {
    pub fn get(&self, weighting: Weighting) -> &[f64] {
        match weighting {
            Weighting::Unweighted => &self.unweighted,
            Weighting::Weighted => &self.weighted,
        }
    }
}

/// Scores every speaker's tokens in every interval and computes both team
/// differences per interval. Silent speakers contribute all-zero profiles.
pub fn team_diff_series(
    grid: &IntervalGrid,
    lex: &Lexicon,
) -> Result<TeamDifferenceSeries, EntrainmentError> {
    let team_size = grid.speakers.len();
    if team_size < 2 {
        return Err(EntrainmentError::TooFewSpeakers(team_size));
    }
    let mut unweighted = Vec::with_capacity(grid.n);
    let mut weighted = Vec::with_capacity(grid.n);
    for t in 0..grid.n {
        let profiles: Vec<CategoryProfile> =
            grid.interval(t).map(|tokens| lex.score(tokens)).collect();
        unweighted.push(team_diff(&profiles, Weighting::Unweighted)?);
        weighted.push(team_diff(&profiles, Weighting::Weighted)?);
    }
    Ok(TeamDifferenceSeries {
        unweighted,
        weighted,
        team_size,
    })
}

/// Strict upper triangle of `C_ij = TDiff_i - TDiff_j`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ConvergenceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i >= j || j >= self.n {
            return None;
        }
        // rows before i hold (n-1) + (n-2) + ... + (n-i) entries
        let offset = i * (2 * self.n - i - 1) / 2;
        Some(self.values[offset + (j - i - 1)])
    }

    /// Entries as `(i, j, C_ij)` in lexicographic `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.values.iter().copied())
            .map(|((i, j), c)| (i, j, c))
    }
}

pub fn convergence_matrix(series: &[f64]) -> Result<ConvergenceMatrix, EntrainmentError> {
    let n = series.len();
    if n < 2 {
        return Err(EntrainmentError::TooFewIntervals(n));
    }
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(series[i] - series[j]);
        }
    }
    Ok(ConvergenceMatrix { n, values })
}

/// A summary value together with the interval pair it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub i: usize,
    pub j: usize,
}

/// The four convergence summaries for one weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    /// Largest positive `C_ij`; absent when no pair converges.
    pub max_conv: Option<Extremum>,
    /// Smallest positive `C_ij`; absent when no pair converges.
    pub min_conv: Option<Extremum>,
    pub abs_max: Extremum,
    pub abs_min: Extremum,
}

/// Scans the matrix once. Ties keep the earliest pair in `(i, j)` order.
pub fn convergence_measures(matrix: &ConvergenceMatrix) -> ConvergenceSummary {
    let (i0, j0, c0) = matrix
        .entries()
        .next()
        .expect("matrix has at least one entry");
    let first = Extremum {
        value: c0.abs(),
        i: i0,
        j: j0,
    };
    let mut summary = ConvergenceSummary {
        max_conv: None,
        min_conv: None,
        abs_max: first,
        abs_min: first,
    };
    for (i, j, c) in matrix.entries() {
        let abs = Extremum {
            value: c.abs(),
            i,
            j,
        };
        if abs.value > summary.abs_max.value {
            summary.abs_max = abs;
        }
        if abs.value < summary.abs_min.value {
            summary.abs_min = abs;
        }
        if c > 0.0 {
            let here = Extremum { value: c, i, j };
            if summary.max_conv.is_none_or(|m| c > m.value) {
                summary.max_conv = Some(here);
            }
            if summary.min_conv.is_none_or(|m| c < m.value) {
                summary.min_conv = Some(here);
            }
        }
    }
    summary
}

/// The eight entrainment measures of one team.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceMeasures {
    pub n: usize,
    pub unweighted: ConvergenceSummary,
    pub weighted: ConvergenceSummary,
}

impl ConvergenceMeasures {
    pub fn from_series(series: &TeamDifferenceSeries) -> Result<Self, EntrainmentError> {
        let unweighted = convergence_measures(&convergence_matrix(&series.unweighted)?);
        let weighted = convergence_measures(&convergence_matrix(&series.weighted)?);
        Ok(Self {
            n: series.unweighted.len(),
            unweighted,
            weighted,
        })
    }

    pub fn summary(&self, weighting: Weighting) -> &ConvergenceSummary {
        match weighting {
            Weighting::Unweighted => &self.unweighted,
            Weighting::Weighted => &self.weighted,
        }
    }

    /// Measure slots in [`MEASURE_NAMES`] order.
    pub fn extrema(&self) -> [Option<Extremum>; 8] {
        let u = &self.unweighted;
        let w = &self.weighted;
        [
            u.max_conv,
            u.min_conv,
            Some(u.abs_max),
            Some(u.abs_min),
            w.max_conv,
            w.min_conv,
            Some(w.abs_max),
            Some(w.abs_min),
        ]
    }

    pub fn values(&self) -> [Option<f64>; 8] {
        self.extrema().map(|e| e.map(|e| e.value))
    }
}

/// Full per-team pipeline: segmentation, scoring, team differences and the
/// eight convergence measures.
pub fn measure_team(
    session: &GameSession,
    lex: &Lexicon,
    n: usize,
    interjections: &Interjections,
) -> Result<ConvergenceMeasures, EntrainmentError> {
    let grid = segment_intervals(session, n, interjections)?;
    let series = team_diff_series(&grid, lex)?;
    ConvergenceMeasures::from_series(&series)
}
