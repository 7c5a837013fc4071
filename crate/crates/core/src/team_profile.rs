//! Team composition: size, female share, Blau heterogeneity and age spread.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub const ROSTER_COLUMNS: [&str; 5] = ["speaker_id", "team_id", "gender", "age", "ethnicity"];

pub const CHARACTERISTIC_NAMES: [&str; 5] = [
    "team_size",
    "female_pct",
    "gender_blau",
    "ethnic_blau",
    "age_sd",
];

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("proportions must be nonnegative and sum to 1 (sum = {0})")]
    InvalidProportions(f64),
    #[error("age diversity needs at least one age")]
    NoAges,
    #[error("team has no members")]
    EmptyTeam,
    #[error("team '{0}' has fewer than 2 members")]
    TooSmall(String),
    #[error("members from different teams ('{0}' and '{1}')")]
    MixedTeams(String, String),
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!("unknown gender '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Ethnicity {
    Caucasian,
    EastAsian,
    SouthAsian,
    PacificIslander,
    Black,
    NativeAmerican,
    Hispanic,
    MiddleEastern,
    MultipleEthnicity,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 9] = [
        Ethnicity::Caucasian,
        Ethnicity::EastAsian,
        Ethnicity::SouthAsian,
        Ethnicity::PacificIslander,
        Ethnicity::Black,
        Ethnicity::NativeAmerican,
        Ethnicity::Hispanic,
        Ethnicity::MiddleEastern,
        Ethnicity::MultipleEthnicity,
    ];
}

impl FromStr for Ethnicity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        Ethnicity::ALL
            .into_iter()
            .find(|e| format!("{e:?}").eq_ignore_ascii_case(key))
            .ok_or_else(|| format!("unknown ethnicity '{key}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberRecord {
    pub speaker_id: String,
    pub team_id: String,
    pub gender: Gender,
    pub age: u32,
    pub ethnicity: Ethnicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeamCharacteristics {
    pub team_size: usize,
    pub female_pct: f64,
    pub gender_blau: f64,
    pub ethnic_blau: f64,
    pub age_sd: f64,
}

impl TeamCharacteristics {
    /// Values in [`CHARACTERISTIC_NAMES`] order.
    pub fn values(&self) -> [f64; 5] {
        [
            self.team_size as f64,
            self.female_pct,
            self.gender_blau,
            self.ethnic_blau,
            self.age_sd,
        ]
    }
}

/// Blau's heterogeneity index, `1 - Σ p_k²`.
pub fn blau_index(proportions: &[f64]) -> Result<f64, ProfileError> {
    let sum: f64 = proportions.iter().sum();
    if proportions.iter().any(|&p| p < 0.0 || p.is_nan())
        || (sum - 1.0).abs() > PROPORTION_TOLERANCE
    {
        return Err(ProfileError::InvalidProportions(sum));
    }
    Ok(1.0 - proportions.iter().map(|p| p * p).sum::<f64>())
}

/// Blau's index of a categorical composition given as counts.
pub fn blau_from_counts<I: IntoIterator<Item = usize>>(counts: I) -> Result<f64, ProfileError> {
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(ProfileError::EmptyTeam);
    }
    let proportions: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    blau_index(&proportions)
}

/// Population standard deviation of member ages.
pub fn age_diversity(ages: &[f64]) -> Result<f64, ProfileError> {
    if ages.is_empty() {
        return Err(ProfileError::NoAges);
    }
    let n = ages.len() as f64;
    let mean = ages.iter().sum::<f64>() / n;
    Ok((ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt())
}

pub fn characterize(members: &[MemberRecord]) -> Result<TeamCharacteristics, ProfileError> {
    let first = members.first().ok_or(ProfileError::EmptyTeam)?;
    if let Some(other) = members.iter().find(|m| m.team_id != first.team_id) {
        return Err(ProfileError::MixedTeams(
            first.team_id.clone(),
            other.team_id.clone(),
        ));
    }
    if members.len() < 2 {
        return Err(ProfileError::TooSmall(first.team_id.clone()));
    }
    let size = members.len();
    let females = members
        .iter()
        .filter(|m| m.gender == Gender::Female)
        .count();
    let mut ethnic_counts: BTreeMap<Ethnicity, usize> = BTreeMap::new();
    for m in members {
        *ethnic_counts.entry(m.ethnicity).or_default() += 1;
    }
    let ages: Vec<f64> = members.iter().map(|m| f64::from(m.age)).collect();
    Ok(TeamCharacteristics {
        team_size: size,
        female_pct: 100.0 * females as f64 / size as f64,
        gender_blau: blau_from_counts([females, size - females])?,
        ethnic_blau: blau_from_counts(ethnic_counts.into_values())?,
        age_sd: age_diversity(&ages)?,
    })
}

/// Characteristics of every team in a roster, keyed by team id.
pub fn characterize_roster(
    members: &[MemberRecord],
) -> Result<BTreeMap<String, TeamCharacteristics>, ProfileError> {
    let mut teams: BTreeMap<&str, Vec<MemberRecord>> = BTreeMap::new();
    for m in members {
        teams.entry(m.team_id.as_str()).or_default().push(m.clone());
    }
    teams
        .into_iter()
        .map(|(team, members)| Ok((team.to_string(), characterize(&members)?)))
        .collect()
}

/// The seven gender-composition conditions, as (label, female percentage).
pub const FEMALE_BUCKETS: [(&str, f64); 7] = [
    ("0", 0.0),
    ("25", 25.0),
    ("33", 100.0 / 3.0),
    ("50", 50.0),
    ("66", 200.0 / 3.0),
    ("75", 75.0),
    ("100", 100.0),
];

/// Nearest composition condition within one percentage point.
pub fn female_pct_bucket(pct: f64) -> Option<&'static str> {
    FEMALE_BUCKETS
        .iter()
        .map(|&(label, centre)| (label, (pct - centre).abs()))
        .filter(|&(_, d)| d <= 1.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(label, _)| label)
}

fn row_err(row: u64, message: impl Into<String>) -> ProfileError {
    ProfileError::Row {
        row,
        message: message.into(),
    }
}

pub fn parse_roster<R: Read>(source: R) -> Result<Vec<MemberRecord>, ProfileError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(ROSTER_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ProfileError::MissingColumn(name.to_string()))?;
    }
    let [speaker_col, team_col, gender_col, age_col, ethnicity_col] = index;
    let mut members = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let age: u32 = field(age_col)
            .parse()
            .map_err(|_| row_err(row, format!("invalid age '{}'", field(age_col))))?;
        if !(18..=120).contains(&age) {
            return Err(row_err(row, format!("age {age} outside 18..=120")));
        }
        if field(speaker_col).is_empty() || field(team_col).is_empty() {
            return Err(row_err(row, "speaker_id and team_id must be nonempty"));
        }
        members.push(MemberRecord {
            speaker_id: field(speaker_col).to_string(),
            team_id: field(team_col).to_string(),
            gender: field(gender_col).parse().map_err(|m| row_err(row, m))?,
            age,
            ethnicity: field(ethnicity_col).parse().map_err(|m| row_err(row, m))?,
        });
    }
    Ok(members)
}

pub fn read_roster(path: impl AsRef<Path>) -> Result<Vec<MemberRecord>, ProfileError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_roster(std::io::BufReader::new(file))
}
