//! Transcript ingestion, text preprocessing and temporal segmentation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub const TRANSCRIPT_COLUMNS: [&str; 6] = [
    "team_id",
    "speaker_id",
    "role",
    "start_ms",
    "end_ms",
    "text",
];

pub const DEFAULT_INTERJECTIONS: [&str; 7] = ["hmm", "mm", "mhm", "uh", "um", "huh", "uh-huh"];

#[derive(Debug, Error)]
pub enum TranscriptError {
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
    #[error("speaker '{speaker}' does not occur in team '{team}'")]
    UnknownSpeaker { team: String, speaker: String },
    #[error("interval count must be at least 2, got {0}")]
    TooFewIntervals(usize),
    #[error("team '{0}' has no IPUs")]
    EmptySession(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Engineer,
    Messenger,
    Pilot,
    Explorer,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "engineer" => Ok(Role::Engineer),
            "messenger" => Ok(Role::Messenger),
            "pilot" => Ok(Role::Pilot),
            "explorer" => Ok(Role::Explorer),
            other => Err(format!("unknown role '{other}'")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One inter-pausal unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpuRecord {
    pub team_id: String,
    pub speaker_id: String,
    pub role: Role,
    pub start_ms: i64,
    pub end_ms: i64,
    pub text: String,
}

impl IpuRecord {
    /// Twice the temporal midpoint, kept integral so boundary ties are exact.
    fn midpoint_x2(&self) -> i64 {
        self.start_ms + self.end_ms
    }
}

/// All IPUs of one team's game, chronologically ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSession {
    pub team_id: String,
    pub ipus: Vec<IpuRecord>,
    pub speakers: BTreeSet<String>,
}

impl GameSession {
    /// Builds a session from records of a single team, sorting by start time
    /// and then speaker id.
    pub fn new(team_id: impl Into<String>, mut ipus: Vec<IpuRecord>) -> Self {
        ipus.sort_by(|a, b| {
            a.start_ms
                .cmp(&b.start_ms)
                .then_with(|| a.speaker_id.cmp(&b.speaker_id))
        });
        let speakers = ipus.iter().map(|ipu| ipu.speaker_id.clone()).collect();
        Self {
            team_id: team_id.into(),
            ipus,
            speakers,
        }
    }

    pub fn span(&self) -> Option<(i64, i64)> {
        let start = self.ipus.iter().map(|i| i.start_ms).min()?;
        let end = self.ipus.iter().map(|i| i.end_ms).max()?;
        Some((start, end))
    }
}

/// Lowercase interjection tokens removed during preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interjections(HashSet<String>);

impl Default for Interjections {
    fn default() -> Self {
        DEFAULT_INTERJECTIONS.iter().copied().collect()
    }
}

impl<S: Into<String>> FromIterator<S> for Interjections {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

impl Interjections {
    pub fn none() -> Self {
        Self(HashSet::new())
    }

    /// One token per line; `#` starts a comment line.
    pub fn parse(source: &str) -> Self {
        source
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map(|s| Self::parse(&s))
            .map_err(|source| TranscriptError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.0.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

fn is_token_internal(c: char) -> bool {
    c == '\'' || c == '-'
}

/// Lowercases, strips punctuation (apostrophes and hyphens survive inside
/// tokens), splits on whitespace and drops interjections.
pub fn preprocess(text: &str, interjections: &Interjections) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c == '\u{2019}' || c == '\u{2018}' {
                '\''
            } else {
                c
            }
        })
        .filter(|&c| c.is_alphanumeric() || c.is_whitespace() || is_token_internal(c))
        .flat_map(char::to_lowercase)
        .collect();
    cleaned
        .split_whitespace()
        .map(|t| t.trim_matches(is_token_internal))
        .filter(|t| !t.is_empty() && !interjections.contains(t))
        .map(str::to_string)
        .collect()
}

fn row_err(row: u64, message: impl Into<String>) -> TranscriptError {
    TranscriptError::Row {
        row,
        message: message.into(),
    }
}

/// Reads a transcript CSV into one session per team, ordered by team id.
pub fn parse_transcripts<R: Read>(source: R) -> Result<Vec<GameSession>, TranscriptError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::Headers)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 6];
    for (slot, name) in index.iter_mut().zip(TRANSCRIPT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TranscriptError::MissingColumn(name.to_string()))?;
    }
    let [team_col, speaker_col, role_col, start_col, end_col, text_col] = index;

    let mut by_team: BTreeMap<String, Vec<IpuRecord>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let team_id = field(team_col);
        let speaker_id = field(speaker_col);
        if team_id.is_empty() || speaker_id.is_empty() {
            return Err(row_err(row, "team_id and speaker_id must be nonempty"));
        }
        let role = field(role_col)
            .parse::<Role>()
            .map_err(|m| row_err(row, m))?;
        let start_ms = field(start_col)
            .parse::<i64>()
            .map_err(|_| row_err(row, format!("non-numeric start_ms '{}'", field(start_col))))?;
        let end_ms = field(end_col)
            .parse::<i64>()
            .map_err(|_| row_err(row, format!("non-numeric end_ms '{}'", field(end_col))))?;
        if start_ms < 0 {
            return Err(row_err(row, "start_ms must be nonnegative"));
        }
        if end_ms <= start_ms {
            return Err(row_err(
                row,
                format!("end_ms {end_ms} is not after start_ms {start_ms}"),
            ));
        }
        let text = record.get(text_col).unwrap_or("");
        if text.trim().is_empty() {
            return Err(row_err(row, "empty utterance text"));
        }
        by_team
            .entry(team_id.to_string())
            .or_default()
            .push(IpuRecord {
                team_id: team_id.to_string(),
                speaker_id: speaker_id.to_string(),
                role,
                start_ms,
                end_ms,
                text: text.to_string(),
            });
    }

    Ok(by_team
        .into_iter()
        .map(|(team, ipus)| GameSession::new(team, ipus))
        .collect())
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Vec<GameSession>, TranscriptError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| TranscriptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_transcripts(std::io::BufReader::new(file))
}

/// All of one speaker's preprocessed tokens in chronological order.
pub fn concatenate_speaker(
    session: &GameSession,
    speaker: &str,
    interjections: &Interjections,
) -> Result<Vec<String>, TranscriptError> {
    if !session.speakers.contains(speaker) {
        return Err(TranscriptError::UnknownSpeaker {
            team: session.team_id.clone(),
            speaker: speaker.to_string(),
        });
    }
    Ok(session
        .ipus
        .iter()
        .filter(|ipu| ipu.speaker_id == speaker)
        .flat_map(|ipu| preprocess(&ipu.text, interjections))
        .collect())
}

/// A game split into `n` equal-width intervals, with each speaker's tokens per
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub n: usize,
    pub boundaries: Vec<i64>,
    pub speakers: Vec<String>,
    /// `cells[speaker][interval]`, speakers in `speakers` order.
    cells: Vec<Vec<Vec<String>>>,
}

impl IntervalGrid {
    pub fn cell(&self, speaker: &str, interval: usize) -> Option<&[String]> {
        let s = self.speakers.iter().position(|x| x == speaker)?;
        self.cells[s].get(interval).map(Vec::as_slice)
    }

    /// Token sequences of every speaker in one interval, in speaker order.
    pub fn interval(&self, interval: usize) -> impl Iterator<Item = &[String]> + '_ {
        self.cells.iter().map(move |row| row[interval].as_slice())
    }
}

/// Interval of an IPU: the one whose closed upper boundary first reaches the
/// IPU's midpoint.
fn interval_of(boundaries: &[i64], midpoint_x2: i64) -> usize {
    let n = boundaries.len() - 1;
    boundaries[1..]
        .iter()
        .position(|&b| midpoint_x2 <= 2 * b)
        .unwrap_or(n - 1)
}

pub fn segment_intervals(
    session: &GameSession,
    n: usize,
    interjections: &Interjections,
) -> Result<IntervalGrid, TranscriptError> {
    if n < 2 {
        return Err(TranscriptError::TooFewIntervals(n));
    }
    let (start, end) = session
        .span()
        .ok_or_else(|| TranscriptError::EmptySession(session.team_id.clone()))?;
    let width = (end - start) as i128;
    let boundaries: Vec<i64> = (0..=n as i128)
        .map(|t| start + ((2 * width * t + n as i128) / (2 * n as i128)) as i64)
        .collect();

    let speakers: Vec<String> = session.speakers.iter().cloned().collect();
    let mut cells = vec![vec![Vec::new(); n]; speakers.len()];
    for ipu in &session.ipus {
        let s = speakers
            .binary_search(&ipu.speaker_id)
            .expect("session speakers cover all IPUs");
        let t = interval_of(&boundaries, ipu.midpoint_x2());
        cells[s][t].extend(preprocess(&ipu.text, interjections));
    }

    Ok(IntervalGrid {
        n,
        boundaries,
        speakers,
        cells,
    })
}
