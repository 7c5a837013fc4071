//! The team-level table: one row per team holding every measure,
//! characteristic and outcome.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::PipelineError;
use crate::entrainment::{ConvergenceMeasures, MEASURE_NAMES};
use crate::outcomes::{TeamOutcomes, OUTCOME_NAMES};
use crate::stats::Variable;
use crate::team_profile::{female_pct_bucket, TeamCharacteristics, CHARACTERISTIC_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamRow {
    pub team_id: String,
    /// In [`MEASURE_NAMES`] order; absent where no interval pair converges.
    pub measures: [Option<f64>; 8],
    pub characteristics: TeamCharacteristics,
    pub outcomes: TeamOutcomes,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TeamTable {
    pub rows: Vec<TeamRow>,
}

/// Every column name of the joined table, in file order.
pub fn column_names() -> impl Iterator<Item = &'static str> {
    MEASURE_NAMES
        .iter()
        .chain(&CHARACTERISTIC_NAMES)
        .chain(&OUTCOME_NAMES)
        .copied()
}

impl TeamTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_column(name: &str) -> bool {
        column_names().any(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        if let Some(k) = MEASURE_NAMES.iter().position(|&m| m == name) {
            return Some(self.rows.iter().map(|r| r.measures[k]).collect());
        }
        if let Some(k) = CHARACTERISTIC_NAMES.iter().position(|&m| m == name) {
            return Some(
                self.rows
                    .iter()
                    .map(|r| Some(r.characteristics.values()[k]))
                    .collect(),
            );
        }
        if let Some(k) = OUTCOME_NAMES.iter().position(|&m| m == name) {
            return Some(
                self.rows
                    .iter()
                    .map(|r| Some(r.outcomes.values()[k]))
                    .collect(),
            );
        }
        None
    }

    pub fn variable(&self, name: &str) -> Option<Variable> {
        self.column(name).map(|values| Variable::new(name, values))
    }

    /// Group label and ordering key of each row for `name`. Female percentage
    /// maps onto the composition conditions; anything else groups by value.
    pub fn grouping(&self, name: &str) -> Option<Vec<Option<(f64, String)>>> {
        let column = self.column(name)?;
        Some(
            column
                .into_iter()
                .map(|v| {
                    v.map(|v| {
                        if name == "female_pct" {
                            match female_pct_bucket(v) {
                                Some(label) => {
                                    (label.parse::<f64>().unwrap_or(v), label.to_string())
                                }
                                None => (v, format!("{v:.2}")),
                            }
                        } else {
                            (v, format!("{v}"))
                        }
                    })
                })
                .collect(),
        )
    }
}

fn index_source<'a, T>(
    source: &'static str,
    items: &'a [(String, T)],
) -> Result<BTreeMap<&'a str, &'a T>, PipelineError> {
    let mut map = BTreeMap::new();
    for (team, item) in items {
        if map.insert(team.as_str(), item).is_some() {
            return Err(PipelineError::Join(format!(
                "team '{team}' appears twice in the {source}"
            )));
        }
    }
    Ok(map)
}

/// Inner join on team id. Teams missing from any source are dropped and
/// reported in the returned warnings.
pub fn join_team_table(
    measures: &[(String, ConvergenceMeasures)],
    characteristics: &[(String, TeamCharacteristics)],
    outcomes: &[(String, TeamOutcomes)],
) -> Result<(TeamTable, Vec<String>), PipelineError> {
    let m = index_source("measures", measures)?;
    let c = index_source("characteristics", characteristics)?;
    let o = index_source("outcomes", outcomes)?;

    let all: BTreeSet<&str> = m.keys().chain(c.keys()).chain(o.keys()).copied().collect();
    let mut warnings = Vec::new();
    for (source, keys) in [
        ("transcripts", m.keys().copied().collect::<BTreeSet<_>>()),
        ("roster", c.keys().copied().collect()),
        ("survey", o.keys().copied().collect()),
    ] {
        let missing: Vec<&str> = all.difference(&keys).copied().collect();
        if !missing.is_empty() {
            warnings.push(format!(
                "{} team(s) missing from the {source} and left out of the join: {}",
                missing.len(),
                missing.join(", ")
            ));
        }
    }

    let rows: Vec<TeamRow> = m
        .iter()
        .filter_map(|(team, meas)| {
            Some(TeamRow {
                team_id: team.to_string(),
                measures: meas.values(),
                characteristics: **c.get(team)?,
                outcomes: **o.get(team)?,
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(PipelineError::Join(
            "no team is present in all of transcripts, roster and survey".into(),
        ));
    }
    Ok((TeamTable { rows }, warnings))
}
