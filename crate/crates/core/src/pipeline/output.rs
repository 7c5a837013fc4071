//! Rendering of tables and reports, and the staged write to the output
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::analysis::{AnalysisBody, AnalysisRecord};
use super::table::{column_names, TeamTable};
use super::PipelineError;
use crate::entrainment::{ConvergenceMeasures, MEASURE_NAMES};
use crate::outcomes::{TeamOutcomes, OUTCOME_NAMES};
use crate::team_profile::{female_pct_bucket, TeamCharacteristics, CHARACTERISTIC_NAMES};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_DIR: &str = "results";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_bytes(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| PipelineError::Internal(format!("csv encoding: {e}"));
    w.write_record(header).map_err(internal)?;
    for row in rows {
        w.write_record(&row).map_err(internal)?;
    }
    w.into_inner()
        .map_err(|e| PipelineError::Internal(format!("csv encoding: {e}")))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| PipelineError::Internal(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Values plus the 1-based interval pair behind each measure.
pub fn measures_csv(measures: &[(String, ConvergenceMeasures)]) -> Result<Vec<u8>, PipelineError> {
    let mut header = vec!["team_id".to_string(), "intervals".to_string()];
    header.extend(MEASURE_NAMES.iter().map(|m| m.to_string()));
    for m in MEASURE_NAMES {
        header.push(format!("{m}_i"));
        header.push(format!("{m}_j"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = measures.iter().map(|(team, m)| {
        let extrema = m.extrema();
        let mut row = vec![team.clone(), m.n.to_string()];
        row.extend(extrema.iter().map(|e| opt(e.map(|e| e.value))));
        for e in &extrema {
            row.push(e.map(|e| (e.i + 1).to_string()).unwrap_or_default());
            row.push(e.map(|e| (e.j + 1).to_string()).unwrap_or_default());
        }
        row
    });
    csv_bytes(&header, rows)
}

pub fn characteristics_csv(
    chars: &[(String, TeamCharacteristics)],
) -> Result<Vec<u8>, PipelineError> {
    let mut header = vec!["team_id"];
    header.extend(CHARACTERISTIC_NAMES);
    header.push("female_condition");
    let rows = chars.iter().map(|(team, c)| {
        let mut row = vec![team.clone()];
        row.extend(c.values().iter().map(|&v| num(v)));
        row.push(female_pct_bucket(c.female_pct).unwrap_or("").to_string());
        row
    });
    csv_bytes(&header, rows)
}

pub fn outcomes_csv(outcomes: &[(String, TeamOutcomes)]) -> Result<Vec<u8>, PipelineError> {
    let mut header = vec!["team_id"];
    header.extend(OUTCOME_NAMES);
    let rows = outcomes.iter().map(|(team, o)| {
        let mut row = vec![team.clone()];
        row.extend(o.values().iter().map(|&v| num(v)));
        row
    });
    csv_bytes(&header, rows)
}

pub fn teams_csv(table: &TeamTable) -> Result<Vec<u8>, PipelineError> {
    let mut header = vec!["team_id"];
    header.extend(column_names());
    let rows = table.rows.iter().map(|r| {
        let mut row = vec![r.team_id.clone()];
        row.extend(r.measures.iter().map(|&v| opt(v)));
        row.extend(r.characteristics.values().iter().map(|&v| num(v)));
        row.extend(r.outcomes.values().iter().map(|&v| num(v)));
        row
    });
    csv_bytes(&header, rows)
}

/// File name, header, rows.
type Table<'a> = (&'a str, &'a [&'a str], Vec<Vec<String>>);

/// One CSV per analysis type, keyed by file name. Types with no records are
/// left out.
pub fn analysis_csvs(
    records: &[AnalysisRecord],
) -> Result<BTreeMap<String, Vec<u8>>, PipelineError> {
    let mut corr = Vec::new();
    let mut anova = Vec::new();
    let mut tukey = Vec::new();
    let mut models = Vec::new();
    let mut terms = Vec::new();
    let mut skipped = Vec::new();
    for rec in records {
        let id = rec.id.clone();
        match &rec.body {
            AnalysisBody::Correlation(c) => corr.push(vec![
                id,
                c.x.clone(),
                c.y.clone(),
                c.n_used.to_string(),
                num(c.rho),
                c.df.to_string(),
                num(c.t),
                num(c.p_two_sided),
                c.p_two_sided_display.clone(),
                c.stars_two_sided.into(),
                num(c.p_one_sided),
                c.p_one_sided_display.clone(),
                c.stars_one_sided.into(),
            ]),
            AnalysisBody::Anova(a) => {
                anova.push(vec![
                    id.clone(),
                    a.dv.clone(),
                    a.grouping.clone(),
                    a.n_used.to_string(),
                    a.groups.len().to_string(),
                    num(a.f),
                    a.df_between.to_string(),
                    a.df_within.to_string(),
                    num(a.p),
                    a.p_display.clone(),
                    a.stars.into(),
                ]);
                for t in &a.tukey {
                    tukey.push(vec![
                        id.clone(),
                        a.dv.clone(),
                        a.grouping.clone(),
                        t.group_a.clone(),
                        t.group_b.clone(),
                        num(t.mean_diff),
                        num(t.q),
                        num(a.q_critical),
                        num(t.p_adjusted),
                        t.p_display.clone(),
                        t.significant.to_string(),
                    ]);
                }
            }
            AnalysisBody::Hlr(h) => {
                for (label, m) in [("M1", &h.m1), ("M2", &h.m2)] {
                    let delta = label == "M2";
                    models.push(vec![
                        id.clone(),
                        rec.kind.into(),
                        h.dv.clone(),
                        label.into(),
                        h.n_used.to_string(),
                        m.predictors.join(" "),
                        num(m.r_squared),
                        num(m.adj_r_squared),
                        opt(m.f),
                        m.df_model.to_string(),
                        m.df_resid.to_string(),
                        opt(m.p),
                        m.p_display.clone().unwrap_or_default(),
                        m.stars.into(),
                        if delta {
                            num(h.delta.r_squared)
                        } else {
                            String::new()
                        },
                        if delta { opt(h.delta.f) } else { String::new() },
                        if delta {
                            h.delta.df1.to_string()
                        } else {
                            String::new()
                        },
                        if delta {
                            h.delta.df2.to_string()
                        } else {
                            String::new()
                        },
                        if delta { opt(h.delta.p) } else { String::new() },
                        if delta {
                            h.delta.p_display.clone().unwrap_or_default()
                        } else {
                            String::new()
                        },
                        if delta {
                            h.delta.stars.into()
                        } else {
                            String::new()
                        },
                    ]);
                    for t in std::iter::once(&m.intercept).chain(&m.terms) {
                        terms.push(vec![
                            id.clone(),
                            rec.kind.into(),
                            h.dv.clone(),
                            label.into(),
                            t.name.clone(),
                            num(t.b),
                            opt(t.beta),
                            num(t.se),
                            num(t.t),
                            num(t.p),
                            t.p_display.clone(),
                            t.stars.into(),
                        ]);
                    }
                }
            }
            AnalysisBody::Skipped(s) => skipped.push(vec![
                id,
                rec.kind.into(),
                rec.spec.clone(),
                s.n_used.to_string(),
                s.reason.clone(),
            ]),
        }
    }

    let mut out = BTreeMap::new();
    let tables: [Table; 6] = [
        (
            "correlations.csv",
            &[
                "id",
                "x",
                "y",
                "n",
                "rho",
                "df",
                "t",
                "p_two_sided",
                "p_two_sided_display",
                "stars_two_sided",
                "p_one_sided",
                "p_one_sided_display",
                "stars_one_sided",
            ],
            corr,
        ),
        (
            "anova.csv",
            &[
                "id",
                "dv",
                "grouping",
                "n",
                "groups",
                "f",
                "df_between",
                "df_within",
                "p",
                "p_display",
                "stars",
            ],
            anova,
        ),
        (
            "tukey.csv",
            &[
                "id",
                "dv",
                "grouping",
                "group_a",
                "group_b",
                "mean_diff",
                "q",
                "q_critical",
                "p_adjusted",
                "p_display",
                "significant",
            ],
            tukey,
        ),
        (
            "hlr_models.csv",
            &[
                "id",
                "kind",
                "dv",
                "model",
                "n",
                "predictors",
                "r_squared",
                "adj_r_squared",
                "f",
                "df_model",
                "df_resid",
                "p",
                "p_display",
                "stars",
                "delta_r_squared",
                "delta_f",
                "delta_df1",
                "delta_df2",
                "delta_p",
                "delta_p_display",
                "delta_stars",
            ],
            models,
        ),
        (
            "hlr_terms.csv",
            &[
                "id",
                "kind",
                "dv",
                "model",
                "term",
                "b",
                "beta",
                "se",
                "t",
                "p",
                "p_display",
                "stars",
            ],
            terms,
        ),
        (
            "skipped.csv",
            &["id", "kind", "spec", "n_used", "reason"],
            skipped,
        ),
    ];
    for (name, header, rows) in tables {
        if !rows.is_empty() {
            out.insert(name.to_string(), csv_bytes(header, rows)?);
        }
    }
    Ok(out)
}

pub fn record_json(record: &AnalysisRecord) -> Result<Vec<u8>, PipelineError> {
    json_bytes(record)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    /// File name only, so that moving the inputs does not change the manifest.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub settings: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<FileDigest>,
    pub teams: Option<usize>,
    pub process_alpha: Option<f64>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn to_bytes(&self) -> Result<Vec<u8>, PipelineError> {
        json_bytes(self)
    }
}

/// Files of one run, held in memory until [`OutputSet::commit`].
#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub fn insert(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn digests(&self) -> Vec<FileDigest> {
        self.files
            .iter()
            .map(|(file, bytes)| FileDigest {
                file: file.clone(),
                sha256: sha256_hex(bytes),
            })
            .collect()
    }

    /// Writes every file into a staging directory next to `dir` and then
    /// moves them into place. Nothing is left behind if a write fails.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        let out_err = |path: &Path, e: std::io::Error| PipelineError::Output {
            path: path.display().to_string(),
            source: e,
        };
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| out_err(&parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".entrain-staging-")
            .tempdir_in(&parent)
            .map_err(|e| out_err(&parent, e))?;
        for (name, bytes) in &self.files {
            let path = staging.path().join(name);
            if let Some(p) = path.parent() {
                fs::create_dir_all(p).map_err(|e| out_err(p, e))?;
            }
            fs::write(&path, bytes).map_err(|e| out_err(&path, e))?;
        }

        if !dir.exists() {
            let staged = staging.keep();
            return match fs::rename(&staged, dir) {
                Ok(()) => Ok(self.files.keys().map(|n| dir.join(n)).collect()),
                Err(e) => {
                    let _ = fs::remove_dir_all(&staged);
                    Err(out_err(dir, e))
                }
            };
        }
        let results = dir.join(RESULTS_DIR);
        if results.is_dir() {
            fs::remove_dir_all(&results).map_err(|e| out_err(&results, e))?;
        }
        let mut written = Vec::new();
        for name in self.files.keys() {
            let target = dir.join(name);
            if let Some(p) = target.parent() {
                fs::create_dir_all(p).map_err(|e| out_err(p, e))?;
            }
            fs::rename(staging.path().join(name), &target).map_err(|e| out_err(&target, e))?;
            written.push(target);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_into_new_and_existing_dirs() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let mut set = OutputSet::default();
        set.insert("a.csv", b"x\n1\n".to_vec());
        set.insert("results/001_x.json", b"{}\n".to_vec());
        set.commit(&dir).unwrap();
        assert_eq!(fs::read(dir.join("a.csv")).unwrap(), b"x\n1\n");

        fs::write(dir.join("results/stale.json"), b"old").unwrap();
        set.insert("a.csv", b"x\n2\n".to_vec());
        set.commit(&dir).unwrap();
        assert_eq!(fs::read(dir.join("a.csv")).unwrap(), b"x\n2\n");
        assert!(!dir.join("results/stale.json").exists());
        // no staging directories left next to the output
        let leftovers = fs::read_dir(tmp.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn digests_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
