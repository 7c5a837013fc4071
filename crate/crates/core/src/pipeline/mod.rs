//! End-to-end runs: ingestion, measures, characteristics, outcomes, the joined
//! team table, analyses and the run manifest.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub mod analysis;
pub mod config;
pub mod output;
pub mod spec;
pub mod table;

pub use analysis::{AnalysisBody, AnalysisRecord};
pub use config::{OutputFormat, Overrides, Requirements, RunConfig, LEXICON_ENV};
pub use spec::{AnalysisSpec, Block};
pub use table::{join_team_table, TeamRow, TeamTable};

use crate::entrainment::{measure_team, ConvergenceMeasures, EntrainmentError};
use crate::lexicon::{Lexicon, LexiconError};
use crate::outcomes::{build_outcomes, OutcomeError, ScaleBounds, TeamOutcomes, ALPHA_WARNING};
use crate::team_profile::{
    characterize_roster, female_pct_bucket, MemberRecord, ProfileError, TeamCharacteristics,
};
use crate::transcript::{Interjections, TranscriptError};
use output::{InputDigest, Manifest, OutputSet, MANIFEST_FILE, RESULTS_DIR};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Transcripts {
        path: String,
        #[source]
        source: TranscriptError,
    },
    #[error("{path}: {source}")]
    Roster {
        path: String,
        #[source]
        source: ProfileError,
    },
    #[error("{path}: {source}")]
    Survey {
        path: String,
        #[source]
        source: OutcomeError,
    },
    #[error("{path}: {source}")]
    Lexicon {
        path: String,
        #[source]
        source: LexiconError,
    },
    #[error("team '{team}': {source}")]
    Measure {
        team: String,
        #[source]
        source: EntrainmentError,
    },
    #[error("{0}")]
    Join(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    /// Process exit status: 1 validation, 2 data, 3 internal or output.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Transcripts { .. }
            | Self::Roster { .. }
            | Self::Survey { .. }
            | Self::Lexicon { .. }
            | Self::Measure { .. }
            | Self::Join(_) => 2,
            Self::Output { .. } | Self::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Measure,
    Characterize,
    Outcomes,
    Analyze,
    Replicate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Measure => "measure",
            Self::Characterize => "characterize",
            Self::Outcomes => "outcomes",
            Self::Analyze => "analyze",
            Self::Replicate => "replicate",
        }
    }

    pub fn requirements(self) -> Requirements {
        let all = Requirements {
            transcripts: true,
            roster: true,
            survey: true,
            analyses: false,
        };
        match self {
            Self::Measure => Requirements {
                transcripts: true,
                ..Requirements::default()
            },
            Self::Characterize => Requirements {
                roster: true,
                ..Requirements::default()
            },
            Self::Outcomes => Requirements {
                survey: true,
                ..Requirements::default()
            },
            Self::Analyze => Requirements {
                analyses: true,
                ..all
            },
            Self::Replicate => all,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub teams: Option<usize>,
    pub analyses: usize,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Settings that influence results; hashed into the manifest. Output location
/// and thread count are deliberately absent.
#[derive(Serialize)]
struct Settings<'a> {
    intervals: usize,
    alpha: f64,
    entry_p: f64,
    formats: &'a [OutputFormat],
    scale_min: f64,
    scale_max: f64,
    lexicon: String,
    interjections: String,
    analyses: Vec<String>,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &'static str, path: &Path) -> Result<Vec<u8>, PipelineError> {
        let bytes = std::fs::read(path).map_err(|e| {
            PipelineError::Validation(format!("cannot read {role} file {}: {e}", path.display()))
        })?;
        self.digests.push(InputDigest {
            role,
            file: file_name(path),
            sha256: output::sha256_hex(&bytes),
        });
        Ok(bytes)
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    inputs: Inputs,
    warnings: Vec<String>,
    pool: rayon::ThreadPool,
}

impl<'a> Run<'a> {
    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }

    fn roster(&mut self) -> Result<Option<Vec<MemberRecord>>, PipelineError> {
        let Some(path) = self.cfg.roster.clone() else {
            return Ok(None);
        };
        let bytes = self.inputs.read("roster", &path)?;
        let members = crate::team_profile::parse_roster(bytes.as_slice()).map_err(|source| {
            PipelineError::Roster {
                path: path.display().to_string(),
                source,
            }
        })?;
        Ok(Some(members))
    }

    fn measures(
        &mut self,
        roster: Option<&[MemberRecord]>,
    ) -> Result<Vec<(String, ConvergenceMeasures)>, PipelineError> {
        let path = self.cfg.transcripts.clone().expect("validated");
        let bytes = self.inputs.read("transcripts", &path)?;
        let mut sessions =
            crate::transcript::parse_transcripts(bytes.as_slice()).map_err(|source| {
                PipelineError::Transcripts {
                    path: path.display().to_string(),
                    source,
                }
            })?;
        let lexicon = match self.cfg.lexicon_path() {
            Some(p) => {
                let bytes = self.inputs.read("lexicon", &p)?;
                let text = String::from_utf8(bytes).map_err(|e| {
                    PipelineError::Validation(format!("lexicon {} is not UTF-8: {e}", p.display()))
                })?;
                Lexicon::parse(&text).map_err(|source| PipelineError::Lexicon {
                    path: p.display().to_string(),
                    source,
                })?
            }
            None => Lexicon::bundled(),
        };
        let interjections = match &self.cfg.interjections {
            Some(p) => {
                let bytes = self.inputs.read("interjections", p)?;
                Interjections::parse(&String::from_utf8_lossy(&bytes))
            }
            None => Interjections::default(),
        };
        if let Some(members) = roster {
            // members who never spoke still count as speakers of their team
            for s in &mut sessions {
                let before = s.speakers.len();
                s.speakers.extend(
                    members
                        .iter()
                        .filter(|m| m.team_id == s.team_id)
                        .map(|m| m.speaker_id.clone()),
                );
                if s.speakers.len() > before {
                    log::info!(
                        "team '{}': {} silent roster member(s) scored as empty",
                        s.team_id,
                        s.speakers.len() - before
                    );
                }
            }
        }
        let n = self.cfg.intervals;
        let results: Vec<Result<(String, ConvergenceMeasures), PipelineError>> =
            self.pool.install(|| {
                sessions
                    .par_iter()
                    .map(|s| {
                        measure_team(s, &lexicon, n, &interjections)
                            .map(|m| (s.team_id.clone(), m))
                            .map_err(|source| PipelineError::Measure {
                                team: s.team_id.clone(),
                                source,
                            })
                    })
                    .collect()
            });
        let measures = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let no_conv = measures
            .iter()
            .filter(|(_, m)| m.unweighted.max_conv.is_none())
            .count();
        if no_conv > 0 {
            log::info!(
                "{no_conv} team(s) show no unweighted convergence; their Max/Min are left empty"
            );
        }
        Ok(measures)
    }

    fn characteristics(
        &mut self,
        members: &[MemberRecord],
    ) -> Result<Vec<(String, TeamCharacteristics)>, PipelineError> {
        let path = self
            .cfg
            .roster
            .as_ref()
            .expect("validated")
            .display()
            .to_string();
        let chars = characterize_roster(members)
            .map_err(|source| PipelineError::Roster { path, source })?;
        for (team, c) in &chars {
            if female_pct_bucket(c.female_pct).is_none() {
                self.warn(format!(
                    "team '{team}': female share {:.2}% is not within one point of a composition condition",
                    c.female_pct
                ));
            }
        }
        Ok(chars.into_iter().collect())
    }

    fn outcomes(&mut self) -> Result<(Vec<(String, TeamOutcomes)>, f64), PipelineError> {
        let path = self.cfg.survey.clone().expect("validated");
        let bytes = self.inputs.read("survey", &path)?;
        let display = path.display().to_string();
        let bounds = ScaleBounds {
            min: self.cfg.scale_min,
            max: self.cfg.scale_max,
        };
        let responses =
            crate::outcomes::parse_survey(bytes.as_slice(), bounds).map_err(|source| {
                PipelineError::Survey {
                    path: display.clone(),
                    source,
                }
            })?;
        let set = build_outcomes(&responses).map_err(|source| PipelineError::Survey {
            path: display,
            source,
        })?;
        if set.process_alpha < ALPHA_WARNING {
            self.warnings.push(format!(
                "team-process scales have low reliability (alpha = {:.3})",
                set.process_alpha
            ));
        }
        Ok((set.teams.into_iter().collect(), set.process_alpha))
    }

    fn analyses(
        &self,
        table: &TeamTable,
        specs: &[AnalysisSpec],
        first_id: usize,
    ) -> Vec<AnalysisRecord> {
        let (alpha, entry_p) = (self.cfg.alpha, self.cfg.entry_p);
        self.pool.install(|| {
            specs
                .par_iter()
                .enumerate()
                .map(|(k, spec)| {
                    analysis::run_analysis(
                        table,
                        spec,
                        format!("{:03}", first_id + k),
                        alpha,
                        entry_p,
                    )
                })
                .collect()
        })
    }
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    builder
        .build()
        .map_err(|e| PipelineError::Internal(format!("worker pool: {e}")))
}

/// Runs `command` with `cfg` and writes its outputs. On error nothing is
/// written.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    let mut specs = cfg.validate(command.requirements())?;
    match command {
        Command::Analyze => analysis::check_variables(&specs)?,
        Command::Replicate => specs = analysis::replication_battery(),
        _ => specs.clear(),
    }

    let mut run = Run {
        cfg,
        inputs: Inputs {
            digests: Vec::new(),
        },
        warnings: Vec::new(),
        pool: build_pool(cfg.jobs)?,
    };
    let mut files = OutputSet::default();
    let mut teams = None;
    let mut process_alpha = None;
    let mut records = Vec::new();

    let roster = match command {
        Command::Measure | Command::Characterize | Command::Analyze | Command::Replicate => {
            run.roster()?
        }
        Command::Outcomes => None,
    };
    let measures = match command {
        Command::Measure | Command::Analyze | Command::Replicate => {
            let m = run.measures(roster.as_deref())?;
            files.insert("measures.csv", output::measures_csv(&m)?);
            Some(m)
        }
        _ => None,
    };
    let chars = match (command, &roster) {
        (Command::Characterize | Command::Analyze | Command::Replicate, Some(members)) => {
            let c = run.characteristics(members)?;
            files.insert("characteristics.csv", output::characteristics_csv(&c)?);
            Some(c)
        }
        _ => None,
    };
    let outcomes = match command {
        Command::Outcomes | Command::Analyze | Command::Replicate => {
            let (o, alpha) = run.outcomes()?;
            files.insert("outcomes.csv", output::outcomes_csv(&o)?);
            process_alpha = Some(alpha);
            Some(o)
        }
        _ => None,
    };

    if let (Some(m), Some(c), Some(o)) = (&measures, &chars, &outcomes) {
        let (table, join_warnings) = join_team_table(m, c, o)?;
        for w in join_warnings {
            run.warn(w);
        }
        teams = Some(table.len());
        files.insert("teams.csv", output::teams_csv(&table)?);

        records = run.analyses(&table, &specs, 1);
        if command == Command::Replicate {
            let flipped = analysis::flipped_followups(&records, &specs);
            let more = run.analyses(&table, &flipped, records.len() + 1);
            records.extend(more);
        }
        for r in &records {
            if let AnalysisBody::Skipped(s) = &r.body {
                run.warn(format!(
                    "analysis {} '{}' skipped (n = {}): {}",
                    r.id, r.spec, s.n_used, s.reason
                ));
            }
        }
        if cfg.wants(OutputFormat::Json) {
            for r in &records {
                let name = format!("{RESULTS_DIR}/{}_{}_{}.json", r.id, r.kind, slug(&r.spec));
                files.insert(name, output::record_json(r)?);
            }
        }
        if cfg.wants(OutputFormat::Csv) {
            for (name, bytes) in output::analysis_csvs(&records)? {
                files.insert(format!("{RESULTS_DIR}/{name}"), bytes);
            }
        }
    }

    let settings = Settings {
        intervals: cfg.intervals,
        alpha: cfg.alpha,
        entry_p: cfg.entry_p,
        formats: &cfg.formats,
        scale_min: cfg.scale_min,
        scale_max: cfg.scale_max,
        lexicon: cfg
            .lexicon_path()
            .as_deref()
            .map_or("bundled".into(), file_name),
        interjections: cfg
            .interjections
            .as_deref()
            .map_or("default".into(), file_name),
        analyses: specs.iter().map(ToString::to_string).collect(),
    };
    let settings =
        serde_json::to_value(&settings).map_err(|e| PipelineError::Internal(e.to_string()))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        config_sha256: output::sha256_hex(settings.to_string().as_bytes()),
        settings,
        inputs: run.inputs.digests,
        outputs: files.digests(),
        teams,
        process_alpha,
        warnings: run.warnings.clone(),
    };
    files.insert(MANIFEST_FILE, manifest.to_bytes()?);
    files.commit(&cfg.output_dir)?;

    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        files: files.names().map(String::from).collect(),
        teams,
        analyses: records.len(),
        skipped: records.iter().filter(|r| r.is_skipped()).count(),
        warnings: run.warnings,
    })
}

/// File-name-safe rendering of a spec.
fn slug(spec: &str) -> String {
    let cleaned: String = spec
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                ' '
            }
        })
        .collect();
    let words: Vec<&str> = cleaned
        .split_whitespace()
        .skip(1)
        .filter(|w| *w != "step")
        .collect();
    let mut out = words.join("-");
    out.truncate(60);
    out
}
