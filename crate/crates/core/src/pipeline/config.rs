//! Run configuration: a flat TOML document plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::spec::AnalysisSpec;
use super::PipelineError;
use crate::entrainment::DEFAULT_INTERVALS;

/// Environment variable naming a dictionary to use when none is configured.
pub const LEXICON_ENV: &str = "ENTRAIN_LEXICON";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(PipelineError::Validation(format!(
                "unknown output format '{other}'"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub transcripts: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    /// Dictionary file; falls back to `ENTRAIN_LEXICON`, then the bundled one.
    pub lexicon: Option<PathBuf>,
    /// Interjection list, one per line; the built-in list when absent.
    pub interjections: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub intervals: usize,
    pub alpha: f64,
    pub entry_p: f64,
    pub formats: Vec<OutputFormat>,
    /// Worker threads; available parallelism when absent.
    pub jobs: Option<usize>,
    pub scale_min: f64,
    pub scale_max: f64,
    pub analyses: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            transcripts: None,
            roster: None,
            survey: None,
            lexicon: None,
            interjections: None,
            output_dir: PathBuf::from("out"),
            intervals: DEFAULT_INTERVALS,
            alpha: 0.05,
            entry_p: 0.05,
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            jobs: None,
            scale_min: 1.0,
            scale_max: 5.0,
            analyses: Vec::new(),
        }
    }
}

/// Values given on the command line. Anything set here wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub transcripts: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub interjections: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub intervals: Option<usize>,
    pub alpha: Option<f64>,
    pub entry_p: Option<f64>,
    pub formats: Option<Vec<OutputFormat>>,
    pub jobs: Option<usize>,
    pub scale_min: Option<f64>,
    pub scale_max: Option<f64>,
    pub analyses: Option<Vec<String>>,
}

/// Inputs a subcommand cannot run without.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Requirements {
    pub transcripts: bool,
    pub roster: bool,
    pub survey: bool,
    pub analyses: bool,
}

impl RunConfig {
    pub fn parse_toml(source: &str) -> Result<Self, PipelineError> {
        toml::from_str(source).map_err(|e| PipelineError::Validation(format!("config: {e}")))
    }

    /// Reads a config file. Relative paths inside it are taken relative to the
    /// file's own directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse_toml(&text)
            .map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.transcripts,
            &mut cfg.roster,
            &mut cfg.survey,
            &mut cfg.lexicon,
            &mut cfg.interjections,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = o.$field { self.$field = v.into(); }
            )*};
        }
        take!(transcripts, roster, survey, lexicon, interjections, jobs);
        take!(output_dir, intervals, alpha, entry_p, formats, scale_min, scale_max, analyses);
    }

    /// Dictionary path after the environment fallback; `None` means bundled.
    pub fn lexicon_path(&self) -> Option<PathBuf> {
        self.lexicon.clone().or_else(|| {
            std::env::var_os(LEXICON_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    /// Checks everything that can be checked before touching the data.
    pub fn validate(&self, needs: Requirements) -> Result<Vec<AnalysisSpec>, PipelineError> {
        let bad = |msg: String| Err(PipelineError::Validation(msg));
        if self.intervals < 2 {
            return bad(format!(
                "intervals must be at least 2, got {}",
                self.intervals
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("entry_p", self.entry_p)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie strictly between 0 and 1, got {v}"));
            }
        }
        if !(self.scale_min.is_finite()
            && self.scale_max.is_finite()
            && self.scale_min < self.scale_max)
        {
            return bad(format!(
                "scale bounds must satisfy scale_min < scale_max, got {} and {}",
                self.scale_min, self.scale_max
            ));
        }
        if self.formats.is_empty() {
            return bad("at least one output format is required".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        let required = [
            ("transcripts", needs.transcripts, &self.transcripts),
            ("roster", needs.roster, &self.roster),
            ("survey", needs.survey, &self.survey),
        ];
        for (name, needed, path) in required {
            match path {
                None if needed => return bad(format!("no {name} file given")),
                Some(p) if needed && !p.is_file() => {
                    return bad(format!("{name} file {} does not exist", p.display()))
                }
                _ => {}
            }
        }
        if needs.transcripts {
            if let Some(p) = self.lexicon_path() {
                if !p.is_file() {
                    return bad(format!("lexicon file {} does not exist", p.display()));
                }
            }
            if let Some(p) = &self.interjections {
                if !p.is_file() {
                    return bad(format!("interjections file {} does not exist", p.display()));
                }
            }
        }
        let specs = self
            .analyses
            .iter()
            .map(|s| s.parse::<AnalysisSpec>())
            .collect::<Result<Vec<_>, _>>()?;
        if needs.analyses && specs.is_empty() {
            return bad("no analyses declared".into());
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        let cfg =
            RunConfig::parse_toml("intervals = 8\nalpha = 0.01\nformats = [\"json\"]\n").unwrap();
        assert_eq!(cfg.intervals, 8);
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.entry_p, 0.05);
        assert_eq!(cfg.formats, [OutputFormat::Json]);
        assert!(RunConfig::parse_toml("bogus = 1").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::parse_toml("intervals = 8\nalpha = 0.01").unwrap();
        cfg.apply(Overrides {
            intervals: Some(4),
            jobs: Some(2),
            ..Overrides::default()
        });
        assert_eq!((cfg.intervals, cfg.alpha, cfg.jobs), (4, 0.01, Some(2)));
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        assert!(ok.validate(Requirements::default()).is_ok());
        let one = RunConfig {
            intervals: 1,
            ..RunConfig::default()
        };
        assert!(matches!(
            one.validate(Requirements::default()),
            Err(PipelineError::Validation(_))
        ));
        let alpha = RunConfig {
            alpha: 1.0,
            ..RunConfig::default()
        };
        assert!(alpha.validate(Requirements::default()).is_err());
        let needs = Requirements {
            roster: true,
            ..Requirements::default()
        };
        assert!(ok.validate(needs).is_err());
        let missing = RunConfig {
            roster: Some("/definitely/not/here.csv".into()),
            ..RunConfig::default()
        };
        assert!(missing.validate(needs).is_err());
        let bad_spec = RunConfig {
            analyses: vec!["regress y on x".into()],
            ..RunConfig::default()
        };
        assert!(bad_spec.validate(Requirements::default()).is_err());
    }
}
