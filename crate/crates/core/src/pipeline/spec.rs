//! The small analysis language used in config files.
//!
//! ```text
//! correlate unw_absmax ~ gender_blau
//! anova w_max by female_pct
//! hlr task_conflict ~ age_sd, team_size | step(@measures)
//! hlr_flipped task_conflict ~ @characteristics | @measures
//! ```
//!
//! `@measures`, `@characteristics` and `@outcomes` expand to the standard
//! column groups.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::PipelineError;
use crate::entrainment::MEASURE_NAMES;
use crate::outcomes::OUTCOME_NAMES;
use crate::team_profile::CHARACTERISTIC_NAMES;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub variables: Vec<String>,
    /// Enter the variables by forward selection instead of all at once.
    pub stepwise: bool,
}

impl Block {
    pub fn fixed<S: Into<String>>(vars: impl IntoIterator<Item = S>) -> Self {
        Self {
            variables: vars.into_iter().map(Into::into).collect(),
            stepwise: false,
        }
    }

    pub fn stepwise<S: Into<String>>(vars: impl IntoIterator<Item = S>) -> Self {
        Self {
            stepwise: true,
            ..Self::fixed(vars)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisSpec {
    Correlate {
        x: String,
        y: String,
    },
    Anova {
        dv: String,
        grouping: String,
    },
    Hlr {
        dv: String,
        block1: Block,
        block2: Block,
    },
    /// Entrainment enters first by forward selection; the second block holds
    /// the characteristics that were significant in the forward model
    /// `dv ~ characteristics | step(entrainment)`.
    HlrFlipped {
        dv: String,
        characteristics: Vec<String>,
        entrainment: Vec<String>,
    },
}

impl AnalysisSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Correlate { .. } => "correlate",
            Self::Anova { .. } => "anova",
            Self::Hlr { .. } => "hlr",
            Self::HlrFlipped { .. } => "hlr_flipped",
        }
    }

    /// Every column the analysis reads.
    pub fn variables(&self) -> Vec<&str> {
        match self {
            Self::Correlate { x, y } => vec![x, y],
            Self::Anova { dv, grouping } => vec![dv, grouping],
            Self::Hlr { dv, block1, block2 } => std::iter::once(dv)
                .chain(&block1.variables)
                .chain(&block2.variables)
                .map(String::as_str)
                .collect(),
            Self::HlrFlipped {
                dv,
                characteristics,
                entrainment,
            } => std::iter::once(dv)
                .chain(characteristics)
                .chain(entrainment)
                .map(String::as_str)
                .collect(),
        }
    }

    /// Short name used in output file names.
    pub fn slug(&self) -> String {
        match self {
            Self::Correlate { x, y } => format!("{x}_{y}"),
            Self::Anova { dv, grouping } => format!("{dv}_by_{grouping}"),
            Self::Hlr { dv, .. } | Self::HlrFlipped { dv, .. } => dv.clone(),
        }
    }
}

fn invalid(spec: &str, why: &str) -> PipelineError {
    PipelineError::Validation(format!("analysis '{spec}': {why}"))
}

fn ident(s: &str, spec: &str) -> Result<String, PipelineError> {
    let s = s.trim();
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(invalid(spec, &format!("'{s}' is not a variable name")));
    }
    Ok(s.to_string())
}

fn list(s: &str, spec: &str) -> Result<Vec<String>, PipelineError> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        let group: Option<&[&str]> = match item {
            "@measures" => Some(&MEASURE_NAMES),
            "@characteristics" => Some(&CHARACTERISTIC_NAMES),
            "@outcomes" => Some(&OUTCOME_NAMES),
            _ => None,
        };
        match group {
            Some(names) => out.extend(names.iter().map(|n| n.to_string())),
            None => out.push(ident(item, spec)?),
        }
    }
    for (i, v) in out.iter().enumerate() {
        if out[..i].contains(v) {
            return Err(invalid(spec, &format!("'{v}' is listed twice")));
        }
    }
    Ok(out)
}

fn block(s: &str, spec: &str) -> Result<Block, PipelineError> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("step(").and_then(|r| r.strip_suffix(')')) {
        Ok(Block::stepwise(list(inner, spec)?))
    } else if s.is_empty() {
        Ok(Block::fixed(Vec::<String>::new()))
    } else {
        Ok(Block::fixed(list(s, spec)?))
    }
}

impl FromStr for AnalysisSpec {
    type Err = PipelineError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let text = spec.trim();
        let (kind, rest) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| invalid(spec, "expected '<kind> <arguments>'"))?;
        match kind {
            "correlate" => {
                let (x, y) = rest
                    .split_once('~')
                    .ok_or_else(|| invalid(spec, "expected 'x ~ y'"))?;
                Ok(Self::Correlate {
                    x: ident(x, spec)?,
                    y: ident(y, spec)?,
                })
            }
            "anova" => {
                let (dv, g) = rest
                    .split_once(" by ")
                    .ok_or_else(|| invalid(spec, "expected 'dv by grouping'"))?;
                Ok(Self::Anova {
                    dv: ident(dv, spec)?,
                    grouping: ident(g, spec)?,
                })
            }
            "hlr" | "hlr_flipped" => {
                let (dv, blocks) = rest
                    .split_once('~')
                    .ok_or_else(|| invalid(spec, "expected 'dv ~ block1 | block2'"))?;
                let dv = ident(dv, spec)?;
                let (b1, b2) = blocks.split_once('|').unwrap_or((blocks, ""));
                let (block1, block2) = (block(b1, spec)?, block(b2, spec)?);
                if block1.variables.is_empty() {
                    return Err(invalid(spec, "the first block is empty"));
                }
                if let Some(v) = block2
                    .variables
                    .iter()
                    .find(|v| block1.variables.contains(v))
                {
                    return Err(invalid(spec, &format!("'{v}' appears in both blocks")));
                }
                if block1.variables.contains(&dv) || block2.variables.contains(&dv) {
                    return Err(invalid(spec, "the dependent variable is also a predictor"));
                }
                if kind == "hlr" {
                    Ok(Self::Hlr { dv, block1, block2 })
                } else {
                    if block1.stepwise || block2.stepwise || block2.variables.is_empty() {
                        return Err(invalid(
                            spec,
                            "expected 'dv ~ characteristics | entrainment'",
                        ));
                    }
                    Ok(Self::HlrFlipped {
                        dv,
                        characteristics: block1.variables,
                        entrainment: block2.variables,
                    })
                }
            }
            other => Err(invalid(spec, &format!("unknown analysis kind '{other}'"))),
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, b: &Block) -> fmt::Result {
    let joined = b.variables.join(", ");
    if b.stepwise {
        write!(f, "step({joined})")
    } else {
        f.write_str(&joined)
    }
}

impl fmt::Display for AnalysisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Correlate { x, y } => write!(f, "correlate {x} ~ {y}"),
            Self::Anova { dv, grouping } => write!(f, "anova {dv} by {grouping}"),
            Self::Hlr { dv, block1, block2 } => {
                write!(f, "hlr {dv} ~ ")?;
                write_block(f, block1)?;
                if !block2.variables.is_empty() || block2.stepwise {
                    f.write_str(" | ")?;
                    write_block(f, block2)?;
                }
                Ok(())
            }
            Self::HlrFlipped {
                dv,
                characteristics,
                entrainment,
            } => write!(
                f,
                "hlr_flipped {dv} ~ {} | {}",
                characteristics.join(", "),
                entrainment.join(", ")
            ),
        }
    }
}
