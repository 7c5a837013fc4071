//! `entrain` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entrain::pipeline::{
    self, Command, OutputFormat, Overrides, PipelineError, RunConfig, RunSummary,
};

#[derive(Debug, Parser)]
#[command(
    name = "entrain",
    version,
    about = "Team-level linguistic style entrainment and outcome statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Per-team convergence measures from transcripts.
    Measure(RunArgs),
    /// Team composition from the roster.
    Characterize(RunArgs),
    /// Team outcome scores from the survey.
    Outcomes(RunArgs),
    /// Run the analyses listed with --analysis or in the config file.
    Analyze(RunArgs),
    /// Every table plus the full analysis battery.
    Replicate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    roster: Option<PathBuf>,
    #[arg(long)]
    survey: Option<PathBuf>,
    /// Dictionary in .dic format (default: $ENTRAIN_LEXICON, then the bundled one).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Interjections to drop, one per line.
    #[arg(long)]
    interjections: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Number of time intervals per session.
    #[arg(short = 'n', long)]
    intervals: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Entry threshold for forward selection.
    #[arg(long)]
    entry_p: Option<f64>,
    /// Result formats (csv, json); repeatable.
    #[arg(long = "format", value_parser = parse_format)]
    formats: Vec<OutputFormat>,
    /// Worker threads.
    #[arg(short, long)]
    jobs: Option<usize>,
    #[arg(long)]
    scale_min: Option<f64>,
    #[arg(long)]
    scale_max: Option<f64>,
    /// Analysis spec, e.g. "correlate unw_max ~ gender_blau"; repeatable.
    #[arg(short, long = "analysis")]
    analyses: Vec<String>,
    /// More logging; repeat for debug output.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: PipelineError| e.to_string())
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() {
        None
    } else {
        Some(v)
    }
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(Overrides {
            transcripts: self.transcripts,
            roster: self.roster,
            survey: self.survey,
            lexicon: self.lexicon,
            interjections: self.interjections,
            output_dir: self.output_dir,
            intervals: self.intervals,
            alpha: self.alpha,
            entry_p: self.entry_p,
            formats: non_empty(self.formats),
            jobs: self.jobs,
            scale_min: self.scale_min,
            scale_max: self.scale_max,
            analyses: non_empty(self.analyses),
        });
        Ok(cfg)
    }
}

fn report(summary: &RunSummary) {
    println!(
        "wrote {} files to {}",
        summary.files.len(),
        summary.output_dir.display()
    );
    if let Some(teams) = summary.teams {
        println!("teams: {teams}");
    }
    if summary.analyses > 0 {
        println!(
            "analyses: {} ({} skipped)",
            summary.analyses, summary.skipped
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Measure(a) => (Command::Measure, a),
        Cmd::Characterize(a) => (Command::Characterize, a),
        Cmd::Outcomes(a) => (Command::Outcomes, a),
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Replicate(a) => (Command::Replicate, a),
    };
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let result = args
        .into_config()
        .and_then(|cfg| pipeline::run(command, &cfg));
    match result {
        Ok(summary) => {
            report(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
