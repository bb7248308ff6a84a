//! Command-line entry point: `ingest`, `measure`, `analyze`, `synth`, `report`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::analysis::{
    load_report, render_markdown, run_analysis, write_report, AgreementGrouping, AnalysisConfig,
    PairingPlan, Pooling, REPORT_MD,
};
use crate::error::{Error, Result};
use crate::measurements::{compute_all_with, read_measurements, write_measurements, MeasureOptions};
use crate::store::{fetch_forge, load_archive_dir, load_windows, FetchRequest, RepoSlug, Timestamp};
use crate::survey::load_survey;
use crate::synth::{generate_to, EffectConfig};

/// Environment variable fixing the report timestamp (seconds since the epoch).
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Parser)]
#[command(name = "sprintscope", version, about = "Agile-practice repository measures and survey analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch commits, issues and PR comments from the forge into an archive (needs FORGE_TOKEN).
    Ingest(IngestArgs),
    /// Compute per developer, per sprint measures from an archive.
    Measure(MeasureArgs),
    /// Run the survey and measurement analyses and write the report.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic archive and survey with injected effects.
    Synth(SynthArgs),
    /// Re-render the human-readable report from a report directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Repository as owner/name.
    #[arg(long)]
    pub repo: String,
    /// Output archive directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Sprint windows (JSON array or JSON lines) copied into the archive.
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// Developer roster (JSON lines) to assign authors to teams and roles.
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// Only keep artifacts at or after this RFC 3339 timestamp.
    #[arg(long)]
    pub since: Option<String>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Archive directory.
    #[arg(long)]
    pub archives: PathBuf,
    /// Sprint windows replacing the archive's own.
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Leave merge commits out of every measure.
    #[arg(long)]
    pub exclude_merges: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    Pooled,
    PerTeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupingArg {
    Team,
    Role,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Survey CSV.
    #[arg(long)]
    pub survey: PathBuf,
    /// Measurement CSV written by `measure`.
    #[arg(long, conflicts_with = "archives")]
    pub measurements: Option<PathBuf>,
    /// Archive directory to measure on the fly.
    #[arg(long)]
    pub archives: Option<PathBuf>,
    /// Sprint windows used with --archives.
    #[arg(long, requires = "archives")]
    pub windows: Option<PathBuf>,
    /// Report output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Analysis config JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pairing plan of survey questions and measures, one `Qn,MEASURE` per line.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub pooling: Option<PoolingArg>,
    /// Leave product owners out of the agreement analysis.
    #[arg(long)]
    pub exclude_pos: bool,
    /// Rater groups for the agreement analysis.
    #[arg(long, value_enum)]
    pub agreement_grouping: Option<GroupingArg>,
    /// Report timestamp (RFC 3339). Defaults to SOURCE_DATE_EPOCH, then the epoch.
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for the archive, windows and survey.
    #[arg(long)]
    pub out: PathBuf,
    /// Effect config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding report.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn require_file(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

fn parse_time(s: &str) -> Result<Timestamp> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Usage(format!("invalid timestamp {s:?}: {e}")))
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let repo: RepoSlug = args.repo.parse()?;
    let since = args.since.as_deref().map(parse_time).transpose()?;
    for p in args.windows.iter().chain(&args.roster) {
        require_file(p)?;
    }
    let windows = args.windows.as_deref().map(load_windows).transpose()?.unwrap_or_default();
    let roster = match &args.roster {
        Some(p) => Some(crate::store::load_roster(p)?),
        None => None,
    };
    let request = FetchRequest { since, roster, windows };
    info!("fetching {repo}");
    fetch_forge(&repo, &request, &args.out)?;
    info!("archive written to {}", args.out.display());
    Ok(())
}

pub fn cmd_measure(args: &MeasureArgs) -> Result<usize> {
    let dataset = load_archive_dir(&args.archives, args.windows.as_deref())?;
    let mut options = MeasureOptions::default();
    options.slice.exclude_merges = args.exclude_merges;
    let records = compute_all_with(&dataset, &options)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_measurements(&args.out, &records)?;
    info!("{} measurement records written to {}", records.len(), args.out.display());
    Ok(records.len())
}

/// Fixed report timestamp: the flag, then `SOURCE_DATE_EPOCH`, then none.
fn report_timestamp(flag: Option<&str>) -> Result<Option<String>> {
    if let Some(s) = flag {
        return Ok(Some(parse_time(s)?.to_rfc3339_opts(SecondsFormat::Secs, true)));
    }
    match std::env::var(SOURCE_DATE_EPOCH) {
        Ok(v) => {
            let secs: i64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("{SOURCE_DATE_EPOCH} must be an integer, got {v:?}")))?;
            let t = DateTime::from_timestamp(secs, 0)
                .ok_or_else(|| Error::Usage(format!("{SOURCE_DATE_EPOCH} out of range: {secs}")))?;
            Ok(Some(t.to_rfc3339_opts(SecondsFormat::Secs, true)))
        }
        Err(_) => Ok(None),
    }
}

pub fn analysis_config(args: &AnalyzeArgs) -> Result<AnalysisConfig> {
    let mut config = match &args.config {
        Some(p) => {
            require_file(p)?;
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::parse(p.display().to_string(), e.line(), e))?
        }
        None => AnalysisConfig::default(),
    };
    if let Some(p) = &args.plan {
        config.plan = PairingPlan::load(p)?;
    }
    if let Some(p) = args.pooling {
        config.pooling = match p {
            PoolingArg::Pooled => Pooling::Pooled,
            PoolingArg::PerTeam => Pooling::PerTeam,
        };
    }
    if args.exclude_pos {
        config.exclude_pos = true;
    }
    if let Some(g) = args.agreement_grouping {
        config.agreement_grouping = match g {
            GroupingArg::Team => AgreementGrouping::Team,
            GroupingArg::Role => AgreementGrouping::Role,
        };
    }
    if !(config.significance > 0.0 && config.significance < 1.0) {
        return Err(Error::Usage(format!("significance must be in (0, 1), got {}", config.significance)));
    }
    if config.histogram_bins == 0 {
        return Err(Error::Usage("histogram_bins must be positive".into()));
    }
    Ok(config)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    require_file(&args.survey)?;
    let config = analysis_config(args)?;
    let timestamp = report_timestamp(args.timestamp.as_deref())?;
    let survey = load_survey(&args.survey)?;
    let measurements = match (&args.measurements, &args.archives) {
        (Some(p), _) => Some(read_measurements(p)?),
        (None, Some(dir)) => {
            let dataset = load_archive_dir(dir, args.windows.as_deref())?;
            Some(compute_all_with(&dataset, &MeasureOptions::default())?)
        }
        (None, None) => None,
    };
    let report = run_analysis(&survey, measurements.as_deref(), &config, timestamp.as_deref())?;
    write_report(&report, &args.out)?;
    info!("report written to {}", args.out.display());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => EffectConfig::load(p)?,
        None => EffectConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let data = generate_to(&config, &args.out)?;
    info!(
        "synthetic data written to {}: {} developers, {} commits, {} survey cells",
        args.out.display(),
        data.dataset.developers().len(),
        data.dataset.commits().len(),
        data.survey.len()
    );
    Ok(())
}

/// Re-render `report.md` from `report.json` and return its path.
pub fn cmd_report(args: &ReportArgs) -> Result<PathBuf> {
    let report = load_report(&args.out)?;
    let path = args.out.join(REPORT_MD);
    fs::write(&path, render_markdown(&report))?;
    info!("report rendered to {}", path.display());
    Ok(path)
}

/// Run one parsed invocation.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Measure(a) => cmd_measure(a).map(|_| ()),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a).map(|_| ()),
    }
}

/// Parse `args`, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.category().exit_code()
        }
    }
}
