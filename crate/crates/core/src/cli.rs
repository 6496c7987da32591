//! Command-line driver.
//!
//! Exit statuses: 0 success, 1 validation or assessment failure, 2 refused by
//! the comparability gate, 3 I/O, parse or usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assessment::{
    self, similarity_profile, AssessOptions, GateMode, KappaVariant, PartitionGroup, StudyPAggregation,
};
use crate::bundle::{parse_bundle, serialize_bundle};
use crate::error::Error;
use crate::findings::TiePolicy;
use crate::model::{validate_bundle, StudyBundle};
use crate::precision::CvOptions;
use crate::properties::PropertySheet;
use crate::report::{self, DisplayRules, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "reprometer",
    version,
    about = "Degree-of-reproducibility assessment for comparable evaluation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assess a bundle and print the report.
    Assess {
        bundle: PathBuf,
        #[command(flatten)]
        options: AssessArgs,
    },
    /// Show which experiment properties are shared and which differ.
    Similarity {
        bundle: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: SimilarityFormat,
    },
    /// Group experiments by property values.
    Partition {
        bundle: PathBuf,
        /// Comma-separated property keys (slugs, HEDS codes or extension keys).
        #[arg(long, value_delimiter = ',', required = true)]
        by: Vec<String>,
        /// Write one bundle file per group into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Assess each group; singleton groups are pooled into one residual group.
        #[arg(long)]
        assess: bool,
        #[command(flatten)]
        options: AssessArgs,
    },
    /// Check a bundle; prints nothing when it is valid.
    Validate { bundle: PathBuf },
}

#[derive(Args, Debug)]
struct AssessArgs {
    #[arg(long, value_enum, default_value = "lenient")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Confidence level of the interval on s*.
    #[arg(long, default_value_t = 0.95, value_parser = parse_confidence)]
    confidence: f64,
    /// Decimal places for every displayed value.
    #[arg(long)]
    precision: Option<usize>,
    /// How tied system pairs count towards P.
    #[arg(long, value_enum, default_value = "literal")]
    p_ties: TiesArg,
    /// How per-QC P values combine at study level.
    #[arg(long, value_enum, default_value = "pooled")]
    study_p: StudyPArg,
    /// Kappa variant for two label experiments.
    #[arg(long, value_enum, default_value = "cohen")]
    kappa: KappaArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Strict,
    Lenient,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Json,
    Tsv,
    Markdown,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SimilarityFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TiesArg {
    Literal,
    ExcludeTied,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StudyPArg {
    Pooled,
    Mean,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KappaArg {
    Cohen,
    Fleiss,
}

fn parse_confidence(text: &str) -> Result<f64, String> {
    let level: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(format!(
            "confidence level must lie strictly between 0 and 1, got {level}"
        ))
    }
}

impl AssessArgs {
    fn options(&self) -> AssessOptions {
        AssessOptions {
            mode: match self.mode {
                ModeArg::Strict => GateMode::Strict,
                ModeArg::Lenient => GateMode::Lenient,
            },
            cv: CvOptions {
                confidence_level: self.confidence,
                ..CvOptions::default()
            },
            ties: match self.p_ties {
                TiesArg::Literal => TiePolicy::Literal,
                TiesArg::ExcludeTied => TiePolicy::ExcludeTied,
            },
            study_p: match self.study_p {
                StudyPArg::Pooled => StudyPAggregation::Pooled,
                StudyPArg::Mean => StudyPAggregation::Mean,
            },
            two_rater_kappa: match self.kappa {
                KappaArg::Cohen => KappaVariant::Cohen,
                KappaArg::Fleiss => KappaVariant::Fleiss,
            },
        }
    }

    fn format(&self) -> ReportFormat {
        match self.format {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Tsv => ReportFormat::Tsv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }

    fn rules(&self) -> DisplayRules {
        DisplayRules {
            precision: self.precision,
        }
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::GateRefused(_) => EXIT_REFUSED,
        Error::Io(_) | Error::Usage(_) | Error::Syntax { .. } | Error::Schema { .. } | Error::Report(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn report_error(error: &Error, path: Option<&Path>, err: &mut dyn Write) {
    let prefix = path.map(|p| format!("{}: ", p.display())).unwrap_or_default();
    let _ = writeln!(err, "error: {prefix}{error}");
    match error {
        Error::Validation(findings) => {
            for f in findings {
                let _ = writeln!(err, "  {f}");
            }
        }
        Error::GateRefused(profiles) => {
            let _ = write!(err, "{}", report::render_similarity(profiles));
        }
        _ => {}
    }
}

fn load(path: &Path) -> Result<StudyBundle, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_bundle(&text)
}

fn similarity_profiles(bundle: &StudyBundle) -> Vec<(String, assessment::SimilarityProfile)> {
    bundle
        .quality_criteria()
        .into_iter()
        .map(|qc| {
            let sheets: Vec<&PropertySheet> = bundle.experiments_for(qc).map(|e| &e.properties).collect();
            (qc.to_string(), similarity_profile(&sheets))
        })
        .collect()
}

fn group_name(study: &str, index: usize, group: &PartitionGroup) -> String {
    if group.residual {
        format!("{study}-residual")
    } else {
        format!("{study}-g{}", index + 1)
    }
}

fn describe_group(keys: &[String], group: &PartitionGroup) -> String {
    if group.residual {
        return "experiments differing from each other and from every other group".into();
    }
    keys.iter()
        .zip(&group.values)
        .map(|(k, v)| format!("{k}={}", v.as_deref().unwrap_or("(unrecorded)")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn partition_command(
    path: &Path,
    keys: &[String],
    out_dir: Option<&Path>,
    assess: bool,
    args: &AssessArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let bundle = load(path)?;
    let findings = validate_bundle(&bundle);
    if !findings.is_empty() {
        return Err(Error::Validation(findings));
    }
    let mut groups = assessment::partition(&bundle.experiments, keys).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Usage(format!("--by: {m}")),
        other => other,
    })?;
    if assess {
        groups = assessment::pool_singletons(groups);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut status = EXIT_OK;
    for (i, group) in groups.iter().enumerate() {
        let name = group_name(&bundle.study_id, i, group);
        let subset = bundle.subset(name.clone(), &group.experiments);
        if let Some(dir) = out_dir {
            std::fs::write(dir.join(format!("{name}.bundle")), serialize_bundle(&subset))?;
        }
        let _ = writeln!(
            out,
            "group {name} (n={}): {} [{}]",
            group.experiments.len(),
            describe_group(keys, group),
            group.experiments.join(", ")
        );
        if !assess {
            continue;
        }
        match assessment::assess_study(&subset, &args.options()) {
            Ok(result) => {
                let _ = writeln!(out);
                let _ = write!(out, "{}", report::emit_report(&result, args.format(), &args.rules()));
                let _ = writeln!(out);
            }
            Err(e) => {
                report_error(&e, None, err);
                let _ = writeln!(err, "group {name} not assessed");
                status = status.max(exit_code(&e));
            }
        }
    }
    Ok(status)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, (Error, Option<PathBuf>)> {
    match cli.command {
        Command::Validate { bundle } => {
            let parsed = load(&bundle).map_err(|e| (e, Some(bundle.clone())))?;
            let findings = validate_bundle(&parsed);
            if findings.is_empty() {
                Ok(EXIT_OK)
            } else {
                Err((Error::Validation(findings), Some(bundle)))
            }
        }
        Command::Assess { bundle, options } => {
            let parsed = load(&bundle).map_err(|e| (e, Some(bundle.clone())))?;
            let result =
                assessment::assess_study(&parsed, &options.options()).map_err(|e| (e, Some(bundle.clone())))?;
            let _ = write!(
                out,
                "{}",
                report::emit_report(&result, options.format(), &options.rules())
            );
            Ok(EXIT_OK)
        }
        Command::Similarity { bundle, format } => {
            let parsed = load(&bundle).map_err(|e| (e, Some(bundle.clone())))?;
            let profiles = similarity_profiles(&parsed);
            match format {
                SimilarityFormat::Text => {
                    let _ = write!(out, "{}", report::render_similarity(&profiles));
                }
                SimilarityFormat::Json => {
                    let map: std::collections::BTreeMap<_, _> = profiles.into_iter().collect();
                    let value = serde_json::to_value(&map).expect("profiles are serializable");
                    let _ = writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&value).expect("value is serializable")
                    );
                }
            }
            Ok(EXIT_OK)
        }
        Command::Partition {
            bundle,
            by,
            out_dir,
            assess,
            options,
        } => partition_command(&bundle, &by, out_dir.as_deref(), assess, &options, out, err)
            .map_err(|e| (e, Some(bundle))),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_IO
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err((e, path)) => {
            report_error(&e, path.as_deref(), err);
            exit_code(&e)
        }
    }
}
