use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use sheetlint_core::compare::compare_workbooks;
use sheetlint_core::eval::verify_cached_values;
use sheetlint_core::io::{load_config, load_scenarios, load_workbook, workbook_files};
use sheetlint_core::report::{write_report, CorpusColumn, CorpusEntry, Format, Report};
use sheetlint_core::rules::{run_inspection, Metrics};
use sheetlint_core::scenario::{run_all, TestScenario};
use sheetlint_core::{LoadError, RuleConfig, Workbook};

/// Inspect spreadsheets for risky formula patterns and test them against
/// scenarios.
#[derive(Parser)]
#[command(name = "sheetlint", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in rule configuration.
    #[arg(long, global = true, value_enum, conflicts_with = "config")]
    preset: Option<Preset>,
    /// Rule configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Config1,
    Config2,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Run the inspection rules over one workbook.
    Inspect { workbook: PathBuf },
    /// Count non-empty cells and formulas.
    Metrics { workbook: PathBuf },
    /// Evaluate test scenarios against a workbook.
    Test {
        workbook: PathBuf,
        #[arg(long, value_name = "FILE")]
        scenarios: PathBuf,
    },
    /// Compare two versions of a workbook.
    Compare { before: PathBuf, after: PathBuf },
    /// Inspect every workbook in a directory, one column each.
    Corpus {
        dir: PathBuf,
        #[arg(long, value_name = "FILE")]
        scenarios: Option<PathBuf>,
        /// Workbook every column is compared against.
        #[arg(long, value_name = "FILE")]
        baseline: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn rule_config(common: &Common) -> Result<RuleConfig, LoadError> {
    match (&common.config, common.preset) {
        (Some(path), _) => load_config(path),
        (None, Some(Preset::Config2)) => Ok(RuleConfig::config2()),
        (None, _) => Ok(RuleConfig::config1()),
    }
}

/// Loads a workbook, logging loader warnings and stale cached values.
fn open(path: &Path) -> Result<Workbook, LoadError> {
    let loaded = load_workbook(path)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    let wb = loaded.workbook;
    for m in verify_cached_values(&wb) {
        let computed = match &m.computed {
            Ok(v) => v.to_string(),
            Err(e) => e.to_string(),
        };
        log::warn!(
            "{}: {} caches {} but evaluates to {computed}",
            path.display(),
            wb.display_address(m.address),
            m.cached
        );
    }
    Ok(wb)
}

fn run(cli: &Cli) -> Result<ExitCode, LoadError> {
    let config = rule_config(&cli.common)?;
    let format = match cli.common.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Table => Format::Table,
    };
    let mut code = ExitCode::SUCCESS;
    let out = match &cli.command {
        Command::Inspect { workbook } => {
            let r = run_inspection(&open(workbook)?, &config);
            write_report(&Report::Inspection(&r), format)
        }
        Command::Metrics { workbook } => write_report(&Report::Metrics(Metrics::of(&open(workbook)?)), format),
        Command::Test { workbook, scenarios } => {
            let wb = open(workbook)?;
            let aggregate = run_all(&wb, &load_scenarios(scenarios)?);
            if !aggregate.all_passed() {
                code = ExitCode::from(1);
            }
            write_report(&Report::Scenarios(&aggregate), format)
        }
        Command::Compare { before, after } => {
            let r = compare_workbooks(&open(before)?, &open(after)?, &config);
            write_report(&Report::Comparison(&r), format)
        }
        Command::Corpus {
            dir,
            scenarios,
            baseline,
        } => {
            let scenarios = scenarios.as_deref().map(load_scenarios).transpose()?;
            let baseline = baseline.as_deref().map(open).transpose()?;
            let columns = corpus(dir, &config, scenarios.as_deref(), baseline.as_ref())?;
            write_report(&Report::Corpus(&columns), format)
        }
    };
    print!("{out}");
    Ok(code)
}

fn corpus(
    dir: &Path,
    config: &RuleConfig,
    scenarios: Option<&[TestScenario]>,
    baseline: Option<&Workbook>,
) -> Result<Vec<CorpusColumn>, LoadError> {
    let files = workbook_files(dir)?;
    // par_iter keeps input order in collect, so columns stay sorted by name.
    let columns = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let outcome = match open(path) {
                Ok(wb) => Ok(CorpusEntry {
                    inspection: run_inspection(&wb, config),
                    scenarios: scenarios.map(|s| run_all(&wb, s)),
                    baseline: baseline.map(|b| compare_workbooks(b, &wb, config)),
                }),
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    Err(e.to_string())
                }
            };
            CorpusColumn { name, outcome }
        })
        .collect();
    Ok(columns)
}
