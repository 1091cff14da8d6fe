use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pk_tablex::layout::LayoutCase;
use pk_tablex::pipeline::{self, collect_documents, validate_documents, InputFormat, Mode, RunConfig};
use pk_tablex::TagProfile;

#[derive(Parser)]
#[command(name = "pk-tablex", version, about = "Extract pharmacokinetic parameters from tables in XML/HTML articles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract sentences and/or records to CSV.
    Extract(ExtractArgs),
    /// Ingest, normalize and validate tables without extracting.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Xml,
    Html,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => InputFormat::Auto,
            FormatArg::Xml => InputFormat::Xml,
            FormatArg::Html => InputFormat::Html,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sentences,
    Records,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Common,
    Transposed,
    MergedHeader,
    MergedIndex,
}

impl From<CaseArg> for LayoutCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Common => LayoutCase::Common,
            CaseArg::Transposed => LayoutCase::Transposed,
            CaseArg::MergedHeader => LayoutCase::MergedHeader,
            CaseArg::MergedIndex => LayoutCase::MergedIndex,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Files or directories to process.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Comma-separated canonical parameter names for record mode.
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<String>>,
    #[arg(long, env = "PK_TABLEX_ONTOLOGY")]
    ontology: Option<PathBuf>,
    /// Extra drug names, one per line.
    #[arg(long)]
    drugs: Option<PathBuf>,
    /// Tag profile for non-standard XML vocabularies.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    output: PathBuf,
    /// Print each normalized grid to stderr.
    #[arg(long)]
    dump_grids: bool,
    #[arg(long, value_enum)]
    force_case: Option<CaseArg>,
    /// Fail documents whose tables have span collisions or grid violations.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Only take drug names from the lexicon.
    #[arg(long)]
    no_caps_drug_fallback: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Extract(args) => extract(args),
        Command::Validate(args) => validate(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn extract(args: ExtractArgs) -> Result<ExitCode, String> {
    let mut config = RunConfig {
        input_paths: args.input,
        format: args.format.into(),
        mode: match args.mode {
            ModeArg::Sentences => Mode::Sentences,
            ModeArg::Records => Mode::Records,
            ModeArg::Both => Mode::Both,
        },
        wanted_params: args
            .params
            .map(|p| p.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<BTreeSet<_>>()),
        ontology_path: args.ontology,
        lexicon_path: args.drugs,
        profile_path: args.profile,
        output_path: args.output,
        strict: args.strict,
        dump_grids: args.dump_grids,
        force_case: args.force_case.map(Into::into),
        caps_drug_fallback: !args.no_caps_drug_fallback,
        ..RunConfig::default()
    };
    if let Some(jobs) = args.jobs {
        config.parallelism = jobs.into();
    }

    let report = pipeline::run(&config).map_err(|e| e.to_string())?;
    for w in &report.warnings {
        eprintln!("warning: {} {}: {}", w.doc_id, w.table_id, w.message);
    }
    for (doc, reason) in &report.failures {
        eprintln!("failed: {doc}: {reason}");
    }
    let cases: Vec<String> = report.per_case.iter().map(|(c, n)| format!("{c}={n}")).collect();
    eprintln!(
        "documents {} (failed {}), tables {} (skipped {}; {}), records {}, sentences {}",
        report.docs_seen,
        report.docs_failed,
        report.tables_seen,
        report.tables_skipped,
        if cases.is_empty() { "none".to_string() } else { cases.join(" ") },
        report.records_emitted,
        report.sentences_emitted,
    );
    Ok(if report.docs_failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn validate(args: ValidateArgs) -> Result<ExitCode, String> {
    let profile = match &args.profile {
        Some(p) => TagProfile::load(p).map_err(|e| e.to_string())?,
        None => TagProfile::default(),
    };
    let docs = collect_documents(&args.input).map_err(|e| e.to_string())?;
    let mut bad = 0usize;
    for result in validate_documents(&docs, args.format.into(), &profile) {
        match result {
            Ok(tables) => {
                for t in tables {
                    if t.problems.is_empty() {
                        println!("{}\t{}\t{}x{}\tok", t.doc_id, t.table_id, t.n_rows, t.n_cols);
                    } else {
                        bad += 1;
                        println!("{}\t{}\t{}x{}\t{}", t.doc_id, t.table_id, t.n_rows, t.n_cols, t.problems.join("; "));
                    }
                }
            }
            Err((doc, reason)) => {
                bad += 1;
                println!("{doc}\t-\t-\tfailed: {reason}");
            }
        }
    }
    Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
