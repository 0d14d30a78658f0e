//! The `tm` command line.
//!
//! Exit status is 0 when the pipeline found no errors, 1 when it reported
//! errors (diagnostics, failed transforms, non-conforming traces) and 2 on
//! usage or I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::behavior::{conform, coverage, trace_from_json, trace_from_list};
use crate::dsl::{self, Document};
use crate::model::{BehavioralModel, Event, StaticModel};
use crate::render::{render_behavior, render_static};
use crate::transform::{expand, is_simplified, simplify};
use crate::uml::{export_activity, import_activity, ActivityGraph};
use crate::validate::{
    error_count, validate_behavior, validate_events, validate_static_with, Diagnostic, FlowRules, Mode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Clean,
    Errors,
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Errors => 1,
            ExitStatus::Failure => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Full,
    Simplified,
}

#[derive(Debug, Parser)]
#[command(name = "tm", version, about = "Check, transform and render Thinging Machine models")]
struct Cli {
    /// Read and write the JSON interchange form instead of `.tm` text.
    #[arg(long, global = true)]
    json: bool,
    /// Validation mode; `auto` picks simplified when no gate stages exist.
    #[arg(long, global = true, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a model, its events and behavior.
    Check { file: PathBuf },
    /// Drop release, transfer and receive stages.
    Simplify { file: PathBuf },
    /// Expand a simplified model into full gate chains.
    Expand { file: PathBuf },
    /// Convert an activity diagram (`.act.json`) into a TM model.
    ImportUml {
        file: PathBuf,
        /// Expand the result into full form.
        #[arg(long)]
        full: bool,
    },
    /// Convert a TM model into an activity diagram (simplifying first if needed).
    ExportUml { file: PathBuf },
    /// Validate events and list stages no event covers.
    Events { file: PathBuf },
    /// Check an event trace against the behavioral model.
    Trace {
        file: PathBuf,
        /// Comma-separated event ids.
        #[arg(long, conflicts_with = "trace_file")]
        trace: Option<String>,
        /// JSON array of event ids.
        #[arg(long)]
        trace_file: Option<PathBuf>,
    },
    /// Emit Graphviz DOT.
    Render {
        file: PathBuf,
        /// Render the behavioral model instead of the static one.
        #[arg(long)]
        behavior: bool,
        /// Highlight the region of this event.
        #[arg(long, conflicts_with = "behavior")]
        highlight: Option<String>,
        /// Write to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the canonical form.
    Fmt {
        file: PathBuf,
        /// Only report whether the file is already canonical.
        #[arg(long)]
        check: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

// Output is best effort: a closed pipe must not turn into a panic.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => {{ let _ = writeln!($w, $($arg)*); }};
}

/// Runs `tm` with `argv` (program name first).
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    ExitStatus::Clean
                }
                _ => {
                    let _ = write!(err, "{text}");
                    ExitStatus::Failure
                }
            };
        }
    };
    let mut io = Io { out, err };
    match execute(&cli, &mut io) {
        Ok(status) => status,
        Err(Failure::Usage(msg)) => {
            say!(io.err, "error: {msg}");
            ExitStatus::Failure
        }
        Err(Failure::Errors(msg)) => {
            say!(io.err, "{msg}");
            ExitStatus::Errors
        }
    }
}

enum Failure {
    Usage(String),
    Errors(String),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn load(path: &Path) -> Result<Document, Failure> {
    let text = read(path)?;
    if is_json(path) {
        let (model, events, behavior) =
            dsl::from_json(&text).map_err(|e| Failure::Errors(format!("{}: {e}", path.display())))?;
        return Ok(Document { model, events, behavior, ..Document::default() });
    }
    dsl::parse(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Failure::Errors(lines.join("\n"))
    })
}

fn mode_for(arg: ModeArg, model: &StaticModel) -> Mode {
    match arg {
        ModeArg::Auto => Mode::detect(model),
        ModeArg::Full => Mode::Full,
        ModeArg::Simplified => Mode::Simplified,
    }
}

fn all_diagnostics(cli: &Cli, doc: &Document) -> Vec<Diagnostic> {
    let mut diags = validate_static_with(&doc.model, &FlowRules::default(), mode_for(cli.mode, &doc.model));
    diags.extend(validate_events(&doc.model, &doc.events));
    diags.extend(validate_behavior(&doc.model, &doc.events, &doc.behavior));
    diags
}

fn emit_model(cli: &Cli, io: &mut Io, model: &StaticModel, events: &[Event], behavior: &BehavioralModel) {
    let text = if cli.json { dsl::to_json(model, events, behavior) } else { dsl::print(model, events, behavior) };
    let _ = io.out.write_all(text.as_bytes());
}

/// Refuses to transform a model with structural errors.
fn require_legal(cli: &Cli, io: &mut Io, model: &StaticModel) -> Result<(), Failure> {
    let diags = validate_static_with(model, &FlowRules::default(), mode_for(cli.mode, model));
    if error_count(&diags) == 0 {
        return Ok(());
    }
    for d in diags.iter().filter(|d| d.is_error()) {
        say!(io.err, "{d}");
    }
    Err(Failure::Errors(format!("{} errors; fix them before transforming", error_count(&diags))))
}

fn summary(diags: &[Diagnostic]) -> String {
    let errors = error_count(diags);
    format!("{errors} errors, {} warnings", diags.len() - errors)
}

fn execute(cli: &Cli, io: &mut Io) -> Result<ExitStatus, Failure> {
    match &cli.command {
        Command::Check { file } => {
            let doc = load(file)?;
            let diags = all_diagnostics(cli, &doc);
            if cli.json {
                let value = serde_json::to_value(&diags).expect("diagnostics serialize");
                say!(io.out, "{}", serde_json::to_string_pretty(&value).expect("values serialize"));
            } else {
                for d in &diags {
                    say!(io.out, "{d}");
                }
            }
            say!(io.err, "{}", summary(&diags));
            Ok(if error_count(&diags) == 0 { ExitStatus::Clean } else { ExitStatus::Errors })
        }
        Command::Simplify { file } => {
            let doc = load(file)?;
            require_legal(cli, io, &doc.model)?;
            let model = simplify(&doc.model).map_err(|e| Failure::Errors(e.to_string()))?;
            emit_model(cli, io, &model, &[], &BehavioralModel::default());
            Ok(ExitStatus::Clean)
        }
        Command::Expand { file } => {
            let doc = load(file)?;
            require_legal(cli, io, &doc.model)?;
            let model = expand(&doc.model).map_err(|e| Failure::Errors(e.to_string()))?;
            emit_model(cli, io, &model, &[], &BehavioralModel::default());
            Ok(ExitStatus::Clean)
        }
        Command::ImportUml { file, full } => {
            let graph = ActivityGraph::from_json(&read(file)?).map_err(|e| Failure::Errors(e.to_string()))?;
            let mut model = import_activity(&graph).map_err(|e| Failure::Errors(e.to_string()))?;
            if *full {
                model = expand(&model).map_err(|e| Failure::Errors(e.to_string()))?;
            }
            emit_model(cli, io, &model, &[], &BehavioralModel::default());
            Ok(ExitStatus::Clean)
        }
        Command::ExportUml { file } => {
            let doc = load(file)?;
            let model = if is_simplified(&doc.model) {
                doc.model
            } else {
                require_legal(cli, io, &doc.model)?;
                simplify(&doc.model).map_err(|e| Failure::Errors(e.to_string()))?
            };
            let graph = export_activity(&model).map_err(|e| Failure::Errors(e.to_string()))?;
            let _ = io.out.write_all(graph.to_json().as_bytes());
            Ok(ExitStatus::Clean)
        }
        Command::Events { file } => {
            let doc = load(file)?;
            let diags = validate_events(&doc.model, &doc.events);
            let uncovered = coverage(&doc.model, &doc.events);
            if cli.json {
                let value = json!({ "diagnostics": diags, "uncovered": uncovered });
                say!(io.out, "{}", serde_json::to_string_pretty(&value).expect("values serialize"));
            } else {
                for d in &diags {
                    say!(io.out, "{d}");
                }
                for s in &uncovered {
                    say!(io.out, "uncovered {s}");
                }
            }
            say!(
                io.err,
                "{} events, {} of {} stages uncovered, {}",
                doc.events.len(),
                uncovered.len(),
                doc.model.all_stages().len(),
                summary(&diags)
            );
            Ok(if error_count(&diags) == 0 { ExitStatus::Clean } else { ExitStatus::Errors })
        }
        Command::Trace { file, trace, trace_file } => {
            let events = match (trace, trace_file) {
                (Some(list), None) => trace_from_list(list),
                (None, Some(path)) => {
                    trace_from_json(&read(path)?).map_err(|e| Failure::Errors(format!("{}: {e}", path.display())))?
                }
                _ => return Err(Failure::Usage("give the trace with --trace or --trace-file".into())),
            };
            let doc = load(file)?;
            let verdict = conform(&events, &doc.behavior).map_err(|e| Failure::Errors(e.to_string()))?;
            if cli.json {
                let value = serde_json::to_value(&verdict).expect("verdicts serialize");
                say!(io.out, "{}", serde_json::to_string_pretty(&value).expect("values serialize"));
            } else {
                say!(io.out, "{verdict}");
            }
            Ok(if verdict.conforms { ExitStatus::Clean } else { ExitStatus::Errors })
        }
        Command::Render { file, behavior, highlight, output } => {
            let doc = load(file)?;
            let text = if *behavior {
                render_behavior(&doc.behavior, &doc.events)
            } else {
                let region = match highlight {
                    Some(id) => Some(
                        &doc.events
                            .iter()
                            .find(|e| &e.id == id)
                            .ok_or_else(|| Failure::Errors(format!("no event `{id}` in {}", file.display())))?
                            .region,
                    ),
                    None => None,
                };
                render_static(&doc.model, region).map_err(|e| Failure::Errors(e.to_string()))?
            };
            match output {
                Some(path) => fs::write(path, text)
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
                None => {
                    let _ = io.out.write_all(text.as_bytes());
                }
            }
            Ok(ExitStatus::Clean)
        }
        Command::Fmt { file, check } => {
            let original = read(file)?;
            let doc = load(file)?;
            let text = if cli.json || is_json(file) {
                dsl::to_json(&doc.model, &doc.events, &doc.behavior)
            } else {
                doc.to_text()
            };
            if *check {
                if text == original {
                    return Ok(ExitStatus::Clean);
                }
                return Err(Failure::Errors(format!("{} is not in canonical form", file.display())));
            }
            let _ = io.out.write_all(text.as_bytes());
            Ok(ExitStatus::Clean)
        }
    }
}
