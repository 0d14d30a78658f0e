//! The `.tm` text language and the JSON interchange form.
//!
//! ```text
//! machine Police: "Police station" {
//!   transfer;
//!   receive;
//!   process store;
//! }
//! flow Hospital.transfer -> Police.transfer;
//! trigger Hospital.process => Police.process if "dangerous";
//! event E5: "Sent to the police station" {
//!   time "1/1/2021";
//!   region { Police.receive Police.process edge f3 }
//! }
//! behavior { E4 -> E5 excl "secure location"; }
//! ```
//!
//! Edges are numbered `f1, f2, …` and `t1, t2, …` in declaration order;
//! `flow NAME: A.x -> B.y;` gives one an explicit id. `#` comments are kept
//! with the statement that follows them so [`Document::to_text`] can put
//! them back.

mod json;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::model::{BehavioralModel, Event, StaticModel};

pub use json::{from_json, to_json, JsonError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    SyntaxError,
    DuplicateId,
    UnresolvedReference,
    InvalidStructure,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::SyntaxError => "syntax-error",
            DiagnosticCode::DuplicateId => "duplicate-id",
            DiagnosticCode::UnresolvedReference => "unresolved-reference",
            DiagnosticCode::InvalidStructure => "invalid-structure",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub code: DiagnosticCode,
    pub message: String,
}

impl ParseDiagnostic {
    pub(crate) fn new(span: SourceSpan, code: DiagnosticCode, message: impl Into<String>) -> Self {
        ParseDiagnostic { span, code, message: message.into() }
    }
}

/// `LINE:COL: CODE: message`
impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.code, self.message)
    }
}

/// The statement a comment block sits in front of.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    Machine(String),
    /// Just before the machine's closing brace.
    MachineEnd(String),
    Stage(String),
    Flow(String),
    Trigger(String),
    Event(String),
    /// Anywhere inside the event's braces.
    EventBody(String),
    Behavior,
    BehaviorEdge(String, String),
    BehaviorEnd,
}

/// Comments collected during parsing, keyed by position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Comments {
    pub leading: BTreeMap<Anchor, Vec<String>>,
    /// Comments after the last statement.
    pub trailing: Vec<String>,
}

impl Comments {
    pub fn is_empty(&self) -> bool {
        self.leading.is_empty() && self.trailing.is_empty()
    }

    pub(crate) fn get(&self, anchor: &Anchor) -> &[String] {
        self.leading.get(anchor).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A parsed `.tm` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub model: StaticModel,
    pub events: Vec<Event>,
    pub behavior: BehavioralModel,
    pub comments: Comments,
}

impl Document {
    /// Canonical text, comments included.
    pub fn to_text(&self) -> String {
        printer::print_with(&self.model, &self.events, &self.behavior, Some(&self.comments))
    }
}

/// Parses `.tm` text. A syntax error stops at the first offending token;
/// reference and structure problems are all reported.
pub fn parse(text: &str) -> Result<Document, Vec<ParseDiagnostic>> {
    parser::parse(text)
}

/// Canonical text for a model, its events and behavior, without comments.
pub fn print(model: &StaticModel, events: &[Event], behavior: &BehavioralModel) -> String {
    printer::print_with(model, events, behavior, None)
}
