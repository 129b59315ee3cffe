//! Concrete syntax for propositions, processes, global types and contexts.

mod lexer;
mod parser;
mod print;

use std::fmt;

use thiserror::Error;

use crate::terms::{Context, GlobalType, Process, Prop};
use parser::Parser;
pub use print::{
    print_context, print_context_pretty, print_global_type, print_global_type_pretty, print_process,
    print_process_pretty, print_proposition, print_proposition_pretty,
};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}:{}:{}", file, self.line, self.col),
            None => write!(f, "{}:{}", self.line, self.col),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into() }
    }
}

fn whole<T>(
    text: &str,
    file: Option<&str>,
    runtime: bool,
    f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
) -> Result<T, ParseError> {
    let mut p = Parser::new(text, file)?.allow_runtime(runtime);
    let v = f(&mut p)?;
    p.expect_end()?;
    Ok(v)
}

pub fn parse_proposition(text: &str) -> Result<Prop, ParseError> {
    whole(text, None, false, |p| p.proposition())
}

pub fn parse_process(text: &str) -> Result<Process, ParseError> {
    parse_process_in(text, None)
}

/// Parses a surface process; `file` is used in error spans.
pub fn parse_process_in(text: &str, file: Option<&str>) -> Result<Process, ParseError> {
    whole(text, file, false, |p| p.process()).map(|p| p.barendregt())
}

/// Parses a process that may contain the runtime cut forms (as printed in traces).
pub fn parse_runtime_process(text: &str) -> Result<Process, ParseError> {
    whole(text, None, true, |p| p.process()).map(|p| p.barendregt())
}

pub fn parse_global_type(text: &str) -> Result<GlobalType, ParseError> {
    parse_global_type_in(text, None)
}

pub fn parse_global_type_in(text: &str, file: Option<&str>) -> Result<GlobalType, ParseError> {
    whole(text, file, false, |p| p.global_type())
}

pub fn parse_context(text: &str) -> Result<Context, ParseError> {
    parse_context_in(text, None)
}

pub fn parse_context_in(text: &str, file: Option<&str>) -> Result<Context, ParseError> {
    whole(text, file, false, |p| p.context())
}

/// Several contexts separated by `---`.
pub fn parse_contexts_in(text: &str, file: Option<&str>) -> Result<Vec<Context>, ParseError> {
    whole(text, file, false, |p| {
        let mut out = vec![p.context()?];
        while p.is_separator() {
            out.push(p.context()?);
        }
        Ok(out)
    })
}

/// `P |- Γ` as printed in derivation dumps.
pub fn parse_process_judgement(text: &str) -> Result<(Process, Context), ParseError> {
    whole(text, None, true, |p| {
        let proc = p.process()?;
        p.expect_turnstile("|-")?;
        let ctx = p.context()?;
        Ok((proc, ctx))
    })
}

/// `G |= Δ` as printed in derivation dumps.
pub fn parse_coherence_judgement(text: &str) -> Result<(GlobalType, Context), ParseError> {
    whole(text, None, false, |p| {
        let g = p.global_type()?;
        p.expect_turnstile("|=")?;
        let ctx = p.context()?;
        Ok((g, ctx))
    })
}
