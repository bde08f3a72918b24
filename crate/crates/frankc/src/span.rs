//! Source positions and diagnostics.

use std::fmt;

/// A half-open region of a source file, tracked as 1-based line/column pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32, end_line: u32, end_col: u32) -> Self {
        Span { line, col, end_line, end_col }
    }

    pub fn point(line: u32, col: u32) -> Self {
        Span { line, col, end_line: line, end_col: col }
    }

    /// A span for synthesized nodes that have no source position.
    pub fn synthetic() -> Self {
        Span { line: 0, col: 0, end_line: 0, end_col: 0 }
    }

    pub fn merge(self, other: Span) -> Span {
        if self == Span::synthetic() {
            return other;
        }
        if other == Span::synthetic() {
            return self;
        }
        let (line, col) = std::cmp::min((self.line, self.col), (other.line, other.col));
        let (end_line, end_col) =
            std::cmp::max((self.end_line, self.end_col), (other.end_line, other.end_col));
        Span { line, col, end_line, end_col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
            Severity::Note => write!(f, "note"),
        }
    }
}

/// One machine-parsable diagnostic line: `file:line:col: severity: message`.
#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub file: String,
    pub span: Span,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}: {}",
            self.file, self.span.line, self.span.col, self.severity, self.message
        )
    }
}
