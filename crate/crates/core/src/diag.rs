//! Diagnostics shared by every pipeline stage.

use std::fmt;

use crate::feature::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A file name and a 1-based line number.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub file: String,
    pub line: usize,
}

impl Location {
    pub fn new(file: impl Into<String>, line: usize) -> Self {
        Location {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// What went wrong, at a source position and/or an entry and feature path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Option<Location>,
    pub entry: Option<String>,
    pub path: Option<Path>,
    pub message: String,
    /// Set for failures outside the lexicon itself (unreadable files, bad
    /// encoding), which front ends report differently from lexicon errors.
    pub io: bool,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location: None,
            entry: None,
            path: None,
            message: message.into(),
            io: false,
        }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(message)
        }
    }

    pub fn at(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }

    pub fn for_entry(mut self, entry: impl Into<String>) -> Self {
        self.entry = Some(entry.into());
        self
    }

    pub fn with_path(mut self, path: Path) -> Self {
        self.path = Some(path);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Tab-separated: severity, file, line, entry, path, message.
    pub fn porcelain(&self) -> String {
        let (file, line) = match &self.location {
            Some(l) => (l.file.as_str(), l.line.to_string()),
            None => ("", String::new()),
        };
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.severity,
            file,
            line,
            self.entry.as_deref().unwrap_or(""),
            self.path.as_ref().map(ToString::to_string).unwrap_or_default(),
            self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    /// `severity [file:line] [entry] [path]: message`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.severity)?;
        if let Some(loc) = &self.location {
            write!(f, " {loc}")?;
        }
        if let Some(entry) = &self.entry {
            write!(f, " {entry}")?;
        }
        if let Some(path) = &self.path {
            write!(f, " {path}")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        let d = Diagnostic::error("value 4 not in closed set {1,2,3}")
            .for_entry("yo")
            .with_path(Path::parse("agr pers").unwrap());
        assert_eq!(d.to_string(), "error yo agr pers: value 4 not in closed set {1,2,3}");
        assert_eq!(
            d.porcelain(),
            "error\t\t\tyo\tagr pers\tvalue 4 not in closed set {1,2,3}"
        );

        let d = Diagnostic::warning("dup").at(Location::new("a.lex", 3));
        assert_eq!(d.to_string(), "warning a.lex:3: dup");
    }
}
