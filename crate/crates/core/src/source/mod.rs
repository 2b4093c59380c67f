//! The source lexical base: a sectioned text format with includes.
//!
//! ```text
//! #CLASSES
//!
//! MV
//! concat = vl
//! alo 1 stem = $rv0
//!
//! #LEXEMES
//!
//! pedir (MV8c C3)
//! ```
//!
//! Section headers start at column 0. Entries are separated by blank lines;
//! an entry's first line is its name with optional parent classes in
//! parentheses. `;` starts a comment, a trailing `\` continues a line, and
//! `#INCLUDE "path"` pulls in another file relative to the current one.

pub(crate) mod lexer;
mod loader;
mod parser;
mod print;

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::diag::{Diagnostic, Location};
use crate::feature::{Atom, Path, ValueSet};

pub use loader::{FsLoader, MemoryLoader, SourceLoader};
pub use parser::{parse_alo_rule, parse_dict_rules, parse_equation, parse_source, parse_str};

/// The four sections holding lexical entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Morphemes,
    Words,
    Classes,
    Lexemes,
}

impl Section {
    pub fn keyword(self) -> &'static str {
        match self {
            Section::Morphemes => "MORPHEMES",
            Section::Words => "WORDS",
            Section::Classes => "CLASSES",
            Section::Lexemes => "LEXEMES",
        }
    }

    /// Sections whose entries reach the object dictionary.
    pub const EMITTED: [Section; 3] = [Section::Morphemes, Section::Words, Section::Lexemes];
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Right-hand-side term of an entry equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueTerm {
    Atom(Atom),
    /// `$name`: allomorphy rule applied to the entry name.
    RuleCall(String),
    /// `$$`: the entry name itself.
    SelfName,
}

impl fmt::Display for ValueTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueTerm::Atom(a) => write!(f, "{a}"),
            ValueTerm::RuleCall(r) => write!(f, "${r}"),
            ValueTerm::SelfName => f.write_str("$$"),
        }
    }
}

/// `path = v1 v2 …`. Equality ignores the location.
#[derive(Debug, Clone, Eq)]
pub struct EquationDef {
    pub path: Path,
    pub values: Vec<ValueTerm>,
    pub location: Location,
}

impl PartialEq for EquationDef {
    fn eq(&self, other: &Self) -> bool {
        self.path == other.path && self.values == other.values
    }
}

/// Leaf of a source-level tree: concrete values or a pending rule term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafTerm {
    Values(ValueSet),
    RuleCall(String),
    SelfName,
}

impl EquationDef {
    pub fn leaf(&self) -> LeafTerm {
        match self.values.as_slice() {
            [ValueTerm::RuleCall(r)] => LeafTerm::RuleCall(r.clone()),
            [ValueTerm::SelfName] => LeafTerm::SelfName,
            vals => LeafTerm::Values(
                ValueSet::new(
                    vals.iter()
                        .map(|v| match v {
                            ValueTerm::Atom(a) => a.clone(),
                            _ => unreachable!("rule terms stand alone"),
                        })
                        .collect(),
                )
                .expect("validated by the parser"),
            ),
        }
    }
}

/// A named entry with parents and equations. Equality ignores the location.
#[derive(Debug, Clone, Eq)]
pub struct EntryDef {
    pub name: String,
    pub parents: Vec<String>,
    pub equations: Vec<EquationDef>,
    pub section: Section,
    pub location: Location,
}

impl PartialEq for EntryDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.parents == other.parents
            && self.equations == other.equations
            && self.section == other.section
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternToken {
    Literal(String),
    Var(char),
}

#[derive(Debug, Clone, Eq)]
pub struct Production {
    pub lhs: Vec<PatternToken>,
    pub rhs: Vec<PatternToken>,
    pub location: Location,
}

impl PartialEq for Production {
    fn eq(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

/// An allomorphy rule as written: variable patterns plus ordered productions.
#[derive(Debug, Clone, Eq)]
pub struct AloRuleDef {
    pub name: String,
    pub var_decls: IndexMap<char, String>,
    pub productions: Vec<Production>,
    pub location: Location,
}

impl PartialEq for AloRuleDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.var_decls == other.var_decls && self.productions == other.productions
    }
}

/// Left side of a dictionary-rule equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictTarget {
    /// `$$`
    Name,
    /// `@ p…`; an empty path is the whole tree.
    Tree(Vec<String>),
}

/// Right side of a dictionary-rule equation, always read from the source entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictSource {
    Name,
    Tree { path: Vec<String>, deletions: Vec<Path> },
}

#[derive(Debug, Clone, Eq)]
pub struct DictEquation {
    pub lhs: DictTarget,
    pub rhs: DictSource,
    pub location: Location,
}

impl PartialEq for DictEquation {
    fn eq(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DictRule {
    pub equations: Vec<DictEquation>,
}

/// Dictionary-generation rules, one list per emitting section.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DictRuleSet {
    pub lexemes: Vec<DictRule>,
    pub morphemes: Vec<DictRule>,
    pub words: Vec<DictRule>,
}

impl DictRuleSet {
    pub fn for_section(&self, section: Section) -> &[DictRule] {
        match section {
            Section::Lexemes => &self.lexemes,
            Section::Morphemes => &self.morphemes,
            Section::Words => &self.words,
            Section::Classes => &[],
        }
    }

    pub fn for_section_mut(&mut self, section: Section) -> Option<&mut Vec<DictRule>> {
        match section {
            Section::Lexemes => Some(&mut self.lexemes),
            Section::Morphemes => Some(&mut self.morphemes),
            Section::Words => Some(&mut self.words),
            Section::Classes => None,
        }
    }
}

/// A #DATA-DICT declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDecl {
    /// `f =`: any atomic value.
    Open,
    /// `f = v1 v2 …`
    Closed(ValueSet),
    /// `f = @(a b) @(c d)`: child labels drawn from one alternative.
    Structured(Vec<BTreeSet<String>>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncludeGraph {
    /// Files in the order they were first loaded.
    pub files: Vec<String>,
    /// (including file, included file)
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct SourceBase {
    pub morphemes: IndexMap<String, EntryDef>,
    pub words: IndexMap<String, EntryDef>,
    pub classes: IndexMap<String, EntryDef>,
    pub lexemes: IndexMap<String, EntryDef>,
    pub alo_rules: IndexMap<String, AloRuleDef>,
    /// `None` when no file has a #DATA-DICT section at all.
    pub data_dict: Option<IndexMap<String, TypeDecl>>,
    pub dict_rules: DictRuleSet,
    pub include_graph: IncludeGraph,
}

impl SourceBase {
    pub fn section(&self, section: Section) -> &IndexMap<String, EntryDef> {
        match section {
            Section::Morphemes => &self.morphemes,
            Section::Words => &self.words,
            Section::Classes => &self.classes,
            Section::Lexemes => &self.lexemes,
        }
    }

    pub fn section_mut(&mut self, section: Section) -> &mut IndexMap<String, EntryDef> {
        match section {
            Section::Morphemes => &mut self.morphemes,
            Section::Words => &mut self.words,
            Section::Classes => &mut self.classes,
            Section::Lexemes => &mut self.lexemes,
        }
    }

    /// Equality of everything but the include graph and source locations.
    pub fn content_eq(&self, other: &SourceBase) -> bool {
        self.morphemes == other.morphemes
            && self.words == other.words
            && self.classes == other.classes
            && self.lexemes == other.lexemes
            && self.alo_rules == other.alo_rules
            && self.data_dict == other.data_dict
            && self.dict_rules == other.dict_rules
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("include cycle: {}", .0.join(" -> "))]
    IncludeCycle(Vec<String>),
    #[error("duplicate {section} entry `{name}`")]
    DuplicateEntry { section: String, name: String },
    #[error("{0}")]
    Syntax(String),
    #[error("rule `{rule}` uses undeclared variable ${var}")]
    UndeclaredVariable { rule: String, var: char },
    #[error("dictionary rule assigns nothing to {0}")]
    MissingTarget(&'static str),
    #[error("cannot read file: {0}")]
    Io(String),
    #[error("invalid UTF-8 at column {column}")]
    Encoding { column: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {kind}")]
pub struct ParseError {
    pub location: Location,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(location: Location, kind: ParseErrorKind) -> Self {
        ParseError { location, kind }
    }

    pub(crate) fn syntax(location: Location, message: impl Into<String>) -> Self {
        ParseError::new(location, ParseErrorKind::Syntax(message.into()))
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let io = matches!(e.kind, ParseErrorKind::Io(_) | ParseErrorKind::Encoding { .. });
        Diagnostic {
            io,
            ..Diagnostic::error(e.kind.to_string()).at(e.location)
        }
    }
}
