use std::borrow::Cow;
use std::fmt;

use thiserror::Error;

/// Characters that never appear in a symbol or a feature label.
pub const RESERVED_CHARS: &[char] = &['=', '$', '(', ')', '#', ';', '"', '\\'];

/// True when `text` can be written bare, without quotes.
pub fn is_symbol_text(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && !RESERVED_CHARS.contains(&c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Symbol,
    Str,
}

/// An atomic feature value.
///
/// The kind is derived from the text: anything that is a legal symbol is a
/// symbol, everything else is a character string. A quoted `"ped"` and a
/// bare `ped` are therefore the same atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(String);

impl Atom {
    pub fn new(text: impl Into<String>) -> Self {
        Atom(text.into())
    }

    pub fn text(&self) -> &str {
        &self.0
    }

    pub fn kind(&self) -> AtomKind {
        if is_symbol_text(&self.0) {
            AtomKind::Symbol
        } else {
            AtomKind::Str
        }
    }

    pub fn is_string(&self) -> bool {
        self.kind() == AtomKind::Str
    }

    /// Surface rendering: bare for symbols, double-quoted and escaped for strings.
    pub fn render(&self) -> Cow<'_, str> {
        match self.kind() {
            AtomKind::Symbol => Cow::Borrowed(&self.0),
            AtomKind::Str => Cow::Owned(quote(&self.0)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom::new(s)
    }
}

pub fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueSetError {
    #[error("a value set needs at least one value")]
    Empty,
    #[error("duplicate value {0}")]
    Duplicate(Atom),
    #[error("a character string must be the only value of its feature")]
    StringNotAlone,
}

/// A disjunctive leaf value. Keeps source order for display; equality and
/// every other semantic operation treat it as a set.
#[derive(Debug, Clone)]
pub struct ValueSet(Vec<Atom>);

impl ValueSet {
    pub fn new(values: Vec<Atom>) -> Result<Self, ValueSetError> {
        if values.is_empty() {
            return Err(ValueSetError::Empty);
        }
        if values.len() > 1 && values.iter().any(Atom::is_string) {
            return Err(ValueSetError::StringNotAlone);
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(ValueSetError::Duplicate(v.clone()));
            }
        }
        Ok(ValueSet(values))
    }

    pub fn single(value: impl Into<Atom>) -> Self {
        ValueSet(vec![value.into()])
    }

    /// Builds a set from symbol texts. Panics on an invalid set; meant for
    /// literals in code and tests.
    pub fn of(values: &[&str]) -> Self {
        ValueSet::new(values.iter().map(|v| Atom::new(*v)).collect()).expect("valid value set")
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn is_subset(&self, other: &ValueSet) -> bool {
        self.0.iter().all(|v| other.contains(v))
    }

    /// The single member, if there is exactly one.
    pub fn as_single(&self) -> Option<&Atom> {
        match self.0.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    /// Disjunctive combination: the values both sides allow, in `self`'s
    /// order. `None` when nothing is left.
    pub fn intersect(&self, other: &ValueSet) -> Option<ValueSet> {
        let kept: Vec<Atom> = self.0.iter().filter(|v| other.contains(v)).cloned().collect();
        if kept.is_empty() {
            None
        } else {
            Some(ValueSet(kept))
        }
    }

    pub fn sorted(&self) -> Vec<&Atom> {
        let mut v: Vec<&Atom> = self.0.iter().collect();
        v.sort();
        v
    }
}

impl PartialEq for ValueSet {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.is_subset(other)
    }
}

impl Eq for ValueSet {}

impl fmt::Display for ValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.sorted().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&v.render())?;
        }
        Ok(())
    }
}
