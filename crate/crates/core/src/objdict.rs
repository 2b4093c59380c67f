//! The compiled object dictionary: allomorph-keyed entries, their indexes,
//! and the on-disk text format.
//!
//! ```text
//! LEXIFORGE-OBJDICT 1
//! pid
//!   concat = vl
//!   lex = pedir
//!
//! ```
//!
//! Entries are sorted by surface, then by canonical form. Each body line is
//! a canonical `path = values` line indented by two spaces, and a blank line
//! ends the entry. Surfaces that are not plain symbols are written quoted.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::feature::{Atom, FeatureTree, Node};
use crate::source::{parse_equation, LeafTerm, Section, ValueTerm};

pub const HEADER: &str = "LEXIFORGE-OBJDICT 1";
const MAGIC: &str = "LEXIFORGE-OBJDICT";

/// Where a compiled entry came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub section: Section,
    pub source: String,
    /// Index of the dict rule within its section's list.
    pub rule: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectEntry {
    pub surface: String,
    pub tree: FeatureTree,
    /// Unknown for entries read back from disk.
    pub origin: Option<Origin>,
}

impl ObjectEntry {
    pub fn new(surface: impl Into<String>, tree: FeatureTree) -> Self {
        ObjectEntry {
            surface: surface.into(),
            tree,
            origin: None,
        }
    }

    pub fn canonical_form(&self) -> String {
        self.tree.canonical_form()
    }
}

/// Feature names feeding the lemma and concatenation-class indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexConfig {
    pub lemma_feature: String,
    pub concat_feature: String,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            lemma_feature: "lex".into(),
            concat_feature: "concat".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub entries: usize,
    pub surfaces: usize,
    pub lemmas: usize,
    /// Surfaces shared by more than one entry.
    pub homographs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported dictionary version `{0}`")]
    Version(String),
}

fn format_error(line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Format {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ObjectDictionary {
    entries: Vec<ObjectEntry>,
    config: IndexConfig,
    surface_index: HashMap<String, Vec<usize>>,
    lemma_index: HashMap<String, Vec<usize>>,
    concat_index: HashMap<String, Vec<usize>>,
}

impl ObjectDictionary {
    pub fn build(entries: Vec<ObjectEntry>) -> (Self, Vec<Diagnostic>) {
        Self::build_with(entries, IndexConfig::default())
    }

    /// Keeps insertion order. An entry equal to an earlier one in surface and
    /// canonical tree is dropped with a warning.
    pub fn build_with(entries: Vec<ObjectEntry>, config: IndexConfig) -> (Self, Vec<Diagnostic>) {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(entries.len());
        let mut diags = Vec::new();
        for e in entries {
            if seen.insert((e.surface.clone(), e.canonical_form())) {
                kept.push(e);
            } else {
                let mut d = Diagnostic::warning(format!("duplicate entry `{}` collapsed", e.surface));
                if let Some(o) = &e.origin {
                    d = d.for_entry(o.source.clone());
                }
                diags.push(d);
            }
        }
        let mut dict = ObjectDictionary {
            entries: kept,
            config,
            ..Default::default()
        };
        dict.reindex();
        (dict, diags)
    }

    fn reindex(&mut self) {
        self.surface_index.clear();
        self.lemma_index.clear();
        self.concat_index.clear();
        let lemma = [self.config.lemma_feature.clone()];
        let concat = [self.config.concat_feature.clone()];
        for (id, e) in self.entries.iter().enumerate() {
            self.surface_index.entry(e.surface.clone()).or_default().push(id);
            if let Some(vs) = e.tree.get_leaf(&lemma) {
                for v in vs.iter() {
                    self.lemma_index.entry(v.text().to_string()).or_default().push(id);
                }
            }
            if let Some(vs) = e.tree.get_leaf(&concat) {
                for v in vs.iter() {
                    self.concat_index.entry(v.text().to_string()).or_default().push(id);
                }
            }
        }
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn entries(&self) -> &[ObjectEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &ObjectEntry {
        &self.entries[id]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn surface_ids(&self, surface: &str) -> &[usize] {
        self.surface_index.get(surface).map_or(&[], Vec::as_slice)
    }

    pub fn lemma_ids(&self, lemma: &str) -> &[usize] {
        self.lemma_index.get(lemma).map_or(&[], Vec::as_slice)
    }

    pub fn concat_ids(&self, class: &str) -> &[usize] {
        self.concat_index.get(class).map_or(&[], Vec::as_slice)
    }

    pub fn lookup(&self, surface: &str) -> Vec<&ObjectEntry> {
        self.surface_ids(surface).iter().map(|&i| &self.entries[i]).collect()
    }

    pub fn lookup_by_lemma(&self, lemma: &str) -> Vec<&ObjectEntry> {
        self.lemma_ids(lemma).iter().map(|&i| &self.entries[i]).collect()
    }

    /// Distinct surface lengths in bytes, ascending. Lets the analyzer skip
    /// split points no entry could fill.
    pub fn surface_lengths(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self.surface_index.keys().map(String::len).collect();
        lens.sort_unstable();
        lens.dedup();
        lens
    }

    pub fn stats(&self) -> Stats {
        Stats {
            entries: self.entries.len(),
            surfaces: self.surface_index.len(),
            lemmas: self.lemma_index.len(),
            homographs: self.surface_index.values().filter(|ids| ids.len() > 1).count(),
        }
    }

    /// Entries in on-disk order.
    pub fn sorted_entries(&self) -> Vec<(&ObjectEntry, String)> {
        let mut v: Vec<(&ObjectEntry, String)> = self.entries.iter().map(|e| (e, e.canonical_form())).collect();
        v.sort_by(|a, b| (&a.0.surface, &a.1).cmp(&(&b.0.surface, &b.1)));
        v
    }

    pub fn save<W: Write>(&self, mut sink: W) -> io::Result<()> {
        writeln!(sink, "{HEADER}")?;
        for (e, canonical) in self.sorted_entries() {
            writeln!(sink, "{}", Atom::new(e.surface.clone()).render())?;
            for line in canonical.lines() {
                writeln!(sink, "  {line}")?;
            }
            writeln!(sink)?;
        }
        sink.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dictionary text is UTF-8")
    }

    pub fn load(text: &str) -> Result<Self, LoadError> {
        Self::load_with(text, IndexConfig::default())
    }

    pub fn load_with(text: &str, config: IndexConfig) -> Result<Self, LoadError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, HEADER)) => {}
            Some((_, h)) if h.starts_with(MAGIC) => {
                return Err(LoadError::Version(h[MAGIC.len()..].trim().to_string()))
            }
            _ => return Err(format_error(1, format!("missing `{HEADER}` header"))),
        }
        let mut entries = Vec::new();
        let mut current: Option<ObjectEntry> = None;
        for (n, line) in lines {
            if line.is_empty() {
                match current.take() {
                    Some(e) => entries.push(e),
                    None => return Err(format_error(n, "unexpected blank line")),
                }
            } else if let Some(body) = line.strip_prefix("  ") {
                let entry = current
                    .as_mut()
                    .ok_or_else(|| format_error(n, "feature line outside an entry"))?;
                add_body_line(&mut entry.tree, body).map_err(|m| format_error(n, m))?;
            } else if current.is_some() {
                return Err(format_error(n, "entry not terminated by a blank line"));
            } else {
                let surface = parse_surface(line).ok_or_else(|| format_error(n, "malformed surface"))?;
                current = Some(ObjectEntry::new(surface, FeatureTree::new()));
            }
        }
        if current.is_some() {
            return Err(format_error(
                text.lines().count(),
                "last entry not terminated by a blank line",
            ));
        }
        let mut dict = ObjectDictionary {
            entries,
            config,
            ..Default::default()
        };
        dict.reindex();
        Ok(dict)
    }
}

fn parse_surface(line: &str) -> Option<String> {
    if !line.starts_with('"') {
        return (line.trim() == line && !line.contains('"')).then(|| line.to_string());
    }
    let eq = parse_equation(&format!("s = {line}")).ok()?;
    match eq.values.as_slice() {
        [ValueTerm::Atom(a)] => Some(a.text().to_string()),
        _ => None,
    }
}

fn add_body_line(tree: &mut FeatureTree, body: &str) -> Result<(), String> {
    let eq = parse_equation(body).map_err(|e| e.kind.to_string())?;
    let LeafTerm::Values(vs) = eq.leaf() else {
        return Err("rule invocation in a compiled entry".into());
    };
    let path = eq.path.labels();
    if tree.get(path).is_some() {
        return Err(format!("duplicate feature `{}`", eq.path));
    }
    tree.insert(path, Node::Leaf(vs)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::ValueSet;

    fn entry(surface: &str, eqs: &[(&str, &[&str])]) -> ObjectEntry {
        let mut t = FeatureTree::new();
        for (p, v) in eqs {
            let path: Vec<String> = p.split(' ').map(String::from).collect();
            t.insert(&path, Node::Leaf(ValueSet::of(v))).unwrap();
        }
        ObjectEntry::new(surface, t)
    }

    fn sample() -> Vec<ObjectEntry> {
        vec![
            entry(
                "ped",
                &[("concat", &["vl"]), ("lex", &["pedir"]), ("stt", &["0", "14"])],
            ),
            entry("pid", &[("concat", &["vl"]), ("lex", &["pedir"]), ("stt", &["11"])]),
            entry("'abamos", &[("concat", &["vm"]), ("agr pers", &["1"])]),
        ]
    }

    #[test]
    fn indexes() {
        let (d, diags) = ObjectDictionary::build(sample());
        assert!(diags.is_empty());
        let surf = |v: Vec<&ObjectEntry>| v.into_iter().map(|e| e.surface.clone()).collect::<Vec<_>>();
        assert_eq!(surf(d.lookup_by_lemma("pedir")), ["ped", "pid"]);
        assert_eq!(d.concat_ids("vl"), [0, 1]);
        assert_eq!(d.concat_ids("vm"), [2]);
        assert_eq!(surf(d.lookup("'abamos")), ["'abamos"]);
        assert!(d.lookup("xyzzy").is_empty());
        assert!(d.lookup_by_lemma("amar").is_empty());
        assert_eq!(
            d.stats(),
            Stats {
                entries: 3,
                surfaces: 3,
                lemmas: 1,
                homographs: 0
            }
        );
        assert_eq!(ObjectDictionary::build(vec![]).0.stats(), Stats::default());
    }

    #[test]
    fn duplicates_and_homographs() {
        let mut es = sample();
        es.push(sample()[0].clone());
        es.push(entry("ped", &[("x", &["1"])]));
        let (d, diags) = ObjectDictionary::build(es);
        assert_eq!(diags.len(), 1);
        assert_eq!(d.len(), 4);
        assert_eq!(d.stats().homographs, 1);
    }

    #[test]
    fn save_format_and_round_trip() {
        let (d, _) = ObjectDictionary::build(sample());
        let text = d.to_text();
        assert!(text.starts_with("LEXIFORGE-OBJDICT 1\n'abamos\n  agr pers = 1\n  concat = vm\n\nped\n"));
        let back = ObjectDictionary::load(&text).unwrap();
        assert_eq!(back.to_text(), text);
        let mut rev = sample();
        rev.reverse();
        assert_eq!(ObjectDictionary::build(rev).0.to_text(), text);
    }

    #[test]
    fn quoted_surfaces() {
        let (d, _) = ObjectDictionary::build(vec![entry("two words", &[]), entry("a\"b", &[("k", &["v"])])]);
        let text = d.to_text();
        assert!(text.contains("\n\"two words\"\n\n"));
        let back = ObjectDictionary::load(&text).unwrap();
        assert_eq!(back.lookup("a\"b").len(), 1);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            ObjectDictionary::load("LEXIFORGE-OBJDICT 2\n"),
            Err(LoadError::Version(v)) if v == "2"
        ));
        assert!(matches!(
            ObjectDictionary::load("hello\n"),
            Err(LoadError::Format { line: 1, .. })
        ));
        let dup = "LEXIFORGE-OBJDICT 1\nx\n  a = 1\n  a = 2\n\n";
        assert!(matches!(
            ObjectDictionary::load(dup),
            Err(LoadError::Format { line: 4, .. })
        ));
        let clash = "LEXIFORGE-OBJDICT 1\nx\n  a b = 1\n  a = 2\n\n";
        assert!(matches!(
            ObjectDictionary::load(clash),
            Err(LoadError::Format { line: 4, .. })
        ));
        let open = "LEXIFORGE-OBJDICT 1\nx\n  a = 1\n";
        assert!(matches!(ObjectDictionary::load(open), Err(LoadError::Format { .. })));
        assert!(ObjectDictionary::load("LEXIFORGE-OBJDICT 1\n").unwrap().is_empty());
    }
}
