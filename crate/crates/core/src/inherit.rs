//! Default multiple inheritance and rule evaluation.
//!
//! An entry's ancestors are linearized depth-first, left to right, keeping
//! the first occurrence of a class reached twice. Trees are then merged
//! from the least specific ancestor to the entry itself, so nearer
//! definitions override farther ones. Only after the merge are `$rule` and
//! `$$` leaves evaluated, with the entry's own name as argument.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::alo::{AloRules, RuleLookup};
use crate::diag::Diagnostic;
use crate::feature::{Atom, FeatureTree, Node, Tree, ValueSet};
use crate::source::{EntryDef, LeafTerm, Section, SourceBase};

/// Source-level tree whose leaves may still be rule invocations.
pub type TermTree = Tree<LeafTerm>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("inheritance cycle: {}", .0.join(" -> "))]
    InheritanceCycle(Vec<String>),
    #[error("unknown allomorphy rule `{0}`")]
    UnknownRule(String),
    #[error("allomorphy rule `{0}` is invalid")]
    BrokenRule(String),
}

/// Priority-ordered ancestry; the entry itself comes first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linearization {
    pub entry: String,
    pub order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedEntry {
    pub name: String,
    pub section: Section,
    pub tree: FeatureTree,
}

/// Resolution of a whole base. Sections without entries are absent.
#[derive(Debug, Clone, Default)]
pub struct ResolvedBase {
    pub sections: BTreeMap<Section, Vec<ResolvedEntry>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ResolvedBase {
    pub fn entries(&self) -> impl Iterator<Item = &ResolvedEntry> {
        self.sections.values().flatten()
    }
}

/// The entry's own equations folded in source order, later ones winning.
pub fn entry_tree(entry: &EntryDef) -> TermTree {
    entry.equations.iter().fold(TermTree::new(), |acc, eq| {
        let single = TermTree::singleton(eq.path.labels(), Node::Leaf(eq.leaf()))
            .expect("a fresh tree has no leaves to run through");
        acc.merged(single)
    })
}

pub fn linearize(entry: &EntryDef, classes: &IndexMap<String, EntryDef>) -> Result<Linearization, ResolveError> {
    let mut order = vec![entry.name.clone()];
    let mut seen = HashSet::new();
    let mut stack = Vec::new();
    if entry.section == Section::Classes {
        seen.insert(entry.name.clone());
        stack.push(entry.name.clone());
    }
    visit(&entry.parents, classes, &mut stack, &mut seen, &mut order)?;
    Ok(Linearization {
        entry: entry.name.clone(),
        order,
    })
}

fn visit(
    parents: &[String],
    classes: &IndexMap<String, EntryDef>,
    stack: &mut Vec<String>,
    seen: &mut HashSet<String>,
    order: &mut Vec<String>,
) -> Result<(), ResolveError> {
    for parent in parents {
        if let Some(pos) = stack.iter().position(|c| c == parent) {
            let mut cycle = stack[pos..].to_vec();
            cycle.push(parent.clone());
            return Err(ResolveError::InheritanceCycle(cycle));
        }
        if seen.contains(parent) {
            continue;
        }
        let class = classes
            .get(parent)
            .ok_or_else(|| ResolveError::UnknownClass(parent.clone()))?;
        seen.insert(parent.clone());
        order.push(parent.clone());
        stack.push(parent.clone());
        visit(&class.parents, classes, stack, seen, order)?;
        stack.pop();
    }
    Ok(())
}

/// Resolves entries against a fixed class table and rule set.
pub struct Resolver<'a> {
    base: &'a SourceBase,
    rules: &'a AloRules,
    class_trees: HashMap<&'a str, TermTree>,
}

impl<'a> Resolver<'a> {
    pub fn new(base: &'a SourceBase, rules: &'a AloRules) -> Self {
        let class_trees = base
            .classes
            .iter()
            .map(|(name, def)| (name.as_str(), entry_tree(def)))
            .collect();
        Resolver {
            base,
            rules,
            class_trees,
        }
    }

    pub fn linearize(&self, entry: &EntryDef) -> Result<Linearization, ResolveError> {
        linearize(entry, &self.base.classes)
    }

    /// Step one of resolution: the inherited tree before rule evaluation.
    pub fn merged_tree(&self, entry: &EntryDef) -> Result<TermTree, ResolveError> {
        let lin = self.linearize(entry)?;
        let mut tree = TermTree::new();
        for class in lin.order[1..].iter().rev() {
            tree = tree.merged(self.class_trees[class.as_str()].clone());
        }
        Ok(tree.merged(entry_tree(entry)))
    }

    pub fn resolve(&self, entry: &EntryDef) -> Result<ResolvedEntry, ResolveError> {
        let merged = self.merged_tree(entry)?;
        let tree = merged.filter_map_leaves(&mut |_, leaf| match leaf {
            LeafTerm::Values(vs) => Ok(Some(vs.clone())),
            LeafTerm::SelfName => Ok(Some(ValueSet::single(Atom::new(entry.name.clone())))),
            LeafTerm::RuleCall(rule) => match self.rules.lookup(rule) {
                RuleLookup::Found(r) => Ok(r.apply(&entry.name).map(|s| ValueSet::single(Atom::new(s)))),
                RuleLookup::Broken => Err(ResolveError::BrokenRule(rule.clone())),
                RuleLookup::Unknown => Err(ResolveError::UnknownRule(rule.clone())),
            },
        })?;
        Ok(ResolvedEntry {
            name: entry.name.clone(),
            section: entry.section,
            tree,
        })
    }

    /// Resolves every morpheme, word and lemma in source order. A failing
    /// entry yields a diagnostic and is left out; the rest still resolve.
    pub fn resolve_all(&self) -> ResolvedBase {
        let mut out = ResolvedBase::default();
        for section in Section::EMITTED {
            let mut list = Vec::new();
            for entry in self.base.section(section).values() {
                match self.resolve(entry) {
                    Ok(r) => list.push(r),
                    Err(e) => out.diagnostics.push(
                        Diagnostic::error(e.to_string())
                            .at(entry.location.clone())
                            .for_entry(entry.name.clone()),
                    ),
                }
            }
            if !list.is_empty() {
                out.sections.insert(section, list);
            }
        }
        out
    }
}

/// Compiles the base's rules and resolves everything. Rule compilation
/// failures are included in the diagnostics.
pub fn resolve_all(base: &SourceBase) -> ResolvedBase {
    let (rules, mut diags) = AloRules::compile(base);
    let mut out = Resolver::new(base, &rules).resolve_all();
    diags.append(&mut out.diagnostics);
    out.diagnostics = diags;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::parse_str;

    const FRAGMENT: &str = "\
#ALO-RULES

rv0
{X = .+}
$Xar -> $X
$Xer -> $X
$Xir -> $X

rv8c
{X = .+}
{C = [bcdfghjklmn'npqrstvwxyz]}
$Xe$Cir -> $Xi$C

#CLASSES

MV
concat = vl
alo 1 stem = $rv0

MV8c (MV)
alo 1 stt = 0 14 15 21 22 23 24 25 26 31 32 34 35 \\
            41 42 43 44 45 46 71 72 73 74 75 76 85 99
alo 1 sut = reg
alo 2 stem = $rv8c
alo 2 stt = 11 12 13 16 33 36 51 52 53 54 55 56 \\
            61 62 63 64 65 66 82 90
alo 2 sut = reg

C3
conj = 3

#LEXEMES

pedir (MV8c C3)

amar (MV8c C3)

#MORPHEMES

'abamos
agr pers = 1
agr num = plu
vinfo tense = impf
vinfo mood = ind
conj = 1
stt = 24
sut = reg
concat = vm
";

    fn leaf(t: &FeatureTree, path: &str) -> Option<String> {
        let p: Vec<String> = path.split(' ').map(String::from).collect();
        t.get_leaf(&p).map(ToString::to_string)
    }

    #[test]
    fn linearize_pedir_lemma() {
        let base = parse_str("f.lex", FRAGMENT).unwrap();
        let lin = linearize(&base.lexemes["pedir"], &base.classes).unwrap();
        assert_eq!(lin.order, ["pedir", "MV8c", "MV", "C3"]);
        let lin = linearize(&base.morphemes["'abamos"], &base.classes).unwrap();
        assert_eq!(lin.order, ["'abamos"]);
    }

    #[test]
    fn diamond_keeps_first_occurrence() {
        let base = parse_str(
            "d.lex",
            "#CLASSES\n\nTop\n\nL (Top)\n\nR (Top)\n\n#LEXEMES\n\nx (L R)\n",
        )
        .unwrap();
        let lin = linearize(&base.lexemes["x"], &base.classes).unwrap();
        assert_eq!(lin.order, ["x", "L", "Top", "R"]);
    }

    #[test]
    fn cycles_and_unknown_classes() {
        let base = parse_str("c.lex", "#CLASSES\n\nA (B)\n\nB (A)\n\n#LEXEMES\n\nx (A)\n\ny (Nope)\n").unwrap();
        assert_eq!(
            linearize(&base.classes["A"], &base.classes),
            Err(ResolveError::InheritanceCycle(vec!["A".into(), "B".into(), "A".into()]))
        );
        assert!(matches!(
            linearize(&base.lexemes["x"], &base.classes),
            Err(ResolveError::InheritanceCycle(_))
        ));
        assert_eq!(
            linearize(&base.lexemes["y"], &base.classes),
            Err(ResolveError::UnknownClass("Nope".into()))
        );
    }

    #[test]
    fn resolve_pedir() {
        let base = parse_str("f.lex", FRAGMENT).unwrap();
        let (rules, diags) = AloRules::compile(&base);
        assert!(diags.is_empty());
        let r = Resolver::new(&base, &rules).resolve(&base.lexemes["pedir"]).unwrap();
        let t = &r.tree;
        assert_eq!(leaf(t, "concat").as_deref(), Some("vl"));
        assert_eq!(leaf(t, "conj").as_deref(), Some("3"));
        assert_eq!(leaf(t, "alo 1 stem").as_deref(), Some("ped"));
        assert_eq!(leaf(t, "alo 2 stem").as_deref(), Some("pid"));
        assert_eq!(leaf(t, "alo 1 sut").as_deref(), Some("reg"));
        assert_eq!(t.get_leaf(&["alo".into(), "1".into(), "stt".into()]).unwrap().len(), 27);
        assert_eq!(t.get_leaf(&["alo".into(), "2".into(), "stt".into()]).unwrap().len(), 20);
    }

    #[test]
    fn failed_rule_drops_only_its_leaf() {
        let base = parse_str("f.lex", FRAGMENT).unwrap();
        let (rules, _) = AloRules::compile(&base);
        let r = Resolver::new(&base, &rules).resolve(&base.lexemes["amar"]).unwrap();
        assert_eq!(leaf(&r.tree, "alo 2 stem"), None);
        assert_eq!(leaf(&r.tree, "alo 2 sut").as_deref(), Some("reg"));
        assert_eq!(leaf(&r.tree, "alo 1 stem").as_deref(), Some("am"));
    }

    #[test]
    fn entry_overrides_and_self_name() {
        let text = "#CLASSES\n\nK\nconcat = vl\nagr num = sg\n\n#WORDS\n\nfue (K)\nconcat = aux\nlex = $$\nagr = x\n";
        let base = parse_str("o.lex", text).unwrap();
        let out = resolve_all(&base);
        assert!(out.diagnostics.is_empty());
        let t = &out.sections[&Section::Words][0].tree;
        assert_eq!(t.canonical_form(), "agr = x\nconcat = aux\nlex = fue\n");
    }

    #[test]
    fn resolve_all_isolates_failures() {
        let base = parse_str("f.lex", FRAGMENT).unwrap();
        let out = resolve_all(&base);
        assert!(out.diagnostics.is_empty());
        assert_eq!(out.entries().count(), 3);
        assert!(!out.sections.contains_key(&Section::Classes));

        let base = parse_str("b.lex", "#LEXEMES\n\nok\nx = 1\n\nbroken\ny = $nosuch\n").unwrap();
        let out = resolve_all(&base);
        assert_eq!(out.entries().count(), 1);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].entry.as_deref(), Some("broken"));
        assert!(out.diagnostics[0].message.contains("nosuch"));

        let out = resolve_all(&SourceBase::default());
        assert!(out.sections.is_empty());
    }

    #[test]
    fn parentless_entry_is_its_own_equations() {
        let base = parse_str("f.lex", FRAGMENT).unwrap();
        let out = resolve_all(&base);
        let m = &out.sections[&Section::Morphemes][0];
        assert_eq!(
            m.tree.canonical_form(),
            "agr num = plu\nagr pers = 1\nconcat = vm\nconj = 1\nstt = 24\nsut = reg\nvinfo mood = ind\nvinfo tense = impf\n"
        );
    }
}
