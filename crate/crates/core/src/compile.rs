//! Dictionary rules and the full source-to-dictionary pipeline.
//!
//! A rule builds one candidate object entry from one resolved source entry.
//! Right-hand sides always read the source entry; left-hand sides write a
//! target that starts out empty. `@` assignments accumulate by merging, with
//! later equations overriding earlier ones where they collide. The rule
//! emits an entry only if `$$` ends up with an effective value.

use thiserror::Error;

use crate::alo::AloRules;
use crate::diag::{has_errors, Diagnostic};
use crate::feature::{Atom, FeatureNode, FeatureTree, Node, TreeError, ValueSet};
use crate::inherit::Resolver;
use crate::objdict::{IndexConfig, ObjectDictionary, ObjectEntry, Origin};
use crate::source::{DictRule, DictSource, DictTarget, Section, SourceBase};
use crate::typecheck::check_base;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("entry name must be a single atomic value, got {0}")]
    NonAtomicName(String),
    #[error("cannot assign a value to the whole tree")]
    LeafAtRoot,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// What an RHS yields when read from the source entry.
fn read_source(rhs: &DictSource, name: &str, tree: &FeatureTree) -> Option<FeatureNode> {
    match rhs {
        DictSource::Name => Some(Node::Leaf(ValueSet::single(Atom::new(name)))),
        DictSource::Tree { path, deletions } => {
            let mut node = if path.is_empty() {
                Node::Tree(tree.clone())
            } else {
                tree.get(path)?.clone()
            };
            if let Node::Tree(t) = &mut node {
                for d in deletions {
                    t.remove(d.labels());
                }
            }
            Some(node)
        }
    }
}

fn describe(node: &FeatureNode) -> String {
    match node {
        Node::Leaf(vs) => format!("`{vs}`"),
        Node::Tree(_) => "a feature structure".into(),
    }
}

/// Runs one rule against one resolved entry. `Ok(None)` means the rule did
/// not apply because no name was assigned. The returned entry has no origin.
pub fn apply_dict_rule(rule: &DictRule, name: &str, tree: &FeatureTree) -> Result<Option<ObjectEntry>, CompileError> {
    let mut target_name: Option<FeatureNode> = None;
    let mut target = FeatureTree::new();
    for eq in &rule.equations {
        let Some(value) = read_source(&eq.rhs, name, tree) else {
            continue;
        };
        match &eq.lhs {
            DictTarget::Name => target_name = Some(value),
            DictTarget::Tree(path) if path.is_empty() => match value {
                Node::Tree(t) => target = target.merged(t),
                Node::Leaf(_) => return Err(CompileError::LeafAtRoot),
            },
            DictTarget::Tree(path) => match (target.get(path), value) {
                (Some(Node::Tree(_)), Node::Tree(t)) => {
                    target = target.merged(FeatureTree::singleton(path, Node::Tree(t))?);
                }
                (_, value) => target.insert(path, value)?,
            },
        }
    }
    let Some(name_node) = target_name else {
        return Ok(None);
    };
    let surface = match &name_node {
        Node::Leaf(vs) => vs.as_single().map(|a| a.text().to_string()),
        Node::Tree(_) => None,
    }
    .ok_or_else(|| CompileError::NonAtomicName(describe(&name_node)))?;
    Ok(Some(ObjectEntry::new(surface, target.pruned())))
}

/// Result of compiling a base. The dictionary is absent when any stage
/// reported an error.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub dictionary: Option<ObjectDictionary>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn compile(base: &SourceBase) -> Compilation {
    compile_with(base, IndexConfig::default())
}

pub fn compile_with(base: &SourceBase, config: IndexConfig) -> Compilation {
    let (rules, mut diags) = AloRules::compile(base);
    let resolved = Resolver::new(base, &rules).resolve_all();
    diags.extend(resolved.diagnostics.iter().cloned());
    diags.extend(check_base(&resolved, base));

    let mut entries = Vec::new();
    for (&section, list) in &resolved.sections {
        let dict_rules = base.dict_rules.for_section(section);
        for entry in list {
            let location = base.section(section).get(&entry.name).map(|e| e.location.clone());
            let mut produced = 0;
            for (index, rule) in dict_rules.iter().enumerate() {
                match apply_dict_rule(rule, &entry.name, &entry.tree) {
                    Ok(Some(mut obj)) => {
                        obj.origin = Some(Origin {
                            section,
                            source: entry.name.clone(),
                            rule: index,
                        });
                        entries.push(obj);
                        produced += 1;
                    }
                    Ok(None) => {}
                    Err(e) => {
                        let loc = rule.equations.first().map(|eq| eq.location.clone());
                        let mut d =
                            Diagnostic::error(format!("dict rule {}: {e}", index + 1)).for_entry(entry.name.clone());
                        d.location = loc.or_else(|| location.clone());
                        diags.push(d);
                    }
                }
            }
            if section == Section::Lexemes && produced == 0 {
                let mut d = Diagnostic::warning("lemma produced no object entries").for_entry(entry.name.clone());
                d.location = location;
                diags.push(d);
            }
        }
    }

    if has_errors(&diags) {
        return Compilation {
            dictionary: None,
            diagnostics: diags,
        };
    }
    let (dict, dups) = ObjectDictionary::build_with(entries, config);
    diags.extend(dups);
    Compilation {
        dictionary: Some(dict),
        diagnostics: diags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inherit::resolve_all;
    use crate::source::{parse_dict_rules, parse_str};

    fn rule(text: &str) -> DictRule {
        let set = parse_dict_rules(&format!("LEXEMES\n\n{text}")).unwrap();
        set.lexemes.into_iter().next().unwrap()
    }

    fn alo_rule(n: u8) -> String {
        format!("$$ = @ alo {n} stem\n@ = @ alo {n} (- stem)\n@ = @ (- alo - aux)\n@ lex = $$\n")
    }

    const PEDIR: &str = "\
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
";

    fn pedir() -> FeatureTree {
        let base = parse_str("p.lex", PEDIR).unwrap();
        resolve_all(&base).sections[&Section::Lexemes][0].tree.clone()
    }

    #[test]
    fn alo_rules_on_pedir() {
        let src = pedir();
        assert_eq!(apply_dict_rule(&rule(&alo_rule(3)), "pedir", &src), Ok(None));
        let e = apply_dict_rule(&rule(&alo_rule(2)), "pedir", &src).unwrap().unwrap();
        assert_eq!(e.surface, "pid");
        assert_eq!(
            e.tree.canonical_form(),
            "concat = vl\nconj = 3\nlex = pedir\n\
stt = 11 12 13 16 33 36 51 52 53 54 55 56 61 62 63 64 65 66 82 90\nsut = reg\n"
        );
        let e = apply_dict_rule(&rule(&alo_rule(1)), "pedir", &src).unwrap().unwrap();
        assert_eq!(e.surface, "ped");
    }

    #[test]
    fn source_is_not_mutated() {
        let src = pedir();
        let before = src.canonical_form();
        for n in 1..=3 {
            let _ = apply_dict_rule(&rule(&alo_rule(n)), "pedir", &src);
        }
        assert_eq!(src.canonical_form(), before);
    }

    #[test]
    fn copy_rule_passes_through() {
        let base = parse_str("m.lex", "#MORPHEMES\n\n'abamos\nagr pers = 1\nconcat = vm\n").unwrap();
        let src = resolve_all(&base).sections[&Section::Morphemes][0].tree.clone();
        let e = apply_dict_rule(&rule("@ = @\n$$ = $$\n"), "'abamos", &src)
            .unwrap()
            .unwrap();
        assert_eq!(e.surface, "'abamos");
        assert_eq!(e.tree, src);
    }

    #[test]
    fn later_name_wins_and_absent_reads_are_skipped() {
        let src = pedir();
        let r = rule("$$ = @ alo 1 stem\n$$ = @ alo 2 stem\n$$ = @ alo 7 stem\n@ lex = $$\n@ x = @ nowhere\n");
        let e = apply_dict_rule(&r, "pedir", &src).unwrap().unwrap();
        assert_eq!(e.surface, "pid");
        assert_eq!(e.tree.canonical_form(), "lex = pedir\n");
    }

    #[test]
    fn target_merging() {
        let src = pedir();
        let r = rule("$$ = $$\n@ a = @ alo 1\n@ a = @ alo 2 (- stem - stt)\n");
        let e = apply_dict_rule(&r, "pedir", &src).unwrap().unwrap();
        let t = &e.tree;
        assert_eq!(t.get_leaf(&["a".into(), "stem".into()]).unwrap().to_string(), "ped");
        assert_eq!(t.get_leaf(&["a".into(), "stt".into()]).unwrap().len(), 27);
        // A leaf overrides an interior outright.
        let r = rule("$$ = $$\n@ a = @ alo 1\n@ a = @ conj\n");
        let e = apply_dict_rule(&r, "pedir", &src).unwrap().unwrap();
        assert_eq!(e.tree.canonical_form(), "a = 3\n");
    }

    #[test]
    fn rule_errors() {
        let src = pedir();
        assert!(matches!(
            apply_dict_rule(&rule("$$ = @ alo 1 stt\n@ c = @ conj\n"), "pedir", &src),
            Err(CompileError::NonAtomicName(_))
        ));
        assert!(matches!(
            apply_dict_rule(&rule("$$ = @ alo\n@ c = @ conj\n"), "pedir", &src),
            Err(CompileError::NonAtomicName(_))
        ));
        assert_eq!(
            apply_dict_rule(&rule("$$ = $$\n@ = @ conj\n"), "pedir", &src),
            Err(CompileError::LeafAtRoot)
        );
        assert!(matches!(
            apply_dict_rule(&rule("$$ = $$\n@ conj = @ conj\n@ conj x = @ conj\n"), "pedir", &src),
            Err(CompileError::Tree(TreeError::PathThroughLeaf(_)))
        ));
    }

    #[test]
    fn pipeline() {
        let mut text = PEDIR.to_string();
        text.push_str(
            "\n#MORPHEMES\n\n'abamos\nconcat = vm\n\n#DICT-RULES\n\nMORPHEMES\n\n@ = @\n$$ = $$\n\nLEXEMES\n\n",
        );
        for n in 1..=8 {
            text.push_str(&alo_rule(n));
            text.push('\n');
        }
        let base = parse_str("p.lex", &text).unwrap();
        let c = compile(&base);
        assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
        let d = c.dictionary.unwrap();
        let surfaces: Vec<&str> = d.entries().iter().map(|e| e.surface.as_str()).collect();
        assert_eq!(surfaces, ["'abamos", "ped", "pid"]);
        assert_eq!(d.entries()[2].origin.as_ref().unwrap().rule, 1);
    }

    #[test]
    fn unproductive_lemma_warns() {
        let base = parse_str(
            "u.lex",
            "#LEXEMES\n\nx\na = 1\n\n#DICT-RULES\n\nLEXEMES\n\n$$ = @ stem\n@ = @\n",
        )
        .unwrap();
        let c = compile(&base);
        assert!(c.dictionary.unwrap().is_empty());
        assert_eq!(c.diagnostics.len(), 1);
        assert_eq!(c.diagnostics[0].message, "lemma produced no object entries");
    }

    #[test]
    fn errors_abort() {
        let text = "#DATA-DICT\n\npers = 1 2 3\n\n#WORDS\n\nw\npers = 4\n\n#DICT-RULES\n\nWORDS\n\n$$ = $$\n@ = @\n";
        let c = compile(&parse_str("e.lex", text).unwrap());
        assert!(c.dictionary.is_none());
        assert!(has_errors(&c.diagnostics));
    }
}
