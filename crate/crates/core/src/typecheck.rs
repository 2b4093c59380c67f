//! Checking feature trees against #DATA-DICT declarations.
//!
//! Declarations are keyed by bare label and apply wherever the label occurs.
//! Undeclared labels only warn, so a partial declaration set stays usable.

use indexmap::IndexMap;

use crate::diag::Diagnostic;
use crate::feature::{Node, Path, Tree, ValueSet};
use crate::inherit::{entry_tree, ResolvedBase};
use crate::source::{LeafTerm, SourceBase, TypeDecl};

pub type Decls = IndexMap<String, TypeDecl>;

/// Diagnostics for one tree, in canonical path order, without entry or
/// location attached.
pub fn check_tree(tree: &Tree<ValueSet>, decls: &Decls) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    walk(tree, decls, &mut Vec::new(), |vs| Some(vs), &mut out);
    out
}

/// Like [`check_tree`] for source-level trees; leaves still holding a rule
/// call or `$$` are not checked.
pub fn check_terms(tree: &Tree<LeafTerm>, decls: &Decls) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    walk(tree, decls, &mut Vec::new(), term_values, &mut out);
    out
}

fn term_values(t: &LeafTerm) -> Option<&ValueSet> {
    match t {
        LeafTerm::Values(vs) => Some(vs),
        LeafTerm::RuleCall(_) | LeafTerm::SelfName => None,
    }
}

fn walk<L: Clone>(
    tree: &Tree<L>,
    decls: &Decls,
    prefix: &mut Vec<String>,
    values: fn(&L) -> Option<&ValueSet>,
    out: &mut Vec<Diagnostic>,
) {
    for (label, node) in tree.children() {
        prefix.push(label.clone());
        let path = || Path::new(prefix.iter().cloned()).expect("non-empty path of valid labels");
        match (decls.get(label), node) {
            (None, _) => out.push(Diagnostic::warning(format!("unknown feature `{label}`")).with_path(path())),
            (Some(TypeDecl::Open), Node::Leaf(_)) => {}
            (Some(TypeDecl::Closed(allowed)), Node::Leaf(leaf)) => {
                if let Some(vs) = values(leaf) {
                    for v in vs.sorted() {
                        if !allowed.contains(v) {
                            let set: Vec<String> = allowed.sorted().iter().map(|a| a.render().into_owned()).collect();
                            out.push(
                                Diagnostic::error(format!(
                                    "value {} not in closed set {{{}}}",
                                    v.render(),
                                    set.join(",")
                                ))
                                .with_path(path()),
                            );
                        }
                    }
                }
            }
            (Some(TypeDecl::Structured(_)), Node::Leaf(_)) => out.push(
                Diagnostic::error(format!("`{label}` is a structured feature but holds values")).with_path(path()),
            ),
            (Some(TypeDecl::Structured(alts)), Node::Tree(sub)) => {
                let labels: Vec<&String> = sub.labels().collect();
                let fits = !labels.is_empty() && alts.iter().any(|alt| labels.iter().all(|l| alt.contains(*l)));
                if !fits {
                    let names: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
                    out.push(
                        Diagnostic::error(format!(
                            "features {{{}}} under `{label}` match no declared alternative",
                            names.join(",")
                        ))
                        .with_path(path()),
                    );
                }
            }
            (Some(_), Node::Tree(_)) => out.push(
                Diagnostic::error(format!("`{label}` is declared atomic but has sub-features")).with_path(path()),
            ),
        }
        if let Node::Tree(sub) = node {
            walk(sub, decls, prefix, values, out);
        }
        prefix.pop();
    }
}

/// Checks class bodies, then every resolved entry. Diagnostics come grouped
/// by entry in source order and carry the entry's name and location. With
/// no #DATA-DICT section nothing is checked.
pub fn check_base(resolved: &ResolvedBase, base: &SourceBase) -> Vec<Diagnostic> {
    let Some(decls) = &base.data_dict else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for class in base.classes.values() {
        out.extend(
            check_terms(&entry_tree(class), decls)
                .into_iter()
                .map(|d| d.for_entry(class.name.clone()).at(class.location.clone())),
        );
    }
    for entry in resolved.entries() {
        let location = base.section(entry.section).get(&entry.name).map(|e| e.location.clone());
        for mut d in check_tree(&entry.tree, decls) {
            d.location = location.clone();
            out.push(d.for_entry(entry.name.clone()));
        }
    }
    out
}
