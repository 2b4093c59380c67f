//! Concatenative analysis and generation validated by word-formation rules.
//!
//! Rule file format:
//!
//! ```text
//! #WF-RULES
//!
//! Word -> Stem Ending
//!     Stem concat = vl
//!     Ending concat = vm
//!     Stem stt = Ending stt
//!     Word lex = Stem lex
//! ```
//!
//! A rule header names the mother category and two or more distinct
//! constituents. Each indented line below it is an equation whose left side
//! is a path rooted at the mother or a constituent. If the first token of
//! the right side is such a root, the right side is a path too; otherwise
//! it is a list of values.
//!
//! Equations are evaluated on one working tree whose top-level labels are the
//! constituents and the mother. Path equations unify both nodes and store
//! the result on both sides, creating an absent side as a copy of the other.
//! Evaluation repeats until nothing changes, so the outcome does not depend
//! on the order the equations are written in.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::feature::{Atom, FeatureNode, FeatureTree, Node, ValueSet};
use crate::objdict::{ObjectDictionary, ObjectEntry};
use crate::source::lexer::{logical_lines, tokenize, Line, Tok, TokKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfValue {
    Path(Vec<String>),
    Values(ValueSet),
}

/// One equation; paths include their root label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfEquation {
    pub lhs: Vec<String>,
    pub rhs: WfValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfRule {
    pub name: String,
    pub lhs: String,
    pub rhs: Vec<String>,
    pub equations: Vec<WfEquation>,
    pub line: usize,
}

impl fmt::Display for WfRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} -> {}", self.lhs, self.rhs.join(" "))?;
        for eq in &self.equations {
            write!(f, "    {} =", eq.lhs.join(" "))?;
            match &eq.rhs {
                WfValue::Path(p) => writeln!(f, " {}", p.join(" "))?,
                WfValue::Values(vs) => {
                    for v in vs.iter() {
                        write!(f, " {v}")?;
                    }
                    writeln!(f)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: `{label}` is not a constituent of this rule")]
    UnknownConstituent { line: usize, label: String },
}

fn syntax(line: usize, message: impl Into<String>) -> WfError {
    WfError::Syntax {
        line,
        message: message.into(),
    }
}

const HEADER: &str = "#WF-RULES";

pub fn parse_wf_rules(text: &str) -> Result<Vec<WfRule>, WfError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = logical_lines(text).into_iter().filter_map(|l| match l {
        Line::Content(c) => Some(c),
        Line::Blank => None,
    });
    match lines.next() {
        Some(first) if first.text.trim() == HEADER => {}
        Some(first) => return Err(syntax(first.first_line(), format!("expected `{HEADER}`"))),
        None => return Err(syntax(1, format!("expected `{HEADER}`"))),
    }
    let mut rules: Vec<WfRule> = Vec::new();
    for line in lines {
        let n = line.first_line();
        let indented = line.text.starts_with(char::is_whitespace);
        let toks = tokenize(&line.text).map_err(|e| syntax(line.line_at(e.offset), e.message))?;
        if !indented {
            rules.push(parse_header(&toks, n, rules.len() + 1)?);
            continue;
        }
        let rule = rules
            .last_mut()
            .ok_or_else(|| syntax(n, "equation before any rule header"))?;
        let eq = parse_wf_equation(rule, &toks, n)?;
        rule.equations.push(eq);
    }
    Ok(rules)
}

fn words(toks: &[Tok], line: usize, what: &str) -> Result<Vec<String>, WfError> {
    toks.iter()
        .map(|t| {
            t.word()
                .map(String::from)
                .ok_or_else(|| syntax(line, format!("expected a label in {what}")))
        })
        .collect()
}

fn parse_header(toks: &[Tok], line: usize, index: usize) -> Result<WfRule, WfError> {
    let arrow = toks
        .iter()
        .position(|t| t.is_word("->"))
        .ok_or_else(|| syntax(line, "expected `Mother -> C1 C2 ...`"))?;
    let lhs = words(&toks[..arrow], line, "the rule head")?;
    let rhs = words(&toks[arrow + 1..], line, "the rule body")?;
    let [lhs] = <[String; 1]>::try_from(lhs).map_err(|_| syntax(line, "a rule has exactly one mother category"))?;
    if rhs.len() < 2 {
        return Err(syntax(line, "a rule needs at least two constituents"));
    }
    let mut seen = HashSet::new();
    for c in &rhs {
        if c == &lhs || !seen.insert(c) {
            return Err(syntax(line, format!("label `{c}` used twice in one rule")));
        }
    }
    Ok(WfRule {
        name: format!("rule {index} ({lhs} -> {})", rhs.join(" ")),
        lhs,
        rhs,
        equations: Vec::new(),
        line,
    })
}

fn parse_wf_equation(rule: &WfRule, toks: &[Tok], line: usize) -> Result<WfEquation, WfError> {
    let eq = toks
        .iter()
        .position(|t| t.kind == TokKind::Eq)
        .ok_or_else(|| syntax(line, "expected `path = path` or `path = values`"))?;
    let is_root = |l: &str| l == rule.lhs || rule.rhs.iter().any(|c| c == l);
    let lhs = words(&toks[..eq], line, "the equation path")?;
    match lhs.first() {
        None => return Err(syntax(line, "empty path")),
        Some(root) if !is_root(root) => {
            return Err(WfError::UnknownConstituent {
                line,
                label: root.clone(),
            })
        }
        _ => {}
    }
    let right = &toks[eq + 1..];
    let rhs = match right.first().and_then(Tok::word) {
        Some(root) if is_root(root) => {
            let path = words(right, line, "the equation path")?;
            if path.starts_with(&lhs) || lhs.starts_with(&path) {
                return Err(syntax(line, "a path cannot be equated with its own prefix"));
            }
            WfValue::Path(path)
        }
        _ => {
            if right.is_empty() {
                return Err(syntax(line, "missing right-hand side"));
            }
            let atoms = right
                .iter()
                .map(|t| match &t.kind {
                    TokKind::Word(w) | TokKind::Str(w) => Ok(Atom::new(w.clone())),
                    _ => Err(syntax(line, "expected values")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            WfValue::Values(ValueSet::new(atoms).map_err(|e| syntax(line, e.to_string()))?)
        }
    };
    Ok(WfEquation { lhs, rhs })
}

/// Unifies `node` into the working tree at `path`. `Ok(true)` when the
/// tree changed, `Err` on a clash.
fn unify_at(work: &mut FeatureTree, path: &[String], node: &FeatureNode) -> Result<bool, ()> {
    match work.get(path) {
        None => work.insert(path, node.clone()).map(|_| true).map_err(|_| ()),
        Some(existing) => {
            let u = existing.unify(node).ok_or(())?;
            if &u == existing {
                Ok(false)
            } else {
                work.insert(path, u).map(|_| true).map_err(|_| ())
            }
        }
    }
}

fn apply(work: &mut FeatureTree, eq: &WfEquation) -> Result<bool, ()> {
    match &eq.rhs {
        WfValue::Values(vs) => unify_at(work, &eq.lhs, &Node::Leaf(vs.clone())),
        WfValue::Path(q) => match (work.get(&eq.lhs).cloned(), work.get(q).cloned()) {
            (None, None) => Ok(false),
            (Some(a), None) => unify_at(work, q, &a),
            (None, Some(b)) => unify_at(work, &eq.lhs, &b),
            (Some(a), Some(b)) => {
                let u = a.unify(&b).ok_or(())?;
                let x = unify_at(work, &eq.lhs, &u)?;
                let y = unify_at(work, q, &u)?;
                Ok(x || y)
            }
        },
    }
}

/// Passes allowed before a candidate counts as failed; only rules whose
/// path equations feed a node back into itself come near it.
const MAX_PASSES: usize = 64;

/// Runs `rule` over entries taken as its constituents, in order. Returns the
/// mother's tree, or `None` when the equations fail.
pub fn unify_candidate(rule: &WfRule, entries: &[&ObjectEntry]) -> Option<FeatureTree> {
    if entries.len() != rule.rhs.len() {
        return None;
    }
    let mut work = FeatureTree::new();
    for (label, e) in rule.rhs.iter().zip(entries) {
        work.insert(std::slice::from_ref(label), Node::Tree(e.tree.clone()))
            .ok()?;
    }
    for _ in 0..MAX_PASSES {
        let mut changed = false;
        for eq in &rule.equations {
            changed |= apply(&mut work, eq).ok()?;
        }
        if !changed {
            return match work.get(std::slice::from_ref(&rule.lhs)) {
                None => Some(FeatureTree::new()),
                Some(Node::Tree(t)) => Some(t.clone()),
                Some(Node::Leaf(_)) => None,
            };
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub entry_id: usize,
    pub entry: ObjectEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub surface: String,
    pub lemma: Option<String>,
    pub category: String,
    pub rule: usize,
    pub tree: FeatureTree,
    pub segments: Vec<Segment>,
}

impl Analysis {
    pub fn segmentation(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn lemma_of(tree: &FeatureTree, feature: &str) -> Option<String> {
    tree.get_leaf(&[feature.to_string()]).map(|vs| match vs.as_single() {
        Some(a) => a.text().to_string(),
        None => vs.to_string(),
    })
}

/// Every split of `surface` into `n` non-empty pieces at character
/// boundaries, as byte offsets of the n-1 cuts, in ascending order.
fn splits(surface: &str, n: usize) -> Vec<Vec<usize>> {
    let bounds: Vec<usize> = surface.char_indices().map(|(i, _)| i).skip(1).collect();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(bounds: &[usize], from: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in from..bounds.len() {
            if bounds.len() - i < left {
                break;
            }
            cur.push(bounds[i]);
            rec(bounds, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    if n >= 1 {
        rec(&bounds, 0, n - 1, &mut cur, &mut out);
    }
    out
}

fn product(lists: &[&[usize]], mut f: impl FnMut(&[usize])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut idx = vec![0; lists.len()];
    let mut pick = Vec::with_capacity(lists.len());
    loop {
        pick.clear();
        pick.extend(idx.iter().zip(lists).map(|(&i, l)| l[i]));
        f(&pick);
        let mut k = lists.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// All analyses of `surface`, ordered by split positions, then entry ids,
/// then rule order. Analyses with the same category and mother tree as an
/// earlier one are dropped.
pub fn analyze(surface: &str, dict: &ObjectDictionary, rules: &[WfRule]) -> Vec<Analysis> {
    let lemma_feature = &dict.config().lemma_feature;
    let mut found: Vec<(Vec<usize>, Vec<usize>, usize, Analysis)> = Vec::new();
    for (ri, rule) in rules.iter().enumerate() {
        for cuts in splits(surface, rule.rhs.len()) {
            let mut pieces = Vec::with_capacity(rule.rhs.len());
            let mut start = 0;
            for &c in cuts.iter().chain(std::iter::once(&surface.len())) {
                pieces.push(&surface[start..c]);
                start = c;
            }
            let lists: Vec<&[usize]> = pieces.iter().map(|p| dict.surface_ids(p)).collect();
            product(&lists, |ids| {
                let entries: Vec<&ObjectEntry> = ids.iter().map(|&i| dict.entry(i)).collect();
                if let Some(tree) = unify_candidate(rule, &entries) {
                    let segments = pieces
                        .iter()
                        .zip(ids)
                        .map(|(p, &i)| Segment {
                            text: p.to_string(),
                            entry_id: i,
                            entry: dict.entry(i).clone(),
                        })
                        .collect();
                    found.push((
                        cuts.clone(),
                        ids.to_vec(),
                        ri,
                        Analysis {
                            surface: surface.to_string(),
                            lemma: lemma_of(&tree, lemma_feature),
                            category: rule.lhs.clone(),
                            rule: ri,
                            tree,
                            segments,
                        },
                    ));
                }
            });
        }
    }
    found.sort_by(|a, b| (&a.0, &a.1, a.2).cmp(&(&b.0, &b.1, b.2)));
    let mut seen = HashSet::new();
    found
        .into_iter()
        .map(|(_, _, _, a)| a)
        .filter(|a| seen.insert((a.category.clone(), a.tree.canonical_form())))
        .collect()
}

fn is_lemma_link(eq: &WfEquation, rule: &WfRule, feature: &str) -> Option<usize> {
    let WfValue::Path(q) = &eq.rhs else { return None };
    let mother = [rule.lhs.clone(), feature.to_string()];
    let other = if eq.lhs == mother {
        q
    } else if q == &mother {
        &eq.lhs
    } else {
        return None;
    };
    match other.as_slice() {
        [c, f] if f == feature => rule.rhs.iter().position(|r| r == c),
        _ => None,
    }
}

/// Surfaces of `lemma` whose mother tree unifies with `constraints`,
/// sorted and deduplicated. Only rules that equate the mother's lemma
/// feature with a constituent's are used.
pub fn generate(lemma: &str, constraints: &FeatureTree, dict: &ObjectDictionary, rules: &[WfRule]) -> Vec<String> {
    let cfg = dict.config();
    let all: Vec<usize> = (0..dict.len()).collect();
    let mut out = Vec::new();
    for rule in rules {
        let linked: HashSet<usize> = rule
            .equations
            .iter()
            .filter_map(|eq| is_lemma_link(eq, rule, &cfg.lemma_feature))
            .collect();
        if linked.is_empty() {
            continue;
        }
        let mut lists: Vec<Vec<usize>> = Vec::with_capacity(rule.rhs.len());
        for (i, c) in rule.rhs.iter().enumerate() {
            if linked.contains(&i) {
                lists.push(dict.lemma_ids(lemma).to_vec());
                continue;
            }
            let classes: Vec<&ValueSet> = rule
                .equations
                .iter()
                .filter_map(|eq| match &eq.rhs {
                    WfValue::Values(vs) if eq.lhs.len() == 2 && &eq.lhs[0] == c && eq.lhs[1] == cfg.concat_feature => {
                        Some(vs)
                    }
                    _ => None,
                })
                .collect();
            let ids = match classes.as_slice() {
                [] => all.clone(),
                _ => {
                    let mut ids: Vec<usize> = classes
                        .iter()
                        .flat_map(|vs| vs.iter().flat_map(|v| dict.concat_ids(v.text()).iter().copied()))
                        .collect();
                    ids.sort_unstable();
                    ids.dedup();
                    ids
                }
            };
            lists.push(ids);
        }
        let slices: Vec<&[usize]> = lists.iter().map(Vec::as_slice).collect();
        let key = [cfg.lemma_feature.clone()];
        product(&slices, |ids| {
            let entries: Vec<&ObjectEntry> = ids.iter().map(|&i| dict.entry(i)).collect();
            let Some(tree) = unify_candidate(rule, &entries) else {
                return;
            };
            let has_lemma = tree
                .get_leaf(&key)
                .is_some_and(|vs| vs.iter().any(|v| v.text() == lemma));
            if has_lemma && tree.unify(constraints).is_some() {
                out.push(entries.iter().map(|e| e.surface.as_str()).collect::<String>());
            }
        });
    }
    out.sort();
    out.dedup();
    out
}
