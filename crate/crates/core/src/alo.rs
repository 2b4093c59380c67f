//! Allomorphy rules: anchored matching of an entry name against ordered
//! productions, with variable capture and template substitution.
//!
//! Variables are declared with a small POSIX-style regular-expression
//! dialect: literals, `.`, `*`, `+`, `?`, bracket classes, `|` and
//! grouping. When a production admits several ways of splitting the
//! argument among its variables, earlier variables take as much as they can
//! (leftmost-greedy). Matching works on Unicode scalar values.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use regex::Regex;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::source::{AloRuleDef, PatternToken, SourceBase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AloError {
    #[error("rule `{rule}`: bad pattern for variable {variable}: {reason}")]
    BadPattern {
        rule: String,
        variable: char,
        reason: String,
    },
}

#[derive(Debug, Clone)]
enum Segment {
    Literal(String),
    Var { name: char, matcher: Regex },
}

#[derive(Debug, Clone)]
struct CompiledProduction {
    /// Whole left-hand side as one anchored expression, one capture group
    /// per variable occurrence. Accepts exactly the arguments for which
    /// some variable split exists.
    composite: Regex,
    lhs: Vec<Segment>,
    rhs: Vec<PatternToken>,
}

#[derive(Debug, Clone)]
pub struct CompiledAloRule {
    name: String,
    productions: Vec<CompiledProduction>,
}

/// A successful application: which production fired and what each variable
/// occurrence captured, in left-to-right order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatch {
    pub production: usize,
    pub captures: Vec<(char, String)>,
    pub output: String,
}

pub fn compile_alo_rule(def: &AloRuleDef) -> Result<CompiledAloRule, AloError> {
    let mut vars: HashMap<char, String> = HashMap::new();
    for (&v, src) in &def.var_decls {
        let translated = translate_pattern(src).map_err(|reason| AloError::BadPattern {
            rule: def.name.clone(),
            variable: v,
            reason,
        })?;
        Regex::new(&format!("^(?:{translated})$")).map_err(|e| AloError::BadPattern {
            rule: def.name.clone(),
            variable: v,
            reason: e.to_string(),
        })?;
        vars.insert(v, translated);
    }
    let productions = def
        .productions
        .iter()
        .map(|p| {
            let mut composite = String::from("^");
            let mut lhs = Vec::with_capacity(p.lhs.len());
            for tok in &p.lhs {
                match tok {
                    PatternToken::Literal(l) => {
                        composite.push_str(&regex::escape(l));
                        lhs.push(Segment::Literal(l.clone()));
                    }
                    PatternToken::Var(v) => {
                        let src = &vars[v];
                        composite.push_str(&format!("((?:{src}))"));
                        lhs.push(Segment::Var {
                            name: *v,
                            matcher: Regex::new(&format!("^(?:{src})$")).expect("checked above"),
                        });
                    }
                }
            }
            composite.push('$');
            CompiledProduction {
                composite: Regex::new(&composite).expect("built from valid parts"),
                lhs,
                rhs: p.rhs.clone(),
            }
        })
        .collect();
    Ok(CompiledAloRule {
        name: def.name.clone(),
        productions,
    })
}

impl CompiledAloRule {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The allomorph for `arg`, or `None` when no production matches.
    pub fn apply(&self, arg: &str) -> Option<String> {
        self.apply_traced(arg).map(|m| m.output)
    }

    pub fn apply_traced(&self, arg: &str) -> Option<RuleMatch> {
        self.productions.iter().enumerate().find_map(|(i, p)| {
            if !p.composite.is_match(arg) {
                return None;
            }
            let mut caps = Vec::new();
            if !split(&p.lhs, arg, 0, &mut caps) {
                return None;
            }
            let output = p
                .rhs
                .iter()
                .map(|t| match t {
                    PatternToken::Literal(l) => l.as_str(),
                    PatternToken::Var(v) => caps
                        .iter()
                        .find(|(name, _)| name == v)
                        .map(|(_, s)| *s)
                        .expect("every right-hand variable occurs on the left"),
                })
                .collect();
            Some(RuleMatch {
                production: i,
                captures: caps.into_iter().map(|(v, s)| (v, s.to_string())).collect(),
                output,
            })
        })
    }
}

/// Depth-first search over variable extents, longest first. A variable seen
/// twice must capture the same text both times.
fn split<'a>(segs: &[Segment], text: &'a str, pos: usize, caps: &mut Vec<(char, &'a str)>) -> bool {
    let Some((seg, rest)) = segs.split_first() else {
        return pos == text.len();
    };
    match seg {
        Segment::Literal(l) => text[pos..].starts_with(l.as_str()) && split(rest, text, pos + l.len(), caps),
        Segment::Var { name, matcher } => {
            if let Some(&(_, bound)) = caps.iter().find(|(v, _)| v == name) {
                return text[pos..].starts_with(bound) && {
                    caps.push((*name, bound));
                    split(rest, text, pos + bound.len(), caps) || {
                        caps.pop();
                        false
                    }
                };
            }
            let ends = text[pos..]
                .char_indices()
                .map(|(i, _)| pos + i)
                .skip(1)
                .chain(std::iter::once(text.len()))
                .collect::<Vec<_>>();
            for end in std::iter::once(pos).chain(ends).rev() {
                let piece = &text[pos..end];
                if matcher.is_match(piece) {
                    caps.push((*name, piece));
                    if split(rest, text, end, caps) {
                        return true;
                    }
                    caps.pop();
                }
            }
            false
        }
    }
}

/// The `$$` rule: returns its argument.
pub fn identity_rule(arg: &str) -> String {
    arg.to_string()
}

/// Rewrites a pattern in the accepted POSIX-style subset into the syntax of
/// the `regex` crate. Groups become non-capturing.
pub fn translate_pattern(src: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut depth = 0usize;
    // whether a quantifier may follow
    let mut operand = false;
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '.' => {
                out.push('.');
                operand = true;
            }
            '*' | '+' | '?' => {
                if !operand {
                    return Err(format!("`{c}` has nothing to repeat"));
                }
                out.push(c);
                operand = false;
            }
            '|' => {
                out.push('|');
                operand = false;
            }
            '(' => {
                out.push_str("(?:");
                depth += 1;
                operand = false;
            }
            ')' => {
                if depth == 0 {
                    return Err("unbalanced `)`".into());
                }
                depth -= 1;
                out.push(')');
                operand = true;
            }
            '[' => {
                out.push_str(&translate_class(&mut chars)?);
                operand = true;
            }
            '\\' => {
                let lit = chars.next().ok_or("trailing backslash")?;
                out.push_str(&regex::escape(&lit.to_string()));
                operand = true;
            }
            c => {
                out.push_str(&regex::escape(&c.to_string()));
                operand = true;
            }
        }
    }
    if depth != 0 {
        return Err("unclosed `(`".into());
    }
    Ok(out)
}

fn class_char(c: char) -> String {
    if matches!(c, '[' | ']' | '\\' | '^' | '-' | '&' | '~') {
        format!("\\{c}")
    } else {
        c.to_string()
    }
}

/// Bracket expression after the opening `[`. A `]` right after `[` or `[^`
/// is a literal, as in POSIX.
fn translate_class(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Result<String, String> {
    let mut out = String::from("[");
    if chars.peek() == Some(&'^') {
        chars.next();
        out.push('^');
    }
    let mut items: Vec<char> = Vec::new();
    let mut first = true;
    loop {
        match chars.next() {
            None => return Err("unclosed character class".into()),
            Some(']') if !first => break,
            Some(c) => items.push(c),
        }
        first = false;
    }
    let mut i = 0;
    while i < items.len() {
        let c = items[i];
        if i + 2 < items.len() && items[i + 1] == '-' {
            let hi = items[i + 2];
            if hi < c {
                return Err(format!("invalid range {c}-{hi}"));
            }
            out.push_str(&class_char(c));
            out.push('-');
            out.push_str(&class_char(hi));
            i += 3;
        } else {
            out.push_str(&class_char(c));
            i += 1;
        }
    }
    out.push(']');
    Ok(out)
}

/// Every allomorphy rule of a base, compiled.
#[derive(Debug, Clone, Default)]
pub struct AloRules {
    compiled: IndexMap<String, CompiledAloRule>,
    broken: HashSet<String>,
}

#[derive(Debug, Clone, Copy)]
pub enum RuleLookup<'a> {
    Found(&'a CompiledAloRule),
    /// Declared, but its patterns failed to compile.
    Broken,
    Unknown,
}

impl AloRules {
    /// Compiles all rules, reporting each bad one as a diagnostic.
    pub fn compile(base: &SourceBase) -> (Self, Vec<Diagnostic>) {
        let mut rules = AloRules::default();
        let mut diags = Vec::new();
        for (name, def) in &base.alo_rules {
            match compile_alo_rule(def) {
                Ok(r) => {
                    rules.compiled.insert(name.clone(), r);
                }
                Err(e) => {
                    rules.broken.insert(name.clone());
                    diags.push(Diagnostic::error(e.to_string()).at(def.location.clone()));
                }
            }
        }
        (rules, diags)
    }

    pub fn lookup(&self, name: &str) -> RuleLookup<'_> {
        match self.compiled.get(name) {
            Some(r) => RuleLookup::Found(r),
            None if self.broken.contains(name) => RuleLookup::Broken,
            None => RuleLookup::Unknown,
        }
    }

    pub fn get(&self, name: &str) -> Option<&CompiledAloRule> {
        self.compiled.get(name)
    }
}
