use std::collections::{BTreeSet, HashSet};

use indexmap::IndexMap;

use super::lexer::{logical_lines, tokenize, LexError, Line, LogicalLine, Tok, TokKind};
use super::loader::{resolve_include, MemoryLoader, SourceLoader};
use super::{
    AloRuleDef, DictEquation, DictRule, DictRuleSet, DictSource, DictTarget, EntryDef, EquationDef, ParseError,
    ParseErrorKind, PatternToken, Production, Section, SourceBase, TypeDecl, ValueTerm,
};
use crate::diag::Location;
use crate::feature::{is_symbol_text, Atom, Path, ValueSet};

/// Parses `root` and every file it transitively includes.
///
/// A file reached twice through different include chains is read once; a
/// file that includes itself, directly or not, is an include cycle.
pub fn parse_source(root: &str, loader: &dyn SourceLoader) -> Result<SourceBase, Vec<ParseError>> {
    let mut b = Builder {
        loader,
        base: SourceBase::default(),
        errors: Vec::new(),
        stack: Vec::new(),
        done: HashSet::new(),
    };
    b.load_file(root, None);
    if b.errors.is_empty() {
        Ok(b.base)
    } else {
        Err(b.errors)
    }
}

/// Parses a single self-contained source text. Includes resolve to nothing.
pub fn parse_str(name: &str, text: &str) -> Result<SourceBase, Vec<ParseError>> {
    let loader = MemoryLoader::new().with(name, text);
    parse_source(name, &loader)
}

/// Parses one entry-body equation; `\`-continued physical lines are joined.
pub fn parse_equation(text: &str) -> Result<EquationDef, ParseError> {
    let fp = FileParser::new("<input>");
    let line = single_line(&fp, text)?;
    fp.equation(&line)
}

/// Parses the body of one #ALO-RULES block.
pub fn parse_alo_rule(block: &str) -> Result<AloRuleDef, Vec<ParseError>> {
    let fp = FileParser::new("<input>");
    let lines = content_lines(block);
    if lines.is_empty() {
        return Err(vec![ParseError::syntax(fp.loc(1), "empty rule")]);
    }
    fp.alo_rule(&lines)
}

/// Parses the text following a #DICT-RULES header.
pub fn parse_dict_rules(block: &str) -> Result<DictRuleSet, Vec<ParseError>> {
    let fp = FileParser::new("<input>");
    let mut set = DictRuleSet::default();
    let mut current = None;
    let mut errors = Vec::new();
    for group in blocks(logical_lines(block)) {
        if let Err(e) = fp.dict_block(&group, &mut current, &mut set) {
            errors.extend(e);
        }
    }
    if errors.is_empty() {
        Ok(set)
    } else {
        Err(errors)
    }
}

fn content_lines(text: &str) -> Vec<LogicalLine> {
    logical_lines(text)
        .into_iter()
        .filter_map(|l| match l {
            Line::Content(c) => Some(c),
            Line::Blank => None,
        })
        .collect()
}

fn single_line(fp: &FileParser, text: &str) -> Result<LogicalLine, ParseError> {
    let mut lines = content_lines(text);
    match lines.len() {
        1 => Ok(lines.remove(0)),
        0 => Err(ParseError::syntax(fp.loc(1), "empty equation")),
        _ => Err(ParseError::syntax(
            fp.loc(lines[1].first_line()),
            "expected a single equation",
        )),
    }
}

/// Groups content lines into blank-separated blocks.
fn blocks(lines: Vec<Line>) -> Vec<Vec<LogicalLine>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for line in lines {
        match line {
            Line::Blank => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            Line::Content(c) => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SectionKind {
    Entries(Section),
    AloRules,
    DataDict,
    DictRules,
}

fn section_kind(keyword: &str) -> Option<SectionKind> {
    Some(match keyword {
        "MORPHEMES" => SectionKind::Entries(Section::Morphemes),
        "WORDS" => SectionKind::Entries(Section::Words),
        "CLASSES" => SectionKind::Entries(Section::Classes),
        "LEXEMES" => SectionKind::Entries(Section::Lexemes),
        "ALO-RULES" => SectionKind::AloRules,
        "DATA-DICT" => SectionKind::DataDict,
        "DICT-RULES" => SectionKind::DictRules,
        _ => return None,
    })
}

fn dict_subsection(keyword: &str) -> Option<Section> {
    match keyword {
        "LEXEMES" => Some(Section::Lexemes),
        "MORPHEMES" => Some(Section::Morphemes),
        "WORDS" => Some(Section::Words),
        _ => None,
    }
}

fn is_entry_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '\'' | '-' | '_' | '.'))
}

struct Builder<'a> {
    loader: &'a dyn SourceLoader,
    base: SourceBase,
    errors: Vec<ParseError>,
    stack: Vec<String>,
    done: HashSet<String>,
}

impl Builder<'_> {
    fn load_file(&mut self, path: &str, included_at: Option<Location>) {
        let here = included_at.clone().unwrap_or_else(|| Location::new(path, 0));
        if let Some(pos) = self.stack.iter().position(|f| f == path) {
            let mut cycle = self.stack[pos..].to_vec();
            cycle.push(path.to_string());
            self.errors
                .push(ParseError::new(here, ParseErrorKind::IncludeCycle(cycle)));
            return;
        }
        if self.done.contains(path) {
            return;
        }
        let bytes = match self.loader.load(path) {
            Ok(b) => b,
            Err(e) => {
                self.errors
                    .push(ParseError::new(here, ParseErrorKind::Io(format!("{path}: {e}"))));
                return;
            }
        };
        let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&bytes);
        let text = match std::str::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                let good = &bytes[..e.valid_up_to()];
                let line = good.iter().filter(|&&b| b == b'\n').count() + 1;
                let line_start = good.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                let column = String::from_utf8_lossy(&good[line_start..]).chars().count() + 1;
                self.errors.push(ParseError::new(
                    Location::new(path, line),
                    ParseErrorKind::Encoding { column },
                ));
                return;
            }
        };
        self.base.include_graph.files.push(path.to_string());
        self.stack.push(path.to_string());
        self.parse_file(path, text);
        self.stack.pop();
        self.done.insert(path.to_string());
    }

    fn parse_file(&mut self, path: &str, text: &str) {
        let fp = FileParser::new(path);
        let mut section: Option<SectionKind> = None;
        let mut dict_sub: Option<Section> = None;
        let mut block: Vec<LogicalLine> = Vec::new();

        for line in logical_lines(text) {
            match line {
                Line::Blank => self.flush(&fp, section, &mut dict_sub, &mut block),
                Line::Content(l) if l.text.starts_with('#') => {
                    self.flush(&fp, section, &mut dict_sub, &mut block);
                    let trimmed = l.text.trim_end();
                    let (keyword, rest) = trimmed[1..]
                        .split_once(char::is_whitespace)
                        .map_or((&trimmed[1..], ""), |(k, r)| (k, r.trim()));
                    let loc = fp.loc(l.first_line());
                    if keyword == "INCLUDE" {
                        match tokenize(rest).map(|t| t.into_iter().map(|t| t.kind).collect::<Vec<_>>()) {
                            Ok(toks) => match toks.as_slice() {
                                [TokKind::Str(target)] => {
                                    let resolved = resolve_include(path, target);
                                    self.base.include_graph.edges.push((path.to_string(), resolved.clone()));
                                    self.load_file(&resolved, Some(loc));
                                }
                                _ => self
                                    .errors
                                    .push(ParseError::syntax(loc, "#INCLUDE expects one double-quoted path")),
                            },
                            Err(e) => self.errors.push(ParseError::syntax(loc, e.message)),
                        }
                        continue;
                    }
                    match section_kind(keyword) {
                        Some(kind) if rest.is_empty() => {
                            section = Some(kind);
                            dict_sub = None;
                            if kind == SectionKind::DataDict && self.base.data_dict.is_none() {
                                self.base.data_dict = Some(IndexMap::new());
                            }
                        }
                        Some(_) => self
                            .errors
                            .push(ParseError::syntax(loc, format!("unexpected text after #{keyword}"))),
                        None => self
                            .errors
                            .push(ParseError::syntax(loc, format!("unknown section #{keyword}"))),
                    }
                }
                Line::Content(l) => block.push(l),
            }
        }
        self.flush(&fp, section, &mut dict_sub, &mut block);
    }

    fn flush(
        &mut self,
        fp: &FileParser,
        section: Option<SectionKind>,
        dict_sub: &mut Option<Section>,
        block: &mut Vec<LogicalLine>,
    ) {
        if block.is_empty() {
            return;
        }
        let lines = std::mem::take(block);
        let first = fp.loc(lines[0].first_line());
        match section {
            None => self
                .errors
                .push(ParseError::syntax(first, "text before the first section header")),
            Some(SectionKind::Entries(sec)) => match fp.entry(&lines, sec) {
                Ok(entry) => {
                    let map = self.base.section_mut(sec);
                    if map.contains_key(&entry.name) {
                        self.errors.push(ParseError::new(
                            entry.location.clone(),
                            ParseErrorKind::DuplicateEntry {
                                section: sec.keyword().to_string(),
                                name: entry.name.clone(),
                            },
                        ));
                    } else {
                        map.insert(entry.name.clone(), entry);
                    }
                }
                Err(e) => self.errors.extend(e),
            },
            Some(SectionKind::AloRules) => match fp.alo_rule(&lines) {
                Ok(rule) => {
                    if self.base.alo_rules.contains_key(&rule.name) {
                        self.errors.push(ParseError::new(
                            rule.location.clone(),
                            ParseErrorKind::DuplicateEntry {
                                section: "ALO-RULES".into(),
                                name: rule.name.clone(),
                            },
                        ));
                    } else {
                        self.base.alo_rules.insert(rule.name.clone(), rule);
                    }
                }
                Err(e) => self.errors.extend(e),
            },
            Some(SectionKind::DataDict) => {
                let decls = self.base.data_dict.get_or_insert_with(IndexMap::new);
                for line in &lines {
                    match fp.type_decl(line) {
                        Ok((label, decl)) => {
                            if decls.contains_key(&label) {
                                self.errors.push(ParseError::new(
                                    fp.loc(line.first_line()),
                                    ParseErrorKind::DuplicateEntry {
                                        section: "DATA-DICT".into(),
                                        name: label,
                                    },
                                ));
                            } else {
                                decls.insert(label, decl);
                            }
                        }
                        Err(e) => self.errors.push(e),
                    }
                }
            }
            Some(SectionKind::DictRules) => {
                if let Err(e) = fp.dict_block(&lines, dict_sub, &mut self.base.dict_rules) {
                    self.errors.extend(e);
                }
            }
        }
    }
}

/// Block-level parsing within one file.
struct FileParser {
    file: String,
}

impl FileParser {
    fn new(file: &str) -> Self {
        FileParser { file: file.to_string() }
    }

    fn loc(&self, line: usize) -> Location {
        Location::new(self.file.clone(), line)
    }

    fn tokens(&self, line: &LogicalLine) -> Result<Vec<Tok>, ParseError> {
        tokenize(&line.text)
            .map_err(|LexError { offset, message }| ParseError::syntax(self.loc(line.line_at(offset)), message))
    }

    fn err_at(&self, line: &LogicalLine, tok: Option<&Tok>, msg: impl Into<String>) -> ParseError {
        let l = tok.map_or(line.first_line(), |t| line.line_at(t.offset));
        ParseError::syntax(self.loc(l), msg)
    }

    fn entry(&self, lines: &[LogicalLine], section: Section) -> Result<EntryDef, Vec<ParseError>> {
        let head = &lines[0];
        let toks = self.tokens(head).map_err(|e| vec![e])?;
        let (name, parents) = self.entry_head(head, &toks).map_err(|e| vec![e])?;
        let mut equations = Vec::new();
        let mut errors = Vec::new();
        for line in &lines[1..] {
            match self.equation(line) {
                Ok(eq) => equations.push(eq),
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(EntryDef {
            name,
            parents,
            equations,
            section,
            location: self.loc(head.first_line()),
        })
    }

    fn entry_head(&self, line: &LogicalLine, toks: &[Tok]) -> Result<(String, Vec<String>), ParseError> {
        let name = match toks.first().map(|t| &t.kind) {
            Some(TokKind::Word(w)) if is_entry_name(w) => w.clone(),
            Some(TokKind::Word(w)) => return Err(self.err_at(line, toks.first(), format!("invalid entry name `{w}`"))),
            _ => return Err(self.err_at(line, toks.first(), "expected an entry name")),
        };
        let mut parents = Vec::new();
        match toks.get(1).map(|t| &t.kind) {
            None => return Ok((name, parents)),
            Some(TokKind::LParen) => {}
            Some(_) => {
                return Err(self.err_at(
                    line,
                    toks.get(1),
                    "expected `(parents…)` or end of line after entry name",
                ))
            }
        }
        let mut i = 2;
        loop {
            match toks.get(i).map(|t| &t.kind) {
                Some(TokKind::Word(w)) if is_entry_name(w) => parents.push(w.clone()),
                Some(TokKind::RParen) => break,
                None => return Err(self.err_at(line, toks.last(), "unclosed parent list")),
                Some(_) => return Err(self.err_at(line, toks.get(i), "invalid parent class name")),
            }
            i += 1;
        }
        if let Some(extra) = toks.get(i + 1) {
            return Err(self.err_at(line, Some(extra), "unexpected text after parent list"));
        }
        Ok((name, parents))
    }

    fn equation(&self, line: &LogicalLine) -> Result<EquationDef, ParseError> {
        let toks = self.tokens(line)?;
        let eq = toks
            .iter()
            .position(|t| t.kind == TokKind::Eq)
            .ok_or_else(|| self.err_at(line, toks.first(), "expected `path = values`"))?;
        let (lhs, rhs) = (&toks[..eq], &toks[eq + 1..]);
        let path = self.path(line, lhs, &toks[eq])?;
        if rhs.is_empty() {
            return Err(self.err_at(line, Some(&toks[eq]), "equation has no values"));
        }
        let mut values = Vec::with_capacity(rhs.len());
        for t in rhs {
            let term = match &t.kind {
                TokKind::Word(w) => ValueTerm::Atom(Atom::new(w.clone())),
                TokKind::Str(s) => {
                    if rhs.len() > 1 {
                        return Err(self.err_at(line, Some(t), "a quoted string must be the only value"));
                    }
                    ValueTerm::Atom(Atom::new(s.clone()))
                }
                TokKind::RuleCall(r) => ValueTerm::RuleCall(r.clone()),
                TokKind::SelfName => ValueTerm::SelfName,
                _ => return Err(self.err_at(line, Some(t), "unexpected token in value list")),
            };
            if !matches!(term, ValueTerm::Atom(_)) && rhs.len() > 1 {
                return Err(self.err_at(line, Some(t), "a rule invocation must be the only value"));
            }
            if values.contains(&term) {
                return Err(self.err_at(line, Some(t), format!("duplicate value {term}")));
            }
            values.push(term);
        }
        Ok(EquationDef {
            path,
            values,
            location: self.loc(line.first_line()),
        })
    }

    fn path(&self, line: &LogicalLine, toks: &[Tok], eq: &Tok) -> Result<Path, ParseError> {
        if toks.is_empty() {
            return Err(self.err_at(line, Some(eq), "equation has an empty path"));
        }
        let mut labels = Vec::with_capacity(toks.len());
        for t in toks {
            match t.word() {
                Some(w) if is_symbol_text(w) => labels.push(w.to_string()),
                _ => return Err(self.err_at(line, Some(t), "invalid feature label")),
            }
        }
        Ok(Path::new(labels).expect("labels validated"))
    }

    fn alo_rule(&self, lines: &[LogicalLine]) -> Result<AloRuleDef, Vec<ParseError>> {
        let head = &lines[0];
        let name = head.text.trim();
        if name.is_empty() || !name.chars().all(|c| !c.is_whitespace() && !"=$()\"#\\{}".contains(c)) {
            return Err(vec![self.err_at(head, None, "expected an allomorphy rule name")]);
        }
        let mut var_decls = IndexMap::new();
        let mut productions = Vec::new();
        let mut errors = Vec::new();
        for line in &lines[1..] {
            let text = line.text.trim();
            let loc = self.loc(line.first_line());
            if text.starts_with('{') {
                if !productions.is_empty() {
                    errors.push(ParseError::syntax(
                        loc,
                        "variable declarations must precede productions",
                    ));
                    continue;
                }
                match self.var_decl(text) {
                    Ok((var, re)) => {
                        if var_decls.insert(var, re).is_some() {
                            errors.push(ParseError::syntax(loc, format!("variable {var} declared twice")));
                        }
                    }
                    Err(msg) => errors.push(ParseError::syntax(loc, msg)),
                }
            } else if let Some((lhs, rhs)) = text.split_once("->") {
                let parsed = parse_pattern(lhs.trim()).and_then(|l| {
                    if l.is_empty() {
                        Err("production has an empty left-hand side".to_string())
                    } else {
                        Ok(l)
                    }
                });
                match (parsed, parse_pattern(rhs.trim())) {
                    (Ok(lhs), Ok(rhs)) => {
                        for tok in lhs.iter().chain(&rhs) {
                            if let PatternToken::Var(v) = tok {
                                if !var_decls.contains_key(v) {
                                    errors.push(ParseError::new(
                                        loc.clone(),
                                        ParseErrorKind::UndeclaredVariable {
                                            rule: name.to_string(),
                                            var: *v,
                                        },
                                    ));
                                }
                            }
                        }
                        for tok in &rhs {
                            if let PatternToken::Var(v) = tok {
                                if var_decls.contains_key(v) && !lhs.contains(tok) {
                                    errors.push(ParseError::syntax(
                                        loc.clone(),
                                        format!("variable ${v} is not bound by the left-hand side"),
                                    ));
                                }
                            }
                        }
                        productions.push(Production {
                            lhs,
                            rhs,
                            location: loc,
                        });
                    }
                    (Err(msg), _) | (_, Err(msg)) => errors.push(ParseError::syntax(loc, msg)),
                }
            } else {
                errors.push(ParseError::syntax(loc, "expected `{V = regexp}` or `lhs -> rhs`"));
            }
        }
        if productions.is_empty() && errors.is_empty() {
            errors.push(self.err_at(head, None, format!("rule `{name}` has no productions")));
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(AloRuleDef {
            name: name.to_string(),
            var_decls,
            productions,
            location: self.loc(head.first_line()),
        })
    }

    fn var_decl(&self, text: &str) -> Result<(char, String), String> {
        let inner = text
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or("variable declaration must be enclosed in `{…}`")?;
        let (var, re) = inner.split_once('=').ok_or("expected `{V = regexp}`")?;
        let mut chars = var.trim().chars();
        let v = match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_alphabetic() => c,
            _ => return Err(format!("variable name must be a single letter, got `{}`", var.trim())),
        };
        let re = re.trim();
        if re.is_empty() {
            return Err(format!("variable {v} has an empty pattern"));
        }
        Ok((v, re.to_string()))
    }

    fn type_decl(&self, line: &LogicalLine) -> Result<(String, TypeDecl), ParseError> {
        let toks = self.tokens(line)?;
        let label = match toks.as_slice() {
            [t, eq, ..] if eq.kind == TokKind::Eq => match t.word() {
                Some(w) if is_symbol_text(w) => w.to_string(),
                _ => return Err(self.err_at(line, Some(t), "invalid feature label")),
            },
            _ => return Err(self.err_at(line, toks.first(), "expected `feature = …` naming a single feature")),
        };
        let rhs = &toks[2..];
        if rhs.is_empty() {
            return Ok((label, TypeDecl::Open));
        }
        if rhs[0].is_word("@") {
            let mut alternatives = Vec::new();
            let mut i = 0;
            while i < rhs.len() {
                if !rhs[i].is_word("@") || rhs.get(i + 1).map(|t| &t.kind) != Some(&TokKind::LParen) {
                    return Err(self.err_at(line, Some(&rhs[i]), "expected `@(labels…)`"));
                }
                i += 2;
                let mut set = BTreeSet::new();
                loop {
                    match rhs.get(i) {
                        Some(t) if t.kind == TokKind::RParen => break,
                        Some(t) => match t.word() {
                            Some(w) if is_symbol_text(w) => {
                                set.insert(w.to_string());
                            }
                            _ => return Err(self.err_at(line, Some(t), "invalid label in alternative")),
                        },
                        None => return Err(self.err_at(line, rhs.last(), "unclosed `@(`")),
                    }
                    i += 1;
                }
                if set.is_empty() {
                    return Err(self.err_at(line, rhs.get(i), "empty alternative `@()`"));
                }
                alternatives.push(set);
                i += 1;
            }
            return Ok((label, TypeDecl::Structured(alternatives)));
        }
        let mut atoms = Vec::new();
        for t in rhs {
            match &t.kind {
                TokKind::Word(w) => atoms.push(Atom::new(w.clone())),
                TokKind::Str(s) => atoms.push(Atom::new(s.clone())),
                _ => return Err(self.err_at(line, Some(t), "unexpected token in value list")),
            }
        }
        let values = ValueSet::new(atoms).map_err(|e| self.err_at(line, rhs.first(), e.to_string()))?;
        Ok((label, TypeDecl::Closed(values)))
    }

    fn dict_block(
        &self,
        lines: &[LogicalLine],
        current: &mut Option<Section>,
        set: &mut DictRuleSet,
    ) -> Result<(), Vec<ParseError>> {
        let mut lines = lines;
        if let Some(sec) = dict_subsection(lines[0].text.trim()) {
            *current = Some(sec);
            lines = &lines[1..];
            if lines.is_empty() {
                return Ok(());
            }
        }
        let Some(sec) = *current else {
            return Err(vec![self.err_at(
                &lines[0],
                None,
                "dictionary rule outside a LEXEMES, MORPHEMES or WORDS subsection",
            )]);
        };
        let mut equations = Vec::new();
        let mut errors = Vec::new();
        for line in lines {
            match self.dict_equation(line) {
                Ok(eq) => equations.push(eq),
                Err(e) => errors.push(e),
            }
        }
        if errors.is_empty() {
            let loc = self.loc(lines[0].first_line());
            if !equations.iter().any(|e| e.lhs == DictTarget::Name) {
                errors.push(ParseError::new(loc.clone(), ParseErrorKind::MissingTarget("$$")));
            }
            if !equations.iter().any(|e| matches!(e.lhs, DictTarget::Tree(_))) {
                errors.push(ParseError::new(loc, ParseErrorKind::MissingTarget("@")));
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        set.for_section_mut(sec)
            .expect("dictionary subsections are emitting sections")
            .push(DictRule { equations });
        Ok(())
    }

    fn dict_equation(&self, line: &LogicalLine) -> Result<DictEquation, ParseError> {
        let toks = self.tokens(line)?;
        let eqs: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TokKind::Eq)
            .map(|(i, _)| i)
            .collect();
        let eq = match eqs.as_slice() {
            [i] => *i,
            _ => return Err(self.err_at(line, toks.first(), "expected exactly one `=`")),
        };
        let (lhs, rhs) = (&toks[..eq], &toks[eq + 1..]);
        let lhs = match lhs {
            [t] if t.kind == TokKind::SelfName => DictTarget::Name,
            [at, rest @ ..] if at.is_word("@") => DictTarget::Tree(self.labels(line, rest)?),
            _ => return Err(self.err_at(line, lhs.first(), "left-hand side must be `$$` or `@ path`")),
        };
        let rhs = match rhs {
            [t] if t.kind == TokKind::SelfName => DictSource::Name,
            [at, rest @ ..] if at.is_word("@") => {
                let open = rest.iter().position(|t| t.kind == TokKind::LParen);
                let (path_toks, deletions) = match open {
                    None => (rest, Vec::new()),
                    Some(i) => (&rest[..i], self.deletions(line, &rest[i..])?),
                };
                DictSource::Tree {
                    path: self.labels(line, path_toks)?,
                    deletions,
                }
            }
            _ => {
                return Err(self.err_at(
                    line,
                    rhs.first().or(Some(&toks[eq])),
                    "right-hand side must be `$$` or `@ path [(- path …)]`",
                ))
            }
        };
        Ok(DictEquation {
            lhs,
            rhs,
            location: self.loc(line.first_line()),
        })
    }

    fn labels(&self, line: &LogicalLine, toks: &[Tok]) -> Result<Vec<String>, ParseError> {
        toks.iter()
            .map(|t| match t.word() {
                Some(w) if is_symbol_text(w) && w != "@" && w != "-" => Ok(w.to_string()),
                _ => Err(self.err_at(line, Some(t), "invalid feature label")),
            })
            .collect()
    }

    /// `( - p… - p… )`, starting at the opening parenthesis.
    fn deletions(&self, line: &LogicalLine, toks: &[Tok]) -> Result<Vec<Path>, ParseError> {
        let close = match toks.iter().position(|t| t.kind == TokKind::RParen) {
            Some(i) if i == toks.len() - 1 => i,
            Some(i) => return Err(self.err_at(line, toks.get(i + 1), "unexpected text after deletion list")),
            None => return Err(self.err_at(line, toks.last(), "unclosed deletion list")),
        };
        let inner = &toks[1..close];
        if inner.is_empty() || !inner[0].is_word("-") {
            return Err(self.err_at(
                line,
                inner.first().or(Some(&toks[0])),
                "deletion list entries start with `-`",
            ));
        }
        let mut out = Vec::new();
        let mut cur: Vec<String> = Vec::new();
        let mut minus = &inner[0];
        for t in &inner[1..] {
            if t.is_word("-") {
                if cur.is_empty() {
                    return Err(self.err_at(line, Some(minus), "empty deletion path"));
                }
                out.push(Path::new(std::mem::take(&mut cur)).expect("validated labels"));
                minus = t;
            } else {
                cur.extend(self.labels(line, std::slice::from_ref(t))?);
            }
        }
        if cur.is_empty() {
            return Err(self.err_at(line, Some(minus), "empty deletion path"));
        }
        out.push(Path::new(cur).expect("validated labels"));
        Ok(out)
    }
}

/// Splits a production side into literal runs and `$V` references.
fn parse_pattern(text: &str) -> Result<Vec<PatternToken>, String> {
    let mut out = Vec::new();
    let mut lit = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '$' {
            match chars.next() {
                Some(v) if v.is_alphabetic() => {
                    if !lit.is_empty() {
                        out.push(PatternToken::Literal(std::mem::take(&mut lit)));
                    }
                    out.push(PatternToken::Var(v));
                }
                _ => return Err("`$` must be followed by a single-letter variable".into()),
            }
        } else {
            lit.push(c);
        }
    }
    if !lit.is_empty() {
        out.push(PatternToken::Literal(lit));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(errs: &[ParseError]) -> Vec<&ParseErrorKind> {
        errs.iter().map(|e| &e.kind).collect()
    }

    const ABAMOS: &str = "#MORPHEMES\n\n'abamos\nagr pers = 1\nagr num = plu\nvinfo tense = impf\nvinfo mood = ind\nconj = 1\nstt = 24\nsut = reg\nconcat = vm\n";

    #[test]
    fn morpheme_entry() {
        let base = parse_str("m.lex", ABAMOS).unwrap();
        let e = &base.morphemes["'abamos"];
        assert!(e.parents.is_empty());
        assert_eq!(e.equations.len(), 8);
        assert_eq!(e.equations[0].path.to_string(), "agr pers");
        assert_eq!(e.equations[7].values, vec![ValueTerm::Atom(Atom::new("vm"))]);
        assert_eq!(e.location, Location::new("m.lex", 3));
    }

    #[test]
    fn lemma_with_parents() {
        let base = parse_str("l.lex", "#LEXEMES\n\npedir (MV8c C3)\n").unwrap();
        let e = &base.lexemes["pedir"];
        assert_eq!(e.parents, ["MV8c", "C3"]);
        assert!(e.equations.is_empty());
        assert_eq!(e.section, Section::Lexemes);
    }

    #[test]
    fn continued_equation() {
        let eq = parse_equation(
            "alo 1 stt = 0 14 15 21 22 23 24 25 26 31 32 34 35 \\\n            41 42 43 44 45 46 71 72 73 74 75 76 85 99",
        )
        .unwrap();
        assert_eq!(eq.path.to_string(), "alo 1 stt");
        assert_eq!(eq.values.len(), 27);
    }

    #[test]
    fn equation_forms() {
        let eq = parse_equation("alo 1 stem = $rv0").unwrap();
        assert_eq!(eq.values, vec![ValueTerm::RuleCall("rv0".into())]);
        let eq = parse_equation("stem = \"two words\"").unwrap();
        assert_eq!(eq.values, vec![ValueTerm::Atom(Atom::new("two words"))]);
        assert!(parse_equation("= x").is_err());
        assert!(parse_equation("a =").is_err());
        assert!(parse_equation("a = $r x").is_err());
        assert!(parse_equation("a = x \"y\"").is_err());
        assert!(parse_equation("a = x x").is_err());
        assert!(parse_equation("a b").is_err());
    }

    #[test]
    fn alo_rule_block() {
        let r = parse_alo_rule("rv8c\n{X = .+}\n{C = [bcdfghjklmn'npqrstvwxyz]}\n$Xe$Cir -> $Xi$C\n").unwrap();
        assert_eq!(r.name, "rv8c");
        assert_eq!(r.var_decls[&'X'], ".+");
        assert_eq!(r.var_decls[&'C'], "[bcdfghjklmn'npqrstvwxyz]");
        use PatternToken::*;
        assert_eq!(
            r.productions[0].lhs,
            vec![Var('X'), Literal("e".into()), Var('C'), Literal("ir".into())]
        );
        assert_eq!(r.productions[0].rhs, vec![Var('X'), Literal("i".into()), Var('C')]);

        let errs = parse_alo_rule("bad\n{X = .+}\n$X$Zir -> $X\n").unwrap_err();
        assert_eq!(
            kinds(&errs),
            [&ParseErrorKind::UndeclaredVariable {
                rule: "bad".into(),
                var: 'Z'
            }]
        );
        assert!(parse_alo_rule("empty\n{X = .+}\n").is_err());
        assert!(parse_alo_rule("unbound\n{X = .+}\n{Y = .}\n$Xir -> $Y\n").is_err());
    }

    #[test]
    fn dict_rules() {
        let set = parse_dict_rules(
            "WORDS\n\n@  = @\n$$ = $$\n\nMORPHEMES\n\n@  = @\n$$ = $$\n\nLEXEMES\n\n$$ = @ alo 3 stem\n@  = @ alo 3 (- stem)\n@  = @ (- alo  - aux)\n@ lex = $$\n",
        )
        .unwrap();
        assert_eq!(set.words.len(), 1);
        assert_eq!(set.morphemes.len(), 1);
        let lex = &set.lexemes[0].equations;
        assert_eq!(lex.len(), 4);
        let p = |s: &str| Path::parse(s).unwrap();
        assert_eq!(
            lex[1].rhs,
            DictSource::Tree {
                path: vec!["alo".into(), "3".into()],
                deletions: vec![p("stem")]
            }
        );
        assert_eq!(
            lex[2].rhs,
            DictSource::Tree {
                path: vec![],
                deletions: vec![p("alo"), p("aux")]
            }
        );
        assert_eq!(lex[3].lhs, DictTarget::Tree(vec!["lex".into()]));
        assert_eq!(lex[3].rhs, DictSource::Name);
    }

    #[test]
    fn dict_rule_errors() {
        let errs = parse_dict_rules("WORDS\n@ = @ (- )\n$$ = $$\n").unwrap_err();
        assert!(matches!(errs[0].kind, ParseErrorKind::Syntax(_)));
        let errs = parse_dict_rules("WORDS\n@ = @\n").unwrap_err();
        assert_eq!(kinds(&errs), [&ParseErrorKind::MissingTarget("$$")]);
        let errs = parse_dict_rules("@ = @\n$$ = $$\n").unwrap_err();
        assert!(matches!(errs[0].kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn data_dict() {
        let base = parse_str(
            "d.lex",
            "#DATA-DICT\n\nstem =\npers = 1 2 3\nagr = @(gen num) @(num pers)\n",
        )
        .unwrap();
        let dd = base.data_dict.unwrap();
        assert_eq!(dd["stem"], TypeDecl::Open);
        assert_eq!(dd["pers"], TypeDecl::Closed(ValueSet::of(&["1", "2", "3"])));
        let TypeDecl::Structured(alts) = &dd["agr"] else {
            panic!()
        };
        assert_eq!(alts.len(), 2);
        assert!(alts[1].contains("pers"));

        let base = parse_str("d.lex", "#DATA-DICT\n").unwrap();
        assert_eq!(base.data_dict, Some(IndexMap::new()));
        let base = parse_str("d.lex", "#WORDS\n").unwrap();
        assert_eq!(base.data_dict, None);
    }

    #[test]
    fn include_cycle() {
        let loader = MemoryLoader::new()
            .with("a.lex", "#INCLUDE \"b.lex\"\n")
            .with("b.lex", "#INCLUDE \"a.lex\"\n");
        let errs = parse_source("a.lex", &loader).unwrap_err();
        assert_eq!(
            kinds(&errs),
            [&ParseErrorKind::IncludeCycle(vec![
                "a.lex".into(),
                "b.lex".into(),
                "a.lex".into()
            ])]
        );
        assert_eq!(errs[0].location, Location::new("b.lex", 1));
    }

    #[test]
    fn diamond_include_reads_once() {
        let loader = MemoryLoader::new()
            .with("main.lex", "#INCLUDE \"a.lex\"\n#INCLUDE \"b.lex\"\n")
            .with("a.lex", "#INCLUDE \"common.lex\"\n")
            .with("b.lex", "#INCLUDE \"common.lex\"\n")
            .with("common.lex", "#WORDS\n\nfui\nlex = ser\n");
        let base = parse_source("main.lex", &loader).unwrap();
        assert_eq!(base.words.len(), 1);
        assert_eq!(base.include_graph.files, ["main.lex", "a.lex", "common.lex", "b.lex"]);
        assert_eq!(base.include_graph.edges.len(), 4);
    }

    #[test]
    fn duplicates_and_positions() {
        let text = "#WORDS\n\nfui\nlex = ser\n\nfui\nlex = ir\n";
        let errs = parse_str("w.lex", text).unwrap_err();
        assert_eq!(
            kinds(&errs),
            [&ParseErrorKind::DuplicateEntry {
                section: "WORDS".into(),
                name: "fui".into()
            }]
        );
        assert_eq!(errs[0].location.line, 6);

        let errs = parse_str("w.lex", "#WORDS\n\nfui\nlex = a \\\n  \"b\"\n").unwrap_err();
        assert_eq!(errs[0].location.line, 5);
    }

    #[test]
    fn misc_errors() {
        let errs = parse_str("x.lex", "fui\n").unwrap_err();
        assert!(matches!(errs[0].kind, ParseErrorKind::Syntax(_)));
        let errs = parse_str("x.lex", "#NOUNS\n").unwrap_err();
        assert!(matches!(errs[0].kind, ParseErrorKind::Syntax(_)));
        let errs = parse_source("nope.lex", &MemoryLoader::new()).unwrap_err();
        assert!(matches!(errs[0].kind, ParseErrorKind::Io(_)));
        let loader = MemoryLoader::new().with("bad.lex", b"#WORDS\n\nca\xffe\n".to_vec());
        let errs = parse_source("bad.lex", &loader).unwrap_err();
        assert_eq!(errs[0].kind, ParseErrorKind::Encoding { column: 3 });
        assert_eq!(errs[0].location.line, 3);
    }

    #[test]
    fn crlf_accepted() {
        let base = parse_str("c.lex", "#WORDS\r\n\r\nfui\r\nlex = ser\r\n").unwrap();
        assert_eq!(base.words["fui"].equations.len(), 1);
    }
}
