//! Pretty-printing back to source syntax. Re-parsing the output yields a
//! base with the same content.

use std::fmt::{self, Write};

use super::{
    AloRuleDef, DictEquation, DictRule, DictSource, DictTarget, EntryDef, PatternToken, Section, SourceBase, TypeDecl,
};

impl fmt::Display for SourceBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(decls) = &self.data_dict {
            f.write_str("#DATA-DICT\n\n")?;
            for (label, decl) in decls {
                writeln!(f, "{}", DeclLine(label, decl))?;
            }
            f.write_str("\n")?;
        }
        if !self.alo_rules.is_empty() {
            f.write_str("#ALO-RULES\n\n")?;
            for rule in self.alo_rules.values() {
                writeln!(f, "{rule}")?;
            }
        }
        for section in [Section::Classes, Section::Morphemes, Section::Words, Section::Lexemes] {
            let entries = self.section(section);
            if entries.is_empty() {
                continue;
            }
            writeln!(f, "#{}\n", section.keyword())?;
            for entry in entries.values() {
                writeln!(f, "{entry}")?;
            }
        }
        let rules = &self.dict_rules;
        if !(rules.lexemes.is_empty() && rules.morphemes.is_empty() && rules.words.is_empty()) {
            f.write_str("#DICT-RULES\n\n")?;
            for section in [Section::Words, Section::Morphemes, Section::Lexemes] {
                let list = rules.for_section(section);
                if list.is_empty() {
                    continue;
                }
                writeln!(f, "{}\n", section.keyword())?;
                for rule in list {
                    writeln!(f, "{rule}")?;
                }
            }
        }
        Ok(())
    }
}

struct DeclLine<'a>(&'a str, &'a TypeDecl);

impl fmt::Display for DeclLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.0)?;
        match self.1 {
            TypeDecl::Open => Ok(()),
            TypeDecl::Closed(vs) => write!(f, " {vs}"),
            TypeDecl::Structured(alts) => {
                for alt in alts {
                    let labels: Vec<&str> = alt.iter().map(String::as_str).collect();
                    write!(f, " @({})", labels.join(" "))?;
                }
                Ok(())
            }
        }
    }
}

/// Entry block, terminated by a newline (callers add the blank separator).
impl fmt::Display for EntryDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.parents.is_empty() {
            write!(f, " ({})", self.parents.join(" "))?;
        }
        f.write_char('\n')?;
        for eq in &self.equations {
            write!(f, "{} =", eq.path)?;
            for v in &eq.values {
                write!(f, " {v}")?;
            }
            f.write_char('\n')?;
        }
        Ok(())
    }
}

fn pattern(tokens: &[PatternToken]) -> String {
    tokens
        .iter()
        .map(|t| match t {
            PatternToken::Literal(s) => s.clone(),
            PatternToken::Var(v) => format!("${v}"),
        })
        .collect()
}

impl fmt::Display for AloRuleDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.name)?;
        for (v, re) in &self.var_decls {
            writeln!(f, "{{{v} = {re}}}")?;
        }
        for p in &self.productions {
            writeln!(f, "{} -> {}", pattern(&p.lhs), pattern(&p.rhs))?;
        }
        Ok(())
    }
}

impl fmt::Display for DictEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lhs {
            DictTarget::Name => f.write_str("$$")?,
            DictTarget::Tree(path) => {
                f.write_str("@")?;
                for l in path {
                    write!(f, " {l}")?;
                }
            }
        }
        f.write_str(" = ")?;
        match &self.rhs {
            DictSource::Name => f.write_str("$$"),
            DictSource::Tree { path, deletions } => {
                f.write_str("@")?;
                for l in path {
                    write!(f, " {l}")?;
                }
                if !deletions.is_empty() {
                    f.write_str(" (")?;
                    for d in deletions {
                        write!(f, "- {d} ")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for DictRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{eq}")?;
        }
        Ok(())
    }
}
