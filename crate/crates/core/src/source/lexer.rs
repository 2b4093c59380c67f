//! Physical-to-logical line handling and tokenization for the source format.

/// One logical line: comments stripped, `\` continuations joined.
#[derive(Debug, Clone)]
pub(crate) struct LogicalLine {
    pub text: String,
    /// (byte offset in `text`, physical line) for every joined segment.
    segments: Vec<(usize, usize)>,
}

impl LogicalLine {
    pub fn first_line(&self) -> usize {
        self.segments[0].1
    }

    /// Physical line holding byte `offset` of the logical text.
    pub fn line_at(&self, offset: usize) -> usize {
        self.segments
            .iter()
            .rev()
            .find(|(start, _)| *start <= offset)
            .map_or(self.first_line(), |(_, line)| *line)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Line {
    Blank,
    Content(LogicalLine),
}

/// Cuts a `;` comment, honouring double-quoted strings.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
        } else {
            match c {
                '"' => in_string = true,
                ';' => return &line[..i],
                _ => {}
            }
        }
    }
    line
}

/// Splits text into logical lines. Whitespace-only lines are kept as
/// separators; comment-only lines vanish without separating anything.
pub(crate) fn logical_lines(text: &str) -> Vec<Line> {
    let mut out = Vec::new();
    let mut pending: Option<LogicalLine> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let had_content = !raw.trim().is_empty();
        let stripped = strip_comment(raw).trim_end();
        let (body, continues) = match stripped.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (stripped, false),
        };
        match pending.as_mut() {
            Some(cur) => {
                cur.text.push(' ');
                cur.segments.push((cur.text.len(), lineno));
                cur.text.push_str(body);
            }
            None if body.trim().is_empty() && !continues => {
                if !had_content {
                    out.push(Line::Blank);
                }
                continue;
            }
            None => {
                pending = Some(LogicalLine {
                    text: body.to_string(),
                    segments: vec![(0, lineno)],
                });
            }
        }
        if !continues {
            out.push(Line::Content(pending.take().expect("pending line")));
        }
    }
    if let Some(cur) = pending {
        out.push(Line::Content(cur));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokKind {
    Word(String),
    Str(String),
    Eq,
    LParen,
    RParen,
    RuleCall(String),
    SelfName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Tok {
    pub kind: TokKind,
    pub offset: usize,
}

impl Tok {
    pub fn word(&self) -> Option<&str> {
        match &self.kind {
            TokKind::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_word(&self, w: &str) -> bool {
        self.word() == Some(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LexError {
    pub offset: usize,
    pub message: String,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '=' | '$' | '(' | ')' | '"' | ';' | '\\' | '#')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Tok>, LexError> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let kind = match c {
            '=' => {
                chars.next();
                TokKind::Eq
            }
            '(' => {
                chars.next();
                TokKind::LParen
            }
            ')' => {
                chars.next();
                TokKind::RParen
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((i, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, 't')) => s.push('\t'),
                            _ => {
                                return Err(LexError {
                                    offset: i,
                                    message: "invalid escape in string".into(),
                                })
                            }
                        },
                        c => s.push(c),
                    }
                }
                if !closed {
                    return Err(LexError {
                        offset: start,
                        message: "unterminated string".into(),
                    });
                }
                TokKind::Str(s)
            }
            '$' => {
                chars.next();
                if let Some(&(_, '$')) = chars.peek() {
                    chars.next();
                    if let Some(&(i, c)) = chars.peek() {
                        if is_word_char(c) {
                            return Err(LexError {
                                offset: i,
                                message: "unexpected character after `$$`".into(),
                            });
                        }
                    }
                    TokKind::SelfName
                } else {
                    let mut name = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if !is_word_char(c) {
                            break;
                        }
                        name.push(c);
                        chars.next();
                    }
                    if name.is_empty() {
                        return Err(LexError {
                            offset: start,
                            message: "`$` must be followed by a rule name".into(),
                        });
                    }
                    TokKind::RuleCall(name)
                }
            }
            ';' | '\\' | '#' => {
                return Err(LexError {
                    offset: start,
                    message: format!("reserved character `{c}`"),
                })
            }
            _ => {
                let mut w = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    w.push(c);
                    chars.next();
                }
                TokKind::Word(w)
            }
        };
        toks.push(Tok { kind, offset: start });
    }
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn content(lines: &[Line]) -> Vec<(&str, usize)> {
        lines
            .iter()
            .filter_map(|l| match l {
                Line::Content(c) => Some((c.text.as_str(), c.first_line())),
                Line::Blank => None,
            })
            .collect()
    }

    #[test]
    fn continuation_joins_lines() {
        let text = "alo 1 stt = 0 14 \\\n    41 42\nnext = x\n";
        let lines = logical_lines(text);
        let c = content(&lines);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].1, 1);
        assert!(c[0].0.contains("14") && c[0].0.contains("41 42"));
        let Line::Content(first) = &lines[0] else { panic!() };
        let off = first.text.find("41").unwrap();
        assert_eq!(first.line_at(off), 2);
        assert_eq!(first.line_at(0), 1);
    }

    #[test]
    fn comments_and_blanks() {
        let text = "a = 1 ; note\n; only a comment\n\r\nb = \"x;y\" ; trailing\n";
        let lines = logical_lines(text);
        assert!(matches!(lines[1], Line::Blank));
        let c = content(&lines);
        assert_eq!(c, vec![("a = 1", 1), ("b = \"x;y\"", 4)]);
    }

    #[test]
    fn tokens() {
        let toks = tokenize("alo 1 stem = $rv0").unwrap();
        assert_eq!(toks[3].kind, TokKind::Eq);
        assert_eq!(toks[4].kind, TokKind::RuleCall("rv0".into()));
        let toks = tokenize("@ lex=$$").unwrap();
        assert_eq!(
            toks.iter().map(|t| t.kind.clone()).collect::<Vec<_>>(),
            vec![
                TokKind::Word("@".into()),
                TokKind::Word("lex".into()),
                TokKind::Eq,
                TokKind::SelfName
            ]
        );
        let toks = tokenize(r#"stem = "two \"words\"""#).unwrap();
        assert_eq!(toks[2].kind, TokKind::Str("two \"words\"".into()));
        assert!(tokenize("a = \"open").is_err());
        assert!(tokenize("a = $").is_err());
        assert!(tokenize("a#b = 1").is_err());
    }
}
