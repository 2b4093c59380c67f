use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lexiforge::compile::compile_with;
use lexiforge::diag::{has_errors, Diagnostic};
use lexiforge::feature::{Atom, FeatureTree, Node, ValueSet};
use lexiforge::morph::{analyze, generate, parse_wf_rules, WfRule};
use lexiforge::objdict::{IndexConfig, ObjectDictionary, ObjectEntry};
use lexiforge::source::{parse_source, FsLoader, SourceBase};

/// Lexicon compiler, dictionary browser and morphological analyzer.
#[derive(Debug, Parser)]
#[command(name = "lexiforge", version)]
struct Cli {
    /// Tab-separated, line-oriented output for scripts.
    #[arg(long, global = true)]
    porcelain: bool,
    /// Feature holding an entry's lemma.
    #[arg(long, global = true, default_value = "lex", value_name = "LABEL")]
    lemma_feature: String,
    /// Feature holding an entry's concatenation class.
    #[arg(long, global = true, default_value = "concat", value_name = "LABEL")]
    concat_feature: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a source lexical base into an object dictionary.
    Compile {
        source: PathBuf,
        #[arg(short, long, value_name = "DICT")]
        output: PathBuf,
    },
    /// Run the whole pipeline without writing anything and report diagnostics.
    Check { source: PathBuf },
    /// Print the dictionary entries for each surface form.
    Lookup {
        dict: PathBuf,
        #[arg(required = true)]
        surfaces: Vec<String>,
    },
    /// Analyze words given as arguments, or one per line on standard input.
    Analyze {
        dict: PathBuf,
        rules: PathBuf,
        words: Vec<String>,
    },
    /// Generate the surface forms of a lemma, optionally constrained by
    /// `path=value` pairs such as `agr.pers=1` or `vinfo.tense=impf,pres`.
    Generate {
        dict: PathBuf,
        rules: PathBuf,
        lemma: String,
        constraints: Vec<String>,
    },
    /// Print every entry in canonical order.
    Dump { dict: PathBuf },
    /// Print dictionary counts.
    Stats { dict: PathBuf },
}

/// Exit statuses.
const OK: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;

/// A failure reported on stderr with the given exit status.
struct Fail(u8, String);

type Run = Result<u8, Fail>;

fn io_fail(path: &FsPath, e: impl std::fmt::Display) -> Fail {
    Fail(USAGE, format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = match run(&cli, &mut out) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = out.flush();
            eprintln!("lexiforge: {msg}");
            code
        }
    };
    if let Err(e) = out.flush() {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("lexiforge: {e}");
            return ExitCode::from(USAGE);
        }
    }
    ExitCode::from(code)
}

fn run(cli: &Cli, out: &mut impl Write) -> Run {
    let config = IndexConfig {
        lemma_feature: cli.lemma_feature.clone(),
        concat_feature: cli.concat_feature.clone(),
    };
    let w = |r: io::Result<()>| r.map_err(|e| Fail(USAGE, e.to_string()));
    match &cli.command {
        Command::Compile { source, output } => {
            let base = match load_source(source, cli.porcelain, &mut io::stderr())? {
                Ok(base) => base,
                Err(code) => return Ok(code),
            };
            let c = compile_with(&base, config);
            report(&c.diagnostics, cli.porcelain, &mut io::stderr().lock()).map_err(|e| Fail(USAGE, e.to_string()))?;
            let Some(dict) = c.dictionary else {
                return Ok(FAILED);
            };
            let file = std::fs::File::create(output).map_err(|e| io_fail(output, e))?;
            dict.save(io::BufWriter::new(file)).map_err(|e| io_fail(output, e))?;
            Ok(OK)
        }
        Command::Check { source } => {
            let base = match load_source(source, cli.porcelain, out)? {
                Ok(base) => base,
                Err(code) => return Ok(code),
            };
            let c = compile_with(&base, config);
            w(report(&c.diagnostics, cli.porcelain, out))?;
            if !cli.porcelain {
                let errors = c.diagnostics.iter().filter(|d| d.is_error()).count();
                let warnings = c.diagnostics.len() - errors;
                w(writeln!(out, "{errors} error(s), {warnings} warning(s)"))?;
            }
            Ok(if has_errors(&c.diagnostics) { FAILED } else { OK })
        }
        Command::Lookup { dict, surfaces } => {
            let d = load_dict(dict, config)?;
            let mut code = OK;
            for s in surfaces {
                let found = d.lookup(s);
                if found.is_empty() {
                    code = FAILED;
                }
                w(write_entries(out, s, &found, cli.porcelain))?;
            }
            Ok(code)
        }
        Command::Dump { dict } => {
            let d = load_dict(dict, config)?;
            let sorted = d.sorted_entries();
            let mut i = 0;
            while i < sorted.len() {
                let surface = &sorted[i].0.surface;
                let group: Vec<&ObjectEntry> = sorted[i..]
                    .iter()
                    .take_while(|(e, _)| &e.surface == surface)
                    .map(|(e, _)| *e)
                    .collect();
                i += group.len();
                w(write_entries(out, surface, &group, cli.porcelain))?;
            }
            Ok(OK)
        }
        Command::Stats { dict } => {
            let s = load_dict(dict, config)?.stats();
            let rows = [
                ("entries", s.entries),
                ("surfaces", s.surfaces),
                ("lemmas", s.lemmas),
                ("homographs", s.homographs),
            ];
            for (k, v) in rows {
                w(if cli.porcelain {
                    writeln!(out, "{k}\t{v}")
                } else {
                    writeln!(out, "{k}: {v}")
                })?;
            }
            Ok(OK)
        }
        Command::Analyze { dict, rules, words } => {
            let d = load_dict(dict, config)?;
            let rules = load_rules(rules)?;
            let mut code = OK;
            let mut one = |word: &str, out: &mut dyn Write| -> Run {
                let found = analyze(word, &d, &rules);
                if found.is_empty() {
                    code = FAILED;
                }
                w(write_analyses(out, word, &found, cli.porcelain))?;
                Ok(OK)
            };
            if words.is_empty() {
                for (n, line) in io::stdin().lock().lines().enumerate() {
                    let line = line.map_err(|e| match e.kind() {
                        io::ErrorKind::InvalidData => Fail(USAGE, format!("<stdin>:{}: invalid UTF-8", n + 1)),
                        _ => Fail(USAGE, e.to_string()),
                    })?;
                    let word = line.trim();
                    if !word.is_empty() {
                        one(word, out)?;
                    }
                }
            } else {
                for word in words {
                    one(word, out)?;
                }
            }
            Ok(code)
        }
        Command::Generate {
            dict,
            rules,
            lemma,
            constraints,
        } => {
            let d = load_dict(dict, config)?;
            let rules = load_rules(rules)?;
            let c = parse_constraints(constraints)?;
            let forms = generate(lemma, &c, &d, &rules);
            for f in &forms {
                w(writeln!(out, "{f}"))?;
            }
            Ok(if forms.is_empty() { FAILED } else { OK })
        }
    }
}

fn report(diags: &[Diagnostic], porcelain: bool, sink: &mut dyn Write) -> io::Result<()> {
    for d in diags {
        if porcelain {
            writeln!(sink, "{}", d.porcelain())?;
        } else {
            writeln!(sink, "{d}")?;
        }
    }
    Ok(())
}

/// `Ok(Err(code))` when the source failed to parse; its diagnostics have
/// already been written to `sink`.
fn load_source(path: &FsPath, porcelain: bool, sink: &mut dyn Write) -> Result<Result<SourceBase, u8>, Fail> {
    match parse_source(&path.to_string_lossy(), &FsLoader) {
        Ok(base) => Ok(Ok(base)),
        Err(errors) => {
            let diags: Vec<Diagnostic> = errors.into_iter().map(Diagnostic::from).collect();
            report(&diags, porcelain, sink).map_err(|e| Fail(USAGE, e.to_string()))?;
            Ok(Err(if diags.iter().any(|d| d.io) { USAGE } else { FAILED }))
        }
    }
}

/// Reads a UTF-8 text file, reporting the position of the first bad byte.
fn read_text(path: &FsPath) -> Result<String, Fail> {
    let bytes = std::fs::read(path).map_err(|e| io_fail(path, e))?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
        let start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let column = String::from_utf8_lossy(&valid[start..]).chars().count() + 1;
        Fail(USAGE, format!("{}:{line}:{column}: invalid UTF-8", path.display()))
    })
}

fn load_dict(path: &FsPath, config: IndexConfig) -> Result<ObjectDictionary, Fail> {
    let text = read_text(path)?;
    ObjectDictionary::load_with(&text, config).map_err(|e| io_fail(path, e))
}

fn load_rules(path: &FsPath) -> Result<Vec<WfRule>, Fail> {
    let text = read_text(path)?;
    parse_wf_rules(&text).map_err(|e| Fail(FAILED, format!("{}: {e}", path.display())))
}

/// `a.b=v1,v2` pairs folded into one tree.
fn parse_constraints(pairs: &[String]) -> Result<FeatureTree, Fail> {
    let bad = |p: &str, why: &str| Fail(USAGE, format!("bad constraint `{p}`: {why}"));
    let mut tree = FeatureTree::new();
    for pair in pairs {
        let (path, values) = pair.split_once('=').ok_or_else(|| bad(pair, "expected path=value"))?;
        let labels: Vec<String> = path.split('.').map(String::from).collect();
        if labels.iter().any(|l| l.is_empty()) {
            return Err(bad(pair, "empty label"));
        }
        let atoms: Vec<Atom> = values.split(',').map(Atom::new).collect();
        let vs = ValueSet::new(atoms).map_err(|e| bad(pair, &e.to_string()))?;
        let single = FeatureTree::singleton(&labels, Node::Leaf(vs)).map_err(|e| bad(pair, &e.to_string()))?;
        tree = tree
            .unify(&single)
            .ok_or_else(|| bad(pair, "conflicts with an earlier constraint"))?;
    }
    Ok(tree)
}

fn write_entries(out: &mut dyn Write, surface: &str, entries: &[&ObjectEntry], porcelain: bool) -> io::Result<()> {
    let shown = Atom::new(surface).render().into_owned();
    if porcelain {
        if entries.is_empty() {
            return writeln!(out, "{shown}\t*UNKNOWN*");
        }
        for (k, e) in entries.iter().enumerate() {
            let canonical = e.canonical_form();
            if canonical.is_empty() {
                writeln!(out, "{shown}\t{}\t", k + 1)?;
            }
            for line in canonical.lines() {
                writeln!(out, "{shown}\t{}\t{line}", k + 1)?;
            }
        }
        return Ok(());
    }
    if entries.is_empty() {
        return writeln!(out, "{shown}\n  *UNKNOWN*\n");
    }
    for e in entries {
        let mut block = format!("{shown}\n");
        for line in e.canonical_form().lines() {
            let _ = writeln!(block, "  {line}");
        }
        writeln!(out, "{block}")?;
    }
    Ok(())
}

fn write_analyses(
    out: &mut dyn Write,
    word: &str,
    found: &[lexiforge::morph::Analysis],
    porcelain: bool,
) -> io::Result<()> {
    if porcelain {
        if found.is_empty() {
            return writeln!(out, "{word}\t*UNKNOWN*");
        }
        for (k, a) in found.iter().enumerate() {
            let lemma = a.lemma.as_deref().unwrap_or("-");
            let prefix = format!("{word}\t{}\t{lemma}\t{}\t{}", k + 1, a.category, a.segmentation());
            let canonical = a.tree.canonical_form();
            if canonical.is_empty() {
                writeln!(out, "{prefix}\t")?;
            }
            for line in canonical.lines() {
                writeln!(out, "{prefix}\t{line}")?;
            }
        }
        return Ok(());
    }
    writeln!(out, "{word}")?;
    if found.is_empty() {
        writeln!(out, "  *UNKNOWN*")?;
    }
    for a in found {
        writeln!(
            out,
            "  {} {} [{}]",
            a.category,
            a.lemma.as_deref().unwrap_or("-"),
            a.segmentation()
        )?;
        for line in a.tree.canonical_form().lines() {
            writeln!(out, "    {line}")?;
        }
    }
    writeln!(out)
}
