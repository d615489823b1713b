//! The structure file format.
//!
//! ```text
//! # comment
//! size 3;
//! rel E/2 {(0,1),(1,0)};
//! const c = 0;
//! fun f/1 {(0)->1,(1)->2,(2)->0};
//! ```
//!
//! Whitespace is insignificant. A JSON mirror of the same schema is read
//! and written by [`parse_json`] and [`serialize_json`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FinStructure, FunSym, RelSym, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Punct(&'static str),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let mut last = (1, 1);
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse().map_err(|_| Error::Syntax {
                    line: line_no,
                    column: col,
                    message: format!("integer `{s}` too large"),
                })?;
                toks.push((Tok::Int(v), line_no, col));
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), line_no, col));
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                toks.push((Tok::Punct("->"), line_no, col));
                i += 2;
            } else {
                let p = match c {
                    ';' => ";",
                    '/' => "/",
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '=' => "=",
                    _ => {
                        return Err(Error::Syntax {
                            line: line_no,
                            column: col,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                };
                toks.push((Tok::Punct(p), line_no, col));
                i += 1;
            }
        }
        last = (line_no, chars.len() + 1);
    }
    Ok(Lexer { toks, pos: 0, end: last })
}

impl Lexer {
    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn punct(&mut self, p: &'static str) -> Result<()> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{p}`")),
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn int(&mut self) -> Result<usize> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected integer"),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.punct("(")?;
        let mut out = Vec::new();
        if !self.eat(")") {
            loop {
                out.push(self.int()?);
                if self.eat(")") {
                    break;
                }
                self.punct(",")?;
            }
        }
        Ok(out)
    }

    /// `{ item, item, … }`
    fn braced<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.punct("{")?;
        let mut out = Vec::new();
        if !self.eat("}") {
            loop {
                out.push(item(self)?);
                if self.eat("}") {
                    break;
                }
                self.punct(",")?;
            }
        }
        Ok(out)
    }
}

/// Parse the text structure format.
pub fn parse_structure(text: &str) -> Result<FinStructure> {
    let mut lx = lex(text)?;
    let mut size = None;
    let mut vocab = Vocabulary::default();
    let mut relations = Vec::new();
    let mut constants = Vec::new();
    let mut functions = Vec::new();
    while lx.peek().is_some() {
        let kw = lx.ident()?;
        match kw.as_str() {
            "size" => {
                if size.is_some() {
                    return lx.err("duplicate `size`");
                }
                size = Some(lx.int()?);
            }
            "rel" => {
                let name = lx.ident()?;
                lx.punct("/")?;
                let arity = lx.int()?;
                let tuples = lx.braced(Lexer::tuple)?;
                vocab.relations.push(RelSym {
                    name,
                    arity,
                    functional: false,
                });
                relations.push(tuples.into_iter().collect::<BTreeSet<_>>());
            }
            "const" => {
                let name = lx.ident()?;
                lx.punct("=")?;
                constants.push(lx.int()?);
                vocab.constants.push(name);
            }
            "fun" => {
                let name = lx.ident()?;
                lx.punct("/")?;
                let arity = lx.int()?;
                let entries = lx.braced(|lx| {
                    let args = lx.tuple()?;
                    lx.punct("->")?;
                    Ok((args, lx.int()?))
                })?;
                let mut table = BTreeMap::new();
                for (args, v) in entries {
                    if table.insert(args.clone(), v).is_some() {
                        return Err(Error::Semantic(format!("function `{name}` defined twice at {args:?}")));
                    }
                }
                vocab.functions.push(FunSym { name, arity });
                functions.push(table);
            }
            other => {
                lx.pos -= 1;
                return lx.err(format!("unknown keyword `{other}`"));
            }
        }
        lx.punct(";")?;
    }
    let _ = lx.next();
    let size = size.ok_or_else(|| Error::Semantic("missing `size`".into()))?;
    FinStructure::new(vocab, size, relations, constants, functions)
}

fn fmt_tuple(t: &[usize]) -> String {
    let inner: Vec<String> = t.iter().map(|x| x.to_string()).collect();
    format!("({})", inner.join(","))
}

/// Normalized text form: `size`, relations, constants, functions in
/// vocabulary order, tuples sorted.
pub fn serialize_structure(m: &FinStructure) -> String {
    let mut out = format!("size {};\n", m.size);
    for (sym, tuples) in m.vocab.relations.iter().zip(&m.relations) {
        let ts: Vec<String> = tuples.iter().map(|t| fmt_tuple(t)).collect();
        out.push_str(&format!("rel {}/{} {{{}}};\n", sym.name, sym.arity, ts.join(",")));
    }
    for (name, c) in m.vocab.constants.iter().zip(&m.constants) {
        out.push_str(&format!("const {name} = {c};\n"));
    }
    for (sym, table) in m.vocab.functions.iter().zip(&m.functions) {
        let es: Vec<String> = table.iter().map(|(a, v)| format!("{}->{v}", fmt_tuple(a))).collect();
        out.push_str(&format!("fun {}/{} {{{}}};\n", sym.name, sym.arity, es.join(",")));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct JsonRel {
    name: String,
    arity: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    functional: bool,
    tuples: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct JsonConst {
    name: String,
    value: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    args: Vec<usize>,
    value: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonFun {
    name: String,
    arity: usize,
    table: Vec<JsonEntry>,
}

#[derive(Serialize, Deserialize)]
struct JsonStructure {
    size: usize,
    #[serde(default)]
    relations: Vec<JsonRel>,
    #[serde(default)]
    constants: Vec<JsonConst>,
    #[serde(default)]
    functions: Vec<JsonFun>,
}

pub fn parse_json(text: &str) -> Result<FinStructure> {
    let js: JsonStructure = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut vocab = Vocabulary::default();
    let mut relations = Vec::new();
    for r in js.relations {
        vocab.relations.push(RelSym {
            name: r.name,
            arity: r.arity,
            functional: r.functional,
        });
        relations.push(r.tuples.into_iter().collect());
    }
    let mut constants = Vec::new();
    for c in js.constants {
        vocab.constants.push(c.name);
        constants.push(c.value);
    }
    let mut functions = Vec::new();
    for f in js.functions {
        vocab.functions.push(FunSym {
            name: f.name,
            arity: f.arity,
        });
        functions.push(f.table.into_iter().map(|e| (e.args, e.value)).collect());
    }
    FinStructure::new(vocab, js.size, relations, constants, functions)
}

pub fn serialize_json(m: &FinStructure) -> String {
    let js = JsonStructure {
        size: m.size,
        relations: m
            .vocab
            .relations
            .iter()
            .zip(&m.relations)
            .map(|(s, ts)| JsonRel {
                name: s.name.clone(),
                arity: s.arity,
                functional: s.functional,
                tuples: ts.iter().cloned().collect(),
            })
            .collect(),
        constants: m
            .vocab
            .constants
            .iter()
            .zip(&m.constants)
            .map(|(n, &v)| JsonConst {
                name: n.clone(),
                value: v,
            })
            .collect(),
        functions: m
            .vocab
            .functions
            .iter()
            .zip(&m.functions)
            .map(|(s, t)| JsonFun {
                name: s.name.clone(),
                arity: s.arity,
                table: t
                    .iter()
                    .map(|(a, &v)| JsonEntry {
                        args: a.clone(),
                        value: v,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&js).expect("structure serializes")
}

/// Reads a structure file, choosing the JSON reader for `.json` paths.
pub fn parse_structure_path(path: &Path) -> Result<FinStructure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_json(&text)
    } else {
        parse_structure(&text)
    }
}
