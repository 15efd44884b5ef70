//! Reader and writer for the `.efa` text format.
//!
//! ```text
//! controllable start;
//! plant A {
//!   disc int[0..5] x = 0;
//!   location L0:
//!     initial;
//!     marked when x = 3;
//!     edge start when x < 5 do x := x + 1;
//! }
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

const KEYWORDS: &[&str] = &[
    "controllable",
    "uncontrollable",
    "input",
    "bool",
    "int",
    "enum",
    "plant",
    "requirement",
    "supervisor",
    "disc",
    "alphabet",
    "location",
    "initial",
    "marked",
    "when",
    "edge",
    "do",
    "goto",
    "invariant",
    "needs",
    "disables",
    "not",
    "and",
    "or",
    "mod",
    "true",
    "false",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(i64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    length: usize,
}

const SYMBOLS: &[&str] = &[
    ":=", "!=", "<=", ">=", "..", ";", ",", "{", "}", "[", "]", "(", ")", ":", ".", "=", "<", ">",
    "+", "-",
];

fn lex(text: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| ParseError {
        span: SourceSpan {
            file: file.to_string(),
            line,
            column,
            length: 1,
        },
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            tokens.push(Token {
                tok: Tok::Ident(word),
                line,
                column: col,
                length: i - start,
            });
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let value = digits
                .parse::<i64>()
                .map_err(|_| err(line, col, format!("integer literal `{digits}` too large")))?;
            tokens.push(Token {
                tok: Tok::Nat(value),
                line,
                column: col,
                length: i - start,
            });
        } else {
            let sym = SYMBOLS.iter().find(|s| {
                s.chars()
                    .enumerate()
                    .all(|(k, sc)| chars.get(i + k) == Some(&sc))
            });
            let Some(sym) = sym else {
                return Err(err(line, col, format!("unexpected character `{c}`")));
            };
            i += sym.len();
            tokens.push(Token {
                tok: Tok::Sym(sym),
                line,
                column: col,
                length: sym.len(),
            });
        }
        col += i - start;
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        length: 0,
    });
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span_at(&self, idx: usize) -> SourceSpan {
        let t = &self.tokens[idx];
        SourceSpan {
            file: self.file.to_string(),
            line: t.line,
            column: t.column,
            length: t.length,
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span_at(self.pos),
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error_here(format!("expected {expected}, found {}", self.peek()))
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.is_word(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<()> {
        if self.eat_word(word) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{sym}`")))
        }
    }

    /// Identifier that is not a keyword, with the index of its token.
    fn ident(&mut self) -> PResult<(String, usize)> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_keyword(&w) => {
                self.pos += 1;
                Ok((w, self.pos - 1))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<(String, usize)>> {
        let mut out = vec![self.ident()?];
        while self.eat_sym(",") {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn nat(&mut self) -> PResult<i64> {
        match *self.peek() {
            Tok::Nat(n) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("integer literal")),
        }
    }

    fn typename(&mut self) -> PResult<VarDomain> {
        if self.eat_word("bool") {
            Ok(VarDomain::Bool)
        } else if self.eat_word("int") {
            self.expect_sym("[")?;
            let lo = self.nat()?;
            self.expect_sym("..")?;
            let hi = self.nat()?;
            self.expect_sym("]")?;
            Ok(VarDomain::Int { lo, hi })
        } else if self.eat_word("enum") {
            self.expect_sym("{")?;
            let lits = self.ident_list()?.into_iter().map(|(n, _)| n).collect();
            self.expect_sym("}")?;
            Ok(VarDomain::Enum(lits))
        } else {
            Err(self.unexpected("type"))
        }
    }

    fn literal(&mut self, domain: &VarDomain) -> PResult<i64> {
        let start = self.pos;
        let value = match (domain, self.peek().clone()) {
            (VarDomain::Bool, Tok::Ident(w)) if w == "true" => 1,
            (VarDomain::Bool, Tok::Ident(w)) if w == "false" => 0,
            (VarDomain::Int { .. }, Tok::Nat(n)) => n,
            (VarDomain::Enum(lits), Tok::Ident(w)) => match lits.iter().position(|l| *l == w) {
                Some(k) => k as i64,
                None => return Err(self.error_here(format!("`{w}` is not a literal of the type"))),
            },
            _ => return Err(self.unexpected("literal of the declared type")),
        };
        self.pos = start + 1;
        Ok(value)
    }

    // Expressions, loosest binding first.

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            lhs = Expr::or(lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.cmp_expr()?;
        while self.eat_word("and") {
            lhs = Expr::and(lhs, self.cmp_expr()?);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::Sym("=" | "!=" | "<" | "<=" | ">" | ">=")) {
            return Err(self.error_here("comparisons do not chain; add parentheses"));
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mod_expr()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::binary(op, lhs, self.mod_expr()?);
        }
    }

    fn mod_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_word("mod") {
            lhs = Expr::binary(BinOp::Mod, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_word("not") {
            Ok(Expr::not(self.unary()?))
        } else if self.eat_sym("-") {
            Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Tok::Ident(w) if w == "true" => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Tok::Ident(w) if w == "false" => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.eat_sym(".") {
                    let (loc, _) = self.ident()?;
                    Ok(Expr::loc(name, loc))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    // Declarations.

    fn automaton(&mut self, kind: AutKind, names: &mut Names) -> PResult<Automaton> {
        let (name, tok) = self.ident()?;
        names.declare(self, &name, tok)?;
        let mut aut = Automaton::new(name, kind);
        self.expect_sym("{")?;
        let mut gotos: Vec<(usize, usize, String, usize)> = Vec::new();
        let mut loc_names: HashMap<String, usize> = HashMap::new();
        loop {
            if self.eat_sym("}") {
                break;
            } else if self.eat_word("disc") {
                let domain = self.typename()?;
                let (vname, tok) = self.ident()?;
                names.declare(self, &vname, tok)?;
                let mut var = Variable::discrete(vname, domain);
                if self.eat_sym("=") {
                    var.initial.push(self.literal(&var.domain)?);
                    while self.eat_sym(",") {
                        var.initial.push(self.literal(&var.domain)?);
                    }
                }
                self.expect_sym(";")?;
                aut.variables.push(var);
            } else if self.eat_word("alphabet") {
                let events = if self.is_sym(";") {
                    Vec::new()
                } else {
                    self.ident_list()?.into_iter().map(|(n, _)| n).collect()
                };
                self.expect_sym(";")?;
                aut.alphabet = Some(events);
            } else if self.eat_word("location") {
                let (lname, tok) = self.ident()?;
                if loc_names.insert(lname.clone(), aut.locations.len()).is_some() {
                    return Err(ParseError {
                        span: self.span_at(tok),
                        message: format!("duplicate location `{lname}`"),
                    });
                }
                self.expect_sym(":")?;
                let mut loc = Location::new(lname);
                if self.eat_word("initial") {
                    loc.initial = Some(self.optional_when()?);
                    self.expect_sym(";")?;
                }
                if self.eat_word("marked") {
                    loc.marked = Some(self.optional_when()?);
                    self.expect_sym(";")?;
                }
                while self.eat_word("edge") {
                    let events = self.ident_list()?.into_iter().map(|(n, _)| n).collect();
                    let guard = if self.eat_word("when") {
                        self.expr()?
                    } else {
                        Expr::Bool(true)
                    };
                    let mut updates = Vec::new();
                    if self.eat_word("do") {
                        loop {
                            let (var, _) = self.ident()?;
                            self.expect_sym(":=")?;
                            updates.push((var, self.expr()?));
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    let src = aut.locations.len();
                    if self.eat_word("goto") {
                        let (target, tok) = self.ident()?;
                        gotos.push((src, loc.edges.len(), target, tok));
                    }
                    self.expect_sym(";")?;
                    loc.edges.push(Edge {
                        events,
                        guard,
                        updates,
                        target: src,
                    });
                }
                aut.locations.push(loc);
            } else {
                return Err(self.unexpected("`disc`, `alphabet`, `location` or `}`"));
            }
        }
        for (src, k, target, tok) in gotos {
            let Some(&idx) = loc_names.get(&target) else {
                return Err(ParseError {
                    span: self.span_at(tok),
                    message: format!("unknown location `{target}`"),
                });
            };
            aut.locations[src].edges[k].target = idx;
        }
        Ok(aut)
    }

    fn optional_when(&mut self) -> PResult<Expr> {
        if self.eat_word("when") {
            self.expr()
        } else {
            Ok(Expr::Bool(true))
        }
    }

    fn invariant(&mut self, side: Side) -> PResult<Invariant> {
        let needs = matches!(self.peek(), Tok::Ident(w) if !is_keyword(w))
            && matches!(self.peek_at(1), Tok::Ident(w) if w == "needs");
        let inv = if needs {
            let (event, _) = self.ident()?;
            self.expect_word("needs")?;
            Invariant {
                kind: InvKind::Needs(event),
                side,
                predicate: self.expr()?,
            }
        } else {
            let predicate = self.expr()?;
            let kind = if self.eat_word("disables") {
                InvKind::Disables(self.ident()?.0)
            } else {
                InvKind::State
            };
            Invariant {
                kind,
                side,
                predicate,
            }
        };
        self.expect_sym(";")?;
        Ok(inv)
    }

    fn spec(&mut self) -> PResult<Specification> {
        let mut spec = Specification::default();
        let mut names = Names::default();
        loop {
            if *self.peek() == Tok::Eof {
                break;
            }
            let kind = if self.is_word("controllable") {
                Some(Controllability::Controllable)
            } else if self.is_word("uncontrollable") {
                Some(Controllability::Uncontrollable)
            } else {
                None
            };
            if let Some(controllability) = kind {
                self.pos += 1;
                for (name, tok) in self.ident_list()? {
                    names.declare(self, &name, tok)?;
                    spec.events.push(Event {
                        name,
                        controllability,
                    });
                }
                self.expect_sym(";")?;
            } else if self.eat_word("input") {
                let domain = self.typename()?;
                let (name, tok) = self.ident()?;
                names.declare(self, &name, tok)?;
                self.expect_sym(";")?;
                spec.inputs.push(Variable::input(name, domain));
            } else if self.eat_word("initial") {
                spec.initials.push(self.expr()?);
                self.expect_sym(";")?;
            } else if self.eat_word("marked") {
                spec.markeds.push(self.expr()?);
                self.expect_sym(";")?;
            } else {
                let (aut_kind, side) = if self.eat_word("plant") {
                    (AutKind::Plant, Side::Plant)
                } else if self.eat_word("requirement") {
                    (AutKind::Requirement, Side::Requirement)
                } else if self.eat_word("supervisor") {
                    (AutKind::Supervisor, Side::Supervisor)
                } else {
                    return Err(self.unexpected("declaration"));
                };
                if self.eat_word("invariant") {
                    spec.invariants.push(self.invariant(side)?);
                } else {
                    spec.automata.push(self.automaton(aut_kind, &mut names)?);
                }
            }
        }
        Ok(spec)
    }
}

#[derive(Default)]
struct Names {
    seen: HashSet<String>,
}

impl Names {
    fn declare(&mut self, p: &Parser<'_>, name: &str, tok: usize) -> PResult<()> {
        if self.seen.insert(name.to_string()) {
            Ok(())
        } else {
            Err(ParseError {
                span: p.span_at(tok),
                message: format!("duplicate declaration of `{name}`"),
            })
        }
    }
}

/// Names that are not variables but are enumeration literals are turned into
/// literal references.
fn resolve_names(spec: &mut Specification) {
    let vars: HashSet<String> = spec.variables().map(|v| v.name.clone()).collect();
    let literals: HashSet<String> = spec
        .variables()
        .filter_map(|v| match &v.domain {
            VarDomain::Enum(lits) => Some(lits.clone()),
            _ => None,
        })
        .flatten()
        .collect();
    let fix = |e: &Expr| -> Expr {
        e.map_leaves(&|leaf| match leaf {
            Expr::Var(n) if !vars.contains(n) && literals.contains(n) => {
                Some(Expr::EnumLit(n.clone()))
            }
            _ => None,
        })
    };
    for aut in &mut spec.automata {
        for loc in &mut aut.locations {
            loc.initial = loc.initial.as_ref().map(fix);
            loc.marked = loc.marked.as_ref().map(fix);
            for edge in &mut loc.edges {
                edge.guard = fix(&edge.guard);
                for (_, rhs) in &mut edge.updates {
                    *rhs = fix(rhs);
                }
            }
        }
    }
    for inv in &mut spec.invariants {
        inv.predicate = fix(&inv.predicate);
    }
    for p in spec.initials.iter_mut().chain(spec.markeds.iter_mut()) {
        *p = fix(p);
    }
}

/// Parse `.efa` text. `file` only labels spans in errors.
pub fn parse(text: &str, file: &str) -> Result<Specification, ParseError> {
    let tokens = lex(text, file)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        file,
    };
    let mut spec = parser.spec()?;
    resolve_names(&mut spec);
    Ok(spec)
}

/// Parse a standalone expression, resolving names against `spec`.
pub fn parse_expr(text: &str, spec: &Specification) -> Result<Expr, ParseError> {
    let tokens = lex(text, "<expr>")?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        file: "<expr>",
    };
    let e = parser.expr()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected("end of expression"));
    }
    let mut holder = spec.clone();
    holder.initials = vec![e];
    resolve_names(&mut holder);
    Ok(holder.initials.pop().unwrap())
}

// ---------------------------------------------------------------------------
// Printing

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mod => 5,
            _ => 3,
        },
        Expr::Unary(..) => 6,
        Expr::Int(n) if *n < 0 => 6,
        _ => 7,
    }
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Var(n) | Expr::EnumLit(n) => out.push_str(n),
        Expr::Loc { aut, loc } => {
            let _ = write!(out, "{aut}.{loc}");
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "not ",
                UnOp::Neg => "-",
            });
            write_operand(out, inner, level(inner) < 6);
        }
        Expr::Binary(op, l, r) => {
            let p = level(e);
            if op.is_comparison() {
                write_operand(out, l, level(l) <= p);
            } else {
                write_operand(out, l, level(l) < p);
            }
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, r, level(r) <= p);
        }
    }
}

/// Render an expression with minimal parentheses.
pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn typename(domain: &VarDomain) -> String {
    match domain {
        VarDomain::Bool => "bool".into(),
        VarDomain::Int { lo, hi } => format!("int[{lo}..{hi}]"),
        VarDomain::Enum(lits) => format!("enum{{{}}}", lits.join(", ")),
    }
}

fn literal_text(domain: &VarDomain, value: i64) -> String {
    match domain {
        VarDomain::Bool => (if value != 0 { "true" } else { "false" }).into(),
        VarDomain::Int { .. } => value.to_string(),
        VarDomain::Enum(lits) => lits
            .get(value as usize)
            .cloned()
            .unwrap_or_else(|| value.to_string()),
    }
}

fn side_keyword(side: Side) -> &'static str {
    match side {
        Side::Plant => "plant",
        Side::Requirement => "requirement",
        Side::Supervisor => "supervisor",
    }
}

fn write_condition(out: &mut String, keyword: &str, pred: &Option<Expr>) {
    if let Some(p) = pred {
        if p.is_true() {
            let _ = writeln!(out, "    {keyword};");
        } else {
            let _ = writeln!(out, "    {keyword} when {};", expr_to_string(p));
        }
    }
}

fn write_automaton(out: &mut String, aut: &Automaton) {
    let kind = match aut.kind {
        AutKind::Plant => "plant",
        AutKind::Requirement => "requirement",
        AutKind::Supervisor => "supervisor",
    };
    let _ = writeln!(out, "{kind} {} {{", aut.name);
    for var in &aut.variables {
        let _ = write!(out, "  disc {} {}", typename(&var.domain), var.name);
        if !var.initial.is_empty() {
            let values: Vec<String> = var
                .initial
                .iter()
                .map(|&v| literal_text(&var.domain, v))
                .collect();
            let _ = write!(out, " = {}", values.join(", "));
        }
        out.push_str(";\n");
    }
    if let Some(alphabet) = &aut.alphabet {
        if alphabet.is_empty() {
            out.push_str("  alphabet;\n");
        } else {
            let _ = writeln!(out, "  alphabet {};", alphabet.join(", "));
        }
    }
    for (idx, loc) in aut.locations.iter().enumerate() {
        let _ = writeln!(out, "  location {}:", loc.name);
        write_condition(out, "initial", &loc.initial);
        write_condition(out, "marked", &loc.marked);
        for edge in &loc.edges {
            let _ = write!(out, "    edge {}", edge.events.join(", "));
            if !edge.guard.is_true() {
                let _ = write!(out, " when {}", expr_to_string(&edge.guard));
            }
            if !edge.updates.is_empty() {
                let updates: Vec<String> = edge
                    .updates
                    .iter()
                    .map(|(v, e)| format!("{v} := {}", expr_to_string(e)))
                    .collect();
                let _ = write!(out, " do {}", updates.join(", "));
            }
            if edge.target != idx {
                let target = aut
                    .locations
                    .get(edge.target)
                    .map_or("?", |l| l.name.as_str());
                let _ = write!(out, " goto {target}");
            }
            out.push_str(";\n");
        }
    }
    out.push_str("}\n");
}

/// Render a specification so that [`parse`] gives back an equal value.
pub fn unparse(spec: &Specification) -> String {
    let mut sections: Vec<String> = Vec::new();

    let mut events = String::new();
    let mut k = 0;
    while k < spec.events.len() {
        let kind = spec.events[k].controllability;
        let mut names = Vec::new();
        while k < spec.events.len() && spec.events[k].controllability == kind {
            names.push(spec.events[k].name.as_str());
            k += 1;
        }
        let keyword = match kind {
            Controllability::Controllable => "controllable",
            Controllability::Uncontrollable => "uncontrollable",
        };
        let _ = writeln!(events, "{keyword} {};", names.join(", "));
    }
    sections.push(events);

    let mut inputs = String::new();
    for var in &spec.inputs {
        let _ = writeln!(inputs, "input {} {};", typename(&var.domain), var.name);
    }
    sections.push(inputs);

    for aut in &spec.automata {
        let mut text = String::new();
        write_automaton(&mut text, aut);
        sections.push(text);
    }

    let mut invariants = String::new();
    for inv in &spec.invariants {
        let side = side_keyword(inv.side);
        let pred = expr_to_string(&inv.predicate);
        let _ = match &inv.kind {
            InvKind::State => writeln!(invariants, "{side} invariant {pred};"),
            InvKind::Needs(ev) => writeln!(invariants, "{side} invariant {ev} needs {pred};"),
            InvKind::Disables(ev) => {
                // A disjunction on the left would otherwise still bind
                // correctly; `disables` is outside the expression grammar.
                writeln!(invariants, "{side} invariant {pred} disables {ev};")
            }
        };
    }
    sections.push(invariants);

    let mut preds = String::new();
    for p in &spec.initials {
        let _ = writeln!(preds, "initial {};", expr_to_string(p));
    }
    for p in &spec.markeds {
        let _ = writeln!(preds, "marked {};", expr_to_string(p));
    }
    sections.push(preds);

    sections.retain(|s| !s.is_empty());
    sections.join("\n")
}
