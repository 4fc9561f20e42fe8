//! Statement-granularity segmentation of Java method snippets.
//!
//! This is a tolerant recursive-descent segmenter, not a Java grammar: it
//! recovers one statement per statement head, records def/use identifier
//! sets, nests bodies under their structural construct, and locates method
//! callsites. Snippets only need balanced braces, not compilability.

use std::collections::BTreeSet;

use super::lexer::{lex, TokKind, Token};
use crate::error::ParseError;

/// One raw method-level code snippet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSnippet {
    pub id: String,
    pub text: String,
}

impl SourceSnippet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into() }
    }

    /// 1-based line records. Joining the records with `\n` reproduces
    /// `text` byte for byte.
    pub fn lines(&self) -> impl Iterator<Item = (u32, &str)> {
        self.text.split('\n').enumerate().map(|(i, l)| (i as u32 + 1, l))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatementKind {
    MethodSignature,
    VarDecl,
    Assign,
    ExprCall,
    If,
    Loop,
    Switch,
    TryCatch,
    Return,
    Other,
}

impl StatementKind {
    /// Kinds that source control-dependency edges to their children.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            StatementKind::MethodSignature
                | StatementKind::If
                | StatementKind::Loop
                | StatementKind::Switch
                | StatementKind::TryCatch
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// 1-based line where the statement begins.
    pub line: u32,
    pub kind: StatementKind,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    /// Index of the structural parent in `StatementTree::statements`.
    pub parent: Option<usize>,
}

/// A `recv.method(...)` occurrence found in the token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCallsite {
    pub line: u32,
    /// Identifier token immediately before the call, or [`CHAIN_RECEIVER`]
    /// when the call hangs off another expression.
    pub receiver: String,
    pub method: String,
}

/// Synthetic receiver for non-leading links of call chains (`a.b().c()`).
/// Such callsites never anchor sequence edges.
pub const CHAIN_RECEIVER: &str = "<chain>";

/// A callsite matched against a target API spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCallsite {
    pub line: u32,
    pub receiver: String,
    pub method: String,
    /// The qualified spec the site was matched against, e.g. `Statement.execute`.
    pub api: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatementTree {
    /// Statements in source order; index 0 is the method-signature root.
    pub statements: Vec<Statement>,
    /// Raw source lines (index 0 holds line 1), for node-text lookup.
    pub lines: Vec<String>,
    /// All callsites in token order.
    pub callsites: Vec<RawCallsite>,
}

impl StatementTree {
    pub fn root(&self) -> &Statement {
        &self.statements[0]
    }

    /// Trimmed text of a 1-based source line (empty for out-of-range).
    pub fn line_text(&self, line: u32) -> &str {
        self.lines
            .get(line as usize - 1)
            .map(|s| s.trim())
            .unwrap_or("")
    }
}

/// Split a qualified API spec `Type.method` at its last dot.
/// A spec without a dot is a bare method name with an empty type part.
pub fn split_api_spec(api: &str) -> (&str, &str) {
    match api.rfind('.') {
        Some(i) => (&api[..i], &api[i + 1..]),
        None => ("", api),
    }
}

/// Parse one method snippet into its statement tree.
///
/// Comments and blank lines never error; unbalanced braces and a missing
/// method body do.
pub fn parse_snippet(snippet: &SourceSnippet) -> Result<StatementTree, ParseError> {
    let toks = lex(&snippet.text);
    check_braces(&toks)?;
    let callsites = scan_callsites(&toks);
    let lines: Vec<String> = snippet.text.split('\n').map(|s| s.to_string()).collect();

    let mut p = Parser { toks: &toks, pos: 0, stmts: Vec::new() };
    p.parse_method()?;

    Ok(StatementTree { statements: p.stmts, lines, callsites })
}

/// All callsites whose method name matches the spec's method part.
///
/// No type resolution is attempted: the type part rides along as metadata.
pub fn find_callsites(tree: &StatementTree, api: &str) -> Vec<ApiCallsite> {
    let (_, method) = split_api_spec(api);
    if method.is_empty() {
        return Vec::new();
    }
    tree.callsites
        .iter()
        .filter(|c| c.method == method)
        .map(|c| ApiCallsite {
            line: c.line,
            receiver: c.receiver.clone(),
            method: c.method.clone(),
            api: api.to_string(),
        })
        .collect()
}

/// Scan a token stream for `recv.method(` patterns.
///
/// Shared with the pruner, which re-discovers callsites from serialized node
/// text where no statement tree exists.
pub fn scan_callsites(toks: &[Token]) -> Vec<RawCallsite> {
    let mut out = Vec::new();
    for j in 0..toks.len() {
        if toks[j].kind != TokKind::Ident
            || j + 1 >= toks.len()
            || !toks[j + 1].is_punct("(")
            || j < 1
            || !toks[j - 1].is_punct(".")
        {
            continue;
        }
        let (receiver, line) = match j.checked_sub(2).map(|k| &toks[k]) {
            Some(prev) if prev.kind == TokKind::Ident => (prev.text.clone(), prev.line),
            _ => (CHAIN_RECEIVER.to_string(), toks[j].line),
        };
        out.push(RawCallsite { line, receiver, method: toks[j].text.clone() });
    }
    out
}

fn check_braces(toks: &[Token]) -> Result<(), ParseError> {
    let mut depth: i64 = 0;
    let mut last_open: Option<&Token> = None;
    for t in toks {
        if t.is_punct("{") {
            depth += 1;
            last_open = Some(t);
        } else if t.is_punct("}") {
            depth -= 1;
            if depth < 0 {
                return Err(ParseError::at(t.line, t.col, "unmatched closing brace"));
            }
        }
    }
    if depth != 0 {
        let t = last_open.expect("positive depth implies an open brace");
        return Err(ParseError::at(t.line, t.col, "unclosed brace"));
    }
    Ok(())
}

// Assignment-operator token texts; compound forms also use their target.
const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

// Keywords that can open a declaration's type position.
const TYPE_KEYWORDS: &[&str] = &[
    "int", "long", "short", "byte", "char", "boolean", "float", "double", "var", "final",
];

/// Token that can be part of a declared type or name.
fn is_type_or_name(t: &Token) -> bool {
    t.is_name() || (t.kind == TokKind::Ident && TYPE_KEYWORDS.contains(&t.text.as_str()))
}

/// Whether a token span looks like `Type name` (optionally with generics or
/// array brackets): at least two type/name tokens, a name last, only type
/// syntax in between, and array brackets empty.
fn is_decl_shape(toks: &[Token]) -> bool {
    if toks.iter().filter(|t| is_type_or_name(t)).count() < 2 {
        return false;
    }
    if !toks.last().is_some_and(|t| t.is_name()) {
        return false;
    }
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokKind::Ident => {
                if !is_type_or_name(t) {
                    return false;
                }
            }
            TokKind::Punct => match t.text.as_str() {
                // ">>"/">>>" close nested generics, lexed as shift operators.
                "<" | ">" | ">>" | ">>>" | "," | "?" | "..." => {}
                "[" => {
                    if !toks.get(i + 1).is_some_and(|n| n.is_punct("]")) {
                        return false;
                    }
                }
                "]" => {}
                _ => return false,
            },
            _ => return false,
        }
    }
    true
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    stmts: Vec<Statement>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err_here(&self, msg: &str) -> ParseError {
        match self.peek().or_else(|| self.toks.last()) {
            Some(t) => ParseError::at(t.line, t.col, msg),
            None => ParseError::at(1, 1, msg),
        }
    }

    fn push(&mut self, stmt: Statement) -> usize {
        self.stmts.push(stmt);
        self.stmts.len() - 1
    }

    fn parse_method(&mut self) -> Result<(), ParseError> {
        // Signature: everything before the first top-level '{'.
        let start = self.pos;
        let mut paren = 0i64;
        loop {
            match self.peek() {
                None => return Err(self.err_here("no method body found")),
                Some(t) if t.is_punct("(") => paren += 1,
                Some(t) if t.is_punct(")") => paren -= 1,
                Some(t) if t.is_punct("{") && paren == 0 => break,
                _ => {}
            }
            self.pos += 1;
        }
        let sig = &self.toks[start..self.pos];
        if sig.is_empty() {
            return Err(self.err_here("expected a method signature before '{'"));
        }
        let defs = signature_params(sig);
        self.push(Statement {
            line: sig[0].line,
            kind: StatementKind::MethodSignature,
            defs,
            uses: BTreeSet::new(),
            parent: None,
        });
        self.bump(); // '{'
        self.parse_block(0)?;
        // Only empty statements may trail the method body.
        while let Some(t) = self.peek() {
            if t.is_punct(";") {
                self.pos += 1;
            } else {
                return Err(self.err_here("unexpected token after method body"));
            }
        }
        Ok(())
    }

    /// Parse statements until the block's closing '}' (consumed).
    fn parse_block(&mut self, parent: usize) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                None => return Err(self.err_here("unclosed block")),
                Some(t) if t.is_punct("}") => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => self.parse_statement(parent)?,
            }
        }
    }

    fn parse_statement(&mut self, parent: usize) -> Result<(), ParseError> {
        let t = match self.peek() {
            Some(t) => t,
            None => return Err(self.err_here("expected a statement")),
        };
        if t.is_punct(";") {
            self.pos += 1;
            return Ok(());
        }
        if t.is_punct("{") {
            // Anonymous block: flatten into the enclosing parent.
            self.pos += 1;
            return self.parse_block(parent);
        }
        if t.kind == TokKind::Ident {
            match t.text.as_str() {
                "if" => return self.parse_if(parent),
                "for" | "while" => return self.parse_loop(parent),
                "do" => return self.parse_do(parent),
                "switch" => return self.parse_switch(parent),
                "try" => return self.parse_try(parent),
                "return" => return self.parse_jump(parent, StatementKind::Return, true),
                "throw" => return self.parse_jump(parent, StatementKind::Other, true),
                "break" | "continue" => {
                    return self.parse_jump(parent, StatementKind::Other, false)
                }
                "synchronized" => return self.parse_synchronized(parent),
                "else" | "catch" | "finally" => {
                    return Err(self.err_here("unrecognizable statement head"))
                }
                _ => {}
            }
        }
        self.parse_simple(parent)
    }

    fn parse_if(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("if token");
        let cond = self.paren_group()?;
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::If,
            defs: BTreeSet::new(),
            uses: idents_of(&cond),
            parent: Some(parent),
        });
        self.parse_body(idx)?;
        while matches!(self.peek(), Some(t) if t.is_ident("else")) {
            self.pos += 1;
            if matches!(self.peek(), Some(t) if t.is_ident("if")) {
                // else-if: its own If node, control-dependent on this one.
                self.parse_if(idx)?;
                break;
            }
            self.parse_body(idx)?;
        }
        Ok(())
    }

    fn parse_loop(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("loop token");
        let header = self.paren_group()?;
        let (defs, uses) = if head.text == "for" {
            for_header_defs_uses(&header)
        } else {
            (BTreeSet::new(), idents_of(&header))
        };
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::Loop,
            defs,
            uses,
            parent: Some(parent),
        });
        self.parse_body(idx)
    }

    fn parse_do(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("do token");
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::Loop,
            defs: BTreeSet::new(),
            uses: BTreeSet::new(),
            parent: Some(parent),
        });
        self.parse_body(idx)?;
        // Trailing `while (cond);` folds into the do statement.
        if matches!(self.peek(), Some(t) if t.is_ident("while")) {
            self.pos += 1;
            let cond = self.paren_group()?;
            let uses = idents_of(&cond);
            self.stmts[idx].uses.extend(uses);
            if matches!(self.peek(), Some(t) if t.is_punct(";")) {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn parse_switch(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("switch token");
        let header = self.paren_group()?;
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::Switch,
            defs: BTreeSet::new(),
            uses: idents_of(&header),
            parent: Some(parent),
        });
        if !matches!(self.peek(), Some(t) if t.is_punct("{")) {
            return Err(self.err_here("expected '{' after switch header"));
        }
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err(self.err_here("unclosed switch block")),
                Some(t) if t.is_punct("}") => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_ident("case") || t.is_ident("default") => {
                    let line = t.line;
                    self.pos += 1;
                    let start = self.pos;
                    while let Some(t) = self.peek() {
                        if t.is_punct(":") || t.is_punct("->") {
                            break;
                        }
                        self.pos += 1;
                    }
                    let label = &self.toks[start..self.pos];
                    self.bump(); // ':' or '->'
                    self.push(Statement {
                        line,
                        kind: StatementKind::Other,
                        defs: BTreeSet::new(),
                        uses: idents_of(label),
                        parent: Some(idx),
                    });
                }
                _ => self.parse_statement(idx)?,
            }
        }
    }

    fn parse_try(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("try token");
        let mut defs = BTreeSet::new();
        let mut uses = BTreeSet::new();
        // try-with-resources header.
        if matches!(self.peek(), Some(t) if t.is_punct("(")) {
            let resources = self.paren_group()?;
            for seg in split_top_level(&resources, ";") {
                let (_, d, u) = classify_simple(seg);
                defs.extend(d);
                uses.extend(u);
            }
        }
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::TryCatch,
            defs,
            uses,
            parent: Some(parent),
        });
        if !matches!(self.peek(), Some(t) if t.is_punct("{")) {
            return Err(self.err_here("expected '{' after try"));
        }
        self.pos += 1;
        self.parse_block(idx)?;
        loop {
            match self.peek() {
                Some(t) if t.is_ident("catch") => {
                    let line = t.line;
                    self.pos += 1;
                    let params = self.paren_group()?;
                    let mut defs = BTreeSet::new();
                    if let Some(name) = params.iter().rev().find(|t| t.is_name()) {
                        defs.insert(name.text.clone());
                    }
                    let cidx = self.push(Statement {
                        line,
                        kind: StatementKind::TryCatch,
                        defs,
                        uses: BTreeSet::new(),
                        parent: Some(idx),
                    });
                    if !matches!(self.peek(), Some(t) if t.is_punct("{")) {
                        return Err(self.err_here("expected '{' after catch"));
                    }
                    self.pos += 1;
                    self.parse_block(cidx)?;
                }
                Some(t) if t.is_ident("finally") => {
                    let line = t.line;
                    self.pos += 1;
                    let fidx = self.push(Statement {
                        line,
                        kind: StatementKind::TryCatch,
                        defs: BTreeSet::new(),
                        uses: BTreeSet::new(),
                        parent: Some(idx),
                    });
                    if !matches!(self.peek(), Some(t) if t.is_punct("{")) {
                        return Err(self.err_here("expected '{' after finally"));
                    }
                    self.pos += 1;
                    self.parse_block(fidx)?;
                }
                _ => return Ok(()),
            }
        }
    }

    fn parse_synchronized(&mut self, parent: usize) -> Result<(), ParseError> {
        let head = self.bump().expect("synchronized token");
        let uses = if matches!(self.peek(), Some(t) if t.is_punct("(")) {
            idents_of(&self.paren_group()?)
        } else {
            BTreeSet::new()
        };
        let idx = self.push(Statement {
            line: head.line,
            kind: StatementKind::Other,
            defs: BTreeSet::new(),
            uses,
            parent: Some(parent),
        });
        self.parse_body(idx)
    }

    fn parse_jump(
        &mut self,
        parent: usize,
        kind: StatementKind,
        with_uses: bool,
    ) -> Result<(), ParseError> {
        let head = self.bump().expect("jump token");
        let body = self.until_semicolon();
        self.push(Statement {
            line: head.line,
            kind,
            defs: BTreeSet::new(),
            uses: if with_uses { idents_of(&body) } else { BTreeSet::new() },
            parent: Some(parent),
        });
        Ok(())
    }

    /// Declaration, assignment, call, or other expression statement.
    fn parse_simple(&mut self, parent: usize) -> Result<(), ParseError> {
        let line = self.peek().expect("nonempty").line;
        let toks = self.until_semicolon_or_block();
        if toks.is_empty() {
            return Err(self.err_here("unrecognizable statement head"));
        }
        let (kind, defs, uses) = classify_simple(&toks);
        let idx = self.push(Statement { line, kind, defs, uses, parent: Some(parent) });
        // Block-opening header (labelled block, local class, ...): keep the
        // header as one statement and parse the block as its children.
        if matches!(self.peek(), Some(t) if t.is_punct("{")) {
            self.pos += 1;
            self.parse_block(idx)?;
        }
        Ok(())
    }

    /// Body of a structural statement: a block or one nested statement.
    fn parse_body(&mut self, parent: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.is_punct("{") => {
                self.pos += 1;
                self.parse_block(parent)
            }
            Some(_) => self.parse_statement(parent),
            None => Err(self.err_here("expected statement body")),
        }
    }

    /// Consume a balanced `( ... )` group, returning the inner tokens.
    fn paren_group(&mut self) -> Result<Vec<Token>, ParseError> {
        if !matches!(self.peek(), Some(t) if t.is_punct("(")) {
            return Err(self.err_here("expected '('"));
        }
        self.pos += 1;
        let start = self.pos;
        let mut depth = 1i64;
        while let Some(t) = self.peek() {
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
                if depth == 0 {
                    let inner = self.toks[start..self.pos].to_vec();
                    self.pos += 1;
                    return Ok(inner);
                }
            }
            self.pos += 1;
        }
        Err(self.err_here("unclosed parenthesis"))
    }

    /// Tokens up to the next ';' at nesting depth zero (';' consumed).
    fn until_semicolon(&mut self) -> Vec<Token> {
        let (toks, _) = self.collect_until(false);
        toks
    }

    /// Like [`Self::until_semicolon`], but also stops before a top-level
    /// '{' or '}' so block headers and unterminated tails survive.
    fn until_semicolon_or_block(&mut self) -> Vec<Token> {
        let (toks, _) = self.collect_until(true);
        toks
    }

    fn collect_until(&mut self, stop_at_block: bool) -> (Vec<Token>, bool) {
        let start = self.pos;
        let mut paren = 0i64;
        let mut brace = 0i64;
        let mut bracket = 0i64;
        while let Some(t) = self.peek() {
            let top = paren == 0 && brace == 0 && bracket == 0;
            if t.is_punct(";") && top {
                let toks = self.toks[start..self.pos].to_vec();
                self.pos += 1;
                return (toks, true);
            }
            if stop_at_block && top && (t.is_punct("{") || t.is_punct("}")) {
                return (self.toks[start..self.pos].to_vec(), false);
            }
            match t.text.as_str() {
                "(" => paren += 1,
                ")" => {
                    if paren == 0 && brace == 0 && bracket == 0 {
                        // Stray closer: end the statement before it.
                        return (self.toks[start..self.pos].to_vec(), false);
                    }
                    paren -= 1;
                }
                "{" => brace += 1,
                "}" => brace -= 1,
                "[" => bracket += 1,
                "]" => bracket -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        (self.toks[start..self.pos].to_vec(), false)
    }
}

/// Non-keyword identifiers that are not member accesses (`.name`).
fn idents_of(toks: &[Token]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (i, t) in toks.iter().enumerate() {
        if t.is_name() && !(i > 0 && toks[i - 1].is_punct(".")) {
            out.insert(t.text.clone());
        }
    }
    out
}

/// Parameter names from a method-signature token span: the last top-level
/// parenthesized group before the body, one name per comma segment.
fn signature_params(sig: &[Token]) -> BTreeSet<String> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut depth = 0i64;
    let mut open = 0usize;
    for (i, t) in sig.iter().enumerate() {
        if t.is_punct("(") {
            if depth == 0 {
                open = i + 1;
            }
            depth += 1;
        } else if t.is_punct(")") {
            depth -= 1;
            if depth == 0 {
                groups.push((open, i));
            }
        }
    }
    let mut defs = BTreeSet::new();
    if let Some(&(a, b)) = groups.last() {
        for seg in split_top_level(&sig[a..b], ",") {
            if let Some(name) = seg.iter().rev().find(|t| t.is_name()) {
                defs.insert(name.text.clone());
            }
        }
    }
    defs
}

/// `for` header: `init; cond; update` or enhanced `decl : expr`.
fn for_header_defs_uses(header: &[Token]) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut defs = BTreeSet::new();
    let mut uses = BTreeSet::new();
    let parts = split_top_level(header, ";");
    if parts.len() > 1 {
        // `init; cond; update`: only the init can declare.
        let (_, d, u) = classify_simple(parts[0]);
        defs.extend(d);
        uses.extend(u);
        for part in &parts[1..] {
            uses.extend(idents_of(part));
        }
    } else if let Some(colon) = header.iter().position(|t| t.is_punct(":")) {
        if let Some(name) = header[..colon].iter().rev().find(|t| t.is_name()) {
            defs.insert(name.text.clone());
        }
        uses.extend(idents_of(&header[colon + 1..]));
    } else {
        uses.extend(idents_of(header));
    }
    (defs, uses)
}

/// Split on a separator at zero paren/brace/bracket depth. Angle brackets
/// are tracked only before the first top-level `=`, which keeps generic
/// argument commas intact without mistaking comparisons for generics.
fn split_top_level<'t>(toks: &'t [Token], sep: &str) -> Vec<&'t [Token]> {
    let mut out = Vec::new();
    let mut depth = 0i64;
    let mut angle = 0i64;
    let mut seen_assign = false;
    let mut start = 0usize;
    for (i, t) in toks.iter().enumerate() {
        match t.text.as_str() {
            "(" | "{" | "[" => depth += 1,
            ")" | "}" | "]" => depth -= 1,
            "<" if !seen_assign => angle += 1,
            ">" if !seen_assign && angle > 0 => angle -= 1,
            ">>" if !seen_assign && angle > 0 => angle = (angle - 2).max(0),
            ">>>" if !seen_assign && angle > 0 => angle = (angle - 3).max(0),
            _ => {
                if t.kind == TokKind::Punct && ASSIGN_OPS.contains(&t.text.as_str()) {
                    seen_assign = true;
                    angle = 0;
                }
            }
        }
        if depth == 0 && angle == 0 && t.kind == TokKind::Punct && t.text == sep {
            out.push(&toks[start..i]);
            start = i + 1;
        }
    }
    out.push(&toks[start..]);
    out.retain(|s| !s.is_empty());
    out
}

/// Classify a simple (non-structural) statement and extract defs/uses.
fn classify_simple(toks: &[Token]) -> (StatementKind, BTreeSet<String>, BTreeSet<String>) {
    let mut kind = None;
    let mut defs = BTreeSet::new();
    let mut uses = BTreeSet::new();
    for (si, seg) in split_top_level(toks, ",").into_iter().enumerate() {
        let assign_pos = top_level_assign(seg);
        match assign_pos {
            Some(k) => {
                let lhs = &seg[..k];
                let rhs = &seg[k + 1..];
                let lhs_names: Vec<&Token> = lhs
                    .iter()
                    .enumerate()
                    .filter(|(i, t)| t.is_name() && !(*i > 0 && lhs[i - 1].is_punct(".")))
                    .map(|(_, t)| t)
                    .collect();
                if si == 0 && is_decl_shape(lhs) {
                    // `Type name = expr`: declared type stays out of uses.
                    kind.get_or_insert(StatementKind::VarDecl);
                    if let Some(name) = lhs_names.last() {
                        defs.insert(name.text.clone());
                    }
                } else {
                    kind.get_or_insert(StatementKind::Assign);
                    let target = if lhs.iter().any(|t| t.is_punct("[")) {
                        lhs_names.first()
                    } else {
                        lhs_names.last()
                    };
                    if let Some(name) = target {
                        defs.insert(name.text.clone());
                        // Compound ops, subscripts, and qualified targets read too.
                        if seg[k].text != "=" || lhs.len() > 1 {
                            uses.extend(idents_of(lhs));
                            if seg[k].text == "=" && !lhs.iter().any(|t| t.is_punct("[")) {
                                uses.remove(&name.text);
                            }
                        }
                    } else {
                        uses.extend(idents_of(lhs));
                    }
                }
                uses.extend(idents_of(rhs));
            }
            None => {
                let names: Vec<&Token> = seg
                    .iter()
                    .enumerate()
                    .filter(|(i, t)| t.is_name() && !(*i > 0 && seg[i - 1].is_punct(".")))
                    .map(|(_, t)| t)
                    .collect();
                let incdec = seg
                    .iter()
                    .any(|t| t.is_punct("++") || t.is_punct("--"));
                if incdec && names.len() == 1 {
                    kind.get_or_insert(StatementKind::Assign);
                    defs.insert(names[0].text.clone());
                    uses.insert(names[0].text.clone());
                } else if seg.iter().any(|t| t.is_punct("(")) {
                    kind.get_or_insert(StatementKind::ExprCall);
                    uses.extend(idents_of(seg));
                } else if si == 0 && is_decl_shape(seg) {
                    // Uninitialized declaration `Type name;`.
                    kind.get_or_insert(StatementKind::VarDecl);
                    if let Some(name) = names.last() {
                        defs.insert(name.text.clone());
                    }
                } else if kind == Some(StatementKind::VarDecl) && names.len() == 1 {
                    // Continued declarator without initializer.
                    defs.insert(names[0].text.clone());
                } else {
                    kind.get_or_insert(StatementKind::Other);
                    uses.extend(idents_of(seg));
                }
            }
        }
    }
    (kind.unwrap_or(StatementKind::Other), defs, uses)
}

/// Position of the first assignment operator at zero nesting depth.
fn top_level_assign(toks: &[Token]) -> Option<usize> {
    let mut depth = 0i64;
    for (i, t) in toks.iter().enumerate() {
        match t.text.as_str() {
            "(" | "{" | "[" => depth += 1,
            ")" | "}" | "]" => depth -= 1,
            _ => {
                if depth == 0
                    && t.kind == TokKind::Punct
                    && ASSIGN_OPS.contains(&t.text.as_str())
                {
                    return Some(i);
                }
            }
        }
    }
    None
}
