//! Tolerant token scanner for Java method snippets.
//!
//! Comments and blank space are skipped, string/char literals become single
//! opaque tokens, and anything unrecognized degrades to punctuation instead
//! of failing. Statement structure is recovered by the parser on top of this
//! stream.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Token category. `Punct` holds operators and separators, longest-match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    /// 1-based source line of the token's first character.
    pub line: u32,
    /// 1-based column of the token's first character.
    pub col: u32,
}

impl Token {
    pub fn is_punct(&self, s: &str) -> bool {
        self.kind == TokKind::Punct && self.text == s
    }

    pub fn is_ident(&self, s: &str) -> bool {
        self.kind == TokKind::Ident && self.text == s
    }

    /// Identifier that is not a reserved word (a candidate def/use name).
    pub fn is_name(&self) -> bool {
        self.kind == TokKind::Ident && !is_keyword(&self.text)
    }
}

/// Java reserved words plus the literals `null`, `true`, `false`.
pub fn is_keyword(s: &str) -> bool {
    static KEYWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    KEYWORDS
        .get_or_init(|| {
            [
                "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char",
                "class", "const", "continue", "default", "do", "double", "else", "enum",
                "extends", "final", "finally", "float", "for", "goto", "if", "implements",
                "import", "instanceof", "int", "interface", "long", "native", "new", "package",
                "private", "protected", "public", "return", "short", "static", "strictfp",
                "super", "switch", "synchronized", "this", "throw", "throws", "transient",
                "try", "var", "void", "volatile", "while", "null", "true", "false",
            ]
            .into_iter()
            .collect()
        })
        .contains(s)
}

/// Multi-character operators, longest first so greedy matching works.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->", "::",
];

/// Scan `text` into tokens, skipping comments and whitespace.
///
/// Never fails: unterminated literals are closed at end of line, and unknown
/// characters become single-char punctuation.
pub fn lex(text: &str) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if i < bytes.len() {
                    if bytes[i] == b'\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        // Line comment.
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        // Block comment (tolerates a missing terminator).
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
            advance!(2);
            while i < bytes.len() {
                if bytes[i] == b'*' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
                    advance!(2);
                    break;
                }
                advance!(1);
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        // String / char literal: one opaque token, closed at end of line if unterminated.
        if c == '"' || c == '\'' {
            let quote = bytes[i];
            let start = i;
            advance!(1);
            while i < bytes.len() && bytes[i] != quote && bytes[i] != b'\n' {
                if bytes[i] == b'\\' && i + 1 < bytes.len() {
                    advance!(1);
                }
                advance!(1);
            }
            if i < bytes.len() && bytes[i] == quote {
                advance!(1);
            }
            toks.push(Token {
                kind: if quote == b'"' { TokKind::Str } else { TokKind::Char },
                text: text[start..i].to_string(),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < bytes.len() {
                let b = bytes[i] as char;
                if b.is_ascii_alphanumeric() || b == '_' || b == '$' {
                    advance!(1);
                } else {
                    break;
                }
            }
            toks.push(Token {
                kind: TokKind::Ident,
                text: text[start..i].to_string(),
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() {
                let b = bytes[i] as char;
                // Tolerant: hex, underscores, suffixes, exponents with sign.
                if b.is_ascii_alphanumeric() || b == '_' || b == '.' {
                    if b == '.' && i + 1 < bytes.len() && !(bytes[i + 1] as char).is_ascii_digit()
                    {
                        break;
                    }
                    advance!(1);
                } else if (b == '+' || b == '-')
                    && matches!(bytes[i - 1], b'e' | b'E')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1] as char).is_ascii_digit()
                {
                    advance!(1);
                } else {
                    break;
                }
            }
            toks.push(Token {
                kind: TokKind::Number,
                text: text[start..i].to_string(),
                line: tline,
                col: tcol,
            });
            continue;
        }
        // Multi-char operator, longest match.
        let rest = &text[i..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            toks.push(Token {
                kind: TokKind::Punct,
                text: (*op).to_string(),
                line: tline,
                col: tcol,
            });
            advance!(op.len());
            continue;
        }
        toks.push(Token {
            kind: TokKind::Punct,
            text: c.to_string(),
            line: tline,
            col: tcol,
        });
        advance!(1);
    }
    toks
}
