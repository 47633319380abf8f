//! Tokens shared by the model and property grammars.

use std::fmt;

use crate::diag::{Diagnostic, DiagnosticKind, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Dot,
    Star,
    Eq,
    Minus,
    Plus,
    Arrow,
    Bang,
    AndAnd,
    OrOr,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "`{name}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Colon => "`:`",
            Tok::Semi => "`;`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::Star => "`*`",
            Tok::Eq => "`=`",
            Tok::Minus => "`-`",
            Tok::Plus => "`+`",
            Tok::Arrow => "`->`",
            Tok::Bang => "`!`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::EqEq => "`==`",
            Tok::Ne => "`!=`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits `text` into tokens. `#` starts a comment running to end of line.
/// The token stream always ends with [`Tok::Eof`].
pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    while i < bytes.len() {
        let c = bytes[i];
        let span_at = |start: usize, end: usize| Span {
            line,
            column: text[line_start..start].chars().count() + 1,
            start,
            end,
        };
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse().map_err(|_| {
                Diagnostic::new(DiagnosticKind::Syntax, "input", &text[start..i], "integer out of range")
                    .with_span(span_at(start, i))
            })?;
            Tok::Int(n)
        } else {
            let next = bytes.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                (b'-', Some(b'>')) => (Tok::Arrow, 2),
                (b'&', Some(b'&')) => (Tok::AndAnd, 2),
                (b'|', Some(b'|')) => (Tok::OrOr, 2),
                (b'<', Some(b'=')) => (Tok::Le, 2),
                (b'>', Some(b'=')) => (Tok::Ge, 2),
                (b'=', Some(b'=')) => (Tok::EqEq, 2),
                (b'!', Some(b'=')) => (Tok::Ne, 2),
                (b'{', _) => (Tok::LBrace, 1),
                (b'}', _) => (Tok::RBrace, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b'[', _) => (Tok::LBracket, 1),
                (b']', _) => (Tok::RBracket, 1),
                (b':', _) => (Tok::Colon, 1),
                (b';', _) => (Tok::Semi, 1),
                (b',', _) => (Tok::Comma, 1),
                (b'.', _) => (Tok::Dot, 1),
                (b'*', _) => (Tok::Star, 1),
                (b'=', _) => (Tok::Eq, 1),
                (b'-', _) => (Tok::Minus, 1),
                (b'+', _) => (Tok::Plus, 1),
                (b'!', _) => (Tok::Bang, 1),
                (b'<', _) => (Tok::Lt, 1),
                (b'>', _) => (Tok::Gt, 1),
                _ => {
                    let ch = text[i..].chars().next().unwrap_or('?');
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        "input",
                        ch.to_string(),
                        "unexpected character",
                    )
                    .with_span(span_at(start, start + ch.len_utf8())));
                }
            };
            i += len;
            tok
        };
        out.push(Token { tok, span: span_at(start, i) });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            line,
            column: text[line_start..].chars().count() + 1,
            start: text.len(),
            end: text.len(),
        },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        lex(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_minus() {
        assert_eq!(
            kinds("A -go-> B"),
            vec![
                Tok::Ident("A".into()),
                Tok::Minus,
                Tok::Ident("go".into()),
                Tok::Arrow,
                Tok::Ident("B".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = lex("# head\n  x <= 3").unwrap();
        assert_eq!(toks[0].span.line, 2);
        assert_eq!(toks[0].span.column, 3);
        assert_eq!(toks[1].tok, Tok::Le);
        assert_eq!(toks[2].tok, Tok::Int(3));
    }

    #[test]
    fn stray_character() {
        let err = lex("a @").unwrap_err();
        assert_eq!(err.span.unwrap().column, 3);
    }
}
