//! Tokenizer for `.fk` sources. Line comments run from `--` to end of line.

use crate::span::Span;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier starting with a lowercase letter.
    Lower(String),
    /// Identifier starting with an uppercase letter.
    Upper(String),
    Int(i64),
    Char(char),
    Str(String),
    /// `data` or `interface`.
    Keyword(&'static str),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Lt,
    Gt,
    Arrow,
    Bar,
    Equals,
    Bang,
    Semi,
    Colon,
    Comma,
    Underscore,
    Plus,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Lower(s) | TokenKind::Upper(s) => write!(f, "{s}"),
            TokenKind::Int(n) => write!(f, "{n}"),
            TokenKind::Char(c) => write!(f, "{c:?}"),
            TokenKind::Str(s) => write!(f, "{s:?}"),
            TokenKind::Keyword(k) => write!(f, "{k}"),
            TokenKind::LBrace => write!(f, "{{"),
            TokenKind::RBrace => write!(f, "}}"),
            TokenKind::LBracket => write!(f, "["),
            TokenKind::RBracket => write!(f, "]"),
            TokenKind::LParen => write!(f, "("),
            TokenKind::RParen => write!(f, ")"),
            TokenKind::Lt => write!(f, "<"),
            TokenKind::Gt => write!(f, ">"),
            TokenKind::Arrow => write!(f, "->"),
            TokenKind::Bar => write!(f, "|"),
            TokenKind::Equals => write!(f, "="),
            TokenKind::Bang => write!(f, "!"),
            TokenKind::Semi => write!(f, ";"),
            TokenKind::Colon => write!(f, ":"),
            TokenKind::Comma => write!(f, ","),
            TokenKind::Underscore => write!(f, "_"),
            TokenKind::Plus => write!(f, "+"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(ch) = c {
                if ch == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let start_line = line;
        let start_col = col;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                // `--` comment or `->` arrow; a bare `-` is illegal.
                bump!();
                match chars.peek() {
                    Some('-') => {
                        while let Some(&c2) = chars.peek() {
                            if c2 == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('>') => {
                        bump!();
                        tokens.push(Token {
                            kind: TokenKind::Arrow,
                            span: Span::new(start_line, start_col, line, col),
                        });
                    }
                    _ => {
                        return Err(LexError {
                            message: "expected `--` comment or `->`".into(),
                            span: Span::point(start_line, start_col),
                        })
                    }
                }
            }
            '\'' => {
                bump!();
                let ch = match bump!() {
                    Some('\\') => match bump!() {
                        Some(e) => unescape(e).ok_or_else(|| LexError {
                            message: format!("unknown escape `\\{e}`"),
                            span: Span::point(start_line, start_col),
                        })?,
                        None => {
                            return Err(LexError {
                                message: "unterminated character literal".into(),
                                span: Span::point(start_line, start_col),
                            })
                        }
                    },
                    Some('\'') => {
                        return Err(LexError {
                            message: "empty character literal".into(),
                            span: Span::point(start_line, start_col),
                        })
                    }
                    Some(c2) => c2,
                    None => {
                        return Err(LexError {
                            message: "unterminated character literal".into(),
                            span: Span::point(start_line, start_col),
                        })
                    }
                };
                match bump!() {
                    Some('\'') => {}
                    _ => {
                        return Err(LexError {
                            message: "unterminated character literal".into(),
                            span: Span::point(start_line, start_col),
                        })
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Char(ch),
                    span: Span::new(start_line, start_col, line, col),
                });
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some(e) => match unescape(e) {
                                Some(ch) => s.push(ch),
                                None => {
                                    return Err(LexError {
                                        message: format!("unknown escape `\\{e}`"),
                                        span: Span::point(start_line, start_col),
                                    })
                                }
                            },
                            None => {
                                return Err(LexError {
                                    message: "unterminated string literal".into(),
                                    span: Span::point(start_line, start_col),
                                })
                            }
                        },
                        Some('\n') | None => {
                            return Err(LexError {
                                message: "unterminated string literal".into(),
                                span: Span::point(start_line, start_col),
                            })
                        }
                        Some(c2) => s.push(c2),
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Str(s),
                    span: Span::new(start_line, start_col, line, col),
                });
            }
            '0'..='9' => {
                let mut n: i64 = 0;
                while let Some(&d) = chars.peek() {
                    if let Some(v) = d.to_digit(10) {
                        n = n * 10 + v as i64;
                        bump!();
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Int(n),
                    span: Span::new(start_line, start_col, line, col),
                });
            }
            c if c.is_alphabetic() => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_alphanumeric() || d == '\'' || d == '_' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let kind = match s.as_str() {
                    "data" => TokenKind::Keyword("data"),
                    "interface" => TokenKind::Keyword("interface"),
                    _ if s.chars().next().unwrap().is_uppercase() => TokenKind::Upper(s),
                    _ => TokenKind::Lower(s),
                };
                tokens.push(Token { kind, span: Span::new(start_line, start_col, line, col) });
            }
            '_' => {
                bump!();
                // `_` may begin an identifier, but a bare underscore is the
                // wildcard pattern.
                if chars.peek().is_some_and(|d| d.is_alphanumeric() || *d == '_') {
                    let mut s = String::from("_");
                    while let Some(&d) = chars.peek() {
                        if d.is_alphanumeric() || d == '\'' || d == '_' {
                            s.push(d);
                            bump!();
                        } else {
                            break;
                        }
                    }
                    tokens.push(Token {
                        kind: TokenKind::Lower(s),
                        span: Span::new(start_line, start_col, line, col),
                    });
                } else {
                    tokens.push(Token {
                        kind: TokenKind::Underscore,
                        span: Span::new(start_line, start_col, line, col),
                    });
                }
            }
            _ => {
                bump!();
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '<' => TokenKind::Lt,
                    '>' => TokenKind::Gt,
                    '|' => TokenKind::Bar,
                    '=' => TokenKind::Equals,
                    '!' => TokenKind::Bang,
                    ';' => TokenKind::Semi,
                    ':' => TokenKind::Colon,
                    ',' => TokenKind::Comma,
                    '+' => TokenKind::Plus,
                    other => {
                        return Err(LexError {
                            message: format!("illegal character `{other}`"),
                            span: Span::point(start_line, start_col),
                        })
                    }
                };
                tokens.push(Token { kind, span: Span::new(start_line, start_col, line, col) });
            }
        }
    }
    Ok(tokens)
}

fn unescape(c: char) -> Option<char> {
    match c {
        'b' => Some('\u{8}'),
        'n' => Some('\n'),
        't' => Some('\t'),
        'r' => Some('\r'),
        '0' => Some('\0'),
        '\\' => Some('\\'),
        '\'' => Some('\''),
        '"' => Some('"'),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        lex(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lex_equation() {
        assert_eq!(
            kinds("f x = x"),
            vec![
                TokenKind::Lower("f".into()),
                TokenKind::Lower("x".into()),
                TokenKind::Equals,
                TokenKind::Lower("x".into()),
            ]
        );
    }

    #[test]
    fn lex_nullary_bang() {
        assert_eq!(kinds("abort!"), vec![TokenKind::Lower("abort".into()), TokenKind::Bang]);
    }

    #[test]
    fn lex_backspace_char() {
        assert_eq!(kinds("'\\b'"), vec![TokenKind::Char('\u{8}')]);
    }

    #[test]
    fn lex_comment_and_string() {
        assert_eq!(
            kinds("-- hello\n\"ab\""),
            vec![TokenKind::Str("ab".into())]
        );
    }

    #[test]
    fn lex_arrow_vs_comment() {
        assert_eq!(kinds("->"), vec![TokenKind::Arrow]);
    }

    #[test]
    fn lex_error_unterminated() {
        assert!(lex("'a").is_err());
        assert!(lex("\"abc").is_err());
    }

    #[test]
    fn spans_track_lines() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[0].span.line, 1);
        assert_eq!(toks[1].span, Span::new(2, 3, 2, 4));
    }
}
