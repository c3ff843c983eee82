//! Lexer for the surface language.
//!
//! Identifiers follow `[A-Za-z_][A-Za-z0-9_'?-]*`, so names such as
//! `aa?` and `head-a?` are single tokens; `[]` is also lexed as an
//! identifier so it can serve as a constructor name. Numerals are
//! decimal, strings are double-quoted with `\" \\ \n \t` escapes, and
//! `--` starts a comment running to the end of the line.

use std::fmt;

/// Operator tokens usable as infix binary constructors.
pub const OPERATORS: &[&str] = &["::", "+", "|", "&", "\\/", "/\\", "*"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    /// One of [`OPERATORS`].
    Op(String),
    Arrow,
    Colon,
    Comma,
    Dot,
    Semi,
    Eq,
    Tilde,
    At,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{}`", s),
            Tok::Num(n) => write!(f, "`{}`", n),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::Op(s) => write!(f, "`{}`", s),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::At => write!(f, "`@`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

/// A token with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// A lexing failure at a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '?' | '-')
}

/// Tokenize a complete source text. The result always ends with [`Tok::Eof`].
pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        // Skip whitespace and comments.
        loop {
            match chars.peek() {
                Some(c) if c.is_whitespace() => {
                    bump!();
                }
                Some('-') => {
                    // `--` comment; a lone `-` can only begin `->`.
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek() == Some(&'-') {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }

        let (tl, tc) = (line, col);
        let Some(&c) = chars.peek() else {
            out.push(Token { tok: Tok::Eof, line: tl, col: tc });
            return Ok(out);
        };

        let tok = if is_ident_start(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if is_ident_continue(c) {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            match s.parse::<u64>() {
                Ok(n) => Tok::Num(n),
                Err(_) => {
                    return Err(LexError {
                        line: tl,
                        col: tc,
                        msg: format!("numeral `{}` is too large", s),
                    })
                }
            }
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    None | Some('\n') => {
                        return Err(LexError {
                            line: tl,
                            col: tc,
                            msg: "unterminated string literal".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match bump!() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        other => {
                            return Err(LexError {
                                line: tl,
                                col: tc,
                                msg: format!(
                                    "unknown escape `\\{}` in string literal",
                                    other.map(String::from).unwrap_or_default()
                                ),
                            })
                        }
                    },
                    Some(c) => s.push(c),
                }
            }
            Tok::Str(s)
        } else {
            bump!();
            match c {
                '[' => {
                    if chars.peek() == Some(&']') {
                        bump!();
                        Tok::Ident("[]".into())
                    } else {
                        return Err(LexError {
                            line: tl,
                            col: tc,
                            msg: "`[` is only valid in the constructor name `[]`".into(),
                        });
                    }
                }
                ':' => {
                    if chars.peek() == Some(&':') {
                        bump!();
                        Tok::Op("::".into())
                    } else {
                        Tok::Colon
                    }
                }
                '-' => {
                    if chars.peek() == Some(&'>') {
                        bump!();
                        Tok::Arrow
                    } else {
                        return Err(LexError {
                            line: tl,
                            col: tc,
                            msg: "lone `-` (did you mean `->` or a `--` comment?)".into(),
                        });
                    }
                }
                '\\' => {
                    if chars.peek() == Some(&'/') {
                        bump!();
                        Tok::Op("\\/".into())
                    } else {
                        return Err(LexError {
                            line: tl,
                            col: tc,
                            msg: "lone `\\` (did you mean the operator `\\/`?)".into(),
                        });
                    }
                }
                '/' => {
                    if chars.peek() == Some(&'\\') {
                        bump!();
                        Tok::Op("/\\".into())
                    } else {
                        return Err(LexError {
                            line: tl,
                            col: tc,
                            msg: "lone `/` (did you mean the operator `/\\`?)".into(),
                        });
                    }
                }
                '+' => Tok::Op("+".into()),
                '|' => Tok::Op("|".into()),
                '&' => Tok::Op("&".into()),
                '*' => Tok::Op("*".into()),
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                ';' => Tok::Semi,
                '=' => Tok::Eq,
                '~' => Tok::Tilde,
                '@' => Tok::At,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                other => {
                    return Err(LexError {
                        line: tl,
                        col: tc,
                        msg: format!("unexpected character `{}`", other),
                    })
                }
            }
        };
        out.push(Token { tok, line: tl, col: tc });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_identifier_flavours() {
        assert_eq!(
            toks("aa? head-a? x' _u S2 []"),
            vec![
                Tok::Ident("aa?".into()),
                Tok::Ident("head-a?".into()),
                Tok::Ident("x'".into()),
                Tok::Ident("_u".into()),
                Tok::Ident("S2".into()),
                Tok::Ident("[]".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn lexes_operators_and_punctuation() {
        assert_eq!(
            toks(":: : -> \\/ /\\ + | & * < > ^ @ ~"),
            vec![
                Tok::Op("::".into()),
                Tok::Colon,
                Tok::Arrow,
                Tok::Op("\\/".into()),
                Tok::Op("/\\".into()),
                Tok::Op("+".into()),
                Tok::Op("|".into()),
                Tok::Op("&".into()),
                Tok::Op("*".into()),
                Tok::Lt,
                Tok::Gt,
                Tok::Caret,
                Tok::At,
                Tok::Tilde,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn lexes_strings_numbers_comments() {
        assert_eq!(
            toks("name(\"al\\\"ice\") -- trailing note\n42"),
            vec![
                Tok::Ident("name".into()),
                Tok::LParen,
                Tok::Str("al\"ice".into()),
                Tok::RParen,
                Tok::Num(42),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let ts = lex("ab\n  cd").unwrap();
        assert_eq!((ts[0].line, ts[0].col), (1, 1));
        assert_eq!((ts[1].line, ts[1].col), (2, 3));
    }

    #[test]
    fn reports_bad_input() {
        let e = lex("a $ b").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
        let e = lex("\"oops").unwrap_err();
        assert!(e.msg.contains("unterminated"));
    }
}
