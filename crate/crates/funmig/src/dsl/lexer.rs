//! Tokens with positions. Comments run from `--` to the end of the line.

use super::{Diag, Span, Stage};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Integer literal, as written.
    Int(String),
    /// Float literal, as written.
    Float(String),
    Str(String),
    /// `?label`
    Null(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Dot,
    Arrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) | Tok::Float(s) => format!("number `{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Null(l) => format!("`?{l}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", punct(other)),
        }
    }
}

pub fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Semi => ";",
        Tok::Colon => ":",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Arrow => "->",
        Tok::Eq => "=",
        Tok::Ne => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        _ => "",
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(file: usize, text: &str) -> Result<Vec<Token>, Diag> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, col, msg: String| Diag::new(Stage::Syntax, "Syntax", msg, Span { file, line, col });
    while i < chars.len() {
        let c = chars[i];
        let span = Span { file, line, col };
        let start = i;
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance(2, &mut i, &mut col);
                out.push(Token { tok: Tok::Arrow, span });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += (i - start) as u32;
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
                continue;
            }
            '?' => {
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                if i == start + 1 {
                    return Err(err(line, col, "expected a null label after `?`".into()));
                }
                col += (i - start) as u32;
                out.push(Token { tok: Tok::Null(chars[start + 1..i].iter().collect()), span });
                continue;
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                let mut float = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                col += (i - start) as u32;
                let s: String = chars[start..i].iter().collect();
                out.push(Token { tok: if float { Tok::Float(s) } else { Tok::Int(s) }, span });
                continue;
            }
            '"' => {
                i += 1;
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(err(span.line, span.col, "unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            let e = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('r') => '\r',
                                Some('t') => '\t',
                                _ => return Err(err(line, col, "unknown escape in string".into())),
                            };
                            s.push(e);
                            i += 2;
                            col += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), span });
                continue;
            }
            _ => {}
        }
        let two = |a: char| chars.get(i + 1) == Some(&a);
        let (tok, n) = match c {
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '=' => (Tok::Eq, 1),
            '!' if two('=') => (Tok::Ne, 2),
            '<' if two('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if two('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        i += n;
        col += n as u32;
        out.push(Token { tok, span });
    }
    out.push(Token { tok: Tok::Eof, span: Span { file, line, col } });
    Ok(out)
}
