use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::Pos;
use super::Diagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    /// `p/q` written without surrounding whitespace.
    Rat(BigRational),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Assign,
    Arrow,
    Semi,
    Comma,
    Dot,
    Bang,
    Question,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Bar,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Rat(r) => return write!(f, "`{}/{}`", r.numer(), r.denom()),
            Tok::Str(s) => return write!(f, "{s:?}"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Assign => "=",
            Tok::Arrow => "=>",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::Question => "?",
            Tok::Colon => ":",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bar => "|",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') => {
                    let mut look = cur.chars.clone();
                    look.next();
                    match look.peek() {
                        Some('/') => {
                            while let Some(c) = cur.bump() {
                                if c == '\n' {
                                    break;
                                }
                            }
                        }
                        Some('*') => {
                            let start = cur.pos();
                            cur.bump();
                            cur.bump();
                            let mut closed = false;
                            while let Some(c) = cur.bump() {
                                if c == '*' && cur.peek() == Some('/') {
                                    cur.bump();
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                return Err(Diagnostic::error(start, "unterminated block comment"));
                            }
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            'A'..='Z' | 'a'..='z' | '_' => {
                let mut s = String::from(c);
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            '0'..='9' => {
                let mut digits = String::from(c);
                while let Some(c @ '0'..='9') = cur.peek() {
                    digits.push(c);
                    cur.bump();
                }
                let numer: BigInt = digits.parse().expect("digits");
                // `p/q` with no whitespace is a rational literal
                let mut look = cur.chars.clone();
                if look.next() == Some('/') && matches!(look.peek(), Some('0'..='9')) {
                    cur.bump();
                    let mut den = String::new();
                    while let Some(c @ '0'..='9') = cur.peek() {
                        den.push(c);
                        cur.bump();
                    }
                    let denom: BigInt = den.parse().expect("digits");
                    if denom.is_zero() {
                        return Err(Diagnostic::error(pos, "rational literal with zero denominator"));
                    }
                    Tok::Rat(BigRational::new(numer, denom))
                } else {
                    Tok::Int(numer)
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(Diagnostic::error(pos, "unterminated string literal"))
                        }
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => return Err(Diagnostic::error(pos, "invalid escape in string literal")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '?' => Tok::Question,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '<' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '=' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    Tok::EqEq
                }
                Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                _ => Tok::Assign,
            },
            '!' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ne
                } else {
                    Tok::Bang
                }
            }
            '&' if cur.peek() == Some('&') => {
                cur.bump();
                Tok::AndAnd
            }
            '|' => {
                if cur.peek() == Some('|') {
                    cur.bump();
                    Tok::OrOr
                } else {
                    Tok::Bar
                }
            }
            other => {
                return Err(Diagnostic::error(pos, format!("unexpected character `{other}`")));
            }
        };
        out.push(Token { tok, pos });
    }
}
