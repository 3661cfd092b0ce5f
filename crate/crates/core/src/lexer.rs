//! Tokenizer shared by the signature and term readers.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(u32),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Bar,
    Arrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`=>`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// Splits `text` into tokens. `%` starts a comment running to end of line.
pub fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, LexError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, col: 1 };

    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };

    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut pos);
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                advance(c, &mut pos);
            }
            continue;
        }
        if is_ident_char(c) {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
                advance(c, &mut pos);
            }
            let tok = if word.bytes().all(|b| b.is_ascii_digit()) {
                match word.parse() {
                    Ok(n) => Tok::Number(n),
                    Err(_) => {
                        return Err(LexError {
                            pos: start,
                            message: format!("number `{word}` out of range"),
                        })
                    }
                }
            } else {
                Tok::Ident(word)
            };
            out.push((tok, start));
            continue;
        }
        chars.next();
        advance(c, &mut pos);
        let tok = match c {
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '|' => Tok::Bar,
            ';' => Tok::Bar,
            '=' if chars.peek() == Some(&'>') => {
                chars.next();
                advance('>', &mut pos);
                Tok::Arrow
            }
            other => {
                return Err(LexError {
                    pos: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, start));
    }
    Ok(out)
}

/// Cursor over a token vector.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(toks: Vec<(Tok, Pos)>, text: &str) -> Self {
        let mut end = Pos { line: 1, col: 1 };
        for c in text.chars() {
            if c == '\n' {
                end.line += 1;
                end.col = 1;
            } else {
                end.col += 1;
            }
        }
        Cursor { toks, at: 0, end }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    pub fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn is_done(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Pos, LexError> {
        let pos = self.pos();
        match self.next() {
            Some((t, p)) if &t == tok => Ok(p),
            Some((t, p)) => Err(LexError {
                pos: p,
                message: format!("expected {tok}, found {t}"),
            }),
            None => Err(LexError {
                pos,
                message: format!("expected {tok}, found end of input"),
            }),
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Pos), LexError> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), p)) => Ok((s, p)),
            Some((t, p)) => Err(LexError {
                pos: p,
                message: format!("expected a name, found {t}"),
            }),
            None => Err(LexError {
                pos,
                message: "expected a name, found end of input".into(),
            }),
        }
    }
}
