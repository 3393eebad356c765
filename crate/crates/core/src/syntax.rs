//! Lexer and recursive-descent parsers for the concrete CCS and RCCS syntax.

use std::fmt;

use crate::ccs::{Label, Term};
use crate::process::{MemEvent, MemItem, Memory, Process};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.offset, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Num(u32),
    Bang,
    Dot,
    Bar,
    Plus,
    Backslash,
    LParen,
    RParen,
    Lt,
    Gt,
    Comma,
    Star,
    Empty,
    Triangle,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Bang => "`!`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Star => "`*`".into(),
            Tok::Empty => "`{}`".into(),
            Tok::Triangle => "`|>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'a'..=b'z' => {
                while i < bytes.len() && matches!(bytes[i], b'a'..=b'z' | b'0'..=b'9' | b'_') {
                    i += 1;
                }
                out.push((Tok::Name(src[start..i].to_string()), start));
                continue;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = src[start..i]
                    .parse::<u32>()
                    .map_err(|_| ParseError { offset: start, message: "number too large".into() })?;
                out.push((Tok::Num(n), start));
                continue;
            }
            b'!' => Tok::Bang,
            b'.' => Tok::Dot,
            b'|' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::Triangle
                } else {
                    Tok::Bar
                }
            }
            b'+' => Tok::Plus,
            b'\\' => Tok::Backslash,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'<' => Tok::Lt,
            b'>' => Tok::Gt,
            b',' => Tok::Comma,
            b'*' => Tok::Star,
            b'{' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if bytes.get(j) == Some(&b'}') {
                    i = j;
                    Tok::Empty
                } else {
                    return Err(ParseError { offset: start, message: "expected `{}`".into() });
                }
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError { offset: start, message: format!("unexpected character `{ch}`") });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) if n == "tau" => self.error("`tau` is reserved and cannot be used as a name"),
            Tok::Name(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            Ok(Label::Out(self.name()?))
        } else {
            Ok(Label::In(self.name()?))
        }
    }

    fn term_par(&mut self) -> Result<Term, ParseError> {
        let mut left = self.term_sum()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let right = self.term_sum()?;
            left = Term::Par(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term_sum(&mut self) -> Result<Term, ParseError> {
        let first_at = self.offset();
        let first = self.term_res()?;
        if *self.peek() != Tok::Plus {
            return Ok(first);
        }
        let mut summands = Vec::new();
        push_summand(&mut summands, first, first_at)?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let at = self.offset();
            let next = self.term_res()?;
            push_summand(&mut summands, next, at)?;
        }
        Ok(Term::Sum(summands))
    }

    fn term_res(&mut self) -> Result<Term, ParseError> {
        let mut t = self.term_pre()?;
        while *self.peek() == Tok::Backslash {
            self.bump();
            let n = self.name()?;
            t = Term::Res(Box::new(t), n);
        }
        Ok(t)
    }

    fn term_pre(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(0) => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::LParen => {
                self.bump();
                let t = self.term_par()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Name(_) | Tok::Bang => {
                let l = self.label()?;
                let cont = if *self.peek() == Tok::Dot {
                    self.bump();
                    self.term_pre()?
                } else {
                    Term::Nil
                };
                Ok(Term::Sum(vec![(l, cont)]))
            }
            _ => self.unexpected("a term"),
        }
    }

    fn proc_par(&mut self) -> Result<Process, ParseError> {
        let mut left = self.proc_res()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let right = self.proc_res()?;
            left = Process::Par(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn proc_res(&mut self) -> Result<Process, ParseError> {
        let mut p = self.proc_atom()?;
        while *self.peek() == Tok::Backslash {
            self.bump();
            let n = self.name()?;
            p = Process::Res(Box::new(p), n);
        }
        Ok(p)
    }

    fn proc_atom(&mut self) -> Result<Process, ParseError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let p = self.proc_par()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Empty | Tok::Star | Tok::Lt => {
                let mem = self.memory()?;
                self.expect(Tok::Triangle)?;
                let code = self.term_sum()?;
                Ok(Process::Thread(mem, code))
            }
            _ => self.unexpected("a thread or `(`"),
        }
    }

    fn memory(&mut self) -> Result<Memory, ParseError> {
        let mut top_first = Vec::new();
        loop {
            match self.peek() {
                Tok::Empty => {
                    self.bump();
                    break;
                }
                Tok::Star => {
                    self.bump();
                    top_first.push(MemItem::Fork);
                }
                Tok::Lt => {
                    self.bump();
                    let id = match *self.peek() {
                        Tok::Num(n) => {
                            self.bump();
                            n
                        }
                        _ => return self.unexpected("an event identifier"),
                    };
                    self.expect(Tok::Comma)?;
                    let label = self.label()?;
                    self.expect(Tok::Comma)?;
                    let alt = self.term_par()?;
                    self.expect(Tok::Gt)?;
                    top_first.push(MemItem::Event(MemEvent { id, label, alt }));
                }
                _ => return self.unexpected("`<`, `*` or `{}`"),
            }
            self.expect(Tok::Dot)?;
        }
        top_first.reverse();
        Ok(Memory(top_first))
    }
}

fn push_summand(acc: &mut Vec<(Label, Term)>, t: Term, at: usize) -> Result<(), ParseError> {
    match t {
        Term::Sum(s) => {
            acc.extend(s);
            Ok(())
        }
        _ => Err(ParseError { offset: at, message: "unguarded sum: every summand must start with a prefix".into() }),
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term_par()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(src)?;
    let r = p.proc_par()?;
    p.expect_eof()?;
    Ok(r)
}

pub fn parse_label(src: &str) -> Result<Label, ParseError> {
    let mut p = Parser::new(src)?;
    let l = p.label()?;
    p.expect_eof()?;
    Ok(l)
}
