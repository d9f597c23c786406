//! Parser for the expression grammar shared by config files and the CLI:
//! integers, `+ - * / ^`, parentheses, and names resolved by the context
//! (`x`, `y2`, `u1_3`, family symbols, declared radicals).

use crate::error::{Error, Result};
use crate::expr::ctx::Ctx;
use crate::expr::rat::Rat;
use crate::q::{Q, Z};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(Z),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut it = s.chars().peekable();
    while let Some(&c) = it.peek() {
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                it.next();
            }
            '0'..='9' => {
                let mut n = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_digit() {
                        n.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Int(n.parse::<Z>().map_err(|e| Error::Parse(e.to_string()))?));
            }
            'a'..='z' | 'A'..='Z' => {
                let mut n = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        n.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Name(n));
            }
            '+' => {
                it.next();
                out.push(Tok::Plus);
            }
            '-' => {
                it.next();
                out.push(Tok::Minus);
            }
            '*' => {
                it.next();
                out.push(Tok::Star);
            }
            '/' => {
                it.next();
                out.push(Tok::Slash);
            }
            '^' => {
                it.next();
                out.push(Tok::Caret);
            }
            '(' => {
                it.next();
                out.push(Tok::LParen);
            }
            ')' => {
                it.next();
                out.push(Tok::RParen);
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    ctx: &'a Ctx,
    defs: Option<&'a std::collections::BTreeMap<String, Rat>>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Rat> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.add(&rhs, self.ctx)?;
                }
                Tok::Minus => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.sub(&rhs, self.ctx)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Rat> {
        let mut acc = self.factor()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = acc.mul(&rhs, self.ctx)?;
                }
                Tok::Slash => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = acc.div(&rhs, self.ctx)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Rat> {
        let mut sign = 1i64;
        while let Some(t) = self.peek() {
            match t {
                Tok::Minus => {
                    sign = -sign;
                    self.pos += 1;
                }
                Tok::Plus => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        let mut base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let e = self.exponent()?;
            base = base.pow(e, self.ctx)?;
        }
        if sign < 0 {
            base = base.neg();
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i64> {
        let mut neg = false;
        let mut parens = false;
        if let Some(Tok::LParen) = self.peek() {
            parens = true;
            self.pos += 1;
        }
        if let Some(Tok::Minus) = self.peek() {
            neg = true;
            self.pos += 1;
        }
        let n = match self.next() {
            Some(Tok::Int(n)) => n,
            other => return Err(Error::Parse(format!("expected integer exponent, got {other:?}"))),
        };
        if parens {
            match self.next() {
                Some(Tok::RParen) => {}
                other => return Err(Error::Parse(format!("expected `)`, got {other:?}"))),
            }
        }
        let mut e: i64 = n
            .try_into()
            .map_err(|_| Error::Parse("exponent too large".into()))?;
        if neg {
            e = -e;
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Rat> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(Rat::from_q(Q::from_integer(n))),
            Some(Tok::Name(n)) => {
                if let Some(defs) = self.defs {
                    if let Some(e) = defs.get(&n) {
                        return Ok(e.clone());
                    }
                }
                let v = self.ctx.resolve_name(&n)?;
                Ok(Rat::var(v))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    other => Err(Error::Parse(format!("expected `)`, got {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse an expression in the grammar against a context.
pub fn parse(ctx: &Ctx, s: &str) -> Result<Rat> {
    parse_with(ctx, None, s)
}

/// Parse with an auxiliary table of named expressions (config `defs`).
pub fn parse_with(
    ctx: &Ctx,
    defs: Option<&std::collections::BTreeMap<String, Rat>>,
    s: &str,
) -> Result<Rat> {
    let toks = lex(s)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        ctx,
        defs,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input at token {}", p.pos)));
    }
    Ok(e)
}
