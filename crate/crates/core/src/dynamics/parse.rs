//! Recursive-descent parser for the expression language:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Function names are `tanh`, `sin`, `cos` and `exp`.

use super::expr::{self, Expr, Func, Scope};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u32),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the token starting at the current position and its offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
                end += 1;
            }
            // exponent part, only when followed by digits
            if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                let mut k = end + 1;
                if k < self.src.len() && (self.src[k] == b'+' || self.src[k] == b'-') {
                    k += 1;
                }
                if k < self.src.len() && self.src[k].is_ascii_digit() {
                    while k < self.src.len() && self.src[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = std::str::from_utf8(&self.src[start..end]).expect("ascii");
            self.pos = end;
            if text.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(i) = text.parse::<u32>() {
                    return Ok((Tok::Int(i), start));
                }
            }
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), start))
                .map_err(|_| Error::Parse { position: start, expected: "number".into() });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.src.len() && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_') {
                end += 1;
            }
            let name = std::str::from_utf8(&self.src[start..end]).expect("ascii").to_string();
            self.pos = end;
            return Ok((Tok::Ident(name), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        Err(Error::Parse { position: start, expected: "number, identifier, operator or parenthesis".into() })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse { position: self.at, expected: expected.into() })
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.tok == Tok::Op(op) {
            self.bump()
        } else {
            self.fail(&format!("'{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.bump()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.bump()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Op('/') => {
                    self.bump()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump()?;
        match self.tok {
            Tok::Int(n) => {
                self.bump()?;
                Ok(Expr::Pow(Box::new(base), n))
            }
            _ => self.fail("integer exponent"),
        }
    }

    fn base(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Int(i) => {
                self.bump()?;
                Ok(Expr::Const(i as f64))
            }
            Tok::Op('-') => {
                self.bump()?;
                Ok(match self.base()? {
                    Expr::Const(c) => Expr::Const(-c),
                    other => Expr::Neg(Box::new(other)),
                })
            }
            Tok::Op('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::Op('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(Error::Parse {
                            position: at,
                            expected: "function name (tanh, sin, cos, exp)".into(),
                        });
                    };
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::Func(f, Box::new(arg)));
                }
                if let Some(i) = self.scope.var_index(&name) {
                    Ok(Expr::Var(i))
                } else if let Some(v) = self.scope.param(&name) {
                    Ok(Expr::Const(v))
                } else {
                    Err(Error::Parse {
                        position: at,
                        expected: format!("declared variable or parameter, found '{name}'"),
                    })
                }
            }
            _ => self.fail("number, identifier, '(' or '-'"),
        }
    }
}

/// Parses `text` against the variables and parameters of `scope`.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr> {
    let mut p = Parser { lexer: Lexer { src: text.as_bytes(), pos: 0 }, tok: Tok::End, at: 0, scope };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.fail("operator or end of input");
    }
    Ok(e)
}

/// Parses and then applies the same folding the differentiator uses.
pub fn parse_simplified(text: &str, scope: &Scope) -> Result<Expr> {
    parse_expr(text, scope).map(simplify)
}

pub fn simplify(e: Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e,
        Expr::Neg(a) => expr::neg(simplify(*a)),
        Expr::Add(a, b) => expr::add(simplify(*a), simplify(*b)),
        Expr::Sub(a, b) => expr::sub(simplify(*a), simplify(*b)),
        Expr::Mul(a, b) => expr::mul(simplify(*a), simplify(*b)),
        Expr::Div(a, b) => expr::div(simplify(*a), simplify(*b)),
        Expr::Pow(a, n) => expr::pow(simplify(*a), n),
        Expr::Func(f, a) => expr::func(f, simplify(*a)),
    }
}
