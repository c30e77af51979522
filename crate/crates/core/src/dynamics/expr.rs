use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Tanh,
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Tanh => "tanh",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "tanh" => Func::Tanh,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Tanh => x.tanh(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }
    }
}

/// Expression tree over indexed variables. Names live in a [`Scope`];
/// parameters are substituted as constants at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Func(Func, Box<Expr>),
}

/// Variable names (by index) and named constant parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scope {
    names: Vec<String>,
    params: Vec<(String, f64)>,
}

impl Scope {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Scope { names: names.into_iter().map(Into::into).collect(), params: Vec::new() }
    }

    /// `x1..x{n_r}` followed by `z1..z{n_f}`.
    pub fn state(n_r: usize, n_f: usize) -> Self {
        let xs = (1..=n_r).map(|i| format!("x{i}"));
        let zs = (1..=n_f).map(|i| format!("z{i}"));
        Scope::new(xs.chain(zs))
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.push((name.into(), value));
        self
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

// Smart constructors: constant folding and the 0/1 identities, nothing more.

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, 0.0) && !is_const(&b, 0.0) => Expr::Const(0.0),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn pow(base: Expr, n: u32) -> Expr {
    match (&base, n) {
        (_, 0) => Expr::Const(1.0),
        (_, 1) => base,
        (Expr::Const(x), _) => Expr::Const(x.powi(n as i32)),
        _ => Expr::Pow(Box::new(base), n),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn func(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(f.apply(x)),
        other => Expr::Func(f, Box::new(other)),
    }
}

impl Expr {
    pub fn eval(&self, vars: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *vars.get(*i).ok_or_else(|| Error::Eval(format!("variable index {i} out of range")))?,
            Expr::Neg(a) => -a.eval(vars)?,
            Expr::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expr::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expr::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expr::Div(a, b) => {
                let den = b.eval(vars)?;
                if den == 0.0 {
                    return Err(Error::Eval("division by zero".into()));
                }
                a.eval(vars)? / den
            }
            Expr::Pow(a, n) => a.eval(vars)?.powi(*n as i32),
            Expr::Func(f, a) => f.apply(a.eval(vars)?),
        })
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Sorted, deduplicated variable indices appearing in the expression.
    pub fn free_vars(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) {
            match e {
                Expr::Const(_) => {}
                Expr::Var(i) => out.push(*i),
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => walk(a, out),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn display<'a>(&'a self, scope: &'a Scope) -> Display<'a> {
        Display { expr: self, scope }
    }
}

/// Symbolic partial derivative with respect to variable `var`.
pub fn diff_expr(e: &Expr, var: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(diff_expr(a, var)),
        Expr::Add(a, b) => add(diff_expr(a, var), diff_expr(b, var)),
        Expr::Sub(a, b) => sub(diff_expr(a, var), diff_expr(b, var)),
        Expr::Mul(a, b) => add(mul(diff_expr(a, var), (**b).clone()), mul((**a).clone(), diff_expr(b, var))),
        Expr::Div(a, b) => {
            // (a'b − ab') / b²
            let num = sub(mul(diff_expr(a, var), (**b).clone()), mul((**a).clone(), diff_expr(b, var)));
            div(num, pow((**b).clone(), 2))
        }
        Expr::Pow(_, 0) => Expr::Const(0.0),
        Expr::Pow(a, n) => mul(mul(Expr::Const(*n as f64), pow((**a).clone(), n - 1)), diff_expr(a, var)),
        Expr::Func(f, a) => {
            let inner = (**a).clone();
            let outer = match f {
                Func::Tanh => sub(Expr::Const(1.0), pow(func(Func::Tanh, inner), 2)),
                Func::Sin => func(Func::Cos, inner),
                Func::Cos => neg(func(Func::Sin, inner)),
                Func::Exp => func(Func::Exp, inner),
            };
            mul(outer, diff_expr(a, var))
        }
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    scope: &'a Scope,
}

// 1: additive, 2: multiplicative, 3: atoms that can stand as a `base`
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => 0,
        _ => 3,
    }
}

impl Display<'_> {
    fn sub<'b>(&'b self, e: &'b Expr) -> Display<'b> {
        Display { expr: e, scope: self.scope }
    }

    fn write_wrapped(&self, f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
        if wrap {
            write!(f, "({})", self.sub(e))
        } else {
            write!(f, "{}", self.sub(e))
        }
    }

    fn is_atom(e: &Expr) -> bool {
        matches!(e, Expr::Var(_) | Expr::Func(..)) || matches!(e, Expr::Const(c) if precedence(&Expr::Const(*c)) == 3)
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(c) if precedence(self.expr) == 0 => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => match self.scope.names().get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "${i}"),
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.write_wrapped(f, a, !Self::is_atom(a))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self.expr, Expr::Add(..)) { " + " } else { " - " };
                self.write_wrapped(f, a, precedence(a) < 1)?;
                f.write_str(op)?;
                self.write_wrapped(f, b, precedence(b) <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self.expr, Expr::Mul(..)) { " * " } else { " / " };
                self.write_wrapped(f, a, precedence(a) < 2)?;
                f.write_str(op)?;
                self.write_wrapped(f, b, precedence(b) <= 2)
            }
            Expr::Pow(a, n) => {
                self.write_wrapped(f, a, !Self::is_atom(a))?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => write!(f, "{}({})", func.name(), self.sub(a)),
        }
    }
}
