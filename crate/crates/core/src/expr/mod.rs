//! Expression language for Lagrangians, admissible-set predicates and
//! action densities.
//!
//! Variables are `x0..x{n-1}` (base point) and `y0..y{n-1}` (direction).
//! Evaluation is generic over [`Scalar`] so the same tree drives plain
//! values and forward-mode derivatives.

mod parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::autodiff::Scalar;

pub use parse::{parse, parse_with, ParseError, ParseErrorKind, ParseOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Sgn,
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sgn" => Func::Sgn,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn apply<S: Scalar>(self, a: S) -> S {
        match self {
            Func::Sqrt => a.sqrt(),
            Func::Abs => a.abs(),
            Func::Sgn => a.sgn(),
            Func::Exp => a.exp(),
            Func::Log => a.ln(),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
        }
    }
}

/// Abstract syntax tree. Exponents are folded to constants at parse time.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(VarKind, usize),
    /// Named symbol awaiting substitution (fields in action densities).
    Sym(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("expression evaluated to a non-finite value")]
    NonFiniteResult,
    #[error("dimension {0} is not supported (1..={max})", max = crate::autodiff::MAX_DIM)]
    UnsupportedDimension(usize),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn y(i: usize) -> Expr {
        Expr::Var(VarKind::Y, i)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(VarKind::X, i)
    }

    /// Evaluates the tree. Domain violations produce non-finite scalars
    /// rather than errors; use [`Expr::eval_checked`] to turn them into
    /// [`EvalError::NonFiniteResult`].
    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Num(v) => S::from_f64(*v),
            Expr::Var(kind, i) => {
                let slot = match kind {
                    VarKind::X => x.get(*i),
                    VarKind::Y => y.get(*i),
                };
                *slot.ok_or_else(|| EvalError::UnboundVariable(var_name(*kind, *i)))?
            }
            Expr::Sym(name) => return Err(EvalError::UnboundVariable(name.clone())),
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y)?, b.eval(x, y)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(a, p) => a.eval(x, y)?.powf(*p),
            Expr::Call(f, a) => f.apply(a.eval(x, y)?),
        })
    }

    pub fn eval_checked<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, EvalError> {
        let v = self.eval(x, y)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFiniteResult)
        }
    }

    /// Evaluates with variables looked up by name (`"x0"`, `"y3"`, ...).
    pub fn evaluate(&self, env: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        let subst = self.substitute(&|name| env.get(name).map(|v| Expr::Num(*v)));
        let mut free = Vec::new();
        subst.collect_vars(&mut free);
        if let Some((k, i)) = free.first() {
            return Err(EvalError::UnboundVariable(var_name(*k, *i)));
        }
        subst.eval_checked::<f64>(&[], &[])
    }

    /// Replaces `Sym` nodes (and, if the callback answers for them,
    /// variables) by the expressions returned from `lookup`.
    pub fn substitute(&self, lookup: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Sym(name) => lookup(name).unwrap_or_else(|| self.clone()),
            Expr::Var(k, i) => lookup(&var_name(*k, *i)).unwrap_or_else(|| self.clone()),
            Expr::Num(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(lookup))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute(lookup)), Box::new(b.substitute(lookup)))
            }
            Expr::Pow(a, p) => Expr::Pow(Box::new(a.substitute(lookup)), *p),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(lookup))),
        }
    }

    /// Replaces each `y_i` by `Σ_j s[i][j]·y_j` (linear change of basis).
    pub fn linear_substitution(&self, s: &[Vec<f64>]) -> Expr {
        match self {
            Expr::Var(VarKind::Y, i) => {
                let row = &s[*i];
                let mut acc: Option<Expr> = None;
                for (j, c) in row.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let term = Expr::Bin(BinOp::Mul, Box::new(Expr::Num(*c)), Box::new(Expr::y(j)));
                    acc = Some(match acc {
                        None => term,
                        Some(a) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(term)),
                    });
                }
                acc.unwrap_or(Expr::Num(0.0))
            }
            Expr::Var(..) | Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.linear_substitution(s))),
            Expr::Bin(op, a, b) => Expr::Bin(
                *op,
                Box::new(a.linear_substitution(s)),
                Box::new(b.linear_substitution(s)),
            ),
            Expr::Pow(a, p) => Expr::Pow(Box::new(a.linear_substitution(s)), *p),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.linear_substitution(s))),
        }
    }

    /// All variables occurring in the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<(VarKind, usize)> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.sort();
        v.dedup();
        v
    }

    fn collect_vars(&self, out: &mut Vec<(VarKind, usize)>) {
        match self {
            Expr::Var(k, i) => out.push((*k, *i)),
            Expr::Num(_) | Expr::Sym(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Sym(s) => out.push(s.clone()),
                Expr::Num(_) | Expr::Var(..) => {}
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Constant value of the tree if it contains no variables or symbols.
    pub fn const_value(&self) -> Option<f64> {
        if !self.variables().is_empty() || !self.symbols().is_empty() {
            return None;
        }
        self.eval::<f64>(&[], &[]).ok()
    }

    /// Static positive-homogeneity degree in `y`, when it can be decided
    /// syntactically. `None` means "not homogeneous or undecidable".
    pub fn homogeneity_degree(&self) -> Option<f64> {
        match self {
            Expr::Num(_) | Expr::Var(VarKind::X, _) => Some(0.0),
            Expr::Var(VarKind::Y, _) => Some(1.0),
            Expr::Sym(_) => None,
            Expr::Neg(a) => a.homogeneity_degree(),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.homogeneity_degree()?, b.homogeneity_degree()?);
                match op {
                    BinOp::Add | BinOp::Sub => {
                        if (da - db).abs() < 1e-12 {
                            Some(da)
                        } else if is_zero(a) {
                            Some(db)
                        } else if is_zero(b) {
                            Some(da)
                        } else {
                            None
                        }
                    }
                    BinOp::Mul => Some(da + db),
                    BinOp::Div => Some(da - db),
                }
            }
            Expr::Pow(a, p) => Some(a.homogeneity_degree()? * p),
            Expr::Call(f, a) => {
                let d = a.homogeneity_degree()?;
                match f {
                    Func::Sqrt => Some(d / 2.0),
                    Func::Abs => Some(d),
                    Func::Sgn => Some(0.0),
                    Func::Exp | Func::Log | Func::Sin | Func::Cos => (d == 0.0).then_some(0.0),
                }
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

pub(crate) fn var_name(kind: VarKind, i: usize) -> String {
    match kind {
        VarKind::X => format!("x{i}"),
        VarKind::Y => format!("y{i}"),
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{v}")
    } else {
        // Debug formatting of f64 is the shortest representation that round-trips.
        write!(f, "{v:?}")
    }
}

/// Binding strength as seen by the parser: sums, products, unary minus,
/// powers, atoms.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(v) if v.is_sign_negative() => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Pretty-printer whose output parses back to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(*v, f),
            Expr::Var(k, i) => write!(f, "{}", var_name(*k, *i)),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                fmt_at(a, 3, f)
            }
            Expr::Bin(op, a, b) => {
                let level = precedence(self);
                fmt_at(a, level, f)?;
                write!(f, " {} ", op.symbol())?;
                fmt_at(b, level + 1, f)
            }
            Expr::Pow(a, p) => {
                fmt_at(a, 5, f)?;
                f.write_str("^")?;
                fmt_num(*p, f)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
