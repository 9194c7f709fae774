//! Recursive-descent parser.
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := unary (('*'|'/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := '-'? (number | '(' expr ')')      (must fold to a constant)
//! atom     := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, Func, VarKind};

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<String>, found: String },
    UnknownIdentifier(String),
    Arity { function: String, expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// 1-based line.
    pub line: usize,
    /// 1-based column (in characters).
    pub column: usize,
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self.kind {
            ParseErrorKind::Syntax { .. } => "SyntaxError",
            ParseErrorKind::UnknownIdentifier(_) => "UnknownIdentifier",
            ParseErrorKind::Arity { .. } => "ArityError",
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error: expected {}, found {found}", expected.join(" or "))
            }
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::Arity { function, expected, found } => {
                write!(f, "`{function}` takes {expected} argument(s), got {found}")
            }
        }
    }
}

/// Parser configuration: optional dimension bound on variable indices and
/// extra symbol names accepted as [`Expr::Sym`].
#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub dim: Option<usize>,
    pub symbols: Vec<String>,
}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    parse_with(source, &ParseOptions::default())
}

pub fn parse_with(source: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0, depth: 0, binary: 0, opts };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        _ => Err(p.unexpected(&["operator", "end of input"])),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let v: f64 = text.parse().map_err(|_| syntax(tl, tc, &["number"], &text))?;
            if !v.is_finite() {
                return Err(syntax(tl, tc, &["finite number"], &text));
            }
            out.push(Token { tok: Tok::Num(v), line: tl, column: tc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: tl, column: tc });
            continue;
        }
        if "+-*/^(),".contains(c) {
            out.push(Token { tok: Tok::Op(c), line: tl, column: tc });
            i += 1;
            col += 1;
            continue;
        }
        return Err(syntax(tl, tc, &["expression"], &format!("`{c}`")));
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

fn syntax(line: usize, column: usize, expected: &[&str], found: &str) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.to_string(),
        },
        line,
        column,
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    binary: usize,
    opts: &'a ParseOptions,
}

const MAX_DEPTH: usize = 256;
const MAX_BINARY: usize = 2000;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (l, c) = self.here();
        syntax(l, c, expected, &self.peek().to_string())
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{op}`")]))
        }
    }

    fn count_binary(&mut self) -> Result<(), ParseError> {
        self.binary += 1;
        if self.binary > MAX_BINARY {
            Err(self.unexpected(&["shorter expression"]))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            self.count_binary()?;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            self.count_binary()?;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(self.unexpected(&["shallower nesting"]));
        }
        self.depth += 1;
        let out = if *self.peek() == Tok::Op('-') {
            self.bump();
            self.unary().map(|e| Expr::Neg(Box::new(e)))
        } else {
            self.power()
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let (l, c) = self.here();
        let negate = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let exponent = match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                v
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_op(')')?;
                e.const_value().ok_or_else(|| syntax(l, c, &["constant exponent"], &e.to_string()))?
            }
            _ => return Err(self.unexpected(&["number", "`(`"])),
        };
        Ok(Expr::Pow(Box::new(base), if negate { -exponent } else { exponent }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (line, column) = self.here();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Op(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect_op(')')?;
                    self.call(&name, args, line, column)
                } else {
                    self.identifier(&name, line, column)
                }
            }
            _ => Err(self.unexpected(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn call(&self, name: &str, mut args: Vec<Expr>, line: usize, column: usize) -> Result<Expr, ParseError> {
        let arity = |expected: usize| ParseError {
            kind: ParseErrorKind::Arity { function: name.to_string(), expected, found: args.len() },
            line,
            column,
        };
        if name == "pow" {
            if args.len() != 2 {
                return Err(arity(2));
            }
            let exponent = args.pop().unwrap();
            let base = args.pop().unwrap();
            let p = exponent
                .const_value()
                .ok_or_else(|| syntax(line, column, &["constant exponent"], &exponent.to_string()))?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError { kind: ParseErrorKind::UnknownIdentifier(name.to_string()), line, column });
        };
        if args.len() != 1 {
            return Err(arity(1));
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }

    fn identifier(&self, name: &str, line: usize, column: usize) -> Result<Expr, ParseError> {
        let unknown = || ParseError { kind: ParseErrorKind::UnknownIdentifier(name.to_string()), line, column };
        if self.opts.symbols.iter().any(|s| s == name) {
            return Ok(Expr::Sym(name.to_string()));
        }
        let kind = match name.as_bytes().first() {
            Some(b'x') => VarKind::X,
            Some(b'y') => VarKind::Y,
            _ => return Err(unknown()),
        };
        let digits = &name[1..];
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0')) {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        if let Some(n) = self.opts.dim {
            if index >= n {
                return Err(unknown());
            }
        }
        Ok(Expr::Var(kind, index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_derivation() {
        let e = parse("y0^2 - y1^2").unwrap();
        let expected = Expr::Bin(
            BinOp::Sub,
            Box::new(Expr::Pow(Box::new(Expr::y(0)), 2.0)),
            Box::new(Expr::Pow(Box::new(Expr::y(1)), 2.0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn berwald_moor_nodes() {
        let e = parse("sgn(y0*y1*y2*y3)*sqrt(abs(y0*y1*y2*y3))").unwrap();
        let Expr::Bin(BinOp::Mul, a, b) = e else { panic!() };
        assert!(matches!(*a, Expr::Call(Func::Sgn, _)));
        let Expr::Call(Func::Sqrt, inner) = *b else { panic!() };
        assert!(matches!(*inner, Expr::Call(Func::Abs, _)));
    }

    #[test]
    fn incomplete_expression_reports_column() {
        let err = parse("y0 +").unwrap_err();
        assert_eq!(err.code(), "SyntaxError");
        assert_eq!((err.line, err.column), (1, 5));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(parse("-y0^2").unwrap(), Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::y(0)), 2.0))));
    }

    #[test]
    fn errors() {
        assert_eq!(parse("foo(y0)").unwrap_err().code(), "UnknownIdentifier");
        assert_eq!(parse("z1 + 1").unwrap_err().code(), "UnknownIdentifier");
        assert_eq!(parse("sqrt(y0, y1)").unwrap_err().code(), "ArityError");
        assert_eq!(parse("pow(y0)").unwrap_err().code(), "ArityError");
        assert_eq!(parse("y0^y1").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse("pow(y0, x1)").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse("1e999").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse("(y0").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse("y0 y1").unwrap_err().code(), "SyntaxError");
        assert_eq!(parse("y0 # 2").unwrap_err().code(), "SyntaxError");
        let opts = ParseOptions { dim: Some(2), symbols: vec![] };
        assert_eq!(parse_with("y2", &opts).unwrap_err().code(), "UnknownIdentifier");
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("{}y0{}", "(".repeat(10_000), ")".repeat(10_000));
        assert_eq!(parse(&src).unwrap_err().code(), "SyntaxError");
        assert!(parse(&"-".repeat(10_000)).is_err());
    }

    #[test]
    fn multiline_positions() {
        let err = parse("y0 +\n  * y1").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn constant_exponents_fold() {
        assert_eq!(parse("y0^(1/2)").unwrap(), Expr::Pow(Box::new(Expr::y(0)), 0.5));
        assert_eq!(parse("y0^-2").unwrap(), Expr::Pow(Box::new(Expr::y(0)), -2.0));
        assert_eq!(parse("pow(y0, 2*2)").unwrap(), Expr::Pow(Box::new(Expr::y(0)), 4.0));
        assert_eq!(parse(".5e1").unwrap(), Expr::Num(5.0));
    }

    #[test]
    fn symbols_are_accepted_when_declared() {
        let opts = ParseOptions { dim: None, symbols: vec!["q".into()] };
        assert_eq!(parse_with("q*y0", &opts).unwrap().symbols(), vec!["q".to_string()]);
    }
}
