//! A small expression language for integrands `f(s, t)`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , ( unary | atom ) | power ;     (* "-x^y" is rejected *)
//! power   = atom , [ "^" , unary ] ;             (* right-associative *)
//! atom    = number | "s" | "t" | call | "(" , expr , ")" ;
//! call    = name , "(" , expr , { "," , expr } , ")" ;
//! name    = "exp" | "log" | "sin" | "cos" | "sqrt" | "abs" | "pow" ;
//! number  = digits , [ "." , [ digits ] ] , [ exponent ] | "." , digits , [ exponent ] ;
//! exponent= ( "e" | "E" ) , [ "+" | "-" ] , digits ;
//! ```
//!
//! Precedence from tightest to loosest is unary minus, `^`, `*` `/`, `+` `-`.
//! Because `-s^2` reads as `(-s)^2` under that ordering but as `-(s^2)` in
//! ordinary notation, a negation whose operand is followed by `^` is a parse
//! error; write `(-s)^2` or `-(s^2)`.
//!
//! [`Expr`]'s `Display` prints the canonical form with minimal parentheses;
//! parsing that string yields a structurally equal tree.

use core::fmt;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::field::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Syntax tree of an integrand. The only free variables are `s` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// The integration variable (time).
    S,
    /// The composed variable (state).
    T,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    WrongArity {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("ambiguous `-x^y`; write `(-x)^y` or `-(x^y)`")]
    AmbiguousNegation,
}

/// A parse failure at a 1-based character column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at column {column}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub column: usize,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        if tokens.len() == 1 {
            return Err(ParseError {
                kind: ParseErrorKind::Empty,
                column: 1,
            });
        }
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        match parser.peek() {
            (Tok::End, _) => Ok(expr),
            (tok, column) => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(tok.describe()),
                column,
            }),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<f64, DomainError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::S => Ok(s),
            Expr::T => Ok(t),
            Expr::Neg(e) => Ok(-e.eval(s, t)?),
            Expr::Binary(op, l, r) => {
                let l = l.eval(s, t)?;
                let r = r.eval(s, t)?;
                match op {
                    BinOp::Add => Ok(l + r),
                    BinOp::Sub => Ok(l - r),
                    BinOp::Mul => Ok(l * r),
                    BinOp::Div => {
                        if r == 0.0 {
                            Err(DomainError::DivisionByZero(l))
                        } else {
                            Ok(l / r)
                        }
                    }
                    BinOp::Pow => pow(l, r),
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].eval(s, t)?;
                match func {
                    Func::Exp => Ok(libm::exp(x)),
                    Func::Log => {
                        if x > 0.0 {
                            Ok(libm::log(x))
                        } else {
                            Err(DomainError::LogNonPositive(x))
                        }
                    }
                    Func::Sin => Ok(libm::sin(x)),
                    Func::Cos => Ok(libm::cos(x)),
                    Func::Sqrt => {
                        if x >= 0.0 {
                            Ok(libm::sqrt(x))
                        } else {
                            Err(DomainError::SqrtNegative(x))
                        }
                    }
                    Func::Abs => Ok(libm::fabs(x)),
                    Func::Pow => pow(x, args[1].eval(s, t)?),
                }
            }
        }
    }

    /// Whether `t` occurs anywhere in the tree.
    pub fn mentions_state(&self) -> bool {
        self.any(&|e| matches!(e, Expr::T))
    }

    /// Whether `s` occurs anywhere in the tree.
    pub fn mentions_time(&self) -> bool {
        self.any(&|e| matches!(e, Expr::S))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Num(_) | Expr::S | Expr::T => false,
            Expr::Neg(e) => e.any(pred),
            Expr::Binary(_, l, r) => l.any(pred) || r.any(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any(pred)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, DomainError> {
    let v = libm::pow(base, exponent);
    if (v.is_nan() && !base.is_nan() && !exponent.is_nan()) || (base == 0.0 && exponent < 0.0) {
        Err(DomainError::PowUndefined { base, exponent })
    } else {
        Ok(v)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

struct Wrap<'a>(&'a Expr, bool);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::S => f.write_str("s"),
            Expr::T => f.write_str("t"),
            // the operand of a negation may not be a power, see module docs
            Expr::Neg(e) => write!(f, "-{}", Wrap(e, e.precedence() < 3 || e.precedence() == 4)),
            Expr::Binary(op, l, r) => {
                let (prec, sym) = match op {
                    BinOp::Add => (1, " + "),
                    BinOp::Sub => (1, " - "),
                    BinOp::Mul => (2, "*"),
                    BinOp::Div => (2, "/"),
                    BinOp::Pow => (4, "^"),
                };
                let (wrap_l, wrap_r) = if *op == BinOp::Pow {
                    (l.precedence() < 5, r.precedence() < 3)
                } else {
                    (l.precedence() < prec, r.precedence() <= prec)
                };
                write!(f, "{}{sym}{}", Wrap(l, wrap_l), Wrap(r, wrap_r))
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => alloc::format!("number `{v}`"),
            Tok::Ident(name) => alloc::format!("identifier `{name}`"),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Caret => "`^`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
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
                let value = text.parse::<f64>().map_err(|_| ParseError {
                    kind: ParseErrorKind::BadNumber(text.clone()),
                    column,
                })?;
                out.push((Tok::Num(value), column));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), column));
                continue;
            }
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(other),
                    column,
                })
            }
        };
        out.push((tok, column));
        i += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> (Tok, usize) {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> (Tok, usize) {
        let tok = self.peek();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(tok: Tok, column: usize) -> ParseError {
        let kind = match tok {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            other => ParseErrorKind::UnexpectedToken(other.describe()),
        };
        ParseError { kind, column }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let (tok, column) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(Self::unexpected(tok, column))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().0 != Tok::Minus {
            return self.power();
        }
        self.bump();
        let operand = if self.peek().0 == Tok::Minus {
            self.unary()?
        } else {
            self.atom()?
        };
        let (next, column) = self.peek();
        if next == Tok::Caret {
            return Err(ParseError {
                kind: ParseErrorKind::AmbiguousNegation,
                column,
            });
        }
        Ok(Expr::Neg(Box::new(operand)))
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().0 == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, column) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "s" => Ok(Expr::S),
                "t" => Ok(Expr::T),
                _ => {
                    let func = Func::lookup(&name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                        column,
                    })?;
                    self.call(func, column)
                }
            },
            other => Err(Self::unexpected(other, column)),
        }
    }

    fn call(&mut self, func: Func, column: usize) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek().0 != Tok::RParen {
            args.push(self.expr()?);
            while self.peek().0 == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen)?;
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::WrongArity {
                    name: func.name(),
                    expected: func.arity(),
                    found: args.len(),
                },
                column,
            });
        }
        Ok(Expr::Call(func, args))
    }
}
