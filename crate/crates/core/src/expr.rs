//! Bundle expressions: parsing, printing and evaluation.
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := atom ('*' atom)*
//! atom   := '(' expr ')' | F(r) | L(d [; twist]) | I(r, d [; twist])
//!         | S2(expr) | W2(expr) | Sym(n, expr) | dual(expr) | det(expr) | End(expr)
//! twist  := '1' | (ident ['^' int])+
//! ```
//!
//! Twist identifiers other than `eta1, eta2, eta3, tau` are free generators
//! of `Pic⁰`, declared by first use.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bundle::{end_bundle, det, sym2, sym_n_rank2, wedge2, Bundle, Resolved};
use crate::picard::{AbGroup, GroupElem, PicardClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{0}")]
    Bundle(#[from] crate::bundle::BundleError),
    #[error("{0} expects a bundle, not a determinant class")]
    NotABundle(&'static str),
    #[error("{0} needs an exactly decomposed argument")]
    Unresolved(&'static str),
}

/// A product of generator powers, e.g. `u^2 eta1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Twist {
    pub factors: Vec<(String, i64)>,
}

impl fmt::Display for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(g, a)| if *a == 1 { g.clone() } else { format!("{g}^{a}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Unipotent(i64),
    Line { degree: i64, twist: Twist },
    Indec { rank: i64, degree: i64, twist: Twist },
    Sum(Box<Expr>, Box<Expr>),
    Tensor(Box<Expr>, Box<Expr>),
    Sym2(Box<Expr>),
    Wedge2(Box<Expr>),
    SymN(u32, Box<Expr>),
    Dual(Box<Expr>),
    Det(Box<Expr>),
    End(Box<Expr>),
}

impl Expr {
    fn visit_twists<'a>(&'a self, out: &mut Vec<&'a Twist>) {
        match self {
            Expr::Unipotent(_) => {}
            Expr::Line { twist, .. } | Expr::Indec { twist, .. } => out.push(twist),
            Expr::Sum(a, b) | Expr::Tensor(a, b) => {
                a.visit_twists(out);
                b.visit_twists(out);
            }
            Expr::Sym2(a) | Expr::Wedge2(a) | Expr::SymN(_, a) | Expr::Dual(a) | Expr::Det(a) | Expr::End(a) => {
                a.visit_twists(out)
            }
        }
    }
}

fn twist_suffix(t: &Twist) -> String {
    if t.factors.is_empty() {
        String::new()
    } else {
        format!("; {t}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap_sum = |e: &Expr| match e {
            Expr::Sum(..) => format!("({e})"),
            _ => e.to_string(),
        };
        match self {
            Expr::Unipotent(r) => write!(f, "F({r})"),
            Expr::Line { degree, twist } => write!(f, "L({degree}{})", twist_suffix(twist)),
            Expr::Indec { rank, degree, twist } => write!(f, "I({rank}, {degree}{})", twist_suffix(twist)),
            Expr::Sum(a, b) => write!(f, "{a} + {}", wrap_sum(b)),
            Expr::Tensor(a, b) => {
                let right = match **b {
                    Expr::Sum(..) | Expr::Tensor(..) => format!("({b})"),
                    _ => b.to_string(),
                };
                write!(f, "{} * {right}", wrap_sum(a))
            }
            Expr::Sym2(a) => write!(f, "S2({a})"),
            Expr::Wedge2(a) => write!(f, "W2({a})"),
            Expr::SymN(n, a) => write!(f, "Sym({n}, {a})"),
            Expr::Dual(a) => write!(f, "dual({a})"),
            Expr::Det(a) => write!(f, "det({a})"),
            Expr::End(a) => write!(f, "End({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Open,
    Close,
    Comma,
    Semi,
    Plus,
    Star,
    Caret,
    Minus,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Int(n) => write!(f, "'{n}'"),
            Tok::Open => write!(f, "'('"),
            Tok::Close => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Semi => write!(f, "';'"),
            Tok::Plus => write!(f, "'+'"),
            Tok::Star => write!(f, "'*'"),
            Tok::Caret => write!(f, "'^'"),
            Tok::Minus => write!(f, "'-'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let ch = chars.next();
            if ch == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            ch
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Int(s.parse().map_err(|_| ParseError {
                line: l0,
                col: c0,
                message: format!("integer {s} out of range"),
            })?)
        } else {
            bump(&mut chars);
            match c {
                '(' => Tok::Open,
                ')' => Tok::Close,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '-' => Tok::Minus,
                other => {
                    return Err(ParseError {
                        line: l0,
                        col: c0,
                        message: format!("unexpected character '{other}'"),
                    })
                }
            }
        };
        out.push(Lexed { tok, line: l0, col: c0 });
    }
    out.push(Lexed {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(if neg { -n } else { n })
            }
            other => Err(self.error(format!("expected an integer, found {other}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Plus {
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Sum(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.atom()?;
            lhs = Expr::Tensor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn twist(&mut self) -> Result<Twist, ParseError> {
        if *self.peek() != Tok::Semi {
            return Ok(Twist::default());
        }
        self.next();
        if *self.peek() == Tok::Int(1) {
            self.next();
            return Ok(Twist::default());
        }
        let mut factors = Vec::new();
        while let Tok::Ident(name) = self.peek().clone() {
            self.next();
            let exp = if *self.peek() == Tok::Caret {
                self.next();
                self.int()?
            } else {
                1
            };
            factors.push((name, exp));
        }
        if factors.is_empty() {
            return Err(self.error(format!("expected a twist, found {}", self.peek())));
        }
        Ok(Twist { factors })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let name = match self.peek().clone() {
            Tok::Open => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::Close)?;
                return Ok(e);
            }
            Tok::Ident(name) => name,
            other => return Err(self.error(format!("expected a bundle, found {other}"))),
        };
        let at = self.pos;
        self.next();
        self.expect(Tok::Open)?;
        let e = match name.as_str() {
            "F" => Expr::Unipotent(self.int()?),
            "L" => {
                let degree = self.int()?;
                let twist = self.twist()?;
                Expr::Line { degree, twist }
            }
            "I" => {
                let rank = self.int()?;
                self.expect(Tok::Comma)?;
                let degree = self.int()?;
                let twist = self.twist()?;
                Expr::Indec { rank, degree, twist }
            }
            "S2" => Expr::Sym2(Box::new(self.expr()?)),
            "W2" => Expr::Wedge2(Box::new(self.expr()?)),
            "Sym" => {
                let n = self.int()?;
                let n = u32::try_from(n).map_err(|_| self.error(format!("Sym power must be nonnegative, got {n}")))?;
                self.expect(Tok::Comma)?;
                Expr::SymN(n, Box::new(self.expr()?))
            }
            "dual" => Expr::Dual(Box::new(self.expr()?)),
            "det" => Expr::Det(Box::new(self.expr()?)),
            "End" => Expr::End(Box::new(self.expr()?)),
            _ => {
                self.pos = at;
                return Err(self.error(format!("unknown identifier '{name}'")));
            }
        };
        self.expect(Tok::Close)?;
        Ok(e)
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(format!("unexpected {}", p.peek())));
    }
    Ok(e)
}

const CONSTANTS: [&str; 4] = ["eta1", "eta2", "eta3", "tau"];

/// The Picard group an expression is evaluated in, with its named twists.
#[derive(Debug, Clone)]
pub struct Session {
    group: Arc<AbGroup>,
}

impl Session {
    pub fn new(free_names: Vec<String>) -> Self {
        Session {
            group: AbGroup::standard_named(free_names),
        }
    }

    /// Declares every non-constant twist identifier of `e`, in order of first use.
    pub fn for_expr(e: &Expr) -> Self {
        let mut twists = Vec::new();
        e.visit_twists(&mut twists);
        let mut names: Vec<String> = Vec::new();
        for t in twists {
            for (g, _) in &t.factors {
                if !CONSTANTS.contains(&g.as_str()) && !names.contains(g) {
                    names.push(g.clone());
                }
            }
        }
        Session::new(names)
    }

    pub fn group(&self) -> &Arc<AbGroup> {
        &self.group
    }

    pub fn lookup(&self, name: &str) -> Option<GroupElem> {
        let eta = self.group.two_torsion().expect("standard group has 2-torsion");
        match name {
            "eta1" => Some(eta[1].clone()),
            "eta2" => Some(eta[2].clone()),
            "eta3" => Some(eta[3].clone()),
            "tau" => self.group.three_torsion(),
            _ => self
                .group
                .free_names()
                .iter()
                .position(|n| n == name)
                .map(|i| self.group.generator(i)),
        }
    }

    fn twist(&self, t: &Twist) -> GroupElem {
        t.factors.iter().fold(self.group.zero(), |acc, (g, a)| {
            let x = self.lookup(g).expect("session declares every identifier");
            &acc + &x.scale(*a)
        })
    }

    pub fn eval(&self, e: &Expr) -> Result<Value, EvalError> {
        let bundle = |e: &Expr, op: &'static str| -> Result<Resolved, EvalError> {
            match self.eval(e)? {
                Value::Bundle(b) => Ok(b),
                Value::Class(_) => Err(EvalError::NotABundle(op)),
            }
        };
        let exact = |e: &Expr, op: &'static str| -> Result<Bundle, EvalError> {
            bundle(e, op)?.into_bundle().ok_or(EvalError::Unresolved(op))
        };
        let v = match e {
            Expr::Unipotent(r) => Bundle::unipotent(&self.group, *r)?.into(),
            Expr::Line { degree, twist } => Bundle::line(*degree, self.twist(twist)).into(),
            Expr::Indec { rank, degree, twist } => Bundle::indecomposable(*rank, *degree, self.twist(twist))?.into(),
            Expr::Sum(a, b) => bundle(a, "+")?.direct_sum(&bundle(b, "+")?),
            Expr::Tensor(a, b) => bundle(a, "*")?.tensor(&bundle(b, "*")?),
            Expr::Sym2(a) => sym2(&exact(a, "S2")?),
            Expr::Wedge2(a) => wedge2(&exact(a, "W2")?),
            Expr::SymN(n, a) => sym_n_rank2(&exact(a, "Sym")?, *n)?.into(),
            Expr::Dual(a) => bundle(a, "dual")?.dual(),
            Expr::End(a) => {
                let x = bundle(a, "End")?;
                match x.bundle() {
                    Some(b) => end_bundle(b),
                    None => x.dual().tensor(&x),
                }
            }
            Expr::Det(a) => return Ok(Value::Class(det(&exact(a, "det")?))),
        };
        Ok(Value::Bundle(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bundle(Resolved),
    Class(PicardClass),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bundle(b) => write!(f, "{b}"),
            Value::Class(c) => write!(f, "({}, {})", c.degree, c.cls),
        }
    }
}

/// Parses and evaluates in a fresh session.
pub fn evaluate(src: &str) -> Result<Result<Value, EvalError>, ParseError> {
    let e = parse_expr(src)?;
    Ok(Session::for_expr(&e).eval(&e))
}
