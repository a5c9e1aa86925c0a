//! Closed-form scalar expressions in `x`, `y`: parsing, evaluation, symbolic
//! differentiation with constant folding, canonical printing.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::Point2;

/// Differentiation variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Arctan,
    Abs,
    /// Derivative of `abs`; undefined at 0.
    Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdent { offset, .. } => *offset,
        }
    }
}

/// Evaluation outside the expression's real domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{expr}` at ({x}, {y}): {reason}")]
pub struct EvalError {
    pub expr: String,
    pub reason: &'static str,
    pub x: f64,
    pub y: f64,
}

impl UnOp {
    fn name(self) -> &'static str {
        match self {
            UnOp::Neg => "neg",
            UnOp::Sqrt => "sqrt",
            UnOp::Exp => "exp",
            UnOp::Ln => "ln",
            UnOp::Sin => "sin",
            UnOp::Cos => "cos",
            UnOp::Arctan => "arctan",
            UnOp::Abs => "abs",
            UnOp::Sign => "sign",
        }
    }

    fn from_name(s: &str) -> Option<UnOp> {
        Some(match s {
            "neg" => UnOp::Neg,
            "sqrt" => UnOp::Sqrt,
            "exp" => UnOp::Exp,
            "ln" => UnOp::Ln,
            "sin" => UnOp::Sin,
            "cos" => UnOp::Cos,
            "arctan" => UnOp::Arctan,
            "abs" => UnOp::Abs,
            "sign" => UnOp::Sign,
            _ => return None,
        })
    }

    fn apply(self, a: f64) -> Result<f64, &'static str> {
        Ok(match self {
            UnOp::Neg => -a,
            UnOp::Sqrt => {
                if a < 0.0 {
                    return Err("sqrt of a negative number");
                }
                a.sqrt()
            }
            UnOp::Exp => a.exp(),
            UnOp::Ln => {
                if a <= 0.0 {
                    return Err("ln of a non-positive number");
                }
                a.ln()
            }
            UnOp::Sin => a.sin(),
            UnOp::Cos => a.cos(),
            UnOp::Arctan => a.atan(),
            UnOp::Abs => a.abs(),
            UnOp::Sign => {
                if a == 0.0 {
                    return Err("sign (derivative of abs) at 0");
                }
                a.signum()
            }
        })
    }
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64, &'static str> {
        Ok(match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b == 0.0 {
                    return Err("division by zero");
                }
                a / b
            }
            BinOp::Pow => pow(a, b)?,
        })
    }
}

fn pow(a: f64, b: f64) -> Result<f64, &'static str> {
    if b.fract() == 0.0 && b.abs() < 2f64.powi(31) {
        if a == 0.0 && b < 0.0 {
            return Err("zero to a negative power");
        }
        return Ok(a.powi(b as i32));
    }
    if a < 0.0 {
        return Err("negative base with non-integer exponent");
    }
    if a == 0.0 {
        if b > 0.0 {
            return Ok(0.0);
        }
        return Err("zero to a non-positive power");
    }
    Ok(a.powf(b))
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Var(Var::Y)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    /// Unary node with constant folding.
    pub fn unary(op: UnOp, a: Expr) -> Expr {
        if let Some(v) = a.as_const() {
            if let Ok(r) = op.apply(v) {
                if r.is_finite() {
                    return Expr::Const(r);
                }
            }
        }
        if op == UnOp::Neg {
            if let Expr::Unary(UnOp::Neg, inner) = a {
                return *inner;
            }
        }
        Expr::Unary(op, Box::new(a))
    }

    /// Binary node with constant folding and the trivial identities of 0 and 1.
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        let (ca, cb) = (a.as_const(), b.as_const());
        if let (Some(va), Some(vb)) = (ca, cb) {
            if let Ok(r) = op.apply(va, vb) {
                if r.is_finite() {
                    return Expr::Const(r);
                }
            }
        }
        match op {
            BinOp::Add if ca == Some(0.0) => return b,
            BinOp::Add | BinOp::Sub if cb == Some(0.0) => return a,
            BinOp::Sub if ca == Some(0.0) => return Expr::unary(UnOp::Neg, b),
            BinOp::Mul if ca == Some(0.0) || cb == Some(0.0) => return Expr::Const(0.0),
            BinOp::Mul if ca == Some(1.0) => return b,
            BinOp::Mul | BinOp::Div if cb == Some(1.0) => return a,
            BinOp::Div if ca == Some(0.0) => return Expr::Const(0.0),
            BinOp::Pow if cb == Some(1.0) => return a,
            BinOp::Pow if cb == Some(0.0) => return Expr::Const(1.0),
            _ => {}
        }
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::unary(UnOp::Neg, a)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    /// True when the subtree depends on neither variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Evaluates at `p`; domain violations are errors naming the offending subexpression.
    pub fn eval(&self, p: Point2) -> Result<f64, EvalError> {
        self.eval_xy(p.x, p.y)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let fail = |node: &Expr, reason| EvalError { expr: node.to_string(), reason, x, y };
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(Var::X) => Ok(x),
            Expr::Var(Var::Y) => Ok(y),
            Expr::Unary(op, a) => {
                let va = a.eval_xy(x, y)?;
                op.apply(va).map_err(|r| fail(self, r))
            }
            Expr::Binary(op, a, b) => {
                let va = a.eval_xy(x, y)?;
                let vb = b.eval_xy(x, y)?;
                let r = op.apply(va, vb).map_err(|r| fail(self, r))?;
                if r.is_nan() {
                    return Err(fail(self, "result is not a number"));
                }
                Ok(r)
            }
        }
    }

    /// Exact symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::c(0.0),
            Expr::Var(w) => Expr::c(if *w == v { 1.0 } else { 0.0 }),
            Expr::Unary(op, a) => {
                let da = a.diff(v);
                if da == Expr::Const(0.0) {
                    return Expr::c(0.0);
                }
                let a = (**a).clone();
                let outer = match op {
                    UnOp::Neg => return Expr::neg(da),
                    UnOp::Sqrt => {
                        Expr::div(Expr::c(1.0), Expr::mul(Expr::c(2.0), Expr::unary(UnOp::Sqrt, a)))
                    }
                    UnOp::Exp => Expr::unary(UnOp::Exp, a),
                    UnOp::Ln => Expr::div(Expr::c(1.0), a),
                    UnOp::Sin => Expr::unary(UnOp::Cos, a),
                    UnOp::Cos => Expr::neg(Expr::unary(UnOp::Sin, a)),
                    UnOp::Arctan => {
                        Expr::div(Expr::c(1.0), Expr::add(Expr::c(1.0), Expr::pow(a, Expr::c(2.0))))
                    }
                    UnOp::Abs => Expr::unary(UnOp::Sign, a),
                    UnOp::Sign => return Expr::c(0.0),
                };
                Expr::mul(outer, da)
            }
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.diff(v), b.diff(v));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                        Expr::pow(b, Expr::c(2.0)),
                    ),
                    BinOp::Pow => {
                        if b.is_constant() {
                            // d(a^c) = c a^(c-1) a'
                            let cm1 = Expr::sub(b.clone(), Expr::c(1.0));
                            Expr::mul(Expr::mul(b, Expr::pow(a, cm1)), da)
                        } else {
                            // d(a^b) = a^b (b' ln a + b a'/a)
                            let t1 = Expr::mul(db, Expr::unary(UnOp::Ln, a.clone()));
                            let t2 = Expr::div(Expr::mul(b.clone(), da), a.clone());
                            Expr::mul(Expr::pow(a, b), Expr::add(t1, t2))
                        }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Unary(UnOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// Parses an expression in `x`, `y`.
///
/// Grammar: `+ -` (left) < `* /` (left) < unary `-` < `^` (right); atoms are
/// numbers, `x`, `y`, `pi`, parenthesized expressions and `name(expr)` calls.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Expr::Const(v))
            }
            Err(_) => Err(ParseError::Syntax { offset: start, msg: format!("malformed number `{text}`") }),
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        self.pos = i;
        match name {
            "x" => return Ok(Expr::x()),
            "y" => return Ok(Expr::y()),
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            _ => {}
        }
        match UnOp::from_name(name) {
            Some(op) => {
                if self.peek() != Some(b'(') {
                    return Err(self.err(&format!("expected `(` after `{name}`")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            None => Err(ParseError::UnknownIdent { offset: start, name: name.to_string() }),
        }
    }
}

/// Scalar field with its partial derivatives computed once at construction.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub source: String,
    pub value: Expr,
    pub dx: Expr,
    pub dy: Expr,
}

impl ScalarField {
    pub fn new(value: Expr) -> Self {
        let dx = value.diff(Var::X);
        let dy = value.diff(Var::Y);
        ScalarField { source: value.to_string(), value, dx, dy }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut f = ScalarField::new(parse(text)?);
        f.source = text.trim().to_string();
        Ok(f)
    }

    pub fn constant(v: f64) -> Self {
        ScalarField::new(Expr::c(v))
    }

    pub fn eval(&self, p: Point2) -> Result<f64, EvalError> {
        self.value.eval(p)
    }

    pub fn grad(&self, p: Point2) -> Result<crate::Vec2, EvalError> {
        Ok(crate::Vec2::new(self.dx.eval(p)?, self.dy.eval(p)?))
    }
}

/// Failure to build a divergence-free velocity field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("divergence ≠ 0: div u = {value:e} at ({x}, {y})")]
    Divergence { value: f64, x: f64, y: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Divergence-free planar velocity field.
#[derive(Clone, Debug)]
pub struct VectorField2 {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField2 {
    /// Builds the field, rejecting it if `∂u1/∂x + ∂u2/∂y` exceeds 1e−10 (relative to
    /// the size of the terms) at any of the validation points.
    pub fn new(u1: ScalarField, u2: ScalarField, samples: &[Point2]) -> Result<Self, FieldError> {
        let f = VectorField2 { u1, u2 };
        for &p in samples {
            let a = f.u1.dx.eval(p)?;
            let b = f.u2.dy.eval(p)?;
            let div = a + b;
            if div.abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                return Err(FieldError::Divergence { value: div, x: p.x, y: p.y });
            }
        }
        Ok(f)
    }

    pub fn parse(u1: &str, u2: &str, samples: &[Point2]) -> Result<Self, FieldErrorOrParse> {
        let u1 = ScalarField::parse(u1).map_err(FieldErrorOrParse::Parse)?;
        let u2 = ScalarField::parse(u2).map_err(FieldErrorOrParse::Parse)?;
        VectorField2::new(u1, u2, samples).map_err(FieldErrorOrParse::Field)
    }

    pub fn eval(&self, p: Point2) -> Result<crate::Vec2, EvalError> {
        Ok(crate::Vec2::new(self.u1.eval(p)?, self.u2.eval(p)?))
    }

    /// Jacobian rows `[[∂u1/∂x, ∂u1/∂y], [∂u2/∂x, ∂u2/∂y]]`.
    pub fn jacobian(&self, p: Point2) -> Result<[[f64; 2]; 2], EvalError> {
        Ok([
            [self.u1.dx.eval(p)?, self.u1.dy.eval(p)?],
            [self.u2.dx.eval(p)?, self.u2.dy.eval(p)?],
        ])
    }

    pub fn divergence(&self, p: Point2) -> Result<f64, EvalError> {
        Ok(self.u1.dx.eval(p)? + self.u2.dy.eval(p)?)
    }

    /// Directional derivative `(∇u) d` at `p`.
    pub fn derivative_along(&self, p: Point2, d: crate::Vec2) -> Result<crate::Vec2, EvalError> {
        let j = self.jacobian(p)?;
        Ok(crate::Vec2::new(j[0][0] * d.x + j[0][1] * d.y, j[1][0] * d.x + j[1][1] * d.y))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldErrorOrParse {
    #[error(transparent)]
    Parse(ParseError),
    #[error(transparent)]
    Field(FieldError),
}

/// Right-hand side or any other scalar function of a point.
pub trait PointFn: Send + Sync {
    fn at(&self, p: Point2) -> Result<f64, EvalError>;

    /// Ball `(centre, radius)` outside of which the function vanishes, when known.
    fn support(&self) -> Option<(Point2, f64)> {
        None
    }
}

impl PointFn for ScalarField {
    fn at(&self, p: Point2) -> Result<f64, EvalError> {
        self.eval(p)
    }
}

impl<F> PointFn for F
where
    F: Fn(Point2) -> Result<f64, EvalError> + Send + Sync,
{
    fn at(&self, p: Point2) -> Result<f64, EvalError> {
        self(p)
    }
}

/// Shared handle to a scalar function of a point.
pub type SharedFn = Arc<dyn PointFn>;
