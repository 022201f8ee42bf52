//! Scalars that stay exact while their inputs are rational.
//!
//! Every [`Real`] carries an `f64` approximation. Values built from decimal or
//! rational literals additionally carry an exact [`Ratio`], and arithmetic keeps
//! it as long as every operand is exact and nothing overflows. Comparisons use
//! the exact value when both sides have one and fall back to a slack otherwise.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

pub type Rational = Ratio<i128>;

/// Slack used for comparisons once exactness is lost.
pub const INEXACT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct Real {
    approx: f64,
    exact: Option<Rational>,
}

fn ratio_to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

impl Real {
    pub const ZERO: Real = Real {
        approx: 0.0,
        exact: None,
    };

    pub fn from_f64(x: f64) -> Self {
        Real {
            approx: x,
            exact: None,
        }
    }

    pub fn int(n: i64) -> Self {
        Self::exact(Rational::from_integer(n as i128))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Self::exact(Rational::new(numer as i128, denom as i128))
    }

    pub fn exact(q: Rational) -> Self {
        Real {
            approx: ratio_to_f64(&q),
            exact: Some(q),
        }
    }

    pub fn value(&self) -> f64 {
        self.approx
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Integer power; exact whenever the base is.
    pub fn powi(self, k: i32) -> Self {
        let exact = self.exact.and_then(|q| {
            if q.is_zero() && k < 0 {
                return None;
            }
            let mut acc = Rational::one();
            let base = if k < 0 { q.recip() } else { q };
            for _ in 0..k.unsigned_abs() {
                acc = acc.checked_mul(&base)?;
            }
            Some(acc)
        });
        match exact {
            Some(q) => Real::exact(q),
            None => Real::from_f64(self.approx.powi(k)),
        }
    }

    /// Real power. Exact only for integral exponents of exact bases.
    pub fn powf(self, s: f64) -> Self {
        if s.fract() == 0.0 && s.abs() <= 64.0 && self.exact.is_some() {
            return self.powi(s as i32);
        }
        Real::from_f64(self.approx.powf(s))
    }

    pub fn sqrt(self) -> Self {
        if let Some(q) = self.exact {
            if !q.is_negative() {
                let n = isqrt(*q.numer());
                let d = isqrt(*q.denom());
                if let (Some(n), Some(d)) = (n, d) {
                    return Real::exact(Rational::new(n, d));
                }
            }
        }
        Real::from_f64(self.approx.sqrt())
    }

    pub fn abs(self) -> Self {
        if self.approx < 0.0 || self.exact.is_some_and(|q| q.is_negative()) {
            -self
        } else {
            self
        }
    }

    /// Three-way comparison; `None` when the values are within `slack` but not
    /// both exact.
    pub fn compare(&self, other: &Real, slack: f64) -> Option<Ordering> {
        if let (Some(a), Some(b)) = (self.exact, other.exact) {
            return Some(a.cmp(&b));
        }
        let diff = self.approx - other.approx;
        if diff.abs() <= slack {
            None
        } else if diff < 0.0 {
            Some(Ordering::Less)
        } else {
            Some(Ordering::Greater)
        }
    }

    /// `self ≤ other`, exactly when possible, otherwise within `slack`.
    pub fn le_within(&self, other: &Real, slack: f64) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a <= b,
            _ => self.approx <= other.approx + slack,
        }
    }

    /// Equality, exactly when possible, otherwise within `slack`.
    pub fn eq_within(&self, other: &Real, slack: f64) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => (self.approx - other.approx).abs() <= slack,
        }
    }

    /// Parses a literal or arithmetic expression without free variables.
    pub fn parse(text: &str) -> Result<Real, String> {
        eval_expr(text, &HashMap::new())
    }

    /// Converts a finite `f64` using its shortest decimal representation, so
    /// `0.1` becomes exactly 1/10.
    pub fn from_f64_literal(x: f64) -> Self {
        parse_decimal(&format!("{x}")).unwrap_or_else(|| Real::from_f64(x))
    }
}

fn isqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as i128;
    (r.saturating_sub(1)..=r + 1).find(|&c| c.checked_mul(c) == Some(n))
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Some(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            None => write!(f, "{}", self.approx),
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.approx == other.approx,
        }
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real::from_f64(x)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident, $op:tt) => {
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                let exact = match (self.exact, rhs.exact) {
                    (Some(a), Some(b)) => a.$checked(&b),
                    _ => None,
                };
                match exact {
                    Some(q) => Real::exact(q),
                    None => Real::from_f64(self.approx $op rhs.approx),
                }
            }
        }
    };
}

binop!(Add, add, checked_add, +);
binop!(Sub, sub, checked_sub, -);
binop!(Mul, mul, checked_mul, *);

impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        let exact = match (self.exact, rhs.exact) {
            (Some(a), Some(b)) if !b.is_zero() => a.checked_div(&b),
            _ => None,
        };
        match exact {
            Some(q) => Real::exact(q),
            None => Real::from_f64(self.approx / rhs.approx),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            approx: -self.approx,
            exact: self.exact.map(|q| -q),
        }
    }
}

fn parse_decimal(text: &str) -> Option<Real> {
    let approx: f64 = text.parse().ok()?;
    if !approx.is_finite() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let exact = (|| {
        let mut numer: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        if negative {
            numer = -numer;
        }
        let scale = exponent - frac_part.len() as i32;
        let ten = Rational::from_integer(10);
        let mut q = Rational::from_integer(numer);
        for _ in 0..scale.unsigned_abs() {
            q = if scale > 0 {
                q.checked_mul(&ten)?
            } else {
                q.checked_div(&ten)?
            };
        }
        Some(q)
    })();
    Some(Real { approx, exact })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // scientific exponent, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            tokens.push(Token::Num(chars[start..i].iter().collect()));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character '{c}' in \"{text}\""));
        }
    }
    Ok(tokens)
}

struct ExprParser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a HashMap<String, Real>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Real, String> {
        let mut acc = self.term()?;
        loop {
            if self.eat_op('+') {
                acc = acc + self.term()?;
            } else if self.eat_op('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Real, String> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_op('*') {
                acc = acc * self.unary()?;
            } else if self.eat_op('/') {
                let rhs = self.unary()?;
                if rhs.value() == 0.0 {
                    return Err("division by zero".into());
                }
                acc = acc / rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Real, String> {
        if self.eat_op('-') {
            return Ok(-self.unary()?);
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Real, String> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let exponent = self.unary()?;
            let e = exponent.value();
            if exponent.is_exact() && e.fract() == 0.0 && e.abs() <= 64.0 {
                return Ok(base.powi(e as i32));
            }
            return Ok(Real::from_f64(base.value().powf(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Real, String> {
        match self.peek().cloned() {
            Some(Token::Num(text)) => {
                self.pos += 1;
                parse_decimal(&text).ok_or_else(|| format!("invalid number \"{text}\""))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.eat_op('(') {
                    let arg = self.expr()?;
                    if !self.eat_op(')') {
                        return Err(format!("missing ')' after {name}("));
                    }
                    return match name.as_str() {
                        "sqrt" if arg.value() >= 0.0 => Ok(arg.sqrt()),
                        "sqrt" => Err("sqrt of a negative number".into()),
                        _ => Err(format!("unknown function \"{name}\"")),
                    };
                }
                self.vars
                    .get(&name)
                    .copied()
                    .ok_or_else(|| format!("unknown variable \"{name}\""))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err("missing ')'".into());
                }
                Ok(inner)
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

/// Evaluates an arithmetic expression over `+ - * / ^`, parentheses, `sqrt(..)`
/// and named variables. Rational inputs stay exact.
pub fn eval_expr(text: &str, vars: &HashMap<String, Real>) -> Result<Real, String> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut parser = ExprParser {
        tokens,
        pos: 0,
        vars,
    };
    let value = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("trailing input in \"{text}\""));
    }
    if !value.value().is_finite() {
        return Err(format!("\"{text}\" is not finite"));
    }
    Ok(value)
}
