use std::collections::BTreeMap;
use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Result, SymbolicError};

pub type Rational = BigRational;

pub(crate) fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub(crate) fn rat_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Independent variables. `t` never survives normalisation; it is rewritten
/// as `Tstar - tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    R,
    Z,
    X1,
    X2,
    X3,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::T, Var::R, Var::Z, Var::X1, Var::X2, Var::X3];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::R => "r",
            Var::Z => "z",
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::X3 => "x3",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    A,
    K,
    Nu,
    P,
    Beta,
    Tstar,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::A, Param::K, Param::Nu, Param::P, Param::Beta, Param::Tstar];

    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::K => "k",
            Param::Nu => "nu",
            Param::P => "p",
            Param::Beta => "beta",
            Param::Tstar => "Tstar",
        }
    }

    pub fn from_name(s: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Parameters allowed to appear inside exponents.
    pub fn is_exponent_symbol(self) -> bool {
        matches!(self, Param::A | Param::P | Param::Beta)
    }
}

/// An exponent affine in `{a, p, beta}` with rational coefficients.
///
/// Ordering compares the constant part first, then the symbolic part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent {
    constant: Rational,
    coeffs: BTreeMap<Param, Rational>,
}

impl Exponent {
    pub fn constant(q: Rational) -> Self {
        Self { constant: q, coeffs: BTreeMap::new() }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn symbol(p: Param) -> Result<Self> {
        if !p.is_exponent_symbol() {
            return Err(SymbolicError::ExponentNotSupported(format!("'{}' may not appear in an exponent", p.name())));
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(p, Rational::one());
        Ok(Self { constant: Rational::zero(), coeffs })
    }

    /// `c0 + Σ cᵢ·symᵢ`.
    pub fn affine(c0: Rational, terms: impl IntoIterator<Item = (Param, Rational)>) -> Result<Self> {
        let mut e = Self::constant(c0);
        for (p, c) in terms {
            e = e.add(&Self::symbol(p)?.scale(&c));
        }
        Ok(e)
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, p: Param) -> Rational {
        self.coeffs.get(&p).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant.is_one() && self.coeffs.is_empty()
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        self.coeffs.is_empty().then_some(&self.constant)
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_constant().filter(|q| q.is_integer()).map(|q| q.to_integer())
    }

    pub fn symbols(&self) -> impl Iterator<Item = Param> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (p, c) in &other.coeffs {
            let slot = out.coeffs.entry(*p).or_insert_with(Rational::zero);
            *slot += c;
            if slot.is_zero() {
                out.coeffs.remove(p);
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&rat(-1))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self { constant: &self.constant * q, coeffs: self.coeffs.iter().map(|(p, c)| (*p, c * q)).collect() }
    }

    /// Product of two exponents; defined only while the result stays affine.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        match (self.as_constant(), other.as_constant()) {
            (Some(c), _) => Ok(other.scale(c)),
            (_, Some(c)) => Ok(self.scale(c)),
            _ => Err(SymbolicError::ExponentNotSupported(format!(
                "product of symbolic exponents ({self})·({other}) is not affine"
            ))),
        }
    }

    /// Replace `sym` by another affine exponent.
    pub fn substitute(&self, sym: Param, value: &Exponent) -> Self {
        match self.coeffs.get(&sym) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(&sym);
                rest.add(&value.scale(c))
            }
        }
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64> {
        let mut v = rat_to_f64(&self.constant);
        for (p, c) in &self.coeffs {
            v += rat_to_f64(c) * b.param(*p)?;
        }
        Ok(v)
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = Vec::new();
        if !self.constant.is_zero() || self.coeffs.is_empty() {
            terms.push(Expr::Const(self.constant.clone()));
        }
        for (p, c) in &self.coeffs {
            let term = Expr::Const(c.abs()) * Expr::Param(*p);
            terms.push(if c.is_negative() { -term } else { term });
        }
        Expr::sum(terms)
    }

    /// Interpret an expression as an affine exponent.
    pub fn from_expr(e: &Expr) -> Result<Self> {
        match e {
            Expr::Const(q) => Ok(Self::constant(q.clone())),
            Expr::Param(p) => Self::symbol(*p),
            Expr::Neg(x) => Ok(Self::from_expr(x)?.neg()),
            Expr::Sum(xs) => {
                let mut acc = Self::zero();
                for x in xs {
                    acc = acc.add(&Self::from_expr(x)?);
                }
                Ok(acc)
            }
            Expr::Product(xs) => {
                let mut acc = Self::one();
                for x in xs {
                    acc = acc.mul(&Self::from_expr(x)?)?;
                }
                Ok(acc)
            }
            Expr::Power(base, exp) => {
                let b = Self::from_expr(base)?;
                match (b.as_constant(), exp.as_integer().and_then(|n| n.to_i32())) {
                    (Some(q), Some(n)) => {
                        if q.is_zero() && n < 0 {
                            return Err(SymbolicError::DivisionByZero);
                        }
                        Ok(Self::constant(num_traits::pow::Pow::pow(q, n)))
                    }
                    (None, Some(1)) => Ok(b),
                    _ => Err(SymbolicError::ExponentNotSupported(format!("exponent '{e}' is not affine"))),
                }
            }
            Expr::Var(v) => Err(SymbolicError::ExponentNotSupported(format!("variable '{}' in an exponent", v.name()))),
            Expr::Tau => Err(SymbolicError::ExponentNotSupported("tau in an exponent".into())),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Expression tree.
///
/// `Tau` stands for `Tstar - t`; its time derivative is `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Rational),
    Var(Var),
    Param(Param),
    Tau,
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Exponent),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(rat(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Const(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(q) if q.is_one())
    }

    /// Sum with zero terms dropped and nested sums flattened.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                Expr::Sum(inner) => out.extend(inner),
                t if t.is_zero() => {}
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    /// Product with unit factors dropped, zero absorbing, nested products
    /// flattened.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                Expr::Product(inner) => out.extend(inner),
                f if f.is_zero() => return Expr::zero(),
                f if f.is_one() => {}
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Product(out),
        }
    }

    pub fn pow(self, e: Exponent) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self;
        }
        Expr::Power(Box::new(self), e)
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Exponent::int(n))
    }

    pub fn recip(self) -> Expr {
        self.powi(-1)
    }

    /// Replace every occurrence of `param`, including inside exponents.
    pub fn substitute(&self, param: Param, value: &Expr) -> Result<Expr> {
        Ok(match self {
            Expr::Param(p) if *p == param => value.clone(),
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) | Expr::Tau => self.clone(),
            Expr::Sum(xs) => Expr::sum(xs.iter().map(|x| x.substitute(param, value)).collect::<Result<_>>()?),
            Expr::Product(xs) => Expr::product(xs.iter().map(|x| x.substitute(param, value)).collect::<Result<_>>()?),
            Expr::Neg(x) => -x.substitute(param, value)?,
            Expr::Power(base, e) => {
                let e = if e.coeff(param).is_zero() {
                    e.clone()
                } else {
                    e.substitute(param, &Exponent::from_expr(value)?)
                };
                base.substitute(param, value)?.pow(e)
            }
        })
    }

    /// Variables the expression depends on (`Tau` reported as `t`).
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Var(v) => out.push(*v),
            Expr::Tau => out.push(Var::T),
            Expr::Const(_) | Expr::Param(_) => {}
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Expr::Neg(x) | Expr::Power(x, _) => x.collect_vars(out),
        }
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64> {
        Ok(match self {
            Expr::Const(q) => rat_to_f64(q),
            Expr::Var(v) => b.var(*v)?,
            Expr::Param(p) => b.param(*p)?,
            Expr::Tau => b.tau()?,
            Expr::Sum(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval(b)?;
                }
                acc
            }
            Expr::Product(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval(b)?;
                }
                acc
            }
            Expr::Neg(x) => -x.eval(b)?,
            Expr::Power(base, e) => power_f64(base.eval(b)?, e, b)?,
        })
    }

    fn needs_parens_in_product(&self) -> bool {
        match self {
            Expr::Sum(_) | Expr::Neg(_) => true,
            Expr::Const(q) => q.is_negative() || !q.is_integer(),
            _ => false,
        }
    }

    fn is_atomic(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Param(_) | Expr::Tau => true,
            Expr::Const(q) => q.is_integer() && !q.is_negative(),
            _ => false,
        }
    }
}

pub(crate) fn power_f64(base: f64, e: &Exponent, b: &Bindings) -> Result<f64> {
    if let Some(n) = e.as_integer().and_then(|n| n.to_i32()) {
        return Ok(base.powi(n));
    }
    Ok(base.powf(e.eval(b)?))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p.name()),
            Expr::Tau => f.write_str("tau"),
            Expr::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    match (i, x) {
                        (0, Expr::Neg(inner)) => write_neg(f, inner)?,
                        (0, x) => write!(f, "{x}")?,
                        (_, Expr::Neg(inner)) => {
                            f.write_str(" - ")?;
                            write_wrapped_if_sum(f, inner)?;
                        }
                        (_, x) => write!(f, " + {x}")?,
                    }
                }
                Ok(())
            }
            Expr::Product(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    if x.needs_parens_in_product() {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Expr::Power(base, e) => {
                if base.is_atomic() {
                    write!(f, "{base}")?;
                } else {
                    write!(f, "({base})")?;
                }
                match e.as_integer() {
                    Some(n) if !n.is_negative() => write!(f, "^{n}"),
                    _ => write!(f, "^({e})"),
                }
            }
            Expr::Neg(x) => write_neg(f, x),
        }
    }
}

fn write_neg(f: &mut fmt::Formatter<'_>, inner: &Expr) -> fmt::Result {
    f.write_str("-")?;
    write_wrapped_if_sum(f, inner)
}

fn write_wrapped_if_sum(f: &mut fmt::Formatter<'_>, x: &Expr) -> fmt::Result {
    match x {
        Expr::Sum(_) | Expr::Neg(_) => write!(f, "({x})"),
        Expr::Const(q) if q.is_negative() => write!(f, "({x})"),
        _ => write!(f, "{x}"),
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, -rhs])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs.recip()])
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Neg(x) => *x,
            Expr::Const(q) => Expr::Const(-q),
            x => Expr::Neg(Box::new(x)),
        }
    }
}

/// Numerical values for evaluation.
///
/// `tau` defaults to `Tstar - t`; `r` defaults to `√(x1² + x2²)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    vars: BTreeMap<Var, f64>,
    params: BTreeMap<Param, f64>,
    tau: Option<f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_value(mut self, v: Var, x: f64) -> Self {
        self.vars.insert(v, x);
        self
    }

    pub fn param_value(mut self, p: Param, x: f64) -> Self {
        self.params.insert(p, x);
        self
    }

    pub fn tau_value(mut self, x: f64) -> Self {
        self.tau = Some(x);
        self
    }

    /// Bind by textual name (`tau` included).
    pub fn set(self, name: &str, x: f64) -> Result<Self> {
        if name == "tau" {
            return Ok(self.tau_value(x));
        }
        if let Some(v) = Var::from_name(name) {
            return Ok(self.var_value(v, x));
        }
        if let Some(p) = Param::from_name(name) {
            return Ok(self.param_value(p, x));
        }
        Err(SymbolicError::UnknownIdentifier { name: name.to_string(), offset: 0 })
    }

    pub fn var(&self, v: Var) -> Result<f64> {
        if let Some(x) = self.vars.get(&v) {
            return Ok(*x);
        }
        match v {
            Var::R => Ok(self.var(Var::X1)?.hypot(self.var(Var::X2)?)),
            Var::T => match (self.tau, self.params.get(&Param::Tstar)) {
                (Some(tau), Some(ts)) => Ok(ts - tau),
                _ => Err(SymbolicError::Unbound("t".into())),
            },
            _ => Err(SymbolicError::Unbound(v.name().into())),
        }
    }

    pub fn param(&self, p: Param) -> Result<f64> {
        if let Some(x) = self.params.get(&p) {
            return Ok(*x);
        }
        match p {
            Param::Tstar => match (self.tau, self.vars.get(&Var::T)) {
                (Some(tau), Some(t)) => Ok(tau + t),
                _ => Err(SymbolicError::Unbound("Tstar".into())),
            },
            _ => Err(SymbolicError::Unbound(p.name().into())),
        }
    }

    pub fn tau(&self) -> Result<f64> {
        match self.tau {
            Some(x) => Ok(x),
            None => Ok(self.param(Param::Tstar)? - self.var(Var::T)?),
        }
    }
}
