//! Rational normal form.
//!
//! A normal form is a finite sum of monomials `c · Π atomᵉ` with exact
//! rational `c ≠ 0` and affine exponents, held in ordered maps so that equal
//! expressions have identical representations and zero is the empty sum.
//!
//! Two rewrite rules are built in:
//! * `t` is replaced by `Tstar - tau`, so `tau` is the only time atom left;
//! * `x2²` is replaced by `r² - x1²`, which ties the Cartesian coordinates to
//!   the radius `r = √(x1² + x2²)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{power_f64, rat, rat_to_f64, Bindings, Exponent, Expr, Param, Rational, Var};
use super::{Result, SymbolicError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Param(Param),
    R,
    Z,
    Tau,
    X1,
    X2,
    X3,
}

impl Atom {
    pub fn is_param(self) -> bool {
        matches!(self, Atom::Param(_))
    }

    fn to_expr(self) -> Expr {
        match self {
            Atom::Param(p) => Expr::Param(p),
            Atom::R => Expr::Var(Var::R),
            Atom::Z => Expr::Var(Var::Z),
            Atom::Tau => Expr::Tau,
            Atom::X1 => Expr::Var(Var::X1),
            Atom::X2 => Expr::Var(Var::X2),
            Atom::X3 => Expr::Var(Var::X3),
        }
    }

    fn eval(self, b: &Bindings) -> Result<f64> {
        match self {
            Atom::Param(p) => b.param(p),
            Atom::R => b.var(Var::R),
            Atom::Z => b.var(Var::Z),
            Atom::Tau => b.tau(),
            Atom::X1 => b.var(Var::X1),
            Atom::X2 => b.var(Var::X2),
            Atom::X3 => b.var(Var::X3),
        }
    }
}

/// Product of atom powers; unit exponents are stored, zero exponents never.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Atom, Exponent>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(a: Atom) -> Self {
        Self::atom_pow(a, Exponent::one())
    }

    pub fn atom_pow(a: Atom, e: Exponent) -> Self {
        let mut m = BTreeMap::new();
        if !e.is_zero() {
            m.insert(a, e);
        }
        Self(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, a: Atom) -> Option<&Exponent> {
        self.0.get(&a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Exponent)> {
        self.0.iter()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            let sum = match out.get(a) {
                Some(prev) => prev.add(e),
                None => e.clone(),
            };
            if sum.is_zero() {
                out.remove(a);
            } else {
                out.insert(*a, sum);
            }
        }
        Self(out)
    }

    pub fn pow(&self, e: &Exponent) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (a, ea) in &self.0 {
            let prod = ea.mul(e)?;
            if !prod.is_zero() {
                out.insert(*a, prod);
            }
        }
        Ok(Self(out))
    }

    /// Split into the parameter part and the variable part.
    pub fn split(&self) -> (Monomial, Monomial) {
        let (params, vars): (BTreeMap<_, _>, BTreeMap<_, _>) =
            self.0.iter().map(|(a, e)| (*a, e.clone())).partition(|(a, _)| a.is_param());
        (Monomial(params), Monomial(vars))
    }

    fn to_factors(&self) -> Vec<Expr> {
        self.0.iter().map(|(a, e)| a.to_expr().pow(e.clone())).collect()
    }

    fn eval(&self, b: &Bindings) -> Result<f64> {
        let mut acc = 1.0;
        for (a, e) in &self.0 {
            acc *= power_f64(a.eval(b)?, e, b)?;
        }
        Ok(acc)
    }
}

/// A sum of monomials with nonzero rational coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(q: Rational) -> Self {
        let mut p = Self::zero();
        p.insert(Monomial::one(), q);
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n))
    }

    pub fn atom(a: Atom) -> Self {
        let mut p = Self::zero();
        p.insert(Monomial::atom(a), Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// The single term, if there is exactly one.
    pub fn as_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        self.as_term().filter(|(m, _)| m.is_one()).map(|(_, c)| c.clone())
    }

    /// Accumulate `c·m`, applying the `x2² → r² - x1²` rule.
    fn insert(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        if let Some(n) = m.exponent(Atom::X2).and_then(|e| e.as_integer()).and_then(|n| n.to_i64()) {
            if n >= 2 {
                let rest = m.mul(&Monomial::atom_pow(Atom::X2, Exponent::int(-2)));
                self.insert(rest.mul(&Monomial::atom_pow(Atom::R, Exponent::int(2))), c.clone());
                self.insert(rest.mul(&Monomial::atom_pow(Atom::X1, Exponent::int(2))), -c);
                return;
            }
        }
        let cancelled = {
            let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
            *slot += c;
            slot.is_zero()
        };
        if cancelled {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, q: &Rational) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.insert(m.clone(), c * q);
        }
        out
    }

    /// `self^e`. Natural powers expand; any other exponent needs a single
    /// term, and a symbolic exponent additionally needs coefficient 1.
    pub fn pow(&self, e: &Exponent) -> Result<Self> {
        if let Some(n) = e.as_integer().and_then(|n| n.to_u32()) {
            let mut out = Self::int(1);
            for _ in 0..n {
                out = out.mul(self);
            }
            return Ok(out);
        }
        let Some((m, c)) = self.as_term() else {
            if self.is_zero() {
                return Err(SymbolicError::DivisionByZero);
            }
            return Err(SymbolicError::ExponentNotSupported(format!(
                "power ({}) of the multi-term expression {}",
                e,
                self.to_expr()
            )));
        };
        let coeff = match e.as_integer().and_then(|n| n.to_i32()) {
            Some(n) => num_traits::pow::Pow::pow(c, n),
            None if c.is_one() => Rational::one(),
            None => return Err(SymbolicError::ExponentNotSupported(format!("power ({e}) of the coefficient {c}"))),
        };
        let mut out = Self::zero();
        out.insert(m.pow(e)?, coeff);
        Ok(out)
    }

    /// Normal form of an expression tree.
    pub fn from_expr(e: &Expr) -> Result<Self> {
        Ok(match e {
            Expr::Const(q) => Self::constant(q.clone()),
            Expr::Param(p) => Self::atom(Atom::Param(*p)),
            Expr::Tau => Self::atom(Atom::Tau),
            Expr::Var(v) => match v {
                Var::T => Self::atom(Atom::Param(Param::Tstar)).sub(&Self::atom(Atom::Tau)),
                Var::R => Self::atom(Atom::R),
                Var::Z => Self::atom(Atom::Z),
                Var::X1 => Self::atom(Atom::X1),
                Var::X2 => Self::atom(Atom::X2),
                Var::X3 => Self::atom(Atom::X3),
            },
            Expr::Neg(x) => Self::from_expr(x)?.neg(),
            Expr::Sum(xs) => {
                let mut acc = Self::zero();
                for x in xs {
                    acc = acc.add(&Self::from_expr(x)?);
                }
                acc
            }
            Expr::Product(xs) => {
                let mut acc = Self::int(1);
                for x in xs {
                    acc = acc.mul(&Self::from_expr(x)?);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Power(base, exp) => Self::from_expr(base)?.pow(exp)?,
        })
    }

    pub fn to_expr(&self) -> Expr {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut factors = Vec::new();
                if !c.abs().is_one() || m.is_one() {
                    factors.push(Expr::Const(c.abs()));
                }
                factors.extend(m.to_factors());
                let term = Expr::product(factors);
                if c.is_negative() {
                    -term
                } else {
                    term
                }
            })
            .collect();
        Expr::sum(terms)
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            acc += rat_to_f64(c) * m.eval(b)?;
        }
        Ok(acc)
    }

    /// Group terms by their variable part; each group's coefficient is a
    /// polynomial in the parameters only.
    pub fn group_by_variables(&self) -> BTreeMap<Monomial, Poly> {
        let mut out: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (params, vars) = m.split();
            out.entry(vars).or_default().insert(params, c.clone());
        }
        out
    }

    /// Divide out the largest monomial common to every term and make the
    /// coefficient of the highest monomial one. Only integer exponents are
    /// factored, and the unknowns `p` and `beta` are never divided out since
    /// they may vanish.
    pub fn primitive_part(&self) -> Poly {
        let (Some((first, _)), Some((_, lead))) = (self.terms.iter().next(), self.terms.iter().next_back()) else {
            return Self::zero();
        };
        let mut common: BTreeMap<Atom, BigInt> = first
            .iter()
            .filter(|(a, _)| !matches!(a, Atom::Param(Param::P | Param::Beta)))
            .filter_map(|(a, e)| e.as_integer().map(|n| (*a, n)))
            .collect();
        for (m, _) in self.terms.iter().skip(1) {
            common.retain(|a, n| match m.exponent(*a).and_then(|e| e.as_integer()) {
                Some(k) => {
                    if k < *n {
                        *n = k;
                    }
                    true
                }
                None => false,
            });
        }
        let divisor = Monomial(
            common
                .into_iter()
                .filter(|(_, n)| !n.is_zero())
                .map(|(a, n)| (a, Exponent::constant(Rational::from_integer(-n))))
                .collect(),
        );
        let inv_lead = lead.recip();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.insert(m.mul(&divisor), c * &inv_lead);
        }
        out
    }

    /// Atoms that occur anywhere, including as exponent symbols.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = Vec::new();
        for m in self.terms.keys() {
            for (a, e) in m.iter() {
                out.push(*a);
                out.extend(e.symbols().map(Atom::Param));
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Normal form of `e`, returned as an expression.
pub fn simplify(e: &Expr) -> Result<Expr> {
    Ok(Poly::from_expr(e)?.to_expr())
}

pub fn normal_form(e: &Expr) -> Result<Poly> {
    Poly::from_expr(e)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn nf(s: &str) -> Poly {
        Poly::from_expr(&parse(s).unwrap()).unwrap()
    }

    #[test]
    fn cancellations() {
        assert!(nf("k/r^3 - k/r^3").is_zero());
        assert!(nf("a*r*tau^(-1)*(-k*r^(-2)) + a*k*r^(-1)*tau^(-1)").is_zero());
        assert!(nf("(x1^2+x2^2) - r^2").is_zero());
        assert!(nf("(Tstar - t) - tau").is_zero());
        assert!(nf("tau^(2*a)*tau^(-2*a) - 1").is_zero());
    }

    #[test]
    fn canonical_equality() {
        assert_eq!(nf("(a+k)^2"), nf("k^2 + 2*k*a + a^2"));
        assert_eq!(nf("x2^3"), nf("x2*r^2 - x2*x1^2"));
        assert_eq!(nf("1/(x1^2+x2^2)"), nf("r^(-2)"));
        assert_eq!(nf("(Tstar-t)^(2*a)"), nf("tau^(2*a)"));
    }

    #[test]
    fn unsupported_powers() {
        assert!(matches!(
            Poly::from_expr(&parse("(r + z)^(-1)").unwrap()),
            Err(SymbolicError::ExponentNotSupported(_))
        ));
        assert!(matches!(Poly::from_expr(&parse("(2*r)^a").unwrap()), Err(SymbolicError::ExponentNotSupported(_))));
        assert!(matches!(Poly::from_expr(&parse("(r^a)^p").unwrap()), Err(SymbolicError::ExponentNotSupported(_))));
        assert!(matches!(Poly::from_expr(&parse("(r - r)^(-1)").unwrap()), Err(SymbolicError::DivisionByZero)));
    }

    #[test]
    fn primitive_part_strips_common_factor() {
        let p = nf("-nu*k*p^2 - 2*nu*k*p");
        assert_eq!(p.primitive_part(), nf("p^2 + 2*p"));
    }

    #[test]
    fn zero_is_the_empty_sum() {
        let z = nf("0*r + (a - a)*k");
        assert!(z.is_zero());
        assert_eq!(z.to_expr(), Expr::zero());
    }
}
