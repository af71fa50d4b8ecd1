//! Text grammar for expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?        right-associative, binds tightest
//! primary := number | identifier | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `t r z x1 x2 x3`, the parameters
//! `a k nu p beta Tstar`, and `tau`. The difference `Tstar - t` is recognised
//! and stored as `tau`. Numbers are read exactly (`0.25` becomes `1/4`).

use num_bigint::BigInt;

use super::expr::{Exponent, Expr, Param, Rational, Var};
use super::{Result, SymbolicError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn syntax(offset: usize, message: impl Into<String>) -> SymbolicError {
    SymbolicError::Syntax { offset, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '0'..='9' | '.' => {
                let bytes = text.as_bytes();
                let mut end = pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut look = end + 1;
                    if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                        look += 1;
                    }
                    if look < bytes.len() && bytes[look].is_ascii_digit() {
                        end = look;
                        while end < bytes.len() && bytes[end].is_ascii_digit() {
                            end += 1;
                        }
                    }
                }
                while chars.peek().is_some_and(|&(i, _)| i < end) {
                    chars.next();
                }
                out.push((pos, Tok::Num(parse_number(&text[pos..end], pos)?)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = pos;
                while let Some(&(i, d)) = chars.peek() {
                    if !(d.is_alphanumeric() || d == '_') {
                        break;
                    }
                    end = i + d.len_utf8();
                    chars.next();
                }
                out.push((pos, Tok::Ident(text[pos..end].to_string())));
            }
            '+' | '*' | '/' | '^' | '-' => {
                out.push((pos, Tok::Op(c)));
                chars.next();
            }
            '\u{2212}' => {
                out.push((pos, Tok::Op('-')));
                chars.next();
            }
            '(' => {
                out.push((pos, Tok::LParen));
                chars.next();
            }
            ')' => {
                out.push((pos, Tok::RParen));
                chars.next();
            }
            other => return Err(syntax(pos, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

fn parse_number(s: &str, offset: usize) -> Result<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| syntax(offset, format!("bad number '{s}'")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() || frac_part.contains('.') {
        return Err(syntax(offset, format!("bad number '{s}'")));
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| syntax(offset, format!("bad number '{s}'")))?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 { Rational::from_integer(numer * pow) } else { Rational::new(numer, pow) })
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let c = *c;
            self.bump();
            let t = self.term()?;
            terms.push(if c == '-' { -t } else { t });
        }
        if terms.len() == 1 {
            return Ok(terms.pop().unwrap());
        }
        Ok(recognise_tau(Expr::sum(terms)))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let c = *c;
            self.bump();
            let f = self.unary()?;
            factors.push(if c == '/' { f.recip() } else { f });
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::product(factors) })
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.bump();
                Ok(-self.unary()?)
            }
            Some(Tok::Op('+')) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let at = self.offset();
            let e = self.unary()?;
            let exponent = Exponent::from_expr(&e).map_err(|err| match err {
                SymbolicError::ExponentNotSupported(m) => {
                    SymbolicError::ExponentNotSupported(format!("{m} (at byte {at})"))
                }
                other => other,
            })?;
            return Ok(Expr::Power(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(q)) => Ok(Expr::Const(q)),
            Some(Tok::Ident(name)) => identifier(&name, at),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(syntax(self.toks.get(self.pos - 1).map(|(o, _)| *o).unwrap_or(self.len), "expected ')'")),
                }
            }
            Some(tok) => Err(syntax(at, format!("unexpected token {tok:?}"))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }
}

fn identifier(name: &str, offset: usize) -> Result<Expr> {
    if name == "tau" {
        return Ok(Expr::Tau);
    }
    if let Some(v) = Var::from_name(name) {
        return Ok(Expr::Var(v));
    }
    if let Some(p) = Param::from_name(name) {
        return Ok(Expr::Param(p));
    }
    Err(SymbolicError::UnknownIdentifier { name: name.to_string(), offset })
}

fn recognise_tau(e: Expr) -> Expr {
    if let Expr::Sum(terms) = &e {
        if let [Expr::Param(Param::Tstar), Expr::Neg(inner)] = terms.as_slice() {
            if **inner == Expr::Var(Var::T) {
                return Expr::Tau;
            }
        }
    }
    e
}

pub fn parse(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, len: text.len() };
    if p.peek().is_none() {
        return Err(syntax(0, "empty expression"));
    }
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse("a*r/(Tstar−t)").unwrap(),
            Expr::Product(vec![
                Expr::Param(Param::A),
                Expr::Var(Var::R),
                Expr::Power(Box::new(Expr::Tau), Exponent::int(-1)),
            ])
        );
        assert_eq!(
            parse("k*r^p").unwrap(),
            Expr::Product(vec![
                Expr::Param(Param::K),
                Expr::Power(Box::new(Expr::Var(Var::R)), Exponent::symbol(Param::P).unwrap()),
            ])
        );
        assert_eq!(
            parse("x1^2+x2^2").unwrap(),
            Expr::Sum(vec![
                Expr::Power(Box::new(Expr::Var(Var::X1)), Exponent::int(2)),
                Expr::Power(Box::new(Expr::Var(Var::X2)), Exponent::int(2)),
            ])
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let b = super::super::Bindings::new().var_value(Var::R, 2.0).var_value(Var::Z, 3.0);
        assert_eq!(parse("-r^2").unwrap().eval(&b).unwrap(), -4.0);
        assert_eq!(parse("r^3^0").unwrap().eval(&b).unwrap(), 2.0);
        assert_eq!(parse("z - r - 1").unwrap().eval(&b).unwrap(), 0.0);
        assert_eq!(parse("z/r/2").unwrap().eval(&b).unwrap(), 0.75);
        assert_eq!(parse("r^-1").unwrap().eval(&b).unwrap(), 0.5);
        assert_eq!(parse("2.5e1*r").unwrap().eval(&b).unwrap(), 50.0);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse("a + $") {
            Err(SymbolicError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse("a * foo") {
            Err(SymbolicError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(a + r"), Err(SymbolicError::Syntax { .. })));
        assert!(matches!(parse("a +"), Err(SymbolicError::Syntax { .. })));
        assert!(matches!(parse(""), Err(SymbolicError::Syntax { .. })));
        assert!(matches!(parse("r^z"), Err(SymbolicError::ExponentNotSupported(_))));
        assert!(matches!(parse("r^(a*p)"), Err(SymbolicError::ExponentNotSupported(_))));
    }
}
