//! Exact differentiation on expression trees and the cylindrical operators
//! built from it.

use super::expr::{Exponent, Expr, Param, Var};
use super::{Result, SymbolicError};

/// `∂e/∂var`.
///
/// `tau` depends on `t` with `∂tau/∂t = -1`. When differentiating with respect
/// to `x1` or `x2`, `r` is read as `√(x1² + x2²)`; with respect to any other
/// variable it is independent of the Cartesian coordinates.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) => Expr::zero(),
        Expr::Tau => {
            if var == Var::T {
                Expr::int(-1)
            } else {
                Expr::zero()
            }
        }
        Expr::Var(v) if *v == var => Expr::one(),
        Expr::Var(Var::R) if matches!(var, Var::X1 | Var::X2) => Expr::Var(var) / Expr::Var(Var::R),
        Expr::Var(_) => Expr::zero(),
        Expr::Neg(x) => -differentiate(x, var),
        Expr::Sum(xs) => Expr::sum(xs.iter().map(|x| differentiate(x, var)).collect()),
        Expr::Product(xs) => {
            let mut terms = Vec::with_capacity(xs.len());
            for i in 0..xs.len() {
                let d = differentiate(&xs[i], var);
                if d.is_zero() {
                    continue;
                }
                let mut factors = xs.clone();
                factors[i] = d;
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Expr::Power(base, exp) => {
            let d = differentiate(base, var);
            if d.is_zero() {
                return Expr::zero();
            }
            Expr::product(vec![exp.to_expr(), (**base).clone().pow(exp.sub(&Exponent::one())), d])
        }
    }
}

/// Differentiate by textual variable name; parameters are rejected.
pub fn differentiate_by_name(e: &Expr, name: &str) -> Result<Expr> {
    match Var::from_name(name) {
        Some(v) => Ok(differentiate(e, v)),
        None if Param::from_name(name).is_some() || name == "tau" => Err(SymbolicError::NotAVariable(name.to_string())),
        None => Err(SymbolicError::UnknownIdentifier { name: name.to_string(), offset: 0 }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylOperator {
    /// `∂_r² + (1/r)∂_r + ∂_z² - 1/r²`
    LaplacianMinusR2,
    /// `∂_r² + (3/r)∂_r + ∂_z²`
    Laplacian3R,
    DR,
    DZ,
    DT,
}

impl CylOperator {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "laplacian_minus_r2" => Self::LaplacianMinusR2,
            "laplacian_3r" => Self::Laplacian3R,
            "d_r" => Self::DR,
            "d_z" => Self::DZ,
            "d_t" => Self::DT,
            _ => return None,
        })
    }
}

pub fn d_r(e: &Expr) -> Expr {
    differentiate(e, Var::R)
}

pub fn d_z(e: &Expr) -> Expr {
    differentiate(e, Var::Z)
}

pub fn d_t(e: &Expr) -> Expr {
    differentiate(e, Var::T)
}

/// Apply a cylindrical operator to an expression in `(t, r, z)`.
pub fn cyl_operator(e: &Expr, op: CylOperator) -> Result<Expr> {
    if let Some(v) = e.free_vars().into_iter().find(|v| !matches!(v, Var::T | Var::R | Var::Z)) {
        return Err(SymbolicError::OperatorDomain(format!(
            "cylindrical operator applied to an expression in '{}'",
            v.name()
        )));
    }
    let r = || Expr::Var(Var::R);
    Ok(match op {
        CylOperator::DR => d_r(e),
        CylOperator::DZ => d_z(e),
        CylOperator::DT => d_t(e),
        CylOperator::LaplacianMinusR2 => {
            let er = d_r(e);
            Expr::sum(vec![d_r(&er), er / r(), d_z(&d_z(e)), -(e.clone() / r().powi(2))])
        }
        CylOperator::Laplacian3R => {
            let er = d_r(e);
            Expr::sum(vec![d_r(&er), Expr::int(3) * er / r(), d_z(&d_z(e))])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::{normal_form, parse, simplify};
    use super::*;

    fn same(a: &Expr, b: &str) -> bool {
        normal_form(&(a.clone() - parse(b).unwrap())).unwrap().is_zero()
    }

    #[test]
    fn derivative_examples() {
        assert!(same(&differentiate(&parse("a*r*tau^(-1)").unwrap(), Var::T), "a*r*tau^(-2)"));
        assert!(same(&differentiate(&parse("k*r^(-1)").unwrap(), Var::R), "-k*r^(-2)"));
        assert!(same(&differentiate(&parse("k*tau^(2*a)").unwrap(), Var::T), "-2*a*k*tau^(2*a-1)"));
        assert!(same(&differentiate(&parse("x2/(x1^2+x2^2)").unwrap(), Var::X1), "-2*x1*x2*r^(-4)"));
        assert!(same(&differentiate(&parse("r").unwrap(), Var::X2), "x2/r"));
    }

    #[test]
    fn operator_examples() {
        let lm = |s: &str| simplify(&cyl_operator(&parse(s).unwrap(), CylOperator::LaplacianMinusR2).unwrap()).unwrap();
        assert!(lm("k/r").is_zero());
        assert!(lm("-a*r*z/tau").is_zero());
        let l3 = cyl_operator(&parse("k*r^p").unwrap(), CylOperator::Laplacian3R).unwrap();
        assert!(same(&l3, "k*p*(p-1)*r^(p-2) + 3*k*p*r^(p-2)"));
    }

    #[test]
    fn operator_rejects_cartesian_input() {
        assert!(matches!(
            cyl_operator(&parse("x1*r").unwrap(), CylOperator::DR),
            Err(SymbolicError::OperatorDomain(_))
        ));
    }

    #[test]
    fn parameters_are_not_variables() {
        assert!(matches!(differentiate_by_name(&parse("a*r").unwrap(), "a"), Err(SymbolicError::NotAVariable(_))));
        assert!(differentiate_by_name(&parse("a*r").unwrap(), "r").is_ok());
    }
}
