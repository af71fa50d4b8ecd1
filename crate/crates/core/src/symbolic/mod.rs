//! Minimal exact computer algebra: parsing, differentiation, rational normal
//! form, evaluation, and the certification of both solution families.

mod certify;
mod diff;
mod expr;
mod parse;
mod poly;

use thiserror::Error;

pub use certify::{
    ansatz_exponents, ansatz_residual, build_reduced_residuals, build_reduced_residuals_for, cartesian_velocity,
    derived_pressure, expected_ansatz, ns_cartesian_residual, printed_claims, report_notes, AnsatzSolution,
    Certificate, Discrepancy, EquationId, ReducedFields, SymbolicResidual,
};
pub use diff::{cyl_operator, d_r, d_t, d_z, differentiate, differentiate_by_name, CylOperator};
pub use expr::{Bindings, Exponent, Expr, Param, Rational, Var};
pub use parse::parse;
pub use poly::{normal_form, simplify, Atom, Monomial, Poly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent not supported: {0}")]
    ExponentNotSupported(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound symbol '{0}'")]
    Unbound(String),
    #[error("'{0}' is not a variable")]
    NotAVariable(String),
    #[error("operator domain: {0}")]
    OperatorDomain(String),
    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, SymbolicError>;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            (-3i64..=3).prop_map(Expr::int),
            (-2i64..=3).prop_map(|n| Expr::Var(Var::R).powi(n)),
            (-2i64..=2).prop_map(|n| Expr::Var(Var::Z).powi(n.max(0))),
            (-2i64..=2).prop_map(|n| Expr::Tau.powi(n)),
            Just(parse("tau^(2*a)").unwrap()),
            Just(parse("tau^(1-a)").unwrap()),
            prop_oneof![Just(Param::A), Just(Param::K), Just(Param::Nu)].prop_map(Expr::Param),
        ]
    }

    fn expr() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::product),
                (inner.clone(), 0i64..=3).prop_map(|(e, n)| e.powi(n)),
                inner.prop_map(|e| -e),
            ]
        })
    }

    fn bindings() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
        (0.5..2.0f64, -1.0..1.0f64, 0.0..0.6f64, 0.3..1.5f64, 0.5..2.0f64, 0.1..1.0f64)
    }

    fn bind(b: (f64, f64, f64, f64, f64, f64)) -> Bindings {
        let (r, z, t, a, k, nu) = b;
        Bindings::new()
            .var_value(Var::R, r)
            .var_value(Var::Z, z)
            .var_value(Var::T, t)
            .param_value(Param::Tstar, 1.0)
            .param_value(Param::A, a)
            .param_value(Param::K, k)
            .param_value(Param::Nu, nu)
    }

    fn close(x: f64, y: f64, rel: f64) -> bool {
        (x - y).abs() <= rel * x.abs().max(y.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn simplify_preserves_value(e in expr(), b in bindings()) {
            let env = bind(b);
            let direct = e.eval(&env).unwrap();
            let s = simplify(&e).unwrap();
            prop_assert!(close(direct, s.eval(&env).unwrap(), 1e-12), "{e} vs {s}");
        }

        #[test]
        fn print_parse_round_trip(e in expr()) {
            let back = parse(&e.to_string()).unwrap();
            prop_assert_eq!(normal_form(&back).unwrap(), normal_form(&e).unwrap());
        }

        #[test]
        fn derivative_matches_central_difference(e in expr(), b in bindings(), which in 0usize..3) {
            let var = [Var::R, Var::Z, Var::T][which];
            let h = 1e-5;
            let env = bind(b);
            let x = env.var(var).unwrap();
            let at = |v: f64| e.eval(&bind(b).var_value(var, v)).unwrap();
            let fd = (at(x + h) - at(x - h)) / (2.0 * h);
            let exact = differentiate(&e, var).eval(&env).unwrap();
            // Scale by the function's own size: FD cancellation error grows with it.
            let scale = at(x).abs().max(exact.abs()).max(1.0);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{e}: fd {fd} exact {exact}");
        }
    }

    #[test]
    fn simplify_examples() {
        assert!(simplify(&parse("k/r^3 - k/r^3").unwrap()).unwrap().is_zero());
        assert!(simplify(&parse("a*r*tau^(-1)*(-k*r^(-2)) + a*k*r^(-1)*tau^(-1)").unwrap()).unwrap().is_zero());
        assert!(simplify(&parse("(x1^2+x2^2) - r^2").unwrap()).unwrap().is_zero());
    }

    #[test]
    fn time_derivative_of_swirl_factor_matches_difference() {
        let e = parse("k*tau^(2*a)").unwrap();
        let d = differentiate(&e, Var::T);
        let env = |t: f64| {
            Bindings::new()
                .var_value(Var::T, t)
                .param_value(Param::Tstar, 1.0)
                .param_value(Param::A, 1.5)
                .param_value(Param::K, 1.0)
        };
        let h = 1e-5;
        let fd = (e.eval(&env(0.3 + h)).unwrap() - e.eval(&env(0.3 - h)).unwrap()) / (2.0 * h);
        let exact = d.eval(&env(0.3)).unwrap();
        assert!((fd - exact).abs() <= 1e-6 * exact.abs());
        assert_eq!(simplify(&d).unwrap(), simplify(&parse("-2*a*k*tau^(2*a-1)").unwrap()).unwrap());
    }
}
