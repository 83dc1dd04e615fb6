use std::collections::HashMap;

use multisym_core::symexpr::{parse_expr, Expr, Sym, SymbolTable, ZeroTest};
use proptest::prelude::*;

const SYMS: [Sym; 4] = [Sym::X(1), Sym::Y(1), Sym::V(1, 1), Sym::Y(2)];

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..SYMS.len()).prop_map(|i| Expr::sym(SYMS[i])),
        (-5i64..=5).prop_map(Expr::int),
        (1i64..=4, 1i64..=3).prop_map(|(a, b)| Expr::frac(a, b)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 0i64..=3).prop_map(|(a, k)| a.powi(k)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.tanh()),
            inner.prop_map(|a| (a * Expr::frac(1, 4)).exp()),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.5f64..1.5)
}

fn at(p: &[f64; 4]) -> impl Fn(Sym) -> Option<f64> + '_ {
    move |s| SYMS.iter().position(|t| *t == s).map(|i| p[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn canonical_form_is_idempotent(e in expr()) {
        let c = e.canonicalize();
        prop_assert_eq!(c.canonicalize(), c);
    }

    #[test]
    fn rendering_round_trips(e in expr()) {
        let table = SymbolTable::new(1, 2);
        let back = parse_expr(&e.to_string(), &table).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn derivative_is_linear(a in expr(), b in expr(), k in -3i64..=3, i in 0..SYMS.len()) {
        let s = SYMS[i];
        let lhs = (&a * Expr::int(k) + &b).diff(s);
        let rhs = a.diff(s) * Expr::int(k) + b.diff(s);
        prop_assert!(ZeroTest::default().equal(&lhs, &rhs));
    }

    #[test]
    fn mixed_partials_commute(e in expr(), i in 0..SYMS.len(), j in 0..SYMS.len()) {
        let (s, t) = (SYMS[i], SYMS[j]);
        prop_assert!(ZeroTest::default().equal(&e.diff(s).diff(t), &e.diff(t).diff(s)));
    }

    #[test]
    fn derivative_matches_central_difference(e in expr(), p in point(), i in 0..SYMS.len()) {
        let d = e.diff(SYMS[i]).eval_with(&at(&p));
        let h = 1e-5;
        let (mut lo, mut hi) = (p, p);
        lo[i] -= h;
        hi[i] += h;
        let fd = e.eval_with(&at(&hi)).and_then(|b| e.eval_with(&at(&lo)).map(|a| (b - a) / (2.0 * h)));
        if let (Ok(d), Ok(fd)) = (d, fd) {
            prop_assume!(d.is_finite() && fd.is_finite() && d.abs() < 1e6);
            prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0), "{} vs {}", d, fd);
        }
    }

    #[test]
    fn substitution_obeys_chain_rule(e in expr(), r in expr()) {
        // e(x := r) differentiated in y equals ∂e/∂x(r)·∂r/∂y + ∂e/∂y(r)
        let (x, y) = (Sym::X(1), Sym::Y(1));
        let r = r.subs_one(x, &Expr::sym(y));
        let bind: HashMap<Sym, Expr> = [(x, r.clone())].into_iter().collect();
        let lhs = e.subs(&bind).diff(y);
        let rhs = e.diff(x).subs(&bind) * r.diff(y) + e.diff(y).subs(&bind);
        prop_assert!(ZeroTest::default().equal(&lhs, &rhs));
    }

    #[test]
    fn differences_of_equal_expressions_are_zero(e in expr()) {
        let z = ZeroTest::default().is_zero(&(&e - &e.canonicalize())).unwrap();
        prop_assert!(z.zero && z.structural());
    }
}
