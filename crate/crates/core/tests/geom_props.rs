use std::sync::Arc;

use multisym_core::geom::{Chart, CoordMap, DiffForm, VectorField};
use multisym_core::symexpr::{Expr, ZeroTest};
use proptest::prelude::*;

fn chart() -> Arc<Chart> {
    Chart::jet(2, 1)
}

// polynomial-ish coefficients over the chart coordinates, kept small
fn coeff() -> impl Strategy<Value = Expr> {
    let c = chart();
    let leaf = prop_oneof![
        (0..c.dim()).prop_map(move |i| Expr::sym(chart().coord(i))),
        (-3i64..=3).prop_map(Expr::int),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.prop_map(|a| a.sin()),
        ]
    })
}

fn form(degree: usize) -> impl Strategy<Value = DiffForm> {
    let dim = chart().dim();
    prop::collection::vec(
        (prop::sample::subsequence((0..dim).collect::<Vec<_>>(), degree), coeff()),
        1..4,
    )
    .prop_map(move |terms| {
        let mut f = DiffForm::zero(&chart(), degree);
        for (idx, c) in terms {
            f.add_term(&idx, c);
        }
        f
    })
}

fn field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(coeff(), 5).prop_map(|c| VectorField::new(&chart(), c).unwrap())
}

fn vanishes(f: &DiffForm) -> bool {
    f.is_zero(&ZeroTest::default()).unwrap().zero
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_squared_is_zero(k in 0usize..3, f0 in form(0), f1 in form(1), f2 in form(2)) {
        let f = [f0, f1, f2][k].clone();
        prop_assert!(vanishes(&f.d().d()));
    }

    #[test]
    fn wedge_of_one_forms_is_antisymmetric(a in form(1), b in form(1)) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        prop_assert!(vanishes(&ab.add(&ba).unwrap()));
        prop_assert!(vanishes(&a.wedge(&a).unwrap()));
    }

    #[test]
    fn d_obeys_graded_leibniz(a in form(1), b in form(1)) {
        // d(a∧b) = da∧b − a∧db
        let lhs = a.wedge(&b).unwrap().d();
        let rhs = a.d().wedge(&b).unwrap().sub(&a.wedge(&b.d()).unwrap()).unwrap();
        prop_assert!(vanishes(&lhs.sub(&rhs).unwrap()));
    }

    #[test]
    fn interior_twice_vanishes(f in form(2), v in field()) {
        prop_assert!(vanishes(&f.interior(&v).unwrap().interior(&v).unwrap()));
    }

    #[test]
    fn pullback_commutes_with_d(f in form(1), img in prop::collection::vec(coeff(), 5)) {
        let c = chart();
        let phi = CoordMap::new(&c, &c, img).unwrap();
        let lhs = phi.pullback(&f.d()).unwrap();
        let rhs = phi.pullback(&f).unwrap().d();
        prop_assert!(vanishes(&lhs.sub(&rhs).unwrap()));
    }
}
