use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use multisym_core::fieldop::{check_operator, construct_extended_operator};
use multisym_core::numint::{el_residual, integrate_m2, M2Setup};
use multisym_core::{parse_expr, Boundary, Expr, LagrangianSystem, Sym, SymbolTable, ZeroTest};

const KG: &str = "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2";

fn symbolic(c: &mut Criterion) {
    let table = SymbolTable::new(2, 2);
    let e = parse_expr(
        "sin(x_1)*cos(y_1*v_1_2) + exp(-x_1^2)*v_2_1*v_1_2 + tanh(y_1 - y_2)^3",
        &table,
    )
    .unwrap();
    c.bench_function("parse", |b| {
        b.iter(|| parse_expr(black_box("sin(x_1)*cos(y_1*v_1_2) + tanh(y_1 - y_2)^3"), &table).unwrap())
    });
    c.bench_function("diff_twice", |b| {
        b.iter(|| black_box(&e).diff(Sym::Y(1)).diff(Sym::V(1, 2)))
    });
    let zt = ZeroTest::default();
    // not a structural zero: decided by sampling
    let d = parse_expr("(sin(y_1*v_1_2)^2 + cos(y_1*v_1_2)^2 - 1)*exp(x_1)", &table).unwrap();
    c.bench_function("is_zero_sampled", |b| b.iter(|| zt.is_zero(black_box(&d)).unwrap()));
}

fn operator(c: &mut Criterion) {
    let zt = ZeroTest::default();
    let sys = LagrangianSystem::parse(2, 1, KG).unwrap();
    c.bench_function("construct_operator_kg", |b| {
        b.iter(|| construct_extended_operator(black_box(&sys), &zt).unwrap())
    });
    let k = construct_extended_operator(&sys, &zt).unwrap();
    c.bench_function("check_operator_kg", |b| {
        b.iter(|| check_operator(black_box(&k), &sys, &zt).unwrap())
    });
}

fn numeric(c: &mut Criterion) {
    let zt = ZeroTest::default();
    let sys = LagrangianSystem::parse(2, 1, KG).unwrap();
    let setup = M2Setup {
        dx: 1.0 / 100.0,
        dt: None,
        t_end: 1.0,
        boundary: Boundary::Periodic,
        init_phi: vec![parse_expr("sin(6.283185307179586*x_2)", &SymbolTable::new(2, 1)).unwrap()],
        init_dphi: vec![Expr::zero()],
    };
    let mut g = c.benchmark_group("kg_dx_1_100");
    g.sample_size(10);
    g.bench_function("leapfrog", |b| {
        b.iter(|| integrate_m2(&sys, black_box(&setup), &zt).unwrap())
    });
    let s = integrate_m2(&sys, &setup, &zt).unwrap();
    g.bench_function("el_residual", |b| b.iter(|| el_residual(&sys, black_box(&s)).unwrap()));
    g.finish();
}

criterion_group!(benches, symbolic, operator, numeric);
criterion_main!(benches);
