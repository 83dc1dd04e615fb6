use std::f64::consts::PI;

use super::*;
use crate::fieldop::construct_extended_operator;
use crate::hamiltonian::hamiltonian_from_legendre;
use crate::lagrangian::LagrangianSystem;
use crate::symexpr::{parse_expr, Expr, SymbolTable, ZeroTest};

fn sys(m: usize, n: usize, l: &str) -> LagrangianSystem {
    LagrangianSystem::parse(m, n, l).unwrap()
}

fn x2(s: &str) -> Expr {
    parse_expr(s, &SymbolTable::new(2, 1)).unwrap()
}

const TWO_PI: &str = "6.283185307179586";

fn kg_setup(dx: f64) -> M2Setup {
    M2Setup {
        dx,
        dt: None,
        t_end: 1.0,
        boundary: Boundary::Periodic,
        init_phi: vec![x2(&format!("sin({TWO_PI}*x_2)"))],
        init_dphi: vec![Expr::zero()],
    }
}

#[test]
fn oscillator_returns_after_one_period() {
    let zt = ZeroTest::default();
    let osc = sys(1, 1, "v_1_1^2/2 - y_1^2/2");
    let s = integrate_m1(&osc, &[1.0], &[0.0], 0.0, 2.0 * PI, 1e-3, &zt).unwrap();
    let last = s.grid.shape[0] - 1;
    assert!((s.value(1, last, 0) - 1.0).abs() <= 1e-8);
}

#[test]
fn free_particle_is_linear() {
    let zt = ZeroTest::default();
    let s = integrate_m1(&sys(1, 1, "v_1_1^2/2"), &[0.5], &[2.0], 0.0, 1.0, 0.01, &zt).unwrap();
    for i in 0..s.grid.shape[0] {
        let x = s.grid.coord(i, 0)[0];
        assert!((s.value(1, i, 0) - (0.5 + 2.0 * x)).abs() < 1e-12);
    }
}

#[test]
fn rk4_meters_converge_at_fourth_order() {
    let zt = ZeroTest::default();
    let osc = sys(1, 1, "v_1_1^2/2 - y_1^2/2");
    let hs = hamiltonian_from_legendre(&osc, None, &zt).unwrap();
    let run = |h: f64| {
        let s = integrate_m1(&osc, &[1.0], &[0.0], 0.0, 2.0 * PI, h, &zt).unwrap();
        (
            el_residual(&osc, &s).unwrap().max,
            hdw_residual(&hs, &osc, &s).unwrap().max,
        )
    };
    let (e1, h1) = run(2.0 * PI / 100.0);
    let (e2, h2) = run(2.0 * PI / 200.0);
    let order = |a: f64, b: f64| (a / b).log2();
    assert!((order(e1, e2) - 4.0).abs() <= 0.3, "{e1} {e2}");
    assert!((order(h1, h2) - 4.0).abs() <= 0.3, "{h1} {h2}");
}

#[test]
fn wave_equation_matches_dalembert() {
    let zt = ZeroTest::default();
    let wave = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2");
    let s = integrate_m2(&wave, &kg_setup(1.0 / 200.0), &zt).unwrap();
    let last = s.grid.shape[0] - 1;
    let mut err: f64 = 0.0;
    for j in 0..s.grid.shape[1] {
        let [t, x] = s.grid.coord(last, j);
        err = err.max((s.value(1, last, j) - (2.0 * PI * x).sin() * (2.0 * PI * t).cos()).abs());
    }
    assert!(err <= 5e-3, "{err}");
}

#[test]
fn constant_section_stays_constant() {
    let zt = ZeroTest::default();
    let wave = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2");
    let setup = M2Setup {
        init_phi: vec![Expr::frac(3, 2)],
        boundary: Boundary::Dirichlet,
        ..kg_setup(1.0 / 50.0)
    };
    let s = integrate_m2(&wave, &setup, &zt).unwrap();
    assert!(s.phi[0].iter().all(|v| (*v - 1.5).abs() < 1e-14));
}

#[test]
fn klein_gordon_meters_and_separation() {
    let zt = ZeroTest::default();
    let kg = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2");
    let k = construct_extended_operator(&kg, &zt).unwrap();
    let hs = hamiltonian_from_legendre(&kg, None, &zt).unwrap();
    let meters = |s: &NumericSection| {
        (
            el_residual(&kg, s).unwrap().max,
            operator_residual(&k, &kg, s, Gauge::Matched).unwrap().g_family.max,
            hdw_residual(&hs, &kg, s).unwrap().max,
        )
    };
    let s1 = integrate_m2(&kg, &kg_setup(1.0 / 100.0), &zt).unwrap();
    let s2 = integrate_m2(&kg, &kg_setup(1.0 / 200.0), &zt).unwrap();
    let (a1, b1, c1) = meters(&s1);
    let (a2, b2, c2) = meters(&s2);
    for (r1, r2) in [(a1, a2), (b1, b2), (c1, c2)] {
        assert!(r2 <= 5e-3);
        let ratio = r1 / r2;
        assert!((3.4..=4.6).contains(&ratio), "{r1} {r2}");
    }
    let bumped = s2.perturbed(|[t, x], _| 0.1 * (2.0 * PI * 3.0 * x).sin() * (PI * t).sin());
    let (a3, b3, c3) = meters(&bumped);
    assert!(a3 >= 10.0 * a2 && b3 >= 10.0 * b2 && c3 >= 10.0 * c2);

    let fixed = operator_residual(&k, &kg, &s2, Gauge::Fixed).unwrap();
    assert!(fixed.g_family.max > 0.1);
    assert_eq!(fixed.f_family.max, 0.0);
    let matched = operator_residual(&k, &kg, &s2, Gauge::Matched).unwrap();
    assert!(matched.h_family.unwrap().max < 5e-3);
    assert!(energy_drift(&kg, &s2).unwrap() <= 1e-3);
}

#[test]
fn rejections() {
    let zt = ZeroTest::default();
    let kg = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2");
    let too_fast = M2Setup {
        dt: Some(0.02),
        ..kg_setup(0.01)
    };
    assert!(matches!(
        integrate_m2(&kg, &too_fast, &zt),
        Err(NumIntError::Cfl { .. })
    ));
    let elliptic = sys(2, 1, "v_1_1^2/2 + v_1_2^2/2");
    assert!(matches!(
        integrate_m2(&elliptic, &kg_setup(0.01), &zt),
        Err(NumIntError::NotHyperbolic(_))
    ));
    let mixed = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2 + v_1_1*v_1_2/4");
    assert!(matches!(
        integrate_m2(&mixed, &kg_setup(0.01), &zt),
        Err(NumIntError::MixedDerivative)
    ));
    let m3 = sys(3, 1, "v_1_1^2/2");
    assert!(matches!(
        integrate_m2(&m3, &kg_setup(0.01), &zt),
        Err(NumIntError::Dimension(3))
    ));
    assert!(matches!(
        integrate_m1(&sys(1, 1, "v_1_1"), &[0.0], &[0.0], 0.0, 1.0, 0.1, &zt),
        Err(NumIntError::NotRegular(_))
    ));
}

#[test]
fn csv_layout() {
    let zt = ZeroTest::default();
    let s = integrate_m1(&sys(1, 1, "v_1_1^2/2"), &[0.0], &[1.0], 0.0, 1.0, 0.5, &zt).unwrap();
    let mut out = Vec::new();
    s.write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "x_1,y_1\n0,0\n0.5,0.5\n1,1\n");
}
