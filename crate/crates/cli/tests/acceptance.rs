//! One line per acceptance criterion; exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use multisym_cli::{cmd_verify, hamiltonian, lagrangian, Model, VerifyOptions};
use multisym_core::fieldop::{
    check_operator, coefficient_system, construct_extended_operator, el_from_operator, hdw_from_operator,
    operator_from_el, operator_from_hdw, restrict_operator,
};
use multisym_core::hamiltonian::{extended_legendre, liouville_forms, restricted_legendre};
use multisym_core::numint::{
    el_residual, hdw_residual, integrate_m1, integrate_m2, operator_residual, Gauge, M2Setup, MeterReport,
};
use multisym_core::{parse_expr, Boundary, Expr, LagrangianSystem, NumericSection, Sym, SymbolTable, ZeroTest};

const CORPUS: [&str; 6] = ["oscillator", "free_particle", "affine", "wave", "klein_gordon", "rank1"];
const REGULAR: [&str; 4] = ["oscillator", "free_particle", "wave", "klein_gordon"];
const TWO_PI: f64 = std::f64::consts::TAU;

type Outcome = Result<String, String>;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("{name}.model"))
}

fn load(name: &str) -> Model {
    Model::load(&corpus(name)).expect("corpus model parses")
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn pullback_identities(zt: &ZeroTest) -> Outcome {
    let mut n_h = 0;
    for name in CORPUS {
        let model = load(name);
        let sys = lagrangian(&model).map_err(s)?;
        let (theta_l, _) = sys.poincare_cartan();
        let ext = extended_legendre(&sys)
            .pullback(&liouville_forms(sys.m(), sys.n()).0)
            .map_err(s)?;
        let z = ext.sub(&theta_l).map_err(s)?.is_zero(zt).map_err(s)?;
        ensure(z.zero, format!("{name}: extended pullback of Θ differs from Θ_L"))?;
        if let Ok(h) = hamiltonian(&model, &sys, zt).map_err(s)? {
            let pb = restricted_legendre(&sys).pullback(h.theta_h()).map_err(s)?;
            let z = pb.sub(&theta_l).map_err(s)?.is_zero(zt).map_err(s)?;
            ensure(z.zero, format!("{name}: pullback of Θ_h differs from Θ_L"))?;
            n_h += 1;
        }
    }
    Ok(format!("6 models, Θ_h defined on {n_h}"))
}

fn operator_construction(zt: &ZeroTest) -> Outcome {
    for name in CORPUS {
        let sys = lagrangian(&load(name)).map_err(s)?;
        let k = construct_extended_operator(&sys, zt).map_err(|e| format!("{name}: {e}"))?;
        let rep = check_operator(&k, &sys, zt).map_err(s)?;
        ensure(rep.all_pass(), format!("{name}: {rep:?}"))?;
    }
    Ok("normalization, semi-holonomy, field equation on all 6 (2 singular)".into())
}

fn freedom_counts(zt: &ZeroTest) -> Outcome {
    let cases = [
        (1, 1, "v_1_1^2/2 - y_1^4/4"),
        (2, 1, "v_1_1^2/2 - v_1_2^2/2 - cos(y_1)"),
        (2, 2, "v_1_1^2/2 - v_1_2^2/2 + v_2_1^2/2 - v_2_2^2/2 - y_1^2*y_2^2/2"),
        (3, 1, "v_1_1^2/2 - v_1_2^2/2 - v_1_3^2/2 - y_1^2/2"),
    ];
    let mut got = Vec::new();
    for (m, n, l) in cases {
        let sys = LagrangianSystem::parse(m, n, l).map_err(s)?;
        let k = coefficient_system(&sys, zt).map_err(s)?.kernel.len();
        ensure(
            k == n * (m * m - 1),
            format!("(m, N) = ({m}, {n}): kernel {k}, expected {}", n * (m * m - 1)),
        )?;
        got.push(format!("({m},{n})→{k}"));
    }
    Ok(got.join(" "))
}

fn mechanics_reduction(zt: &ZeroTest) -> Outcome {
    for name in ["oscillator", "free_particle", "affine"] {
        let sys = lagrangian(&load(name)).map_err(s)?;
        let r = restrict_operator(&construct_extended_operator(&sys, zt).map_err(s)?).map_err(s)?;
        ensure(
            r.f_table() == [Expr::sym(Sym::V(1, 1))],
            format!("{name}: f = {:?}", r.f_table()),
        )?;
        ensure(r.g_table() == [sys.dl_dy(1)], format!("{name}: g = {:?}", r.g_table()))?;
    }
    Ok("oscillator, free particle, affine (singular): f = v, g = ∂L/∂y structurally".into())
}

fn round_trips(zt: &ZeroTest) -> Outcome {
    for name in REGULAR {
        let model = load(name);
        let sys = lagrangian(&model).map_err(s)?;
        let xl = sys
            .el_multivector(&sys.solve_el_coefficients(zt).map_err(s)?, zt)
            .map_err(s)?;
        let k = operator_from_el(&xl, &sys, zt).map_err(s)?;
        let back = el_from_operator(&k, &sys, zt).map_err(s)?.multivector;
        ensure(back == xl, format!("{name}: EL round trip not structural"))?;
        let k2 = operator_from_el(&back, &sys, zt).map_err(s)?;
        ensure(
            k2 == k,
            format!("{name}: operator round trip through EL not structural"),
        )?;

        let h = hamiltonian(&model, &sys, zt).map_err(s)??;
        let xh = h.hdw_multivector(&h.default_free_part(), zt).map_err(s)?;
        let kh = operator_from_hdw(&xh, &sys, &h, zt).map_err(s)?;
        let back = hdw_from_operator(&kh, &h).map_err(s)?;
        ensure(back == xh, format!("{name}: HDW round trip not structural"))?;
        let kh2 = operator_from_hdw(&back, &sys, &h, zt).map_err(s)?;
        ensure(
            kh2 == kh,
            format!("{name}: operator round trip through HDW not structural"),
        )?;
    }
    Ok("4 regular models, both directions, structural".into())
}

fn kg() -> LagrangianSystem {
    LagrangianSystem::parse(2, 1, "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2").unwrap()
}

fn kg_section(dx: f64, zt: &ZeroTest) -> Result<NumericSection, String> {
    let init = parse_expr("sin(6.283185307179586*x_2)", &SymbolTable::new(2, 1)).map_err(s)?;
    let setup = M2Setup {
        dx,
        dt: Some(dx / 2.0),
        t_end: 1.0,
        boundary: Boundary::Periodic,
        init_phi: vec![init],
        init_dphi: vec![Expr::zero()],
    };
    integrate_m2(&kg(), &setup, zt).map_err(s)
}

/// el, operator (g-family, matched gauge) and hdw max-norms.
fn meters(sys: &LagrangianSystem, sec: &NumericSection, zt: &ZeroTest) -> Result<[MeterReport; 3], String> {
    let model_h = multisym_core::hamiltonian::hamiltonian_from_legendre(sys, None, zt).map_err(s)?;
    let k = construct_extended_operator(sys, zt).map_err(s)?;
    Ok([
        el_residual(sys, sec).map_err(s)?,
        operator_residual(&k, sys, sec, Gauge::Matched).map_err(s)?.g_family,
        hdw_residual(&model_h, sys, sec).map_err(s)?,
    ])
}

fn convergence(zt: &ZeroTest) -> Outcome {
    let sys = kg();
    let coarse = meters(&sys, &kg_section(1.0 / 200.0, zt)?, zt)?;
    let fine = meters(&sys, &kg_section(1.0 / 400.0, zt)?, zt)?;
    let mut parts = Vec::new();
    for (c, f) in coarse.iter().zip(&fine) {
        let ratio = c.max / f.max;
        ensure(c.max <= 5e-3, format!("{}: max {:.3e} > 5e-3", c.name, c.max))?;
        ensure(
            (3.4..=4.6).contains(&ratio),
            format!("{}: refinement ratio {ratio:.3}", c.name),
        )?;
        parts.push(format!("{} {:.2e} (×{ratio:.2})", c.name, c.max));
    }

    let osc = LagrangianSystem::parse(1, 1, "v_1_1^2/2 - y_1^2/2").unwrap();
    let run = |h: f64| integrate_m1(&osc, &[1.0], &[0.0], 0.0, TWO_PI, h, zt).map_err(s);
    let (a, b) = (run(TWO_PI / 100.0)?, run(TWO_PI / 200.0)?);
    for (c, f) in meters(&osc, &a, zt)?.iter().zip(&meters(&osc, &b, zt)?) {
        let order = (c.max / f.max).log2();
        ensure(
            (order - 4.0).abs() <= 0.3,
            format!("oscillator {}: order {order:.3}", c.name),
        )?;
    }
    let fine = run(1e-3)?;
    let last = fine.grid.shape[0] - 1;
    let err = (fine.value(1, last, 0) - 1.0).abs();
    ensure(err <= 1e-8, format!("|y(2π) − 1| = {err:.3e}"))?;
    parts.push(format!("oscillator order 4, |y(2π)−1| = {err:.1e}"));
    Ok(parts.join("; "))
}

fn separation(zt: &ZeroTest) -> Outcome {
    let sys = kg();
    let sol = kg_section(1.0 / 200.0, zt)?;
    let bumped = sol.perturbed(|x, _| 0.1 * (3.0 * x[0]).sin() * (TWO_PI * x[1]).cos());
    let good = meters(&sys, &sol, zt)?;
    let bad = meters(&sys, &bumped, zt)?;
    let mut parts = Vec::new();
    for (g, b) in good.iter().zip(&bad) {
        let r = b.max / g.max;
        ensure(r >= 10.0, format!("{}: separation ×{r:.1}", g.name))?;
        parts.push(format!("{} ×{r:.0}", g.name));
    }
    Ok(parts.join(", "))
}

const FD_EXPRS: [&str; 20] = [
    "v_1_1^2/2 - y_1^2/2",
    "v_1_1^2/2",
    "v_1_1",
    "v_1_1^2/2 - v_1_2^2/2",
    "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2",
    "(v_1_1 + v_1_2)^2/2",
    "p_1_1^2/2 - p_1_2^2/2 + y_1^2/2",
    "p_1_1^2/2",
    "exp(v_1_1)",
    "p_1_1*log(1 + p_1_1^2) - p_1_1",
    "sin(x_1)*cos(y_1*v_1_2)",
    "tanh(y_1 - y_2)^3",
    "sqrt(2 + sin(x_2*y_1))",
    "exp(-x_1^2)*v_2_1*v_1_2",
    "y_1^4/4 - y_1^2*y_2^2/2",
    "cos(6.283185307179586*x_2)*sin(3*x_1)",
    "(1 + v_1_1^2)^(-1)",
    "log(2 + cos(v_2_2))*p_2_1",
    "x_1*x_2*y_2/(3 + y_1^2)",
    "(exp(v_1_1/2) - exp(-v_1_1/2))^2/4 - tanh(y_2/3)",
];

fn fd_oracle(zt: &ZeroTest) -> Outcome {
    let table = SymbolTable::new(2, 2);
    let mut compared = 0;
    for src in FD_EXPRS {
        let e = parse_expr(src, &table).map_err(|x| format!("{src}: {x}"))?;
        let syms: Vec<Sym> = e.free_symbols().into_iter().collect();
        for pt in zt.points(&syms, 10) {
            for (i, sym) in syms.iter().enumerate() {
                let d = e.diff(*sym);
                let eval = |p: &[f64]| {
                    e.eval_with(&|q| syms.iter().position(|t| *t == q).map(|k| p[k]))
                        .map_err(s)
                };
                let exact = d
                    .eval_with(&|q| syms.iter().position(|t| *t == q).map(|k| pt[k]))
                    .map_err(s)?;
                let h = 1e-5 * pt[i].abs().max(1.0);
                let (mut hi, mut lo) = (pt.clone(), pt.clone());
                hi[i] += h;
                lo[i] -= h;
                let fd = (eval(&hi)? - eval(&lo)?) / (2.0 * h);
                let scale = exact.abs().max(1.0);
                ensure(
                    (exact - fd).abs() <= 1e-5 * scale,
                    format!("{src} d/d{sym}: {exact} vs {fd}"),
                )?;
                compared += 1;
            }
        }
    }
    Ok(format!("20 expressions × 10 points, {compared} partials"))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_multisym"))
            .args(["verify", "--seed", "12345", "--json", "-"])
            .arg(corpus("klein_gordon"))
            .output()
            .map_err(s)?;
        ensure(out.status.success(), String::from_utf8_lossy(&out.stderr).to_string())?;
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, "reports differ between runs")?;
    let lib = cmd_verify(
        &load("klein_gordon"),
        &VerifyOptions {
            seed: Some(12345),
            samples: None,
        },
    )
    .map_err(s)?;
    ensure(
        lib.to_json().as_bytes() == a.as_slice(),
        "library and binary reports differ",
    )?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let zt = ZeroTest::default();
    let criteria: [(&str, &dyn Fn() -> Outcome); 9] = [
        ("pullback identities", &|| pullback_identities(&zt)),
        ("operator construction", &|| operator_construction(&zt)),
        ("freedom count", &|| freedom_counts(&zt)),
        ("mechanics reduction", &|| mechanics_reduction(&zt)),
        ("round trips", &|| round_trips(&zt)),
        ("convergence", &|| convergence(&zt)),
        ("separation", &|| separation(&zt)),
        ("finite-difference oracle", &|| fd_oracle(&zt)),
        ("determinism", &determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!(
            "criterion {} {title}: {tag} — {detail} ({:.1}s)",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 9 passed in {:.1}s",
        9 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
