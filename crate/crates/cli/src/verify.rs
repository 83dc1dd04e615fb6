use multisym_core::fieldop::{
    check_operator, construct_extended_operator, el_from_operator, h_readings, hdw_from_operator, operator_from_el,
    operator_from_hdw, restrict_operator, transport_constraint,
};
use multisym_core::hamiltonian::{
    automatic_inverse, check_inverse, extended_legendre, inverse_map, lagrangian_from_hamiltonian, liouville_forms, mu,
    restricted_legendre, verify_constraints, HamiltonianError,
};
use multisym_core::{Expr, HamiltonianSystem, LagrangianSystem, Provenance, Regularity, Sym, ZeroCheck, ZeroTest};

use crate::report::{Check, EvidenceKind, Report};
use crate::{hamiltonian, lagrangian, model_seed, zero_test, CliError, Model};

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

type Attempt = Result<Check, String>;

fn push(r: &mut Report, name: &str, f: impl FnOnce() -> Attempt) {
    let c = f().unwrap_or_else(|e| Check {
        evidence: None,
        ..Check::new(name, false, EvidenceKind::Structural).detail(format!("error: {e}"))
    });
    r.push(c);
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn all_zero(zt: &ZeroTest, es: &[Expr]) -> Result<ZeroCheck, String> {
    zt.all_zero(es).map_err(s)
}

/// The identity suite. Every applicable check appears once; inapplicable
/// ones are reported as skipped with the reason.
pub fn cmd_verify(model: &Model, opts: &VerifyOptions) -> Result<Report, CliError> {
    let seed = opts.seed.unwrap_or_else(|| model_seed(model));
    let zt = zero_test(seed, opts.samples);
    let sys = lagrangian(model)?;
    let mut r = Report::new("verify", &model.name, seed, zt.samples);
    let reg = sys.classify(&zt).map_err(|e| CliError::Input(e.to_string()))?;
    r.fact("classification", reg.label());
    let ham = hamiltonian(model, &sys, &zt)?;
    match &ham {
        Ok(h) => r.fact("H", h.h().to_string()),
        Err(why) => r.fact("H", format!("unavailable: {why}")),
    }
    lagrangian_checks(&mut r, &sys, &zt);
    hamiltonian_checks(&mut r, model, &sys, &reg, &ham, &zt);
    fieldop_checks(&mut r, model, &sys, &reg, &ham, &zt);
    Ok(r)
}

fn lagrangian_checks(r: &mut Report, sys: &LagrangianSystem, zt: &ZeroTest) {
    let (m, n) = (sys.m(), sys.n());
    r.push(Check::new(
        "lagrangian.hessian_symmetric",
        sys.hessian_symmetric(),
        EvidenceKind::Structural,
    ));
    let (theta, omega) = sys.poincare_cartan();
    push(r, "lagrangian.omega_is_minus_d_theta", || {
        let z = omega.add(&theta.d()).map_err(s)?.is_zero(zt).map_err(s)?;
        Ok(Check::zero("lagrangian.omega_is_minus_d_theta", &z))
    });
    push(r, "lagrangian.omega_matches_expansion", || {
        let z = omega.sub(&sys.omega_expansion()).map_err(s)?.is_zero(zt).map_err(s)?;
        Ok(Check::zero("lagrangian.omega_matches_expansion", &z))
    });

    let coeffs = sys.solve_el_coefficients(zt);
    let obstructed = |c: &multisym_core::ElCoefficients| {
        let list: Vec<String> = c.obstructions.iter().map(|e| format!("{e} = 0")).collect();
        format!("second-order system is constrained: {}", list.join(", "))
    };
    push(r, "lagrangian.el_coefficients_residual", || {
        let c = coeffs.as_ref().map_err(s)?;
        if !c.obstructions.is_empty() {
            return Ok(Check::skipped("lagrangian.el_coefficients_residual", obstructed(c)));
        }
        let z = all_zero(zt, &sys.el_residuals(&c.g))?;
        Ok(Check::zero("lagrangian.el_coefficients_residual", &z))
    });
    push(r, "lagrangian.el_multivector", || {
        let c = coeffs.as_ref().map_err(s)?;
        if !c.obstructions.is_empty() {
            return Ok(Check::skipped("lagrangian.el_multivector", obstructed(c)));
        }
        let x = sys.el_multivector(c, zt).map_err(s)?;
        let z = sys.contraction_check(&x, zt).map_err(s)?;
        Ok(Check::zero("lagrangian.el_multivector", &z))
    });
    push(r, "lagrangian.el_freedom", || {
        let c = coeffs.as_ref().map_err(s)?;
        let rank = sys
            .el_matrix()
            .sampled_ranks(zt, 16)
            .map_err(s)?
            .into_iter()
            .max()
            .unwrap_or(0);
        let expect = n * m * m - rank;
        Ok(
            Check::new("lagrangian.el_freedom", c.freedom() == expect, EvidenceKind::Numeric)
                .detail(format!("kernel dimension {} (N m² − rank = {expect})", c.freedom())),
        )
    });
}

fn hamiltonian_checks(
    r: &mut Report,
    model: &Model,
    sys: &LagrangianSystem,
    reg: &Regularity,
    ham: &Result<HamiltonianSystem, String>,
    zt: &ZeroTest,
) {
    let (m, n) = (sys.m(), sys.n());
    let (theta_l, omega_l) = sys.poincare_cartan();
    push(r, "hamiltonian.pullback_theta_extended", || {
        let pb = extended_legendre(sys).pullback(&liouville_forms(m, n).0).map_err(s)?;
        let z = pb.sub(&theta_l).map_err(s)?.is_zero(zt).map_err(s)?;
        Ok(Check::zero("hamiltonian.pullback_theta_extended", &z))
    });
    push(r, "hamiltonian.legendre_factorization", || {
        let composed = mu(m, n).after(&extended_legendre(sys)).map_err(s)?;
        let same = composed.exprs() == restricted_legendre(sys).exprs();
        Ok(Check::new(
            "hamiltonian.legendre_factorization",
            same,
            EvidenceKind::Structural,
        ))
    });
    push(r, "hamiltonian.inverse_roundtrip", || {
        let name = "hamiltonian.inverse_roundtrip";
        if !reg.is_regular() {
            return Ok(Check::skipped(
                name,
                format!("{}: the Legendre map has no inverse", reg.label()),
            ));
        }
        let vel = match &model.inverse_legendre {
            Some(v) => v.clone(),
            None => match automatic_inverse(sys, zt) {
                Ok(v) => v,
                Err(HamiltonianError::InverseRequired) => {
                    return Ok(Check::skipped(
                        name,
                        "momenta not affine in the velocities and no [inverse_legendre]",
                    ))
                }
                Err(e) => return Err(s(e)),
            },
        };
        let inv = inverse_map(sys, &vel).map_err(s)?;
        Ok(match check_inverse(sys, &inv, zt).map_err(s)? {
            Ok(()) => Check::new(name, true, EvidenceKind::Probabilistic),
            Err(msg) => Check::new(name, false, EvidenceKind::Probabilistic).detail(msg),
        })
    });

    let h_checks = [
        "hamiltonian.pullback_theta_h",
        "hamiltonian.pullback_omega_h",
        "hamiltonian.lagrangian_roundtrip",
        "hamiltonian.hdw_multivector",
    ];
    match ham {
        Err(why) => {
            for name in h_checks {
                r.push(Check::skipped(name, why.clone()));
            }
        }
        Ok(h) => {
            let fl = restricted_legendre(sys);
            push(r, h_checks[0], || {
                let z = fl
                    .pullback(h.theta_h())
                    .map_err(s)?
                    .sub(&theta_l)
                    .map_err(s)?
                    .is_zero(zt)
                    .map_err(s)?;
                Ok(Check::zero(h_checks[0], &z))
            });
            push(r, h_checks[1], || {
                let z = fl
                    .pullback(h.omega_h())
                    .map_err(s)?
                    .sub(&omega_l)
                    .map_err(s)?
                    .is_zero(zt)
                    .map_err(s)?;
                Ok(Check::zero(h_checks[1], &z))
            });
            push(r, h_checks[2], || {
                if h.provenance() == Provenance::UserSupplied && !reg.is_regular() {
                    return Ok(Check::skipped(
                        h_checks[2],
                        "singular Lagrangian: ∂H/∂p does not determine the velocities",
                    ));
                }
                let z = zt
                    .is_zero(&(lagrangian_from_hamiltonian(h, sys) - sys.lagrangian()))
                    .map_err(s)?;
                Ok(Check::zero(h_checks[2], &z))
            });
            push(r, h_checks[3], || {
                let xh = h.hdw_multivector(&h.default_free_part(), zt).map_err(s)?;
                let z = h.contraction_check(&xh, zt).map_err(s)?;
                Ok(Check::zero(h_checks[3], &z))
            });
        }
    }

    push(r, "hamiltonian.constraints", || {
        let name = "hamiltonian.constraints";
        if model.constraints.is_empty() {
            let why = if reg.is_regular() {
                "regular: no constraints expected"
            } else {
                "singular Lagrangian without [constraints]"
            };
            return Ok(Check::skipped(name, why));
        }
        let cs: Vec<Expr> = model.constraints.iter().map(|(_, c)| c.clone()).collect();
        let rep = verify_constraints(sys, &cs, zt).map_err(s)?;
        let structural = rep.entries.iter().all(|e| e.check.structural());
        let ev = if structural {
            EvidenceKind::Structural
        } else {
            EvidenceKind::Probabilistic
        };
        let mut c = Check::new(name, rep.all_vanish() && rep.independent(), ev);
        if !rep.all_vanish() {
            let bad: Vec<&str> = model
                .constraints
                .iter()
                .zip(&rep.entries)
                .filter(|(_, e)| !e.check.zero)
                .map(|((k, _), _)| k.as_str())
                .collect();
            c = c.detail(format!("not zero on the Legendre image: {}", bad.join(", ")));
            if let Some(e) = rep.entries.iter().find(|e| !e.check.zero) {
                c.witness = Check::zero(name, &e.check).witness;
            }
        } else if !rep.independent() {
            c = c.detail(format!(
                "differentials dependent (sampled ranks {:?})",
                rep.differential_ranks
            ));
        }
        Ok(c)
    });
}

fn tables_equal(zt: &ZeroTest, a: &[Expr], b: &[Expr]) -> Result<Option<EvidenceKind>, String> {
    if a.len() != b.len() {
        return Ok(None);
    }
    if a == b {
        return Ok(Some(EvidenceKind::Structural));
    }
    let diffs: Vec<Expr> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(all_zero(zt, &diffs)?.zero.then_some(EvidenceKind::Probabilistic))
}

fn equal_check(name: &str, ev: Option<EvidenceKind>) -> Check {
    match ev {
        Some(k) => Check::new(name, true, k),
        None => Check::new(name, false, EvidenceKind::Probabilistic).detail("coefficient tables differ"),
    }
}

fn fieldop_checks(
    r: &mut Report,
    model: &Model,
    sys: &LagrangianSystem,
    reg: &Regularity,
    ham: &Result<HamiltonianSystem, String>,
    zt: &ZeroTest,
) {
    let (m, n) = (sys.m(), sys.n());
    let k = match construct_extended_operator(sys, zt) {
        Ok(k) => k,
        Err(e) => {
            r.push(
                Check::new("fieldop.normalization", false, EvidenceKind::Structural)
                    .detail(format!("construction failed: {e}")),
            );
            return;
        }
    };
    match check_operator(&k, sys, zt) {
        Ok(rep) => {
            r.push(Check::verdict("fieldop.normalization", &rep.normalization));
            r.push(Check::verdict("fieldop.semi_holonomy", &rep.semi_holonomy));
            r.push(Check::verdict("fieldop.field_equation", &rep.field_equation));
        }
        Err(e) => r.push(Check::new("fieldop.field_equation", false, EvidenceKind::Structural).detail(e.to_string())),
    }
    let expect = n * (m * m - 1);
    r.push(
        Check::new("fieldop.freedom_count", k.freedom() == expect, EvidenceKind::Structural)
            .detail(format!("kernel dimension {} (N(m²−1) = {expect})", k.freedom())),
    );
    push(r, "fieldop.h_coefficient", || {
        let name = "fieldop.h_coefficient";
        let h = k.h_table().ok_or("extended operator without h")?;
        let rd = h_readings(sys, k.g_table());
        let diff = |c: &[Expr]| -> Vec<Expr> { c.iter().zip(h).map(|(a, b)| a - b).collect() };
        let uniform = all_zero(zt, &diff(&rd.uniform))?;
        let printed = all_zero(zt, &diff(&rd.printed))?;
        let mut c = Check::zero(name, if uniform.zero { &uniform } else { &printed });
        c.status = if uniform.zero || printed.zero {
            crate::Status::Pass
        } else {
            crate::Status::Fail
        };
        let verdict = |z: &ZeroCheck| if z.zero { "matches" } else { "differs" };
        Ok(c.detail(format!(
            "index-uniform reading {}; alternating-sign reading {}",
            verdict(&uniform),
            verdict(&printed)
        )))
    });
    push(r, "fieldop.trace_identity", || {
        let traces: Vec<Expr> = (1..=n)
            .map(|a| Expr::add_all((1..=m).map(|eta| k.g(a, eta, eta).clone())) - sys.dl_dy(a))
            .collect();
        Ok(Check::zero("fieldop.trace_identity", &all_zero(zt, &traces)?))
    });

    let restricted = restrict_operator(&k);
    push(r, "fieldop.restriction", || {
        let rk = restricted.as_ref().map_err(s)?;
        let rep = check_operator(rk, sys, zt).map_err(s)?;
        let same = rk.f_table() == k.f_table() && rk.g_table() == k.g_table() && rk.h_table().is_none();
        let mut c = Check::new("fieldop.restriction", same && rep.all_pass(), EvidenceKind::Structural);
        if !same {
            c = c.detail("restriction changed f or g");
        } else if !rep.all_pass() {
            c = c.detail("restricted operator fails its conditions");
        }
        Ok(c)
    });
    push(r, "fieldop.mechanics_reduction", || {
        let name = "fieldop.mechanics_reduction";
        if m != 1 {
            return Ok(Check::skipped(name, "field theory (m > 1)"));
        }
        let rk = restricted.as_ref().map_err(s)?;
        let f: Vec<Expr> = (1..=n).map(|a| Expr::sym(Sym::V(a as u8, 1))).collect();
        let g: Vec<Expr> = (1..=n).map(|a| sys.dl_dy(a)).collect();
        let ok = rk.f_table() == f.as_slice() && rk.g_table() == g.as_slice();
        Ok(Check::new(name, ok, EvidenceKind::Structural).detail("f = v, g = ∂L/∂y"))
    });
    push(r, "fieldop.el_roundtrip", || el_roundtrip(sys, reg, zt));
    push(r, "fieldop.hdw_roundtrip", || hdw_roundtrip(sys, ham, zt));
    push(r, "fieldop.transport_constraints", || {
        let name = "fieldop.transport_constraints";
        if model.constraints.is_empty() {
            return Ok(Check::skipped(name, "no [constraints]"));
        }
        let rk = restricted.as_ref().map_err(s)?;
        let mut all = Vec::new();
        for (_, c) in &model.constraints {
            all.extend(transport_constraint(rk, c, sys).map_err(s)?);
        }
        Ok(Check::zero(name, &all_zero(zt, &all)?))
    });
}

fn el_roundtrip(sys: &LagrangianSystem, reg: &Regularity, zt: &ZeroTest) -> Attempt {
    let name = "fieldop.el_roundtrip";
    if !reg.is_regular() {
        return Ok(Check::skipped(name, format!("{}: regular models only", reg.label())));
    }
    let coeffs = sys.solve_el_coefficients(zt).map_err(s)?;
    let xl = sys.el_multivector(&coeffs, zt).map_err(s)?;
    let k1 = operator_from_el(&xl, sys, zt).map_err(s)?;
    let rec = el_from_operator(&k1, sys, zt).map_err(s)?;
    let back = sys.coefficients_of(&rec.multivector).map_err(s)?;
    let orig = sys.coefficients_of(&xl).map_err(s)?;
    let ev_el = tables_equal(zt, &back, &orig)?;
    // the other direction starting from the operator
    let k2 = operator_from_el(&rec.multivector, sys, zt).map_err(s)?;
    let ev_op = tables_equal(zt, k2.g_table(), k1.g_table())?
        .and(tables_equal(zt, k2.f_table(), k1.f_table())?)
        .and(tables_equal(
            zt,
            k2.h_table().unwrap_or(&[]),
            k1.h_table().unwrap_or(&[]),
        )?);
    Ok(equal_check(name, weakest(ev_el, ev_op)))
}

fn weakest(a: Option<EvidenceKind>, b: Option<EvidenceKind>) -> Option<EvidenceKind> {
    match (a?, b?) {
        (EvidenceKind::Structural, EvidenceKind::Structural) => Some(EvidenceKind::Structural),
        _ => Some(EvidenceKind::Probabilistic),
    }
}

fn hdw_roundtrip(sys: &LagrangianSystem, ham: &Result<HamiltonianSystem, String>, zt: &ZeroTest) -> Attempt {
    let name = "fieldop.hdw_roundtrip";
    let h = match ham {
        Ok(h) if h.inverse().is_some() => h,
        Ok(_) => return Ok(Check::skipped(name, "user-supplied H without an inverse Legendre map")),
        Err(why) => return Ok(Check::skipped(name, why.clone())),
    };
    let xh = h.hdw_multivector(&h.default_free_part(), zt).map_err(s)?;
    let k = operator_from_hdw(&xh, sys, h, zt).map_err(s)?;
    let back = hdw_from_operator(&k, h).map_err(s)?;
    let flat =
        |x: &multisym_core::MultiVec| -> Vec<Expr> { x.components().iter().flat_map(|c| c.comps().to_vec()).collect() };
    let ev_h = tables_equal(zt, &flat(&back), &flat(&xh))?;
    let k2 = operator_from_hdw(&back, sys, h, zt).map_err(s)?;
    let ev_k = tables_equal(zt, k2.g_table(), k.g_table())?.and(tables_equal(zt, k2.f_table(), k.f_table())?);
    Ok(equal_check(name, weakest(ev_h, ev_k)))
}
