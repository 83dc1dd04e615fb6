use std::fmt::Write as _;

use multisym_core::fieldop::{as_view, construct_extended_operator, restrict_operator, ViewKind};
use multisym_core::hamiltonian::{extended_legendre, restricted_legendre};
use multisym_core::{Regularity, ZeroTest};

use crate::{hamiltonian, lagrangian, model_seed, zero_test, CliError, Model};

fn classification(model: &Model, zt: &ZeroTest) -> Result<Regularity, CliError> {
    lagrangian(model)?
        .classify(zt)
        .map_err(|e| CliError::Input(e.to_string()))
}

/// Regularity of the Lagrangian and what that implies for the Hamiltonian side.
pub fn cmd_classify(model: &Model) -> Result<String, CliError> {
    let zt = zero_test(model_seed(model), None);
    let sys = lagrangian(model)?;
    let reg = classification(model, &zt)?;
    let mut out = String::new();
    let _ = writeln!(out, "model {} (m={}, N={})", model.name, model.m, model.n);
    let _ = writeln!(out, "classification: {}", reg.label());
    match &reg {
        Regularity::Regular { det, .. } => {
            let _ = writeln!(out, "det Hessian = {det}");
        }
        Regularity::Singular { rank } => {
            let _ = writeln!(out, "Hessian rank {rank} of {}", model.n * model.m);
        }
    }
    match hamiltonian(model, &sys, &zt)? {
        Ok(h) => {
            let _ = writeln!(out, "H = {} ({:?})", h.h(), h.provenance());
        }
        Err(why) => {
            let _ = writeln!(out, "H unavailable: {why}");
        }
    }
    if !model.constraints.is_empty() {
        let names: Vec<&str> = model.constraints.iter().map(|(k, _)| k.as_str()).collect();
        let _ = writeln!(out, "constraints: {}", names.join(", "));
    }
    Ok(out)
}

/// Everything the model determines symbolically, in a fixed order.
pub fn cmd_derive(model: &Model) -> Result<String, CliError> {
    let zt = zero_test(model_seed(model), None);
    let sys = lagrangian(model)?;
    let reg = classification(model, &zt)?;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "model {} (m={}, N={})", model.name, model.m, model.n);
    let _ = writeln!(w, "L = {}", sys.lagrangian());
    let _ = writeln!(w, "classification: {}", reg.label());

    let (theta, omega) = sys.poincare_cartan();
    let _ = writeln!(w, "\nΘ_L = {theta}");
    let _ = writeln!(w, "Ω_L = {omega}");

    let _ = writeln!(w, "\nextended Legendre map:");
    for line in extended_legendre(&sys).to_string().lines() {
        let _ = writeln!(w, "  {line}");
    }
    let _ = writeln!(w, "restricted Legendre map:");
    for line in restricted_legendre(&sys).to_string().lines() {
        let _ = writeln!(w, "  {line}");
    }

    let ham = hamiltonian(model, &sys, &zt)?;
    match &ham {
        Ok(h) => {
            let _ = writeln!(w, "\nH = {}", h.h());
        }
        Err(why) => {
            let _ = writeln!(w, "\nH unavailable: {why}");
        }
    }

    let _ = writeln!(w, "\nEuler-Lagrange equations:");
    for (a, e) in sys.euler_lagrange_equations().iter().enumerate() {
        let _ = writeln!(w, "  [{}] {e} = 0", a + 1);
    }
    if let Ok(h) = &ham {
        let _ = writeln!(w, "Hamilton-De Donder-Weyl equations:");
        for a in 1..=model.n {
            for al in 1..=model.m {
                let _ = writeln!(w, "  ∂y_{a}/∂x_{al} = {}", h.dh_dp(a, al));
            }
        }
        for a in 1..=model.n {
            let div: Vec<String> = (1..=model.m).map(|al| format!("∂p_{a}_{al}/∂x_{al}")).collect();
            let _ = writeln!(w, "  {} = {}", div.join(" + "), -h.dh_dy(a));
        }
    }

    let k = construct_extended_operator(&sys, &zt).map_err(|e| CliError::Input(e.to_string()))?;
    let r = restrict_operator(&k).map_err(|e| CliError::Input(e.to_string()))?;
    let _ = writeln!(w, "\nextended operator (freedom {}):", k.freedom());
    let _ = writeln!(w, "  {}", as_view(&k, ViewKind::Multivector).render());
    let _ = writeln!(w, "restricted operator:");
    let _ = writeln!(w, "  {}", as_view(&r, ViewKind::Multivector).render());
    Ok(out)
}
