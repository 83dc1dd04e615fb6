use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use multisym_core::fieldop::construct_extended_operator;
use multisym_core::numint::{
    el_residual, energy_drift, hdw_residual, integrate_m1, integrate_m2, operator_residual, Gauge, M2Setup, MeterReport,
};
use multisym_core::{Expr, LagrangianSystem, NumIntError, NumericSection, Sym, ZeroTest};

use crate::report::{Check, EvidenceKind, Report};
use crate::{hamiltonian, lagrangian, model_seed, zero_test, CliError, Model, Numeric};

#[derive(Clone, Debug, Default)]
pub struct IntegrateOptions {
    /// Directory for the CSV sections; nothing is written without it.
    pub out: Option<PathBuf>,
}

fn constants(es: &[Expr], what: &str) -> Result<Vec<f64>, CliError> {
    es.iter()
        .map(|e| {
            e.eval_with(&|_| None)
                .map_err(|x| CliError::Input(format!("{what}: {x}")))
        })
        .collect()
}

fn section(
    sys: &LagrangianSystem,
    num: &Numeric,
    step: f64,
    dt: Option<f64>,
    zt: &ZeroTest,
) -> Result<NumericSection, CliError> {
    Ok(match sys.m() {
        1 => {
            let y0 = constants(&num.init_phi, "init_phi")?;
            let v0 = constants(&num.init_dphi, "init_dphi")?;
            integrate_m1(sys, &y0, &v0, 0.0, num.t_end, step, zt)?
        }
        2 => {
            let setup = M2Setup {
                dx: step,
                dt,
                t_end: num.t_end,
                boundary: num.bc,
                init_phi: num.init_phi.clone(),
                init_dphi: num.init_dphi.clone(),
            };
            integrate_m2(sys, &setup, zt)?
        }
        m => return Err(NumIntError::Dimension(m).into()),
    })
}

/// Largest deviation from the exact solution over the grid, and at the last
/// time slice.
fn exact_error(s: &NumericSection, exact: &[Expr]) -> Result<(f64, f64), CliError> {
    let [n0, n1] = s.grid.shape;
    let (mut all, mut last) = (0.0f64, 0.0f64);
    for i in 0..n0 {
        for j in 0..n1 {
            let c = s.grid.coord(i, j);
            let at = |sym: Sym| match sym {
                Sym::X(1) => Some(c[0]),
                Sym::X(2) => Some(c[1]),
                _ => None,
            };
            for (a, e) in exact.iter().enumerate() {
                let v = e.eval_with(&at).map_err(|x| CliError::Input(format!("exact: {x}")))?;
                let d = (s.value(a + 1, i, j) - v).abs();
                all = all.max(d);
                if i + 1 == n0 {
                    last = last.max(d);
                }
            }
        }
    }
    Ok((all, last))
}

fn meter_check(name: &str, coarse: &MeterReport, fine: &MeterReport, tol: f64, order: f64) -> [Check; 2] {
    let level = Check::new(name, coarse.max <= tol, EvidenceKind::Numeric)
        .norm("max", coarse.max)
        .norm("l2", coarse.l2)
        .norm("max_refined", fine.max);
    let oname = format!("{name}_order");
    let ord = if coarse.max < 1e-10 {
        Check::skipped(&oname, "coarse residual at round-off level")
    } else {
        let measured = (coarse.max / fine.max).log2();
        Check::new(&oname, (measured - order).abs() <= 0.3, EvidenceKind::Numeric)
            .norm("order", measured)
            .norm("expected", order)
    };
    [level, ord]
}

/// Integrates at the model's step and at half of it, meters both sections
/// and optionally writes them as CSV.
pub fn cmd_integrate(model: &Model, opts: &IntegrateOptions) -> Result<Report, CliError> {
    let num = model
        .numeric
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("model '{}' has no [numeric] block", model.name)))?;
    if model.m > 2 {
        return Err(NumIntError::Dimension(model.m).into());
    }
    let seed = model_seed(model);
    let zt = zero_test(seed, None);
    let sys = lagrangian(model)?;
    let step = num
        .step(model.m)
        .ok_or_else(|| CliError::Input("[numeric] needs grid, dx or dt".into()))?;
    let dt = if model.m == 2 { num.dt } else { None };

    let coarse = section(&sys, num, step, dt, &zt)?;
    let fine = section(&sys, num, step / 2.0, dt.map(|t| t / 2.0), &zt)?;

    let mut r = Report::new("integrate", &model.name, seed, zt.samples);
    r.fact("scheme", coarse.scheme);
    r.fact("boundary", num.bc.name());
    r.fact("steps", format!("{:?} and {:?}", coarse.grid.step, fine.grid.step));
    let order = if model.m == 1 { 4.0 } else { 2.0 };

    let (ec, ef) = (el_residual(&sys, &coarse)?, el_residual(&sys, &fine)?);
    for c in meter_check("numint.el_residual", &ec, &ef, num.tol, order) {
        r.push(c);
    }

    let k = construct_extended_operator(&sys, &zt).map_err(|e| CliError::Input(e.to_string()))?;
    let (oc, of) = (
        operator_residual(&k, &sys, &coarse, Gauge::Matched)?,
        operator_residual(&k, &sys, &fine, Gauge::Matched)?,
    );
    let [mut level, ord] = meter_check("numint.operator_residual", &oc.g_family, &of.g_family, num.tol, order);
    level = level.norm("f_family_max", oc.f_family.max);
    if let Some(h) = &oc.h_family {
        level = level.norm("h_family_max", h.max);
    }
    r.push(level);
    r.push(ord);

    match hamiltonian(model, &sys, &zt)? {
        Ok(h) => {
            let (hc, hf) = (hdw_residual(&h, &sys, &coarse)?, hdw_residual(&h, &sys, &fine)?);
            for c in meter_check("numint.hdw_residual", &hc, &hf, num.tol, order) {
                r.push(c);
            }
        }
        Err(why) => {
            r.push(Check::skipped("numint.hdw_residual", why.clone()));
            r.push(Check::skipped("numint.hdw_residual_order", why));
        }
    }

    let drift = energy_drift(&sys, &coarse)?;
    r.push(Check::new("numint.energy_drift", drift <= num.tol, EvidenceKind::Numeric).norm("relative", drift));

    match &num.exact {
        Some(exact) => {
            let (all, last) = exact_error(&coarse, exact)?;
            r.push(
                Check::new("numint.exact_solution", all <= num.tol, EvidenceKind::Numeric)
                    .norm("max", all)
                    .norm("final", last),
            );
        }
        None => r.push(Check::skipped("numint.exact_solution", "no exact solution given")),
    }

    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (tag, s) in [("coarse", &coarse), ("fine", &fine)] {
            let path = dir.join(format!("{}_{tag}.csv", model.name));
            let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            s.write_csv(BufWriter::new(f))
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            r.fact(&format!("csv_{tag}"), path.display().to_string());
        }
    }
    Ok(r)
}
