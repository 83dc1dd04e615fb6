use crate::geom::{Chart, DiffForm, MultiVec, VectorField};
use crate::hamiltonian::{extended_legendre, liouville_forms};
use crate::lagrangian::{g_index, LagrangianSystem};
use crate::linalg::{solve, LinearSolution, SymMatrix};
use crate::symexpr::{Expr, Sym, ZeroTest};

use super::convert::transported_g;
use super::{contact_table, p, v, x, y, FieldOpError, FieldOperator, Flavor};

/// `K̃` as an m-vector on the extended multimomentum chart whose coefficients
/// live on the jet chart.
pub(crate) fn extended_multivector(m: usize, n: usize, f: &[Expr], g: &[Expr], h: &[Expr]) -> MultiVec {
    let c = Chart::multimomentum(m, n);
    let comps = (1..=m)
        .map(|al| {
            let mut pairs = vec![(x(al), Expr::one()), (Sym::Pa, h[al - 1].clone())];
            for a in 1..=n {
                pairs.push((y(a), f[(a - 1) * m + al - 1].clone()));
                for eta in 1..=m {
                    pairs.push((p(a, eta), g[g_index(m, a, eta, al)].clone()));
                }
            }
            VectorField::from_pairs(&c, &pairs).unwrap()
        })
        .collect();
    MultiVec::new(&c, comps).unwrap()
}

/// `K` on the restricted multimomentum chart.
pub(crate) fn restricted_multivector(m: usize, n: usize, f: &[Expr], g: &[Expr]) -> MultiVec {
    let c = Chart::restricted_multimomentum(m, n);
    let comps = (1..=m)
        .map(|al| {
            let mut pairs = vec![(x(al), Expr::one())];
            for a in 1..=n {
                pairs.push((y(a), f[(a - 1) * m + al - 1].clone()));
                for eta in 1..=m {
                    pairs.push((p(a, eta), g[g_index(m, a, eta, al)].clone()));
                }
            }
            VectorField::from_pairs(&c, &pairs).unwrap()
        })
        .collect();
    MultiVec::new(&c, comps).unwrap()
}

/// `𝓕ℒ̃*[i(K̃)(Ω∘𝓕ℒ̃)]`, a 1-form on the jet chart.
pub fn field_residual(sys: &LagrangianSystem, f: &[Expr], g: &[Expr], h: &[Expr]) -> Result<DiffForm, FieldOpError> {
    let (m, n) = (sys.m(), sys.n());
    let fl = extended_legendre(sys);
    let (_, omega) = liouville_forms(m, n);
    let along = omega.map_coeffs(|c| fl.compose_expr(c));
    let k = extended_multivector(m, n, f, g, h);
    Ok(fl.pullback(&along.interior_mv(&k)?)?)
}

fn formal_g(m: usize, n: usize) -> Vec<Expr> {
    let mut g = vec![Expr::zero(); n * m * m];
    for a in 1..=n {
        for eta in 1..=m {
            for al in 1..=m {
                g[g_index(m, a, eta, al)] = Expr::sym(Sym::G(a as u8, eta as u8, al as u8));
            }
        }
    }
    g
}

fn formal_h(m: usize) -> Vec<Expr> {
    (1..=m).map(|al| Expr::sym(Sym::H(al as u8))).collect()
}

/// Rows of a residual 1-form, linear in `unknowns`, as `A u = b`.
fn linear_rows(residual: &DiffForm, unknowns: &[Sym]) -> (SymMatrix, Vec<Expr>) {
    let dim = residual.chart().dim();
    let rows: Vec<Expr> = (0..dim).map(|i| residual.coeff(&[i])).collect();
    let a = SymMatrix::from_fn(dim, unknowns.len(), |i, j| rows[i].diff(unknowns[j]));
    let b = rows
        .iter()
        .map(|r| -r.subs_with(&|s| unknowns.contains(&s).then(Expr::zero)))
        .collect();
    (a, b)
}

/// The semi-holonomic field-equation system with every `g^η_{Aα}` and `h_α`
/// unknown; unknowns ordered as the `g` layout followed by `h_1..h_m`.
pub fn coefficient_system(sys: &LagrangianSystem, zt: &ZeroTest) -> Result<LinearSolution, FieldOpError> {
    let (m, n) = (sys.m(), sys.n());
    let g = formal_g(m, n);
    let h = formal_h(m);
    let residual = field_residual(sys, &contact_table(m, n), &g, &h)?;
    // h first so elimination pivots on the constant h coefficients and the
    // free directions are g components (keeps the kernel polynomial)
    let unknowns: Vec<Sym> = h.iter().chain(&g).flat_map(|e| e.free_symbols()).collect();
    let (a, b) = linear_rows(&residual, &unknowns);
    let mut sol = solve(&a, &b, zt)?;
    let ng = g.len();
    let reorder = |v: &mut Vec<Expr>| v.rotate_left(m);
    reorder(&mut sol.particular);
    for k in &mut sol.kernel {
        reorder(k);
    }
    sol.pivots = sol.pivots.iter().map(|p| if *p < m { ng + p } else { p - m }).collect();
    Ok(sol)
}

/// `h` solving the field equation for given `(f, g)`; obstructions are the
/// parts of the residual no choice of `h` can remove.
pub fn solve_h(
    sys: &LagrangianSystem,
    f: &[Expr],
    g: &[Expr],
    zt: &ZeroTest,
) -> Result<(Vec<Expr>, Vec<Expr>), FieldOpError> {
    let m = sys.m();
    let h = formal_h(m);
    let residual = field_residual(sys, f, g, &h)?;
    let unknowns: Vec<Sym> = (1..=m).map(|al| Sym::H(al as u8)).collect();
    let (a, b) = linear_rows(&residual, &unknowns);
    let sol = solve(&a, &b, zt)?;
    Ok((sol.particular, sol.obstructions))
}

/// The two readings of the closed-form `h_α`: the sign factor `(−1)^η` as
/// printed, and the index-uniform sign
/// `h_α = ∂L/∂x^α + Σ_{η≠α} (g^η_{Aη} v^A_α − g^η_{Aα} v^A_η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HReadings {
    pub printed: Vec<Expr>,
    pub uniform: Vec<Expr>,
}

pub fn h_readings(sys: &LagrangianSystem, g: &[Expr]) -> HReadings {
    let (m, n) = (sys.m(), sys.n());
    let mut printed = Vec::with_capacity(m);
    let mut uniform = Vec::with_capacity(m);
    for al in 1..=m {
        let mut pt = vec![sys.dl_dx(al)];
        let mut ut = vec![sys.dl_dx(al)];
        for eta in (1..=m).filter(|e| *e != al) {
            let bracket = Expr::add_all((1..=n).map(|a| {
                &g[g_index(m, a, eta, eta)] * Expr::sym(v(a, al)) - &g[g_index(m, a, eta, al)] * Expr::sym(v(a, eta))
            }));
            let sign = if eta % 2 == 0 { Expr::int(-1) } else { Expr::one() };
            pt.push(sign * &bracket);
            ut.push(bracket);
        }
        printed.push(Expr::add_all(pt));
        uniform.push(Expr::add_all(ut));
    }
    HReadings { printed, uniform }
}

/// The `f = 1`, semi-holonomic extended operator. At `m = 1`, `g = ∂L/∂y`;
/// otherwise `g` is transported from the symmetric-gauge Euler–Lagrange
/// coefficients (or, where those are obstructed, spread diagonally as
/// `g^α_{Aα} = (∂L/∂y^A)/m`). `h` solves the field equation.
pub fn construct_extended_operator(sys: &LagrangianSystem, zt: &ZeroTest) -> Result<FieldOperator, FieldOpError> {
    let (m, n) = (sys.m(), sys.n());
    let f = contact_table(m, n);
    let g = if m == 1 {
        (1..=n).map(|a| sys.dl_dy(a)).collect()
    } else {
        let el = sys.solve_el_coefficients(zt)?;
        if el.obstructions.is_empty() {
            transported_g(sys, &el.g)
        } else {
            let mut g = vec![Expr::zero(); n * m * m];
            for a in 1..=n {
                let d = sys.dl_dy(a) / Expr::int(m as i64);
                for al in 1..=m {
                    g[g_index(m, a, al, al)] = d.clone();
                }
            }
            g
        }
    };
    let (h, _) = solve_h(sys, &f, &g, zt)?;
    let kernel = coefficient_system(sys, zt)?.kernel;
    Ok(FieldOperator {
        flavor: Flavor::Extended,
        jet: sys.chart().clone(),
        f,
        g,
        h: Some(h),
        kernel,
    })
}

/// Drops the affine-momentum component; the kernel is projected onto `g`.
pub fn restrict_operator(k: &FieldOperator) -> Result<FieldOperator, FieldOpError> {
    if k.flavor == Flavor::Restricted {
        return Err(FieldOpError::AlreadyRestricted);
    }
    let split = k.g.len();
    Ok(FieldOperator {
        flavor: Flavor::Restricted,
        h: None,
        kernel: k.kernel.iter().map(|b| b[..split].to_vec()).collect(),
        ..k.clone()
    })
}
