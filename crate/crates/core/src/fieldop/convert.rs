use crate::geom::{MultiVec, VectorField};
use crate::hamiltonian::{restricted_legendre, HamiltonianSystem};
use crate::lagrangian::{g_index, LagrangianSystem};
use crate::linalg::{solve, SymMatrix};
use crate::symexpr::{Expr, Sym, ZeroTest};

use super::construct::{coefficient_system, solve_h};
use super::{p, v, x, y, FieldOpError, FieldOperator, Flavor};

/// Chain-rule transport of second-order coefficients `G^B_{να}` to momentum
/// coefficients:
/// `g^η_{Aα} = ∂²L/∂x^α∂v^A_η + ∂²L/∂y^B∂v^A_η v^B_α + ∂²L/∂v^B_ν∂v^A_η G^B_{να}`.
pub fn transported_g(sys: &LagrangianSystem, el_g: &[Expr]) -> Vec<Expr> {
    let (m, n) = (sys.m(), sys.n());
    let mut g = vec![Expr::zero(); n * m * m];
    for a in 1..=n {
        for eta in 1..=m {
            let pa = sys.dl_dv(a, eta);
            for al in 1..=m {
                let mut t = vec![pa.diff(x(al))];
                for b in 1..=n {
                    t.push(pa.diff(y(b)) * Expr::sym(v(b, al)));
                    for nu in 1..=m {
                        t.push(sys.hess(b, nu, a, eta) * &el_g[g_index(m, b, nu, al)]);
                    }
                }
                g[g_index(m, a, eta, al)] = Expr::add_all(t);
            }
        }
    }
    g
}

/// Extended operator induced by a semi-holonomic Euler–Lagrange multivector.
pub fn operator_from_el(xl: &MultiVec, sys: &LagrangianSystem, zt: &ZeroTest) -> Result<FieldOperator, FieldOpError> {
    let el_g = sys.coefficients_of(xl).map_err(|_| FieldOpError::NotSemiHolonomic)?;
    let f = super::contact_table(sys.m(), sys.n());
    let g = transported_g(sys, &el_g);
    let (h, _) = solve_h(sys, &f, &g, zt)?;
    Ok(FieldOperator {
        flavor: Flavor::Extended,
        jet: sys.chart().clone(),
        f,
        g,
        h: Some(h),
        kernel: coefficient_system(sys, zt)?.kernel,
    })
}

/// Result of recovering second-order coefficients from an operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ElRecovery {
    /// Semi-holonomic multivector built from the particular solution.
    pub multivector: MultiVec,
    /// `G^A_{αν}` of the particular solution.
    pub g: Vec<Expr>,
    /// Dimension of the affine family of solutions.
    pub freedom: usize,
    /// Where nonzero, no `G` reproduces the operator.
    pub obstructions: Vec<Expr>,
}

/// Solves the transport relation for `G`. Unique when the Hessian is
/// regular; otherwise an affine family, valid where the obstructions vanish.
pub fn el_from_operator(k: &FieldOperator, sys: &LagrangianSystem, zt: &ZeroTest) -> Result<ElRecovery, FieldOpError> {
    if !k.is_semi_holonomic() {
        return Err(FieldOpError::NotSemiHolonomic);
    }
    let (m, n) = (sys.m(), sys.n());
    // rows (A, η, α), columns (B, ν, α') in the G layout
    let size = n * m * m;
    let a = SymMatrix::from_fn(size, size, |row, col| {
        let (ra, reta, ral) = (row / (m * m) + 1, (row / m) % m + 1, row % m + 1);
        let (cb, cnu, cal) = (col / (m * m) + 1, (col / m) % m + 1, col % m + 1);
        if ral == cal {
            sys.hess(cb, cnu, ra, reta).clone()
        } else {
            Expr::zero()
        }
    });
    let mut rhs = Vec::with_capacity(size);
    for ra in 1..=n {
        for eta in 1..=m {
            let pa = sys.dl_dv(ra, eta);
            for al in 1..=m {
                let mut t = vec![k.g(ra, eta, al).clone(), -pa.diff(x(al))];
                for b in 1..=n {
                    t.push(-(pa.diff(y(b)) * Expr::sym(v(b, al))));
                }
                rhs.push(Expr::add_all(t));
            }
        }
    }
    let sol = solve(&a, &rhs, zt)?;
    if let Some(o) = sol.obstructions.iter().find(|o| o.is_constant()) {
        return Err(FieldOpError::Inconsistent(o.to_string()));
    }
    Ok(ElRecovery {
        multivector: sys.second_order_multivector(&sol.particular),
        g: sol.particular,
        freedom: sol.kernel.len(),
        obstructions: sol.obstructions,
    })
}

/// Extended operator induced by an HDW multivector: coefficients composed with
/// the Legendre map, affine component lifted through the Hamiltonian section.
pub fn operator_from_hdw(
    xh: &MultiVec,
    sys: &LagrangianSystem,
    hs: &HamiltonianSystem,
    zt: &ZeroTest,
) -> Result<FieldOperator, FieldOpError> {
    let (m, n) = (sys.m(), sys.n());
    let c = hs.contraction_check(xh, zt)?;
    if !c.zero {
        return Err(FieldOpError::NotHdwSolution(hs.omega_h().interior_mv(xh)?.to_string()));
    }
    let fl = restricted_legendre(sys);
    let mut f = Vec::with_capacity(n * m);
    for a in 1..=n {
        for al in 1..=m {
            f.push(fl.compose_expr(&xh.component(al).comp_of(y(a))));
        }
    }
    let g = hs.free_part_of(xh).iter().map(|e| fl.compose_expr(e)).collect();
    let h = (1..=m)
        .map(|al| -fl.compose_expr(&xh.component(al).apply(hs.h())))
        .collect();
    Ok(FieldOperator {
        flavor: Flavor::Extended,
        jet: sys.chart().clone(),
        f,
        g,
        h: Some(h),
        kernel: coefficient_system(sys, zt)?.kernel,
    })
}

/// HDW multivector from an operator by substituting `v ↦ v(p)`.
pub fn hdw_from_operator(k: &FieldOperator, hs: &HamiltonianSystem) -> Result<MultiVec, FieldOpError> {
    let inv = hs.inverse().ok_or(FieldOpError::NoInverse)?;
    let (m, n) = (k.m(), k.n());
    let chart = hs.chart();
    let comps = (1..=m)
        .map(|al| {
            let mut pairs = vec![(x(al), Expr::one())];
            for a in 1..=n {
                pairs.push((y(a), inv.compose_expr(k.f(a, al))));
                for eta in 1..=m {
                    pairs.push((p(a, eta), inv.compose_expr(k.g(a, eta, al))));
                }
            }
            VectorField::from_pairs(chart, &pairs).unwrap()
        })
        .collect();
    Ok(MultiVec::new(chart, comps)?)
}

/// `i(K)(dξ∘𝓕ℒ)`: one jet-chart scalar per base direction.
pub fn transport_constraint(k: &FieldOperator, xi: &Expr, sys: &LagrangianSystem) -> Result<Vec<Expr>, FieldOpError> {
    if k.flavor != Flavor::Restricted {
        return Err(FieldOpError::NotRestricted);
    }
    if xi.contains_sym(Sym::Pa) {
        return Err(FieldOpError::AffineMomentum);
    }
    let (m, n) = (k.m(), k.n());
    let fl = restricted_legendre(sys);
    Ok((1..=m)
        .map(|al| {
            let mut t = vec![fl.compose_expr(&xi.diff(x(al)))];
            for a in 1..=n {
                t.push(k.f(a, al) * fl.compose_expr(&xi.diff(y(a))));
                for eta in 1..=m {
                    t.push(k.g(a, eta, al) * fl.compose_expr(&xi.diff(p(a, eta))));
                }
            }
            Expr::add_all(t)
        })
        .collect())
}
