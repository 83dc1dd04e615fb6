//! Lagrangian side: Poincaré–Cartan forms, regularity, Euler–Lagrange
//! equations and the linear system for second-order multivector coefficients.

use std::sync::Arc;

use thiserror::Error;

use crate::geom::{Chart, DiffForm, GeomError, MultiVec, VectorField};
use crate::linalg::{solve, LinearSolution, SymMatrix};
use crate::symexpr::{parse_expr, Expr, ExprError, Sym, ZeroCheck, ZeroTest};

pub const RANK_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagrangianError {
    #[error("lagrangian may only depend on jet coordinates; found {0}")]
    ForeignSymbol(Sym),
    #[error("non-constant rank; almost-regular hypotheses violated (sampled ranks {ranks:?})")]
    NonConstantRank { ranks: Vec<usize> },
    #[error("coefficients do not solve the second-order system: residual {residual}")]
    NotASolution { residual: Expr },
    #[error("multivector is not semi-holonomic")]
    NotSemiHolonomic,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Index of `v_A_α` inside the flattened `(A, α)` layout (1-based inputs).
pub fn va_index(m: usize, a: usize, alpha: usize) -> usize {
    (a - 1) * m + (alpha - 1)
}

/// Index of `G^A_{αν}` inside the flattened `(A, α, ν)` layout.
pub fn g_index(m: usize, a: usize, alpha: usize, nu: usize) -> usize {
    ((a - 1) * m + (alpha - 1)) * m + (nu - 1)
}

fn v(a: usize, al: usize) -> Sym {
    Sym::V(a as u8, al as u8)
}

fn y(a: usize) -> Sym {
    Sym::Y(a as u8)
}

fn x(al: usize) -> Sym {
    Sym::X(al as u8)
}

#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    chart: Arc<Chart>,
    lagrangian: Expr,
    dl_dv: Vec<Expr>,
    hessian: SymMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Regularity {
    Regular {
        det: Expr,
        /// Constant Hessian: momenta are affine in `v` with an invertible
        /// constant matrix, so the Legendre map is globally invertible.
        hyper_regular_candidate: bool,
    },
    Singular {
        rank: usize,
    },
}

impl Regularity {
    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Regularity::Regular {
                hyper_regular_candidate: true,
                ..
            } => "regular (hyper-regular candidate)".into(),
            Regularity::Regular { .. } => "regular".into(),
            Regularity::Singular { rank } => format!("singular (rank {rank})"),
        }
    }
}

/// Solutions `G^A_{αν}` of the second-order coefficient system.
#[derive(Clone, Debug, PartialEq)]
pub struct ElCoefficients {
    pub m: usize,
    pub n: usize,
    /// Symmetric minimal-norm particular solution, layout [`g_index`].
    pub g: Vec<Expr>,
    /// Basis of the homogeneous solutions over all `N m²` unknowns.
    pub kernel: Vec<Vec<Expr>>,
    /// Right-hand sides outside the Hessian's column space; empty when the
    /// system is consistent.
    pub obstructions: Vec<Expr>,
}

impl ElCoefficients {
    pub fn get(&self, a: usize, alpha: usize, nu: usize) -> &Expr {
        &self.g[g_index(self.m, a, alpha, nu)]
    }

    pub fn freedom(&self) -> usize {
        self.kernel.len()
    }
}

impl LagrangianSystem {
    pub fn new(m: usize, n: usize, lagrangian: Expr) -> Result<LagrangianSystem, LagrangianError> {
        let chart = Chart::jet(m, n);
        if let Some(s) = lagrangian.free_symbols().into_iter().find(|s| !chart.contains(*s)) {
            return Err(LagrangianError::ForeignSymbol(s));
        }
        let mut dl_dv = Vec::with_capacity(n * m);
        for a in 1..=n {
            for al in 1..=m {
                dl_dv.push(lagrangian.diff(v(a, al)));
            }
        }
        let hessian = SymMatrix::from_fn(n * m, n * m, |i, j| {
            let (b, nu) = (j / m + 1, j % m + 1);
            dl_dv[i].diff(v(b, nu))
        });
        Ok(LagrangianSystem {
            chart,
            lagrangian,
            dl_dv,
            hessian,
        })
    }

    pub fn parse(m: usize, n: usize, source: &str) -> Result<LagrangianSystem, LagrangianError> {
        let chart = Chart::jet(m, n);
        let l = parse_expr(source, &chart.table())?;
        LagrangianSystem::new(m, n, l)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn m(&self) -> usize {
        self.chart.m()
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// `∂L/∂v^A_α`.
    pub fn dl_dv(&self, a: usize, alpha: usize) -> &Expr {
        &self.dl_dv[va_index(self.m(), a, alpha)]
    }

    pub fn dl_dy(&self, a: usize) -> Expr {
        self.lagrangian.diff(y(a))
    }

    pub fn dl_dx(&self, alpha: usize) -> Expr {
        self.lagrangian.diff(x(alpha))
    }

    /// `∂²L/∂v^A_α∂v^B_ν`.
    pub fn hess(&self, a: usize, alpha: usize, b: usize, nu: usize) -> &Expr {
        let m = self.m();
        self.hessian.get(va_index(m, a, alpha), va_index(m, b, nu))
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    /// `L − v^A_α ∂L/∂v^A_α`.
    pub fn energy_term(&self) -> Expr {
        let mut t = vec![self.lagrangian.clone()];
        for a in 1..=self.n() {
            for al in 1..=self.m() {
                t.push(-(Expr::sym(v(a, al)) * self.dl_dv(a, al)));
            }
        }
        Expr::add_all(t)
    }

    /// Structural symmetry of the Hessian.
    pub fn hessian_symmetric(&self) -> bool {
        let k = self.hessian.rows();
        (0..k).all(|i| (0..k).all(|j| (self.hessian.get(i, j) - self.hessian.get(j, i)).is_zero_structural()))
    }

    /// `(Θ_L, Ω_L)` with `Ω_L = −dΘ_L`.
    pub fn poincare_cartan(&self) -> (DiffForm, DiffForm) {
        let c = &self.chart;
        let mut theta = DiffForm::volume(c).scale(&self.energy_term());
        for a in 1..=self.n() {
            let dy = DiffForm::d_sym(c, y(a)).unwrap();
            for al in 1..=self.m() {
                let t = dy
                    .wedge(&DiffForm::volume_minus(c, al))
                    .unwrap()
                    .scale(self.dl_dv(a, al));
                theta = theta.add(&t).unwrap();
            }
        }
        let omega = theta.d().neg();
        (theta, omega)
    }

    /// The four-block coordinate expansion of `Ω_L`, written out term by term.
    pub fn omega_expansion(&self) -> DiffForm {
        let c = &self.chart;
        let (m, n) = (self.m(), self.n());
        let dy = |a| DiffForm::d_sym(c, y(a)).unwrap();
        let dv = |a, al| DiffForm::d_sym(c, v(a, al)).unwrap();
        let vol = DiffForm::volume(c);
        let mut out = DiffForm::zero(c, m + 1);
        let mut acc = |f: DiffForm| out = out.add(&f).unwrap();
        for a in 1..=n {
            for al in 1..=m {
                let dm1 = DiffForm::volume_minus(c, al);
                for b in 1..=n {
                    for nu in 1..=m {
                        let h = self.hess(b, nu, a, al);
                        acc(dv(b, nu).wedge(&dy(a)).unwrap().wedge(&dm1).unwrap().scale(&-h));
                    }
                    let hy = self.dl_dv(a, al).diff(y(b));
                    acc(dy(b).wedge(&dy(a)).unwrap().wedge(&dm1).unwrap().scale(&-hy));
                }
            }
        }
        for b in 1..=n {
            for nu in 1..=m {
                let coef = Expr::add_all(
                    (1..=n)
                        .flat_map(|a| (1..=m).map(move |al| (a, al)))
                        .map(|(a, al)| self.hess(b, nu, a, al) * Expr::sym(v(a, al))),
                );
                acc(dv(b, nu).wedge(&vol).unwrap().scale(&coef));
            }
            let mut coef = vec![-self.dl_dy(b)];
            for a in 1..=n {
                for al in 1..=m {
                    coef.push(self.dl_dv(a, al).diff(y(b)) * Expr::sym(v(a, al)));
                }
            }
            for al in 1..=m {
                coef.push(self.dl_dv(b, al).diff(x(al)));
            }
            acc(dy(b).wedge(&vol).unwrap().scale(&Expr::add_all(coef)));
        }
        out
    }

    /// Regular when the Hessian determinant is not zero; otherwise the sampled
    /// rank, which must be the same at every sample point.
    pub fn classify(&self, zt: &ZeroTest) -> Result<Regularity, LagrangianError> {
        let det = self.hessian.det();
        if !zt.is_zero(&det)?.zero {
            return Ok(Regularity::Regular {
                hyper_regular_candidate: det.is_constant() && self.hessian.is_constant(),
                det,
            });
        }
        let ranks = self.hessian.sampled_ranks(zt, RANK_SAMPLES)?;
        let first = ranks.first().copied().unwrap_or(0);
        if ranks.iter().any(|r| *r != first) {
            let mut distinct = ranks.clone();
            distinct.sort();
            distinct.dedup();
            return Err(LagrangianError::NonConstantRank { ranks: distinct });
        }
        Ok(Regularity::Singular { rank: first })
    }

    /// Total derivative `D_α` along a prolonged section: `y`, `v`, `w` stand for
    /// `φ`, `∂φ` and the symmetrized `∂²φ`.
    pub fn total_derivative(&self, e: &Expr, alpha: usize) -> Expr {
        let mut t = vec![e.diff(x(alpha))];
        for a in 1..=self.n() {
            t.push(Expr::sym(v(a, alpha)) * e.diff(y(a)));
            for nu in 1..=self.m() {
                t.push(Expr::sym(Sym::w(a as u8, alpha as u8, nu as u8)) * e.diff(v(a, nu)));
            }
        }
        Expr::add_all(t)
    }

    /// `∂L/∂y^A − Σ_α D_α(∂L/∂v^A_α)` for each field.
    pub fn euler_lagrange_equations(&self) -> Vec<Expr> {
        (1..=self.n())
            .map(|a| {
                let div = Expr::add_all((1..=self.m()).map(|al| self.total_derivative(self.dl_dv(a, al), al)));
                self.dl_dy(a) - div
            })
            .collect()
    }

    /// Right-hand side of the coefficient system for field `B`:
    /// `∂L/∂y^B − Σ_ν ∂²L/∂x^ν∂v^B_ν − Σ_{A,ν} ∂²L/∂y^A∂v^B_ν v^A_ν`.
    pub fn el_rhs(&self, b: usize) -> Expr {
        let mut t = vec![self.dl_dy(b)];
        for nu in 1..=self.m() {
            let p = self.dl_dv(b, nu);
            t.push(-p.diff(x(nu)));
            for a in 1..=self.n() {
                t.push(-(p.diff(y(a)) * Expr::sym(v(a, nu))));
            }
        }
        Expr::add_all(t)
    }

    /// Residuals `Σ Hess[(A,α),(B,ν)] G^A_{αν} − rhs_B` for a candidate `G`.
    pub fn el_residuals(&self, g: &[Expr]) -> Vec<Expr> {
        let (m, n) = (self.m(), self.n());
        (1..=n)
            .map(|b| {
                let mut t = vec![-self.el_rhs(b)];
                for a in 1..=n {
                    for al in 1..=m {
                        for nu in 1..=m {
                            t.push(self.hess(a, al, b, nu) * &g[g_index(m, a, al, nu)]);
                        }
                    }
                }
                Expr::add_all(t)
            })
            .collect()
    }

    /// The `N × N m²` coefficient matrix of the system in `G`.
    pub fn el_matrix(&self) -> SymMatrix {
        let (m, n) = (self.m(), self.n());
        SymMatrix::from_fn(n, n * m * m, |bi, col| {
            let a = col / (m * m) + 1;
            let al = (col / m) % m + 1;
            let nu = col % m + 1;
            self.hess(a, al, bi + 1, nu).clone()
        })
    }

    /// Particular solution in the symmetric gauge `G^A_{αν} = G^A_{να}` with
    /// minimal norm, plus the homogeneous solution basis.
    pub fn solve_el_coefficients(&self, zt: &ZeroTest) -> Result<ElCoefficients, LagrangianError> {
        let (m, n) = (self.m(), self.n());
        let rhs: Vec<Expr> = (1..=n).map(|b| self.el_rhs(b)).collect();
        let full = solve(&self.el_matrix(), &rhs, zt)?;

        // symmetric unknowns s_(A, α ≤ ν)
        let sym_cols: Vec<(usize, usize, usize)> = (1..=n)
            .flat_map(|a| (1..=m).flat_map(move |al| (al..=m).map(move |nu| (a, al, nu))))
            .collect();
        let bs = SymMatrix::from_fn(n, sym_cols.len(), |bi, j| {
            let (a, al, nu) = sym_cols[j];
            let b = bi + 1;
            if al == nu {
                self.hess(a, al, b, nu).clone()
            } else {
                self.hess(a, al, b, nu) + self.hess(a, nu, b, al)
            }
        });
        // weights: off-diagonal unknowns appear twice in |G|²
        let w_inv: Vec<Expr> = sym_cols
            .iter()
            .map(|(_, al, nu)| if al == nu { Expr::one() } else { Expr::frac(1, 2) })
            .collect();
        let bw = SymMatrix::from_fn(n, sym_cols.len(), |i, j| bs.get(i, j) * &w_inv[j]);
        let gram = bw.mul(&bs.transpose());
        let lam: LinearSolution = solve(&gram, &rhs, zt)?;

        let mut g = vec![Expr::zero(); n * m * m];
        if lam.consistent() || !full.consistent() {
            let s = bw.transpose().mul_vec(&lam.particular);
            for (j, (a, al, nu)) in sym_cols.iter().enumerate() {
                g[g_index(m, *a, *al, *nu)] = s[j].clone();
                g[g_index(m, *a, *nu, *al)] = s[j].clone();
            }
        } else {
            g = full.particular.clone();
        }
        Ok(ElCoefficients {
            m,
            n,
            g,
            kernel: full.kernel,
            obstructions: full.obstructions,
        })
    }

    /// `X_α = ∂/∂x^α + v^A_α ∂/∂y^A + G^A_{αν} ∂/∂v^A_ν`.
    pub fn el_multivector(&self, coeffs: &ElCoefficients, zt: &ZeroTest) -> Result<MultiVec, LagrangianError> {
        for r in self.el_residuals(&coeffs.g) {
            if !zt.is_zero(&r)?.zero {
                return Err(LagrangianError::NotASolution { residual: r });
            }
        }
        Ok(self.second_order_multivector(&coeffs.g))
    }

    /// Semi-holonomic multivector with the given `G` table (unchecked).
    pub fn second_order_multivector(&self, g: &[Expr]) -> MultiVec {
        let (m, n) = (self.m(), self.n());
        let comps = (1..=m)
            .map(|al| {
                let mut pairs = vec![(x(al), Expr::one())];
                for a in 1..=n {
                    pairs.push((y(a), Expr::sym(v(a, al))));
                    for nu in 1..=m {
                        pairs.push((v(a, nu), g[g_index(m, a, al, nu)].clone()));
                    }
                }
                VectorField::from_pairs(&self.chart, &pairs).unwrap()
            })
            .collect();
        MultiVec::new(&self.chart, comps).unwrap()
    }

    /// Reads `G^A_{αν}` back from a semi-holonomic multivector.
    pub fn coefficients_of(&self, x: &MultiVec) -> Result<Vec<Expr>, LagrangianError> {
        if !is_semi_holonomic(x) {
            return Err(LagrangianError::NotSemiHolonomic);
        }
        let (m, n) = (self.m(), self.n());
        let mut g = vec![Expr::zero(); n * m * m];
        for al in 1..=m {
            for a in 1..=n {
                for nu in 1..=m {
                    g[g_index(m, a, al, nu)] = x.component(al).comp_of(v(a, nu));
                }
            }
        }
        Ok(g)
    }

    /// `i(X)Ω_L`, checked to vanish coefficientwise.
    pub fn contraction_check(&self, x: &MultiVec, zt: &ZeroTest) -> Result<ZeroCheck, LagrangianError> {
        let (_, omega) = self.poincare_cartan();
        let c = omega.interior_mv(x)?;
        Ok(c.is_zero(zt)?)
    }
}

/// Whether the `∂/∂y^A` coefficient of `X_α` is `v^A_α` structurally.
pub fn is_semi_holonomic(x: &MultiVec) -> bool {
    let c = x.chart();
    (1..=c.m()).all(|al| (1..=c.n()).all(|a| x.component(al).comp_of(y(a)) == Expr::sym(v(a, al))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(m: usize, n: usize, l: &str) -> LagrangianSystem {
        LagrangianSystem::parse(m, n, l).unwrap()
    }

    fn p(m: usize, n: usize, e: &str) -> Expr {
        parse_expr(e, &crate::symexpr::SymbolTable::new(m, n).with_formal()).unwrap()
    }

    #[test]
    fn theta_for_free_particle() {
        let s = sys(1, 1, "v_1_1^2/2");
        let (theta, omega) = s.poincare_cartan();
        assert_eq!(theta.coeff_of(&[Sym::Y(1)]), p(1, 1, "v_1_1"));
        assert_eq!(theta.coeff_of(&[Sym::X(1)]), p(1, 1, "-v_1_1^2/2"));
        assert_eq!(omega, s.omega_expansion());
    }

    #[test]
    fn affine_lagrangian_is_degenerate() {
        let s = sys(1, 1, "v_1_1");
        let (_, omega) = s.poincare_cartan();
        assert!(omega.is_structural_zero());
        assert_eq!(
            s.classify(&ZeroTest::default()).unwrap(),
            Regularity::Singular { rank: 0 }
        );
    }

    #[test]
    fn omega_expansion_with_explicit_dependence() {
        let s = sys(
            2,
            2,
            "x_1*v_1_1*v_2_2 + sin(y_1)*v_1_2^2 - y_2*v_2_1 + x_2*y_1*y_2 + exp(x_1)*v_2_2",
        );
        let (_, omega) = s.poincare_cartan();
        let diff = omega.sub(&s.omega_expansion()).unwrap();
        assert!(diff.is_zero(&ZeroTest::default()).unwrap().zero);
    }

    #[test]
    fn regularity_examples() {
        let zt = ZeroTest::default();
        let kg = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2");
        assert_eq!(
            kg.classify(&zt).unwrap(),
            Regularity::Regular {
                det: Expr::int(-1),
                hyper_regular_candidate: true
            }
        );
        let r1 = sys(2, 1, "(v_1_1 + v_1_2)^2/2");
        assert_eq!(r1.classify(&zt).unwrap(), Regularity::Singular { rank: 1 });
        let bad = sys(1, 1, "y_1*v_1_1^3");
        assert!(matches!(
            bad.classify(&zt),
            Ok(Regularity::Regular {
                hyper_regular_candidate: false,
                ..
            })
        ));
    }

    #[test]
    fn euler_lagrange_residuals() {
        let osc = sys(1, 1, "v_1_1^2/2 - y_1^2/2");
        assert_eq!(osc.euler_lagrange_equations(), vec![p(1, 1, "-y_1 - w_1_1_1")]);
        let kg = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2 - 3*y_1^2/2");
        assert_eq!(
            kg.euler_lagrange_equations(),
            vec![p(2, 1, "-3*y_1 - w_1_1_1 + w_1_2_2")]
        );
        let free = sys(1, 1, "v_1_1^2/2");
        assert_eq!(free.euler_lagrange_equations(), vec![p(1, 1, "-w_1_1_1")]);
    }

    #[test]
    fn el_coefficients() {
        let zt = ZeroTest::default();
        let osc = sys(1, 1, "v_1_1^2/2 - y_1^2/2");
        let c = osc.solve_el_coefficients(&zt).unwrap();
        assert_eq!(c.g, vec![p(1, 1, "-y_1")]);
        assert_eq!(c.freedom(), 0);
        let x = osc.el_multivector(&c, &zt).unwrap();
        assert!(osc.contraction_check(&x, &zt).unwrap().zero);

        let kg = sys(2, 1, "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2");
        let c = kg.solve_el_coefficients(&zt).unwrap();
        assert_eq!(c.freedom(), 3);
        assert_eq!(c.get(1, 1, 1), &p(2, 1, "-y_1/2"));
        assert_eq!(c.get(1, 2, 2), &p(2, 1, "y_1/2"));
        assert!(c.get(1, 1, 2).is_zero_structural());
        let x = kg.el_multivector(&c, &zt).unwrap();
        assert!(kg.contraction_check(&x, &zt).unwrap().zero);

        let affine = sys(1, 1, "v_1_1");
        let c = affine.solve_el_coefficients(&zt).unwrap();
        assert_eq!(c.freedom(), 1);
        assert!(c.obstructions.is_empty());
    }

    #[test]
    fn non_semi_holonomic_is_rejected() {
        let s = sys(1, 1, "v_1_1^2/2");
        let c = s.chart().clone();
        let x = MultiVec::new(&c, vec![VectorField::basis(&c, 0)]).unwrap();
        assert!(!is_semi_holonomic(&x));
        assert!(s.coefficients_of(&x).is_err());
    }
}
