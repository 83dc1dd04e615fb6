//! Hamiltonian side: multimomentum charts, Liouville forms, Legendre maps,
//! Hamiltonian functions and sections, De Donder–Weyl equations and
//! verification of almost-regular constraints.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geom::{Chart, CoordMap, DiffForm, GeomError, MultiVec, VectorField};
use crate::lagrangian::{g_index, LagrangianError, LagrangianSystem, Regularity};
use crate::linalg::{numeric_rank, SymMatrix};
use crate::symexpr::{parse_expr, symbols_of, Expr, ExprError, Sym, ZeroCheck, ZeroTest};

pub const LOCUS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("the momenta relations are not invertible (system is {0}); supply constraints and a Hamiltonian for the almost-regular path")]
    NotInvertible(String),
    #[error(
        "momenta are not affine in the velocities with a constant matrix; an inverse Legendre map must be supplied"
    )]
    InverseRequired,
    #[error("supplied inverse Legendre map fails the round trip: {0}")]
    InverseRoundTrip(String),
    #[error("trace constraint violated for field {field}: residual {residual}")]
    TraceViolated { field: usize, residual: Expr },
    #[error("hamiltonian may only depend on restricted multimomentum coordinates; found {0}")]
    ForeignSymbol(Sym),
    #[error("could not project sample points onto the constraint locus")]
    LocusUnreachable,
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn p(a: usize, al: usize) -> Sym {
    Sym::P(a as u8, al as u8)
}

fn y(a: usize) -> Sym {
    Sym::Y(a as u8)
}

fn x(al: usize) -> Sym {
    Sym::X(al as u8)
}

/// `(Θ, Ω)` on the extended multimomentum chart: `Θ = p^α_A dy^A∧d^{m−1}x_α + pa dᵐx`.
pub fn liouville_forms(m: usize, n: usize) -> (DiffForm, DiffForm) {
    let c = Chart::multimomentum(m, n);
    let mut theta = DiffForm::volume(&c).scale(&Expr::sym(Sym::Pa));
    for a in 1..=n {
        let dy = DiffForm::d_sym(&c, y(a)).unwrap();
        for al in 1..=m {
            let t = dy
                .wedge(&DiffForm::volume_minus(&c, al))
                .unwrap()
                .scale(&Expr::sym(p(a, al)));
            theta = theta.add(&t).unwrap();
        }
    }
    let omega = theta.d().neg();
    (theta, omega)
}

/// `Ω = −dp^α_A∧dy^A∧d^{m−1}x_α − dpa∧dᵐx`, written out directly.
pub fn liouville_omega_expansion(m: usize, n: usize) -> DiffForm {
    let c = Chart::multimomentum(m, n);
    let mut out = DiffForm::d_sym(&c, Sym::Pa)
        .unwrap()
        .wedge(&DiffForm::volume(&c))
        .unwrap()
        .neg();
    for a in 1..=n {
        for al in 1..=m {
            let t = DiffForm::d_sym(&c, p(a, al))
                .unwrap()
                .wedge(&DiffForm::d_sym(&c, y(a)).unwrap())
                .unwrap()
                .wedge(&DiffForm::volume_minus(&c, al))
                .unwrap();
            out = out.sub(&t).unwrap();
        }
    }
    out
}

/// `x ↦ x, y ↦ y, p^α_A ↦ ∂L/∂v^A_α, pa ↦ L − v·∂L/∂v`.
pub fn extended_legendre(sys: &LagrangianSystem) -> CoordMap {
    let (m, n) = (sys.m(), sys.n());
    let target = Chart::multimomentum(m, n);
    let mut exprs: Vec<Expr> = (1..=m).map(|al| Expr::sym(x(al))).collect();
    exprs.extend((1..=n).map(|a| Expr::sym(y(a))));
    for a in 1..=n {
        for al in 1..=m {
            exprs.push(sys.dl_dv(a, al).clone());
        }
    }
    exprs.push(sys.energy_term());
    CoordMap::new(sys.chart(), &target, exprs).expect("legendre map is well formed")
}

/// Projection `μ` dropping the affine momentum.
pub fn mu(m: usize, n: usize) -> CoordMap {
    CoordMap::projection(&Chart::multimomentum(m, n), &Chart::restricted_multimomentum(m, n)).unwrap()
}

/// `μ∘FL̃`.
pub fn restricted_legendre(sys: &LagrangianSystem) -> CoordMap {
    mu(sys.m(), sys.n()).after(&extended_legendre(sys)).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Built by inverting the Legendre map.
    Legendre,
    /// Supplied by the user (almost-regular path); only verified on the image.
    UserSupplied,
}

#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    chart: Arc<Chart>,
    h: Expr,
    provenance: Provenance,
    /// `v ↦ v(x, y, p)` on the restricted chart, when known.
    inverse: Option<CoordMap>,
    theta_h: DiffForm,
    omega_h: DiffForm,
}

impl HamiltonianSystem {
    fn build(
        m: usize,
        n: usize,
        h: Expr,
        provenance: Provenance,
        inverse: Option<CoordMap>,
    ) -> Result<Self, HamiltonianError> {
        let chart = Chart::restricted_multimomentum(m, n);
        if let Some(s) = h.free_symbols().into_iter().find(|s| !chart.contains(*s)) {
            return Err(HamiltonianError::ForeignSymbol(s));
        }
        let mut theta_h = DiffForm::volume(&chart).scale(&-h.clone());
        for a in 1..=n {
            let dy = DiffForm::d_sym(&chart, y(a))?;
            for al in 1..=m {
                let t = dy
                    .wedge(&DiffForm::volume_minus(&chart, al))?
                    .scale(&Expr::sym(p(a, al)));
                theta_h = theta_h.add(&t)?;
            }
        }
        let omega_h = theta_h.d().neg();
        Ok(HamiltonianSystem {
            chart,
            h,
            provenance,
            inverse,
            theta_h,
            omega_h,
        })
    }

    /// A user-supplied Hamiltonian function on the restricted chart.
    pub fn user(m: usize, n: usize, h: Expr) -> Result<Self, HamiltonianError> {
        HamiltonianSystem::build(m, n, h, Provenance::UserSupplied, None)
    }

    pub fn parse_user(m: usize, n: usize, source: &str) -> Result<Self, HamiltonianError> {
        let chart = Chart::restricted_multimomentum(m, n);
        HamiltonianSystem::user(m, n, parse_expr(source, &chart.table())?)
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

    pub fn h(&self) -> &Expr {
        &self.h
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn inverse(&self) -> Option<&CoordMap> {
        self.inverse.as_ref()
    }

    pub fn theta_h(&self) -> &DiffForm {
        &self.theta_h
    }

    pub fn omega_h(&self) -> &DiffForm {
        &self.omega_h
    }

    pub fn dh_dp(&self, a: usize, alpha: usize) -> Expr {
        self.h.diff(p(a, alpha))
    }

    pub fn dh_dy(&self, a: usize) -> Expr {
        self.h.diff(y(a))
    }

    pub fn dh_dx(&self, alpha: usize) -> Expr {
        self.h.diff(x(alpha))
    }

    /// Hamiltonian section `pa ↦ −H` from the restricted to the extended chart.
    pub fn section(&self) -> CoordMap {
        let target = Chart::multimomentum(self.m(), self.n());
        let mut exprs: Vec<Expr> = self.chart.coords().iter().map(|s| Expr::sym(*s)).collect();
        exprs.push(-self.h.clone());
        CoordMap::new(&self.chart, &target, exprs).unwrap()
    }

    /// HDW residuals over formal section symbols: `y`, `p` stand for `ψ^A`,
    /// `ψ^α_A`; `u_A_α` for `∂ψ^A/∂x^α`; `q_A_α_β` for `∂ψ^α_A/∂x^β`.
    /// Returns `(velocity residuals (N·m), divergence residuals (N))`.
    pub fn hdw_equations(&self) -> (Vec<Expr>, Vec<Expr>) {
        let (m, n) = (self.m(), self.n());
        let mut vel = Vec::with_capacity(n * m);
        for a in 1..=n {
            for al in 1..=m {
                vel.push(Expr::sym(Sym::U(a as u8, al as u8)) - self.dh_dp(a, al));
            }
        }
        let div = (1..=n)
            .map(|a| {
                let q = Expr::add_all((1..=m).map(|al| Expr::sym(Sym::Q(a as u8, al as u8, al as u8))));
                q + self.dh_dy(a)
            })
            .collect();
        (vel, div)
    }

    /// Minimal-norm free part satisfying the trace relation: diagonal
    /// `G^α_{Aα} = −(∂H/∂y^A)/m`, zero elsewhere. Layout `g_index(m, A, η, α)`.
    pub fn default_free_part(&self) -> Vec<Expr> {
        let (m, n) = (self.m(), self.n());
        let mut g = vec![Expr::zero(); n * m * m];
        for a in 1..=n {
            let d = -self.dh_dy(a) / Expr::int(m as i64);
            for al in 1..=m {
                g[g_index(m, a, al, al)] = d.clone();
            }
        }
        g
    }

    /// Trace residuals `Σ_α G^α_{Aα} + ∂H/∂y^A`.
    pub fn trace_residuals(&self, g: &[Expr]) -> Vec<Expr> {
        let (m, n) = (self.m(), self.n());
        (1..=n)
            .map(|a| Expr::add_all((1..=m).map(|al| g[g_index(m, a, al, al)].clone())) + self.dh_dy(a))
            .collect()
    }

    /// `X_α = ∂/∂x^α + ∂H/∂p^α_A ∂/∂y^A + G^η_{Aα} ∂/∂p^η_A`.
    pub fn hdw_multivector(&self, g: &[Expr], zt: &ZeroTest) -> Result<MultiVec, HamiltonianError> {
        for (i, r) in self.trace_residuals(g).into_iter().enumerate() {
            if !zt.is_zero(&r)?.zero {
                return Err(HamiltonianError::TraceViolated {
                    field: i + 1,
                    residual: r,
                });
            }
        }
        Ok(self.multivector_unchecked(g))
    }

    pub fn multivector_unchecked(&self, g: &[Expr]) -> MultiVec {
        let (m, n) = (self.m(), self.n());
        let comps = (1..=m)
            .map(|al| {
                let mut pairs = vec![(x(al), Expr::one())];
                for a in 1..=n {
                    pairs.push((y(a), self.dh_dp(a, al)));
                    for eta in 1..=m {
                        pairs.push((p(a, eta), g[g_index(m, a, eta, al)].clone()));
                    }
                }
                VectorField::from_pairs(&self.chart, &pairs).unwrap()
            })
            .collect();
        MultiVec::new(&self.chart, comps).unwrap()
    }

    /// Reads `G^η_{Aα}` from an HDW multivector.
    pub fn free_part_of(&self, xh: &MultiVec) -> Vec<Expr> {
        let (m, n) = (self.m(), self.n());
        let mut g = vec![Expr::zero(); n * m * m];
        for al in 1..=m {
            for a in 1..=n {
                for eta in 1..=m {
                    g[g_index(m, a, eta, al)] = xh.component(al).comp_of(p(a, eta));
                }
            }
        }
        g
    }

    /// Dimension of the free part: unknowns minus independent trace relations.
    pub fn freedom(&self) -> usize {
        let (m, n) = (self.m(), self.n());
        let rows = SymMatrix::from_fn(n, n * m * m, |r, c| {
            let a = c / (m * m) + 1;
            let eta = (c / m) % m + 1;
            let al = c % m + 1;
            if a == r + 1 && eta == al {
                Expr::one()
            } else {
                Expr::zero()
            }
        });
        let sol = crate::linalg::solve(&rows, &vec![Expr::zero(); n], &ZeroTest::default()).unwrap();
        sol.kernel.len()
    }

    /// `i(X)Ω_h` vanishes coefficientwise.
    pub fn contraction_check(&self, xh: &MultiVec, zt: &ZeroTest) -> Result<ZeroCheck, HamiltonianError> {
        Ok(self.omega_h.interior_mv(xh)?.is_zero(zt)?)
    }
}

/// Affine inverse of the momenta relations when the Hessian is constant:
/// `v = Hess⁻¹ (p − ∂L/∂v|_{v=0})`.
pub fn automatic_inverse(sys: &LagrangianSystem, zt: &ZeroTest) -> Result<Vec<Expr>, HamiltonianError> {
    if !sys.hessian().is_constant() {
        return Err(HamiltonianError::InverseRequired);
    }
    let Some(inv) = sys.hessian().inverse(zt)? else {
        return Err(HamiltonianError::NotInvertible(sys.classify(zt)?.label()));
    };
    let (m, n) = (sys.m(), sys.n());
    let at_zero = |e: &Expr| e.subs_with(&|s| matches!(s, Sym::V(..)).then(Expr::zero));
    let shifted: Vec<Expr> = (1..=n)
        .flat_map(|a| (1..=m).map(move |al| (a, al)))
        .map(|(a, al)| Expr::sym(p(a, al)) - at_zero(sys.dl_dv(a, al)))
        .collect();
    Ok(inv.mul_vec(&shifted))
}

/// Builds the inverse map `(x, y, p) ↦ (x, y, v(p))` from velocity expressions.
pub fn inverse_map(sys: &LagrangianSystem, velocities: &[Expr]) -> Result<CoordMap, HamiltonianError> {
    let (m, n) = (sys.m(), sys.n());
    let source = Chart::restricted_multimomentum(m, n);
    let mut exprs: Vec<Expr> = (1..=m).map(|al| Expr::sym(x(al))).collect();
    exprs.extend((1..=n).map(|a| Expr::sym(y(a))));
    exprs.extend(velocities.iter().cloned());
    Ok(CoordMap::new(&source, sys.chart(), exprs)?)
}

/// Both round trips `FL∘FL⁻¹ = id` and `FL⁻¹∘FL = id`, coordinatewise.
pub fn check_inverse(
    sys: &LagrangianSystem,
    inverse: &CoordMap,
    zt: &ZeroTest,
) -> Result<Result<(), String>, HamiltonianError> {
    let fl = restricted_legendre(sys);
    let there = fl.after(inverse)?;
    for (s, e) in there.target().coords().iter().zip(there.exprs()) {
        if !zt.equal(e, &Expr::sym(*s)) {
            return Ok(Err(format!("FL∘FL⁻¹ moves {s} to {e}")));
        }
    }
    let back = inverse.after(&fl)?;
    for (s, e) in back.target().coords().iter().zip(back.exprs()) {
        if !zt.equal(e, &Expr::sym(*s)) {
            return Ok(Err(format!("FL⁻¹∘FL moves {s} to {e}")));
        }
    }
    Ok(Ok(()))
}

/// `H = p^α_A v^A_α(p) − L(x, y, v(p))` for regular systems. `velocities`
/// overrides the automatic inverse and is verified by round trip.
pub fn hamiltonian_from_legendre(
    sys: &LagrangianSystem,
    velocities: Option<&[Expr]>,
    zt: &ZeroTest,
) -> Result<HamiltonianSystem, HamiltonianError> {
    let reg = sys.classify(zt)?;
    if let Regularity::Singular { .. } = reg {
        return Err(HamiltonianError::NotInvertible(reg.label()));
    }
    let vel = match velocities {
        Some(v) => v.to_vec(),
        None => automatic_inverse(sys, zt)?,
    };
    let inverse = inverse_map(sys, &vel)?;
    if let Err(msg) = check_inverse(sys, &inverse, zt)? {
        return Err(HamiltonianError::InverseRoundTrip(msg));
    }
    let (m, n) = (sys.m(), sys.n());
    let mut t = vec![-inverse.compose_expr(sys.lagrangian())];
    for a in 1..=n {
        for al in 1..=m {
            t.push(Expr::sym(p(a, al)) * &vel[crate::lagrangian::va_index(m, a, al)]);
        }
    }
    HamiltonianSystem::build(m, n, Expr::add_all(t), Provenance::Legendre, Some(inverse))
}

/// `(p·∂H/∂p − H)∘FL`, the Lagrangian rebuilt from `H` in jet coordinates.
pub fn lagrangian_from_hamiltonian(h: &HamiltonianSystem, sys: &LagrangianSystem) -> Expr {
    let (m, n) = (h.m(), h.n());
    let mut t = vec![-h.h().clone()];
    for a in 1..=n {
        for al in 1..=m {
            t.push(Expr::sym(p(a, al)) * h.dh_dp(a, al));
        }
    }
    restricted_legendre(sys).compose_expr(&Expr::add_all(t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintEntry {
    pub constraint: Expr,
    pub pullback: Expr,
    pub check: ZeroCheck,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
    /// Numeric rank of the constraint differentials at sampled image points.
    pub differential_ranks: Vec<usize>,
}

impl ConstraintReport {
    pub fn all_vanish(&self) -> bool {
        self.entries.iter().all(|e| e.check.zero)
    }

    pub fn failing(&self) -> Vec<&Expr> {
        self.entries
            .iter()
            .filter(|e| !e.check.zero)
            .map(|e| &e.constraint)
            .collect()
    }

    pub fn independent(&self) -> bool {
        self.differential_ranks.iter().all(|r| *r == self.entries.len())
    }
}

/// Checks `FL*ξ = 0` for each constraint and samples the rank of `dξ` on the
/// image of the Legendre map.
pub fn verify_constraints(
    sys: &LagrangianSystem,
    cs: &[Expr],
    zt: &ZeroTest,
) -> Result<ConstraintReport, HamiltonianError> {
    let fl = restricted_legendre(sys);
    let mut entries = Vec::new();
    for c in cs {
        let pb = fl.compose_expr(c);
        let check = zt.is_zero(&pb)?;
        entries.push(ConstraintEntry {
            constraint: c.clone(),
            pullback: pb,
            check,
        });
    }
    let chart = fl.target();
    let jac = SymMatrix::from_fn(cs.len(), chart.dim(), |i, j| {
        fl.compose_expr(&cs[i].diff(chart.coord(j)))
    });
    let ranks = if cs.is_empty() {
        vec![]
    } else {
        jac.sampled_ranks(zt, 16)?
    };
    Ok(ConstraintReport {
        entries,
        differential_ranks: ranks,
    })
}

/// Sample points on `{ξ = 0}` in the coordinates `syms`, obtained by damped
/// Gauss–Newton steps from seeded box samples.
pub fn locus_points(
    constraints: &[Expr],
    syms: &[Sym],
    zt: &ZeroTest,
    count: usize,
) -> Result<Vec<Vec<f64>>, HamiltonianError> {
    if constraints.is_empty() {
        return Ok(zt.points(syms, count));
    }
    let jac: Vec<Vec<Expr>> = constraints
        .iter()
        .map(|c| syms.iter().map(|s| c.diff(*s)).collect())
        .collect();
    let mut out = Vec::with_capacity(count);
    for mut pt in zt.points(syms, count * 4) {
        if out.len() == count {
            break;
        }
        let mut ok = false;
        for _ in 0..50 {
            let lookup = |s: Sym| syms.iter().position(|t| *t == s).map(|i| pt[i]);
            let r: Vec<f64> = constraints
                .iter()
                .map(|c| c.eval_raw(&lookup))
                .collect::<Result<_, _>>()?;
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                break;
            }
            if norm <= LOCUS_TOL {
                ok = true;
                break;
            }
            let j = DMatrix::from_fn(constraints.len(), syms.len(), |i, k| {
                jac[i][k].eval_raw(&lookup).unwrap_or(f64::NAN)
            });
            let rhs = DMatrix::from_fn(r.len(), 1, |i, _| r[i]);
            let Ok(step) = j.svd(true, true).solve(&rhs, 1e-12) else {
                break;
            };
            let mut damp = 1.0;
            let mut improved = false;
            for _ in 0..10 {
                let trial: Vec<f64> = pt.iter().enumerate().map(|(i, v)| v - damp * step[i]).collect();
                let tl = |s: Sym| syms.iter().position(|t| *t == s).map(|i| trial[i]);
                let rn: f64 = constraints
                    .iter()
                    .map(|c| c.eval_raw(&tl).unwrap_or(f64::NAN).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if rn.is_finite() && rn < norm {
                    pt = trial;
                    improved = true;
                    break;
                }
                damp *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if ok {
            out.push(pt);
        }
    }
    if out.len() < count {
        return Err(HamiltonianError::LocusUnreachable);
    }
    Ok(out)
}

/// Zero test restricted to the constraint locus.
pub fn is_zero_on_locus(e: &Expr, constraints: &[Expr], zt: &ZeroTest) -> Result<ZeroCheck, HamiltonianError> {
    if constraints.is_empty() || e.is_zero_structural() {
        return Ok(zt.is_zero(e)?);
    }
    let mut all: Vec<&Expr> = constraints.iter().collect();
    all.push(e);
    let syms = symbols_of(all);
    let pts = locus_points(constraints, &syms, zt, zt.samples)?;
    let mut max_rel: f64 = 0.0;
    for pt in &pts {
        let lookup = |s: Sym| syms.iter().position(|t| *t == s).map(|i| pt[i]);
        let val = e.eval_raw(&lookup)?;
        let scale = e
            .terms()
            .iter()
            .map(|t| t.eval_raw(&lookup).map(f64::abs).unwrap_or(0.0))
            .sum::<f64>()
            .max(1.0);
        let rel = val.abs() / scale;
        if !rel.is_finite() || rel > 1e-8 {
            return Ok(ZeroCheck {
                zero: false,
                evidence: crate::symexpr::Evidence::Witness {
                    point: syms.iter().copied().zip(pt.iter().copied()).collect(),
                    value: val,
                },
            });
        }
        max_rel = max_rel.max(rel);
    }
    Ok(ZeroCheck {
        zero: true,
        evidence: crate::symexpr::Evidence::Probabilistic {
            samples: pts.len(),
            max_rel,
        },
    })
}

/// Numeric rank of a Jacobian helper for reports.
pub fn rank_of(m: &DMatrix<f64>) -> usize {
    numeric_rank(m, 1e-9)
}
