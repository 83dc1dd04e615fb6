//! Field operators along the Legendre maps: construction, checks, the three
//! coefficient views, and conversion to and from Euler–Lagrange and HDW
//! multivector fields.

mod check;
mod construct;
mod convert;
mod views;

use std::sync::Arc;

use thiserror::Error;

use crate::geom::{Chart, GeomError};
use crate::hamiltonian::HamiltonianError;
use crate::lagrangian::{g_index, va_index, LagrangianError};
use crate::symexpr::{Expr, ExprError, Sym};

pub use check::{check_operator, CheckVerdict, OperatorReport};
pub use construct::{
    coefficient_system, construct_extended_operator, field_residual, h_readings, restrict_operator, solve_h, HReadings,
};
pub use convert::{
    el_from_operator, hdw_from_operator, operator_from_el, operator_from_hdw, transport_constraint, transported_g,
    ElRecovery,
};
pub use views::{as_view, AlongMapView, ViewKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldOpError {
    #[error("operator is already restricted")]
    AlreadyRestricted,
    #[error("operation needs a restricted operator")]
    NotRestricted,
    #[error("multivector is not semi-holonomic")]
    NotSemiHolonomic,
    #[error("HDW multivector does not solve the Hamiltonian equation: {0}")]
    NotHdwSolution(String),
    #[error("no verified inverse Legendre map is available")]
    NoInverse,
    #[error("coefficient system is inconsistent everywhere in the chart: {0}")]
    Inconsistent(String),
    #[error("constraint refers to the affine momentum, which a restricted operator does not see")]
    AffineMomentum,
    #[error("operator dimensions (m={m}, N={n}) do not match the system")]
    Shape { m: usize, n: usize },
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Along the extended Legendre map, into the extended multimomentum chart.
    Extended,
    /// Along the restricted Legendre map; carries no `h` table.
    Restricted,
}

/// The `f = 1` representative of an m-vector field along a Legendre map:
/// `K_α = ∂/∂x^α + f^A_α ∂/∂y^A + g^η_{Aα} ∂/∂p^η_A (+ h_α ∂/∂p)`,
/// coefficients being functions on the jet chart.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldOperator {
    pub(crate) flavor: Flavor,
    pub(crate) jet: Arc<Chart>,
    pub(crate) f: Vec<Expr>,
    pub(crate) g: Vec<Expr>,
    pub(crate) h: Option<Vec<Expr>>,
    /// Homogeneous directions of the coefficient system, over `(g, h)`.
    pub(crate) kernel: Vec<Vec<Expr>>,
}

impl FieldOperator {
    /// Builds an operator from raw tables. `f` uses the `(A, α)` layout, `g`
    /// the `(A, η, α)` layout; `h` present means extended flavor.
    pub fn from_tables(
        m: usize,
        n: usize,
        f: Vec<Expr>,
        g: Vec<Expr>,
        h: Option<Vec<Expr>>,
    ) -> Result<FieldOperator, FieldOpError> {
        if f.len() != n * m || g.len() != n * m * m || h.as_ref().is_some_and(|h| h.len() != m) {
            return Err(FieldOpError::Shape { m, n });
        }
        Ok(FieldOperator {
            flavor: if h.is_some() {
                Flavor::Extended
            } else {
                Flavor::Restricted
            },
            jet: Chart::jet(m, n),
            f,
            g,
            h,
            kernel: Vec::new(),
        })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn jet(&self) -> &Arc<Chart> {
        &self.jet
    }

    pub fn m(&self) -> usize {
        self.jet.m()
    }

    pub fn n(&self) -> usize {
        self.jet.n()
    }

    /// `f^A_α`.
    pub fn f(&self, a: usize, alpha: usize) -> &Expr {
        &self.f[va_index(self.m(), a, alpha)]
    }

    /// `g^η_{Aα}`.
    pub fn g(&self, a: usize, eta: usize, alpha: usize) -> &Expr {
        &self.g[g_index(self.m(), a, eta, alpha)]
    }

    pub fn h(&self, alpha: usize) -> Option<&Expr> {
        self.h.as_ref().map(|h| &h[alpha - 1])
    }

    pub fn f_table(&self) -> &[Expr] {
        &self.f
    }

    pub fn g_table(&self) -> &[Expr] {
        &self.g
    }

    pub fn h_table(&self) -> Option<&[Expr]> {
        self.h.as_deref()
    }

    pub fn kernel(&self) -> &[Vec<Expr>] {
        &self.kernel
    }

    /// Number of arbitrary functions in the operator family.
    pub fn freedom(&self) -> usize {
        self.kernel.len()
    }

    /// The operator always stores the `f = 1` representative.
    pub fn normalized(&self) -> bool {
        true
    }

    /// `f^A_α = v^A_α` structurally.
    pub fn is_semi_holonomic(&self) -> bool {
        let m = self.m();
        (1..=self.n()).all(|a| (1..=m).all(|al| *self.f(a, al) == Expr::sym(Sym::V(a as u8, al as u8))))
    }

    pub fn with_g(&self, g: Vec<Expr>) -> FieldOperator {
        FieldOperator { g, ..self.clone() }
    }

    pub fn with_f(&self, f: Vec<Expr>) -> FieldOperator {
        FieldOperator { f, ..self.clone() }
    }

    pub fn with_h(&self, h: Option<Vec<Expr>>) -> FieldOperator {
        FieldOperator {
            flavor: if h.is_some() {
                Flavor::Extended
            } else {
                Flavor::Restricted
            },
            h,
            ..self.clone()
        }
    }
}

pub(crate) fn v(a: usize, al: usize) -> Sym {
    Sym::V(a as u8, al as u8)
}

pub(crate) fn y(a: usize) -> Sym {
    Sym::Y(a as u8)
}

pub(crate) fn x(al: usize) -> Sym {
    Sym::X(al as u8)
}

pub(crate) fn p(a: usize, al: usize) -> Sym {
    Sym::P(a as u8, al as u8)
}

/// Holonomic contact table `f^A_α = v^A_α`.
pub(crate) fn contact_table(m: usize, n: usize) -> Vec<Expr> {
    (1..=n)
        .flat_map(|a| (1..=m).map(move |al| Expr::sym(v(a, al))))
        .collect()
}
