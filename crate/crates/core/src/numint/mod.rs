//! Reference integral sections (RK4 for m = 1, leapfrog for m = 2) and the
//! residual meters evaluated on them with fourth-order difference stencils.

mod m1;
mod m2;
mod meters;

use std::io::{self, Write};

use thiserror::Error;

use crate::fieldop::FieldOpError;
use crate::lagrangian::LagrangianError;
use crate::symexpr::ExprError;

pub use m1::integrate_m1;
pub use m2::{integrate_m2, M2Setup};
pub use meters::{
    el_residual, energy_drift, hdw_residual, operator_residual, Gauge, MeterReport, OperatorResidual, INTERIOR_MARGIN,
};

#[derive(Debug, Error)]
pub enum NumIntError {
    #[error("integrators cover m = 1 and m = 2 only (got m = {0})")]
    Dimension(usize),
    #[error("system is not regular: {0}")]
    NotRegular(String),
    #[error("system is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("mixed t–x second derivatives in the field equations are not supported by the explicit scheme")]
    MixedDerivative,
    #[error("CFL violated: dt = {dt} exceeds the limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite state at x_1 = {at}; section truncated")]
    BlowUp { at: f64, section: Box<NumericSection> },
    #[error("bad initial data: {0}")]
    InitialData(String),
    #[error("grid too small for the difference stencils")]
    GridTooSmall,
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    FieldOp(#[from] FieldOpError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// m = 1: no spatial direction.
    None,
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::None => "none",
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        }
    }
}

/// Tensor grid over `(x_1, x_2)`; at m = 1 the second axis has one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub origin: [f64; 2],
    pub step: [f64; 2],
    pub shape: [usize; 2],
    pub boundary: Boundary,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape[1] + j
    }

    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.step[0],
            self.origin[1] + j as f64 * self.step[1],
        ]
    }

    /// Cell measure used by L² norms.
    pub fn cell(&self, m: usize) -> f64 {
        if m == 1 {
            self.step[0]
        } else {
            self.step[0] * self.step[1]
        }
    }
}

/// Samples of `φ^A` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericSection {
    pub m: usize,
    pub n: usize,
    pub grid: Grid,
    /// `phi[A-1][grid.index(i, j)]`.
    pub phi: Vec<Vec<f64>>,
    pub scheme: &'static str,
}

impl NumericSection {
    /// Applies `f(x, φ) -> δφ` pointwise, e.g. to build perturbed sections.
    pub fn perturbed(&self, f: impl Fn([f64; 2], usize) -> f64) -> NumericSection {
        let mut out = self.clone();
        for (a, field) in out.phi.iter_mut().enumerate() {
            for i in 0..self.grid.shape[0] {
                for j in 0..self.grid.shape[1] {
                    field[self.grid.index(i, j)] += f(self.grid.coord(i, j), a + 1);
                }
            }
        }
        out.scheme = "perturbed";
        out
    }

    /// Value of field `a` (1-based) at grid point `(i, j)`.
    pub fn value(&self, a: usize, i: usize, j: usize) -> f64 {
        self.phi[a - 1][self.grid.index(i, j)]
    }

    /// Grid columns, then one column per field.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header: Vec<String> = (1..=self.m).map(|al| format!("x_{al}")).collect();
        header.extend((1..=self.n).map(|a| format!("y_{a}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.grid.shape[0] {
            for j in 0..self.grid.shape[1] {
                let c = self.grid.coord(i, j);
                let mut row: Vec<String> = c[..self.m].iter().map(|v| v.to_string()).collect();
                row.extend(self.phi.iter().map(|f| f[self.grid.index(i, j)].to_string()));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
