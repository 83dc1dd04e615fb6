//! Multisymplectic first-order field theory: symbolic kernel, forms on jet and
//! multimomentum charts, Lagrangian and Hamiltonian formalisms, field
//! operators, and reference integrators.

pub mod fieldop;
pub mod geom;
pub mod hamiltonian;
pub mod lagrangian;
pub mod linalg;
pub mod numint;
pub mod symexpr;

pub use fieldop::{FieldOpError, FieldOperator, Flavor};
pub use geom::{Chart, ChartKind, CoordMap, DiffForm, GeomError, MultiVec, VectorField};
pub use hamiltonian::{HamiltonianError, HamiltonianSystem, Provenance};
pub use lagrangian::{ElCoefficients, LagrangianError, LagrangianSystem, Regularity};
pub use numint::{Boundary, Grid, NumIntError, NumericSection};
pub use symexpr::{parse_expr, Evidence, Expr, ExprError, Sym, SymbolTable, ZeroCheck, ZeroTest};
