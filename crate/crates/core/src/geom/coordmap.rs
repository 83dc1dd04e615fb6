use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::symexpr::{Expr, Sym};

use super::chart::Chart;
use super::form::{same_chart, DiffForm};
use super::GeomError;

/// Smooth map between charts: one source-chart expression per target
/// coordinate.
#[derive(Clone, PartialEq, Debug)]
pub struct CoordMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    exprs: Vec<Expr>,
}

impl CoordMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, exprs: Vec<Expr>) -> Result<CoordMap, GeomError> {
        if exprs.len() != target.dim() {
            return Err(GeomError::LengthMismatch {
                expected: target.dim(),
                found: exprs.len(),
            });
        }
        for e in &exprs {
            if let Some(s) = e.free_symbols().into_iter().find(|s| !source.contains(*s)) {
                return Err(GeomError::NotInChart {
                    sym: s,
                    chart: source.id(),
                });
            }
        }
        Ok(CoordMap {
            source: source.clone(),
            target: target.clone(),
            exprs,
        })
    }

    /// Map that keeps every target coordinate that the source shares; the
    /// target must be a coordinate subset of the source (e.g. dropping `pa`).
    pub fn projection(source: &Arc<Chart>, target: &Arc<Chart>) -> Result<CoordMap, GeomError> {
        let exprs = target.coords().iter().map(|s| Expr::sym(*s)).collect();
        CoordMap::new(source, target, exprs)
    }

    pub fn identity(chart: &Arc<Chart>) -> CoordMap {
        CoordMap::projection(chart, chart).expect("identity")
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    /// Image of target coordinate `s`.
    pub fn image(&self, s: Sym) -> Option<&Expr> {
        self.target.index_of(s).map(|i| &self.exprs[i])
    }

    pub fn bindings(&self) -> HashMap<Sym, Expr> {
        self.target
            .coords()
            .iter()
            .copied()
            .zip(self.exprs.iter().cloned())
            .collect()
    }

    /// `e∘φ` for an expression in target coordinates. Symbols that are not
    /// target coordinates are left untouched.
    pub fn compose_expr(&self, e: &Expr) -> Expr {
        e.subs_with(&|s| self.target.index_of(s).map(|i| self.exprs[i].clone()))
    }

    /// `self∘inner`.
    pub fn after(&self, inner: &CoordMap) -> Result<CoordMap, GeomError> {
        same_chart(&self.source, &inner.target)?;
        Ok(CoordMap {
            source: inner.source.clone(),
            target: self.target.clone(),
            exprs: self.exprs.iter().map(|e| inner.compose_expr(e)).collect(),
        })
    }

    /// `φ*f = Σ (c∘φ) dφ^{i_1}∧…∧dφ^{i_k}`.
    pub fn pullback(&self, f: &DiffForm) -> Result<DiffForm, GeomError> {
        same_chart(&self.target, f.chart())?;
        let mut dphi: HashMap<usize, DiffForm> = HashMap::new();
        let mut out = DiffForm::zero(&self.source, f.degree());
        for (idx, c) in f.terms() {
            let mut acc = DiffForm::scalar(&self.source, self.compose_expr(c));
            for i in idx {
                let di = dphi
                    .entry(*i)
                    .or_insert_with(|| DiffForm::scalar(&self.source, self.exprs[*i].clone()).d());
                acc = acc.wedge(di)?;
                if acc.is_structural_zero() {
                    acc = DiffForm::zero(&self.source, f.degree());
                    break;
                }
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }
}

impl fmt::Display for CoordMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, e)) in self.target.coords().iter().zip(&self.exprs).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{s} ↦ {e}")?;
        }
        Ok(())
    }
}
