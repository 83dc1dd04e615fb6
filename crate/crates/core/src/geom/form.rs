use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::symexpr::{Expr, ExprError, ZeroCheck, ZeroTest};

use super::chart::Chart;
use super::multivec::{MultiVec, VectorField};
use super::GeomError;

/// Exterior form with symbolic coefficients, keyed by strictly increasing
/// coordinate multi-indices. Coefficients may mention symbols outside the
/// chart (forms along a map); `d` only differentiates along chart coordinates.
#[derive(Clone, PartialEq)]
pub struct DiffForm {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `idx` in place, returning the permutation sign, or `None` on a repeat.
fn normalize(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<(), GeomError> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(GeomError::ChartMismatch {
            left: a.id(),
            right: b.id(),
        })
    }
}

impl DiffForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> DiffForm {
        DiffForm {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(chart: &Arc<Chart>, e: Expr) -> DiffForm {
        let mut f = DiffForm::zero(chart, 0);
        f.add_term(&[], e);
        f
    }

    /// `d q_i` for the `i`-th chart coordinate.
    pub fn dq(chart: &Arc<Chart>, i: usize) -> DiffForm {
        let mut f = DiffForm::zero(chart, 1);
        f.add_term(&[i], Expr::one());
        f
    }

    /// `d s` for a coordinate symbol of the chart.
    pub fn d_sym(chart: &Arc<Chart>, s: crate::symexpr::Sym) -> Result<DiffForm, GeomError> {
        let i = chart.index_of(s).ok_or(GeomError::NotInChart {
            sym: s,
            chart: chart.id(),
        })?;
        Ok(DiffForm::dq(chart, i))
    }

    /// Single term `c dq_{idx[0]}∧…`, with `idx` in any order.
    pub fn monomial(chart: &Arc<Chart>, idx: &[usize], c: Expr) -> DiffForm {
        let mut f = DiffForm::zero(chart, idx.len());
        f.add_term(idx, c);
        f
    }

    /// `dx_1∧…∧dx_m`.
    pub fn volume(chart: &Arc<Chart>) -> DiffForm {
        let idx: Vec<usize> = (0..chart.m()).collect();
        DiffForm::monomial(chart, &idx, Expr::one())
    }

    /// `d^{m-1}x_α := i(∂/∂x_α) d^m x` (α is 1-based).
    pub fn volume_minus(chart: &Arc<Chart>, alpha: usize) -> DiffForm {
        let e = VectorField::basis(chart, alpha - 1);
        DiffForm::volume(chart).interior(&e).expect("same chart")
    }

    /// Adds `c dq_idx` (any order; repeated indices contribute nothing).
    pub fn add_term(&mut self, idx: &[usize], c: Expr) {
        debug_assert_eq!(idx.len(), self.degree);
        if c.is_zero_structural() {
            return;
        }
        let mut key = idx.to_vec();
        let Some(sign) = normalize(&mut key) else { return };
        let c = if sign < 0 { -c } else { c };
        let slot = self.terms.entry(key.clone()).or_insert_with(Expr::zero);
        *slot = &*slot + c;
        if slot.is_zero_structural() {
            self.terms.remove(&key);
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    /// Coefficient of `dq_idx` with `idx` in any order (sign-adjusted).
    pub fn coeff(&self, idx: &[usize]) -> Expr {
        let mut key = idx.to_vec();
        match normalize(&mut key) {
            None => Expr::zero(),
            Some(s) => {
                let c = self.terms.get(&key).cloned().unwrap_or_else(Expr::zero);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Coefficient addressed by coordinate symbols.
    pub fn coeff_of(&self, syms: &[crate::symexpr::Sym]) -> Expr {
        let idx: Option<Vec<usize>> = syms.iter().map(|s| self.chart.index_of(*s)).collect();
        idx.map(|i| self.coeff(&i)).unwrap_or_else(Expr::zero)
    }

    /// The coefficient of a 0-form.
    pub fn as_scalar(&self) -> Option<Expr> {
        (self.degree == 0).then(|| self.coeff(&[]))
    }

    pub fn is_structural_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> DiffForm {
        let mut out = DiffForm::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k, f(c));
        }
        out
    }

    pub fn scale(&self, c: &Expr) -> DiffForm {
        self.map_coeffs(|t| t * c)
    }

    pub fn neg(&self) -> DiffForm {
        self.map_coeffs(|t| -t)
    }

    pub fn add(&self, other: &DiffForm) -> Result<DiffForm, GeomError> {
        same_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(GeomError::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DiffForm) -> Result<DiffForm, GeomError> {
        self.add(&other.neg())
    }

    pub fn wedge(&self, other: &DiffForm) -> Result<DiffForm, GeomError> {
        same_chart(&self.chart, &other.chart)?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Err(GeomError::DegreeTooLarge {
                degree,
                dim: self.chart.dim(),
            });
        }
        let mut out = DiffForm::zero(&self.chart, degree);
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let mut idx = i.clone();
                idx.extend_from_slice(j);
                out.add_term(&idx, a * b);
            }
        }
        Ok(out)
    }

    /// Exterior derivative along the chart coordinates. A top-degree form maps
    /// to the empty form of one degree higher.
    pub fn d(&self) -> DiffForm {
        let mut out = DiffForm::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for (j, s) in self.chart.coords().iter().enumerate() {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.diff(*s);
                if dc.is_zero_structural() {
                    continue;
                }
                let mut k = Vec::with_capacity(idx.len() + 1);
                k.push(j);
                k.extend_from_slice(idx);
                out.add_term(&k, dc);
            }
        }
        out
    }

    /// Single contraction `i(V)`.
    pub fn interior(&self, v: &VectorField) -> Result<DiffForm, GeomError> {
        same_chart(&self.chart, v.chart())?;
        if self.degree == 0 {
            return Ok(DiffForm::zero(&self.chart, 0));
        }
        let mut out = DiffForm::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (r, &i) in idx.iter().enumerate() {
                let vi = v.comp(i);
                if vi.is_zero_structural() {
                    continue;
                }
                let rest: Vec<usize> = idx
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != r)
                    .map(|(_, j)| *j)
                    .collect();
                let term = vi * c;
                out.add_term(&rest, if r % 2 == 1 { -term } else { term });
            }
        }
        Ok(out)
    }

    /// `i(X) = i(X_m)∘…∘i(X_1)`; forms of degree below `m` give the zero form.
    pub fn interior_mv(&self, x: &MultiVec) -> Result<DiffForm, GeomError> {
        same_chart(&self.chart, x.chart())?;
        let m = x.components().len();
        if self.degree < m {
            return Ok(DiffForm::zero(&self.chart, 0));
        }
        let mut acc = self.clone();
        for comp in x.components() {
            acc = acc.interior(comp)?;
        }
        Ok(acc)
    }

    pub fn is_zero(&self, zt: &ZeroTest) -> Result<ZeroCheck, ExprError> {
        zt.all_zero(self.terms.values())
    }

    fn write_basis(&self, idx: &[usize], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, i) in idx.iter().enumerate() {
            if r > 0 {
                write!(f, "∧")?;
            }
            write!(f, "d{}", self.chart.coord(*i))?;
        }
        Ok(())
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            if idx.is_empty() {
                write!(f, "{c}")?;
                continue;
            }
            if !c.is_one() {
                if c.terms().len() > 1 {
                    write!(f, "({c})*")?;
                } else {
                    write!(f, "{c}*")?;
                }
            }
            self.write_basis(idx, f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm[{}; deg {}]({self})", self.chart.id(), self.degree)
    }
}
