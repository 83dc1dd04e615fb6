use std::fmt;
use std::sync::Arc;

use crate::symexpr::{Expr, Sym};

use super::chart::Chart;
use super::form::same_chart;
use super::GeomError;

/// Vector field with one coefficient per chart coordinate.
#[derive(Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<VectorField, GeomError> {
        if comps.len() != chart.dim() {
            return Err(GeomError::LengthMismatch {
                expected: chart.dim(),
                found: comps.len(),
            });
        }
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// `∂/∂q_i`.
    pub fn basis(chart: &Arc<Chart>, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    /// Field from `(coordinate, coefficient)` pairs; repeated coordinates add.
    pub fn from_pairs(chart: &Arc<Chart>, pairs: &[(Sym, Expr)]) -> Result<VectorField, GeomError> {
        let mut v = VectorField::zero(chart);
        for (s, c) in pairs {
            let i = chart.index_of(*s).ok_or(GeomError::NotInChart {
                sym: *s,
                chart: chart.id(),
            })?;
            v.comps[i] = &v.comps[i] + c;
        }
        Ok(v)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// Coefficient of `∂/∂s` (zero when `s` is not a chart coordinate).
    pub fn comp_of(&self, s: Sym) -> Expr {
        self.chart
            .index_of(s)
            .map(|i| self.comps[i].clone())
            .unwrap_or_else(Expr::zero)
    }

    /// Derivation `V(e) = Σ V^i ∂e/∂q^i`.
    pub fn apply(&self, e: &Expr) -> Expr {
        Expr::add_all(
            self.chart
                .coords()
                .iter()
                .zip(&self.comps)
                .filter(|(_, c)| !c.is_zero_structural())
                .map(|(s, c)| c * e.diff(*s)),
        )
    }

    /// `[a, b]^i = a(b^i) − b(a^i)`.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        same_chart(&self.chart, &other.chart)?;
        let comps = (0..self.comps.len())
            .map(|i| self.apply(&other.comps[i]) - other.apply(&self.comps[i]))
            .collect();
        Ok(VectorField {
            chart: self.chart.clone(),
            comps,
        })
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn map_comps(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn is_structural_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero_structural)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in self.chart.coords().iter().zip(&self.comps) {
            if c.is_zero_structural() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "∂/∂{s}")?;
            } else if c.terms().len() > 1 {
                write!(f, "({c})*∂/∂{s}")?;
            } else {
                write!(f, "{c}*∂/∂{s}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField[{}]({self})", self.chart.id())
    }
}

/// Decomposable m-vector `X_1∧…∧X_m`, one component per base direction.
#[derive(Clone, PartialEq, Debug)]
pub struct MultiVec {
    chart: Arc<Chart>,
    comps: Vec<VectorField>,
}

impl MultiVec {
    pub fn new(chart: &Arc<Chart>, comps: Vec<VectorField>) -> Result<MultiVec, GeomError> {
        if comps.len() != chart.m() {
            return Err(GeomError::LengthMismatch {
                expected: chart.m(),
                found: comps.len(),
            });
        }
        for c in &comps {
            same_chart(chart, c.chart())?;
        }
        Ok(MultiVec {
            chart: chart.clone(),
            comps,
        })
    }

    /// The coordinate frame `∂/∂x_1∧…∧∂/∂x_m`.
    pub fn coordinate_frame(chart: &Arc<Chart>) -> MultiVec {
        MultiVec {
            chart: chart.clone(),
            comps: (0..chart.m()).map(|a| VectorField::basis(chart, a)).collect(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[VectorField] {
        &self.comps
    }

    /// Component `X_α` (α is 1-based).
    pub fn component(&self, alpha: usize) -> &VectorField {
        &self.comps[alpha - 1]
    }

    /// Same m-vector class scaled by `f`: multiplies the first component.
    pub fn scaled(&self, f: &Expr) -> MultiVec {
        let mut comps = self.comps.clone();
        if let Some(c) = comps.first_mut() {
            *c = c.scale(f);
        }
        MultiVec {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn swapped(&self, a: usize, b: usize) -> MultiVec {
        let mut comps = self.comps.clone();
        comps.swap(a, b);
        MultiVec {
            chart: self.chart.clone(),
            comps,
        }
    }

    /// Whether `X_α` has `∂/∂x_β` coefficient `δ_αβ` structurally.
    pub fn is_normalized(&self) -> bool {
        self.comps.iter().enumerate().all(|(a, c)| {
            (0..self.chart.m()).all(|b| {
                let e = c.comp_of(Sym::X(b as u8 + 1));
                if a == b {
                    e.is_one()
                } else {
                    e.is_zero_structural()
                }
            })
        })
    }
}

impl fmt::Display for MultiVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, c) in self.comps.iter().enumerate() {
            if a > 0 {
                writeln!(f)?;
            }
            write!(f, "X_{} = {c}", a + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DiffForm;
    use crate::symexpr::ZeroTest;

    fn s(x: Sym) -> Expr {
        Expr::sym(x)
    }

    #[test]
    fn bracket_examples() {
        let c = Chart::bundle(1, 1);
        let dx = VectorField::basis(&c, 0);
        let dy = VectorField::basis(&c, 1);
        assert!(dx.bracket(&dy).unwrap().is_structural_zero());
        let xdy = dy.scale(&s(Sym::X(1)));
        assert_eq!(dx.bracket(&xdy).unwrap(), dy);
        let ydx = dx.scale(&s(Sym::Y(1)));
        let expect = VectorField::new(&c, vec![-s(Sym::X(1)), s(Sym::Y(1))]).unwrap();
        assert_eq!(ydx.bracket(&xdy).unwrap(), expect);
    }

    #[test]
    fn jacobi_on_polynomial_fields() {
        let c = Chart::bundle(1, 1);
        let (x, y) = (s(Sym::X(1)), s(Sym::Y(1)));
        let a = VectorField::new(&c, vec![&x * &y, y.powi(2)]).unwrap();
        let b = VectorField::new(&c, vec![x.clone().sin(), &x + &y]).unwrap();
        let cc = VectorField::new(&c, vec![Expr::int(2), x.powi(3)]).unwrap();
        let j = a
            .bracket(&b.bracket(&cc).unwrap())
            .unwrap()
            .add(&b.bracket(&cc.bracket(&a).unwrap()).unwrap())
            .unwrap()
            .add(&cc.bracket(&a.bracket(&b).unwrap()).unwrap())
            .unwrap();
        let zt = ZeroTest::default();
        assert!(zt.all_zero(j.comps()).unwrap().zero);
    }

    #[test]
    fn contraction_with_volume() {
        let c = Chart::jet(2, 1);
        let vol = DiffForm::volume(&c);
        let d1 = VectorField::basis(&c, 0);
        assert_eq!(vol.interior(&d1).unwrap(), DiffForm::volume_minus(&c, 1));
        let x = MultiVec::coordinate_frame(&c);
        assert_eq!(vol.interior_mv(&x).unwrap().as_scalar().unwrap(), Expr::one());
        let sw = x.swapped(0, 1);
        assert_eq!(vol.interior_mv(&sw).unwrap().as_scalar().unwrap(), Expr::int(-1));
        // degree below m gives zero
        assert!(DiffForm::dq(&c, 2).interior_mv(&x).unwrap().is_structural_zero());
    }
}
