//! Transversality and involutivity of decomposable m-vectors.

use nalgebra::DMatrix;

use crate::symexpr::{symbols_of, Expr, ExprError, Sym, ZeroTest};

use super::coordmap::CoordMap;
use super::form::DiffForm;
use super::multivec::{MultiVec, VectorField};
use super::GeomError;

pub const INVOLUTIVITY_POINTS: usize = 64;
pub const RANK_REL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TransverseReport {
    pub transverse: bool,
    /// `i(X)(π*ω)` as an expression.
    pub value: Expr,
    pub structural_one: bool,
    pub witness: Option<Vec<(Sym, f64)>>,
}

/// `i(X)(π*ω)` must be nowhere zero on the sample box.
pub fn check_transverse(x: &MultiVec, projection: &CoordMap, zt: &ZeroTest) -> Result<TransverseReport, GeomError> {
    let omega = DiffForm::volume(projection.target());
    let pulled = projection.pullback(&omega)?;
    let value = pulled.interior_mv(x)?.as_scalar().unwrap_or_else(Expr::zero);
    let structural_one = value.is_one();
    if let Some(r) = value.as_num() {
        return Ok(TransverseReport {
            transverse: !num_traits::Zero::is_zero(r),
            value,
            structural_one,
            witness: None,
        });
    }
    let syms: Vec<Sym> = value.free_symbols().into_iter().collect();
    for pt in zt.points(&syms, zt.samples) {
        let v = value
            .eval_raw(&|s| syms.iter().position(|t| *t == s).map(|i| pt[i]))
            .map_err(GeomError::Expr)?;
        if !v.is_finite() || v.abs() <= 1e-12 {
            return Ok(TransverseReport {
                transverse: false,
                value,
                structural_one,
                witness: Some(syms.iter().copied().zip(pt).collect()),
            });
        }
    }
    Ok(TransverseReport {
        transverse: true,
        value,
        structural_one,
        witness: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairFailure {
    pub alpha: usize,
    pub beta: usize,
    pub bracket: String,
    pub witness: Vec<(Sym, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvolutivityReport {
    pub involutive: bool,
    /// True when every bracket vanished structurally.
    pub structural: bool,
    pub failures: Vec<PairFailure>,
}

fn numeric_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_REL_TOL * max).count()
}

fn eval_field(v: &VectorField, lookup: &dyn Fn(Sym) -> Option<f64>) -> Result<Vec<f64>, ExprError> {
    v.comps().iter().map(|c| c.eval_raw(lookup)).collect()
}

/// Tests whether every `[X_α, X_β]` lies in `span(X_1…X_m)`.
pub fn check_involutive(x: &MultiVec, zt: &ZeroTest) -> Result<InvolutivityReport, GeomError> {
    let comps = x.components();
    let mut structural = true;
    let mut failures = Vec::new();
    for a in 0..comps.len() {
        for b in a + 1..comps.len() {
            let br = comps[a].bracket(&comps[b])?;
            if br.is_structural_zero() {
                continue;
            }
            structural = false;
            let exprs: Vec<&Expr> = comps.iter().flat_map(|c| c.comps()).chain(br.comps()).collect();
            let syms = symbols_of(exprs);
            let sampler = ZeroTest {
                samples: INVOLUTIVITY_POINTS,
                ..*zt
            };
            for pt in sampler.points(&syms, INVOLUTIVITY_POINTS) {
                let lookup = |s: Sym| syms.iter().position(|t| *t == s).map(|i| pt[i]);
                let mut rows: Vec<Vec<f64>> = comps
                    .iter()
                    .map(|c| eval_field(c, &lookup))
                    .collect::<Result<_, _>>()
                    .map_err(GeomError::Expr)?;
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    continue;
                }
                let base = numeric_rank(&rows);
                rows.push(eval_field(&br, &lookup).map_err(GeomError::Expr)?);
                if rows.last().unwrap().iter().any(|v| !v.is_finite()) {
                    continue;
                }
                if numeric_rank(&rows) > base {
                    failures.push(PairFailure {
                        alpha: a + 1,
                        beta: b + 1,
                        bracket: br.to_string(),
                        witness: syms.iter().copied().zip(pt.iter().copied()).collect(),
                    });
                    break;
                }
            }
        }
    }
    Ok(InvolutivityReport {
        involutive: failures.is_empty(),
        structural: structural && failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Chart;

    fn s(x: Sym) -> Expr {
        Expr::sym(x)
    }

    #[test]
    fn coordinate_frame_is_involutive() {
        let c = Chart::jet(2, 1);
        let r = check_involutive(&MultiVec::coordinate_frame(&c), &ZeroTest::default()).unwrap();
        assert!(r.involutive && r.structural);
    }

    #[test]
    fn mismatched_velocity_field_is_not_involutive() {
        let c = Chart::jet(2, 1);
        let x1 = VectorField::from_pairs(&c, &[(Sym::X(1), Expr::one()), (Sym::Y(1), s(Sym::V(1, 1)))]).unwrap();
        // X_2 moves v_1_1 so the bracket has a ∂/∂y part
        let x2 = VectorField::from_pairs(&c, &[(Sym::X(2), Expr::one()), (Sym::V(1, 1), Expr::one())]).unwrap();
        let x = MultiVec::new(&c, vec![x1, x2]).unwrap();
        let r = check_involutive(&x, &ZeroTest::default()).unwrap();
        assert!(!r.involutive);
        assert_eq!((r.failures[0].alpha, r.failures[0].beta), (1, 2));
        assert!(!r.failures[0].witness.is_empty());
    }

    #[test]
    fn single_field_is_involutive() {
        let c = Chart::jet(1, 1);
        let x1 = VectorField::from_pairs(&c, &[(Sym::X(1), Expr::one()), (Sym::Y(1), s(Sym::V(1, 1)).sin())]).unwrap();
        let x = MultiVec::new(&c, vec![x1]).unwrap();
        assert!(check_involutive(&x, &ZeroTest::default()).unwrap().involutive);
    }

    #[test]
    fn transversality() {
        let c = Chart::jet(2, 1);
        let pi = CoordMap::projection(&c, &Chart::base(2)).unwrap();
        let zt = ZeroTest::default();
        let frame = MultiVec::coordinate_frame(&c);
        let r = check_transverse(&frame, &pi, &zt).unwrap();
        assert!(r.transverse && r.structural_one);
        let scaled = frame.scaled(&(s(Sym::Y(1)).powi(2) + Expr::one()));
        assert!(check_transverse(&scaled, &pi, &zt).unwrap().transverse);
        let vertical = MultiVec::new(&c, vec![VectorField::basis(&c, 2), VectorField::basis(&c, 1)]).unwrap();
        assert!(!check_transverse(&vertical, &pi, &zt).unwrap().transverse);
    }
}
