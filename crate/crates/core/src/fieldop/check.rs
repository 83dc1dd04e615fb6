use crate::geom::DiffForm;
use crate::lagrangian::LagrangianSystem;
use crate::symexpr::{Expr, ZeroCheck, ZeroTest};

use super::construct::{extended_multivector, field_residual, restricted_multivector, solve_h};
use super::{contact_table, FieldOpError, FieldOperator, Flavor};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckVerdict {
    pub pass: bool,
    /// `structural`, `probabilistic` or `witness`.
    pub evidence: &'static str,
    pub detail: Option<String>,
}

impl CheckVerdict {
    fn from_zero(z: &ZeroCheck, detail: impl FnOnce() -> String) -> CheckVerdict {
        CheckVerdict {
            pass: z.zero,
            evidence: z.kind(),
            detail: (!z.zero).then(detail),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorReport {
    pub normalization: CheckVerdict,
    pub semi_holonomy: CheckVerdict,
    pub field_equation: CheckVerdict,
    /// The pulled-back contraction, a 1-form on the jet chart.
    pub residual: DiffForm,
    /// For restricted operators, the `h` used to lift into the extended chart.
    pub lifted_h: Option<Vec<Expr>>,
}

impl OperatorReport {
    pub fn all_pass(&self) -> bool {
        self.normalization.pass && self.semi_holonomy.pass && self.field_equation.pass
    }
}

/// Normalization, semi-holonomy and the field equation. A restricted operator
/// is checked through its lift with the `h` that solves the equation, if any.
pub fn check_operator(
    k: &FieldOperator,
    sys: &LagrangianSystem,
    zt: &ZeroTest,
) -> Result<OperatorReport, FieldOpError> {
    let (m, n) = (k.m(), k.n());
    if (m, n) != (sys.m(), sys.n()) {
        return Err(FieldOpError::Shape { m, n });
    }

    let (mv, vol) = match &k.h {
        Some(h) => {
            let mv = extended_multivector(m, n, &k.f, &k.g, h);
            let vol = DiffForm::volume(mv.chart());
            (mv, vol)
        }
        None => {
            let mv = restricted_multivector(m, n, &k.f, &k.g);
            let vol = DiffForm::volume(mv.chart());
            (mv, vol)
        }
    };
    let norm = vol.interior_mv(&mv)?.as_scalar().unwrap_or_else(Expr::zero);
    let normalization = CheckVerdict {
        pass: norm.is_one(),
        evidence: "structural",
        detail: (!norm.is_one()).then(|| format!("i(K)dᵐx = {norm}")),
    };

    let semi_holonomy = if k.is_semi_holonomic() {
        CheckVerdict {
            pass: true,
            evidence: "structural",
            detail: None,
        }
    } else {
        let diffs: Vec<Expr> = k.f.iter().zip(contact_table(m, n)).map(|(f, v)| f - v).collect();
        let z = zt.all_zero(&diffs)?;
        CheckVerdict::from_zero(&z, || {
            let bad: Vec<String> = diffs
                .iter()
                .filter(|d| !d.is_zero_structural())
                .map(|d| d.to_string())
                .collect();
            format!("f − v = [{}]", bad.join(", "))
        })
    };

    let (h, lifted) = match (&k.flavor, &k.h) {
        (Flavor::Extended, Some(h)) => (h.clone(), None),
        _ => {
            let (h, _) = solve_h(sys, &k.f, &k.g, zt)?;
            (h.clone(), Some(h))
        }
    };
    let residual = field_residual(sys, &k.f, &k.g, &h)?;
    let z = residual.is_zero(zt)?;
    let field_equation = CheckVerdict::from_zero(&z, || format!("residual {residual}"));

    Ok(OperatorReport {
        normalization,
        semi_holonomy,
        field_equation,
        residual,
        lifted_h: lifted,
    })
}
