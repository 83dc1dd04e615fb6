use crate::lagrangian::va_index;
use crate::symexpr::{Expr, Sym};

use super::{p, x, y, FieldOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViewKind {
    Multivector,
    JetField,
    Connection,
}

/// One operator seen as an m-vector field, a jet field or a connection along
/// the Legendre map. All three carry the same coefficient tables.
#[derive(Clone, Debug, PartialEq)]
pub struct AlongMapView {
    kind: ViewKind,
    op: FieldOperator,
}

pub fn as_view(k: &FieldOperator, kind: ViewKind) -> AlongMapView {
    AlongMapView { kind, op: k.clone() }
}

impl AlongMapView {
    pub fn kind(&self) -> ViewKind {
        self.kind
    }

    pub fn operator(&self) -> &FieldOperator {
        &self.op
    }

    /// `(f, g, h)` as stored.
    pub fn tables(&self) -> (Vec<Expr>, Vec<Expr>, Option<Vec<Expr>>) {
        (self.op.f.clone(), self.op.g.clone(), self.op.h.clone())
    }

    /// `∂/∂x^α + f^A_α ∂/∂y^A + g^η_{Aα} ∂/∂p^η_A (+ h_α ∂/∂p)`.
    fn direction(&self, al: usize) -> String {
        let (m, n) = (self.op.m(), self.op.n());
        let mut s = format!("∂/∂{}", x(al));
        let mut push = |c: &Expr, target: Sym| {
            if !c.is_zero_structural() {
                s.push_str(&format!(" + ({c})·∂/∂{target}"));
            }
        };
        for a in 1..=n {
            push(&self.op.f[va_index(m, a, al)], y(a));
        }
        for a in 1..=n {
            for eta in 1..=m {
                push(self.op.g(a, eta, al), p(a, eta));
            }
        }
        if let Some(h) = self.op.h(al) {
            push(h, Sym::Pa);
        }
        s
    }

    pub fn render(&self) -> String {
        let (m, n) = (self.op.m(), self.op.n());
        match self.kind {
            ViewKind::Multivector => (1..=m)
                .map(|al| format!("({})", self.direction(al)))
                .collect::<Vec<_>>()
                .join(" ∧ "),
            ViewKind::Connection => (1..=m)
                .map(|al| format!("d{} ⊗ ({})", x(al), self.direction(al)))
                .collect::<Vec<_>>()
                .join(" + "),
            ViewKind::JetField => {
                let mut parts: Vec<String> = Vec::new();
                parts.extend((1..=m).map(|al| x(al).to_string()));
                parts.extend((1..=n).map(|a| y(a).to_string()));
                for a in 1..=n {
                    for eta in 1..=m {
                        parts.push(p(a, eta).to_string());
                    }
                }
                if self.op.h.is_some() {
                    parts.push(Sym::Pa.to_string());
                }
                for a in 1..=n {
                    for al in 1..=m {
                        parts.push(self.op.f[va_index(m, a, al)].to_string());
                    }
                }
                for a in 1..=n {
                    for eta in 1..=m {
                        for al in 1..=m {
                            parts.push(self.op.g(a, eta, al).to_string());
                        }
                    }
                }
                if let Some(h) = &self.op.h {
                    parts.extend(h.iter().map(|e| e.to_string()));
                }
                format!("({})", parts.join(", "))
            }
        }
    }
}
