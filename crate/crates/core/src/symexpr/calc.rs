//! Differentiation, substitution and numeric evaluation.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::expr::{Expr, Func, Node};
use super::symbol::Sym;
use super::ExprError;

impl Expr {
    /// Exact partial derivative with respect to `s`.
    pub fn diff(&self, s: Sym) -> Expr {
        if !self.contains_sym(s) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(t) => {
                if *t == s {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.diff(s))),
            Node::Mul(fs) => Expr::add_all((0..fs.len()).filter_map(|i| {
                let d = fs[i].diff(s);
                if d.is_zero_structural() {
                    return None;
                }
                let mut parts: Vec<Expr> = Vec::with_capacity(fs.len());
                parts.push(d);
                parts.extend(fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()));
                Some(Expr::mul_all(parts))
            })),
            Node::Pow(b, k) => Expr::mul_all([Expr::int(*k), b.powi(k - 1), b.diff(s)]),
            Node::Func(f, a) => {
                let da = a.diff(s);
                let outer = match f {
                    Func::Sin => a.clone().cos(),
                    Func::Cos => -a.clone().sin(),
                    Func::Exp => self.clone(),
                    Func::Log => a.powi(-1),
                    Func::Sqrt => Expr::frac(1, 2) * self.powi(-1),
                    Func::Tanh => Expr::one() - self.powi(2),
                };
                outer * da
            }
        }
    }

    /// Simultaneous substitution followed by canonicalization.
    pub fn subs(&self, bindings: &HashMap<Sym, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.subs_with(&|s| bindings.get(&s).cloned())
    }

    pub fn subs_with(&self, f: &dyn Fn(Sym) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => f(*s).unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.subs_with(f))),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(|t| t.subs_with(f))),
            Node::Pow(b, k) => b.subs_with(f).powi(*k),
            Node::Func(func, a) => Expr::func(*func, a.subs_with(f)),
        }
    }

    pub fn subs_one(&self, s: Sym, value: &Expr) -> Expr {
        self.subs_with(&|t| (t == s).then(|| value.clone()))
    }

    /// IEEE double evaluation. `lookup` supplies symbol values.
    pub fn eval_with(&self, lookup: &dyn Fn(Sym) -> Option<f64>) -> Result<f64, ExprError> {
        let v = self.eval_raw(lookup)?;
        if !v.is_finite() {
            return Err(ExprError::NonFinite {
                subtree: self.locate_nonfinite(lookup),
            });
        }
        Ok(v)
    }

    /// Evaluation without finiteness checks; unbound symbols are errors.
    pub fn eval_raw(&self, lookup: &dyn Fn(Sym) -> Option<f64>) -> Result<f64, ExprError> {
        Ok(match self.node() {
            Node::Num(r) => r.to_f64().unwrap_or(f64::NAN),
            Node::Sym(s) => lookup(*s).ok_or(ExprError::Unbound(*s))?,
            Node::Add(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval_raw(lookup)?;
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = 1.0;
                for t in fs {
                    acc *= t.eval_raw(lookup)?;
                }
                acc
            }
            Node::Pow(b, k) => b.eval_raw(lookup)?.powi(*k as i32),
            Node::Func(f, a) => f.apply(a.eval_raw(lookup)?),
        })
    }

    /// Innermost subtree whose value is not finite.
    fn locate_nonfinite(&self, lookup: &dyn Fn(Sym) -> Option<f64>) -> Expr {
        for c in self.children() {
            if c.eval_raw(lookup).map(|v| !v.is_finite()).unwrap_or(false) {
                return c.locate_nonfinite(lookup);
            }
        }
        self.clone()
    }

    pub fn eval_at(&self, point: &HashMap<Sym, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|s| point.get(&s).copied())
    }
}

/// Stack-machine form of an expression over a fixed symbol layout, for hot
/// numeric loops.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Load(usize),
    Add(usize),
    Mul(usize),
    Pow(i32),
    Func(Func),
}

impl Compiled {
    /// Compiles `e` with symbol `layout[i]` read from slot `i`.
    pub fn new(e: &Expr, layout: &[Sym]) -> Result<Compiled, ExprError> {
        let mut ops = Vec::new();
        Self::emit(e, layout, &mut ops)?;
        Ok(Compiled { ops })
    }

    fn emit(e: &Expr, layout: &[Sym], ops: &mut Vec<Op>) -> Result<(), ExprError> {
        match e.node() {
            Node::Num(r) => ops.push(Op::Const(r.to_f64().unwrap_or(f64::NAN))),
            Node::Sym(s) => {
                let i = layout.iter().position(|t| t == s).ok_or(ExprError::Unbound(*s))?;
                ops.push(Op::Load(i));
            }
            Node::Add(ts) => {
                for t in ts {
                    Self::emit(t, layout, ops)?;
                }
                ops.push(Op::Add(ts.len()));
            }
            Node::Mul(fs) => {
                for t in fs {
                    Self::emit(t, layout, ops)?;
                }
                ops.push(Op::Mul(fs.len()));
            }
            Node::Pow(b, k) => {
                Self::emit(b, layout, ops)?;
                ops.push(Op::Pow(*k as i32));
            }
            Node::Func(f, a) => {
                Self::emit(a, layout, ops)?;
                ops.push(Op::Func(*f));
            }
        }
        Ok(())
    }

    pub fn eval(&self, slots: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(i) => stack.push(slots[*i]),
                Op::Add(n) => {
                    let at = stack.len() - n;
                    let s: f64 = stack[at..].iter().sum();
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n;
                    let p: f64 = stack[at..].iter().product();
                    stack.truncate(at);
                    stack.push(p);
                }
                Op::Pow(k) => {
                    let b = stack.pop().unwrap();
                    stack.push(b.powi(*k));
                }
                Op::Func(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
            }
        }
        stack.pop().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse_expr, SymbolTable};

    fn p(s: &str) -> Expr {
        parse_expr(s, &SymbolTable::new(2, 1)).unwrap()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(p("v_1_1^2/2").diff(Sym::V(1, 1)), p("v_1_1"));
        let kg = p("v_1_1^2/2 - v_1_2^2/2 - 3*y_1^2/2");
        assert_eq!(kg.diff(Sym::Y(1)), p("-3*y_1"));
        assert!(p("sin(x_1)").diff(Sym::Y(1)).is_zero_structural());
        assert_eq!(p("sqrt(x_1)").diff(Sym::X(1)), p("1/(2*sqrt(x_1))"));
        assert_eq!(p("tanh(y_1)").diff(Sym::Y(1)), p("1 - tanh(y_1)^2"));
        assert_eq!(p("log(y_1^2)").diff(Sym::Y(1)), p("2/y_1"));
    }

    #[test]
    fn substitution_examples() {
        // Legendre identity p - v with p = dL/dv for L = v^2/2
        let l = p("v_1_1^2/2");
        let e = p("p_1_1 - v_1_1");
        let b = HashMap::from([(Sym::P(1, 1), l.diff(Sym::V(1, 1)))]);
        assert!(e.subs(&b).is_zero_structural());
        let h = p("p_1_1^2/2");
        let b = HashMap::from([(Sym::P(1, 1), p("v_1_1"))]);
        assert_eq!(h.subs(&b), p("v_1_1^2/2"));
        // simultaneous, not sequential
        let b = HashMap::from([(Sym::X(1), p("x_2")), (Sym::X(2), p("x_1"))]);
        assert_eq!(p("x_1 - 2*x_2").subs(&b), p("x_2 - 2*x_1"));
    }

    #[test]
    fn evaluation_examples() {
        let pt = HashMap::from([(Sym::V(1, 1), 2.0), (Sym::X(1), 3.0)]);
        assert_eq!(p("v_1_1^2/2").eval_at(&pt).unwrap(), 2.0);
        assert_eq!(p("sin(x_1)").eval_at(&HashMap::from([(Sym::X(1), 0.0)])).unwrap(), 0.0);
        let v = p("exp(log(x_1))").eval_at(&pt).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!(matches!(
            p("x_1 + y_1").eval_at(&pt),
            Err(ExprError::Unbound(Sym::Y(1)))
        ));
        match p("2 + log(x_1 - 3)").eval_at(&pt) {
            Err(ExprError::NonFinite { subtree }) => assert_eq!(subtree, p("log(x_1 - 3)")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compiled_matches_tree() {
        let e = p("sin(x_1)*v_1_1^2 - 3/y_1 + exp(-x_2) + sqrt(x_1^2 + 1)");
        let layout = [Sym::X(1), Sym::X(2), Sym::Y(1), Sym::V(1, 1)];
        let c = Compiled::new(&e, &layout).unwrap();
        let vals = [0.3, -1.2, 0.7, 1.9];
        let tree = e
            .eval_with(&|s| layout.iter().position(|t| *t == s).map(|i| vals[i]))
            .unwrap();
        assert!((c.eval(&vals) - tree).abs() < 1e-14);
    }
}
