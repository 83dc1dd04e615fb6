//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          exponent must fold to an integer
//! primary := number | ident | func '(' args ')' | '(' sum ')'
//! ```

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::expr::{Expr, Func, Rational};
use super::symbol::{parse_sym_name, SymbolTable};
use super::ExprError;

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    table: &'a SymbolTable,
}

pub fn parse_expr(source: &str, table: &SymbolTable) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: source,
        bytes: source.as_bytes(),
        pos: 0,
        table,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.product()?);
            } else if self.eat(b'-') {
                terms.push(-self.product()?);
            } else {
                break;
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let ex = self.unary()?;
        let k = ex
            .as_num()
            .filter(|r| r.is_integer())
            .and_then(|r| r.numer().to_i64())
            .ok_or(ExprError::Syntax {
                offset: at,
                message: "exponent must be an integer constant".into(),
            })?;
        Ok(base.powi(k))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while let Some(&c) = self.bytes.get(self.pos) {
            if c.is_ascii_digit() {
                int_part.push(c as char);
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while let Some(&c) = self.bytes.get(self.pos) {
                if c.is_ascii_digit() {
                    frac_part.push(c as char);
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        let mut exp10: i64 = 0;
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            match self.bytes.get(self.pos) {
                Some(b'-') => {
                    sign = -1;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                _ => {}
            }
            let ds = self.pos;
            while self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if ds == self.pos {
                self.pos = save;
                return Err(self.syntax("malformed exponent"));
            }
            exp10 = sign
                * self.src[ds..self.pos]
                    .parse::<i64>()
                    .map_err(|_| self.syntax("exponent overflow"))?;
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().unwrap()
        };
        let shift = exp10 - frac_part.len() as i64;
        let ten = BigInt::from(10u8);
        let r = if shift >= 0 {
            Rational::from_integer(mantissa * num_traits::pow(ten, shift as usize))
        } else {
            Rational::new(mantissa, num_traits::pow(ten, (-shift) as usize))
        };
        Ok(Expr::num(r))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if let Some(f) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.syntax(&format!("expected '(' after function '{name}'")));
            }
            let mut args = vec![self.sum()?];
            while self.eat(b',') {
                args.push(self.sum()?);
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected ')'"));
            }
            if args.len() != 1 {
                return Err(ExprError::Arity {
                    offset: start,
                    function: name.to_string(),
                    found: args.len(),
                });
            }
            return Ok(Expr::func(f, args.pop().unwrap()));
        }
        match self.table.lookup(name) {
            Some(s) => Ok(Expr::sym(s)),
            None => Err(ExprError::UnknownSymbol {
                offset: start,
                name: name.to_string(),
                known_shape: parse_sym_name(name).is_some(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::Sym;

    fn t11() -> SymbolTable {
        SymbolTable::new(1, 1)
    }

    #[test]
    fn literal_lagrangian() {
        let e = parse_expr("v_1_1^2/2 - y_1^2/2", &t11()).unwrap();
        let v = Expr::sym(Sym::V(1, 1));
        let y = Expr::sym(Sym::Y(1));
        assert_eq!(e, v.powi(2) * Expr::frac(1, 2) - y.powi(2) * Expr::frac(1, 2));
    }

    #[test]
    fn self_cancellation() {
        assert!(parse_expr("y_1 - y_1", &t11()).unwrap().is_zero_structural());
    }

    #[test]
    fn product_of_functions() {
        let e = parse_expr("sin(x_1)*exp(y_1)", &t11()).unwrap();
        match e.node() {
            crate::symexpr::Node::Mul(fs) => {
                assert_eq!(fs.len(), 2);
                assert!(fs.iter().all(|f| matches!(f.node(), crate::symexpr::Node::Func(..))));
            }
            other => panic!("expected product, got {other:?}"),
        }
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_expr("0.5", &t11()).unwrap(), Expr::frac(1, 2));
        assert_eq!(parse_expr("1e-3", &t11()).unwrap(), Expr::frac(1, 1000));
        assert_eq!(parse_expr("2.5E2", &t11()).unwrap(), Expr::int(250));
    }

    #[test]
    fn precedence() {
        let tb = t11();
        assert_eq!(parse_expr("-x_1^2", &tb).unwrap(), -Expr::sym(Sym::X(1)).powi(2));
        assert_eq!(parse_expr("2^-1", &tb).unwrap(), Expr::frac(1, 2));
        assert_eq!(parse_expr(" 1 - 2 - 3 ", &tb).unwrap(), Expr::int(-4));
        assert_eq!(parse_expr("8/2/2", &tb).unwrap(), Expr::int(2));
    }

    #[test]
    fn errors_carry_offsets() {
        let tb = t11();
        match parse_expr("x_1 + * y_1", &tb) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        match parse_expr("x_1 + z_2", &tb) {
            Err(ExprError::UnknownSymbol { offset, name, .. }) => {
                assert_eq!(offset, 6);
                assert_eq!(name, "z_2");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expr("v_1_2", &tb),
            Err(ExprError::UnknownSymbol { known_shape: true, .. })
        ));
        assert!(matches!(
            parse_expr("sin(x_1, y_1)", &tb),
            Err(ExprError::Arity { found: 2, .. })
        ));
        assert!(matches!(parse_expr("x_1^y_1", &tb), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("(x_1", &tb), Err(ExprError::Syntax { .. })));
    }
}
